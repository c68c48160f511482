import numpy as np
import pytest
from hypothesis import settings

from rotvec.field import ModelSpec, make_model

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

OMEGA = np.array([0.5, 2.0])


def model(name, **params):
    return make_model(ModelSpec(name, params))


@pytest.fixture
def constant_field():
    return model("constant", omega=list(OMEGA))


@pytest.fixture
def circle_field():
    return model("circle", c=2.0, eps=1.0)


SHIPPED = {
    "constant": dict(omega=[0.5, 2.0]),
    "circle": dict(c=2.0, eps=0.1),
    "torus": dict(c=[2.0, 3.0], eps=[0.1, 0.1]),
    "winfree": dict(omega=[1.0, 1.3], kappa=0.2),
}


@pytest.fixture(params=sorted(SHIPPED))
def shipped(request):
    return request.param, model(request.param, **SHIPPED[request.param])


ACCEPTANCE = []


def record(number, title, passed, detail=""):
    """Collect one verdict line per acceptance criterion for the terminal summary."""
    ACCEPTANCE.append(f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}"
                      + (f"  [{detail}]" if detail else ""))
    print(ACCEPTANCE[-1])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
