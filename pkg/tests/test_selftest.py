from rotvec.cli import run
from rotvec.selftest import CHECKS, run_all


def test_selftest_all_pass():
    results = run_all()
    assert len(results) == len(CHECKS)
    failed = [(n, d) for n, ok, d in results if not ok]
    assert not failed


def test_selftest_command(capsys):
    assert run(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1] == f"{len(CHECKS)}/{len(CHECKS)} passed"
