"""Command-line entry point: ``rotvec <command> [options]``.

Options can also come from a flat ``key = value`` config file (``--config``);
flags given on the command line win.  Exit status: 0 success, 1 computation
failure, 2 configuration error.
"""
import argparse
import json
import sys
import time
import warnings

import numpy as np

from . import __version__
from .field import MODEL_NAMES, ModelError, ModelSpec, make_model
from .flow import HorizonError, IntegrationError, fmt

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


# --- value parsing -----------------------------------------------------------

def float_list(text):
    """``"0.5,2"``, ``"[0.5, 2]"`` or a single number."""
    text = str(text).strip()
    try:
        if text.startswith("["):
            vals = json.loads(text)
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
        arr = np.asarray(vals, dtype=float).ravel()
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise argparse.ArgumentTypeError(f"not a list of finite numbers: {text!r}")
    return arr


def int_list(text):
    arr = float_list(text)
    if np.any(arr != np.round(arr)):
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    return [int(v) for v in arr]


def axis(text):
    """Grid axis: ``lo:hi:num`` (inclusive linspace), a JSON list, or a JSON object
    ``{"start": lo, "stop": hi, "num": n}``."""
    text = str(text).strip()
    try:
        if text.startswith("{"):
            obj = json.loads(text)
            return np.linspace(float(obj["start"]), float(obj["stop"]), int(obj["num"]))
        if text.startswith("["):
            return np.asarray(json.loads(text), dtype=float).ravel()
        lo, hi, num = text.split(":")
        return np.linspace(float(lo), float(hi), int(num))
    except (ValueError, KeyError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"not a grid axis: {text!r}") from exc


def positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


# --- parser ------------------------------------------------------------------

def _model_options(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=MODEL_NAMES + ("torus", "winfree"),
                   help="shipped model name")
    g.add_argument("--omega", type=float_list, help="frequencies (constant, winfree-type)")
    g.add_argument("--c", type=float_list, help="mean speed(s) (circle, torus-product)")
    g.add_argument("--eps", type=float_list, help="sine amplitude(s) (circle, torus-product)")
    g.add_argument("--kappa", type=float, help="coupling (winfree-type)")
    g.add_argument("--x0", type=float_list, help="initial point (default 0)")


def _common(p):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--output", help="write the main table (CSV) here")
    p.add_argument("--json", dest="json_out", help="write a JSON report here")
    p.add_argument("--threads", type=int, help="worker cap (default: ROTVEC_THREADS or 1)")
    p.add_argument("--seed", type=int, help="seed for randomized checks")


def build_parser():
    parser = argparse.ArgumentParser(prog="rotvec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("simulate", help="integrate the flow and write the trajectory")
    _common(p)
    _model_options(p)
    p.add_argument("--horizon", type=positive, default=100.0)
    p.add_argument("--backward", type=float, default=0.0, help="also integrate down to -BACKWARD")
    p.add_argument("--tol", type=positive, default=1e-10)

    p = sub.add_parser("rotvec", help="empirical rotation vector with a boundedness check")
    _common(p)
    _model_options(p)
    p.add_argument("--horizon", type=positive, default=1e4)
    p.add_argument("--tol", type=positive, default=1e-10)

    p = sub.add_parser("solve", help="rotation vector from the fixed-point formula")
    _common(p)
    _model_options(p)
    p.add_argument("--gamma", type=positive, help="normalization scale (default: automatic)")
    p.add_argument("--norm-c", type=float, help="normalization constant (default 2.5 + gamma |f|)")
    p.add_argument("--L", dest="cone", type=float, help="cone size L")
    p.add_argument("--k-schedule", type=int_list, help="increasing horizons k")
    p.add_argument("--span", type=positive, default=None, help="largest k in field time units")
    p.add_argument("--tol", type=positive, default=1e-11)
    p.add_argument("--beta", type=positive, default=0.5)
    p.add_argument("--alpha", type=positive, default=0.5, help="damping in (0, 1]")
    p.add_argument("--threshold", type=positive, default=0.1, help="bound on gamma |df|")
    p.add_argument("--certificate-horizon", type=float, default=1000.0)

    p = sub.add_parser("psi", help="Psi_i curves and residuals at a given rho")
    _common(p)
    _model_options(p)
    p.add_argument("--rho", type=float_list, required=False)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--horizon", type=positive, default=100.0)
    p.add_argument("--method", choices=("quadrature", "ode"), default="quadrature")
    p.add_argument("--step", type=positive, default=1e-3, help="quadrature step")
    p.add_argument("--samples", type=int, default=201, help="ODE output samples")
    p.add_argument("--residual", action="store_true", help="also report the residual limits")

    p = sub.add_parser("riccati", help="hypotheses and boundedness of a Riccati system")
    _common(p)
    p.add_argument("--system", choices=("random", "constant", "zero"), default="random")
    p.add_argument("--q", type=int, default=2, help="dimension (random, zero)")
    p.add_argument("--gamma", type=positive, default=0.01, help="coupling bound (random)")
    p.add_argument("--a", type=float_list, help="constant source (constant)")
    p.add_argument("--b", type=float_list, help="constant matrix, row-major (constant)")
    p.add_argument("--h", type=float_list, help="constant tensor, row-major (constant)")
    p.add_argument("--horizon", type=positive, default=200.0)
    p.add_argument("--tol", type=positive, default=1e-10)

    p = sub.add_parser("leader", help="leader conditions and distance for an affine curve")
    _common(p)
    _model_options(p)
    p.add_argument("--rate", type=float_list, help="slope of mu (default: solver rho)")
    p.add_argument("--horizon", type=positive, default=1e3)
    p.add_argument("--tol", type=positive, default=1e-10)

    p = sub.add_parser("tongue", help="locking scan over a two-parameter family")
    _common(p)
    p.add_argument("--family", default="arnold",
                   help='"arnold" or JSON {"model": ..., "params": {...}} using param1/param2')
    p.add_argument("--axis1", type=axis, default=axis("-1:1:101"))
    p.add_argument("--axis2", type=axis, default=axis("0:1:51"))
    p.add_argument("--horizon", type=positive, default=1000.0)
    p.add_argument("--tol", type=positive, default=1e-8)
    p.add_argument("--lock-tol", type=positive, default=1e-3)
    p.add_argument("--targets", type=float_list, help="plateau values (default: p/q, q <= 8)")
    p.add_argument("--x0", type=float_list)

    p = sub.add_parser("selftest", help="run the built-in exact examples")
    _common(p)
    return parser


# --- config files ------------------------------------------------------------

def read_config(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _actions(parser, command):
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    out = {}
    for a in sub.choices[command]._actions:
        if a.dest == "help":
            continue
        out[a.dest] = a
        for opt in a.option_strings:  # flag spellings too: L for --L, json for --json
            out[opt.lstrip("-").replace("-", "_")] = a
    return out


def merge_config(parser, args, argv):
    """Fill options absent from ``argv`` with values from ``--config``."""
    if not getattr(args, "config", None):
        return args
    actions = _actions(parser, args.command)
    given = {tok.split("=", 1)[0] for tok in argv if tok.startswith("--")}
    for key, text in read_config(args.config).items():
        action = actions.get(key)
        if action is None or action.dest == "config":
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        if any(opt in given for opt in action.option_strings):
            continue
        if isinstance(action, argparse._StoreTrueAction):
            value = text.lower() in ("1", "true", "yes", "on")
        else:
            try:
                value = action.type(text) if action.type else text
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
            if action.choices is not None and value not in action.choices:
                raise ConfigError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        setattr(args, action.dest, value)
    return args


# --- helpers -----------------------------------------------------------------

def model_from_args(args):
    if not args.model:
        raise ConfigError("--model is required")
    params = {}
    for key in ("omega", "c", "eps", "kappa"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v.tolist() if isinstance(v, np.ndarray) else v
    return make_model(ModelSpec(args.model, params))


def x0_from_args(args, dim):
    if getattr(args, "x0", None) is None:
        return np.zeros(dim)
    if args.x0.size != dim:
        raise ConfigError(f"--x0 has {args.x0.size} entries, the model has dimension {dim}")
    return args.x0


def vec_text(v):
    v = np.atleast_1d(v)
    return "(" + ", ".join(fmt(x) for x in v) + ")"


def write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_json(path, obj):
    if path:
        write_text(path, json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def say(text=""):
    print(text, flush=True)


# --- commands ------------------------------------------------------------------

def cmd_simulate(args):
    from .flow import integrate

    field = model_from_args(args)
    x0 = x0_from_args(args, field.dim)
    traj = integrate(field, x0, (-abs(args.backward), args.horizon), args.tol)
    xT = traj.state_at([args.horizon])[0]
    say(f"steps = {traj.steps}, rejected = {traj.rejected}")
    say(f"x({fmt(args.horizon)}) = {vec_text(xT)}")
    if args.output:
        traj.to_csv(args.output)
    write_json(args.json_out, {"steps": traj.steps, "rejected": traj.rejected,
                               "x_end": xT, "horizon": args.horizon})
    return EXIT_OK


def cmd_rotvec(args):
    from .flow import boundedness_test, integrate, rotation_estimate

    field = model_from_args(args)
    x0 = x0_from_args(args, field.dim)
    traj = integrate(field, x0, (0.0, args.horizon), args.tol)
    est = rotation_estimate(traj)
    verdict = boundedness_test(traj, est.rho)
    say(f"rho = {vec_text(est.rho)}")
    say(f"sup |x - x0 - rho t| = {fmt(verdict.sup)}, window slope = {fmt(verdict.slope)} "
        f"({'PASS' if verdict.passed else 'FAIL'})")
    if args.output:
        rows = ["window_lo,window_hi,sup"]
        rows += [f"{fmt(lo)},{fmt(hi)},{fmt(s)}" for (lo, hi), s in zip(est.windows, est.window_sups)]
        write_text(args.output, "\n".join(rows) + "\n")
    write_json(args.json_out, {"rho": est.rho, "horizon": args.horizon,
                               "boundedness": verdict.as_dict()})
    return EXIT_OK


def cmd_solve(args):
    from . import solver

    field = model_from_args(args)
    x0 = x0_from_args(args, field.dim)
    kwargs = dict(x0=x0, c=args.norm_c, gamma=args.gamma, L=args.cone, k_schedule=args.k_schedule,
                  tol=args.tol, beta=args.beta, alpha=args.alpha, threshold=args.threshold,
                  certificate_horizon=args.certificate_horizon)
    if args.span is not None:
        kwargs["span"] = args.span
    if args.alpha > 1.0:
        raise ConfigError("--alpha must lie in (0, 1]")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = solver.solve_rotation_formula(field, **kwargs)
    say(f"rho = {vec_text(res.rho)}")
    g = res.normalized
    say(f"gamma = {fmt(g.gamma)}, c = {fmt(g.c)}, L = {fmt(res.fixed_point.L)}, "
        f"iterations = {res.fixed_point.iterations}")
    if res.certificate is not None:
        say(f"certificate limit = {vec_text(res.certificate.limit)} "
            f"({'ok' if res.certified else 'above tolerance'})")
    for msg in res.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    if args.output:
        res.diagnostics_csv(args.output)
    write_json(args.json_out, res.as_dict())
    return EXIT_OK


def cmd_psi(args):
    from . import psi

    field = model_from_args(args)
    x0 = x0_from_args(args, field.dim)
    if args.rho is None:
        raise ConfigError("--rho is required")
    if args.rho.size != field.dim:
        raise ConfigError(f"--rho has {args.rho.size} entries, the model has dimension {field.dim}")
    if not 0 <= args.index <= field.dim:
        raise ConfigError(f"--index must lie in 0..{field.dim}")
    if args.method == "quadrature":
        curve = psi.psi_quadrature_curve(field, x0, args.rho, args.index, args.horizon, args.step)
        if curve.t.size > 4 * args.samples:
            keep = np.unique(np.linspace(0, curve.t.size - 1, args.samples).round().astype(int))
            curve = psi.PsiCurve(curve.index, curve.rho, curve.x0, curve.t[keep],
                                 curve.values[keep], curve.method, curve.form)
    else:
        times = np.linspace(0.0, args.horizon, args.samples)
        curve = psi.psi_ode(field, x0, args.rho, args.index, times)
    say(f"Psi_{args.index}({fmt(args.horizon)}) = {fmt(curve.values[-1])}")
    report = {"index": args.index, "horizon": args.horizon, "value": float(curve.values[-1]),
              "method": args.method}
    if args.residual:
        res = psi.residual(field, x0, args.rho, max(args.horizon, 100.0))
        say(f"residual limit = {vec_text(res.limit)}")
        report["residual_limit"] = res.limit
    if args.output:
        curve.to_csv(args.output)
    write_json(args.json_out, report)
    return EXIT_OK


def cmd_riccati(args):
    from . import riccati

    if args.system == "random":
        seed = 0 if args.seed is None else args.seed
        system = riccati.random_trig_system(args.q, args.gamma, seed)
    elif args.system == "zero":
        system = riccati.RiccatiSystem.zero(args.q)
    else:
        if args.a is None:
            raise ConfigError("--a is required for a constant system")
        q = args.a.size
        b = np.zeros(q * q) if args.b is None else args.b
        h = np.zeros(q ** 3) if args.h is None else args.h
        if b.size != q * q or h.size != q ** 3:
            raise ConfigError(f"--b needs {q * q} and --h needs {q ** 3} entries")
        system = riccati.RiccatiSystem.constant(args.a, b, h)
    hyp = riccati.hypothesis_check(system, args.horizon, tol=args.tol)
    bound = riccati.boundedness_verdict(system, args.horizon, tol=args.tol)
    say(f"H1 {'PASS' if hyp.h1_passed else 'FAIL'} (|int sigma(B)| slope "
        f"{fmt(hyp.part1.slope)}), tau = {vec_text(hyp.tau)}")
    say(f"H2 {'PASS' if hyp.h2_passed else 'FAIL'}")
    state = "blow-up" if bound.blew_up else f"sup |y| = {fmt(bound.sup)}"
    say(f"boundedness {'PASS' if bound.passed else 'FAIL'} ({state})")
    if args.output:
        riccati.riccati_simulate(system, (-args.horizon, args.horizon), args.tol).to_csv(args.output)
    write_json(args.json_out, {"hypotheses": hyp.as_dict(), "boundedness": bound.as_dict(),
                               "gamma": system.gamma})
    return EXIT_OK


def cmd_leader(args):
    from . import leader, solver

    field = model_from_args(args)
    x0 = x0_from_args(args, field.dim)
    if args.rate is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rate = solver.solve_rotation_formula(field, x0).rho
    else:
        rate = args.rate
        if rate.size != field.dim:
            raise ConfigError(f"--rate has {rate.size} entries, the model has dimension {field.dim}")
    mu = leader.AffineLeader(rate, x0)
    rep = leader.leader_check(field, mu, args.horizon, threads=args.threads)
    dist = leader.leader_distance(field, mu, x0, args.horizon, args.tol)
    say(f"mu(t) = x0 + {vec_text(rate)} t")
    say(f"bullet 1 {'PASS' if rep.bullet1 else 'FAIL'}, bullet 2 {'PASS' if rep.bullet2 else 'FAIL'}"
        f" (tau = {vec_text(rep.tau)}), bullet 3 {'PASS' if rep.bullet3 else 'FAIL'}"
        f" (drift {vec_text(rep.drifts)})")
    say(f"leader {'PASS' if rep.passed else 'FAIL'}; distance sup = {fmt(dist.D)}, "
        f"slope = {fmt(dist.verdict.slope)} ({'PASS' if dist.passed else 'FAIL'})")
    if args.output:
        rep.to_csv(args.output)
    write_json(args.json_out, {"leader": rep.as_dict(), "distance": dist.as_dict(), "rate": rate})
    return EXIT_OK


def family_from_args(text):
    from . import tongue

    if text.strip() == "arnold":
        return tongue.arnold_family()
    try:
        obj = json.loads(text)
        return tongue.Family.from_template(obj["model"], obj["params"], obj.get("name"))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"--family must be 'arnold' or a JSON template: {exc}") from exc


def cmd_tongue(args):
    from . import tongue

    family = family_from_args(args.family)
    t0 = time.perf_counter()
    grid = tongue.tongue_scan(family, args.axis1, args.axis2, args.horizon, x0=args.x0,
                              tol=args.tol, lock_tol=args.lock_tol,
                              targets=None if args.targets is None else list(args.targets),
                              threads=args.threads)
    elapsed = time.perf_counter() - t0
    say(f"cells = {grid.locked.size}, locked = {int(grid.locked.sum())}, "
        f"locked at 0 = {int(grid.locked_at(0.0).sum())}, failed = {len(grid.errors)}")
    print(f"elapsed = {elapsed:.1f} s", file=sys.stderr)
    if args.output:
        grid.to_csv(args.output)
    if args.json_out:
        grid.to_json(args.json_out)
    return EXIT_OK


def cmd_selftest(args):
    from .selftest import run_all

    results = run_all()
    for name, ok, detail in results:
        say(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")
    failed = sum(1 for _, ok, _ in results if not ok)
    say(f"{len(results) - failed}/{len(results)} passed")
    write_json(args.json_out, [{"name": n, "passed": ok, "detail": d} for n, ok, d in results])
    return EXIT_OK if failed == 0 else EXIT_FAILURE


COMMANDS = {
    "simulate": cmd_simulate,
    "rotvec": cmd_rotvec,
    "solve": cmd_solve,
    "psi": cmd_psi,
    "riccati": cmd_riccati,
    "leader": cmd_leader,
    "tongue": cmd_tongue,
    "selftest": cmd_selftest,
}


def run(argv=None):
    from .psi import KernelOverflowError
    from .riccati import RiccatiError
    from .solver import NormalizationError, SolverError

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        args = merge_config(parser, args, argv)
        return COMMANDS[args.command](args)
    except (ConfigError, ModelError, NormalizationError, HorizonError) as exc:
        print(f"rotvec {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, IntegrationError, KernelOverflowError, RiccatiError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"rotvec {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"rotvec {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(run())
