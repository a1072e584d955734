"""Command-line interface: ``sympocp <subcommand> ...``.

Exit codes: 0 success, 1 solver or I/O failure, 2 usage error.
"""

import argparse
import json
import os
import sys

import numpy as np

from .catalog import CATALOG, Problem, describe, get_problem, lq_problem, require
from .dhs import LinearDHS, step_linear
from .elimination import EliminationConfig
from .errors import ModelError, SympocpError
from .integrators import Method, MethodSpec, integrate
from .io import _jsonable, atomic_write, emit_trajectory, load_problem_file
from .model import LQSpec, PhasePoint, Trajectory
from .solvers import ShootingConfig, euler_discretization, shoot_continuous, shoot_discrete
from . import verify as V

METHODS = [m.value for m in Method] + ["explicit-euler", "dhs"]
CHECKS = ["symplecticity", "order", "energy", "hj", "composition"]
ORDER_LADDER = 0.2 * 2.0 ** -np.arange(6)
ORDER_HORIZON = 2.0
# reference step for problems without a closed-form flow: smallest ladder step / 16
REFERENCE_REFINE = 16
HJ_TIMES = (1e-2, 5e-3)
SYMPLECTIC_TOL = 1e-5
COMPOSITION_TOL = 1e-10
ENERGY_MAX_DEV = 0.02
ENERGY_MAX_SLOPE = 1e-6


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive(kind):
    def parse(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value {text!r}")
        if x <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return x
    return parse


def build_parser():
    ap = argparse.ArgumentParser(prog="sympocp", description="Generating-function integrators for optimal control.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", required=True, help="catalog name or path to a JSON problem file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], help="output format (default from --out suffix, else csv)")
    common.add_argument("--tol", type=_positive(float), default=1e-12, help="implicit/elimination tolerance")
    common.add_argument("--max-iter", type=_positive(int), default=50)
    common.add_argument("--seed", type=int, default=None, help="random seed (default $SYMPOCP_SEED or 0)")
    common.add_argument("--q0", type=_floats, help="initial state, comma separated")
    common.add_argument("--p0", type=_floats, help="initial costate, comma separated")

    def method_args(p, required):
        p.add_argument("--method", choices=METHODS, required=required)
        p.add_argument("--order", type=int, default=None, help="series order r (1..3)")
        p.add_argument("--alpha", type=float, default=0.5, help="DEL averaging parameter")

    p = sub.add_parser("integrate", parents=[common], help="integrate a problem with a one-step method")
    method_args(p, False)
    p.add_argument("--h", type=_positive(float), required=True)
    p.add_argument("--steps", type=_positive(int), required=True)

    p = sub.add_parser("solve-docp", parents=[common], help="solve the Euler-discretized problem by shooting")
    p.add_argument("--N", type=_positive(int), required=True)
    p.add_argument("--h", type=_positive(float), required=True)
    p.add_argument("--shoot-tol", type=_positive(float), default=1e-10)

    p = sub.add_parser("solve-ocp", parents=[common], help="solve the continuous problem by shooting")
    method_args(p, True)
    p.add_argument("--h", type=_positive(float), required=True)
    p.add_argument("--shoot-tol", type=_positive(float), default=1e-10)

    p = sub.add_parser("verify", parents=[common], help="run a numerical certificate and emit a JSON report")
    p.add_argument("--check", choices=CHECKS, required=True)
    method_args(p, True)
    p.add_argument("--h", type=_positive(float), default=None)
    p.add_argument("--steps", type=_positive(int), default=None)
    p.add_argument("--samples", type=_positive(int), default=100)

    sub.add_parser("catalog", help="list built-in problems")
    return ap


# ---------------------------------------------------------------------------
# helpers


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SYMPOCP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SYMPOCP_SEED must be an integer, got {env!r}")


def _load(args):
    """``Problem`` for catalog names and LQ files, ``LinearDHS`` for DHS files."""
    cfg = EliminationConfig(tol=args.tol, max_iter=args.max_iter)
    if args.problem in CATALOG:
        return get_problem(args.problem, cfg)
    if not os.path.isfile(args.problem):
        raise UsageError(f"--problem: unknown problem {args.problem!r} "
                         f"(catalog: {', '.join(CATALOG)}, or a JSON file path)")
    try:
        obj = load_problem_file(args.problem)
    except (ModelError, OSError) as exc:
        raise UsageError(f"--problem: {exc}")
    if isinstance(obj, LQSpec):
        return lq_problem(obj, cfg, name=os.path.basename(args.problem))
    return obj


def _start(args, pb: Problem) -> PhasePoint:
    q = pb.x0.q if args.q0 is None else args.q0
    p = pb.x0.p if args.p0 is None else args.p0
    if q.size != pb.n:
        raise UsageError(f"--q0: expected {pb.n} values, got {q.size}")
    if p.size != pb.n:
        raise UsageError(f"--p0: expected {pb.n} values, got {p.size}")
    return PhasePoint(pb.x0.t, q, p)


def _ocp_q0(args, pb: Problem):
    q = args.q0 if args.q0 is not None else pb.extra.get("ocp_q0", pb.x0.q)
    if q.size != pb.n:
        raise UsageError(f"--q0: expected {pb.n} values, got {q.size}")
    return q


def _spec(args) -> MethodSpec:
    if args.method in ("explicit-euler", "dhs"):
        raise UsageError(f"--method: {args.method} is not available here")
    kind = Method(args.method)
    if args.order is not None and kind is not Method.SERIES:
        raise UsageError("--order: only meaningful with --method series")
    order = 2 if args.order is None else args.order
    if kind is Method.SERIES and order not in (1, 2, 3):
        raise UsageError(f"--order: series order must be 1, 2 or 3, got {order}")
    if not 0.0 <= args.alpha <= 1.0:
        raise UsageError(f"--alpha: must lie in [0, 1], got {args.alpha}")
    try:
        return MethodSpec(kind, order=order if kind is Method.SERIES else 1, alpha=args.alpha,
                          implicit_tol=args.tol, implicit_max_iter=args.max_iter)
    except ModelError as exc:
        raise UsageError(f"--method: {exc}")


def _system_for(spec: MethodSpec, pb: Problem):
    if spec.is_lagrangian:
        try:
            require(pb, "lagrangian")
        except ModelError as exc:
            raise UsageError(f"--method: {exc}")
        return pb.lagrangian
    return pb.hamiltonian


def _format(args):
    if args.format:
        return args.format
    if args.out and args.out.lower().endswith(".json"):
        return "json"
    return "csv"


def _write(args, text):
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _not_catalog_dhs(args, obj, what):
    if isinstance(obj, LinearDHS):
        raise UsageError(f"--problem: {what} is not available for discrete Hamiltonian systems")
    return obj


# ---------------------------------------------------------------------------
# subcommands


def cmd_catalog(args):
    for name, n, m, desc in describe():
        print(f"{name:9s} n={n} m={m}  {desc}")
    return 0


def cmd_integrate(args):
    obj = _load(args)
    if isinstance(obj, LinearDHS):
        if args.method not in (None, "dhs"):
            raise UsageError("--method: discrete Hamiltonian systems only accept --method dhs")
        y = np.zeros(obj.d) if args.q0 is None else args.q0
        z = np.zeros(obj.d) if args.p0 is None else args.p0
        if y.size != obj.d or z.size != obj.d:
            raise UsageError(f"--q0/--p0: expected {obj.d} values each")
        ys, zs = [y], [z]
        for t in range(args.steps):
            y, z = step_linear(obj, t, y, z)
            ys.append(y), zs.append(z)
        k = args.steps + 1
        traj = Trajectory(np.arange(k), ys, zs, np.zeros((k, 0)), np.full(k, np.nan), meta={"method": "dhs"})
    else:
        if args.method is None:
            raise UsageError("--method: required for this problem")
        spec = _spec(args)
        system = _system_for(spec, obj)
        traj = integrate(spec, system, _start(args, obj), args.h, args.steps,
                         hamiltonian=obj.hamiltonian if spec.is_lagrangian else None)
    _write(args, emit_trajectory(traj, _format(args)))
    return 0


def cmd_solve_docp(args):
    pb = _not_catalog_dhs(args, _load(args), "solve-docp")
    if pb.system is None:
        raise UsageError(f"--problem: '{pb.name}' has no control system to discretize")
    q0 = _ocp_q0(args, pb)
    docp = euler_discretization(pb.system, q0, args.h, args.N, pb.x0.t)
    sol = shoot_discrete(docp, ShootingConfig(tol=args.shoot_tol, max_iter=args.max_iter, step_tol=args.tol),
                         p0_guess=args.p0)
    N = docp.N
    u = np.vstack([sol.u, np.full((1, docp.m), np.nan)])
    H = [docp.Hbar(k, sol.q[k], sol.p[k + 1], sol.u[k]) for k in range(N)] + [np.nan]
    traj = Trajectory(docp.t0 + docp.h * np.arange(N + 1), sol.q, sol.p, u, H,
                      meta={"J": sol.J, "residual": sol.info["residual"], "iterations": sol.info["iterations"]})
    _write(args, emit_trajectory(traj, _format(args)))
    print(f"J = {sol.J:.17g}  boundary residual = {sol.info['residual']:.3e}", file=sys.stderr)
    return 0


def cmd_solve_ocp(args):
    pb = _not_catalog_dhs(args, _load(args), "solve-ocp")
    spec = _spec(args)
    if spec.is_lagrangian:
        raise UsageError("--method: continuous shooting needs gf2-euler or series")
    q0 = _ocp_q0(args, pb)
    traj = shoot_continuous(pb.hamiltonian, pb.terminal_cost_dq, q0, pb.x0.t, pb.x0.t + pb.T, spec, args.h,
                            ShootingConfig(tol=args.shoot_tol, max_iter=args.max_iter, step_tol=args.tol),
                            p0_guess=args.p0)
    _write(args, emit_trajectory(traj, _format(args)))
    print(f"boundary residual = {traj.meta['residual']:.3e}", file=sys.stderr)
    return 0


def _explicit_step(pb):
    return lambda x, h: V.explicit_euler_step(pb.hamiltonian, x, h)


def _step_map(args, pb):
    if args.method == "explicit-euler":
        return _explicit_step(pb)
    spec = _spec(args)
    return V.one_step_map(spec, _system_for(spec, pb))


def _order_of(args):
    if args.method == "series":
        return 2 if args.order is None else args.order
    return 1


def cmd_verify(args):
    obj = _load(args)
    rng = np.random.default_rng(_seed(args))
    name = os.path.basename(args.problem)
    method = args.method + (f"-r{_order_of(args)}" if args.method == "series" else "")
    check = args.check

    if isinstance(obj, LinearDHS):
        if check != "symplecticity" or args.method != "dhs":
            raise UsageError("--check: discrete Hamiltonian systems support --check symplecticity --method dhs")
        step = lambda x: PhasePoint(x.t + 1, *step_linear(obj, int(x.t), x.q, x.p))
        pts = V.random_points(obj.d, args.samples, rng)
        defects = np.array([V.symplectic_defect(V.flow_jacobian(step, x)) for x in pts])
        rep = V.SymplecticityReport(defects, problem=name, method="dhs", h=1.0, tol=SYMPLECTIC_TOL).to_json()
        return _report(args, rep)
    if args.method == "dhs":
        raise UsageError("--method: dhs needs a dhs-linear problem file")
    pb = obj

    if check == "symplecticity":
        h = args.h or 0.1
        try:
            step = _step_map(args, pb)
        except ModelError as exc:
            raise UsageError(f"--method: {exc}")
        t = pb.x0.t
        if args.method in ("del", "del-adaptive"):
            pts = [PhasePoint(t, rng.uniform(-1, 1, pb.n), rng.uniform(-1, 1, pb.n)) for _ in range(args.samples)]
        else:
            pts = V.random_points(pb.n, args.samples, rng, t=t)
        rep = V.symplecticity_sweep(step, pts, h, SYMPLECTIC_TOL, name, method).to_json()
    elif check == "order":
        oracle = pb.exact_flow or V.series_reference(pb.hamiltonian, ORDER_LADDER[-1] / REFERENCE_REFINE)
        if args.method == "explicit-euler":
            report = V.observed_order(_explicit_step(pb), pb.hamiltonian, pb.x0, pb.x0.t + ORDER_HORIZON,
                                      oracle, ORDER_LADDER, nominal=1.0)
        else:
            spec = _spec(args)
            report = V.observed_order(spec, _system_for(spec, pb), pb.x0, pb.x0.t + ORDER_HORIZON,
                                      oracle, ORDER_LADDER)
        rep = report.to_json(name, method)
        rep["note"] = report.note
    elif check == "energy":
        h = args.h or 0.01
        steps = args.steps or 10_000
        if args.method == "explicit-euler":
            traj = V.explicit_euler_rollout(pb.hamiltonian, pb.x0, h, steps)
        else:
            spec = _spec(args)
            traj = integrate(spec, _system_for(spec, pb), pb.x0, h, steps,
                             hamiltonian=pb.hamiltonian if spec.is_lagrangian else None)
        dev, slope = V.energy_drift(traj)
        rep = V.report_json("energy", name, method, h, len(traj), dev, None, slope,
                            dev <= ENERGY_MAX_DEV and abs(slope) <= ENERGY_MAX_SLOPE)
    elif check == "hj":
        if args.method not in ("series", "gf2-euler"):
            raise UsageError("--method: the hj check needs series or gf2-euler")
        r = _order_of(args)
        q0, p1 = rng.uniform(0.2, 1.0, pb.n), rng.uniform(0.2, 1.0, pb.n)
        t1, t2 = (args.h, args.h / 2) if args.h else HJ_TIMES
        res = [V.hj_residual(pb.hamiltonian, r, q0, p1, t, pb.x0.t) for t in (t1, t2)]
        ratio = res[0] / res[1] if res[1] > 0 else float("nan")
        rep = V.report_json("hj", name, method, t1, 2, max(res), None, None,
                            bool(abs(ratio - 2 ** r) <= 0.2 * 2 ** r), ratio=ratio, residuals=res, order=r)
    else:
        h = args.h or 0.1
        steps = args.steps or 10
        spec = _spec(args)
        system = _system_for(spec, pb)
        traj = integrate(spec, system, pb.x0, h, steps)
        worst = V.composition_check(spec, system, traj)
        rep = V.report_json("composition", name, method, h, len(traj), worst, None, None,
                            worst <= COMPOSITION_TOL)
    return _report(args, rep)


def _report(args, rep):
    _write(args, json.dumps(_jsonable(rep), indent=1) + "\n")
    return 0


COMMANDS = {"catalog": cmd_catalog, "integrate": cmd_integrate, "solve-docp": cmd_solve_docp,
            "solve-ocp": cmd_solve_ocp, "verify": cmd_verify}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"sympocp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (SympocpError, OSError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"sympocp {args.command}: failed: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
