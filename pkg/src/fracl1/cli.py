"""Command-line front end.

    fracl1 solve --benchmark testbed --gamma 0.25 --controller te --tol 1e-4 --t-end 10
    fracl1 bench beta --gamma 0.25 --tol 1e-4
    fracl1 sweep --tols 1e-3,5e-4,2e-4,1e-4 --t-end 100 --workers 2

Exit codes: 0 success, 1 usage error, 2 controller failure, 3 failed
acceptance check.  Output files go to ``--output-dir``, defaulting to
``$FRACL1_OUTPUT_DIR`` or the working directory.
"""

import argparse
import configparser
import inspect
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from fracl1 import bench
from fracl1.errors import ControllerFailure, DomainError
from fracl1.problem import BENCHMARK_TAGS, NamedBenchmark, Problem, SpatialGrid, make_benchmark
from fracl1.records import fmt
from fracl1.stepdoubling import COMMIT_POLICIES, ControllerConfig, run

logger = logging.getLogger("fracl1")

EXIT_OK, EXIT_USAGE, EXIT_CONTROLLER, EXIT_ACCEPTANCE = 0, 1, 2, 3
OUTPUT_ENV = "FRACL1_OUTPUT_DIR"
SUITES = ("errors", "beta", "eta", "theta", "steep", "reservoir", "fixed", "speed", "robustness")

# names visible to expressions in a custom-problem config
_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "pi", "sinh", "cosh", "tanh", "where", "minimum", "maximum")
}
_EXPR_NAMESPACE["np"] = np


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce one solve."""

    benchmark: str = "testbed"
    gamma: float = 0.25
    K: Optional[float] = None
    divisions: int = 40
    t_end: float = 10.0
    controller: str = "trial_and_error"
    tol: float = 1e-4
    theta: float = 1.5
    omega: float = 1.0
    dt0: float = 0.01
    dt: Optional[float] = None
    commit: str = "full"
    a: Optional[float] = None
    p: Optional[float] = None
    L: Optional[float] = None
    u0: Optional[float] = None
    x_lo: float = 0.0
    x_hi: float = math.pi
    initial: str = "sin(x)"
    left: str = "0"
    right: str = "0"
    source: str = ""
    exact: str = ""
    snapshots: tuple = ()
    steps_csv: str = ""
    profile_csv: str = ""
    summary_json: str = ""
    timing: bool = True

    def controller_config(self) -> ControllerConfig:
        return ControllerConfig(
            kind=self.controller,
            tol=self.tol,
            dt0=self.dt0,
            theta=self.theta,
            omega=self.omega,
            fixed_dt=self.dt,
            commit=self.commit,
        )

    def build(self) -> NamedBenchmark:
        if self.benchmark == "custom":
            return _custom_benchmark(self)
        params = {}
        if self.benchmark == "steep_source":
            params = {k: getattr(self, k) for k in ("a", "p") if getattr(self, k) is not None}
        elif self.benchmark == "reservoir":
            params = {k: getattr(self, k) for k in ("K", "L", "u0") if getattr(self, k) is not None}
        bm = make_benchmark(self.benchmark, self.gamma, **params)
        if self.K is not None and self.benchmark != "reservoir" and self.K != bm.problem.K:
            raise UsageError(f"benchmark {self.benchmark} fixes K = {bm.problem.K}")
        return bm

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["run"] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or v == "" or (f.name == "snapshots" and not v):
                continue
            cp["run"][f.name] = ",".join(repr(float(s)) for s in v) if f.name == "snapshots" else str(v)
        import io

        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _compile(expr: str, args: str):
    code = compile(expr, f"<config: {expr}>", "eval")

    def fn(*values):
        return eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, **dict(zip(args.split(","), values))})

    return fn


def _custom_benchmark(spec: RunSpec) -> NamedBenchmark:
    try:
        initial = _compile(spec.initial, "x")
        left = _compile(spec.left, "t")
        right = _compile(spec.right, "t")
        source = _compile(spec.source, "x,t") if spec.source else None
        exact = _compile(spec.exact, "x,t") if spec.exact else None
    except SyntaxError as exc:
        raise UsageError(f"bad expression in config: {exc}") from None

    def init(x):
        return np.broadcast_to(np.asarray(initial(x), dtype=float), np.shape(x)).copy()

    problem = Problem(
        gamma=spec.gamma,
        K=1.0 if spec.K is None else spec.K,
        x_lo=spec.x_lo,
        x_hi=spec.x_hi,
        left_bc=lambda t: float(left(t)),
        right_bc=lambda t: float(right(t)),
        initial=init,
        source=source,
    )
    return NamedBenchmark("custom", problem, exact, {})


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_CONTROLLERS = {"fixed": "fixed", "te": "trial_and_error", "trial_and_error": "trial_and_error", "pred": "predictive", "predictive": "predictive"}


def _floats(text):
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p, *, defaults_none=True):
    p.add_argument("--gamma", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--dx-divisions", dest="divisions", type=int)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--controller", choices=sorted(_CONTROLLERS))
    p.add_argument("--omega", type=float)
    p.add_argument("--dt", type=float, help="fixed timestep")
    p.add_argument("--output-dir", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracl1", description="Adaptive L1 solver for time-fractional diffusion")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="run one solve")
    s.add_argument("--config", help="INI file with a [run] section; flags override it")
    s.add_argument("--benchmark", choices=BENCHMARK_TAGS + ("custom",))
    _add_common(s)
    s.add_argument("--K", type=float)
    s.add_argument("--theta", type=float)
    s.add_argument("--dt0", type=float)
    s.add_argument("--commit", choices=COMMIT_POLICIES)
    for name in ("a", "p", "L", "u0"):
        s.add_argument(f"--{name}", type=float)
    s.add_argument("--snapshots", type=_floats, help="comma-separated profile times")
    s.add_argument("--steps-csv", dest="steps_csv")
    s.add_argument("--profile-csv", dest="profile_csv")
    s.add_argument("--summary-json", dest="summary_json")
    s.add_argument("--no-timing", dest="timing", action="store_false", default=None, help="omit wall-clock columns")

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("suite", help=", ".join(SUITES) + " or all")
    _add_common(b)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--calibrate", action="store_true", help="record the 50-step reference time")

    w = sub.add_parser("sweep", help="tolerance sweep with an eta fit")
    w.add_argument("--benchmark", choices=BENCHMARK_TAGS, default="testbed")
    _add_common(w)
    w.add_argument("--tols", type=_floats, required=True)
    w.add_argument("--workers", type=int, default=1)
    return parser


def _read_config(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    known = {f.name: f for f in fields(RunSpec)}
    out = {}
    for section in cp.sections():
        for key, raw in cp[section].items():
            if key not in known:
                raise UsageError(f"unknown config key {key!r} in [{section}]")
            out[key] = _coerce(key, raw)
    return out


def _coerce(key, raw):
    defaults = RunSpec()
    current = getattr(defaults, key)
    try:
        if key == "snapshots":
            return _floats(raw)
        if key == "timing":
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if key == "divisions":
            return int(raw)
        if key in ("benchmark", "controller", "commit", "initial", "left", "right", "source", "exact", "steps_csv", "profile_csv", "summary_json"):
            return raw.strip()
        if raw.strip().lower() in ("", "none") and current is None:
            return None
        return float(raw)
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"bad value for {key}: {raw!r}") from None


def spec_from_args(args) -> RunSpec:
    values = _read_config(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunSpec):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if "controller" in values:
        values["controller"] = _CONTROLLERS.get(values["controller"], values["controller"])
    spec = RunSpec(**values)
    _validate(spec)
    return spec


def _validate(spec: RunSpec):
    if spec.benchmark not in BENCHMARK_TAGS + ("custom",):
        raise UsageError(f"unknown benchmark {spec.benchmark!r}")
    if spec.controller not in ("fixed", "trial_and_error", "predictive"):
        raise UsageError(f"unknown controller {spec.controller!r}")
    if spec.controller == "fixed" and spec.dt is None:
        raise UsageError("the fixed controller needs --dt")
    if spec.controller != "fixed" and not spec.tol > 0.0:
        raise UsageError("adaptive controllers need a positive --tol")
    if not spec.t_end > 0.0:
        raise UsageError("--t-end must be positive")
    if spec.divisions < 2:
        raise UsageError("--dx-divisions must be at least 2")
    for t in spec.snapshots:
        if not 0.0 <= t <= spec.t_end:
            raise UsageError(f"snapshot time {t} outside [0, {spec.t_end}]")
    try:
        spec.controller_config()
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _output_dir(args) -> str:
    return args.output_dir or os.environ.get(OUTPUT_ENV) or "."


def _path(outdir, name, default):
    return os.path.join(outdir, name or default)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def write_profiles(path, history, grid, times, exact=None) -> dict:
    """Profile CSV at ``times`` (linear in t between committed times); returns max errors if ``exact`` is known."""
    errors = {}
    lines = ["t,x,u" + (",exact" if exact else "")]
    for t in times:
        u = history.value_at(t)
        ref = None
        if exact is not None:
            ref = np.asarray(exact(grid.x, t), dtype=float) * np.ones_like(grid.x)
            errors[repr(t)] = float(np.max(np.abs(u - ref)))
        for j, xj in enumerate(grid.x):
            row = [fmt(t), fmt(xj), fmt(u[j])]
            if ref is not None:
                row.append(fmt(ref[j]))
            lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return errors


def cmd_solve(spec: RunSpec, outdir: str) -> int:
    bm = spec.build()
    grid = SpatialGrid.for_problem(bm.problem, spec.divisions)
    os.makedirs(outdir, exist_ok=True)
    tag = bm.tag
    status = EXIT_OK
    failure = None
    try:
        history, record = run(bm.problem, grid, spec.controller_config(), spec.t_end, tag=tag)
    except ControllerFailure as exc:
        history, record, failure = exc.history, exc.record, str(exc)
        status = EXIT_CONTROLLER
        logger.error("controller failure: %s", exc)

    record.to_csv(_path(outdir, spec.steps_csv, f"{tag}_steps.csv"), include_timing=spec.timing)
    snaps = [t for t in (spec.snapshots or (spec.t_end,)) if t <= history.last_time]
    errors = write_profiles(_path(outdir, spec.profile_csv, f"{tag}_profile.csv"), history, grid, snaps, bm.exact)
    summary = {
        "spec": {k: v for k, v in asdict(spec).items()},
        "status": "controller_failure" if failure else "ok",
        "failure": failure,
        "steps": len(record),
        "t_reached": history.last_time,
        "total_work": record.total_work,
        "omega_halvings": record.meta.get("omega_halvings", 0),
        "exhausted_steps": record.meta.get("exhausted_steps", 0),
        "snapshot_errors": errors,
    }
    if spec.timing and len(record):
        summary["wall_seconds"] = record.rows[-1][6]
    with open(_path(outdir, spec.summary_json, f"{tag}_summary.json"), "w") as fh:
        json.dump(bench._jsonable(summary), fh, indent=2, sort_keys=True)
    print(f"{tag}: {len(record)} steps to t = {history.last_time:g}, work {record.total_work}")
    for t, e in errors.items():
        print(f"  max error at t = {t}: {e:.3e}")
    return status


def _bench_kwargs(fn, args) -> dict:
    accepted = inspect.signature(fn).parameters
    kw = {}
    direct = {"gamma": args.gamma, "tol": args.tol, "divisions": args.divisions, "t_end": args.t_end, "omega": args.omega, "workers": args.workers}
    for k, v in direct.items():
        if v is not None and k in accepted:
            kw[k] = v
    if args.controller is not None and "controllers" in accepted:
        kind = _CONTROLLERS[args.controller]
        kw["controllers"] = () if kind == "fixed" else (kind,)
        if kind == "fixed" and args.dt is None:
            raise UsageError("the fixed controller needs --dt")
    if args.dt is not None:
        key = "fixed_dt" if "fixed_dt" in accepted else "dt" if "dt" in accepted else None
        if key is None:
            raise UsageError(f"--dt does not apply to this suite")
        kw[key] = args.dt
    return kw


def cmd_bench(args) -> int:
    names = SUITES[:6] if args.suite == "all" else (args.suite,)
    for name in names:
        if name not in SUITES:
            raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    outdir = _output_dir(args)
    calib = bench.calibrate_t50() if args.calibrate else None
    failed = False
    for name in names:
        fn = bench.EXPERIMENTS[name]
        result = fn(**_bench_kwargs(fn, args))
        if calib is not None:
            result.summary["t50_seconds"] = calib.seconds
        result.write(outdir)
        for key, v in result.verdicts.items():
            print(f"{name}.{key}: {'PASS' if v['passed'] else 'FAIL'} value={v['value']} bound={v['bound']}")
        failed |= not result.passed
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def cmd_sweep(args) -> int:
    tols = args.tols
    kind = _CONTROLLERS[args.controller or "te"]
    if kind == "fixed":
        raise UsageError("sweeps need an adaptive controller")
    gamma = 0.25 if args.gamma is None else args.gamma
    divisions = args.divisions or 40
    t_end = args.t_end or 100.0
    jobs = [
        bench.RunJob(args.benchmark, gamma, divisions, ControllerConfig(kind, tol=t, omega=args.omega or 1.0), t_end)
        for t in tols
    ]
    outdir = _output_dir(args)
    os.makedirs(outdir, exist_ok=True)
    try:
        results = bench.run_sweep(jobs, args.workers)
    except ControllerFailure as exc:
        logger.error("controller failure: %s", exc)
        return EXIT_CONTROLLER
    summary = {"tols": list(tols), "runs": []}
    for job, (_, rec) in zip(jobs, results):
        rec.to_csv(os.path.join(outdir, f"sweep_{args.benchmark}_tol{job.config.tol:g}.csv"))
        summary["runs"].append({"tol": job.config.tol, "steps": len(rec), "work": rec.total_work})
    try:
        fit = bench.fit_eta([r for _, r in results], t_end)
        summary["eta"] = fit.exponent
        print(f"eta = {fit.exponent:.3f} (residual {fit.residual:.2e})")
    except DomainError as exc:
        summary["eta"] = None
        print(f"eta not fitted: {exc}")
    with open(os.path.join(outdir, f"sweep_{args.benchmark}_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
        if args.command == "solve":
            return cmd_solve(spec_from_args(args), _output_dir(args))
        if args.command == "bench":
            return cmd_bench(args)
        return cmd_sweep(args)
    except UsageError as exc:
        print(f"fracl1: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"fracl1: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
