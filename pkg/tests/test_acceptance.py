"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np

from fracl1 import bench
from fracl1.l1_scheme import TridiagonalSystem, l1_coefficients, scaled_coefficient, solve_on_mesh, thomas_solve
from fracl1.problem import SpatialGrid, make_testbed
from fracl1.specfun import gamma_fn, mittag_leffler
from fracl1.stepdoubling import ControllerConfig, StepOutcome, select_predictive, select_trial_and_error

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from oracles import backward_euler_step  # noqa: E402


def report(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def verdict_detail(result):
    return "; ".join(f"{k}={_short(v['value'])} (bound {v['bound']})" for k, v in result.verdicts.items())


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def timed(fn, **kw):
    start = time.perf_counter()
    res = fn(**kw)
    return res, time.perf_counter() - start


def test_criterion_01_quadratic_fixed_work():
    res, secs = timed(bench.experiment_fixed_work, gamma=0.25, dt=0.01, n_range=(100, 2000), divisions=40)
    ok = res.passed and secs < 60
    assert report(1, ok, f"{verdict_detail(res)}; runtime {secs:.1f}s (< 60s)")


def test_criterion_02_sublinear_adaptive_work():
    res, secs = timed(bench.experiment_beta, gamma=0.25, tol=1e-4, divisions=40, t_end=500.0, t_range=(1.0, 500.0))
    pieces = ", ".join(f"[{lo:.3g},{hi:.3g}]: {b:.3f}" for (lo, hi), b in res.summary["beta_pieces"])
    ok = res.passed and secs < 300
    assert report(2, ok, f"{verdict_detail(res)}; piecewise {pieces}; runtime {secs:.1f}s (< 300s)")


def test_criterion_03_error_tolerance_coupling():
    res = bench.experiment_errors(gamma=0.25, tol=1e-4, divisions=40, t_end=10.0, window=(0.1, 10.0), band=(1 / 30, 10.0))
    medians = ", ".join(f"{k} median/tol={v['err_median_over_tol']:.2f}" for k, v in res.summary.items())
    assert report(3, res.passed, f"{verdict_detail(res)}; {medians}")


def test_criterion_04_tolerance_scaling():
    res, secs = timed(bench.experiment_eta, gamma=0.25, tols=(1e-3, 5e-4, 2e-4, 1e-4, 1e-5), t_probe=100.0)
    ok = res.passed and secs < 900
    assert report(4, ok, f"{verdict_detail(res)}; runtime {secs:.1f}s (< 900s)")


def test_criterion_05_theta_band():
    res = bench.experiment_theta(gammas=(0.3, 0.5, 0.7, 0.9), n_max=30, n_gate=4)
    table = res.tables["theta"]
    early = [r for r in table.rows if r[1] < 4]
    early_txt = ", ".join(f"g={g:g} n={n} m/{d}: {th:.2f}" for g, n, d, th in early if n == 1)
    assert report(5, res.passed, f"{verdict_detail(res)} over n=4..30; start-layer n=1 (not gated): {early_txt}")


def test_criterion_06_predictive_speed():
    res = bench.experiment_speed(gamma=0.25, tol=1e-4, t_end=100.0, omega=1.0)
    s = res.summary
    assert report(6, res.passed, f"work pred={s['work_predictive']} te={s['work_te']} ratio te/pred={s['speedup']:.2f}")


def _mock(err):
    def evaluate(dt):
        return StepOutcome(dt, None, None, err(dt))

    return evaluate


def test_criterion_07_controller_hand_traces():
    te = ControllerConfig("trial_and_error", tol=0.1)
    a = select_trial_and_error(_mock(lambda d: d), 0.04, te)
    b = select_trial_and_error(_mock(lambda d: d), 0.9, te)
    pred = ControllerConfig("predictive", tol=1e-3, theta=1.5, omega=1.0)
    c = select_predictive(_mock(lambda d: d**1.5), 0.04, pred)
    ok = (
        (a.dt, a.trials) == (0.08, 3)
        and (b.dt, b.trials) == (0.05625, 5)
        and abs(c.dt - 0.01) <= 1e-15
        and c.trials == 2
    )
    assert report(7, ok, f"accepted {a.dt:g} ({a.trials} trials), {b.dt:g} ({b.trials}), {c.dt:.12g} ({c.trials})")


def test_criterion_08_coefficient_invariants():
    rng = np.random.default_rng(2024)
    worst = 0.0
    positive = True
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        times = np.concatenate([[0.0], np.cumsum(10.0 ** rng.uniform(-6, 2, n))])
        g = rng.uniform(0.01, 1.0)
        t_n = times[-1] + 10.0 ** rng.uniform(-6, 2)
        worst = max(worst, abs(scaled_coefficient(times[-1], t_n, t_n, times[-1], g) - 1.0))
        positive &= bool(np.all(l1_coefficients(times[:-1], times[1:], t_n, g) > 0.0))

    bm = make_testbed(1.0)
    grid = SpatialGrid.for_problem(bm.problem, 40)
    mesh = np.cumsum(10.0 ** rng.uniform(-4, 0, 60))
    h = solve_on_mesh(bm.problem, grid, mesh)
    be = 0.0
    for k in range(1, len(h)):
        ref = backward_euler_step(h.values[k - 1], h.times[k], h.times[k] - h.times[k - 1], 1.0, grid.dx, bm.problem.left_bc, bm.problem.right_bc)
        be = max(be, float(np.max(np.abs(ref - h.values[k]))))
    ok = worst <= 1e-12 and positive and be <= 1e-12
    assert report(8, ok, f"max |scaled-1|={worst:.2e}; positivity={positive}; gamma=1 vs implicit Euler max diff={be:.2e}")


def test_criterion_09_thomas():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 513))
        lower = rng.uniform(-1, 1, n - 1)
        upper = rng.uniform(-1, 1, n - 1)
        diag = (np.abs(np.r_[0, lower]) + np.abs(np.r_[upper, 0]) + rng.uniform(0.1, 2.0, n)) * rng.choice([-1.0, 1.0], n)
        s = TridiagonalSystem(lower, diag, upper, rng.normal(size=n))
        x = thomas_solve(s)
        worst = max(worst, float(np.max(np.abs(x - np.linalg.solve(s.to_dense(), s.rhs)))))
    assert report(9, worst <= 1e-12, f"max deviation from dense solve={worst:.2e} (bound 1e-12)")


def test_criterion_10_special_functions():
    t = np.linspace(0.0, 50.0, 2001)
    e1 = max(abs(mittag_leffler(1.0, -tk) - math.exp(-tk)) for tk in t)
    z = np.linspace(0.0, 5.0, 1001)
    eh = max(abs(mittag_leffler(0.5, -zk) - math.exp(zk * zk) * math.erfc(zk)) for zk in z)
    gh = abs(gamma_fn(0.5) - math.sqrt(math.pi))
    ok = e1 <= 1e-10 and eh <= 1e-8 and gh <= 1e-12
    assert report(10, ok, f"E1 dev={e1:.2e} (1e-10); E1/2 dev={eh:.2e} (1e-8); Gamma(1/2) dev={gh:.2e} (1e-12)")


def test_criterion_11_stability():
    worst_growth = -math.inf
    finite = True
    for g in (0.1, 0.25, 0.5, 0.9, 1.0):
        bm = make_testbed(g)
        grid = SpatialGrid.for_problem(bm.problem, 40)
        mesh = np.cumsum([1e-3, 1e3, 1e-2, 1e3, 1e3, 0.5, 1e3, 1e-6, 1e3])
        h = solve_on_mesh(bm.problem, grid, mesh)
        norms = np.max(np.abs(h.values), axis=1)
        finite &= bool(np.all(np.isfinite(norms)))
        worst_growth = max(worst_growth, float(np.max(np.diff(norms))))
    ok = finite and worst_growth <= 0.0
    assert report(11, ok, f"finite={finite}; max increase of max-norm between steps={worst_growth:.2e}")


def test_criterion_12_reservoir():
    res = bench.experiment_reservoir()
    g1 = res.summary["gamma1"]
    probes = ", ".join(f"t={t}: {e:.2e}" for t, e in g1["probe_errors"].items())
    half = max(g1["probe_errors_half_commit"].values())
    assert report(12, res.passed, f"{verdict_detail(res)}; gamma=1 probes {probes}; half-commit max {half:.2e}")


def test_criterion_13_steep_source():
    res = bench.experiment_steep(gamma=0.25, a=20.0, p=20.0, tol=1e-3, divisions=40, t_end=1.5)
    rel = ", ".join(f"{k} max rel err={v['max_relative_error']:.2e} at steps={v['steps']}" for k, v in res.summary.items())
    assert report(13, res.passed, f"{verdict_detail(res)}; {rel}")


def test_criterion_14_predictive_robustness():
    res = bench.experiment_robustness(gamma=0.25, a=20.0, p=20.0, tol=1e-3)
    s = res.summary
    detail = f"omega=1 halvings={s['omega_1']['omega_halvings']} completed={s['omega_1']['completed']}; omega=1/2 halvings={s['omega_0.5']['omega_halvings']} completed={s['omega_0.5']['completed']}"
    assert report(14, res.passed, detail)


if __name__ == "__main__":
    import logging

    logging.disable(logging.WARNING)
    failures = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
