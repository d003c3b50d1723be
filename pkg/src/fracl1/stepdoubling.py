"""Step-doubling error estimation and timestep selection.

A candidate step ``dt`` is integrated twice from the committed history: once
as a single step and once as two steps of ``dt/2``.  The max-norm difference
of the two end states, ``err``, drives the controllers:

* ``fixed``: constant ``dt``; ``err`` is only recorded.
* ``trial_and_error``: halve while ``err > tol``; otherwise double until
  ``err > tol`` and keep the last step that passed.
* ``predictive``: assume ``err ~ dt**theta`` and jump to the step predicted
  to give ``tol``, damped by ``omega``; accept once ``tol/2 <= err <= 2 tol``.
"""

import logging
import math
import time
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Optional

import numpy as np

from fracl1.errors import ControllerFailure, DomainError
from fracl1.l1_scheme import SolutionHistory, StepWork, assemble, initial_history, thomas_solve
from fracl1.problem import Problem, SpatialGrid
from fracl1.records import RunRecord

logger = logging.getLogger(__name__)

CONTROLLER_KINDS = ("fixed", "trial_and_error", "predictive")
COMMIT_POLICIES = ("full", "half", "both")
_ALIASES = {"te": "trial_and_error", "t&e": "trial_and_error", "pred": "predictive"}
CYCLE_RTOL = 1e-9


@dataclass(frozen=True)
class StepOutcome:
    dt: float
    full_step: np.ndarray
    half_step: np.ndarray
    err: float
    trials: int = 1
    midpoint: Optional[np.ndarray] = None
    omega_halvings: int = 0
    exhausted: bool = False


@dataclass(frozen=True)
class ControllerConfig:
    """Controller settings.

    ``kind`` accepts the short aliases ``te`` and ``pred``.  ``commit``
    chooses what enters the history after acceptance: the single-step
    solution (``full``), the two-half-step solution (``half``), or the
    midpoint and the half-step solution (``both``).
    """

    kind: str = "trial_and_error"
    tol: float = 1e-4
    dt0: float = 0.01
    theta: float = 1.5
    omega: float = 1.0
    max_trials: int = 60
    fixed_dt: Optional[float] = None
    commit: str = "full"

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in CONTROLLER_KINDS:
            raise DomainError(f"unknown controller {self.kind!r}")
        if not self.tol > 0.0:
            raise DomainError(f"tolerance must be positive, got {self.tol}")
        if not self.dt0 > 0.0:
            raise DomainError(f"dt0 must be positive, got {self.dt0}")
        if not self.theta > 0.0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        if not (0.0 < self.omega <= 1.0):
            raise DomainError(f"omega must lie in (0, 1], got {self.omega}")
        if self.max_trials < 1:
            raise DomainError("max_trials must be at least 1")
        if kind == "fixed" and not (self.fixed_dt is not None and self.fixed_dt > 0.0):
            raise DomainError("the fixed controller needs a positive fixed_dt")
        if self.commit not in COMMIT_POLICIES:
            raise DomainError(f"unknown commit policy {self.commit!r}")


def _advance_to(problem, grid, history, t_n, work):
    u = np.empty(grid.n_nodes)
    u[1:-1] = thomas_solve(assemble(problem, grid, history, t_n, work))
    u[0] = problem.left_bc(t_n)
    u[-1] = problem.right_bc(t_n)
    return u


def evaluate_candidate(
    problem: Problem,
    grid: SpatialGrid,
    history: SolutionHistory,
    dt: float,
    work: Optional[StepWork] = None,
) -> StepOutcome:
    """One full step and two half steps of size ``dt`` from the end of ``history``."""
    if not dt > 0.0:
        raise DomainError(f"timestep must be positive, got {dt}")
    t0 = history.last_time
    t_n = t0 + dt
    t_mid = t0 + 0.5 * dt
    if not (t0 < t_mid < t_n):
        raise DomainError(f"timestep {dt} too small to split at t = {t0}")
    full = _advance_to(problem, grid, history, t_n, work)
    mid = _advance_to(problem, grid, history, t_mid, work)
    half = _advance_to(problem, grid, history.extended(t_mid, mid), t_n, work)
    err = float(np.max(np.abs(half - full)))
    return StepOutcome(dt, full, half, err, 1, mid)


def candidate_evaluator(problem, grid, history, work=None) -> Callable[[float], StepOutcome]:
    return partial(evaluate_candidate, problem, grid, history, work=work)


def _min_dt(t_now):
    # relative to t so that t + dt stays distinguishable from t; near t = 0 the
    # singular start can legitimately call for steps far below 1e-14
    return max(1e-14 * t_now, 1e-280)


def select_trial_and_error(
    evaluate: Callable[[float], StepOutcome],
    dt_init: float,
    config: ControllerConfig,
    *,
    t_now: float = 0.0,
    dt_max: float = math.inf,
) -> StepOutcome:
    """Halve-or-double step search.

    ``err == tol`` counts as acceptable.  The doubling phase never proposes a
    step beyond ``dt_max`` (the remaining integration span).
    """
    if not dt_init > 0.0:
        raise DomainError(f"initial step must be positive, got {dt_init}")
    tol = config.tol
    dt_min = _min_dt(t_now)
    out = evaluate(min(dt_init, dt_max))
    trials = 1

    if out.err > tol:
        while out.err > tol:
            if trials >= config.max_trials:
                raise ControllerFailure(f"no acceptable step after {trials} halvings", best=out)
            dt = 0.5 * out.dt
            if dt < dt_min:
                raise ControllerFailure(f"step fell below {dt_min:.3g} at t = {t_now}", best=out)
            out = evaluate(dt)
            trials += 1
        return replace(out, trials=trials)

    passed = out
    while passed.dt < dt_max:
        if trials >= config.max_trials:
            raise ControllerFailure(f"error stayed below tolerance for {trials} doublings", best=passed)
        out = evaluate(min(2.0 * passed.dt, dt_max))
        trials += 1
        if out.err > tol:
            break
        passed = out
    # the passing candidate is reused as evaluated, not recomputed
    return replace(passed, trials=trials)


def select_predictive(
    evaluate: Callable[[float], StepOutcome],
    dt_init: float,
    config: ControllerConfig,
    *,
    t_now: float = 0.0,
    dt_max: float = math.inf,
) -> StepOutcome:
    """Power-law step prediction with under-relaxation.

    A 2-cycle ``a -> b -> a`` of proposed steps halves ``omega`` for the rest
    of this step.  After ``max_trials`` the candidate closest to ``tol`` is
    accepted with a warning and flagged ``exhausted``.
    """
    if not dt_init > 0.0:
        raise DomainError(f"initial step must be positive, got {dt_init}")
    tol = config.tol
    omega = config.omega
    dt_min = _min_dt(t_now)
    dt = min(dt_init, dt_max)
    tried = []
    best = None
    halvings = 0
    for trial in range(1, config.max_trials + 1):
        out = evaluate(dt)
        tried.append(dt)
        if best is None or abs(out.err - tol) < abs(best.err - tol):
            best = out
        in_band = 0.5 * tol <= out.err <= 2.0 * tol
        # zero error carries no scale information; a capped final step may undershoot
        if in_band or out.err == 0.0 or (dt >= dt_max and out.err < 0.5 * tol):
            return replace(out, trials=trial, omega_halvings=halvings)

        ratio = (tol / out.err) ** (1.0 / config.theta)
        new = min(omega * dt * ratio + (1.0 - omega) * dt, dt_max)
        if len(tried) >= 2 and _close(new, tried[-2]) and not _close(new, tried[-1]):
            omega *= 0.5
            halvings += 1
            logger.info("step 2-cycle at t = %g; omega -> %g", t_now, omega)
            new = min(omega * dt * ratio + (1.0 - omega) * dt, dt_max)
        if new < dt_min:
            raise ControllerFailure(f"step fell below {dt_min:.3g} at t = {t_now}", best=best)
        dt = new

    logger.warning(
        "predictive controller exhausted %d trials at t = %g; accepting err = %.3g (tol %.3g)",
        config.max_trials,
        t_now,
        best.err,
        tol,
    )
    return replace(best, trials=config.max_trials, omega_halvings=halvings, exhausted=True)


def _close(a, b):
    return abs(a - b) <= CYCLE_RTOL * max(abs(a), abs(b))


def run(
    problem: Problem,
    grid: SpatialGrid,
    config: ControllerConfig,
    t_end: float,
    *,
    work: Optional[StepWork] = None,
    tag: str = "",
):
    """Integrate from ``t = 0`` to ``t_end``.

    Returns ``(history, record)``.  The last committed time equals ``t_end``.
    On controller failure the raised ``ControllerFailure`` carries the
    partial history and record.
    """
    if not t_end > 0.0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    work = work if work is not None else StepWork()
    work0 = work.count
    history = initial_history(problem, grid)
    record = RunRecord(
        meta={
            "benchmark": tag,
            "controller": config.kind,
            "gamma": problem.gamma,
            "K": problem.K,
            "dx": grid.dx,
            "divisions": grid.J,
            "tol": config.tol,
            "theta": config.theta,
            "omega": config.omega,
            "dt0": config.dt0,
            "fixed_dt": config.fixed_dt,
            "commit": config.commit,
            "t_end": t_end,
        }
    )
    record.meta["omega_halvings"] = 0
    record.meta["exhausted_steps"] = 0
    sliver = 1e-12 * max(1.0, t_end)
    start = time.perf_counter()
    guess = config.fixed_dt if config.kind == "fixed" else config.dt0
    n = 0
    while history.last_time < t_end:
        t = history.last_time
        remaining = t_end - t
        evaluate = candidate_evaluator(problem, grid, history, work)
        try:
            if config.kind == "fixed":
                # t_n = n * dt keeps the mesh exactly arithmetic
                t_next = (n + 1) * config.fixed_dt
                if t_next >= t_end - sliver:
                    t_next = t_end
                out = evaluate(t_next - t)
            elif config.kind == "trial_and_error":
                out = select_trial_and_error(evaluate, guess, config, t_now=t, dt_max=remaining)
            else:
                out = select_predictive(evaluate, guess, config, t_now=t, dt_max=remaining)
        except ControllerFailure as exc:
            exc.history, exc.record = history, record
            raise
        t_new = t + out.dt
        if t_end - t_new <= sliver:
            t_new = t_end
        if config.commit == "full":
            history.append(t_new, out.full_step)
        elif config.commit == "half":
            history.append(t_new, out.half_step)
        else:
            history.append(t + 0.5 * out.dt, out.midpoint)
            history.append(t_new, out.half_step)
        n += 1
        if config.kind != "fixed" and out.dt < remaining:
            guess = out.dt
        record.meta["omega_halvings"] += out.omega_halvings
        record.meta["exhausted_steps"] += int(out.exhausted)
        record.add(n, t_new, out.dt, out.err, out.trials, work.count - work0, time.perf_counter() - start)
    return history, record
