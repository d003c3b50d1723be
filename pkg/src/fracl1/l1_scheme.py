"""L1 discretisation of the Caputo derivative on non-uniform time meshes.

One implicit step from ``t_{n-1}`` to ``t_n`` solves, at every interior node,

    -S U[j+1] + (1 + 2S) U[j] - S U[j-1]
        = U^{n-1}[j] - sum_{m=0}^{n-2} Tt[m] (U^{m+1}[j] - U^m[j]) + F[j]

with ``S = Gamma(2-g) K dt**g / dx**2``, ``F = Gamma(2-g) dt**g f(x_j, t_n)``
and ``Tt[m] = dt**g T[m]`` the scaled L1 weights.  The memory sum over all
previous steps makes step ``n`` cost ``O(n J)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from fracl1.errors import DomainError
from fracl1.problem import Problem, SpatialGrid
from fracl1.specfun import gamma_fn


class StepWork:
    """Deterministic work counter: number of memory-sum terms processed."""

    __slots__ = ("count",)

    def __init__(self, count: int = 0):
        self.count = int(count)

    def add(self, n: int) -> None:
        self.count += int(n)

    def __repr__(self):
        return f"StepWork({self.count})"


class SolutionHistory:
    """Committed time mesh and the solution vector at every committed time.

    Storage grows geometrically; ``times`` and ``values`` return views of
    the committed part.
    """

    def __init__(self, u0: np.ndarray, t0: float = 0.0, capacity: int = 64):
        u0 = np.asarray(u0, dtype=float)
        if u0.ndim != 1:
            raise DomainError("solution vectors must be one-dimensional")
        if t0 != 0.0:
            raise DomainError("histories start at t = 0")
        capacity = max(int(capacity), 2)
        self._t = np.empty(capacity)
        self._u = np.empty((capacity, u0.size))
        self._t[0] = t0
        self._u[0] = u0
        self._n = 1

    def __len__(self):
        return self._n

    @property
    def n_nodes(self) -> int:
        return self._u.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self._t[: self._n]

    @property
    def values(self) -> np.ndarray:
        return self._u[: self._n]

    @property
    def last_time(self) -> float:
        return float(self._t[self._n - 1])

    @property
    def last_values(self) -> np.ndarray:
        return self._u[self._n - 1]

    def append(self, t: float, u: np.ndarray) -> None:
        if not t > self.last_time:
            raise DomainError(f"time {t} does not follow last committed time {self.last_time}")
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_nodes,):
            raise DomainError(f"expected {self.n_nodes} node values, got shape {u.shape}")
        if self._n == self._t.size:
            self._grow()
        self._t[self._n] = t
        self._u[self._n] = u
        self._n += 1

    def _grow(self):
        cap = 2 * self._t.size
        t = np.empty(cap)
        u = np.empty((cap, self.n_nodes))
        t[: self._n] = self._t[: self._n]
        u[: self._n] = self._u[: self._n]
        self._t, self._u = t, u

    def extended(self, t: float, u: np.ndarray) -> "SolutionHistory":
        """Copy of this history with one more entry; ``self`` is untouched."""
        new = SolutionHistory.__new__(SolutionHistory)
        cap = self._n + 2
        new._t = np.empty(cap)
        new._u = np.empty((cap, self.n_nodes))
        new._t[: self._n] = self.times
        new._u[: self._n] = self.values
        new._n = self._n
        new.append(t, u)
        return new

    def copy(self) -> "SolutionHistory":
        new = SolutionHistory.__new__(SolutionHistory)
        new._t = self.times.copy()
        new._u = self.values.copy()
        new._n = self._n
        return new

    def value_at(self, t: float) -> np.ndarray:
        """Solution at ``t``, linearly interpolated between committed times."""
        times = self.times
        if t < times[0] or t > times[-1]:
            raise DomainError(f"t = {t} outside committed range [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side="left"))
        if times[k] == t:
            return self.values[k].copy()
        w = (t - times[k - 1]) / (times[k] - times[k - 1])
        return (1.0 - w) * self.values[k - 1] + w * self.values[k]


@dataclass
class TridiagonalSystem:
    """``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``.

    ``lower`` and ``upper`` have one entry fewer than ``diag``.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.rhs) != n or len(self.lower) != n - 1 or len(self.upper) != n - 1:
            raise DomainError("inconsistent tridiagonal shapes")

    def to_dense(self) -> np.ndarray:
        n = len(self.diag)
        a = np.diag(np.asarray(self.diag, dtype=float))
        if n > 1:
            a[np.arange(1, n), np.arange(n - 1)] = self.lower
            a[np.arange(n - 1), np.arange(1, n)] = self.upper
        return a


def _pow_diff(a, b, s):
    """``a**s - b**s`` for ``a > b >= 0`` without cancellation, with ``0**s = 0``."""
    a, b = np.broadcast_arrays(np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float)))
    out = np.empty(a.shape)
    pos = b > 0.0
    if np.any(pos):
        bp = b[pos]
        out[pos] = bp**s * np.expm1(s * np.log1p((a[pos] - bp) / bp))
    zero = ~pos
    if np.any(zero):
        out[zero] = np.power(a[zero], s)
    return out


def l1_coefficients(t_left: np.ndarray, t_right: np.ndarray, t_n: float, gamma: float) -> np.ndarray:
    """Vectorised L1 weights ``T[m] = ((t_n - t_m)**(1-g) - (t_n - t_{m+1})**(1-g)) / (t_{m+1} - t_m)``.

    Uses ``0**(1-g) = 0`` for every ``g <= 1``, so ``g = 1`` leaves only the
    most recent weight ``1/dt`` and reduces the scheme to backward Euler.
    """
    t_left = np.asarray(t_left, dtype=float)
    t_right = np.asarray(t_right, dtype=float)
    s = 1.0 - gamma
    a = t_n - t_left
    b = t_n - t_right
    h = t_right - t_left
    return _pow_diff(a, b, s) / h


def l1_coefficient(t_m: float, t_mp1: float, t_n: float, gamma: float) -> float:
    """L1 weight ``T_{m,n}`` for the sub-interval ``[t_m, t_{m+1}]`` seen from ``t_n``.

    Examples
    --------
    >>> l1_coefficient(0.0, 1.0, 1.0, 0.5)
    1.0
    >>> round(l1_coefficient(0.0, 1.0, 2.0, 0.5), 6)
    0.414214
    """
    if not (0.0 < gamma <= 1.0):
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    if not (t_m < t_mp1 <= t_n):
        raise DomainError(f"need t_m < t_m+1 <= t_n, got {t_m}, {t_mp1}, {t_n}")
    return float(l1_coefficients(np.array([t_m]), np.array([t_mp1]), t_n, gamma)[0])


def scaled_coefficient(t_m: float, t_mp1: float, t_n: float, t_nm1: float, gamma: float) -> float:
    """``(t_n - t_{n-1})**g * T_{m,n}``; equals 1 for the most recent interval."""
    if not t_nm1 < t_n:
        raise DomainError(f"need t_n-1 < t_n, got {t_nm1}, {t_n}")
    return (t_n - t_nm1) ** gamma * l1_coefficient(t_m, t_mp1, t_n, gamma)


def memory_weights(times: np.ndarray, t_n: float, gamma: float) -> np.ndarray:
    """Scaled weights ``Tt[m]`` for ``m = 0..n-2`` given committed ``times = t_0..t_{n-1}``."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return np.empty(0)
    dt = t_n - times[-1]
    return dt**gamma * l1_coefficients(times[:-1], times[1:], t_n, gamma)


@njit(cache=True)
def _memory_sum(weights, values, out):
    # Kahan-compensated sum over m in ascending order, one node at a time
    n_terms = weights.shape[0]
    for j in range(out.shape[0]):
        s = 0.0
        c = 0.0
        for m in range(n_terms):
            y = weights[m] * (values[m + 1, j + 1] - values[m, j + 1]) - c
            tmp = s + y
            c = (tmp - s) - y
            s = tmp
        out[j] = s
    return out


def memory_sum(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``sum_m weights[m] * (values[m+1] - values[m])`` over interior nodes."""
    out = np.zeros(values.shape[1] - 2)
    if weights.size == 0:
        return out
    return _memory_sum(np.ascontiguousarray(weights), np.ascontiguousarray(values), out)


def assemble(
    problem: Problem,
    grid: SpatialGrid,
    history: SolutionHistory,
    t_n: float,
    work: Optional[StepWork] = None,
) -> TridiagonalSystem:
    """Interior-node tridiagonal system for the implicit step to ``t_n``.

    Dirichlet values at ``t_n`` are folded into the first and last entries of
    the right-hand side.
    """
    t_prev = history.last_time
    if not t_n > t_prev:
        raise DomainError(f"t_n = {t_n} must exceed last committed time {t_prev}")
    if history.n_nodes != grid.n_nodes:
        raise DomainError("history and grid disagree on the number of nodes")
    gamma = problem.gamma
    dt = t_n - t_prev
    g2 = gamma_fn(2.0 - gamma)
    scale = g2 * dt**gamma
    S = scale * problem.K / grid.dx**2
    n_int = grid.J - 1

    values = history.values
    rhs = values[-1, 1:-1].copy()
    n = len(history)
    # gamma = 1 makes every weight but the newest vanish exactly: no memory sum
    if n > 1 and gamma < 1.0:
        rhs -= memory_sum(memory_weights(history.times, t_n, gamma), values)
        if work is not None:
            work.add((n - 1) * n_int)
    if problem.has_source:
        rhs += scale * problem.source_values(grid.interior, t_n)
    rhs[0] += S * problem.left_bc(t_n)
    rhs[-1] += S * problem.right_bc(t_n)

    off = np.full(n_int - 1, -S)
    return TridiagonalSystem(off, np.full(n_int, 1.0 + 2.0 * S), off.copy(), rhs)


@njit(cache=True)
def _thomas(lower, diag, upper, rhs):
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    x = np.empty(n)
    piv = diag[0]
    if piv == 0.0:
        return x, False
    c[0] = upper[0] / piv if n > 1 else 0.0
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i - 1] * c[i - 1]
        if piv == 0.0:
            return x, False
        c[i] = upper[i] / piv if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / piv
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x, True


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution.

    Raises ``DomainError`` on a zero pivot.
    """
    lower = np.ascontiguousarray(system.lower, dtype=float)
    diag = np.ascontiguousarray(system.diag, dtype=float)
    upper = np.ascontiguousarray(system.upper, dtype=float)
    rhs = np.ascontiguousarray(system.rhs, dtype=float)
    if diag.size == 0:
        return np.empty(0)
    x, ok = _thomas(lower, diag, upper, rhs)
    if not ok:
        raise DomainError("zero pivot in tridiagonal elimination")
    return x


def advance(
    problem: Problem,
    grid: SpatialGrid,
    history: SolutionHistory,
    dt: float,
    work: Optional[StepWork] = None,
) -> np.ndarray:
    """Full node vector at ``history.last_time + dt``; ``history`` is not modified."""
    if not dt > 0.0:
        raise DomainError(f"timestep must be positive, got {dt}")
    t_n = history.last_time + dt
    u = np.empty(grid.n_nodes)
    u[1:-1] = thomas_solve(assemble(problem, grid, history, t_n, work))
    u[0] = problem.left_bc(t_n)
    u[-1] = problem.right_bc(t_n)
    return u


def initial_history(problem: Problem, grid: SpatialGrid, capacity: int = 64) -> SolutionHistory:
    u0 = np.asarray(problem.initial(grid.x), dtype=float)
    return SolutionHistory(np.broadcast_to(u0, grid.x.shape).copy(), capacity=capacity)


def solve_on_mesh(
    problem: Problem,
    grid: SpatialGrid,
    times,
    work: Optional[StepWork] = None,
) -> SolutionHistory:
    """March through a prescribed time mesh ``0 < t_1 < t_2 < ...``."""
    times = np.asarray(times, dtype=float)
    if times.size and times[0] == 0.0:
        times = times[1:]
    if np.any(np.diff(times) <= 0.0) or (times.size and times[0] <= 0.0):
        raise DomainError("mesh times must be positive and strictly increasing")
    history = initial_history(problem, grid, capacity=times.size + 1)
    for t in times:
        history.append(t, advance(problem, grid, history, t - history.last_time, work))
    return history
