"""Continuous problem definitions, the spatial grid and the named benchmarks.

The equation is ``D_t^g u = K u_xx + f(x, t)`` on ``[x_lo, x_hi]`` with a
Caputo time derivative of order ``0 < g <= 1`` and Dirichlet data.

Callables follow numpy conventions: ``initial(x)`` and ``source(x, t)``
receive an array of node coordinates, the boundary functions receive a
scalar time.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from fracl1.errors import DomainError
from fracl1.specfun import mittag_leffler

logger = logging.getLogger(__name__)

BENCHMARK_TAGS = ("testbed", "steep_source", "reservoir")


def _zero_bc(t):
    return 0.0


@dataclass(frozen=True)
class Problem:
    """A 1-D time-fractional diffusion problem with Dirichlet boundaries.

    Parameters
    ----------
    gamma : float
        Order of the Caputo derivative, ``0 < gamma <= 1``.
    K : float
        Diffusivity.
    x_lo, x_hi : float
        Spatial domain.
    left_bc, right_bc : callable
        Boundary values as functions of time.
    initial : callable
        Initial condition ``u(x, 0)``, vectorised over ``x``.
    source : callable or None
        Source term ``f(x, t)``; ``None`` means identically zero.
    consistency_tol : float
        Allowed mismatch between ``initial`` and the boundary data at
        ``t = 0`` before a warning is logged.
    """

    gamma: float
    K: float = 1.0
    x_lo: float = 0.0
    x_hi: float = math.pi
    left_bc: Callable[[float], float] = _zero_bc
    right_bc: Callable[[float], float] = _zero_bc
    initial: Callable[[np.ndarray], np.ndarray] = np.sin
    source: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    consistency_tol: float = 1e-10

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.K > 0.0:
            raise DomainError(f"diffusivity must be positive, got {self.K}")
        if not self.x_lo < self.x_hi:
            raise DomainError(f"empty domain [{self.x_lo}, {self.x_hi}]")
        ends = np.asarray(self.initial(np.array([self.x_lo, self.x_hi])), dtype=float)
        mismatch = max(abs(ends[0] - self.left_bc(0.0)), abs(ends[1] - self.right_bc(0.0)))
        if mismatch > self.consistency_tol:
            # the solver uses the initial value at t0 and the boundary value afterwards
            logger.warning("initial condition and boundary data disagree at t = 0 by %.3g", mismatch)

    @property
    def has_source(self) -> bool:
        return self.source is not None

    def source_values(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.source is None:
            return np.zeros_like(x)
        return np.broadcast_to(np.asarray(self.source(x, t), dtype=float), x.shape)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid ``x_j = x_lo + j dx`` for ``j = 0..J``."""

    x_lo: float
    x_hi: float
    divisions: int
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.divisions < 2:
            raise DomainError(f"need at least one interior node, got {self.divisions} divisions")
        if not self.x_lo < self.x_hi:
            raise DomainError(f"empty domain [{self.x_lo}, {self.x_hi}]")
        x = self.x_lo + self.dx * np.arange(self.divisions + 1)
        x[-1] = self.x_hi
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def for_problem(cls, problem: Problem, divisions: int) -> "SpatialGrid":
        return cls(problem.x_lo, problem.x_hi, divisions)

    @property
    def J(self) -> int:
        return self.divisions

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.divisions

    @property
    def n_nodes(self) -> int:
        return self.divisions + 1

    @property
    def interior(self) -> np.ndarray:
        return self.x[1:-1]


@dataclass(frozen=True)
class NamedBenchmark:
    tag: str
    problem: Problem
    exact: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    params: dict = field(default_factory=dict)


def _mittag_leffler_decay(gamma, t):
    return mittag_leffler(gamma, -(t**gamma)) if t > 0 else 1.0


def make_testbed(gamma: float) -> NamedBenchmark:
    """``D^g u = u_xx`` on ``[0, pi]``, zero boundaries, ``u(x, 0) = sin x``.

    Exact solution ``E_g(-t**g) sin x``.
    """
    problem = Problem(gamma=gamma)

    def exact(x, t):
        return _mittag_leffler_decay(gamma, t) * np.sin(x)

    return NamedBenchmark("testbed", problem, exact, {"gamma": gamma})


def make_steep_source(gamma: float, a: float = 20.0, p: float = 20.0) -> NamedBenchmark:
    """Testbed plus a source that makes the solution ``(E_g(-t**g) + a t**p) sin x``."""
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"steep-source problem needs 0 < gamma < 1, got {gamma}")
    if not a > 0.0:
        raise DomainError(f"a must be positive, got {a}")
    if not p > gamma:
        raise DomainError(f"p must exceed gamma, got p={p}, gamma={gamma}")
    # Gamma(1+p)/Gamma(1+p-g) via lgamma: both factors overflow for large p
    ratio = math.exp(math.lgamma(1.0 + p) - math.lgamma(1.0 + p - gamma))

    def source(x, t):
        if t <= 0.0:
            return np.zeros_like(x)
        return (a * t**p + a * ratio * t ** (p - gamma)) * np.sin(x)

    problem = Problem(gamma=gamma, source=source)

    def exact(x, t):
        return (_mittag_leffler_decay(gamma, t) + a * t**p) * np.sin(x)

    return NamedBenchmark("steep_source", problem, exact, {"gamma": gamma, "a": a, "p": p})


def make_reservoir(gamma: float, K: float = 1.0, L: float = 4.0, u0: float = 1.0) -> NamedBenchmark:
    """Medium ``[0, L]``, initially empty, held at ``u0`` on the left and 0 on the right.

    The exact solution is attached only for ``gamma == 1`` (method of images).
    """
    if not L > 0.0:
        raise DomainError(f"L must be positive, got {L}")
    u0 = float(u0)

    def left(t):
        return u0

    problem = Problem(
        gamma=gamma,
        K=K,
        x_lo=0.0,
        x_hi=L,
        left_bc=left,
        right_bc=_zero_bc,
        initial=np.zeros_like,
    )
    exact = None
    if gamma == 1.0:
        from fracl1.bench import reservoir_reference_gamma1

        def exact(x, t):
            if t <= 0.0:
                return np.zeros_like(np.asarray(x, dtype=float))
            return reservoir_reference_gamma1(x, t, K, L, u0)

    return NamedBenchmark("reservoir", problem, exact, {"gamma": gamma, "K": K, "L": L, "u0": u0})


def make_benchmark(tag: str, gamma: float, **params) -> NamedBenchmark:
    """Build a named benchmark from its tag."""
    if tag == "testbed":
        return make_testbed(gamma)
    if tag == "steep_source":
        return make_steep_source(gamma, **params)
    if tag == "reservoir":
        return make_reservoir(gamma, **params)
    raise DomainError(f"unknown benchmark {tag!r}; choose from {', '.join(BENCHMARK_TAGS)}")

