"""Adaptive-step L1 solver for the time-fractional diffusion equation."""

from fracl1.errors import ControllerFailure, DomainError
from fracl1.l1_scheme import SolutionHistory, StepWork, advance, assemble, l1_coefficient, solve_on_mesh, thomas_solve
from fracl1.problem import NamedBenchmark, Problem, SpatialGrid, make_benchmark, make_reservoir, make_steep_source, make_testbed
from fracl1.records import RunRecord
from fracl1.specfun import erfc, gamma_fn, mittag_leffler
from fracl1.stepdoubling import ControllerConfig, StepOutcome, evaluate_candidate, run

__version__ = "0.1.0"
