"""Recovery of pulse streams by l1 minimization, with dual-certificate checks.

Modules
-------
kernels      admissible kernels, derivatives and admissibility constants
signal       spike trains, sampling grids, convolution matrices and noise
lp           dense primal-dual interior-point LP solver
l1           the l1 recovery program and recovery metrics
certificate  dual certificate systems (1D and 2D), verification and bounds
bounds       worst-case l1 error bound for noisy recovery
experiments  seeded experiment runners behind the ``pulse-recover`` CLI
"""

from .bounds import BoundReport, audit_bound, theorem2_bound
from .kernels import KernelSpec, admissibility_report, cauchy, gaussian, get_kernel, tensor
from .l1 import L1Problem, L1Solution, recovery_metrics, solve_l1, solve_least_squares
from .signal import (
    NoiseSpec,
    SampledSignal,
    SampleGrid,
    SpikeTrain,
    add_noise,
    convolution_matrix,
    sample_signal,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "audit_bound", "theorem2_bound",
    "KernelSpec", "admissibility_report", "cauchy", "gaussian", "get_kernel", "tensor",
    "L1Problem", "L1Solution", "recovery_metrics", "solve_l1", "solve_least_squares",
    "NoiseSpec", "SampledSignal", "SampleGrid", "SpikeTrain", "add_noise",
    "convolution_matrix", "sample_signal",
]
