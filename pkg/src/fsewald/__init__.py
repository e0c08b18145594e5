"""Free-space spectral Ewald summation of Stokes potentials.

Sums of stokeslets, stresslets and rotlets over N point sources are split
into a short-range part summed with cell lists and a smooth part evaluated
with FFTs on a grid, using truncated Green's functions for the aperiodic
convolution.
"""
import os

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old and numba warns about it on every launch
    os.environ["NUMBA_THREADING_LAYER"] = "omp"

from .core import (KernelDomainError, KernelKind, ParameterError, SourceSystem, direct_sum,
                   eval_kernel, rms_error, self_interaction, stresslet_strengths)
from .realspace import CellList, build_cell_list, eval_real_kernel, real_space_sum
from .greens import (GreenKind, Grid, MollifiedGreen, bhat_R, freespace_solve, hhat_R,
                     load_green, precompute_mollified_green, save_green)
from .spectral import (EwaldConfig, fourier_sum, kspace_scale, make_config, spread,
                       spread_naive, total_sum)
from .estimates import (ErrorBudget, fourier_error_estimate, gridding_error_estimate,
                        real_error_estimate, select_parameters, suggest_xi)
from .estimator import DirectSummation, SpectralEwaldSummation

__version__ = "0.1.0"

__all__ = [
    "KernelKind", "SourceSystem", "KernelDomainError", "ParameterError", "eval_kernel",
    "direct_sum", "self_interaction", "rms_error", "stresslet_strengths",
    "CellList", "build_cell_list", "eval_real_kernel", "real_space_sum",
    "GreenKind", "Grid", "MollifiedGreen", "hhat_R", "bhat_R", "precompute_mollified_green",
    "freespace_solve", "save_green", "load_green",
    "EwaldConfig", "make_config", "spread", "spread_naive", "kspace_scale", "fourier_sum",
    "total_sum",
    "ErrorBudget", "fourier_error_estimate", "gridding_error_estimate", "real_error_estimate", "select_parameters",
    "suggest_xi",
    "SpectralEwaldSummation", "DirectSummation",
]
