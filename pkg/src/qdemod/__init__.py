"""qdemod: quantum-limited temporal-phase and instantaneous-frequency estimation.

Desk-scale reproduction of quantum-limited angle demodulation: Wiener-Hopf
loop synthesis, homodyne phase-locked-loop Monte Carlo with coherent and
squeezed light, closed-form SNR/threshold limits, sensing parameter maps,
and exact small-Fock-space oracles for canonical phase.
"""

__version__ = "0.1.0"

from .grids import (SampledEnvelope, SpectralDensity, TimeGrid,
                    differentiator_kernel, estimate_psd, reconstruct, sinc_kernel)
from .signals import (MessageSpec, ModulationScheme, carson_bandwidth,
                      message_psd, modulate, phase_response, sample_message)
from .qnoise import (NoiseModel, PhysicalConstants, QuadratureRecord,
                     lambda_parameter, photon_budget, sample_squeezed,
                     sample_vacuum, squeezed_covariance_psds)
from .wiener import (FilterKernel, LoopDesign, closed_loop_filter, design_loop,
                     linearized_map_estimate, loop_and_postloop,
                     nonlinear_map_fixed_point, optimum_filter, spectral_factorize)
from .pll import (CellResult, PllConfig, TrialResult, cycle_slip_count,
                  homodyne_output, monte_carlo_sweep, run_cell, run_trial)
from . import limits
from . import fock
from . import sensing
from .cli import cli_main

__all__ = [
    "TimeGrid", "SampledEnvelope", "SpectralDensity", "sinc_kernel",
    "differentiator_kernel", "reconstruct", "estimate_psd",
    "MessageSpec", "ModulationScheme", "message_psd", "sample_message",
    "phase_response", "modulate", "carson_bandwidth",
    "PhysicalConstants", "NoiseModel", "QuadratureRecord", "sample_vacuum",
    "sample_squeezed", "squeezed_covariance_psds", "lambda_parameter",
    "photon_budget",
    "FilterKernel", "LoopDesign", "optimum_filter", "spectral_factorize",
    "closed_loop_filter", "loop_and_postloop", "design_loop",
    "linearized_map_estimate", "nonlinear_map_fixed_point",
    "PllConfig", "TrialResult", "CellResult", "homodyne_output", "run_trial",
    "run_cell", "monte_carlo_sweep", "cycle_slip_count",
    "limits", "fock", "sensing", "cli_main",
]
