"""Recursive analytic solutions of the 1D Schrodinger equation for step potentials.

Scattering amplitudes and wave functions of multi-step potentials, the
quasi-bound resonances they support, and bound states of wells obtained from
the resonances of an uplifted model potential.
"""

from .bound import BoundState, NormalizationError, extract_state, localization, solve_model, solve_well
from .expr import ExpressionError, compile_expression
from .oracle import single_barrier_pt, tm_ln_a1, tm_scatter, transfer_matrix
from .profile import (
    DiscretizationRule,
    SmoothPotential,
    StepProfile,
    builtin,
    discretize,
    expression_potential,
    load_potential,
    save_profile,
    uplift_model,
)
from .recursion import (
    LayerCoefficients,
    RecursionPoleError,
    ScatteringResult,
    compute_coefficients,
    continuity_defects,
    cutoff_reflection_at,
    layer_momentum,
    scatter,
    scatter_many,
    transmission,
    wavefunction,
)
from .spectra import Resonance, ResonanceWarning, Spectrum, find_resonances, locate_resonances, sweep

__version__ = "0.1.0"

__all__ = [
    "BoundState",
    "DiscretizationRule",
    "ExpressionError",
    "LayerCoefficients",
    "NormalizationError",
    "RecursionPoleError",
    "Resonance",
    "ResonanceWarning",
    "ScatteringResult",
    "SmoothPotential",
    "Spectrum",
    "StepProfile",
    "builtin",
    "compile_expression",
    "compute_coefficients",
    "continuity_defects",
    "cutoff_reflection_at",
    "discretize",
    "expression_potential",
    "extract_state",
    "find_resonances",
    "layer_momentum",
    "load_potential",
    "localization",
    "locate_resonances",
    "save_profile",
    "scatter",
    "scatter_many",
    "single_barrier_pt",
    "solve_model",
    "solve_well",
    "sweep",
    "tm_ln_a1",
    "tm_scatter",
    "transfer_matrix",
    "transmission",
    "uplift_model",
    "wavefunction",
]
