"""Filtered Lie and corrected Lie splitting for the semilinear wave equation on the 3-torus."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402,F401
    SobolevSpec,
    SpectralField,
    TorusGrid,
    apply_multiplier,
    lebesgue_norm,
    lowpass,
    sobolev_noise,
    sobolev_norm,
    to_physical,
    to_spectral,
)
from .propagator import State, half_wave, phi2_apply, s_map, wave_group  # noqa: E402,F401
from .dynamics import (  # noqa: E402,F401
    BlowUpError,
    ConfigError,
    ModelParams,
    SchemeConfig,
    corrected_lie_step,
    energy,
    evolve,
    g_apply,
    h_apply,
    lie_step,
    strang_reference_step,
)
from .diagnostics import (  # noqa: E402,F401
    ConvergenceReport,
    PairNormSpec,
    SpacetimeNormSpec,
    endpoint_ratio,
    fit_order,
    pair_norm,
    spacetime_norm,
    strichartz_ratio,
)
