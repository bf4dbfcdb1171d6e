"""oamfso: OAM free-space-optics turbulence simulation and channel statistics.

Pipeline: synthesize Laguerre-Gauss modes (field_grid), build Kolmogorov
phase screens (turbulence), run split-step Monte Carlo campaigns
(propagation), fit generalized-gamma fading models (ggd), and evaluate link
metrics for SISO (metrics), MRC diversity (mimo), and space-time coded (stc)
configurations.  The cli module ties the stages together.
"""

__version__ = "0.1.0"

from .field_grid import (
    ComplexField,
    GridSpec,
    GridTooSmallError,
    LGModeSpec,
    ModeSet,
    crosstalk_irradiance,
    lg_field,
    overlap,
    total_power,
)
from .turbulence import (
    PhaseScreen,
    Regime,
    TurbulenceSpec,
    classify_regime,
    generate_phase_screen,
    rytov_variance,
    spectrum,
)
from .propagation import (
    ChannelConfig,
    ChannelRealization,
    IrradianceSampleSet,
    RealizationStream,
    angular_spectrum_step,
    config_digest,
    propagate_realization,
    read_store,
    run_monte_carlo,
    write_store,
)
from .ggd import (
    DegenerateSamplesError,
    FitReport,
    GgdParams,
    cdf,
    correlation_coefficient,
    fit_ml,
    laplace_transform,
    moment,
    mse_fit,
    pdf,
)
from .metrics import (
    SnrModel,
    average_ber,
    ergodic_capacity,
    outage_probability,
    snr_cdf,
    snr_pdf,
)
from .mimo import DiversityConfig, diversity_report, fit_combined, mrc_combined_envelope
from .stc import (
    CodeKind,
    CodeSpec,
    Codebook,
    Codeword,
    PepModel,
    alamouti_encode,
    build_codebook,
    codeword_eigenvalues,
    gl_encode,
    ml_decode,
    pep_orthogonal,
    simulate_ber,
    union_bound_ber,
)
