"""Phase-noise impact on homodyne and heterodyne OFDM links."""

__version__ = "0.1.0"

from .errors import ConfigError, ContractError, DomainError, NumericalError  # noqa: E402
from .psd import (  # noqa: E402
    PhaseNoisePsd,
    VarianceEstimate,
    VarianceMethod,
    ZeroPoleStage,
    analytic_variance,
    apply_multiplier,
    default_reference_psd,
    integrate_variance,
    psd_eval,
    scale_to_carrier,
)
from .rng import SeedSpec  # noqa: E402
from .synth import (  # noqa: E402
    PhaseNoiseRealization,
    empirical_variance,
    sum_realizations,
    synthesize,
)
from .ofdm import OfdmNumerology, decompose_cpe_ici  # noqa: E402
from .freqplan import (  # noqa: E402
    FrequencyPlan,
    plan_phase_process,
    plan_variance,
    sweep_if,
    variance_reduction_gamma,
)
from .montecarlo import (  # noqa: E402
    ExperimentConfig,
    MetricSeries,
    compare_architectures,
    desk_config,
    run_experiment,
    table1_config,
)
