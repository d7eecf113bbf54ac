"""High-SNR eigenvalue analysis of RIS-aided MIMO downlinks."""

__version__ = "0.1.0"

from ._validation import (  # noqa: E402
    ConvergenceError,
    DomainError,
    OptimizerError,
    SingularChannelError,
)
from .channel_model import ChannelSet, PhaseConfig, build_scenario_channels, compose_effective  # noqa: E402
from .experiment_runner import ScenarioConfig, load_config, preset, run_experiment  # noqa: E402
from .gram_decomposition import assemble_q, decompose, decompose_channels  # noqa: E402
from .phase_optimizer import (  # noqa: E402
    GeoMeanPhaseOptimizer,
    HarMeanPhaseOptimizer,
    optimize_geo_mean,
    optimize_har_mean,
)
from .rate_evaluation import PowerPoint, dpc_sum_capacity, zf_sum_rate  # noqa: E402
from .spectral_metrics import dpc_offset, gram_spectrum, lin_offset  # noqa: E402
from .waterfilling import rank_constrained_waterfill, waterfill  # noqa: E402

__all__ = [
    "ChannelSet",
    "ScenarioConfig",
    "build_scenario_channels",
    "load_config",
    "preset",
    "run_experiment",
    "ConvergenceError",
    "DomainError",
    "GeoMeanPhaseOptimizer",
    "HarMeanPhaseOptimizer",
    "OptimizerError",
    "PhaseConfig",
    "PowerPoint",
    "SingularChannelError",
    "assemble_q",
    "compose_effective",
    "decompose",
    "decompose_channels",
    "dpc_offset",
    "dpc_sum_capacity",
    "gram_spectrum",
    "lin_offset",
    "optimize_geo_mean",
    "optimize_har_mean",
    "rank_constrained_waterfill",
    "waterfill",
    "zf_sum_rate",
]
