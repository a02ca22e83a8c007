"""beamalign: mmWave beam-alignment training, bounds, and Monte Carlo sweeps."""

__version__ = "0.1.0"

from .arrays import (
    AngleInterval,
    Beamformer,
    UniformLinearArray,
    beam_gain,
    ideal_gain,
    steering_vector,
    synthesize_deactivation,
)
from .channel import (
    ChannelRealization,
    LosRicianModel,
    NlosMultipathModel,
    PropagationPath,
    SinglePathModel,
    SnrSpec,
    calibrate_snr,
    los_rician,
    nlos_multipath,
    single_path,
)
from .codebook import HierarchicalCodebook, build_hierarchical_codebook
from .ldp import (
    BoundReport,
    IdealSearchConfig,
    LevelGainProfile,
    asymptotic_exponents,
    bound_sweep,
    dominant_level,
    joint_rate_function,
    ldp_approximation,
    lower_bound,
    overall_miss,
    rate_I1,
    rate_I2,
    upper_bound,
)
from .specfun import (
    DoublyNoncentralF,
    NoncentralChiSq,
    chisq_cdf,
    chisq_sample,
    dnc_f_cdf,
    pairwise_error_prob,
)
from .training import (
    InfeasibleBudgetError,
    MeasurementStat,
    SearchOutcome,
    TrainingConfig,
    effective_channel,
    exhaustive_search,
    hierarchical_search,
    measure_statistic,
    spectral_efficiency,
)

__all__ = [name for name in dir() if not name.startswith("_")]
