"""Two-subset recurrence intervals for measuring Markov chain mixing.

A chain alternates between two disjoint subsets ``A`` and ``B``; the mean
length of an ``A -> B -> A`` cycle measures how fast it moves across the
state space, and minimising it tunes the Metropolis-Hastings step length.
"""
__version__ = "0.1.0"

from .errors import (ConfigError, DomainError, NoRecurrenceError, RecurmixError,  # noqa: E402
                     TruncationError)
from .targets import (Cauchy, Cycle, MultiNormal, ScaleProblem, SubsetPair,  # noqa: E402
                      TargetDensity, TwoMode, independence_expected_M, make_target,
                      subset_pair, subset_probability)
from .sampler import (ChainConfig, ChainStats, ProposalConfig, cycle_chain,  # noqa: E402
                      independence_chain, run_chain)
from .recurrence import (RecurrenceDetector, RecurrenceInterval, RecurrenceSummary,  # noqa: E402
                         detect, summarize)
from .inference import (covariance_diagnostics, fit_exponential, fit_weibull,  # noqa: E402
                        pi_hat, variance_bounds, variance_curve)
from .tuning import SweepConfig, optimal_sigma, sweep  # noqa: E402
from .config import ExperimentConfig, load_config, parse_config  # noqa: E402
from .estimators import RecurrenceAnalyzer, StepLengthTuner, WeibullIntervalModel  # noqa: E402

__all__ = [
    "__version__",
    "RecurmixError", "ConfigError", "DomainError", "NoRecurrenceError", "TruncationError",
    "TargetDensity", "MultiNormal", "TwoMode", "ScaleProblem", "Cauchy", "Cycle",
    "SubsetPair", "make_target", "subset_pair", "subset_probability", "independence_expected_M",
    "ChainConfig", "ProposalConfig", "ChainStats", "run_chain", "independence_chain", "cycle_chain",
    "RecurrenceDetector", "RecurrenceInterval", "RecurrenceSummary", "detect", "summarize",
    "pi_hat", "variance_bounds", "covariance_diagnostics", "fit_weibull", "fit_exponential",
    "variance_curve",
    "SweepConfig", "sweep", "optimal_sigma",
    "ExperimentConfig", "parse_config", "load_config",
    "RecurrenceAnalyzer", "WeibullIntervalModel", "StepLengthTuner",
]
