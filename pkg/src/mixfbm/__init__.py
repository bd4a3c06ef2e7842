"""Nonparametric estimation of a linear multiplier under mixed fractional Brownian noise."""

from .errors import (ConfigError, GridMismatchError, KernelSolveError, MixFBMError, SamplerError,
                     UnsupportedHurstError)
from .estimator import (EstimatorSpec, KernelSpec, QEstimate, RiskSummary, bandwidth, estimate_q_path,
                        kernel_eval, sup_risk)
from .fredholm import GHKernelFamily, build_family, energy_residual, solve_g
from .harness import (Experiment, ExperimentConfig, RateReport, fit_loglog_slope, run_rate_experiment,
                      run_replication)
from .paths import (GridPath, HurstIndex, MixedSampler, Role, SamplerConfig, TimeGrid, fbm_covariance,
                    mixed_covariance, sample_mixed_path)
from .sde import ModelSpec, ThetaSpec, lemma31_report, limit_ode, simulate_X
from .transform import QKind, QPath, log_likelihood, martingale_from_noise, q_star, transform_to_Z

__version__ = "0.1.0"
