"""Bayesian survival analysis with neutral-to-the-right priors.

The posterior of the cumulative hazard is computed in closed form where the
prior family allows it, sampled exactly or by truncated jump simulation, and
compared against the Aalen-Nelson estimator and its limiting behaviour.
"""

from .data import (CensoredObservation, Dataset, GenerativeModel, RiskSummary,
                   TiedEventsWarning, dataset_io, empirical_Q, generate_dataset, read_csv,
                   risk_summary, write_csv)
from .estimator import AalenNelsonEstimator, NTRSurvival
from .estimators import (StepEstimate, aalen_nelson, j_alpha, kaplan_meier,
                         product_limit_survival, u_zero)
from .exceptions import ConfigError, DataError, NTRError, NumericalError, QuadratureError
from .experiments import (CoverageConfig, StudyResult, emit_report, run_bvm_diagnostic,
                          run_coverage_study, run_rate_study)
from .posterior import (BetaExact, BetaMixture, JumpLaw, PosteriorLaw, continuous_part_moments,
                        jump_moment_Ck, jump_raw_moment, posterior_fixed_moments,
                        posterior_update)
from .priors import (AlphaFamily, BetaProcess, CustomPrior, DirichletInduced, GammaProcess,
                     PriorSpec, check_conditions, parse_prior, prior_moments)
from .sampling import (HazardPath, SamplerConfig, credible_interval, sample_chf_path,
                       sample_chf_paths, sample_chf_values, sample_continuous_part,
                       sample_fixed_part, sample_jump)

__version__ = "0.1.0"
