"""Order-restricted many-to-one comparisons of dose groups with a control.

Dunnett and Williams max-T tests with multivariate t adjusted p-values, two
closed testing procedures (subset Williams tests, pairwise contrasts), and a
Monte Carlo harness for per-pair power.
"""

from .contrasts import (ContrastKind, ContrastMatrix, Design, contrast_correlation,
                        dunnett_contrasts, pairwise_contrast, sub_williams_contrasts,
                        williams_contrasts)
from .ctp import (ClosurePlan, CtpMethod, CtpReport, build_closure_plan, closure_adjust,
                  ctp_cp, ctp_cw)
from .errors import (CalibrationError, DataError, DecompositionError, DegenerateDataError,
                     DomainError, DoseCtpError)
from .mct import (ContrastTestResult, GroupSummary, MctResult, ModelFit, contrast_statistics,
                  dunnett_test, fit_groups, fit_oneway, max_t_test, williams_test)
from .mvt import (CorrelationMatrix, MvtProbResult, mvt_cdf, mvt_quantile_1sided, t_cdf,
                  t_quantile, t_sf)
from .sim import (PowerEntry, PowerTable, ShapeSpec, SimConfig, calibrate_delta,
                  generate_dataset, load_config, run_power_study, table1_shapes)

__version__ = "0.1.0"
