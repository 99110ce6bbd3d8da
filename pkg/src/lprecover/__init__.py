"""Sparse recovery by l^p quasinorm minimization (0 < p <= 1)."""
__version__ = "0.1.0"

from .certify import (Certificate, IoConstants, certify_recovery, check_condition_P,  # noqa: E402
                      constant_c1, constant_c2, constant_cp, constant_cpq, io_constants, lq_alpha,
                      sparsity_transfer, threshold_f, threshold_g)
from .decode import (AffineProjector, SolveOptions, SolveReport, decode_irls,  # noqa: E402
                     decode_l0_oracle, decode_lp, decode_lp_eps, project_affine)
from .ensembles import (MeasurementMatrix, gen_gaussian, gen_mixed_signal,  # noqa: E402
                        gen_powerlaw_signal, gen_sparse_signal, gen_uniform_sphere, read_lprm,
                        write_lprm)
from .errors import (ConditionNotSatisfiedError, DivergenceError, LpRecoverError,  # noqa: E402
                     NumericalError, ProfileTooShortError, SingularProjectionError,
                     TooLargeForExhaustiveError)
from .metrics import best_s_term_error, quasinorm, snr_db  # noqa: E402
from .rip import RipEstimate, rip_delta_exact, rip_delta_mc, rip_profile  # noqa: E402
