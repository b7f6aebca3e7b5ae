"""Local probabilities of arithmetic compound renewal processes.

Exact convolution oracles, large-deviation rate functions (first and second
deviation functions), saddle-point prefactors, and the local-theorem
approximations they assemble into, for integer-lattice jump distributions.
"""

from .errors import ConditionError, CrpError, DivergenceError, DomainError, ModelError
from .lattice import (
    CrpModel,
    GeometricTail,
    JumpDistribution,
    cgf,
    lambda_plus,
    load_model,
    model_from_dict,
    model_to_dict,
    moments,
    survival,
    validate_arithmetic,
)
from .deviation import clt_local, lambda_fn, minimize_ray, solve_saddle
from .second_deviation import A_of_mu, A_prime_of_mu, D_two_arg, domain, rate_point
from .asymptotics import (
    I_alpha,
    approx_clt_zone,
    approx_crp_pmf,
    approx_renewal,
    c_h,
    central_zone_check,
)
from .oracle import (
    RenewalTable,
    SparsePmf,
    crp_pmf_exact,
    renewal_measure_exact,
    simulate,
    step_pmf,
    tilt_distribution,
)

__version__ = "0.1.0"
