"""Critical birth-death chain laboratory.

Exact simulation of a birth-death model of competing types (per-capita
birth rate lambda, unit death rate, lone type immortal), a deterministic
renewal-equation solver for the return-time distribution with an
independent truncated-ODE oracle, numerical Laplace-transform diagnostics
of its heavy tail, and a reproducible experiment runner.
"""

from .chain import (
    HittingSample,
    ModelSpec,
    TnSample,
    fast_hitting_excursion,
    rates,
    sample_tn,
    simulate_hitting,
)
from .experiments import ExperimentConfig, ResultRecord, report, run
from .laplace import (
    LaplaceEval,
    MomentIntegrals,
    exp_integral_e1,
    laplace_of_increments,
    moment_integrals,
    tail_product,
)
from .population import (
    PersistenceEstimate,
    ReducedPopulation,
    TypePopulation,
    birth_event,
    death_event,
    estimate_persistence,
)
from .renewal import (
    GridFunction,
    OdeTruncation,
    f_prime,
    forcing_g,
    gf_identity_residual,
    kernel_k,
    model_b_cdf,
    model_b_integral_check,
    solve_ode_truncation,
    solve_renewal,
    solve_renewal_refined,
)
from .streams import replicate_rng

__version__ = "0.1.0"
