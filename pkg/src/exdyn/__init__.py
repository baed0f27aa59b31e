"""Exact engine and Monte Carlo simulator for mass-exchange models.

Highlights:

* :mod:`exdyn.dist` - exact splitting and stationary laws;
* :mod:`exdyn.statespace` - mass sectors, exchange/addition maps, lumping;
* :mod:`exdyn.algebra` - ladder-operator triples and commutators;
* :mod:`exdyn.models` - the four model families and their operators;
* :mod:`exdyn.verify` - certificate-producing identity checks;
* :mod:`exdyn.simulate` - Gillespie dynamics on graphs and dual predictions;
* :mod:`exdyn.cli` - batch runner (``exdyn --config ...``).
"""

from .dist import Pmf, beta_binomial_pmf, binomial_pmf, discrete_gamma_pmf, hypergeometric_pmf, sample
from .models import (
    DualityFunction,
    ImmediateExchange,
    ModelSpec,
    PoissonExchange,
    RandomWalkExchange,
    RestrictedExchange,
    duality_function,
    generator,
    redistribution_operator,
    sip_generator,
    thermalize,
    transition_operator,
)
from .simulate import Graph, dual_moment_estimate, run, stationary_histogram, step
from .statespace import (
    Measure,
    Sector,
    SectorOperator,
    Space,
    addition_map,
    exchange_map,
    lift_function,
    lump_operator,
    mu_canonical_inverse,
)
from .verify import (
    CheckReport,
    check_detailed_balance,
    check_exchange_commutation,
    check_projection_identity,
    check_self_duality,
    check_symmetry,
    verify_all,
)

__all__ = [
    "CheckReport",
    "DualityFunction",
    "Graph",
    "ImmediateExchange",
    "Measure",
    "ModelSpec",
    "Pmf",
    "PoissonExchange",
    "RandomWalkExchange",
    "RestrictedExchange",
    "Sector",
    "SectorOperator",
    "Space",
    "addition_map",
    "beta_binomial_pmf",
    "binomial_pmf",
    "check_detailed_balance",
    "check_exchange_commutation",
    "check_projection_identity",
    "check_self_duality",
    "check_symmetry",
    "discrete_gamma_pmf",
    "dual_moment_estimate",
    "duality_function",
    "exchange_map",
    "generator",
    "hypergeometric_pmf",
    "lift_function",
    "lump_operator",
    "mu_canonical_inverse",
    "redistribution_operator",
    "run",
    "sample",
    "sip_generator",
    "stationary_histogram",
    "step",
    "thermalize",
    "transition_operator",
    "verify_all",
]

__version__ = "0.1.0"
