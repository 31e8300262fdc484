"""Numerical calculus package for g2lab."""

from .core_space import (
    Measure,
    ReversibleGenerator,
    StateSpace,
    build_chain,
    build_weighted_grid,
    dirichlet_energy,
    random_chain,
    read_generator,
    write_generator,
)
from .gamma_calculus import (
    CurvatureBound,
    QuadraticFormPair,
    curvature_at,
    curvature_global,
    gamma,
    gamma2,
    gamma2_weak,
    h_operator,
)
from .reports import REPORT_COLUMNS, CheckReport
from .semigroup import SpectralFactorization, factorize, heat_apply, mollify
from .transport import CostFunction, DiscreteMeasure, TransportPlan, transport_cost_lp, wasserstein_1d

__all__ = [
    'Measure',
    'ReversibleGenerator',
    'StateSpace',
    'build_chain',
    'build_weighted_grid',
    'dirichlet_energy',
    'random_chain',
    'read_generator',
    'write_generator',
    'CurvatureBound',
    'QuadraticFormPair',
    'curvature_at',
    'curvature_global',
    'gamma',
    'gamma2',
    'gamma2_weak',
    'h_operator',
    'REPORT_COLUMNS',
    'CheckReport',
    'SpectralFactorization',
    'factorize',
    'heat_apply',
    'mollify',
    'CostFunction',
    'DiscreteMeasure',
    'TransportPlan',
    'transport_cost_lp',
    'wasserstein_1d',
]
