"""Triangular Toeplitz inversion in the QTT format and fractional Volterra solves."""

from ._core import (
    InvalidArgument,
    NumericalError,
    QttvError,
    RankLimitExceeded,
    SingularOperator,
    TTVector,
    analytic_constant_forcing,
    causal_convolve,
    effective_rank,
    invert,
    laplace_discrete,
    laplace_exact_powerforcing,
    methods,
    mittag_leffler,
    quad_weight,
    run_cli,
    scheme_weight,
    solve,
    system_generator,
)

__version__ = "0.1.0"

__all__ = [
    "InvalidArgument",
    "NumericalError",
    "QttvError",
    "RankLimitExceeded",
    "SingularOperator",
    "TTVector",
    "analytic_constant_forcing",
    "causal_convolve",
    "effective_rank",
    "invert",
    "laplace_discrete",
    "laplace_exact_powerforcing",
    "methods",
    "mittag_leffler",
    "quad_weight",
    "run_cli",
    "scheme_weight",
    "solve",
    "system_generator",
]
