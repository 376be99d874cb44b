"""Python bindings for the sopbound C++ core."""

from ._core import (
    ConfigError,
    DimensionError,
    DomainError,
    Error,
    NumericalError,
    ProjectionBounds,
    __version__,
    chernoff_relation,
    count_eigs,
    davis_kahan,
    direct_eigs,
    empirical_sop,
    experiment_kinds,
    f_margin,
    jl_analytic_bound,
    max_chain,
    necessity_of,
    possibility_of,
    proj,
    proj_matrix,
    run_experiment,
    schema_text,
    value_iteration,
    volume_of,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
