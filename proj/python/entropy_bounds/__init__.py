"""Certified convex-relaxation bounds for maximum-entropy sampling and
0/1 D-optimal design."""

from ._entropy_bounds import (  # noqa: F401
    NotInDomain,
    NotPositiveDefinite,
    exhaustive_mesp,
    frank_wolfe_linx,
    gen_mesp_rank,
    gen_random_dopt,
    local_search_mesp,
    logdet_spd,
    project_capped_simplex,
    project_psd,
    prox_neg_logdet,
    solve_bqp,
    solve_ddfact,
    solve_linx,
    solve_nat,
)

__all__ = [
    "NotInDomain",
    "NotPositiveDefinite",
    "exhaustive_mesp",
    "frank_wolfe_linx",
    "gen_mesp_rank",
    "gen_random_dopt",
    "local_search_mesp",
    "logdet_spd",
    "project_capped_simplex",
    "project_psd",
    "prox_neg_logdet",
    "solve_bqp",
    "solve_ddfact",
    "solve_linx",
    "solve_nat",
]
