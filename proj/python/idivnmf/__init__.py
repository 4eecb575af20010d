"""I-divergence nonnegative matrix factorization by alternating minimization."""

from ._core import (
    DegenerateInputError,
    DimensionError,
    DomainError,
    GradientUndefinedError,
    UnderflowError,
    aux_gain_identities,
    best_p_tensor,
    best_q_pair,
    check_pythagorean_p,
    check_pythagorean_q,
    collapse,
    grad,
    hellinger,
    i_div,
    i_div_scalar,
    init_deterministic,
    init_random,
    kkt_report,
    normalize,
    solve,
    step_sequential,
    step_simultaneous,
    step_unnormalized,
    tensor_from_pair,
)

__all__ = [
    "DegenerateInputError",
    "DimensionError",
    "DomainError",
    "GradientUndefinedError",
    "UnderflowError",
    "aux_gain_identities",
    "best_p_tensor",
    "best_q_pair",
    "check_pythagorean_p",
    "check_pythagorean_q",
    "collapse",
    "grad",
    "hellinger",
    "i_div",
    "i_div_scalar",
    "init_deterministic",
    "init_random",
    "kkt_report",
    "normalize",
    "solve",
    "step_sequential",
    "step_simultaneous",
    "step_unnormalized",
    "tensor_from_pair",
]
