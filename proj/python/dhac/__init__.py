"""Detection of dishonest approximate computing (residue and forward-backward checks)."""

from ._dhac import (  # noqa: F401
    Backend,
    Error,
    Graph,
    add16,
    auto_sites,
    bench,
    builtin_program,
    evaluate,
    evaluate_mod,
    fbc_check,
    mul16,
    rcc_check,
    sample_inputs,
    trunc_mantissa,
)
