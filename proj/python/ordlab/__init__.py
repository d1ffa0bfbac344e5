"""Python interface to the ordlab C++ core."""

from ._ordlab import (
    Dataset,
    IoError,
    ValidationError,
    apply_plan,
    apply_to_dataset,
    augment,
    dpi_check,
    entropy,
    eval_exact_match,
    generate,
    greedy_order,
    identity_plan,
    inverse_plan,
    mi_exact,
    restore_output,
    reverse_plan,
    run_experiment,
    strip_augmented,
    train,
    verify,
)

__all__ = [
    "Dataset",
    "IoError",
    "ValidationError",
    "apply_plan",
    "apply_to_dataset",
    "augment",
    "dpi_check",
    "entropy",
    "eval_exact_match",
    "generate",
    "greedy_order",
    "identity_plan",
    "inverse_plan",
    "mi_exact",
    "restore_output",
    "reverse_plan",
    "run_experiment",
    "strip_augmented",
    "train",
    "verify",
]
