"""Python access to the seqslice library: corpus generation, the slicing
oracle, tree edit distance, metrics, trained-model slicing and the CLI."""

from ._core import (
    SeqsliceError,
    Slicer,
    acc_d,
    backward_slice,
    exact_match,
    generate_program,
    make_instance,
    prefix_tsed,
    random_instance,
    run_cli,
    tree_edit_distance,
    tsed_metric,
)

__all__ = [
    "SeqsliceError",
    "Slicer",
    "acc_d",
    "backward_slice",
    "exact_match",
    "generate_program",
    "make_instance",
    "prefix_tsed",
    "random_instance",
    "run_cli",
    "tree_edit_distance",
    "tsed_metric",
]
