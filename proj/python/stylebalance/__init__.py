"""Class-balancing style augmentation for box-annotated detection datasets."""

from ._core import (
    BoundingBox,
    Error,
    ImageRecord,
    adversarial_loss,
    apply_haze,
    classify_style,
    color_transfer,
    default_domains,
    export,
    from_opponent,
    generate,
    ingest,
    load_dataset,
    parse_voc,
    plan,
    run_plan,
    serialize_voc,
    split_sizes,
    to_opponent,
    verify_balance,
)

__all__ = [
    "BoundingBox",
    "Error",
    "ImageRecord",
    "adversarial_loss",
    "apply_haze",
    "classify_style",
    "color_transfer",
    "default_domains",
    "export",
    "from_opponent",
    "generate",
    "ingest",
    "load_dataset",
    "parse_voc",
    "plan",
    "run_plan",
    "serialize_voc",
    "split_sizes",
    "to_opponent",
    "verify_balance",
]
