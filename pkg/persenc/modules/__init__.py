"""Persistence modules over finite posets and the encoded kernel / image / cokernel pipeline."""

from persenc.modules.persistence import (
    CounitReport,
    Morphism,
    PfdModule,
    cokernel,
    counit_check,
    direct_sum,
    hom_space,
    image,
    interval_module,
    kernel,
    pullback,
    structure_map,
    upset_module,
    validate_module,
    validate_morphism,
)
from persenc.modules.pipeline import (
    EncodedModule,
    PhiSpec,
    PipelineResult,
    abelian_pipeline,
    encode_interval_module,
    encoded_direct_sum,
)

__all__ = [
    "CounitReport",
    "EncodedModule",
    "Morphism",
    "PfdModule",
    "PhiSpec",
    "PipelineResult",
    "abelian_pipeline",
    "cokernel",
    "counit_check",
    "direct_sum",
    "encode_interval_module",
    "encoded_direct_sum",
    "hom_space",
    "image",
    "interval_module",
    "kernel",
    "pullback",
    "structure_map",
    "upset_module",
    "validate_module",
    "validate_morphism",
]
