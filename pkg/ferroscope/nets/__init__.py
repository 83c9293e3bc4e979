"""
Networks of the pipeline: class catalogs, configuration presets, builders
and frozen inference helpers.
"""

from .builders import FEATURE_NODE, LOGIT_NODE, build_classifier, build_discriminator, build_generator, layer_census
from .catalog import CATALOGS, ClassCatalog, catalog_by_name, painted_steel, strip_steel
from .config import NetConfig, Preset
from .inference import (
    ClassProbs,
    FeatureVector,
    classify,
    classify_array,
    classify_batch,
    extract_feature,
    extract_features,
    feature_array,
    generate,
    generate_array,
    generate_batch,
    stack_tiles,
)

__all__ = [
    "CATALOGS",
    "ClassCatalog",
    "ClassProbs",
    "FEATURE_NODE",
    "FeatureVector",
    "LOGIT_NODE",
    "NetConfig",
    "Preset",
    "build_classifier",
    "build_discriminator",
    "build_generator",
    "catalog_by_name",
    "classify",
    "classify_array",
    "classify_batch",
    "extract_feature",
    "extract_features",
    "feature_array",
    "generate",
    "generate_array",
    "generate_batch",
    "layer_census",
    "painted_steel",
    "stack_tiles",
    "strip_steel",
]
