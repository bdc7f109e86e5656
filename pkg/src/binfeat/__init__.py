"""Static-analysis feature extraction toolkit and dataset pipeline."""

from .agnostic import (
    PatternSet,
    byte_entropy_histogram,
    byte_histogram,
    extract_agnostic,
    general_features,
    shannon_entropy,
    string_features,
)
from .extract import extract_raw_features
from .records import (
    FILE_TYPES,
    FileMetadataRecord,
    GeneralFeatures,
    RawFeatures,
    RecordError,
    RecordInvariantError,
    RecordKeyError,
    RecordSyntaxError,
    StringFeatures,
    parse_record,
    serialize_record,
    validate_record,
)
from .similarity import NullDigestError, digest, distance, is_near_duplicate
from .vectorize import (
    AGNOSTIC_WIDTH,
    TOTAL_WIDTH,
    FeatureLayout,
    MatrixFormatError,
    hash_embed,
    read_matrix,
    truncate_agnostic,
    vectorize,
    write_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AGNOSTIC_WIDTH",
    "FILE_TYPES",
    "FeatureLayout",
    "FileMetadataRecord",
    "GeneralFeatures",
    "MatrixFormatError",
    "NullDigestError",
    "PatternSet",
    "RawFeatures",
    "RecordError",
    "RecordInvariantError",
    "RecordKeyError",
    "RecordSyntaxError",
    "StringFeatures",
    "TOTAL_WIDTH",
    "byte_entropy_histogram",
    "byte_histogram",
    "digest",
    "distance",
    "extract_agnostic",
    "extract_raw_features",
    "general_features",
    "hash_embed",
    "is_near_duplicate",
    "parse_record",
    "read_matrix",
    "serialize_record",
    "shannon_entropy",
    "string_features",
    "truncate_agnostic",
    "validate_record",
    "vectorize",
    "write_matrix",
]
