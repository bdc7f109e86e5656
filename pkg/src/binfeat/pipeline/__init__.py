"""Dataset construction pipeline: ingestion, labeling, selection, splits."""

from .labeling import (
    LABEL_BENIGN,
    LABEL_INDETERMINATE,
    LABEL_INDETERMINATE_PENDING,
    LABEL_MALICIOUS,
    AVVendorGraph,
    VTReport,
    is_challenge,
    label_file,
)
from .schedule import ACTION_FETCH, ACTION_RESCAN, Action, TrackedFile, run_schedule
from .selection import (
    NUM_WEEKS,
    TRAIN_WEEKS,
    Candidate,
    OutOfWindowError,
    SelectionConfig,
    SelectionResult,
    build_challenge_exclusion,
    select_week,
    split_of_week,
    week_of,
)
from .store import RecordStore, ReportStore, StoreError, demographics, load_split
from .vtclient import (
    CredentialError,
    NotFoundError,
    QuotaExceededError,
    RateLimiter,
    TransportError,
    VTClient,
    VTError,
)

__all__ = [
    "ACTION_FETCH",
    "ACTION_RESCAN",
    "Action",
    "AVVendorGraph",
    "Candidate",
    "CredentialError",
    "LABEL_BENIGN",
    "LABEL_INDETERMINATE",
    "LABEL_INDETERMINATE_PENDING",
    "LABEL_MALICIOUS",
    "NotFoundError",
    "NUM_WEEKS",
    "OutOfWindowError",
    "QuotaExceededError",
    "RateLimiter",
    "RecordStore",
    "ReportStore",
    "SelectionConfig",
    "SelectionResult",
    "StoreError",
    "TRAIN_WEEKS",
    "TrackedFile",
    "TransportError",
    "VTClient",
    "VTError",
    "VTReport",
    "build_challenge_exclusion",
    "demographics",
    "is_challenge",
    "label_file",
    "load_split",
    "run_schedule",
    "select_week",
    "split_of_week",
    "week_of",
]
