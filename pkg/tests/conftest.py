import hashlib
import random

import pytest

from binfeat.records import FileMetadataRecord, RawFeatures
from binfeat.agnostic import default_patterns
from binfeat.extract import extract_raw_features


def fake_hashes(seed: str) -> dict:
    """Deterministic, well-formed hex digests for synthetic records."""
    base = hashlib.sha256(seed.encode()).hexdigest()
    return {"md5": base[:32], "sha1": base[:40], "sha256": base}


def make_raw(content: bytes) -> RawFeatures:
    return extract_raw_features(content)


def make_record(
    seed: str = "x",
    content: bytes = b"some file content with several strings inside it",
    label: int = 0,
    file_type: str = "Win32",
    family: str | None = None,
    tlsh: str | None = None,
    **overrides,
) -> FileMetadataRecord:
    fields = dict(
        tlsh=tlsh,
        first_submission_date=1_700_000_000,
        last_analysis_date=1_703_000_000,
        detection_ratio="0/70" if label == 0 else "55/70",
        label=label,
        file_type=file_type,
        family=family,
        family_confidence=0.961 if family else None,
        behavior=(),
        file_property=(),
        packer=(),
        exploit=(),
        group=(),
        raw=make_raw(content),
    )
    fields.update(overrides)
    return FileMetadataRecord(**fake_hashes(seed), **fields)


# One line per acceptance criterion, printed after the run so the gate
# status is readable straight from the log regardless of output capture.
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance gate")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def patterns():
    return default_patterns()


@pytest.fixture()
def rng():
    return random.Random(1234)
