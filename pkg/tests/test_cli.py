import hashlib
import json

import numpy as np
import pytest
from click.testing import CliRunner

from binfeat.cli import main
from binfeat.pipeline import RecordStore, ReportStore, VTReport
from binfeat.records import parse_record
from binfeat.vectorize import TOTAL_WIDTH, read_matrix
from conftest import make_record
from peemit import EmitSection, EmitSpec, build_pe


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def sample_files(tmp_path):
    pe = tmp_path / "sample.exe"
    pe.write_bytes(
        build_pe(
            EmitSpec(
                sections=[EmitSection(b".text", bytes(range(256)) * 8)],
                imports={b"KERNEL32.dll": [b"CloseHandle"]},
            )
        )
    )
    text = tmp_path / "plain.txt"
    text.write_bytes(b"http://example.com and some readable text " * 30)
    return [str(pe), str(text)]


def test_extract_produces_one_line_per_file(runner, sample_files):
    result = runner.invoke(main, ["extract", *sample_files])
    assert result.exit_code == 0, result.output
    lines = [json.loads(l) for l in result.output.splitlines() if l.strip()]
    assert len(lines) == 2
    assert sum(lines[0]["histogram"]) == len(open(sample_files[0], "rb").read())
    assert lines[0]["imports"] == {"KERNEL32.dll": ["CloseHandle"]}
    assert lines[0]["section"]["sections"]
    assert lines[1]["section"] == {}  # plain text is not an executable
    assert lines[1]["strings"]["string_counts"].get("url") == 30


def test_extract_threaded_output_order(runner, sample_files, tmp_path):
    single = runner.invoke(main, ["extract", *sample_files, "--threads", "1"])
    multi = runner.invoke(main, ["extract", *sample_files, "--threads", "4"])
    assert single.exit_code == multi.exit_code == 0
    assert single.output == multi.output


def test_extract_then_vectorize(runner, sample_files, tmp_path):
    jsonl = tmp_path / "raw.jsonl"
    matrix = tmp_path / "m.bin"
    res = runner.invoke(main, ["extract", *sample_files, "-o", str(jsonl)])
    assert res.exit_code == 0
    res = runner.invoke(main, ["vectorize", str(jsonl), str(matrix)])
    assert res.exit_code == 0, res.output
    x, y = read_matrix(matrix)
    assert x.shape == (2, TOTAL_WIDTH)
    assert y.shape == (2,)
    assert x[0, 700:].any()  # the executable has format-specific features
    assert not x[1, 696:].any()  # the text file does not


def test_vectorize_idempotent(runner, sample_files, tmp_path):
    jsonl = tmp_path / "raw.jsonl"
    runner.invoke(main, ["extract", *sample_files, "-o", str(jsonl)])
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    runner.invoke(main, ["vectorize", str(jsonl), str(a)])
    runner.invoke(main, ["vectorize", str(jsonl), str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_digest_command(runner, tmp_path):
    big = tmp_path / "big.bin"
    content = bytes((i * 7 + i // 3) % 256 for i in range(4096))
    big.write_bytes(content)
    tiny = tmp_path / "tiny.bin"
    tiny.write_bytes(b"xy")
    result = runner.invoke(main, ["digest", str(big), str(tiny)])
    assert result.exit_code == 0
    rows = [line.split("\t") for line in result.output.splitlines()]
    assert rows[0][0] == hashlib.sha256(content).hexdigest()
    assert rows[0][1].startswith("T1") and len(rows[0][1]) == 72
    assert rows[1][1] == "-"  # too short for a digest


def test_label_command(runner, tmp_path):
    store_dir = tmp_path / "reports"
    store = ReportStore(str(store_dir))
    sha = "a" * 64
    initial = VTReport(sha, 1_700_000_000, 1_700_000_000, {})
    vendors = {
        f"v{i}": {"category": "malicious", "result": "Bad"} for i in range(6)
    }
    rescan = VTReport(sha, 1_700_000_000, 1_710_000_000, vendors)
    store.append(initial, 1_700_000_100)
    store.append(rescan, 1_710_000_100)
    result = runner.invoke(main, ["label", str(store_dir)])
    assert result.exit_code == 0, result.output
    assert result.output.strip() == f"{sha}\tmalicious"


def test_select_command(runner, tmp_path):
    manifest = tmp_path / "candidates.tsv"
    rows = []
    for i in range(30):
        sha = "%064x" % i
        week = 5 if i < 20 else 55
        rows.append(f"{sha}\t{week}\tELF\t{i % 2}\t1000\t-")
    # a planted oversize candidate that must be skipped
    rows.append(("%064x" % 999) + "\t5\tELF\t0\t" + str(200 * 1024 * 1024) + "\t-")
    manifest.write_text("\n".join(rows) + "\n")

    out = tmp_path / "selection.tsv"
    result = runner.invoke(
        main, ["select", str(manifest), "--seed", "7", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    selected = [line.split("\t") for line in out.read_text().splitlines()]
    assert ("%064x" % 999) not in {r[0] for r in selected}
    for sha, week, file_type, label, split_name in selected:
        assert split_name == ("train" if int(week) < 52 else "test")
        assert file_type == "ELF"
    # deterministic re-run
    out2 = tmp_path / "selection2.tsv"
    runner.invoke(main, ["select", str(manifest), "--seed", "7", "-o", str(out2)])
    assert out.read_text() == out2.read_text()


def test_split_and_stats_commands(runner, tmp_path):
    store_dir = tmp_path / "store"
    store = RecordStore(str(store_dir))
    store.add(make_record("one", label=1, file_type="Win32", family="zeus"), 3, "train")
    store.add(make_record("two", label=0, file_type="PDF"), 60, "test")

    result = runner.invoke(main, ["split", str(store_dir), "--split", "train"])
    assert result.exit_code == 0, result.output
    records = [parse_record(l) for l in result.output.splitlines() if l.strip()]
    assert len(records) == 1 and records[0].family == "zeus"

    result = runner.invoke(main, ["split", str(store_dir), "--type", "PE"])
    assert len(result.output.splitlines()) == 1

    result = runner.invoke(main, ["stats", str(store_dir)])
    assert result.exit_code == 0
    stats = json.loads(result.output)
    assert stats["total"] == 2
    assert stats["families"] == {"zeus": 1}


def test_split_rejects_bad_filter(runner, tmp_path):
    store_dir = tmp_path / "store"
    RecordStore(str(store_dir))
    result = runner.invoke(main, ["split", str(store_dir), "--type", "Mach-O"])
    assert result.exit_code != 0


def test_fetch_without_credentials_fails(runner, tmp_path, monkeypatch):
    monkeypatch.delenv("VT_API_KEY", raising=False)
    result = runner.invoke(
        main, ["fetch", "a" * 64, "--store", str(tmp_path / "reports")]
    )
    assert result.exit_code != 0


def test_missing_input_path_fails(runner):
    result = runner.invoke(main, ["extract", "/no/such/file"])
    assert result.exit_code != 0
