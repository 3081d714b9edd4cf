import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxgate.decision import FilterDecision, Reason, Verdict
from ctxgate.filters import (
    DEFAULT_MAGIC_TABLE,
    FILTER_IDS,
    FilterConfig,
    OverrideSet,
    apply_overrides,
    average_line_length,
    binary_filter,
    extension_filter,
    gitignore_filter,
    hybrid_filter,
    keyword_density,
    load_gitignore,
    minified_filter,
    no_filter,
    run_filter,
    semantic_filter,
    size_filter,
)
from ctxgate.patterns import PathSpec
from ctxgate.scan import FileRecord, scan_repository
from ctxgate.vfs import LocalFS, ManifestEntry, MemoryFS, MissingContent, VirtualManifest

from conftest import CODE_LINE, CSV_LINE, mem, random_manifest, repeat_to, tail_manifest

MIB = 1_048_576
CFG = FilterConfig()


def rec(fs, path):
    return FileRecord.from_metadata(fs.stat(path))


# -- decision type ----------------------------------------------------------

def test_allowed_decision_has_no_reason():
    with pytest.raises(ValueError):
        FilterDecision(Verdict.ALLOWED, Reason.MINIFIED)
    with pytest.raises(ValueError):
        FilterDecision(Verdict.ALLOWED, Reason.NONE, "size")


# -- no / size / extension --------------------------------------------------

@pytest.mark.parametrize("size", [0, 1, 10 * 2**30])
def test_no_filter_always_allows(size):
    d = no_filter(FileRecord.make("x", size))
    assert d == FilterDecision.allow()


@pytest.mark.parametrize("size,flagged", [(2_097_152, True), (1_048_576, False), (1_048_577, True), (0, False)])
def test_size_filter_strict_inequality(size, flagged):
    d = size_filter(FileRecord.make("f.bin", size), theta=MIB)
    assert d.flagged is flagged
    assert d.bytes_read == 0
    if flagged:
        assert (d.reason, d.gate) == (Reason.SIZE_EXCEEDS_THETA, "size")


@pytest.mark.parametrize("path,flagged", [
    ("weights.pkl", True), ("main.rs", False), ("README", False), ("DATA.CSV", True),
    ("dist/app.min.js", True), ("src/app.js", False), ("bundle.js.map", True), (".pkl", False),
])
def test_extension_filter(path, flagged):
    d = extension_filter(FileRecord.make(path, 10), CFG.extension_blocklist)
    assert d.flagged is flagged
    assert d.bytes_read == 0


def test_config_validation():
    with pytest.raises(ValueError):
        FilterConfig(theta=0)
    with pytest.raises(ValueError):
        FilterConfig(semantic_prefix=0)
    with pytest.raises(ValueError):
        FilterConfig(magic_table=((b"123456789", "too-long"),))
    assert len(DEFAULT_MAGIC_TABLE) == 11
    names = {n for _, n in DEFAULT_MAGIC_TABLE}
    assert {"pickle", "sqlite", "hdf5"} <= names


def test_config_json_roundtrip():
    cfg = FilterConfig(theta=50_000, extension_blocklist={"CSV", ".log"})
    again = FilterConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.extension_blocklist == {"csv", "log"}
    assert FilterConfig.from_dict({"theta": "1MiB"}).theta == MIB
    with pytest.raises(ValueError, match="unknown"):
        FilterConfig.from_dict({"thetta": 3})


# -- binary -----------------------------------------------------------------

@pytest.mark.parametrize("content,flagged", [
    (b"\x89PNG\r\n\x1a\n" + b"\0" * 100, True),
    (b"SQLite format 3\x00" + b"\0" * 100, True),
    (b"\x80\x04\x95\x10\x00", True),
    (b"\x89HDF\r\n\x1a\n", True),
    (b"PK\x03\x04rest", True),
    (b"def foo(): pass\n", False),
    (b"", False),
    (b"GI", False),
])
def test_binary_filter(content, flagged):
    fs = mem({"f": content})
    d = binary_filter(rec(fs, "f"), fs, DEFAULT_MAGIC_TABLE)
    assert d.flagged is flagged
    assert d.bytes_read == min(8, len(content)) == fs.counters.content_bytes_read


def test_binary_unreadable_becomes_flag(tmp_path):
    fs = LocalFS(tmp_path)
    d = binary_filter(FileRecord.make("gone.bin", 10), fs)
    assert (d.verdict, d.reason) == (Verdict.FLAGGED, Reason.UNREADABLE)


def test_missing_manifest_bytes_propagate():
    fs = MemoryFS(VirtualManifest([ManifestEntry("a.py", 100)]))
    with pytest.raises(MissingContent, match="a.py"):
        binary_filter(rec(fs, "a.py"), fs)


# -- minified ---------------------------------------------------------------

def test_average_line_length():
    assert average_line_length(b"") == 0
    assert average_line_length(b"x" * 10_000) == 10_000
    assert average_line_length((b"y" * 80 + b"\n") * 100) == 81
    assert average_line_length(b"ab\ncd") == 2.5


@pytest.mark.parametrize("content,flagged", [
    (b"x" * 10_000, True),
    ((b"y" * 80 + b"\n") * 100, False),
    (b"", False),
    ((b"z" * 501 + b"\n") * 3, True),
    ((b"z" * 499 + b"\n") * 3, False),
])
def test_minified_filter(content, flagged):
    fs = mem({"f.js": content})
    d = minified_filter(rec(fs, "f.js"), fs, CFG)
    assert d.flagged is flagged
    assert d.bytes_read == min(65_536, len(content))


def test_minified_reads_at_most_64k():
    fs = mem({"big.js": b"a" * 200_000})
    d = minified_filter(rec(fs, "big.js"), fs, CFG)
    assert d.flagged and d.bytes_read == 65_536 == fs.counters.content_bytes_read


# -- gitignore ----------------------------------------------------------------

def test_gitignore_filter_examples():
    spec = PathSpec.from_lines(["*.log", "!keep.log"])
    assert gitignore_filter(FileRecord.make("debug.log", 5), spec).flagged
    assert not gitignore_filter(FileRecord.make("keep.log", 5), spec).flagged
    assert not gitignore_filter(FileRecord.make("data.csv", 5), spec).flagged
    assert not gitignore_filter(FileRecord.make("x.log", 5), PathSpec()).flagged


def test_gitignore_loaded_from_root_only():
    fs = mem({".gitignore": "*.log\n[bad\n", "a.log": "x", "sub/.gitignore": "*.py\n", "sub/b.py": "y"})
    spec = load_gitignore(fs)
    assert spec.patterns == ["*.log"]
    report = run_filter("gitignore", scan_repository(fs), fs)
    assert report.flagged_paths == ["a.log"]
    assert fs.counters.content_bytes_read == 0


# -- semantic -----------------------------------------------------------------

def test_keyword_density_by_hand():
    kw = CFG._keyword_set
    # words: import os def main return 0 -> keywords import, def, return
    assert keyword_density(b"import os\ndef main(): return 0", kw) == pytest.approx(3 / 6)
    assert keyword_density(b"1,2,3\n4,5,6\n", kw) == 0.0
    assert keyword_density(b"", kw) is None
    assert keyword_density(b",,,;;;\n", kw) is None


@pytest.mark.parametrize("content,flagged", [
    (b"import os\ndef main(): return 0", False),
    (b"1.5,2.25,3\n" * 50, True),
    (b"", True),
    (b"\x00\x01\x02\x03", True),
])
def test_semantic_filter(content, flagged):
    fs = mem({"f": content})
    d = semantic_filter(rec(fs, "f"), fs, CFG)
    assert d.flagged is flagged
    assert d.bytes_read == min(4096, len(content))
    if flagged:
        assert d.reason is Reason.LOW_SEMANTIC_DENSITY


def test_semantic_needs_keywords():
    fs = mem({"f": "x"})
    with pytest.raises(ValueError):
        semantic_filter(rec(fs, "f"), fs, CFG.replace(semantic_keywords=()))


# -- hybrid -------------------------------------------------------------------

def test_hybrid_gate1_size():
    fs = MemoryFS(VirtualManifest([ManifestEntry("big.py", 5 * MIB)]))
    d = hybrid_filter(rec(fs, "big.py"), fs, CFG)
    assert (d.gate, d.reason, d.bytes_read) == ("size", Reason.SIZE_EXCEEDS_THETA, 0)
    assert fs.counters.content_bytes_read == 0


def test_hybrid_gate2_extension():
    fs = MemoryFS(VirtualManifest([ManifestEntry("model.pkl", 10_000)]))
    d = hybrid_filter(rec(fs, "model.pkl"), fs, CFG)
    assert (d.gate, d.bytes_read) == ("extension", 0)


def test_hybrid_gate3_binary():
    fs = mem({"image.dat": b"\x89PNG\r\n\x1a\n" + b"\0" * 9000})
    d = hybrid_filter(rec(fs, "image.dat"), fs, CFG)
    assert (d.gate, d.bytes_read) == ("binary", 8)


def test_hybrid_gate4_semantic():
    fs = mem({"numbers.txt": repeat_to(CSV_LINE, 10_000)})
    d = hybrid_filter(rec(fs, "numbers.txt"), fs, CFG)
    assert (d.gate, d.bytes_read) == ("semantic", 8 + 4096)


def test_hybrid_pass_reads_8_plus_4096():
    fs = mem({"src/app.py": repeat_to(CODE_LINE, 10_000)})
    d = hybrid_filter(rec(fs, "src/app.py"), fs, CFG)
    assert d == FilterDecision.allow(8 + 4096)
    assert fs.counters.content_bytes_read == 4104


def test_hybrid_small_file_bytes():
    fs = mem({"a.py": b"def f(): return 1\n"})
    d = hybrid_filter(rec(fs, "a.py"), fs, CFG)
    assert not d.flagged and d.bytes_read == 8 + 18


def _standalone(record, fs, config):
    return {
        "size": size_filter(record, config.theta),
        "extension": extension_filter(record, config.extension_blocklist),
        "binary": binary_filter(record, fs, config.magic_table),
        "semantic": semantic_filter(record, fs, config),
    }


def _expected_hybrid_bytes(gate, size):
    return {"size": 0, "extension": 0, "binary": min(8, size),
            "semantic": min(8, size) + min(4096, size), None: min(8, size) + min(4096, size)}[gate]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), theta=st.sampled_from([50_000, 100_000, MIB]))
def test_hybrid_union_law_and_byte_accounting(seed, theta):
    manifest = random_manifest(random.Random(seed))
    config = CFG.replace(theta=theta)
    fs = MemoryFS(manifest)
    for record in scan_repository(fs):
        before = fs.counters.per_file[record.path]
        d = hybrid_filter(record, fs, config)
        assert fs.counters.per_file[record.path] - before == d.bytes_read
        parts = _standalone(record, MemoryFS(manifest), config)
        assert d.flagged == any(p.flagged for p in parts.values())
        if d.flagged:
            first = next(g for g in ("size", "extension", "binary", "semantic") if parts[g].flagged)
            assert d.gate == first
            assert d.reason == parts[first].reason
        assert d.bytes_read == _expected_hybrid_bytes(d.gate, record.size)
        assert d.bytes_read <= 4104


# -- overrides ----------------------------------------------------------------

def test_overrides():
    flagged = FilterDecision.flag(Reason.SIZE_EXCEEDS_THETA, "size")
    r = FileRecord.make("gen/api_pb.py", 3 * MIB)
    assert apply_overrides(flagged, r, OverrideSet(["gen/*"])) == FilterDecision.allow()
    assert apply_overrides(flagged, r, OverrideSet()) == flagged
    assert apply_overrides(flagged, r, None) == flagged
    allowed = FilterDecision.allow()
    assert apply_overrides(allowed, r, OverrideSet(["gen/*"])) == allowed
    assert apply_overrides(flagged, r, OverrideSet(["gen/api_pb.py"])).verdict is Verdict.ALLOWED
    assert apply_overrides(flagged, r, OverrideSet(["other/*"])) == flagged


def test_override_file_format():
    ov = OverrideSet.from_text("# generated code\ngen/**\n\n  vendor/big.js  \n")
    assert ov.include == ("gen/**", "vendor/big.js")
    assert ov.matches("gen/a/b.py") and ov.matches("vendor/big.js")
    assert not ov.matches("src/x.py")


# -- run_filter -------------------------------------------------------------

def test_run_filter_none_flags_nothing():
    fs = MemoryFS(tail_manifest())
    report = run_filter("none", scan_repository(fs), fs)
    assert report.flagged_paths == []
    assert fs.counters.content_bytes_read == 0


def test_run_filter_size_on_tail_manifest():
    fs = MemoryFS(tail_manifest())
    report = run_filter("size", scan_repository(fs), fs, FilterConfig(theta=MIB))
    assert len(report.flagged_paths) == 10
    assert all(p.startswith("data/") for p in report.flagged_paths)


def test_run_filter_rows_sorted_with_latency():
    fs = mem({"b.py": "x", "a.py": "y", "c/d.py": "z"})
    report = run_filter("hybrid", list(reversed(scan_repository(fs))), fs)
    assert [r.path for r in report.rows] == ["a.py", "b.py", "c/d.py"]
    assert all(r.latency_ns >= 0 for r in report.rows)


def test_run_filter_overrides_are_supreme():
    fs = mem({"gen/huge_pb.py": repeat_to(CODE_LINE, 2 * MIB), "data.csv": "1,2\n"})
    ov = OverrideSet(["gen/*", "data.csv"])
    for fid in FILTER_IDS:
        if fid in ("binary", "minified", "semantic", "hybrid"):
            fs = MemoryFS(VirtualManifest.from_files({"gen/huge_pb.py": repeat_to(CODE_LINE, 2 * MIB),
                                                      "data.csv": "1,2\n"}))
        report = run_filter(fid, scan_repository(fs), fs, CFG, ov)
        assert report.flagged_paths == []


def test_run_filter_unknown_id():
    with pytest.raises(ValueError):
        run_filter("bogus", [], None)


@pytest.mark.parametrize("seed", range(10))
def test_hybrid_superset_of_size_and_theta_monotone(seed):
    manifest = random_manifest(random.Random(seed))
    records = scan_repository(MemoryFS(manifest))
    hybrid = set(run_filter("hybrid", records, MemoryFS(manifest), CFG).flagged_paths)
    size = set(run_filter("size", records, None, CFG).flagged_paths)
    assert hybrid >= size
    thetas = [50_000, 100_000, 500_000, MIB, 5_000_000]
    sets = [set(run_filter("size", records, None, FilterConfig(theta=t)).flagged_paths) for t in thetas]
    for lo, hi in zip(sets, sets[1:]):
        assert lo >= hi


@pytest.mark.parametrize("fid", FILTER_IDS)
def test_determinism_and_parallel_equivalence(fid):
    manifest = random_manifest(random.Random(7), n_files=60)
    manifest.entries.append(ManifestEntry.from_content(".gitignore", "*.csv\nd1/\n"))
    runs = []
    for workers in (1, 1, 4):
        fs = MemoryFS(manifest)
        report = run_filter(fid, scan_repository(fs), fs, CFG, workers=workers)
        runs.append([r.to_json(include_latency=False) for r in report.rows])
    assert runs[0] == runs[1] == runs[2]
