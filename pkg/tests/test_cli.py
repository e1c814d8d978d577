from __future__ import annotations

import json
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from btlh.cli import DEFAULTS, build_corpus, main
from btlh.grid import load_field_csv

tol_exact = 1e-12


def _run(args, tmp_path, name):
    out = tmp_path / name
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code = main(args + ["--out", str(out)])
    return code, out


#### norm command


def test_norm_report_exit_and_shape(tmp_path):
    code, out = _run(["norm", "--csv"], tmp_path, "a")
    assert code == 0
    doc = json.loads((out / "norm_report.json").read_text())
    assert doc["version"] == "0.1.0"
    assert doc["config"]["space"] == "bt-F"
    assert len(doc["rows"]) == 3
    for row in doc["rows"]:
        assert row["value"] > 0.0 and np.isfinite(row["value"])
    csv_text = (out / "norm_report.csv").read_text()
    assert "#config" in csv_text and "#version" in csv_text


def test_norm_rerun_byte_identical(tmp_path):
    code1, out1 = _run(["norm", "--csv", "--seed", "99"], tmp_path, "r1")
    code2, out2 = _run(["norm", "--csv", "--seed", "99"], tmp_path, "r2")
    assert code1 == 0 and code2 == 0
    j1 = (out1 / "norm_report.json").read_text().replace(str(out1), "OUT")
    j2 = (out2 / "norm_report.json").read_text().replace(str(out2), "OUT")
    assert j1 == j2
    c1 = (out1 / "norm_report.csv").read_text().replace(str(out1), "OUT")
    c2 = (out2 / "norm_report.csv").read_text().replace(str(out2), "OUT")
    assert c1 == c2


def test_norm_zero_corpus(tmp_path):
    code, out = _run(["norm", "--set", "corpus.count=0"], tmp_path, "z")
    assert code == 0
    doc = json.loads((out / "norm_report.json").read_text())
    assert doc["rows"] == []


def test_norm_variant_cardinality(tmp_path):
    args = [
        "norm",
        "--set", "space=bt-B",
        "--set", "variants=[1,2,3,4,5]",
        "--set", "corpus.count=2",
    ]
    code, out = _run(args, tmp_path, "card")
    assert code == 0
    doc = json.loads((out / "norm_report.json").read_text())
    assert len(doc["rows"]) == 10
    for name in ("band-limited-00", "band-limited-01"):
        got = sorted(r["variant"] for r in doc["rows"] if r["field"] == name)
        assert got == [1, 2, 3, 4, 5]


def test_sequence_space_route(tmp_path):
    code, out = _run(["norm", "--set", "space=seq-f", "--set", "corpus.count=1"], tmp_path, "sq")
    assert code == 0
    doc = json.loads((out / "norm_report.json").read_text())
    assert doc["rows"][0]["value"] > 0.0


def test_corpus_generation_deterministic():
    cfg = json.loads(json.dumps(DEFAULTS))
    a = build_corpus(cfg)
    b = build_corpus(cfg)
    assert [n for n, _ in a] == [n for n, _ in b]
    for (_, fa), (_, fb) in zip(a, b):
        assert np.array_equal(fa.values, fb.values)


def test_duplicated_fields_identical_rows(tmp_path):
    # replaying the generator reproduces the corpus, so report rows repeat
    code1, out1 = _run(["norm", "--set", "corpus.count=2"], tmp_path, "d1")
    code2, out2 = _run(["norm", "--set", "corpus.count=2"], tmp_path, "d2")
    r1 = json.loads((out1 / "norm_report.json").read_text())["rows"]
    r2 = json.loads((out2 / "norm_report.json").read_text())["rows"]
    assert r1 == r2


#### equivalence command


def test_equivalence_pairs_complete(tmp_path):
    code, out = _run(["equivalence", "--set", "corpus.count=2"], tmp_path, "eq")
    assert code == 0
    doc = json.loads((out / "equivalence_report.json").read_text())
    assert len(doc["rows"]) == 2 * 6
    assert len(doc["pairs"]) == 15
    for lo, hi in doc["pairs"].values():
        assert 0.0 < lo <= hi < np.inf


def test_equivalence_needs_type_family(tmp_path):
    code, _ = _run(["equivalence", "--set", "space=fh"], tmp_path, "eqbad")
    assert code == 2


#### capacity command


def test_capacity_empty_set(tmp_path):
    code, out = _run(["capacity", "--set", "set.kind=empty"], tmp_path, "cap0")
    assert code == 0
    row = json.loads((out / "capacity_report.json").read_text())["rows"][0]
    assert row["lower"] == 0.0 and row["upper"] == 0.0
    assert row["h0_lower"] == 0.0 and row["h0_upper"] == 0.0


def test_capacity_half_interval_exact(tmp_path):
    code, out = _run(["capacity"], tmp_path, "cap")
    assert code == 0
    row = json.loads((out / "capacity_report.json").read_text())["rows"][0]
    assert row["method"] == "exact-dp"
    assert row["lower"] == row["upper"] > 0.0
    assert row["h0_lower"] == 1.0 and row["h0_upper"] == 1.0


#### group-check command


def test_group_identity_probe(tmp_path):
    code, out = _run(
        ["group-check", "--set", "probes.r=[1.0]", "--set", "corpus.count=1"],
        tmp_path, "gid",
    )
    assert code == 0
    row = json.loads((out / "group_report.json").read_text())["rows"][0]
    assert_allclose(row["ratio"], 1.0, rtol=tol_exact)
    assert_allclose(row["bound_shape"], 1.0, rtol=tol_exact)


def test_group_haar_module(tmp_path):
    code, out = _run(
        ["group-check", "--set", "probes.r=[2.0]", "--set", "corpus.count=1"],
        tmp_path, "gh",
    )
    assert code == 0
    haar = json.loads((out / "group_report.json").read_text())["haar"]
    assert haar["base"] > 0.0
    assert 1.0 < haar["ratio"] < 4.1


#### wavelet-audit command


def test_audit_haar_fails_high_smoothness(tmp_path):
    args = [
        "wavelet-audit",
        "--set", "audit_wavelets=[\"haar\",\"spline-2-8\"]",
        "--set", "params.s=1.0",
    ]
    code, out = _run(args, tmp_path, "aud")
    assert code == 0
    rows = {r["system"]: r for r in json.loads((out / "wavelet_audit.json").read_text())["rows"]}
    assert rows["haar"]["verdict"] == "fail"
    assert rows["haar"]["measured_decay"] < rows["haar"]["required_decay"]


def test_audit_high_order_passes_flat_space(tmp_path):
    code, out = _run(["wavelet-audit", "--set", "wavelet=spline-2-8"], tmp_path, "aud2")
    assert code == 0
    row = json.loads((out / "wavelet_audit.json").read_text())["rows"][0]
    assert row["verdict"] == "pass"
    assert row["pr_residual"] < 1e-10


#### gen-corpus command


def test_gen_corpus_files_loadable(tmp_path):
    code, out = _run(["gen-corpus", "--set", "corpus.count=2"], tmp_path, "gc")
    assert code == 0
    manifest = json.loads((out / "corpus_manifest.json").read_text())
    assert len(manifest["rows"]) == 2
    for row in manifest["rows"]:
        f = load_field_csv(row["file"])
        assert f.N == 256
        assert abs(float(f.values.mean())) < 1e-12


#### config handling and exit codes


def test_config_file_and_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"corpus": {"count": 1}, "grid": {"J": 7}}))
    code, out = _run(["norm", "--config", str(cfg_path)], tmp_path, "cfg")
    assert code == 0
    doc = json.loads((out / "norm_report.json").read_text())
    assert doc["config"]["grid"]["J"] == 7
    assert len(doc["rows"]) == 1


def test_seed_flag_changes_corpus(tmp_path):
    _, out1 = _run(["norm", "--seed", "1"], tmp_path, "s1")
    _, out2 = _run(["norm", "--seed", "2"], tmp_path, "s2")
    v1 = [r["value"] for r in json.loads((out1 / "norm_report.json").read_text())["rows"]]
    v2 = [r["value"] for r in json.loads((out2 / "norm_report.json").read_text())["rows"]]
    assert v1 != v2


def test_unknown_wavelet_exit_2(tmp_path):
    code, _ = _run(["norm", "--set", "wavelet=sym-9"], tmp_path, "bad1")
    assert code == 2


def test_unknown_space_exit_2(tmp_path):
    code, _ = _run(["norm", "--set", "space=morrey"], tmp_path, "bad2")
    assert code == 2


def test_bad_config_json_exit_2(tmp_path):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text("{not json")
    code, _ = _run(["norm", "--config", str(cfg_path)], tmp_path, "bad3")
    assert code == 2


def test_range_error_exit_3(tmp_path):
    # the analyzing window cannot resolve any octave at this resolution
    code, _ = _run(["group-check", "--set", "grid.J=3", "--set", "corpus.count=1"], tmp_path, "bad4")
    assert code == 3
