import json

import numpy as np
import pytest

from geoshap.cli import ingest_csv, load_bootstrap, load_explanations, main
from geoshap.errors import DataError

from conftest import server_cmd


def run_cli(*args):
    return main([str(a) for a in args])


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


CSV = """row_id,a,b,u,v,y
1,1.0,2.0,0.1,0.2,3.5
2,2.0,3.0,0.3,0.4,4.5
3,3.0,4.0,0.5,0.6,5.5
4,4.0,5.0,0.7,0.8,6.5
"""


# --- ingestion ---------------------------------------------------------------

def test_ingest_happy_path(tmp_path):
    path = write(tmp_path / "d.csv", CSV)
    ds, report = ingest_csv(path, ("u", "v"), target="y")
    assert ds.n == 4 and ds.p == 2
    assert ds.feature_names == ("a", "b")
    assert ds.row_ids == (1, 2, 3, 4)
    assert report.dropped_row_ids == ()
    assert ds.target == pytest.approx([3.5, 4.5, 5.5, 6.5])


def test_ingest_missing_cell_drops_row_with_id(tmp_path):
    path = write(tmp_path / "d.csv", CSV.replace("2,2.0,3.0", "2,,3.0"))
    ds, report = ingest_csv(path, ("u", "v"), target="y")
    assert ds.n == 3
    assert report.dropped_row_ids == (2,)
    assert "dropped 1 row(s)" in report.describe()


def test_ingest_missing_coordinate_column(tmp_path):
    path = write(tmp_path / "d.csv", CSV)
    with pytest.raises(DataError, match="no coordinate column 'lon'"):
        ingest_csv(path, ("lon", "v"))


def test_ingest_non_numeric_cell_is_error(tmp_path):
    path = write(tmp_path / "d.csv", CSV.replace("3,3.0,4.0", "3,oops,4.0"))
    with pytest.raises(DataError, match="non-numeric value 'oops' in column 'a'"):
        ingest_csv(path, ("u", "v"), target="y")


def test_ingest_zero_usable_rows(tmp_path):
    path = write(tmp_path / "d.csv", "a,u,v\nNA,0.0,0.0\n")
    with pytest.raises(DataError, match="zero usable rows"):
        ingest_csv(path, ("u", "v"))


def test_ingest_explicit_features_and_exclude(tmp_path):
    path = write(tmp_path / "d.csv", CSV)
    ds, _ = ingest_csv(path, ("u", "v"), target="y", features=["b"])
    assert ds.feature_names == ("b",)
    ds2, _ = ingest_csv(path, ("u", "v"), target="y", exclude=("a",))
    assert ds2.feature_names == ("b",)


# --- pipeline ----------------------------------------------------------------

@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data.csv"
    expl = root / "expl.json"
    assert run_cli("simulate", "--process", "svc", "--n", 150, "--seed", 7,
                   "--noise-sd", 0.2, "--out", data,
                   "--truth-out", root / "truth.csv") == 0
    assert run_cli("explain", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model", "gbt", "--model-param", "trees=30",
                   "--model-param", "depth=2", "--background", 40,
                   "--seed", 1, "--out", expl) == 0
    return root, data, expl


def test_simulate_regenerable_bit_for_bit(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli("simulate", "--process", "svc", "--n", 120, "--seed", 9, "--out", a,
            "--truth-out", tmp_path / "ta.csv")
    run_cli("simulate", "--process", "svc", "--n", 120, "--seed", 9, "--out", b,
            "--truth-out", tmp_path / "tb.csv")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "ta.csv").read_bytes() == (tmp_path / "tb.csv").read_bytes()


def test_explain_rerun_identical_and_manifest_embedded(pipeline, tmp_path):
    root, data, expl = pipeline
    first = expl.read_bytes()
    assert run_cli("explain", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model", "gbt", "--model-param", "trees=30",
                   "--model-param", "depth=2", "--background", 40,
                   "--seed", 1, "--out", expl) == 0
    assert expl.read_bytes() == first
    payload = json.loads(expl.read_text())
    manifest = json.loads((root / "expl.json.manifest.json").read_text())
    assert payload["manifest_hash"] == manifest["manifest_hash"]
    assert manifest["seeds"]["seed"] == 1
    assert "cv_r2" in manifest and "timings" in manifest


def test_explanation_file_efficiency_on_reread(pipeline):
    _, _, expl = pipeline
    es, _ = load_explanations(str(expl))
    gap = np.abs(es.base_value + es.phi_geo + es.phi.sum(1) + es.phi_geo_x.sum(1)
                 - es.predictions)
    assert gap.max() <= 1e-8


def test_importance_csv(pipeline, tmp_path):
    _, _, expl = pipeline
    out = tmp_path / "imp.csv"
    assert run_cli("importance", "--explanations", expl, "--out", out) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("# manifest_hash: ")
    assert lines[1] == "feature,primary_part,geo_part,total"
    rows = [line.split(",") for line in lines[2:]]
    names = [r[0] for r in rows]
    assert set(names) == {"x1", "x2", "GEO"}
    totals = [float(r[3]) for r in rows]
    assert totals == sorted(totals, reverse=True)
    for r in rows:
        assert float(r[3]) == pytest.approx(float(r[1]) + float(r[2]), abs=1e-12)


def test_pdp_csv(pipeline, tmp_path):
    _, data, expl = pipeline
    out = tmp_path / "pdp.csv"
    assert run_cli("pdp", "--explanations", expl, "--data", data, "--coords", "u,v",
                   "--target", "y", "--feature", "x1", "--out", out) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[1] == "x,phi"
    xs = [float(line.split(",")[0]) for line in lines[2:]]
    assert xs == sorted(xs)
    assert len(xs) == 150


def test_svc_geojson_and_masking(pipeline, tmp_path):
    root, data, expl = pipeline
    boot = tmp_path / "boot.json"
    assert run_cli("bootstrap", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model", "gbt", "--model-param", "trees=20",
                   "--model-param", "depth=2", "--background", 30,
                   "--replicates", 6, "--bootstrap-seed", 3,
                   "--svc-features", "x1", "--bandwidth", 40,
                   "--out", boot) == 0
    out = tmp_path / "svc.geojson"
    assert run_cli("svc", "--explanations", expl, "--data", data, "--coords", "u,v",
                   "--target", "y", "--feature", "x1", "--bandwidth", 40,
                   "--bootstrap", boot, "--out", out) == 0
    payload = json.loads(out.read_text())
    assert payload["type"] == "FeatureCollection"
    assert payload["manifest_hash"]
    assert len(payload["features"]) == 150
    feature = payload["features"][0]
    assert feature["type"] == "Feature"
    assert feature["geometry"]["type"] == "Point"
    assert len(feature["geometry"]["coordinates"]) == 2
    props = feature["properties"]
    assert set(props) >= {"beta", "intercept", "masked", "row_id"}
    assert isinstance(props["masked"], bool)
    # masked rows keep their beta values
    summary = load_bootstrap(str(boot))
    _, lo, up = summary.intervals("svc_beta:x1")
    flags = [f["properties"]["masked"] for f in payload["features"]]
    assert flags == [bool(l <= 0 <= u) for l, u in zip(lo, up)]


def test_bootstrap_deterministic_bytes(pipeline, tmp_path):
    _, data, _ = pipeline
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run_cli("bootstrap", "--data", data, "--coords", "u,v", "--target", "y",
                       "--model", "linear", "--background", 30,
                       "--replicates", 5, "--bootstrap-seed", 2, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()
    summary = load_bootstrap(str(a))
    assert summary.replicates == 5 and summary.failed == 0


def test_explain_via_model_file(pipeline, tmp_path):
    root, data, _ = pipeline
    model_path = tmp_path / "model.json"
    out1 = tmp_path / "e1.json"
    assert run_cli("explain", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model", "linear", "--model-out", model_path,
                   "--background", 30, "--out", out1) == 0
    out2 = tmp_path / "e2.json"
    assert run_cli("explain", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model-file", model_path, "--background", 30, "--out", out2) == 0
    a, _ = load_explanations(str(out1))
    b, _ = load_explanations(str(out2))
    assert a.phi == pytest.approx(b.phi, abs=1e-12)


def test_explain_via_model_cmd(pipeline, tmp_path):
    _, data, _ = pipeline
    out = tmp_path / "bridged.json"
    cmd = " ".join(server_cmd("trainable_server.py", 4))
    assert run_cli("explain", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model-cmd", cmd, "--background", 30, "--out", out) == 0
    es, _ = load_explanations(str(out))
    assert len(es) == 150


def test_bootstrap_via_bridged_trainable_server(pipeline, tmp_path):
    _, data, _ = pipeline
    out = tmp_path / "boot_bridge.json"
    cmd = " ".join(server_cmd("trainable_server.py", 4))
    assert run_cli("bootstrap", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model-cmd", cmd, "--background", 25, "--replicates", 3,
                   "--bootstrap-seed", 5, "--out", out) == 0
    summary = load_bootstrap(str(out))
    assert summary.completed == 3 and summary.failed == 0


def test_exit_codes_distinct(tmp_path):
    missing = tmp_path / "missing.csv"
    assert run_cli("explain", "--data", missing, "--coords", "u,v", "--target", "y",
                   "--model", "linear", "--out", tmp_path / "x.json") == 3
    data = tmp_path / "tiny.csv"
    data.write_text(CSV)
    # unwritable output path -> OutputError -> exit 7
    assert run_cli("simulate", "--process", "svc", "--n", 120, "--seed", 0,
                   "--out", "/proc/forbidden/out.csv") == 7
    # bridge failure -> exit 5
    assert run_cli("explain", "--data", data, "--coords", "u,v", "--target", "y",
                   "--model-cmd", "/nonexistent/server", "--out", tmp_path / "y.json") == 5


def test_threads_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("GEOSHAP_THREADS", "3")
    from geoshap.cli import build_parser

    args = build_parser().parse_args([
        "explain", "--data", "d.csv", "--coords", "u,v", "--out", "o.json",
        "--model", "linear",
    ])
    assert args.threads == 3
