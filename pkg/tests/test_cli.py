import csv
import json
import subprocess
import sys

import pytest

from selo import cache
from selo.cli import main, parse_range, UsageError
from selo.graph import write_edge_list

from conftest import faction_graph

FAST = ["--epochs", "3", "--runs", "2", "--threads", "1", "-k", "4"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    p = tmp_path_factory.mktemp("data") / "toy.csv"
    write_edge_list(faction_graph(n=100, m=500, seed=2), p)
    return p


def test_parse_range():
    assert parse_range("1.0:3.5:0.5") == [1.0, 1.5, 2.0, 2.5, 3.0, 3.5]
    vals = parse_range("0.001:0.01:0.001")
    assert len(vals) == 10 and vals[0] == 0.001 and vals[-1] == 0.01
    assert parse_range("1,2.17") == [1.0, 2.17]
    for bad in ("1:2:0", "1:2", "3:1:0.5", "a:b:c", ""):
        with pytest.raises(UsageError):
            parse_range(bad)


def test_evaluate_writes_report_and_rerun_from_report(dataset, tmp_path):
    out = tmp_path / "r.json"
    assert main(["evaluate", str(dataset), *FAST, "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["runs"]) == 2
    assert all(len(r["metrics"]) == 4 for r in doc["runs"])
    assert doc["config"]["dataset_path"] == str(dataset)

    out2 = tmp_path / "r2.json"
    assert main(["evaluate", "--from-report", str(out), "-o", str(out2)]) == 0
    doc2 = json.loads(out2.read_text())
    assert [r["metrics"] for r in doc2["runs"]] == [r["metrics"] for r in doc["runs"]]


@pytest.mark.parametrize("flags", [["--variant", "adj"], ["--ordering", "random"], ["--beta", "1.5"]])
def test_evaluate_variants(dataset, tmp_path, flags):
    out = tmp_path / "r.json"
    assert main(["evaluate", str(dataset), *FAST, "--runs", "1", *flags, "-o", str(out)]) == 0
    cfg = json.loads(out.read_text())["config"]
    if "--variant" in flags:
        assert cfg["variant"] == "adj"
    if "--beta" in flags:
        assert cfg["beta_mode"] == "explicit" and cfg["beta_value"] == 1.5


def test_scan_csv(dataset, tmp_path):
    out = tmp_path / "scan.csv"
    assert main(["scan", str(dataset), *FAST, "--runs", "1", "--scan", "beta", "1.0:2.0:0.5", "-o", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [float(r["beta"]) for r in rows] == [1.0, 1.5, 2.0]


def test_scan_json(dataset, tmp_path):
    out = tmp_path / "scan.json"
    assert main(["scan", str(dataset), *FAST, "--runs", "1", "--scan", "alpha", "0.005", "-o", str(out)]) == 0
    assert len(json.loads(out.read_text())["table"]) == 1


def test_encode_cache_hit_and_rebuild(dataset, tmp_path, capsys):
    args = ["encode", str(dataset), "-k", "4", "--threads", "1", "--cache-dir", str(tmp_path)]
    assert main(args) == 0
    files = list(tmp_path.glob("features-*.csv"))
    assert len(files) == 1
    header, edges, labels, feats = cache.read_features(files[0])
    assert feats.shape == (500, 48) and len(edges) == 500
    capsys.readouterr()
    assert main(args) == 0
    assert "cache hit" in capsys.readouterr().out
    # explicit output path with a stale header is rebuilt
    assert main(args + ["-o", str(files[0]), "--alpha", "0.01"]) == 0
    assert cache.read_header(files[0])["alpha"] == 0.01


def test_exit_codes(dataset, tmp_path):
    assert main(["scan", str(dataset), "--scan", "beta", "1:2:0"]) == 1
    assert main(["scan", str(dataset), "--scan", "gamma", "1"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["evaluate", "--variant", "nope"])
    assert info.value.code == 1
    assert main(["evaluate", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1,1\n1,2,0\n")
    assert main(["evaluate", str(bad)]) == 2
    assert main(["evaluate"]) == 1


def test_download_info(capsys):
    assert main(["download-info"]) == 0
    out = capsys.readouterr().out
    assert "soc-sign-bitcoinalpha" in out and "22649" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "selo", "download-info"], capture_output=True, text=True)
    assert res.returncode == 0 and "bitcoin-otc" in res.stdout
