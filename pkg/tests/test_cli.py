import csv
import hashlib
import json
import subprocess
import sys

import pytest

from caviarkit.cli import format_bench_table, main
from caviarkit.config import Config
from caviarkit.errors import EXIT_CODES, CaviarError


def write_config(path, **over):
    doc = {"name": "t", "seed": 7, "dataset": "ds", "outputs": "out", "episodes": 2, "scenes_per_episode": 3,
           "source": {"kind": "rdm-geo", "variant": "EASY", "anchor_distance": 50.0}}
    doc.update(over)
    path.write_text(json.dumps(doc))
    return path


def tree_digest(root, skip=()):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name not in skip:
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def data_rows(path):
    return [r for r in csv.reader(l for l in path.read_text().splitlines() if not l.startswith("#"))]


def test_generate_is_reproducible(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert main(["generate", str(cfg)]) == 0
    first = tree_digest(tmp_path / "ds")
    assert main(["generate", str(cfg), "--jobs", "4"]) == 0
    assert tree_digest(tmp_path / "ds") == first
    assert main(["generate", str(cfg), "--dataset", str(tmp_path / "other")]) == 0
    assert tree_digest(tmp_path / "other") == first
    man = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert man["number_of_episodes"] == 2 and man["number_of_scenes_per_episode"] == 3
    prov = json.loads((tmp_path / "ds" / "provenance.json").read_text())
    assert prov["seed"] == 7 and prov["config_sha256"] == Config.load(cfg).sha256


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", sampling_interval=0)
    assert main(["generate", str(cfg)]) == 2
    assert "sampling_interval" in capsys.readouterr().err
    assert main(["generate", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "bad.json").write_text("{nope")
    assert main(["generate", str(tmp_path / "bad.json")]) == 2
    cfg = write_config(tmp_path / "c2.json", surprise=1)
    assert main(["generate", str(cfg)]) == 2


def test_s011_like_manifest(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", name="s011", episodes=76, scenes_per_episode=20, sampling_interval=0.5,
                       episode_spacing=6.0, receiver_type="mobile", source={"kind": "rdm-geo", "variant": "HARD"})
    assert main(["generate", str(cfg)]) == 0
    capsys.readouterr()
    assert main(["summary", str(tmp_path / "ds")]) == 0
    row = json.loads(capsys.readouterr().out)
    assert row["Number of episodes"] == 76 and row["Number of scenes per episode"] == 20
    assert row["Time between scenes (ms)"] == 500.0 and row["Frequency (GHz)"] == 60.0
    assert row["Type of receiver"] == "mobile"


def test_pipeline(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", episodes=4, scenes_per_episode=5, synthesis={"regime": "both"})
    assert main(["generate", str(cfg)]) == 0
    assert main(["synthesize", str(cfg)]) == 0
    rep = json.loads((tmp_path / "out" / "synthesis_report.json").read_text())
    assert rep["regimes"] == ["planar", "spherical"] and rep["valid_channels"] == 20
    assert (tmp_path / "out" / "channels_planar.bin").is_file()

    assert main(["label", str(cfg)]) == 0
    rows = data_rows(tmp_path / "out" / "labels.csv")
    assert rows[0][:3] == ["episode", "scene", "pair_index"] and len(rows) == 21
    assert all(0 <= int(r[2]) < 256 for r in rows[1:])
    topk = data_rows(tmp_path / "out" / "topk.csv")
    acc = [float(r[1]) for r in topk[1:]]
    assert acc == sorted(acc) and acc[-1] == 1.0

    assert main(["estimate", str(cfg)]) == 0
    rows = data_rows(tmp_path / "out" / "nmse.csv")
    assert rows[0] == ["snr_db", "nmse_db", "estimator_id", "channel_regime"]
    assert sum(r[2] == "ls-1bit" for r in rows[1:]) == 5
    assert sum(r[2] == "ls-unquantized" for r in rows[1:]) == 5

    capsys.readouterr()
    assert main(["validate", str(tmp_path / "ds")]) == 0
    assert "0 errors" in capsys.readouterr().out


def test_far_field_gap_small(tmp_path):
    cfg = write_config(tmp_path / "c.json", source={"kind": "rdm-geo", "variant": "HARD", "anchor_distance": 1e4},
                       synthesis={"regime": "both"})
    assert main(["generate", str(cfg)]) == 0
    assert main(["synthesize", str(cfg), "--dtype", "complex128"]) == 0
    rep = json.loads((tmp_path / "out" / "synthesis_report.json").read_text())
    assert rep["max_relative_frobenius_gap"] < 1e-3


def test_bench(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", episodes=2, scenes_per_episode=10, source={
        "kind": "rdm-geo", "variant": "HARD", "L": 4, "anchor_distance": 30.0})
    assert main(["generate", str(cfg)]) == 0
    capsys.readouterr()
    assert main(["bench", str(cfg)]) == 0
    table = capsys.readouterr().out
    assert "Synthesis time" in table and "spherical" in table
    rows = list(csv.DictReader(l for l in (tmp_path / "out" / "bench_report.csv").read_text().splitlines()
                               if not l.startswith("#")))
    assert [r["regime"] for r in rows] == ["planar", "spherical"]
    assert float(rows[1]["output_bytes_ratio"]) == 1.0
    assert float(rows[0]["synthesis_s"]) > 0


def test_format_bench_table():
    rows = [{"regime": "planar", "output_bytes": 4096.0, "synthesis_s": 1e-4, "postprocessing_s": 1e-5},
            {"regime": "spherical", "output_bytes_ratio": 1.0, "synthesis_s_ratio": 2.5, "postprocessing_s_ratio": 1.0}]
    out = format_bench_table(rows).splitlines()
    assert len(out) == 3 and "2.5 x" in out[2]


def test_missing_anchor_exit_4(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", source={"kind": "rdm-geo"}, synthesis={"regime": "spherical"})
    assert main(["generate", str(cfg)]) == 0
    assert main(["synthesize", str(cfg)]) == 4
    assert "anchor_distance" in capsys.readouterr().err


def test_dataset_errors_exit_3(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert main(["synthesize", str(cfg)]) == 3
    assert main(["summary", str(tmp_path)]) == 3


def test_rays_file_source(tmp_path):
    lines = ["# episode scene path ...", "0 0 0 1.0 0.0 10.0 0.0 200.0 0.0 1e-8", "0 1 0 0.5 0.5 20.0 1.0 30.0 0.0 nan"]
    (tmp_path / "rays.txt").write_text("\n".join(lines) + "\n")
    cfg = write_config(tmp_path / "c.json", episodes=1, scenes_per_episode=3,
                       source={"kind": "rays", "rays_file": "rays.txt"})
    assert main(["generate", str(cfg)]) == 0
    assert main(["label", str(cfg)]) == 0
    rows = data_rows(tmp_path / "out" / "labels.csv")
    assert len(rows) == 3
    (tmp_path / "rays.txt").write_text("0 0 0 1.0\n")
    assert main(["generate", str(cfg)]) == 3


def test_exit_code_table():
    assert CaviarError("config_error", "x").exit_code == 2
    assert {EXIT_CODES[c] for c in ("empty_dataset", "parse_error", "io_error")} == {3}
    assert {EXIT_CODES[c] for c in ("missing_anchor", "degenerate_geometry")} == {4}
    assert {EXIT_CODES[c] for c in ("cardinality_error", "undefined_nmse")} == {5}


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "caviarkit", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
    out = subprocess.run([sys.executable, "-m", "caviarkit", "generate"], capture_output=True, text=True)
    assert out.returncode == 2
