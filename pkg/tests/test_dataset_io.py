import hashlib
import json
import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caviarkit.core import ArrayConfig, Episode, Pose, RayPath, Scene
from caviarkit.dataset_io import (TENSOR_MAGIC, DatasetManifest, export_channel_tensor, file_size, format_ray_line,
                                  parse_ray_line, read_channel_tensor, read_dataset, tensor_file_size, write_dataset)
from caviarkit.errors import CaviarError
from caviarkit.synthesis import synthesize

from helpers import synthetic_episodes

TX = ArrayConfig("ULA", 64, carrier_frequency=60e9)
RX = ArrayConfig("ULA", 8, carrier_frequency=60e9)


def manifest(E, S, T=0.5, receiver="mobile", name="test"):
    return DatasetManifest(name, 60e9, receiver, T, 6.0, E, S)


def digest(root):
    h = hashlib.sha256()
    for p in sorted(Path(root).rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_round_trip(tmp_path):
    eps = synthetic_episodes(3, 4, 0.5, seed=1, empty_every=5, anchors=50.0)
    m = manifest(3, 4)
    write_dataset(tmp_path / "d", m, eps)
    got = read_dataset(tmp_path / "d")
    assert got.manifest == m
    assert got.episodes == eps
    assert [v.code for v in got.report] == ["no_valid_channel"] * 3


def test_writes_are_byte_identical(tmp_path):
    eps = synthetic_episodes(2, 3, 0.5, seed=2)
    write_dataset(tmp_path / "a", manifest(2, 3), eps)
    write_dataset(tmp_path / "b", manifest(2, 3), eps)
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    write_dataset(tmp_path / "a", manifest(2, 3), eps, overwrite=True)
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    with pytest.raises(CaviarError) as exc:
        write_dataset(tmp_path / "a", manifest(2, 3), eps)
    assert exc.value.code == "io_error"


def test_manifest_keys_on_disk(tmp_path):
    write_dataset(tmp_path, manifest(1, 2, receiver="fixed"), synthetic_episodes(1, 2, 0.5))
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["number_of_episodes"] == 1 and doc["number_of_scenes_per_episode"] == 2
    assert doc["receiver_type"] == "fixed" and doc["frequency_hz"] == 60e9
    assert doc["format_version"] == "caviarkit-dataset/1"


def test_ray_line_formats():
    ray = RayPath(1 - 2j, 10.0, 0.5, 200.0, -1.0, 1e-8)
    line = format_ray_line(0, 1, 2, ray)
    assert len(line.split()) == 10
    assert parse_ray_line(line, "x") == (0, 1, 2, ray)
    anchored = RayPath(1j, 0.0, 0.0, 0.0, 0.0, None, (1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    line = format_ray_line(3, 0, 0, anchored)
    assert len(line.split()) == 16 and line.split()[9] == "nan"
    assert parse_ray_line(line, "x")[3] == anchored


@pytest.mark.parametrize("line", ["0 0 0 1 0 10 0 20", "0 0 0 1 0 10 0 20 0 0 0 1 2", "0 0 0 a 0 10 0 20 0 0"])
def test_bad_ray_lines(line):
    with pytest.raises(CaviarError) as exc:
        parse_ray_line(line, "rays.txt:7")
    assert exc.value.code == "parse_error"
    assert "rays.txt:7" in str(exc.value)


def test_parse_error_names_the_line(tmp_path):
    write_dataset(tmp_path, manifest(1, 2), synthetic_episodes(1, 2, 0.5))
    rays = tmp_path / "episode_00000" / "rays.txt"
    lines = rays.read_text().splitlines()
    lines[2] = lines[2] + " 7"
    rays.write_text("\n".join(lines) + "\n")
    with pytest.raises(CaviarError) as exc:
        read_dataset(tmp_path)
    assert exc.value.code == "parse_error"
    assert "rays.txt:3" in str(exc.value)


def test_missing_manifest_and_version(tmp_path):
    with pytest.raises(CaviarError) as exc:
        read_dataset(tmp_path)
    assert exc.value.code == "manifest_missing"
    write_dataset(tmp_path / "d", manifest(1, 1), synthetic_episodes(1, 1, 0.5))
    doc = json.loads((tmp_path / "d" / "manifest.json").read_text())
    doc["format_version"] = "other/9"
    (tmp_path / "d" / "manifest.json").write_text(json.dumps(doc))
    with pytest.raises(CaviarError) as exc:
        read_dataset(tmp_path / "d")
    assert exc.value.code == "version_mismatch"


def test_empty_dataset(tmp_path):
    with pytest.raises(CaviarError) as exc:
        write_dataset(tmp_path, manifest(1, 1), [])
    assert exc.value.code == "empty_dataset"
    with pytest.raises(CaviarError) as exc:
        export_channel_tensor(tmp_path / "t.bin", [], TX, RX)
    assert exc.value.code == "empty_dataset"


def test_fixed_receiver_fixture(tmp_path):
    eps = synthetic_episodes(105, 20, 0.5, seed=3, fixed=True)
    write_dataset(tmp_path, manifest(105, 20, T=0.5, receiver="fixed"), eps)
    got = read_dataset(tmp_path, jobs=4)
    assert (got.manifest.E, got.manifest.S, len(got.episodes)) == (105, 20, 105)
    assert all(len({s.rx_pose for s in e.scenes}) == 1 for e in got.episodes)
    assert got.episodes == eps


def test_tensor_file(tmp_path):
    eps = synthetic_episodes(2, 3, 0.5, seed=4, empty_every=4)
    t = export_channel_tensor(tmp_path / "t.bin", eps, TX, RX, K=2, delta_f=1e6)
    raw = (tmp_path / "t.bin").read_bytes()
    assert raw[:8] == TENSOR_MAGIC
    (n,) = struct.unpack("<Q", raw[8:16])
    assert (16 + n) % 16 == 0 and t.header_bytes == 16 + n
    assert file_size(tmp_path / "t.bin") == tensor_file_size(t.header_bytes, (2, 3, 2, 8, 64), "complex64")
    assert file_size(tmp_path / "t.bin") == 16 + n + 2 * 3 * 2 * 8 * 64 * 8
    back = read_channel_tensor(tmp_path / "t.bin")
    assert back.data.shape == (2, 3, 2, 8, 64) and back.data.dtype == np.complex64
    np.testing.assert_array_equal(back.valid_mask, [[0, 1, 1], [1, 0, 1]])
    assert not np.any(back.data[0, 0])
    ref = synthesize(eps[0].scenes[1], TX, RX, "planar", 2, 1e6).astype(np.complex64)
    np.testing.assert_array_equal(back.data[0, 1], ref)


def test_tensor_bytes_independent_of_jobs(tmp_path):
    eps = synthetic_episodes(2, 5, 0.5, seed=5, anchors=20.0)
    for regime in ("planar", "spherical"):
        export_channel_tensor(tmp_path / "a.bin", eps, TX, RX, regime, jobs=1, dtype="complex128")
        export_channel_tensor(tmp_path / "b.bin", eps, TX, RX, regime, jobs=4, dtype="complex128")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


finite = st.floats(-1e6, 1e6, allow_nan=False)
rays = st.builds(RayPath, st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                 st.floats(0, 360, exclude_max=True), st.floats(-90, 90), st.floats(0, 360, exclude_max=True),
                 st.floats(-90, 90), st.one_of(st.none(), st.floats(0, 1e-3)),
                 st.one_of(st.none(), st.tuples(finite, finite, finite)))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.lists(rays, max_size=3), min_size=1, max_size=4), st.floats(1e-3, 10))
def test_round_trip_property(ray_lists, T):
    scenes = []
    for i, rs in enumerate(ray_lists):
        # anchors must come in pairs
        rs = [RayPath(r.gain, r.aod_az, r.aod_el, r.aoa_az, r.aoa_el, r.delay, r.tx_anchor, r.tx_anchor)
              for r in rs]
        scenes.append(Scene(i, tuple(rs), Pose((0.0, 1.0, 2.0), 45.0), Pose((3.0, 4.0, 5.0), 0.0)))
    eps = [Episode(0, tuple(scenes), T)]
    with tempfile.TemporaryDirectory() as d:
        write_dataset(d, manifest(1, len(scenes), T=T), eps)
        assert read_dataset(d).episodes == eps
