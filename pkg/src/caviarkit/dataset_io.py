"""On-disk episodic datasets and channel tensor files.

Dataset layout::

    root/
      manifest.json              dataset-level metadata
      episode_00000/
        scenes.json              episode header, poses and feature records
        rays.txt                 one ray per line
      episode_00001/
      ...

``rays.txt`` lines hold space-separated fields::

    episode scene path gain_re gain_im aod_az aod_el aoa_az aoa_el delay [tx_anchor(3) rx_anchor(3)]

so a line has 10 fields, or 16 when the ray carries anchors. Floats are
written with ``repr`` (shortest exact round-trip form); an unknown delay is
written as ``nan``. Lines starting with ``#`` are comments.

Tensor files start with the 8-byte magic ``CAVTENS1`` and a little-endian
uint64 header length, followed by a UTF-8 JSON header (padded with spaces to
a 16-byte boundary) and the payload: a C-ordered (E, S, K, N_rx, N_tx) array
of little-endian IEEE-754 complex numbers, real and imaginary parts
interleaved. Scenes without a channel are zero blocks with a 0 in the
header's ``valid_mask``.
"""

from __future__ import annotations

import json
import math
import os
import shutil
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import __version__
from .core import ArrayConfig, Episode, Pose, RayPath, Scene, Violation, validate_episode
from .errors import CaviarError
from .synthesis import synthesize

FORMAT_VERSION = "caviarkit-dataset/1"
TENSOR_MAGIC = b"CAVTENS1"
TENSOR_VERSION = "caviarkit-tensor/1"
MANIFEST_NAME = "manifest.json"
RAYS_NAME = "rays.txt"
SCENES_NAME = "scenes.json"
RAY_HEADER = ("# episode scene path gain_re gain_im aod_az aod_el aoa_az aoa_el delay "
              "[tx_anchor_x tx_anchor_y tx_anchor_z rx_anchor_x rx_anchor_y rx_anchor_z]")

# manifest field -> key on disk
MANIFEST_KEYS = {
    "name": "dataset_name",
    "carrier_frequency": "frequency_hz",
    "receiver_type": "receiver_type",
    "T": "time_between_scenes_s",
    "episode_spacing": "time_between_episodes_s",
    "E": "number_of_episodes",
    "S": "number_of_scenes_per_episode",
    "format_version": "format_version",
}


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    carrier_frequency: float
    receiver_type: str
    T: float
    episode_spacing: float
    E: int
    S: int
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        if self.receiver_type not in ("fixed", "mobile"):
            raise CaviarError("invalid_input", "receiver_type must be 'fixed' or 'mobile'")
        if int(self.E) < 1 or int(self.S) < 1:
            raise CaviarError("invalid_input", "E and S must be >= 1")
        if not self.format_version:
            raise CaviarError("invalid_input", "format_version is required")

    def to_document(self, valid_channels: int | None = None) -> dict:
        doc = {MANIFEST_KEYS[k]: v for k, v in asdict(self).items()}
        if valid_channels is not None:
            doc["number_of_valid_channels"] = valid_channels
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "DatasetManifest":
        try:
            return cls(**{k: doc[key] for k, key in MANIFEST_KEYS.items()})
        except KeyError as exc:
            raise CaviarError("parse_error", f"manifest lacks key {exc.args[0]!r}") from None


class LoadedDataset(NamedTuple):
    manifest: DatasetManifest
    episodes: list[Episode]
    report: list[Violation]


def _episode_dir(root: Path, episode_id: int) -> Path:
    return root / f"episode_{episode_id:05d}"


def _fmt(x: float) -> str:
    return repr(float(x))


def format_ray_line(episode: int, scene: int, path: int, ray: RayPath) -> str:
    fields = [str(episode), str(scene), str(path), _fmt(ray.gain.real), _fmt(ray.gain.imag),
              _fmt(ray.aod_az), _fmt(ray.aod_el), _fmt(ray.aoa_az), _fmt(ray.aoa_el),
              _fmt(math.nan if ray.delay is None else ray.delay)]
    if ray.has_anchors:
        fields += [_fmt(v) for v in ray.tx_anchor + ray.rx_anchor]
    return " ".join(fields)


def _pose_doc(p: Pose) -> dict:
    return {"position": list(p.position), "heading": p.heading}


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n").encode("utf-8")


def _check_writable(episodes: Sequence[Episode]) -> None:
    if not episodes:
        raise CaviarError("empty_dataset", "no episodes to write")
    ids = [e.id for e in episodes]
    if len(set(ids)) != len(ids):
        raise CaviarError("invalid_input", "episode ids must be unique")
    for e in episodes:
        errors = [v for v in validate_episode(e) if not v.is_flag]
        if errors:
            raise CaviarError("invalid_input", f"{len(errors)} violations, first: {errors[0]}")


def write_dataset(root, manifest: DatasetManifest, episodes: Sequence[Episode], overwrite: bool = False) -> None:
    """Write a dataset tree. Identical inputs give byte-identical trees."""
    _check_writable(episodes)
    root = Path(root)
    try:
        if root.exists() and any(root.iterdir()):
            if not overwrite:
                raise CaviarError("io_error", f"{root} is not empty (use overwrite=True)")
            for child in root.glob("episode_*"):
                shutil.rmtree(child)
            (root / MANIFEST_NAME).unlink(missing_ok=True)
        root.mkdir(parents=True, exist_ok=True)
        valid = sum(s.is_valid_channel for e in episodes for s in e.scenes)
        (root / MANIFEST_NAME).write_bytes(_json_bytes(manifest.to_document(valid)))
        for ep in episodes:
            d = _episode_dir(root, ep.id)
            d.mkdir()
            header = {
                "id": ep.id,
                "kind": ep.kind,
                "sampling_interval": ep.sampling_interval,
                "scenes": [
                    {"index": s.index, "tx_pose": _pose_doc(s.tx_pose), "rx_pose": _pose_doc(s.rx_pose),
                     "features": s.features}
                    for s in ep.scenes
                ],
            }
            (d / SCENES_NAME).write_bytes(_json_bytes(header))
            lines = [RAY_HEADER]
            for s in ep.scenes:
                lines += [format_ray_line(ep.id, s.index, i, r) for i, r in enumerate(s.rays)]
            (d / RAYS_NAME).write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    except OSError as exc:
        raise CaviarError("io_error", str(exc)) from exc


def parse_ray_line(line: str, where: str) -> tuple[int, int, int, RayPath]:
    parts = line.split()
    if len(parts) not in (10, 16):
        raise CaviarError("parse_error", f"expected 10 or 16 fields, got {len(parts)}", at=where)
    try:
        ep, sc, path = (int(p) for p in parts[:3])
        v = [float(p) for p in parts[3:]]
    except ValueError as exc:
        raise CaviarError("parse_error", str(exc), at=where) from None
    delay = None if math.isnan(v[6]) else v[6]
    anchors = (tuple(v[7:10]), tuple(v[10:13])) if len(v) == 13 else (None, None)
    ray = RayPath(complex(v[0], v[1]), v[2], v[3], v[4], v[5], delay, *anchors)
    return ep, sc, path, ray


def read_rays(path, episode_id: int | None = None) -> dict[int, list[RayPath]]:
    """Rays grouped by scene index, path order checked."""
    path = Path(path)
    by_scene: dict[int, list[RayPath]] = {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            where = f"{path}:{lineno}"
            ep, sc, idx, ray = parse_ray_line(line, where)
            if episode_id is not None and ep != episode_id:
                raise CaviarError("parse_error", f"episode {ep} in file of episode {episode_id}", at=where)
            rays = by_scene.setdefault(sc, [])
            if idx != len(rays):
                raise CaviarError("parse_error", f"path index {idx}, expected {len(rays)}", at=where)
            rays.append(ray)
    return by_scene


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CaviarError("parse_error", exc.msg, at=f"{path}:{exc.lineno}") from None


def _read_episode(d: Path) -> Episode:
    header = _load_json(d / SCENES_NAME)
    try:
        rays = read_rays(d / RAYS_NAME, header["id"])
        scenes = []
        for rec in header["scenes"]:
            scenes.append(Scene(
                rec["index"],
                tuple(rays.pop(rec["index"], ())),
                Pose(**rec["tx_pose"]),
                Pose(**rec["rx_pose"]),
                rec.get("features", {}),
            ))
        if rays:
            raise CaviarError("parse_error", f"rays for unknown scenes {sorted(rays)}", at=str(d / RAYS_NAME))
        return Episode(header["id"], tuple(scenes), header["sampling_interval"], header["kind"])
    except (KeyError, TypeError) as exc:
        raise CaviarError("parse_error", f"malformed episode header: {exc}", at=str(d / SCENES_NAME)) from None


def read_dataset(root, jobs: int = 1) -> LoadedDataset:
    """Load and validate a dataset written by :func:`write_dataset`.

    Zero-ray scenes are kept; they show up in the report as
    ``no_valid_channel`` flags together with any other violations.
    """
    root = Path(root)
    mpath = root / MANIFEST_NAME
    if not mpath.is_file():
        raise CaviarError("manifest_missing", f"no {MANIFEST_NAME} in {root}")
    doc = _load_json(mpath)
    if doc.get("format_version") != FORMAT_VERSION:
        raise CaviarError("version_mismatch", f"found {doc.get('format_version')!r}, expected {FORMAT_VERSION!r}")
    manifest = DatasetManifest.from_document(doc)
    dirs = sorted(p for p in root.glob("episode_*") if p.is_dir())
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            episodes = list(pool.map(_read_episode, dirs))
    else:
        episodes = [_read_episode(d) for d in dirs]
    episodes.sort(key=lambda e: e.id)
    report = [v for e in episodes for v in validate_episode(e)]
    return LoadedDataset(manifest, episodes, report)


# --- channel tensors -------------------------------------------------------

TENSOR_DTYPES = {"complex64": "<c8", "complex128": "<c16"}


@dataclass(frozen=True)
class ChannelTensor:
    header: dict
    data: np.ndarray
    valid_mask: np.ndarray
    header_bytes: int


def _synth_one(args):
    scene, tx, rx, regime, K, delta_f, rho, ep_id = args
    if not scene.is_valid_channel:
        return None
    try:
        return synthesize(scene, tx, rx, regime, K, delta_f, rho)
    except CaviarError as exc:
        raise CaviarError(exc.code, str(exc), episode=ep_id, scene=scene.index) from exc


def synthesize_episodes(episodes: Sequence[Episode], tx: ArrayConfig, rx: ArrayConfig, regime: str = "planar",
                        K: int = 1, delta_f: float = 0.0, rho: float = 0.0, jobs: int = 1):
    """Channels for every scene as a (E, S, K, N_rx, N_tx) complex128 array plus mask.

    S is the longest episode; shorter episodes and channel-less scenes are
    zero with mask 0. Results do not depend on ``jobs``.
    """
    E = len(episodes)
    S = max(len(e.scenes) for e in episodes)
    out = np.zeros((E, S, K, rx.size, tx.size), dtype=np.complex128)
    mask = np.zeros((E, S), dtype=np.uint8)
    tasks = [(s, tx, rx, regime, K, delta_f, rho, e.id) for e in episodes for s in e.scenes]
    slots = [(i, j) for i, e in enumerate(episodes) for j in range(len(e.scenes))]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(_synth_one, tasks))
    else:
        results = [_synth_one(t) for t in tasks]
    for (i, j), H in zip(slots, results):
        if H is not None:
            out[i, j] = H
            mask[i, j] = 1
    return out, mask


def tensor_header(episodes, tx, rx, regime, K, delta_f, dtype, rho, mask, extra=None) -> dict:
    E, S = mask.shape
    header = {
        "format": TENSOR_VERSION,
        "toolkit_version": __version__,
        "shape": [E, S, K, rx.size, tx.size],
        "dtype": dtype,
        "byte_order": "little",
        "layout": "C-order, interleaved real/imag",
        "regime": regime,
        "subcarrier_spacing": float(delta_f) if K > 1 else None,
        "rho": float(rho),
        "episode_ids": [e.id for e in episodes],
        "valid_mask": mask.tolist(),
        "tx_array": {"kind": tx.kind, "n_elements": tx.n_elements, "spacing": tx.spacing,
                     "carrier_frequency": tx.carrier_frequency},
        "rx_array": {"kind": rx.kind, "n_elements": rx.n_elements, "spacing": rx.spacing,
                     "carrier_frequency": rx.carrier_frequency},
    }
    if extra:
        header.update(extra)
    return header


def encode_tensor(header: dict, data: np.ndarray) -> bytes:
    body = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    pad = (-(len(TENSOR_MAGIC) + 8 + len(body))) % 16
    body += b" " * pad
    payload = np.ascontiguousarray(data, dtype=TENSOR_DTYPES[header["dtype"]]).tobytes()
    return TENSOR_MAGIC + struct.pack("<Q", len(body)) + body + payload


def export_channel_tensor(path, episodes: Sequence[Episode], tx: ArrayConfig, rx: ArrayConfig,
                          regime: str = "planar", K: int = 1, delta_f: float = 0.0, dtype: str = "complex64",
                          rho: float = 0.0, jobs: int = 1, extra_header: dict | None = None) -> ChannelTensor:
    """Synthesize every scene and write one self-describing tensor file."""
    if not episodes:
        raise CaviarError("empty_dataset", "no episodes to export")
    if dtype not in TENSOR_DTYPES:
        raise CaviarError("invalid_input", f"dtype must be one of {sorted(TENSOR_DTYPES)}")
    data, mask = synthesize_episodes(episodes, tx, rx, regime, K, delta_f, rho, jobs)
    header = tensor_header(episodes, tx, rx, regime, K, delta_f, dtype, rho, mask, extra_header)
    blob = encode_tensor(header, data)
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise CaviarError("io_error", str(exc)) from exc
    n_head = len(blob) - data.size * np.dtype(TENSOR_DTYPES[dtype]).itemsize
    return ChannelTensor(header, data.astype(TENSOR_DTYPES[dtype]), mask, n_head)


def read_channel_tensor(path) -> ChannelTensor:
    raw = Path(path).read_bytes()
    if raw[:8] != TENSOR_MAGIC:
        raise CaviarError("parse_error", "not a channel tensor file", at=str(path))
    (n,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16:16 + n].decode("utf-8"))
    if header.get("format") != TENSOR_VERSION:
        raise CaviarError("version_mismatch", f"tensor format {header.get('format')!r}")
    dt = np.dtype(TENSOR_DTYPES[header["dtype"]])
    data = np.frombuffer(raw, dtype=dt, offset=16 + n).reshape(header["shape"])
    return ChannelTensor(header, data, np.array(header["valid_mask"], dtype=np.uint8), 16 + n)


def tensor_file_size(header_bytes: int, shape: Sequence[int], dtype: str) -> int:
    """Expected file size: header plus itemsize bytes per complex entry."""
    return header_bytes + int(np.prod(shape)) * np.dtype(TENSOR_DTYPES[dtype]).itemsize


def file_size(path) -> int:
    return os.path.getsize(path)
