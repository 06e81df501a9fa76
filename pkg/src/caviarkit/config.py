"""Declarative experiment configuration (JSON) shared by all CLI subcommands.

A config document looks like::

    {
      "name": "s011-like",
      "seed": 7,
      "dataset": "data/s011",
      "outputs": "out",
      "receiver_type": "mobile",
      "episodes": 2,
      "scenes_per_episode": 3,
      "sampling_interval": 0.5,
      "episode_spacing": 6.0,
      "arrays": {"tx": {"kind": "ULA", "n_elements": 64},
                 "rx": {"kind": "ULA", "n_elements": 8}},
      "source": {"kind": "rdm-geo", "variant": "HARD", "L": 2},
      "synthesis": {"regime": "planar", "K": 1, "dtype": "complex64"},
      "labels": {"M_tx": 32, "M_rx": 8, "k_nn": 5},
      "estimation": {"snr_grid": [-10, -5, 0, 5, 10]}
    }

Relative paths are resolved against the directory holding the config file.
See ``docs/config.md`` for every key.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

from .core import ArrayConfig, Pose
from .errors import CaviarError

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_count = {"type": "integer", "minimum": 1}
_point = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}
_pose = {"type": "object", "properties": {"position": _point, "heading": _num}, "additionalProperties": False}

_array = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["ULA", "UPA", "ula", "upa"]},
        "n_elements": {"oneOf": [_count, {"type": "array", "items": _count, "minItems": 2, "maxItems": 2}]},
        "spacing": _pos,
    },
    "required": ["n_elements"],
    "additionalProperties": False,
}

_rdm_source = {
    "type": "object",
    "properties": {
        "kind": {"const": "rdm-geo"},
        "variant": {"enum": ["HARD", "EASY", "hard", "easy"]},
        "L": _count,
        "nominal_angles": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4}},
        "spread": _pos,
        "tau_max": {"type": "number", "minimum": 0},
        "random_elevation": {"type": "boolean"},
        "rx_region": {"type": "array", "minItems": 3, "maxItems": 3,
                      "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
        "tx_pose": _pose,
        "anchor_distance": _pos,
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_rays_source = {
    "type": "object",
    "properties": {
        "kind": {"const": "rays"},
        "rays_file": {"type": "string"},
        "poses_file": {"type": "string"},
        "anchor_distance": _pos,
    },
    "required": ["kind", "rays_file"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "dataset": {"type": "string"},
        "outputs": {"type": "string"},
        "receiver_type": {"enum": ["fixed", "mobile"]},
        "episodes": _count,
        "scenes_per_episode": _count,
        "sampling_interval": _pos,
        "episode_spacing": {"type": "number", "minimum": 0},
        "episode_kind": {"enum": ["trajectory", "snapshot"]},
        "carrier_frequency": _pos,
        "arrays": {"type": "object", "properties": {"tx": _array, "rx": _array},
                   "required": ["tx", "rx"], "additionalProperties": False},
        "source": {"oneOf": [_rdm_source, _rays_source]},
        "synthesis": {
            "type": "object",
            "properties": {
                "regime": {"enum": ["planar", "spherical", "both"]},
                "K": _count,
                "delta_f": {"type": "number", "minimum": 0},
                "dtype": {"enum": ["complex64", "complex128"]},
                "rho": {"enum": [0, 1]},
            },
            "additionalProperties": False,
        },
        "labels": {
            "type": "object",
            "properties": {
                "M_tx": _count, "M_rx": _count, "k_nn": _count,
                "K_values": {"type": "array", "items": _count, "minItems": 1},
                "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "regime": {"enum": ["planar", "spherical"]},
            },
            "additionalProperties": False,
        },
        "estimation": {
            "type": "object",
            "properties": {
                "snr_grid": {"type": "array", "items": _num, "minItems": 1},
                "regime": {"enum": ["planar", "spherical"]},
                "n_pilots": _count,
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "bench": {
            "type": "object",
            "properties": {"repeats": _count},
            "additionalProperties": False,
        },
    },
    "required": ["name", "seed", "dataset"],
    "additionalProperties": False,
}

DEFAULTS = {
    "outputs": "outputs",
    "receiver_type": "mobile",
    "episodes": 1,
    "scenes_per_episode": 1,
    "sampling_interval": 0.5,
    "episode_spacing": 6.0,
    "episode_kind": "trajectory",
    "carrier_frequency": 60e9,
    "arrays": {"tx": {"kind": "ULA", "n_elements": 64}, "rx": {"kind": "ULA", "n_elements": 8}},
    "source": {"kind": "rdm-geo"},
    "synthesis": {"regime": "planar", "K": 1, "delta_f": 0.0, "dtype": "complex64", "rho": 0},
    "labels": {"M_tx": 32, "M_rx": 8, "k_nn": 5, "K_values": [1, 2, 5, 10, 20, 30, 50, 100, 256],
               "train_fraction": 0.8, "regime": "planar"},
    "estimation": {"snr_grid": [-10, -5, 0, 5, 10], "regime": "planar"},
    "bench": {"repeats": 3},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "source":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_config(doc: dict) -> None:
    """Raise ``config_error`` naming the offending field path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise CaviarError("config_error", f"{path}: {e.message}")


class Config:
    """Validated config with defaults applied and paths resolved."""

    def __init__(self, doc: dict, base_dir: Path = Path(".")):
        validate_config(doc)
        self.raw = doc
        self.doc = _merge(DEFAULTS, doc)
        self.base_dir = Path(base_dir)

    @classmethod
    def load(cls, path) -> "Config":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise CaviarError("config_error", f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise CaviarError("config_error", f"{path}:{exc.lineno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise CaviarError("config_error", "<root>: config must be a JSON object")
        return cls(doc, path.parent)

    def __getitem__(self, key):
        return self.doc[key]

    def path(self, key_or_value: str) -> Path:
        value = self.doc.get(key_or_value, key_or_value)
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def sha256(self) -> str:
        """Hash of the raw document in canonical JSON form."""
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def array(self, side: str) -> ArrayConfig:
        a = self.doc["arrays"][side]
        n = a["n_elements"]
        return ArrayConfig(a.get("kind", "ULA"), tuple(n) if isinstance(n, list) else n, a.get("spacing"),
                           self.doc["carrier_frequency"])

    def tx_pose(self) -> Pose:
        p = self.doc["source"].get("tx_pose", {})
        return Pose(**p)
