"""Domain types for rays, arrays, poses and episodic datasets.

Angle convention used throughout the package: azimuth is measured
counterclockwise from the global +x axis in the horizontal plane, elevation
from the horizontal plane (positive upward). Angles are stored in degrees.
Departure angles point from the transmitter towards the first interaction
point; arrival angles give the propagation direction of the wave as it
reaches the receiver (from the last interaction point towards the array).

All types are frozen dataclasses. Construction of configuration types
(:class:`ArrayConfig`, :class:`Pose`) rejects bad values immediately; ray and
scene records are permissive and are checked with :func:`validate_scene`, so
that malformed data can be reported instead of crashing a loader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import CaviarError

SPEED_OF_LIGHT = 299_792_458.0

EPISODE_KINDS = ("trajectory", "snapshot")


def wrap_degrees(x: float) -> float:
    """Map an angle onto [0, 360)."""
    y = float(x) % 360.0
    # tiny negative inputs round up to exactly 360.0
    return 0.0 if y == 360.0 else y


def _point(p) -> tuple[float, float, float] | None:
    if p is None:
        return None
    t = tuple(float(v) for v in p)
    if len(t) != 3:
        raise CaviarError("invalid_input", f"expected a 3-D point, got {p!r}")
    return t


@dataclass(frozen=True)
class RayPath:
    """One multipath component."""

    gain: complex
    aod_az: float
    aod_el: float
    aoa_az: float
    aoa_el: float
    delay: float | None = None
    tx_anchor: tuple[float, float, float] | None = None
    rx_anchor: tuple[float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "gain", complex(self.gain))
        for name in ("aod_az", "aod_el", "aoa_az", "aoa_el"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.delay is not None:
            object.__setattr__(self, "delay", float(self.delay))
        object.__setattr__(self, "tx_anchor", _point(self.tx_anchor))
        object.__setattr__(self, "rx_anchor", _point(self.rx_anchor))

    @property
    def has_anchors(self) -> bool:
        return self.tx_anchor is not None and self.rx_anchor is not None


@dataclass(frozen=True)
class ArrayConfig:
    """Antenna array geometry.

    A ULA lies along the local x axis. A UPA has ``cols`` elements along x
    and ``rows`` along y; elements are flattened row-major (index
    ``r * cols + c``). ``spacing=None`` means half a wavelength.
    """

    kind: str = "ULA"
    n_elements: int | tuple[int, int] = 8
    spacing: float | None = None
    carrier_frequency: float = 60e9

    def __post_init__(self):
        kind = str(self.kind).upper()
        object.__setattr__(self, "kind", kind)
        if kind not in ("ULA", "UPA"):
            raise CaviarError("invalid_input", f"unknown array kind {self.kind!r}")
        if kind == "ULA":
            n = self.n_elements
            if isinstance(n, (tuple, list)):
                raise CaviarError("invalid_input", "ULA takes a single element count")
            n = int(n)
            if n < 1:
                raise CaviarError("invalid_input", "n_elements must be >= 1")
            object.__setattr__(self, "n_elements", n)
        else:
            rows, cols = (int(v) for v in self.n_elements)
            if rows < 1 or cols < 1:
                raise CaviarError("invalid_input", "UPA rows and cols must be >= 1")
            object.__setattr__(self, "n_elements", (rows, cols))
        if not (self.carrier_frequency > 0 and math.isfinite(self.carrier_frequency)):
            raise CaviarError("invalid_input", "carrier_frequency must be positive")
        object.__setattr__(self, "carrier_frequency", float(self.carrier_frequency))
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.wavelength / 2)
        elif not self.spacing > 0:
            raise CaviarError("invalid_input", "spacing must be positive")
        else:
            object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols); a ULA is a single row."""
        if self.kind == "ULA":
            return (1, self.n_elements)
        return self.n_elements

    @property
    def size(self) -> int:
        rows, cols = self.shape
        return rows * cols


@dataclass(frozen=True)
class Pose:
    """Array mounting point and yaw. Pitch and roll are always zero."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", _point(self.position))
        h = float(self.heading)
        if not math.isfinite(h):
            raise CaviarError("invalid_input", "heading must be finite")
        object.__setattr__(self, "heading", wrap_degrees(h))


@dataclass(frozen=True)
class Scene:
    """Paired record for one time instant: rays plus context features.

    An empty ``rays`` tuple is allowed and marks a scene without a valid
    channel (blocked or out of coverage).
    """

    index: int
    rays: tuple[RayPath, ...] = ()
    tx_pose: Pose = field(default_factory=Pose)
    rx_pose: Pose = field(default_factory=Pose)
    features: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "index", int(self.index))
        object.__setattr__(self, "rays", tuple(self.rays))
        object.__setattr__(self, "features", dict(self.features))

    @property
    def is_valid_channel(self) -> bool:
        return len(self.rays) > 0

    def with_rays(self, rays: Sequence[RayPath]) -> "Scene":
        return replace(self, rays=tuple(rays))


@dataclass(frozen=True)
class Episode:
    id: int
    scenes: tuple[Scene, ...]
    sampling_interval: float
    kind: str = "trajectory"

    def __post_init__(self):
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "scenes", tuple(self.scenes))
        object.__setattr__(self, "sampling_interval", float(self.sampling_interval))
        if self.kind not in EPISODE_KINDS:
            raise CaviarError("invalid_input", f"unknown episode kind {self.kind!r}")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: str = ""

    @property
    def is_flag(self) -> bool:
        """Flags describe data that is representable but notable."""
        return self.code in FLAG_CODES


FLAG_CODES = frozenset({"no_valid_channel"})


def _angle_violations(ray: RayPath, where: str) -> list[Violation]:
    out = []
    for name in ("aod_az", "aoa_az"):
        v = getattr(ray, name)
        if not (0.0 <= v < 360.0):
            out.append(Violation("angle_out_of_range", f"{name}={v} not in [0, 360)", where))
    for name in ("aod_el", "aoa_el"):
        v = getattr(ray, name)
        if not (-90.0 <= v <= 90.0):
            out.append(Violation("angle_out_of_range", f"{name}={v} not in [-90, 90]", where))
    return out


def validate_scene(scene: Scene) -> list[Violation]:
    """Every invariant violation of ``scene``; an empty list means valid.

    A scene with no rays yields a single ``no_valid_channel`` flag.
    """
    out: list[Violation] = []
    if not scene.rays:
        out.append(Violation("no_valid_channel", "scene has no rays", f"scene {scene.index}"))
    for i, ray in enumerate(scene.rays):
        where = f"scene {scene.index} ray {i}"
        out.extend(_angle_violations(ray, where))
        if ray.delay is not None and not (ray.delay >= 0.0 and math.isfinite(ray.delay)):
            out.append(Violation("negative_delay", f"delay={ray.delay}", where))
        if not (math.isfinite(ray.gain.real) and math.isfinite(ray.gain.imag)):
            out.append(Violation("nonfinite_gain", f"gain={ray.gain}", where))
        if (ray.tx_anchor is None) != (ray.rx_anchor is None):
            out.append(Violation("anchor_incomplete", "only one anchor present", where))
        for anchor in (ray.tx_anchor, ray.rx_anchor):
            if anchor is not None and not all(math.isfinite(c) for c in anchor):
                out.append(Violation("nonfinite_anchor", f"anchor={anchor}", where))
    for pose, name in ((scene.tx_pose, "tx_pose"), (scene.rx_pose, "rx_pose")):
        if not all(math.isfinite(c) for c in pose.position):
            out.append(Violation("nonfinite_position", f"{name}={pose.position}", f"scene {scene.index}"))
    return out


def validate_episode(episode: Episode) -> list[Violation]:
    """Scene-level violations plus episode ordering rules."""
    out: list[Violation] = []
    where = f"episode {episode.id}"
    if not (episode.sampling_interval > 0):
        out.append(Violation("bad_sampling_interval", f"T={episode.sampling_interval}", where))
    indices = [s.index for s in episode.scenes]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        out.append(Violation("scene_order", "scene indices not strictly increasing", where))
    if episode.kind == "snapshot" and len(episode.scenes) != 1:
        out.append(Violation("snapshot_size", f"snapshot episode has {len(indices)} scenes", where))
    for scene in episode.scenes:
        for v in validate_scene(scene):
            out.append(Violation(v.code, v.message, f"{where} {v.location}"))
    return out


@dataclass(frozen=True)
class SummaryRecord:
    """Dataset shape and timing, one row per dataset."""

    episodes: int
    scenes_per_episode: int | tuple[int, int]
    total_scenes: int
    valid_channels: int
    sampling_interval: float | tuple[float, float]
    episode_spacing: float | None = None

    def as_row(self) -> dict[str, object]:
        return {
            "Time between scenes (ms)": _scaled(self.sampling_interval, 1e3),
            "Time between episodes (s)": self.episode_spacing,
            "Number of episodes": self.episodes,
            "Number of scenes per episode": self.scenes_per_episode,
            "Number of valid channels": self.valid_channels,
        }


def _scaled(v, factor):
    if isinstance(v, tuple):
        return tuple(x * factor for x in v)
    return v * factor


def _collapse(values):
    lo, hi = min(values), max(values)
    return lo if lo == hi else (lo, hi)


def dataset_summary(episodes: Sequence[Episode], episode_spacing: float | None = None) -> SummaryRecord:
    """Count episodes, scenes and valid channels.

    When episodes differ in length (or sampling interval) the field is a
    ``(min, max)`` pair instead of a single number.
    """
    if not episodes:
        raise CaviarError("empty_dataset", "no episodes")
    counts = [len(e.scenes) for e in episodes]
    return SummaryRecord(
        episodes=len(episodes),
        scenes_per_episode=_collapse(counts),
        total_scenes=sum(counts),
        valid_channels=sum(s.is_valid_channel for e in episodes for s in e.scenes),
        sampling_interval=_collapse([e.sampling_interval for e in episodes]),
        episode_spacing=episode_spacing,
    )
