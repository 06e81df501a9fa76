"""Random-parameter geometric channels (RDM-GEO), HARD and EASY variants.

Randomness comes from NumPy's PCG64 bit generator seeded through
``SeedSequence(seed, spawn_key=(scene_index,))``. Only the raw 64-bit output
stream is used: uniforms are the top 53 bits scaled to [0, 1) and Gaussians
come from Box-Muller on those uniforms. NumPy guarantees the PCG64 raw
stream across versions and platforms, while ``Generator`` distribution
methods carry no such promise, so draws here are reproducible bit for bit.

Each scene owns its own sub-stream, which makes batches prefix-stable and
lets scenes be generated in any order or in parallel.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Pose, RayPath, Scene, wrap_degrees
from .errors import CaviarError

RNG_ALGORITHM = "pcg64-seedsequence-raw53-boxmuller/1"

VARIANTS = ("HARD", "EASY")

# (aod_az, aod_el, aoa_az, aoa_el) per path, degrees
DEFAULT_EASY_NOMINALS = (
    (317.8586, 0.0, 46.4871, 0.0),
    (56.1069, 0.0, 24.0976, 0.0),
)


class SceneStream:
    """Deterministic uniform/Gaussian source for one scene."""

    def __init__(self, seed: int, index: int, stream: int = 0):
        if seed < 0 or index < 0:
            raise CaviarError("invalid_input", "seed and index must be non-negative")
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(index), int(stream)))
        self._bits = np.random.PCG64(ss)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def complex_normal(self, n: int) -> np.ndarray:
        """n i.i.d. CN(0, 1) samples (unit variance per complex sample)."""
        u = self.uniform(2 * n)
        radius = np.sqrt(-np.log1p(-u[0::2]))
        theta = 2 * np.pi * u[1::2]
        return radius * (np.cos(theta) + 1j * np.sin(theta))


@dataclass(frozen=True)
class RdmGeoSpec:
    """Distribution of one RDM-GEO scene.

    HARD draws azimuths uniformly on [0, 360) and elevations as
    ``180 u - 90``; ``random_elevation=False`` pins elevations to zero.
    EASY draws every angle uniformly on ``nominal +- spread/2``.
    ``rx_region`` optionally draws a receiver position uniformly inside an
    axis-aligned box ``((xmin, xmax), (ymin, ymax), (zmin, zmax))``.
    """

    variant: str = "HARD"
    L: int = 2
    nominal_angles: tuple[tuple[float, float, float, float], ...] | None = None
    spread: float = 3.0
    seed: int = 0
    tau_max: float = 100e-9
    random_elevation: bool = True
    rx_region: tuple[tuple[float, float], ...] | None = None
    tx_pose: Pose = field(default_factory=Pose)

    def __post_init__(self):
        variant = str(self.variant).upper()
        object.__setattr__(self, "variant", variant)
        if variant not in VARIANTS:
            raise CaviarError("invalid_input", f"variant must be one of {VARIANTS}")
        if int(self.L) < 1:
            raise CaviarError("invalid_input", "L must be >= 1")
        object.__setattr__(self, "L", int(self.L))
        if not self.spread > 0:
            raise CaviarError("invalid_input", "spread must be positive")
        if not self.tau_max >= 0:
            raise CaviarError("invalid_input", "tau_max must be non-negative")
        if variant == "EASY":
            nominal = self.nominal_angles
            if nominal is None and self.L == len(DEFAULT_EASY_NOMINALS):
                nominal = DEFAULT_EASY_NOMINALS
            if nominal is None or len(nominal) != self.L:
                raise CaviarError("invalid_input", "EASY needs one nominal 4-tuple per path")
            nominal = tuple(tuple(float(a) for a in row) for row in nominal)
            for row in nominal:
                if len(row) != 4:
                    raise CaviarError("invalid_input", "nominal angles are (aod_az, aod_el, aoa_az, aoa_el)")
                for el in (row[1], row[3]):
                    if el - self.spread / 2 < -90 or el + self.spread / 2 > 90:
                        raise CaviarError("invalid_input", "nominal elevation +- spread/2 leaves [-90, 90]")
            object.__setattr__(self, "nominal_angles", nominal)
        if self.rx_region is not None:
            region = tuple(tuple(float(v) for v in b) for b in self.rx_region)
            if len(region) != 3 or any(len(b) != 2 or b[1] < b[0] for b in region):
                raise CaviarError("invalid_input", "rx_region is ((xmin, xmax), (ymin, ymax), (zmin, zmax))")
            object.__setattr__(self, "rx_region", region)
        if not isinstance(self.tx_pose, Pose):
            object.__setattr__(self, "tx_pose", Pose(**self.tx_pose))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tx_pose"] = {"position": list(self.tx_pose.position), "heading": self.tx_pose.heading}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RdmGeoSpec":
        return cls(**d)


def _easy_angle(nominal: float, spread: float, u: float) -> float:
    lo, hi = nominal - spread / 2, nominal + spread / 2
    v = lo + spread * u
    return np.nextafter(hi, lo) if v >= hi else v


def sample_rdm_scene(spec: RdmGeoSpec, index: int = 0) -> Scene:
    """Scene number ``index`` of the seeded RDM-GEO stream."""
    rng = SceneStream(spec.seed, index)
    L = spec.L
    gains = rng.complex_normal(L)
    u = rng.uniform(4 * L).reshape(L, 4)
    delays = spec.tau_max * rng.uniform(L)
    rays = []
    for ell in range(L):
        if spec.variant == "HARD":
            d_az, a_az = 360.0 * u[ell, 0], 360.0 * u[ell, 2]
            if spec.random_elevation:
                d_el, a_el = 180.0 * u[ell, 1] - 90.0, 180.0 * u[ell, 3] - 90.0
            else:
                d_el = a_el = 0.0
        else:
            nom = spec.nominal_angles[ell]
            d_az, d_el, a_az, a_el = (_easy_angle(nom[i], spec.spread, u[ell, i]) for i in range(4))
        rays.append(RayPath(gains[ell], wrap_degrees(d_az), d_el, wrap_degrees(a_az), a_el, delays[ell]))
    rx_pose = Pose()
    if spec.rx_region is not None:
        lo = np.array([b[0] for b in spec.rx_region])
        hi = np.array([b[1] for b in spec.rx_region])
        rx_pose = Pose(tuple(lo + (hi - lo) * rng.uniform(3)))
    return Scene(index, tuple(rays), spec.tx_pose, rx_pose, {})


def sample_rdm_batch(spec: RdmGeoSpec, n: int, start: int = 0) -> list[Scene]:
    """Scenes ``start .. start + n - 1``; any batch is a prefix of a longer one."""
    if n < 1:
        raise CaviarError("invalid_input", "n must be >= 1")
    return [sample_rdm_scene(spec, i) for i in range(start, start + n)]
