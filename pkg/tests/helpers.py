"""Independent oracles and random fixtures shared by the test modules.

The oracles use scalar ``cmath`` loops written straight from the model
equations; they never call the package's vectorised code paths.
"""

import cmath
import math

import numpy as np

from caviarkit.core import ArrayConfig, Pose, RayPath, Scene


def naive_steering(array, az, el):
    rows, cols = array.shape
    dl = array.spacing / array.wavelength
    ca, sa = math.cos(math.radians(az)), math.sin(math.radians(az))
    ce = math.cos(math.radians(el))
    out = []
    for r in range(rows):
        for c in range(cols):
            phase = c * ce * ca + (r * ce * sa if array.kind == "UPA" else 0.0)
            out.append(cmath.exp(-2j * math.pi * dl * phase) / math.sqrt(rows * cols))
    return out


def naive_geometric(scene, tx, rx, gains=None):
    nr, nt = rx.size, tx.size
    H = [[0j] * nt for _ in range(nr)]
    for ell, ray in enumerate(scene.rays):
        alpha = ray.gain if gains is None else gains[ell]
        ar = naive_steering(rx, ray.aoa_az, ray.aoa_el)
        at = naive_steering(tx, ray.aod_az, ray.aod_el)
        for m in range(nr):
            for n in range(nt):
                H[m][n] += alpha * ar[m] * at[n].conjugate()
    scale = math.sqrt(nr * nt)
    return np.array([[scale * v for v in row] for row in H])


def naive_ofdm(scene, tx, rx, K, delta_f):
    out = []
    for k in range(K):
        off = k - (K - 1) / 2
        gains = [r.gain * cmath.exp(-2j * math.pi * off * delta_f * r.delay) for r in scene.rays]
        out.append(naive_geometric(scene, tx, rx, gains))
    return np.array(out)


def random_array(rng, max_n=16, kind=None, fc=28e9):
    kind = kind or ("ULA" if rng.random() < 0.6 else "UPA")
    if kind == "ULA":
        n = int(rng.integers(1, max_n + 1))
    else:
        rows = int(rng.integers(1, 5))
        n = (rows, int(rng.integers(1, max(1, max_n // rows) + 1)))
    lam = 299_792_458.0 / fc
    spacing = lam * float(rng.uniform(0.3, 1.0))
    return ArrayConfig(kind, n, spacing, fc)


def random_ray(rng, with_delay=True):
    return RayPath(
        complex(rng.normal(), rng.normal()),
        float(rng.uniform(0, 360)), float(rng.uniform(-90, 90)),
        float(rng.uniform(0, 360)), float(rng.uniform(-90, 90)),
        float(rng.uniform(0, 1e-6)) if with_delay else None,
    )


def random_scene(rng, L, index=0, headings=False):
    rays = [random_ray(rng) for _ in range(L)]
    tx = Pose(tuple(rng.uniform(-50, 50, 3)), float(rng.uniform(0, 360)) if headings else 0.0)
    rx = Pose(tuple(rng.uniform(-50, 50, 3)), float(rng.uniform(0, 360)) if headings else 0.0)
    return Scene(index, rays, tx, rx, {})


def synthetic_episodes(E, S, T, seed=0, fixed=False, empty_every=0, anchors=None):
    """RDM-based episodes shaped like a ray-tracing release.

    ``fixed`` keeps one receiver position per episode; ``empty_every`` makes
    every n-th scene ray-less; ``anchors`` is an optional anchor distance.
    """
    from caviarkit.core import Episode
    from caviarkit.rdmgeo import RdmGeoSpec, sample_rdm_scene
    from caviarkit.synthesis import attach_anchors

    spec = RdmGeoSpec("HARD", seed=seed, rx_region=((0, 100), (0, 100), (1.5, 1.5)))
    tx = ArrayConfig("ULA", 64, carrier_frequency=60e9)
    rx = ArrayConfig("ULA", 8, carrier_frequency=60e9)
    episodes = []
    for e in range(E):
        scenes = []
        for s in range(S):
            sc = sample_rdm_scene(spec, e * S + s)
            if fixed:
                sc = Scene(s, sc.rays, sc.tx_pose, sample_rdm_scene(spec, e * S).rx_pose, {})
            else:
                sc = Scene(s, sc.rays, sc.tx_pose, sc.rx_pose, {"speed": float(s)})
            if empty_every and (e * S + s) % empty_every == 0:
                sc = sc.with_rays(())
            if anchors:
                sc = attach_anchors(sc, tx, rx, anchors)
            scenes.append(sc)
        episodes.append(Episode(e, tuple(scenes), T))
    return episodes
