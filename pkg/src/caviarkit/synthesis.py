"""MIMO channel synthesis from per-path ray parameters.

Two regimes are provided:

* planar: the geometric model, a gain-weighted sum of rank-one outer
  products of receive and transmit steering vectors scaled by
  ``sqrt(N_rx * N_tx)``; :func:`ofdm_channel` adds a per-subcarrier delay
  phase with centred subcarrier indexing;
* spherical: every element pair sees its own path length to the first and
  last interaction points (the ray anchors), so the wavefront curvature over
  the aperture is kept.

Path contributions are accumulated in ray order with Neumaier compensated
summation so the result is insensitive to the ordering of rays.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .arrays import angles_of, apply_pose, array_centroid, direction, element_positions, steering_vector
from .core import ArrayConfig, Scene
from .errors import CaviarError


class _CompensatedSum:
    """Element-wise Neumaier summation of complex arrays."""

    def __init__(self, shape):
        self._s = np.zeros(shape, dtype=np.complex128)
        self._c = np.zeros(shape, dtype=np.complex128)

    def add(self, x: np.ndarray) -> None:
        s = self._s.view(np.float64)
        xv = np.ascontiguousarray(x, dtype=np.complex128).view(np.float64)
        t = s + xv
        big = np.abs(s) >= np.abs(xv)
        self._c.view(np.float64)[...] += np.where(big, (s - t) + xv, (xv - t) + s)
        self._s = t.view(np.complex128)

    def result(self) -> np.ndarray:
        return self._s + self._c


@dataclass(frozen=True)
class ChannelSet:
    """Per-subcarrier channels, ``matrices`` has shape (K, N_rx, N_tx)."""

    matrices: np.ndarray
    subcarrier_spacing: float | None = None

    @property
    def K(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.matrices[k]


def _require_rays(scene: Scene) -> None:
    if not scene.rays:
        raise CaviarError("no_valid_channel", "scene has no rays", scene=scene.index)


def subcarrier_offsets(K: int) -> np.ndarray:
    """Centred subcarrier indices k - (K-1)/2 for k = 0..K-1."""
    return np.arange(K) - (K - 1) / 2


def _subcarrier_gains(scene: Scene, K: int, delta_f: float) -> np.ndarray:
    """(K, L) complex gains including the delay phase of every subcarrier."""
    alpha = np.array([r.gain for r in scene.rays], dtype=np.complex128)
    if K == 1:
        return alpha[None, :]
    if any(r.delay is None for r in scene.rays):
        raise CaviarError("missing_delay", "every ray needs a delay for K > 1", scene=scene.index)
    tau = np.array([r.delay for r in scene.rays])
    phase = np.exp(-2j * np.pi * np.outer(subcarrier_offsets(K) * delta_f, tau))
    return alpha[None, :] * phase


def _planar_sum(scene: Scene, tx: ArrayConfig, rx: ArrayConfig, gains: np.ndarray) -> np.ndarray:
    K = gains.shape[0]
    acc = _CompensatedSum((K, rx.size, tx.size))
    for ell, ray in enumerate(scene.rays):
        a_rx = steering_vector(rx, ray.aoa_az, ray.aoa_el)
        a_tx = steering_vector(tx, ray.aod_az, ray.aod_el)
        acc.add((gains[:, ell, None] * a_rx)[:, :, None] * a_tx.conj()[None, None, :])
    return np.sqrt(rx.size * tx.size) * acc.result()


def geometric_channel(scene: Scene, tx: ArrayConfig, rx: ArrayConfig) -> np.ndarray:
    """Narrowband planar-wave channel, shape (N_rx, N_tx).

    Ray angles must already be in the local array frames (see
    :func:`caviarkit.arrays.apply_pose`), or both headings must be zero.
    """
    _require_rays(scene)
    return _planar_sum(scene, tx, rx, _subcarrier_gains(scene, 1, 0.0))[0]


def ofdm_channel(scene: Scene, tx: ArrayConfig, rx: ArrayConfig, K: int, delta_f: float) -> ChannelSet:
    """Planar-wave channel on K subcarriers spaced ``delta_f`` Hz apart.

    Subcarrier k applies ``exp(-j 2 pi (k - (K-1)/2) delta_f tau)`` to each
    path gain, so K=1 reproduces :func:`geometric_channel` exactly.
    """
    if K < 1:
        raise CaviarError("invalid_input", f"K must be >= 1, got {K}")
    _require_rays(scene)
    if any(r.delay is None for r in scene.rays):
        raise CaviarError("missing_delay", "every ray needs a delay", scene=scene.index)
    gains = _subcarrier_gains(scene, K, delta_f)
    return ChannelSet(_planar_sum(scene, tx, rx, gains), float(delta_f) if K > 1 else None)


def _common_wavelength(tx: ArrayConfig, rx: ArrayConfig) -> float:
    if tx.carrier_frequency != rx.carrier_frequency:
        raise CaviarError("invalid_input", "tx and rx arrays must share one carrier frequency")
    return tx.wavelength


def _distance_offsets(elements: np.ndarray, anchor: np.ndarray, lam: float):
    """Distances element->anchor and their offsets from element 0.

    The offset is formed as a difference of squares over a sum of distances,
    which stays accurate when the anchor is very far away.
    """
    dist = np.linalg.norm(elements - anchor, axis=1)
    if np.any(dist <= 1e-9 * lam):
        raise CaviarError("degenerate_geometry", "anchor coincides with an array element")
    p0 = elements[0]
    delta = elements - p0
    offset = np.einsum("ij,ij->i", delta, elements + p0 - 2 * anchor) / (dist + dist[0])
    return dist, offset


def _spherical_sum(scene: Scene, tx: ArrayConfig, rx: ArrayConfig, gains: np.ndarray, rho: float) -> np.ndarray:
    lam = _common_wavelength(tx, rx)
    tx_el = element_positions(tx, scene.tx_pose)
    rx_el = element_positions(rx, scene.rx_pose)
    K = gains.shape[0]
    acc = _CompensatedSum((K, rx.size, tx.size))
    for ell, ray in enumerate(scene.rays):
        s, s_off = _distance_offsets(tx_el, np.asarray(ray.tx_anchor), lam)
        r, r_off = _distance_offsets(rx_el, np.asarray(ray.rx_anchor), lam)
        # path length minus the reference length through element 0 on both sides
        excess = r_off[:, None] + s_off[None, :]
        resp = np.exp(-2j * np.pi * excess / lam)
        if rho:
            resp = resp * ((r[0] * s[0]) / np.outer(r, s)) ** rho
        acc.add(gains[:, ell, None, None] * resp[None])
    return acc.result()


def _require_anchors(scene: Scene) -> None:
    for i, ray in enumerate(scene.rays):
        if not ray.has_anchors:
            raise CaviarError("missing_anchor", "spherical regime needs tx_anchor and rx_anchor",
                              scene=scene.index, ray=i)


def spherical_channel(scene: Scene, tx: ArrayConfig, rx: ArrayConfig, rho: float = 0.0) -> np.ndarray:
    """Element-wise spherical-wave channel, shape (N_rx, N_tx).

    ``H[m, n] = sum_l alpha_l * A * exp(-j 2 pi (r_lm + s_ln - d_l) / lambda)``
    with ``s_ln`` the distance from tx element n to the tx anchor, ``r_lm``
    from the rx anchor to rx element m, and ``d_l`` the same path length
    measured through element 0 of each array (the pose position, which is
    also the phase origin of :func:`steering_vector`). The amplitude factor
    is ``A = (r_l0 * s_l0 / (r_lm * s_ln)) ** rho``; ``rho=0`` keeps only
    the phase curvature.
    """
    _require_rays(scene)
    _require_anchors(scene)
    return _spherical_sum(scene, tx, rx, _subcarrier_gains(scene, 1, 0.0), rho)[0]


def spherical_ofdm_channel(scene: Scene, tx: ArrayConfig, rx: ArrayConfig, K: int, delta_f: float,
                           rho: float = 0.0) -> ChannelSet:
    """Spherical-wave counterpart of :func:`ofdm_channel`."""
    if K < 1:
        raise CaviarError("invalid_input", f"K must be >= 1, got {K}")
    _require_rays(scene)
    _require_anchors(scene)
    if any(r.delay is None for r in scene.rays):
        raise CaviarError("missing_delay", "every ray needs a delay", scene=scene.index)
    gains = _subcarrier_gains(scene, K, delta_f)
    return ChannelSet(_spherical_sum(scene, tx, rx, gains, rho), float(delta_f) if K > 1 else None)


REGIMES = ("planar", "spherical")


def synthesize(scene: Scene, tx: ArrayConfig, rx: ArrayConfig, regime: str = "planar",
               K: int = 1, delta_f: float = 0.0, rho: float = 0.0) -> np.ndarray:
    """(K, N_rx, N_tx) channel of a scene whose rays are in the global frame.

    The planar regime applies the yaw correction first; the spherical regime
    places elements using the poses directly.
    """
    if regime == "planar":
        local = apply_pose(scene)
        if K == 1:
            return geometric_channel(local, tx, rx)[None]
        return ofdm_channel(local, tx, rx, K, delta_f).matrices
    if regime == "spherical":
        if K == 1:
            return spherical_channel(scene, tx, rx, rho)[None]
        return spherical_ofdm_channel(scene, tx, rx, K, delta_f, rho).matrices
    raise CaviarError("invalid_input", f"unknown regime {regime!r}; expected one of {REGIMES}")


def anchor_angles(scene: Scene, tx: ArrayConfig, rx: ArrayConfig) -> Scene:
    """Replace ray angles by the directions implied by the anchors.

    Departure angles point from the tx array centroid to the tx anchor;
    arrival angles point from the rx anchor to the rx array centroid. The
    result is in the global frame, ready for :func:`synthesize`.
    """
    _require_anchors(scene)
    tx_c = array_centroid(tx, scene.tx_pose)
    rx_c = array_centroid(rx, scene.rx_pose)
    rays = []
    for ray in scene.rays:
        d_az, d_el = angles_of(np.asarray(ray.tx_anchor) - tx_c)
        a_az, a_el = angles_of(rx_c - np.asarray(ray.rx_anchor))
        rays.append(replace(ray, aod_az=d_az, aod_el=d_el, aoa_az=a_az, aoa_el=a_el))
    return scene.with_rays(rays)


def attach_anchors(scene: Scene, tx: ArrayConfig, rx: ArrayConfig, distance: float) -> Scene:
    """Place anchors ``distance`` metres away along each ray's global directions.

    Inverse of :func:`anchor_angles`: the tx anchor lies along the departure
    direction from the tx centroid, the rx anchor upstream of the rx centroid
    along the arrival direction.
    """
    tx_c = array_centroid(tx, scene.tx_pose)
    rx_c = array_centroid(rx, scene.rx_pose)
    rays = []
    for ray in scene.rays:
        ta = tx_c + distance * direction(ray.aod_az, ray.aod_el)
        ra = rx_c - distance * direction(ray.aoa_az, ray.aoa_el)
        rays.append(replace(ray, tx_anchor=tuple(ta), rx_anchor=tuple(ra)))
    return scene.with_rays(rays)


def relative_gap(H: np.ndarray, H_ref: np.ndarray) -> float:
    """Relative Frobenius distance ``||H - H_ref|| / ||H_ref||``."""
    return float(np.linalg.norm(H - H_ref) / np.linalg.norm(H_ref))
