"""Array responses and the yaw correction that keeps arrays aligned with vehicles."""

from __future__ import annotations

import numpy as np
from dataclasses import replace

from .core import ArrayConfig, Pose, RayPath, Scene, wrap_degrees


def direction(az_deg: float, el_deg: float) -> np.ndarray:
    """Unit vector for an (azimuth, elevation) pair in degrees."""
    az, el = np.deg2rad(az_deg), np.deg2rad(el_deg)
    return np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])


def angles_of(vec) -> tuple[float, float]:
    """(azimuth in [0, 360), elevation in [-90, 90]) of a non-zero vector."""
    x, y, z = (float(v) for v in vec)
    az = wrap_degrees(np.degrees(np.arctan2(y, x)))
    el = float(np.degrees(np.arctan2(z, np.hypot(x, y))))
    return az, el


def steering_vector(array: ArrayConfig, az: float, el: float) -> np.ndarray:
    """Unit-norm plane-wave response of ``array`` for a local-frame direction.

    ULA entry ``n`` is ``exp(-j 2 pi (d/lambda) n cos(el) cos(az)) / sqrt(N)``.
    A UPA is the Kronecker product of a y-axis factor (rows, phase term
    ``cos(el) sin(az)``) and an x-axis factor (cols).
    """
    az_r, el_r = np.deg2rad(az), np.deg2rad(el)
    k_d = 2 * np.pi * array.spacing / array.wavelength
    rows, cols = array.shape
    ax = np.exp(-1j * k_d * np.arange(cols) * (np.cos(el_r) * np.cos(az_r))) / np.sqrt(cols)
    if array.kind == "ULA":
        return ax
    ay = np.exp(-1j * k_d * np.arange(rows) * (np.cos(el_r) * np.sin(az_r))) / np.sqrt(rows)
    return np.kron(ay, ax)


def local_element_positions(array: ArrayConfig) -> np.ndarray:
    """(N, 3) element coordinates in the array frame; element 0 at the origin."""
    rows, cols = array.shape
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    pos = np.zeros((rows * cols, 3))
    pos[:, 0] = c.ravel() * array.spacing
    pos[:, 1] = r.ravel() * array.spacing
    return pos


def yaw_matrix(heading: float) -> np.ndarray:
    h = np.deg2rad(heading)
    c, s = np.cos(h), np.sin(h)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def element_positions(array: ArrayConfig, pose: Pose) -> np.ndarray:
    """(N, 3) global element coordinates for an array mounted at ``pose``."""
    return np.asarray(pose.position) + local_element_positions(array) @ yaw_matrix(pose.heading).T


def array_centroid(array: ArrayConfig, pose: Pose) -> np.ndarray:
    return element_positions(array, pose).mean(axis=0)


def correct_orientation(raw_az: float, heading: float) -> float:
    """Express a global azimuth in the frame of an array yawed by ``heading``."""
    return wrap_degrees(float(raw_az) - float(heading))


def _correct_ray(ray: RayPath, tx_heading: float, rx_heading: float) -> RayPath:
    return replace(
        ray,
        aod_az=correct_orientation(ray.aod_az, tx_heading),
        aoa_az=correct_orientation(ray.aoa_az, rx_heading),
    )


def apply_pose(scene: Scene) -> Scene:
    """Rotate ray azimuths into the local frames of the tx and rx arrays.

    Elevations are untouched (yaw only). Poses and every other field are
    carried over unchanged.
    """
    th, rh = scene.tx_pose.heading, scene.rx_pose.heading
    if th == 0.0 and rh == 0.0:
        return scene
    return scene.with_rays([_correct_ray(r, th, rh) for r in scene.rays])


def rotate_scene(scene: Scene, delta: float) -> Scene:
    """Rotate the whole world by ``delta`` degrees of yaw about the z axis.

    Ray azimuths, headings, positions and anchors all turn together, so the
    geometry seen from each array is unchanged.
    """
    rot = yaw_matrix(delta)

    def turn(p):
        return None if p is None else tuple(float(v) for v in rot @ np.asarray(p))

    rays = [
        replace(
            r,
            aod_az=wrap_degrees(r.aod_az + delta),
            aoa_az=wrap_degrees(r.aoa_az + delta),
            tx_anchor=turn(r.tx_anchor),
            rx_anchor=turn(r.rx_anchor),
        )
        for r in scene.rays
    ]
    tx = Pose(turn(scene.tx_pose.position), scene.tx_pose.heading + delta)
    rx = Pose(turn(scene.rx_pose.position), scene.rx_pose.heading + delta)
    return replace(scene, rays=tuple(rays), tx_pose=tx, rx_pose=rx)
