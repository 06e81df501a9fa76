"""1-bit receiver measurements, a least-squares baseline and NMSE scoring.

SNR convention: ``noise_variance = signal_power / 10**(snr_db / 10)`` where
``signal_power`` is the mean received power per antenna and pilot. With
orthonormal pilots and channels normalised to ``||H||_F^2 = N_rx * N_tx``
(see :func:`normalize_channel`) that power is 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CaviarError
from .rdmgeo import SceneStream

RIDGE = 1e-9


@dataclass(frozen=True)
class PilotPlan:
    """Transmit pilots (columns of an N_tx x N_p matrix) and the SNR grid.

    ``channel_energy`` is the expected ``||H||_F^2`` used to restore the
    amplitude that 1-bit outputs discard; ``None`` disables rescaling.
    """

    tx_pilots: np.ndarray
    snr_grid: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0)
    signal_power: float = 1.0
    channel_energy: float | None = None
    _lsq: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        P = np.asarray(self.tx_pilots, dtype=np.complex128)
        if P.ndim != 2 or P.shape[1] < 1:
            raise CaviarError("invalid_input", "tx_pilots must be an N_tx x N_p matrix with N_p >= 1")
        if not np.allclose(np.linalg.norm(P, axis=0), 1.0, rtol=0, atol=1e-12):
            raise CaviarError("invalid_input", "pilot columns must be unit-norm")
        object.__setattr__(self, "tx_pilots", P)
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        gram = P @ P.conj().T + RIDGE * np.eye(P.shape[0])
        if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > 1e15:
            raise CaviarError("ill_conditioned", "pilot Gram matrix is singular")
        # right factor of the ridge LS solution: H0 = Y @ _lsq
        object.__setattr__(self, "_lsq", P.conj().T @ np.linalg.inv(gram))

    @property
    def n_tx(self) -> int:
        return self.tx_pilots.shape[0]

    @property
    def n_pilots(self) -> int:
        return self.tx_pilots.shape[1]

    def noise_variance(self, snr_db: float) -> float:
        return self.signal_power * 10.0 ** (-float(snr_db) / 10.0)

    @property
    def noise_variances(self) -> tuple[float, ...]:
        return tuple(self.noise_variance(s) for s in self.snr_grid)


def dft_pilots(n_tx: int, n_pilots: int | None = None) -> np.ndarray:
    """First ``n_pilots`` columns of the unitary DFT matrix (orthonormal pilots)."""
    n_pilots = n_tx if n_pilots is None else n_pilots
    n = np.arange(n_tx)[:, None]
    p = np.arange(n_pilots)[None, :]
    return np.exp(-2j * np.pi * ((n * p) % n_tx) / n_tx) / np.sqrt(n_tx)


def zadoff_chu_pilots(n_tx: int, n_pilots: int | None = None, root: int = 1) -> np.ndarray:
    """Cyclic shifts of a unit-norm Zadoff-Chu sequence.

    The columns are orthonormal and each has a flat DFT magnitude, so every
    pilot illuminates all directions. Sparse (few-path) channels therefore
    produce dense, sign-informative observations, unlike DFT pilots which
    concentrate the energy on a handful of outputs.
    """
    n_pilots = n_tx if n_pilots is None else n_pilots
    n = np.arange(n_tx)
    if n_tx % 2 == 0:
        seq = np.exp(-1j * np.pi * root * n * n / n_tx)
    else:
        seq = np.exp(-1j * np.pi * root * n * (n + 1) / n_tx)
    return np.stack([np.roll(seq, k) for k in range(n_pilots)], axis=1) / np.sqrt(n_tx)


def default_plan(n_tx: int, snr_grid=(-10.0, -5.0, 0.0, 5.0, 10.0)) -> PilotPlan:
    """Square Zadoff-Chu pilot plan (N_p = N_tx)."""
    return PilotPlan(zadoff_chu_pilots(n_tx), tuple(snr_grid))


def quantize(z) -> np.ndarray:
    """``(sgn(Re z) + j sgn(Im z)) / sqrt(2)`` with ``sgn(0) = +1``."""
    z = np.asarray(z)
    re = np.where(z.real >= 0, 1.0, -1.0)
    im = np.where(z.imag >= 0, 1.0, -1.0)
    return (re + 1j * im) / np.sqrt(2.0)


def one_bit_measure(H, plan: PilotPlan, seed: int, snr_db: float | None = None, trial: int = 0,
                    quantized: bool = True) -> np.ndarray:
    """``Q(H P + W)`` with ``W ~ CN(0, sigma^2)`` drawn from a seeded stream.

    ``snr_db=None`` means noiseless. ``quantized=False`` bypasses the
    quantiser (unquantised reference path). ``H`` may carry leading batch
    dimensions; trial ``t`` of a batch uses stream ``(seed, trial + t)``.
    """
    H = np.asarray(H, dtype=np.complex128)
    Y = H @ plan.tx_pilots
    if snr_db is not None:
        sigma = np.sqrt(plan.noise_variance(snr_db))
        Y = Y + sigma * standard_noise(Y.shape, seed, trial)
    return quantize(Y) if quantized else Y


def standard_noise(shape, seed: int, trial: int = 0) -> np.ndarray:
    """CN(0, 1) noise; leading axes beyond the last two index trials."""
    shape = tuple(shape)
    per = int(np.prod(shape[-2:]))
    batch = int(np.prod(shape[:-2])) if len(shape) > 2 else 1
    draws = [SceneStream(seed, trial + t, stream=1).complex_normal(per) for t in range(batch)]
    return np.stack(draws).reshape(shape)


def baseline_estimate(Y, plan: PilotPlan) -> np.ndarray:
    """Ridge least-squares estimate with a per-sample scale.

    ``H0 = Y P^H (P P^H + eps I)^-1`` with ``eps = 1e-9``, then ``H = c H0``.
    By default ``c = ||Y||_F / ||H0 P||_F``, which matches the pilot-domain
    energy of the estimate to the observation: it cancels the ridge
    shrinkage (exact recovery for noiseless unquantised data with
    orthonormal pilots) and, for 1-bit outputs, restores a Frobenius norm
    of ``sqrt(N_rx * N_p)``. When the plan defines ``channel_energy`` E the
    scale is instead ``c = sqrt(E) / ||H0||_F``. An all-zero ``H0`` stays
    zero.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.shape[-1] != plan.n_pilots:
        raise CaviarError("invalid_input", f"observation has {Y.shape[-1]} pilots, plan has {plan.n_pilots}")
    H0 = Y @ plan._lsq
    norm = np.linalg.norm(H0, axis=(-2, -1), keepdims=True)
    if plan.channel_energy is None:
        num = np.linalg.norm(Y, axis=(-2, -1), keepdims=True)
        norm = np.linalg.norm(H0 @ plan.tx_pilots, axis=(-2, -1), keepdims=True)
    else:
        num = np.full_like(norm, np.sqrt(plan.channel_energy))
    scale = np.divide(num, norm, out=np.zeros_like(norm), where=norm > 0)
    return H0 * scale


def nmse(H_true, H_est, in_db: bool = False):
    """``||H_est - H_true||_F^2 / ||H_true||_F^2`` (optionally in dB).

    Leading batch dimensions give one value per sample.
    """
    H_true = np.asarray(H_true)
    H_est = np.asarray(H_est)
    if H_true.shape != H_est.shape:
        raise CaviarError("invalid_input", f"shape mismatch {H_true.shape} vs {H_est.shape}")
    den = np.sum(np.abs(H_true) ** 2, axis=(-2, -1))
    if np.any(den == 0):
        raise CaviarError("undefined_nmse", "true channel has zero norm")
    ratio = np.sum(np.abs(H_est - H_true) ** 2, axis=(-2, -1)) / den
    if in_db:
        with np.errstate(divide="ignore"):
            ratio = 10 * np.log10(ratio)
    return float(ratio) if np.ndim(ratio) == 0 else ratio


def normalize_channel(H) -> np.ndarray:
    """Scale each channel so that ``||H||_F^2 = N_rx * N_tx``."""
    H = np.asarray(H, dtype=np.complex128)
    n = H.shape[-2] * H.shape[-1]
    norm = np.linalg.norm(H, axis=(-2, -1), keepdims=True)
    return H * (np.sqrt(n) / norm)


@dataclass(frozen=True)
class NmsePoint:
    snr_db: float
    nmse: float
    nmse_db: float
    stderr_db: float
    estimator_id: str
    channel_regime: str


def nmse_sweep(channels, plan: PilotPlan, seed: int, quantized: bool = True, estimator_id: str = "ls-1bit",
               channel_regime: str = "rdm-geo") -> list[NmsePoint]:
    """Mean NMSE of :func:`baseline_estimate` at every SNR of the plan.

    ``channels`` is a (T, N_rx, N_tx) stack, one trial per channel. The same
    unit noise realisation is reused across SNR points (common random
    numbers), so the curve is smooth in SNR.
    """
    H = np.asarray(channels, dtype=np.complex128)
    if H.ndim == 2:
        H = H[None]
    clean = H @ plan.tx_pilots
    noise = standard_noise(clean.shape, seed)
    out = []
    for snr in plan.snr_grid:
        Y = clean + np.sqrt(plan.noise_variance(snr)) * noise
        if quantized:
            Y = quantize(Y)
        ratios = nmse(H, baseline_estimate(Y, plan))
        ratios = np.atleast_1d(ratios)
        mean = float(np.mean(ratios))
        se = float(np.std(ratios, ddof=1) / np.sqrt(len(ratios))) if len(ratios) > 1 else 0.0
        # delta-method standard error of the dB value
        se_db = 10 / np.log(10) * se / mean if mean > 0 else 0.0
        mean_db = 10 * np.log10(mean) if mean > 0 else -np.inf
        out.append(NmsePoint(float(snr), mean, float(mean_db), float(se_db), estimator_id, channel_regime))
    return out


def write_nmse_csv(path, points: Sequence[NmsePoint], header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_db", "nmse_db", "estimator_id", "channel_regime"])
        for p in points:
            w.writerow([repr(float(p.snr_db)), repr(float(p.nmse_db)), p.estimator_id, p.channel_regime])
