"""Analog beam codebooks, beam-pair labels and top-K scoring.

Beam pairs are flattened rx-major: ``pair_index = rx_index * M_tx + tx_index``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CaviarError

DEFAULT_M_TX = 32
DEFAULT_M_RX = 8


@dataclass(frozen=True)
class Codebook:
    """Beams stored as the columns of an (N, M) matrix."""

    beams: np.ndarray
    kind: str = "DFT"

    @property
    def n_elements(self) -> int:
        return self.beams.shape[0]

    @property
    def size(self) -> int:
        return self.beams.shape[1]


def dft_codebook(N: int, M: int) -> Codebook:
    """Beam m has entries ``exp(-j 2 pi n m / M) / sqrt(N)``, n = 0..N-1."""
    if M < 1 or N < 1:
        raise CaviarError("invalid_input", "N and M must be >= 1")
    n = np.arange(N)[:, None]
    m = np.arange(M)[None, :]
    return Codebook(np.exp(-2j * np.pi * ((n * m) % M) / M) / np.sqrt(N))


def grid_angle(m: int, M: int, spacing_wavelengths: float = 0.5) -> float:
    """ULA azimuth (el = 0) whose steering vector equals DFT beam m.

    Requires ``d / lambda = 0.5`` for every beam to have a real angle.
    """
    f = (m / M) % 1.0
    if f >= 0.5:
        f -= 1.0
    c = f / spacing_wavelengths
    if abs(c) > 1:
        raise CaviarError("invalid_input", f"beam {m} of {M} has no visible-region angle")
    return float(np.degrees(np.arccos(c)))


@dataclass(frozen=True)
class BeamLabel:
    pair_index: int
    tx_index: int
    rx_index: int
    gain: float
    degenerate: bool = False


def beam_gains(H: np.ndarray, tx_cb: Codebook, rx_cb: Codebook) -> np.ndarray:
    """(M_rx, M_tx) matrix of ``|w^H H f|^2``."""
    H = np.asarray(H)
    if H.shape != (rx_cb.n_elements, tx_cb.n_elements):
        raise CaviarError("invalid_input", f"channel shape {H.shape} does not match codebooks "
                                           f"({rx_cb.n_elements}, {tx_cb.n_elements})")
    return np.abs(rx_cb.beams.conj().T @ H @ tx_cb.beams) ** 2


def best_beam_pair(H: np.ndarray, tx_cb: Codebook, rx_cb: Codebook) -> BeamLabel:
    """Exhaustive search over all pairs; ties go to the lowest pair index."""
    g = beam_gains(H, tx_cb, rx_cb).ravel()
    idx = int(np.argmax(g))
    rx_i, tx_i = divmod(idx, tx_cb.size)
    return BeamLabel(idx, tx_i, rx_i, float(g[idx]), degenerate=bool(g[idx] == 0.0))


def rank_pairs(H: np.ndarray, tx_cb: Codebook, rx_cb: Codebook) -> np.ndarray:
    """All pair indices sorted by decreasing gain (stable on ties)."""
    g = beam_gains(H, tx_cb, rx_cb).ravel()
    return np.argsort(-g, kind="stable")


@dataclass(frozen=True)
class TopKReport:
    accuracy: dict[int, float]
    n_samples: int
    predictor_id: str = ""

    def rows(self):
        return [(k, self.accuracy[k], self.predictor_id) for k in sorted(self.accuracy)]


def top_k_accuracy(predicted_rankings: Sequence[Sequence[int]], labels: Sequence[BeamLabel | int],
                   K_values: Sequence[int], predictor_id: str = "") -> TopKReport:
    """Fraction of samples whose true pair is among the first K ranked pairs."""
    if len(predicted_rankings) != len(labels):
        raise CaviarError("cardinality_error",
                          f"{len(predicted_rankings)} rankings vs {len(labels)} labels")
    if len(labels) == 0:
        raise CaviarError("cardinality_error", "no samples")
    truth = [lab.pair_index if isinstance(lab, BeamLabel) else int(lab) for lab in labels]
    # position of the true pair in each ranking (inf if absent)
    pos = np.full(len(truth), np.inf)
    for i, (ranking, t) in enumerate(zip(predicted_rankings, truth)):
        hits = np.flatnonzero(np.asarray(ranking) == t)
        if hits.size:
            pos[i] = hits[0]
    acc = {int(k): float(np.mean(pos < k)) for k in K_values}
    return TopKReport(acc, len(truth), predictor_id)


def write_topk_csv(path, reports: Sequence[TopKReport], header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "accuracy", "predictor_id"])
        for rep in reports:
            for k, a, pid in rep.rows():
                w.writerow([k, repr(float(a)), pid])


class NearestPositionPredictor:
    """Ranks beam pairs by label frequency among the k nearest training positions.

    Pairs not seen among the neighbours follow in index order. Distance ties
    resolve to the lower training index, count ties to the lower pair index.
    """

    def __init__(self, positions, labels: Sequence[BeamLabel | int], n_pairs: int = DEFAULT_M_TX * DEFAULT_M_RX,
                 k_nn: int = 5):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        if len(positions) == 0:
            raise CaviarError("empty_model", "training set is empty")
        if len(positions) != len(labels):
            raise CaviarError("cardinality_error", "positions and labels differ in length")
        self.positions = positions
        self.labels = np.array([lab.pair_index if isinstance(lab, BeamLabel) else int(lab) for lab in labels])
        self.n_pairs = int(n_pairs)
        self.k_nn = int(k_nn)

    def rank(self, query) -> np.ndarray:
        q = np.asarray(query, dtype=float).reshape(1, -1)
        d2 = np.sum((self.positions - q) ** 2, axis=1)
        nearest = np.argsort(d2, kind="stable")[: self.k_nn]
        counts = np.bincount(self.labels[nearest], minlength=self.n_pairs)
        # stable sort on -count keeps index order among equal counts
        return np.argsort(-counts, kind="stable")


def nearest_position_predictor(train, query, k_nn: int = 5, n_pairs: int = DEFAULT_M_TX * DEFAULT_M_RX):
    """Ranked pair list for ``query`` from ``(position, label)`` training pairs."""
    train = list(train)
    if not train:
        raise CaviarError("empty_model", "training set is empty")
    positions = [p for p, _ in train]
    labels = [lab for _, lab in train]
    return NearestPositionPredictor(positions, labels, n_pairs, k_nn).rank(query)
