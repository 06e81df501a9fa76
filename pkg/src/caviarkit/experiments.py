"""Default end-to-end protocols built from the toolkit pieces.

These fix the experiment settings used by the CLI, the demos and the
acceptance tests: 64-element BS ULA, 8-element UE ULA at 60 GHz,
32 x 8 DFT codebooks (256 beam pairs) and L = 2 RDM-GEO paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamspace import (DEFAULT_M_RX, DEFAULT_M_TX, NearestPositionPredictor, TopKReport, best_beam_pair,
                        dft_codebook, top_k_accuracy)
from .core import ArrayConfig
from .estimation import NmsePoint, default_plan, nmse_sweep, normalize_channel
from .rdmgeo import RdmGeoSpec, sample_rdm_batch
from .synthesis import geometric_channel

BS_ARRAY = ArrayConfig("ULA", 64, carrier_frequency=60e9)
UE_ARRAY = ArrayConfig("ULA", 8, carrier_frequency=60e9)
RX_REGION = ((0.0, 100.0), (0.0, 100.0), (1.5, 1.5))
TOPK_VALUES = (1, 2, 5, 10, 20, 30, 50, 100, 256)


def rdm_channels(variant: str, n: int, seed: int, tx: ArrayConfig = BS_ARRAY, rx: ArrayConfig = UE_ARRAY,
                 L: int = 2, rx_region=RX_REGION):
    """``n`` RDM-GEO scenes and their planar channels, shape (n, N_rx, N_tx)."""
    spec = RdmGeoSpec(variant, L=L, seed=seed, rx_region=rx_region)
    scenes = sample_rdm_batch(spec, n)
    return scenes, np.stack([geometric_channel(s, tx, rx) for s in scenes])


@dataclass(frozen=True)
class BeamSelectionResult:
    variant: str
    report: TopKReport
    n_train: int
    n_test: int

    @property
    def top1(self) -> float:
        return self.report.accuracy[1]


def beam_selection_experiment(variant: str, n_samples: int = 1000, seed: int = 0, train_fraction: float = 0.8,
                              k_nn: int = 5, K_values=TOPK_VALUES, tx: ArrayConfig = BS_ARRAY,
                              rx: ArrayConfig = UE_ARRAY, M_tx: int = DEFAULT_M_TX,
                              M_rx: int = DEFAULT_M_RX) -> BeamSelectionResult:
    """Nearest-position beam prediction on RDM-GEO scenes.

    Receiver positions are drawn uniformly over ``RX_REGION`` and are
    independent of the ray parameters, so any accuracy above chance comes
    from how concentrated the label distribution is. The first
    ``train_fraction`` of the scenes trains the predictor; the rest is test.
    """
    scenes, H = rdm_channels(variant, n_samples, seed, tx, rx)
    tx_cb, rx_cb = dft_codebook(tx.size, M_tx), dft_codebook(rx.size, M_rx)
    labels = [best_beam_pair(h, tx_cb, rx_cb) for h in H]
    positions = np.array([s.rx_pose.position for s in scenes])
    n_train = int(round(train_fraction * n_samples))
    model = NearestPositionPredictor(positions[:n_train], labels[:n_train], M_tx * M_rx, k_nn)
    rankings = [model.rank(p) for p in positions[n_train:]]
    report = top_k_accuracy(rankings, labels[n_train:], K_values, predictor_id=f"nearest-position-{variant.lower()}")
    return BeamSelectionResult(variant.upper(), report, n_train, n_samples - n_train)


def estimation_experiment(variant: str = "EASY", n_trials: int = 1000, seed: int = 0,
                          snr_grid=(-10.0, -5.0, 0.0, 5.0, 10.0), quantized: bool = True,
                          tx: ArrayConfig = BS_ARRAY, rx: ArrayConfig = UE_ARRAY) -> list[NmsePoint]:
    """NMSE versus SNR of the LS baseline over normalised RDM-GEO channels."""
    _, H = rdm_channels(variant, n_trials, seed, tx, rx)
    plan = default_plan(tx.size, snr_grid)
    est_id = "ls-1bit" if quantized else "ls-unquantized"
    return nmse_sweep(normalize_channel(H), plan, seed, quantized=quantized, estimator_id=est_id,
                      channel_regime=f"rdm-geo-{variant.lower()}")
