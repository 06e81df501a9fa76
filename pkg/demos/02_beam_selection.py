"""Beam-pair selection on RDM-GEO scenes.

Labels are the best pair of a 32-beam transmit and 8-beam receive DFT
codebook. A nearest-position predictor learns from 80% of the scenes and is
scored by top-K accuracy on the rest. EASY (angles near fixed nominals) is
far more predictable than HARD (uniform angles).
"""

from caviarkit.experiments import TOPK_VALUES, beam_selection_experiment

for variant in ("EASY", "HARD"):
    res = beam_selection_experiment(variant, n_samples=1000, seed=0)
    acc = res.report.accuracy
    row = "  ".join(f"top-{k}: {acc[k]:.3f}" for k in TOPK_VALUES if k in acc)
    print(f"{variant:<5} {row}")
