"""Command-line interface.

Usage::

    caviarkit generate   CONFIG [--dataset DIR] [--jobs N]
    caviarkit synthesize CONFIG [--dataset DIR] [--out DIR] [--regime R] [--dtype D] [--jobs N]
    caviarkit label      CONFIG [--dataset DIR] [--out DIR] [--jobs N]
    caviarkit estimate   CONFIG [--dataset DIR] [--out DIR] [--jobs N]
    caviarkit bench      CONFIG [--dataset DIR] [--out DIR] [--jobs N]
    caviarkit validate   DATASET
    caviarkit summary    DATASET

Exit status: 0 on success, 1 on unexpected failure, 2 for configuration or
usage errors, 3 for dataset/file errors, 4 for synthesis errors, 5 for
metric/estimation errors. Data artifacts depend only on the config and seed;
timing numbers go to separate report files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .beamspace import NearestPositionPredictor, best_beam_pair, dft_codebook, top_k_accuracy, write_topk_csv
from .config import Config
from .core import Episode, Pose, Scene, dataset_summary
from .dataset_io import (TENSOR_DTYPES, DatasetManifest, encode_tensor, export_channel_tensor, parse_ray_line,
                         read_dataset, synthesize_episodes, tensor_header, write_dataset)
from .errors import CaviarError
from .estimation import PilotPlan, nmse_sweep, normalize_channel, write_nmse_csv, zadoff_chu_pilots
from .rdmgeo import RNG_ALGORITHM, RdmGeoSpec, sample_rdm_scene
from .synthesis import attach_anchors

CSV_SCHEMA_VERSION = "1"


def provenance(cfg: Config, command: str) -> dict:
    return {
        "toolkit_version": __version__,
        "command": command,
        "config_sha256": cfg.sha256,
        "seed": cfg["seed"],
        "rng_algorithm": RNG_ALGORITHM,
        "csv_schema_version": CSV_SCHEMA_VERSION,
    }


def provenance_lines(cfg: Config, command: str) -> list[str]:
    return [f"{k}={v}" for k, v in provenance(cfg, command).items()]


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


# --- generate --------------------------------------------------------------

def _rdm_episodes(cfg: Config, jobs: int = 1) -> list[Episode]:
    src = dict(cfg["source"])
    src.pop("kind")
    src.pop("anchor_distance", None)
    src.setdefault("rx_region", [[0.0, 100.0], [0.0, 100.0], [1.5, 1.5]])
    spec = RdmGeoSpec(seed=cfg["seed"], **src)
    E, S = cfg["episodes"], cfg["scenes_per_episode"]
    # one sub-stream per scene, so the draw does not depend on the schedule
    with ThreadPoolExecutor(max(1, jobs)) as pool:
        drawn = list(pool.map(lambda i: sample_rdm_scene(spec, i), range(E * S)))
    episodes = []
    for e in range(E):
        scenes = []
        for s in range(S):
            sc = drawn[e * S + s]
            scenes.append(Scene(s, sc.rays, sc.tx_pose, sc.rx_pose, {"rx_position": list(sc.rx_pose.position)}))
        episodes.append(Episode(e, scenes, cfg["sampling_interval"], cfg["episode_kind"]))
    return episodes


def _ray_file_episodes(cfg: Config) -> list[Episode]:
    src = cfg["source"]
    path = cfg.path(src["rays_file"])
    if not path.is_file():
        raise CaviarError("io_error", f"rays_file {path} not found")
    poses = {}
    if "poses_file" in src:
        for rec in json.loads(cfg.path(src["poses_file"]).read_text(encoding="utf-8")):
            poses[(rec["episode"], rec["scene"])] = (Pose(**rec.get("tx_pose", {})), Pose(**rec.get("rx_pose", {})))
    by_episode: dict[int, dict[int, list]] = {}
    with open(path, encoding="ascii") as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        ep, sc, _, ray = parse_ray_line(line, f"{path}:{lineno}")
        by_episode.setdefault(ep, {}).setdefault(sc, []).append(ray)
    E, S = cfg["episodes"], cfg["scenes_per_episode"]
    episodes = []
    for e in range(E):
        scenes = []
        for s in range(S):
            tx_pose, rx_pose = poses.get((e, s), (Pose(), Pose()))
            rays = by_episode.get(e, {}).get(s, [])
            scenes.append(Scene(s, rays, tx_pose, rx_pose, {"rx_position": list(rx_pose.position)}))
        episodes.append(Episode(e, scenes, cfg["sampling_interval"], cfg["episode_kind"]))
    return episodes


def cmd_generate(cfg: Config, dataset: Path | None = None, jobs: int = 1) -> Path:
    root = dataset or cfg.path("dataset")
    if cfg["source"]["kind"] == "rdm-geo":
        episodes = _rdm_episodes(cfg, jobs)
    else:
        episodes = _ray_file_episodes(cfg)
    dist = cfg["source"].get("anchor_distance")
    if dist:
        tx, rx = cfg.array("tx"), cfg.array("rx")
        episodes = [Episode(e.id, [attach_anchors(s, tx, rx, dist) for s in e.scenes], e.sampling_interval, e.kind)
                    for e in episodes]
    manifest = DatasetManifest(cfg["name"], cfg["carrier_frequency"], cfg["receiver_type"], cfg["sampling_interval"],
                               cfg["episode_spacing"], cfg["episodes"], cfg["scenes_per_episode"])
    write_dataset(root, manifest, episodes, overwrite=True)
    _write_json(root / "provenance.json", provenance(cfg, "generate"))
    return root


# --- synthesize ------------------------------------------------------------

def _load(cfg: Config, dataset: Path | None, jobs: int):
    root = dataset or cfg.path("dataset")
    return read_dataset(root, jobs=jobs)


def _needs_anchors(episodes, regime):
    if regime != "spherical":
        return
    for e in episodes:
        for s in e.scenes:
            if any(not r.has_anchors for r in s.rays):
                raise CaviarError("missing_anchor",
                                  "spherical regime needs anchored rays; set source.anchor_distance when "
                                  "generating or supply the six anchor columns in the ray file",
                                  episode=e.id, scene=s.index)


def cmd_synthesize(cfg: Config, dataset=None, out=None, regime=None, dtype=None, jobs: int = 1) -> dict:
    ds = _load(cfg, dataset, jobs)
    syn = cfg["synthesis"]
    regime = regime or syn["regime"]
    dtype = dtype or syn["dtype"]
    out = Path(out) if out else cfg.path("outputs")
    regimes = ["planar", "spherical"] if regime == "both" else [regime]
    tx, rx = cfg.array("tx"), cfg.array("rx")
    prov = provenance(cfg, "synthesize")
    tensors = {}
    for r in regimes:
        _needs_anchors(ds.episodes, r)
        t = export_channel_tensor(out / f"channels_{r}.bin", ds.episodes, tx, rx, r, syn["K"], syn["delta_f"],
                                  dtype, syn["rho"], jobs, extra_header={"provenance": prov})
        tensors[r] = t
    report = {"provenance": prov, "regimes": regimes, "valid_channels": int(tensors[regimes[0]].valid_mask.sum())}
    if len(regimes) == 2:
        # compare in double precision, only over scenes with a channel
        hp, mask = synthesize_episodes(ds.episodes, tx, rx, "planar", syn["K"], syn["delta_f"], syn["rho"], jobs)
        hs, _ = synthesize_episodes(ds.episodes, tx, rx, "spherical", syn["K"], syn["delta_f"], syn["rho"], jobs)
        gaps = [np.linalg.norm(hs[i, j] - hp[i, j]) / np.linalg.norm(hp[i, j]) for i, j in zip(*np.nonzero(mask))]
        report["mean_relative_frobenius_gap"] = float(np.mean(gaps))
        report["max_relative_frobenius_gap"] = float(np.max(gaps))
    _write_json(out / "synthesis_report.json", report)
    return report


# --- label -----------------------------------------------------------------

def cmd_label(cfg: Config, dataset=None, out=None, jobs: int = 1) -> dict:
    ds = _load(cfg, dataset, jobs)
    lab = cfg["labels"]
    out = Path(out) if out else cfg.path("outputs")
    tx, rx = cfg.array("tx"), cfg.array("rx")
    syn = cfg["synthesis"]
    _needs_anchors(ds.episodes, lab["regime"])
    H, mask = synthesize_episodes(ds.episodes, tx, rx, lab["regime"], 1, 0.0, syn["rho"], jobs)
    tx_cb, rx_cb = dft_codebook(tx.size, lab["M_tx"]), dft_codebook(rx.size, lab["M_rx"])
    records = []
    for i, ep in enumerate(ds.episodes):
        for j, sc in enumerate(ep.scenes):
            if mask[i, j]:
                records.append((ep.id, sc, best_beam_pair(H[i, j, 0], tx_cb, rx_cb)))
    out.mkdir(parents=True, exist_ok=True)
    header = provenance_lines(cfg, "label")
    with open(out / "labels.csv", "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "scene", "pair_index", "tx_index", "rx_index", "gain", "degenerate"])
        for ep_id, sc, b in records:
            w.writerow([ep_id, sc.index, b.pair_index, b.tx_index, b.rx_index, repr(float(b.gain)), int(b.degenerate)])
    result = {"n_labels": len(records), "n_pairs": lab["M_tx"] * lab["M_rx"]}
    # train on the leading episodes, test on the rest (scene split if only one episode)
    if len(records) >= 2:
        ep_ids = sorted({r[0] for r in records})
        if len(ep_ids) > 1:
            cut = ep_ids[max(1, min(len(ep_ids) - 1, int(round(lab["train_fraction"] * len(ep_ids)))))]
            train = [r for r in records if r[0] < cut]
            test = [r for r in records if r[0] >= cut]
        else:
            n = max(1, min(len(records) - 1, int(round(lab["train_fraction"] * len(records)))))
            train, test = records[:n], records[n:]
        model = NearestPositionPredictor([r[1].rx_pose.position for r in train], [r[2] for r in train],
                                         lab["M_tx"] * lab["M_rx"], lab["k_nn"])
        ranks = [model.rank(r[1].rx_pose.position) for r in test]
        rep = top_k_accuracy(ranks, [r[2] for r in test], lab["K_values"], predictor_id="nearest-position")
        write_topk_csv(out / "topk.csv", [rep], header)
        result["topk"] = rep.accuracy
    return result


# --- estimate --------------------------------------------------------------

def cmd_estimate(cfg: Config, dataset=None, out=None, jobs: int = 1) -> list:
    ds = _load(cfg, dataset, jobs)
    est = cfg["estimation"]
    out = Path(out) if out else cfg.path("outputs")
    tx, rx = cfg.array("tx"), cfg.array("rx")
    _needs_anchors(ds.episodes, est["regime"])
    H, mask = synthesize_episodes(ds.episodes, tx, rx, est["regime"], 1, 0.0, cfg["synthesis"]["rho"], jobs)
    chans = H[mask.astype(bool)][:, 0]
    if len(chans) == 0:
        raise CaviarError("empty_dataset", "no valid channels to estimate")
    chans = normalize_channel(chans)
    plan = PilotPlan(zadoff_chu_pilots(tx.size, est.get("n_pilots")), tuple(est["snr_grid"]),
                     channel_energy=float(tx.size * rx.size))
    plan_unq = PilotPlan(plan.tx_pilots, plan.snr_grid)
    seed = est.get("seed", cfg["seed"])
    points = nmse_sweep(chans, plan, seed, True, "ls-1bit", est["regime"])
    points += nmse_sweep(chans, plan_unq, seed, False, "ls-unquantized", est["regime"])
    write_nmse_csv(out / "nmse.csv", points, provenance_lines(cfg, "estimate"))
    return points


# --- bench -----------------------------------------------------------------

def cmd_bench(cfg: Config, dataset=None, out=None, jobs: int = 1) -> list[dict]:
    """Per-channel synthesis time, post-processing time and output size per regime.

    ``output_bytes`` is the tensor payload (fixed by E, S, K and the array
    sizes); ``file_bytes`` adds the JSON header. Post-processing is the
    encoding of the tensor file. Times are the best of ``bench.repeats``
    runs, ratios are relative to the planar regime.
    """
    ds = _load(cfg, dataset, jobs)
    out = Path(out) if out else cfg.path("outputs")
    syn = cfg["synthesis"]
    tx, rx = cfg.array("tx"), cfg.array("rx")
    _needs_anchors(ds.episodes, "spherical")
    n_valid = sum(s.is_valid_channel for e in ds.episodes for s in e.scenes)
    if n_valid == 0:
        raise CaviarError("empty_dataset", "no valid channels to benchmark")
    rows = []
    for regime in ("planar", "spherical"):
        syn_t, post_t = [], []
        for _ in range(cfg["bench"]["repeats"]):
            t0 = time.perf_counter()
            data, mask = synthesize_episodes(ds.episodes, tx, rx, regime, syn["K"], syn["delta_f"], syn["rho"], jobs)
            t1 = time.perf_counter()
            blob = encode_tensor(tensor_header(ds.episodes, tx, rx, regime, syn["K"], syn["delta_f"], syn["dtype"],
                                               syn["rho"], mask), data)
            t2 = time.perf_counter()
            syn_t.append(t1 - t0)
            post_t.append(t2 - t1)
        payload = data.size * np.dtype(TENSOR_DTYPES[syn["dtype"]]).itemsize
        rows.append({"regime": regime, "output_bytes": payload / n_valid, "file_bytes": len(blob) / n_valid,
                     "synthesis_s": min(syn_t) / n_valid, "postprocessing_s": min(post_t) / n_valid})
    base = rows[0]
    for r in rows:
        for key in ("output_bytes", "file_bytes", "synthesis_s", "postprocessing_s"):
            r[f"{key}_ratio"] = r[key] / base[key]
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench_report.csv", "w", newline="") as fh:
        for line in provenance_lines(cfg, "bench"):
            fh.write(f"# {line}\n")
        fields = ["regime", "output_bytes", "output_bytes_ratio", "file_bytes", "file_bytes_ratio", "synthesis_s", "synthesis_s_ratio",
                  "postprocessing_s", "postprocessing_s_ratio"]
        w = csv.DictWriter(fh, fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return rows


def format_bench_table(rows: list[dict]) -> str:
    lines = [f"{'Modeling':<10} {'Size of output':>22} {'Synthesis time':>24} {'Post-processing time':>24}"]
    for r in rows:
        if r["regime"] == "planar":
            cells = [f"1 ({r['output_bytes'] / 1e6:.4g} MB)", f"1 ({r['synthesis_s'] * 1e3:.4g} ms)",
                     f"1 ({r['postprocessing_s'] * 1e3:.4g} ms)"]
        else:
            cells = [f"{r['output_bytes_ratio']:.3g} x", f"{r['synthesis_s_ratio']:.3g} x",
                     f"{r['postprocessing_s_ratio']:.3g} x"]
        lines.append(f"{r['regime']:<10} {cells[0]:>22} {cells[1]:>24} {cells[2]:>24}")
    return "\n".join(lines)


# --- validate / summary ----------------------------------------------------

def cmd_validate(dataset) -> list:
    ds = read_dataset(dataset)
    return ds.report


def cmd_summary(dataset) -> dict:
    ds = read_dataset(dataset)
    rec = dataset_summary(ds.episodes, ds.manifest.episode_spacing)
    row = {"Dataset name": ds.manifest.name, "Frequency (GHz)": ds.manifest.carrier_frequency / 1e9,
           "Type of receiver": ds.manifest.receiver_type}
    row.update(rec.as_row())
    return row


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="caviarkit", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="JSON experiment config")
        sp.add_argument("--dataset", help="dataset root (overrides config 'dataset')")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads; outputs do not depend on it")
        return sp

    with_config("generate", "write a dataset from RDM-GEO draws or a ray file")
    for name, help_ in (("synthesize", "export channel tensors"), ("label", "beam labels and top-K CSV"),
                        ("estimate", "1-bit NMSE-vs-SNR CSV"), ("bench", "per-regime cost table")):
        sp = with_config(name, help_)
        sp.add_argument("--out", help="output directory (overrides config 'outputs')")
        if name == "synthesize":
            sp.add_argument("--regime", choices=["planar", "spherical", "both"])
            sp.add_argument("--dtype", choices=["complex64", "complex128"])
    for name, help_ in (("validate", "check dataset invariants"), ("summary", "dataset shape summary")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("dataset")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("validate", "summary"):
            if args.command == "validate":
                report = cmd_validate(args.dataset)
                for v in report:
                    print(f"{'flag' if v.is_flag else 'error'}\t{v.code}\t{v.location}\t{v.message}")
                errors = [v for v in report if not v.is_flag]
                print(f"{len(errors)} errors, {len(report) - len(errors)} flags")
                return 3 if errors else 0
            print(json.dumps(cmd_summary(args.dataset), indent=1))
            return 0
        cfg = Config.load(args.config)
        dataset = Path(args.dataset) if args.dataset else None
        if args.command == "generate":
            root = cmd_generate(cfg, dataset, args.jobs)
            print(f"dataset written to {root}")
        elif args.command == "synthesize":
            rep = cmd_synthesize(cfg, dataset, args.out, args.regime, args.dtype, args.jobs)
            print(json.dumps(rep, indent=1, sort_keys=True))
        elif args.command == "label":
            rep = cmd_label(cfg, dataset, args.out, args.jobs)
            print(json.dumps(rep, indent=1))
        elif args.command == "estimate":
            for pt in cmd_estimate(cfg, dataset, args.out, args.jobs):
                print(f"{pt.estimator_id:<16} {pt.snr_db:7.2f} dB  NMSE {pt.nmse_db:8.3f} dB")
        elif args.command == "bench":
            print(format_bench_table(cmd_bench(cfg, dataset, args.out, args.jobs)))
        return 0
    except CaviarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
