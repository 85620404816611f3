"""Command-line pipeline driver.

Each command reads the YAML config, validates it completely, then reads its
inputs from and writes its outputs under one output root::

    synth/       sequences.csv, frames.csv, ground_truth.csv, <seq>/frame_NNNN.png
    masks/       masks.csv, <seq>/mask_NNNN.pbm
    cycles/      cycles.csv, signal/<seq>.csv
    features/    real-proxy.csv, synthetic.csv, images/*.pgm
    similarity/  <a>_vs_<b>_stats.csv, <a>_vs_<b>_pairs.csv, <a>_vs_<b>.svg
    experiment/  results.csv, confusion/<condition>.csv, accuracy.svg, eigen_grid.png/.pgm
    viewsweep/   grid.csv

Paths inside manifests are relative to the output root. Exit status is 0 on
success, 1 for invalid configuration or arguments and 2 for data errors.
"""

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import io
from .config import load_config
from .errors import ConfigError, DataError, EmptyInput, InsufficientComponents
from .features import cycle_features
from .gait_cycle import GaitCycle, detect_cycles
from .pipeline import ordered_map, segment_frames
from .recognition import eigen_images, image_grid, pca_spectrum, run_experiment, PcaModel
from .similarity import cross_cycle_values, jaccard, jaccard_aligned, phase_pairs, similarity_stats
from .walker import generate_sequence, viewpoint_grid

SEQUENCES_HEADER = ["sequence", "identity", "variant", "provenance", "segmentation", "sweep_index",
                    "azimuth", "elevation", "clothing_bulk", "speed", "boundary_noise", "fps",
                    "n_frames", "seed", "background_path"]
FRAMES_HEADER = ["sequence", "frame", "frame_path"]
MASKS_HEADER = ["sequence", "frame", "mask_path"]
CYCLES_HEADER = ["sequence", "cycle_index", "start_frame", "end_frame"]
SIGNAL_HEADER = ["frame", "count", "smoothed"]
STATS_HEADER = ["subject", "n", "min", "q1", "median", "q3", "max"]
PAIRS_HEADER = ["subject", "frame_a", "frame_b", "jaccard", "dx", "dy"]
RESULTS_HEADER = ["condition", "k", "train_n", "test_n", "accuracy"]
CONFUSION_HEADER = ["k", "true", "predicted", "count"]
GRID_HEADER = ["index", "azimuth", "elevation"]


def condition_slug(condition):
    return condition.replace("%", "pct").replace("+", "plus")


def _need(path, what):
    path = Path(path)
    if not path.is_file():
        raise EmptyInput(f"{path}: {what} not found")
    return path


def _sequences(root):
    rows = io.read_csv(_need(root / "synth" / "sequences.csv", "sequence table"), SEQUENCES_HEADER)
    if not rows:
        raise EmptyInput(f"{root / 'synth' / 'sequences.csv'}: no sequences")
    return {r["sequence"]: r for r in rows}


def _grouped(rows, path_key):
    out = defaultdict(list)
    for r in rows:
        out[r["sequence"]].append((int(r["frame"]), r[path_key]))
    return {k: [p for _, p in sorted(v)] for k, v in out.items()}


# ---------------------------------------------------------------------------
# synth


def _synth_task(args):
    root, name, identity, confounders, camera, duration, fps, seed = args
    seq = generate_sequence(identity, confounders, duration, fps, seed, camera)
    rel = Path("synth") / name
    io.write_png(root / rel / "background.png", seq.background)
    frames = []
    for i, frame in enumerate(seq.frames):
        p = rel / f"frame_{i:04d}.png"
        io.write_png(root / p, frame)
        frames.append([name, i, p.as_posix()])
    truth = [[name, c, s, e] for c, (s, e) in enumerate(seq.boundaries)]
    return len(seq.frames), frames, truth


def cmd_synth(cfg, root, jobs, args):
    tasks, meta = [], []
    for v_index, variant in enumerate(cfg.variants):
        for i_index, identity in enumerate(cfg.identities):
            for s_index, conf in enumerate(variant.confounders):
                name = f"{variant.name}-{identity.name}"
                if len(variant.confounders) > 1:
                    name += f"-{s_index:03d}"
                seed = int(np.random.SeedSequence([cfg.seed, i_index, v_index, s_index])
                           .generate_state(1)[0])
                tasks.append((root, name, identity, conf, cfg.camera, cfg.duration, cfg.fps, seed))
                meta.append([name, identity.name, variant.name, variant.provenance,
                             variant.segmentation, s_index, conf.azimuth, conf.elevation,
                             conf.clothing_bulk, conf.speed, conf.boundary_noise, cfg.fps, None, seed,
                             f"synth/{name}/background.png"])
    results = ordered_map(_synth_task, tasks, jobs)
    frames, truth = [], []
    for m, (n, f, t) in zip(meta, results):
        m[12] = n
        frames.extend(f)
        truth.extend(t)
    io.write_csv(root / "synth" / "sequences.csv", SEQUENCES_HEADER, meta)
    io.write_csv(root / "synth" / "frames.csv", FRAMES_HEADER, frames)
    io.write_csv(root / "synth" / "ground_truth.csv", CYCLES_HEADER, truth)
    return f"{len(meta)} sequences, {len(frames)} frames"


# ---------------------------------------------------------------------------
# segment


def _segment_task(args):
    src, dst, name, paths, background, method, tolerance, keep = args
    frames = np.array([io.read_png(src / p) for p in paths])
    bg = io.read_png(src / background)
    masks = segment_frames(frames, bg, method, tolerance, keep)
    rows = []
    for i, m in enumerate(masks):
        p = Path("masks") / name / f"mask_{i:04d}.pbm"
        io.write_mask(dst / p, m)
        rows.append([name, i, p.as_posix()])
    return rows


def cmd_segment(cfg, root, jobs, args):
    manifest = Path(args.input) if args.input else root / "synth" / "frames.csv"
    src = manifest.parent.parent
    frames = _grouped(io.read_csv(_need(manifest, "frame manifest"), FRAMES_HEADER), "frame_path")
    if not frames:
        raise EmptyInput(f"{manifest}: no frames listed")
    seqs = _sequences(src)
    tasks = []
    for name, paths in frames.items():
        if name not in seqs:
            raise DataError(f"{manifest}: sequence {name!r} missing from sequences.csv")
        meta = seqs[name]
        for p in [meta["background_path"]] + paths:
            if not (src / p).is_file():
                raise EmptyInput(f"{src / p}: image not found")
        tasks.append((src, root, name, paths, meta["background_path"], meta["segmentation"],
                      cfg.tolerance, cfg.keep_largest))
    rows = [r for chunk in ordered_map(_segment_task, tasks, jobs) for r in chunk]
    if src.resolve() != root.resolve():
        io.write_csv(root / "synth" / "sequences.csv", SEQUENCES_HEADER,
                     [[m[k] for k in SEQUENCES_HEADER] for m in seqs.values()])
    io.write_csv(root / "masks" / "masks.csv", MASKS_HEADER, rows)
    return f"{len(rows)} masks"


# ---------------------------------------------------------------------------
# cycles


def _load_masks(root, paths):
    out = []
    for p in paths:
        path = root / p
        if not path.is_file():
            raise EmptyInput(f"{path}: mask not found")
        out.append(io.read_mask(path))
    return np.array(out)


def _mask_sets(root, manifest):
    masks = _grouped(io.read_csv(_need(manifest, "mask manifest"), MASKS_HEADER), "mask_path")
    if not masks:
        raise EmptyInput(f"{manifest}: no masks listed")
    return masks


def _cycles_task(args):
    root, name, paths, fps, params = args
    masks = _load_masks(root, paths)
    try:
        cycles, raw, smoothed = detect_cycles(masks, frame_rate=fps, **params)
    except DataError as exc:
        raise type(exc)(f"sequence {name}: {exc}") from None
    signal = [[i, int(c), float(s)] for i, (c, s) in enumerate(zip(raw.values, smoothed.values))]
    io.write_csv(root / "cycles" / "signal" / f"{name}.csv", SIGNAL_HEADER, signal)
    return [[name, k, c.start_frame, c.end_frame] for k, c in enumerate(cycles)]


def cmd_cycles(cfg, root, jobs, args):
    masks = _mask_sets(root, root / "masks" / "masks.csv")
    seqs = _sequences(root)
    tasks = [(root, n, p, float(seqs[n]["fps"]) if n in seqs else cfg.fps, cfg.cycle_params)
             for n, p in masks.items()]
    rows = [r for chunk in ordered_map(_cycles_task, tasks, jobs) for r in chunk]
    io.write_csv(root / "cycles" / "cycles.csv", CYCLES_HEADER, rows)
    return f"{len(rows)} cycles in {len(tasks)} sequences"


def _cycle_table(root):
    rows = io.read_csv(_need(root / "cycles" / "cycles.csv", "cycle table"), CYCLES_HEADER)
    out = defaultdict(list)
    for r in rows:
        out[r["sequence"]].append((int(r["cycle_index"]), int(r["start_frame"]), int(r["end_frame"])))
    return {k: sorted(v) for k, v in out.items()}


def _cycles_of(root, name, mask_paths, table):
    masks = _load_masks(root, mask_paths)
    return [GaitCycle(s, e, list(masks[s:e])) for _, s, e in table.get(name, [])]


# ---------------------------------------------------------------------------
# features


def _features_task(args):
    root, name, mask_paths, spans, label, provenance, kinds, crops, dump = args
    cycles = _cycles_of(root, name, mask_paths, {name: spans})
    out = []
    for k, c in enumerate(cycles):
        vecs = cycle_features(c.silhouettes, label, provenance, kinds, crops)
        out.extend(vecs)
        if dump:
            for v in vecs:
                if v.aug_id == 0:
                    io.write_pgm(root / "features" / "images" / f"{name}_c{k:03d}_{v.kind}.pgm",
                                 v.values.reshape(50, 30))
    return provenance, out


def cmd_features(cfg, root, jobs, args):
    masks = _mask_sets(root, root / "masks" / "masks.csv")
    seqs = _sequences(root)
    table = _cycle_table(root)
    tasks = []
    for name in masks:
        if name not in seqs:
            raise DataError(f"sequence {name!r} missing from sequences.csv")
        m = seqs[name]
        tasks.append((root, name, masks[name], table.get(name, []), m["identity"], m["provenance"],
                      cfg.kinds, cfg.crop_margins, cfg.dump_images))
    archives = defaultdict(list)
    for prov, vecs in ordered_map(_features_task, tasks, jobs):
        archives[prov].extend(vecs)
    for prov, vecs in sorted(archives.items()):
        io.write_features(root / "features" / f"{prov}.csv", vecs)
    return ", ".join(f"{p}: {len(v)} vectors" for p, v in sorted(archives.items()))


# ---------------------------------------------------------------------------
# similarity


def _similarity_task(args):
    root, subject, pairs, aligned = args
    fn = jaccard_aligned if aligned else jaccard
    rows = []
    for (name_a, paths_a, spans_a), (name_b, paths_b, spans_b) in pairs:
        ca = _cycles_of(root, name_a, paths_a, {name_a: spans_a})
        if name_a == name_b:
            for p, q, i, j, res in cross_cycle_values(ca, aligned):
                rows.append([subject, ca[p].start_frame + i, ca[q].start_frame + j, res.value,
                             *res.shift])
            continue
        cb = _cycles_of(root, name_b, paths_b, {name_b: spans_b})
        for a in ca:
            for b in cb:
                for i, j in phase_pairs(len(a), len(b)):
                    res = fn(a.silhouettes[i], b.silhouettes[j])
                    rows.append([subject, a.start_frame + i, b.start_frame + j, res.value,
                                 *res.shift])
    return rows


def cmd_similarity(cfg, root, jobs, args):
    masks = _mask_sets(root, root / "masks" / "masks.csv")
    seqs = _sequences(root)
    table = _cycle_table(root)
    summary = []
    for a, b in cfg.comparisons:
        tasks = []
        for ident in cfg.identities:
            sa = [n for n, m in seqs.items() if m["variant"] == a and m["identity"] == ident.name]
            sb = [n for n, m in seqs.items() if m["variant"] == b and m["identity"] == ident.name]
            pairs = []
            for na, nb in zip(sa, sb):
                for n in (na, nb):
                    if n not in masks:
                        raise EmptyInput(f"sequence {n}: no masks (run segment first)")
                pairs.append(((na, masks[na], table.get(na, [])), (nb, masks[nb], table.get(nb, []))))
            tasks.append((root, ident.name, pairs, cfg.aligned))
        results = ordered_map(_similarity_task, tasks, jobs)
        pair_rows, stats_rows = [], []
        for ident, rows in zip(cfg.identities, results):
            if not rows:
                raise EmptyInput(f"comparison {a} vs {b}: no frame pairs for subject {ident.name} "
                                 "(needs two cycles, or one per variant)")
            pair_rows.extend(rows)
            st = similarity_stats([r[3] for r in rows], ident.name)
            stats_rows.append([st.subject, st.n, st.min, st.q1, st.median, st.q3, st.max])
        stem = f"{a}_vs_{b}"
        io.write_csv(root / "similarity" / f"{stem}_pairs.csv", PAIRS_HEADER, pair_rows)
        io.write_csv(root / "similarity" / f"{stem}_stats.csv", STATS_HEADER, stats_rows)
        _plot_similarity(root, stem)
        summary.append(f"{stem}: median of medians {np.median([r[4] for r in stats_rows]):.3f}")
    return "; ".join(summary)


# ---------------------------------------------------------------------------
# experiment


def _read_archive(path):
    return io.read_features(_need(path, "feature archive"))


def cmd_experiment(cfg, root, jobs, args):
    real = _read_archive(Path(args.real) if args.real else root / "features" / "real-proxy.csv")
    synth = _read_archive(Path(args.synth) if args.synth else root / "features" / "synthetic.csv")
    result = run_experiment(real, synth, cfg.experiment, jobs=jobs)
    io.write_csv(root / "experiment" / "results.csv", RESULTS_HEADER,
                 [[r.condition, r.k, r.train_n, r.test_n, r.accuracy] for r in result.rows])
    by_cond = defaultdict(list)
    for r in result.rows:
        for t, true in enumerate(r.classes):
            for p, pred in enumerate(r.classes):
                by_cond[r.condition].append([r.k, true, pred, int(r.confusion[t, p])])
    for cond, rows in by_cond.items():
        io.write_csv(root / "experiment" / "confusion" / f"{condition_slug(cond)}.csv",
                     CONFUSION_HEADER, rows)
    _plot_accuracy(root)
    msg = _eigen_grid(root, [v for v in real + synth
                             if v.aug_id == 0 and v.kind == cfg.experiment.kind])
    return f"{len(result.rows)} result rows" + (f"; {msg}" if msg else "")


def _eigen_grid(root, vectors):
    if len(vectors) < 2:
        return "eigen-image grid skipped: fewer than two feature vectors"
    mean, evals, comps = pca_spectrum(np.array([v.values for v in vectors]))
    try:
        images = eigen_images(PcaModel(mean, comps, evals), 9)
    except InsufficientComponents as exc:
        return f"eigen-image grid skipped: {exc}"
    grid = image_grid(images, 3)
    io.write_png(root / "experiment" / "eigen_grid.png", io.to_uint8(grid))
    io.write_pgm(root / "experiment" / "eigen_grid.pgm", grid)
    return ""


# ---------------------------------------------------------------------------
# viewsweep and plots


def cmd_viewsweep(cfg, root, jobs, args):
    grid = viewpoint_grid(cfg.azimuth_step, cfg.elevation_step)
    io.write_csv(root / "viewsweep" / "grid.csv", GRID_HEADER,
                 [[i, az, el] for i, (az, el) in enumerate(grid)])
    return f"{len(grid)} viewpoint configurations"


def _plot_accuracy(root):
    rows = io.read_csv(_need(root / "experiment" / "results.csv", "results table"), RESULTS_HEADER)
    ks = sorted({int(r["k"]) for r in rows})
    conds = list(dict.fromkeys(r["condition"] for r in rows))
    acc = {(r["condition"], int(r["k"])): float(r["accuracy"]) for r in rows}
    series = [(c, [acc.get((c, k), 0.0) for k in ks]) for c in conds]
    svg = io.line_plot_svg(series, ks, "Identification accuracy", "principal components k",
                           "accuracy")
    io.atomic_write(root / "experiment" / "accuracy.svg", svg)


def _plot_similarity(root, stem):
    rows = io.read_csv(root / "similarity" / f"{stem}_stats.csv", STATS_HEADER)
    stats = [(r["subject"], *(float(r[k]) for k in ("min", "q1", "median", "q3", "max")))
             for r in rows]
    io.atomic_write(root / "similarity" / f"{stem}.svg",
                    io.box_plot_svg(stats, f"Jaccard index, {stem.replace('_', ' ')}"))


def cmd_plot(cfg, root, jobs, args):
    made = []
    if (root / "experiment" / "results.csv").is_file():
        _plot_accuracy(root)
        made.append("experiment/accuracy.svg")
    for path in sorted((root / "similarity").glob("*_stats.csv")):
        stem = path.name[:-len("_stats.csv")]
        _plot_similarity(root, stem)
        made.append(f"similarity/{stem}.svg")
    if not made:
        raise EmptyInput(f"{root}: nothing to plot (run experiment or similarity first)")
    return ", ".join(made)


COMMANDS = {
    "synth": (cmd_synth, "render frames and ground-truth cycles for every identity and variant"),
    "segment": (cmd_segment, "extract binary silhouettes from rendered frames"),
    "cycles": (cmd_cycles, "split mask sequences into gait cycles"),
    "features": (cmd_features, "compute per-cycle GEI/GEnI feature archives"),
    "similarity": (cmd_similarity, "Jaccard statistics within and across variants"),
    "experiment": (cmd_experiment, "PCA + SVM identification under the six train/test conditions"),
    "viewsweep": (cmd_viewsweep, "enumerate the azimuth/elevation grid"),
    "plot": (cmd_plot, "redraw SVG figures from result CSVs"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser():
    parser = _Parser(prog="gaitsynth", description="Synthetic gait recognition pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, metavar="PATH", help="pipeline YAML config")
        p.add_argument("--out", metavar="DIR", help="output root (default: config 'output' or ./out)")
        p.add_argument("--seed", type=int, metavar="N", help="override the config's global seed")
        p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
        if name == "segment":
            p.add_argument("--input", metavar="PATH",
                           help="frame manifest CSV (default: <out>/synth/frames.csv)")
        if name == "experiment":
            p.add_argument("--real", metavar="PATH", help="real-proxy feature archive")
            p.add_argument("--synth", metavar="PATH", help="synthetic feature archive")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        cfg = load_config(args.config, seed=args.seed)
        root = Path(args.out or cfg.output or "out")
        fn, _ = COMMANDS[args.command]
        summary = fn(cfg, root, args.jobs, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
