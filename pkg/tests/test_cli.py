import shutil
import textwrap

import numpy as np
import pytest

from gaitsynth import io
from gaitsynth.cli import main
from gaitsynth.config import load_config
from gaitsynth.recognition import CONDITIONS
from gaitsynth.similarity import jaccard
from gaitsynth.walker import generate_sequence

SMALL = """
seed: 11
identities:
  population: {count: 2, seed: 3}
confounders:
  variants:
    - {name: real, provenance: real-proxy, segmentation: lab, boundary_noise: 0.2,
       clothing_bulk: 1.2, elevation: 10}
    - {name: synth, provenance: synthetic, segmentation: chroma}
synth: {duration: 3.6, fps: 25}
features: {kinds: [GEI, GEnI], crop_margins: [[2, 2, 2, 2]]}
similarity: {comparisons: [[synth, synth], [real, synth]]}
experiment: {component_counts: [1, 2]}
viewsweep: {azimuth_step: 5, elevation_step: 5}
"""

STAGES = ["synth", "segment", "cycles", "features", "similarity", "experiment", "viewsweep", "plot"]


def write_config(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def run(cfg, out, *args):
    return main([args[0], "--config", str(cfg), "--out", str(out), *args[1:]])


def snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_config(tmp, SMALL)
    out = tmp / "out"
    codes = [run(cfg, out, stage) for stage in STAGES]
    return cfg, out, codes


def test_every_stage_succeeds(pipeline):
    _, out, codes = pipeline
    assert codes == [0] * len(STAGES)
    for rel in ("synth/sequences.csv", "synth/frames.csv", "synth/ground_truth.csv", "masks/masks.csv",
                "cycles/cycles.csv", "features/real-proxy.csv", "features/synthetic.csv",
                "similarity/synth_vs_synth_stats.csv", "similarity/real_vs_synth_pairs.csv",
                "similarity/real_vs_synth.svg", "experiment/results.csv", "experiment/accuracy.svg",
                "viewsweep/grid.csv"):
        assert (out / rel).is_file(), rel


def test_headers_match_contract(pipeline):
    _, out, _ = pipeline
    first = lambda rel: (out / rel).read_text().splitlines()[0]
    assert first("synth/frames.csv") == "sequence,frame,frame_path"
    assert first("synth/ground_truth.csv") == "sequence,cycle_index,start_frame,end_frame"
    assert first("masks/masks.csv") == "sequence,frame,mask_path"
    assert first("cycles/cycles.csv") == "sequence,cycle_index,start_frame,end_frame"
    assert first("cycles/signal/synth-s01.csv") == "frame,count,smoothed"
    assert first("similarity/real_vs_synth_stats.csv") == "subject,n,min,q1,median,q3,max"
    assert first("similarity/real_vs_synth_pairs.csv") == "subject,frame_a,frame_b,jaccard,dx,dy"
    assert first("experiment/results.csv") == "condition,k,train_n,test_n,accuracy"
    assert first("viewsweep/grid.csv") == "index,azimuth,elevation"


def test_results_cover_six_conditions(pipeline):
    _, out, _ = pipeline
    rows = io.read_csv(out / "experiment" / "results.csv")
    assert [(r["condition"], r["k"]) for r in rows] == [(c, k) for c in CONDITIONS for k in ("1", "2")]
    assert len(list((out / "experiment" / "confusion").glob("*.csv"))) == 6
    assert (out / "experiment" / "confusion" / "70pctRplusS-30pctR.csv").is_file()


def test_viewsweep_lists_703_viewpoints(pipeline):
    _, out, _ = pipeline
    assert len(io.read_csv(out / "viewsweep" / "grid.csv")) == 703


def test_chroma_masks_equal_renderer_silhouettes(pipeline):
    cfg_path, out, _ = pipeline
    cfg = load_config(cfg_path)
    seqs = {r["sequence"]: r for r in io.read_csv(out / "synth" / "sequences.csv")}
    masks = io.read_csv(out / "masks" / "masks.csv")
    for name, variant in (("synth-s01", "synth"), ("real-s02", "real")):
        meta = seqs[name]
        ident = next(i for i in cfg.identities if i.name == meta["identity"])
        seq = generate_sequence(ident, cfg.variant(variant).confounders[0], cfg.duration, cfg.fps,
                                int(meta["seed"]), cfg.camera)
        got = [io.read_mask(out / r["mask_path"]) for r in masks if r["sequence"] == name]
        assert len(got) == 90
        if variant == "synth":
            assert all(np.array_equal(g, m) for g, m in zip(got, seq.masks))
        else:
            assert min(jaccard(g, m).value for g, m in zip(got, seq.masks)) >= 0.95


def test_feature_archive_layout(pipeline):
    _, out, _ = pipeline
    vecs = io.read_features(out / "features" / "synthetic.csv")
    # per cycle and kind: original + one crop, then the flipped pair
    assert [v.aug_id for v in vecs[:8]] == [0, 1, 2, 3, 0, 1, 2, 3]
    assert [v.kind for v in vecs[:8]] == ["GEI"] * 4 + ["GEnI"] * 4
    assert any((out / "features" / "images").glob("synth-s01_c000_GEnI.pgm"))


def test_rerun_is_byte_identical(pipeline, tmp_path):
    cfg, out, _ = pipeline
    again = tmp_path / "again"
    assert [run(cfg, again, stage, "--jobs", "2") for stage in STAGES] == [0] * len(STAGES)
    assert snapshot(again) == snapshot(out)


def test_manifests_survive_moving_the_root(pipeline, tmp_path):
    cfg, out, _ = pipeline
    moved = tmp_path / "moved"
    shutil.copytree(out, moved)
    before = (moved / "cycles" / "cycles.csv").read_bytes()
    assert run(cfg, moved, "cycles") == 0
    assert (moved / "cycles" / "cycles.csv").read_bytes() == before


def test_segment_from_external_manifest(pipeline, tmp_path):
    cfg, out, _ = pipeline
    other = tmp_path / "masks-only"
    assert run(cfg, other, "segment", "--input", str(out / "synth" / "frames.csv")) == 0
    assert (other / "masks" / "masks.csv").read_bytes() == (out / "masks" / "masks.csv").read_bytes()
    assert (other / "synth" / "sequences.csv").is_file()


def test_experiment_with_explicit_archives(pipeline, tmp_path):
    cfg, out, _ = pipeline
    dest = tmp_path / "exp"
    code = run(cfg, dest, "experiment", "--real", str(out / "features" / "real-proxy.csv"),
               "--synth", str(out / "features" / "synthetic.csv"))
    assert code == 0
    assert (dest / "experiment" / "results.csv").read_bytes() == \
        (out / "experiment" / "results.csv").read_bytes()


def test_synth_counting_contract(tmp_path):
    cfg = write_config(tmp_path, """
        identities: {subjects: [{name: solo}]}
        synth: {duration: 2, fps: 25}
    """)
    assert run(cfg, tmp_path / "o", "synth") == 0
    frames = io.read_csv(tmp_path / "o" / "synth" / "frames.csv")
    assert len(frames) == 50
    assert len(list((tmp_path / "o" / "synth" / "synthetic-solo").glob("frame_*.png"))) == 50


@pytest.mark.slow
def test_full_view_sweep_gives_703_sequences(tmp_path):
    cfg = write_config(tmp_path, """
        identities: {subjects: [{name: a}]}
        confounders:
          sweep:
            azimuth: {start: 0, stop: 180, step: 5}
            elevation: {start: 0, stop: 90, step: 5}
        synth: {duration: 1, fps: 1, width: 24, height: 36, focal_length: 90}
    """)
    assert run(cfg, tmp_path / "o", "synth") == 0
    dirs = [p for p in (tmp_path / "o" / "synth").iterdir() if p.is_dir()]
    assert len(dirs) == 703


def test_invalid_config_exits_1_without_writing(tmp_path, capsys):
    cfg = write_config(tmp_path, """
        identities: {subjects: [{name: a}]}
        confounders: {defaults: {speed: 20}}
    """)
    assert run(cfg, tmp_path / "never", "synth") == 1
    err = capsys.readouterr().err
    assert err.startswith("error: confounders.defaults.speed (line 3)")
    assert not (tmp_path / "never").exists()


def test_argument_errors_exit_1(tmp_path, capsys):
    cfg = write_config(tmp_path, "identities: {subjects: [{name: a}]}\n")
    assert run(cfg, tmp_path, "viewsweep", "--jobs", "0") == 1
    with pytest.raises(SystemExit) as info:
        main(["bogus", "--config", str(cfg)])
    assert info.value.code == 1
    assert "error:" in capsys.readouterr().err


def test_data_errors_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "identities: {subjects: [{name: a}]}\n")
    root = tmp_path / "o"
    assert run(cfg, root, "cycles") == 2
    assert "masks.csv: mask manifest not found" in capsys.readouterr().err
    io.write_csv(root / "masks" / "masks.csv", ["sequence", "frame", "mask_path"], [])
    assert run(cfg, root, "cycles") == 2
    assert "no masks listed" in capsys.readouterr().err
    assert run(cfg, root, "plot") == 2


def test_missing_background_is_reported(pipeline, tmp_path, capsys):
    cfg, out, _ = pipeline
    broken = tmp_path / "broken"
    shutil.copytree(out / "synth", broken / "synth")
    (broken / "synth" / "real-s01" / "background.png").unlink()
    assert run(cfg, broken, "segment") == 2
    assert "background.png: image not found" in capsys.readouterr().err
