"""Gait energy and gait entropy images for one walking cycle.

Each silhouette is cropped, scaled to a fixed height and centred on its
centroid. The GEI is the per-pixel mean over the cycle. The GEnI is the
binary entropy of that mean, so it lights up where the body moves.
"""

from pathlib import Path

from gaitsynth import io
from gaitsynth.features import (cycle_features, default_crop_grid, gei, geni, normalize_silhouette,
                                unflatten)
from gaitsynth.gait_cycle import detect_cycles
from gaitsynth.pipeline import render_proxy
from gaitsynth.walker import default_identity

OUT = Path(__file__).parent / "out" / "gei"

_, masks = render_proxy(default_identity("alice"), "synthetic", duration=3.0, fps=25, seed=0)
cycle = detect_cycles(masks, 25)[0][0]
norm = [normalize_silhouette(m) for m in cycle.silhouettes]
g, e = gei(norm), geni(norm)
print(f"cycle of {len(cycle)} frames; GEI range [{g.values.min():.2f}, {g.values.max():.2f}], "
      f"GEnI peak {e.values.max():.3f} bits")

# the static torso is always on (GEI 1, GEnI 0); swinging legs are uncertain
rows = slice(0, 20), slice(35, 50)
for name, r in zip(("upper body", "lower legs"), rows):
    print(f"{name:10s}: mean GEnI {e.values[r].mean():.3f}")

io.write_pgm(OUT / "gei.pgm", g.values)
io.write_pgm(OUT / "geni.pgm", e.values)

# augmentation: crops and mirror images, 12 vectors per kind from one cycle
vecs = cycle_features(cycle.silhouettes, "alice", "synthetic", kinds=("GEI", "GEnI"),
                      crop_margins=default_crop_grid())
print(f"{len(vecs)} feature vectors ({sum(v.aug_id == 0 for v in vecs)} un-augmented)")
for v in vecs[:12]:
    io.write_pgm(OUT / f"aug_{v.kind}_{v.aug_id:02d}.pgm", unflatten(v.values).values)
print("wrote", OUT, "(PGM, viewable with most image tools)")
