"""A procedural walker, exported as BVH and retargeted onto another body.

The walker is just a motion clip: joint rotations over a skeleton. Anything
that works on captured data (BVH round trips, retargeting, forward
kinematics) works on it too.
"""

from pathlib import Path

import numpy as np

from gaitsynth import io
from gaitsynth.mocap import forward_kinematics_positions, parse_bvh, retarget, write_bvh
from gaitsynth.walker import (ConfounderConfig, default_identity, generate_sequence, random_identity,
                              stride_frequency, synthesize_kinematics, walker_skeleton)

OUT = Path(__file__).parent / "out" / "walker"

alice = default_identity("alice")
clip = synthesize_kinematics(alice, speed=5.0, duration=2.0, fps=25)
f = stride_frequency(5.0, alice.cadence_bias)
print(f"{len(clip)} frames, {len(clip.skeleton)} joints, stride frequency {f:.2f} Hz")

# BVH stores Euler angles; the round trip should only cost float formatting
text = write_bvh(clip)
back = parse_bvh(text)
print("BVH round trip within 1e-6:", back.same_as(clip, atol=1e-6))
OUT.mkdir(parents=True, exist_ok=True)
(OUT / "alice.bvh").write_text(text)

# put alice's motion on a differently proportioned skeleton
bob = random_identity(np.random.default_rng(1), "bob")
target = walker_skeleton(bob)
moved = retarget(clip, target, {n: n for n in clip.skeleton.names})
feet = [target.names.index(n) for n in ("l_ankle", "r_ankle")]
pos = forward_kinematics_positions(target, moved.rotations, moved.root_translation)
print("bob's ankle height range (mm):", np.ptp(pos[:, feet, 2]).round(1))

# render a few frames of the clean sequence and the first ground-truth cycle
seq = generate_sequence(alice, ConfounderConfig(speed=5.0), 2.0, 25, seed=0)
print("ground-truth cycles:", seq.boundaries)
for i in range(0, len(seq.frames), 6):
    io.write_png(OUT / f"frame_{i:03d}.png", seq.frames[i])
print("wrote", OUT)
