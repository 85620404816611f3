"""How similar are synthetic silhouettes to "real" ones of the same walker?

Cycles are paired frame by frame at matching phase, and each pair is scored
by the Jaccard index after a small translation search. Comparing clean cycles
of one walker with each other gives the ceiling. Comparing them with the
real-proxy render shows how much the confounders cost.
"""

import numpy as np

from gaitsynth.gait_cycle import detect_cycles
from gaitsynth.pipeline import render_proxy
from gaitsynth.similarity import (cross_cycle_values, jaccard_aligned, phase_pair_silhouettes,
                                  similarity_stats)
from gaitsynth.walker import identity_population

print(f"{'subject':8s} {'comparison':10s} {'q1':>6s} {'median':>6s} {'q3':>6s}")
for ident in identity_population(3, seed=7):
    _, clean = render_proxy(ident, "synthetic", 5.0, 25, seed=1)
    _, real = render_proxy(ident, "real-proxy", 5.0, 25, seed=2)
    sc, rc = detect_cycles(clean, 25)[0], detect_cycles(real, 25)[0]
    same = [r.value for *_, r in cross_cycle_values(sc)]
    cross = [jaccard_aligned(a, b).value for x in rc for y in sc
             for a, b in phase_pair_silhouettes(x, y)]
    for kind, vals in (("synth", same), ("real-synth", cross)):
        st = similarity_stats(vals, ident.name)
        print(f"{st.subject:8s} {kind:10s} {st.q1:6.3f} {st.median:6.3f} {st.q3:6.3f}")
