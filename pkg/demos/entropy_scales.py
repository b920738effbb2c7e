"""Multiscale attention and fluctuation dispersion entropy of one healthy and one faulty window."""
import numpy as np

from fmme import SynthConfig, decompose, entropy_profiles, select_modals, synth_run

run = synth_run(SynthConfig(n_windows=100, onset=0.8), seed=3)
scales = range(1, 21)

for label, idx in (("healthy", 5), ("faulty", 95)):
    h = run.signals[idx, 0]
    modals = select_modals(decompose(h), 6)
    print("%s window %d, rms %.2f" % (label, idx + 1, np.sqrt(np.mean(h ** 2))))
    for m, imf in enumerate(modals, 1):
        ate, fde = entropy_profiles(imf, scales=scales)
        print("  modal %d  ATE %s" % (m, " ".join("%.2f" % v for v in ate[:8])))
        print("           FDE %s" % " ".join("%.2f" % v for v in fde[:8]))
