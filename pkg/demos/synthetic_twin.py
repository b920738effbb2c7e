"""Run the whole pipeline on two synthetic bearings and print what it found.

    python3 demos/synthetic_twin.py [--quick] [--jobs N]

The default pair has 1000 windows of 2560 points (about three minutes on one
core). --quick runs 150 short windows in seconds; that is enough to see every
stage run, but the test curve is too short for the quality gate to accept it.
"""
import argparse
import tempfile
import warnings

from fmme import PipelineConfig, SynthConfig, run_pipeline, synth_run

ap = argparse.ArgumentParser()
ap.add_argument("--quick", action="store_true")
ap.add_argument("--jobs", type=int, default=1)
args = ap.parse_args()

if args.quick:
    synth = SynthConfig(n_windows=150, window_length=512, onset=0.8)
    cfg = PipelineConfig(window_length=512, scale_count=8)
else:
    synth, cfg = SynthConfig(n_windows=1000, onset=0.8), PipelineConfig()

fault = synth_run(synth, seed=1, bearing_id="SynthFault")
whole = synth_run(synth, seed=2, bearing_id="SynthTest")
test = whole.truncated(int(round(0.7 * whole.failure_index)))

with tempfile.TemporaryDirectory() as ws, warnings.catch_warnings():
    warnings.simplefilter("ignore")
    res = run_pipeline([fault], [test], cfg, workspace=ws, jobs=args.jobs)

for b, feats in res.fused.items():
    print(b, ["%s %s mon=%.3f %s" % (f.channel, f.kind, f.quality.mon, "ok" if f.accepted else "rejected")
              for f in feats])

rec = res.failures["SynthFault"]
print("failure moment %d per feature %s (generator put it at %d)" % (rec.t_failure, rec.per_feature,
                                                                   fault.failure_index))
p = res.predictions["SynthTest"]
print("ledger", p.ledger.cells)
if p.predictable:
    act = whole.failure_index - test.truncation_index
    print("present %d label %.4f -> rul %.1f, actual %d" % (test.truncation_index, p.prediction.present_label,
                                                          p.prediction.rul, act))
else:
    print("test bearing unpredictable:", p.reason)
