from fmme import PipelineConfig, SynthConfig, synth_run

SMALL = PipelineConfig(window_length=256, scale_count=5)
SMALL_SYNTH = SynthConfig(n_windows=100, window_length=256, onset=0.9)


def small_twins(seed_fault=1, seed_test=2, frac=0.7):
    fault = synth_run(SMALL_SYNTH, seed_fault, "SynthA")
    full = synth_run(SMALL_SYNTH, seed_test, "SynthB")
    return fault, full.truncated(int(round(frac * full.failure_index)))
