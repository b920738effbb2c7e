"""Bearing remaining-useful-life estimation from fused multi-modal entropy features."""
from .config import ConfigError, PipelineConfig
from .emd import EmdConfig, ModalSet, decompose, select_modals
from .entropy import (FdeParams, EntropySeries, attention_entropy, entropy_profiles, extract_series, fde,
                      rcmate, rcmate_profile, rcmfde, rcmfde_profile)
from .evaluation import McrReport, McrWeights, best_scale, correlation, mcr, monotonicity, robustness
from .fusion import FusedFeature, fuse, laplacian_eigenmap_1d, quality_gate
from .ingest import BearingRun, DatasetManifest, IngestError, SynthConfig, load_bearing, synth_run
from .pipeline import PipelineResult, Workspace, run_pipeline
from .prognosis import (MatchLedger, RulPrediction, detect_failure, health_labels, match_label, predict_rul,
                        rescale)
from .scoring import ScoreReport, error_percent, score_all, score_one
from .signal_ops import coarse_grain, exp_smooth, wavelet_denoise

__version__ = "0.1.0"
