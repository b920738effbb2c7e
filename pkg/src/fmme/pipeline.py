"""End-to-end orchestration and the on-disk workspace.

Workspace layout, one directory per stage::

    <ws>/config.json
    <ws>/runs/<bearing>/run.json, windows.csv   (+ <bearing>.meta.json)
    <ws>/entropy/<bearing>.csv
    <ws>/mcr/<bearing>.csv
    <ws>/fused/<bearing>.csv
    <ws>/failure/<bearing>.json
    <ws>/prediction/<bearing>.json, table4.csv, table5.csv
    <ws>/score/report.csv, report.json

Every artifact has a ``.meta.json`` sidecar carrying the config hash and
stage version. A stage whose artifact exists with a matching sidecar is
loaded instead of recomputed, so deleting downstream files and rerunning
rebuilds exactly those.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, PipelineConfig
from .entropy import CHANNELS, KINDS, extract_tensor
from .evaluation import ScaleChoice, best_scale, mcr
from .fusion import FusedFeature, fuse, quality_gate
from .ingest import BearingRun, load_run, save_run
from .prognosis import (EXCLUDED, MISS, MatchLedger, NoReversalWarning, PredictionError, RulPrediction,
                        detect_failure, failure_time, health_labels, match_label, predict_rul, rescale)
from .scoring import ScoreReport, error_percent, score_all, score_one

log = logging.getLogger(__name__)

STAGE_VERSION = 1
STAGES = ("runs", "entropy", "mcr", "fused", "failure", "prediction", "score", "plots")
# feature id -> (channel, kind), in the order horizontal/vertical ATE then FDE
FEATURES = {1: ("horizontal", "ATE"), 2: ("vertical", "ATE"), 3: ("horizontal", "FDE"), 4: ("vertical", "FDE")}


class StageError(RuntimeError):
    def __init__(self, stage: str, bearing: str, message: str):
        super().__init__(f"[{stage}] {bearing}: {message}")
        self.stage = stage
        self.bearing = bearing


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# stage results

@dataclass
class EntropyTable:
    bearing: str
    indices: np.ndarray
    tensor: np.ndarray  # (n, channel, modal, kind, scale)
    gaps: np.ndarray
    scales: list[int]

    def series(self, ch: int, modal: int, kind: int, j: int) -> np.ndarray:
        from .entropy import _fill_gaps
        return _fill_gaps(self.tensor[:, ch, modal, kind, j], self.gaps)


@dataclass
class Selection:
    bearing: str
    choices: dict[tuple[str, int, str], ScaleChoice]

    def source_scales(self, channel: str, kind: str) -> dict[int, int]:
        return {m: c.scale for (ch, m, k), c in sorted(self.choices.items()) if ch == channel and k == kind}


@dataclass
class FailureRecord:
    bearing: str
    per_feature: dict[int, int]
    t_failure: int
    notes: list[str] = field(default_factory=list)


@dataclass
class BearingPrediction:
    bearing: str
    present_time: int
    ledger: MatchLedger
    prediction: RulPrediction | None
    act_rul: float | None
    reason: str = ""

    @property
    def predictable(self) -> bool:
        return self.prediction is not None


@dataclass
class PipelineResult:
    predictions: dict[str, BearingPrediction]
    score: ScoreReport | None
    fused: dict[str, list[FusedFeature]]
    failures: dict[str, FailureRecord]


# ---------------------------------------------------------------------------
# pure stage functions

def extract(run: BearingRun, cfg: PipelineConfig, jobs: int = 1) -> EntropyTable:
    if run.window_length != cfg.window_length:
        raise StageError("extract", run.id,
                         f"window length {run.window_length} differs from configured {cfg.window_length}")
    tensor, gaps = extract_tensor(run.signals, cfg.fde, cfg.scales, cfg.modal_count, cfg.emd_for_modals, jobs)
    if gaps.all():
        raise StageError("extract", run.id, "entropy extraction failed on every window")
    if gaps.any():
        log.warning("%s: %d windows failed and were interpolated", run.id, int(gaps.sum()))
    return EntropyTable(run.id, np.asarray(run.indices), tensor, gaps, cfg.scales)


def evaluate(table: EntropyTable, cfg: PipelineConfig) -> Selection:
    """Best scale by MCR for every (channel, modal, kind)."""
    from .entropy import EntropySeries
    choices = {}
    for ci, ch in enumerate(CHANNELS):
        for m in range(table.tensor.shape[2]):
            for ki, kind in enumerate(KINDS):
                cands = [EntropySeries(table.bearing, ch, m + 1, kind, tau, table.series(ci, m, ki, j))
                         for j, tau in enumerate(table.scales)]
                try:
                    choices[(ch, m + 1, kind)] = best_scale(cands, cfg.mcr_weights, cfg.conditioning)
                except ValueError as exc:
                    raise StageError("evaluate", table.bearing, f"{ch} modal {m + 1} {kind}: {exc}") from None
    return Selection(table.bearing, choices)


def fuse_bearing(table: EntropyTable, selection: Selection, cfg: PipelineConfig) -> list[FusedFeature]:
    """Fuse the raw entropy series at each modal's selected scale.

    Conditioning only serves scale selection; the fused curve is smoothed
    once, after the embedding, so the post-failure turn is not delayed twice.
    """
    out = []
    for fid, (ch, kind) in FEATURES.items():
        ci, ki = CHANNELS.index(ch), KINDS.index(kind)
        modal_ids = sorted(m for (c, m, k) in selection.choices if c == ch and k == kind)
        series = [table.series(ci, m - 1, ki, table.scales.index(selection.choices[(ch, m, kind)].scale))
                  for m in modal_ids]
        try:
            out.append(fuse(series, cfg.fusion, selection.bearing, ch, kind, selection.source_scales(ch, kind)))
        except ValueError as exc:
            raise StageError("fuse", selection.bearing, f"feature {fid}: {exc}") from None
    return out


def find_failure(bearing: str, fused: list[FusedFeature], cfg: PipelineConfig) -> FailureRecord:
    import warnings

    notes = []
    ids = [fid for fid, f in zip(FEATURES, fused) if f.accepted]
    if not ids:
        notes.append("no feature passed the quality gate; all four were used")
        ids = list(FEATURES)
    per = {}
    for fid in ids:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NoReversalWarning)
            try:
                per[fid] = detect_failure(fused[fid - 1].values, cfg.reversal.persist, cfg.reversal.reversal_frac)
            except ValueError as exc:
                raise StageError("detect-failure", bearing, f"feature {fid}: {exc}") from None
        if caught:
            notes.append(f"feature {fid}: no reversal found, last index used")
    return FailureRecord(bearing, per, failure_time(per.values()), notes)


def predict_bearing(bearing: str, present_time: int, fused: list[FusedFeature],
                    faults: dict[str, tuple[list[FusedFeature], FailureRecord]],
                    cfg: PipelineConfig, act_rul: float | None = None) -> BearingPrediction:
    """Match every accepted test feature against every fault sample and extrapolate."""
    ledger = MatchLedger()
    for fid in FEATURES:
        test = fused[fid - 1]
        for fault_id, (ffeat, rec) in sorted(faults.items()):
            fault = ffeat[fid - 1]
            if not (test.accepted and fault.accepted):
                ledger.cells[(fid, fault_id)] = EXCLUDED
                continue
            scaled = rescale(test.values, fault.values)
            if scaled is None:
                ledger.cells[(fid, fault_id)] = MISS
                continue
            labels = health_labels(min(rec.t_failure, fault.values.size), fault_id)
            hit = match_label(scaled[-1], fault.values, labels, cfg.match_delta)
            ledger.cells[(fid, fault_id)] = MISS if hit is None else hit
    label = ledger.present_label
    if label is None:
        reason = "no accepted test feature" if all(v == EXCLUDED for v in ledger.cells.values()) \
            else "no successful match"
        return BearingPrediction(bearing, present_time, ledger, None, act_rul, reason)
    try:
        pred = predict_rul(present_time, label, ledger)
    except PredictionError as exc:
        return BearingPrediction(bearing, present_time, ledger, None, act_rul, str(exc))
    return BearingPrediction(bearing, present_time, ledger, pred, act_rul)


def score_predictions(preds: dict[str, BearingPrediction]) -> ScoreReport | None:
    pairs = [(b, p.act_rul, p.prediction.rul) for b, p in sorted(preds.items())
             if p.predictable and p.act_rul not in (None, 0)]
    return score_all(pairs) if pairs else None


# ---------------------------------------------------------------------------
# serialization

def entropy_csv(table: EntropyTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "channel", "modal", "kind", "scale", "value", "gap"])
    n, n_ch, n_mod, n_kind, _ = table.tensor.shape
    for i in range(n):
        idx = int(table.indices[i])
        gap = int(table.gaps[i])
        for ci in range(n_ch):
            for m in range(n_mod):
                for ki in range(n_kind):
                    for j, tau in enumerate(table.scales):
                        v = table.tensor[i, ci, m, ki, j]
                        w.writerow([idx, CHANNELS[ci], m + 1, KINDS[ki], tau, "nan" if gap else _fmt(v), gap])
    return buf.getvalue()


def read_entropy_csv(path: Path, bearing: str) -> EntropyTable:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise StageError("extract", bearing, f"{path} is empty")
    windows = sorted({int(r["window"]) for r in rows})
    modals = max(int(r["modal"]) for r in rows)
    scales = sorted({int(r["scale"]) for r in rows})
    wpos = {w: i for i, w in enumerate(windows)}
    spos = {s: j for j, s in enumerate(scales)}
    tensor = np.full((len(windows), 2, modals, 2, len(scales)), np.nan)
    gaps = np.zeros(len(windows), dtype=bool)
    for r in rows:
        i = wpos[int(r["window"])]
        tensor[i, CHANNELS.index(r["channel"]), int(r["modal"]) - 1, KINDS.index(r["kind"]),
               spos[int(r["scale"])]] = float(r["value"])
        gaps[i] = r["gap"] == "1"
    return EntropyTable(bearing, np.array(windows), tensor, gaps, scales)


def mcr_csv(sel: Selection) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["channel", "modal", "kind", "scale", "mon", "cor", "rob", "mcr", "selected"])
    for (ch, m, kind), choice in sorted(sel.choices.items()):
        for tau, rep in sorted(choice.candidates.items()):
            w.writerow([ch, m, kind, tau, _fmt(rep.mon), _fmt(rep.cor), _fmt(rep.rob), _fmt(rep.mcr),
                        int(tau == choice.scale)])
    return buf.getvalue()


def fused_csv(fused: list[FusedFeature], indices) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "feature_id", "value", "accepted"])
    for fid, f in zip(FEATURES, fused):
        for idx, v in zip(indices, f.values):
            w.writerow([int(idx), fid, _fmt(v), int(f.accepted)])
    return buf.getvalue()


def read_fused_csv(path: Path, bearing: str, cfg: PipelineConfig) -> tuple[list[FusedFeature], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    indices = None
    for fid, (ch, kind) in FEATURES.items():
        sel = [r for r in rows if int(r["feature_id"]) == fid]
        values = np.array([float(r["value"]) for r in sel])
        if indices is None:
            indices = np.array([int(r["window"]) for r in sel])
        q = quality_gate(values, cfg.gate.mon_min, cfg.gate.center_max)
        out.append(FusedFeature(bearing, ch, kind, values, q))
    return out, indices


def prediction_json(p: BearingPrediction) -> str:
    ledger = {}
    for (fid, fault), v in sorted(p.ledger.cells.items()):
        ledger.setdefault(str(fid), {})[fault] = v
    pr = p.prediction
    doc = {
        "bearing": p.bearing,
        "present_time": p.present_time,
        "present_label": pr.present_label if pr else p.ledger.present_label,
        "t_fail": pr.t_fail if pr else None,
        "rul": pr.rul if pr else None,
        "act_rul": p.act_rul,
        "predictable": p.predictable,
        "reason": p.reason,
        "ledger": ledger,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_prediction_json(path: Path) -> BearingPrediction:
    doc = json.loads(Path(path).read_text())
    ledger = MatchLedger({(int(fid), fault): v for fid, cells in doc["ledger"].items()
                          for fault, v in cells.items()})
    pred = None
    if doc["predictable"]:
        pred = RulPrediction(doc["present_time"], doc["present_label"], doc["t_fail"], doc["rul"], ledger)
    return BearingPrediction(doc["bearing"], doc["present_time"], ledger, pred, doc["act_rul"], doc["reason"])


def table4_csv(preds: dict[str, BearingPrediction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = sorted({k for p in preds.values() for k in p.ledger.cells})
    w.writerow(["target"] + [f"feature{fid}:{fault}" for fid, fault in cols] + ["average"])
    for b, p in sorted(preds.items()):
        cells = []
        for key in cols:
            v = p.ledger.cells.get(key, "")
            cells.append(v if isinstance(v, str) else f"{v:.4f}")
        avg = p.ledger.present_label
        w.writerow([b] + cells + ["" if avg is None else f"{avg:.4f}"])
    return buf.getvalue()


def table5_csv(preds: dict[str, BearingPrediction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["target", "pre_rul", "act_rul", "err_percent", "score"])
    for b, p in sorted(preds.items()):
        if not p.predictable:
            w.writerow([b, "", p.act_rul if p.act_rul is not None else "", "", ""])
            continue
        pre = p.prediction.rul
        if p.act_rul:
            err = error_percent(p.act_rul, pre)
            w.writerow([b, f"{pre:.2f}", p.act_rul, f"{err:.2f}", f"{score_one(err):.4f}"])
        else:
            w.writerow([b, f"{pre:.2f}", "", "", ""])
    return buf.getvalue()


def score_csv(report: ScoreReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bearing", "act_rul", "pre_rul", "err_percent", "score"])
    for r in report.bearings:
        w.writerow([r.bearing, _fmt(r.act_rul), _fmt(r.pre_rul), _fmt(r.err_percent), _fmt(r.score)])
    w.writerow(["average", "", "", "", _fmt(report.score)])
    return buf.getvalue()


def score_json(report: ScoreReport) -> str:
    return json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"


def read_score_input(path) -> list[tuple[str, float, float]]:
    """Rows of (bearing, act_rul, pre_rul) from a CSV with that header."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"bearing", "act_rul", "pre_rul"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [(r["bearing"], float(r["act_rul"]), float(r["pre_rul"])) for r in reader]


# ---------------------------------------------------------------------------
# workspace

class Workspace:
    def __init__(self, root, config: PipelineConfig | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        cfg_path = self.root / "config.json"
        if cfg_path.exists():
            stored = PipelineConfig.load(cfg_path)
            if config is not None and stored.hash != config.hash:
                raise ConfigError(
                    f"workspace {self.root} was built with config {stored.hash}, "
                    f"refusing to mix with {config.hash}"
                )
            self.config = stored
        else:
            self.config = config or PipelineConfig()
            cfg_path.write_text(self.config.to_json())

    # -- files
    def path(self, stage: str, name: str) -> Path:
        d = self.root / stage
        d.mkdir(parents=True, exist_ok=True)
        return d / name

    def _meta_path(self, stage: str, bearing: str) -> Path:
        return self.path(stage, f"{bearing}.meta.json")

    def _write_meta(self, stage: str, bearing: str, extra: dict | None = None):
        doc = {"bearing": bearing, "config_hash": self.config.hash, "stage": stage,
               "stage_version": STAGE_VERSION}
        doc.update(extra or {})
        self._meta_path(stage, bearing).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def meta(self, stage: str, bearing: str) -> dict | None:
        p = self.root / stage / f"{bearing}.meta.json"
        if not p.exists():
            return None
        doc = json.loads(p.read_text())
        if doc.get("config_hash") != self.config.hash:
            raise ConfigError(f"{p} was produced with config {doc.get('config_hash')}, "
                              f"workspace uses {self.config.hash}")
        return doc

    def fresh(self, stage: str, bearing: str, artifact: str) -> bool:
        meta = self.meta(stage, bearing)
        return (meta is not None and meta.get("stage_version") == STAGE_VERSION
                and (self.root / stage / artifact).exists())

    def write(self, stage: str, bearing: str, artifact: str, text: str, extra: dict | None = None):
        self.path(stage, artifact).write_text(text)
        self._write_meta(stage, bearing, extra)

    # -- runs
    def add_run(self, run: BearingRun, role: str) -> None:
        if role not in ("learning", "test"):
            raise ValueError(f"role must be 'learning' or 'test', got {role!r}")
        if role == "test" and run.truncation_index is not None and len(run) and run.indices[-1] > run.truncation_index:
            # nothing after present time may reach the test features
            run = run.truncated(run.truncation_index)
        save_run(run, self.root / "runs" / run.id)
        self._write_meta("runs", run.id, {"role": role})

    def bearings(self, role: str | None = None) -> list[str]:
        d = self.root / "runs"
        if not d.is_dir():
            return []
        out = []
        for p in sorted(d.glob("*.meta.json")):
            meta = json.loads(p.read_text())
            if role is None or meta.get("role") == role:
                out.append(meta["bearing"])
        return out

    def role(self, bearing: str) -> str:
        meta = self.meta("runs", bearing)
        if meta is None:
            raise StageError("ingest", bearing, "bearing not present in workspace")
        return meta["role"]

    def run(self, bearing: str) -> BearingRun:
        self.role(bearing)
        return load_run(self.root / "runs" / bearing)

    def run_metadata(self, bearing: str) -> dict:
        return json.loads((self.root / "runs" / bearing / "run.json").read_text())

    # -- stages
    def entropy(self, bearing: str, jobs: int = 1) -> EntropyTable:
        name = f"{bearing}.csv"
        if self.fresh("entropy", bearing, name):
            return read_entropy_csv(self.root / "entropy" / name, bearing)
        table = extract(self.run(bearing), self.config, jobs)
        self.write("entropy", bearing, name, entropy_csv(table))
        return table

    def selection(self, bearing: str, jobs: int = 1) -> Selection:
        table = self.entropy(bearing, jobs)
        sel = evaluate(table, self.config)
        name = f"{bearing}.csv"
        if not self.fresh("mcr", bearing, name):
            self.write("mcr", bearing, name, mcr_csv(sel))
        return sel

    def fused(self, bearing: str, jobs: int = 1) -> list[FusedFeature]:
        name = f"{bearing}.csv"
        if self.fresh("fused", bearing, name):
            return read_fused_csv(self.root / "fused" / name, bearing, self.config)[0]
        table = self.entropy(bearing, jobs)
        fused = fuse_bearing(table, self.selection(bearing, jobs), self.config)
        self.write("fused", bearing, name, fused_csv(fused, table.indices))
        return fused

    def failure(self, bearing: str, jobs: int = 1) -> FailureRecord:
        name = f"{bearing}.json"
        if self.fresh("failure", bearing, name):
            doc = json.loads((self.root / "failure" / name).read_text())
            return FailureRecord(bearing, {int(k): v for k, v in doc["per_feature"].items()},
                                 doc["t_failure"], doc["notes"])
        rec = find_failure(bearing, self.fused(bearing, jobs), self.config)
        doc = {"bearing": bearing, "per_feature": {str(k): v for k, v in rec.per_feature.items()},
               "t_failure": rec.t_failure, "notes": rec.notes}
        self.write("failure", bearing, name, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return rec

    def prediction(self, bearing: str, jobs: int = 1) -> BearingPrediction:
        name = f"{bearing}.json"
        if self.fresh("prediction", bearing, name):
            return read_prediction_json(self.root / "prediction" / name)
        meta = self.run_metadata(bearing)
        condition = meta.get("condition")
        learning = [b for b in self.bearings("learning")
                    if self.run_metadata(b).get("condition") == condition]
        if not learning:
            raise StageError("predict", bearing, f"no fault sample for operating condition {condition}")
        faults = {b: (self.fused(b, jobs), self.failure(b, jobs)) for b in learning}
        present = meta["truncation_index"] or meta["last_index"]
        act = None
        if meta.get("failure_index") is not None:
            act = float(meta["failure_index"] - present)
        pred = predict_bearing(bearing, present, self.fused(bearing, jobs), faults, self.config, act)
        self.write("prediction", bearing, name, prediction_json(pred))
        return pred

    def predictions(self, jobs: int = 1) -> dict[str, BearingPrediction]:
        preds = {b: self.prediction(b, jobs) for b in self.bearings("test")}
        self.path("prediction", "table4.csv").write_text(table4_csv(preds))
        self.path("prediction", "table5.csv").write_text(table5_csv(preds))
        return preds

    def score(self, jobs: int = 1) -> ScoreReport | None:
        report = score_predictions(self.predictions(jobs))
        if report is not None:
            self.write("score", "report", "report.csv", score_csv(report))
            self.path("score", "report.json").write_text(score_json(report))
        return report

    def run_all(self, jobs: int = 1) -> PipelineResult:
        fused, failures = {}, {}
        for b in self.bearings():
            try:
                fused[b] = self.fused(b, jobs)
                if self.role(b) == "learning":
                    failures[b] = self.failure(b, jobs)
            except StageError:
                raise
            except (ValueError, ArithmeticError) as exc:
                raise StageError("run-all", b, str(exc)) from exc
        preds = self.predictions(jobs)
        return PipelineResult(preds, self.score(jobs), fused, failures)


def run_pipeline(learning_runs, test_runs, config: PipelineConfig | None = None,
                 workspace=None, jobs: int = 1) -> PipelineResult:
    """Run every stage for the given fault-sample and test runs.

    With `workspace` set, all artifacts are persisted there (and reused when
    already present); otherwise a temporary workspace is used and discarded.
    """
    import tempfile

    config = config or PipelineConfig()
    if workspace is None:
        with tempfile.TemporaryDirectory() as tmp:
            return run_pipeline(learning_runs, test_runs, config, tmp, jobs)
    ws = Workspace(workspace, config)
    for run in learning_runs:
        if not ws.fresh("runs", run.id, run.id):
            ws.add_run(run, "learning")
    for run in test_runs:
        if not ws.fresh("runs", run.id, run.id):
            ws.add_run(run, "test")
    return ws.run_all(jobs)
