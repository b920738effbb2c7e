"""Command line front end over a persistent workspace.

Exit codes: 0 success, 1 stage failure, 2 bad configuration or usage.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, PipelineConfig
from .ingest import DatasetManifest, IngestError, SynthConfig, load_bearing, synth_run
from .pipeline import StageError, Workspace, read_score_input, score_csv, score_json
from .scoring import score_all

log = logging.getLogger("fmme")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmme", description="Bearing RUL estimation from fused entropy features.")
    ap.add_argument("--workspace", default=os.environ.get("FMME_WORKSPACE"),
                    help="workspace directory (default: $FMME_WORKSPACE)")
    ap.add_argument("--config", help="pipeline config JSON (defaults apply when omitted)")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for entropy extraction")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load FEMTO bearings (acc_#####.csv folders) into the workspace")
    p.add_argument("root", help="directory holding one folder per bearing")
    p.add_argument("bearings", nargs="*", help="bearing ids (default: every folder found)")
    p.add_argument("--role", choices=("learning", "test"), help="default: from bundled metadata")
    p.add_argument("--truncate", type=int, help="keep windows up to this index and treat it as present time")

    p = sub.add_parser("synth", help="generate a synthetic run-to-failure bearing")
    p.add_argument("--id", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--role", choices=("learning", "test"), default="learning")
    p.add_argument("--n-windows", type=int, default=SynthConfig.n_windows)
    p.add_argument("--window-length", type=int, default=SynthConfig.window_length)
    p.add_argument("--onset", type=float, default=SynthConfig.onset)
    p.add_argument("--condition", type=int, default=SynthConfig.condition)
    p.add_argument("--truncate-frac", type=float,
                   help="truncate at this fraction of the true failure index (test runs)")

    for name, helptext in (("extract", "entropy series per window"), ("evaluate", "MCR best-scale selection"),
                           ("fuse", "Laplacian-eigenmap fusion and quality gate"),
                           ("detect-failure", "failure moments of fault samples"),
                           ("predict", "RUL of test bearings")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("bearings", nargs="*", help="default: every applicable bearing")

    p = sub.add_parser("score", help="PHM 2012 score of the predictions, or of a CSV")
    p.add_argument("--input", help="CSV with bearing, act_rul, pre_rul columns")
    p.add_argument("--out", help="output stem for --input mode (writes .csv and .json)")

    sub.add_parser("plot", help="SVG + CSV per fused feature")
    sub.add_parser("run-all", help="every stage for every bearing in the workspace")
    return ap


def _config(args) -> PipelineConfig | None:
    return PipelineConfig.load(args.config) if args.config else None


def _workspace(args) -> Workspace:
    if not args.workspace:
        raise ConfigError("no workspace: pass --workspace or set FMME_WORKSPACE")
    return Workspace(args.workspace, _config(args))


def _targets(ws: Workspace, requested, role: str | None = None) -> list[str]:
    known = ws.bearings()
    for b in requested:
        if b not in known:
            raise StageError("workspace", b, "bearing not present in workspace")
    return list(requested) or ws.bearings(role)


def _cmd_ingest(args, ws: Workspace):
    from .ingest import bearing_metadata
    manifest = DatasetManifest.discover(args.root)
    ids = args.bearings or sorted(manifest.bearings)
    if not ids:
        raise IngestError(f"no bearing folders under {args.root}")
    for b in ids:
        run = load_bearing(manifest, b, args.jobs, ws.config.window_length)
        if args.truncate is not None:
            run = run.truncated(args.truncate)
        role = args.role or bearing_metadata(b).get("role", "learning")
        ws.add_run(run, role)
        print(f"{b}: {len(run)} windows, role {role}")


def _cmd_synth(args, ws: Workspace):
    cfg = SynthConfig(n_windows=args.n_windows, window_length=args.window_length, onset=args.onset,
                      condition=args.condition)
    run = synth_run(cfg, args.seed, args.id)
    if args.truncate_frac is not None:
        if run.failure_index is None:
            raise ConfigError("--truncate-frac needs a failure inside the run (onset < 1)")
        run = run.truncated(int(round(args.truncate_frac * run.failure_index)))
    ws.add_run(run, args.role)
    print(f"{run.id}: {len(run)} windows, failure at {run.failure_index}, role {args.role}")


def _cmd_score(args):
    if args.input:
        report = score_all(read_score_input(args.input))
        stem = Path(args.out) if args.out else Path(args.input).with_suffix("")
        Path(f"{stem}.score.csv").write_text(score_csv(report))
        Path(f"{stem}.score.json").write_text(score_json(report))
    else:
        ws = _workspace(args)
        report = ws.score(args.jobs)
        if report is None:
            raise StageError("score", "*", "no predictable test bearing with a known actual RUL")
    for r in report.bearings:
        print(f"{r.bearing}: act {r.act_rul:g} pre {r.pre_rul:.1f} err {r.err_percent:.2f}% score {r.score:.4f}")
    print(f"score {report.score:.4f}")


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        ap.error("--jobs must be >= 1")
    try:
        if args.command == "score":
            _cmd_score(args)
            return 0
        ws = _workspace(args)
        cmd = args.command
        if cmd == "ingest":
            _cmd_ingest(args, ws)
        elif cmd == "synth":
            _cmd_synth(args, ws)
        elif cmd == "extract":
            for b in _targets(ws, args.bearings):
                t = ws.entropy(b, args.jobs)
                print(f"{b}: {t.tensor.shape[0]} windows, {int(t.gaps.sum())} gaps")
        elif cmd == "evaluate":
            for b in _targets(ws, args.bearings):
                sel = ws.selection(b, args.jobs)
                print(f"{b}: " + " ".join(f"{ch[0]}{m}{k}={c.scale}" for (ch, m, k), c in sorted(sel.choices.items())))
        elif cmd == "fuse":
            for b in _targets(ws, args.bearings):
                feats = ws.fused(b, args.jobs)
                print(f"{b}: " + " ".join(f"{i}:{'ok' if f.accepted else 'rejected'}(mon {f.quality.mon:.3f})"
                                          for i, f in enumerate(feats, 1)))
        elif cmd == "detect-failure":
            for b in _targets(ws, args.bearings, "learning"):
                rec = ws.failure(b, args.jobs)
                print(f"{b}: failure {rec.t_failure} per feature {rec.per_feature}")
                for note in rec.notes:
                    print(f"  note: {note}")
        elif cmd == "predict":
            for b in _targets(ws, args.bearings, "test"):
                p = ws.prediction(b, args.jobs)
                if p.predictable:
                    print(f"{b}: label {p.prediction.present_label:.4f} rul {p.prediction.rul:.1f}")
                else:
                    print(f"{b}: unpredictable ({p.reason})")
        elif cmd == "plot":
            from .plots import emit_plots
            files = emit_plots(ws)
            print(f"wrote {len(files)} files to {ws.root / 'plots'}")
        elif cmd == "run-all":
            res = ws.run_all(args.jobs)
            for b, p in sorted(res.predictions.items()):
                print(f"{b}: " + (f"rul {p.prediction.rul:.1f}" if p.predictable else f"unpredictable ({p.reason})"))
            if res.score is not None:
                print(f"score {res.score.score:.4f}")
            from .plots import emit_plots
            emit_plots(ws)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StageError, IngestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
