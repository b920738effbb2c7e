"""Feature-versus-time plots of fused degradation features."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .pipeline import FEATURES, StageError, Workspace, read_fused_csv  # noqa: E402

# fixed svg ids and no timestamp, so reruns write identical files
matplotlib.rcParams["svg.hashsalt"] = "fmme"
_SVG_META = {"Date": None, "Creator": "fmme"}


def _failure_index(ws: Workspace, bearing: str) -> int | None:
    p = ws.root / "failure" / f"{bearing}.json"
    if not p.exists():
        return None
    return json.loads(p.read_text())["t_failure"]


def emit_plots(workspace) -> list[Path]:
    """Write one SVG and one CSV per fused feature under ``<ws>/plots``."""
    ws = workspace if isinstance(workspace, Workspace) else Workspace(workspace)
    fused_dir = ws.root / "fused"
    bearings = sorted(p.stem for p in fused_dir.glob("*.csv")) if fused_dir.is_dir() else []
    if not bearings:
        raise StageError("plot", "*", "missing stage 'fused': run `fuse` before plotting")
    out = []
    for b in bearings:
        feats, idx = read_fused_csv(fused_dir / f"{b}.csv", b, ws.config)
        t_fail = _failure_index(ws, b)
        for fid, f in zip(FEATURES, feats):
            stem = f"{b}_feature{fid}"
            csv_path = ws.path("plots", f"{stem}.csv")
            with open(csv_path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["window", "value"])
                w.writerows((int(i), repr(float(v))) for i, v in zip(idx, f.values))
            fig, ax = plt.subplots(figsize=(6, 3.2))
            ax.plot(idx, f.values, lw=1.0, color="tab:blue" if f.accepted else "tab:gray")
            if t_fail is not None:
                ax.axvline(t_fail, color="tab:red", lw=0.8, ls="--", label=f"failure {t_fail}")
                ax.legend(loc="best", fontsize=8)
            title = f"{b} {f.channel} {f.kind} (mon {f.quality.mon:.3f})"
            if not f.accepted:
                title += " rejected"
                ax.text(0.5, 0.5, "rejected", transform=ax.transAxes, ha="center", va="center",
                        fontsize=20, color="tab:red", alpha=0.4)
            ax.set_title(title, fontsize=9)
            ax.set_xlabel("window")
            ax.set_ylabel("fused feature")
            fig.tight_layout()
            svg_path = ws.path("plots", f"{stem}.svg")
            fig.savefig(svg_path, format="svg", metadata=_SVG_META)
            plt.close(fig)
            out += [svg_path, csv_path]
    return out
