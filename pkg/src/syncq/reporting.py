"""CSV/JSON artifact writers, run manifests, and figure rendering.

Numbers are written with 9 significant digits so identical runs produce
byte-identical files.  Every command directory gets a ``manifest.json``
recording the configuration hash, seed, code version and artifact list
(no timestamps, to keep reruns byte-identical).  Figures are rendered with
the Agg backend next to the delimited data they visualize.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .config import config_digest
from .engine import SimOutput
from .stats import mean_ci

__all__ = [
    "fmt", "write_jobs_csv", "write_summary_json", "write_ccdf_csv",
    "write_running_mean_csv", "write_pool_csv", "write_comparison_csv",
    "write_manifest", "summary_dict",
    "plot_ccdfs", "plot_running_mean", "plot_table1",
]


def fmt(x: float) -> str:
    return f"{x:.9g}"


def _ensure_dir(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def write_jobs_csv(path: str | Path, out: SimOutput) -> Path:
    p = Path(path)
    _ensure_dir(p)
    wait = out.waiting
    soj = out.sojourn
    with p.open("w") as fh:
        fh.write("job_id,arrival,start,departure,waiting,sojourn\n")
        for j in range(out.njobs):
            fh.write(f"{j},{fmt(out.arrival[j])},{fmt(out.start[j])},"
                     f"{fmt(out.departure[j])},{fmt(wait[j])},{fmt(soj[j])}\n")
    return p


def summary_dict(out: SimOutput, batches: int = 30, level: float = 0.95) -> dict:
    soj = out.kept(out.sojourn)
    nb = min(batches, soj.size // 2)
    if nb >= 2:
        ci = mean_ci(soj, batches=nb, level=level)
        mean, lo, hi = ci.mean, ci.lo, ci.hi
    else:
        # run too short for an interval; report the point estimate
        mean = lo = hi = float(soj.mean())
    return {
        "discipline": out.discipline,
        "mean_sojourn": mean,
        "ci_lo": lo,
        "ci_hi": hi,
        "mean_waiting": float(out.kept(out.waiting).mean()),
        "jobs": int(soj.size),
        "events": out.events,
    }


def write_summary_json(path: str | Path, out: SimOutput,
                       batches: int = 30, level: float = 0.95) -> Path:
    p = Path(path)
    _ensure_dir(p)
    p.write_text(json.dumps(summary_dict(out, batches, level), indent=2) + "\n")
    return p


def write_comparison_csv(path: str | Path, summaries: Sequence[Mapping]) -> Path:
    p = Path(path)
    _ensure_dir(p)
    with p.open("w") as fh:
        fh.write("discipline,mean_sojourn,ci_lo,ci_hi,mean_waiting,jobs,events\n")
        for s in summaries:
            fh.write(f"{s['discipline']},{fmt(s['mean_sojourn'])},{fmt(s['ci_lo'])},"
                     f"{fmt(s['ci_hi'])},{fmt(s['mean_waiting'])},{s['jobs']},{s['events']}\n")
    return p


def write_ccdf_csv(path: str | Path, pairs: np.ndarray) -> Path:
    p = Path(path)
    _ensure_dir(p)
    with p.open("w") as fh:
        fh.write("x,ccdf\n")
        for x, c in pairs:
            fh.write(f"{fmt(x)},{fmt(c)}\n")
    return p


def write_running_mean_csv(path: str | Path, values: np.ndarray) -> Path:
    p = Path(path)
    _ensure_dir(p)
    with p.open("w") as fh:
        fh.write("t,running_mean\n")
        for t, v in enumerate(values, start=1):
            fh.write(f"{t},{fmt(v)}\n")
    return p


def write_pool_csv(path: str | Path, values: np.ndarray) -> Path:
    p = Path(path)
    _ensure_dir(p)
    with p.open("w") as fh:
        for v in values:
            fh.write(fmt(v) + "\n")
    return p


def write_manifest(outdir: str | Path, command: str, config: dict, seed: int,
                   artifacts: Iterable[str | Path], extra: Mapping | None = None) -> Path:
    d = Path(outdir)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "version": __version__,
        "config_digest": config_digest(config),
        "config": config,
        "seed": seed,
        "artifacts": sorted(str(Path(a).name) for a in artifacts),
    }
    if extra:
        manifest.update(extra)
    p = d / "manifest.json"
    p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return p


# ---------------------------------------------------------------------------
# figure rendering (Agg backend; imported lazily so headless use stays cheap)

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_ccdfs(path: str | Path, curves: Mapping[str, np.ndarray],
               title: str = "", logy: bool = True) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, pairs in curves.items():
        mask = pairs[:, 1] > 0 if logy else np.ones(len(pairs), bool)
        ax.plot(pairs[mask, 0], pairs[mask, 1], label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("x")
    ax.set_ylabel("P(X > x)")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    p = Path(path)
    _ensure_dir(p)
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return p


def plot_running_mean(path: str | Path, curves: Mapping[str, np.ndarray],
                      title: str = "") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, values in curves.items():
        ax.plot(np.arange(1, len(values) + 1), values, label=label)
    ax.set_xlabel("jobs")
    ax.set_ylabel("running mean sojourn")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    p = Path(path)
    _ensure_dir(p)
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return p


def plot_table1(path: str | Path, rows: Sequence[Mapping]) -> Path:
    """Grouped bars of mean sojourn (with CI whiskers) per cell."""
    plt = _pyplot()
    labels = sorted({r["row"] for r in rows})
    models = ["syncb", "splitmerge", "mgn"]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    width = 0.25
    xs = np.arange(len(labels))
    for i, model in enumerate(models):
        sel = {r["row"]: r for r in rows if r["discipline"] == model}
        means = [sel[l]["mean_sojourn"] for l in labels]
        errs = [[sel[l]["mean_sojourn"] - sel[l]["ci_lo"] for l in labels],
                [sel[l]["ci_hi"] - sel[l]["mean_sojourn"] for l in labels]]
        ax.bar(xs + (i - 1) * width, means, width, yerr=errs, capsize=3, label=model)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels)
    ax.set_yscale("log")
    ax.set_ylabel("mean sojourn")
    ax.legend()
    fig.tight_layout()
    p = Path(path)
    _ensure_dir(p)
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return p
