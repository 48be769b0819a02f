"""
Report persistence: JSON reports, CSV tables and SVG plots

CSV numbers carry 17 significant digits and SVG output has a fixed hash salt
and no date metadata, so reruns with the same seed are byte-identical.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from pydantic import BaseModel  # noqa: E402

from .config import logger  # noqa: E402
from .quadrature import Estimate  # noqa: E402

FLOAT_FORMAT = "%.17g"

plt.rcParams["svg.hashsalt"] = "isobp"
plt.rcParams["svg.fonttype"] = "none"


def write_json(model: BaseModel, path: Path) -> Path:
    """Write a pydantic model as indented JSON with sorted keys"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = model.model_dump(mode="json")
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(rows: List[Dict[str, Any]], path: Path) -> Path:
    """Write table rows with full float precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def sweep_table(directions: np.ndarray, estimates: Sequence[Estimate]) -> List[Dict[str, Any]]:
    """Rows (xi_1, ..., xi_n, value, err, n_evals) for a direction sweep"""
    rows = []
    for xi, estimate in zip(np.atleast_2d(directions), estimates):
        row = {f"xi_{i + 1}": float(v) for i, v in enumerate(xi)}
        row.update(value=estimate.value, err=estimate.err, n_evals=estimate.n_evals)
        rows.append(row)
    return rows


def direction_table(report) -> List[Dict[str, Any]]:
    """Per-direction section values of a Busemann-Petty report"""
    rows = []
    for r in report.rows:
        row = {f"xi_{i + 1}": v for i, v in enumerate(r.xi)}
        row.update(
            section_K=r.section_K.value,
            err_K=r.section_K.err,
            section_M=r.section_M.value,
            err_M=r.section_M.err,
            n_evals=r.section_K.n_evals + r.section_M.n_evals,
        )
        rows.append(row)
    return rows


def counterexample_table(scan) -> List[Dict[str, Any]]:
    return [
        {
            "t": row.t,
            "section": row.section.value,
            "section_err": row.section.err,
            "mu": row.mu.value,
            "mu_err": row.mu.err,
            "ratio_bob": row.ratio_bob,
        }
        for row in scan.rows
    ]


def suite_table(suite) -> List[Dict[str, Any]]:
    return [
        {
            "index": p.index,
            "dim": p.dim,
            "density": p.density,
            "K": p.K,
            "M": p.M,
            "scale": p.scale,
            "domination": p.domination,
            "ratio": None if p.ratio is None else p.ratio.value,
            "ratio_err": None if p.ratio is None else p.ratio.err,
            "ratio_over_sqrt_n": p.ratio_over_sqrt_n,
            "verdict": p.verdict,
        }
        for p in suite.pairs
    ]


def _save_svg(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_ratio_curve(scan, path: Path) -> Path:
    """Log-log curve of the section-to-measure ratio against t"""
    t = [row.t for row in scan.rows]
    values = [row.ratio_bob for row in scan.rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(t, values, "o-", label="observed")
    ax.loglog(
        t,
        values[0] * (np.asarray(t) / t[0]) ** scan.asymptotic_slope,
        "--",
        label=f"slope {scan.asymptotic_slope:g}",
    )
    ax.set_xlabel("t")
    ax.set_ylabel("max section / (mu^{(n-1)/n} f(0)^{1/n})")
    ax.set_title(f"n = {scan.n}, p = {scan.p:g}")
    ax.legend()
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_ratio_histogram(suite, path: Path) -> Path:
    """Histogram of mu(K)/mu(M) over sqrt(n) across a suite"""
    values = [p.ratio_over_sqrt_n for p in suite.pairs if p.ratio_over_sqrt_n is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=20)
    ax.axvline(1.0, color="k", linestyle="--")
    ax.set_xlabel("mu(K) / (sqrt(n) mu(M))")
    ax.set_ylabel("pairs")
    ax.set_title(suite.kind)
    fig.tight_layout()
    return _save_svg(fig, path)


def persist(
    model: BaseModel,
    name: str,
    output_dir: Path,
    tables: Optional[Dict[str, List[Dict[str, Any]]]] = None,
) -> List[Path]:
    """Write <name>.json and one <name>-<table>.csv per table into output_dir"""
    output_dir = Path(output_dir)
    written = [write_json(model, output_dir / f"{name}.json")]
    for table, rows in (tables or {}).items():
        if rows:
            written.append(write_csv(rows, output_dir / f"{name}-{table}.csv"))
    logger.info(
        "Report written",
        extra={"extra_fields": {"name": name, "files": [str(p) for p in written]}},
    )
    return written
