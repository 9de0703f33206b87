"""Run reports, deterministic CSV serialization, and figure rendering.

The CSV schema for sampled fundamental matrices is fixed:
    re_z, im_z, arg_z, j, k, re_u, im_u, flavor, q
(`q` is empty on differential rows).  Formatting uses repr-precision %.17g
so re-running a command reproduces the files byte for byte; figures are
rendered *from* the CSV, making the SVG a pure function of it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import __version__ as _pkg_version
from .domain import LogPoint

matplotlib.rcParams["svg.hashsalt"] = "qconfluence"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


MATRIX_HEADER = ["re_z", "im_z", "arg_z", "j", "k", "re_u", "im_u", "flavor", "q"]


def matrix_rows(grid: Sequence[LogPoint], matrices, flavor: str,
                q: Optional[float]) -> List[List[str]]:
    rows: List[List[str]] = []
    for z, U in zip(grid, matrices):
        zc = z.to_complex()
        m = U.shape[0]
        for j in range(m):
            for k in range(m):
                rows.append([
                    _fmt(zc.real), _fmt(zc.imag), _fmt(z.argument),
                    str(j + 1), str(k + 1),
                    _fmt(U[j, k].real), _fmt(U[j, k].imag),
                    flavor, "" if q is None else _fmt(q),
                ])
    return rows


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


@dataclass
class RunReport:
    command: str
    config_digest: str
    q_values: List[float] = field(default_factory=list)
    errors: Dict[str, float] = field(default_factory=dict)          # str(q) -> E(q)
    invariants: Dict[str, bool] = field(default_factory=dict)
    timing_seconds: float = 0.0
    extra: Dict[str, object] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "package_version": _pkg_version,
            "config_digest": self.config_digest,
            "q_values": self.q_values,
            "errors": self.errors,
            "invariants": self.invariants,
            "timing_seconds": round(self.timing_seconds, 3),
            "extra": self.extra,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")


# ---------------------------------------------------------------------------
# figures (pure functions of CSV files)
# ---------------------------------------------------------------------------


def _save(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_error_decay(error_csv: str, out_path: str) -> None:
    """log-log plot of E(q) against q-1 from an error table CSV (q, E)."""
    _, rows = read_csv(error_csv)
    qs = [float(r[0]) for r in rows]
    es = [float(r[1]) for r in rows]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.loglog([q - 1.0 for q in qs], es, "o-", color="#1f77b4")
    ax.set_xlabel("q - 1")
    ax.set_ylabel("E(q)")
    ax.set_title("uniform error vs q")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    _save(fig, out_path)


def plot_entry_profiles(matrix_csv: str, out_path: str) -> None:
    """|u_{j,k}| against |z| along the first ray present in the CSV."""
    _, rows = read_csv(matrix_csv)
    if not rows:
        raise ValueError("empty matrix CSV")
    target_arg = rows[0][2]
    target_q = rows[0][8]
    series: Dict[Tuple[str, str], List[Tuple[float, float]]] = {}
    for r in rows:
        if r[2] != target_arg or r[8] != target_q:
            continue
        j, k = r[3], r[4]
        if int(j) > int(k):
            continue
        mod = math.hypot(float(r[0]), float(r[1]))
        mag = math.hypot(float(r[5]), float(r[6]))
        series.setdefault((j, k), []).append((mod, mag))
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    for (j, k), pts in sorted(series.items()):
        pts.sort()
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-300) for p in pts],
                    "o-", label=f"|u_{j}{k}|", markersize=3)
    ax.set_xlabel("|z|")
    ax.set_ylabel("entry magnitude")
    ax.set_title(f"matrix entries along arg z = {float(target_arg):.3f}")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, out_path)


def plot_direction_arcs(arcs_csv: str, out_path: str) -> None:
    """Arc diagram: per-factor admissibility arcs and the intersection."""
    _, rows = read_csv(arcs_csv)
    fig, ax = plt.subplots(figsize=(4.0, 4.0), subplot_kw={"projection": "polar"})
    colors = {"intersection": "#d62728"}
    radius = {"intersection": 1.0}
    for r in rows:
        label, lo, hi = r[0], float(r[1]), float(r[2])
        if label not in radius:
            radius[label] = 0.55 + 0.12 * len(radius)
        rr = radius[label]
        theta = [lo + (hi - lo) * i / 80.0 for i in range(81)]
        ax.plot(theta, [rr] * len(theta),
                color=colors.get(label, None), linewidth=3 if label == "intersection" else 1.6,
                label=label)
    handles, labels = ax.get_legend_handles_labels()
    seen: Dict[str, object] = {}
    for h, l in zip(handles, labels):
        seen.setdefault(l, h)
    ax.legend(seen.values(), seen.keys(), fontsize=6, loc="lower left",
              bbox_to_anchor=(1.0, 0.0))
    ax.set_yticks([])
    ax.set_title("admissible direction arcs", fontsize=9)
    fig.tight_layout()
    _save(fig, out_path)
