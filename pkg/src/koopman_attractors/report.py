"""Report documents, CSV curves and SVG scatter plots.

Reports are JSON with sorted keys and ``repr`` floats, so a rerun with the
same config and seeds reproduces them byte for byte.  Run times are kept
out of the report and written to a separate ``timing.json``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .koopman import write_curve_csv, write_points_csv

_SVG_SALT = "koopman-attractors"


def plain(v):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(v, dict):
        return {str(k): plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return plain(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (frozenset, set)):
        return sorted(plain(x) for x in v)
    return v


def dumps(doc) -> str:
    return json.dumps(plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))


def save_curve(out_dir: Path, rel: str, curve) -> str:
    t, values = curve
    path = out_dir / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    write_curve_csv(path, t, values)
    return rel


def save_points(out_dir: Path, rel: str, points) -> str:
    path = out_dir / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    write_points_csv(path, points)
    return rel


def _plane(space, pts):
    """Planar picture of chart points: angular charts go on the unit circle."""
    pts = np.asarray(pts, dtype=float)
    if space.kind in ("circle", "compactified_line", "compactified_halfline"):
        return np.cos(pts[:, 0]), np.sin(pts[:, 0])
    if space.dim == 1:
        return pts[:, 0], np.zeros(len(pts))
    return pts[:, 0], pts[:, 1]


def scatter_svg(path, space, layers, title: str = ""):
    """Static SVG of point sets; ``layers`` is a list of ``(label, points)``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        markers = ["o", "x", "+", "s"]
        for i, (label, pts) in enumerate(layers):
            if len(pts) == 0:
                continue
            x, y = _plane(space, pts)
            ax.scatter(x, y, s=6 if i == 0 else 10, marker=markers[i % len(markers)],
                       label=label, linewidths=0.8)
        if space.kind == "annulus":
            th = np.linspace(0, 2 * np.pi, 361)
            for r in (space.param("r_in"), space.param("r_out")):
                ax.plot(r * np.cos(th), r * np.sin(th), color="0.7", lw=0.6)
        ax.set_aspect("equal" if space.dim == 2 or space.kind != "box" else "auto")
        ax.set_title(title, fontsize=9)
        ax.legend(fontsize=7, loc="upper right")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
