"""Compact metric state spaces, sample clouds and closed sets.

Points are stored as rows of float arrays in *chart coordinates*:

=========================  ==========================================
kind                       chart coordinate
=========================  ==========================================
``box``                    Cartesian coordinates, Euclidean metric
``annulus``                Cartesian ``(x, y)``, Euclidean metric
``circle``                 angle in ``[0, 2*pi)``, arc-length metric
``compactified_line``      ``alpha = 2*arctan(x)`` in ``(-pi, pi]``;
                           ``alpha = pi`` is the point at infinity
``compactified_halfline``  ``alpha = 2*arctan(x)`` in ``[0, pi]``;
                           ``alpha = pi`` is the point at infinity
``finite``                 state index, discrete metric
=========================  ==========================================

Every space also provides a Euclidean *embedding* together with a monotone
map between embedded (chord) distances and the space metric, so that nearest
neighbour queries can go through :class:`scipy.spatial.cKDTree`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels

TWO_PI = 2.0 * math.pi
DEFAULT_POINT_BUDGET = 200_000

KINDS = ("box", "annulus", "circle", "compactified_line",
         "compactified_halfline", "finite")


class BudgetExceededError(RuntimeError):
    """Raised when a grid would exceed the configured point budget."""


@dataclass(frozen=True)
class StateSpace:
    """A compact metric space described by a chart.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    params : tuple
        Kind-specific parameters as ``(name, value)`` pairs, e.g.
        ``(("bounds", ((0.0, 1.0),)),)`` for a unit interval.
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")

    # -- construction helpers -------------------------------------------
    @classmethod
    def box(cls, bounds: Sequence[Sequence[float]]) -> "StateSpace":
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if not bounds or any(hi <= lo for lo, hi in bounds):
            raise ValueError("box bounds must be non-empty intervals")
        return cls("box", (("bounds", bounds),))

    @classmethod
    def annulus(cls, r_in: float = 1.0, r_out: float = 2.0) -> "StateSpace":
        if not 0 < r_in < r_out:
            raise ValueError("annulus needs 0 < r_in < r_out")
        return cls("annulus", (("r_in", float(r_in)), ("r_out", float(r_out))))

    @classmethod
    def circle(cls) -> "StateSpace":
        return cls("circle")

    @classmethod
    def compactified_line(cls) -> "StateSpace":
        return cls("compactified_line")

    @classmethod
    def compactified_halfline(cls) -> "StateSpace":
        return cls("compactified_halfline")

    @classmethod
    def finite(cls, n: int) -> "StateSpace":
        if n < 1:
            raise ValueError("finite space needs at least one state")
        return cls("finite", (("n", int(n)),))

    def param(self, name, default=None):
        return dict(self.params).get(name, default)

    # -- basic geometry ----------------------------------------------------
    @property
    def dim(self) -> int:
        if self.kind == "box":
            return len(self.param("bounds"))
        if self.kind == "annulus":
            return 2
        return 1

    @property
    def has_infinity(self) -> bool:
        return self.kind in ("compactified_line", "compactified_halfline")

    @property
    def chart_bounds(self) -> tuple:
        if self.kind == "box":
            return self.param("bounds")
        if self.kind == "annulus":
            r = self.param("r_out")
            return ((-r, r), (-r, r))
        if self.kind == "circle":
            return ((0.0, TWO_PI),)
        if self.kind == "compactified_line":
            return ((-math.pi, math.pi),)
        if self.kind == "compactified_halfline":
            return ((0.0, math.pi),)
        return ((0.0, float(self.param("n") - 1)),)

    def as_points(self, x) -> np.ndarray:
        """Promote ``x`` to a ``(n, dim)`` float array."""
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            pts = pts.reshape(-1, self.dim) if self.dim > 1 else pts.reshape(-1, 1)
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {pts.shape}")
        return pts

    def is_infinity(self, x) -> np.ndarray:
        pts = self.as_points(x)
        if not self.has_infinity:
            return np.zeros(len(pts), dtype=bool)
        return pts[:, 0] >= math.pi

    def point(self, *native) -> np.ndarray:
        """Chart coordinates of one state given in native coordinates.

        For the compactified spaces the native coordinate is the real number
        ``x`` (``math.inf`` for the point at infinity); for the annulus it is
        Cartesian ``(x, y)``; for the circle the angle.
        """
        return self.from_native(np.array([native], dtype=float))[0]

    def from_native(self, native) -> np.ndarray:
        arr = np.asarray(native, dtype=float)
        if self.has_infinity:
            arr = arr.reshape(-1, 1)
            alpha = 2.0 * np.arctan(arr)
            alpha[np.isinf(arr) & (arr > 0)] = math.pi
            if self.kind == "compactified_line":
                alpha[np.isinf(arr)] = math.pi
            return alpha
        if self.kind == "circle":
            return np.mod(arr.reshape(-1, 1), TWO_PI)
        return self.as_points(arr)

    def to_native(self, x) -> np.ndarray:
        pts = self.as_points(x)
        if self.has_infinity:
            out = np.tan(pts / 2.0)
            out[self.is_infinity(pts)] = math.inf
            return out
        return pts.copy()

    def from_polar(self, r, theta) -> np.ndarray:
        if self.kind != "annulus":
            raise ValueError("polar coordinates only exist for the annulus")
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    def membership(self, x, tol: float = 1e-9) -> np.ndarray:
        pts = self.as_points(x)
        if self.kind == "box":
            b = np.asarray(self.param("bounds"))
            return np.all((pts >= b[:, 0] - tol) & (pts <= b[:, 1] + tol), axis=1)
        if self.kind == "annulus":
            r = np.hypot(pts[:, 0], pts[:, 1])
            return (r >= self.param("r_in") - tol) & (r <= self.param("r_out") + tol)
        if self.kind == "circle":
            return (pts[:, 0] >= -tol) & (pts[:, 0] < TWO_PI + tol)
        if self.kind == "compactified_line":
            return (pts[:, 0] > -math.pi - tol) & (pts[:, 0] <= math.pi + tol)
        if self.kind == "compactified_halfline":
            return (pts[:, 0] >= -tol) & (pts[:, 0] <= math.pi + tol)
        n = self.param("n")
        idx = pts[:, 0]
        return (idx >= 0) & (idx <= n - 1) & (np.abs(idx - np.round(idx)) <= tol)

    # -- metric through a Euclidean embedding ---------------------------------
    @property
    def _angular(self) -> bool:
        return self.kind in ("circle", "compactified_line", "compactified_halfline")

    def embed(self, x) -> np.ndarray:
        pts = self.as_points(x)
        if self._angular:
            return np.column_stack([np.cos(pts[:, 0]), np.sin(pts[:, 0])])
        if self.kind == "finite":
            n = self.param("n")
            out = np.zeros((len(pts), n))
            out[np.arange(len(pts)), np.round(pts[:, 0]).astype(int)] = 1.0 / math.sqrt(2.0)
            return out
        return pts

    def metric_from_chord(self, chord):
        chord = np.asarray(chord, dtype=float)
        if self._angular:
            return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
        return chord

    def chord_from_metric(self, d):
        d = np.asarray(d, dtype=float)
        if self._angular:
            return 2.0 * np.sin(np.clip(d, 0.0, math.pi) / 2.0)
        return d

    def metric(self, x, y) -> np.ndarray:
        """Row-wise distance between two equally shaped point arrays."""
        a, b = self.as_points(x), self.as_points(y)
        if self._angular:
            diff = np.abs(a[:, 0] - b[:, 0]) % TWO_PI
            return np.minimum(diff, TWO_PI - diff)
        if self.kind == "finite":
            return (np.round(a[:, 0]) != np.round(b[:, 0])).astype(float)
        return np.linalg.norm(a - b, axis=1)

    # -- chart utilities ------------------------------------------------------
    def wrap(self, x) -> np.ndarray:
        """Map chart coordinates back into the canonical chart domain."""
        pts = self.as_points(x).copy()
        if self.kind == "circle":
            pts[:, 0] = np.mod(pts[:, 0], TWO_PI)
        elif self.kind == "compactified_line":
            pts[:, 0] = math.pi - np.mod(math.pi - pts[:, 0], TWO_PI)
        return pts

    def project(self, x) -> np.ndarray:
        """Nearest chart point of the space (clipping at the chart boundary)."""
        pts = self.wrap(x)
        if self.kind == "box":
            b = np.asarray(self.param("bounds"))
            pts = np.clip(pts, b[:, 0], b[:, 1])
        elif self.kind == "compactified_halfline":
            pts = np.clip(pts, 0.0, math.pi)
        elif self.kind == "annulus":
            r = np.hypot(pts[:, 0], pts[:, 1])
            rc = np.clip(r, self.param("r_in"), self.param("r_out"))
            scale = np.divide(rc, r, out=np.ones_like(r), where=r > 0)
            pts = pts * scale[:, None]
        elif self.kind == "finite":
            pts = np.clip(np.round(pts), 0, self.param("n") - 1)
        return pts

    def offsets(self, radius: float, n_rings: int = 3, n_dirs: int = 8) -> np.ndarray:
        """Chart offsets on concentric rings of radius up to ``radius``."""
        if self.kind == "finite":
            return np.zeros((1, 1))
        radii = radius * np.arange(1, n_rings + 1) / n_rings
        if self.dim == 1:
            return np.concatenate([[0.0], radii, -radii]).reshape(-1, 1)
        if self.dim == 2:
            ang = TWO_PI * np.arange(n_dirs) / n_dirs
            ring = np.column_stack([np.cos(ang), np.sin(ang)])
            return np.vstack([np.zeros((1, 2))] + [r * ring for r in radii])
        eye = np.eye(self.dim)
        return np.vstack([np.zeros((1, self.dim))]
                         + [r * eye for r in radii] + [-r * eye for r in radii])

    def ball_samples(self, centers, radius: float, n_rings: int = 3,
                     n_dirs: int = 8) -> np.ndarray:
        """Sample points within ``radius`` of each center (centers included)."""
        c = self.as_points(centers)
        off = self.offsets(radius, n_rings, n_dirs)
        # offsets leaving the chart are projected back, which keeps boundary
        # points such as the point at infinity reachable
        pts = self.project((c[:, None, :] + off[None, :, :]).reshape(-1, self.dim))
        keep = self.membership(pts) & (self.metric(pts, np.repeat(c, len(off), axis=0))
                                        <= radius * (1 + 1e-12))
        pts = pts[keep]
        if self.kind != "finite":
            return pts
        return np.unique(np.round(pts), axis=0)

    def __str__(self):
        extra = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.kind}({extra})"


@dataclass(frozen=True)
class SampleCloud:
    """A finite surrogate for the state space with covering radius ``resolution``."""

    points: np.ndarray
    resolution: float

    def __post_init__(self):
        if len(self.points) == 0:
            raise ValueError("a sample cloud must be non-empty")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ClosedSet:
    """A closed subset represented by an eps-net.

    ``resolution`` is the covering radius of the net over the set it stands
    for; it is zero when the net *is* the set (finitely many points).
    """

    space: StateSpace
    net: np.ndarray
    label: str = ""
    resolution: float = 0.0
    _tree: cKDTree = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        net = self.space.as_points(self.net)
        if len(net) == 0:
            raise ValueError("a closed set needs a non-empty net")
        object.__setattr__(self, "net", net)
        object.__setattr__(self, "_tree", cKDTree(self.space.embed(net)))

    def __len__(self):
        return len(self.net)

    def distance(self, x) -> np.ndarray:
        pts = self.space.as_points(x)
        if len(self.net) <= 8 and self.space.kind != "finite":
            # a handful of points: direct metric beats a tree query
            out = self.space.metric(pts, np.broadcast_to(self.net[0], pts.shape))
            for p in self.net[1:]:
                out = np.minimum(out, self.space.metric(pts, np.broadcast_to(p, pts.shape)))
            return out
        chord, _ = self._tree.query(self.space.embed(pts))
        return self.space.metric_from_chord(chord)

    def nearest(self, x) -> np.ndarray:
        _, idx = self._tree.query(self.space.embed(self.space.as_points(x)))
        return self.net[idx]


def _axis_grid(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = int(math.ceil((hi - lo) / spacing - 1e-9)) + 1
    return np.linspace(lo, hi, max(n, 2))


def _check_budget(n: int, budget: int):
    if n > budget:
        raise BudgetExceededError(f"grid needs {n} points, budget is {budget}")


def grid_size(space: StateSpace, h: float) -> int:
    """Number of points :func:`make_grid` would produce (without building it)."""
    if h <= 0:
        raise ValueError("grid resolution must be positive")
    if space.kind == "finite":
        return space.param("n")
    if space.kind == "box":
        s = h * min(1.0, 2.0 / math.sqrt(space.dim))
        return int(np.prod([int(math.ceil((hi - lo) / s - 1e-9)) + 1
                            for lo, hi in space.param("bounds")]))
    if space.kind == "annulus":
        radii, s = _annulus_rings(space, h)
        return int(sum(_ring_count(r, radii, s) for r in radii))
    if space.kind == "compactified_halfline":
        return int(math.ceil(math.pi / h - 1e-9)) + 1
    return int(math.ceil(TWO_PI / h - 1e-9))


def _annulus_rings(space, h):
    # spacing s keeps the polar cell half-diagonal below h
    s = 1.25 * h
    r_in, r_out = space.param("r_in"), space.param("r_out")
    return _axis_grid(r_in, r_out, s), s


def _ring_count(r, radii, s):
    dr = radii[1] - radii[0] if len(radii) > 1 else 0.0
    return max(int(math.ceil(TWO_PI * (r + dr / 2.0) / s - 1e-9)), 3)


def make_grid(space: StateSpace, h: float, budget: int = DEFAULT_POINT_BUDGET) -> SampleCloud:
    """Grid covering the space with covering radius at most ``h``.

    Raises
    ------
    BudgetExceededError
        If the grid would have more than ``budget`` points.
    """
    n = grid_size(space, h)
    _check_budget(n, budget)
    kind = space.kind
    if kind == "finite":
        pts = np.arange(space.param("n"), dtype=float).reshape(-1, 1)
        return SampleCloud(pts, 0.0)
    if kind == "box":
        s = h * min(1.0, 2.0 / math.sqrt(space.dim))
        axes = [_axis_grid(lo, hi, s) for lo, hi in space.param("bounds")]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
    elif kind == "annulus":
        radii, s = _annulus_rings(space, h)
        rings = []
        for r in radii:
            m = _ring_count(r, radii, s)
            th = TWO_PI * np.arange(m) / m
            rings.append(np.column_stack([r * np.cos(th), r * np.sin(th)]))
        pts = np.vstack(rings)
    elif kind == "circle":
        pts = (TWO_PI * np.arange(n) / n).reshape(-1, 1)
    elif kind == "compactified_line":
        pts = (-math.pi + TWO_PI * np.arange(1, n + 1) / n).reshape(-1, 1)
        pts[-1, 0] = math.pi
    else:
        pts = np.linspace(0.0, math.pi, n).reshape(-1, 1)
    pts = pts[space.membership(pts)]
    return SampleCloud(pts, float(h))


def distance_to_set(space: StateSpace, M: ClosedSet, x) -> np.ndarray | float:
    """Distance from ``x`` (one point or many) to the net of ``M``."""
    d = M.distance(space.as_points(x))
    return float(d[0]) if is_single_point(space, x) else d


def is_single_point(space: StateSpace, x) -> bool:
    nd = np.ndim(x)
    return nd == 0 or (nd == 1 and (space.dim > 1 or np.shape(x) == (1,)))


def in_neighborhood(space: StateSpace, M: ClosedSet, eps: float, x):
    """Membership of ``x`` in the eps-neighbourhood ``[dist(., M) < eps]``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.asarray(distance_to_set(space, M, x)) < eps


def thin(space: StateSpace, points, eps: float) -> np.ndarray:
    """Greedy eps-net of ``points`` (first come, first kept)."""
    pts = space.as_points(points)
    if len(pts) == 0:
        return pts
    idx = kernels.greedy_net(np.ascontiguousarray(space.embed(pts)),
                             float(space.chord_from_metric(eps)))
    return pts[idx]


def hausdorff(space: StateSpace, a, b) -> float:
    """Hausdorff distance between two finite point sets."""
    a, b = space.as_points(a), space.as_points(b)
    ea, eb = space.embed(a), space.embed(b)
    d_ab, _ = cKDTree(eb).query(ea)
    d_ba, _ = cKDTree(ea).query(eb)
    return float(space.metric_from_chord(max(d_ab.max(), d_ba.max())))


def directed_distance(space: StateSpace, a, b) -> float:
    """``sup_{x in a} dist(x, b)``: how far ``a`` sticks out of ``b``."""
    a, b = space.as_points(a), space.as_points(b)
    d, _ = cKDTree(space.embed(b)).query(space.embed(a))
    return float(space.metric_from_chord(d.max()))


def whole_space(space: StateSpace, h: float) -> ClosedSet:
    cloud = make_grid(space, h)
    return ClosedSet(space, cloud.points, "whole", cloud.resolution)


def points_set(space: StateSpace, points, label: str = "") -> ClosedSet:
    return ClosedSet(space, space.as_points(points), label, 0.0)


def circle_set(space: StateSpace, radius: float = 1.0, spacing: float = 0.005,
               label: str = "circle") -> ClosedSet:
    """Net of the centered circle ``|z| = radius`` in the annulus chart."""
    m = int(math.ceil(TWO_PI * radius / spacing))
    th = TWO_PI * np.arange(m) / m
    net = np.column_stack([radius * np.cos(th), radius * np.sin(th)])
    return ClosedSet(space, net, label, 2.0 * radius * math.sin(math.pi / (2 * m)))
