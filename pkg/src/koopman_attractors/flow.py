"""Semiflows: closed-form flows, iterated maps and RK4-integrated ODEs.

All evaluators are vectorised over rows of chart coordinates.  ODE flows are
integrated in their own internal coordinates (``to_internal`` /
``from_internal``) with a fixed-step classical Runge-Kutta scheme.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .space import (DEFAULT_POINT_BUDGET, TWO_PI, ClosedSet, SampleCloud, StateSpace, circle_set,
                    is_single_point, make_grid, points_set, whole_space)


class FlowDomainError(RuntimeError):
    """An integrated orbit left the state space (a modelling bug, K is invariant)."""


class UnknownBuiltinError(KeyError):
    pass


@dataclass(frozen=True)
class Semiflow:
    """A continuous semiflow ``phi_t`` on ``space``.

    ``step`` maps ``(t, points)`` to ``phi_t(points)`` for closed-form flows,
    ``points`` to their image for iterated maps (``period`` is the time one
    application represents), and is the right-hand side ``(y) -> dy/dt`` in
    internal coordinates for ODE flows.
    """

    name: str
    space: StateSpace
    kind: str
    step: Callable
    description: str = ""
    params: tuple = ()
    dt_internal: float = 1e-3
    period: float = 1.0
    to_internal: Callable | None = None
    from_internal: Callable | None = None
    kernel: str | None = None
    escape_tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("closed_form", "iterated_map", "ode"):
            raise ValueError(f"unknown semiflow kind {self.kind!r}")

    @property
    def cache_id(self) -> str:
        extra = ",".join(f"{k}={v!r}" for k, v in self.params)
        tail = f";dt_internal={self.dt_internal!r}" if self.kind == "ode" else ""
        return f"{self.name}({extra}){tail}"

    def with_dt_internal(self, dt_internal: float) -> "Semiflow":
        if dt_internal <= 0:
            raise ValueError("dt_internal must be positive")
        return replace(self, dt_internal=float(dt_internal))

    # -- evaluation ----------------------------------------------------------
    def map_steps(self, t: float) -> int:
        k = t / self.period
        if abs(k - round(k)) > 1e-9:
            raise FlowDomainError(
                f"iterated map {self.name!r} is only defined at multiples of "
                f"{self.period}, got t={t}")
        return int(round(k))

    def _rk4_steps(self, t: float) -> tuple[int, float]:
        n = max(int(math.ceil(t / self.dt_internal - 1e-12)), 1)
        return n, t / n

    def advance_internal(self, y: np.ndarray, t: float) -> np.ndarray:
        """Integrate internal coordinates ``y`` (rows) over time ``t``."""
        if t == 0:
            return y.copy()
        n, h = self._rk4_steps(t)
        if self.kernel == "hilmy":
            u = np.ascontiguousarray(y[:, 0]).copy()
            th = np.ascontiguousarray(y[:, 1]).copy()
            kernels.hilmy_advance(u, th, h, n)
            return np.column_stack([u, th])
        f = self.step
        for _ in range(n):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return y

    def _check_domain(self, pts):
        if not np.all(self.space.membership(pts, tol=self.escape_tol)):
            raise FlowDomainError(f"orbit of {self.name!r} left {self.space}")

    def evaluate(self, t: float, x) -> np.ndarray:
        """``phi_t(x)`` for one point or an array of points."""
        if t < 0:
            raise ValueError("semiflows are only defined for t >= 0")
        single = is_single_point(self.space, x)
        pts = self.space.as_points(x)
        if self.kind == "closed_form":
            out = self.space.wrap(self.step(float(t), pts))
        elif self.kind == "iterated_map":
            out = pts
            for _ in range(self.map_steps(t)):
                out = self.step(out)
        else:
            out = self.from_internal(self.advance_internal(self.to_internal(pts), float(t)))
            self._check_domain(out)
        return out[0] if single else out

    def iter_states(self, x, dt: float, n_steps: int) -> Iterator[np.ndarray]:
        """Yield ``phi_{k dt}(x)`` for ``k = 0..n_steps`` by step reuse."""
        pts = self.space.as_points(x)
        if self.kind == "ode":
            y = self.to_internal(pts)
            yield pts.copy()
            for _ in range(n_steps):
                y = self.advance_internal(y, dt)
                out = self.from_internal(y)
                self._check_domain(out)
                yield out
            return
        if self.kind == "iterated_map":
            self.map_steps(dt)
        cur = pts.copy()
        yield cur
        for _ in range(n_steps):
            cur = self.evaluate(dt, cur)
            yield cur


@dataclass
class Trajectory:
    """A sampled orbit: ``states[k] = phi_{times[k]}(origin)``."""

    times: np.ndarray
    states: np.ndarray
    origin: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.origin is None:
            self.origin = self.states[0]


def evaluate(flow: Semiflow, t: float, x) -> np.ndarray:
    return flow.evaluate(t, x)


def time_grid(T: float, dt: float) -> np.ndarray:
    """``{0, dt, ..., T}`` with ``T`` rounded to a whole number of steps."""
    if dt <= 0 or T < dt - 1e-12:
        raise ValueError("need T >= dt > 0")
    n = int(round(T / dt))
    return dt * np.arange(n + 1)


def orbit(flow: Semiflow, x, dt: float, T: float, cache=None) -> Trajectory:
    """Sample the orbit of ``x`` (one point or a batch) on ``{0, dt, ..., T}``.

    For a batch the states array has shape ``(n_times, n_points, dim)``.
    """
    times = time_grid(T, dt)
    single = is_single_point(flow.space, x)
    pts = flow.space.as_points(x)

    def compute():
        return np.stack(list(flow.iter_states(pts, dt, len(times) - 1)))

    if cache is not None:
        states = cache.get_or_compute("orbit", flow, pts, dt, compute, extra=(float(T),))
    else:
        states = compute()
    if single:
        states = states[:, 0, :]
    return Trajectory(times, states, pts[0] if single else pts)


def semigroup_residual(flow: Semiflow, x, s: float, t: float) -> float:
    """``d(phi_{s+t}(x), phi_t(phi_s(x)))``."""
    if s < 0 or t < 0:
        raise ValueError("s and t must be non-negative")
    pts = flow.space.as_points(x)
    a = flow.evaluate(s + t, pts)
    b = flow.evaluate(t, flow.evaluate(s, pts))
    d = flow.space.metric(a, b)
    return float(d.max())


# ---------------------------------------------------------------------------
# built-in systems


def _translation_step(t, pts):
    alpha = pts[:, 0]
    out = 2.0 * np.arctan(np.tan(alpha / 2.0) + t)
    out = np.where(alpha >= math.pi, math.pi, out)
    return out.reshape(-1, 1)


def _decay_halfline_step(t, pts):
    alpha = pts[:, 0]
    out = 2.0 * np.arctan(math.exp(-t) * np.tan(alpha / 2.0))
    out = np.where(alpha >= math.pi, math.pi, out)
    return out.reshape(-1, 1)


def _decay_box_step(t, pts):
    return math.exp(-t) * pts


def _drain_step(t, pts):
    return np.maximum(pts - t, 0.0)


def _north_south_step(t, pts):
    theta = pts[:, 0]
    centered = np.mod(theta + math.pi, TWO_PI) - math.pi   # (-pi, pi]
    out = 2.0 * np.arctan(math.exp(-t) * np.tan(centered / 2.0))
    out = np.where(np.abs(centered) >= math.pi, math.pi, out)
    return np.mod(out, TWO_PI).reshape(-1, 1)


def _rotation(omega):
    def step(t, pts):
        return np.mod(pts + omega * t, TWO_PI)
    return step


def hilmy_rhs(y):
    """Hilmy vector field in ``(u, theta)`` with ``u = log r``.

    ``r' = -r log r g`` becomes ``u' = -u g`` with ``g = (1-r)^2 + sin^2 theta``.
    """
    u, th = y[:, 0], y[:, 1]
    g = np.expm1(u) ** 2 + np.sin(th) ** 2
    return np.column_stack([-u * g, g])


def _hilmy_to_internal(pts):
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return np.column_stack([0.5 * np.log(r2), np.arctan2(pts[:, 1], pts[:, 0])])


def _hilmy_from_internal(y):
    r = np.exp(y[:, 0])
    return np.column_stack([r * np.cos(y[:, 1]), r * np.sin(y[:, 1])])


def _make_translation(**kw):
    return Semiflow("translation", StateSpace.compactified_line(), "closed_form",
                    _translation_step, "phi_t(x) = x + t on R u {inf}")


def _make_decay(**kw):
    return Semiflow("decay", StateSpace.compactified_halfline(), "closed_form",
                    _decay_halfline_step, "phi_t(x) = exp(-t) x on [0, inf]")


def _make_decay_box(upper=10.0, **kw):
    return Semiflow("decay_box", StateSpace.box([(0.0, float(upper))]), "closed_form",
                    _decay_box_step, f"phi_t(x) = exp(-t) x on [0, {upper}]",
                    params=(("upper", float(upper)),))


def _make_drain(**kw):
    return Semiflow("drain", StateSpace.box([(0.0, 1.0)]), "closed_form", _drain_step,
                    "phi_t(x) = max(x - t, 0) on [0, 1]; absorbed into {0} by t = 1")


def _make_rotation(omega=1.0, **kw):
    return Semiflow("rotation", StateSpace.circle(), "closed_form", _rotation(float(omega)),
                    f"theta -> theta + {omega} t on the circle",
                    params=(("omega", float(omega)),))


def _make_north_south(**kw):
    return Semiflow("north_south", StateSpace.circle(), "closed_form", _north_south_step,
                    "gradient flow on the circle: theta = pi repels, theta = 0 attracts")


def _make_hilmy(dt_internal=1e-3, **kw):
    return Semiflow("hilmy", StateSpace.annulus(1.0, 2.0), "ode", hilmy_rhs,
                    "r' = -r log r ((1-r)^2 + sin^2 th), th' = (1-r)^2 + sin^2 th "
                    "on 1 <= |z| <= 2",
                    dt_internal=float(dt_internal), to_internal=_hilmy_to_internal,
                    from_internal=_hilmy_from_internal, kernel="hilmy")


BUILTINS = {
    "translation": _make_translation,
    "decay": _make_decay,
    "decay_box": _make_decay_box,
    "drain": _make_drain,
    "hilmy": _make_hilmy,
    "rotation": _make_rotation,
    "north_south": _make_north_south,
}


def builtin(name: str, **params) -> tuple[StateSpace, Semiflow]:
    """Look up a built-in system; returns ``(space, flow)``."""
    try:
        make = BUILTINS[name]
    except KeyError:
        raise UnknownBuiltinError(f"unknown builtin flow {name!r}; "
                                  f"known: {sorted(BUILTINS)}") from None
    flow = make(**params)
    return flow.space, flow


def _region(space: StateSpace, keep, resolution: float, label: str) -> ClosedSet:
    """Grid net of the closed region ``{x : keep(x)}`` (a union of chart intervals)."""
    cloud = make_grid(space, resolution)
    pts = cloud.points[keep(cloud.points)]
    return ClosedSet(space, pts, label, cloud.resolution)


def _centered(pts):
    return (pts[:, 0] + math.pi) % TWO_PI - math.pi


_POINT_SETS = {
    "translation": {"infinity": [[math.pi]]},
    "decay": {"zero": [[0.0]], "infinity": [[math.pi]], "zero_and_infinity": [[0.0], [math.pi]]},
    "decay_box": {"zero": [[0.0]]},
    "drain": {"zero": [[0.0]]},
    "rotation": {"point": [[0.0]]},
    "north_south": {"south": [[0.0]], "north": [[math.pi]], "poles": [[0.0], [math.pi]]},
    "hilmy": {"fixed_points": [[1.0, 0.0], [-1.0, 0.0]], "z1": [[1.0, 0.0]],
              "z2": [[-1.0, 0.0]]},
}

# forward-invariant regions: (predicate on chart points, coarsest net spacing)
_REGIONS = {
    "translation": {
        "tail_1": lambda p: p[:, 0] >= 2.0 * math.atan(1.0),
        "tail_5": lambda p: p[:, 0] >= 2.0 * math.atan(5.0),
    },
    "decay": {"segment_1": lambda p: p[:, 0] <= 2.0 * math.atan(1.0)},
    "decay_box": {
        "segment_1": lambda p: p[:, 0] <= 1.0,
        "segment_5": lambda p: p[:, 0] <= 5.0,
    },
    "drain": {
        "segment_half": lambda p: p[:, 0] <= 0.5,
        "segment_quarter": lambda p: p[:, 0] <= 0.25,
    },
    "north_south": {
        "arc_1": lambda p: np.abs(_centered(p)) <= 1.0,
        "arc_2": lambda p: np.abs(_centered(p)) <= 2.0,
    },
    "hilmy": {"annulus_1.5": lambda p: np.hypot(p[:, 0], p[:, 1]) <= 1.5},
}


def candidate_set(flow: Semiflow, name: str, resolution: float = 0.005) -> ClosedSet:
    """Named invariant candidate sets for the built-in systems.

    Region candidates in two dimensions use a net no finer than 0.02.
    """
    space = flow.space
    h = max(resolution, 0.02) if space.dim > 1 else resolution
    if name == "whole":
        return whole_space(space, h)
    if flow.name == "hilmy" and name == "unit_circle":
        return circle_set(space, 1.0, resolution, "unit_circle")
    if name in _POINT_SETS.get(flow.name, {}):
        return points_set(space, _POINT_SETS[flow.name][name], name)
    if name in _REGIONS.get(flow.name, {}):
        return _region(space, _REGIONS[flow.name][name], h, name)
    raise UnknownBuiltinError(f"no candidate set {name!r} for flow {flow.name!r}")


def candidate_names(flow: Semiflow) -> list[str]:
    names = list(_POINT_SETS.get(flow.name, {})) + list(_REGIONS.get(flow.name, {}))
    if flow.name == "hilmy":
        names.insert(0, "unit_circle")
    return names + ["whole"]


def distinguished_points(flow: Semiflow) -> np.ndarray:
    """Fixed points and ideal points of a built-in (empty for other flows)."""
    pts = [p for ps in _POINT_SETS.get(flow.name, {}).values() for p in ps]
    if not pts:
        return np.empty((0, flow.space.dim))
    return np.unique(np.asarray(pts, dtype=float), axis=0)


def flow_grid(flow: Semiflow, h: float, budget: int = DEFAULT_POINT_BUDGET) -> SampleCloud:
    """:func:`make_grid` plus the distinguished points of ``flow``.

    A uniform grid can step over a repelling fixed point (an odd number of
    points on the circle misses the antipode of 0), and pointwise checks
    then never see the one orbit that does not move.
    """
    cloud = make_grid(flow.space, h, budget)
    extra = distinguished_points(flow)
    if len(extra):
        on_grid = points_set(flow.space, cloud.points).distance(extra) <= 1e-12
        extra = extra[~on_grid]
    if len(extra) == 0:
        return cloud
    return SampleCloud(np.vstack([cloud.points, extra]), cloud.resolution)


def invariance_residual(flow: Semiflow, M: ClosedSet, times=(0.5, 1.0, 2.0, 5.0)) -> float:
    """``max_t max_{p in net} d(phi_t(p), M)`` over a few sample times."""
    worst = 0.0
    for t in times:
        if flow.kind == "iterated_map":
            t = max(round(t / flow.period), 1) * flow.period
        worst = max(worst, float(M.distance(flow.evaluate(t, M.net)).max()))
    return worst


def is_invariant(flow: Semiflow, M: ClosedSet, tol: float = 1e-6) -> bool:
    return invariance_residual(flow, M) <= M.resolution * (1 + 1e-6) + tol
