"""Observables, the Koopman action and time averages along orbits."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .flow import Semiflow, time_grid
from .space import ClosedSet, StateSpace, is_single_point


@dataclass(frozen=True)
class Observable:
    """A bounded continuous function on the state space.

    ``func`` takes an ``(n, dim)`` array of chart points and returns ``n`` values.
    """

    func: Callable[[np.ndarray], np.ndarray]
    sup_bound: float
    label: str = ""

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(x), dtype=float)

    def abs(self) -> "Observable":
        return Observable(lambda x: np.abs(self.func(x)), self.sup_bound, f"|{self.label}|")


@dataclass(frozen=True)
class IdealObservable(Observable):
    """An observable vanishing on ``vanishing_set``."""

    vanishing_set: ClosedSet | None = None


def ideal_generator(space: StateSpace, M: ClosedSet, cap: float = 1.0) -> IdealObservable:
    """``f(x) = min(dist(x, M), cap)``."""

    def f(x):
        return np.minimum(M.distance(space.as_points(x)), cap)

    return IdealObservable(f, cap, f"dist(., {M.label or 'M'}) ^ {cap}", M)


def constant(value: float = 0.0) -> Observable:
    return Observable(lambda x: np.full(len(np.atleast_1d(x)), float(value)),
                      abs(float(value)), f"{value}")


def chart_cos(space: StateSpace) -> Observable:
    """``cos`` of the angular chart coordinate (circle-type spaces)."""
    return Observable(lambda x: np.cos(space.as_points(x)[:, 0]), 1.0, "cos")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite atomic measure ``sum_i w_i delta_{x_i}``."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("measure weights must be finite")
        if len(w) != len(self.atoms):
            raise ValueError("one weight per atom")
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @classmethod
    def dirac(cls, space: StateSpace, x) -> "DiscreteMeasure":
        return cls(space.as_points(x)[:1], np.ones(1))

    @classmethod
    def uniform(cls, space: StateSpace, points) -> "DiscreteMeasure":
        pts = space.as_points(points)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)))

    def normalized(self) -> "DiscreteMeasure":
        return DiscreteMeasure(self.atoms, self.weights / self.total_mass)


def koopman_apply(flow: Semiflow, t: float, f: Observable, x) -> np.ndarray | float:
    """``(T(t) f)(x) = f(phi_t(x))``."""
    single = is_single_point(flow.space, x)
    vals = f(flow.space.as_points(flow.evaluate(t, x)))
    return float(vals[0]) if single else vals


def sup_norm_on_cloud(flow: Semiflow, t: float, f: Observable, cloud) -> float:
    pts = getattr(cloud, "points", cloud)
    return float(np.max(np.abs(koopman_apply(flow, t, f, flow.space.as_points(pts)))))


def pairing(flow: Semiflow, t: float, f: Observable, mu: DiscreteMeasure) -> float:
    """``<T(t) f, mu>``."""
    return float(np.dot(mu.weights, koopman_apply(flow, t, f, mu.atoms)))


def trapezoid_average(values: np.ndarray, dt: float) -> float:
    """``(1/T) int_0^T`` of a uniformly sampled series (trapezoid rule)."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least two samples")
    T = dt * (len(values) - 1)
    return float(dt * (values.sum() - 0.5 * (values[0] + values[-1])) / T)


def running_trapezoid_average(values: np.ndarray, dt: float) -> np.ndarray:
    """Cesaro curve ``C(t_k)`` for ``k >= 1`` of a uniformly sampled series."""
    values = np.asarray(values, dtype=float)
    steps = 0.5 * dt * (values[1:] + values[:-1])
    return np.cumsum(steps) / (dt * np.arange(1, len(values)))


def pairing_series(flow: Semiflow, f: Observable, mu: DiscreteMeasure, T: float,
                   dt: float, cache=None) -> np.ndarray:
    """``<T(t_k) f, mu>`` on the grid ``t_k = k dt``, streamed over the orbit."""
    from .flow import orbit

    if cache is not None:
        states = orbit(flow, mu.atoms, dt, T, cache=cache).states
        return np.array([np.dot(mu.weights, f(s)) for s in states])
    n = len(time_grid(T, dt)) - 1
    return np.array([np.dot(mu.weights, f(s)) for s in flow.iter_states(mu.atoms, dt, n)])


def value_series(flow: Semiflow, f: Observable, points, T: float, dt: float,
                 cache=None) -> np.ndarray:
    """``f(phi_{t_k}(x))`` for every point, shape ``(n_times, n_points)``."""
    from .flow import orbit

    pts = flow.space.as_points(points)
    if cache is not None:
        states = orbit(flow, pts, dt, T, cache=cache).states
        return np.stack([f(s) for s in states])
    n = len(time_grid(T, dt)) - 1
    return np.stack([f(s) for s in flow.iter_states(pts, dt, n)])


def cesaro_abs(flow: Semiflow, f: Observable, mu: DiscreteMeasure, T: float,
               dt: float, cache=None) -> float:
    """``(1/T) int_0^T |<T(t) f, mu>| dt`` by the trapezoid rule."""
    return trapezoid_average(np.abs(pairing_series(flow, f, mu, T, dt, cache)), dt)


def cesaro_curve(flow: Semiflow, f: Observable, mu: DiscreteMeasure, T: float,
                 dt: float, cache=None) -> tuple[np.ndarray, np.ndarray]:
    """Running Cesaro averages ``(t_k, C(t_k))`` for ``k >= 1``."""
    vals = np.abs(pairing_series(flow, f, mu, T, dt, cache))
    return time_grid(T, dt)[1:], running_trapezoid_average(vals, dt)


def time_average(flow: Semiflow, f: Observable, x, T: float, dt: float,
                 cache=None) -> np.ndarray:
    """Trapezoid time average of ``f`` along the orbit of each point."""
    vals = value_series(flow, f, x, T, dt, cache)
    T_eff = dt * (len(vals) - 1)
    return dt * (vals.sum(axis=0) - 0.5 * (vals[0] + vals[-1])) / T_eff


def attraction_density(flow: Semiflow, x, M: ClosedSet, eps: float, T: float,
                       dt: float, cache=None) -> np.ndarray | float:
    """Fraction of grid times ``s in [0, T]`` with ``dist(phi_s(x), M) < eps``.

    Computed as the trapezoid time average of the indicator, so it is the
    quadrature of ``(1/T) lambda{s <= T : phi_s(x) in U}``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    single = is_single_point(flow.space, x)
    ind = Observable(lambda p: (M.distance(p) < eps).astype(float), 1.0, "1_U")
    out = time_average(flow, ind, x, T, dt, cache)
    return float(out[0]) if single else out


def density_curve(flow: Semiflow, x, M: ClosedSet, eps: float, T: float, dt: float,
                  cache=None) -> tuple[np.ndarray, np.ndarray]:
    """Running density ``(t_k, D(t_k))`` for a single initial point."""
    vals = value_series(flow, Observable(lambda p: (M.distance(p) < eps).astype(float),
                                         1.0), x, T, dt, cache)[:, 0]
    return time_grid(T, dt)[1:], running_trapezoid_average(vals, dt)


def restricted_norm(flow: Semiflow, t: float, M: ClosedSet, cloud, tol: float = 0.0) -> int:
    """``||S(t)||`` of the restricted semigroup, which is 0 or 1.

    It vanishes iff ``phi_t(K)`` lies in ``M``; inclusion is tested on the
    cloud with tolerance ``tol`` (a chart distance).
    """
    pts = getattr(cloud, "points", cloud)
    img = flow.evaluate(t, flow.space.as_points(pts))
    return int(np.max(M.distance(img)) > tol)


def write_curve_csv(path, t, values, header=("t", "value")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for a, b in zip(t, values):
            w.writerow([repr(float(a)), repr(float(b))])


def write_points_csv(path, points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(pts.shape[1])])
        for row in pts:
            w.writerow([repr(float(v)) for v in row])


def read_curve_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array(rows[1:], dtype=float).reshape(-1, 2)
    return data[:, 0], data[:, 1]
