"""Stability checks for the Koopman semigroup restricted to the ideal of M.

With ``f = min(dist(., M), 1)`` every check reduces to statements about
``f(phi_t(x))`` on sampled times and states.  Verdicts are tri-state: a
finite horizon can refute or support a limit statement at a given scale, and
anything in between is reported as inconclusive.

Settling convention used by the pointwise checks: an orbit *settles* when
``f`` stays below ``eps`` on every sampled time in ``[t0, T_max]`` for some
``t0 <= settle * T_max``.  Requiring a tail of positive length guards against
orbits that merely happen to be close to ``M`` at the final time.
"""
from __future__ import annotations

import hashlib
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import parallel
from .flow import Semiflow, invariance_residual, time_grid
from .koopman import Observable, ideal_generator
from .report import plain
from .space import ClosedSet, SampleCloud, StateSpace, grid_size, make_grid

HOLDS, FAILS, INCONCLUSIVE = "holds", "fails", "inconclusive"
PROPERTIES = ("nilpotent", "strong", "weak", "almost_weak", "ae_pointwise")


class NotInvariantError(ValueError):
    """The candidate set is not invariant under the flow (at its resolution)."""


@dataclass
class StabilityVerdict:
    """Outcome of one check.

    ``witness`` is ``(point, time)``; ``curve`` is ``(t, values)`` ready for
    CSV export.  ``details`` holds check-specific scalars.
    """

    property: str
    status: str
    witness: tuple | None = None
    params: dict = field(default_factory=dict)
    curve: tuple | None = None
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    @property
    def fails(self) -> bool:
        return self.status == FAILS

    def to_dict(self) -> dict:
        out = {"property": self.property, "status": self.status,
               "params": plain(self.params), "details": plain(self.details)}
        if self.witness is not None:
            pt, t = self.witness
            out["witness"] = {"point": plain(np.asarray(pt).ravel()), "time": plain(t)}
        return out


def require_invariant(flow: Semiflow, M: ClosedSet, tol: float = 1e-9) -> float:
    res = invariance_residual(flow, M)
    if res > M.resolution * (1 + 1e-6) + tol:
        raise NotInvariantError(
            f"{M.label or 'M'} is not invariant under {flow.name}: residual {res:.3g} "
            f"exceeds resolution {M.resolution:.3g}")
    return res


def cloud_points(flow: Semiflow, cloud) -> tuple[np.ndarray, float]:
    if isinstance(cloud, SampleCloud):
        return cloud.points, cloud.resolution
    return flow.space.as_points(cloud), 0.0


def sampling_step(flow: Semiflow, dt: float | None, T: float) -> float:
    if dt is None:
        dt = flow.period if flow.kind == "iterated_map" else min(0.05, T / 200)
    if flow.kind == "iterated_map":
        flow.map_steps(dt)
    return float(dt)


# ---------------------------------------------------------------------------
# streaming statistics of f along orbits


@dataclass
class OrbitStats:
    """Per-point summaries of ``v_k = |f(phi_{k dt}(x))|`` on ``k = 0..n``.

    ``last_bad`` is the last index with ``v_k >= eps`` (``-1`` if none).
    ``integral`` is the trapezoid integral of ``v`` and ``half_integral`` the
    same over the first half of the grid; ``outside`` is the trapezoid
    integral of the indicator ``v_k >= eps``.
    """

    final: np.ndarray
    last_bad: np.ndarray
    integral: np.ndarray
    half_integral: np.ndarray
    outside: np.ndarray
    minimum: np.ndarray
    sup_curve: np.ndarray
    dt: float

    @property
    def horizon(self) -> float:
        return self.dt * (len(self.sup_curve) - 1)

    @property
    def cesaro(self) -> np.ndarray:
        return self.integral / self.horizon

    @property
    def density(self) -> np.ndarray:
        return 1.0 - self.outside / self.horizon

    def settle_times(self) -> np.ndarray:
        """``t0(x)``: start of the final run of samples below eps (inf if none)."""
        n = len(self.sup_curve) - 1
        return np.where(self.last_bad >= n, np.inf, (self.last_bad + 1) * self.dt)

    def arrays(self) -> dict:
        return {k: getattr(self, k) for k in ("final", "last_bad", "integral", "half_integral",
                                              "outside", "minimum", "sup_curve")}


_MEMO: OrderedDict = OrderedDict()
_MEMO_SIZE = 16
_CACHE = None


def set_cache(cache):
    """Persist orbit statistics in ``cache`` (a :class:`TrajectoryCache` or None)."""
    global _CACHE
    _CACHE = cache


def clear_memo():
    _MEMO.clear()


def _memo_key(flow, M, pts, dt, T, eps):
    h = hashlib.sha256()
    for part in (flow.cache_id, repr((float(dt), float(T), float(eps))), M.label):
        h.update(part.encode())
    h.update(np.ascontiguousarray(M.net, dtype=float).tobytes())
    h.update(np.ascontiguousarray(pts, dtype=float).tobytes())
    return h.hexdigest()


def orbit_stats(flow: Semiflow, M: ClosedSet, pts: np.ndarray, dt: float, T: float,
                eps: float) -> OrbitStats:
    """Stream the orbits of ``pts`` once and summarize ``f_M`` along them.

    Results are memoized in-process (and on disk when a cache is set), so
    checks sharing ``(flow, M, points, dt, T, eps)`` integrate only once.
    """
    key = _memo_key(flow, M, pts, dt, T, eps)
    if key in _MEMO:
        _MEMO.move_to_end(key)
        return _MEMO[key]
    f = ideal_generator(flow.space, M)
    n = len(time_grid(T, dt)) - 1
    half = n // 2

    def work(chunk):
        last_bad = np.full(len(chunk), -1, dtype=np.int64)
        integral = np.zeros(len(chunk))
        half_int = np.zeros(len(chunk))
        outside = np.zeros(len(chunk))
        minimum = np.full(len(chunk), np.inf)
        sup = np.empty(n + 1)
        prev = prev_bad = None
        for k, states in enumerate(flow.iter_states(chunk, dt, n)):
            v = np.abs(f(states))
            bad = v >= eps
            last_bad[bad] = k
            np.minimum(minimum, v, out=minimum)
            sup[k] = v.max()
            if prev is not None:
                integral += 0.5 * dt * (prev + v)
                outside += 0.5 * dt * (prev_bad + bad)
                if k == half:
                    half_int[:] = integral
            prev, prev_bad = v, bad.astype(float)
        return prev, last_bad, integral, half_int, outside, minimum, sup

    def compute():
        parts = parallel.map_chunks(work, pts)
        out = {name: np.concatenate([p[i] for p in parts]) for i, name in enumerate(
            ("final", "last_bad", "integral", "half_integral", "outside", "minimum"))}
        out["sup_curve"] = np.max(np.stack([p[6] for p in parts]), axis=0)
        return out

    if _CACHE is not None:
        arrays = _CACHE.get_or_compute("stats", flow, pts, dt, compute,
                                       extra=(key,))
    else:
        arrays = compute()
    stats = OrbitStats(dt=float(dt), **arrays)
    _MEMO[key] = stats
    if len(_MEMO) > _MEMO_SIZE:
        _MEMO.popitem(last=False)
    return stats


def inclusion_tolerance(M: ClosedSet, eps: float) -> float:
    """Smallest float above ``eps + resolution``: ``v < tol`` then means ``v <= eps + res``."""
    return float(np.nextafter(eps + M.resolution * (1 + 1e-9), math.inf))


def _params(**kw) -> dict:
    return {k: v for k, v in kw.items() if v is not None}


# ---------------------------------------------------------------------------
# checks


def _absorption_time(flow, M, pts, dt, T, tol):
    """First sampled time after which every orbit of ``pts`` stays within ``tol``."""
    st = orbit_stats(flow, M, pts, dt, T, tol)
    times = time_grid(T, dt)
    bad = np.flatnonzero(st.sup_curve >= tol)
    k0 = 0 if len(bad) == 0 else bad[-1] + 1
    return (float(times[k0]) if k0 < len(times) else None), st, times


def check_nilpotent(flow: Semiflow, M: ClosedSet, cloud, T_max: float, eps: float = 0.0,
                    dt: float | None = None, h0: float = 0.1, budget: int = 2 ** 14,
                    check_invariance: bool = True) -> StabilityVerdict:
    """Is ``S(t0) = 0`` for some ``t0 <= T_max``, i.e. ``phi_{t0}(cloud) ⊆ M``?

    A state counts as inside ``M`` when its distance to the net is at most
    ``eps`` plus the net resolution.  The default ``eps = 0`` asks for exact
    absorption, so exponential convergence never qualifies.

    A fixed cloud underestimates the absorption time when it is unbounded
    over the space (orbits from ever closer to a far-away fixed point), so a
    positive answer is re-examined on grids of halving spacing until the
    absorption time of consecutive grids stops growing (by more than one
    step and 10 %).  It fails once the time exceeds ``T_max`` and is
    inconclusive when the point budget runs out while it still grows.  The
    growth bound of the restricted semigroup is reported as ``-inf`` when
    the check holds and ``0`` otherwise (it takes no other values).
    """
    if check_invariance:
        require_invariant(flow, M)
    space = flow.space
    pts, res = cloud_points(flow, cloud)
    dt = sampling_step(flow, dt, T_max)
    tol = inclusion_tolerance(M, eps)
    t0, st, times = _absorption_time(flow, M, pts, dt, T_max, tol)
    params = _params(eps=eps, T_max=T_max, dt=dt, resolution=res)
    curve = (times, st.sup_curve)
    if t0 is None:
        i = int(np.argmax(st.final))
        return StabilityVerdict("nilpotent", FAILS, (pts[i], T_max), params, curve,
                                {"growth_bound": 0.0, "max_final_distance": float(st.final[i])})
    h = res if res > 0 else h0
    t_grid = None
    growing = False
    n_refine = 0
    while space.kind != "finite" and grid_size(space, h) <= budget:
        grid = make_grid(space, h, budget).points
        ref = t0 if t_grid is None else t_grid
        # orbits stay in the invariant set once inside, so a horizon of a few t0 suffices
        horizon = min(T_max, dt * math.ceil(max(4 * ref, ref + 10 * dt) / dt))
        t_new, st_g, _ = _absorption_time(flow, M, grid, dt, horizon, tol)
        if t_new is None:
            if horizon >= T_max:
                i = int(np.argmax(st_g.final))
                params.update(h_final=h)
                return StabilityVerdict("nilpotent", FAILS, (grid[i], T_max), params, curve,
                                        {"growth_bound": 0.0, "refinements": n_refine,
                                         "max_final_distance": float(st_g.final[i])})
            t_new = horizon
        t0 = max(t0, t_new)
        if t_grid is not None:
            n_refine += 1
            growing = t_new > t_grid + max(dt, 0.1 * t_grid)
            if not growing:
                break
        t_grid = t_new
        h /= 2
    if n_refine:
        params.update(h_final=h)
    details = {"t0": t0, "refinements": n_refine}
    if growing:
        # the budget ran out while finer grids still took longer to absorb
        details["resolution_limited"] = True
        return StabilityVerdict("nilpotent", INCONCLUSIVE, None, params, curve, details)
    details["growth_bound"] = -math.inf
    return StabilityVerdict("nilpotent", HOLDS, None, params, curve, details)


def _polish(flow: Semiflow, f: Observable, x0: np.ndarray, t: float, h: float) -> tuple:
    """Locally maximize ``f(phi_t(x))`` around ``x0`` within chart radius ``h``."""
    space = flow.space
    if space.kind == "finite" or h <= 0:
        return x0, float(f(flow.evaluate(t, x0[None, :]))[0])

    def value(p):
        p = space.wrap(np.asarray(p, dtype=float).reshape(1, -1))
        if not space.membership(p)[0]:
            return 0.0
        return float(f(flow.evaluate(t, p))[0])

    best = (x0, value(x0))
    if space.dim == 1:
        lo, hi = x0[0] - h, x0[0] + h
        r = minimize_scalar(lambda a: -value([a]), bounds=(lo, hi), method="bounded",
                            options={"xatol": h * 1e-6, "maxiter": 200})
        cand = space.wrap(np.array([[r.x]]))[0]
    else:
        simplex = np.vstack([x0] + [x0 + h * e for e in np.eye(space.dim)])
        r = minimize(lambda p: -value(p), x0, method="Nelder-Mead",
                     options={"initial_simplex": simplex, "xatol": h * 1e-4,
                              "fatol": 1e-10, "maxfev": 400})
        cand = space.wrap(r.x.reshape(1, -1))[0]
    v = value(cand)
    if v > best[1] and space.membership(cand[None, :])[0]:
        best = (cand, v)
    return best


def check_strong(flow: Semiflow, M: ClosedSet, eps: float, T_max: float,
                 dt: float | None = None, h0: float = 0.1, budget: int = 2 ** 14,
                 cloud=None, polish: bool = True,
                 check_invariance: bool = True) -> StabilityVerdict:
    """``||S(t) f_M||_inf -> 0`` estimated by an adversarially refined sup.

    The sup of ``f(phi_t(x))`` is taken over a grid whose spacing is halved
    every time the sup drops below ``2 eps`` (as long as the refined grid fits
    in ``budget``); any supplied ``cloud`` is always included.  At ``T_max``
    the worst point is locally polished.  ``holds`` needs the sup below eps on
    ``[t0, T_max]`` with ``t0 <= T_max / 2``; ``fails`` means the sup at
    ``T_max`` is still at least eps.  If the budget runs out while the last
    halving still raised the sup by more than 10 % (when it ran out, or at
    ``T_max``), the grid cannot resolve the worst states and a small sup is
    reported as inconclusive.
    """
    if check_invariance:
        require_invariant(flow, M)
    space = flow.space
    dt = sampling_step(flow, dt, T_max)
    times = time_grid(T_max, dt)
    f = ideal_generator(space, M)
    extra = cloud_points(flow, cloud)[0] if cloud is not None else np.empty((0, space.dim))

    h = h0
    while grid_size(space, h) > budget:
        h *= 2.0
    h_probe = 0.25 * eps
    if (grid_size(space, h_probe) <= budget
            and M.distance(make_grid(space, h_probe, budget).points).max() + h_probe < eps):
        # the eps-neighbourhood of M swallows the whole space: f_M < eps everywhere
        params = _params(eps=eps, T_max=T_max, dt=dt, h0=h0)
        return StabilityVerdict("strong", HOLDS, None, params,
                                (times, np.zeros(len(times))), {"t0": 0.0, "trivial": True})

    def build(h):
        return np.vstack([make_grid(space, h, budget).points, extra])

    pts = build(h)
    cur = _Cursor(flow, pts, 0.0)
    sup = np.empty(len(times))
    hs = np.empty(len(times))
    exhausted = limited = False
    for k, t in enumerate(times):
        if k > 0:
            cur.advance(dt)
        vals = np.abs(f(cur.states))
        while vals.max() < 2 * eps and not exhausted:
            nh = h / 2.0
            if space.kind == "finite" or grid_size(space, nh) > budget:
                exhausted = True
                if space.kind != "finite" and grid_size(space, 2 * h) < len(pts):
                    # still gaining from the last refinement: the sup is resolution-bound
                    coarse = _Cursor(flow, build(2 * h), float(t))
                    limited = bool(vals.max() > 1.1 * np.abs(f(coarse.states)).max() + 1e-12)
                break
            h = nh
            pts = build(h)
            cur = _Cursor(flow, pts, float(t))
            vals = np.abs(f(cur.states))
        sup[k] = vals.max()
        hs[k] = h
    if exhausted and not limited and space.kind != "finite" and vals.max() > 0:
        # worst states below the grid spacing show up as a sup that still
        # grows from the previous grid to the finest one
        coarse = _Cursor(flow, build(2 * h), float(times[-1]))
        limited = bool(vals.max() > 1.1 * np.abs(f(coarse.states)).max())
    i = int(np.argmax(vals))
    witness_pt, final = pts[i], float(vals[i])
    if polish and final < eps:
        p, v = _polish(flow, f, pts[i], float(times[-1]), h)
        if v > final:
            witness_pt, final = p, v
            sup[-1] = v
    params = _params(eps=eps, T_max=T_max, dt=dt, h0=h0, h_final=h, budget=budget,
                     n_points=len(pts))
    details = {"final_sup": final, "budget_exhausted": exhausted, "resolution_limited": limited,
               "h_curve_min": float(hs.min())}
    curve = (times, sup)
    below = sup < eps
    bad = np.flatnonzero(~below)
    k0 = 0 if len(bad) == 0 else bad[-1] + 1
    if k0 < len(times) and times[k0] <= 0.5 * T_max and not limited:
        details["t0"] = float(times[k0])
        return StabilityVerdict("strong", HOLDS, None, params, curve, details)
    if final >= eps:
        return StabilityVerdict("strong", FAILS, (witness_pt, T_max), params, curve, details)
    return StabilityVerdict("strong", INCONCLUSIVE, (witness_pt, T_max), params, curve, details)


class _Cursor:
    """Current states ``phi_t(pts)``, advanced in place (internal coordinates for ODEs)."""

    def __init__(self, flow: Semiflow, pts: np.ndarray, t: float):
        self.flow = flow
        if flow.kind == "ode":
            self.y = flow.advance_internal(flow.to_internal(pts), t)
            self.states = flow.from_internal(self.y)
        else:
            self.states = flow.evaluate(t, pts)

    def advance(self, dt: float):
        if self.flow.kind == "ode":
            self.y = self.flow.advance_internal(self.y, dt)
            self.states = self.flow.from_internal(self.y)
        else:
            self.states = self.flow.evaluate(dt, self.states)


def check_weak(flow: Semiflow, M: ClosedSet, cloud, eps: float, T_max: float,
               dt: float | None = None, settle: float = 0.5,
               check_invariance: bool = True) -> StabilityVerdict:
    """``(S(t) f_M)(x) -> 0`` for every cloud point ``x`` (Dirac probes).

    ``fails`` needs a witness still outside the eps-neighbourhood at
    ``T_max``; orbits inside at ``T_max`` that settled too late give
    ``inconclusive``.
    """
    if check_invariance:
        require_invariant(flow, M)
    pts, res = cloud_points(flow, cloud)
    dt = sampling_step(flow, dt, T_max)
    st = orbit_stats(flow, M, pts, dt, T_max, eps)
    t0 = st.settle_times()
    params = _params(eps=eps, T_max=T_max, dt=dt, resolution=res, settle=settle)
    curve = (time_grid(T_max, dt), st.sup_curve)
    details = {"max_t0": float(t0.max()), "n_points": len(pts),
               "n_settled": int(np.sum(t0 <= settle * T_max))}
    if np.all(t0 <= settle * T_max):
        return StabilityVerdict("weak", HOLDS, None, params, curve, details)
    i = int(np.argmax(st.final))
    if st.final[i] >= eps:
        details["witness_final_value"] = float(st.final[i])
        return StabilityVerdict("weak", FAILS, (pts[i], T_max), params, curve, details)
    j = int(np.argmax(t0))
    return StabilityVerdict("weak", INCONCLUSIVE, (pts[j], float(t0[j])), params, curve, details)


def check_almost_weak(flow: Semiflow, M: ClosedSet, cloud, eps: float, T: float,
                      dt: float | None = None, settle: float = 0.5,
                      eps_settle: float | None = None,
                      check_invariance: bool = True) -> StabilityVerdict:
    """Cesaro means ``(1/T) int_0^T |(S(t) f_M)(x)| dt < eps`` for every cloud point.

    A point whose mean is still above eps is only a refutation when its orbit
    has not settled (in the sense of :func:`check_weak` at scale
    ``eps_settle``, default ``eps``): a settled orbit has Cesaro means that
    keep decreasing towards a value below that scale, so the verdict is then
    ``inconclusive``.
    """
    if check_invariance:
        require_invariant(flow, M)
    pts, res = cloud_points(flow, cloud)
    dt = sampling_step(flow, dt, T)
    eps_settle = eps if eps_settle is None else eps_settle
    st = orbit_stats(flow, M, pts, dt, T, eps)
    n = len(st.sup_curve) - 1
    c_full = st.cesaro
    c_half = st.half_integral / ((n // 2) * dt) if n >= 2 else c_full
    i = int(np.argmax(c_full))
    params = _params(eps=eps, T=T, dt=dt, resolution=res)
    details = {"max_cesaro": float(c_full[i]), "max_cesaro_half": float(c_half[i])}
    curve = (np.array([0.5 * T, T]), np.array([c_half.max(), c_full.max()]))
    if c_full[i] < eps:
        return StabilityVerdict("almost_weak", HOLDS, None, params, curve, details)
    if eps_settle != eps:
        st = orbit_stats(flow, M, pts, dt, T, eps_settle)
    settled = st.settle_times() <= settle * T
    over = np.flatnonzero(c_full >= eps)
    unsettled = over[~settled[over]]
    details["n_over"] = int(len(over))
    if len(unsettled):
        j = unsettled[int(np.argmax(c_full[unsettled]))]
        return StabilityVerdict("almost_weak", FAILS, (pts[j], T), params, curve, details)
    return StabilityVerdict("almost_weak", INCONCLUSIVE, (pts[i], T), params, curve, details)


# ---------------------------------------------------------------------------
# reference measures


@dataclass(frozen=True)
class Sampler:
    """Draws i.i.d. states from a reference measure.

    ``draw(rng, n)`` returns an ``(n, dim)`` chart array.
    """

    name: str
    draw: Callable[[np.random.Generator, int], np.ndarray]
    params: tuple = ()

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self.draw(np.random.default_rng(seed), n)


def gaussian_sampler(space: StateSpace, sigma: float = 1.0, mean: float = 0.0) -> Sampler:
    """Gaussian law of the native coordinate, folded to ``[0, inf)`` on half-lines."""
    if not space.has_infinity and space.kind != "box":
        raise ValueError("gaussian sampler needs a line-like space")

    def draw(rng, n):
        x = mean + sigma * rng.standard_normal(n)
        if space.kind == "compactified_halfline":
            x = np.abs(x)
        if space.kind == "box":
            lo, hi = space.param("bounds")[0]
            x = np.clip(np.abs(x), lo, hi)
        return space.from_native(x)

    return Sampler("gaussian", draw, (("sigma", sigma), ("mean", mean)))


def uniform_sampler(space: StateSpace) -> Sampler:
    """Uniform law in the chart (area measure on the annulus)."""

    def draw(rng, n):
        k = space.kind
        if k == "annulus":
            a, b = space.param("r_in") ** 2, space.param("r_out") ** 2
            r = np.sqrt(rng.uniform(a, b, n))
            return space.from_polar(r, rng.uniform(0.0, 2 * math.pi, n))
        if k == "finite":
            return rng.integers(0, space.param("n"), n).astype(float).reshape(-1, 1)
        b = np.asarray(space.chart_bounds)
        pts = rng.uniform(b[:, 0], b[:, 1], size=(n, len(b)))
        return space.wrap(pts)

    return Sampler("uniform", draw)


def dirac_sampler(space: StateSpace, point) -> Sampler:
    p = space.as_points(point)[0]
    return Sampler("dirac", lambda rng, n: np.repeat(p[None, :], n, axis=0),
                   (("point", tuple(p)),))


def check_ae_pointwise(flow: Semiflow, M: ClosedSet, sampler: Sampler, n_samples: int,
                       eps: float, T_max: float, delta: float = 0.01, seed: int = 0,
                       dt: float | None = None, settle: float = 0.5,
                       check_invariance: bool = True) -> StabilityVerdict:
    """Fraction of sampled states whose orbits settle into ``[f_M < eps]`` is ``>= 1 - delta``."""
    if check_invariance:
        require_invariant(flow, M)
    pts = sampler.sample(n_samples, seed)
    dt = sampling_step(flow, dt, T_max)
    st = orbit_stats(flow, M, pts, dt, T_max, eps)
    settled = st.settle_times() <= settle * T_max
    frac = float(np.mean(settled))
    frac_final = float(np.mean(st.final < eps))
    params = _params(eps=eps, T_max=T_max, dt=dt, n_samples=n_samples, delta=delta,
                     seed=seed, sampler=sampler.name, settle=settle)
    details = {"fraction": frac, "fraction_below_at_T": frac_final}
    curve = (time_grid(T_max, dt), st.sup_curve)
    if frac >= 1 - delta:
        return StabilityVerdict("ae_pointwise", HOLDS, None, params, curve, details)
    unsettled = np.flatnonzero(~settled)
    i = unsettled[int(np.argmax(st.final[unsettled]))]
    if frac_final >= 1 - delta:
        return StabilityVerdict("ae_pointwise", INCONCLUSIVE, (pts[i], T_max), params,
                                curve, details)
    return StabilityVerdict("ae_pointwise", FAILS, (pts[i], T_max), params, curve, details)


def subsequence_weak_probe(flow: Semiflow, M: ClosedSet, x, T_max: float,
                           dt: float | None = None, floor: float = 0.01) -> list[float]:
    """Times ``t_1 < t_2 < ...`` with ``f_M(phi_{t_k}(x)) < 2^{-k}`` down to ``floor``.

    Returns an empty list when the orbit never gets within ``floor`` of ``M``
    along such a sequence.
    """
    dt = sampling_step(flow, dt, T_max)
    f = ideal_generator(flow.space, M)
    levels = [2.0 ** -k for k in range(0, 64) if 2.0 ** -k > floor] + [floor]
    n = len(time_grid(T_max, dt)) - 1
    found = []
    j = 0
    for k, s in enumerate(flow.iter_states(flow.space.as_points(x)[:1], dt, n)):
        if f(s)[0] < levels[j]:
            found.append(k * dt)
            j += 1
            if j == len(levels):
                return found
    return []
