"""Attractor properties of closed invariant sets and minimal attractors.

The attractor-side checks mostly delegate to :mod:`stability` (the
correspondence is exact: absorbing <-> nilpotent, attractive <-> weakly
stable, and so on) and add an independent second estimate where one exists,
e.g. omega-limit containment next to pointwise convergence.

Orbit tails are summarized by *tail measures*: the time-weighted empirical
measure of ``{phi_t(x) : burn_in <= t <= horizon}``, decimated so that a new
atom starts whenever the orbit has moved more than ``radius`` from the
current one.  Every tail sample lies within ``radius`` of its atom.
"""
from __future__ import annotations

import hashlib
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .flow import Semiflow, flow_grid, time_grid
from .space import (ClosedSet, SampleCloud, hausdorff,
                    make_grid, thin)
from .stability import (FAILS, HOLDS, INCONCLUSIVE, Sampler, StabilityVerdict,
                        check_ae_pointwise, check_almost_weak, check_nilpotent,
                        check_strong, check_weak, cloud_points, inclusion_tolerance,
                        orbit_stats, require_invariant, sampling_step, _params)

ATTRACTOR_PROPERTIES = ("absorbing", "pointwise_absorbing", "uniform", "attractive",
                        "milnor", "center", "lyapunov")


def _relabel(v: StabilityVerdict, name: str, **details) -> StabilityVerdict:
    v.property = name
    v.details.update(details)
    return v


def _combine(primary: str, secondary: bool | None) -> str:
    """Merge a tri-state verdict with a boolean second opinion."""
    if secondary is None or primary == INCONCLUSIVE:
        return primary
    if (primary == HOLDS) == secondary:
        return primary
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# tail measures and omega-limit sets


@dataclass(frozen=True)
class TailMeasure:
    """Decimated occupation measures of many orbit tails.

    Atoms are grouped by ``owner`` (index of the initial point) in
    increasing order; the weights of each owner sum to one.
    """

    owner: np.ndarray
    atoms: np.ndarray
    weights: np.ndarray
    n_orbits: int
    radius: float

    def groups(self):
        bounds = np.searchsorted(self.owner, np.arange(self.n_orbits + 1))
        for i in range(self.n_orbits):
            yield i, slice(bounds[i], bounds[i + 1])

    def masses(self) -> np.ndarray:
        return np.bincount(self.owner, weights=self.weights, minlength=self.n_orbits)


_TAIL_MEMO: OrderedDict = OrderedDict()
_TAIL_CACHE = None


def set_cache(cache):
    global _TAIL_CACHE
    _TAIL_CACHE = cache


def clear_memo():
    _TAIL_MEMO.clear()


def _tail_generic(flow: Semiflow, pts, dt, n_burn, n_tail, radius):
    space = flow.space
    n = len(pts)
    atoms, owner, closed_id, closed_w = [], [], [], []
    cur = cur_id = cur_w = None
    count = 0
    for k, states in enumerate(flow.iter_states(pts, dt, n_burn + n_tail)):
        j = k - n_burn
        if j < 0:
            continue
        if j == 0:
            cur, cur_id, cur_w = states.copy(), np.arange(n), np.zeros(n)
            atoms.append(states.copy())
            owner.append(np.arange(n))
            count = n
        else:
            moved = np.flatnonzero(space.metric(states, cur) > radius)
            if len(moved):
                closed_id.append(cur_id[moved].copy())
                closed_w.append(cur_w[moved].copy())
                atoms.append(states[moved])
                owner.append(moved)
                cur[moved] = states[moved]
                cur_id[moved] = count + np.arange(len(moved))
                cur_w[moved] = 0.0
                count += len(moved)
        cur_w += dt if 0 < j < n_tail else 0.5 * dt
    weights = np.zeros(count)
    weights[np.concatenate(closed_id + [cur_id])] = np.concatenate(closed_w + [cur_w])
    owner = np.concatenate(owner)
    order = np.argsort(owner, kind="stable")
    return owner[order], np.vstack(atoms)[order], weights[order]


def tail_measure(flow: Semiflow, points, dt: float, burn_in: float, horizon: float,
                 radius: float) -> TailMeasure:
    """Occupation measures of the orbit tails ``[burn_in, horizon]`` of ``points``."""
    if not 0 <= burn_in < horizon:
        raise ValueError("need 0 <= burn_in < horizon")
    pts = flow.space.as_points(getattr(points, "points", points))
    dt = sampling_step(flow, dt, horizon)
    n_burn = int(round(burn_in / dt))
    n_tail = int(round(horizon / dt)) - n_burn
    h = hashlib.sha256()
    h.update(flow.cache_id.encode())
    h.update(repr((float(dt), n_burn, n_tail, float(radius))).encode())
    h.update(np.ascontiguousarray(pts, dtype=float).tobytes())
    key = h.hexdigest()
    if key in _TAIL_MEMO:
        _TAIL_MEMO.move_to_end(key)
        return _TAIL_MEMO[key]

    def compute():
        if flow.kernel == "hilmy":
            substeps, hstep = flow._rk4_steps(dt)
            y = flow.to_internal(pts)
            u = np.ascontiguousarray(y[:, 0]).copy()
            th = np.ascontiguousarray(y[:, 1]).copy()
            owner, atoms, w = kernels.hilmy_tail_atoms(u, th, hstep, substeps, n_burn,
                                                       n_tail, float(radius))
        else:
            owner, atoms, w = _tail_generic(flow, pts, dt, n_burn, n_tail, radius)
        return {"owner": np.asarray(owner, dtype=np.int64), "atoms": np.asarray(atoms),
                "weights": np.asarray(w) / (n_tail * dt)}

    if _TAIL_CACHE is not None:
        arrays = _TAIL_CACHE.get_or_compute("tail", flow, pts, dt, compute,
                                            extra=(n_burn, n_tail, float(radius)))
    else:
        arrays = compute()
    tm = TailMeasure(arrays["owner"], arrays["atoms"], arrays["weights"], len(pts),
                     float(radius))
    _TAIL_MEMO[key] = tm
    if len(_TAIL_MEMO) > 8:
        _TAIL_MEMO.popitem(last=False)
    return tm


@dataclass(frozen=True)
class OmegaSet:
    """Estimate of the omega-limit set of ``origin`` from an orbit tail."""

    net: ClosedSet
    origin: np.ndarray
    burn_in: float
    horizon: float


def omega_limit(flow: Semiflow, x, dt: float, burn_in: float, horizon: float,
                net_eps: float, radius: float | None = None) -> OmegaSet:
    """Greedy ``net_eps``-net of the tail ``{phi_t(x) : burn_in <= t <= horizon}``."""
    radius = 0.5 * net_eps if radius is None else radius
    p = flow.space.as_points(x)[:1]
    tm = tail_measure(flow, p, dt, burn_in, horizon, radius)
    net = thin(flow.space, tm.atoms, net_eps)
    return OmegaSet(ClosedSet(flow.space, net, "omega", net_eps + radius), p[0],
                    burn_in, horizon)


def _union_net(flow, tm: TailMeasure, eps: float, label: str, mask=None) -> ClosedSet:
    atoms = tm.atoms if mask is None else tm.atoms[mask]
    net = thin(flow.space, atoms, eps)
    return ClosedSet(flow.space, net, label, eps + tm.radius)


def _omega_contained(flow, pts, M, eps, dt, burn_in, horizon) -> np.ndarray:
    """Per point: does the sampled tail stay within eps of M?"""
    tm = tail_measure(flow, pts, dt, burn_in, horizon, 0.25 * eps)
    d = M.distance(tm.atoms)
    worst = np.full(tm.n_orbits, -np.inf)
    np.maximum.at(worst, tm.owner, d)
    return worst < eps


# ---------------------------------------------------------------------------
# attractor checks


def is_absorbing(flow: Semiflow, M: ClosedSet, cloud, T_max: float, eps: float = 0.0,
                 dt: float | None = None, **kw) -> StabilityVerdict:
    """``phi_{t0}(K) ⊆ M`` for some ``t0 <= T_max`` (nilpotent restricted semigroup)."""
    return _relabel(check_nilpotent(flow, M, cloud, T_max, eps, dt, **kw), "absorbing")


def is_pointwise_absorbing(flow: Semiflow, M: ClosedSet, cloud, T_max: float,
                           eps: float = 0.0, dt: float | None = None, settle: float = 0.5,
                           check_invariance: bool = True) -> StabilityVerdict:
    """Every cloud orbit enters ``M`` (within ``eps`` + resolution) and stays there."""
    if check_invariance:
        require_invariant(flow, M)
    pts, res = cloud_points(flow, cloud)
    dt = sampling_step(flow, dt, T_max)
    tol = inclusion_tolerance(M, eps)
    st = orbit_stats(flow, M, pts, dt, T_max, tol)
    t0 = st.settle_times()
    params = _params(eps=eps, T_max=T_max, dt=dt, resolution=res, settle=settle)
    curve = (time_grid(T_max, dt), st.sup_curve)
    details = {"max_t0": float(t0.max())}
    if np.all(t0 <= settle * T_max):
        return StabilityVerdict("pointwise_absorbing", HOLDS, None, params, curve, details)
    i = int(np.argmax(st.final))
    if st.final[i] >= tol:
        return StabilityVerdict("pointwise_absorbing", FAILS, (pts[i], T_max), params, curve,
                                details)
    j = int(np.argmax(t0))
    return StabilityVerdict("pointwise_absorbing", INCONCLUSIVE, (pts[j], float(t0[j])),
                            params, curve, details)


def interior_cover_test(flow: Semiflow, M: ClosedSet, cloud, n_max: int, eps: float,
                        dt: float | None = None,
                        check_invariance: bool = True) -> StabilityVerdict:
    """Absorption through the cover ``K_n = [dist(phi_n(.), M) < eps]``.

    ``M`` is absorbing iff it is pointwise absorbing and some ``K_n`` contains
    a neighbourhood of ``M``; the neighbourhood is represented by the cloud
    points within ``eps`` of ``M``.  The verdict is that of the right-hand
    side; ``details`` also carries :func:`is_absorbing` at the same scale and
    whether the two agree.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if check_invariance:
        require_invariant(flow, M)
    pts, res = cloud_points(flow, cloud)
    period = flow.period if flow.kind == "iterated_map" else 1.0
    near = M.distance(pts) < eps
    n_cover = None
    cur = pts
    for n in range(n_max + 1):
        if n > 0:
            cur = flow.evaluate(period, cur)
        in_kn = M.distance(cur) < eps
        if np.all(in_kn[near]):
            n_cover = n
            break
    T_max = n_max * period
    pa = is_pointwise_absorbing(flow, M, cloud, T_max, eps, dt, settle=1.0,
                                check_invariance=False)
    ab = is_absorbing(flow, M, cloud, T_max, eps, dt, check_invariance=False)
    if pa.status == HOLDS and n_cover is not None:
        status = HOLDS
    elif pa.status == FAILS:
        status = FAILS
    elif pa.status == HOLDS:
        status = FAILS
    else:
        status = INCONCLUSIVE
    details = {"n_cover": n_cover if n_cover is not None else -1,
               "pointwise_absorbing": pa.status, "absorbing": ab.status,
               "consistent": (status == ab.status) or INCONCLUSIVE in (status, ab.status)}
    witness = pa.witness if status == FAILS and pa.witness is not None else (
        (pts[int(np.argmax(near))], T_max) if status == FAILS else None)
    return StabilityVerdict("interior_cover", status, witness,
                            _params(eps=eps, n_max=n_max, resolution=res), None, details)


def is_attractive(flow: Semiflow, M: ClosedSet, cloud, eps: float, T_max: float,
                  dt: float | None = None, settle: float = 0.5, omega_check: bool = True,
                  check_invariance: bool = True) -> StabilityVerdict:
    """``omega(x) ⊆ M`` for every x, i.e. each orbit converges to ``M``.

    Primary estimate: weak stability with Dirac probes.  Second opinion:
    the omega-limit tail ``[settle * T_max, T_max]`` of every cloud point stays
    inside the eps-neighbourhood.  Disagreement makes the verdict inconclusive.
    """
    v = check_weak(flow, M, cloud, eps, T_max, dt, settle, check_invariance=check_invariance)
    contained = None
    if omega_check:
        pts, _ = cloud_points(flow, cloud)
        ok = _omega_contained(flow, pts, M, eps, v.params["dt"], settle * T_max, T_max)
        contained = bool(np.all(ok))
        v.details["omega_contained_fraction"] = float(np.mean(ok))
    status = _combine(v.status, contained)
    if status != v.status:
        v.details["strategies_disagree"] = True
    v.status = status
    return _relabel(v, "attractive")


def lyapunov_probes(flow: Semiflow, M: ClosedSet, delta: float, probe_h: float | None = None,
                    n_rings: int = 3, n_dirs: int = 8) -> np.ndarray:
    """States with ``dist(x, M) < delta``: rings around a net of M plus grid points."""
    space = flow.space
    centers = M.net if len(M.net) <= 64 else thin(space, M.net, max(0.5 * delta, M.resolution))
    pts = space.ball_samples(centers, delta * (1 - 1e-9), n_rings, n_dirs)
    if probe_h is not None:
        grid = make_grid(space, probe_h).points
        pts = np.vstack([pts, grid[M.distance(grid) < delta]])
    return pts[M.distance(pts) < delta]


def is_lyapunov_stable(flow: Semiflow, M: ClosedSet, eps_list, delta_grid=None,
                       T_max: float = 100.0, dt: float | None = None,
                       probe_h: float | None = None, n_rings: int = 3, n_dirs: int = 8,
                       check_invariance: bool = True) -> StabilityVerdict:
    """Every eps-neighbourhood contains a delta-neighbourhood that never leaves it.

    For each eps the delta grid (default ``eps * 2**-k`` for ``k = 0..6``) is
    scanned from the top; the first delta whose probes stay within eps up to
    ``T_max`` certifies that eps.  The largest distance reached by those
    probes is the extent of the forward closure ``W`` of the delta-ball.
    ``T_max`` has to exceed the escape time of the smallest-delta probes,
    otherwise slow escapes go unseen.
    """
    if check_invariance:
        require_invariant(flow, M)
    dt = sampling_step(flow, dt, T_max)
    n = len(time_grid(T_max, dt)) - 1
    found, extents = {}, {}
    witness = None
    for eps in eps_list:
        grid = delta_grid if delta_grid is not None else [eps * 2.0 ** -k for k in range(7)]
        found[eps] = None
        for delta in sorted((d for d in grid if d <= eps), reverse=True):
            probes = lyapunov_probes(flow, M, delta, probe_h, n_rings, n_dirs)
            if len(probes) == 0:
                continue
            worst = np.zeros(len(probes))
            first_exit = np.full(len(probes), np.inf)
            for k, s in enumerate(flow.iter_states(probes, dt, n)):
                d = M.distance(s)
                np.maximum(worst, d, out=worst)
                hit = (d >= eps) & np.isinf(first_exit)
                first_exit[hit] = k * dt
            if worst.max() < eps:
                found[eps] = delta
                extents[eps] = float(worst.max())
                break
            i = int(np.argmin(first_exit))
            witness = (probes[i], float(first_exit[i]))
    params = _params(eps_list=list(eps_list), T_max=T_max, dt=dt)
    details = {"delta": {repr(e): (d if d is not None else -1.0) for e, d in found.items()},
               "forward_closure_extent": {repr(e): v for e, v in extents.items()}}
    if all(d is not None for d in found.values()):
        return StabilityVerdict("lyapunov", HOLDS, None, params, None, details)
    return StabilityVerdict("lyapunov", FAILS, witness, params, None, details)


def is_uniformly_attractive(flow: Semiflow, M: ClosedSet, eps: float, T_max: float,
                            cloud=None, dt: float | None = None, h0: float = 0.1,
                            budget: int = 2 ** 14, settle: float = 0.5,
                            lyapunov: dict | None = None, strong: StabilityVerdict | None = None,
                            check_invariance: bool = True) -> StabilityVerdict:
    """Strong stability (adversarial) versus attractive + Lyapunov stable.

    Both strategies estimate the same property; the verdict is theirs when
    they agree and inconclusive otherwise (``details['agree']``).  A strong
    verdict computed earlier with the same parameters can be passed in.
    """
    if cloud is None:
        cloud = flow_grid(flow, h0)
    if strong is None:
        strong = check_strong(flow, M, eps, T_max, dt, h0, budget, cloud=cloud,
                              check_invariance=check_invariance)
    elif check_invariance:
        require_invariant(flow, M)
    att = is_attractive(flow, M, cloud, eps, T_max, dt, settle, omega_check=False,
                        check_invariance=False)
    lkw = {"eps_list": [eps], "T_max": T_max, "dt": dt}
    lkw.update({k: v for k, v in (lyapunov or {}).items() if v is not None})
    lyap = is_lyapunov_stable(flow, M, check_invariance=False, **lkw)
    if att.status == HOLDS and lyap.status == HOLDS:
        conj = HOLDS
    elif FAILS in (att.status, lyap.status):
        conj = FAILS
    else:
        conj = INCONCLUSIVE
    agree = strong.status == conj
    status = conj if agree else INCONCLUSIVE
    details = {"strong": strong.status, "conjunction": conj, "attractive": att.status,
               "lyapunov": lyap.status, "agree": agree,
               "budget_exhausted": bool(strong.details.get("budget_exhausted", False))}
    witness = strong.witness or att.witness or lyap.witness
    return StabilityVerdict("uniform", status, witness if status != HOLDS else None,
                            strong.params, strong.curve, details)


def is_milnor(flow: Semiflow, M: ClosedSet, sampler: Sampler, n_samples: int, eps: float,
              T_max: float, delta: float = 0.01, seed: int = 0, dt: float | None = None,
              settle: float = 0.5, omega_check: bool = True,
              check_invariance: bool = True) -> StabilityVerdict:
    """``mu``-almost every orbit converges to ``M`` (a likely limit set)."""
    v = check_ae_pointwise(flow, M, sampler, n_samples, eps, T_max, delta, seed, dt, settle,
                           check_invariance=check_invariance)
    contained = None
    if omega_check:
        pts = sampler.sample(n_samples, seed)
        ok = _omega_contained(flow, pts, M, eps, v.params["dt"], settle * T_max, T_max)
        frac = float(np.mean(ok))
        v.details["omega_contained_fraction"] = frac
        contained = frac >= 1 - delta
    status = _combine(v.status, contained)
    if status != v.status:
        v.details["strategies_disagree"] = True
    v.status = status
    return _relabel(v, "milnor")


def is_center_of_attraction(flow: Semiflow, M: ClosedSet, cloud, eps: float, T: float,
                            dt: float | None = None, tol_density: float = 0.1,
                            settle: float = 0.5,
                            check_invariance: bool = True) -> StabilityVerdict:
    """Every orbit spends time-density ``>= 1 - tol_density`` within eps of ``M``.

    A point below the density threshold refutes the property only if its
    orbit has not settled near ``M``; otherwise its density is still rising
    and the verdict is inconclusive.  The almost weak stability verdict at
    the same scale is recorded as a cross-check.
    """
    if check_invariance:
        require_invariant(flow, M)
    pts, res = cloud_points(flow, cloud)
    dt = sampling_step(flow, dt, T)
    st = orbit_stats(flow, M, pts, dt, T, eps)
    dens = st.density
    aw = check_almost_weak(flow, M, cloud, eps, T, dt, settle, check_invariance=False)
    params = _params(eps=eps, T=T, dt=dt, tol_density=tol_density, resolution=res)
    details = {"min_density": float(dens.min()), "almost_weak": aw.status,
               "max_cesaro": aw.details["max_cesaro"]}
    curve = (time_grid(T, dt), st.sup_curve)
    low = np.flatnonzero(dens < 1 - tol_density)
    if len(low) == 0:
        return StabilityVerdict("center", HOLDS, None, params, curve, details)
    settled = st.settle_times() <= settle * T
    hard = low[~settled[low]]
    details["n_below"] = int(len(low))
    if len(hard):
        i = hard[int(np.argmin(dens[hard]))]
        return StabilityVerdict("center", FAILS, (pts[i], T), params, curve, details)
    i = low[int(np.argmin(dens[low]))]
    return StabilityVerdict("center", INCONCLUSIVE, (pts[i], T), params, curve, details)


# ---------------------------------------------------------------------------
# minimal attractors


def minimal_uniform_attractor(flow: Semiflow, cloud, dt_img: float, T_max: float,
                              eps: float, n_rings: int = 3, n_dirs: int = 8) -> ClosedSet:
    """Outer estimate of ``∩_t phi_t(K)`` by iterated images of an eps-net.

    Each step maps samples of the eps-balls around the current net by
    ``phi_{dt_img}`` and re-thins; it stops once the Hausdorff change drops
    below ``eps / 2`` or after ``T_max``.  Images are nested, so image points
    farther than eps from the previous net are dropped; this keeps the
    fattening from creeping outward where the contraction is slow.
    """
    space = flow.space
    pts, _ = cloud_points(flow, cloud)
    net = thin(space, pts, eps)
    t = 0.0
    while t < T_max - 1e-12:
        sample = space.ball_samples(net, eps, n_rings, n_dirs)
        img = flow.evaluate(dt_img, sample)
        prev = ClosedSet(space, net)
        img = img[prev.distance(img) < eps]
        new = thin(space, img, eps)
        t += dt_img
        change = hausdorff(space, net, new)
        net = new
        if change < 0.5 * eps:
            break
    return ClosedSet(space, net, "minimal_uniform_attractor", eps)


def minimal_attractor(flow: Semiflow, cloud, dt: float, burn_in: float, horizon: float,
                      eps: float, radius: float | None = None) -> ClosedSet:
    """Closure of the union of omega-limit sets over the cloud, as an eps-net."""
    pts, _ = cloud_points(flow, cloud)
    radius = 0.5 * eps if radius is None else radius
    tm = tail_measure(flow, pts, dt, burn_in, horizon, radius)
    return _union_net(flow, tm, eps, "minimal_attractor")


def minimal_milnor(flow: Semiflow, sampler: Sampler, n_samples: int, dt: float,
                   burn_in: float, horizon: float, eps: float, seed: int = 0,
                   radius: float | None = None) -> ClosedSet:
    """Union of omega-limit sets of states drawn from the reference measure."""
    pts = sampler.sample(n_samples, seed)
    radius = 0.5 * eps if radius is None else radius
    tm = tail_measure(flow, pts, dt, burn_in, horizon, radius)
    return _union_net(flow, tm, eps, "minimal_milnor")


def support_mask(flow: Semiflow, tm: TailMeasure, eps: float, mass_floor: float) -> np.ndarray:
    """Atoms whose eps-ball carries at least ``mass_floor`` of their orbit's tail mass."""
    space = flow.space
    keep = np.zeros(len(tm.atoms), dtype=bool)
    chord = float(space.chord_from_metric(eps))
    for _, sl in tm.groups():
        a = tm.atoms[sl]
        if len(a) == 0:
            continue
        w = tm.weights[sl]
        if len(a) == 1:
            keep[sl] = w >= mass_floor
            continue
        tree = cKDTree(space.embed(a))
        pairs = tree.query_pairs(chord, output_type="ndarray")
        mass = w.copy()
        np.add.at(mass, pairs[:, 0], w[pairs[:, 1]])
        np.add.at(mass, pairs[:, 1], w[pairs[:, 0]])
        keep[sl] = mass >= mass_floor
    return keep


def minimal_center(flow: Semiflow, cloud, dt: float, burn_in: float, horizon: float,
                   eps: float, mass_floor: float = 0.01,
                   radius: float | None = None) -> ClosedSet:
    """Union of supports of the tail occupation measures, as an eps-net.

    An atom belongs to the support estimate when the eps-ball around it
    carries at least ``mass_floor`` of the orbit's tail mass, which discards
    the transient passages that a raw visited set would keep.
    """
    pts, _ = cloud_points(flow, cloud)
    radius = 0.5 * eps if radius is None else radius
    tm = tail_measure(flow, pts, dt, burn_in, horizon, radius)
    mask = support_mask(flow, tm, eps, mass_floor)
    return _union_net(flow, tm, eps, "minimal_center", mask)


# ---------------------------------------------------------------------------
# full classification


@dataclass
class CheckScales:
    """Scale parameters shared by all checks of one classification."""

    eps: float = 0.1
    T: float = 100.0
    dt: float | None = None
    h: float = 0.1
    settle: float = 0.5
    tol_density: float = 0.1
    absorb_eps: float = 0.0
    budget: int = 2 ** 14
    n_samples: int = 500
    delta: float = 0.01
    seed: int = 0
    T_lyapunov: float | None = None
    lyapunov_probe_h: float | None = None
    n_cover: int = 10

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class AttractorReport:
    """All stability and attractor verdicts for one candidate set."""

    flow: str
    label: str
    attractor: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def status(self, prop: str) -> str:
        v = self.attractor.get(prop) or self.stability.get(prop)
        return v.status if v is not None else "skipped"

    def to_dict(self) -> dict:
        return {"flow": self.flow, "set": self.label, "params": self.params,
                "attractor": {k: v.to_dict() for k, v in self.attractor.items()},
                "stability": {k: v.to_dict() for k, v in self.stability.items()}}


def classify(flow: Semiflow, M: ClosedSet, scales: CheckScales | None = None,
             sampler: Sampler | None = None, cloud=None,
             properties=None) -> AttractorReport:
    """Run the stability ladder and the attractor checks on ``M``.

    The cloud defaults to a grid of spacing ``scales.h``; sampled states of
    ``sampler`` are added to it so that the pointwise checks and the
    sampled ones see the same orbits.
    """
    sc = scales or CheckScales()
    props = set(properties or ("nilpotent", "strong", "weak", "almost_weak", "ae_pointwise",
                               *ATTRACTOR_PROPERTIES))
    require_invariant(flow, M)
    space = flow.space
    base = flow_grid(flow, sc.h, sc.budget) if cloud is None else cloud
    pts, res = cloud_points(flow, base)
    if sampler is not None:
        pts = np.vstack([pts, sampler.sample(sc.n_samples, sc.seed)])
    cl = SampleCloud(pts, res)
    dt = sampling_step(flow, sc.dt, sc.T)
    T = sc.T
    kw = {"check_invariance": False}
    rep = AttractorReport(flow.cache_id, M.label, params=sc.as_dict())
    if "nilpotent" in props or "absorbing" in props:
        v = check_nilpotent(flow, M, cl, T, sc.absorb_eps, dt, sc.h, sc.budget, **kw)
        rep.stability["nilpotent"] = v
        rep.attractor["absorbing"] = _relabel(
            StabilityVerdict(**{**v.__dict__, "details": dict(v.details)}), "absorbing")
    if "pointwise_absorbing" in props:
        rep.attractor["pointwise_absorbing"] = is_pointwise_absorbing(
            flow, M, cl, T, sc.absorb_eps, dt, sc.settle, **kw)
    lyap_kw = {"T_max": sc.T_lyapunov or T, "probe_h": sc.lyapunov_probe_h}
    if "uniform" in props or "strong" in props:
        strong = check_strong(flow, M, sc.eps, T, dt, sc.h, sc.budget, cloud=cl, **kw)
        rep.stability["strong"] = strong
        rep.attractor["uniform"] = is_uniformly_attractive(
            flow, M, sc.eps, T, cl, dt, sc.h, sc.budget, sc.settle, lyapunov=lyap_kw,
            strong=strong, **kw)
    if "weak" in props:
        rep.stability["weak"] = check_weak(flow, M, cl, sc.eps, T, dt, sc.settle, **kw)
    if "attractive" in props:
        rep.attractor["attractive"] = is_attractive(flow, M, cl, sc.eps, T, dt, sc.settle, **kw)
    if "almost_weak" in props:
        rep.stability["almost_weak"] = check_almost_weak(flow, M, cl, sc.eps, T, dt,
                                                         sc.settle, **kw)
    if "center" in props:
        rep.attractor["center"] = is_center_of_attraction(flow, M, cl, sc.eps, T, dt,
                                                          sc.tol_density, sc.settle, **kw)
    if "lyapunov" in props:
        rep.attractor["lyapunov"] = is_lyapunov_stable(flow, M, [sc.eps], dt=dt, **lyap_kw,
                                                       **kw)
    if sampler is not None:
        if "ae_pointwise" in props:
            rep.stability["ae_pointwise"] = check_ae_pointwise(
                flow, M, sampler, sc.n_samples, sc.eps, T, sc.delta, sc.seed, dt, sc.settle,
                **kw)
        if "milnor" in props:
            rep.attractor["milnor"] = is_milnor(flow, M, sampler, sc.n_samples, sc.eps, T,
                                                sc.delta, sc.seed, dt, sc.settle, **kw)
    return rep
