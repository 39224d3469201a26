"""Exact ground truth on finite state spaces.

A finite system is a map ``sigma: {0..n-1} -> {0..n-1}`` iterated in
discrete time, with the discrete metric.  Every subset is open and closed,
so the smallest neighbourhood of ``M`` is ``M`` itself and every limit
along an eventually periodic orbit can be read off a window of
``lcm(cycle lengths)`` steps starting at step ``n``.

:func:`verify_propositions` evaluates both sides of each equivalence by
separate computations (matrix powers versus set images versus pointer
chasing versus closed-form cycle averages) and reports every disagreement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce

import numpy as np

from .flow import Semiflow
from .space import StateSpace

MAX_SUBSETS = 64


class NotInvariantSubsetError(ValueError):
    """The candidate subset is not mapped into itself."""


@dataclass(frozen=True)
class FiniteSystem:
    n: int
    sigma: tuple

    def __post_init__(self):
        sig = tuple(int(s) for s in self.sigma)
        if len(sig) != self.n or any(s < 0 or s >= self.n for s in sig):
            raise ValueError(f"sigma must map range({self.n}) into itself, got {sig}")
        object.__setattr__(self, "sigma", sig)

    @classmethod
    def from_list(cls, sigma) -> "FiniteSystem":
        return cls(len(sigma), tuple(sigma))

    def to_list(self) -> list[int]:
        return list(self.sigma)

    @cached_property
    def table(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=np.int64)

    def power(self, k: int) -> np.ndarray:
        """Table of ``sigma^k``."""
        out = np.arange(self.n)
        for _ in range(k):
            out = self.table[out]
        return out

    @cached_property
    def window(self) -> int:
        """Common period of all cycles (``lcm`` of the cycle lengths)."""
        return reduce(math.lcm, (len(c) for c in cycle_list(self)), 1)

    @cached_property
    def powers(self) -> np.ndarray:
        """``sigma^k`` for ``k = 0 .. n + window``, one row per k."""
        rows = [np.arange(self.n)]
        for _ in range(self.n + self.window):
            rows.append(self.table[rows[-1]])
        return np.stack(rows)

    def as_semiflow(self) -> Semiflow:
        table = self.table

        def step(pts):
            return table[np.round(pts[:, 0]).astype(np.int64)].astype(float).reshape(-1, 1)

        return Semiflow(f"finite{self.n}", StateSpace.finite(self.n), "iterated_map", step,
                        f"sigma = {list(self.sigma)}", params=(("sigma", self.sigma),))


class KoopmanMatrix:
    """0/1 matrix ``P`` with ``(P g)(i) = g(sigma(i))``."""

    def __init__(self, sys: FiniteSystem):
        self.n = sys.n
        self.P = np.zeros((sys.n, sys.n), dtype=np.int64)
        self.P[np.arange(sys.n), sys.table] = 1

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.P, k)

    def apply(self, g, k: int = 1) -> np.ndarray:
        return self.power(k) @ np.asarray(g)


# ---------------------------------------------------------------------------
# cycles


def cycle_list(sys: FiniteSystem) -> list[tuple]:
    """Cycles as tuples starting at their smallest state, sorted."""
    color = [0] * sys.n  # 0 new, 1 on current path, 2 done
    found = []
    for s in range(sys.n):
        path = []
        x = s
        while color[x] == 0:
            color[x] = 1
            path.append(x)
            x = sys.sigma[x]
        if color[x] == 1:
            cyc = path[path.index(x):]
            j = cyc.index(min(cyc))
            found.append(tuple(cyc[j:] + cyc[:j]))
        for p in path:
            color[p] = 2
    return sorted(found)


def cycles(sys: FiniteSystem) -> frozenset:
    """Union of all periodic states, by pointer chasing with visited marks."""
    return frozenset(x for c in cycle_list(sys) for x in c)


def cycles_bruteforce(sys: FiniteSystem) -> frozenset:
    """``{x : sigma^k(x) = x for some 1 <= k <= n}``."""
    out = set()
    for x in range(sys.n):
        y = x
        for _ in range(sys.n):
            y = sys.sigma[y]
            if y == x:
                out.add(x)
                break
    return frozenset(out)


def omega(sys: FiniteSystem, x: int) -> frozenset:
    """The cycle reached from ``x``."""
    seen = {}
    k = 0
    while x not in seen:
        seen[x] = k
        x = sys.sigma[x]
        k += 1
    cyc = [x]
    y = sys.sigma[x]
    while y != x:
        cyc.append(y)
        y = sys.sigma[y]
    return frozenset(cyc)


def random_system(n: int, rng: np.random.Generator) -> FiniteSystem:
    """Uniform draw from all ``n**n`` maps."""
    return FiniteSystem(n, tuple(int(v) for v in rng.integers(0, n, size=n)))


def forward_closure(sys: FiniteSystem, x: int) -> frozenset:
    out = set()
    while x not in out:
        out.add(x)
        x = sys.sigma[x]
    return frozenset(out)


def is_invariant(sys: FiniteSystem, M) -> bool:
    return all(sys.sigma[x] in M for x in M)


def invariant_subsets(sys: FiniteSystem, cap: int = MAX_SUBSETS) -> list[frozenset]:
    """Non-empty invariant subsets as unions of forward closures (at most ``cap``).

    Unions are enumerated by increasing number of generating closures, so
    small sets come first; the whole space is always included.
    """
    from itertools import combinations

    closures = sorted(set(forward_closure(sys, x) for x in range(sys.n)),
                      key=lambda c: (len(c), sorted(c)))
    whole = frozenset(range(sys.n))
    out = {whole: None}
    for size in range(1, len(closures) + 1):
        for combo in combinations(closures, size):
            out.setdefault(frozenset().union(*combo), None)
            if len(out) >= cap:
                break
        if len(out) >= cap:
            break
    return sorted(out, key=lambda s: (len(s), sorted(s)))


# ---------------------------------------------------------------------------
# exact minimal sets


@dataclass(frozen=True)
class MinimalSets:
    uniform: frozenset      # eventual image
    attractive: frozenset   # union of omega-limit sets
    milnor: frozenset       # union of omega-limit sets of mu-charged states
    center: frozenset       # union of supports of ergodic measures (cycles)

    def coincide(self) -> bool:
        return self.uniform == self.attractive == self.center


def exact_minimal_sets(sys: FiniteSystem, mu=None) -> MinimalSets:
    """All four minimal sets; ``mu`` defaults to the uniform measure."""
    mu = np.ones(sys.n) if mu is None else np.asarray(mu, dtype=float)
    img = frozenset(int(v) for v in np.unique(sys.power(sys.n)))
    att = frozenset().union(*(omega(sys, x) for x in range(sys.n)))
    mil = frozenset().union(*(omega(sys, x) for x in range(sys.n) if mu[x] > 0))
    ctr = frozenset(x for c in cycle_list(sys) for x in c)
    return MinimalSets(img, att, mil, ctr)


# ---------------------------------------------------------------------------
# proposition checks


@dataclass
class PropositionReport:
    """Both sides of every equivalence for one ``(system, M)`` pair."""

    sigma: list
    M: list
    sides: dict = field(default_factory=dict)
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "M": self.M, "sides": self.sides,
                "mismatches": self.mismatches}


def _masks(sys: FiniteSystem, subsets) -> np.ndarray:
    m = np.zeros((len(subsets), sys.n), dtype=bool)
    for j, s in enumerate(subsets):
        m[j, list(s)] = True
    return m


def _check_invariant_masks(sys: FiniteSystem, masks: np.ndarray):
    bad = masks & ~masks[:, sys.table]
    if bad.any():
        j = int(np.flatnonzero(bad.any(axis=1))[0])
        raise NotInvariantSubsetError(
            f"subset {sorted(np.flatnonzero(masks[j]).tolist())} is not invariant under "
            f"sigma = {list(sys.sigma)}")


def _sides(sys: FiniteSystem, masks: np.ndarray, mu: np.ndarray) -> dict:
    """Both sides of each equivalence, vectorized over candidate masks (rows)."""
    n, L = sys.n, sys.window
    pw = sys.powers                       # (n + L + 1, n)
    win = pw[n:n + L]                     # eventual window, (L, n)
    notM = ~masks                         # (m, n)
    P = KoopmanMatrix(sys)
    Pk = np.stack([P.power(k) for k in range(n + L + 1)]).astype(bool)   # (K, n, n)
    hits = np.einsum("kxi,mi->kmx", Pk, notM)  # hits[k, m, x]: sigma^k(x) outside M
    op_norm = hits.any(axis=2)                 # ||S(k)||, 0 or 1, (K, m)
    ks = np.arange(1, n + L + 1)
    # growth bound as inf_k log||S(k)|| / k
    with np.errstate(divide="ignore"):
        growth = np.min(np.log(op_norm[1:].astype(float)) / ks[:, None], axis=0)

    images = np.zeros((n + L + 1, n), dtype=bool)
    images[np.arange(n + L + 1)[:, None], pw] = True
    img_in_M = ~np.any(images[:, None, :] & notM[None, :, :], axis=2)   # (K, m)

    # pointer chasing for each start
    enters = np.zeros((len(masks), n), dtype=bool)
    for x in range(n):
        y = x
        for _ in range(n + 1):
            enters[:, x] |= masks[:, y]
            y = sys.sigma[y]
    omegas = [sorted(omega(sys, x)) for x in range(n)]
    omega_in_M = np.stack([masks[:, o].all(axis=1) for o in omegas], axis=1)   # (m, n)

    # basis pairings <S(k) e_i, delta_x> = [sigma^k(x) = i], i outside M, over the window
    onehot = win[:, :, None] == np.arange(n)[None, None, :]                   # (L, x, i)
    pair_win = np.einsum("kxi,mi->mkx", onehot, notM)                          # (m, L, x)
    ones = pair_win.sum(axis=1)                                                # (m, x)
    cesaro_lim = ones / L
    density_zero = (L - ones) / L        # density of the set where the pairing vanishes
    # closed form: Cesaro limit of |1_{outside M}| along x equals its mean over omega(x)
    cyc_mean = np.stack([notM[:, o].mean(axis=1) for o in omegas], axis=1)
    in_M_density = np.stack(
        [[float(Fraction(int(masks[j, o].sum()), len(o))) for o in omegas]
         for j in range(len(masks))]).reshape(len(masks), n)

    charged = mu > 0
    periodic = np.zeros(n, dtype=bool)
    periodic[list(cycles(sys))] = True
    # ||P^k e_i|| over the window: column i of P^k is nonzero
    col_alive = Pk[n:n + L].any(axis=1)                                         # (L, i)
    strongly = ~(col_alive[:, None, :] & notM[None]).any(axis=(0, 2))
    # cover K_k = sigma^{-k}(M); in the discrete topology it is its own interior
    covers = np.stack([masks[:, pw[k]] for k in range(1, n + 1)])              # (k, m, x)
    interior_ok = (~masks[None] | covers).all(axis=2).any(axis=0)

    sides = {
        "absorbing_nilpotent": {"nilpotent": (~op_norm[1:]).any(axis=0),
                  "uniformly_stable": ~op_norm[n:].any(axis=0),
                  "growth_bound_neg_inf": np.isneginf(growth),
                  "absorbing": img_in_M[1:].any(axis=0)},
        "pointwise_absorbing_dirac": {"dirac_annihilated": (~hits[1:]).any(axis=0).all(axis=1),
                   "pointwise_absorbing": enters.all(axis=1)},
        "absorbing_interior_cover": {"absorbing": img_in_M[1:].any(axis=0),
                "pointwise_and_interior": enters.all(axis=1) & interior_ok},
        "uniform_strong": {"strongly_stable": strongly,
                  "uniformly_attractive": img_in_M[n:].all(axis=0)},
        "attractive_weak": {"weakly_stable": ~pair_win.any(axis=(1, 2)),
                   "attractive": omega_in_M.all(axis=1)},
        "milnor_ae_pointwise": {"ae_pointwise_stable": ~(pair_win.any(axis=1) & charged).any(axis=1),
                    "likely_limit_set": (omega_in_M | ~charged).all(axis=1)},
        "center_almost_weak": {"almost_weakly_stable": (cesaro_lim == 0).all(axis=1),
                   "center_of_attraction": (in_M_density == 1.0).all(axis=1)},
        "cesaro_density": {"density_one_convergence": (density_zero == 1.0).all(axis=1),
                "cesaro_zero": (cyc_mean == 0).all(axis=1)},
    }
    sides["_periodic"] = periodic
    return sides


PAIRS = ("absorbing_nilpotent", "pointwise_absorbing_dirac", "absorbing_interior_cover", "uniform_strong", "attractive_weak", "milnor_ae_pointwise", "center_almost_weak", "cesaro_density")


def verify_many(sys: FiniteSystem, subsets, mu=None) -> list[PropositionReport]:
    """:func:`verify_propositions` for many invariant subsets of one system."""
    subsets = [frozenset(int(v) for v in s) for s in subsets]
    masks = _masks(sys, subsets)
    _check_invariant_masks(sys, masks)
    mu = np.ones(sys.n) if mu is None else np.asarray(mu, dtype=float)
    sides = _sides(sys, masks, mu)
    ms = exact_minimal_sets(sys, mu)
    cyc_b = cycles_bruteforce(sys)
    ideal_ok, ideal_info = verify_ideals(sys)
    out = []
    for j, s in enumerate(subsets):
        rep = PropositionReport(list(sys.sigma), sorted(s))
        for name in PAIRS:
            vals = {k: bool(v[j]) for k, v in sides[name].items()}
            rep.sides[name] = vals
            if len(set(vals.values())) > 1:
                rep.mismatches.append({"check": name, "sides": vals})
        rep.sides["minimal_sets"] = {k: sorted(v) for k, v in ms.__dict__.items()}
        full = bool(np.all(mu > 0))
        if not (ms.coincide() and ms.center == cyc_b and (ms.milnor == ms.attractive or not full)):
            rep.mismatches.append({"check": "minimal_sets",
                                   "sides": {**rep.sides["minimal_sets"],
                                             "cycles_bruteforce": sorted(cyc_b)}})
        rep.sides["ideals"] = ideal_info
        if not ideal_ok:
            rep.mismatches.append({"check": "ideals", "sides": ideal_info})
        out.append(rep)
    return out


def verify_propositions(sys: FiniteSystem, M, mu=None) -> PropositionReport:
    """Evaluate both sides of every equivalence for ``(sys, M)`` exactly.

    Raises :class:`NotInvariantSubsetError` if ``M`` is not invariant.
    """
    return verify_many(sys, [M], mu)[0]


# ---------------------------------------------------------------------------
# ideals


def _member_ss(sys, g) -> bool:
    P = KoopmanMatrix(sys)
    return not np.any(P.apply(g, sys.n)) and not np.any(P.apply(g, sys.n + sys.window))


def _member_ws(sys, g) -> bool:
    # every Dirac pairing along the eventual window vanishes
    return all(g[sys.powers[k, x]] == 0 for k in range(sys.n, sys.n + sys.window)
               for x in range(sys.n))


def _member_aws(sys, g) -> bool:
    win = sys.powers[sys.n:sys.n + sys.window]
    return bool(np.all(np.abs(np.asarray(g)[win]).mean(axis=0) == 0))


def verify_ideals(sys: FiniteSystem, n_trials: int = 4) -> tuple[bool, dict]:
    """Order-ideal property of the stable subspaces, tested on basis functions.

    Each subspace is spanned by the coordinate functions it contains, is
    closed under multiplication by arbitrary functions and under
    ``|h| <= |g|``, and vanishes exactly on the periodic states.
    """
    rng = np.random.default_rng(sys.n * 7919 + sum(sys.sigma))
    eye = np.eye(sys.n)
    periodic = cycles(sys)
    info, ok = {}, True
    for name, member in (("ss", _member_ss), ("ws", _member_ws), ("aws", _member_aws)):
        basis = [i for i in range(sys.n) if member(sys, eye[i])]
        good = set(basis) == set(range(sys.n)) - periodic
        for _ in range(n_trials):
            g = np.zeros(sys.n)
            if basis:
                g[basis] = rng.normal(size=len(basis))
            h = rng.normal(size=sys.n)
            good &= member(sys, g * h)
            good &= member(sys, g * rng.uniform(-1, 1, size=sys.n))
            bad = rng.normal(size=sys.n)
            if not member(sys, bad):
                good &= not member(sys, g + bad) or not np.any(bad[list(periodic)])
        info[name] = {"basis": basis, "ok": bool(good)}
        ok &= bool(good)
    return ok, info


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepReport:
    n_systems: int
    n_pairs: int
    max_n: int
    seed: int
    counts: dict
    mismatches: list

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {"n_systems": self.n_systems, "n_pairs": self.n_pairs, "max_n": self.max_n,
                "seed": self.seed, "checks": self.counts, "n_mismatches": len(self.mismatches),
                "mismatches": self.mismatches[:50]}


def sweep(n_systems: int = 1000, max_n: int = 12, seed: int = 0,
          cap: int = MAX_SUBSETS) -> SweepReport:
    """Verify every invariant subset (up to ``cap``) of seeded random systems.

    System ``i`` draws its size uniformly from ``2..max_n`` and its map
    uniformly from all maps, using its own child of ``SeedSequence(seed)``,
    so each system depends only on ``(seed, i)``.
    """
    if max_n < 2:
        raise ValueError("max_n must be at least 2")
    children = np.random.SeedSequence(seed).spawn(n_systems)
    counts = {name: 0 for name in (*PAIRS, "minimal_sets", "ideals")}
    mismatches, n_pairs = [], 0
    for i, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        n = int(rng.integers(2, max_n + 1))
        sys = random_system(n, rng)
        subsets = invariant_subsets(sys, cap)
        # minimal sets and ideals are properties of the system, checked once per system
        counts["minimal_sets"] += 1
        counts["ideals"] += 1
        for rep in verify_many(sys, subsets):
            n_pairs += 1
            for k in PAIRS:
                counts[k] += 1
            for mm in rep.mismatches:
                mismatches.append({"system": i, **rep.to_dict(), "check": mm["check"]})
    return SweepReport(n_systems, n_pairs, max_n, seed, counts, mismatches)
