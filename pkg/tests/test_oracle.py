from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koopman_attractors import oracle
from koopman_attractors.oracle import (
    PAIRS, FiniteSystem, KoopmanMatrix, NotInvariantSubsetError, cycle_list, cycles,
    cycles_bruteforce, exact_minimal_sets, invariant_subsets, is_invariant, omega,
    random_system, sweep, verify_ideals, verify_many, verify_propositions,
)

CLAMP5 = FiniteSystem.from_list([0, 0, 1, 2, 3])
# 0 -> 1 -> 2 -> 0 fed by 3; 4 -> 5 -> 6 -> 4 fed by 7 <- 8
TWO_BASINS = FiniteSystem.from_list([1, 2, 0, 2, 5, 6, 4, 6, 7])

maps = st.integers(2, 9).flatmap(
    lambda n: st.lists(st.integers(0, n - 1), min_size=n, max_size=n)).map(FiniteSystem.from_list)


def test_validation_and_serialization():
    with pytest.raises(ValueError):
        FiniteSystem.from_list([0, 3, 1])
    assert FiniteSystem.from_list([1, 0]).to_list() == [1, 0]
    assert CLAMP5.power(3).tolist() == [0, 0, 0, 0, 1]


def test_cycle_examples():
    assert cycles(FiniteSystem.from_list([0, 1, 2, 3])) == {0, 1, 2, 3}
    assert cycles(CLAMP5) == {0}
    assert cycle_list(TWO_BASINS) == [(0, 1, 2), (4, 5, 6)]
    sys = random_system(10, np.random.default_rng(12345))
    assert cycles(sys) == cycles_bruteforce(sys)


@settings(max_examples=200, deadline=None)
@given(sys=maps)
def test_cycles_match_bruteforce(sys):
    assert cycles(sys) == cycles_bruteforce(sys)
    for x in range(sys.n):
        om = omega(sys, x)
        assert om <= cycles(sys)
        assert sys.power(sys.n)[x] in om


def test_minimal_set_examples():
    ms = exact_minimal_sets(CLAMP5)
    assert ms.uniform == ms.attractive == ms.milnor == ms.center == {0}
    perm = FiniteSystem.from_list([2, 0, 1, 4, 3])
    ms = exact_minimal_sets(perm)
    assert ms.uniform == ms.attractive == ms.milnor == ms.center == set(range(5))
    mu = np.zeros(9)
    mu[[0, 1, 2, 3]] = 0.25
    ms = exact_minimal_sets(TWO_BASINS, mu)
    assert ms.milnor == {0, 1, 2}
    assert ms.uniform == ms.attractive == ms.center == {0, 1, 2, 4, 5, 6}


@settings(max_examples=200, deadline=None)
@given(sys=maps)
def test_minimal_sets_are_the_cycles(sys):
    ms = exact_minimal_sets(sys)
    assert ms.coincide() and ms.center == cycles_bruteforce(sys) == ms.milnor


@settings(max_examples=200, deadline=None)
@given(sys=maps, k=st.integers(0, 12), seed=st.integers(0, 2**31))
def test_koopman_matrix(sys, k, seed):
    P = KoopmanMatrix(sys)
    assert np.all(P.P.sum(axis=1) == 1)
    g = np.random.default_rng(seed).normal(size=sys.n)
    np.testing.assert_array_equal(P.apply(g, k), g[sys.power(k)])
    assert np.abs(P.apply(g, k)).max() <= np.abs(g).max()


def test_clamp_report():
    rep = verify_propositions(CLAMP5, {0})
    assert rep.ok
    s = rep.sides["absorbing_nilpotent"]
    assert s["nilpotent"] and s["absorbing"] and s["growth_bound_neg_inf"]
    # sigma^{n-1} is the first power mapping everything into {0}
    assert set(CLAMP5.power(4)) == {0} and set(CLAMP5.power(3)) != {0}


def test_permutation_one_cycle():
    perm = FiniteSystem.from_list([1, 0, 3, 4, 2])
    rep = verify_propositions(perm, {0, 1})
    assert rep.ok
    assert rep.sides["attractive_weak"] == {"weakly_stable": False, "attractive": False}
    assert rep.sides["center_almost_weak"] == {"almost_weakly_stable": False,
                                               "center_of_attraction": False}
    assert verify_propositions(perm, set(range(5))).sides["center_almost_weak"][
        "almost_weakly_stable"]


def test_not_invariant():
    with pytest.raises(NotInvariantSubsetError):
        verify_propositions(CLAMP5, {1})
    assert not is_invariant(CLAMP5, {1}) and is_invariant(CLAMP5, {0, 1})


@settings(max_examples=100, deadline=None)
@given(sys=maps)
def test_invariant_subsets(sys):
    subs = invariant_subsets(sys)
    assert frozenset(range(sys.n)) in subs and len(subs) <= oracle.MAX_SUBSETS
    assert all(is_invariant(sys, s) for s in subs)
    reps = verify_many(sys, subs)
    assert all(r.ok for r in reps), [r.mismatches for r in reps if not r.ok]


def test_ideals():
    ok, info = verify_ideals(TWO_BASINS)
    assert ok
    assert info["ss"]["basis"] == [3, 7, 8]


def test_mutation_is_detected(monkeypatch):
    real = oracle._sides

    def broken(sys, masks, mu):
        s = real(sys, masks, mu)
        s["attractive_weak"]["attractive"] = ~s["attractive_weak"]["attractive"]
        return s

    monkeypatch.setattr(oracle, "_sides", broken)
    rep = verify_propositions(CLAMP5, {0})
    assert [m["check"] for m in rep.mismatches] == ["attractive_weak"]
    assert rep.to_dict()["mismatches"][0]["sides"] == {"weakly_stable": True,
                                                        "attractive": False}


@settings(max_examples=150, deadline=None)
@given(sys=maps, data=st.data())
def test_cesaro_limit_is_cycle_mean(sys, data):
    g = np.array(data.draw(st.lists(st.integers(-3, 3), min_size=sys.n, max_size=sys.n)))
    L = sys.window
    for x in range(sys.n):
        om = sorted(omega(sys, x))
        closed = Fraction(int(np.abs(g[om]).sum()), len(om))
        # averages over whole windows after the transient are exact
        orbit = sys.powers[sys.n:sys.n + L, x]
        assert Fraction(int(np.abs(g[orbit]).sum()), L) == closed
        # Cesaro averages from time 0 converge at rate O(n/N)
        N = 50 * L * sys.n
        traj = [x]
        for _ in range(N - 1):
            traj.append(sys.sigma[traj[-1]])
        avg = np.abs(g[traj]).mean()
        assert abs(avg - float(closed)) <= 2 * 3 * sys.n / N


def test_sweep_small_is_deterministic():
    a, b = sweep(30, 8, seed=3), sweep(30, 8, seed=3)
    assert a.ok and a.to_dict() == b.to_dict()
    assert a.counts["minimal_sets"] == 30 and a.counts[PAIRS[0]] == a.n_pairs
    with pytest.raises(ValueError):
        sweep(1, 1)


def test_sweep_systems_depend_on_index_only():
    # system i is drawn from the i-th spawned child, so a longer sweep extends a shorter one
    short = sweep(5, 10, seed=7).n_pairs
    assert sweep(10, 10, seed=7).n_pairs >= short
