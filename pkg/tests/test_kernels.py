import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koopman_attractors import kernels
from koopman_attractors.kernels import implementations

IMPLS = implementations()
needs_compiled = pytest.mark.skipif("compiled" not in IMPLS, reason="extension not built")


def _start(n, seed):
    rng = np.random.default_rng(seed)
    return np.log(rng.uniform(1.0, 2.0, n)), rng.uniform(0, 2 * np.pi, n)


@needs_compiled
def test_advance_agrees():
    outs = []
    for impl in IMPLS.values():
        u, th = _start(50, 0)
        impl.hilmy_advance(u, th, 0.01, 500)
        outs.append(np.concatenate([u, th]))
    np.testing.assert_allclose(outs[0], outs[1], rtol=1e-12, atol=1e-13)


@needs_compiled
def test_tail_atoms_agree():
    outs = []
    for impl in IMPLS.values():
        u, th = _start(20, 1)
        owner, pts, w = impl.hilmy_tail_atoms(u, th, 0.01, 1, 100, 500, 0.01)
        outs.append((np.asarray(owner), np.asarray(pts), np.asarray(w)))
    (o1, p1, w1), (o2, p2, w2) = outs
    assert np.array_equal(o1, o2)
    np.testing.assert_allclose(p1, p2, atol=1e-12)
    np.testing.assert_allclose(w1, w2, atol=1e-15)
    for o in np.unique(o1):
        # weights are occupation times over the tail
        assert abs(w1[o1 == o].sum() - 500 * 0.01) <= 1e-9


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 300), r=st.floats(0.01, 0.5), seed=st.integers(0, 2**31))
def test_net_and_decimate_agree(n, r, seed):
    pts = np.ascontiguousarray(np.random.default_rng(seed).uniform(-1, 1, (n, 2)))
    a, b = (np.asarray(impl.greedy_net(pts, r)) for impl in IMPLS.values())
    assert np.array_equal(a, b)
    # a net: covering and separated
    d = np.linalg.norm(pts[:, None] - pts[a][None], axis=2)
    assert d.min(axis=1).max() <= r
    w = np.full(n, 1.0 / n)
    (i1, w1), (i2, w2) = (impl.decimate(pts, w, r) for impl in IMPLS.values())
    assert np.array_equal(np.asarray(i1), np.asarray(i2))
    np.testing.assert_allclose(w1, w2, atol=1e-15)
    assert abs(np.sum(w1) - 1.0) <= 1e-12


def test_backend_selection():
    assert kernels.BACKEND in IMPLS
    env = {**os.environ, "KOOPATTR_PURE_PYTHON": "1"}
    r = subprocess.run([sys.executable, "-c",
                        "from koopman_attractors import kernels; print(kernels.BACKEND)"],
                       env=env, capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "python"
