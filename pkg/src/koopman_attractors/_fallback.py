"""Pure-Python (numpy) implementations of the hot loops.

These are the reference semantics for :mod:`koopman_attractors._kernels`.
Orbits are advanced as a batch so the per-step cost is a handful of numpy
calls regardless of how many initial states are integrated.
"""
import numpy as np
from scipy.spatial import cKDTree


def _hilmy_rhs(u, th):
    g = np.expm1(u) ** 2 + np.sin(th) ** 2
    return -u * g, g


def _hilmy_step(u, th, h):
    k1u, k1t = _hilmy_rhs(u, th)
    k2u, k2t = _hilmy_rhs(u + 0.5 * h * k1u, th + 0.5 * h * k1t)
    k3u, k3t = _hilmy_rhs(u + 0.5 * h * k2u, th + 0.5 * h * k2t)
    k4u, k4t = _hilmy_rhs(u + h * k3u, th + h * k3t)
    return (u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            th + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t))


def hilmy_advance(u, th, h, nsteps):
    uu, tt = u.copy(), th.copy()
    for _ in range(nsteps):
        uu, tt = _hilmy_step(uu, tt, h)
    u[:] = uu
    th[:] = tt


def hilmy_tail_atoms(u, th, h, substeps, n_burn, n_tail, radius):
    n = len(u)
    dt = h * substeps
    uu, tt = u.copy(), th.copy()
    for _ in range(n_burn * substeps):
        uu, tt = _hilmy_step(uu, tt, h)

    def cart(a, b):
        r = np.exp(a)
        return np.column_stack([r * np.cos(b), r * np.sin(b)])

    r2 = radius * radius
    cap = max(4 * n, 16)
    pts = np.empty((cap, 2))
    owner = np.empty(cap, dtype=np.int64)
    weights = np.zeros(cap)
    cur = cart(uu, tt)
    pts[:n] = cur
    owner[:n] = np.arange(n)
    cur_id = np.arange(n)
    count = n
    for k in range(n_tail + 1):
        if k > 0:
            for _ in range(substeps):
                uu, tt = _hilmy_step(uu, tt, h)
            p = cart(uu, tt)
            diff = p - cur
            sel = np.flatnonzero(np.einsum("ij,ij->i", diff, diff) > r2)
            if len(sel):
                if count + len(sel) > cap:
                    cap = max(2 * cap, count + len(sel))
                    pts = np.resize(pts, (cap, 2))
                    owner = np.resize(owner, cap)
                    weights = np.concatenate([weights[:count], np.zeros(cap - count)])
                new = count + np.arange(len(sel))
                pts[new] = p[sel]
                owner[new] = sel
                cur[sel] = p[sel]
                cur_id[sel] = new
                count += len(sel)
        if n_tail > 0:
            # atoms of distinct orbits never collide, so plain fancy-add is safe
            weights[cur_id] += dt if 0 < k < n_tail else 0.5 * dt
    u[:] = uu
    th[:] = tt
    order = np.argsort(owner[:count], kind="stable")
    return owner[:count][order], pts[:count][order], weights[:count][order]


def greedy_net(pts, radius):
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    tree = cKDTree(pts)
    covered = np.zeros(n, dtype=bool)
    kept = []
    # a point is covered once some earlier kept point lies within radius;
    # marking the ball of each kept point reproduces the sequential rule
    for i in range(n):
        if covered[i]:
            continue
        kept.append(i)
        covered[tree.query_ball_point(pts[i], radius)] = True
    return np.asarray(kept, dtype=np.int64)


def decimate(pts, weights, radius):
    pts = np.asarray(pts, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    r2 = radius * radius
    idx = [0]
    aw = [0.0]
    cur = pts[0]
    for i in range(n):
        d = pts[i] - cur
        if i > 0 and d @ d > r2:
            idx.append(i)
            aw.append(0.0)
            cur = pts[i]
        aw[-1] += weights[i]
    return np.asarray(idx, dtype=np.int64), np.asarray(aw)
