"""Quotients by reparametrization, by rigid motion, and by both.

Reparametrizations are searched by dynamic programming over PL paths on
the (T + 1) x (T + 1) node grid.  The matching energy of a PL path is
integrated exactly for piecewise-constant q, so the DP value, the energy
reported in :class:`AlignmentResult` and :func:`homocurve.reparam.cell_average`
all agree to rounding.
"""

import functools
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import GridMismatch
from .homogeneous import (
    DEFAULT_CONFIG,
    check_sphere_curve,
    curve_of,
    f_value,
    interpolate_pairs,
    minimize_over_K,
    srv_of,
)
from .reparam import Reparametrization, cell_average
from .srv import SrvPair

MODES = ("parametrized", "shape", "mod-rotation", "shape-mod-rotation")


@dataclass(frozen=True)
class AlignmentResult:
    """Optimizing (y, gamma, g) and the achieved distance ``cost``."""

    y: np.ndarray
    gamma: Reparametrization
    cost: float
    g: np.ndarray = None
    converged: bool = True
    history: tuple = field(default=(), compare=False)


@functools.lru_cache(maxsize=None)
def _step_pieces(window):
    """Per step (k, l): sub-cells where both source cells are constant.

    Positions are in units of cells of the first curve; a piece at offset
    (a, b) covers part of cell i0 + a of q1 and cell j0 + b of q2.
    """
    ks, ls, offsets, pa, pb, plen = [], [], [0], [], [], []
    for k in range(1, window + 1):
        for l in range(1, window + 1):
            bps = sorted(set([float(a) for a in range(k + 1)] + [b * k / l for b in range(l + 1)]))
            for u, v in zip(bps[:-1], bps[1:]):
                if v - u <= 1e-14:
                    continue
                mid = 0.5 * (u + v)
                pa.append(int(np.floor(mid)))
                pb.append(int(np.floor(mid * l / k)))
                plen.append(v - u)
            ks.append(k)
            ls.append(l)
            offsets.append(len(pa))
    return (
        np.array(ks, dtype=np.int64),
        np.array(ls, dtype=np.int64),
        np.array(offsets, dtype=np.int64),
        np.array(pa, dtype=np.int64),
        np.array(pb, dtype=np.int64),
        np.array(plen, dtype=np.float64),
    )


@numba.njit(cache=True)
def _dp_table(G, S1, S2, ks, ls, offsets, pa, pb, plen):
    T = G.shape[0]
    E = np.full((T + 1, T + 1), np.inf)
    pred = np.full((T + 1, T + 1), -1, dtype=np.int64)
    E[0, 0] = 0.0
    nsteps = ks.shape[0]
    for i in range(1, T + 1):
        for j in range(1, T + 1):
            best = np.inf
            arg = -1
            for s in range(nsteps):
                k = ks[s]
                l = ls[s]
                i0 = i - k
                j0 = j - l
                if i0 < 0 or j0 < 0:
                    continue
                prev = E[i0, j0]
                if prev == np.inf:
                    continue
                cross = 0.0
                for p in range(offsets[s], offsets[s + 1]):
                    cross += plen[p] * G[i0 + pa[p], j0 + pb[p]]
                seg = (S1[i] - S1[i0] + S2[j] - S2[j0] - 2.0 * np.sqrt(l / k) * cross) / T
                val = prev + seg
                if val < best:
                    best = val
                    arg = s
            E[i, j] = best
            pred[i, j] = arg
    return E, pred


def dp_reparametrize(q1, q2, window=4):
    """Best PL gamma for ||q1 - (q2 o gamma) sqrt(gamma')||^2 and its energy.

    Paths move between grid nodes with steps (k, l), 1 <= k, l <= window.
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if q1.shape != q2.shape:
        raise GridMismatch(f"q-functions on different grids: {q1.shape} vs {q2.shape}")
    T = q1.shape[0]
    G = np.einsum("iab,jab->ij", q1, q2)
    S1 = np.concatenate([[0.0], np.cumsum(np.sum(q1 * q1, axis=(1, 2)))])
    S2 = np.concatenate([[0.0], np.cumsum(np.sum(q2 * q2, axis=(1, 2)))])
    ks, ls, offsets, pa, pb, plen = _step_pieces(window)
    E, pred = _dp_table(G, S1, S2, ks, ls, offsets, pa, pb, plen)
    path = [(T, T)]
    i, j = T, T
    while (i, j) != (0, 0):
        s = pred[i, j]
        i, j = i - ks[s], j - ls[s]
        path.append((i, j))
    gamma = Reparametrization.from_grid_path(path[::-1], T)
    return gamma, max(float(E[T, T]), 0.0)


def alignment_energy(p1, p2, y, gamma, include_start=True):
    """Squared distance at (y, gamma); with ``include_start=False`` the
    optimal rigid motion has already removed the start term."""
    q2avg, gap = cell_average(p2.q, gamma)
    return f_value(p1, SrvPair(p2.start, q2avg), y, include_start) + gap


def _optimal_g(p1, p2, y):
    # g start2 y = start1, so the start term vanishes
    return p1.start @ (p2.start @ y).T


def _alternate(p1, p2, cfg, include_start, y, gamma):
    """Alternate DP over gamma (y fixed) and minimization over K (gamma fixed).

    Each sub-step is accepted only if it lowers the energy, so the cost
    history is non-increasing.
    """
    energy = alignment_energy(p1, p2, y, gamma, include_start)
    history = [np.sqrt(max(energy, 0.0))]
    converged = False
    for _ in range(cfg.max_rounds):
        prev = history[-1]
        g_new, _ = dp_reparametrize(p1.q, y.T @ p2.q @ y, cfg.dp_window)
        q2avg, gap = cell_average(p2.q, g_new)
        e_new = f_value(p1, SrvPair(p2.start, q2avg), y, include_start) + gap
        if e_new < energy:
            gamma, energy = g_new, e_new
        else:
            q2avg, gap = cell_average(p2.q, gamma)
        res = minimize_over_K(
            p1, SrvPair(p2.start, q2avg), cfg, include_start, starts=[y], multistart=False
        )
        if res.f + gap < energy:
            y, energy = res.y, res.f + gap
        history.append(np.sqrt(max(energy, 0.0)))
        if prev - history[-1] < cfg.round_tol:
            converged = True
            break
    return y, gamma, energy, converged, tuple(history)


def align_pairs(p1, p2, mode, cfg=DEFAULT_CONFIG, init=None):
    """Align the transformed curve ``p2`` to ``p1`` in the given quotient.

    ``init`` is an optional extra (y, gamma) starting point; the better of
    it and the default initialization is kept.
    """
    if mode not in MODES:
        raise ValueError(f"unknown quotient mode {mode!r}; expected one of {MODES}")
    if p1.q.shape != p2.q.shape:
        raise GridMismatch("curves sampled on different grids")
    rigid = mode in ("mod-rotation", "shape-mod-rotation")
    include_start = not rigid
    ident = Reparametrization.identity()
    k_res = minimize_over_K(p1, p2, cfg, include_start)
    candidates = []
    if mode in ("parametrized", "mod-rotation"):
        y, energy = k_res.y, k_res.f
        if init is not None:
            e_init = f_value(p1, p2, init[0], include_start)
            if e_init < energy:
                y, energy = init[0], e_init
        g = _optimal_g(p1, p2, y) if rigid else None
        return AlignmentResult(y, ident, float(np.sqrt(max(energy, 0.0))), g, k_res.converged)
    starts = [(k_res.y, ident)]
    if mode == "shape-mod-rotation":
        shape = align_pairs(p1, p2, "shape", cfg)
        starts.append((shape.y, shape.gamma))
    if init is not None:
        starts.append(tuple(init))
    for y0, gamma0 in starts:
        candidates.append(_alternate(p1, p2, cfg, include_start, y0, gamma0))
    y, gamma, energy, converged, history = min(candidates, key=lambda c: c[2])
    g = _optimal_g(p1, p2, y) if rigid else None
    return AlignmentResult(y, gamma, float(np.sqrt(max(energy, 0.0))), g, converged, history)


def _prepare(beta1, beta2):
    beta1 = check_sphere_curve(beta1)
    beta2 = check_sphere_curve(beta2)
    if beta1.shape != beta2.shape:
        raise GridMismatch("curves sampled on different grids")
    return srv_of(beta1), srv_of(beta2)


def distance_shape(beta1, beta2, cfg=DEFAULT_CONFIG):
    """Distance modulo reparametrization."""
    return align_pairs(*_prepare(beta1, beta2), "shape", cfg)


def distance_mod_rotation(beta1, beta2, cfg=DEFAULT_CONFIG):
    """Distance modulo rigid motions: inf over K of ||q1 - y^{-1} q2 y||."""
    return align_pairs(*_prepare(beta1, beta2), "mod-rotation", cfg)


def distance_mod_both(beta1, beta2, cfg=DEFAULT_CONFIG):
    """Distance modulo rigid motions and reparametrizations."""
    return align_pairs(*_prepare(beta1, beta2), "shape-mod-rotation", cfg)


def geodesic_quotient(beta1, beta2, mode="parametrized", cfg=DEFAULT_CONFIG, frames=10):
    """Frames of the geodesic from beta1 to the optimally aligned beta2.

    Returns ``(curves, result)``.  The last frame is beta2 after the optimal
    reparametrization and, in the rigid modes, the optimal rigid motion.
    """
    if frames < 2:
        raise ValueError("frames must be >= 2")
    p1, p2 = _prepare(beta1, beta2)
    res = align_pairs(p1, p2, mode, cfg)
    q2avg, _ = cell_average(p2.q, res.gamma)
    start = p1.start if res.g is not None else p2.start @ res.y
    target = SrvPair(start, res.y.T @ q2avg @ res.y, horizontal=True)
    curves = [curve_of(interpolate_pairs(p1, target, s)) for s in np.linspace(0.0, 1.0, frames)]
    return curves, res
