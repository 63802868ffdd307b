"""Piecewise-linear reparametrizations of [0, 1] and their action on q-functions."""

import numpy as np

from .errors import NonMonotone

_MERGE_TOL = 1e-13


class Reparametrization:
    """Monotone PL homeomorphism of [0, 1] given by its knots.

    Knots are strictly increasing in both coordinates and start at (0, 0)
    and end at (1, 1).
    """

    __slots__ = ("t", "g")

    def __init__(self, t, g):
        t = np.array(t, dtype=float)
        g = np.array(g, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or t.size < 2:
            raise NonMonotone("knots must be two equal-length 1-D sequences with >= 2 entries")
        if t[0] != 0.0 or g[0] != 0.0 or t[-1] != 1.0 or g[-1] != 1.0:
            raise NonMonotone("knots must start at (0, 0) and end at (1, 1)")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(g) <= 0):
            raise NonMonotone("knots must be strictly increasing in both coordinates")
        t.setflags(write=False)
        g.setflags(write=False)
        self.t = t
        self.g = g

    @classmethod
    def identity(cls):
        return cls([0.0, 1.0], [0.0, 1.0])

    @classmethod
    def from_grid_path(cls, path, T):
        """Build from integer grid nodes (i, j), i.e. knots (i/T, j/T)."""
        path = np.asarray(path)
        return cls(path[:, 0] / T, path[:, 1] / T)

    @property
    def is_identity(self):
        return bool(np.all(self.t == self.g))

    def __call__(self, s):
        return np.interp(s, self.t, self.g)

    def __repr__(self):
        return f"Reparametrization(knots={len(self.t)})"

    def inverse(self):
        return Reparametrization(self.g, self.t)

    def compose(self, other):
        """Return self o other, i.e. t -> self(other(t))."""
        ts = np.union1d(other.t, other.inverse()(self.t))
        ts = _merge_close(ts)
        gs = self(other(ts))
        gs[0], gs[-1] = 0.0, 1.0
        return Reparametrization(ts, gs)

    def sup_distance(self, other):
        """max_t |self(t) - other(t)|, attained at a knot of either map."""
        ts = np.union1d(self.t, other.t)
        return float(np.max(np.abs(self(ts) - other(ts))))

    def slopes(self):
        return np.diff(self.g) / np.diff(self.t)


def _merge_close(x):
    keep = np.concatenate([[True], np.diff(x) > _MERGE_TOL])
    out = x[keep]
    out[-1] = x[-1]
    return out


def act_reparam(q, gamma):
    """Midpoint action (q o gamma) sqrt(gamma') on a piecewise-constant q.

    Cell k of the result takes q at gamma(midpoint of cell k) times the
    square root of the average slope of gamma over the cell.
    """
    q = np.asarray(q, dtype=float)
    if gamma.is_identity:
        return q.copy()
    T = q.shape[0]
    nodes = np.arange(T + 1) / T
    gn = gamma(nodes)
    slope = np.diff(gn) * T
    mid = gamma((np.arange(T) + 0.5) / T)
    idx = np.clip(np.floor(mid * T).astype(int), 0, T - 1)
    return q[idx] * np.sqrt(slope)[:, None, None]


def _pieces(T, gamma):
    """Sub-intervals on which cell index, gamma slope and source cell are constant."""
    grid = np.arange(T + 1) / T
    bps = np.union1d(np.union1d(grid, gamma.t), gamma.inverse()(grid))
    bps = _merge_close(bps)
    a, b = bps[:-1], bps[1:]
    length = b - a
    mid = 0.5 * (a + b)
    cell = np.clip(np.floor(mid * T).astype(int), 0, T - 1)
    ga, gb = gamma(a), gamma(b)
    slope = (gb - ga) / length
    src = np.clip(np.floor(gamma(mid) * T).astype(int), 0, T - 1)
    return cell, src, length, slope


def cell_average(q, gamma):
    """Exact cell averages of (q o gamma) sqrt(gamma') and the lost energy.

    Returns ``(q_avg, gap)`` where ``q_avg[k] = T * int_cell_k (q o gamma)
    sqrt(gamma') dt`` and ``gap = int |(q o gamma) sqrt(gamma') - q_avg|^2 dt``
    (the within-cell variance).  For any q1 constant on the cells,
    ``||q1 - (q o gamma) sqrt(gamma')||^2 = ||q1 - q_avg||^2 + gap`` exactly.
    """
    q = np.asarray(q, dtype=float)
    T = q.shape[0]
    if gamma.is_identity:
        return q.copy(), 0.0
    cell, src, length, slope = _pieces(T, gamma)
    vals = q[src] * np.sqrt(slope)[:, None, None]
    avg = np.zeros_like(q)
    np.add.at(avg, cell, vals * (length * T)[:, None, None])
    dev = vals - avg[cell]
    gap = float(np.sum(length * np.sum(dev * dev, axis=(-2, -1))))
    return avg, gap
