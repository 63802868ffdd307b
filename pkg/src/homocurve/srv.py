"""Square-root-velocity transform for curves in a matrix Lie group.

A curve is an array ``alpha`` of shape ``(T + 1, m, m)`` sampled at
``t_i = i / T``.  Its transform is an :class:`SrvPair` ``(start, q)`` where
``q`` has shape ``(T, m, m)`` and is constant on each cell ``[k/T, (k+1)/T)``.
Velocities are left-trivialized, ``alpha^{-1} alpha'``, and taken as the
logarithm of successive ratios so the discrete transform is a bijection.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AngleAmbiguity, ConsecutiveSamplesAtCutLocus, DegenerateSpeed, GridMismatch
from .lie_group import group_distance, group_exp, group_log, inner, nearest_rotation, norm
from .reparam import act_reparam as _act_reparam_q

ZERO_SPEED = 1e-12
REORTHONORMALIZE_EVERY = 100


@dataclass(frozen=True)
class SrvPair:
    start: np.ndarray
    q: np.ndarray
    horizontal: bool = field(default=False, compare=False)

    @property
    def T(self):
        return self.q.shape[0]

    @property
    def dim(self):
        return self.start.shape[-1]


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector in the flat coordinates (g x L^2) at an SrvPair."""

    at_start: np.ndarray
    dq: np.ndarray


def q_map(alpha):
    """Transform a sampled group curve into its (start, q) representation."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 3 or alpha.shape[0] < 2:
        raise GridMismatch("a group curve needs shape (T + 1, m, m) with T >= 1")
    T = alpha.shape[0] - 1
    rel = np.swapaxes(alpha[:-1], -1, -2) @ alpha[1:]
    try:
        v = group_log(rel, check=False) * T
    except AngleAmbiguity as exc:
        raise ConsecutiveSamplesAtCutLocus(
            "adjacent samples differ by a half turn; refine the grid"
        ) from exc
    speed = norm(v)
    moving = speed > ZERO_SPEED
    scale = np.where(moving, 1.0 / np.sqrt(np.where(moving, speed, 1.0)), 0.0)
    return SrvPair(alpha[0].copy(), v * scale[:, None, None])


def q_inverse(pair):
    """Integrate alpha' = alpha |q| q exactly on the piecewise-constant q."""
    q = np.asarray(pair.q)
    T = q.shape[0]
    steps = group_exp(norm(q)[:, None, None] * q / T)
    out = np.empty((T + 1,) + q.shape[1:])
    out[0] = pair.start
    cur = np.asarray(pair.start, dtype=float)
    for k in range(T):
        cur = cur @ steps[k]
        if (k + 1) % REORTHONORMALIZE_EVERY == 0:
            cur = nearest_rotation(cur)
        out[k + 1] = cur
    return out


def l2_inner(q1, q2):
    q1 = np.asarray(q1)
    q2 = np.asarray(q2)
    if q1.shape != q2.shape:
        raise GridMismatch(f"q-functions on different grids: {q1.shape} vs {q2.shape}")
    return float(np.sum(q1 * q2) / q1.shape[0])


def l2_norm(q):
    return np.sqrt(l2_inner(q, q))


def l2_distance(q1, q2):
    q1 = np.asarray(q1)
    q2 = np.asarray(q2)
    if q1.shape != q2.shape:
        raise GridMismatch(f"q-functions on different grids: {q1.shape} vs {q2.shape}")
    return l2_norm(q1 - q2)


def pair_distance(p1, p2):
    """Product distance (d_G(start1, start2)^2 + ||q1 - q2||^2)^(1/2)."""
    d0 = group_distance(p1.start, p2.start)
    return float(np.sqrt(d0 * d0 + l2_distance(p1.q, p2.q) ** 2))


def curve_distance_G(alpha1, alpha2):
    alpha1 = np.asarray(alpha1)
    alpha2 = np.asarray(alpha2)
    if alpha1.shape != alpha2.shape:
        raise GridMismatch("curves sampled on different grids")
    return pair_distance(q_map(alpha1), q_map(alpha2))


def act_group(g, pair):
    return SrvPair(np.asarray(g) @ pair.start, pair.q, pair.horizontal)


def act_reparam(pair, gamma):
    return SrvPair(pair.start, _act_reparam_q(pair.q, gamma), pair.horizontal)


def curve_length(q):
    """Length of the curve with transform q (|q|^2 is the speed)."""
    q = np.asarray(q)
    return float(np.sum(q * q) / q.shape[0])


def _bracket(a, b):
    return a @ b - b @ a


def pullback_metric(alpha, u, v):
    """Elastic metric induced on group curves by the product metric.

    ``u`` and ``v`` are variation fields along ``alpha`` in left-trivialized
    form: arrays of shape ``(T + 1, m, m)`` of skew matrices with the actual
    tangent vector at sample i being ``alpha[i] @ u[i]``.  Arc-length
    derivatives are evaluated at cell midpoints, where the discrete velocity
    ``delta = alpha^{-1} alpha'`` lives:

        D_s u = (u' + [delta, u]) / |delta|

    and the metric is <u(0), v(0)> + int <D_s u^N, D_s v^N>
    + 1/4 <D_s u^T, D_s v^T> ds.
    """
    alpha = np.asarray(alpha, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != alpha.shape or v.shape != alpha.shape:
        raise GridMismatch("variation fields must be sampled like the curve")
    T = alpha.shape[0] - 1
    rel = np.swapaxes(alpha[:-1], -1, -2) @ alpha[1:]
    delta = group_log(rel, check=False) * T
    speed = norm(delta)
    if np.any(speed < ZERO_SPEED):
        raise DegenerateSpeed("curve has a zero-speed cell; the arc-length derivative is undefined")
    tau = delta / speed[:, None, None]

    def ds(w):
        mid = 0.5 * (w[:-1] + w[1:])
        return (T * np.diff(w, axis=0) + _bracket(delta, mid)) / speed[:, None, None]

    du, dv = ds(u), ds(v)
    du_t = inner(du, tau)[:, None, None] * tau
    dv_t = inner(dv, tau)[:, None, None] * tau
    integrand = inner(du - du_t, dv - dv_t) + 0.25 * inner(du_t, dv_t)
    return float(inner(u[0], v[0]) + np.sum(integrand * speed) / T)
