"""Curves on S^n = SO(n+1)/SO(n) through their horizontal lifts.

A sphere curve is an array ``beta`` of shape ``(T + 1, n + 1)`` of unit
vectors sampled at ``t_i = i / T``.  It is lifted to SO(n+1) by chaining
the most efficient rotations between consecutive samples, transformed with
:func:`homocurve.srv.q_map`, and compared modulo the right action of
K = SO(n) on the transformed pair.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from .errors import AntipodalPoints, GridMismatch, NoConvergence, SchemaViolation
from .lie_group import (
    ANTIPODAL_TOL,
    check_in_k,
    efficient_rotation,
    embed_k,
    group_distance,
    group_exp,
    group_log,
    nearest_rotation,
    norm,
    proj_k,
    random_rotation,
    vee,
)
from .srv import REORTHONORMALIZE_EVERY, SrvPair, q_inverse, q_map

UNIT_TOL = 1e-10
HORIZONTAL_TOL = 1e-9


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for the minimization over K and the alignment loops.

    ``method`` selects the K-minimizer: ``"gradient"`` is multistart
    gradient descent, ``"grid"`` is dense sampling plus bounded Brent
    refinement (only for K = SO(2)), and ``"auto"`` picks ``"grid"`` on S^2.
    """

    step: float = 0.1
    grad_tol: float = 1e-8
    max_iters: int = 1000
    multistarts: int = 8
    method: str = "auto"
    seed: int = 0
    dp_window: int = 4
    max_rounds: int = 20
    round_tol: float = 1e-8
    grid_samples: int = 360

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1 or self.multistarts < 1:
            raise ValueError("max_iters and multistarts must be >= 1")
        if self.method not in ("auto", "gradient", "grid"):
            raise ValueError(f"unknown K-minimization method {self.method!r}")
        if self.dp_window < 1 or self.max_rounds < 1:
            raise ValueError("dp_window and max_rounds must be >= 1")

    def with_seed(self, seed):
        return replace(self, seed=seed)


DEFAULT_CONFIG = OptimizerConfig()


def north(n):
    e = np.zeros(n + 1)
    e[-1] = 1.0
    return e


def check_sphere_curve(beta):
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 2 or beta.shape[0] < 2:
        raise SchemaViolation(f"sphere curve must have shape (T + 1, n + 1), got {beta.shape}")
    err = np.max(np.abs(np.linalg.norm(beta, axis=1) - 1.0))
    if err > UNIT_TOL:
        raise SchemaViolation(f"samples are not unit vectors (deviation {err:.3e})")
    if np.any(1.0 + np.sum(beta[:-1] * beta[1:], axis=1) <= ANTIPODAL_TOL):
        raise AntipodalPoints("adjacent samples are antipodal")
    return beta


def project_pi(alpha):
    """pi(alpha) = alpha n, the last column."""
    return np.asarray(alpha)[..., :, -1].copy()


def lift_initial(b0):
    b0 = np.asarray(b0, dtype=float)
    n = b0.shape[-1] - 1
    if 1.0 + b0[-1] <= ANTIPODAL_TOL:
        out = np.eye(n + 1)
        out[0, 0] = -1.0
        out[-1, -1] = -1.0
        return out
    return efficient_rotation(north(n), b0)


def horizontal_lift(beta, start=None):
    """Lift ``beta`` to SO(n+1), alpha_{i+1} = R_{beta_i, beta_{i+1}} alpha_i."""
    beta = np.asarray(beta, dtype=float)
    if np.any(1.0 + np.sum(beta[:-1] * beta[1:], axis=1) <= ANTIPODAL_TOL):
        raise AntipodalPoints("adjacent samples are antipodal")
    steps = efficient_rotation(beta[:-1], beta[1:])
    out = np.empty((beta.shape[0],) + steps.shape[1:])
    cur = lift_initial(beta[0]) if start is None else np.asarray(start, dtype=float)
    out[0] = cur
    for i in range(steps.shape[0]):
        cur = steps[i] @ cur
        if (i + 1) % REORTHONORMALIZE_EVERY == 0:
            cur = nearest_rotation(cur)
        out[i + 1] = cur
    return out


def horizontal_part(pair):
    """Zero the residual k-component of q (must be below HORIZONTAL_TOL)."""
    resid = proj_k(pair.q)
    err = float(np.max(np.abs(resid))) if resid.size else 0.0
    if err > HORIZONTAL_TOL:
        raise ValueError(f"q has a k-component of size {err:.3e}; curve is not horizontal")
    return SrvPair(pair.start, pair.q - resid, horizontal=True)


def srv_of(beta, start=None):
    """Horizontal (start, q) representation of a sphere curve."""
    return horizontal_part(q_map(horizontal_lift(beta, start)))


def curve_of(pair):
    return project_pi(q_inverse(pair))


def k_action(pair, y, check=True):
    """(start, q) * y = (start y, y^{-1} q y)."""
    y = np.asarray(y, dtype=float)
    if check:
        check_in_k(y)
    return SrvPair(pair.start @ y, y.T @ pair.q @ y, pair.horizontal)


def _check_grids(p1, p2):
    if p1.q.shape != p2.q.shape:
        raise GridMismatch(f"q-functions on different grids: {p1.q.shape} vs {p2.q.shape}")


def f_value(p1, p2, y, include_start=True):
    """F(y) = d^2(start1, start2 y) + ||q1 - y^{-1} q2 y||^2."""
    _check_grids(p1, p2)
    y = np.asarray(y, dtype=float)
    diff = p1.q - y.T @ p2.q @ y
    val = float(np.sum(diff * diff) / p1.T)
    if include_start:
        val += float(group_distance(p1.start, p2.start @ y)) ** 2
    return val


def cross_term_gradient(q1, q2):
    """int (q1 q2^T - q2^T q1) dt as a Riemann sum over the cells."""
    q2t = np.swapaxes(q2, -1, -2)
    return np.sum(q1 @ q2t - q2t @ q1, axis=0) / q1.shape[0]


def f_gradient(p1, p2, include_start=True):
    """Gradient of F on K at y = I.

    2 Proj_k(-Log(start2^{-1} start1) + int (q1 q2^T - q2^T q1) dt).
    """
    _check_grids(p1, p2)
    g = cross_term_gradient(p1.q, p2.q)
    if include_start:
        g = g - group_log(p2.start.T @ p1.start, check=False)
    return 2.0 * proj_k(g)


@dataclass(frozen=True)
class KResult:
    y: np.ndarray
    f: float
    converged: bool
    iterations: int = 0


def _descend(p1, p2, y0, cfg, include_start):
    y = y0
    f = f_value(p1, p2, y, include_start)
    eps = cfg.step
    for it in range(cfg.max_iters):
        grad = f_gradient(p1, k_action(p2, y, check=False), include_start)
        gnorm = float(norm(grad))
        if gnorm < cfg.grad_tol:
            return KResult(y, f, True, it)
        while True:
            y_new = y @ group_exp(-eps * grad)
            f_new = f_value(p1, p2, y_new, include_start)
            # below the rounding floor of F only the analytic gradient is informative
            if f_new <= f or eps * gnorm * gnorm < 1e-13 * (1.0 + abs(f)):
                break
            eps *= 0.5
            if eps < 1e-14:
                return KResult(y, f, False, it)
        y, f = y_new, f_new
        if (it + 1) % REORTHONORMALIZE_EVERY == 0:
            y = nearest_rotation(y)
    return KResult(y, f, False, cfg.max_iters)


def initial_k_elements(n, cfg):
    """Multistart seeds: equally spaced in SO(2), else I plus Haar draws."""
    count = cfg.multistarts
    if n == 1:
        return [np.eye(2)]
    if n == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        c, s = np.cos(angles), np.sin(angles)
        return [embed_k(np.array([[ci, -si], [si, ci]])) for ci, si in zip(c, s)]
    rng = np.random.default_rng(cfg.seed)
    return [np.eye(n + 1)] + [embed_k(random_rotation(rng, n)) for _ in range(count - 1)]


class SO2Objective:
    """F restricted to K = SO(2), y(theta) = diag(rot(theta), 1), vectorized in theta.

    y = P0 + cos P1 + sin P2 is affine in w = (1, cos, sin), so the q-cross
    term is a quadratic form in w, and the trace and axis of M y (with
    M = start1^T start2) are linear in w.  All coefficients are computed once.
    """

    _P = np.zeros((3, 3, 3))
    _P[0, 2, 2] = 1.0
    _P[1, 0, 0] = _P[1, 1, 1] = 1.0
    _P[2, 1, 0] = 1.0
    _P[2, 0, 1] = -1.0

    def __init__(self, p1, p2, include_start=True):
        _check_grids(p1, p2)
        T = p1.T
        P = self._P
        # C[ab, cd] = sum_k q1_k[a, b] q2_k[c, d];  X_ij = <q1, P_i^T q2 P_j>
        C = (p1.q.reshape(T, 9).T @ p2.q.reshape(T, 9)).reshape(3, 3, 3, 3) / T
        self.cross = np.einsum("abcd,ica,jdb->ij", C, P, P)
        self.const = float(np.sum(p1.q * p1.q) + np.sum(p2.q * p2.q)) / T
        self.include_start = include_start
        if include_start:
            MP = (p1.start.T @ p2.start) @ P
            self.tr = np.trace(MP, axis1=-2, axis2=-1)
            self.ax = vee(MP)

    def __call__(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        X = self.cross
        cross = (
            X[0, 0] + (X[0, 1] + X[1, 0]) * c + (X[0, 2] + X[2, 0]) * s
            + X[1, 1] * c * c + (X[1, 2] + X[2, 1]) * c * s + X[2, 2] * s * s
        )
        val = self.const - 2.0 * cross
        if self.include_start:
            tr = self.tr[0] + self.tr[1] * c + self.tr[2] * s
            ax = self.ax[0] + np.multiply.outer(c, self.ax[1]) + np.multiply.outer(s, self.ax[2])
            ang = np.arctan2(np.sqrt(np.sum(ax * ax, axis=-1)), 0.5 * (tr - 1.0))
            val = val + 2.0 * ang * ang
        return val


def so2_element(theta):
    c, s = np.cos(theta), np.sin(theta)
    return embed_k(np.array([[c, -s], [s, c]]))


def _grid_search_so2(p1, p2, cfg, include_start):
    obj = SO2Objective(p1, p2, include_start)
    N = cfg.grid_samples
    h = 2.0 * np.pi / N
    thetas = h * np.arange(N)
    vals = obj(thetas)
    local = np.flatnonzero((vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1)))
    best_theta, best_val = 0.0, float(obj(0.0))
    # refine every grid-local minimum that could plausibly be the best
    cutoff = vals[local].min() + 1e-6 + 0.05 * abs(vals[local].min())
    cands = local[vals[local] <= cutoff]
    for i in cands[np.argsort(vals[cands])][:4]:
        res = scipy.optimize.minimize_scalar(
            obj, bounds=(thetas[i] - h, thetas[i] + h), method="bounded",
            options={"xatol": 1e-12},
        )
        for th, v in ((res.x, float(res.fun)), (thetas[i], float(vals[i]))):
            if v < best_val:
                best_theta, best_val = th, v
    y = so2_element(best_theta)
    return KResult(y, f_value(p1, p2, y, include_start), True, 0)


def _resolve_method(cfg, n):
    if cfg.method == "auto":
        return "grid" if n == 2 else "gradient"
    if cfg.method == "grid" and n != 2:
        raise ValueError("grid search over K is only available for K = SO(2)")
    return cfg.method


def minimize_over_K(p1, p2, cfg=DEFAULT_CONFIG, include_start=True, starts=None, multistart=True):
    """Minimize F over K; returns the best :class:`KResult` over all starts.

    ``include_start=False`` drops the d^2 term (the rigid-motion quotient).
    Extra initial elements can be supplied through ``starts``; with
    ``multistart=False`` the gradient method descends from those alone.
    The grid method is global on SO(2) and ignores both.
    """
    _check_grids(p1, p2)
    n = p1.dim - 1
    if n == 1:
        # K is trivial
        return KResult(np.eye(2), f_value(p1, p2, np.eye(2), include_start), True, 0)
    if _resolve_method(cfg, n) == "grid":
        return _grid_search_so2(p1, p2, cfg, include_start)
    inits = list(starts or ())
    if multistart or not inits:
        inits += initial_k_elements(n, cfg)
    results = [_descend(p1, p2, np.asarray(y0), cfg, include_start) for y0 in inits]
    best = min(results, key=lambda r: r.f)
    if not any(r.converged for r in results):
        warnings.warn(
            f"K-minimization stopped after {cfg.max_iters} iterations without "
            f"reaching gradient norm {cfg.grad_tol}",
            NoConvergence,
            stacklevel=2,
        )
    return best


def distance_pairs(p1, p2, cfg=DEFAULT_CONFIG):
    res = minimize_over_K(p1, p2, cfg)
    return float(np.sqrt(max(res.f, 0.0))), res


def distance_M(beta1, beta2, cfg=DEFAULT_CONFIG):
    """Distance between parametrized curves on S^n."""
    beta1 = check_sphere_curve(beta1)
    beta2 = check_sphere_curve(beta2)
    if beta1.shape != beta2.shape:
        raise GridMismatch("curves sampled on different grids")
    return distance_pairs(srv_of(beta1), srv_of(beta2), cfg)[0]


def interpolate_pairs(p1, p2, s, include_start=True):
    """Point at parameter s on the product geodesic from p1 to p2.

    Without the start term (rigid-motion quotients) both endpoints share
    p1.start and only q moves.
    """
    if include_start:
        v = group_log(p1.start.T @ p2.start, allow_cut_locus=True, check=False)
        start = p1.start @ group_exp(s * v)
    else:
        start = p1.start
    return SrvPair(start, (1.0 - s) * p1.q + s * p2.q, horizontal=True)


def geodesic_M(beta1, beta2, cfg=DEFAULT_CONFIG, steps=10):
    """Frames of the geodesic between two parametrized sphere curves."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    beta1 = check_sphere_curve(beta1)
    beta2 = check_sphere_curve(beta2)
    if beta1.shape != beta2.shape:
        raise GridMismatch("curves sampled on different grids")
    p1, p2 = srv_of(beta1), srv_of(beta2)
    res = minimize_over_K(p1, p2, cfg)
    p2y = k_action(p2, res.y)
    return [curve_of(interpolate_pairs(p1, p2y, s)) for s in np.linspace(0.0, 1.0, steps)]
