"""Ensemble statistics in the quotient spaces: distances, Karcher means,
tangent PCA at the mean, and classical multidimensional scaling."""

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alignment import MODES, align_pairs
from .errors import DimensionPadding, EmptyEnsemble, GridMismatch, HomocurveWarning, NoConvergence
from .homogeneous import DEFAULT_CONFIG, check_sphere_curve, curve_of, srv_of
from .lie_group import group_distance, group_exp, group_log
from .reparam import cell_average
from .srv import SrvPair, TangentVector

MODE_ALIASES = {
    "param": "parametrized",
    "shape": "shape",
    "rot": "mod-rotation",
    "shape-rot": "shape-mod-rotation",
}
for _m in MODES:
    MODE_ALIASES[_m] = _m


def normalize_mode(mode):
    try:
        return MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown quotient mode {mode!r}") from None


def _rigid(mode):
    return mode in ("mod-rotation", "shape-mod-rotation")


@dataclass
class Ensemble:
    curves: list
    mode: str = "shape"
    ids: list = None

    def __post_init__(self):
        self.mode = normalize_mode(self.mode)
        self.curves = [check_sphere_curve(c) for c in self.curves]
        shapes = {c.shape for c in self.curves}
        if len(shapes) > 1:
            raise GridMismatch(f"ensemble curves have different grids: {sorted(shapes)}")
        if self.ids is None:
            self.ids = [str(i) for i in range(len(self.curves))]
        elif len(self.ids) != len(self.curves):
            raise ValueError("one identifier per curve is required")

    def __len__(self):
        return len(self.curves)

    def pairs(self):
        return [srv_of(c) for c in self.curves]


def distance(beta1, beta2, mode="shape", cfg=DEFAULT_CONFIG):
    mode = normalize_mode(mode)
    return align_pairs(srv_of(check_sphere_curve(beta1)), srv_of(check_sphere_curve(beta2)), mode, cfg).cost


def pair_seed(seed, i, j):
    """Per-pair seed, independent of scheduling order."""
    return int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])


_WORKER = {}


def _init_worker(pairs, mode, cfg):
    _WORKER.update(pairs=pairs, mode=mode, cfg=cfg)


def _run_chunk(chunk):
    pairs, mode, cfg = _WORKER["pairs"], _WORKER["mode"], _WORKER["cfg"]
    out = []
    for i, j in chunk:
        try:
            res = align_pairs(pairs[i], pairs[j], mode, cfg.with_seed(pair_seed(cfg.seed, i, j)))
            out.append((i, j, res.cost, None))
        except Exception as exc:  # recorded per pair, never aborts the matrix
            out.append((i, j, np.nan, f"{type(exc).__name__}: {exc}"))
    return out


def default_jobs():
    env = os.environ.get("HOMOCURVE_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def distance_matrix(ens, cfg=DEFAULT_CONFIG, jobs=1, chunk_size=64):
    """Symmetric matrix of pairwise quotient distances.

    Each unordered pair is computed once.  Failed pairs are left as NaN and
    reported through a :class:`HomocurveWarning`.
    """
    if len(ens) == 0:
        raise EmptyEnsemble("no curves")
    pairs = ens.pairs()
    N = len(pairs)
    tasks = [(i, j) for i in range(N) for j in range(i + 1, N)]
    chunks = [tasks[k:k + chunk_size] for k in range(0, len(tasks), chunk_size)]
    if jobs is None:
        jobs = default_jobs()
    if jobs <= 1 or len(chunks) <= 1:
        _init_worker(pairs, ens.mode, cfg)
        results = [r for ch in chunks for r in _run_chunk(ch)]
    else:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(pairs, ens.mode, cfg)) as ex:
            results = [r for rs in ex.map(_run_chunk, chunks) for r in rs]
    D = np.zeros((N, N))
    failures = {}
    for i, j, cost, err in results:
        D[i, j] = D[j, i] = cost
        if err is not None:
            failures[(i, j)] = err
    if failures:
        warnings.warn(f"{len(failures)} pairwise distances failed: {failures}", HomocurveWarning, stacklevel=2)
    return D


def frechet_mean_group(points, init, max_iters=100, tol=1e-14):
    """Fixed-point Karcher mean on SO(m); never worse than ``init``."""
    points = np.asarray(points)

    def cost(x):
        return float(np.sum(group_distance(x, points) ** 2))

    x = np.asarray(init, dtype=float)
    for _ in range(max_iters):
        v = np.mean(group_log(x.T @ points, allow_cut_locus=True, check=False), axis=0)
        x = x @ group_exp(v)
        if np.sqrt(np.sum(v * v)) < tol:
            break
    return x if cost(x) <= cost(init) else np.asarray(init, dtype=float)


def _aligned(pair, res, mode):
    """Q-representation of ``pair`` after applying the alignment ``res``."""
    y = res.y
    q_avg, gap = cell_average(pair.q, res.gamma)
    return pair.start @ y, y.T @ q_avg @ y, gap


@dataclass
class KarcherResult:
    curve: np.ndarray
    pair: SrvPair
    objective: list
    converged: bool
    alignments: list = field(repr=False, default=None)


def _objective(alignments):
    return float(sum(a.cost ** 2 for a in alignments))


def karcher_mean(ens, cfg=DEFAULT_CONFIG, D=None, max_iters=50, tol=1e-8):
    """Align-then-average iteration for the Fréchet mean of an ensemble.

    Starts at the member with the least sum of squared distances (``D``
    may be supplied to skip that computation).  Each iteration aligns all
    curves to the current mean, warm-started from the previous alignment,
    and averages the aligned representations: q linearly, the starts with a
    Karcher mean on the group.  ``objective`` lists sum_i d^2(mean, beta_i)
    per iteration and never increases.
    """
    if len(ens) == 0:
        raise EmptyEnsemble("cannot average an empty ensemble")
    mode = ens.mode
    pairs = ens.pairs()
    if D is None:
        D = distance_matrix(ens, cfg)
    mean = pairs[int(np.argmin(np.sum(np.asarray(D) ** 2, axis=1)))]
    aligns = [align_pairs(mean, p, mode, cfg) for p in pairs]
    history = [_objective(aligns)]
    converged = False
    for _ in range(max_iters):
        parts = [_aligned(p, a, mode) for p, a in zip(pairs, aligns)]
        q_new = np.mean([qa for _, qa, _ in parts], axis=0)
        if _rigid(mode):
            start_new = mean.start
        else:
            start_new = frechet_mean_group([s for s, _, _ in parts], mean.start)
        new_mean = SrvPair(start_new, q_new, horizontal=True)
        new_aligns = [
            align_pairs(new_mean, p, mode, cfg, init=(a.y, a.gamma)) for p, a in zip(pairs, aligns)
        ]
        obj = _objective(new_aligns)
        if obj > history[-1]:
            # the averaging step cannot increase the objective; stop if rounding says otherwise
            converged = True
            break
        mean, aligns = new_mean, new_aligns
        history.append(obj)
        if history[-2] - obj < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"Karcher mean not converged after {max_iters} iterations", NoConvergence, stacklevel=2)
    return KarcherResult(curve_of(mean), mean, history, converged, aligns)


def product_inner(u, v):
    T = u.dq.shape[0]
    return float(np.sum(u.at_start * v.at_start) + np.sum(u.dq * v.dq) / T)


def product_norm(u):
    return float(np.sqrt(product_inner(u, u)))


def shooting_vector(base, pair):
    """Flat-chart coordinates of ``pair`` relative to ``base`` (no alignment)."""
    return TangentVector(
        group_log(base.start.T @ pair.start, allow_cut_locus=True, check=False),
        pair.q - base.q,
    )


@dataclass
class PcaResult:
    mean: np.ndarray
    mean_pair: SrvPair
    eigenvalues: np.ndarray
    directions: list
    scores: np.ndarray = field(repr=False, default=None)
    mode: str = "shape"


def tangent_pca(ens, mean, cfg=DEFAULT_CONFIG):
    """PCA of the aligned shooting vectors in the flat chart at the mean.

    ``mean`` is a :class:`KarcherResult` or a sphere curve.  Eigenvalues are
    those of (1/N) sum_i v_i v_i^T (not re-centred), so they sum to the mean
    squared norm of the shooting vectors.
    """
    if len(ens) == 0:
        raise EmptyEnsemble("no curves")
    mode = ens.mode
    if isinstance(mean, KarcherResult):
        base, inits = mean.pair, mean.alignments
    else:
        base, inits = srv_of(check_sphere_curve(mean)), None
    pairs = ens.pairs()
    m = base.dim
    T = base.T
    rows = []
    for idx, p in enumerate(pairs):
        init = (inits[idx].y, inits[idx].gamma) if inits else None
        res = align_pairs(base, p, mode, cfg, init=init)
        start, qa, _ = _aligned(p, res, mode)
        if _rigid(mode):
            a = np.zeros((m, m))
        else:
            a = group_log(base.start.T @ start, allow_cut_locus=True, check=False)
        rows.append(np.concatenate([a.ravel(), (qa - base.q).ravel() / np.sqrt(T)]))
    X = np.array(rows)
    N = X.shape[0]
    _, s, vt = np.linalg.svd(X / np.sqrt(N), full_matrices=False)
    eig = s * s
    dirs = []
    for v in vt:
        v = v * np.sign(v[np.argmax(np.abs(v))])
        dirs.append(TangentVector(v[: m * m].reshape(m, m), v[m * m:].reshape(T, m, m) * np.sqrt(T)))
    return PcaResult(curve_of(base), base, eig, dirs, X @ vt.T, mode)


def principal_pairs(res, component=0, spread=2.0, frames=7):
    """Q-representations along a principal direction, s in [-spread, spread] sqrt(lambda).

    Returns ``(s_values, pairs)``.
    """
    if not 0 <= component < len(res.directions):
        raise IndexError(f"component {component} out of range ({len(res.directions)} directions)")
    lam = max(float(res.eigenvalues[component]), 0.0)
    d = res.directions[component]
    base = res.mean_pair
    svals = np.linspace(-spread, spread, frames) * np.sqrt(lam)
    pairs = [SrvPair(base.start @ group_exp(s * d.at_start), base.q + s * d.dq, horizontal=True) for s in svals]
    return svals, pairs


def principal_geodesic(res, component=0, spread=2.0, frames=7):
    """Curves along a principal direction through the mean."""
    return [curve_of(p) for p in principal_pairs(res, component, spread, frames)[1]]


def classical_mds(D, dims=2):
    """Torgerson scaling.  Returns ``(coords, eigenvalues)``.

    Negative eigenvalues (non-Euclidean D) are truncated at zero; if fewer
    than ``dims`` are positive the missing coordinates are zero and a
    :class:`DimensionPadding` warning is issued.  All eigenvalues of the
    double-centred matrix are returned, in descending order.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.allclose(D, D.T, atol=1e-12) or np.any(np.diag(D) != 0) or np.any(D < 0):
        raise ValueError("distance matrix must be symmetric, non-negative, with zero diagonal")
    n = D.shape[0]
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ (D * D) @ J
    evals, evecs = np.linalg.eigh(0.5 * (B + B.T))
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    scale = max(abs(evals[0]), 1e-300) if n else 1.0
    positive = evals > 1e-12 * scale
    k = min(dims, int(positive.sum()))
    X = np.zeros((n, dims))
    X[:, :k] = evecs[:, :k] * np.sqrt(evals[:k])
    if k < dims:
        warnings.warn(f"only {k} positive eigenvalues; padded to {dims} dimensions", DimensionPadding, stacklevel=2)
    if n and evals[-1] < -1e-9 * scale:
        warnings.warn(
            f"distance matrix is not Euclidean (smallest eigenvalue {evals[-1]:.3e}); truncated",
            HomocurveWarning,
            stacklevel=2,
        )
    return X - X.mean(axis=0), evals
