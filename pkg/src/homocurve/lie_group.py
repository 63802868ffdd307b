"""Numerics for SO(n+1) with the trace metric <x, y> = tr(x^T y).

Matrices are plain numpy arrays; most functions accept stacks of shape
``(..., m, m)`` with ``m = n + 1``.  The subgroup K = SO(n) sits in the
upper-left block, so the sphere S^n = SO(n+1)/SO(n) has its base point
(north pole) at the last coordinate vector.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    AngleAmbiguity,
    AntipodalPoints,
    DimensionMismatch,
    NotARotation,
    YNotInK,
)

ROTATION_TOL = 1e-10
K_TOL = 1e-9
CUT_LOCUS_TOL = 1e-9
# window around pi where the axis is read off the symmetric part
NEAR_PI_WINDOW = 1e-6
ANTIPODAL_TOL = 1e-12


def elementary(i, j, m):
    """Skew basis element E_ij = e_i e_j^T - e_j e_i^T (0-based indices)."""
    e = np.zeros((m, m))
    e[i, j] = 1.0
    e[j, i] = -1.0
    return e


@dataclass(frozen=True)
class SubalgebraBasis:
    """Trace-orthogonal bases of k = so(n) and of its complement in so(n+1)."""

    k_basis: tuple
    kperp_basis: tuple

    @property
    def dim(self):
        return self.k_basis[0].shape[0] if self.k_basis else self.kperp_basis[0].shape[0]


def subalgebra_basis(n):
    """Basis convention: k = span{E_ij : i < j < n}, k_perp = span{E_i,n}."""
    m = n + 1
    k = tuple(elementary(i, j, m) for i in range(n) for j in range(i + 1, n))
    kperp = tuple(elementary(i, n, m) for i in range(n))
    return SubalgebraBasis(k, kperp)


def skew(x):
    return 0.5 * (x - np.swapaxes(x, -1, -2))


def hat(w):
    """3-vector(s) to 3x3 skew matrices, hat(w) @ v = cross(w, v)."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def vee(x):
    """Inverse of :func:`hat` (reads the skew part)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * np.stack(
        [x[..., 2, 1] - x[..., 1, 2], x[..., 0, 2] - x[..., 2, 0], x[..., 1, 0] - x[..., 0, 1]],
        axis=-1,
    )


def inner(x, y):
    """Trace inner product tr(x^T y), broadcast over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-2:] != y.shape[-2:]:
        raise DimensionMismatch(f"cannot pair {x.shape[-2:]} with {y.shape[-2:]}")
    return np.sum(x * y, axis=(-2, -1))


def norm(x):
    return np.sqrt(inner(x, x))


def check_rotation(a, tol=ROTATION_TOL):
    """Raise NotARotation unless every matrix in ``a`` lies in SO(m)."""
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise NotARotation(f"expected square matrices, got shape {a.shape}")
    m = a.shape[-1]
    gram = np.swapaxes(a, -1, -2) @ a
    err = np.max(np.abs(gram - np.eye(m))) if gram.size else 0.0
    if err > tol:
        raise NotARotation(f"A^T A deviates from I by {err:.3e}")
    det = np.linalg.det(a)
    if np.any(np.abs(det - 1.0) > tol):
        raise NotARotation("determinant is not +1")
    return a


def nearest_rotation(a):
    """Closest rotation in Frobenius norm (polar factor)."""
    u, _, vt = np.linalg.svd(a)
    d = np.sign(np.linalg.det(u @ vt))
    u = u.copy()
    u[..., :, -1] *= d[..., None]
    return u @ vt


def group_exp(v):
    """Matrix exponential of skew matrices; closed form when m = 3."""
    v = np.asarray(v, dtype=float)
    m = v.shape[-1]
    if m == 3:
        return _exp_so3(v)
    if m == 2:
        t = v[..., 1, 0]
        c, s = np.cos(t), np.sin(t)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    return scipy.linalg.expm(v)


def _exp_so3(v):
    w = vee(v)
    theta = np.linalg.norm(w, axis=-1)
    small = theta < 1e-4
    th = np.where(small, 1.0, theta)
    t2 = theta * theta
    a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(th) / th)
    b = np.where(small, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, (1.0 - np.cos(th)) / (th * th))
    x = hat(w)
    return np.eye(3) + a[..., None, None] * x + b[..., None, None] * (x @ x)


def group_log(a, allow_cut_locus=False, check=True):
    """Principal (minimal-norm) logarithm of rotation matrices.

    For rotations by an angle within CUT_LOCUS_TOL of pi the axis sign is
    ambiguous; an :class:`AngleAmbiguity` is raised carrying the consistent
    choice in ``.value`` unless ``allow_cut_locus`` is set, in which case
    that choice is returned directly.
    """
    a = np.asarray(a, dtype=float)
    if check:
        check_rotation(a)
    m = a.shape[-1]
    if m == 3:
        out, ambiguous = _log_so3(a)
    elif m == 2:
        out = np.zeros_like(a)
        t = np.arctan2(a[..., 1, 0], a[..., 0, 0])
        out[..., 1, 0] = t
        out[..., 0, 1] = -t
        ambiguous = np.pi - np.abs(t) < CUT_LOCUS_TOL
    else:
        flat = a.reshape((-1, m, m))
        res = [_log_schur(x) for x in flat]
        out = np.stack([r[0] for r in res]).reshape(a.shape)
        ambiguous = np.array([r[1] for r in res]).reshape(a.shape[:-2])
    if np.any(ambiguous) and not allow_cut_locus:
        raise AngleAmbiguity("rotation angle is pi; logarithm axis is ambiguous", value=out)
    return out


def _log_so3(a):
    shape = a.shape[:-2]
    r = a.reshape((-1, 3, 3))
    w_raw = vee(r)  # sin(theta) * axis
    s = np.linalg.norm(w_raw, axis=-1)
    c = 0.5 * (np.trace(r, axis1=-2, axis2=-1) - 1.0)
    theta = np.arctan2(s, c)
    small = theta < 1e-4
    near_pi = np.pi - theta < NEAR_PI_WINDOW
    regular = ~(small | near_pi)
    scale = np.where(
        small,
        1.0 + theta * theta / 6.0 + 7.0 * theta**4 / 360.0,
        theta / np.where(regular, s, 1.0),
    )
    w = scale[:, None] * w_raw
    ambiguous = np.zeros(theta.shape, dtype=bool)
    for i in np.flatnonzero(near_pi):
        # symmetric part is I + (1 - cos) (k k^T - I): read the axis off it
        th = theta[i]
        b = (0.5 * (r[i] + r[i].T) - np.eye(3)) / (1.0 - np.cos(th)) + np.eye(3)
        j = int(np.argmax(np.diag(b)))
        k = b[:, j] / np.linalg.norm(b[:, j])
        if np.pi - th < CUT_LOCUS_TOL:
            ambiguous[i] = True
            if k[np.argmax(np.abs(k))] < 0:
                k = -k
        elif k @ w_raw[i] < 0:
            k = -k
        w[i] = th * k
    return hat(w).reshape(shape + (3, 3)), ambiguous.reshape(shape)


def _log_schur(a):
    m = a.shape[0]
    t, z = scipy.linalg.schur(a, output="real")
    logt = np.zeros((m, m))
    ambiguous = False
    minus_one = []
    i = 0
    while i < m:
        if i + 1 < m and abs(t[i + 1, i]) > 1e-13:
            blk = t[i:i + 2, i:i + 2]
            phi = np.arctan2(0.5 * (blk[1, 0] - blk[0, 1]), 0.5 * (blk[0, 0] + blk[1, 1]))
            if np.pi - abs(phi) < CUT_LOCUS_TOL:
                ambiguous = True
            logt[i + 1, i] = phi
            logt[i, i + 1] = -phi
            i += 2
        else:
            if t[i, i] < 0:
                minus_one.append(i)
            i += 1
    # eigenvalue -1 appears in pairs of 1x1 blocks: a half turn in their plane
    if minus_one:
        ambiguous = True
        for p, q in zip(minus_one[::2], minus_one[1::2]):
            logt[q, p] = np.pi
            logt[p, q] = -np.pi
    return skew(z @ logt @ z.T), ambiguous


def group_distance(a, b):
    """Geodesic distance ||log(a^T b)|| of the bi-invariant trace metric."""
    rel = np.swapaxes(np.asarray(a), -1, -2) @ np.asarray(b)
    return norm(group_log(rel, allow_cut_locus=True, check=False))


def proj_k(x, basis=None):
    """Orthogonal projection onto k.

    With the default basis convention this just keeps the upper-left n x n
    block; an explicit :class:`SubalgebraBasis` projects coefficient-wise.
    """
    x = np.asarray(x, dtype=float)
    if basis is None:
        out = x.copy()
        out[..., -1, :] = 0.0
        out[..., :, -1] = 0.0
        return out
    return _project_onto(x, basis.k_basis)


def proj_kperp(x, basis=None):
    x = np.asarray(x, dtype=float)
    if basis is None:
        return x - proj_k(x)
    return _project_onto(x, basis.kperp_basis)


def _project_onto(x, elements):
    out = np.zeros_like(x)
    for e in elements:
        coef = inner(x, e) / inner(e, e)
        out = out + np.asarray(coef)[..., None, None] * e
    return out


def check_in_k(y, tol=K_TOL):
    """Raise YNotInK unless ``y`` is a rotation of the form diag(A, 1)."""
    y = np.asarray(y, dtype=float)
    m = y.shape[-1]
    e = np.zeros(m)
    e[-1] = 1.0
    err = max(np.max(np.abs(y[..., -1, :] - e)), np.max(np.abs(y[..., :, -1] - e)))
    if err > tol:
        raise YNotInK(f"matrix leaves the last axis fixed only up to {err:.3e}")
    try:
        check_rotation(y, tol=max(tol, ROTATION_TOL))
    except NotARotation as exc:
        raise YNotInK(str(exc)) from exc
    return y


def embed_k(a):
    """SO(n) -> SO(n+1), A -> diag(A, 1)."""
    a = np.asarray(a, dtype=float)
    m = a.shape[-1] + 1
    out = np.zeros(a.shape[:-2] + (m, m))
    out[..., :-1, :-1] = a
    out[..., -1, -1] = 1.0
    return out


def conjugate(y, x, check=True):
    """y^{-1} x y for y in K (stacks of x allowed)."""
    y = np.asarray(y, dtype=float)
    if check:
        check_in_k(y)
    return y.T @ np.asarray(x, dtype=float) @ y


def efficient_rotation(p, q):
    """Rotation closest to I carrying p to q.

    R = (I - 2 (p+q)(p+q)^T / |p+q|^2)(I - 2 p p^T), a product of two
    reflections, i.e. the rotation in the plane of p and q.  Broadcasts over
    leading axes.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise DimensionMismatch("p and q live in different dimensions")
    if np.any(1.0 + np.sum(p * q, axis=-1) <= ANTIPODAL_TOL):
        raise AntipodalPoints("p = -q: no unique shortest rotation")
    m = p.shape[-1]
    s = p + q
    eye = np.eye(m)
    h1 = eye - 2.0 * s[..., :, None] * s[..., None, :] / np.sum(s * s, axis=-1)[..., None, None]
    h2 = eye - 2.0 * p[..., :, None] * p[..., None, :]
    return h1 @ h2


def random_rotation(rng, m):
    """Haar-distributed element of SO(m)."""
    z = rng.standard_normal((m, m))
    qm, r = np.linalg.qr(z)
    qm = qm * np.sign(np.diag(r))
    if np.linalg.det(qm) < 0:
        qm[:, 0] = -qm[:, 0]
    return qm
