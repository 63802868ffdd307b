"""Synthetic curves and tracks for tests, demos and benchmarks."""

from fractions import Fraction

import numpy as np

from .data_io import latlon_to_s2, resample_geodesic
from .lie_group import group_exp, random_rotation, skew
from .reparam import Reparametrization


class SmoothSphereCurve:
    """Analytic curve t -> normalize(c + sum_k a_k sin(k pi t) + b_k cos(k pi t)).

    Callable on arrays of times in [0, 1]; the base point ``c`` dominates so
    the curve stays inside a hemisphere and is never degenerate.
    """

    def __init__(self, rng, n=2, modes=3, scale=0.6):
        d = n + 1
        self.c = rng.standard_normal(d)
        self.c /= np.linalg.norm(self.c)
        self.a = rng.standard_normal((modes, d)) * scale / np.arange(1, modes + 1)[:, None]
        self.b = rng.standard_normal((modes, d)) * scale / np.arange(1, modes + 1)[:, None]
        self.k = np.arange(1, modes + 1)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        arg = np.pi * t[:, None] * self.k[None, :]
        x = self.c + np.sin(arg) @ self.a + np.cos(arg) @ self.b
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def sample(self, T):
        return self(np.arange(T + 1) / T)


def random_smooth_curve(rng, T, n=2, modes=3, scale=0.6):
    return SmoothSphereCurve(rng, n, modes, scale).sample(T)


def random_group_curve(rng, T, m=3, step=0.5):
    """Piecewise-geodesic rotation curve with increments of angle < ``step``."""
    start = random_rotation(rng, m)
    out = np.empty((T + 1, m, m))
    out[0] = start
    for k in range(T):
        x = skew(rng.standard_normal((m, m)))
        x *= rng.uniform(0.05, 1.0) * step / np.sqrt(0.5 * np.sum(x * x))
        out[k + 1] = out[k] @ group_exp(x)
    return out


def random_sphere_rotation(rng, n=2):
    return random_rotation(rng, n + 1)


def _allowed_slopes(window):
    return sorted({Fraction(l, k) for k in range(1, window + 1) for l in range(1, window + 1)})


def random_grid_reparam(rng, T, interior=2, window=4):
    """PL gamma with knots on grid nodes and every slope of the form l/k, k, l <= window.

    Such a gamma and its inverse are reachable by the DP with that window.
    The first segments are drawn at random; the last two are chosen among
    all admissible completions.
    """
    slopes = _allowed_slopes(window)
    for _ in range(1000):
        x, y = 0, 0
        knots = [(0, 0)]
        for _ in range(interior - 1):
            s = slopes[rng.integers(len(slopes))]
            reps = int(rng.integers(1, max(2, T // (4 * window * max(s.denominator, s.numerator)))))
            x, y = x + reps * s.denominator, y + reps * s.numerator
            knots.append((x, y))
        rx, ry = T - x, T - y
        options = []
        for s in slopes:
            for dx in range(s.denominator, rx, s.denominator):
                dy = dx * s.numerator // s.denominator
                if 0 < dy < ry and Fraction(ry - dy, rx - dx) in slopes and Fraction(ry - dy, rx - dx) != s:
                    options.append((x + dx, y + dy))
        if options:
            knots.append(options[rng.integers(len(options))])
            knots.append((T, T))
            k = np.array(knots, dtype=float)
            return Reparametrization(k[:, 0] / T, k[:, 1] / T)
    raise RuntimeError("no admissible reparametrization found; increase T or window")


def grid_nodes_of(gamma, T):
    """Grid nodes (i, j) on the graph of a PL gamma with grid knots, both integer."""
    nodes = set()
    kx = np.rint(gamma.t * T).astype(int)
    ky = np.rint(gamma.g * T).astype(int)
    for x0, y0, x1, y1 in zip(kx[:-1], ky[:-1], kx[1:], ky[1:]):
        s = Fraction(int(y1 - y0), int(x1 - x0))
        for m in range((x1 - x0) // s.denominator + 1):
            nodes.add((x0 + m * s.denominator, y0 + m * s.numerator))
    return sorted(nodes)


def slerp_polygon(vertices, times, t):
    """Evaluate the constant-speed piecewise-geodesic curve with given vertex times."""
    vertices = np.asarray(vertices, dtype=float)
    times = np.asarray(times, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    seg = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
    u = (t - times[seg]) / (times[seg + 1] - times[seg])
    a, b = vertices[seg], vertices[seg + 1]
    th = 2.0 * np.arctan2(np.linalg.norm(a - b, axis=1), np.linalg.norm(a + b, axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        wa = np.where(th > 1e-12, np.sin((1 - u) * th) / np.sin(th), 1 - u)
        wb = np.where(th > 1e-12, np.sin(u * th) / np.sin(th), u)
    out = wa[:, None] * a + wb[:, None] * b
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def planted_pair(rng, T, window=4, interior=2, modes=2, scale=0.5):
    """Sphere curves with beta2 = g0 (beta1 o gamma0), exactly on the grid.

    beta1 is piecewise geodesic with corners at the grid nodes that gamma0
    maps onto grid nodes, so beta1 o gamma0 sampled on the grid is again
    piecewise geodesic and the planted (g0, gamma0) is exactly representable.
    Returns ``(beta1, beta2, g0, gamma0)``.
    """
    gamma0 = random_grid_reparam(rng, T, interior, window)
    corners = np.array(sorted({j for _, j in grid_nodes_of(gamma0, T)})) / T
    f = SmoothSphereCurve(rng, 2, modes, scale)
    vertices = f(corners)
    t = np.arange(T + 1) / T
    beta1 = slerp_polygon(vertices, corners, t)
    g0 = random_rotation(rng, 3)
    beta2 = slerp_polygon(vertices, corners, gamma0(t)) @ g0.T
    return beta1, beta2, g0, gamma0


def _track_latlon(rng, kind, fixes):
    t = np.linspace(0.0, 1.0, fixes)
    if kind == "atlantic":
        # westward drift that recurves to the north-east
        lat0, lon0 = rng.uniform(10, 18), rng.uniform(-60, -40)
        lat = lat0 + rng.uniform(18, 30) * t ** 1.5
        lon = lon0 - rng.uniform(30, 40) * t + rng.uniform(40, 55) * t * t
    else:
        # steady west-north-west motion
        lat0, lon0 = rng.uniform(10, 16), rng.uniform(-105, -95)
        lat = lat0 + rng.uniform(4, 10) * t
        lon = lon0 - rng.uniform(20, 35) * t
    lat = lat + rng.normal(0, 0.15, fixes)
    lon = lon + rng.normal(0, 0.15, fixes)
    return lat, lon


def synthetic_tracks(rng, per_cluster=75, T=50, fixes=(15, 40)):
    """Two clusters of hurricane-like tracks on S^2.

    Returns ``(curves, labels)``; label 0 for recurving tracks and 1 for
    straight westward tracks.
    """
    curves, labels = [], []
    for label, kind in enumerate(("atlantic", "pacific")):
        for _ in range(per_cluster):
            lat, lon = _track_latlon(rng, kind, int(rng.integers(fixes[0], fixes[1] + 1)))
            curves.append(resample_geodesic(latlon_to_s2(lat, lon), T))
            labels.append(label)
    return curves, np.array(labels)


def _fmt_coord(value, pos, neg):
    return f"{abs(value):.1f}{pos if value >= 0 else neg}"


def synthetic_hurdat2(rng, per_cluster=3, fixes=(15, 40)):
    """A HURDAT2 text with synthetic tracks of both clusters."""
    lines = []
    number = 1
    for basin, kind in (("AL", "atlantic"), ("EP", "pacific")):
        for _ in range(per_cluster):
            nfix = int(rng.integers(fixes[0], fixes[1] + 1))
            lat, lon = _track_latlon(rng, kind, nfix)
            lines.append(f"{basin}{number:02d}2011,            STORM{number:02d},     {nfix},")
            for k in range(nfix):
                day, hour = 1 + (k * 6) // 24, (k * 6) % 24
                lines.append(
                    f"201108{day:02d}, {hour:02d}00,  , TS, {_fmt_coord(lat[k], 'N', 'S'):>5}, "
                    f"{_fmt_coord(lon[k], 'E', 'W'):>6},  45, 1000,"
                )
            number += 1
    return "\n".join(lines) + "\n"


def sphere_tangent_direction(rng, beta):
    """Smooth random variation field along a sphere curve (tangent at each sample)."""
    T = beta.shape[0] - 1
    t = np.arange(T + 1) / T
    w = rng.standard_normal((3, beta.shape[1]))
    raw = w[0] + np.outer(np.sin(np.pi * t), w[1]) + np.outer(np.cos(2 * np.pi * t), w[2])
    return raw - np.sum(raw * beta, axis=1, keepdims=True) * beta


def random_skew(rng, m):
    return skew(rng.standard_normal((m, m)))


__all__ = [
    "SmoothSphereCurve",
    "random_smooth_curve",
    "random_group_curve",
    "random_sphere_rotation",
    "random_grid_reparam",
    "grid_nodes_of",
    "slerp_polygon",
    "planted_pair",
    "synthetic_tracks",
    "synthetic_hurdat2",
    "sphere_tangent_direction",
    "random_skew",
]
