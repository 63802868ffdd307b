import warnings

import numpy as np
import pytest

from homocurve.errors import DimensionPadding, EmptyEnsemble, GridMismatch, HomocurveWarning
from homocurve.homogeneous import OptimizerConfig, distance_M, geodesic_M
from homocurve.lie_group import random_rotation
from homocurve.statistics import (
    Ensemble,
    classical_mds,
    default_jobs,
    distance,
    distance_matrix,
    karcher_mean,
    normalize_mode,
    pair_seed,
    principal_geodesic,
    principal_pairs,
    product_inner,
    product_norm,
    shooting_vector,
    tangent_pca,
)
from homocurve.synthetic import SmoothSphereCurve, random_smooth_curve

from oracles import rank_one_ensemble


def family(seed, N, T, spread=0.15):
    """Small perturbations of one smooth curve, so means are well defined."""
    rng = np.random.default_rng(seed)
    base = SmoothSphereCurve(rng, modes=2, scale=0.5)
    t = np.arange(T + 1) / T
    out = []
    for _ in range(N):
        bump = SmoothSphereCurve(rng, modes=2, scale=spread)
        c = base(t) + bump(t) - bump(t[:1])
        c /= np.linalg.norm(c, axis=1, keepdims=True)
        out.append(c)
    return out


def test_mode_aliases():
    assert normalize_mode("rot") == "mod-rotation"
    assert normalize_mode("shape-rot") == "shape-mod-rotation"
    assert normalize_mode("param") == "parametrized"
    with pytest.raises(ValueError):
        normalize_mode("bogus")


def test_ensemble_validation():
    with pytest.raises(GridMismatch):
        Ensemble([random_smooth_curve(np.random.default_rng(0), 10), random_smooth_curve(np.random.default_rng(1), 11)])
    with pytest.raises(ValueError):
        Ensemble([random_smooth_curve(np.random.default_rng(0), 10)], ids=["a", "b"])


def test_empty_ensemble_errors():
    ens = Ensemble([])
    with pytest.raises(EmptyEnsemble):
        karcher_mean(ens)
    with pytest.raises(EmptyEnsemble):
        distance_matrix(ens)
    with pytest.raises(EmptyEnsemble):
        tangent_pca(ens, random_smooth_curve(np.random.default_rng(0), 5))


def test_single_curve_matrix_and_mean():
    b = random_smooth_curve(np.random.default_rng(2), 30)
    ens = Ensemble([b])
    D = distance_matrix(ens)
    assert D.shape == (1, 1) and D[0, 0] == 0.0
    res = karcher_mean(ens)
    assert np.max(np.abs(res.curve - b)) < 1e-10
    assert res.objective[-1] < 1e-14


def test_distance_matrix_symmetric_and_permutation_invariant():
    curves = family(3, 5, 30)
    D = distance_matrix(Ensemble(curves, "shape"))
    assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0)
    perm = [3, 1, 4, 0, 2]
    Dp = distance_matrix(Ensemble([curves[i] for i in perm], "shape"))
    assert np.max(np.abs(Dp - D[np.ix_(perm, perm)])) < 1e-6


def test_distance_matrix_parallel_matches_serial():
    curves = family(4, 5, 25)
    ens = Ensemble(curves, "shape-rot")
    a = distance_matrix(ens, jobs=1, chunk_size=2)
    b = distance_matrix(ens, jobs=2, chunk_size=2)
    assert np.array_equal(a, b)


def test_default_jobs_reads_environment(monkeypatch):
    monkeypatch.setenv("HOMOCURVE_JOBS", "3")
    assert default_jobs() == 3
    monkeypatch.delenv("HOMOCURVE_JOBS")
    assert default_jobs() >= 1


def test_pair_seed_depends_on_pair_only():
    assert pair_seed(0, 1, 2) == pair_seed(0, 1, 2)
    assert pair_seed(0, 1, 2) != pair_seed(0, 2, 1)


def test_rotation_orbit_collapses_in_rot_mode():
    rng = np.random.default_rng(5)
    b = random_smooth_curve(rng, 30)
    g = random_rotation(rng, 3)
    assert distance(b, b @ g.T, "rot") < 1e-7
    assert distance(b, b @ g.T, "param") > 0.1


def test_failed_pairs_become_nan(monkeypatch):
    import homocurve.statistics as stats

    def boom(*args, **kwargs):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(stats, "align_pairs", boom)
    ens = Ensemble(family(6, 3, 10))
    with pytest.warns(HomocurveWarning):
        D = distance_matrix(ens)
    assert np.isnan(D[0, 1]) and D[0, 0] == 0.0


def test_two_curve_mean_is_geodesic_midpoint():
    b1, b2 = family(7, 2, 40)
    res = karcher_mean(Ensemble([b1, b2], "param"))
    mid = geodesic_M(b1, b2, steps=3)[1]
    assert np.max(np.abs(res.curve - mid)) < 1e-6
    d = distance_M(b1, b2)
    assert abs(res.objective[-1] - d * d / 2) < 1e-8


@pytest.mark.parametrize("mode", ["param", "shape", "rot", "shape-rot"])
def test_karcher_objective_monotone(mode):
    ens = Ensemble(family(8, 6, 30), mode)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = karcher_mean(ens, max_iters=8)
    h = np.array(res.objective)
    assert np.all(np.diff(h) <= 1e-12)
    assert h[-1] <= h[0]


def test_karcher_mean_is_rotation_covariant_in_rot_mode():
    rng = np.random.default_rng(9)
    curves = family(9, 4, 30)
    moved = [c @ random_rotation(rng, 3).T for c in curves]
    a = karcher_mean(Ensemble(curves, "rot"))
    b = karcher_mean(Ensemble(moved, "rot"))
    assert abs(a.objective[-1] - b.objective[-1]) < 1e-6 * max(1.0, a.objective[-1])


def test_identical_curves_have_zero_spectrum():
    b = random_smooth_curve(np.random.default_rng(10), 30)
    ens = Ensemble([b, b.copy(), b.copy()], "shape")
    res = tangent_pca(ens, b)
    assert np.max(res.eigenvalues) < 1e-12


def test_rank_one_family_has_one_eigenvalue():
    b, curves = rank_one_ensemble(11)
    res = tangent_pca(Ensemble(curves, "param"), b)
    assert res.eigenvalues[0] > 1e-4
    assert np.all(res.eigenvalues[1:] < 1e-8 * res.eigenvalues[0])


def test_pca_directions_orthonormal_and_trace_identity():
    curves = family(12, 6, 30)
    ens = Ensemble(curves, "param")
    mean = karcher_mean(ens)
    res = tangent_pca(ens, mean)
    k = len(res.directions)
    G = np.array([[product_inner(res.directions[i], res.directions[j]) for j in range(k)] for i in range(k)])
    assert np.max(np.abs(G - np.eye(k))) < 1e-10
    # param mode has no reparametrization gap, so the spectrum carries all of d^2
    msd = np.mean([a.cost ** 2 for a in mean.alignments])
    assert abs(np.sum(res.eigenvalues) - msd) < 1e-8 * max(msd, 1.0)
    assert np.all(np.diff(res.eigenvalues) <= 1e-15)


def test_principal_frames():
    curves = family(13, 5, 30)
    ens = Ensemble(curves, "shape")
    res = tangent_pca(ens, karcher_mean(ens))
    frames = principal_geodesic(res, 0, spread=2.0, frames=5)
    assert np.max(np.abs(frames[2] - res.mean)) < 1e-12
    svals, pairs = principal_pairs(res, 0, 2.0, 5)
    assert np.allclose(svals, -svals[::-1], atol=1e-15)
    v_plus = shooting_vector(res.mean_pair, pairs[3])
    v_minus = shooting_vector(res.mean_pair, pairs[1])
    assert abs(product_norm(v_plus) - product_norm(v_minus)) < 1e-10
    assert abs(product_norm(v_plus) - abs(svals[3])) < 1e-10
    with pytest.raises(IndexError):
        principal_pairs(res, len(res.directions))


def test_spectrum_invariant_under_member_rotations_in_rot_mode():
    rng = np.random.default_rng(14)
    curves = family(14, 4, 30)
    moved = [c @ random_rotation(rng, 3).T for c in curves]
    m = curves[0]
    a = tangent_pca(Ensemble(curves, "rot"), m)
    b = tangent_pca(Ensemble(moved, "rot"), m)
    assert np.max(np.abs(a.eigenvalues - b.eigenvalues)) < 1e-7


def test_mds_zero_matrix_pads():
    with pytest.warns(DimensionPadding):
        X, ev = classical_mds(np.zeros((3, 3)), 2)
    assert np.all(X == 0)


def test_mds_equilateral_triangle():
    D = np.ones((3, 3)) - np.eye(3)
    X, ev = classical_mds(D, 2)
    Dx = np.linalg.norm(X[:, None] - X[None], axis=-1)
    assert np.max(np.abs(Dx - D)) < 1e-12
    assert abs(ev[0] - ev[1]) < 1e-12


def test_mds_recovers_planar_configuration():
    rng = np.random.default_rng(15)
    P = rng.standard_normal((10, 2))
    D = np.linalg.norm(P[:, None] - P[None], axis=-1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        X, ev = classical_mds(D, 2)
    Dx = np.linalg.norm(X[:, None] - X[None], axis=-1)
    assert np.max(np.abs(Dx - D)) < 1e-10
    assert np.max(np.abs(X.mean(axis=0))) < 1e-12
    assert np.all(np.abs(ev[2:]) < 1e-10)


def test_mds_validation_and_non_euclidean_warning():
    with pytest.raises(ValueError):
        classical_mds(np.ones((2, 3)))
    with pytest.raises(ValueError):
        classical_mds(np.array([[0, 1.0], [2.0, 0]]))
    D = np.array([[0, 1, 1, 3.0], [1, 0, 1, 1], [1, 1, 0, 1], [3, 1, 1, 0]])
    with pytest.warns(HomocurveWarning):
        classical_mds(D, 2)


def test_cfg_threaded_through():
    curves = family(16, 3, 20)
    D1 = distance_matrix(Ensemble(curves, "shape"), OptimizerConfig(seed=1))
    D2 = distance_matrix(Ensemble(curves, "shape"), OptimizerConfig(seed=1))
    assert np.array_equal(D1, D2)
