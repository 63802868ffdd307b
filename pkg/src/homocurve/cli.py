"""Command-line pipeline: ingest tracks, compute distances, means, PCA and MDS.

Every subcommand writes its data products to files and prints a one-line
JSON summary to standard output.  Named errors exit with status 1 and a
diagnostic on standard error; usage errors exit with status 2.
"""

import argparse
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import data_io
from .alignment import align_pairs, geodesic_quotient
from .errors import HomocurveError, SchemaViolation, UsageError
from .homogeneous import DEFAULT_CONFIG, OptimizerConfig, horizontal_lift, srv_of
from .lie_group import proj_k
from .srv import q_inverse, q_map
from .statistics import (
    MODE_ALIASES,
    Ensemble,
    classical_mds,
    default_jobs,
    distance_matrix,
    karcher_mean,
    normalize_mode,
    principal_geodesic,
    tangent_pca,
)
from .synthetic import random_group_curve, random_smooth_curve


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--mode", default="param", choices=list(MODE_ALIASES), help="quotient mode (short or full name)")
    p.add_argument("--samples", type=int, default=None, help="samples per curve (T)")
    p.add_argument("--step", type=float, default=DEFAULT_CONFIG.step)
    p.add_argument("--tol", type=float, default=DEFAULT_CONFIG.grad_tol)
    p.add_argument("--iters", type=int, default=DEFAULT_CONFIG.max_iters)
    p.add_argument("--starts", type=int, default=DEFAULT_CONFIG.multistarts)
    p.add_argument("--dp-window", type=int, default=DEFAULT_CONFIG.dp_window)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: HOMOCURVE_JOBS or all cores)")
    p.add_argument("--seed", type=int, default=DEFAULT_CONFIG.seed)
    p.add_argument("-o", "--out", default=None)
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="homocurve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse-hurdat", parents=[common], help="HURDAT2 file -> one curve file per track")
    p.add_argument("hurdat")
    p.add_argument("--ids", nargs="*", default=None, help="keep only these storm ids")

    p = sub.add_parser("lift", parents=[common], help="horizontal lift of a sphere curve to SO(n+1)")
    p.add_argument("curve")

    p = sub.add_parser("distance", parents=[common], help="distance between two curves")
    p.add_argument("a")
    p.add_argument("b")

    p = sub.add_parser("distance-matrix", parents=[common], help="pairwise distances of a directory of curves")
    p.add_argument("directory")

    p = sub.add_parser("geodesic", parents=[common], help="geodesic frames between two curves")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--frames", type=int, default=7)

    p = sub.add_parser("mean", parents=[common], help="Karcher mean of a directory of curves")
    p.add_argument("directory")
    p.add_argument("--matrix", default=None, help="precomputed distance matrix CSV")

    p = sub.add_parser("pca", parents=[common], help="tangent PCA and principal geodesics")
    p.add_argument("directory")
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--frames", type=int, default=7)
    p.add_argument("--spread", type=float, default=2.0)
    p.add_argument("--matrix", default=None, help="precomputed distance matrix CSV")

    p = sub.add_parser("mds", parents=[common], help="classical MDS of a distance matrix CSV")
    p.add_argument("matrix")
    p.add_argument("--dims", type=int, default=2)

    p = sub.add_parser("roundtrip-check", parents=[common], help="self-test of the transform round trips")
    p.add_argument("--count", type=int, default=10)
    return parser


def _config(args):
    try:
        return OptimizerConfig(
            step=args.step,
            grad_tol=args.tol,
            max_iters=args.iters,
            multistarts=args.starts,
            dp_window=args.dp_window,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _jobs(args):
    return args.jobs if args.jobs is not None else default_jobs()


def _require_out(args):
    if not args.out:
        raise UsageError(f"{args.command} needs -o/--out")
    return Path(args.out)


def _load_sphere(path, samples=None):
    cf = data_io.read_curve_file(path)
    if cf.samples.ndim != 2:
        raise SchemaViolation(f"{path}: expected a sphere curve, got {cf.manifold}", "$.manifold")
    beta = cf.samples
    if samples is not None and beta.shape[0] != samples + 1:
        beta = data_io.resample_geodesic(beta, samples)
    ident = str(cf.metadata.get("id", Path(path).stem))
    return ident, beta


def _load_dir(directory, samples=None):
    files = sorted(Path(directory).glob("*.json"))
    if not files:
        raise UsageError(f"no curve files in {directory}")
    ids, curves = [], []
    for f in files:
        ident, beta = _load_sphere(f, samples)
        ids.append(ident)
        curves.append(beta)
    return ids, curves


def _cmd_parse_hurdat(args):
    out = _require_out(args)
    out.mkdir(parents=True, exist_ok=True)
    T = args.samples or data_io.DEFAULT_SAMPLES
    with open(args.hurdat, "rb") as fh:
        tracks = data_io.parse_hurdat2(fh.read())
    if args.ids:
        keep = set(args.ids)
        tracks = [t for t in tracks if t.id in keep]
    written, rejected = [], []
    for t in tracks:
        try:
            beta = data_io.track_to_curve(t, T)
        except HomocurveError as exc:
            rejected.append({"id": t.id, "error": f"{type(exc).__name__}: {exc}"})
            continue
        meta = {"id": t.id, "name": t.name, "source": os.path.basename(args.hurdat), "fixes": len(t.fixes)}
        data_io.write_curve(beta, out / f"{t.id}.json", meta)
        written.append(t.id)
    return {"tracks": len(tracks), "written": len(written), "rejected": rejected, "samples": T}


def _cmd_lift(args):
    out = _require_out(args)
    ident, beta = _load_sphere(args.curve, args.samples)
    alpha = horizontal_lift(beta)
    pair = q_map(alpha)
    residual = float(np.max(np.abs(proj_k(pair.q)))) if pair.q.size else 0.0
    data_io.write_curve(alpha, out, {"id": ident, "lift_of": os.path.basename(args.curve)})
    return {"id": ident, "samples": beta.shape[0] - 1, "max_k_component": residual}


def _cmd_distance(args):
    mode = normalize_mode(args.mode)
    cfg = _config(args)
    _, b1 = _load_sphere(args.a, args.samples)
    _, b2 = _load_sphere(args.b, args.samples)
    res = align_pairs(srv_of(b1), srv_of(b2), mode, cfg)
    summary = {
        "mode": mode,
        "distance": res.cost,
        "y": res.y.tolist(),
        "converged": res.converged,
        "rounds": max(len(res.history) - 1, 0),
    }
    if res.g is not None:
        summary["g"] = res.g.tolist()
    if not res.gamma.is_identity:
        summary["gamma_knots"] = len(res.gamma.t)
    return summary


def _cmd_distance_matrix(args):
    out = _require_out(args)
    ids, curves = _load_dir(args.directory, args.samples)
    ens = Ensemble(curves, normalize_mode(args.mode), ids)
    D = distance_matrix(ens, _config(args), jobs=_jobs(args))
    data_io.write_distance_matrix(D, ids, out)
    n = len(ids)
    return {"mode": ens.mode, "curves": n, "pairs": n * (n - 1) // 2, "failed": int(np.isnan(D).sum() // 2)}


def _matrix_for(args, ids):
    if args.matrix is None:
        return None
    mids, D = data_io.read_distance_matrix(args.matrix)
    if mids != ids:
        raise UsageError("distance matrix identifiers do not match the curve directory")
    return D


def _cmd_geodesic(args):
    out = _require_out(args)
    _, b1 = _load_sphere(args.a, args.samples)
    _, b2 = _load_sphere(args.b, args.samples)
    curves, res = geodesic_quotient(b1, b2, normalize_mode(args.mode), _config(args), args.frames)
    out.mkdir(parents=True, exist_ok=True)
    for k, c in enumerate(curves):
        data_io.write_curve(c, out / f"frame_{k:03d}.json", {"frame": k, "s": k / (len(curves) - 1)})
    return {"mode": normalize_mode(args.mode), "frames": len(curves), "distance": res.cost}


def _cmd_mean(args):
    out = _require_out(args)
    ids, curves = _load_dir(args.directory, args.samples)
    ens = Ensemble(curves, normalize_mode(args.mode), ids)
    cfg = _config(args)
    D = _matrix_for(args, ids)
    if D is None:
        D = distance_matrix(ens, cfg, jobs=_jobs(args))
    res = karcher_mean(ens, cfg, D=D)
    data_io.write_curve(res.curve, out, {"id": "karcher_mean", "mode": ens.mode, "members": ids})
    return {
        "mode": ens.mode,
        "curves": len(ids),
        "objective": res.objective[-1],
        "iterations": len(res.objective) - 1,
        "converged": res.converged,
    }


def _cmd_pca(args):
    out = _require_out(args)
    ids, curves = _load_dir(args.directory, args.samples)
    ens = Ensemble(curves, normalize_mode(args.mode), ids)
    cfg = _config(args)
    D = _matrix_for(args, ids)
    if D is None:
        D = distance_matrix(ens, cfg, jobs=_jobs(args))
    mean = karcher_mean(ens, cfg, D=D)
    res = tangent_pca(ens, mean, cfg)
    out.mkdir(parents=True, exist_ok=True)
    data_io.write_curve(res.mean, out / "mean.json", {"id": "karcher_mean", "mode": ens.mode})
    ncomp = min(args.components, len(res.directions))
    for c in range(ncomp):
        for k, curve in enumerate(principal_geodesic(res, c, args.spread, args.frames)):
            data_io.write_curve(curve, out / f"pc{c + 1}_frame_{k:03d}.json", {"component": c + 1, "frame": k})
    with open(out / "eigenvalues.csv", "w") as fh:
        fh.write("component,eigenvalue\n")
        for c, lam in enumerate(res.eigenvalues):
            fh.write(f"{c + 1},{lam:.17e}\n")
    return {"mode": ens.mode, "curves": len(ids), "eigenvalues": res.eigenvalues[:ncomp].tolist()}


def _cmd_mds(args):
    out = _require_out(args)
    ids, D = data_io.read_distance_matrix(args.matrix)
    X, evals = classical_mds(D, args.dims)
    data_io.write_mds(ids, X, out)
    return {"points": len(ids), "dims": args.dims, "eigenvalues": evals[: args.dims].tolist()}


def _cmd_roundtrip(args):
    rng = np.random.default_rng(args.seed)
    T = args.samples or 100
    worst_group, worst_q, worst_lift = 0.0, 0.0, 0.0
    for _ in range(args.count):
        alpha = random_group_curve(rng, T)
        pair = q_map(alpha)
        back = q_inverse(pair)
        worst_group = max(worst_group, float(np.max(np.abs(back - alpha))))
        again = q_map(back)
        worst_q = max(worst_q, float(np.max(np.abs(again.q - pair.q))))
        beta = random_smooth_curve(rng, T)
        worst_lift = max(worst_lift, float(np.max(np.abs(horizontal_lift(beta)[..., -1] - beta))))
    ok = max(worst_group, worst_q, worst_lift) < 1e-10
    return {"count": args.count, "samples": T, "curve_error": worst_group, "q_error": worst_q,
            "lift_error": worst_lift, "ok": ok}


COMMANDS = {
    "parse-hurdat": _cmd_parse_hurdat,
    "lift": _cmd_lift,
    "distance": _cmd_distance,
    "distance-matrix": _cmd_distance_matrix,
    "geodesic": _cmd_geodesic,
    "mean": _cmd_mean,
    "pca": _cmd_pca,
    "mds": _cmd_mds,
    "roundtrip-check": _cmd_roundtrip,
}


def run(argv=None, stdout=None, stderr=None):
    """Execute one subcommand; returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"homocurve: usage error: {exc}", file=stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            summary = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"homocurve: usage error: {exc}", file=stderr)
        return 2
    except HomocurveError as exc:
        print(f"homocurve: {type(exc).__module__}.{type(exc).__name__}: {exc}", file=stderr)
        return 1
    except OSError as exc:
        print(f"homocurve: {exc}", file=stderr)
        return 1
    summary = {"command": args.command, **summary, "wall_time": time.perf_counter() - started}
    if caught:
        summary["warnings"] = [f"{w.category.__name__}: {w.message}" for w in caught]
    print(json.dumps(summary), file=stdout)
    if args.command == "roundtrip-check" and not summary["ok"]:
        return 1
    return 0


def main():
    sys.exit(run())
