"""HURDAT2 ingestion, conversion of tracks to curves on S^2, and file formats.

Curve files are JSON objects ``{"manifold", "metadata", "samples"}``.  Sphere
curves use the tag ``"S<n>"`` with one unit vector per sample; rotation
curves use ``"SO<m>"`` with each matrix flattened row-major.
"""

import csv
import io
import json
import re
import warnings
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import (
    AntipodalPoints,
    CountMismatch,
    DegenerateTrack,
    MalformedFix,
    MalformedHeader,
    NotARotation,
    SchemaViolation,
    TooFewFixes,
)
from .lie_group import ANTIPODAL_TOL, check_rotation

DEFAULT_SAMPLES = 100
UNIT_TOL = 1e-10

_HEADER_ID = re.compile(r"^[A-Z]{2}\d{6}$")
_COORD = re.compile(r"^(\d+(?:\.\d*)?|\.\d+)([NSEW])$")


@dataclass
class HurricaneTrack:
    id: str
    name: str
    fixes: list = field(default_factory=list)  # (datetime, lat, lon)

    @property
    def latitudes(self):
        return np.array([f[1] for f in self.fixes])

    @property
    def longitudes(self):
        return np.array([f[2] for f in self.fixes])


def _coordinate(token, axis, line_number):
    m = _COORD.match(token)
    if not m:
        raise MalformedFix(f"bad {axis} {token!r}", line_number)
    value, hemi = float(m.group(1)), m.group(2)
    if axis == "latitude":
        if hemi not in "NS":
            raise MalformedFix(f"latitude needs N or S, got {token!r}", line_number)
        if value > 90.0:
            raise MalformedFix(f"latitude {token!r} out of range", line_number)
        return value if hemi == "N" else -value
    if hemi not in "EW":
        raise MalformedFix(f"longitude needs E or W, got {token!r}", line_number)
    if value > 180.0:
        raise MalformedFix(f"longitude {token!r} out of range", line_number)
    lon = value if hemi == "E" else -value
    return 180.0 if lon == -180.0 else lon


def _parse_fix(fields, line_number):
    if len(fields) < 6:
        raise MalformedFix(f"expected at least 6 fields, got {len(fields)}", line_number)
    date, time = fields[0], fields[1]
    if not (re.fullmatch(r"\d{8}", date) and re.fullmatch(r"\d{4}", time)):
        raise MalformedFix(f"bad date/time {date!r} {time!r}", line_number)
    try:
        stamp = datetime.strptime(date + time, "%Y%m%d%H%M")
    except ValueError as exc:
        raise MalformedFix(str(exc), line_number) from None
    return stamp, _coordinate(fields[4], "latitude", line_number), _coordinate(fields[5], "longitude", line_number)


def _lines(text):
    if hasattr(text, "read"):
        text = text.read()
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    return text.splitlines()


def parse_hurdat2(text):
    """Parse HURDAT2 records from bytes, a string or a file object.

    A line whose first field looks like ``AL092011`` opens a new track;
    every other non-blank line is a fix of the current track.  A header whose
    advertised row count disagrees with the rows found triggers a
    :class:`CountMismatch` warning and the rows present are kept.
    """
    tracks = []
    expected = []

    def close():
        if tracks and len(tracks[-1].fixes) != expected[-1]:
            t = tracks[-1]
            warnings.warn(
                f"{t.id}: header advertises {expected[-1]} rows, found {len(t.fixes)}",
                CountMismatch,
                stacklevel=3,
            )

    for number, raw in enumerate(_lines(text), start=1):
        if not raw.strip():
            continue
        fields = [f.strip() for f in raw.split(",")]
        if fields and fields[-1] == "":
            fields.pop()
        if _HEADER_ID.match(fields[0]):
            if len(fields) != 3:
                raise MalformedHeader(f"expected id, name and row count, got {len(fields)} fields", number)
            try:
                count = int(fields[2])
            except ValueError:
                raise MalformedHeader(f"row count {fields[2]!r} is not an integer", number) from None
            if count < 0:
                raise MalformedHeader("negative row count", number)
            close()
            tracks.append(HurricaneTrack(fields[0], fields[1]))
            expected.append(count)
            continue
        if not tracks:
            raise MalformedHeader(f"expected a header line, got {raw.strip()!r}", number)
        fix = _parse_fix(fields, number)
        track = tracks[-1]
        if track.fixes and fix[0] <= track.fixes[-1][0]:
            raise MalformedFix("timestamps must be strictly increasing", number)
        track.fixes.append(fix)
    close()
    return tracks


def latlon_to_s2(lat, lon):
    """(cos lat cos lon, cos lat sin lon, sin lat) for degrees; vectorized."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if not (np.all(np.abs(lat) <= 90.0) and np.all(np.abs(lon) <= 180.0)):
        raise ValueError("latitude must lie in [-90, 90] and longitude in [-180, 180]")
    phi, lam = np.radians(lat), np.radians(lon)
    out = np.stack([np.cos(phi) * np.cos(lam), np.cos(phi) * np.sin(lam), np.sin(phi)], axis=-1)
    # exact poles, so the pole maps to (0, 0, 1) whatever the longitude
    out[..., :2] = np.where((np.abs(lat) == 90.0)[..., None], 0.0, out[..., :2])
    return out


def s2_to_latlon(x):
    x = np.asarray(x, dtype=float)
    return np.degrees(np.arcsin(np.clip(x[..., 2], -1, 1))), np.degrees(np.arctan2(x[..., 1], x[..., 0]))


def _angles(a, b):
    """Great-circle angles between rows, stable near 0 and pi."""
    return 2.0 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))


def polygon_length(points):
    points = np.asarray(points, dtype=float)
    return float(np.sum(_angles(points[:-1], points[1:])))


def resample_geodesic(points, T=DEFAULT_SAMPLES):
    """T + 1 samples equally spaced in arclength along the great-circle polygon.

    Samples are placed at arclength positions j L / T of the input polygon
    (slerp inside each segment).  Working with unit vectors, the shorter arc
    is always taken, so tracks crossing the antimeridian need no unwrapping.
    A polygon of zero length yields a constant curve and a
    :class:`DegenerateTrack` warning.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[0] < 2:
        raise ValueError("need at least two points")
    if T < 1:
        raise ValueError("T must be positive")
    if np.any(np.abs(np.linalg.norm(p, axis=1) - 1.0) > UNIT_TOL):
        raise SchemaViolation("points must be unit vectors")
    if np.any(np.linalg.norm(p[:-1] + p[1:], axis=1) <= ANTIPODAL_TOL):
        raise AntipodalPoints("adjacent points are antipodal; the connecting arc is undefined")
    theta = _angles(p[:-1], p[1:])
    cum = np.concatenate([[0.0], np.cumsum(theta)])
    total = cum[-1]
    if total == 0.0:
        warnings.warn("track has zero length; returning a constant curve", DegenerateTrack, stacklevel=2)
        return np.tile(p[0], (T + 1, 1))
    s = np.arange(T + 1) * (total / T)
    seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(theta) - 1)
    # skip zero-length segments; searchsorted already lands past them
    th = theta[seg]
    u = np.where(th > 0, (s - cum[seg]) / np.where(th > 0, th, 1.0), 0.0)
    u = np.clip(u, 0.0, 1.0)
    a, b = p[seg], p[seg + 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        sin_th = np.sin(th)
        small = th < 1e-8
        wa = np.where(small, 1.0 - u, np.sin((1.0 - u) * th) / np.where(small, 1.0, sin_th))
        wb = np.where(small, u, np.sin(u * th) / np.where(small, 1.0, sin_th))
    out = wa[:, None] * a + wb[:, None] * b
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    out[0], out[-1] = p[0], p[-1]
    return out


def track_points(track):
    """Unit vectors of the fixes with consecutive repeats removed."""
    if not track.fixes:
        raise TooFewFixes(f"{track.id}: no fixes")
    pts = latlon_to_s2(track.latitudes, track.longitudes)
    keep = np.concatenate([[True], np.any(pts[1:] != pts[:-1], axis=1)])
    pts = pts[keep]
    if pts.shape[0] < 2:
        raise TooFewFixes(f"{track.id}: fewer than two distinct fixes")
    return pts


def track_to_curve(track, T=DEFAULT_SAMPLES):
    return resample_geodesic(track_points(track), T)


def manifold_tag(curve):
    curve = np.asarray(curve)
    if curve.ndim == 2:
        return f"S{curve.shape[1] - 1}"
    if curve.ndim == 3 and curve.shape[1] == curve.shape[2]:
        return f"SO{curve.shape[1]}"
    raise SchemaViolation(f"cannot serialize an array of shape {curve.shape}")


def curve_to_json(curve, metadata=None):
    curve = np.asarray(curve, dtype=float)
    tag = manifold_tag(curve)
    return {
        "manifold": tag,
        "metadata": dict(metadata or {}),
        "samples": curve.reshape(curve.shape[0], -1).tolist(),
    }


def write_curve(curve, file, metadata=None):
    """Write a curve as JSON; floats are written with round-trip precision."""
    doc = curve_to_json(curve, metadata)
    if hasattr(file, "write"):
        json.dump(doc, file)
    else:
        with open(file, "w") as fh:
            json.dump(doc, fh)


@dataclass
class CurveFile:
    manifold: str
    samples: np.ndarray
    metadata: dict


def curve_from_json(doc):
    if not isinstance(doc, dict):
        raise SchemaViolation("top level must be an object", "$")
    for key in ("manifold", "metadata", "samples"):
        if key not in doc:
            raise SchemaViolation("missing field", f"$.{key}")
    tag = doc["manifold"]
    if not isinstance(tag, str):
        raise SchemaViolation("must be a string", "$.manifold")
    if not isinstance(doc["metadata"], dict):
        raise SchemaViolation("must be an object", "$.metadata")
    rows = doc["samples"]
    if not isinstance(rows, list) or len(rows) < 2:
        raise SchemaViolation("must be an array of at least two samples", "$.samples")
    m = re.fullmatch(r"(S|SO)(\d+)", tag)
    if not m:
        raise SchemaViolation(f"unknown manifold {tag!r}", "$.manifold")
    width = int(m.group(2)) + 1 if m.group(1) == "S" else int(m.group(2)) ** 2
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise SchemaViolation(f"expected {width} numbers", f"$.samples[{i}]")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaViolation("not a number", f"$.samples[{i}][{j}]")
    arr = np.array(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        i = int(np.argmax(~np.all(np.isfinite(arr), axis=1)))
        raise SchemaViolation("non-finite value", f"$.samples[{i}]")
    if m.group(1) == "S":
        dev = np.abs(np.linalg.norm(arr, axis=1) - 1.0)
        if np.any(dev > UNIT_TOL):
            i = int(np.argmax(dev > UNIT_TOL))
            raise SchemaViolation(f"not a unit vector (deviation {dev[i]:.3e})", f"$.samples[{i}]")
    else:
        k = int(m.group(2))
        arr = arr.reshape(-1, k, k)
        for i, a in enumerate(arr):
            try:
                check_rotation(a)
            except NotARotation as exc:
                raise SchemaViolation(str(exc), f"$.samples[{i}]") from None
    return CurveFile(tag, arr, doc["metadata"])


def read_curve_file(file):
    try:
        if hasattr(file, "read"):
            doc = json.load(file)
        else:
            with open(file) as fh:
                doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}", "$") from None
    return curve_from_json(doc)


def read_curve(file):
    """Load a sphere curve (T + 1, n + 1) or a rotation curve (T + 1, m, m)."""
    return read_curve_file(file).samples


def _open_text(file, mode):
    if hasattr(file, "write") or hasattr(file, "read"):
        return file, False
    return open(file, mode, newline=""), True


def write_distance_matrix(D, ids, file):
    """Header row of identifiers, then one row of full-precision values per curve."""
    D = np.asarray(D, dtype=float)
    if D.shape != (len(ids), len(ids)):
        raise ValueError("matrix size does not match the identifiers")
    fh, close = _open_text(file, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ids)
        for row in D:
            w.writerow([f"{v:.17e}" for v in row])
    finally:
        if close:
            fh.close()


def read_distance_matrix(file):
    if isinstance(file, str) and "\n" in file:
        file = io.StringIO(file)
    fh, close = _open_text(file, "r")
    try:
        rows = list(csv.reader(fh))
    finally:
        if close:
            fh.close()
    ids = rows[0]
    D = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    if D.shape != (len(ids), len(ids)):
        raise SchemaViolation("distance matrix is not square with one column per identifier")
    return ids, D


def write_mds(ids, coords, file):
    coords = np.asarray(coords, dtype=float)
    fh, close = _open_text(file, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"x{k + 1}" for k in range(coords.shape[1])])
        for name, row in zip(ids, coords):
            w.writerow([name] + [f"{v:.17e}" for v in row])
    finally:
        if close:
            fh.close()
