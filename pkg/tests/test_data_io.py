import io
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homocurve.data_io import (
    latlon_to_s2,
    parse_hurdat2,
    polygon_length,
    read_curve,
    read_curve_file,
    read_distance_matrix,
    resample_geodesic,
    s2_to_latlon,
    track_points,
    track_to_curve,
    write_curve,
    write_distance_matrix,
    write_mds,
)
from homocurve.errors import (
    AntipodalPoints,
    CountMismatch,
    DegenerateTrack,
    MalformedFix,
    MalformedHeader,
    SchemaViolation,
    TooFewFixes,
)
from homocurve.homogeneous import horizontal_lift
from homocurve.synthetic import random_smooth_curve, synthetic_hurdat2

from oracles import arclength_oracle

IRENE_HEADER = "AL092011,              IRENE,     39,\n"


def irene_text(rows=39):
    lines = [IRENE_HEADER]
    for k in range(rows):
        day, hour = 21 + (k * 6) // 24, (k * 6) % 24
        lat = 15.0 + 0.5 * k
        lon = 59.0 + 0.8 * k
        lines.append(f"201108{day:02d}, {hour:02d}00,  , TS, {lat:.1f}N, {lon:.1f}W,  45, 1006,   0,\n")
    return "".join(lines)


def test_parse_single_track():
    tracks = parse_hurdat2(irene_text().encode())
    assert len(tracks) == 1
    t = tracks[0]
    assert t.id == "AL092011" and t.name == "IRENE" and len(t.fixes) == 39
    assert t.fixes[0][1] == 15.0 and t.fixes[0][2] == -59.0


def test_hemisphere_signs():
    text = "EP012000, TEST, 2,\n20000101, 0000, , TS, 28.0N, 94.8W, 30,\n20000101, 0600, L, TS, 12.5S, 170.2E, 30,\n"
    t = parse_hurdat2(text)[0]
    assert t.fixes[0][1:] == (28.0, -94.8)
    assert t.fixes[1][1:] == (-12.5, 170.2)


def test_empty_input():
    assert parse_hurdat2(b"") == []
    assert parse_hurdat2("\n\n") == []


def test_file_object_input():
    assert len(parse_hurdat2(io.BytesIO(irene_text().encode()))) == 1


def test_count_mismatch_warns_and_keeps_rows():
    text = irene_text(5).replace("39,", "7,")
    with pytest.warns(CountMismatch):
        tracks = parse_hurdat2(text)
    assert len(tracks[0].fixes) == 5


def test_malformed_lines_carry_line_numbers():
    bad_fix = IRENE_HEADER + "20110821, 0000,  , TS, 15.0X, 59.0W, 45,\n"
    with pytest.raises(MalformedFix) as info:
        parse_hurdat2(bad_fix)
    assert info.value.line_number == 2
    with pytest.raises(MalformedHeader) as info:
        parse_hurdat2("20110821, 0000,  , TS, 15.0N, 59.0W, 45,\n")
    assert info.value.line_number == 1
    with pytest.raises(MalformedHeader):
        parse_hurdat2("AL092011, IRENE, many,\n")
    with pytest.raises(MalformedFix):
        parse_hurdat2(IRENE_HEADER + "2011082, 0000,  , TS, 15.0N, 59.0W,\n")
    with pytest.raises(MalformedFix):
        parse_hurdat2(IRENE_HEADER + "20110821, 0000,  , TS, 95.0N, 59.0W,\n")
    repeated = IRENE_HEADER + "20110821, 0000,  , TS, 15.0N, 59.0W,\n" * 2
    with pytest.raises(MalformedFix) as info:
        parse_hurdat2(repeated)
    assert info.value.line_number == 3


def test_latlon_anchors():
    assert np.allclose(latlon_to_s2(90.0, 123.0), [0, 0, 1], atol=0)
    assert np.allclose(latlon_to_s2(0.0, 0.0), [1, 0, 0], atol=1e-16)
    assert np.allclose(latlon_to_s2(0.0, -90.0), [0, -1, 0], atol=1e-16)
    with pytest.raises(ValueError):
        latlon_to_s2(91.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-89.9, 89.9), st.floats(-179.9, 180.0))
def test_latlon_unit_and_injective(lat, lon):
    x = latlon_to_s2(lat, lon)
    assert abs(np.linalg.norm(x) - 1.0) < 1e-14
    la, lo = s2_to_latlon(x)
    assert abs(la - lat) < 1e-9
    assert abs((lo - lon + 180.0) % 360.0 - 180.0) < 1e-9


def test_resample_two_points_gives_midpoint():
    a, b = latlon_to_s2(10.0, 20.0), latlon_to_s2(40.0, -30.0)
    out = resample_geodesic(np.stack([a, b]), 2)
    mid = (a + b) / np.linalg.norm(a + b)
    assert np.array_equal(out[0], a) and np.array_equal(out[-1], b)
    assert np.max(np.abs(out[1] - mid)) < 1e-15


def test_resample_uniform_geodesic_fixed_point():
    T = 30
    t = np.linspace(0.0, 1.2, T + 1)
    pts = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    assert np.max(np.abs(resample_geodesic(pts, T) - pts)) < 1e-12


def test_resample_positions_are_uniform_in_arclength():
    rng = np.random.default_rng(0)
    pts = random_smooth_curve(rng, 9, scale=1.0)
    T = 50
    out = resample_geodesic(pts, T)
    L = arclength_oracle(pts)
    assert abs(polygon_length(pts) - L) < 1e-12
    # every sample lies on the polygon at arclength j L / T: walk the polygon directly
    theta = [math.acos(np.clip(a @ b, -1, 1)) for a, b in zip(pts[:-1], pts[1:])]
    cum = np.concatenate([[0.0], np.cumsum(theta)])
    for j in (0, 7, 25, 49, 50):
        s = j * L / T
        k = min(int(np.searchsorted(cum, s, side="right")) - 1, len(theta) - 1)
        a, b = pts[k], pts[k + 1]
        perp = b - (a @ b) * a
        perp /= np.linalg.norm(perp)
        expected = math.cos(s - cum[k]) * a + math.sin(s - cum[k]) * perp
        assert np.max(np.abs(out[j] - expected)) < 1e-10
    # a polygon through the samples is never longer than the original
    assert polygon_length(out) <= L + 1e-12


def test_resample_idempotent_on_geodesic_polygons():
    # resampling changes nothing once the polygon is a single uniformly sampled arc
    a, b = latlon_to_s2(-5.0, 10.0), latlon_to_s2(30.0, 60.0)
    once = resample_geodesic(np.stack([a, b]), 40)
    twice = resample_geodesic(once, 40)
    assert np.max(np.abs(once - twice)) < 1e-10


def test_resample_errors_and_degenerate():
    with pytest.raises(AntipodalPoints):
        resample_geodesic(np.array([[0, 0, 1.0], [0, 0, -1.0]]), 5)
    with pytest.warns(DegenerateTrack):
        out = resample_geodesic(np.array([[0, 0, 1.0], [0, 0, 1.0]]), 5)
    assert out.shape == (6, 3) and np.all(out == [0, 0, 1.0])


def test_antimeridian_track_takes_short_way():
    lat = np.array([20.0, 21.0, 22.0])
    lon = np.array([178.0, -179.5, -177.0])
    pts = latlon_to_s2(lat, lon)
    out = resample_geodesic(pts, 20)
    _, lo = s2_to_latlon(out)
    assert np.all((lo > 177.0) | (lo < -176.0))


def test_track_conversion_and_too_few_fixes():
    t = parse_hurdat2(irene_text())[0]
    curve = track_to_curve(t, 100)
    assert curve.shape == (101, 3)
    one = parse_hurdat2(IRENE_HEADER.replace("39", "2") + "20110821, 0000,  , TS, 15.0N, 59.0W,\n"
                        "20110821, 0600,  , TS, 15.0N, 59.0W,\n")[0]
    with pytest.raises(TooFewFixes):
        track_points(one)


def test_pipeline_deterministic():
    text = synthetic_hurdat2(np.random.default_rng(3), 2).encode()
    a = [track_to_curve(t, 50) for t in parse_hurdat2(text)]
    b = [track_to_curve(t, 50) for t in parse_hurdat2(bytes(text))]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_curve_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(4)
    beta = random_smooth_curve(rng, 37)
    path = tmp_path / "c.json"
    write_curve(beta, path, {"id": "X"})
    back = read_curve_file(path)
    assert back.manifold == "S2" and back.metadata == {"id": "X"}
    assert np.array_equal(back.samples, beta)
    alpha = horizontal_lift(beta)
    write_curve(alpha, tmp_path / "g.json")
    assert read_curve_file(tmp_path / "g.json").manifold == "SO3"
    assert np.array_equal(read_curve(tmp_path / "g.json"), alpha)


def test_schema_violations(tmp_path):
    good = {"manifold": "S2", "metadata": {}, "samples": [[0, 0, 1], [0, 1, 0]]}

    def load(doc):
        return read_curve(io.StringIO(json.dumps(doc)))

    assert load(good).shape == (2, 3)
    with pytest.raises(SchemaViolation) as info:
        load({**good, "samples": [[0, 0, 1], [0, 1.1, 0]]})
    assert info.value.path == "$.samples[1]"
    with pytest.raises(SchemaViolation) as info:
        load({k: v for k, v in good.items() if k != "metadata"})
    assert info.value.path == "$.metadata"
    with pytest.raises(SchemaViolation):
        load({**good, "manifold": "torus"})
    with pytest.raises(SchemaViolation):
        load({**good, "samples": [[0, 0, 1], [0, "1", 0]]})
    with pytest.raises(SchemaViolation) as info:
        load({"manifold": "SO3", "metadata": {}, "samples": [[1, 0, 0, 0, 1, 0, 0, 0, 1], [2, 0, 0, 0, 1, 0, 0, 0, 1]]})
    assert info.value.path == "$.samples[1]"
    with pytest.raises(SchemaViolation):
        read_curve(io.StringIO("{not json"))


def test_distance_matrix_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    x = rng.standard_normal((4, 4))
    D = np.abs(x + x.T)
    np.fill_diagonal(D, 0.0)
    ids = ["a", "b", "c", "d"]
    write_distance_matrix(D, ids, tmp_path / "D.csv")
    ids2, D2 = read_distance_matrix(tmp_path / "D.csv")
    assert ids2 == ids and np.array_equal(D, D2)
    text = (tmp_path / "D.csv").read_text().splitlines()
    assert text[0] == "a,b,c,d" and "e" in text[1]


def test_mds_csv(tmp_path):
    buf = io.StringIO()
    write_mds(["a", "b"], np.array([[1.0, 2.0], [3.0, 4.0]]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "id,x1,x2" and lines[1].startswith("a,1.0")


def test_no_warnings_on_clean_input():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_hurdat2(irene_text())
