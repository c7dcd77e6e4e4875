import math

import numpy as np
import pytest

from delone.densities import (CubeFamily, DiagnosticsWarning, ball_volume, default_radius_grid,
                              lower_density, lower_reduced_density, unit_ball_volume, weight_estimate)
from delone.errors import InsufficientWindowError, ValidationError
from delone.generators import gen_lattice, integer_lattice
from delone.patterns import BallPattern, patch_classes
from delone.pointset import BoxRegion

import oracles


def _lattice_entries(fam, R, dim):
    # oracle: min over placements of (copies * |B_R| / |C|) with integer counting
    out = []
    for side in fam.sides:
        vals = []
        for cube in fam.placements(side):
            k = 1
            for a, b in zip(cube.lo, cube.hi):
                k *= max(math.floor(b - R + 1e-9) - math.ceil(a + R - 1e-9) + 1, 0)
            vals.append(k * unit_ball_volume(dim).value * R ** dim / cube.volume)
        out.append(min(vals))
    return out


@pytest.mark.parametrize("dim, want", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_unit_ball_volume(dim, want):
    assert unit_ball_volume(dim).value == pytest.approx(want, abs=1e-12)
    assert ball_volume(dim, 2.0) == pytest.approx(want * 2 ** dim, abs=1e-12)


def test_ball_volume_rejects_dim_zero():
    with pytest.raises(ValidationError):
        unit_ball_volume(0)


def test_family_ladder_fits_window(z1):
    fam = CubeFamily.for_window(z1.window)
    assert fam.sides[-1] == pytest.approx(200.0)
    assert len(fam.sides) == 6
    for side in fam.sides:
        assert len(fam.placements(side)) == 3
        for cube in fam.placements(side):
            assert z1.window.contains_box(cube, 1e-9)


def test_family_validation():
    with pytest.raises(ValidationError):
        CubeFamily((0.0,), (10.0, 5.0))
    with pytest.raises(ValidationError):
        CubeFamily((0.0,), (5.0,), tail_fraction=0.0)
    with pytest.raises(InsufficientWindowError):
        CubeFamily.for_window(BoxRegion((0,), (10,)), sides=(8.0,))


def test_z1_density_matches_count_oracle(z1):
    fam = CubeFamily.for_window(z1.window)
    p = BallPattern.at(z1, [150], 1.0)
    rep = lower_density(z1, p, fam)
    got = [v for _, v in rep.sequence]
    np.testing.assert_allclose(got, _lattice_entries(fam, 1.0, 1), rtol=0, atol=1e-12)
    side100 = dict(rep.sequence)[fam.sides[3]]
    assert fam.sides[3] == pytest.approx(100.0)
    assert side100 == pytest.approx(2.0, rel=0.05)
    assert rep.estimate == min(got[3:])
    assert rep.estimate <= got[-1]


def test_z2_density_matches_count_oracle(z2):
    fam = CubeFamily.for_window(z2.window, n_sizes=4)
    p = BallPattern.at(z2, [20, 20], 1.0)
    rep = lower_density(z2, p, fam)
    np.testing.assert_allclose([v for _, v in rep.sequence], _lattice_entries(fam, 1.0, 2),
                               rtol=0, atol=1e-12)


def test_density_scale_invariance():
    a = integer_lattice(1, 120)
    b = gen_lattice([[2.0]], BoxRegion((0,), (240,)))
    fa = CubeFamily.for_window(a.window, n_sizes=4)
    fb = CubeFamily((2 * fa.center[0],), tuple(2 * x for x in fa.sides))
    ra = lower_density(a, BallPattern.at(a, [60], 1.0), fa)
    rb = lower_density(b, BallPattern.at(b, [120], 2.0), fb)
    np.testing.assert_allclose([v for _, v in ra.sequence], [v for _, v in rb.sequence], rtol=1e-12)


def test_z1_reduced_density(z1):
    fam = CubeFamily.for_window(z1.window)
    p = BallPattern.at(z1, [150], 1.0)
    rep = lower_reduced_density(z1, p, fam)
    assert rep.method == "exact"
    assert all(rep.certified)
    assert rep.estimate == pytest.approx(2 / 3, rel=0.1)
    for _, v in rep.sequence:
        assert 0 <= v <= 1.0 + 1e-9


def test_reduced_density_brute_force_small():
    z = integer_lattice(1, 40)
    fam = CubeFamily((20.0,), (6.0, 8.0, 10.0, 12.5), offsets=(0.0,))
    rep = lower_reduced_density(z, BallPattern.at(z, [20], 1.0), fam, mode="exact")
    for (side, v), cube in zip(rep.sequence, (fam.centered(s) for s in fam.sides)):
        cands = [[float(y)] for y in range(41) if cube.lo[0] + 1 <= y <= cube.hi[0] - 1]
        assert v == pytest.approx(oracles.max_disjoint(cands, 1.0) * 2.0 / side, abs=1e-12)


def test_short_ladder_warns(z1):
    fam = CubeFamily.for_window(z1.window, n_sizes=3)
    with pytest.warns(DiagnosticsWarning):
        rep = lower_density(z1, BallPattern.at(z1, [150], 1.0), fam)
    assert rep.warnings


def test_csv_table(z1):
    fam = CubeFamily.for_window(z1.window, n_sizes=4)
    rep = lower_density(z1, BallPattern.at(z1, [150], 1.0), fam)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "side,placement_min_value,certified"
    assert len(lines) == 5
    assert lines[1].endswith(",true")


@pytest.mark.parametrize("fixture", ["z1", "fib12", "z2"])
def test_reduced_never_exceeds_plain(request, fixture):
    s = request.getfixturevalue(fixture)
    fam = CubeFamily.for_window(s.window, n_sizes=4)
    bound = unit_ball_volume(s.dim).value * (math.sqrt(s.dim) / 2) ** s.dim
    for R in (1.0, 2.0):
        for p in patch_classes(s, R)[:3]:
            a = lower_density(s, p, fam)
            b = lower_reduced_density(s, p, fam)
            for (_, x), (_, y) in zip(a.sequence, b.sequence):
                assert 0 <= y <= x
                assert y <= bound + 1e-9
            assert 0 <= b.estimate <= a.estimate


def test_default_radius_grid():
    assert default_radius_grid(BoxRegion((0,), (100,))) == [1.0, 2.0, 4.0, 8.0]
    assert default_radius_grid(BoxRegion((0,), (5,))) == []


def test_z1_weight(z1):
    fam = CubeFamily.for_window(z1.window)
    w = weight_estimate(z1, fam, [1, 2, 4], "PW")
    assert w.argmin.radius == 1.0
    assert w.value == pytest.approx(2.0, rel=0.05)
    assert w.classes_per_radius == {1.0: 1, 2.0: 1, 4.0: 1}
    wq = weight_estimate(z1, fam, [1, 2, 4], "PQ")
    assert wq.value <= w.value


def test_weight_errors(z1):
    fam = CubeFamily.for_window(z1.window)
    with pytest.raises(ValidationError):
        weight_estimate(z1, fam, [], "PW")
    with pytest.raises(ValidationError):
        weight_estimate(z1, fam, [0.5], "PW")
    with pytest.raises(ValidationError):
        weight_estimate(z1, fam, [1], "PX")


def test_fibonacci_weights_stable(fib12, fib14):
    vals = {}
    for name, s in (("12", fib12), ("14", fib14)):
        fam = CubeFamily.for_window(s.window)
        w = weight_estimate(s, fam, [1, 2, 4], "PW")
        wq = weight_estimate(s, fam, [1, 2, 4], "PQ")
        assert 0 < wq.value <= w.value
        assert w.unresolved == 0
        vals[name] = wq.value
    assert vals["12"] == pytest.approx(0.32940074587432155, rel=1e-9)
    assert abs(vals["14"] - vals["12"]) / vals["12"] < 0.05


def test_weight_workers_match_serial(fib12):
    fam = CubeFamily.for_window(fib12.window, n_sizes=4)
    a = weight_estimate(fib12, fam, [1, 2], "PQ")
    b = weight_estimate(fib12, fam, [1, 2], "PQ", workers=2)
    assert a.value == b.value and a.argmin == b.argmin
