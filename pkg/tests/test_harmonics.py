import numpy as np
import pytest

from sphere_mt import (FOUR_PI, HarmonicSpectrum, ResolutionError,
                       ScalarField, analyze, dirichlet_energy,
                       integrate, laplacian, max_degree,
                       sobolev_precondition, synthesize)
from sphere_mt.harmonics import degrees, evaluate_at_points, flat_index
from sphere_mt.conformal import MobiusMap, NORTH, mobius_factor


def unit_spectrum(L, l, m):
    c = np.zeros((L + 1) ** 2)
    c[flat_index(l, m)] = 1.0
    return HarmonicSpectrum(L=L, coeff=c)


def test_orthonormality(grid_small):
    L = 6
    fields = {}
    for l in range(L + 1):
        for m in range(-l, l + 1):
            fields[(l, m)] = synthesize(unit_spectrum(L, l, m), grid_small)
    keys = list(fields)
    worst = 0.0
    for a in keys:
        for b in keys:
            v = integrate(ScalarField(grid_small,
                                      fields[a].values * fields[b].values))
            expect = 1.0 if a == b else 0.0
            worst = max(worst, abs(v - expect))
    assert worst <= 1e-10


def test_orthonormality_at_the_aliasing_bound(grid_small):
    # sampled pairs all the way up to the grid's maximum degree
    rng = np.random.default_rng(1)
    L = max_degree(grid_small)
    pairs = []
    while len(pairs) < 24:
        l = int(rng.integers(0, L + 1))
        m = int(rng.integers(-l, l + 1))
        if (l, m) not in pairs:
            pairs.append((l, m))
    fields = {p: synthesize(unit_spectrum(L, *p), grid_small) for p in pairs}
    worst = 0.0
    for a in pairs:
        for b in pairs:
            v = integrate(ScalarField(grid_small,
                                      fields[a].values * fields[b].values))
            worst = max(worst, abs(v - (1.0 if a == b else 0.0)))
    assert worst <= 1e-10


def test_analyze_picks_out_single_mode(grid_small):
    f = synthesize(unit_spectrum(8, 2, 1), grid_small)
    s = analyze(f, 8)
    assert s[(2, 1)] == pytest.approx(1.0, abs=1e-12)
    rest = np.delete(s.coeff, flat_index(2, 1))
    assert np.max(np.abs(rest)) <= 1e-10


def test_analyze_constant_and_dipole(grid_small):
    ones = ScalarField(grid_small, np.ones((24, 48)))
    s = analyze(ones, 4)
    assert s[(0, 0)] == pytest.approx(np.sqrt(FOUR_PI), rel=1e-13)
    assert np.max(np.abs(s.coeff[1:])) <= 1e-12

    # the x3 coefficient equals sqrt(int x3^2) = sqrt(4 pi / 3)
    x3 = ScalarField(grid_small, grid_small.xyz[:, :, 2])
    s = analyze(x3, 4)
    x3_sq = integrate(ScalarField(grid_small, grid_small.xyz[:, :, 2] ** 2))
    assert s[(1, 0)] == pytest.approx(np.sqrt(x3_sq), rel=1e-12)
    rest = np.delete(s.coeff, flat_index(1, 0))
    assert np.max(np.abs(rest)) <= 1e-12


def test_round_trip_random_spectrum(grid_default):
    rng = np.random.default_rng(11)
    L = 16
    c = rng.uniform(-1.0, 1.0, (L + 1) ** 2)
    s = HarmonicSpectrum(L=L, coeff=c)
    back = analyze(synthesize(s, grid_default), L)
    assert np.max(np.abs(back.coeff - c)) <= 1e-10


def test_synthesize_zero_spectrum(grid_small):
    f = synthesize(HarmonicSpectrum(L=5, coeff=np.zeros(36)), grid_small)
    assert np.all(f.values == 0.0)


def test_smooth_field_round_trip_through_truncation(grid_default):
    # conformal factor at t=2 is analytic; degree-32 truncation is
    # already below 1e-6 pointwise
    w = mobius_factor(MobiusMap(NORTH, 2.0), grid_default)
    s = analyze(w, 32)
    back = synthesize(s, grid_default)
    assert np.max(np.abs(back.values - w.values)) <= 1e-6


def test_parseval(grid_default):
    rng = np.random.default_rng(3)
    L = 20
    c = rng.standard_normal((L + 1) ** 2)
    f = synthesize(HarmonicSpectrum(L=L, coeff=c), grid_default)
    quad = integrate(ScalarField(grid_default, f.values ** 2))
    assert abs(quad - np.sum(c ** 2)) <= 1e-10 * np.sum(c ** 2)


def test_laplacian_eigenvalues(grid_small):
    s = analyze(ScalarField(grid_small, np.full((24, 48), 3.0)), 4)
    assert np.max(np.abs(laplacian(s).coeff)) <= 1e-12

    x3 = ScalarField(grid_small, grid_small.xyz[:, :, 2])
    s = analyze(x3, 4)
    lap = synthesize(laplacian(s), grid_small)
    assert np.max(np.abs(lap.values + 2.0 * x3.values)) <= 1e-12

    s53 = unit_spectrum(8, 5, 3)
    assert laplacian(s53)[(5, 3)] == pytest.approx(-30.0)


def test_green_identity(grid_default):
    rng = np.random.default_rng(5)
    L = 12
    f = synthesize(HarmonicSpectrum(L=L, coeff=rng.standard_normal((L + 1) ** 2)),
                   grid_default)
    g = synthesize(HarmonicSpectrum(L=L, coeff=rng.standard_normal((L + 1) ** 2)),
                   grid_default)
    lap_f = synthesize(laplacian(analyze(f, L)), grid_default)
    lap_g = synthesize(laplacian(analyze(g, L)), grid_default)
    lhs = integrate(ScalarField(grid_default, f.values * lap_g.values))
    rhs = integrate(ScalarField(grid_default, g.values * lap_f.values))
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_dirichlet_energy_of_dipole(grid_small):
    # oracle: -int u Lap u with Lap x3 = -2 x3 and int x3^2 = 4 pi / 3
    x3 = ScalarField(grid_small, grid_small.xyz[:, :, 2])
    s = analyze(x3, 4)
    oracle = 2.0 * integrate(ScalarField(grid_small, x3.values ** 2))
    assert dirichlet_energy(s) == pytest.approx(oracle, rel=1e-12)
    assert dirichlet_energy(s) == pytest.approx(8.0 * np.pi / 3.0, rel=1e-12)


def test_dirichlet_energy_properties(grid_default):
    assert dirichlet_energy(HarmonicSpectrum(L=0, coeff=np.array([2.0]))) == 0.0
    rng = np.random.default_rng(9)
    L = 10
    c = rng.standard_normal((L + 1) ** 2)
    s = HarmonicSpectrum(L=L, coeff=c)
    scaled = HarmonicSpectrum(L=L, coeff=3.0 * c)
    assert dirichlet_energy(scaled) == pytest.approx(
        9.0 * dirichlet_energy(s), rel=1e-14)

    # matches -int f Lap f through the quadrature
    f = synthesize(s, grid_default)
    lap = synthesize(laplacian(s), grid_default)
    quad = -integrate(ScalarField(grid_default, f.values * lap.values))
    assert dirichlet_energy(s) == pytest.approx(quad, rel=1e-9)


def test_sobolev_precondition():
    L = 4
    c = np.ones((L + 1) ** 2)
    s = sobolev_precondition(HarmonicSpectrum(L=L, coeff=c))
    assert s[(0, 0)] == pytest.approx(1.0)
    assert s[(1, 0)] == pytest.approx(1.0 / 3.0)
    ld = degrees(L)
    undone = s.coeff * (1.0 + ld * (ld + 1.0))
    assert np.max(np.abs(undone - c)) <= 1e-14


def test_anti_aliasing_bound(grid_small):
    assert max_degree(grid_small) == 22
    with pytest.raises(ResolutionError):
        analyze(ScalarField(grid_small, np.zeros((24, 48))), 23)
    with pytest.raises(ResolutionError):
        synthesize(HarmonicSpectrum(L=23, coeff=np.zeros(576)), grid_small)


def test_evaluate_at_points_matches_synthesize(grid_small):
    rng = np.random.default_rng(13)
    L = 9
    s = HarmonicSpectrum(L=L, coeff=rng.standard_normal((L + 1) ** 2))
    f = synthesize(s, grid_small)
    th, ph = np.meshgrid(grid_small.theta, grid_small.phi, indexing="ij")
    vals = evaluate_at_points(s, th.ravel(), ph.ravel())
    assert np.max(np.abs(vals.reshape(f.values.shape) - f.values)) <= 1e-11
