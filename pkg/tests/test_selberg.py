import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, special

from orbitrace import flatspec as fs
from orbitrace import selberg as sb
from orbitrace.errors import ConditioningError, OrbitraceError

FLAT, HYP = sb.Geometry.FLAT, sb.Geometry.HYPERBOLIC


def mehler(lam, r):
    """Legendre function P_{-1/2+i rho}(cosh r) from its Mehler integral, lam = 1/4 + rho^2."""
    rho = math.sqrt(lam - 0.25)
    if r == 0:
        return 1.0

    # t = r (1 - v^2) removes the endpoint singularity
    def f(v):
        t = r * (1 - v * v)
        gap = math.cosh(r) - math.cosh(t)
        if v == 0:
            return 2 * r / math.sqrt(r * math.sinh(r))
        return math.cos(rho * t) * 2 * r * v / math.sqrt(gap)

    val, _ = integrate.quad(f, 0, 1, limit=400, epsabs=1e-13, epsrel=1e-12)
    return math.sqrt(2) / math.pi * val


# --- transforms --------------------------------------------------------------------


def test_small_eigenvalue_limit_is_ball_area():
    s = np.linspace(0, 4, 41)
    assert np.allclose(sb.selberg_transform(1e-12, s, FLAT), math.pi * s ** 2, atol=1e-8, rtol=0)
    assert np.allclose(sb.selberg_transform(1e-12, s, HYP), 2 * math.pi * (np.cosh(s) - 1), atol=1e-8, rtol=0)
    assert np.allclose(sb.selberg_transform(0.0, s, HYP), 2 * math.pi * (np.cosh(s) - 1), atol=1e-12)


@pytest.mark.parametrize("lam", [0.1, 2.0, 37.5])
def test_hyperbolic_eigenfunction_series_vs_ode(lam):
    r = np.linspace(0, 1.5, 31)
    assert np.allclose(sb.radial_eigenfunction(lam, HYP, r), sb.hyperbolic_radial_series(lam, r, 200),
                       atol=1e-9)


@pytest.mark.parametrize("lam", [0.3, 5.0, 40.0])
def test_hyperbolic_eigenfunction_vs_mehler_integral(lam):
    r = np.array([0.5, 2.0, 4.0, 6.0])
    got = sb.radial_eigenfunction(lam, HYP, r)
    want = [mehler(lam, x) for x in r]
    assert np.allclose(got, want, atol=1e-8)


def test_hyperbolic_eigenfunction_vs_hypergeometric_below_quarter():
    lam = 0.2
    a = (1 + math.sqrt(1 - 4 * lam)) / 2
    r = np.array([1.0, 3.0, 5.0])
    want = special.hyp2f1(a, 1 - a, 1, -np.sinh(r / 2) ** 2)
    assert np.allclose(sb.radial_eigenfunction(lam, HYP, r), want, rtol=1e-8)


@pytest.mark.parametrize("lam", [0.5, 10.0, 300.0])
def test_flat_transform_vs_quadrature(lam):
    for s in (0.3, 1.7, 4.0):
        want, _ = integrate.quad(lambda r: 2 * math.pi * r * special.j0(math.sqrt(lam) * r), 0, s, limit=200)
        assert sb.selberg_transform(lam, s, FLAT) == pytest.approx(want, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("lam", [0.2, 3.0, 25.0])
def test_hyperbolic_transform_vs_quadrature(lam):
    for s in (0.5, 1.6):
        want, _ = integrate.quad(
            lambda r: 2 * math.pi * math.sinh(r) * sb.hyperbolic_radial_series(lam, r, 200), 0, s,
            epsabs=1e-12, epsrel=1e-11)
        assert sb.selberg_transform(lam, s, HYP) == pytest.approx(want, rel=1e-8, abs=1e-10)


def test_transform_rejects_negative_radius():
    with pytest.raises(ValueError):
        sb.selberg_transform(1.0, -0.1, FLAT)


# --- feature closed forms -------------------------------------------------------


def test_rotation_contrib_vs_area_quadrature():
    # area of the disk where d(x, R_theta x) <= s, polar integration in the hyperbolic plane
    for theta in (math.pi / 3, 2.0, math.pi):
        for s in (0.4, 1.5, 3.0):
            # sinh(d/2) = sinh(r) sin(theta/2)
            rmax = math.asinh(math.sinh(s / 2) / math.sin(theta / 2))
            area, _ = integrate.quad(lambda r: 2 * math.pi * math.sinh(r), 0, rmax)
            assert sb.rotation_contrib(theta, s) == pytest.approx(area, rel=1e-10)
            flat_r = s / 2 / math.sin(theta / 2)
            assert sb.rotation_contrib(theta, s, FLAT) == pytest.approx(math.pi * flat_r ** 2)


def test_cone_contrib_flat_weight():
    s = 1.3
    for n in range(2, 10):
        val = sb.cone_contrib(n, 1, s, FLAT)
        assert val == pytest.approx(math.pi / 12 * float(fs.conepoint_weight(n)) * s ** 2, rel=1e-12)


def test_entry_validation():
    with pytest.raises(ValueError):
        sb.GeodesicClassEntry(2.0, "recto", 1.0, 2, False, Fraction(1))
    with pytest.raises(ValueError):
        sb.GeodesicClassEntry.make(1.0, "sideways", 1.0)
    with pytest.raises(ValueError):
        sb.GeodesicClassEntry.make(-1.0, "recto", 1.0)
    e = sb.GeodesicClassEntry.make(3.0, "verso", 1.0, power=3, boundary=True)
    assert e.weight == Fraction(1, 6)


def monte_carlo_strip(ell0, power, verso, s, n, rng):
    """Area of {x in a centralizer strip : d(x, g x) <= s} using explicit boost matrices."""
    ell = ell0 * power
    boost = np.array([[math.cosh(ell), math.sinh(ell), 0], [math.sinh(ell), math.cosh(ell), 0], [0, 0, 1.0]])
    if verso:
        boost = boost @ np.diag([1.0, 1.0, -1.0])
    rho_max = s + 1  # displacement grows at least like 2 rho for distant points
    t = rng.uniform(0, ell0, n)
    rho = rng.uniform(-rho_max, rho_max, n)
    x = np.array([np.cosh(rho) * np.cosh(t), np.cosh(rho) * np.sinh(t), np.sinh(rho)])
    gx = boost @ x
    cd = x[0] * gx[0] - x[1] * gx[1] - x[2] * gx[2]
    d = np.arccosh(np.maximum(cd, 1.0))
    w = np.cosh(rho) * (d <= s)
    box = ell0 * 2 * rho_max
    return box * w.mean(), box * w.std() / math.sqrt(n)


def test_geodesic_laws_vs_monte_carlo():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        ell0 = rng.uniform(0.3, 2.0)
        power = int(rng.integers(1, 3))
        verso = bool(rng.integers(0, 2))
        s = ell0 * power + rng.uniform(0.1, 1.5)
        entry = sb.GeodesicClassEntry.make(ell0 * power, "verso" if verso else "recto", ell0, power)
        mean, err = monte_carlo_strip(ell0, power, verso, s, 200_000, rng)
        want = float(sb.geodesic_contrib(entry, s))
        assert abs(mean - want) < 3 * err + 1e-12, (ell0, power, verso, s, mean, want, err)


def test_geodesic_laws_vanish_below_length():
    s = np.linspace(0, 1.99, 50)
    assert np.all(sb.recto_law(2.0, s) == 0) and np.all(sb.verso_law(2.0, s) == 0)


def test_boundary_class_counts_half():
    a = sb.GeodesicClassEntry.make(1.0, "recto", 1.0)
    b = sb.GeodesicClassEntry.make(1.0, "recto", 1.0, boundary=True)
    assert sb.geodesic_contrib(b, 2.0) == pytest.approx(sb.geodesic_contrib(a, 2.0) / 2)


# --- assembly, readoff, detection ----------------------------------------------------


def test_readoff_round_trip_random_feature_sets():
    rng = np.random.default_rng(0)
    grid = np.linspace(0, 2.5, 501)
    for _ in range(50):
        orders = rng.choice(np.arange(2, 10), size=int(rng.integers(1, 5)), replace=False)
        cp = {int(n): Fraction(int(rng.integers(0, 5)), 2) for n in orders}
        f = sb.OrbifoldFeatureSet(float(rng.uniform(1, 20)), float(rng.uniform(0, 10)), cp)
        r = sb.readoff_features(sb.assemble_trace(f, grid))
        assert abs(r.volume - f.volume) <= 1e-6 * f.volume
        assert r.conepoints == f.conepoints
        assert r.mirror_length == pytest.approx(f.mirror_length, abs=1e-6)


def test_readoff_flat_cone_weight():
    f = sb.OrbifoldFeatureSet.from_signature(0.5, 0.0, cones=[2, 3, 6], geometry=FLAT)
    r = sb.readoff_features(sb.assemble_trace(f, np.linspace(0, 0.5, 101)), FLAT)
    assert r.cone_weight == pytest.approx(10, rel=1e-9)
    assert r.volume == pytest.approx(0.5, rel=1e-9)


def test_readoff_conditioning_error():
    g = np.linspace(0, 2.5, 101)
    c = sb.TraceCurve(g, np.ones_like(g))
    with pytest.raises(ConditioningError) as info:
        sb.readoff_features(c, max_order=9, cond_max=1e6)
    assert info.value.cond > 1e6


def test_det_character_flips_orientation_reversing_terms():
    f = sb.OrbifoldFeatureSet.from_signature(2.0, 3.0, corners=[2, 3])
    d = sb.OrbifoldFeatureSet.from_signature(2.0, 3.0, corners=[2, 3], character="det")
    s = np.linspace(0, 2, 21)
    diff = sb.assemble_trace(f, s).values - sb.assemble_trace(d, s).values
    assert np.allclose(diff, 2 * sb.reflector_contrib(3.0, s))


def test_detector_on_synthetic_curve():
    g = np.arange(0, 3.0 + 1e-9, 0.005)
    v = 1 + 0.4 * g ** 2
    v += np.where(g >= 1.0, 0.7, 0.0)  # jump
    v += np.where(g >= 2.0, 3.0 * (g - 2.0), 0.0)  # bend
    rng = np.random.default_rng(5)
    v += 1e-6 * rng.standard_normal(len(g))
    breaks = sb.detect_breaks(sb.TraceCurve(g, v))
    kinds = {round(b.s, 1): b for b in breaks}
    assert set(kinds) == {1.0, 2.0}
    assert kinds[1.0].kind.startswith("jump") and abs(kinds[1.0].s - 1.0) < 0.01
    assert kinds[2.0].kind == "bend" and kinds[2.0].bend_direction == 1


def test_trace_curve_arithmetic_and_grid_checks():
    a = sb.TraceCurve([0, 1, 2], [1, 2, 3])
    assert np.allclose((a + a).values, [2, 4, 6])
    with pytest.raises(ValueError):
        a - sb.TraceCurve([0, 1, 3], [0, 0, 0])
    with pytest.raises(ValueError):
        sb.TraceCurve([0, 2, 1], [0, 0, 0])


# --- spectral side -----------------------------------------------------------------------


def test_torus_trace_matches_image_count():
    # counting trace of a torus is area times the number of lattice vectors of length <= s
    cat = fs.standard_quotients()
    spec = fs.quotient_spectrum(cat["T1"], 40000)
    grid = np.linspace(0.05, 2.2, 44)
    rec = sb.reconstruct_trace(spec, grid)
    m = np.arange(-3, 4)
    lens = np.hypot(*np.meshgrid(m, m)).ravel()
    exact = np.array([(lens <= s).sum() for s in grid], float)
    off = np.min(np.abs(grid[:, None] - lens[None, :]), axis=1) > 0.08
    assert np.max(np.abs(rec.values - exact)[off]) < 0.1


def test_heat_trace_images_vs_spectrum_square_torus():
    spec = fs.quotient_spectrum(fs.standard_quotients()["T1"], 4000)
    feats = sb.flat_torus_features(fs.SQUARE, 12.0)
    for t in (0.1, 0.3, 1.0):
        assert sb.heat_trace_from_counting(feats, t) == pytest.approx(fs.heat_trace_spectral(spec, t), abs=1e-6)


def test_heat_trace_from_sampled_curve():
    grid = np.linspace(0, 12, 24001)
    curve = sb.assemble_trace(sb.flat_torus_features(fs.SQUARE, 12.0), grid)
    spec = fs.quotient_spectrum(fs.standard_quotients()["T1"], 4000)
    assert sb.heat_trace_from_counting(curve, 0.3) == pytest.approx(fs.heat_trace_spectral(spec, 0.3), rel=1e-3)
    with pytest.raises(OrbitraceError):
        sb.heat_trace_from_counting(sb.TraceCurve(grid[:100], curve.values[:100]), 1.0)


def test_heat_trace_closed_form_for_cone_quotients():
    cat = fs.standard_quotients()
    for name in ("H2", "H3", "H6", "T4"):
        q = cat[name]
        spec = fs.quotient_spectrum(q, 20000)
        f = sb.OrbifoldFeatureSet.from_signature(q.area, 0.0, cones=fs.SIGNATURES[name], geometry=FLAT)
        # small t: geometric expansion without translation terms
        t = 0.004
        assert sb.heat_trace_from_counting(f, t) == pytest.approx(fs.heat_trace_spectral(spec, t, tol=1e-6), rel=1e-6)


def test_integrate_trace_of_constant():
    c = sb.TraceCurve(np.linspace(0, 1, 11), np.full(11, 2.0))
    assert sb.integrate_trace(c).values[-1] == pytest.approx(2.0)


def test_window_validation():
    with pytest.raises(ValueError):
        sb.Window("triangle", 3.0)
    with pytest.raises(ValueError):
        sb.Window("quadratic")
