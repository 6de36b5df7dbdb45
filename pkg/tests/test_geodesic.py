import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvxenvelope import geodesic as geo
from cvxenvelope.exprlang import field_from_source
from cvxenvelope.field import Axis, FieldError, ScalarField, lipschitz_seminorm
from cvxenvelope.rooftop import tilted_envelopes
from cvxenvelope.selftest import closed_form_mask

X = Axis(-2, 3, 256)
S = Axis(0, 1, 33)


def F(src, *axes, **kw):
    return field_from_source(src, list(axes), **kw)


@pytest.fixture(scope="module")
def parabolas():
    p0, p1 = F("x^2", X), F("(x-1)^2", X)
    sig = geo.default_sigma_axis(p0, p1, 257)
    sols = {
        "semmes": geo.geodesic_semmes(p0, p1, S),
        "infconv": geo.geodesic_infconv(p0, p1, S),
        "rooftop": geo.geodesic_rooftop(p0, p1, S, sig),
    }
    return p0, p1, sig, sols


BUILDERS = {"semmes": geo.geodesic_semmes, "infconv": geo.geodesic_infconv, "rooftop": geo.geodesic_rooftop}


def route_tolerance(g, psi0, psi1):
    """A priori discretization bound of each route."""
    if g.method == "semmes":
        lip = max(lipschitz_seminorm(psi0), lipschitz_seminorm(psi1))
        h_dual = 2 * (lip + 1) / (g.x_axis.n - 1)
        return 2 * h_dual * g.x_axis.length
    if g.method == "rooftop":
        return g.sigma_axis.h / 2 + 1e-12
    return 1e-12


def closed_form_error(g):
    Sg, Xg = np.meshgrid(g.s_axis.nodes(), g.x_axis.nodes(), indexing="ij")
    mask = closed_form_mask(Sg, Xg, g.x_axis)
    return float(np.abs(g.values.values - (Xg - Sg) ** 2)[mask].max())


class TestRoutes:
    @pytest.mark.parametrize("method", ["semmes", "infconv", "rooftop"])
    def test_closed_form(self, parabolas, method):
        _, _, sig, sols = parabolas
        h_sig = sig.h if method == "rooftop" else 0.0
        assert closed_form_error(sols[method]) <= 5 * (X.h + h_sig)

    def test_pairwise_agreement(self, parabolas):
        _, _, sig, sols = parabolas
        diffs = geo.pairwise_sup(list(sols.values()))
        assert set(diffs) == {"semmes-infconv", "semmes-rooftop", "infconv-rooftop"}
        assert max(diffs.values()) <= 5 * (X.h + sig.h)

    @pytest.mark.parametrize("build", ["semmes", "infconv", "rooftop"])
    def test_constant_geodesic(self, build):
        p = F("x^2", X)
        g = BUILDERS[build](p, p, S)
        assert np.abs(g.values.values - p.values[None, :]).max() <= route_tolerance(g, p, p)

    @pytest.mark.parametrize("build", ["semmes", "infconv", "rooftop"])
    def test_constant_shift_moves_linearly(self, build):
        p0, p1 = F("x^2", X), F("x^2+0.75", X)
        g = BUILDERS[build](p0, p1, S)
        expected = p0.values[None, :] + 0.75 * S.nodes()[:, None]
        assert np.abs(g.values.values - expected).max() <= route_tolerance(g, p0, p1)

    def test_constant_shift_exact_when_sigma_on_grid(self):
        p0, p1 = F("x^2", X), F("x^2+0.75", X)
        g = geo.geodesic_rooftop(p0, p1, S, Axis(-0.25, 1.75, 9))  # 0.75 is a node
        expected = p0.values[None, :] + 0.75 * S.nodes()[:, None]
        assert np.abs(g.values.values - expected).max() <= 1e-12

    def test_infconv_endpoints_exact(self, parabolas):
        p0, p1, _, sols = parabolas
        g = sols["infconv"]
        assert np.array_equal(g.values.values[0], p0.values)
        assert np.array_equal(g.values.values[-1], p1.values)

    def test_other_endpoints_within_involution(self, parabolas):
        p0, p1, _, sols = parabolas
        for m in ("semmes", "rooftop"):
            assert sols[m].endpoint_error(p0, p1) <= 2 * X.h * X.length

    def test_s_convexity(self, parabolas):
        _, _, _, sols = parabolas
        for g in sols.values():
            assert g.s_convexity_violation() <= 1e-9

    def test_joint_convexity(self, parabolas):
        _, _, _, sols = parabolas
        assert sols["infconv"].joint_convexity_violation() <= 1e-9
        assert sols["semmes"].joint_convexity_violation() <= 1e-9

    def test_semmes_warns_on_nonconvex(self):
        p0 = F("min(x^2,(x-1)^2)", X)
        with pytest.warns(UserWarning, match="psi0"):
            geo.geodesic_semmes(p0, F("x^2", X), S)

    def test_s_axis_must_span_unit_interval(self):
        with pytest.raises(FieldError):
            geo.geodesic_infconv(F("x", X), F("x", X), Axis(0, 2, 5))

    def test_sigma_window_checked(self):
        p0, p1 = F("x^2", X), F("(x-1)^2", X)
        with pytest.raises(geo.SigmaWindowError) as ei:
            geo.geodesic_rooftop(p0, p1, S, Axis(-1, 1, 21))
        lo, hi = ei.value.required
        assert lo == pytest.approx(-6.0) and hi == pytest.approx(6.0)
        assert "[-6, 6]" in str(ei.value)

    def test_required_window(self):
        p0, p1 = F("x^2", X), F("(x-1)^2", X)
        assert geo.required_sigma_window(p0, p1) == pytest.approx((-6.0, 6.0))
        p = F("x^2", X)
        assert (geo.default_sigma_axis(p, p).min, geo.default_sigma_axis(p, p).max) == (-1.0, 1.0)

    def test_rooftop_equal_endpoints_small_window(self):
        p = F("x^2", X)
        g = geo.geodesic_rooftop(p, p, S, Axis(-1, 1, 21))
        assert np.abs(g.values.values - p.values[None, :]).max() <= 1e-12


class TestDual:
    def test_constant_geodesic_dual(self):
        gvals = ScalarField([S, X], np.full((S.n, X.n), 1.5))
        g = geo.GeodesicSolution(S, X, gvals, "const")
        sig = Axis(-2, 2, 17)
        d = geo.bremermann_dual(g, sig)
        expected = 1.5 - np.maximum(sig.nodes(), 0)[:, None]
        assert np.abs(d.values - expected).max() <= 1e-14

    def test_probe_at_half(self, parabolas):
        _, _, _, sols = parabolas
        x = X.nodes()
        a = Axis(-2, 3, 251)  # contains 0.5 as a node
        p0, p1 = F("x^2", a), F("(x-1)^2", a)
        g = geo.geodesic_infconv(p0, p1, S)
        d = geo.bremermann_dual(g, Axis(-1, 1, 3))
        assert abs(d.values[1, 125]) <= a.h**2
        assert x is not None

    def test_identity_on_parabolas(self, parabolas):
        p0, p1, sig, sols = parabolas
        err = geo.dual_identity_error(sols["semmes"], p0, p1, sig)
        assert err <= 5 * (X.h + sig.h)

    def test_shapes(self, parabolas):
        p0, p1, sig, sols = parabolas
        dual = geo.bremermann_dual(sols["infconv"], sig)
        conc, conv = geo.dual_shape_violations(dual)
        assert conc <= 1e-9
        env = tilted_envelopes(p0, p1, sig.nodes())
        assert np.abs(dual.values - env).max() <= 5 * (X.h + sig.h)
        assert conv <= 4 * np.abs(dual.values - env).max() + 1e-12


class TestSandwich:
    def test_equal_endpoints_tight(self):
        p = F("x^2", X)
        r = geo.sandwich_bounds(p, p, geo.geodesic_infconv(p, p, S))
        assert r.passed and r.details["A"] == 0.0 and r.worst_violation <= 1e-14

    def test_parabola_gap(self, parabolas):
        p0, p1, _, sols = parabolas
        g = sols["infconv"]
        r = geo.sandwich_bounds(p0, p1, g)
        assert r.passed
        Sg, Xg = np.meshgrid(S.nodes(), X.nodes(), indexing="ij")
        chord = (1 - Sg) * p0.values + Sg * p1.values
        mask = closed_form_mask(Sg, Xg, X)
        assert np.abs((chord - g.values.values) - Sg * (1 - Sg))[mask].max() <= X.h**2
        lower = np.maximum(p0.values - 5 * Sg, p1.values - 5 * (1 - Sg))
        assert np.all((g.values.values - lower)[1:-1, 1:-1] > 0)

    def test_all_routes(self, parabolas):
        p0, p1, _, sols = parabolas
        for g in sols.values():
            assert geo.sandwich_bounds(p0, p1, g).passed

    def test_detects_violation(self, parabolas):
        p0, p1, _, sols = parabolas
        g = sols["infconv"]
        v = g.values.values.copy()
        v[1:-1] += 1.0
        bumped = geo.GeodesicSolution(S, X, g.values.with_values(v), "bumped")
        r = geo.sandwich_bounds(p0, p1, bumped)
        assert not r.passed and r.details["upper_violation"] > 0.5


class TestMA:
    def test_translated_square(self):
        vals = F("(x-s)^2", S, X, variables=("s", "x"))
        det = geo.ma_residual(geo.GeodesicSolution(S, X, vals, "exact"))
        assert np.abs(det.values).max() <= 1e-8

    def test_constant(self):
        vals = ScalarField([S, X], np.full((S.n, X.n), 3.0))
        assert np.abs(geo.ma_residual(geo.GeodesicSolution(S, X, vals, "c")).values).max() == 0.0

    def test_chord_negative_control(self):
        vals = F("(1-s)*x^2+s*(x-1)^2", S, X, variables=("s", "x"))
        det = geo.ma_residual(geo.GeodesicSolution(S, X, vals, "chord"))
        np.testing.assert_allclose(det.values, -4.0, atol=1e-8)

    def test_interior_axes(self):
        vals = ScalarField([S, X], np.zeros((S.n, X.n)))
        det = geo.ma_residual(geo.GeodesicSolution(S, X, vals, "z"))
        assert det.shape == (S.n - 2, X.n - 2)


class TestFiberwise:
    def test_parabolas(self, parabolas):
        p0, p1, _, sols = parabolas
        for g in sols.values():
            assert geo.fiberwise_lipschitz_check(g, p0, p1).passed

    def test_constant(self):
        p = ScalarField([X], np.zeros(X.n))
        r = geo.fiberwise_lipschitz_check(geo.geodesic_infconv(p, p, S), p, p)
        assert r.details["max_slice_lipschitz"] == 0.0

    def test_shifted_equal_lipschitz(self):
        p0 = F("x^2", X)
        g = geo.geodesic_infconv(p0, p0 + 0.7, S)
        lip = lipschitz_seminorm(p0)
        for k in range(S.n):
            assert lipschitz_seminorm(g.slice(k)) == pytest.approx(lip, abs=1e-9)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_random_convex_endpoints_routes_agree(seed):
    rng = np.random.default_rng(seed)
    ax = Axis(-1, 1, 65)
    s_ax = Axis(0, 1, 9)
    p0 = ScalarField([ax], np.concatenate([[0.0], np.cumsum(np.sort(rng.uniform(-2, 2, 64)) * ax.h)]))
    p1 = ScalarField([ax], rng.uniform(-1, 1) + np.concatenate([[0.0], np.cumsum(np.sort(rng.uniform(-2, 2, 64)) * ax.h)]))
    sig = geo.default_sigma_axis(p0, p1, 129)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = geo.geodesic_semmes(p0, p1, s_ax)
    b = geo.geodesic_infconv(p0, p1, s_ax)
    c = geo.geodesic_rooftop(p0, p1, s_ax, sig)
    assert max(geo.pairwise_sup([a, b, c]).values()) <= 5 * (ax.h + sig.h)
    assert geo.dual_identity_error(b, p0, p1, sig) <= 5 * (ax.h + sig.h)
    for g in (a, b, c):
        assert geo.sandwich_bounds(p0, p1, g).passed
        assert geo.fiberwise_lipschitz_check(g, p0, p1).passed
