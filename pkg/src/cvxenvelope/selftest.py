"""Fixture battery run by ``cvxenvelope selftest``.

Each fixture record in ``data/fixtures.json`` names a ``kind``; the matching
function below builds the inputs, runs the library, compares against an
independent expectation and returns ``(passed, metrics, fields)``.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from . import geodesic as geo
from .exprlang import field_from_source
from .field import Axis, ScalarField, c11_seminorm, gradient_fd, lipschitz_seminorm, refine
from .legendre import (
    convexify,
    inf_convolution,
    legendre_brute,
    legendre_classical,
    neg_legendre,
    neg_legendre_back,
)
from .obstacle import (
    RooftopObstacle,
    berman_convexify_1d,
    contact_set,
    solve_penalty,
    solve_psor,
    verify_c11,
    verify_cushion,
    verify_family_laplacian,
    verify_quadratic_growth,
)
from .rooftop import (
    compose_check,
    convex_rooftop_envelope,
    convexity_check,
    partial_min,
    sigma_concavity_check,
    tilted_envelope,
)


class FixtureFileError(ValueError):
    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"bad fixture file {self.path}: {reason}")


def default_fixture_path():
    return resources.files("cvxenvelope") / "data" / "fixtures.json"


def load_fixtures(path=None) -> list:
    path = default_fixture_path() if path is None else Path(path)
    try:
        doc = json.loads(path.read_text())
        fixtures = doc["fixtures"]
        for fx in fixtures:
            if fx["kind"] not in KINDS:
                raise FixtureFileError(path, f"unknown kind {fx['kind']!r} in {fx['name']!r}")
            fx["dim"], fx["name"]
    except FixtureFileError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FixtureFileError(path, f"{type(exc).__name__}: {exc}") from None
    return fixtures


def _ax(bounds) -> Axis:
    return Axis(*bounds)


def _f(src, axes, **kw):
    return field_from_source(src, axes, **kw)


def _sup(a, b) -> float:
    a = a.values if isinstance(a, ScalarField) else a
    b = b.values if isinstance(b, ScalarField) else b
    return float(np.abs(a - b).max())


# field


def gradient_abs(fx):
    ax = _ax(fx["axis"])
    x = ax.nodes()
    (g,) = gradient_fd(_f("abs(x)", [ax]))
    expected = np.sign(x)
    mid = int(np.argmin(np.abs(x)))
    err = float(np.abs(g[1:-1] - expected[1:-1]).max())
    return err <= 1e-12 and g[mid] == 0.0, {"max_error": err}, {}


def lipschitz_square(fx):
    ax = _ax(fx["axis"])
    lip = lipschitz_seminorm(_f("x^2", [ax]))
    expected = 2 - ax.h
    return abs(lip - expected) <= 1e-12, {"lipschitz": lip, "expected": expected}, {}


def c11_abs_kink(fx):
    ax = _ax(fx["axis"])
    c = c11_seminorm(_f("abs(x)", [ax]))
    expected = 2 / ax.h
    return abs(c - expected) <= 1e-9 * expected, {"c11": c, "expected": expected}, {}


def refine_square(fx):
    r = refine(_f("x^2", [Axis(-1, 1, 3)]))
    ok = r.axes[0].n == 5 and np.array_equal(r.values, [1.0, 0.5, 0.0, 0.5, 1.0])
    return ok, {"values": list(r.values)}, {"refined": r}


# legendre


def legendre_abs(fx):
    ax, dual = _ax(fx["axis"]), _ax(fx["dual"])
    L = legendre_classical(_f("abs(x)", [ax]), dual)
    y = dual.nodes()
    err = _sup(L, np.maximum(0.0, np.abs(y) - 1))
    return err <= 1e-12, {"max_error": err}, {"conjugate": L}


def neg_legendre_affine(fx):
    ax, dual = _ax(fx["axis"]), _ax(fx["dual"])
    a, b = fx["a"], fx["b"]
    g = neg_legendre(_f(f"{a}*x+({b})", [ax]), dual)
    err = _sup(g, b + np.minimum(0.0, a - dual.nodes()))
    return err <= 1e-12, {"max_error": err}, {"conjugate": g}


def neg_legendre_const(fx):
    ax, dual = _ax(fx["axis"]), _ax(fx["dual"])
    c = fx["c"]
    g = neg_legendre(_f(str(c), [ax]), dual)
    sig = dual.nodes()
    err = _sup(g, c - np.maximum(sig * ax.max, sig * ax.min))
    return err <= 1e-12, {"max_error": err}, {"conjugate": g}


def neg_legendre_back_const(fx):
    ax, sig_ax = _ax(fx["axis"]), _ax(fx["sigma"])
    c = fx["c"]
    back = neg_legendre_back(ScalarField([sig_ax], np.full(sig_ax.n, c)), ax)
    s = ax.nodes()
    err = _sup(back, c + np.maximum(sig_ax.max * s, sig_ax.min * s))
    return err <= 1e-12, {"max_error": err}, {"back": back}


def roundtrip_quartic(fx):
    ax = _ax(fx["axis"])
    f = _f("x^4", [ax])
    dual = Axis(-5, 5, ax.n)
    back = neg_legendre_back(neg_legendre(f, dual), ax)
    err = _sup(back, f)
    bound = 2 * dual.h * ax.length
    brute = np.max(dual.nodes()[None, :] * ax.nodes()[:, None]
                   - legendre_brute(f, dual).values[None, :], axis=1)
    return err <= bound and _sup(back, brute) == 0.0, {"error": err, "bound": bound}, {"roundtrip": back}


def convexify_two_wells(fx):
    ax = _ax(fx["axis"])
    x = ax.nodes()
    hull = convexify(_f("min(x^2,(x-2)^2)", [ax]))
    expected = np.where(x <= 0, x**2, np.where(x >= 2, (x - 2) ** 2, 0.0))
    err = _sup(hull, expected)
    at1 = float(hull.values[np.argmin(np.abs(x - 1))])
    return err <= 1e-12 and at1 == 0.0, {"max_error": err, "value_at_1": at1}, {"hull": hull}


def convexify_abs_wells(fx):
    ax = _ax(fx["axis"])
    hull = convexify(_f("min(abs(x+1),abs(x-1))", [ax]))
    err = _sup(hull, np.maximum(np.abs(ax.nodes()) - 1, 0.0))
    return err <= 1e-12, {"max_error": err}, {"hull": hull}


def infconv_parabolas(fx):
    ax = _ax(fx["axis"])
    p0, p1 = _f("x^2", [ax]), _f("(x-1)^2", [ax])
    x = ax.nodes()
    worst, fields = 0.0, {}
    for s in fx["s"]:
        r = inf_convolution(p0, p1, s)
        inside = (x - s >= ax.min) & (x - s + 1 <= ax.max)
        worst = max(worst, float(np.abs(r.values - (x - s) ** 2)[inside].max()))
        fields[f"s{s}"] = r
    tol = ax.h**2
    return worst <= tol, {"max_error": worst, "tolerance": tol}, fields


# rooftop


def envelope_two_wells(fx):
    ax = _ax(fx["axis"])
    x = ax.nodes()
    env = convex_rooftop_envelope([_f("x^2", [ax]), _f("(x-2)^2", [ax])])
    expected = np.where(x <= 0, x**2, np.where(x >= 2, (x - 2) ** 2, 0.0))
    err = _sup(env, expected)
    return err <= 1e-12, {"max_error": err}, {"envelope": env}


def tilted_thresholds(fx):
    ax = _ax(fx["axis"])
    p0 = _f("min(x^2,(x-1)^2+0.1)", [ax])
    p1 = _f("abs(x)+0.3*x^2", [ax])
    d = p1.values - p0.values
    lo, hi = float(d.min()), float(d.max())
    low = tilted_envelope(p0, p1, lo - 0.5)
    high = tilted_envelope(p0, p1, hi + 0.5)
    e_lo = _sup(low, convexify(p0))
    e_hi = _sup(high, convexify(p1).values - (hi + 0.5))
    return max(e_lo, e_hi) <= 1e-12, {"low_error": e_lo, "high_error": e_hi,
                                       "threshold_low": lo, "threshold_high": hi}, {}


def tilted_parabolas(fx):
    ax = _ax(fx["axis"])
    x = ax.nodes()
    env = tilted_envelope(_f("x^2", [ax]), _f("(x-1)^2", [ax]), 0.0)
    expected = np.where(x <= 0, x**2, np.where(x >= 1, (x - 1) ** 2, 0.0))
    err = _sup(env, expected)
    return err <= 1e-12, {"max_error": err}, {"envelope": env}


def compose_three(fx):
    ax = _ax(fx["axis"])
    fam = [_f(e, [ax]) for e in ("x^2", "(x-1)^2", "(x+1)^2")]
    r = compose_check(fam, tol=1e-9)
    perm = convex_rooftop_envelope(fam[::-1])
    same = _sup(perm, convex_rooftop_envelope(fam))
    return r.passed and same == 0.0, {"deviation": r.worst_violation, "permutation": same}, {}


def partial_min_shift(fx):
    # dyadic spacing keeps every sample exact
    s_ax, x_ax = Axis(0, 1, 9), Axis(-1, 2, 25)
    psi = _f("(x-s)^2", [s_ax, x_ax], variables=("s", "x"))
    m = partial_min(psi)
    x = x_ax.nodes()
    expected = np.where(x < 0, x**2, np.where(x > 1, (x - 1) ** 2, 0.0))
    err = _sup(m, expected)
    conv = convexity_check(m, tol=0.0)
    return err == 0.0 and conv.passed, {"max_error": err}, {"partial_min": m}


def partial_min_bilinear(fx):
    s_ax, x_ax = Axis(0, 1, 9), Axis(-1, 1, 17)
    m = partial_min(_f("-s*x", [s_ax, x_ax], variables=("s", "x")))
    err = _sup(m, -np.maximum(x_ax.nodes(), 0.0))
    conv = convexity_check(m, tol=0.0)
    return err == 0.0 and not conv.passed, {"max_error": err, "violation": conv.worst_violation}, {}


def sigma_concavity_parabolas(fx):
    ax, sig = _ax(fx["axis"]), _ax(fx["sigma"])
    probe = int(np.argmin(np.abs(ax.nodes() - 0.5)))
    r = sigma_concavity_check(_f("x^2", [ax]), _f("(x-1)^2", [ax]), sig, probe, tol=ax.h**2)
    return r.passed, {"worst": r.worst_violation}, {}


def random_lipschitz(rng, ax: Axis, lip: float) -> ScalarField:
    steps = rng.uniform(-lip, lip, ax.n - 1) * ax.h
    return ScalarField([ax], np.concatenate([[0.0], np.cumsum(steps)]))


def sigma_concavity_random(fx):
    rng = np.random.default_rng(fx["seed"])
    ax = Axis(-1, 1, 101)
    worst = 0.0
    ok = True
    for _ in range(fx["count"]):
        p0, p1 = random_lipschitz(rng, ax, 2.0), random_lipschitz(rng, ax, 2.0)
        probe = int(rng.integers(0, ax.n))
        r = sigma_concavity_check(p0, p1, Axis(-3, 3, 121), probe, tol=1e-9)
        ok &= r.passed
        worst = max(worst, r.worst_violation)
    return ok, {"worst": worst}, {}


# obstacle


def _rooftop_1d(fx):
    axes = [_ax(fx["axis"])]
    return RooftopObstacle(_f("x^2", axes), _f("(x-1)^2", axes))


def psor_1d_rooftop(fx):
    obs = _rooftop_1d(fx)
    tol = fx["tol"]
    sol = solve_psor(obs, tol=tol)
    x = obs.axes[0].nodes()
    mid = float(sol.u.values[np.argmin(np.abs(x - 0.5))])
    err = _sup(sol.u, convexify(obs.g))
    ok = abs(mid) <= 10 * tol and err <= 10 * tol and sol.residual_complementarity <= tol
    return ok, {"u_mid": mid, "hull_error": err, **sol.report()}, {"u": sol.u}


def contact_1d_rooftop(fx):
    obs = _rooftop_1d(fx)
    sol = solve_psor(obs, tol=fx["tol"])
    lam = contact_set(sol, obs, 10 * fx["tol"])
    x = obs.axes[0].nodes()
    h = obs.axes[0].h
    expected = (x <= 0) | (x >= 1)
    ambiguous = (np.abs(x) <= h * 1.01) | (np.abs(x - 1) <= h * 1.01)
    mismatch = int(np.sum((lam != expected) & ~ambiguous))
    everything = contact_set(sol, obs, np.inf).all()
    return mismatch == 0 and everything, {"mismatched_nodes": mismatch}, {}


def penalty_vs_psor_1d(fx):
    axes = [_ax(fx["axis"])]
    obs = RooftopObstacle(_f("x^2", axes), _f("x^2+0.5", axes))
    u_p = solve_psor(obs, tol=1e-10)
    u_b = solve_penalty(obs, beta=1e4)
    d = _sup(u_p.u, u_b.u)
    bound = 1e-3 * (1 + float(np.abs(obs.g.values).max()))
    aff = RooftopObstacle(_f("0.3*x+1", axes), _f("0.3*x+2", axes))
    err_aff = _sup(solve_penalty(aff, beta=1e4).u, aff.g)
    return d <= bound and err_aff <= 1e-12, {"difference": d, "bound": bound, "affine_error": err_aff}, {}


def penalty_overshoot_rate(fx):
    axes = [_ax(fx["axis"])]
    obs = RooftopObstacle(_f("x^2", axes), _f("(x-0.5)^2+0.1", axes))
    over = []
    for beta in (1e3, 2e3, 4e3):
        u = solve_penalty(obs, beta=beta).u
        over.append(float(np.maximum(u.values - obs.g.values, 0).max()))
    ratios = [over[i] / over[i + 1] for i in range(2)]
    ok = all(1.6 <= r <= 2.4 for r in ratios)
    return ok, {"overshoot": over, "ratios": ratios}, {}


def berman_square_rate(fx):
    v = _f("x^2", [_ax(fx["axis"])])
    errs, ratios = [], []
    lip_ok = True
    for beta in (1e2, 1e3, 1e4):
        e1 = _sup(berman_convexify_1d(v, beta), v)
        u2 = berman_convexify_1d(v, 2 * beta)
        e2 = _sup(u2, v)
        errs.append(e1)
        ratios.append(e1 / e2)
        lip_ok &= lipschitz_seminorm(u2) <= lipschitz_seminorm(v) + 1
    ok = all(1.6 <= r <= 2.4 for r in ratios) and lip_ok
    return ok, {"errors": errs, "ratios": ratios, "beta_times_error": [e * b for e, b in zip(errs, (1e2, 1e3, 1e4))]}, {}


def berman_rooftop(fx):
    v = _f("min(x^2,(x-1)^2)", [_ax(fx["axis"])])
    hull = convexify(v)
    errs, lips = [], []
    for beta in (10, 100, 1000):
        u = berman_convexify_1d(v, beta)
        errs.append(_sup(u, hull))
        lips.append(lipschitz_seminorm(u))
    ok = errs[0] > errs[1] > errs[2] and max(lips) <= lipschitz_seminorm(v) + 1
    return ok, {"errors": errs, "lipschitz": lips}, {}


def _obstacle_problem(fx):
    axes = [_ax(a) for a in fx["axes"]]

    def resample(ax):
        return RooftopObstacle(_f(fx["b0"], ax), _f(fx["b1"], ax))

    return resample(axes), resample


def cushion(fx):
    obs, resample = _obstacle_problem(fx)
    sol = solve_psor(obs, tol=fx["tol"])
    r = verify_cushion(sol, obs, resample=resample)
    ok = r.passed
    if fx["dim"] == 1:
        ok &= abs(r.details["c_emp"] - 0.25) <= obs.axes[0].h
    return ok, r.to_dict(), {"u": sol.u}


def quadratic(fx):
    obs, resample = _obstacle_problem(fx)
    sol = solve_psor(obs, tol=fx["tol"])
    r = verify_quadratic_growth(sol, obs, resample=resample)
    ok = r.passed
    if fx["dim"] == 1:
        ok &= abs(r.details["max_Q"] - 1.0) <= 0.1
    return ok, r.to_dict(), {}


def c11(fx):
    obs, resample = _obstacle_problem(fx)
    sol = solve_psor(obs, tol=fx["tol"])
    r = verify_c11(sol, obs, resample=resample)
    ok = r.passed
    if fx["dim"] == 1:
        ok &= abs(r.details["c11"] - 2.0) <= 0.2
    return ok, r.to_dict(), {}


def family_dense_shifts(fx):
    ax = _ax(fx["axis"])
    shifts = np.linspace(-1, 1, fx["members"])
    members = [_f(f"(x-({float(a)!r}))^2+({float(a)!r})^2", [ax]) for a in shifts]
    r = verify_family_laplacian(members, B=2.0)
    vmin = np.minimum.reduce([m.values for m in members])
    close = _sup(vmin, ax.nodes() ** 2 / 2)
    return r.passed and r.status == "pass" and close <= 2 * (shifts[1] - shifts[0]) ** 2, {
        **r.to_dict(), "distance_to_half_square": close}, {}


def family_crossing(fx):
    ax = _ax(fx["axis"])
    shifted = verify_family_laplacian([_f(f"x^2+{a}", [ax]) for a in (0, 0.25, 0.5, 0.75, 1)], B=2.0)
    crossing = verify_family_laplacian([_f("x^2", [ax]), _f("-x^2+1", [ax])], B=2.0)
    ok = shifted.status == "pass" and crossing.status == "hypothesis not met"
    return ok, {"shifted": shifted.status, "crossing": crossing.status}, {}


# geodesic


def _parabola_endpoints(fx):
    ax = _ax(fx["axis"])
    return _f("x^2", [ax]), _f("(x-1)^2", [ax]), ax


def closed_form_mask(s: np.ndarray, x: np.ndarray, ax: Axis) -> np.ndarray:
    """Where both closed-form minimizers x - s and x - s + 1 lie in the window."""
    return (x - s >= ax.min) & (x - s + 1 <= ax.max)


def _closed_form_error(g, ax):
    S, X = np.meshgrid(g.s_axis.nodes(), ax.nodes(), indexing="ij")
    mask = closed_form_mask(S, X, ax)
    return float(np.abs(g.values.values - (X - S) ** 2)[mask].max())


def geodesic_parabolas(fx):
    p0, p1, ax = _parabola_endpoints(fx)
    s_ax = Axis(0, 1, fx["s_n"])
    if fx["method"] == "semmes":
        g, h_sig = geo.geodesic_semmes(p0, p1, s_ax), 0.0
    elif fx["method"] == "infconv":
        g, h_sig = geo.geodesic_infconv(p0, p1, s_ax), 0.0
    else:
        sig = geo.default_sigma_axis(p0, p1, fx["sigma_n"])
        g, h_sig = geo.geodesic_rooftop(p0, p1, s_ax, sig), sig.h
    err = _closed_form_error(g, ax)
    tol = 5 * (ax.h + h_sig)
    return err <= tol, {"closed_form_error": err, "tolerance": tol}, {"psi": g.values}


def dual_parabola_probe(fx):
    p0, p1, ax = _parabola_endpoints(fx)
    g = geo.geodesic_infconv(p0, p1, Axis(0, 1, fx["s_n"]))
    dual = geo.bremermann_dual(g, Axis(-1, 1, 3))
    probe = float(dual.values[1, int(np.argmin(np.abs(ax.nodes() - 0.5)))])
    return abs(probe) <= ax.h**2, {"dual_at_0_0.5": probe}, {}


def dual_identity_parabolas(fx):
    p0, p1, ax = _parabola_endpoints(fx)
    sig = geo.default_sigma_axis(p0, p1, fx["sigma_n"])
    g = geo.geodesic_semmes(p0, p1, Axis(0, 1, fx["s_n"]))
    err = geo.dual_identity_error(g, p0, p1, sig)
    conc, conv = geo.dual_shape_violations(geo.bremermann_dual(g, sig))
    tol = 5 * (ax.h + sig.h)
    # a sup perturbation e moves a three-point stencil by at most 4e
    return err <= tol and conc <= 1e-9 and conv <= 4 * err + 1e-12, {
        "identity_error": err, "tolerance": tol, "concavity": conc, "convexity": conv}, {}


def sandwich_parabolas(fx):
    p0, p1, ax = _parabola_endpoints(fx)
    g = geo.geodesic_infconv(p0, p1, Axis(0, 1, fx["s_n"]))
    r = geo.sandwich_bounds(p0, p1, g)
    S, X = np.meshgrid(g.s_axis.nodes(), ax.nodes(), indexing="ij")
    chord = (1 - S) * p0.values + S * p1.values
    mask = closed_form_mask(S, X, ax)
    gap_err = float(np.abs((chord - g.values.values) - S * (1 - S))[mask].max())
    A = r.details["A"]
    lower = np.maximum(p0.values - A * S, p1.values - A * (1 - S))
    strict = bool(np.all((g.values.values - lower)[1:-1, 1:-1] > 0))
    return r.passed and gap_err <= ax.h**2 and strict, {**r.to_dict(), "chord_gap_error": gap_err}, {}


def ma_chord_control(fx):
    ax = _ax(fx["axis"])
    s_ax = Axis(0, 1, fx["s_n"])
    exact = _f("(x-s)^2", [s_ax, ax], variables=("s", "x"))
    chord = _f("(1-s)*x^2+s*(x-1)^2", [s_ax, ax], variables=("s", "x"))
    det_exact = geo.ma_residual(geo.GeodesicSolution(s_ax, ax, exact, "closed_form"))
    det_chord = geo.ma_residual(geo.GeodesicSolution(s_ax, ax, chord, "chord"))
    e0 = float(np.abs(det_exact.values).max())
    e1 = float(np.abs(det_chord.values + 4).max())
    return e0 <= 1e-8 and e1 <= 1e-8, {"geodesic_det": e0, "chord_det_error": e1}, {}


def fiberwise_parabolas(fx):
    p0, p1, ax = _parabola_endpoints(fx)
    g = geo.geodesic_semmes(p0, p1, Axis(0, 1, fx["s_n"]))
    r = geo.fiberwise_lipschitz_check(g, p0, p1)
    shifted = geo.geodesic_infconv(p0, p0 + 0.7, Axis(0, 1, fx["s_n"]))
    lips = [lipschitz_seminorm(shifted.slice(k)) for k in range(shifted.s_axis.n)]
    spread = max(abs(v - lipschitz_seminorm(p0)) for v in lips)
    return r.passed and spread <= 1e-9, {**r.to_dict(), "shifted_spread": spread}, {}


def psor_vs_penalty_2d(fx):
    obs, _ = _obstacle_problem(fx)
    tol = fx["tol"]
    u_p = solve_psor(obs, tol=tol)
    u_b = solve_penalty(obs, beta=fx["beta"])
    d = _sup(u_p.u, u_b.u)
    bound = 1e-3 * (1 + float(np.abs(obs.g.values).max()))
    ok = d <= bound and u_p.residual_complementarity <= tol
    return ok, {"difference": d, "bound": bound, **u_p.report()}, {"u": u_p.u}


KINDS = {
    fn.__name__: fn
    for fn in (
        gradient_abs, lipschitz_square, c11_abs_kink, refine_square, legendre_abs,
        neg_legendre_affine, neg_legendre_const, neg_legendre_back_const, roundtrip_quartic,
        convexify_two_wells, convexify_abs_wells, infconv_parabolas, envelope_two_wells,
        tilted_thresholds, tilted_parabolas, compose_three, partial_min_shift,
        partial_min_bilinear, sigma_concavity_parabolas, sigma_concavity_random,
        psor_1d_rooftop, contact_1d_rooftop, penalty_vs_psor_1d, penalty_overshoot_rate,
        berman_square_rate, berman_rooftop, cushion, quadratic, c11, family_dense_shifts,
        family_crossing, geodesic_parabolas, dual_parabola_probe, dual_identity_parabolas,
        sandwich_parabolas, ma_chord_control, fiberwise_parabolas, psor_vs_penalty_2d,
    )
}


def run_fixture(fx) -> tuple:
    passed, metrics, fields = KINDS[fx["kind"]](fx)
    return bool(passed), metrics, fields


def run_battery(fixtures, quick: bool = False, output_dir=None):
    """Run every fixture (1D only when ``quick``); returns a list of result dicts."""
    from .field import write_field

    results = []
    for fx in fixtures:
        if quick and fx["dim"] != 1:
            continue
        try:
            passed, metrics, fields = run_fixture(fx)
        except Exception as exc:  # a crashing fixture is a failing fixture
            passed, metrics, fields = False, {"error": f"{type(exc).__name__}: {exc}"}, {}
        if output_dir is not None:
            for key, f in sorted(fields.items()):
                write_field(Path(output_dir) / f"{fx['name']}.{key}.json", f)
        results.append({"name": fx["name"], "pass": passed, "metrics": metrics})
    return results
