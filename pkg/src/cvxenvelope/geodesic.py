"""Geodesics of the homogeneous real Monge-Ampere equation on [0, 1] x X.

Three constructions of the same object are provided:

* ``semmes``: conjugate both endpoints, blend affinely in the dual, conjugate back;
* ``infconv``: the infimal convolution of the endpoints, slice by slice in s;
* ``rooftop``: the sup over sigma of ``min{psi0, psi1 - sigma}** + s*sigma``.

All three act on the sampled window, so they agree with each other up to
discretization, and with closed forms only where the closed-form minimizers
stay inside the window.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .field import Axis, FieldError, ScalarField, convexity_violation, lipschitz_seminorm
from .legendre import inf_convolution, legendre_classical
from .reports import Report
from .rooftop import tilted_envelopes


class SigmaWindowError(ValueError):
    def __init__(self, required: tuple, given: tuple):
        self.required = required
        super().__init__(
            f"sigma window [{given[0]:g}, {given[1]:g}] too small; "
            f"need at least [{required[0]:g}, {required[1]:g}]"
        )


@dataclass(frozen=True)
class GeodesicSolution:
    s_axis: Axis
    x_axis: Axis
    values: ScalarField
    method: str
    sigma_axis: Optional[Axis] = None

    def slice(self, k: int) -> ScalarField:
        return ScalarField([self.x_axis], self.values.values[k])

    def endpoint_error(self, psi0: ScalarField, psi1: ScalarField) -> float:
        v = self.values.values
        return float(max(np.abs(v[0] - psi0.values).max(), np.abs(v[-1] - psi1.values).max()))

    def s_convexity_violation(self) -> float:
        v = self.values.values
        if v.shape[0] < 3:
            return 0.0
        return float(max(0.0, -(v[:-2] - 2 * v[1:-1] + v[2:]).min()))

    def joint_convexity_violation(self) -> float:
        return convexity_violation(self.values)


def _check_endpoints(psi0: ScalarField, psi1: ScalarField):
    if psi0.dim != 1 or not psi0.same_grid(psi1):
        raise FieldError("endpoints must be 1D fields on a common axis")


def _s_axis(s_axis) -> Axis:
    s_axis = s_axis if isinstance(s_axis, Axis) else Axis(0.0, 1.0, int(s_axis))
    if s_axis.min != 0.0 or s_axis.max != 1.0:
        raise FieldError("the s-axis must span [0, 1]")
    return s_axis


def _assemble(s_axis, x_axis, rows, method, sigma_axis=None) -> GeodesicSolution:
    values = ScalarField([s_axis, x_axis], np.vstack(rows))
    return GeodesicSolution(s_axis, x_axis, values, method, sigma_axis)


def geodesic_semmes(
    psi0: ScalarField, psi1: ScalarField, s_axis, dual: Optional[Axis] = None
) -> GeodesicSolution:
    """``psi(s, .) = ((1 - s) L[psi0] + s L[psi1])*`` with L the classical conjugate."""
    _check_endpoints(psi0, psi1)
    s_axis = _s_axis(s_axis)
    for f, name in ((psi0, "psi0"), (psi1, "psi1")):
        if convexity_violation(f) > 1e-12 * (1 + np.abs(f.values).max()):
            warnings.warn(f"{name} is not discretely convex; using its convexification")
    if dual is None:
        lip = max(lipschitz_seminorm(psi0), lipschitz_seminorm(psi1))
        dual = Axis(-lip - 1.0, lip + 1.0, psi0.axes[0].n)
    x_axis = psi0.axes[0]
    L0 = legendre_classical(psi0, dual).values
    L1 = legendre_classical(psi1, dual).values
    rows = []
    for s in s_axis.nodes():
        blend = ScalarField([dual], (1 - s) * L0 + s * L1)
        rows.append(legendre_classical(blend, x_axis).values)
    return _assemble(s_axis, x_axis, rows, "semmes")


def geodesic_infconv(psi0: ScalarField, psi1: ScalarField, s_axis) -> GeodesicSolution:
    """Slice-wise infimal convolution; exact at s = 0 and s = 1."""
    _check_endpoints(psi0, psi1)
    s_axis = _s_axis(s_axis)
    rows = [inf_convolution(psi0, psi1, float(s)).values for s in s_axis.nodes()]
    return _assemble(s_axis, psi0.axes[0], rows, "infconv")


def required_sigma_window(psi0: ScalarField, psi1: ScalarField) -> tuple:
    d = psi1.values - psi0.values
    return float(d.min()) - 1.0, float(d.max()) + 1.0


def default_sigma_axis(psi0: ScalarField, psi1: ScalarField, n: Optional[int] = None) -> Axis:
    lo, hi = required_sigma_window(psi0, psi1)
    return Axis(lo, hi, n or psi0.axes[0].n)


def _check_sigma(psi0, psi1, sigma_axis: Axis):
    lo, hi = required_sigma_window(psi0, psi1)
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if sigma_axis.min > lo + slack or sigma_axis.max < hi - slack:
        raise SigmaWindowError((lo, hi), (sigma_axis.min, sigma_axis.max))


def geodesic_rooftop(
    psi0: ScalarField, psi1: ScalarField, s_axis, sigma_axis: Optional[Axis] = None
) -> GeodesicSolution:
    """``psi(s, x) = max_sigma [min{psi0, psi1 - sigma}**(x) + s*sigma]`` over sigma nodes."""
    _check_endpoints(psi0, psi1)
    s_axis = _s_axis(s_axis)
    if sigma_axis is None:
        sigma_axis = default_sigma_axis(psi0, psi1)
    _check_sigma(psi0, psi1, sigma_axis)
    sig = sigma_axis.nodes()
    env = tilted_envelopes(psi0, psi1, sig)
    rows = [np.max(env + s * sig[:, None], axis=0) for s in s_axis.nodes()]
    return _assemble(s_axis, psi0.axes[0], rows, "rooftop", sigma_axis)


def bremermann_dual(g: GeodesicSolution, sigma_axis: Axis) -> ScalarField:
    """``min_s [psi(s, x) - s*sigma]`` on the (sigma, x) grid."""
    s = g.s_axis.nodes()
    sig = sigma_axis.nodes()
    v = g.values.values
    out = np.min(v[None, :, :] - s[None, :, None] * sig[:, None, None], axis=1)
    return ScalarField([sigma_axis, g.x_axis], out)


def dual_identity_error(
    g: GeodesicSolution, psi0: ScalarField, psi1: ScalarField, sigma_axis: Axis
) -> float:
    """Sup distance between the s-conjugate of ``g`` and the tilted envelopes."""
    dual = bremermann_dual(g, sigma_axis).values
    env = tilted_envelopes(psi0, psi1, sigma_axis.nodes())
    return float(np.abs(dual - env).max())


def dual_shape_violations(dual: ScalarField) -> tuple:
    """(worst concavity excess in sigma, worst convexity deficit in x)."""
    v = dual.values
    conc = (v[:-2] + v[2:] - 2 * v[1:-1]).max() if v.shape[0] >= 3 else 0.0
    conv = -(v[:, :-2] + v[:, 2:] - 2 * v[:, 1:-1]).min() if v.shape[1] >= 3 else 0.0
    return float(max(conc, 0.0)), float(max(conv, 0.0))


def sandwich_bounds(
    psi0: ScalarField, psi1: ScalarField, g: GeodesicSolution, tol: Optional[float] = None
) -> Report:
    """Check ``max{psi0 - A s, psi1 - A (1 - s)} <= psi <= (1 - s) psi0 + s psi1``.

    ``A = max |psi1 - psi0|`` over the grid.  ``worst_violation`` is the larger
    of the two bound violations.  The default tolerance is the route's
    endpoint error (the lower bound inherits it through the slice at s = 0)
    plus, for the rooftop route, ``h_sigma / 2``: the sigma-sup runs over a
    concave function with slopes in [s - 1, s], so sampling loses at most that.
    """
    if tol is None:
        tol = g.endpoint_error(psi0, psi1) + 1e-9
        if g.sigma_axis is not None:
            tol += g.sigma_axis.h / 2
    s = g.s_axis.nodes()[:, None]
    p0, p1 = psi0.values[None, :], psi1.values[None, :]
    A = float(np.abs(psi1.values - psi0.values).max())
    lower = np.maximum(p0 - A * s, p1 - A * (1 - s))
    upper = (1 - s) * p0 + s * p1
    v = g.values.values
    lo_v = float(max(0.0, (lower - v).max()))
    up_v = float(max(0.0, (v - upper).max()))
    worst = max(lo_v, up_v)
    diff = np.maximum(lower - v, v - upper)
    loc = [int(i) for i in np.unravel_index(int(np.argmax(diff)), diff.shape)]
    return Report(
        "sandwich",
        worst,
        worst <= tol,
        loc,
        details={"A": A, "lower_violation": lo_v, "upper_violation": up_v, "tolerance": tol},
    )


def ma_residual(g: GeodesicSolution) -> ScalarField:
    """Determinant of the central-difference (s, x) Hessian at interior nodes."""
    v = g.values.values
    hs, hx = g.s_axis.h, g.x_axis.h
    if min(v.shape) < 3:
        raise FieldError("grid too coarse for differences")
    c = v[1:-1, 1:-1]
    pss = (v[:-2, 1:-1] - 2 * c + v[2:, 1:-1]) / hs**2
    pxx = (v[1:-1, :-2] - 2 * c + v[1:-1, 2:]) / hx**2
    psx = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * hs * hx)
    det = pss * pxx - psx**2
    sa, xa = g.s_axis, g.x_axis
    axes = [Axis(sa.node(1), sa.node(sa.n - 2), sa.n - 2), Axis(xa.node(1), xa.node(xa.n - 2), xa.n - 2)]
    return ScalarField(axes, det)


def fiberwise_lipschitz_check(
    g: GeodesicSolution, psi0: ScalarField, psi1: ScalarField, tol: Optional[float] = None
) -> Report:
    """Every s-slice is no steeper in x than the steeper endpoint.

    The default tolerance absorbs the route's endpoint error ``e``: moving
    samples by ``e`` changes an adjacent slope by at most ``2e/h``.
    """
    lips = [lipschitz_seminorm(g.slice(k)) for k in range(g.s_axis.n)]
    bound = max(lipschitz_seminorm(psi0), lipschitz_seminorm(psi1))
    if tol is None:
        tol = 2 * g.endpoint_error(psi0, psi1) / g.x_axis.h + 1e-9 * max(1.0, bound)
    k = int(np.argmax(lips))
    worst = max(0.0, lips[k] - bound)
    return Report(
        "fiberwise_lipschitz",
        worst,
        worst <= tol,
        [k],
        details={"max_slice_lipschitz": lips[k], "endpoint_lipschitz": bound, "tolerance": tol},
    )


def pairwise_sup(solutions) -> dict:
    """Sup-norm distances between every pair of geodesic solutions."""
    out = {}
    for i, a in enumerate(solutions):
        for b in solutions[i + 1:]:
            out[f"{a.method}-{b.method}"] = float(np.abs(a.values.values - b.values.values).max())
    return out
