"""Rooftop envelopes: convex hulls of pointwise minima of a family."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .field import Axis, FieldError, ScalarField, convexity_violation, pointwise_min
from .legendre import convexify
from .reports import Report


class RooftopFamily:
    """Nonempty list of fields on one common grid."""

    def __init__(self, members: Sequence[ScalarField]):
        members = list(members)
        if not members:
            raise FieldError("a rooftop family needs at least one member")
        for m in members[1:]:
            if not members[0].same_grid(m):
                raise FieldError("grid mismatch between family members")
        self.members = members

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def _family(fam) -> RooftopFamily:
    return fam if isinstance(fam, RooftopFamily) else RooftopFamily(fam)


def rooftop_min(fam) -> ScalarField:
    return pointwise_min(*_family(fam).members)


def convex_rooftop_envelope(fam) -> ScalarField:
    """Convexification of the pointwise minimum (not a combination of member hulls)."""
    return convexify(rooftop_min(fam))


def tilted_envelope(psi0: ScalarField, psi1: ScalarField, sigma: float) -> ScalarField:
    """``min{psi0, psi1 - sigma}**``."""
    if not psi0.same_grid(psi1):
        raise FieldError("grid mismatch")
    return convexify(psi0.with_values(np.minimum(psi0.values, psi1.values - sigma)))


def tilted_envelopes(psi0: ScalarField, psi1: ScalarField, sigmas) -> np.ndarray:
    """Stack of :func:`tilted_envelope` over ``sigmas`` (first axis is sigma)."""
    if not psi0.same_grid(psi1):
        raise FieldError("grid mismatch")
    out = np.empty((len(sigmas),) + psi0.shape)
    work = np.empty(psi0.shape)
    for j, sig in enumerate(sigmas):
        np.subtract(psi1.values, sig, out=work)
        np.minimum(psi0.values, work, out=work)
        out[j] = convexify(psi0.with_values(work)).values
    return out


def compose_check(fam, tol: float = 1e-9) -> Report:
    """Compare ``P(v0, ..., vk)`` against ``P(v0, P(v1, ..., vk))``."""
    fam = _family(fam)
    if len(fam) < 2:
        raise ValueError("compose_check needs at least two members")
    direct = convex_rooftop_envelope(fam)
    nested = fam.members[-1]
    for m in reversed(fam.members[:-1]):
        nested = convex_rooftop_envelope([m, nested])
    dev = np.abs(direct.values - nested.values)
    loc = list(np.unravel_index(int(np.argmax(dev)), dev.shape))
    worst = float(dev.max())
    return Report("compose", worst, worst <= tol, loc, details={"tolerance": tol})


def partial_min(psi: ScalarField) -> ScalarField:
    """``min_s psi(s, x)`` over the s-nodes (first axis)."""
    if psi.dim != 2:
        raise FieldError("partial_min expects a 2D field over (s, x)")
    return ScalarField([psi.axes[1]], psi.values.min(axis=0))


def convexity_check(f: ScalarField, tol: float = 0.0) -> Report:
    """Discrete convexity test: raw second differences must be >= -tol."""
    worst = convexity_violation(f)
    v = f.values
    loc = []
    if f.dim == 1 and f.shape[0] >= 3:
        loc = [int(np.argmin(v[:-2] - 2 * v[1:-1] + v[2:])) + 1]
    return Report("convexity", worst, worst <= tol, loc, details={"tolerance": tol})


def sigma_concavity_check(
    psi0: ScalarField,
    psi1: ScalarField,
    sigma_axis: Axis,
    x_probe,
    tol: float = 1e-9,
) -> Report:
    """Midpoint concavity of ``sigma -> tilted_envelope(psi0, psi1, sigma)[x_probe]``."""
    sig = sigma_axis.nodes()
    idx = (x_probe,) if np.isscalar(x_probe) else tuple(x_probe)
    env = tilted_envelopes(psi0, psi1, sig)
    g = env[(slice(None),) + idx]
    excess = g[:-2] + g[2:] - 2 * g[1:-1]
    worst = float(max(0.0, excess.max())) if excess.size else 0.0
    loc = [int(np.argmax(excess)) + 1] if excess.size else []
    return Report(
        "sigma_concavity", worst, worst <= tol, loc,
        details={"tolerance": tol, "probe": list(idx)},
    )
