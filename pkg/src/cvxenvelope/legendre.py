"""Discrete Legendre transforms, convexification and infimal convolution.

Two sign conventions are provided.  The classical transform is
``L[f](y) = max_i (x_i*y - f(x_i))``; the negative transform is
``f*(sigma) = min_i (f(s_i) - sigma*s_i) = -L[f](sigma)`` and its inverse
``g*(s) = max_j (g(sigma_j) + sigma_j*s)``.  All suprema and infima are over
grid nodes only, and ties go to the lowest index.
"""

from __future__ import annotations

import numpy as np

from .field import Axis, FieldError, ScalarField, convexity_violation, lipschitz_seminorm


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, best=None):
        self.residual = residual
        self.best = best
        super().__init__(f"{message} (residual {residual:.3e})")


def _require_1d(f: ScalarField):
    if f.dim != 1:
        raise FieldError("expected a 1D field")


def lower_hull(x: np.ndarray, v: np.ndarray, slack: float = 1e-12) -> np.ndarray:
    """Indices of the lower convex hull of the points ``(x_i, v_i)``, x increasing.

    Collinear points are kept, so a convex input keeps every index; points
    within ``slack`` (relative) of a chord count as collinear.  Pass
    ``slack=0`` for the exact-arithmetic hull.
    """
    hull = [0]
    for i in range(1, len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies above the chord a-i by more than rounding
            p = (x[b] - x[a]) * (v[i] - v[a])
            q = (v[b] - v[a]) * (x[i] - x[a])
            if p - q < -slack * (abs(p) + abs(q)):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def default_dual_axis(f: ScalarField, n=None) -> Axis:
    """Slope window ``[-Lip(f)-1, Lip(f)+1]`` with as many nodes as the primal."""
    lip = lipschitz_seminorm(f)
    return Axis(-lip - 1.0, lip + 1.0, n or f.axes[0].n)


def legendre_brute(f: ScalarField, dual: Axis) -> ScalarField:
    """O(n*m) reference: every dual node scans every primal node."""
    _require_1d(f)
    x = f.axes[0].nodes()
    y = dual.nodes()
    vals = np.max(y[:, None] * x[None, :] - f.values[None, :], axis=1)
    return ScalarField([dual], vals)


def legendre_classical(f: ScalarField, dual: Axis) -> ScalarField:
    """``L[f](y_j) = max_i (x_i*y_j - f_i)`` in O(n + m).

    Only lower-hull vertices can be maximizers and, along the hull, the
    maximizing vertex is nondecreasing in y, so a single forward pointer
    walk over the hull serves all dual nodes.
    """
    _require_1d(f)
    x = f.axes[0].nodes()
    fv = f.values
    y = dual.nodes()
    hull = lower_hull(x, fv)
    hx = x[hull]
    hf = fv[hull]
    m = len(hull)
    out = np.empty(len(y))
    k = 0
    for j in range(len(y)):
        yj = y[j]
        best = yj * hx[k] - hf[k]
        while k + 1 < m:
            nxt = yj * hx[k + 1] - hf[k + 1]
            if nxt > best:
                k += 1
                best = nxt
            else:
                break
        # rounding can break unimodality among nearly collinear vertices;
        # scan the near-tie run on both sides so the float max is exact
        eps = 1e-12 * (abs(best) + abs(yj * hx[k]) + abs(hf[k]) + 1e-300)
        i = k + 1
        while i < m:
            val = yj * hx[i] - hf[i]
            if val < best - eps:
                break
            if val > best:
                best, k = val, i
            i += 1
        i = k - 1
        while i >= 0:
            val = yj * hx[i] - hf[i]
            if val < best - eps:
                break
            best = max(best, val)
            i -= 1
        out[j] = best
    return ScalarField([dual], out)


def neg_legendre(f: ScalarField, dual: Axis) -> ScalarField:
    """``f*(sigma) = min_s [f(s) - sigma*s]``."""
    return -legendre_classical(f, dual)


def neg_legendre_back(g: ScalarField, primal: Axis) -> ScalarField:
    """``g*(s) = max_sigma [g(sigma) + sigma*s]``."""
    _require_1d(g)
    return legendre_classical(-g, primal)


def _hull_values(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    idx = lower_hull(x, v, slack=0.0)
    out = np.interp(x, x[idx], v[idx])
    out[idx] = v[idx]
    return np.minimum(out, v)


def _lines(shape):
    """Index arrays of every row, column, diagonal and anti-diagonal of a 2D grid."""
    n0, n1 = shape
    I, J = np.indices(shape)
    lines = [(I[i, :], J[i, :]) for i in range(n0)]
    lines += [(I[:, j], J[:, j]) for j in range(n1)]
    for d in range(-(n0 - 1), n1):
        ii = np.arange(max(0, -d), min(n0, n1 - d))
        if len(ii) >= 3:
            lines.append((ii, ii + d))
    for t in range(n0 + n1 - 1):
        ii = np.arange(max(0, t - n1 + 1), min(n0, t + 1))
        if len(ii) >= 3:
            lines.append((ii, t - ii))
    return lines


def convexify(f: ScalarField, tol: float = 1e-12, max_sweeps: int = 2000) -> ScalarField:
    """Largest discretely convex grid function below ``f``.

    1D: lower convex hull of the samples.  2D: repeated 1D hulls along rows,
    columns and both diagonals until the sweep changes nothing by more than
    ``tol``; each pass only lowers values and never below the answer.
    """
    if f.dim == 1:
        x = f.axes[0].nodes()
        return f.with_values(_hull_values(x, f.values))
    v = f.values.copy()
    lines = _lines(v.shape)
    change = np.inf
    for _ in range(max_sweeps):
        before = v.copy()
        for ii, jj in lines:
            # lattice lines are uniformly spaced, so the node index is a valid abscissa
            v[ii, jj] = _hull_values(np.arange(len(ii), dtype=float), v[ii, jj])
        change = float(np.max(np.abs(v - before)))
        if change <= tol:
            return f.with_values(v)
    raise ConvergenceError(
        f"2D convexification did not reach a fixed point in {max_sweeps} sweeps",
        change,
        f.with_values(v),
    )


def inf_convolution(psi0: ScalarField, psi1: ScalarField, s: float) -> ScalarField:
    """``inf { (1-s)psi0(x0) + s psi1(x1) : (1-s)x0 + s x1 = x }`` on the grid.

    Candidates run over x0 at nodes (x1 solved and read off by linear
    interpolation) and over x1 at nodes (x0 interpolated); pairs leaving the
    window are inadmissible.
    """
    _require_1d(psi0)
    if not psi0.same_grid(psi1):
        raise FieldError("grid mismatch")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return psi0
    if s == 1.0:
        return psi1
    ax = psi0.axes[0]
    x = ax.nodes()
    # admissibility is tested before dividing by the partner weight, which
    # would amplify rounding by 1/weight; the residual itself is eps-accurate
    slack = 8 * np.finfo(float).eps * max(1.0, float(np.abs(x).max()))
    target = x[:, None]
    node = x[None, :]
    best = np.full(len(x), np.inf)
    for other_w, node_w, node_f, other_f in (
        (s, 1.0 - s, psi0.values, psi1.values),
        (1.0 - s, s, psi1.values, psi0.values),
    ):
        resid = target - node_w * node
        ok = (resid >= other_w * ax.min - slack) & (resid <= other_w * ax.max + slack)
        with np.errstate(over="ignore"):  # tiny weights push partners out of the window
            partner = np.clip(resid / other_w, ax.min, ax.max)
        interp = np.interp(partner, x, other_f)
        cand = np.where(ok, node_w * node_f[None, :] + other_w * interp, np.inf)
        best = np.minimum(best, cand.min(axis=1))
    return psi0.with_values(best)


def convexity_gap(f: ScalarField) -> float:
    """How far ``f`` is from being discretely convex (0 when convex)."""
    return convexity_violation(f)
