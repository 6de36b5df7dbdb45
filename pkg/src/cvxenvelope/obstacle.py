"""Laplacian rooftop obstacle problem and regularity verifiers.

The envelope is the largest discretely subharmonic grid function below
``g = min(b0, b1)`` that equals ``g`` on the boundary nodes.  The Laplacian is
the 3-point stencil in 1D and the 5-point stencil in 2D.

Residuals are reported in the units of ``u``: the scaled defect
``D u = (sum_k (u_{+k} + u_{-k}) / h_k^2) / (sum_k 2 / h_k^2) - u`` is the
Laplacian divided by its diagonal, so the complementarity residual is
``max |min(D u, g - u)|`` over interior nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from .field import (
    Axis,
    FieldError,
    ScalarField,
    c11_seminorm,
    gradient_fd,
    laplacian,
    pointwise_min,
    refine,
    restrict,
    sub_box,
)
from .legendre import ConvergenceError
from .reports import Report


@dataclass(frozen=True)
class RooftopObstacle:
    b0: ScalarField
    b1: ScalarField
    b10: ScalarField = field(init=False)

    def __post_init__(self):
        if not self.b0.same_grid(self.b1):
            raise FieldError("obstacle members must share a grid")
        object.__setattr__(self, "b10", self.b1 - self.b0)

    @property
    def g(self) -> ScalarField:
        return pointwise_min(self.b0, self.b1)

    @property
    def axes(self):
        return self.b0.axes


@dataclass
class ObstacleSolution:
    u: ScalarField
    contact: np.ndarray
    residual_complementarity: float
    residual_subharmonic: float
    iterations: int
    method: str
    tol: float
    params: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {
            "method": self.method,
            "iterations": int(self.iterations),
            "residual_complementarity": float(self.residual_complementarity),
            "residual_subharmonic": float(self.residual_subharmonic),
            "contact_fraction": float(self.contact.mean()),
        }


def _check_grid(obs: RooftopObstacle):
    for a in obs.axes:
        if a.n < 3:
            raise FieldError("grid too coarse for differences")


def scaled_defect(u: np.ndarray, axes: Sequence[Axis]) -> np.ndarray:
    """Interior Laplacian divided by its (positive) diagonal."""
    f = ScalarField(axes, u)
    diag = sum(2.0 / a.h**2 for a in axes)
    return laplacian(f) / diag


def _interior(arr: np.ndarray) -> np.ndarray:
    return arr[1:-1] if arr.ndim == 1 else arr[1:-1, 1:-1]


def residuals(u: np.ndarray, g: np.ndarray, axes) -> tuple:
    d = scaled_defect(u, axes)
    gap = _interior(g - u)
    comp = float(np.abs(np.minimum(d, gap)).max()) if d.size else 0.0
    sub = float(max(0.0, -d.min())) if d.size else 0.0
    return comp, sub


# PSOR kernels


@numba.njit(cache=True)
def _psor_1d(u, g, omega, tol, max_iter, window):
    n = u.shape[0]
    changes = np.zeros(max_iter)
    for it in range(max_iter):
        change = 0.0
        for i in range(1, n - 1):
            gs = 0.5 * (u[i - 1] + u[i + 1])
            new = u[i] + omega * (gs - u[i])
            if new > g[i]:
                new = g[i]
            d = abs(new - u[i])
            if d > change:
                change = d
            u[i] = new
        changes[it] = change
        if _converged(changes, it, tol, window):
            return it + 1, changes[: it + 1]
    return max_iter, changes


@numba.njit(cache=True)
def _psor_2d(u, g, omega, tol, max_iter, window, h0, h1):
    n0, n1 = u.shape
    w0 = 1.0 / (h0 * h0)
    w1 = 1.0 / (h1 * h1)
    diag = 2.0 * (w0 + w1)
    changes = np.zeros(max_iter)
    for it in range(max_iter):
        change = 0.0
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                gs = (w0 * (u[i - 1, j] + u[i + 1, j]) + w1 * (u[i, j - 1] + u[i, j + 1])) / diag
                new = u[i, j] + omega * (gs - u[i, j])
                if new > g[i, j]:
                    new = g[i, j]
                d = abs(new - u[i, j])
                if d > change:
                    change = d
                u[i, j] = new
        changes[it] = change
        if _converged(changes, it, tol, window):
            return it + 1, changes[: it + 1]
    return max_iter, changes


@numba.njit(cache=True)
def _converged(changes, it, tol, window):
    c = changes[it]
    if c == 0.0:
        return True
    if c > tol or it < window:
        return False
    old = changes[it - window]
    if old <= 0.0:
        return True
    rho = (c / old) ** (1.0 / window)
    if rho >= 1.0:
        return False
    # geometric tail bound on the remaining distance to the limit
    return c * rho / (1.0 - rho) <= tol


def solve_psor(
    obs: RooftopObstacle,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    relaxation: float = 1.5,
    initial: Optional[np.ndarray] = None,
) -> ObstacleSolution:
    """Projected SOR for ``max u  s.t.  Lap_h u >= 0, u <= g, u = g on the boundary``.

    Sweeps are lexicographic.  The iteration stops once the sup change is at
    most ``tol`` and the observed contraction rate bounds the remaining
    distance to the fixed point by ``tol`` as well.
    """
    _check_grid(obs)
    if not 0.0 < relaxation < 2.0:
        raise ValueError("relaxation must lie in (0, 2)")
    g = np.ascontiguousarray(obs.g.values, dtype=float)
    u = g.copy() if initial is None else np.minimum(np.array(initial, dtype=float), g)
    _set_boundary(u, g)
    window = 10
    if obs.b0.dim == 1:
        iters, history = _psor_1d(u, g, relaxation, tol, max_iter, window)
    else:
        h0, h1 = obs.axes[0].h, obs.axes[1].h
        iters, history = _psor_2d(u, g, relaxation, tol, max_iter, window, h0, h1)
    comp, sub = residuals(u, g, obs.axes)
    sol = ObstacleSolution(
        ScalarField(obs.axes, u),
        _contact_mask(u, g, 10 * tol),
        comp,
        sub,
        int(iters),
        "psor",
        tol,
        {"relaxation": relaxation, "max_iter": max_iter},
    )
    if iters >= max_iter and max(comp, float(history[-1])) > 10 * tol:
        raise ConvergenceError(f"PSOR did not converge in {max_iter} sweeps", comp, sol)
    return sol


def _set_boundary(u, g):
    if u.ndim == 1:
        u[0], u[-1] = g[0], g[-1]
    else:
        u[0, :], u[-1, :] = g[0, :], g[-1, :]
        u[:, 0], u[:, -1] = g[:, 0], g[:, -1]


def _boundary_mask(shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    if len(shape) == 1:
        m[0] = m[-1] = True
    else:
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
    return m


def _contact_mask(u, g, eps) -> np.ndarray:
    return (g - u <= eps) | _boundary_mask(u.shape)


# Newton-type solvers on interior unknowns


def _neg_laplacian(axes) -> tuple:
    """Sparse ``-Lap_h`` restricted to interior nodes, and the boundary coupling."""
    shape = tuple(a.n for a in axes)
    N = int(np.prod(shape))
    idx = np.arange(N).reshape(shape)
    inner = _interior(idx).ravel()
    rows, cols, vals = [], [], []
    for k, a in enumerate(axes):
        w = 1.0 / a.h**2
        for step in (-1, 1):
            nb = np.roll(idx, -step, axis=k)
            rows.append(inner)
            cols.append(_interior(nb).ravel())
            vals.append(np.full(inner.size, -w))
        rows.append(inner)
        cols.append(inner)
        vals.append(np.full(inner.size, 2 * w))
    full = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    A = full[inner][:, inner].tocsc()
    boundary = np.setdiff1d(np.arange(N), inner)
    B = full[inner][:, boundary].tocsc()
    return A, B, inner, boundary


def solve_penalty(
    obs: RooftopObstacle,
    beta: float = 1e4,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> ObstacleSolution:
    """Semismooth Newton for ``-Lap_h u + beta*max(u - g, 0) = 0`` with ``u = g`` on the boundary."""
    _check_grid(obs)
    if beta <= 0:
        raise ValueError("beta must be positive")
    axes = obs.axes
    g = obs.g.values.ravel()
    A, B, inner, boundary = _neg_laplacian(axes)
    diag = sum(2.0 / a.h**2 for a in axes)
    rhs = -B @ g[boundary]
    gi = g[inner]

    def F(v):
        return A @ v - rhs + beta * np.maximum(v - gi, 0.0)

    v = gi.copy()
    r = F(v)
    history = [float(np.abs(r).max()) / diag]
    it = 0
    for it in range(1, max_iter + 1):
        active = (v > gi).astype(float)
        J = A + sp.diags(beta * active)
        step = spla.spsolve(J.tocsc(), -r)
        t = 1.0
        while True:
            cand = v + t * step
            rc = F(cand)
            if np.abs(rc).max() <= (1 - 1e-4 * t) * np.abs(r).max() or t < 1e-6:
                break
            t *= 0.5
        v, r = cand, rc
        history.append(float(np.abs(r).max()) / diag)
        if not np.all(np.isfinite(v)):
            break
        if history[-1] <= tol and np.array_equal(v > gi, active > 0):
            break
    if not (np.all(np.isfinite(v)) and history[-1] <= tol):
        raise ConvergenceError(
            f"penalty Newton diverged; residual history {history[-5:]}", history[-1]
        )
    u = g.copy()
    u[inner] = v
    u = u.reshape(obs.g.shape)
    comp, sub = residuals(u, obs.g.values, axes)
    return ObstacleSolution(
        ScalarField(axes, u),
        _contact_mask(u, obs.g.values, 10 * max(tol, 1e-12)),
        comp,
        sub,
        it,
        "penalty",
        tol,
        {"beta": beta, "max_iter": max_iter, "residual_history": history},
    )


def berman_convexify_1d(
    v: ScalarField, beta: float, tol: float = 1e-9, max_iter: int = 200
) -> ScalarField:
    """Solve ``u'' = exp(beta*(u - v))`` with ``u = v`` at both ends.

    As beta grows the solution tends to the convex envelope of ``v``, with
    an overshoot of order 1/beta where ``v`` is strictly convex.  Damped
    Newton from the convex hull of ``v`` (which keeps the exponent <= 0 at
    the start).
    """
    from .legendre import convexify

    if v.dim != 1:
        raise FieldError("berman_convexify_1d expects a 1D field")
    if beta < 1:
        raise ValueError("beta must be >= 1")
    ax = v.axes[0]
    n, h = ax.n, ax.h
    vv = v.values
    main = np.full(n - 2, -2.0 / h**2)
    off = np.full(n - 3, 1.0 / h**2)
    L = sp.diags([off, main, off], [-1, 0, 1], format="csc")
    bc = np.zeros(n - 2)
    bc[0] += vv[0] / h**2
    bc[-1] += vv[-1] / h**2
    vi = vv[1:-1]

    def F(w):
        with np.errstate(over="ignore"):
            return L @ w + bc - np.exp(beta * (w - vi))

    def merit(r):
        return float(np.abs(r).max()) if np.all(np.isfinite(r)) else np.inf

    w = convexify(v).values[1:-1].copy()
    r = F(w)
    scale = 1.0 / h**2
    for _ in range(max_iter):
        if merit(r) <= tol * scale:
            break
        e = np.exp(beta * (w - vi))
        J = L - sp.diags(beta * e)
        step = spla.spsolve(J.tocsc(), -r)
        t = 1.0
        m0 = merit(r)
        while t > 1e-10:
            cand = w + t * step
            rc = F(cand)
            if merit(rc) < (1 - 1e-4 * t) * m0:
                break
            t *= 0.5
        else:
            raise ConvergenceError("beta-scheme Newton stalled", m0 / scale)
        w, r = cand, rc
    else:
        raise ConvergenceError("beta-scheme Newton did not converge", merit(r) / scale)
    out = vv.copy()
    out[1:-1] = w
    return v.with_values(out)


# contact set and verifiers


def contact_set(sol: ObstacleSolution, obs: RooftopObstacle, eps: float) -> np.ndarray:
    """Mask of nodes with ``min(b0, b1) - u <= eps``; boundary nodes always included."""
    return _contact_mask(sol.u.values, obs.g.values, eps)


def _default_eps(sol: ObstacleSolution) -> float:
    return 10 * max(sol.tol, 1e-12)


def _coords(axes) -> np.ndarray:
    grids = np.meshgrid(*(a.nodes() for a in axes), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _in_box_mask(axes, fraction: float) -> np.ndarray:
    shape = tuple(a.n for a in axes)
    m = np.zeros(shape, dtype=bool)
    m[sub_box(ScalarField(axes, np.zeros(shape)), fraction)] = True
    return m


def ridge_nodes(obs: RooftopObstacle) -> np.ndarray:
    """Mask of lower-index nodes of edges across which ``b10`` changes sign."""
    b = obs.b10.values
    mask = b == 0.0
    for k in range(b.ndim):
        lo = [slice(None)] * b.ndim
        hi = [slice(None)] * b.ndim
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        cross = b[tuple(lo)] * b[tuple(hi)] < 0
        mask[tuple(lo)] |= cross
    return mask


Resampler = Callable[[Sequence[Axis]], RooftopObstacle]


def refined_problem(obs: RooftopObstacle, resample: Optional[Resampler] = None) -> RooftopObstacle:
    """The same obstacle on the grid with every spacing halved.

    ``resample`` re-evaluates the obstacle on the finer axes; without it the
    coarse samples are interpolated by :func:`refine`.
    """
    if resample is not None:
        return resample([a.refined() for a in obs.axes])
    return RooftopObstacle(refine(obs.b0), refine(obs.b1))


def solve_like(sol: ObstacleSolution, obs: RooftopObstacle) -> ObstacleSolution:
    """Re-solve ``obs`` with the method and settings that produced ``sol``."""
    if sol.method == "psor":
        return solve_psor(obs, sol.tol, sol.params["max_iter"], sol.params["relaxation"])
    return solve_penalty(obs, sol.params["beta"], sol.tol, sol.params["max_iter"])


def _cushion_constant(sol, obs, delta, eps):
    axes = obs.axes
    ridge = ridge_nodes(obs) & _in_box_mask(axes, 0.5) & ~_boundary_mask(obs.b0.shape)
    grads = gradient_fd(obs.b10)
    gnorm = np.sqrt(sum(gr**2 for gr in grads))
    ridge &= gnorm >= delta
    if not ridge.any():
        return None, 0, []
    lam = contact_set(sol, obs, eps)
    pts = _coords(axes)
    tree = cKDTree(pts[lam.ravel()])
    rid = np.flatnonzero(ridge.ravel())
    dist, _ = tree.query(pts[rid])
    ratio = dist / gnorm.ravel()[rid]
    k = int(np.argmin(ratio))
    loc = [int(i) for i in np.unravel_index(rid[k], ridge.shape)]
    return float(ratio[k]), int(len(rid)), loc


def verify_cushion(
    sol: ObstacleSolution,
    obs: RooftopObstacle,
    delta: float = 0.1,
    eps: Optional[float] = None,
    resample: Optional[Resampler] = None,
    refined: Optional[tuple] = None,
) -> Report:
    """Empirical cushion constant ``min dist(x0, contact set) / |grad b10(x0)|`` over ridge nodes.

    Passes when the constant is positive and changes by at most a factor two
    after one grid refinement.
    """
    eps = _default_eps(sol) if eps is None else eps
    c, count, loc = _cushion_constant(sol, obs, delta, eps)
    if c is None:
        return Report("cushion", 0.0, True, [], status="vacuous", details={"ridge_nodes": 0})
    obs2, sol2 = refined or _refine_and_solve(sol, obs, resample)
    c2, _, _ = _cushion_constant(sol2, obs2, delta, _default_eps(sol2) if eps is None else eps)
    ratio = (max(c, c2) / min(c, c2)) if c2 and c > 0 else np.inf
    ok = c > 0 and c2 is not None and c2 > 0 and ratio <= 2.0
    return Report(
        "cushion",
        float(ratio),
        bool(ok),
        loc,
        details={"c_emp": c, "c_emp_refined": c2, "ridge_nodes": count, "delta": delta},
    )


def _refine_and_solve(sol, obs, resample):
    obs2 = refined_problem(obs, resample)
    return obs2, solve_like(sol, obs2)


def _neighbors_outside(mask: np.ndarray) -> np.ndarray:
    """Nodes of ``mask`` with at least one axis neighbor not in ``mask``."""
    out = np.zeros_like(mask)
    for k in range(mask.ndim):
        for step in (-1, 1):
            shifted = np.roll(mask, step, axis=k)
            edge = [slice(None)] * mask.ndim
            edge[k] = 0 if step == 1 else -1
            shifted[tuple(edge)] = True
            out |= mask & ~shifted
    return out


def _quadratic_constant(sol, obs, eps):
    axes = obs.axes
    shape = obs.b0.shape
    lam = contact_set(sol, obs, eps)
    fb = _neighbors_outside(lam) & _in_box_mask(axes, 0.5) & ~_boundary_mask(shape)
    nodes = np.argwhere(fb)
    if len(nodes) == 0:
        return None, 0, [], 0
    u = sol.u.values
    grads = [gradient_fd(obs.b0), gradient_fd(obs.b1)]
    bvals = [obs.b0.values, obs.b1.values]
    xs = [a.nodes() for a in axes]
    half = [max(1, int(round(a.length / 8 / a.h))) for a in axes]
    best, loc, ties = 0.0, [], 0
    for p in nodes:
        p = tuple(int(i) for i in p)
        b0p, b1p = obs.b0.values[p], obs.b1.values[p]
        branches = [0] if b0p < b1p else [1] if b1p < b0p else [0, 1]
        ties += len(branches) == 2
        box = tuple(slice(max(0, i - r), min(a.n, i + r + 1)) for i, r, a in zip(p, half, axes))
        disp = np.meshgrid(*(x[sl] - x[i] for x, sl, i in zip(xs, box, p)), indexing="ij")
        r2 = sum(d**2 for d in disp)
        for i in branches:
            tangent = bvals[i][p] + sum(gr[p] * d for gr, d in zip(grads[i], disp))
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(r2 > 0, np.abs(u[box] - tangent) / r2, 0.0)
            qmax = float(q.max())
            if qmax > best:
                best, loc = qmax, list(p)
    return best, len(nodes), loc, ties


def verify_quadratic_growth(
    sol: ObstacleSolution,
    obs: RooftopObstacle,
    eps: Optional[float] = None,
    resample: Optional[Resampler] = None,
    refined: Optional[tuple] = None,
) -> Report:
    """Largest ratio ``|u(x) - b_i(x0) - <grad b_i(x0), x - x0>| / |x - x0|^2`` at free-boundary nodes.

    ``x`` ranges over the box of quarter side lengths centered at ``x0``; at
    nodes where ``b0 == b1`` both branches are evaluated and the node is
    counted under ``tie_nodes``.
    """
    eps = _default_eps(sol) if eps is None else eps
    q, count, loc, ties = _quadratic_constant(sol, obs, eps)
    if q is None:
        return Report("quadratic_growth", 0.0, True, [], status="vacuous")
    obs2, sol2 = refined or _refine_and_solve(sol, obs, resample)
    q2, _, _, _ = _quadratic_constant(sol2, obs2, _default_eps(sol2) if eps is None else eps)
    if q2 is None:
        q2 = 0.0
    growth = q2 / q if q > 0 else (0.0 if q2 == 0 else np.inf)
    ok = bool(np.isfinite(q) and np.isfinite(q2) and growth <= 2.0)
    return Report(
        "quadratic_growth",
        float(growth),
        ok,
        loc,
        details={
            "max_Q": q,
            "max_Q_refined": q2,
            "free_boundary_nodes": count,
            "tie_nodes": ties,
            "obstacle_c11": max(c11_seminorm(obs.b0), c11_seminorm(obs.b1)),
        },
    )


def interior_c11(u: ScalarField, fraction: float = 0.5) -> float:
    return c11_seminorm(restrict(u, sub_box(u, fraction)))


def verify_c11(
    sol: ObstacleSolution,
    obs: RooftopObstacle,
    margin: float = 0.25,
    slack: float = 0.1,
    box_fraction: float = 0.5,
    resample: Optional[Resampler] = None,
    refined: Optional[tuple] = None,
) -> Report:
    """Second-difference seminorm of the envelope on the centered interior box.

    Passes when it is at most ``(1 + margin) * max(obstacle seminorms) + slack``
    and moves by at most 25% under one refinement.
    """
    c = interior_c11(sol.u, box_fraction)
    bound = (1 + margin) * max(c11_seminorm(obs.b0), c11_seminorm(obs.b1)) + slack
    obs2, sol2 = refined or _refine_and_solve(sol, obs, resample)
    c2 = interior_c11(sol2.u, box_fraction)
    change = abs(c2 - c) / c if c > 0 else (0.0 if c2 == 0 else np.inf)
    ok = c <= bound and c2 <= bound and change <= 0.25
    return Report(
        "c11",
        float(max(c - bound, 0.0)),
        bool(ok),
        [],
        details={"c11": c, "c11_refined": c2, "bound": bound, "relative_change": change},
    )


def verify_family_laplacian(
    members: Sequence[ScalarField], B: float, tol: float = 1e-8, c_allowed: float = 1.0
) -> Report:
    """Laplacian bound for the pointwise minimum of a family with ``|Lap v_a| <= B``."""
    members = list(members)
    for m in members[1:]:
        if not members[0].same_grid(m):
            raise FieldError("grid mismatch between family members")
    worst_member = max(float(np.abs(laplacian(m)).max()) for m in members)
    if worst_member > B + tol:
        return Report(
            "family_laplacian", worst_member - B, False, [],
            status="precondition failed", details={"member_laplacian": worst_member},
        )
    vmin = pointwise_min(*members)
    lap = laplacian(vmin)
    h = max(a.h for a in vmin.axes)
    if lap.min() < -tol:
        loc = [int(i) + 1 for i in np.unravel_index(int(np.argmin(lap)), lap.shape)]
        return Report(
            "family_laplacian", 0.0, True, loc,
            status="hypothesis not met", details={"min_laplacian": float(lap.min())},
        )
    top = float(np.abs(lap).max())
    c_emp = max(0.0, top - B) / h
    loc = [int(i) + 1 for i in np.unravel_index(int(np.argmax(np.abs(lap))), lap.shape)]
    ok = top <= B + c_allowed * h + tol
    return Report(
        "family_laplacian",
        max(0.0, top - B),
        bool(ok),
        loc,
        details={"max_laplacian": top, "B": B, "C_emp": c_emp, "C_allowed": c_allowed, "h": h},
    )
