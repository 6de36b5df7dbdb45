"""Uniform grids, sampled scalar fields and finite-difference diagnostics.

A :class:`ScalarField` is an immutable array of samples on a tensor product of
one or two :class:`Axis` objects.  Values are stored with the first axis
slowest, so ``values[i, j]`` is the sample at ``(axes[0].node(i), axes[1].node(j))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class FieldError(ValueError):
    """Raised for malformed grids, fields or field files."""


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.min) and np.isfinite(self.max)):
            raise FieldError("axis bounds must be finite")
        if not self.min < self.max:
            raise FieldError(f"axis requires min < max, got [{self.min}, {self.max}]")
        if int(self.n) != self.n or self.n < 2:
            raise FieldError(f"axis requires n >= 2 nodes, got {self.n}")
        object.__setattr__(self, "min", float(self.min))
        object.__setattr__(self, "max", float(self.max))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.max - self.min) / (self.n - 1)

    @property
    def length(self) -> float:
        return self.max - self.min

    def node(self, i: int) -> float:
        return float(self.nodes()[i])

    def nodes(self) -> np.ndarray:
        # weighted form: both endpoints exact, symmetric grids hit 0 exactly
        i = np.arange(self.n)
        x = (self.min * (self.n - 1 - i) + self.max * i) / (self.n - 1)
        x[0], x[-1] = self.min, self.max
        return x

    def refined(self) -> "Axis":
        return Axis(self.min, self.max, 2 * self.n - 1)

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "n": self.n}

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """Parse ``"min,max,n"``."""
        parts = text.split(",")
        if len(parts) != 3:
            raise FieldError(f"axis must be 'min,max,n', got {text!r}")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise FieldError(f"bad axis {text!r}: {exc}") from None


class ScalarField:
    """Finite real samples on a 1D or 2D uniform grid."""

    __slots__ = ("axes", "values")

    def __init__(self, axes: Sequence[Axis], values):
        axes = tuple(axes)
        if len(axes) not in (1, 2):
            raise FieldError(f"fields are 1D or 2D, got {len(axes)} axes")
        shape = tuple(a.n for a in axes)
        arr = np.array(values, dtype=float)
        if arr.size != int(np.prod(shape)):
            raise FieldError(
                f"length mismatch: {arr.size} values for grid of shape {shape}"
            )
        arr = arr.reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise FieldError("field values must be finite")
        arr.flags.writeable = False
        self.axes = axes
        self.values = arr

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def grid(self) -> tuple:
        """Coordinate arrays broadcast to the field shape (``indexing="ij"``)."""
        return tuple(np.meshgrid(*(a.nodes() for a in self.axes), indexing="ij"))

    def same_grid(self, other: "ScalarField") -> bool:
        return self.axes == other.axes

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.axes, values)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other, self))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other, self))

    def __neg__(self):
        return self.with_values(-self.values)

    def __repr__(self):
        ax = ", ".join(f"[{a.min:g},{a.max:g}]x{a.n}" for a in self.axes)
        return f"ScalarField({ax})"

    # serialization

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "axes": [a.to_dict() for a in self.axes],
            "values": [float(v) for v in self.values.ravel()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "ScalarField":
        try:
            dim = doc["dim"]
            axes = [Axis(a["min"], a["max"], a["n"]) for a in doc["axes"]]
            values = doc["values"]
        except (KeyError, TypeError) as exc:
            raise FieldError(f"malformed field document: missing {exc}") from None
        if dim != len(axes):
            raise FieldError(f"dim={dim} but {len(axes)} axes given")
        if not isinstance(values, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in values
        ):
            raise FieldError("values must be a list of numbers")
        return cls(axes, values)

    @classmethod
    def from_json(cls, text: str) -> "ScalarField":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FieldError(f"invalid JSON: {exc}") from None
        return cls.from_dict(doc)


def _vals(other, like: ScalarField):
    if isinstance(other, ScalarField):
        if not like.same_grid(other):
            raise FieldError("grid mismatch")
        return other.values
    return other


def read_field(path) -> ScalarField:
    return ScalarField.from_json(Path(path).read_text())


def write_field(path, f: ScalarField) -> None:
    Path(path).write_text(f.to_json() + "\n")


def sample(fn, axes: Sequence[Axis]) -> ScalarField:
    """Sample a vectorized callable ``fn(*coords)`` on the grid."""
    coords = np.meshgrid(*(a.nodes() for a in axes), indexing="ij")
    return ScalarField(axes, np.broadcast_to(fn(*coords), coords[0].shape))


def pointwise_min(*fields: ScalarField) -> ScalarField:
    first = fields[0]
    for f in fields[1:]:
        if not first.same_grid(f):
            raise FieldError("grid mismatch")
    return first.with_values(np.minimum.reduce([f.values for f in fields]))


def pointwise_max(*fields: ScalarField) -> ScalarField:
    first = fields[0]
    for f in fields[1:]:
        if not first.same_grid(f):
            raise FieldError("grid mismatch")
    return first.with_values(np.maximum.reduce([f.values for f in fields]))


def _require_stencil(f: ScalarField):
    for a in f.axes:
        if a.n < 3:
            raise FieldError("grid too coarse for differences")


def gradient_fd(f: ScalarField) -> tuple:
    """Per-axis derivative arrays.

    Central differences inside, first-order one-sided differences on the
    boundary nodes.
    """
    _require_stencil(f)
    out = []
    for k, a in enumerate(f.axes):
        v = np.moveaxis(f.values, k, 0)
        g = np.empty_like(v)
        g[1:-1] = (v[2:] - v[:-2]) / (2 * a.h)
        g[0] = (v[1] - v[0]) / a.h
        g[-1] = (v[-1] - v[-2]) / a.h
        out.append(np.moveaxis(g, 0, k))
    return tuple(out)


def lipschitz_seminorm(f: ScalarField) -> float:
    """Largest adjacent-node slope over all axes."""
    best = 0.0
    for k, a in enumerate(f.axes):
        d = np.abs(np.diff(f.values, axis=k)) / a.h
        best = max(best, float(d.max()))
    return best


def second_differences(f: ScalarField) -> list:
    """Interior second-difference quotients (axis ones, then the mixed one in 2D)."""
    _require_stencil(f)
    v = f.values
    if f.dim == 1:
        h = f.axes[0].h
        return [(v[:-2] - 2 * v[1:-1] + v[2:]) / h**2]
    h0, h1 = f.axes[0].h, f.axes[1].h
    d00 = (v[:-2, 1:-1] - 2 * v[1:-1, 1:-1] + v[2:, 1:-1]) / h0**2
    d11 = (v[1:-1, :-2] - 2 * v[1:-1, 1:-1] + v[1:-1, 2:]) / h1**2
    d01 = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h0 * h1)
    return [d00, d11, d01]


def c11_seminorm(f: ScalarField) -> float:
    """Largest magnitude of interior second-difference quotients."""
    return max(float(np.abs(d).max()) for d in second_differences(f))


def laplacian(f: ScalarField) -> np.ndarray:
    """Discrete Laplacian at interior nodes (3-point in 1D, 5-point in 2D)."""
    d = second_differences(f)
    return d[0] if f.dim == 1 else d[0] + d[1]


def is_discretely_convex(f: ScalarField, tol: float = 0.0) -> bool:
    """Nonnegative second differences along every axis (and both diagonals in 2D)."""
    return convexity_violation(f) <= tol


def convexity_violation(f: ScalarField) -> float:
    """Largest negative part of the raw (unscaled) convexity stencils."""
    v = f.values
    if f.dim == 1:
        stencils = [v[:-2] - 2 * v[1:-1] + v[2:]]
    else:
        c = v[1:-1, 1:-1]
        stencils = [
            v[:-2, 1:-1] - 2 * c + v[2:, 1:-1],
            v[1:-1, :-2] - 2 * c + v[1:-1, 2:],
            v[:-2, :-2] - 2 * c + v[2:, 2:],
            v[:-2, 2:] - 2 * c + v[2:, :-2],
        ]
    worst = 0.0
    for s in stencils:
        if s.size:
            worst = max(worst, float(-s.min()))
    return worst


def refine(f: ScalarField) -> ScalarField:
    """Halve every spacing; old nodes keep their values, new ones interpolate."""
    axes = [a.refined() for a in f.axes]
    v = f.values
    if f.dim == 1:
        out = np.empty(axes[0].n)
        out[::2] = v
        out[1::2] = 0.5 * (v[:-1] + v[1:])
        return ScalarField(axes, out)
    out = np.empty((axes[0].n, axes[1].n))
    out[::2, ::2] = v
    out[1::2, ::2] = 0.5 * (v[:-1, :] + v[1:, :])
    out[::2, 1::2] = 0.5 * (v[:, :-1] + v[:, 1:])
    out[1::2, 1::2] = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    return ScalarField(axes, out)


def sub_box(f: ScalarField, fraction: float) -> tuple:
    """Index slices of the centered box whose side is ``fraction`` of each axis."""
    slices = []
    for a in f.axes:
        c = 0.5 * (a.min + a.max)
        half = 0.5 * fraction * a.length
        x = a.nodes()
        idx = np.nonzero((x >= c - half - 1e-12 * a.length) & (x <= c + half + 1e-12 * a.length))[0]
        slices.append(slice(int(idx[0]), int(idx[-1]) + 1))
    return tuple(slices)


def restrict(f: ScalarField, slices: tuple) -> ScalarField:
    axes = []
    for a, sl in zip(f.axes, slices):
        i0, i1 = sl.start, sl.stop - 1
        axes.append(Axis(a.node(i0), a.node(i1), i1 - i0 + 1))
    return ScalarField(axes, f.values[slices])
