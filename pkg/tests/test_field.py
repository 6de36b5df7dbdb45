import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvxenvelope.field import (
    Axis,
    FieldError,
    ScalarField,
    c11_seminorm,
    gradient_fd,
    is_discretely_convex,
    laplacian,
    lipschitz_seminorm,
    pointwise_max,
    pointwise_min,
    read_field,
    refine,
    restrict,
    sample,
    sub_box,
    write_field,
)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def fields_1d(draw, min_n=3, max_n=40):
    n = draw(st.integers(min_n, max_n))
    lo = draw(st.floats(-5, 5))
    width = draw(st.floats(0.1, 10))
    vals = draw(st.lists(finite, min_size=n, max_size=n))
    return ScalarField([Axis(lo, lo + width, n)], vals)


@st.composite
def field_pairs(draw):
    f = draw(fields_1d())
    vals = draw(st.lists(finite, min_size=f.shape[0], max_size=f.shape[0]))
    return f, f.with_values(vals)


class TestAxis:
    def test_nodes_hit_endpoints(self):
        a = Axis(-1.0, 2.0, 7)
        x = a.nodes()
        assert x[0] == -1.0 and x[-1] == 2.0
        assert a.h == pytest.approx(0.5)
        assert a.node(3) == 0.5

    def test_symmetric_grid_contains_zero(self):
        assert Axis(-1, 1, 21).nodes()[10] == 0.0

    @pytest.mark.parametrize("args", [(1, 1, 5), (2, 1, 5), (0, 1, 1), (0, float("inf"), 3)])
    def test_rejects_bad_axes(self, args):
        with pytest.raises(FieldError):
            Axis(*args)

    def test_parse(self):
        assert Axis.parse("-4,4,1025") == Axis(-4.0, 4.0, 1025)
        with pytest.raises(FieldError):
            Axis.parse("0,1")

    def test_refined(self):
        assert Axis(0, 1, 5).refined() == Axis(0, 1, 9)

    @given(st.floats(-100, 100), st.floats(1e-3, 100), st.integers(2, 500))
    def test_node_spacing_invariant(self, lo, width, n):
        a = Axis(lo, lo + width, n)
        x = a.nodes()
        assert x[-1] == a.max
        assert np.all(np.diff(x) > 0)
        np.testing.assert_allclose(x, lo + np.arange(n) * a.h, rtol=0, atol=4e-15 * max(1, abs(lo) + width))


class TestScalarField:
    def test_rejects_length_mismatch(self):
        with pytest.raises(FieldError):
            ScalarField([Axis(0, 1, 3)], [1.0, 2.0])

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(FieldError):
            ScalarField([Axis(0, 1, 3)], [0.0, bad, 1.0])

    def test_rejects_three_axes(self):
        with pytest.raises(FieldError):
            ScalarField([Axis(0, 1, 2)] * 3, np.zeros(8))

    def test_values_read_only(self):
        f = ScalarField([Axis(0, 1, 3)], [0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            f.values[0] = 5.0

    def test_row_major_layout(self):
        f = ScalarField([Axis(0, 1, 2), Axis(0, 1, 3)], np.arange(6.0))
        assert f.values[1, 0] == 3.0
        assert f.to_dict()["values"] == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    def test_json_round_trip_2d(self, tmp_path):
        f = sample(lambda x, y: x * y + 0.1, [Axis(-1, 1, 4), Axis(0, 2, 3)])
        write_field(tmp_path / "f.json", f)
        g = read_field(tmp_path / "f.json")
        assert g.same_grid(f)
        assert np.array_equal(g.values, f.values)

    @given(fields_1d())
    def test_json_round_trip_bit_exact(self, f):
        g = ScalarField.from_json(f.to_json())
        assert g.axes == f.axes
        assert np.array_equal(g.values, f.values)

    @pytest.mark.parametrize(
        "doc",
        [
            {"dim": 1, "axes": [{"min": 0, "max": 1, "n": 3}], "values": [1, 2]},
            {"dim": 2, "axes": [{"min": 0, "max": 1, "n": 3}], "values": [1, 2, 3]},
            {"dim": 1, "axes": [{"min": 0, "max": 1, "n": 3}], "values": [1, "x", 3]},
            {"dim": 1, "axes": [{"min": 0, "max": 1}], "values": [1, 2, 3]},
            {"dim": 1, "axes": [{"min": 0, "max": 1, "n": 3}]},
        ],
    )
    def test_reader_rejects_malformed(self, doc):
        with pytest.raises(FieldError):
            ScalarField.from_dict(doc)

    def test_reader_rejects_non_finite_json(self):
        text = '{"dim": 1, "axes": [{"min": 0, "max": 1, "n": 2}], "values": [1, NaN]}'
        with pytest.raises(FieldError):
            ScalarField.from_json(text)

    def test_arithmetic_requires_same_grid(self):
        f = ScalarField([Axis(0, 1, 3)], [0, 1, 2])
        with pytest.raises(FieldError):
            f + ScalarField([Axis(0, 2, 3)], [0, 1, 2])
        assert np.array_equal((f + 1).values, [1, 2, 3])
        assert np.array_equal((-f).values, [0, -1, -2])


class TestGradient:
    def test_quadratic_exact_inside(self):
        a = Axis(-1, 1, 101)
        f = sample(lambda x: x**2, [a])
        (g,) = gradient_fd(f)
        x = a.nodes()
        np.testing.assert_allclose(g[1:-1], 2 * x[1:-1], rtol=0, atol=1e-12)

    def test_constant(self):
        (g,) = gradient_fd(ScalarField([Axis(0, 1, 5)], [5.0] * 5))
        assert np.all(g == 0)

    def test_abs_on_symmetric_grid(self):
        a = Axis(-1, 1, 21)
        (g,) = gradient_fd(sample(np.abs, [a]))
        x = a.nodes()
        assert g[10] == 0.0
        inner = np.arange(1, 20) != 10
        np.testing.assert_allclose(g[1:-1][inner[:]], np.sign(x[1:-1][inner]), rtol=0, atol=1e-12)

    def test_affine_2d_exact_everywhere(self):
        f = sample(lambda x, y: 3 * x - 2 * y + 1, [Axis(0, 1, 5), Axis(-1, 1, 9)])
        gx, gy = gradient_fd(f)
        np.testing.assert_allclose(gx, 3.0, atol=1e-12)
        np.testing.assert_allclose(gy, -2.0, atol=1e-12)

    def test_too_coarse(self):
        with pytest.raises(FieldError, match="grid too coarse for differences"):
            gradient_fd(ScalarField([Axis(0, 1, 2)], [0, 1]))

    @given(field_pairs())
    def test_linear(self, pair):
        f, g = pair
        (a,) = gradient_fd(f + g)
        (b,) = gradient_fd(f)
        (c,) = gradient_fd(g)
        scale = np.abs(f.values).max() + np.abs(g.values).max() + 1
        np.testing.assert_allclose(a, b + c, rtol=0, atol=1e-12 * scale / f.axes[0].h)


class TestSeminorms:
    def test_lipschitz_affine(self):
        assert lipschitz_seminorm(sample(lambda x: 3 * x, [Axis(0, 1, 11)])) == pytest.approx(3.0)

    def test_lipschitz_constant(self):
        assert lipschitz_seminorm(ScalarField([Axis(0, 1, 4)], [2.0] * 4)) == 0.0

    def test_lipschitz_square(self):
        # largest adjacent slope of x^2 with h = 0.02: (1 - (1 - h)^2) / h = 2 - h
        f = sample(lambda x: x**2, [Axis(-1, 1, 101)])
        assert lipschitz_seminorm(f) == pytest.approx(1.98, abs=1e-12)

    def test_c11_square(self):
        assert c11_seminorm(sample(lambda x: x**2, [Axis(-1, 1, 11)])) == pytest.approx(2.0, abs=1e-9)

    def test_c11_constant(self):
        assert c11_seminorm(ScalarField([Axis(0, 1, 4)], [1.0] * 4)) == 0.0

    def test_c11_kink(self):
        f = sample(np.abs, [Axis(-1, 1, 201)])
        assert c11_seminorm(f) == pytest.approx(200.0, rel=1e-9)

    def test_c11_includes_mixed_difference(self):
        f = sample(lambda x, y: x * y, [Axis(-1, 1, 5), Axis(-1, 1, 5)])
        assert c11_seminorm(f) == pytest.approx(1.0)

    @given(fields_1d(), st.floats(-10, 10), st.floats(-10, 10))
    def test_c11_affine_invariant(self, f, a, b):
        g = f + sample(lambda x: a * x + b, f.axes)
        scale = (np.abs(f.values).max() + 10 * (1 + np.abs(f.axes[0].nodes()).max())) / f.axes[0].h ** 2
        assert c11_seminorm(g) == pytest.approx(c11_seminorm(f), abs=1e-11 * scale)

    @given(field_pairs())
    def test_min_max_lipschitz(self, pair):
        f, g = pair
        bound = max(lipschitz_seminorm(f), lipschitz_seminorm(g))
        eps = 1e-12 * bound + 1e-12
        assert lipschitz_seminorm(pointwise_min(f, g)) <= bound + eps
        assert lipschitz_seminorm(pointwise_max(f, g)) <= bound + eps

    @given(fields_1d())
    def test_refine_never_increases_lipschitz(self, f):
        lip = lipschitz_seminorm(f)
        assert lipschitz_seminorm(refine(f)) <= lip * (1 + 1e-12) + 1e-12

    def test_laplacian_2d(self):
        f = sample(lambda x, y: x**2 + 3 * y**2, [Axis(-1, 1, 9), Axis(-1, 1, 7)])
        np.testing.assert_allclose(laplacian(f), 8.0, atol=1e-9)

    def test_convexity_uses_diagonals(self):
        # x*y has nonnegative axis stencils but a negative anti-diagonal one
        f = sample(lambda x, y: x * y, [Axis(-1, 1, 5), Axis(-1, 1, 5)])
        assert not is_discretely_convex(f)
        assert is_discretely_convex(sample(lambda x, y: (x + y) ** 2, [Axis(-1, 1, 5), Axis(-1, 1, 5)]))


class TestRefine:
    def test_keeps_old_nodes(self):
        f = sample(np.sin, [Axis(0, 3, 7)])
        assert np.array_equal(refine(f).values[::2], f.values)

    def test_two_nodes(self):
        r = refine(ScalarField([Axis(0, 1, 2)], [1.0, 3.0]))
        assert r.axes[0].n == 3 and r.values[1] == 2.0

    def test_square_on_three_nodes(self):
        r = refine(sample(lambda x: x**2, [Axis(-1, 1, 3)]))
        assert list(r.values) == [1.0, 0.5, 0.0, 0.5, 1.0]

    def test_affine_2d_stays_affine(self):
        f = sample(lambda x, y: 2 * x - y + 0.5, [Axis(0, 1, 3), Axis(0, 2, 5)])
        r = refine(f)
        X, Y = r.grid()
        np.testing.assert_allclose(r.values, 2 * X - Y + 0.5, atol=1e-14)


def test_sub_box_and_restrict():
    f = sample(lambda x: x, [Axis(0, 1, 9)])
    sl = sub_box(f, 0.5)
    g = restrict(f, sl)
    assert g.axes[0].min == 0.25 and g.axes[0].max == 0.75
    assert np.array_equal(g.values, f.values[2:7])


def test_write_field_is_valid_json(tmp_path):
    f = ScalarField([Axis(0, 1, 3)], [0.1, 0.2, 0.3])
    write_field(tmp_path / "f.json", f)
    doc = json.loads((tmp_path / "f.json").read_text())
    assert doc["dim"] == 1 and doc["axes"] == [{"min": 0.0, "max": 1.0, "n": 3}]
