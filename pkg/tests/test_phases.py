import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symris.phases import (
    MultipleCrossingWarning,
    curve_intersections,
    first_crossing,
    fit_boundary,
    phase_ordering_ok,
)


def synthetic_sweep(x, a, b):
    """Logistic-like curves with NPT = BE exactly at a and BE = SEP exactly at b (piecewise linear)."""
    rows = []
    for xi in x:
        npt = np.clip(0.5 - (xi - a) / 10, 0, 1)
        sep = np.clip(0.5 + (xi - b) / 10, 0, 1)
        be = 1 - npt - sep
        rows.append((xi, npt, be, sep))
    return rows


class TestFirstCrossing:
    def test_linear_interpolation(self):
        pos, cnt = first_crossing([0, 1, 2], [1.0, 0.6, 0.0], [0.0, 0.2, 1.0])
        # diff = 1, 0.4, -1: crossing at 1 + 0.4 / 1.4
        assert pos == pytest.approx(1 + 0.4 / 1.4)
        assert cnt == 1

    def test_zero_run(self):
        pos, cnt = first_crossing([0, 1, 2, 3], [1, 0.5, 0.5, 0], [0, 0.5, 0.5, 1])
        assert pos == 1.0 and cnt == 1

    def test_touching_is_not_a_crossing(self):
        assert first_crossing([0, 1, 2], [1, 0.5, 1], [0, 0.5, 0]) == (None, 0)

    @given(st.floats(1.0, 9.0), st.floats(0.2, 3.0))
    def test_exact_for_linear_curves(self, root, slope):
        x = np.linspace(0, 10, 11)
        pos, _ = first_crossing(x, slope * (root - x), np.zeros_like(x))
        assert pos == pytest.approx(root, abs=1e-9)


class TestIntersections:
    def test_synthetic_recovered(self):
        out = curve_intersections(synthetic_sweep(np.arange(1, 41), 7.25, 23.5))
        assert out["NPT_to_BE"].ancilla == pytest.approx(7.25)
        assert out["BE_to_SEP"].ancilla == pytest.approx(23.5)
        assert phase_ordering_ok(out)

    def test_absent_boundary(self):
        rows = [(x, 0.0, 0.2, 0.8) for x in range(5)]
        out = curve_intersections(rows)
        assert not out["NPT_to_BE"].present and not out["BE_to_SEP"].present
        assert phase_ordering_ok(out)

    def test_multiple_crossings_warn(self):
        rows = [(0, 0.9, 0.1, 0), (1, 0.1, 0.9, 0), (2, 0.9, 0.1, 0), (3, 0.1, 0.9, 0)]
        with pytest.warns(MultipleCrossingWarning):
            out = curve_intersections(rows)
        assert out["NPT_to_BE"].multiplicity == 3
        assert out["NPT_to_BE"].ancilla == pytest.approx(0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            curve_intersections([(1, 0.5, 0.5, 0.0)])
        with pytest.raises(ValueError):
            curve_intersections([(2, 1, 0, 0), (1, 0, 1, 0)])


class TestFits:
    def test_exact_quadratic(self):
        pts = [(n, 0.5 * n * n - n + 3) for n in (4, 5, 6, 7)]
        fit = fit_boundary(pts, "quadratic", "BE_to_SEP")
        np.testing.assert_allclose(fit.coefficients, [0.5, -1, 3], atol=1e-10)
        assert fit.residual < 1e-20
        assert fit(8) == pytest.approx(27)
        lin = fit_boundary(pts, "linear")
        assert lin.residual > fit.residual

    def test_json(self):
        doc = fit_boundary([(4, 1.0), (5, 2.0)], "linear", "NPT_to_BE").to_json()
        assert doc["model"] == "linear" and doc["kind"] == "NPT_to_BE"
        np.testing.assert_allclose(doc["coefficients"], [1.0, -3.0], atol=1e-12)

    def test_underdetermined(self):
        with pytest.raises(ValueError, match="at least 3"):
            fit_boundary([(4, 1.0)], "quadratic")
        with pytest.raises(ValueError):
            fit_boundary([(4, 1.0), (5, 2.0)], "cubic")


def test_no_warning_for_clean_sweep():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        curve_intersections(synthetic_sweep(np.arange(1, 30), 5.5, 15.5))


def test_upward_change_is_not_the_crossing():
    # g briefly above f by noise, then f dominates, then g overtakes between 2 and 3
    pos, cnt = first_crossing([0, 1, 2, 3], [0.0, 0.3, 0.6, 0.2], [0.1, 0.1, 0.3, 0.6])
    assert cnt == 2
    assert pos == pytest.approx(2 + 0.3 / 0.7)
