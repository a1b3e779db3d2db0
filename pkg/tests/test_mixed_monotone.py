import numpy as np
import pytest

from sisio import expr as ex
from sisio.errors import DimensionError, EstimationError, InvalidInputError
from sisio.interval import IntervalVector
from sisio.linalg import spectral_norm
from sisio.mixed_monotone import (
    JacobianBounds,
    build_decomposition,
    decomposition_lipschitz,
    default_grid,
    estimate_jacobian_bounds,
    estimate_lipschitz,
    eval_decomposition,
)

F = [ex.parse("x2 + 0.25*sin(0.1*x1*x2)"), ex.parse("-0.2*x2 - 1.9*sin(0.01*x1)")]
G = [ex.parse("x1 + 0.526*x2 - 0.05*x1*x2")]
DOMAIN = IntervalVector([-5.0, -15.0], [5.0, 15.0])

# lower/upper slope matrices printed for the worked example, and the corrections derived there
PRINTED_A_F = np.array([[-0.25, 0.99], [-0.0019, -0.2]])
PRINTED_B_F = np.array([[0.25, 1.01], [0.0019, 0.2]])
PRINTED_A_G = np.array([[0.75, -0.224]])
PRINTED_B_G = np.array([[1.25, 0.1276]])
PRINTED_C_F = np.array([[0.251, 0.0], [0.0029, 0.201]])
PRINTED_C_G = np.array([[0.0, 0.225]])


def analytic_slope_ranges():
    """Hand-derived partials of the example fields, evaluated on a fine grid."""
    x1, x2 = np.meshgrid(np.linspace(-5, 5, 801), np.linspace(-15, 15, 801), indexing="ij")
    c = np.cos(0.1 * x1 * x2)
    f_parts = [
        [0.025 * x2 * c, 1.0 + 0.025 * x1 * c],
        [-0.019 * np.cos(0.01 * x1), np.full_like(x1, -0.2)],
    ]
    g_parts = [[1.0 - 0.05 * x2, 0.526 - 0.05 * x1]]

    def ranges(parts):
        lo = np.array([[p.min() for p in row] for row in parts])
        hi = np.array([[p.max() for p in row] for row in parts])
        return lo, hi

    return ranges(f_parts), ranges(g_parts)


@pytest.fixture(scope="module")
def f_bounds():
    return estimate_jacobian_bounds(F, DOMAIN)


@pytest.fixture(scope="module")
def g_bounds():
    return estimate_jacobian_bounds(G, DOMAIN)


class TestJacobianBounds:
    def test_rejects_inverted(self):
        with pytest.raises(InvalidInputError):
            JacobianBounds([[1.0]], [[0.0]])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionError):
            JacobianBounds([[1.0, 2.0]], [[3.0]])

    def test_default_grid(self):
        assert default_grid(1) == default_grid(2) == 101
        assert default_grid(4) < 101
        assert default_grid(40) >= 2

    def test_linear_field_recovers_matrix(self):
        A = np.array([[1.5, -2.0], [0.25, 3.0]])
        field = [ex.parse("1.5*x1 - 2*x2"), ex.parse("0.25*x1 + 3*x2")]
        jb = estimate_jacobian_bounds(field, DOMAIN, grid=11, inflate_rel=0.0, inflate_abs=0.0)
        np.testing.assert_array_equal(jb.low, A)
        np.testing.assert_array_equal(jb.high, A)
        padded = estimate_jacobian_bounds(field, DOMAIN, grid=11)
        np.testing.assert_allclose(padded.low, A, atol=1.1e-6, rtol=0)
        assert np.all(padded.low < A) and np.all(padded.high > A)

    def test_example_bounds_enclose_analytic_ranges(self, f_bounds, g_bounds):
        (flo, fhi), (glo, ghi) = analytic_slope_ranges()
        assert np.all(f_bounds.low <= flo) and np.all(f_bounds.high >= fhi)
        assert np.all(g_bounds.low <= glo) and np.all(g_bounds.high >= ghi)
        # padding is 5% of the sampled range plus 1e-6, so the bounds stay close
        np.testing.assert_allclose(f_bounds.low, flo, atol=0.05 * (fhi - flo).max() + 1e-5)
        np.testing.assert_allclose(g_bounds.high, ghi, atol=0.05 * (ghi - glo).max() + 1e-5)

    @pytest.mark.xfail(
        strict=True,
        reason="printed slope bounds do not match the example fields on this domain "
        "(d f1/d x2 spans [0.875, 1.125], d g/d x1 spans [0.25, 1.75])",
    )
    def test_example_bounds_match_printed_values(self, f_bounds, g_bounds):
        np.testing.assert_allclose(f_bounds.low, PRINTED_A_F, atol=2e-2)
        np.testing.assert_allclose(f_bounds.high, PRINTED_B_F, atol=2e-2)
        np.testing.assert_allclose(g_bounds.low, PRINTED_A_G, atol=2e-2)
        np.testing.assert_allclose(g_bounds.high, PRINTED_B_G, atol=2e-2)

    def test_grid_samples_lie_inside(self, f_bounds):
        X = np.stack(np.meshgrid(np.linspace(-5, 5, 101), np.linspace(-15, 15, 101), indexing="ij")).reshape(2, -1)
        for i, h in enumerate(F):
            for j in range(2):
                d = ex.partial_batch(h, X, j)
                assert np.all(f_bounds.low[i, j] <= d) and np.all(d <= f_bounds.high[i, j])

    def test_off_grid_samples_lie_inside(self, f_bounds, rng):
        X = rng.uniform(DOMAIN.lo[:, None], DOMAIN.hi[:, None], (2, 20000))
        for i, h in enumerate(F):
            for j in range(2):
                d = ex.partial_batch(h, X, j)
                assert np.all(f_bounds.low[i, j] <= d) and np.all(d <= f_bounds.high[i, j])

    def test_non_finite_partial_is_reported(self):
        with pytest.raises(EstimationError) as exc:
            estimate_jacobian_bounds([ex.parse("x2"), ex.parse("1/x1")], IntervalVector([-1.0, 0.0], [1.0, 1.0]), grid=5)
        assert (exc.value.row, exc.value.col) == (1, 0)
        assert exc.value.point[0] == 0.0

    def test_grid_too_small(self):
        with pytest.raises(InvalidInputError):
            estimate_jacobian_bounds(F, DOMAIN, grid=1)

    def test_order_independent(self):
        # reversing the domain axes' sampling order (via a permuted field) gives the permuted bounds
        swapped = [ex.parse("x1 + 0.25*sin(0.1*x2*x1)"), ex.parse("-0.2*x1 - 1.9*sin(0.01*x2)")]
        dom = IntervalVector([-15.0, -5.0], [15.0, 5.0])
        a = estimate_jacobian_bounds(F, DOMAIN)
        b = estimate_jacobian_bounds(swapped, dom)
        np.testing.assert_allclose(a.low, b.low[:, ::-1], rtol=0, atol=1e-15)


class TestDecomposition:
    def test_corrections_from_printed_slopes(self):
        cf = build_decomposition(F, JacobianBounds(PRINTED_A_F, PRINTED_B_F), DOMAIN).correction
        cg = build_decomposition(G, JacobianBounds(PRINTED_A_G, PRINTED_B_G), DOMAIN).correction
        np.testing.assert_array_equal(cf, [[0.25, 0.0], [0.0019, 0.2]])
        np.testing.assert_array_equal(cg, [[0.0, 0.224]])
        assert np.max(np.abs(cf - PRINTED_C_F)) <= 2e-3
        assert np.max(np.abs(cg - PRINTED_C_G)) <= 1e-3 + 1e-15

    def test_monotone_field_has_no_correction(self, rng):
        field = [ex.parse("x1 + exp(0.1*x2)"), ex.parse("2*x2")]
        box = IntervalVector([0.0, 0.0], [1.0, 1.0])
        dec = build_decomposition(field, JacobianBounds([[1.0, 0.1], [0.0, 2.0]], [[1.0, 0.2], [0.0, 2.0]]), box)
        assert not dec.correction.any()
        x, y = rng.uniform(0, 1, (2, 2))
        np.testing.assert_array_equal(dec(x, y), ex.evaluate_vector(field, x))

    def test_zero_slope_gets_padded_correction(self):
        # a partial that is identically zero is padded below zero, so a tiny correction appears
        field = [ex.parse("x1"), ex.parse("2*x2")]
        box = IntervalVector([0.0, 0.0], [1.0, 1.0])
        dec = build_decomposition(field, estimate_jacobian_bounds(field, box), box)
        np.testing.assert_allclose(dec.correction, [[0.0, 1e-6], [1e-6, 0.0]], rtol=0, atol=1e-18)

    def test_nonnegative_linear_map(self):
        field = [ex.parse("2*x1 + x2")]
        dec = build_decomposition(field, JacobianBounds([[2.0, 1.0]], [[2.0, 1.0]]), DOMAIN)
        np.testing.assert_array_equal(dec([1.0, 2.0], [0.0, 0.0]), [4.0])

    def test_shape_mismatch(self, f_bounds):
        with pytest.raises(DimensionError):
            build_decomposition(G, f_bounds, DOMAIN)

    def test_correction_nonnegative_and_read_only(self, f_bounds):
        dec = build_decomposition(F, f_bounds, DOMAIN)
        assert np.all(dec.correction >= 0)
        with pytest.raises(ValueError):
            dec.correction[0, 0] = 1.0

    def test_diagonal_embedding(self, f_bounds, rng):
        dec = build_decomposition(F, f_bounds, DOMAIN)
        for x in rng.uniform(DOMAIN.lo, DOMAIN.hi, (200, 2)):
            np.testing.assert_array_equal(eval_decomposition(dec, x, x), ex.evaluate_vector(F, x))

    def test_initial_box_ordering(self, f_bounds):
        dec = build_decomposition(F, f_bounds, DOMAIN)
        hi, lo = np.array([2.0, 1.1]), np.array([-1.1, -2.0])
        assert np.all(dec(hi, lo) >= dec(lo, hi))

    def test_decomposition_width_bound(self, paper_model, rng):
        dec, L = paper_model.f_dec, paper_model.L_fd
        for _ in range(2000):
            a, b = rng.uniform(DOMAIN.lo, DOMAIN.hi, (2, 2))
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            assert np.linalg.norm(dec(hi, lo) - dec(lo, hi)) <= L * np.linalg.norm(hi - lo) + 1e-12


class TestLipschitz:
    def test_printed_constants(self):
        assert decomposition_lipschitz(0.35, PRINTED_C_F) == pytest.approx(0.852, abs=1e-3)
        assert decomposition_lipschitz(0.74, PRINTED_C_G) == pytest.approx(1.19, abs=1e-2)

    def test_zero_correction(self):
        assert decomposition_lipschitz(0.7, np.zeros((2, 2))) == 0.7

    def test_formula(self, rng):
        C = np.abs(rng.standard_normal((3, 2)))
        assert decomposition_lipschitz(1.0, C) == pytest.approx(1.0 + 2 * np.linalg.norm(C, 2), rel=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            decomposition_lipschitz(-0.1, np.zeros((1, 1)))

    def test_linear_field(self):
        A = np.array([[1.0, 2.0], [-3.0, 0.5]])
        field = [ex.parse("x1 + 2*x2"), ex.parse("-3*x1 + 0.5*x2")]
        jb = JacobianBounds(A, A)
        assert estimate_lipschitz(field, DOMAIN, jb) == pytest.approx(np.linalg.norm(A, 2), rel=1e-12)

    def test_sine_from_unit_bounds(self):
        field = [ex.parse("sin(x1)")]
        assert estimate_lipschitz(field, IntervalVector([-4.0], [4.0]), JacobianBounds([[-1.0]], [[1.0]])) == 1.0

    def test_example_bound_exceeds_printed_constant(self, f_bounds, rng):
        L = estimate_lipschitz(F, DOMAIN, f_bounds)
        assert L >= 0.35
        # empirical difference quotients never exceed the bound
        for _ in range(2000):
            a, b = rng.uniform(DOMAIN.lo, DOMAIN.hi, (2, 2))
            fa, fb = ex.evaluate_vector(F, a), ex.evaluate_vector(F, b)
            assert np.linalg.norm(fa - fb) <= L * np.linalg.norm(a - b) + 1e-12

    def test_vertex_search_beats_absolute_bound(self):
        jb = JacobianBounds([[1.0, -1.0], [-1.0, 1.0]], [[1.0, 1.0], [1.0, 1.0]])
        # the all-ones vertex has norm 2, which is also ||max(|low|, |high|)||
        assert estimate_lipschitz(None, DOMAIN, jb) == pytest.approx(2.0, rel=1e-12)
        jb = JacobianBounds([[1.0, -1.0]], [[1.0, -0.5]])
        assert estimate_lipschitz(None, DOMAIN, jb) == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_many_free_entries_use_absolute_bound(self, rng):
        low = -np.abs(rng.standard_normal((4, 4)))
        high = np.abs(rng.standard_normal((4, 4)))
        M = np.maximum(-low, high)
        L = estimate_lipschitz(None, IntervalVector(np.zeros(4), np.ones(4)), JacobianBounds(low, high))
        assert L == pytest.approx(np.linalg.norm(M, 2), rel=1e-10)

    def test_spectral_norm_oracle(self, rng):
        for _ in range(200):
            M = rng.standard_normal(tuple(rng.integers(1, 5, 2)))
            assert spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-10)
