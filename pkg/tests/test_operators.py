import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpliouville.grid import Grid, derivative, integrate, l2_norm
from gpliouville.operators import (
    NonOrthogonalError,
    OperatorContext,
    bump_test_function,
    factorization_residuals,
    inversion_weight_ratio,
    kernel_kc,
    verify_factorization,
)
from gpliouville.soliton import SQRT2


@pytest.fixture(scope="module")
def ctx():
    return OperatorContext.for_velocity(0.5, Grid(30.0, 3001))


@pytest.fixture(scope="module")
def ctx0():
    return OperatorContext.for_velocity(0.0, Grid(30.0, 3001))


def test_L_plus_kernel(ctx):
    assert np.max(np.abs(ctx.apply_L_plus(ctx.profile.Q))) < 1e-7
    assert np.all(ctx.apply_L_plus(np.zeros(ctx.grid.n_points)) == 0.0)


def test_L_plus_on_constant(ctx):
    one = np.ones(ctx.grid.n_points)
    np.testing.assert_allclose(ctx.apply_L_plus(one), ctx.beta**2 - 3 * ctx.profile.Q, atol=1e-9)


def test_L_minus_two_ways(ctx):
    f = np.exp(-ctx.grid.x**2) * np.cos(ctx.grid.x)
    lhs = ctx.apply_L_minus(f) - ctx.c**2 * f
    rhs = -ctx.d(f, 2) - SQRT2 * derivative(ctx.grid, ctx.profile.R) * f
    assert np.max(np.abs(lhs - rhs)) < 1e-7
    assert np.all(ctx.apply_L_minus(np.zeros(ctx.grid.n_points)) == 0.0)


def test_L_minus_on_Q_against_refined_grid(ctx0):
    fine = OperatorContext.for_velocity(0.0, Grid(30.0, 12001))
    coarse_val = ctx0.apply_L_minus(ctx0.profile.Q)
    fine_val = fine.apply_L_minus(fine.profile.Q)[::4]
    assert np.max(np.abs(coarse_val - fine_val)) < 1e-7


def test_S_star_of_one(ctx):
    one = np.ones(ctx.grid.n_points)
    np.testing.assert_allclose(ctx.apply_S_star(one), SQRT2 * ctx.profile.R, atol=1e-12)


def test_S_minus_S_star(ctx):
    Q = ctx.profile.Q
    np.testing.assert_allclose(ctx.apply_S(Q) - ctx.apply_S_star(Q), 2 * ctx.d(Q), atol=1e-14)
    zero = np.zeros(ctx.grid.n_points)
    assert np.all(ctx.apply_S(zero) == 0) and np.all(ctx.apply_S_star(zero) == 0)


def test_perp_projection(ctx, rng):
    Q = ctx.profile.Q
    assert np.max(np.abs(ctx.perp_project(Q))) < 1e-15
    f = bump_test_function(ctx.grid, rng)
    fp = ctx.perp_project(f)
    assert abs(ctx.inner_Q(fp)) < 1e-14
    np.testing.assert_allclose(ctx.perp_project(fp), fp, atol=1e-12)
    odd = ctx.grid.x * np.exp(-ctx.grid.x**2)  # orthogonal to the even Q
    np.testing.assert_allclose(ctx.perp_project(odd), odd, atol=1e-15)


def test_invert_S_star_examples(ctx):
    g = ctx.invert_S_star(SQRT2 * ctx.profile.R)
    assert np.max(np.abs(g - 1.0)) < 1e-7
    assert np.all(ctx.invert_S_star(np.zeros(ctx.grid.n_points)) == 0.0)


@pytest.mark.parametrize("c", [0.0, 0.5, -1.0, 1.3])
def test_invert_S_star_round_trip(c, rng):
    ctx = OperatorContext.for_velocity(c, Grid(30.0, 3001))
    for _ in range(5):
        f = ctx.perp_project(bump_test_function(ctx.grid, rng))
        g = ctx.invert_S_star(f)
        assert l2_norm(ctx.grid, ctx.apply_S_star(g) - f) / l2_norm(ctx.grid, f) <= 1e-7


def test_invert_S_star_rejects_non_orthogonal(ctx):
    with pytest.raises(NonOrthogonalError):
        ctx.invert_S_star(ctx.profile.Q)
    g = ctx.invert_S_star(ctx.profile.Q, project=True)
    assert np.all(np.isfinite(g))


def test_one_sided_formulas_agree(ctx, rng):
    f = ctx.perp_project(bump_test_function(ctx.grid, rng))
    gr, gl = ctx.invert_S_star(f, one_sided=True)
    inner = np.abs(ctx.grid.x) <= 0.25 * ctx.grid.half_length
    scale = np.max(np.abs(gr[inner]))
    assert np.max(np.abs(gr - gl)[inner]) / scale <= 1e-7


def test_kernel_kc(ctx0):
    x, k = kernel_kc(ctx0)
    assert x[0] == 0.0 and k[0] == pytest.approx(-1.0, abs=1e-8)
    half = x <= 0.5 * ctx0.grid.half_length
    assert np.max(np.abs(k[half] + np.exp(-ctx0.beta * x[half]))) <= 1e-8


def test_kernel_kc_at_ln2():
    h = np.log(2.0) / 35
    grid = Grid(2000 * h, 4001)  # L = 2000 h ~ 39.6, x = ln 2 is node 35
    x, k = kernel_kc(OperatorContext.for_velocity(1.0, grid))
    j = int(round(np.log(2.0) / h))
    assert x[j] == pytest.approx(np.log(2.0), abs=1e-14)
    assert abs(k[j] + 0.5) <= 1e-8


def test_factorization_on_Q(ctx):
    r = ctx.apply_S_star(ctx.apply_S(ctx.profile.Q))
    assert np.max(np.abs(r)) < 1e-6
    assert factorization_residuals(ctx, np.zeros(ctx.grid.n_points)) == (0.0, 0.0)


def test_factorization_c07_and_order():
    reps = [verify_factorization(OperatorContext.for_velocity(0.7, Grid.from_spacing(30.0, h)), 20, 0)
            for h in (0.04, 0.02)]
    fine = reps[1]
    assert max(fine.r1_max, fine.r2_max) <= 1e-5
    assert np.log2(reps[0].r1_max / fine.r1_max) >= 3
    assert np.log2(reps[0].r2_max / fine.r2_max) >= 3


def test_verify_factorization_needs_trials(ctx):
    with pytest.raises(ValueError):
        verify_factorization(ctx, 0)


def test_bump_is_deterministic_and_compact(ctx):
    a = bump_test_function(ctx.grid, np.random.default_rng(3))
    b = bump_test_function(ctx.grid, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)
    assert np.all(a[np.abs(ctx.grid.x) >= 0.5 * ctx.grid.half_length] == 0.0)


def test_matrix_matches_matrix_free(ctx, rng):
    f = bump_test_function(ctx.grid, rng)
    for name, op in (("L_plus", ctx.apply_L_plus), ("L_minus", ctx.apply_L_minus),
                     ("S", ctx.apply_S), ("S_star", ctx.apply_S_star)):
        np.testing.assert_allclose(ctx.matrix(name) @ f, op(f), atol=1e-9)
    with pytest.raises(KeyError):
        ctx.matrix("nope")


def test_weight_ratio_diagnostic_is_finite(ctx, rng):
    r = inversion_weight_ratio(ctx, bump_test_function(ctx.grid, rng))
    assert np.isfinite(r) and r > 0


small = OperatorContext.for_velocity(0.3, Grid.from_spacing(20.0, 0.04))


@given(seed=st.integers(0, 2**32 - 1))
def test_adjointness(seed):
    rng = np.random.default_rng(seed)
    f = bump_test_function(small.grid, rng)
    g = bump_test_function(small.grid, rng)
    lhs = integrate(small.grid, small.apply_S(f) * g)
    rhs = integrate(small.grid, f * small.apply_S_star(g))
    assert abs(lhs - rhs) <= 1e-8 * (l2_norm(small.grid, f) * l2_norm(small.grid, g) + 1e-300)


coef = st.floats(-5, 5).filter(lambda v: v == 0 or abs(v) > 1e-6)


@given(seed=st.integers(0, 2**32 - 1), a=coef, b=coef)
def test_inversion_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    f = small.perp_project(bump_test_function(small.grid, rng))
    g = small.perp_project(bump_test_function(small.grid, rng))
    lhs = small.invert_S_star(a * f + b * g, project=True)
    rhs = a * small.invert_S_star(f) + b * small.invert_S_star(g)
    scale = (abs(a) + abs(b) + 1) * max(np.max(np.abs(small.invert_S_star(f))), 1.0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale


@given(seed=st.integers(0, 2**32 - 1))
def test_inverse_after_S_star_is_identity(seed):
    rng = np.random.default_rng(seed)
    ctx = OperatorContext.for_velocity(0.5, Grid.from_spacing(30.0, 0.02))
    f = ctx.perp_project(bump_test_function(ctx.grid, rng))
    g = ctx.invert_S_star(f)
    back = ctx.invert_S_star(ctx.apply_S_star(g), project=True)
    assert l2_norm(ctx.grid, back - g) <= 1e-6 * l2_norm(ctx.grid, g)
