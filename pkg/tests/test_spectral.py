import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracsobolev import (Grid, GridFunction, MultiplierSymbol, SizeError, ParameterError,
                         ValidationError, apply_multiplier, bessel_inverse, frac_laplacian,
                         kernel_matrix, power_symbol, product_rule_remainder, random_field,
                         riesz_potential)

orders = st.floats(0.05, 2.0)
seeds = st.integers(0, 2**32 - 1)


def cosine(grid, k, phase=0.0):
    xi = np.pi * k / grid.half_width
    return GridFunction(grid, np.cos(xi * grid.coords[0] + phase)), abs(xi)


# --- grid -------------------------------------------------------------------------

def test_grid_invariants():
    g = Grid(2, 1.5, 16)
    assert g.spacing * g.M == 2 * g.half_width
    assert g.size == 256
    k = np.round(g.frequencies[0] * g.half_width / np.pi).astype(int)
    assert set(np.unique(k)) == set(range(-8, 8))


@pytest.mark.parametrize("M", [4, 12, 100])
def test_grid_rejects_bad_sizes(M):
    with pytest.raises(ValidationError):
        Grid(1, 1.0, M)


def test_grid_parse():
    assert Grid.parse("1:2.0:64") == Grid(1, 2.0, 64)
    with pytest.raises(ValidationError):
        Grid.parse("1:2.0")


def test_grid_function_rejects_nonfinite(grid64):
    v = np.zeros(64)
    v[3] = np.nan
    with pytest.raises(ValidationError):
        GridFunction(grid64, v)


# --- multipliers ------------------------------------------------------------------

def test_identity_symbol(grid64, rng):
    f = random_field(grid64, rng)
    one = MultiplierSymbol(lambda xi: np.ones_like(xi[0]), "preserve")
    np.testing.assert_allclose(apply_multiplier(f, one).values, f.values, rtol=0, atol=1e-14)


@given(k=st.integers(1, 31), s=orders)
def test_cosine_eigenfunction(k, s):
    g = Grid(1, 2.0, 64)
    f, xi = cosine(g, k, 0.3)
    np.testing.assert_allclose(frac_laplacian(f, s).values, xi**s * f.values, atol=1e-11)
    np.testing.assert_allclose(bessel_inverse(f, min(s, 1.9)).values,
                               f.values / (1 + xi**min(s, 1.9)), atol=1e-12)


def test_power_symbol_matches_dense(rng):
    g = Grid(1, 2.0, 16)
    f = random_field(g, rng)
    out = apply_multiplier(f, power_symbol(0.5))
    assert np.abs(out.values - kernel_matrix(g, 0.5) @ f.values).max() < 1e-10


def test_cos2x_exact():
    g = Grid(1, np.pi, 64)
    f = GridFunction(g, np.cos(2 * g.coords[0]))
    np.testing.assert_allclose(frac_laplacian(f, 1.0).values, 2 * f.values, rtol=0, atol=1e-12)


def test_constants():
    g = Grid(1, 2.0, 64)
    c = g.constant(7.0)
    assert frac_laplacian(c, 0.7).max_abs() < 1e-12
    assert riesz_potential(g.constant(1.0), 0.5).max_abs() < 1e-12
    np.testing.assert_allclose(bessel_inverse(g.constant(1.0), 0.5).values, 1.0, atol=1e-14)


@pytest.mark.parametrize("call,s", [(frac_laplacian, 0.0), (frac_laplacian, 2.5),
                                    (riesz_potential, 1.0), (bessel_inverse, 2.0)])
def test_order_ranges(grid64, call, s):
    with pytest.raises(ParameterError):
        call(grid64.constant(1.0), s)


def test_riesz_range_2d():
    g = Grid(2, 1.0, 16)
    f = random_field(g, np.random.default_rng(1))
    f0 = f - f.mean()
    assert (riesz_potential(frac_laplacian(f, 1.5), 1.5) - f0).max_abs() < 1e-10


def test_symbol_must_be_even(grid64):
    odd = MultiplierSymbol(lambda xi: np.abs(xi[0]) + xi[0], "preserve")
    with pytest.raises(ValidationError):
        apply_multiplier(grid64.constant(1.0), odd)


# --- operator identities (property tests) ------------------------------------------------

@given(seed=seeds, s=orders)
def test_integration_by_parts(seed, s):
    g = Grid(1, 2.0, 64)
    r = np.random.default_rng(seed)
    f, h = random_field(g, r), random_field(g, r)
    lhs = frac_laplacian(f, s).pair(h) - f.pair(frac_laplacian(h, s))
    assert abs(lhs) < 1e-10 * np.linalg.norm(f.values) * np.linalg.norm(h.values)


@given(seed=seeds, s=st.floats(0.05, 1.0), t=st.floats(0.05, 1.0))
def test_semigroup(seed, s, t):
    g = Grid(1, 2.0, 64)
    f = random_field(g, np.random.default_rng(seed))
    f = f - f.mean()
    err = frac_laplacian(frac_laplacian(f, s), t) - frac_laplacian(f, s + t)
    assert err.max_abs() < 1e-10 * max(1.0, f.max_abs())


@given(seed=seeds, s=st.floats(0.05, 1.95))
def test_bessel_decomposition(seed, s):
    g = Grid(1, 2.0, 64)
    f = random_field(g, np.random.default_rng(seed))
    b = bessel_inverse(f, s)
    assert (frac_laplacian(b, s) + b - f).max_abs() < 1e-11


@given(seed=seeds, s=st.floats(0.05, 0.95))
def test_riesz_roundtrip(seed, s):
    g = Grid(1, 2.0, 32)
    f = random_field(g, np.random.default_rng(seed))
    f0 = f - f.mean()
    assert (riesz_potential(frac_laplacian(f, s), s) - f0).max_abs() < 1e-10
    assert (frac_laplacian(riesz_potential(f0, s), s) - f0).max_abs() < 1e-10


@given(seed=seeds, s=orders, a=st.floats(-5, 5))
def test_linearity_and_form_sign(seed, s, a):
    g = Grid(1, 2.0, 32)
    r = np.random.default_rng(seed)
    f, h = random_field(g, r), random_field(g, r)
    lhs = frac_laplacian(a * f + h, s)
    rhs = a * frac_laplacian(f, s) + frac_laplacian(h, s)
    assert (lhs - rhs).max_abs() < 1e-11 * (1 + abs(a))
    assert frac_laplacian(f, s).pair(f) >= -1e-12


# --- dense kernel --------------------------------------------------------------------------

@pytest.mark.parametrize("M", [16, 32, 64])
@pytest.mark.parametrize("s", [0.5, 1.0, 1.7])
def test_kernel_matches_spectral(M, s):
    g = Grid(1, 2.0, M)
    K = kernel_matrix(g, s)
    assert np.abs(K.sum(axis=1)).max() < 1e-10
    assert np.abs(K - K.T).max() < 1e-12 * np.abs(K).max()
    r = np.random.default_rng(M)
    for _ in range(10):
        f = random_field(g, r)
        assert np.abs(K @ f.values - frac_laplacian(f, s).values).max() < 1e-10


def test_kernel_2d_and_size_limit():
    g = Grid(2, 1.0, 16)
    f = random_field(g, np.random.default_rng(0))
    K = kernel_matrix(g, 0.8)
    assert np.abs(K @ f.values.ravel() - frac_laplacian(f, 0.8).values.ravel()).max() < 1e-10
    with pytest.raises(SizeError):
        kernel_matrix(Grid(2, 1.0, 128), 0.5)


def test_kernel_s1_structure():
    # s = 1 on the torus: even off-diagonal offsets vanish, odd ones are negative
    g = Grid(1, np.pi, 32)
    row = kernel_matrix(g, 1.0)[0]
    assert row[0] > 0
    assert np.all(np.abs(row[2::2]) < 1e-12)
    assert np.all(row[1::2] < 0)


# --- product rule ----------------------------------------------------------------------------

def product_identity_residual(f, h, s):
    lhs = frac_laplacian(f * h, s)
    rhs = f * frac_laplacian(h, s) + h * frac_laplacian(f, s) + product_rule_remainder(f, h, s)
    return (lhs - rhs).max_abs()


def test_product_rule_constant_factor(grid64, rng):
    f = random_field(grid64, rng)
    assert product_rule_remainder(f, grid64.constant(1.0), 0.6).max_abs() == 0.0


def test_product_rule_square(grid32, rng):
    f = random_field(grid32, rng)
    K = kernel_matrix(grid32, 0.5)
    d = f.values[:, None] - f.values[None, :]
    expected = np.sum((K - np.diag(np.diag(K))) * d * d, axis=1)
    np.testing.assert_allclose(product_rule_remainder(f, f, 0.5).values, expected, atol=1e-12)
    assert product_identity_residual(f, f, 0.5) < 1e-9


@given(seed=seeds, s=st.floats(0.1, 2.0))
def test_product_rule_identity(seed, s):
    g = Grid(1, 2.0, 64)
    r = np.random.default_rng(seed)
    assert product_identity_residual(random_field(g, r), random_field(g, r), s) < 1e-9


def test_product_rule_grid_mismatch(grid32, grid64):
    with pytest.raises(ValidationError):
        product_rule_remainder(grid32.constant(1.0), grid64.constant(1.0), 0.5)
