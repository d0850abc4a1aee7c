import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracsobolev import (DomainMask, Grid, GridFunction, NormParams, SizeError,
                         ValidationError, ConvergenceError, VIProblem, bump, dense_vi_oracle,
                         frac_laplacian, hsp_seminorm, kernel_matrix, random_field,
                         solve_unconstrained, solve_vi)
from fracsobolev.vi import energy, kkt_diagnostics

from oracles import random_instance


def seminorm(u, s):
    return hsp_seminorm(u, NormParams(s, 2.0))


# --- energy and the unconstrained Galerkin solve ---------------------------------------

def test_energy_examples(grid64, mask64, rng):
    assert energy(grid64.zeros(), random_field(grid64, rng), 0.5) == 0.0
    w = random_field(grid64, rng, mask=mask64)
    f = frac_laplacian(w, 1.0)
    assert abs(energy(w, f, 0.5) + 0.5 * seminorm(w, 0.5) ** 2) < 1e-10
    u, h = random_field(grid64, rng), random_field(grid64, rng)
    K = kernel_matrix(grid64, 1.4)
    dense = grid64.cell_volume * (0.5 * u.values @ K @ u.values - h.values @ u.values)
    assert abs(energy(u, h, 0.7) - dense) < 1e-10


def test_unconstrained_solve(grid64, mask64, rng):
    assert solve_unconstrained(grid64.zeros(), mask64, 0.5).max_abs() == 0.0
    w = random_field(grid64, rng, mask=mask64)
    u = solve_unconstrained(frac_laplacian(w, 1.2), mask64, 0.6, tol=1e-12)
    assert (u - w).max_abs() < 1e-9
    f = random_field(grid64, rng, mask=mask64)
    u = solve_unconstrained(f, mask64, 0.4, tol=1e-12)
    idx = np.flatnonzero(mask64.inside)
    A = kernel_matrix(grid64, 0.8)[np.ix_(idx, idx)]
    ref = np.linalg.solve(A, f.values[idx])
    assert np.abs(u.values[idx] - ref).max() < 1e-8
    assert np.all(u.values[~mask64.inside] == 0.0)


def test_unconstrained_iteration_cap(grid64, mask64, rng):
    with pytest.raises(ConvergenceError) as err:
        solve_unconstrained(random_field(grid64, rng), mask64, 0.5, tol=1e-14, max_iter=2)
    assert "iterations" in err.value.diagnostics


# --- problem validation -----------------------------------------------------------------

def test_infeasible_obstacle_rejected(grid32, mask32):
    with pytest.raises(ValidationError):
        VIProblem(0.5, mask32, grid32.zeros(), grid32.constant(0.1))
    with pytest.raises(ValidationError):
        VIProblem(1.5, mask32, grid32.zeros(), grid32.zeros())


def test_mask_margin_rule(grid32):
    with pytest.raises(ValidationError):
        DomainMask.interval(grid32, -1.8, 1.8)


# --- solver examples -----------------------------------------------------------------------

def test_zero_solution(grid64, mask64):
    sol = solve_vi(VIProblem(0.5, mask64, grid64.zeros(), mask64.apply(grid64.constant(-1.0))))
    assert sol.converged and sol.u.max_abs() == 0.0 and sol.energy == 0.0


def test_inactive_constraint(grid64, mask64):
    f = mask64.apply(bump(grid64, 0.0, 0.9, 2.0))
    w = solve_unconstrained(f, mask64, 0.5, tol=1e-12)
    psi = mask64.apply(bump(grid64, 0.0, 0.9, -1.0))
    assert np.all(w.values[mask64.inside] > psi.values[mask64.inside])
    sol = solve_vi(VIProblem(0.5, mask64, f, psi), tol=1e-10)
    assert sol.converged
    assert (sol.u - w).max_abs() < 1e-8


def test_bump_obstacle_matches_oracle(grid32, mask32):
    psi = mask32.apply(bump(grid32, 0.0, 1.0, 0.5))
    p = VIProblem(0.5, mask32, grid32.zeros(), psi)
    sol = solve_vi(p)
    assert sol.converged
    assert (sol.u - dense_vi_oracle(p)).max_abs() < 1e-8


def test_random_instances_match_oracle(grid32, mask32):
    r = np.random.default_rng(2024)
    contacts = 0
    for _ in range(20):
        p = random_instance(r, grid32, mask32)
        sol = solve_vi(p)
        contacts += np.sum(np.isclose(sol.u.values, p.psi.values) & mask32.inside)
        assert sol.converged
        assert sol.complementarity_gap <= 1e-8
        assert sol.primal_violation <= 1e-12
        assert np.all(sol.u.values[~mask32.inside] == 0.0)
        assert (sol.u - dense_vi_oracle(p)).max_abs() <= 1e-7
    assert contacts > 20


def test_oracle_kkt(grid32, mask32):
    p = random_instance(np.random.default_rng(5), grid32, mask32)
    u = dense_vi_oracle(p)
    d = kkt_diagnostics(p, u.values)
    r, inside = d["residual"], mask32.inside
    gap = r[inside] * (u.values[inside] - p.psi.values[inside])
    assert d["primal_violation"] <= 1e-10 and d["dual_violation"] <= 1e-10
    assert np.abs(gap).max() <= 1e-10


def test_oracle_forced_contact(grid32, mask32):
    psi = grid32.zeros().values.copy()
    j = np.flatnonzero(mask32.inside)[5]
    psi[j] = 10.0
    u = dense_vi_oracle(VIProblem(0.5, mask32, grid32.zeros(), GridFunction(grid32, psi)))
    assert u.values[j] == 10.0


def test_oracle_size_limit():
    g = Grid(2, 1.0, 64)
    m = DomainMask.box(g, [(-0.4, 0.4)] * 2)
    with pytest.raises(SizeError):
        dense_vi_oracle(VIProblem(0.5, m, g.zeros(), g.zeros()))


def test_nonconvergence_flagged(grid64, mask64):
    p = VIProblem(0.5, mask64, grid64.zeros(), mask64.apply(bump(grid64, 0.0, 0.9, 1.0)))
    sol = solve_vi(p, max_iter=5)
    assert not sol.converged and sol.iterations == 5
    assert sol.primal_violation <= 1e-12


def test_2d_against_oracle():
    g = Grid(2, 2.0, 16)
    m = DomainMask.box(g, [(-1.0, 1.0), (-1.0, 1.0)])
    p = VIProblem(0.6, m, g.zeros(), m.apply(bump(g, [0.0, 0.0], 0.9, 0.5)))
    sol = solve_vi(p)
    assert sol.converged and (sol.u - dense_vi_oracle(p)).max_abs() < 1e-7


@pytest.mark.parametrize("s", [0.25, 0.5, 0.9, 1.0])
def test_fine_grid_converges(s):
    g = Grid(1, np.pi, 256)
    m = DomainMask.interval(g, -1.5, 1.5)
    p = VIProblem(s, m, g.constant(1.0), m.apply(bump(g, 0.0, 1.0, 0.5)))
    sol = solve_vi(p)
    assert sol.converged and sol.complementarity_gap <= 1e-8


# --- properties ------------------------------------------------------------------------------

@given(seed=st.integers(0, 2**32 - 1))
def test_uniqueness_two_starts(seed):
    g = Grid(1, 2.0, 32)
    m = DomainMask.interval(g, -1.0, 1.0)
    r = np.random.default_rng(seed)
    p = random_instance(r, g, m)
    tol = 1e-8
    a = solve_vi(p, tol=tol)
    bumpy = np.abs(random_field(g, r).values)
    start = m.apply(GridFunction(g, np.maximum(p.psi.values, 0) + bumpy))
    b = solve_vi(p, tol=tol, u0=start)
    assert a.converged and b.converged
    assert seminorm(a.u - b.u, p.s) <= 10 * tol


@given(seed=st.integers(0, 2**32 - 1))
def test_variational_inequality(seed):
    g = Grid(1, 2.0, 32)
    m = DomainMask.interval(g, -1.0, 1.0)
    r = np.random.default_rng(seed)
    p = random_instance(r, g, m)
    tol = 1e-8
    sol = solve_vi(p, tol=tol)
    u = sol.u
    lu = frac_laplacian(u, p.s)
    for _ in range(50):
        bumpy = r.uniform(0, 1) * np.abs(random_field(g, r).values)
        v = m.apply(GridFunction(g, np.maximum(p.psi.values, u.values) + bumpy))
        lhs = lu.pair(frac_laplacian(v - u, p.s)) - p.f.pair(v - u)
        assert lhs >= -10 * tol * (1 + seminorm(v, p.s))


@given(seed=st.integers(0, 2**32 - 1))
def test_energy_monotone_and_multiplier_sign(seed):
    g = Grid(1, 2.0, 64)
    m = DomainMask.interval(g, -1.0, 1.0)
    p = random_instance(np.random.default_rng(seed), g, m)
    tol = 1e-8
    sol = solve_vi(p, tol=tol)
    e = np.array(sol.energy_trace)
    assert np.all(np.diff(e) <= 1e-12 * (1 + np.abs(e[1:])))
    r = kkt_diagnostics(p, sol.u.values)["residual"]
    assert r[m.inside].min() >= -10 * tol
