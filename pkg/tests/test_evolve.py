"""Time-ordered exponentials: product scheme, ODE engine, identities."""

import numpy as np
import pytest
from scipy.linalg import expm

from virann.errors import ArgumentError
from virann.evolve import (
    EvolutionResult,
    GeneratorPath,
    adjoint_evolution_check,
    flow_residual,
    growth_bound_check,
    ode_exp,
    parameter_derivative,
    piecewise_exp,
)
from virann.field import (
    FieldPath,
    VectorField,
    mode_field,
    pi_field,
    qei_bound,
    random_inward_path,
)
from virann.virmod import random_protected_vector


@pytest.fixture()
def noncommuting_path(mod6, rng):
    p = random_inward_path(2, rng, knots=5, amplitude=0.05, wiggle=0.4)
    return GeneratorPath.from_field_path(p, mod6)


# ---------------------------------------------------------------------------
# product scheme


def test_constant_path_exact_at_every_subdivision(mod6):
    A = pi_field(VectorField({0: np.log(0.5), 1: 0.1, -1: 0.05j}), mod6)
    gp = GeneratorPath.constant(A)
    ref = expm(A)
    for n in (1, 2, 7, 32):
        got = piecewise_exp(gp, 0.0, 1.0, n).U
        assert np.abs(got - ref).max() < 1e-13


def test_commuting_family_reaches_quadrature_limit(mod6):
    # A(t) = a(t) D with a periodic: the left-endpoint Riemann sum of a is
    # already exact, so the product equals exp(D int a) at modest n
    D = pi_field(mode_field(0, -0.4 + 0.25j), mod6)

    def sampler(t):
        return (1.0 + 0.5 * np.sin(2 * np.pi * t)) * D

    gp = GeneratorPath(sampler, mod6.dim)
    ref = expm(D)  # int_0^1 a = 1
    got = piecewise_exp(gp, 0.0, 1.0, 64).U
    assert np.abs(got - ref).max() < 1e-12


def test_refinement_is_first_order(noncommuting_path):
    gp = noncommuting_path
    diffs = []
    for n in (64, 128, 256):
        u_n = piecewise_exp(gp, 0.0, 1.0, n).U
        u_2n = piecewise_exp(gp, 0.0, 1.0, 2 * n).U
        diffs.append(np.linalg.norm(u_2n - u_n, 2))
    assert diffs[0] > diffs[1] > diffs[2]
    for a, b in zip(diffs, diffs[1:]):
        assert a / b == pytest.approx(2.0, rel=0.25)


def test_piecewise_argument_validation(mod6):
    gp = GeneratorPath.constant(np.zeros((3, 3)))
    with pytest.raises(ArgumentError):
        piecewise_exp(gp, 0.5, 0.2, 4)
    with pytest.raises(ArgumentError):
        piecewise_exp(gp, 0.0, 1.0, 0)


# ---------------------------------------------------------------------------
# ODE engine


def test_ode_zero_path_gives_identity():
    gp = GeneratorPath.constant(np.zeros((4, 4)))
    res = ode_exp(gp, 0.0, 1.0, 1e-10)
    assert np.abs(res.U - np.eye(4)).max() < 1e-12


def test_ode_constant_diagonal_closed_form(mod6):
    gp = GeneratorPath.constant(np.log(0.5) * mod6.lmat(0))
    res = ode_exp(gp, 0.0, 1.0, 1e-10)
    expect = np.diag(0.5 ** (0.5 + mod6.level_index()))
    assert np.abs(res.U - expect).max() < 1e-9


def test_ode_tolerance_scaling(noncommuting_path):
    gp = noncommuting_path
    ref = ode_exp(gp, 0.0, 1.0, 1e-12, method="DOP853").U
    coarse = np.linalg.norm(ode_exp(gp, 0.0, 1.0, 1e-6).U - ref, 2)
    fine = np.linalg.norm(ode_exp(gp, 0.0, 1.0, 1e-10).U - ref, 2)
    assert fine < coarse


def test_ode_dop853_variant(noncommuting_path):
    a = ode_exp(noncommuting_path, 0.0, 1.0, 1e-10).U
    b = ode_exp(noncommuting_path, 0.0, 1.0, 1e-10, method="DOP853").U
    assert np.linalg.norm(a - b, 2) < 1e-8


def test_cross_validation_small_amplitude(mod6, rng):
    # amplitude keeps the first-order product error of n = 4096 under 1e-7
    worst = 0.0
    for _ in range(5):
        p = random_inward_path(2, rng, knots=5, amplitude=2.5e-5, wiggle=0.5)
        gp = GeneratorPath.from_field_path(p, mod6)
        u1 = ode_exp(gp, 0.0, 1.0, 1e-10).U
        u2 = piecewise_exp(gp, 0.0, 1.0, 4096).U
        worst = max(worst, np.linalg.norm(u1 - u2, 2))
    assert worst < 1e-7


def test_flow_property(noncommuting_path):
    for r in (0.2, 0.37, 0.5, 0.81):
        assert flow_residual(noncommuting_path, 0.0, r, 1.0) < 1e-10


def test_result_serialization(mod6):
    gp = GeneratorPath.constant(np.log(0.5) * mod6.lmat(0))
    res = ode_exp(gp, 0.0, 1.0, 1e-10)
    doc = res.to_dict()
    assert doc["method"].startswith("ode")
    got = np.array([[complex(re, im) for re, im in row] for row in doc["U"]])
    assert np.abs(got - res.U).max() == 0.0


# ---------------------------------------------------------------------------
# adjoint reversal


def test_adjoint_check_selfadjoint_constant(mod6):
    A = pi_field(VectorField({1: 0.2, -1: 0.2, 0: -0.5}), mod6)
    assert np.abs(A - A.conj().T).max() < 1e-14
    gp = GeneratorPath.constant(A)
    assert adjoint_evolution_check(gp) < 1e-9


def test_adjoint_check_skew_rotation(mod6):
    gp = GeneratorPath.constant(pi_field(mode_field(0, 1j), mod6))
    assert adjoint_evolution_check(gp) < 1e-9


def test_adjoint_check_random_paths(mod6, rng):
    for _ in range(6):
        p = random_inward_path(3, rng, knots=4, amplitude=0.3)
        gp = GeneratorPath.from_field_path(p, mod6)
        assert adjoint_evolution_check(gp) < 1e-8


# ---------------------------------------------------------------------------
# parameter derivative


def test_derivative_diagonal_family_closed_form(mod6):
    L0 = mod6.lmat(0)

    def fam(r):
        return GeneratorPath.constant(np.log(r) * L0)

    D_int, D_fd = parameter_derivative(fam, 0.5, 1e-4)
    closed = expm(np.log(0.5) * L0) @ L0 / 0.5
    assert np.abs(D_int - closed).max() < 1e-6
    assert np.abs(D_fd - closed).max() < 1e-6


def test_derivative_parameter_independent_family(mod6):
    A = pi_field(VectorField({1: 0.1, -2: 0.05}), mod6)

    def fam(p):
        return GeneratorPath.constant(A)

    D_int, D_fd = parameter_derivative(fam, 0.3, 1e-4)
    assert np.abs(D_int).max() < 1e-11
    assert np.abs(D_fd).max() < 1e-11


def test_derivative_two_mode_family_second_order(mod6):
    base = pi_field(VectorField({0: -0.3}), mod6)
    bump = pi_field(VectorField({2: 0.2, -2: 0.1}), mod6)

    def fam(p):
        def sampler(t):
            return base + p * (1.0 + 0.3 * np.sin(np.pi * t)) * bump
        return GeneratorPath(sampler, mod6.dim)

    gaps = []
    for delta in (2e-3, 1e-3):
        D_int, D_fd = parameter_derivative(fam, 0.1, delta)
        gaps.append(np.linalg.norm(D_int - D_fd, 2))
    # centered differencing on both sides: disagreement drops ~4x per halving
    assert gaps[1] < gaps[0] / 2.5


# ---------------------------------------------------------------------------
# growth bound


def test_rotation_is_protected_isometry(mod6, rng):
    gp = GeneratorPath.from_field_path(
        FieldPath.constant_path(mode_field(0, 1j)), mod6)
    vecs = np.array([random_protected_vector(mod6, 2, rng) for _ in range(20)])
    rep = growth_bound_check(gp, 0.0, ((0.0, 1.0), (0.2, 0.7)), vecs)
    assert abs(rep["margin"]) < 1e-9


def test_pure_scaling_contracts(mod6):
    gp = GeneratorPath.from_field_path(
        FieldPath.constant_path(mode_field(0, np.log(0.5))), mod6)
    v = np.zeros(mod6.dim, dtype=complex)
    v[0] = 1.0
    rep = growth_bound_check(gp, 0.0, ((0.0, 1.0),), v[None, :])
    # ||Uv|| = 0.5^h < ||v||, so the margin is strictly negative
    assert rep["margin"] == pytest.approx(0.5**0.5 - 1.0, abs=1e-9)


def test_inward_paths_obey_mu_rate(mod6, rng):
    for _ in range(5):
        p = random_inward_path(2, rng, knots=5, amplitude=0.15)
        gp = GeneratorPath.from_field_path(p, mod6)
        omega = max(qei_bound(p.field_at(t), 2.0) for t in np.linspace(0, 1, 33))
        vecs = np.array([random_protected_vector(mod6, 4, rng) for _ in range(40)])
        rep = growth_bound_check(gp, omega, ((0.0, 1.0), (0.1, 0.6)), vecs)
        assert rep["margin"] <= 1e-6
