"""Module construction: partitions, normal ordering, gram matrices, L_n."""

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virann.errors import ArgumentError, NonUnitaryError, TruncationError
from virann.virmod import (
    GradedVector,
    ModuleParams,
    VirasoroOracle,
    build_module,
    check_unitarity,
    enumerate_basis,
    gram_matrix,
    module_from_dict,
    module_to_dict,
    normal_order_reduce,
    partitions_of,
    random_protected_vector,
    sobolev_norm,
)

F = Fraction


def exact_params(c, h, N=4):
    return ModuleParams(F(c), F(h), N)


# ---------------------------------------------------------------------------
# partitions


def test_level_zero_is_single_empty_partition():
    assert partitions_of(0) == ((),)
    assert enumerate_basis(0) == (((),),)


def test_level_two_order():
    # reverse-lexicographic: [2] before [1,1]
    assert partitions_of(2) == ((2,), (1, 1))
    basis = enumerate_basis(2)
    assert tuple(len(b) for b in basis) == (1, 1, 2)


def test_total_count_through_level_five():
    assert sum(len(b) for b in enumerate_basis(5)) == 19  # 1+1+2+3+5+7


def test_negative_level_rejected():
    with pytest.raises(ArgumentError):
        enumerate_basis(-1)


@given(st.integers(min_value=0, max_value=14))
def test_partition_parts_decrease_and_sum(k):
    parts_list = partitions_of(k)
    assert len(set(parts_list)) == len(parts_list)
    for lam in parts_list:
        assert all(a >= b for a, b in zip(lam, lam[1:]))
        assert all(p >= 1 for p in lam)
        assert sum(lam) == k


@given(st.integers(min_value=1, max_value=12))
def test_partition_counts_match_pentagonal_recurrence(k):
    # p(k) = sum_j (-1)^{j+1} [p(k - j(3j-1)/2) + p(k - j(3j+1)/2)]
    total = 0
    j = 1
    while True:
        g1 = j * (3 * j - 1) // 2
        g2 = j * (3 * j + 1) // 2
        if g1 > k:
            break
        sign = 1 if j % 2 == 1 else -1
        total += sign * len(partitions_of(k - g1))
        if g2 <= k:
            total += sign * len(partitions_of(k - g2))
        j += 1
    assert len(partitions_of(k)) == total


# ---------------------------------------------------------------------------
# normal-ordering oracle


def test_single_bracket_lowering():
    out = normal_order_reduce([1, -1], exact_params(2, 1, 2))
    assert out == {(): F(2)}  # 2h with h=1


def test_level_two_scalar_with_central_term():
    p = exact_params(3, F(1, 4))
    out = normal_order_reduce([2, -2], p)
    assert out == {(): 4 * F(1, 4) + F(3) / 2}  # 4h + c/2


def test_two_step_reduction():
    p = exact_params(7, F(1, 3))
    out = normal_order_reduce([2, -1, -1], p)
    assert out == {(): 6 * F(1, 3)}  # 6h, independent of c


def test_reduce_word_annihilates_on_positive_mode():
    assert normal_order_reduce([5], exact_params(2, 1)) == {}


def test_oracle_mixed_word_stays_exact():
    p = exact_params(F(1, 2), F(1, 16))
    out = normal_order_reduce([1, -2], p)
    # [L_1, L_{-2}] = 3 L_{-1}
    assert out == {(1,): F(3)}


# ---------------------------------------------------------------------------
# gram matrices


def test_gram_level_zero_and_one():
    p = exact_params(2, F(3, 4))
    assert gram_matrix(p, 0).tolist() == [[1]]
    assert gram_matrix(p, 1).tolist() == [[2 * F(3, 4)]]


def test_gram_level_two_closed_form_exact():
    for c, h in [(F(2), F(1, 2)), (F(1), F(0)), (F(1, 2), F(1, 16))]:
        g = gram_matrix(ModuleParams(c, h, 4), 2)
        expect = [[4 * h + c / 2, 6 * h], [6 * h, 4 * h * (2 * h + 1)]]
        assert g.tolist() == expect


def test_gram_float_mode_matches_exact():
    for c, h in [(2.0, 0.5), (1.0, 0.0), (0.5, 0.0625)]:
        pf = ModuleParams(c, h, 4)
        pe = ModuleParams(F(c), F(h), 4)
        for k in range(5):
            gf = gram_matrix(pf, k)
            ge = gram_matrix(pe, k).astype(float) if k > 0 else np.array([[1.0]])
            scale = max(1.0, np.abs(ge).max())
            assert np.abs(gf - ge).max() <= 1e-12 * scale


def test_gram_symmetric():
    g = gram_matrix(ModuleParams(2.0, 0.5, 6), 5)
    assert np.abs(g - g.T).max() == 0.0


def test_gram_beyond_cutoff_rejected():
    with pytest.raises(ArgumentError):
        gram_matrix(ModuleParams(2.0, 0.5, 2), 3)


def test_ising_level_two_determinant_vanishes_exactly():
    g = gram_matrix(exact_params(F(1, 2), F(1, 16)), 2)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    assert det == 0


# ---------------------------------------------------------------------------
# module construction


def test_vacuum_level_one_is_null():
    mod = build_module(ModuleParams(2.0, 0.0, 1))
    assert mod.dims == (1, 0)
    assert mod.gram[1].tolist() == [[0.0]]


def test_generic_point_keeps_everything():
    mod = build_module(ModuleParams(2.0, 0.5, 2))
    assert mod.dims == (1, 1, 2)


def test_ising_quotient_and_deeper_dims():
    mod = build_module(ModuleParams(F(1, 2), F(1, 16), 6))
    assert mod.dims == (1, 1, 1, 2, 2, 3, 4)


def test_c1_vacuum_character():
    mod = build_module(ModuleParams(1.0, 0.0, 12))
    assert mod.dims == (1, 0, 1, 1, 2, 2, 4, 4, 7, 8, 12, 14, 21)


def test_full_verma_dims_at_n12(mod12):
    assert mod12.dims == (1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77)


def test_dims_survive_tight_nulltol_at_n14(mod14):
    assert mod14.dims[-2:] == (101, 135)


def test_nonunitary_point_raises():
    # level-2 gram has a negative eigenvalue at (c, h) = (0.5, 0.3)
    with pytest.raises(NonUnitaryError):
        build_module(ModuleParams(0.5, 0.3, 4))


def test_params_domain_validation():
    with pytest.raises(ArgumentError):
        ModuleParams(2.0, 0.5, -1)
    with pytest.raises(NonUnitaryError):
        ModuleParams(-0.5, 0.5, 4)
    with pytest.raises(NonUnitaryError):
        ModuleParams(2.0, -0.1, 4)


def test_check_unitarity_verdicts():
    assert check_unitarity(ModuleParams(2.0, 0.5, 6))[0]
    assert check_unitarity(ModuleParams(0.5, 0.0625, 6))[0]
    assert not check_unitarity(ModuleParams(0.5, 0.3, 6))[0]


# ---------------------------------------------------------------------------
# the assembled matrices


def test_lmat_zero_is_diagonal_weights(mod12):
    got = mod12.lmat(0)
    expect = np.diag(0.5 + mod12.level_index().astype(float))
    assert np.abs(got - expect).max() == 0.0


def test_adjoint_pairing_exact_by_construction(mod12):
    for n in range(1, 5):
        assert np.array_equal(mod12.lmat(-n), mod12.lmat(n).conj().T)


def test_graded_block_structure(mod12):
    off = mod12.level_offsets
    for n in (1, 2, 3):
        m = mod12.lmat(n).copy()
        for k in range(n, mod12.N + 1):
            m[off[k - n]:off[k - n + 1], off[k]:off[k + 1]] = 0.0
        assert np.abs(m).max() == 0.0


def test_bracket_on_protected_columns(mod12):
    """[L_m, L_n] = (m-n)L_{m+n} + (c/12)(m^3-m) on levels the cutoff
    cannot touch."""
    c, off, dim = 2.0, mod12.level_offsets, mod12.dim
    worst = 0.0
    for m in range(-4, 5):
        for n in range(-4, 5):
            cols = off[mod12.N - abs(m) - abs(n) + 1]
            lm, ln = mod12.lmat(m), mod12.lmat(n)
            lhs = lm @ ln[:, :cols] - ln @ lm[:, :cols]
            rhs = (m - n) * mod12.lmat(m + n)[:, :cols]
            if m + n == 0:
                rhs = rhs + (c / 12.0) * (m**3 - m) * np.eye(dim)[:, :cols]
            worst = max(worst, np.abs(lhs - rhs).max())
    assert worst < 1e-10


def test_matrix_elements_match_exact_oracle():
    """Float pipeline vs fully exact rational evaluation of <u_i, L_n u_j>."""
    mod = build_module(ModuleParams(F(2), F(1, 2), 6))
    oracle = VirasoroOracle(F(2), F(1, 2))
    off = mod.level_offsets
    for n in (1, 2, 3):
        for k in range(n, mod.N + 1):
            src, dst = mod.basis[k], mod.basis[k - n]
            idx = {lam: i for i, lam in enumerate(dst)}
            cmat = np.zeros((len(dst), len(src)))
            for j, lam in enumerate(src):
                for mu, coeff in oracle.apply_mode(n, lam).items():
                    cmat[idx[mu], j] = float(coeff)
            g = np.array([[float(x) for x in row] for row in oracle.gram(k - n)])
            expect = mod.ortho[k - n].T @ g @ cmat @ mod.ortho[k]
            got = mod.lmat(n)[off[k - n]:off[k - n + 1], off[k]:off[k + 1]]
            assert np.abs(got - expect).max() < 1e-10


def test_lmax_budget_enforced():
    mod = build_module(ModuleParams(2.0, 0.5, 8), lmax=3)
    mod.lmat(3)
    with pytest.raises(TruncationError):
        mod.lmat(4)


def test_singular_values_of_lowering_by_one(mod12):
    # ||L_{-1} (lowest weight)||^2 = 2h exactly
    e0 = np.zeros(mod12.dim)
    e0[0] = 1.0
    assert abs(np.linalg.norm(mod12.lmat(-1) @ e0) - np.sqrt(1.0)) < 1e-12


# ---------------------------------------------------------------------------
# vectors and norms


def test_sobolev_norm_examples():
    m0 = build_module(ModuleParams(2.0, 0.0, 2))
    v = np.zeros(m0.dim, dtype=complex)
    v[0] = 1.0
    assert abs(sobolev_norm(v, 1, m0) - 1.0) < 1e-15
    w = np.zeros(m0.dim, dtype=complex)
    w[m0.level_slice(2)][:] = 0  # keep shape explicit
    w[m0.level_offsets[2]] = 1.0
    assert abs(sobolev_norm(w, 1, m0) - 3.0) < 1e-15
    mh = build_module(ModuleParams(2.0, 0.5, 2))
    u = np.zeros(mh.dim, dtype=complex)
    u[mh.level_offsets[1]] = 1.0
    assert abs(sobolev_norm(u, 2, mh) - 6.25) < 1e-12


@given(st.floats(min_value=-4, max_value=4, allow_nan=False),
       st.floats(min_value=-4, max_value=4, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_sobolev_norm_absolutely_homogeneous(re, im):
    mod = build_module(ModuleParams(2.0, 0.5, 3))
    v = np.linspace(1.0, 2.0, mod.dim).astype(complex)
    a = complex(re, im)
    assert abs(sobolev_norm(a * v, 1.5, mod)
               - abs(a) * sobolev_norm(v, 1.5, mod)) < 1e-9


def test_graded_vector_shape_checked(mod12):
    with pytest.raises(ArgumentError):
        GradedVector(np.zeros(3), mod12)
    gv = GradedVector(np.zeros(mod12.dim), mod12)
    assert gv.norm() == 0.0


def test_random_protected_vector_support(mod12, rng):
    v = random_protected_vector(mod12, 4, rng)
    p = mod12.protected_dim(4)
    assert np.abs(v[p:]).max() == 0.0
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# serialization


def test_module_json_round_trip(mod8):
    doc = module_to_dict(mod8)
    text = json.dumps(doc, sort_keys=True)
    back = module_from_dict(json.loads(text))
    assert back.dims == mod8.dims
    for n in range(-mod8.lmax, mod8.lmax + 1):
        assert np.abs(back.lmat(n) - mod8.lmat(n)).max() < 1e-15


def test_serialization_deterministic():
    a = module_to_dict(build_module(ModuleParams(2.0, 0.5, 4)))
    b = module_to_dict(build_module(ModuleParams(2.0, 0.5, 4)))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
