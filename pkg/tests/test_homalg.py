"""Unit tests for the exact linear-algebra and polynomial kernel."""

import pytest
from hypothesis import given, settings, strategies as st

from mbflow.errors import (
    InvariantViolation,
    ShapeMismatch,
    UnsupportedRing,
)
from mbflow.homalg import (
    F2,
    ZZ,
    CoefficientRing,
    GradedChainComplex,
    IntegerMatrix,
    LaurentPoly,
    block_matrix,
    complex_from_ranks,
    dim_t,
    direct_sum,
    dual_complex,
    homology,
    integer_rank,
    preceq,
    shift_complex,
    smith_normal_form,
)


def mat(rows):
    return IntegerMatrix.from_rows(rows)


# ---------------------------------------------------------------------------
# coefficient rings


def test_ring_parse_roundtrip():
    assert str(CoefficientRing.parse("Z")) == "Z"
    assert str(CoefficientRing.parse("Fp:7")) == "Fp:7"
    assert CoefficientRing.parse("Fp:2") == F2


def test_ring_rejects_nonprime_and_junk():
    with pytest.raises(UnsupportedRing):
        CoefficientRing.prime_field(4)
    with pytest.raises(UnsupportedRing):
        CoefficientRing.parse("Fp:abc")
    with pytest.raises(UnsupportedRing):
        CoefficientRing.parse("Q")


# ---------------------------------------------------------------------------
# matrices


def test_matrix_shapes_and_arithmetic():
    a = mat([[1, 2], [3, 4]])
    b = mat([[0, 1], [1, 0]])
    assert (a @ b).to_rows() == [[2, 1], [4, 3]]
    assert (a + b).to_rows() == [[1, 3], [4, 4]]
    assert (a - a).is_zero()
    assert a.transpose().to_rows() == [[1, 3], [2, 4]]
    with pytest.raises(ShapeMismatch):
        a @ mat([[1, 2]])
    with pytest.raises(ShapeMismatch):
        IntegerMatrix(1, 1, {(0, 0): 0})
    with pytest.raises(ShapeMismatch):
        IntegerMatrix(1, 1, {(0, 2): 1})


def test_block_matrix_layout():
    top = mat([[1, 2]])
    m = block_matrix([[top, None], [None, IntegerMatrix.identity(1)]],
                     [1, 1], [2, 1])
    assert m.to_rows() == [[1, 2, 0], [0, 0, 1]]


# ---------------------------------------------------------------------------
# Smith normal form


def test_snf_single_entry():
    assert smith_normal_form(mat([[2]])) == ((2,), 1)


def test_snf_zero_matrix():
    assert smith_normal_form(IntegerMatrix.zero(2, 3)) == ((), 0)


def test_snf_divisibility_chain():
    diag, rank = smith_normal_form(mat([[2, 4], [6, 8]]))
    assert (diag, rank) == ((2, 4), 2)


def test_snf_transforms_reconstruct():
    m = mat([[2, 4, 4], [-6, 6, 12], [10, 4, 16]])
    dec = smith_normal_form(m, with_transforms=True)
    s = dec.u @ m @ dec.v
    assert all(s[(i, j)] == 0
               for i in range(s.rows) for j in range(s.cols) if i != j)
    assert tuple(s[(i, i)] for i in range(dec.rank)) == dec.diagonal
    n = m.rows
    assert dec.u @ dec.uinv == IntegerMatrix.identity(n)
    assert dec.v @ dec.vinv == IntegerMatrix.identity(m.cols)


def _minor_gcds(rows, k):
    """gcd of all k x k minors, by brute force."""
    from itertools import combinations
    from math import gcd

    n, m = len(rows), len(rows[0]) if rows else 0

    def det(sub):
        if len(sub) == 1:
            return sub[0][0]
        total = 0
        for j in range(len(sub)):
            minor = [row[:j] + row[j + 1:] for row in sub[1:]]
            total += (-1) ** j * sub[0][j] * det(minor)
        return total

    g = 0
    for ri in combinations(range(n), k):
        for ci in combinations(range(m), k):
            sub = [[rows[i][j] for j in ci] for i in ri]
            g = gcd(g, det(sub))
    return g


@given(st.lists(st.lists(st.integers(-9, 9), min_size=1, max_size=4),
                min_size=1, max_size=4).filter(
                    lambda r: len({len(x) for x in r}) == 1))
@settings(max_examples=200, deadline=None)
def test_snf_matches_minor_gcds(rows):
    m = IntegerMatrix.from_rows(rows)
    diag, rank = smith_normal_form(m)
    # d_1 * ... * d_k equals the gcd of the k x k minors
    prod = 1
    for k, d in enumerate(diag, start=1):
        prod *= d
        assert prod == _minor_gcds(rows, k)
    if rank < min(m.rows, m.cols):
        assert _minor_gcds(rows, rank + 1) == 0
    assert all(diag[i] > 0 for i in range(rank))
    assert all(diag[i + 1] % diag[i] == 0 for i in range(rank - 1))


def test_snf_deterministic():
    rows = [[3, 1, 4], [1, 5, 9], [2, 6, 5]]
    first = smith_normal_form(mat(rows), with_transforms=True)
    second = smith_normal_form(mat(rows), with_transforms=True)
    assert first.u == second.u and first.v == second.v


# ---------------------------------------------------------------------------
# chain complexes and homology


def sphere_cw():
    # S^2 with one 0-cell and one 2-cell
    return complex_from_ranks(ZZ, {0: 1, 2: 1})


def rp2_cw(ring=ZZ):
    return complex_from_ranks(ring, {0: 1, 1: 1, 2: 1},
                              {2: mat([[2]])})


def circle_cw():
    # two 0-cells, two 1-cells glued into a circle
    return complex_from_ranks(ZZ, {0: 2, 1: 2},
                              {1: mat([[1, -1], [-1, 1]])})


def test_complex_rejects_bad_square():
    with pytest.raises(InvariantViolation):
        complex_from_ranks(ZZ, {0: 1, 1: 1, 2: 1},
                           {1: mat([[1]]), 2: mat([[1]])})


def test_complex_rejects_bad_shape():
    with pytest.raises(ShapeMismatch):
        GradedChainComplex(ZZ, 0, 1, {0: 1, 1: 1}, {1: mat([[1, 0]])})


def test_mod_p_relaxes_square_check():
    # d_1 d_2 = 2, which vanishes only in characteristic 2
    diffs = {1: mat([[1]]), 2: mat([[2]])}
    with pytest.raises(InvariantViolation):
        complex_from_ranks(ZZ, {0: 1, 1: 1, 2: 1}, diffs)
    c = complex_from_ranks(F2, {0: 1, 1: 1, 2: 1}, diffs)
    assert dict(homology(c).free) == {2: 1}


def test_homology_sphere():
    h = homology(sphere_cw())
    assert dict(h.free) == {0: 1, 2: 1}
    assert not h.torsion_factors


def test_homology_circle():
    assert dict(homology(circle_cw()).free) == {0: 1, 1: 1}


def test_homology_rp2_integral():
    h = homology(rp2_cw())
    assert dict(h.free) == {0: 1}
    assert h.torsion(1) == (2,)
    assert h.torsion(2) == ()


def test_homology_rp2_mod2():
    h = homology(rp2_cw(F2))
    assert dict(h.free) == {0: 1, 1: 1, 2: 1}


def test_homology_rp2_mod3():
    h = homology(rp2_cw(CoefficientRing.prime_field(3)))
    assert dict(h.free) == {0: 1}


def test_homology_torsion_divisibility():
    # Z^2 --diag(2,4)--> Z^2 gives Z/2 + Z/4 in degree 0
    c = complex_from_ranks(ZZ, {0: 2, 1: 2}, {1: mat([[2, 0], [0, 4]])})
    h = homology(c)
    assert h.torsion(0) == (2, 4)
    assert h.free_rank(0) == 0


def test_euler_characteristic_matches_alternating_ranks():
    c = rp2_cw()
    h = homology(c)
    chi_cells = sum((-1) ** n * c.dim(n) for n in c.degrees())
    assert h.euler_characteristic() == chi_cells


def test_shift_and_dual():
    h = homology(shift_complex(rp2_cw(), 5))
    assert dict(h.free) == {5: 1}
    assert h.torsion(6) == (2,)
    hd = homology(dual_complex(rp2_cw()))
    # universal coefficients: H^0 = Z, H^2 = Z/2, reported in degrees 0, -2
    assert dict(hd.free) == {0: 1}
    assert hd.torsion(-2) == (2,)


def test_double_dual_is_identity():
    c = rp2_cw()
    dd = dual_complex(dual_complex(c))
    assert dict(dd.rank) == dict(c.rank)
    assert {n: d.to_rows() for n, d in dd.differential.items()} == \
        {n: d.to_rows() for n, d in c.differential.items()}


def test_direct_sum_homology_adds():
    h = homology(direct_sum([sphere_cw(), circle_cw()]))
    assert dict(h.free) == {0: 2, 1: 1, 2: 1}


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=50, deadline=None)
def test_rank_nullity_on_diagonal_complexes(a, b, c):
    # C_1 = Z^{a+b}, C_0 = Z^{b+c}; d kills a lines onto b independent images
    d = IntegerMatrix(b + c, a + b,
                      {(i, a + i): 1 for i in range(b)})
    cx = complex_from_ranks(ZZ, {0: b + c, 1: a + b}, {1: d})
    h = homology(cx)
    assert h.free_rank(1) == a
    assert h.free_rank(0) == c


# ---------------------------------------------------------------------------
# Laurent polynomials, dim_t, preceq


def test_dim_t_examples():
    h = homology(sphere_cw())
    assert dim_t(h).coeffs == {0: 1, 2: 1}
    h = homology(rp2_cw())
    # torsion does not contribute
    assert dim_t(h).coeffs == {0: 1}


def test_poly_arithmetic_and_str():
    p = LaurentPoly.from_coeffs({-1: 2, 0: 1})
    q = LaurentPoly.from_coeffs({1: 1})
    assert (p * q).coeffs == {0: 2, 1: 1}
    assert (p - p).is_zero()
    assert str(LaurentPoly.zero()) == "0"
    assert str(p) == "2*t^-1 + 1"
    assert p.evaluate(-1) == -1


def test_preceq_positive_case():
    p = LaurentPoly.from_coeffs({0: 1, 2: 1})
    q = LaurentPoly.from_coeffs({0: 1, 1: 1, 2: 2})
    v = preceq(p, q)
    assert v.holds
    assert v.witness.coeffs == {1: 1}


def test_preceq_reflexive_with_zero_witness():
    p = LaurentPoly.from_coeffs({0: 3, 5: 2})
    v = preceq(p, p)
    assert v.holds and v.witness.is_zero()


def test_preceq_negative_case_reports_first_failure():
    v = preceq(LaurentPoly.one(), LaurentPoly.from_coeffs({0: 1, 2: 1}))
    assert not v.holds
    assert v.failing_degree == 3
    v = preceq(LaurentPoly.from_coeffs({1: 1}), LaurentPoly.one())
    assert not v.holds
    assert v.failing_degree == 1


def test_preceq_witness_reconstructs_difference():
    p = LaurentPoly.from_coeffs({0: 1})
    q = LaurentPoly.from_coeffs({0: 2, 1: 3, 2: 2})
    v = preceq(p, q)
    assert v.holds
    one_plus_t = LaurentPoly.from_coeffs({0: 1, 1: 1})
    assert (p + one_plus_t * v.witness).coeffs == q.coeffs


@given(st.dictionaries(st.integers(-3, 3), st.integers(0, 4), max_size=5),
       st.dictionaries(st.integers(-3, 3), st.integers(0, 4), max_size=5))
@settings(max_examples=300, deadline=None)
def test_preceq_euler_preservation(pc, qc):
    p = LaurentPoly.from_coeffs(pc)
    q = LaurentPoly.from_coeffs(qc)
    v = preceq(p, q)
    if v.holds:
        assert p.evaluate(-1) == q.evaluate(-1)
        assert v.witness.is_nonnegative()


@given(st.dictionaries(st.integers(0, 4), st.integers(0, 3), max_size=5),
       st.dictionaries(st.integers(0, 4), st.integers(0, 3), max_size=5))
@settings(max_examples=200, deadline=None)
def test_preceq_antisymmetry(pc, qc):
    p = LaurentPoly.from_coeffs(pc)
    q = LaurentPoly.from_coeffs(qc)
    if preceq(p, q).holds and preceq(q, p).holds:
        assert p.coeffs == q.coeffs
