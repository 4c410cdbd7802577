"""Exact linear algebra: elimination engines, membership, inertia."""

import random
from fractions import Fraction

from gencalc.linalg import (
    bareiss_rank_kernel,
    grat_rank,
    membership_constraints,
    rational_inertia,
    sf_identity,
    sf_matmul,
    sfrac_inverse,
    sfrac_rank_kernel,
    sfrac_solve,
    solve_linear,
    span_rank,
)
from gencalc.scalars import GRat, SFrac, Scalar, param_key


TAU = Scalar.sym(param_key("tau", cx=True))
X = Scalar.sym(param_key("x"))
Y = Scalar.sym(param_key("y"))


def _sc(n):
    return Scalar.const(n)


def _mat(rows):
    return [[_sc(v) if isinstance(v, int) else v for v in r] for r in rows]


def _naive_fraction_rank_kernel(rows):
    """Oracle: plain Gaussian elimination over Fraction, first-nonzero pivots."""
    m = [[Fraction(v) for v in r] for r in rows]
    ncols = len(m[0])
    nrows = len(m)
    piv_cols = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[pr], m[r] = m[r], m[pr]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv_cols.append(c)
        r += 1
        if r == nrows:
            break
    kernel = []
    for cf in range(ncols):
        if cf in piv_cols:
            continue
        vec = [Fraction(0)] * ncols
        vec[cf] = Fraction(1)
        for t, ct in enumerate(piv_cols):
            vec[ct] = -m[t][cf]
        kernel.append(vec)
    return len(piv_cols), kernel


def _same_span_fraction(vs, ws):
    if len(vs) != len(ws):
        return False
    if not vs:
        return True
    rows = [[SFrac.of(GRat(q)) for q in v] for v in vs]
    rows += [[SFrac.of(x) for x in w] for w in ws]
    rank, _ = span_rank(rows)
    return rank == len(vs)


def test_bareiss_agrees_with_naive_field_elimination_on_random_5x5():
    rng = random.Random(20260823)
    for _ in range(25):
        raw = [[rng.randint(-6, 6) for _ in range(5)] for _ in range(5)]
        if rng.random() < 0.5:
            raw[rng.randrange(5)] = list(raw[rng.randrange(5)])  # force dependence
        rank0, kernel0 = _naive_fraction_rank_kernel(raw)
        rank1, kernel1, assumptions, _ = bareiss_rank_kernel(_mat(raw))
        assert rank1 == rank0
        assert assumptions == set()
        assert _same_span_fraction(kernel0, kernel1)
        for vec in kernel1:
            for i in range(5):
                acc = Scalar.zero()
                for j in range(5):
                    acc = acc + _sc(raw[i][j]) * vec[j]
                assert acc.is_zero()


def test_symbolic_rank_one_matrix_needs_no_assumption():
    m = [[Scalar.one(), TAU], [TAU, TAU * TAU]]
    rank, kernel, assumptions, _ = bareiss_rank_kernel(m)
    assert rank == 1
    assert assumptions == set()
    assert len(kernel) == 1
    v = kernel[0]
    assert (m[0][0] * v[0] + m[0][1] * v[1]).is_zero()
    assert (m[1][0] * v[0] + m[1][1] * v[1]).is_zero()


def test_symbolic_pivot_is_recorded():
    # full rank genuinely requires tau != 0, so some power of tau must be
    # assumed whichever pivot order is taken
    m = [[TAU, Scalar.one()], [Scalar.zero(), TAU]]
    rank, _, assumptions, _ = bareiss_rank_kernel(m)
    assert rank == 2
    assert assumptions and assumptions <= {"tau", "tau^2"}
    rank2, _, assumptions2, _ = sfrac_rank_kernel([[SFrac(v) for v in r] for r in m])
    assert rank2 == 2
    assert assumptions2 and assumptions2 <= {"tau", "tau^2"}


def test_pivot_prefers_constant_entries():
    # the constant entry below must win the first pivot, so tau itself is
    # never assumed; full rank still genuinely needs 1 - tau != 0
    m = [[TAU, Scalar.one()], [Scalar.one(), Scalar.one()]]
    rank, _, assumptions, _ = bareiss_rank_kernel(m)
    assert rank == 2
    assert assumptions == {"1-tau"}


def test_solve_linear_modes():
    rows = _mat([[1, 2, 3], [2, 4, 6], [0, 1, 1]])
    kernel, rank, _ = solve_linear(rows, "kernel")
    assert rank == 2 and len(kernel) == 1
    cols, rank2, _ = solve_linear(rows, "image")
    assert rank2 == 2 and len(cols) == 2
    rank3, _ = solve_linear(rows, "rank")
    assert rank3 == 2


def test_empty_matrix_kernel_is_full_space():
    rank, kernel, _, _ = bareiss_rank_kernel([], ncols=3)
    assert rank == 0 and len(kernel) == 3
    rank, kernel, _, _ = sfrac_rank_kernel([], ncols=2)
    assert rank == 0 and len(kernel) == 2


def test_sfrac_engine_matches_bareiss_on_symbolic_matrices():
    rng = random.Random(7)
    syms = [Scalar.one(), X, Y, X * Y]
    for _ in range(15):
        n = rng.choice([3, 4])
        raw = [[sum((rng.randint(-2, 2) * s for s in rng.sample(syms, 2)),
                    Scalar.zero())
                for _ in range(n)] for _ in range(n)]
        r1, k1, _, _ = bareiss_rank_kernel(raw)
        r2, k2, _, _ = sfrac_rank_kernel([[SFrac(v) for v in row] for row in raw])
        assert r1 == r2
        assert len(k1) == len(k2)
        both = [[SFrac(x) for x in v] for v in k1] + [[SFrac(x) for x in v] for v in k2]
        if both:
            rk, _ = span_rank(both)
            assert rk == len(k1)


def test_sfrac_solve_consistent_and_inconsistent():
    A = [[SFrac.const(1), SFrac.const(2)], [SFrac.const(2), SFrac.const(4)]]
    B = [[SFrac.const(3)], [SFrac.const(6)]]
    X_, residuals, _ = sfrac_solve(A, B)
    assert residuals == []
    got = sf_matmul(A, X_)
    assert got[0][0] == SFrac.const(3) and got[1][0] == SFrac.const(6)
    B2 = [[SFrac.const(3)], [SFrac.const(7)]]
    _, residuals2, _ = sfrac_solve(A, B2)
    assert residuals2 and not residuals2[0].is_zero()


def test_sfrac_solve_symbolic_residual():
    # x * c1 = tau has a solution iff tau-free residuals vanish; here the
    # second equation forces the residual tau^2 - 1 (up to unit)
    A = [[SFrac.const(1)], [SFrac(TAU)]]
    B = [[SFrac(TAU)], [SFrac.const(1)]]
    _, residuals, _ = sfrac_solve(A, B)
    assert len(residuals) == 1
    r = residuals[0].monic_canonical().serialize()
    assert r in ("1-tau^2", "tau^2-1")


def test_sfrac_inverse_roundtrip():
    A = [[SFrac.const(2), SFrac(TAU)], [SFrac.zero(), SFrac.const(1)]]
    inv, assumptions = sfrac_inverse(A)
    prod = sf_matmul(A, inv)
    ident = sf_identity(2)
    for i in range(2):
        for j in range(2):
            assert prod[i][j] == ident[i][j]
    assert assumptions == set()


def test_sfrac_inverse_rejects_singular():
    A = [[SFrac.const(1), SFrac.const(2)], [SFrac.const(2), SFrac.const(4)]]
    try:
        sfrac_inverse(A)
    except ValueError:
        pass
    else:
        raise AssertionError("singular matrix inverted")


def test_membership_constraints_in_and_out_of_span():
    basis = [[SFrac.const(1), SFrac.const(0), SFrac.const(1)],
             [SFrac.const(0), SFrac.const(1), SFrac.const(1)]]
    inside = [[SFrac.const(2), SFrac.const(3), SFrac.const(5)]]
    coeffs, residuals, _ = membership_constraints(inside, basis)
    assert residuals == []
    assert coeffs[0][0] == SFrac.const(2) and coeffs[0][1] == SFrac.const(3)
    outside = [[SFrac.const(1), SFrac.const(0), SFrac.const(0)]]
    _, residuals2, _ = membership_constraints(outside, basis)
    assert residuals2 and any(not r.is_zero() for r in residuals2)


def test_membership_with_symbolic_vector_yields_condition():
    basis = [[SFrac.const(1), SFrac.const(0)]]
    vec = [[SFrac.const(1), SFrac(TAU)]]
    _, residuals, _ = membership_constraints(vec, basis)
    assert [r.monic_canonical().serialize() for r in residuals] == ["tau"]


def test_membership_empty_basis():
    coeffs, residuals, _ = membership_constraints(
        [[SFrac.zero(), SFrac.zero()], [SFrac(TAU), SFrac.zero()]], [])
    assert coeffs == [[], []]
    assert [r.monic_canonical().serialize() for r in residuals] == ["tau"]


def test_grat_rank():
    i = GRat.i()
    assert grat_rank([[GRat.one(), i], [i, GRat(-1)]]) == 1
    assert grat_rank([[GRat.one(), i], [i, GRat.one()]]) == 2
    assert grat_rank([]) == 0


def test_rational_inertia_known_cases():
    assert rational_inertia([[2, 0], [0, 3]]) == (2, 0, 0)
    assert rational_inertia([[-1, 0], [0, 5]]) == (1, 1, 0)
    assert rational_inertia([[0, 2], [2, 0]]) == (1, 1, 0)
    assert rational_inertia([[0, 0], [0, 0]]) == (0, 0, 2)
    # the hyperbolic pairing block pattern used by the gap checks
    g = [[0, 0, 2, 0], [0, 0, 0, 2], [2, 0, 0, 0], [0, 2, 0, 0]]
    assert rational_inertia(g) == (2, 2, 0)


def _det_fraction(m):
    n = len(m)
    m = [[Fraction(v) for v in r] for r in m]
    det = Fraction(1)
    for c in range(n):
        pr = next((i for i in range(c, n) if m[i][c] != 0), None)
        if pr is None:
            return Fraction(0)
        if pr != c:
            m[pr], m[c] = m[c], m[pr]
            det = -det
        det *= m[c][c]
        inv = 1 / m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] * inv
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det


def test_rational_inertia_random_det_sign():
    rng = random.Random(99)
    for _ in range(20):
        n = rng.choice([2, 3, 4])
        a = [[rng.randint(-4, 4) for _ in range(n)] for _ in range(n)]
        s = [[a[i][j] + a[j][i] for j in range(n)] for i in range(n)]
        pos, neg, zero = rational_inertia(s)
        assert pos + neg + zero == n
        det = _det_fraction(s)
        if zero == 0:
            assert det != 0
            assert (det > 0) == (neg % 2 == 0)
        else:
            assert det == 0


def test_inertia_rejects_asymmetric():
    try:
        rational_inertia([[0, 1], [2, 0]])
    except ValueError:
        pass
    else:
        raise AssertionError("asymmetric matrix accepted")
