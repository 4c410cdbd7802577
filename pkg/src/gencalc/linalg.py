"""Exact linear algebra over the scalar ring and its fraction field.

Two elimination engines:

* fraction-free Gauss-Jordan elimination over polynomial Scalars (divisions
  only by the previous pivot, always exact), used for rank and kernel of
  symbolic matrices;
* straight Gauss-Jordan elimination over SFrac, used for solving, inversion
  and span-membership questions.

Every pivot that is not a nonzero constant is recorded as a genericity
assumption: results are valid wherever all recorded scalars are nonzero.
Pivot choice is deterministic: prefer symbol-free entries, then lowest
total degree, then lowest row index.
"""

from __future__ import annotations

from fractions import Fraction

from .scalars import GRat, SFrac, Scalar, normalized_assumption


# ---------------------------------------------------------------------------
# shared helpers


def _record(assumptions: set, s: Scalar) -> None:
    a = normalized_assumption(s)
    if a is not None:
        assumptions.add(a)


def _pivot_key(s) -> tuple:
    if isinstance(s, SFrac):
        deg = s.num.degree() + s.den.degree()
        sym = 0 if (s.num.is_constant() and s.den.is_constant()) else 1
    else:
        deg = s.degree()
        sym = 0 if s.is_constant() else 1
    return (sym, deg)


def sf_identity(n: int) -> list:
    return [[SFrac.one() if i == j else SFrac.zero() for j in range(n)]
            for i in range(n)]


def sf_matmul(a: list, b: list) -> list:
    out = []
    for row in a:
        orow = []
        for j in range(len(b[0])):
            acc = SFrac.zero()
            for k, v in enumerate(row):
                if not v.is_zero():
                    acc = acc + v * b[k][j]
            orow.append(acc)
        out.append(orow)
    return out


def sf_transpose(a: list) -> list:
    return [list(col) for col in zip(*a)]


def _normalize_vector(vec: list) -> tuple:
    """Clear denominators and scale so the first nonzero entry is canonically
    monic; returns a tuple of Scalars."""
    den = Scalar.one()
    for v in vec:
        if not v.is_zero() and not v.den.is_constant():
            den = den * v.den
    cleared = []
    for v in vec:
        w = v * SFrac(den)
        if not w.is_polynomial():
            raise ArithmeticError("denominator failed to clear in kernel vector")
        cleared.append(w.num)
    lead = next((w for w in cleared if not w.is_zero()), None)
    if lead is None:
        return tuple(cleared)
    first = min(lead.t, key=lambda mo: tuple(k.order_key() for k in mo))
    unit = lead.t[first].inv()
    return tuple(w.scale(unit) for w in cleared)


# ---------------------------------------------------------------------------
# fraction-free elimination over Scalars


def bareiss_rank_kernel(rows: list, ncols: int | None = None) -> tuple:
    """Rank and kernel of a Scalar matrix by fraction-free elimination.

    Returns (rank, kernel_basis, assumptions, pivot_cols).  Kernel vectors
    are tuples of Scalars with canonically monic leading entry.
    """
    m = [list(r) for r in rows]
    if not m:
        if ncols is None:
            return 0, [], set(), []
        basis = []
        for c in range(ncols):
            vec = [Scalar.zero()] * ncols
            vec[c] = Scalar.one()
            basis.append(tuple(vec))
        return 0, basis, set(), []
    if ncols is None:
        ncols = len(m[0])
    if any(len(r) != ncols for r in m):
        raise ValueError("ragged matrix")
    nrows = len(m)
    assumptions: set = set()
    pivot_cols: list = []
    prev = Scalar.one()
    r = 0
    for c in range(ncols):
        best = None
        for i in range(r, nrows):
            if not m[i][c].is_zero():
                key = _pivot_key(m[i][c]) + (i,)
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            continue
        i = best[1]
        if i != r:
            m[i], m[r] = m[r], m[i]
        piv = m[r][c]
        _record(assumptions, piv)
        for i2 in range(nrows):
            if i2 == r:
                continue
            fac = m[i2][c]
            row = m[i2]
            for j in range(ncols):
                num = row[j] * piv - fac * m[r][j]
                q = num.exact_div(prev)
                if q is None:
                    raise ArithmeticError("fraction-free elimination: inexact division")
                row[j] = q
        prev = piv
        pivot_cols.append(c)
        r += 1
        if r == nrows:
            break
    rank = len(pivot_cols)
    kernel = []
    for cf in range(ncols):
        if cf in pivot_cols:
            continue
        # after Jordan-style elimination each pivot row is zero at every other
        # pivot column, so one division per pivot row solves it exactly
        vec = [SFrac.zero()] * ncols
        vec[cf] = SFrac.one()
        for t, ct in enumerate(pivot_cols):
            if not m[t][cf].is_zero():
                vec[ct] = -SFrac(m[t][cf]) / SFrac(m[t][ct])
        kernel.append(_normalize_vector(vec))
    return rank, kernel, assumptions, pivot_cols


def solve_linear(rows: list, mode: str = "kernel", ncols: int | None = None) -> tuple:
    """Fraction-free elimination with recorded pivot assumptions.

    mode 'kernel' -> (kernel_basis, rank, assumptions)
    mode 'image'  -> (independent_columns, rank, assumptions)
    mode 'rank'   -> (rank, assumptions)
    """
    rank, kernel, assumptions, pivot_cols = bareiss_rank_kernel(rows, ncols)
    if mode == "kernel":
        return kernel, rank, assumptions
    if mode == "image":
        cols = [tuple(r[c] for r in rows) for c in pivot_cols]
        return cols, rank, assumptions
    if mode == "rank":
        return rank, assumptions
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Gaussian elimination over the fraction field


def _sfrac_rref(m: list, ncols: int, stop: int | None = None) -> tuple:
    """In-place reduced row echelon form using the first ``stop`` columns
    for pivots.  Returns (pivot_cols, assumptions).

    Pivots are chosen over all remaining columns at once, preferring
    constant entries, so symbolic genericity assumptions are only recorded
    when no constant pivot exists.
    """
    nrows = len(m)
    if stop is None:
        stop = ncols
    assumptions: set = set()
    pivot_cols: list = []
    free = [True] * stop
    r = 0
    while r < nrows:
        best = None
        for c in range(stop):
            if not free[c]:
                continue
            for i in range(r, nrows):
                if not m[i][c].is_zero():
                    key = _pivot_key(m[i][c]) + (c, i)
                    if best is None or key < best[0]:
                        best = (key, i, c)
        if best is None:
            break
        _, i, c = best
        free[c] = False
        if i != r:
            m[i], m[r] = m[r], m[i]
        piv = m[r][c]
        _record(assumptions, piv.num)
        if not piv.den.is_constant():
            _record(assumptions, piv.den)
        inv = piv.inv()
        m[r] = [v * inv for v in m[r]]
        for i2 in range(nrows):
            if i2 != r and not m[i2][c].is_zero():
                fac = m[i2][c]
                m[i2] = [a - fac * b for a, b in zip(m[i2], m[r])]
        pivot_cols.append(c)
        r += 1
    return pivot_cols, assumptions


def sfrac_rank_kernel(rows: list, ncols: int | None = None) -> tuple:
    """Rank/kernel of an SFrac matrix via field elimination.

    Returns (rank, kernel_basis, assumptions, pivot_cols); kernel vectors
    are denominator-cleared Scalar tuples as in bareiss_rank_kernel.
    """
    if not rows:
        if ncols is None:
            return 0, [], set(), []
        basis = []
        for c in range(ncols):
            vec = [Scalar.zero()] * ncols
            vec[c] = Scalar.one()
            basis.append(tuple(vec))
        return 0, basis, set(), []
    m = [[SFrac.of(v) for v in r] for r in rows]
    if ncols is None:
        ncols = len(m[0])
    pivot_cols, assumptions = _sfrac_rref(m, ncols)
    rank = len(pivot_cols)
    kernel = []
    for cf in range(ncols):
        if cf in pivot_cols:
            continue
        vec = [SFrac.zero()] * ncols
        vec[cf] = SFrac.one()
        for t, ct in enumerate(pivot_cols):
            vec[ct] = -m[t][cf]
        kernel.append(_normalize_vector(vec))
    return rank, kernel, assumptions, pivot_cols


def sfrac_solve(A: list, B: list) -> tuple:
    """Solve A X = B columnwise over SFrac.

    Returns (X, residual_gens, assumptions): X is a solution with free
    variables set to zero, valid on the locus where every Scalar in
    residual_gens vanishes (empty residuals mean unconditionally solvable);
    assumptions are the recorded pivots.
    """
    nrows = len(A)
    ncols = len(A[0]) if A else 0
    nrhs = len(B[0]) if B else 0
    if len(B) != nrows:
        raise ValueError("rhs row count mismatch")
    aug = [[SFrac.of(v) for v in A[i]] + [SFrac.of(v) for v in B[i]]
           for i in range(nrows)]
    pivot_cols, assumptions = _sfrac_rref(aug, ncols + nrhs, stop=ncols)
    rank = len(pivot_cols)
    residuals = []
    for i in range(rank, nrows):
        for j in range(ncols, ncols + nrhs):
            v = aug[i][j]
            if not v.is_zero():
                residuals.append(v.num)
                if not v.den.is_constant():
                    _record(assumptions, v.den)
    X = [[SFrac.zero()] * nrhs for _ in range(ncols)]
    for t, ct in enumerate(pivot_cols):
        for j in range(nrhs):
            X[ct][j] = aug[t][ncols + j]
    return X, residuals, assumptions


def sfrac_inverse(A: list) -> tuple:
    """Inverse of a square SFrac matrix; raises on singularity over the
    fraction field."""
    n = len(A)
    X, residuals, assumptions = sfrac_solve(A, sf_identity(n))
    if residuals:
        raise ValueError("matrix is not invertible")
    return X, assumptions


def span_rank(vectors: list) -> tuple:
    """Rank of the span of SFrac coordinate vectors; (rank, assumptions)."""
    if not vectors:
        return 0, set()
    rank, _, assumptions, _ = sfrac_rank_kernel([list(v) for v in vectors])
    return rank, assumptions


def membership_constraints(vectors: list, basis: list) -> tuple:
    """Constraints for each vector to lie in the span of the basis vectors.

    vectors, basis: lists of SFrac coordinate rows of equal length.
    Returns (coeffs, residual_gens, assumptions): coeffs[i] expresses
    vectors[i] in the basis wherever the residual scalars vanish.
    """
    if not basis:
        gens = []
        assumptions: set = set()
        for v in vectors:
            for e in v:
                e = SFrac.of(e)
                if not e.is_zero():
                    gens.append(e.num)
                    if not e.den.is_constant():
                        _record(assumptions, e.den)
        return [[] for _ in vectors], gens, assumptions
    A = sf_transpose([[SFrac.of(x) for x in b] for b in basis])
    B = sf_transpose([[SFrac.of(x) for x in v] for v in vectors])
    X, residuals, assumptions = sfrac_solve(A, B)
    coeffs = sf_transpose(X) if X else [[] for _ in vectors]
    return coeffs, residuals, assumptions


# ---------------------------------------------------------------------------
# determinants


def bareiss_det(rows: list) -> Scalar:
    """Determinant of a square Scalar matrix, fraction-free."""
    m = [[Scalar.const(v) if not isinstance(v, Scalar) else v for v in r]
         for r in rows]
    n = len(m)
    if any(len(r) != n for r in m):
        raise ValueError("determinant needs a square matrix")
    if n == 0:
        return Scalar.one()
    sign = 1
    prev = Scalar.one()
    for k in range(n - 1):
        if m[k][k].is_zero():
            for r in range(k + 1, n):
                if not m[r][k].is_zero():
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return Scalar.zero()
        piv = m[k][k]
        for r in range(k + 1, n):
            for c in range(k + 1, n):
                num = m[r][c] * piv - m[r][k] * m[k][c]
                q = num.exact_div(prev)
                if q is None:
                    raise ArithmeticError("fraction-free determinant step failed")
                m[r][c] = q
            m[r][k] = Scalar.zero()
        prev = piv
    det = m[n - 1][n - 1]
    return -det if sign < 0 else det


def sfrac_det(rows: list) -> SFrac:
    """Determinant of a square SFrac matrix."""
    num_rows = []
    den = Scalar.one()
    for r in rows:
        r = [SFrac.of(v) for v in r]
        common = Scalar.one()
        for e in r:
            common = common * e.den
        cleared = []
        for e in r:
            q = common.exact_div(e.den)
            if q is None:
                raise ArithmeticError("row denominator clearing failed")
            cleared.append(e.num * q)
        num_rows.append(cleared)
        den = den * common
    return SFrac(bareiss_det(num_rows), den)


# ---------------------------------------------------------------------------
# numeric helpers


def grat_rank(rows: list) -> int:
    """Rank of a GRat matrix by plain field elimination."""
    m = [[GRat.of(v) for v in r] for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    nrows = len(m)
    r = 0
    for c in range(ncols):
        piv_row = next((i for i in range(r, nrows) if not m[i][c].is_zero()), None)
        if piv_row is None:
            continue
        m[piv_row], m[r] = m[r], m[piv_row]
        inv = m[r][c].inv()
        m[r] = [v * inv for v in m[r]]
        for i in range(nrows):
            if i != r and not m[i][c].is_zero():
                fac = m[i][c]
                m[i] = [a - fac * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == nrows:
            break
    return r


def rational_inertia(sym: list) -> tuple:
    """Inertia (n_pos, n_neg, n_zero) of a symmetric rational matrix."""
    n = len(sym)
    m = [[Fraction(v) for v in row] for row in sym]
    for i in range(n):
        for j in range(n):
            if m[i][j] != m[j][i]:
                raise ValueError("matrix is not symmetric")
    pos = neg = zero = 0
    live = list(range(n))
    while live:
        d = next((i for i in live if m[i][i] != 0), None)
        if d is None:
            pair = None
            for i in live:
                for j in live:
                    if i < j and m[i][j] != 0:
                        pair = (i, j)
                        break
                if pair:
                    break
            if pair is None:
                zero += len(live)
                break
            i, j = pair
            for t in range(n):
                m[i][t] += m[j][t]
            for t in range(n):
                m[t][i] += m[t][j]
            d = i
        a = m[d][d]
        if a > 0:
            pos += 1
        else:
            neg += 1
        live.remove(d)
        for i in live:
            if m[i][d] != 0:
                fac = m[i][d] / a
                for t in range(n):
                    m[i][t] -= fac * m[d][t]
                for t in range(n):
                    m[t][i] -= fac * m[t][d]
    return pos, neg, zero
