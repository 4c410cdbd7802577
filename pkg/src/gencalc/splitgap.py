"""Split subbundles of the generalized tangent bundle.

A split is an even-rank subbundle on which the tautological pairing is
nondegenerate of balanced signature.  This module detects when a split is
an almost product structure (five independently evaluated, provably
equivalent conditions), constructs the associated 2-form, builds the
induced bigrading of forms, splits the exterior differential into its four
bidegree components, tests the two transverse foliations and the local
product property, and computes the invariant part of the basic complex.

All subspace arithmetic runs over the 2n-dimensional coordinate model of
the generalized tangent bundle with scalar-fraction entries; genericity
assumptions from symbolic pivoting are accumulated on the structure.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

from .calculus import (
    FormExpr,
    OpMatrix,
    OperatorExpr,
    basis_subsets,
    dorfman,
    op_compose,
    op_d,
    op_equal,
    op_sum,
    op_zero,
    section_of_operator,
)
from .geometry import GTBSection, Geometry
from .linalg import (
    bareiss_rank_kernel,
    membership_constraints,
    rational_inertia,
    sfrac_det,
    sfrac_inverse,
    sfrac_rank_kernel,
)
from .scalars import (
    ConstraintIdeal,
    GRat,
    SFrac,
    Scalar,
    frame_derive,
    func_key,
    normalized_assumption,
)


class GapInconsistencyError(RuntimeError):
    """Two provably equivalent almost-product conditions disagreed."""


class GapCondition(NamedTuple):
    name: str
    verdict: str
    detail: str


class GapReport(NamedTuple):
    verdict: str
    p_type: int
    conditions: tuple
    ideal: ConstraintIdeal


class FoliationReport(NamedTuple):
    pi_e_foliation: str
    pi_eperp_foliation: str
    local_product: str
    courant_algebroid: str
    details: tuple


class BasicComplex(NamedTuple):
    basis: tuple
    de_matrix: tuple
    assumptions: tuple


# ---------------------------------------------------------------------------
# the pairing


def pairing(x: GTBSection, y: GTBSection) -> SFrac:
    """Twice the graded commutator of two odd sections: 2(w_y(v_x)+w_x(v_y))."""
    if x.dim != y.dim:
        raise ValueError("sections live on different geometries")
    acc = SFrac.zero()
    for a, b in zip(x.vec, y.form):
        acc = acc + a * b
    for a, b in zip(x.form, y.vec):
        acc = acc + a * b
    return acc + acc


def b_transform(sec: GTBSection, B: FormExpr) -> GTBSection:
    """The 2-form transform of a section: the vector part is kept and the
    form part is reduced by the contraction of the vector part into B."""
    n = sec.dim
    iota = FormExpr.zero(B.lie)
    for k, c in enumerate(sec.vec, start=1):
        if not c.is_zero():
            iota = iota + B.contract(k).scale(c)
    form = [sec.form[k - 1] - iota.coeff((k,)) for k in range(1, n + 1)]
    return GTBSection(list(sec.vec), form)


# ---------------------------------------------------------------------------
# matrix / span helpers over SFrac rows


def _left_kernel(rows: list, nrows: int):
    """Coefficient vectors c with sum_r c_r rows[r] = 0 (Scalar tuples)."""
    if not rows or not rows[0]:
        basis = []
        for c in range(nrows):
            vec = [Scalar.zero()] * nrows
            vec[c] = Scalar.one()
            basis.append(tuple(vec))
        return basis, set()
    cols = [[rows[r][c] for r in range(len(rows))] for c in range(len(rows[0]))]
    _, kern, assumptions, _ = sfrac_rank_kernel(cols, ncols=nrows)
    return kern, assumptions


def _scalar_dot(coeffs, rows):
    n = len(rows[0]) if rows else 0
    out = [SFrac.zero()] * n
    for c, row in zip(coeffs, rows):
        cf = SFrac.of(c)
        if cf.is_zero():
            continue
        for j in range(n):
            out[j] = out[j] + cf * row[j]
    return out


def _apply_matrix(mat, col):
    out = []
    for row in mat:
        acc = SFrac.zero()
        for a, b in zip(row, col):
            if not a.is_zero() and not b.is_zero():
                acc = acc + a * b
        out.append(acc)
    return out


def _matmul(a, b):
    rows, mid, cols = len(a), len(b), len(b[0]) if b else 0
    out = []
    for r in range(rows):
        row = []
        for c in range(cols):
            acc = SFrac.zero()
            for t in range(mid):
                x, y = a[r][t], b[t][c]
                if not x.is_zero() and not y.is_zero():
                    acc = acc + x * y
            row.append(acc)
        out.append(row)
    return out


def _transpose(m):
    return [list(r) for r in zip(*m)] if m else []


def _stack_rank(rows, ncols):
    if not rows:
        return 0, set()
    rank, _, assumptions, _ = sfrac_rank_kernel(rows, ncols=ncols)
    return rank, assumptions


def _same_span(rows_a, rows_b, ncols, expected):
    ra, _ = _stack_rank(rows_a, ncols)
    rb, _ = _stack_rank(rows_b, ncols)
    rab, _ = _stack_rank(rows_a + rows_b, ncols)
    return ra == rb == rab == expected


def _vector_type(sections, n):
    """Rank of the projected vector parts plus a basis of the pure-form
    members (as length-n covector tuples)."""
    if not sections:
        return 0, (), set()
    vrows = [[SFrac.of(c) for c in s.vec] for s in sections]
    kern, assumptions = _left_kernel(vrows, len(sections))
    rank = len(sections) - len(kern)
    frows = [[SFrac.of(c) for c in s.form] for s in sections]
    forms = [tuple(_scalar_dot(coeffs, frows)) for coeffs in kern]
    return rank, tuple(forms), assumptions


def _independent_vector_rows(sections, n):
    """Indices of sections whose vector parts span the projection."""
    if not sections:
        return [], set()
    vrows = [[SFrac.of(c) for c in s.vec] for s in sections]
    cols = [[vrows[r][c] for r in range(len(vrows))] for c in range(n)]
    _, _, assumptions, pivots = sfrac_rank_kernel(cols, ncols=len(vrows))
    return list(pivots), assumptions


def _annihilator(sections, n):
    """Basis of covectors vanishing on every projected vector part."""
    if not sections:
        return [tuple(SFrac.one() if j == c else SFrac.zero()
                      for j in range(n)) for c in range(n)], set()
    vrows = [[SFrac.of(c) for c in s.vec] for s in sections]
    _, kern, assumptions, _ = sfrac_rank_kernel(vrows, ncols=n)
    return [tuple(SFrac(x) for x in w) for w in kern], assumptions


def _real_value(e: SFrac) -> Fraction:
    val = e.num.constant_value() / e.den.constant_value()
    if val.im != 0:
        raise ValueError("pairing Gram entry is not real")
    return val.re


def _bidegree(J, ke):
    a = sum(1 for r in J if r <= ke)
    return a, len(J) - a


class _AdaptedForm:
    """Wedge algebra over adapted one-form indices (no differential)."""

    __slots__ = ("t",)

    def __init__(self, terms=None):
        self.t = {}
        if terms:
            for I, c in terms.items():
                if not c.is_zero():
                    self.t[tuple(I)] = c

    @staticmethod
    def one():
        return _AdaptedForm({(): SFrac.one()})

    def wedge(self, other):
        from .calculus import _merge_sign
        out = _AdaptedForm()
        for I, a in self.t.items():
            for J, b in other.t.items():
                sign, K = _merge_sign(I, J)
                if sign is None:
                    continue
                c = a * b
                if sign < 0:
                    c = -c
                prev = out.t.get(K)
                out.t[K] = c if prev is None else prev + c
        out.t = {K: c for K, c in out.t.items() if not c.is_zero()}
        return out


# ---------------------------------------------------------------------------
# fused bigraded differential


_OFFSETS = ((1, 0), (0, 1), (-1, 2), (2, -1))


class OpSplitD(OperatorExpr):
    """Selected bidegree components of d relative to a split: semantically
    the sum of P^{a+r,b+s} . d . P^{a,b} over the given offsets, evaluated
    with a single d pass per input component."""

    __slots__ = ("proj", "offsets", "label")
    parity = 1

    def __init__(self, proj: dict, offsets: tuple, label: str):
        self.proj = proj
        self.offsets = tuple(sorted(offsets))
        self.label = label

    def ev(self, rho: FormExpr) -> FormExpr:
        out = FormExpr.zero(rho.lie)
        for (a, b), P in self.proj.items():
            comp = P.ev(rho)
            if comp.is_zero():
                continue
            dcomp = comp.d()
            if dcomp.is_zero():
                continue
            for (r, s) in self.offsets:
                tgt = self.proj.get((a + r, b + s))
                if tgt is not None:
                    out = out + tgt.ev(dcomp)
        return out

    def conj(self) -> "OpSplitD":
        return OpSplitD({k: P.conj() for k, P in self.proj.items()},
                        self.offsets, self.label + "~")

    def collect_assumptions(self, acc: set) -> None:
        for P in self.proj.values():
            P.collect_assumptions(acc)

    def serialize(self) -> str:
        offs = " ".join(f"({r} {s})" for r, s in self.offsets)
        return f"(split-d {self.label} {offs})"


# ---------------------------------------------------------------------------
# the split structure


class SplitStructure:
    """An even-rank pairing-nondegenerate subbundle with eager caches.

    Immutable after construction: the complement, projectors, gap report,
    2-form, bigrading projectors, and split differentials are all computed
    up front, so concurrent readers share plain data.  The foliation report
    is a pure function of those caches and is memoized on first request.
    """

    __slots__ = ("geom", "frame", "k", "gram", "det", "signature_status",
                 "eval_point", "complement", "pr_matrix", "prp_matrix",
                 "p_type", "p_type_perp", "w_e", "w_perp", "gap", "b_field",
                 "proj", "d_components", "d_e", "d_eperp", "assumptions",
                 "name", "_foliation")

    def __init__(self, geom: Geometry, sections, eval_point=None, name="E"):
        self.geom = geom
        self.name = name
        self._foliation = None
        frame = tuple(sections)
        if len(frame) % 2:
            raise ValueError("split frames need an even number of sections")
        if any(s.dim != geom.dim for s in frame):
            raise ValueError("section dimension does not match the geometry")
        self.frame = frame
        self.k = len(frame) // 2
        n = geom.dim
        assumptions: set = set()

        self.gram = tuple(tuple(pairing(x, y) for y in frame) for x in frame)
        self.det = SFrac.one() if not frame else \
            sfrac_det([list(r) for r in self.gram])
        if self.det.is_zero():
            raise ValueError("degenerate pairing Gram on the split frame")
        a = normalized_assumption(self.det.num)
        if a is not None:
            assumptions.add(a)
        self.eval_point = dict(eval_point) if eval_point else None
        self.signature_status = self._check_signature()

        # orthogonal complement: kernel of the pairing rows
        rows = []
        for x in frame:
            co = list(x.coords())
            rows.append([c + c for c in (co[n:] + co[:n])])
        if rows:
            rank, kern, asmp, _ = sfrac_rank_kernel(rows, ncols=2 * n)
            assumptions |= asmp
        else:
            rank = 0
            kern = [tuple(Scalar.one() if t == c else Scalar.zero()
                          for t in range(2 * n)) for c in range(2 * n)]
        if rank != 2 * self.k or len(kern) != 2 * (n - self.k):
            raise ValueError("split frame fails to span the expected rank")
        self.complement = tuple(
            GTBSection.from_coords([SFrac(v) for v in vec]) for vec in kern)

        # projector onto the split along its complement
        cols = [list(s.coords()) for s in frame] + \
               [list(s.coords()) for s in self.complement]
        M = _transpose(cols)
        Minv, asmp = sfrac_inverse(M)
        assumptions |= asmp
        sel = [[Minv[r][c] if r < 2 * self.k else SFrac.zero()
                for c in range(2 * n)] for r in range(2 * n)]
        self.pr_matrix = tuple(tuple(row) for row in _matmul(M, sel))
        self.prp_matrix = tuple(
            tuple((SFrac.one() if r == c else SFrac.zero()) -
                  self.pr_matrix[r][c] for c in range(2 * n))
            for r in range(2 * n))

        self.p_type, self.w_e, asmp = _vector_type(frame, n)
        assumptions |= asmp
        self.p_type_perp, self.w_perp, asmp = _vector_type(self.complement, n)
        assumptions |= asmp

        self.gap, self.b_field, asmp = self._classify()
        assumptions |= asmp

        if self.gap.verdict == "holds":
            self.proj, asmp = self._build_bigrading()
            assumptions |= asmp
            self.d_components = {
                (r, s): OpSplitD(self.proj, ((r, s),), f"{name}^({r},{s})")
                for (r, s) in _OFFSETS}
            self.d_e = OpSplitD(self.proj, ((1, 0), (-1, 2)), f"d_{name}")
            self.d_eperp = OpSplitD(self.proj, ((0, 1), (2, -1)),
                                    f"d_{name}perp")
            self._verify_split_d()
        else:
            self.proj = None
            self.d_components = None
            self.d_e = None
            self.d_eperp = None
        self.assumptions = frozenset(assumptions)

    # -- construction stages ----------------------------------------------

    def _check_signature(self) -> str:
        k = self.k
        numeric = all(e.num.is_constant() and e.den.is_constant()
                      for row in self.gram for e in row)
        if numeric:
            vals = [[_real_value(e) for e in row] for row in self.gram]
            sig = rational_inertia(vals)
            if sig != (k, k, 0):
                raise ValueError(
                    f"split signature is {sig[:2]}, expected ({k}, {k})")
            return f"verified ({k},{k}) numerically"
        if self.eval_point is not None:
            vals = [[_real_value(e.specialize(self.eval_point))
                     for e in row] for row in self.gram]
            sig = rational_inertia(vals)
            if sig != (k, k, 0):
                raise ValueError(
                    f"split signature at the evaluation point is {sig[:2]}, "
                    f"expected ({k}, {k})")
            pt = ",".join(f"{nm}={v}"
                          for nm, v in sorted(self.eval_point.items()))
            return f"verified ({k},{k}) at {pt}"
        return "deferred (symbolic Gram, no evaluation point)"

    def _classify(self):
        n = self.geom.dim
        k = self.k
        assumptions: set = set()
        conds = []

        v1 = "holds" if self.p_type == k else "fails"
        conds.append(GapCondition(
            "vector_type", v1,
            f"projected vector rank {self.p_type}, split rank {k}"))

        dim_we, dim_wp = len(self.w_e), len(self.w_perp)
        stack = [list(w) for w in self.w_e] + [list(w) for w in self.w_perp]
        srank, asmp = _stack_rank(stack, n)
        assumptions |= asmp
        v2 = "holds" if (dim_we + dim_wp == n and srank == n) else "fails"
        conds.append(GapCondition(
            "cotangent_splits", v2,
            f"cotangent intersections of dimensions {dim_we}+{dim_wp} "
            f"span rank {srank} of {n}"))

        vstack = [[SFrac.of(c) for c in s.vec] for s in self.frame] + \
                 [[SFrac.of(c) for c in s.vec] for s in self.complement]
        vrank, asmp = _stack_rank(vstack, n)
        assumptions |= asmp
        v3 = "holds" if (self.p_type + self.p_type_perp == n and vrank == n) \
            else "fails"
        conds.append(GapCondition(
            "tangent_splits", v3,
            f"projected vector parts of ranks {self.p_type}+{self.p_type_perp} "
            f"span rank {vrank} of {n}"))

        b_field = None
        if v3 == "holds":
            b_field, asmp = self._construct_b_field()
            assumptions |= asmp
            v4 = "holds"
            detail = ("2-form constructed: " +
                      b_field.serialize(self.geom.coframe))
        else:
            v4 = "fails"
            detail = "no complementary vector splitting; 2-form unavailable"
        conds.append(GapCondition("b_field_exists", v4, detail))

        ideal, asmp = self._commuting_projections_ideal()
        assumptions |= asmp
        v5 = ideal.verdict()
        conds.append(GapCondition(
            "projected_differentials_commute", v5,
            "pairing of projected differentials of two generic functions"))

        generic = [v1, v2, v3, v4, "fails" if v5 == "conditional" else v5]
        if len(set(generic)) > 1:
            raise GapInconsistencyError(
                "equivalent almost-product conditions disagree: " +
                ", ".join(f"{c.name}={g}" for c, g in zip(conds, generic)))
        overall = generic[0]
        if overall == "fails" and v5 == "conditional":
            overall = "conditional"
        if overall != "holds":
            b_field = None
        return GapReport(overall, self.p_type, tuple(conds), ideal), \
            b_field, assumptions

    def _commuting_projections_ideal(self):
        n = self.geom.dim
        assumptions: set = set()
        secs = []
        for nm in ("u", "v"):
            sym = Scalar.sym(func_key(nm))
            col = [SFrac.zero()] * n + [
                SFrac(frame_derive(sym, i, self.geom.lie))
                for i in range(1, n + 1)]
            secs.append(GTBSection.from_coords(_apply_matrix(
                [list(r) for r in self.pr_matrix], col)))
        s = pairing(secs[0], secs[1])
        gens = [part for _, part in sorted(
            s.num.partition(("u", "v")).items(),
            key=lambda kv: tuple(k.order_key() for k in kv[0]))]
        a = normalized_assumption(s.den)
        if a is not None:
            assumptions.add(a)
        return ConstraintIdeal(gens), assumptions

    def _construct_b_field(self):
        n = self.geom.dim
        assumptions: set = set()
        ex, asmp_e = _independent_vector_rows(self.frame, n)
        py, asmp_p = _independent_vector_rows(self.complement, n)
        assumptions |= asmp_e | asmp_p
        reps_e = [self.frame[i] for i in ex]
        reps_p = [self.complement[i] for i in py]
        V = [[SFrac.of(c) for c in s.vec] for s in reps_e] + \
            [[SFrac.of(c) for c in s.vec] for s in reps_p]
        if len(V) != n:
            raise GapInconsistencyError(
                "vector splitting lost rank while constructing the 2-form")
        het = len(reps_e)
        badap = [[SFrac.zero()] * n for _ in range(n)]
        for b, y in enumerate(reps_p):
            for a, x in enumerate(reps_e):
                val = SFrac.zero()
                for wy, vx in zip(y.form, x.vec):
                    val = val + wy * vx
                badap[het + b][a] = val
                badap[a][het + b] = -val
        Vinv, asmp = sfrac_inverse(V)
        assumptions |= asmp
        # rows of V are the adapted vectors, so badap = V bstd V^T
        bstd = _matmul(_matmul(Vinv, badap), _transpose(Vinv))
        terms = {}
        for i in range(n):
            for j in range(i + 1, n):
                if not bstd[i][j].is_zero():
                    terms[(i + 1, j + 1)] = bstd[i][j]
        b_form = FormExpr(self.geom.lie, terms)
        self._verify_b_field(b_form)
        return b_form, assumptions

    def _verify_b_field(self, b_form: FormExpr) -> None:
        n = self.geom.dim

        def bval(v1, v2):
            acc = SFrac.zero()
            for (i, j), c in b_form.t.items():
                acc = acc + c * (v1[i - 1] * v2[j - 1] - v1[j - 1] * v2[i - 1])
            return acc

        for x in self.frame:
            for y in self.complement:
                want = SFrac.zero()
                for wy, vx in zip(y.form, x.vec):
                    want = want + wy * vx
                if bval(y.vec, x.vec) != want:
                    raise GapInconsistencyError(
                        "2-form recipe failed its defining identity")
        for fam in (self.frame, self.complement):
            for x in fam:
                for y in fam:
                    if not bval(x.vec, y.vec).is_zero():
                        raise GapInconsistencyError(
                            "2-form recipe is nonzero on a pure pair")
        lhs = [list(b_transform(s, b_form).coords()) for s in self.frame]
        ann_p, _ = _annihilator(self.complement, n)
        rhs = [[SFrac.of(c) for c in s.vec] + [SFrac.zero()] * n
               for s in self.frame] + \
              [[SFrac.zero()] * n + list(w) for w in ann_p]
        if not _same_span(lhs, rhs, 2 * n, 2 * self.k):
            raise GapInconsistencyError(
                "transformed split does not match vectors plus annihilator")
        lhs_p = [list(b_transform(s, b_form).coords())
                 for s in self.complement]
        ann_e, _ = _annihilator(self.frame, n)
        rhs_p = [[SFrac.of(c) for c in s.vec] + [SFrac.zero()] * n
                 for s in self.complement] + \
                [[SFrac.zero()] * n + list(w) for w in ann_e]
        if not _same_span(lhs_p, rhs_p, 2 * n, 2 * (n - self.k)):
            raise GapInconsistencyError(
                "transformed complement does not match vectors plus "
                "annihilator")

    def _build_bigrading(self):
        n = self.geom.dim
        lie = self.geom.lie
        assumptions: set = set()
        ke = len(self.w_e)
        A = [[SFrac.of(x) for x in w] for w in self.w_e] + \
            [[SFrac.of(x) for x in w] for w in self.w_perp]
        Ainv, asmp = sfrac_inverse(A)
        assumptions |= asmp
        subs = basis_subsets(n)
        # adapted monomial -> expansion over the coframe basis
        back = {}
        for J in subs:
            acc = FormExpr.one(lie)
            for r in J:
                acc = acc.wedge(FormExpr(
                    lie, {(j + 1,): A[r - 1][j] for j in range(n)}))
            back[J] = acc
        # coframe monomial -> expansion over adapted monomials
        fwd = {}
        for I in subs:
            acc = _AdaptedForm.one()
            for j in I:
                acc = acc.wedge(_AdaptedForm(
                    {(r + 1,): Ainv[j - 1][r] for r in range(n)}))
            fwd[I] = acc.t
        proj = {}
        for a in range(ke + 1):
            for b in range(n - ke + 1):
                imgs = {}
                for I in subs:
                    out = FormExpr.zero(lie)
                    for J, c in fwd[I].items():
                        if _bidegree(J, ke) == (a, b):
                            out = out + back[J].scale(c)
                    imgs[I] = out
                # nonzero output only on inputs of total degree a+b, so the
                # projector preserves degree: parity 0
                proj[(a, b)] = OpMatrix.from_action(
                    lie, imgs, parity=0,
                    name=f"{self.name}-proj({a},{b})",
                    assumptions=sorted(assumptions))
        return proj, assumptions

    def _verify_split_d(self) -> None:
        g = self.geom
        full = op_sum(*(self.d_components[o] for o in _OFFSETS))
        r = op_equal(full, op_d(), g)
        if r.verdict != "holds":
            raise GapInconsistencyError(
                "bidegree components of d do not resum to d")
        u = Scalar.sym(func_key("u"))
        n = g.dim
        col = [SFrac.zero()] * n + [
            SFrac(frame_derive(u, i, g.lie)) for i in range(1, n + 1)]
        pru = _apply_matrix([list(rw) for rw in self.pr_matrix], col)
        want = FormExpr(g.lie, {(i,): pru[n + i - 1]
                                for i in range(1, n + 1)})
        got = self.d_e.ev(FormExpr(g.lie, {(): SFrac(u)}))
        if not (got - want).is_zero():
            raise GapInconsistencyError(
                "split differential disagrees with the projected "
                "differential on functions")

    # -- public views ------------------------------------------------------

    def is_almost_product(self) -> bool:
        return self.gap.verdict == "holds"

    def require_almost_product(self) -> None:
        if not self.is_almost_product():
            raise ValueError(
                f"split is not almost product (verdict {self.gap.verdict})")

    def bigrade(self, omega: FormExpr) -> dict:
        self.require_almost_product()
        out = {}
        total = FormExpr.zero(omega.lie)
        for key, P in self.proj.items():
            comp = P.ev(omega)
            if not comp.is_zero():
                out[key] = comp
                total = total + comp
        if not (total - omega).is_zero():
            raise GapInconsistencyError("bigrade components do not resum")
        return out

    def __eq__(self, other):
        if not isinstance(other, SplitStructure):
            return NotImplemented
        return self.geom == other.geom and \
            [tuple(s.coords()) for s in self.frame] == \
            [tuple(s.coords()) for s in other.frame]

    def __hash__(self):
        return hash(tuple(tuple(s.coords()) for s in self.frame))

    def __repr__(self):
        return (f"<SplitStructure {self.name} rank {2 * self.k} "
                f"{self.gap.verdict}>")


# ---------------------------------------------------------------------------
# public operations


def split_validate(geom: Geometry, sections, eval_point=None,
                   name: str = "E") -> SplitStructure:
    return SplitStructure(geom, sections, eval_point=eval_point, name=name)


def split_from_geometry(geom: Geometry, split_name: str,
                        eval_point=None) -> SplitStructure:
    return split_validate(geom, geom.split_sections(split_name),
                          eval_point=eval_point, name=split_name)


def gap_classify(E: SplitStructure) -> GapReport:
    return E.gap


def bigrade(omega: FormExpr, E: SplitStructure) -> dict:
    return E.bigrade(omega)


def split_d(E: SplitStructure) -> dict:
    E.require_almost_product()
    out = {f"d^({r},{s})": E.d_components[(r, s)] for (r, s) in _OFFSETS}
    out["d_E"] = E.d_e
    out["d_Eperp"] = E.d_eperp
    return out


def foliation_status(E: SplitStructure) -> FoliationReport:
    E.require_almost_product()
    if E._foliation is not None:
        return E._foliation
    g = E.geom
    z = op_zero()
    r_e = op_equal(E.d_components[(2, -1)], z, g)
    r_p = op_equal(E.d_components[(-1, 2)], z, g)
    r_lp = op_equal(op_compose(E.d_e, E.d_e), z, g)
    details = [("pi_e_foliation_ideal", r_e.ideal.serialized()),
               ("pi_eperp_foliation_ideal", r_p.ideal.serialized()),
               ("local_product_ideal", r_lp.ideal.serialized())]

    # cross-check: complement projections of frame brackets must be
    # one-forms exactly when the projected distribution is a foliation
    gens = []
    for i, x in enumerate(E.frame):
        for y in E.frame[i:]:
            br = section_of_operator(dorfman(x, y), g, verify=False)
            prp = _apply_matrix([list(rw) for rw in E.prp_matrix],
                                list(br.coords()))
            for c in prp[:g.dim]:
                if not c.num.is_zero():
                    gens.append(c.num)
    cross = ConstraintIdeal(gens)
    cv = cross.verdict()
    details.append(("frame_bracket_crosscheck_ideal", cross.serialized()))
    ve = r_e.verdict
    if {ve, cv} <= {"holds", "fails"} and ve != cv:
        raise GapInconsistencyError(
            "bracket-based and differential-based foliation tests disagree: "
            f"{cv} vs {ve}")
    report = FoliationReport(ve, r_p.verdict, r_lp.verdict, ve,
                             tuple(details))
    E._foliation = report
    return report


def basic_forms(E: SplitStructure) -> BasicComplex:
    status = foliation_status(E)
    if status.pi_eperp_foliation != "holds":
        raise ValueError(
            "transverse foliation verdict is "
            f"{status.pi_eperp_foliation}; basic complex undefined")
    g = E.geom
    lie = g.lie
    n = g.dim
    subs = basis_subsets(n)
    nvars = len(subs)

    # linear conditions on a constant-coefficient form: it has no component
    # of positive transverse degree and its transverse differential vanishes
    ops = [E.d_eperp] + [P for (a, b), P in sorted(E.proj.items()) if b > 0]
    srows = []  # rows of SFrac entries, one per (operator, output monomial)
    for op in ops:
        images = [op.ev(FormExpr.monomial(lie, I)) for I in subs]
        outs = sorted({J for img in images for J in img.t},
                      key=lambda J: (len(J), J))
        for J in outs:
            srows.append([img.coeff(J) for img in images])
    # clear denominators per row, then expand symbol monomials into
    # constant rows
    mat = []
    for row in srows:
        den = Scalar.one()
        for e in row:
            den = den * e.den
        cleared = []
        for e in row:
            q = den.exact_div(e.den)
            if q is None:
                raise ArithmeticError("denominator failed to clear")
            cleared.append(e.num * q)
        monos = sorted({m for s in cleared for m in s.t},
                       key=lambda m: tuple(k.order_key() for k in m))
        for m in monos:
            mat.append([Scalar.const(s.t.get(m, GRat.zero()))
                        for s in cleared])
    rank, kern, assumptions, _ = bareiss_rank_kernel(mat, ncols=nvars)
    basis = [FormExpr(lie, {subs[t]: SFrac(v) for t, v in enumerate(vec)})
             for vec in kern]
    basis.sort(key=lambda f: sorted((len(I), I) for I in f.t))

    coords = [[f.coeff(I) for I in subs] for f in basis]
    de_cols = []
    for f in basis:
        img = E.d_e.ev(f)
        vec = [img.coeff(I) for I in subs]
        coeffs, residuals, asmp = membership_constraints([vec], coords)
        assumptions |= asmp
        if residuals:
            raise GapInconsistencyError(
                "restricted differential leaves the invariant basic span")
        de_cols.append([SFrac.of(c) for c in coeffs[0]])
    dim = len(basis)
    de = tuple(tuple(de_cols[j][i] for j in range(dim)) for i in range(dim))
    for i in range(dim):
        for j in range(dim):
            acc = SFrac.zero()
            for t in range(dim):
                acc = acc + de[i][t] * de[t][j]
            if not acc.is_zero():
                raise GapInconsistencyError(
                    "restricted differential does not square to zero")
    return BasicComplex(tuple(basis), de, tuple(sorted(assumptions)))
