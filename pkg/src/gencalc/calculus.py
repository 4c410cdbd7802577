"""Operator calculus on invariant forms.

Forms are finite sums of coframe wedge monomials with scalar-fraction
coefficients.  Operators are immutable expression DAGs over a small atom
set (wedge multiplication, contraction, the de Rham d, the degree counter,
generalized-tangent-bundle sections, and explicit matrices on the wedge
basis), combined by scaling, sums, and composition.  Everything is graded
by parity only; commutators use the Koszul sign of the declared parities.

Operator equality is decided by generic probing: two operators agree iff
their difference annihilates every wedge monomial and every monomial
multiplied by a fresh function symbol.  The outcome is a constraint ideal
(conditions on declared parameters/functions) plus genericity assumptions
collected from denominators and from matrix constructions.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

from .geometry import GTBSection, Geometry
from .scalars import (
    ConstraintIdeal,
    GRat,
    LieStructure,
    SFrac,
    Scalar,
    func_key,
    normalized_assumption,
    sfrac_derive,
)

# ---------------------------------------------------------------------------
# wedge-basis bookkeeping


def subset_of_mask(mask: int) -> tuple:
    return tuple(k + 1 for k in range(mask.bit_length()) if mask >> k & 1)


def mask_of_subset(I: Iterable[int]) -> int:
    m = 0
    for i in I:
        m |= 1 << (i - 1)
    return m


def basis_subsets(n: int) -> list:
    """All coframe subsets in binary-counter order (the probe and matrix
    basis order used throughout)."""
    return [subset_of_mask(m) for m in range(1 << n)]


def _wrap(s: str) -> str:
    """Parenthesize unless the string is already a single paren group."""
    if s.startswith("(") and s.endswith(")"):
        depth = 0
        for k, ch in enumerate(s):
            depth += (ch == "(") - (ch == ")")
            if depth == 0 and k < len(s) - 1:
                break
        else:
            return s
    return f"({s})"


def _merge_sign(I: tuple, J: tuple):
    """Sign of sorting the concatenation of two strictly increasing tuples;
    None if they intersect."""
    out = []
    sign = 1
    a = b = 0
    while a < len(I) and b < len(J):
        if I[a] == J[b]:
            return None, ()
        if I[a] < J[b]:
            out.append(I[a])
            a += 1
        else:
            if (len(I) - a) % 2:
                sign = -sign
            out.append(J[b])
            b += 1
    out.extend(I[a:])
    out.extend(J[b:])
    return sign, tuple(out)


# ---------------------------------------------------------------------------
# forms


class FormExpr:
    """A complex invariant form: map from coframe subsets to SFrac."""

    __slots__ = ("lie", "t")

    def __init__(self, lie: LieStructure, terms: dict | None = None):
        self.lie = lie
        self.t = {}
        if terms:
            for I, c in terms.items():
                c = SFrac.of(c)
                if not c.is_zero():
                    self.t[tuple(I)] = c

    @staticmethod
    def zero(lie: LieStructure) -> "FormExpr":
        return FormExpr(lie)

    @staticmethod
    def one(lie: LieStructure) -> "FormExpr":
        return FormExpr(lie, {(): SFrac.one()})

    @staticmethod
    def monomial(lie: LieStructure, I, coeff=1) -> "FormExpr":
        I = tuple(I)
        if any(not (1 <= i <= lie.dim) for i in I) or \
                any(I[a] >= I[a + 1] for a in range(len(I) - 1)):
            raise ValueError(f"bad coframe subset {I}")
        return FormExpr(lie, {I: SFrac.of(coeff)})

    def is_zero(self) -> bool:
        return not self.t

    def degrees(self) -> set:
        return {len(I) for I in self.t}

    def parity(self):
        """0, 1, or None when mixed."""
        ps = {len(I) & 1 for I in self.t}
        if not ps:
            return 0
        if len(ps) > 1:
            return None
        return ps.pop()

    def coeff(self, I) -> SFrac:
        return self.t.get(tuple(I), SFrac.zero())

    def __add__(self, other: "FormExpr") -> "FormExpr":
        t = dict(self.t)
        for I, c in other.t.items():
            s = t.get(I)
            s = c if s is None else s + c
            if s.is_zero():
                t.pop(I, None)
            else:
                t[I] = s
        r = FormExpr(self.lie)
        r.t = t
        return r

    def __sub__(self, other: "FormExpr") -> "FormExpr":
        return self + (-other)

    def __neg__(self) -> "FormExpr":
        r = FormExpr(self.lie)
        r.t = {I: -c for I, c in self.t.items()}
        return r

    def scale(self, c) -> "FormExpr":
        c = SFrac.of(c)
        if c.is_zero():
            return FormExpr(self.lie)
        r = FormExpr(self.lie)
        r.t = {I: c * v for I, v in self.t.items()}
        return r

    def wedge(self, other: "FormExpr") -> "FormExpr":
        out = FormExpr(self.lie)
        acc: dict = {}
        for I, a in self.t.items():
            for J, b in other.t.items():
                sign, K = _merge_sign(I, J)
                if sign is None:
                    continue
                c = a * b
                if sign < 0:
                    c = -c
                s = acc.get(K)
                s = c if s is None else s + c
                acc[K] = s
        out.t = {K: c for K, c in acc.items() if not c.is_zero()}
        return out

    def contract(self, i: int) -> "FormExpr":
        out = FormExpr(self.lie)
        for I, c in self.t.items():
            if i not in I:
                continue
            p = I.index(i)
            J = I[:p] + I[p + 1:]
            v = c if p % 2 == 0 else -c
            s = out.t.get(J)
            s = v if s is None else s + v
            if s.is_zero():
                out.t.pop(J, None)
            else:
                out.t[J] = s
        return out

    def conj(self) -> "FormExpr":
        r = FormExpr(self.lie)
        r.t = {I: c.conj() for I, c in self.t.items()}
        return r

    def d(self) -> "FormExpr":
        lie = self.lie
        out = FormExpr(lie)
        for I, c in self.t.items():
            for i in range(1, lie.dim + 1):
                dc = sfrac_derive(c, i, lie)
                if not dc.is_zero():
                    out = out + FormExpr.monomial(lie, (i,)).scale(dc).wedge(
                        FormExpr(lie, {I: SFrac.one()}))
            for p, ip in enumerate(I):
                dmono = FormExpr(lie)
                for a in range(1, lie.dim + 1):
                    for b in range(a + 1, lie.dim + 1):
                        co = lie.dalpha_coeff(ip, a, b)
                        if not co.is_zero():
                            dmono = dmono + FormExpr.monomial(lie, (a, b), SFrac.const(co))
                if dmono.is_zero():
                    continue
                pre = FormExpr(lie, {I[:p]: c if p % 2 == 0 else -c})
                post = FormExpr(lie, {I[p + 1:]: SFrac.one()})
                out = out + pre.wedge(dmono).wedge(post)
        return out

    def apply_deg(self) -> "FormExpr":
        r = FormExpr(self.lie)
        r.t = {I: c * SFrac.const(len(I)) for I, c in self.t.items() if I}
        return r

    def specialize(self, values: dict) -> "FormExpr":
        r = FormExpr(self.lie)
        for I, c in self.t.items():
            v = c.specialize(values)
            if not v.is_zero():
                r.t[I] = v
        return r

    def coords(self, n: int | None = None) -> list:
        """Coefficients over all 2^n subsets in binary-counter order."""
        n = self.lie.dim if n is None else n
        return [self.t.get(I, SFrac.zero()) for I in basis_subsets(n)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormExpr):
            return NotImplemented
        keys = set(self.t) | set(other.t)
        return all(self.coeff(I) == other.coeff(I) for I in keys)

    def __hash__(self):
        return hash(frozenset((I, c.serialize()) for I, c in self.t.items()))

    def serialize(self, coframe: tuple | None = None) -> str:
        if not self.t:
            return "0"
        names = coframe or tuple(f"a{k}" for k in range(1, self.lie.dim + 1))
        parts = []
        for I in sorted(self.t, key=lambda I: (len(I), I)):
            c = self.t[I]
            mono = "^".join(names[i - 1] for i in I)
            if not mono:
                parts.append("+" + _wrap(c.serialize()))
            elif c == SFrac.one():
                parts.append("+" + mono)
            elif c == -SFrac.one():
                parts.append("-" + mono)
            else:
                parts.append(f"+({c.serialize()})*{mono}")
        body = "".join(parts)
        return body[1:] if body.startswith("+") else body

    def __repr__(self):
        return f"<FormExpr {self.serialize()}>"


def section_apply(sec: GTBSection, rho: FormExpr) -> FormExpr:
    out = FormExpr(rho.lie)
    for k, c in enumerate(sec.vec, start=1):
        if not c.is_zero():
            out = out + rho.contract(k).scale(c)
    onef = FormExpr(rho.lie, {(k,): c for k, c in enumerate(sec.form, start=1)})
    return out + onef.wedge(rho)


# ---------------------------------------------------------------------------
# operators


class OperatorExpr:
    """Base class; immutable.  ``parity`` is 0 or 1."""

    __slots__ = ()
    parity = 0

    def ev(self, rho: FormExpr) -> FormExpr:
        raise NotImplementedError

    def conj(self) -> "OperatorExpr":
        raise NotImplementedError

    def collect_assumptions(self, acc: set) -> None:
        pass

    def serialize(self) -> str:
        raise NotImplementedError

    # arithmetic sugar
    def __add__(self, other):
        return op_sum(self, other)

    def __sub__(self, other):
        return op_sum(self, op_scale(-1, other))

    def __neg__(self):
        return op_scale(-1, self)

    def __mul__(self, other):
        if isinstance(other, OperatorExpr):
            return op_compose(self, other)
        return op_scale(other, self)

    __rmul__ = lambda self, other: op_scale(other, self)

    def __repr__(self):
        return f"<Op {self.serialize()}>"


class OpD(OperatorExpr):
    __slots__ = ()
    parity = 1

    def ev(self, rho):
        return rho.d()

    def conj(self):
        return self

    def serialize(self):
        return "d"


class OpDeg(OperatorExpr):
    __slots__ = ()
    parity = 0

    def ev(self, rho):
        return rho.apply_deg()

    def conj(self):
        return self

    def serialize(self):
        return "deg"


class OpContract(OperatorExpr):
    __slots__ = ("i",)
    parity = 1

    def __init__(self, i: int):
        self.i = i

    def ev(self, rho):
        return rho.contract(self.i)

    def conj(self):
        return self

    def serialize(self):
        return f"(contract {self.i})"


class OpMul(OperatorExpr):
    __slots__ = ("form", "parity")

    def __init__(self, form: FormExpr):
        p = form.parity()
        if p is None:
            raise ValueError("multiplication operator needs a parity-homogeneous form")
        self.form = form
        self.parity = p

    def ev(self, rho):
        return self.form.wedge(rho)

    def conj(self):
        return OpMul(self.form.conj())

    def serialize(self):
        return f"(mul {self.form.serialize()})"


class OpSection(OperatorExpr):
    __slots__ = ("sec",)
    parity = 1

    def __init__(self, sec: GTBSection):
        self.sec = sec

    def ev(self, rho):
        return section_apply(self.sec, rho)

    def conj(self):
        return OpSection(self.sec.conj())

    def serialize(self):
        names = tuple(f"a{k + 1}" for k in range(self.sec.dim))
        return f"(section {self.sec.serialize(names)})"


class OpMatrix(OperatorExpr):
    """A function-linear operator given by its matrix on the wedge basis in
    binary-counter order: columns index the input subset, rows the output."""

    __slots__ = ("lie", "mat", "parity", "name", "assumptions")

    def __init__(self, lie: LieStructure, mat, parity: int, name: str = "",
                 assumptions: Iterable[str] = ()):
        self.lie = lie
        self.mat = tuple(tuple(SFrac.of(v) for v in row) for row in mat)
        size = 1 << lie.dim
        if len(self.mat) != size or any(len(r) != size for r in self.mat):
            raise ValueError("matrix size must be 2^dim")
        self.parity = parity & 1
        self.name = name
        self.assumptions = frozenset(assumptions)

    @staticmethod
    def from_action(lie: LieStructure, images: dict, parity: int,
                    name: str = "", assumptions=()) -> "OpMatrix":
        """Build from {input subset: FormExpr image}."""
        subs = basis_subsets(lie.dim)
        idx = {I: k for k, I in enumerate(subs)}
        size = len(subs)
        mat = [[SFrac.zero()] * size for _ in range(size)]
        for I, img in images.items():
            c = idx[tuple(I)]
            for J, v in img.t.items():
                mat[idx[J]][c] = v
        return OpMatrix(lie, mat, parity, name, assumptions)

    def ev(self, rho):
        if rho.lie.dim != self.lie.dim:
            raise ValueError("matrix operator applied on a different geometry")
        subs = basis_subsets(self.lie.dim)
        idx = {I: k for k, I in enumerate(subs)}
        out = FormExpr(rho.lie)
        acc: dict = {}
        for I, c in rho.t.items():
            col = idx[I]
            for r, J in enumerate(subs):
                m = self.mat[r][col]
                if m.is_zero():
                    continue
                s = acc.get(J)
                v = m * c
                s = v if s is None else s + v
                acc[J] = s
        out.t = {J: v for J, v in acc.items() if not v.is_zero()}
        return out

    def conj(self):
        return OpMatrix(self.lie, [[v.conj() for v in row] for row in self.mat],
                        self.parity, self.name + "~", self.assumptions)

    def collect_assumptions(self, acc: set):
        acc.update(self.assumptions)

    def serialize(self):
        return f"(matrixop {self.name or 'anonymous'})"


class OpScale(OperatorExpr):
    __slots__ = ("c", "op", "parity")

    def __init__(self, c: GRat, op: OperatorExpr):
        self.c = GRat.of(c)
        self.op = op
        self.parity = op.parity

    def ev(self, rho):
        if self.c.is_zero():
            return FormExpr(rho.lie)
        return self.op.ev(rho).scale(self.c)

    def conj(self):
        return OpScale(self.c.conj(), self.op.conj())

    def collect_assumptions(self, acc):
        self.op.collect_assumptions(acc)

    def serialize(self):
        return f"(scale {self.c} {self.op.serialize()})"


class OpSum(OperatorExpr):
    __slots__ = ("ops", "parity")

    def __init__(self, ops):
        self.ops = tuple(ops)
        ps = {p for op in self.ops if (p := _parity_or_none(op)) is not None}
        if len(ps) > 1:
            raise ValueError("sum of operators with mixed parity")
        self.parity = ps.pop() if ps else 0

    def ev(self, rho):
        out = FormExpr(rho.lie)
        for op in self.ops:
            out = out + op.ev(rho)
        return out

    def conj(self):
        return OpSum([op.conj() for op in self.ops])

    def collect_assumptions(self, acc):
        for op in self.ops:
            op.collect_assumptions(acc)

    def serialize(self):
        if not self.ops:
            return "(zero)"
        return "(sum " + " ".join(op.serialize() for op in self.ops) + ")"


class OpCompose(OperatorExpr):
    """Composition; the rightmost factor acts first."""

    __slots__ = ("ops", "parity")

    def __init__(self, ops):
        self.ops = tuple(ops)
        self.parity = sum(op.parity for op in self.ops) & 1

    def ev(self, rho):
        for op in reversed(self.ops):
            rho = op.ev(rho)
        return rho

    def conj(self):
        return OpCompose([op.conj() for op in self.ops])

    def collect_assumptions(self, acc):
        for op in self.ops:
            op.collect_assumptions(acc)

    def serialize(self):
        if not self.ops:
            return "(id)"
        return "(compose " + " ".join(op.serialize() for op in self.ops) + ")"


def _parity_or_none(op: OperatorExpr):
    """Parity, or None for structurally zero operators (empty sums, zero
    scales, zero multiplications), which add into either parity class."""
    if isinstance(op, OpSum):
        ps = {p for o in op.ops if (p := _parity_or_none(o)) is not None}
        return ps.pop() if len(ps) == 1 else (None if not ps else op.parity)
    if isinstance(op, OpScale):
        if op.c.is_zero():
            return None
        return _parity_or_none(op.op)
    if isinstance(op, OpMul) and op.form.is_zero():
        return None
    return op.parity


# constructors ---------------------------------------------------------------


def op_zero() -> OperatorExpr:
    return OpSum(())


def op_identity() -> OperatorExpr:
    return OpCompose(())


def op_scale(c, op) -> OperatorExpr:
    return OpScale(GRat.of(c), op)


def op_sum(*ops) -> OperatorExpr:
    flat = []
    for op in ops:
        if isinstance(op, OpSum):
            flat.extend(op.ops)
        else:
            flat.append(op)
    return OpSum(flat)


def op_compose(*ops) -> OperatorExpr:
    flat = []
    for op in ops:
        if isinstance(op, OpCompose):
            flat.extend(op.ops)
        else:
            flat.append(op)
    return OpCompose(flat)


def op_d() -> OperatorExpr:
    return OpD()


def op_deg() -> OperatorExpr:
    return OpDeg()


def op_contract(i: int) -> OperatorExpr:
    return OpContract(i)


def op_mul(form: FormExpr) -> OperatorExpr:
    return OpMul(form)


def op_section(sec: GTBSection) -> OperatorExpr:
    return OpSection(sec)


def op_lie(i: int) -> OperatorExpr:
    """The frame Lie derivative via the Cartan formula."""
    return commutator(op_contract(i), op_d())


# ---------------------------------------------------------------------------
# brackets


def commutator(phi: OperatorExpr, psi: OperatorExpr) -> OperatorExpr:
    """Graded commutator with the Koszul sign of the declared parities."""
    sign = -1 if (phi.parity and psi.parity) else 1
    return op_sum(op_compose(phi, psi), op_scale(-sign, op_compose(psi, phi)))


def ad(phi: OperatorExpr):
    return lambda psi: commutator(phi, psi)


def derived_bracket(phi: OperatorExpr, psi: OperatorExpr,
                    delta: OperatorExpr) -> OperatorExpr:
    """[[phi, delta], psi]."""
    return commutator(commutator(phi, delta), psi)


def dorfman(x: GTBSection, y: GTBSection) -> OperatorExpr:
    return derived_bracket(op_section(x), op_section(y), op_d())


def lie_derivative(phi: OperatorExpr, delta: OperatorExpr):
    """The generalized Lie derivative ad_{[phi, delta]} as a function."""
    inner = commutator(phi, delta)
    return lambda psi: commutator(inner, psi)


def leibnizator(delta: OperatorExpr, phi: OperatorExpr,
                psi: OperatorExpr) -> OperatorExpr:
    """The obstruction [L_phi, L_psi] - L_{[[phi,delta],psi]} with
    L_x = [x, delta].  It vanishes when delta squares to zero; in general
    it equals -(-1)^{parity(psi)} [[phi, delta^2], psi] (see the tests)."""
    lp = commutator(phi, delta)
    lq = commutator(psi, delta)
    lb = commutator(derived_bracket(phi, psi, delta), delta)
    return op_sum(commutator(lp, lq), op_scale(-1, lb))


def leibnizator_defect(delta: OperatorExpr, phi: OperatorExpr,
                       psi: OperatorExpr) -> OperatorExpr:
    """The closed form of the Leibnizator: -(-1)^{parity(psi)} times the
    derived bracket of (phi, psi) along the square of delta."""
    sign = 1 if psi.parity else -1
    dsq = op_compose(delta, delta)
    return op_scale(sign, commutator(commutator(phi, dsq), psi))


def adjoint_exp(phi: OperatorExpr, psi: OperatorExpr, geom: Geometry,
                bound: int | None = None) -> OperatorExpr:
    """Ad_{e^phi}(psi) = sum ad_phi^n(psi)/n! for nilpotent-acting phi.

    Terms are accumulated until one vanishes identically on the probe
    family; raises if no term vanishes within the bound.
    """
    if phi.parity != 0:
        raise ValueError("adjoint exponential needs an even operator")
    if bound is None:
        bound = 2 * geom.dim + 2
    terms = [psi]
    cur = psi
    fact = 1
    for nstep in range(1, bound + 1):
        cur = commutator(phi, cur)
        if _is_zero_op(cur, geom):
            return op_sum(*terms)
        fact *= nstep
        terms.append(op_scale(GRat(1) / GRat(fact), cur))
    raise ValueError("operator is not nilpotent within the probe bound")


# ---------------------------------------------------------------------------
# probe-based equality


PROBE_SYMBOLS = ("u", "v")


class EqResult(NamedTuple):
    verdict: str
    ideal: ConstraintIdeal
    assumptions: tuple

    def holds(self) -> bool:
        return self.verdict == "holds"


def probe_family(geom: Geometry, probes: str = "u") -> list:
    """Probe forms in deterministic order: wedge monomials in binary-counter
    order, then the same multiplied by fresh function symbols."""
    lie = geom.lie
    base = [FormExpr.monomial(lie, I) for I in basis_subsets(geom.dim)]
    fams = [base]
    if probes == "u":
        u = SFrac(Scalar.sym(func_key("u")))
        fams.append([b.scale(u) for b in base])
    elif probes == "uv":
        u = SFrac(Scalar.sym(func_key("u")))
        v = SFrac(Scalar.sym(func_key("v")))
        fams.append([b.scale(u) for b in base])
        fams.append([b.scale(v) for b in base])
        fams.append([b.scale(u * v) for b in base])
    else:
        raise ValueError(f"unknown probe family {probes!r}")
    return [p for fam in fams for p in fam]


def _constraints_of_form(rho: FormExpr, gens: list, assumptions: set) -> None:
    for _, c in sorted(rho.t.items(), key=lambda kv: (len(kv[0]), kv[0])):
        parts = c.num.partition(PROBE_SYMBOLS)
        if any(k.name in PROBE_SYMBOLS for k in c.den.symbols()):
            raise ArithmeticError("probe symbol leaked into a denominator")
        for _, part in sorted(parts.items(),
                              key=lambda kv: tuple(k.order_key() for k in kv[0])):
            gens.append(part)
        a = normalized_assumption(c.den)
        if a is not None:
            assumptions.add(a)


def op_equal(phi: OperatorExpr, psi: OperatorExpr, geom: Geometry,
             probes: str = "u") -> EqResult:
    """Decide phi = psi on the probe family; returns verdict + conditions."""
    diff = op_sum(phi, op_scale(-1, psi))
    gens: list = []
    assumptions: set = set()
    diff.collect_assumptions(assumptions)
    for probe in probe_family(geom, probes):
        _constraints_of_form(diff.ev(probe), gens, assumptions)
    ideal = ConstraintIdeal(gens)
    return EqResult(ideal.verdict(), ideal, tuple(sorted(assumptions)))


def _is_zero_op(phi: OperatorExpr, geom: Geometry) -> bool:
    return op_equal(phi, op_zero(), geom).verdict == "holds"


def section_of_operator(phi: OperatorExpr, geom: Geometry,
                        verify: bool = True) -> GTBSection:
    """Recover the section a degree-one operator acts as: the form part is
    the image of 1, the vector components are the scalar parts of the images
    of the coframe elements.  With ``verify`` the candidate is checked
    against the operator on the full probe family."""
    lie = geom.lie
    w_img = phi.ev(FormExpr.one(lie))
    form = [w_img.coeff((k,)) for k in range(1, geom.dim + 1)]
    vec = []
    for k in range(1, geom.dim + 1):
        img = phi.ev(FormExpr.monomial(lie, (k,)))
        vec.append(img.coeff(()))
    sec = GTBSection(vec, form)
    if verify:
        r = op_equal(phi, op_section(sec), geom)
        if r.verdict != "holds":
            raise ValueError("operator does not act as a section")
    return sec


def op_parity_check(phi: OperatorExpr, geom: Geometry) -> bool:
    """Empirically confirm the declared parity on the wedge-monomial probes."""
    for I in basis_subsets(geom.dim):
        img = phi.ev(FormExpr.monomial(geom.lie, I))
        for J in img.t:
            if (len(J) - len(I) - phi.parity) % 2:
                return False
    return True
