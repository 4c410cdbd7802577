"""Exact scalar arithmetic: Gaussian rationals, function-symbol jets, constraint ideals.

The scalar ring is polynomials over Q(i) in two kinds of symbols:

* parameters -- constants of the presentation; they have no derivatives;
* function symbols -- opaque smooth functions; applying a frame derivative
  produces a jet symbol carrying a string of frame indices.

A jet string ``f;i1,...,im`` denotes the i1-th frame derivative applied
*outermost* (leftmost index is the last derivative taken).  Strings are kept
in nondecreasing-index normal form; an adjacent descent ``...j,i...`` with
``j > i`` is rewritten through the frame commutation rule

    f;...,j,i,...  =  f;...,i,j,...  -  sum_k c[k,i,j] * f;...,k,...

where ``c[k,i,j]`` are the frame bracket coefficients.  Complex symbols have
an independent conjugate partner (printed with a ``~`` prefix); conjugation
commutes with frame derivatives because the frame is real.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple

# ---------------------------------------------------------------------------
# Gaussian rationals


class GRat:
    """A Gaussian rational a + b*i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def zero() -> "GRat":
        return GRat(0, 0)

    @staticmethod
    def one() -> "GRat":
        return GRat(1, 0)

    @staticmethod
    def i() -> "GRat":
        return GRat(0, 1)

    @staticmethod
    def of(x) -> "GRat":
        if isinstance(x, GRat):
            return x
        return GRat(Fraction(x), 0)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_one(self) -> bool:
        return self.re == 1 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def conj(self) -> "GRat":
        return GRat(self.re, -self.im)

    def __add__(self, other) -> "GRat":
        o = GRat.of(other)
        return GRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other) -> "GRat":
        o = GRat.of(other)
        return GRat(self.re - o.re, self.im - o.im)

    def __rsub__(self, other) -> "GRat":
        return GRat.of(other) - self

    def __neg__(self) -> "GRat":
        return GRat(-self.re, -self.im)

    def __mul__(self, other) -> "GRat":
        o = GRat.of(other)
        return GRat(self.re * o.re - self.im * o.im,
                    self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inv(self) -> "GRat":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of zero Gaussian rational")
        return GRat(self.re / n, -self.im / n)

    def __truediv__(self, other) -> "GRat":
        return self * GRat.of(other).inv()

    def __rtruediv__(self, other) -> "GRat":
        return GRat.of(other) * self.inv()

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = GRat.of(other)
        if not isinstance(other, GRat):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GRat({self.re!r}, {self.im!r})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            if self.im == 1:
                return "i"
            if self.im == -1:
                return "-i"
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        ipart = "i" if mag == 1 else f"{mag}*i"
        return f"{self.re}{sign}{ipart}"


# ---------------------------------------------------------------------------
# Symbols


class SymKey(NamedTuple):
    """One symbol factor: a parameter, function symbol, or jet thereof.

    ``bar`` marks the conjugate partner of a complex symbol (``cx`` true);
    real symbols are self-conjugate and always have ``bar == False``.
    Parameters never carry jets.
    """

    name: str
    bar: bool
    jets: tuple
    cx: bool
    is_param: bool

    def conj_key(self) -> "SymKey":
        if not self.cx:
            return self
        return self._replace(bar=not self.bar)

    def order_key(self):
        return (self.name, self.bar, self.jets)

    def __str__(self):
        s = ("~" if self.bar else "") + self.name
        if self.jets:
            s += ";" + ",".join(str(j) for j in self.jets)
        return s


def param_key(name: str, cx: bool = False, bar: bool = False) -> SymKey:
    return SymKey(name, bar and cx, (), cx, True)


def func_key(name: str, cx: bool = False, bar: bool = False,
             jets: tuple = ()) -> SymKey:
    return SymKey(name, bar and cx, tuple(jets), cx, False)


# ---------------------------------------------------------------------------
# Frame structure and jet normal ordering


class LieStructure:
    """Constant structure data of a global frame.

    ``dcoeff[(k, i, j)]`` for ``i < j`` gives the coefficient of the (i, j)
    coframe wedge monomial in the differential of the k-th coframe field.
    The frame bracket coefficients are the negatives: with this pairing of
    conventions the de Rham differential on jets squares to zero.  Indices
    are 1-based.
    """

    __slots__ = ("dim", "_dc", "_memo")

    def __init__(self, dim: int, dcoeff: dict | None = None):
        if dim < 1:
            raise ValueError("frame dimension must be positive")
        self.dim = dim
        self._dc = {}
        for (k, i, j), v in (dcoeff or {}).items():
            v = GRat.of(v)
            if not (1 <= k <= dim and 1 <= i <= dim and 1 <= j <= dim):
                raise ValueError(f"structure index out of range: {(k, i, j)}")
            if i >= j:
                raise ValueError("structure coefficients use i < j")
            if not v.is_zero():
                self._dc[(k, i, j)] = v
        self._memo = {}

    def dalpha_coeff(self, k: int, i: int, j: int) -> GRat:
        """Coefficient of the (i, j) wedge monomial in d(alpha_k), any i, j."""
        if i == j:
            return GRat.zero()
        if i < j:
            return self._dc.get((k, i, j), GRat.zero())
        return -self._dc.get((k, j, i), GRat.zero())

    def bracket_coeff(self, k: int, i: int, j: int) -> GRat:
        """Coefficient of the k-th frame field in the bracket of fields i, j."""
        return -self.dalpha_coeff(k, i, j)

    def is_abelian(self) -> bool:
        return not self._dc

    def jacobi_violations(self) -> list:
        """Nonzero Jacobi combinations (l, i, j, k) -> GRat; empty iff valid."""
        bad = []
        n = self.dim
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                for k in range(j + 1, n + 1):
                    for l in range(1, n + 1):
                        tot = GRat.zero()
                        for m in range(1, n + 1):
                            tot = (tot
                                   + self.bracket_coeff(m, i, j) * self.bracket_coeff(l, m, k)
                                   + self.bracket_coeff(m, j, k) * self.bracket_coeff(l, m, i)
                                   + self.bracket_coeff(m, k, i) * self.bracket_coeff(l, m, j))
                        if not tot.is_zero():
                            bad.append((l, i, j, k, tot))
        return bad

    def reduce_jets(self, jets: tuple) -> tuple:
        """Rewrite a jet string as ((coeff, normal_string), ...) pairs."""
        out = self._memo.get(jets)
        if out is not None:
            return out
        p = -1
        for q in range(len(jets) - 1):
            if jets[q] > jets[q + 1]:
                p = q
                break
        if p < 0:
            out = ((GRat.one(), jets),)
        else:
            j, i = jets[p], jets[p + 1]
            acc = {}
            swapped = jets[:p] + (i, j) + jets[p + 2:]
            for co, nj in self.reduce_jets(swapped):
                acc[nj] = acc.get(nj, GRat.zero()) + co
            for k in range(1, self.dim + 1):
                ck = self.bracket_coeff(k, i, j)
                if ck.is_zero():
                    continue
                shorter = jets[:p] + (k,) + jets[p + 2:]
                for co, nj in self.reduce_jets(shorter):
                    acc[nj] = acc.get(nj, GRat.zero()) - ck * co
            out = tuple((c, nj) for nj, c in acc.items() if not c.is_zero())
        self._memo[jets] = out
        return out


# ---------------------------------------------------------------------------
# Polynomial scalars


def _mono_sort_key(mono):
    return tuple(k.order_key() for k in mono)


class Scalar:
    """Multivariate polynomial over Q(i) in SymKey factors.

    Terms map a sorted tuple of SymKeys (with repetition for powers) to a
    nonzero GRat coefficient.  Treated as immutable.
    """

    __slots__ = ("t",)

    def __init__(self, terms: dict | None = None):
        self.t = {}
        if terms:
            for mono, co in terms.items():
                co = GRat.of(co)
                if not co.is_zero():
                    self.t[mono] = co

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(c) -> "Scalar":
        c = GRat.of(c)
        return Scalar({(): c}) if not c.is_zero() else Scalar()

    @staticmethod
    def zero() -> "Scalar":
        return Scalar()

    @staticmethod
    def one() -> "Scalar":
        return Scalar.const(1)

    @staticmethod
    def sym(key: SymKey) -> "Scalar":
        return Scalar({(key,): GRat.one()})

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.t

    def is_constant(self) -> bool:
        return all(not mono for mono in self.t)

    def constant_value(self) -> GRat:
        if not self.is_constant():
            raise ValueError("scalar is not constant")
        return self.t.get((), GRat.zero())

    def symbols(self) -> set:
        out = set()
        for mono in self.t:
            out.update(mono)
        return out

    def symbol_names(self) -> set:
        return {k.name for k in self.symbols()}

    def degree(self) -> int:
        return max((len(m) for m in self.t), default=0)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "Scalar":
        if not isinstance(other, Scalar):
            other = Scalar.const(other)
        t = dict(self.t)
        for mono, co in other.t.items():
            s = t.get(mono)
            s = co if s is None else s + co
            if s.is_zero():
                t.pop(mono, None)
            else:
                t[mono] = s
        r = Scalar()
        r.t = t
        return r

    __radd__ = __add__

    def __sub__(self, other) -> "Scalar":
        if not isinstance(other, Scalar):
            other = Scalar.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "Scalar":
        return Scalar.const(other) - self

    def __neg__(self) -> "Scalar":
        r = Scalar()
        r.t = {m: -c for m, c in self.t.items()}
        return r

    def scale(self, c) -> "Scalar":
        c = GRat.of(c)
        if c.is_zero():
            return Scalar()
        r = Scalar()
        r.t = {m: co * c for m, co in self.t.items()}
        return r

    def __mul__(self, other) -> "Scalar":
        if isinstance(other, (GRat, int, Fraction)):
            return self.scale(other)
        t = {}
        for m1, c1 in self.t.items():
            for m2, c2 in other.t.items():
                mono = tuple(sorted(m1 + m2, key=lambda k: k.order_key()))
                c = c1 * c2
                s = t.get(mono)
                s = c if s is None else s + c
                if s.is_zero():
                    t.pop(mono, None)
                else:
                    t[mono] = s
        r = Scalar()
        r.t = t
        return r

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int) -> "Scalar":
        if n < 0:
            raise ValueError("negative power of a polynomial scalar")
        out = Scalar.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def conj(self) -> "Scalar":
        t = {}
        for mono, co in self.t.items():
            cm = tuple(sorted((k.conj_key() for k in mono),
                              key=lambda k: k.order_key()))
            t[cm] = co.conj()
        r = Scalar()
        r.t = t
        return r

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, GRat)):
            other = Scalar.const(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.t == other.t

    def __hash__(self):
        return hash(frozenset(self.t.items()))

    # -- substitution ------------------------------------------------------

    def specialize(self, values: dict) -> "Scalar":
        """Substitute named symbols by Gaussian-rational constants.

        A complex symbol's conjugate partner automatically receives the
        conjugate value.  Specializing a function symbol kills all its jets
        (a constant has vanishing frame derivatives).
        """
        vals = {n: GRat.of(v) for n, v in values.items()}
        out = Scalar()
        for mono, co in self.t.items():
            c = co
            rest = []
            dead = False
            for k in mono:
                v = vals.get(k.name)
                if v is None:
                    rest.append(k)
                    continue
                if k.jets:
                    dead = True
                    break
                c = c * (v.conj() if k.bar else v)
            if dead or c.is_zero():
                continue
            out = out + Scalar({tuple(sorted(rest, key=lambda k: k.order_key())): c})
        return out

    def eval_at(self, values: dict) -> GRat:
        s = self.specialize(values)
        if not s.is_constant():
            missing = sorted({k.name for k in s.symbols()})
            raise ValueError(f"unassigned symbols at evaluation point: {missing}")
        return s.constant_value()

    def partition(self, names) -> dict:
        """Group terms by the sub-monomial of factors whose name is in ``names``.

        Returns {probe_monomial: Scalar in the remaining factors}.
        """
        names = set(names)
        out = {}
        for mono, co in self.t.items():
            probe = tuple(k for k in mono if k.name in names)
            rest = tuple(k for k in mono if k.name not in names)
            tgt = out.setdefault(probe, Scalar())
            tgt.t[rest] = tgt.t.get(rest, GRat.zero()) + co
        for probe in list(out):
            out[probe].t = {m: c for m, c in out[probe].t.items() if not c.is_zero()}
            if not out[probe].t:
                del out[probe]
        return out

    # -- division ----------------------------------------------------------

    def _lead(self, symorder: dict):
        """Graded-lex leading (mono, coeff) w.r.t. a symbol index order."""
        best = None
        best_key = None
        for mono, co in self.t.items():
            ev = [0] * len(symorder)
            for k in mono:
                ev[symorder[k]] += 1
            key = (len(mono), tuple(ev))
            if best_key is None or key > best_key:
                best_key, best = key, (mono, co)
        return best

    def exact_div(self, other: "Scalar"):
        """Return self / other if the division is exact, else None."""
        if other.is_zero():
            raise ZeroDivisionError("division by zero scalar")
        if self.is_zero():
            return Scalar.zero()
        if other.is_constant():
            return self.scale(other.constant_value().inv())
        syms = sorted(self.symbols() | other.symbols(),
                      key=lambda k: k.order_key())
        symorder = {k: idx for idx, k in enumerate(syms)}
        dm, dc = other._lead(symorder)
        dcount = {}
        for k in dm:
            dcount[k] = dcount.get(k, 0) + 1
        quo = Scalar.zero()
        rem = self
        while not rem.is_zero():
            rm, rc = rem._lead(symorder)
            rcount = {}
            for k in rm:
                rcount[k] = rcount.get(k, 0) + 1
            if any(rcount.get(k, 0) < n for k, n in dcount.items()):
                return None
            qmono = []
            for k, n in rcount.items():
                n -= dcount.get(k, 0)
                qmono.extend([k] * n)
            qmono = tuple(sorted(qmono, key=lambda k: k.order_key()))
            qterm = Scalar({qmono: rc / dc})
            quo = quo + qterm
            rem = rem - qterm * other
        return quo

    def content(self) -> Fraction:
        """Positive rational content: gcd of all coefficient parts."""
        from math import gcd
        nums, dens = [], []
        for co in self.t.values():
            for part in (co.re, co.im):
                if part != 0:
                    nums.append(abs(part.numerator))
                    dens.append(part.denominator)
        if not nums:
            return Fraction(1)
        g = 0
        for n in nums:
            g = gcd(g, n)
        l = 1
        for d in dens:
            l = l * d // gcd(l, d)
        return Fraction(g, l)

    def monic_canonical(self) -> "Scalar":
        """Scale so the canonically-first term has coefficient exactly 1."""
        if self.is_zero():
            return self
        first = min(self.t, key=_mono_sort_key)
        return self.scale(self.t[first].inv())

    # -- printing ----------------------------------------------------------

    def serialize(self) -> str:
        if not self.t:
            return "0"
        parts = []
        for mono in sorted(self.t, key=_mono_sort_key):
            co = self.t[mono]
            groups = []
            run = None
            count = 0
            for k in mono:
                if k == run:
                    count += 1
                else:
                    if run is not None:
                        groups.append((run, count))
                    run, count = k, 1
            if run is not None:
                groups.append((run, count))
            mstr = "*".join(str(k) if n == 1 else f"{k}^{n}" for k, n in groups)
            if co.is_real():
                neg = co.re < 0
                mag = abs(co.re)
                if mstr and mag == 1:
                    body = mstr
                elif mstr:
                    body = f"{mag}*{mstr}"
                else:
                    body = str(mag)
                parts.append(("-" if neg else "+") + body)
            else:
                body = f"({co})"
                if mstr:
                    body += f"*{mstr}"
                parts.append("+" + body)
        out = "".join(parts)
        return out[1:] if out.startswith("+") else out

    def __str__(self):
        return self.serialize()

    def __repr__(self):
        return f"<Scalar {self.serialize()}>"


# ---------------------------------------------------------------------------
# Frame derivative


def frame_derive(s: Scalar, i: int, lie: LieStructure) -> Scalar:
    """Apply the i-th frame derivative to a scalar (Leibniz over factors)."""
    if not (1 <= i <= lie.dim):
        raise ValueError(f"frame index {i} out of range 1..{lie.dim}")
    out = Scalar.zero()
    for mono, co in s.t.items():
        for p, key in enumerate(mono):
            if key.is_param:
                continue
            for dc, nj in lie.reduce_jets((i,) + key.jets):
                nk = key._replace(jets=nj)
                nmono = tuple(sorted(mono[:p] + (nk,) + mono[p + 1:],
                                     key=lambda k: k.order_key()))
                out = out + Scalar({nmono: co * dc})
    return out


# ---------------------------------------------------------------------------
# Scalar fractions


class SFrac:
    """Quotient of two Scalars with light normalization.

    Normal form: zero has denominator 1; otherwise the denominator is scaled
    canonically monic, and the quotient collapses to a polynomial whenever
    the division happens to be exact.  Equality is decided by
    cross-multiplication, so unreduced representatives still compare equal.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Scalar, den: Scalar | None = None):
        if den is None:
            den = Scalar.one()
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            self.num, self.den = Scalar.zero(), Scalar.one()
            return
        if not den.is_constant():
            q = num.exact_div(den)
            if q is not None:
                num, den = q, Scalar.one()
        if den.is_constant():
            num = num.scale(den.constant_value().inv())
            den = Scalar.one()
        else:
            first = min(den.t, key=_mono_sort_key)
            u = den.t[first].inv()
            num, den = num.scale(u), den.scale(u)
        self.num, self.den = num, den

    @staticmethod
    def const(c) -> "SFrac":
        return SFrac(Scalar.const(c))

    @staticmethod
    def zero() -> "SFrac":
        return SFrac(Scalar.zero())

    @staticmethod
    def one() -> "SFrac":
        return SFrac(Scalar.one())

    @staticmethod
    def of(x) -> "SFrac":
        if isinstance(x, SFrac):
            return x
        if isinstance(x, Scalar):
            return SFrac(x)
        return SFrac(Scalar.const(x))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def __add__(self, other) -> "SFrac":
        o = SFrac.of(other)
        if self.den == o.den:
            return SFrac(self.num + o.num, self.den)
        return SFrac(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __sub__(self, other) -> "SFrac":
        return self + (-SFrac.of(other))

    def __rsub__(self, other) -> "SFrac":
        return SFrac.of(other) - self

    def __neg__(self) -> "SFrac":
        r = SFrac.__new__(SFrac)
        r.num, r.den = -self.num, self.den
        return r

    def __mul__(self, other) -> "SFrac":
        o = SFrac.of(other)
        return SFrac(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SFrac":
        o = SFrac.of(other)
        if o.is_zero():
            raise ZeroDivisionError("division by zero scalar fraction")
        return SFrac(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other) -> "SFrac":
        return SFrac.of(other) / self

    def inv(self) -> "SFrac":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero scalar fraction")
        return SFrac(self.den, self.num)

    def __pow__(self, n: int) -> "SFrac":
        if n < 0:
            return self.inv() ** (-n)
        return SFrac(self.num ** n, self.den ** n)

    def conj(self) -> "SFrac":
        return SFrac(self.num.conj(), self.den.conj())

    def specialize(self, values: dict) -> "SFrac":
        den = self.den.specialize(values)
        if den.is_zero():
            raise ZeroDivisionError("denominator vanishes under specialization")
        return SFrac(self.num.specialize(values), den)

    def eval_at(self, values: dict) -> GRat:
        d = self.den.eval_at(values)
        if d.is_zero():
            raise ZeroDivisionError("denominator vanishes at evaluation point")
        return self.num.eval_at(values) / d

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, GRat, Scalar)):
            other = SFrac.of(other)
        if not isinstance(other, SFrac):
            return NotImplemented
        return (self.num * other.den) == (other.num * self.den)

    def __hash__(self):
        return hash((self.num, self.den))

    def serialize(self) -> str:
        if self.is_polynomial():
            return self.num.serialize()
        return f"({self.num.serialize()})/({self.den.serialize()})"

    def __str__(self):
        return self.serialize()

    def __repr__(self):
        return f"<SFrac {self.serialize()}>"


def sfrac_derive(f: SFrac, i: int, lie: LieStructure) -> SFrac:
    """Quotient-rule frame derivative of a scalar fraction."""
    dn = frame_derive(f.num, i, lie)
    if f.is_polynomial():
        return SFrac(dn, f.den)
    dd = frame_derive(f.den, i, lie)
    return SFrac(dn * f.den - f.num * dd, f.den * f.den)


# ---------------------------------------------------------------------------
# Constraint ideals and genericity assumptions


def normalized_assumption(s: Scalar):
    """Canonical string for a nonvanishing requirement; None when vacuous."""
    if s.is_zero():
        raise ValueError("a zero scalar can never be assumed nonzero")
    if s.is_constant():
        return None
    return s.monic_canonical().serialize()


class ConstraintIdeal:
    """A finite set of scalar generators whose common vanishing is the condition.

    Normalization: drop zeros, scale each generator canonically monic, dedupe,
    collapse conjugate pairs to the smaller serialization, prune generators
    exactly divisible by another, sort.  The verdict is ``holds`` when no
    generators survive, ``fails`` when a nonzero constant appears, and
    ``conditional`` otherwise.
    """

    __slots__ = ("gens",)

    def __init__(self, gens: Iterable[Scalar] = ()):
        seen = {}
        failed = False
        for g in gens:
            if g.is_zero():
                continue
            if g.is_constant():
                failed = True
                continue
            # conjugate collapse: a condition and its pointwise conjugate cut
            # out the same locus, so keep the smaller serialization of the two
            gn = g.monic_canonical()
            cg = g.conj().monic_canonical()
            if cg.serialize() < gn.serialize():
                gn = cg
            seen[gn.serialize()] = gn
        if failed:
            seen["1"] = Scalar.one()
        # divisibility prune
        drop = set()
        items = sorted(seen.items())
        for si, gi in items:
            for sj, gj in items:
                if si == sj or sj in drop or si in drop:
                    continue
                if gi.exact_div(gj) is not None:
                    drop.add(si)
                    break
        self.gens = tuple(g for s, g in items if s not in drop)

    @staticmethod
    def trivial() -> "ConstraintIdeal":
        return ConstraintIdeal(())

    @staticmethod
    def impossible() -> "ConstraintIdeal":
        return ConstraintIdeal((Scalar.one(),))

    def verdict(self) -> str:
        if not self.gens:
            return "holds"
        if any(g.is_constant() for g in self.gens):
            return "fails"
        return "conditional"

    def merged(self, other: "ConstraintIdeal") -> "ConstraintIdeal":
        return ConstraintIdeal(self.gens + other.gens)

    def serialized(self) -> tuple:
        return tuple(g.serialize() for g in self.gens)

    def specialize_verdict(self, values: dict) -> str:
        for g in self.gens:
            if not g.eval_at(values).is_zero():
                return "fails"
        return "holds"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConstraintIdeal):
            return NotImplemented
        return self.serialized() == other.serialized()

    def __hash__(self):
        return hash(self.serialized())

    def __repr__(self):
        if not self.gens:
            return "<ConstraintIdeal holds>"
        return "<ConstraintIdeal " + "; ".join(self.serialized()) + ">"


def split_sfrac_constraints(fracs: Iterable[SFrac]):
    """Turn vanishing conditions on fractions into (ideal, assumptions).

    The numerators generate the ideal; nonconstant denominators become
    genericity assumptions (they were inverted along the way).
    """
    gens = []
    assumptions = set()
    for f in fracs:
        gens.append(f.num)
        a = normalized_assumption(f.den) if not f.den.is_zero() else None
        if a is not None:
            assumptions.add(a)
    return ConstraintIdeal(gens), assumptions


# ---------------------------------------------------------------------------
# Scalar expression parser


_RESERVED = {"i"}


class _Tok(NamedTuple):
    kind: str
    val: str


def _tokenize(text: str) -> Iterator[_Tok]:
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            yield _Tok("int", text[i:j])
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            yield _Tok("name", text[i:j])
            i = j
            continue
        if ch in "+-*/^()~;,":
            yield _Tok(ch, ch)
            i += 1
            continue
        raise ValueError(f"unexpected character {ch!r} in scalar expression")
    yield _Tok("end", "")


class _ScalarParser:
    """Recursive-descent parser for Gaussian-rational scalar expressions.

    Grammar: sums/differences of terms, terms multiply/divide factors,
    factors are optionally negated atoms with an optional integer power.
    Atoms: integers, ``i``, parenthesized expressions, or symbols
    ``[~]name[;j1,j2,...]`` resolved through a registry of known names.
    """

    def __init__(self, text: str, registry: dict, lie: LieStructure | None):
        self.toks = list(_tokenize(text))
        self.pos = 0
        self.registry = registry
        self.lie = lie

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def take(self, kind: str | None = None) -> _Tok:
        tok = self.toks[self.pos]
        if kind is not None and tok.kind != kind:
            raise ValueError(f"expected {kind!r}, got {tok.val!r}")
        self.pos += 1
        return tok

    def parse(self) -> SFrac:
        v = self.expr()
        if self.peek().kind != "end":
            raise ValueError(f"trailing input at {self.peek().val!r}")
        return v

    def expr(self) -> SFrac:
        v = self.term()
        while self.peek().kind in "+-":
            op = self.take().kind
            w = self.term()
            v = v + w if op == "+" else v - w
        return v

    def term(self) -> SFrac:
        v = self.factor()
        while self.peek().kind in "*/":
            op = self.take().kind
            w = self.factor()
            v = v * w if op == "*" else v / w
        return v

    def factor(self) -> SFrac:
        neg = False
        while self.peek().kind == "-":
            self.take()
            neg = not neg
        v = self.atom()
        if self.peek().kind == "^":
            self.take()
            nt = self.take("int")
            v = v ** int(nt.val)
        return -v if neg else v

    def atom(self) -> SFrac:
        tok = self.peek()
        if tok.kind == "int":
            self.take()
            return SFrac.const(int(tok.val))
        if tok.kind == "(":
            self.take()
            v = self.expr()
            self.take(")")
            return v
        if tok.kind == "~":
            self.take()
            return self.symbol(bar=True)
        if tok.kind == "name":
            if tok.val == "i":
                self.take()
                return SFrac.const(GRat.i())
            return self.symbol(bar=False)
        raise ValueError(f"unexpected token {tok.val!r} in scalar expression")

    def symbol(self, bar: bool) -> SFrac:
        name = self.take("name").val
        if name in _RESERVED:
            raise ValueError(f"{name!r} is reserved and cannot be conjugated")
        tpl = self.registry.get(name)
        if tpl is None:
            raise ValueError(f"unknown symbol {name!r}")
        if bar and not tpl.cx:
            raise ValueError(f"symbol {name!r} is real; ~ applies to complex symbols")
        jets = ()
        if self.peek().kind == ";":
            self.take()
            idx = [int(self.take("int").val)]
            while self.peek().kind == ",":
                self.take()
                idx.append(int(self.take("int").val))
            jets = tuple(idx)
        if jets and tpl.is_param:
            raise ValueError(f"parameter {name!r} cannot carry jet indices")
        key = tpl._replace(bar=bar and tpl.cx, jets=jets)
        if jets and any(jets[q] > jets[q + 1] for q in range(len(jets) - 1)):
            if self.lie is None:
                raise ValueError("jet string not in normal order and no frame structure given")
            out = Scalar.zero()
            for co, nj in self.lie.reduce_jets(jets):
                out = out + Scalar({(key._replace(jets=nj),): co})
            return SFrac(out)
        return SFrac(Scalar.sym(key))


def parse_scalar(text: str, registry: dict, lie: LieStructure | None = None) -> SFrac:
    """Parse a scalar coefficient expression against a symbol registry."""
    return _ScalarParser(text, registry, lie).parse()
