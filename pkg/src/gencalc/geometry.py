"""Frame presentations of manifolds and the document format that carries them.

A geometry is a manifold presented by a global (co)frame with constant
structure equations: ``d a_k = sum_{i<j} c'[k,i,j] a_i^a_j``.  The document
format is line-oriented:

    [manifold] name=NAME, dim=N, coframe=a1,...,aN
    [structure]
    d a1 = a2^a3 + (-1)*a1^a2
    [params] tau, r:s
    [functions] f, g, c:w
    [section x2] X2-f*a1
    [split E] sections=a2,a3,x2,x3
    [fstructure F] Phi = a1^a2+X1^X2        (or: J = ... rows on lines below)
    [deformation D] base=F
    eps 1 2 = w

Frame fields are always named ``X1..XN``; coframe names are declared.
Parameters are complex by default (``r:`` marks a real one), function
symbols are real by default (``c:`` marks a complex one).  J-matrix rows
are whitespace-separated scalar entries, one row per line, in the basis
order X1..XN, a1..aN.  In a ``Phi`` expression a coframe name acts by
wedging, a frame name by contraction, and ``^`` composes left to right.
"""

from __future__ import annotations

from .scalars import (
    GRat,
    LieStructure,
    SFrac,
    Scalar,
    _ScalarParser,
    _tokenize,
    func_key,
    param_key,
    parse_scalar,
)

_RESERVED_NAMES = {"i", "u", "v", "d", "eps"}

MAX_DIM = 10


# ---------------------------------------------------------------------------
# sections of the generalized tangent bundle


class GTBSection:
    """A section X + alpha of TM + T*M over the scalar fraction field.

    Acts on forms as contraction by the vector part plus wedging by the
    form part (an odd operator).
    """

    __slots__ = ("vec", "form")

    def __init__(self, vec, form):
        self.vec = tuple(SFrac.of(c) for c in vec)
        self.form = tuple(SFrac.of(c) for c in form)
        if len(self.vec) != len(self.form):
            raise ValueError("vector/form component count mismatch")

    @staticmethod
    def zero(n: int) -> "GTBSection":
        z = tuple(SFrac.zero() for _ in range(n))
        return GTBSection(z, z)

    @staticmethod
    def frame(n: int, k: int) -> "GTBSection":
        vec = [SFrac.zero()] * n
        vec[k - 1] = SFrac.one()
        return GTBSection(vec, [SFrac.zero()] * n)

    @staticmethod
    def coframe(n: int, k: int) -> "GTBSection":
        form = [SFrac.zero()] * n
        form[k - 1] = SFrac.one()
        return GTBSection([SFrac.zero()] * n, form)

    @property
    def dim(self) -> int:
        return len(self.vec)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.vec) and \
            all(c.is_zero() for c in self.form)

    def coords(self) -> tuple:
        """Coordinates in the basis X1..Xn, a1..an."""
        return self.vec + self.form

    @staticmethod
    def from_coords(coords) -> "GTBSection":
        n = len(coords) // 2
        return GTBSection(coords[:n], coords[n:])

    def __add__(self, other: "GTBSection") -> "GTBSection":
        return GTBSection([a + b for a, b in zip(self.vec, other.vec)],
                          [a + b for a, b in zip(self.form, other.form)])

    def __sub__(self, other: "GTBSection") -> "GTBSection":
        return GTBSection([a - b for a, b in zip(self.vec, other.vec)],
                          [a - b for a, b in zip(self.form, other.form)])

    def __neg__(self) -> "GTBSection":
        return GTBSection([-a for a in self.vec], [-a for a in self.form])

    def scale(self, c) -> "GTBSection":
        c = SFrac.of(c)
        return GTBSection([c * a for a in self.vec], [c * a for a in self.form])

    def conj(self) -> "GTBSection":
        return GTBSection([a.conj() for a in self.vec],
                          [a.conj() for a in self.form])

    def __eq__(self, other) -> bool:
        if not isinstance(other, GTBSection):
            return NotImplemented
        return self.vec == other.vec and self.form == other.form

    def __hash__(self):
        return hash((self.vec, self.form))

    def serialize(self, coframe: tuple) -> str:
        parts = []
        for k, c in enumerate(self.vec):
            parts.append(_emit_term(c, f"X{k + 1}"))
        for k, c in enumerate(self.form):
            parts.append(_emit_term(c, coframe[k]))
        body = "".join(p for p in parts if p)
        if not body:
            return "0"
        return body[1:] if body.startswith("+") else body

    def __repr__(self):
        names = tuple(f"a{k + 1}" for k in range(self.dim))
        return f"<GTBSection {self.serialize(names)}>"


def _emit_term(c: SFrac, base: str) -> str:
    if c.is_zero():
        return ""
    if c == SFrac.one():
        return "+" + base
    if c == -SFrac.one():
        return "-" + base
    return f"+({c.serialize()})*{base}"


def _emit_scalar_factor(c: SFrac) -> str:
    return "" if c == SFrac.one() else f"({c.serialize()})*"


# ---------------------------------------------------------------------------
# parsed specifications of bundled structures


class FStructSpec:
    """Unevaluated F-structure data: either a J-matrix on X1..Xn,a1..an or a
    Phi operator expression (list of (coefficient, atom-chain) terms; atom
    ('w', k) wedges the k-th coframe field, ('c', k) contracts)."""

    __slots__ = ("name", "kind", "jmat", "phi_terms")

    def __init__(self, name, kind, jmat=None, phi_terms=None):
        self.name = name
        self.kind = kind
        self.jmat = jmat
        self.phi_terms = phi_terms


class DeformSpec:
    """Deformation data: base F-structure name and eps coefficients over the
    conjugate-eigenbasis wedge pairs (i, j), i < j, 1-based."""

    __slots__ = ("name", "base", "eps")

    def __init__(self, name, base, eps):
        self.name = name
        self.base = base
        self.eps = dict(eps)


# ---------------------------------------------------------------------------
# geometry


class Geometry:
    """An immutable frame presentation plus bundled named structures."""

    __slots__ = ("name", "dim", "coframe", "lie", "params", "functions",
                 "registry", "sections", "splits", "fstructs", "deforms")

    def __init__(self, name, dim, coframe, dcoeff, params, functions):
        if not (1 <= dim <= MAX_DIM):
            raise ValueError(f"dim must be between 1 and {MAX_DIM}")
        self.name = name
        self.dim = dim
        self.coframe = tuple(coframe)
        if len(self.coframe) != dim:
            raise ValueError("coframe name count differs from dim")
        self.lie = LieStructure(dim, dcoeff)
        bad = self.lie.jacobi_violations()
        if bad:
            l, i, j, k, tot = bad[0]
            raise ValueError(
                f"structure equations violate d^2=0: component {l} of the "
                f"Jacobi sum on ({i},{j},{k}) is {tot}")
        self.params = tuple(params)        # (name, cx) pairs
        self.functions = tuple(functions)  # (name, cx) pairs
        self.registry = {}
        for nm, cx in self.params:
            self.registry[nm] = param_key(nm, cx=cx)
        for nm, cx in self.functions:
            self.registry[nm] = func_key(nm, cx=cx)
        names = list(self.coframe)
        names += [f"X{k}" for k in range(1, dim + 1)]
        names += [nm for nm, _ in self.params] + [nm for nm, _ in self.functions]
        seen = set()
        for nm in names:
            if nm in _RESERVED_NAMES:
                raise ValueError(f"name {nm!r} is reserved")
            if nm in seen:
                raise ValueError(f"duplicate name {nm!r}")
            seen.add(nm)
        self.sections = {}
        self.splits = {}
        self.fstructs = {}
        self.deforms = {}

    # -- naming ------------------------------------------------------------

    def coframe_index(self, nm: str):
        try:
            return self.coframe.index(nm) + 1
        except ValueError:
            return None

    def frame_index(self, nm: str):
        if nm.startswith("X") and nm[1:].isdigit():
            k = int(nm[1:])
            if 1 <= k <= self.dim:
                return k
        return None

    def resolve_section(self, nm: str) -> GTBSection:
        k = self.coframe_index(nm)
        if k is not None:
            return GTBSection.coframe(self.dim, k)
        k = self.frame_index(nm)
        if k is not None:
            return GTBSection.frame(self.dim, k)
        if nm in self.sections:
            return self.sections[nm]
        raise ValueError(f"unknown section name {nm!r}")

    def split_sections(self, nm: str) -> list:
        if nm not in self.splits:
            raise ValueError(f"unknown split {nm!r}")
        return [self.resolve_section(s) for s in self.splits[nm]]

    def parse_coeff(self, text: str) -> SFrac:
        return parse_scalar(text, self.registry, self.lie)

    # -- serialization -----------------------------------------------------

    def serialize(self) -> str:
        out = [f"[manifold] name={self.name}, dim={self.dim}, "
               f"coframe={','.join(self.coframe)}"]
        lines = []
        for k in range(1, self.dim + 1):
            terms = []
            for i in range(1, self.dim + 1):
                for j in range(i + 1, self.dim + 1):
                    c = self.lie.dalpha_coeff(k, i, j)
                    if c.is_zero():
                        continue
                    mono = f"{self.coframe[i - 1]}^{self.coframe[j - 1]}"
                    if c.is_one():
                        terms.append(f"+{mono}")
                    else:
                        terms.append(f"+({c})*{mono}")
            if terms:
                body = "".join(terms)
                body = body[1:] if body.startswith("+") else body
                lines.append(f"d {self.coframe[k - 1]} = {body}")
        if lines:
            out.append("[structure]")
            out.extend(lines)
        if self.params:
            out.append("[params] " + ", ".join(
                ("" if cx else "r:") + nm for nm, cx in self.params))
        if self.functions:
            out.append("[functions] " + ", ".join(
                ("c:" if cx else "") + nm for nm, cx in self.functions))
        for nm, sec in self.sections.items():
            out.append(f"[section {nm}] {sec.serialize(self.coframe)}")
        for nm, members in self.splits.items():
            out.append(f"[split {nm}] sections=" + ",".join(members))
        for nm, fs in self.fstructs.items():
            if fs.kind == "J":
                out.append(f"[fstructure {nm}] J =")
                for row in fs.jmat:
                    out.append(" ".join(e.serialize() for e in row))
            else:
                out.append(f"[fstructure {nm}] Phi = "
                           + _emit_phi(fs.phi_terms, self.coframe))
        for nm, df in self.deforms.items():
            out.append(f"[deformation {nm}] base={df.base}")
            for (i, j), c in df.eps.items():
                out.append(f"eps {i} {j} = {c.serialize()}")
        return "\n".join(out) + "\n"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Geometry):
            return NotImplemented
        return self.serialize() == other.serialize()

    def __hash__(self):
        return hash(self.serialize())

    def __repr__(self):
        return f"<Geometry {self.name} dim={self.dim}>"


def _emit_phi(terms, coframe) -> str:
    parts = []
    for coeff, chain in terms:
        atoms = "^".join(coframe[k - 1] if kind == "w" else f"X{k}"
                         for kind, k in chain)
        parts.append("+" + _emit_scalar_factor(coeff) + atoms)
    if not parts:
        return "0"
    body = "".join(parts)
    return body[1:] if body.startswith("+") else body


# ---------------------------------------------------------------------------
# expression parsing helpers (sections, structure lines, Phi expressions)


class _SectionParser(_ScalarParser):
    """Extends the scalar grammar with frame/coframe/section atoms.

    Values are tagged ('s', SFrac) or ('v', GTBSection); products may
    contain at most one section factor and '^' only applies to scalars.
    """

    def __init__(self, text, geom: Geometry):
        super().__init__(text, geom.registry, geom.lie)
        self.geom = geom

    def parse_section(self) -> GTBSection:
        tag, val = self.tagged_expr()
        if self.peek().kind != "end":
            raise ValueError(f"trailing input at {self.peek().val!r}")
        if tag != "v":
            raise ValueError("expression has no frame/coframe part")
        return val

    def tagged_expr(self):
        tag, val = self.tagged_term()
        while self.peek().kind in "+-":
            op = self.take().kind
            t2, v2 = self.tagged_term()
            if tag != t2:
                raise ValueError("cannot add a scalar to a section")
            if op == "-":
                v2 = -v2
            val = val + v2
        return tag, val

    def tagged_term(self):
        tag, val = self.tagged_factor()
        while self.peek().kind in "*/":
            op = self.take().kind
            t2, v2 = self.tagged_factor()
            if op == "/":
                if t2 != "s":
                    raise ValueError("cannot divide by a section")
                v2 = v2.inv()
                t2 = "s"
                val = val.scale(v2) if tag == "v" else val * v2
                continue
            if tag == "v" and t2 == "v":
                raise ValueError("section expressions are linear: cannot "
                                 "multiply two sections")
            if tag == "v":
                val = val.scale(v2)
            elif t2 == "v":
                val, tag = v2.scale(val), "v"
            else:
                val = val * v2
        return tag, val

    def tagged_factor(self):
        neg = False
        while self.peek().kind == "-":
            self.take()
            neg = not neg
        tag, val = self.tagged_atom()
        if self.peek().kind == "^":
            self.take()
            nt = self.take("int")
            if tag != "s":
                raise ValueError("cannot raise a section to a power")
            val = val ** int(nt.val)
        return tag, (-val if neg else val)

    def tagged_atom(self):
        tok = self.peek()
        if tok.kind == "(":
            self.take()
            tag, val = self.tagged_expr()
            self.take(")")
            return tag, val
        if tok.kind == "name" and tok.val != "i":
            nm = tok.val
            k = self.geom.coframe_index(nm)
            if k is not None:
                self.take()
                return "v", GTBSection.coframe(self.geom.dim, k)
            k = self.geom.frame_index(nm)
            if k is not None:
                self.take()
                return "v", GTBSection.frame(self.geom.dim, k)
            if nm in self.geom.sections:
                self.take()
                return "v", self.geom.sections[nm]
        return "s", self.atom()


def parse_section_expr(text: str, geom: Geometry) -> GTBSection:
    return _SectionParser(text, geom).parse_section()


def _parse_structure_rhs(text: str, coframe: tuple) -> dict:
    """Parse 'a2^a3 + (-1)*a1^a2' into {(i, j): GRat} with i < j."""
    toks = list(_tokenize(text))
    pos = 0

    def peek():
        return toks[pos]

    def take(kind=None):
        nonlocal pos
        tok = toks[pos]
        if kind is not None and tok.kind != kind:
            raise ValueError(f"expected {kind!r}, got {tok.val!r} in structure line")
        pos += 1
        return tok

    def const_atom() -> GRat:
        tok = peek()
        if tok.kind == "int":
            take()
            return GRat(int(tok.val))
        if tok.kind == "name" and tok.val == "i":
            take()
            return GRat.i()
        if tok.kind == "(":
            take()
            v = const_expr()
            take(")")
            return v
        raise ValueError(f"structure coefficients must be Gaussian-rational "
                         f"constants, got {tok.val!r}")

    def const_factor() -> GRat:
        neg = False
        while peek().kind == "-":
            take()
            neg = not neg
        v = const_atom()
        return -v if neg else v

    def const_expr() -> GRat:
        v = const_factor()
        while peek().kind in "+-*/":
            op = take().kind
            w = const_factor()
            if op == "+":
                v = v + w
            elif op == "-":
                v = v - w
            elif op == "*":
                v = v * w
            else:
                v = v / w
        return v

    def cof_index() -> int:
        tok = take("name")
        if tok.val not in coframe:
            raise ValueError(f"unknown coframe name {tok.val!r} in structure line")
        return coframe.index(tok.val) + 1

    out: dict = {}
    if peek().kind == "int" and peek().val == "0" and toks[pos + 1].kind == "end":
        return out
    while True:
        sign = GRat.one()
        while peek().kind in "+-":
            if take().kind == "-":
                sign = -sign
        coeff = GRat.one()
        if peek().kind in ("int", "("):
            coeff = const_atom()
            take("*")
        i = cof_index()
        take("^")
        j = cof_index()
        if i == j:
            raise ValueError("repeated coframe name in a wedge monomial")
        c = sign * coeff
        if i > j:
            i, j = j, i
            c = -c
        out[(i, j)] = out.get((i, j), GRat.zero()) + c
        if peek().kind == "end":
            break
        if peek().kind not in "+-":
            raise ValueError(f"expected + or - in structure line, "
                             f"got {peek().val!r}")
    return {k: v for k, v in out.items() if not v.is_zero()}


class _PhiParser(_ScalarParser):
    """Parses a Phi operator expression into (coefficient, atom-chain) terms."""

    def __init__(self, text, geom: Geometry):
        super().__init__(text, geom.registry, geom.lie)
        self.geom = geom

    def parse_phi(self) -> list:
        terms = self.phi_expr()
        if self.peek().kind != "end":
            raise ValueError(f"trailing input at {self.peek().val!r}")
        return terms

    def phi_expr(self) -> list:
        terms = self.phi_term()
        while self.peek().kind in "+-":
            op = self.take().kind
            more = self.phi_term()
            if op == "-":
                more = [(-c, ch) for c, ch in more]
            terms = terms + more
        return terms

    def phi_term(self) -> list:
        neg = False
        while self.peek().kind == "-":
            self.take()
            neg = not neg
        coeff = SFrac.one()
        chain: list = []
        while True:
            tok = self.peek()
            if tok.kind == "name" and tok.val != "i":
                nm = tok.val
                k = self.geom.coframe_index(nm)
                if k is not None:
                    self.take()
                    chain.append(("w", k))
                else:
                    k = self.geom.frame_index(nm)
                    if k is not None:
                        self.take()
                        chain.append(("c", k))
                    else:
                        coeff = coeff * self.atom()
            elif tok.kind in ("int", "(", "~") or (tok.kind == "name"):
                coeff = coeff * self.atom()
            else:
                raise ValueError(f"unexpected {tok.val!r} in Phi expression")
            nxt = self.peek().kind
            if nxt in ("*", "^"):
                self.take()
                continue
            break
        if neg:
            coeff = -coeff
        if coeff.is_zero():
            return []
        return [(coeff, tuple(chain))]


def parse_phi_expr(text: str, geom: Geometry) -> list:
    terms = _PhiParser(text, geom).parse_phi()
    if len(terms) == 1 and not terms[0][1] and terms[0][0].is_zero():
        return []
    return terms


# ---------------------------------------------------------------------------
# document parser


def _split_kv(line: str) -> list:
    """Split 'k1=v1, k2=a,b,c' into [(k, value-string)] with list values
    re-joined (a comma piece without '=' continues the previous value)."""
    out = []
    for piece in line.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" in piece:
            k, v = piece.split("=", 1)
            out.append([k.strip(), [v.strip()]])
        elif out:
            out[-1][1].append(piece)
        else:
            raise ValueError(f"expected key=value, got {piece!r}")
    return [(k, ",".join(v)) for k, v in out]


class _GeomError(ValueError):
    pass


def parse_geometry(document: str) -> Geometry:
    """Parse and validate a geometry document; raises ValueError with the
    offending line number on malformed input."""
    lines = document.splitlines()
    blocks = []  # (lineno, header, arg, body_lines)
    current = None
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.lstrip().startswith("["):
            line = line.strip()
            end = line.find("]")
            if end < 0:
                raise ValueError(f"line {ln}: unterminated block header")
            inner = line[1:end].strip()
            rest = line[end + 1:].strip()
            parts = inner.split(None, 1)
            tag = parts[0]
            name = parts[1].strip() if len(parts) > 1 else None
            current = [ln, tag, name, rest, []]
            blocks.append(current)
        else:
            if current is None:
                raise ValueError(f"line {ln}: content before first block header")
            current[4].append((ln, line.strip()))

    manifold = None
    structure_entries: dict = {}
    params: list = []
    functions: list = []
    pending_sections = []
    pending_splits = []
    pending_fstructs = []
    pending_deforms = []

    def fail(ln, msg):
        raise _GeomError(f"line {ln}: {msg}")

    for ln, tag, name, rest, body in blocks:
        if tag == "manifold":
            if manifold is not None:
                fail(ln, "duplicate [manifold] block")
            kv = dict(_split_kv(rest))
            missing = {"name", "dim", "coframe"} - set(kv)
            if missing:
                fail(ln, f"[manifold] missing {sorted(missing)}")
            try:
                dim = int(kv["dim"])
            except ValueError:
                fail(ln, f"dim is not an integer: {kv['dim']!r}")
            coframe = tuple(s.strip() for s in kv["coframe"].split(",") if s.strip())
            manifold = (kv["name"], dim, coframe, ln)
        elif tag == "structure":
            if rest:
                body = [(ln, rest)] + body
            for bln, line in body:
                if not line.startswith("d ") and not line.startswith("d\t"):
                    fail(bln, f"structure line must start with 'd ': {line!r}")
                if "=" not in line:
                    fail(bln, "structure line needs '='")
                lhs, rhs = line[2:].split("=", 1)
                structure_entries[lhs.strip()] = (bln, rhs.strip())
        elif tag == "params" or tag == "functions":
            tgt = params if tag == "params" else functions
            for piece in rest.split(","):
                piece = piece.strip()
                if not piece:
                    continue
                if piece.startswith("r:"):
                    nm, cx = piece[2:].strip(), False
                elif piece.startswith("c:"):
                    nm, cx = piece[2:].strip(), True
                else:
                    nm, cx = piece, (tag == "params")
                if not nm.isidentifier():
                    fail(ln, f"bad symbol name {nm!r}")
                tgt.append((nm, cx))
            if body:
                fail(body[0][0], f"unexpected content inside [{tag}]")
        elif tag == "section":
            if name is None:
                fail(ln, "[section] needs a name")
            pending_sections.append((ln, name, rest))
        elif tag == "split":
            if name is None:
                fail(ln, "[split] needs a name")
            kv = dict(_split_kv(rest))
            if set(kv) != {"sections"}:
                fail(ln, "[split] takes exactly sections=...")
            members = tuple(s.strip() for s in kv["sections"].split(",") if s.strip())
            pending_splits.append((ln, name, members))
        elif tag == "fstructure":
            if name is None:
                fail(ln, "[fstructure] needs a name")
            if "=" not in rest:
                fail(ln, "[fstructure] needs 'J = ...' or 'Phi = ...'")
            key, val = rest.split("=", 1)
            key = key.strip()
            if key not in ("J", "Phi"):
                fail(ln, f"[fstructure] key must be J or Phi, got {key!r}")
            pending_fstructs.append((ln, name, key, val.strip(), body))
        elif tag == "deformation":
            if name is None:
                fail(ln, "[deformation] needs a name")
            kv = dict(_split_kv(rest))
            if set(kv) != {"base"}:
                fail(ln, "[deformation] header takes exactly base=...")
            pending_deforms.append((ln, name, kv["base"], body))
        else:
            fail(ln, f"unknown block [{tag}]")

    if manifold is None:
        raise _GeomError("document has no [manifold] block")
    mname, dim, coframe, mln = manifold

    dcoeff = {}
    for cof, (bln, rhs) in structure_entries.items():
        if cof not in coframe:
            fail(bln, f"unknown coframe name {cof!r}")
        k = coframe.index(cof) + 1
        try:
            entries = _parse_structure_rhs(rhs, coframe)
        except ValueError as e:
            fail(bln, str(e))
        for (i, j), c in entries.items():
            dcoeff[(k, i, j)] = c

    try:
        geom = Geometry(mname, dim, coframe, dcoeff, params, functions)
    except ValueError as e:
        raise _GeomError(f"line {mln}: {e}") from None

    for ln, name, expr in pending_sections:
        if name in geom.sections or geom.coframe_index(name) is not None \
                or geom.frame_index(name) is not None or name in geom.registry:
            fail(ln, f"duplicate or clashing section name {name!r}")
        if name in _RESERVED_NAMES:
            fail(ln, f"name {name!r} is reserved")
        try:
            geom.sections[name] = parse_section_expr(expr, geom)
        except ValueError as e:
            fail(ln, f"section {name!r}: {e}")

    for ln, name, members in pending_splits:
        if name in geom.splits:
            fail(ln, f"duplicate split name {name!r}")
        for m in members:
            try:
                geom.resolve_section(m)
            except ValueError as e:
                fail(ln, f"split {name!r}: {e}")
        geom.splits[name] = members

    for ln, name, key, val, body in pending_fstructs:
        if name in geom.fstructs:
            fail(ln, f"duplicate fstructure name {name!r}")
        if key == "Phi":
            if body:
                fail(body[0][0], "unexpected content after a Phi expression")
            try:
                terms = parse_phi_expr(val, geom)
            except ValueError as e:
                fail(ln, f"fstructure {name!r}: {e}")
            geom.fstructs[name] = FStructSpec(name, "Phi", phi_terms=terms)
        else:
            rows = []
            if val:
                fail(ln, "J rows start on the following lines")
            for bln, line in body:
                entries = line.split()
                try:
                    rows.append(tuple(geom.parse_coeff(e) for e in entries))
                except ValueError as e:
                    fail(bln, f"fstructure {name!r}: {e}")
            want = 2 * geom.dim
            if len(rows) != want or any(len(r) != want for r in rows):
                fail(ln, f"fstructure {name!r}: J must be {want}x{want}")
            geom.fstructs[name] = FStructSpec(name, "J", jmat=tuple(rows))

    for ln, name, base, body in pending_deforms:
        if name in geom.deforms:
            fail(ln, f"duplicate deformation name {name!r}")
        if base not in geom.fstructs:
            fail(ln, f"deformation {name!r}: unknown base fstructure {base!r}")
        eps = {}
        for bln, line in body:
            parts = line.split("=", 1)
            head = parts[0].split()
            if len(parts) != 2 or len(head) != 3 or head[0] != "eps":
                fail(bln, "deformation lines look like 'eps i j = <scalar>'")
            try:
                i, j = int(head[1]), int(head[2])
            except ValueError:
                fail(bln, "eps indices must be integers")
            if not (1 <= i < j):
                fail(bln, "eps indices must satisfy 1 <= i < j")
            try:
                eps[(i, j)] = geom.parse_coeff(parts[1].strip())
            except ValueError as e:
                fail(bln, f"deformation {name!r}: {e}")
        geom.deforms[name] = DeformSpec(name, base, eps)

    return geom
