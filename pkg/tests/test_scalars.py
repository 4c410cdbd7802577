"""Unit tests for the exact scalar layer."""

from fractions import Fraction

import pytest

from gencalc.scalars import (
    ConstraintIdeal,
    GRat,
    LieStructure,
    Scalar,
    SFrac,
    frame_derive,
    func_key,
    normalized_assumption,
    param_key,
    parse_scalar,
    sfrac_derive,
    split_sfrac_constraints,
)


def _s3():
    # round-sphere frame: d(a1) = a2*a3, d(a2) = a3*a1, d(a3) = a1*a2
    return LieStructure(3, {(1, 2, 3): 1, (2, 1, 3): -1, (3, 1, 2): 1})


def _heis():
    return LieStructure(3, {(3, 1, 2): 1})


# ---------------------------------------------------------------------------
# GRat


def test_grat_arithmetic():
    a = GRat(1, 2)
    b = GRat(Fraction(1, 3), -1)
    assert a + b == GRat(Fraction(4, 3), 1)
    assert a * GRat.i() == GRat(-2, 1)
    assert (a / a).is_one()
    assert a.conj() == GRat(1, -2)
    assert (GRat.i() * GRat.i()) == GRat(-1)


def test_grat_str():
    assert str(GRat(3, 0)) == "3"
    assert str(GRat(0, 1)) == "i"
    assert str(GRat(0, -1)) == "-i"
    assert str(GRat(0, Fraction(2, 3))) == "2/3*i"
    assert str(GRat(1, 1)) == "1+i"
    assert str(GRat(Fraction(-1, 2), -2)) == "-1/2-2*i"


def test_grat_zero_division():
    with pytest.raises(ZeroDivisionError):
        GRat.zero().inv()


# ---------------------------------------------------------------------------
# Scalar ring


def test_scalar_ring_ops():
    x = Scalar.sym(param_key("x"))
    y = Scalar.sym(param_key("y"))
    p = (x + y) * (x - y)
    assert p == x * x - y * y
    assert (x + y) ** 2 == x * x + 2 * x * y + y * y
    assert (p - p).is_zero()
    assert (x * y).degree() == 2


def test_scalar_serialize_golden():
    tau = func_key("tau", cx=True)
    s = Scalar.one() + Scalar.sym(tau) ** 2 - Scalar.sym(tau._replace(jets=(1,)))
    assert s.serialize() == "1+tau^2-tau;1"
    assert s.conj().serialize() == "1+~tau^2-~tau;1"
    t = Scalar.sym(tau).scale(GRat.i()) + Scalar.const(GRat(0, -2))
    assert t.serialize() == "(-2*i)+(i)*tau"


def test_scalar_conj_involution():
    tau = Scalar.sym(func_key("tau", cx=True))
    f = Scalar.sym(func_key("f"))
    s = tau * f + Scalar.const(GRat(1, 1))
    assert s.conj().conj() == s
    assert f.conj() == f


def test_scalar_specialize():
    tau = func_key("tau", cx=True)
    s = Scalar.sym(tau) * Scalar.sym(tau.conj_key()) + Scalar.sym(tau._replace(jets=(2,)))
    out = s.specialize({"tau": GRat.i()})
    # tau*~tau -> i * (-i) = 1 ; the jet dies
    assert out == Scalar.one()


def test_scalar_eval_requires_full_point():
    f = Scalar.sym(func_key("f"))
    with pytest.raises(ValueError):
        f.eval_at({})
    assert f.eval_at({"f": GRat(5)}) == GRat(5)


def test_scalar_partition():
    u = func_key("u")
    f = func_key("f")
    s = Scalar.sym(u) * Scalar.sym(f) + Scalar.sym(u._replace(jets=(1,))) * 2 + Scalar.sym(f)
    parts = s.partition({"u"})
    assert parts[(u,)] == Scalar.sym(f)
    assert parts[(u._replace(jets=(1,)),)] == Scalar.const(2)
    assert parts[()] == Scalar.sym(f)


def test_exact_div():
    x = Scalar.sym(param_key("x"))
    y = Scalar.sym(param_key("y"))
    assert (x * x - y * y).exact_div(x + y) == x - y
    assert (x * x + y).exact_div(x + y) is None
    assert (x * y).exact_div(Scalar.const(2)) == x * y * GRat(Fraction(1, 2))
    with pytest.raises(ZeroDivisionError):
        x.exact_div(Scalar.zero())


def test_content_and_monic():
    x = Scalar.sym(param_key("x"))
    s = x * GRat(Fraction(2, 3)) + Scalar.const(Fraction(4, 3))
    assert s.content() == Fraction(2, 3)
    m = s.monic_canonical()
    assert m == x * GRat(Fraction(1, 2)) + Scalar.one()


# ---------------------------------------------------------------------------
# Frame structure and jets


def test_jacobi_holds_for_builtins():
    assert _s3().jacobi_violations() == []
    assert _heis().jacobi_violations() == []
    assert LieStructure(4).jacobi_violations() == []


def test_jacobi_detects_bad_structure():
    # d(a1) = a1*a2 + a3*a4 style structure failing Jacobi in dim 5
    bad = LieStructure(5, {(1, 2, 3): 1, (2, 4, 5): 1, (3, 1, 4): 1})
    assert bad.jacobi_violations() != []


def test_structure_validation():
    with pytest.raises(ValueError):
        LieStructure(3, {(1, 3, 2): 1})
    with pytest.raises(ValueError):
        LieStructure(3, {(4, 1, 2): 1})


def test_reduce_jets_sphere():
    lie = _s3()
    # L3 L2 = L2 L3 + L_{[X3,X2]} = L2 L3 + L1  (bracket [X2,X3] = -X1)
    assert dict((j, str(c)) for c, j in lie.reduce_jets((3, 2))) == {
        (2, 3): "1", (1,): "1"}
    assert dict((j, str(c)) for c, j in lie.reduce_jets((1, 3, 2))) == {
        (1, 2, 3): "1", (1, 1): "1"}
    assert lie.reduce_jets((1, 1, 2)) == ((GRat.one(), (1, 1, 2)),)


def test_frame_commutator_matches_bracket():
    lie = _s3()
    f = Scalar.sym(func_key("f"))
    for (a, b, k, sign) in [(1, 2, 3, -1), (2, 3, 1, -1), (3, 1, 2, -1)]:
        lhs = (frame_derive(frame_derive(f, b, lie), a, lie)
               - frame_derive(frame_derive(f, a, lie), b, lie))
        want = Scalar.sym(func_key("f", jets=(k,))).scale(sign)
        assert lhs == want, (a, b)


def test_frame_derive_leibniz():
    lie = _s3()
    f = Scalar.sym(func_key("f"))
    g = Scalar.sym(func_key("g"))
    lhs = frame_derive(f * g, 2, lie)
    rhs = frame_derive(f, 2, lie) * g + f * frame_derive(g, 2, lie)
    assert lhs == rhs


def test_frame_derive_kills_params():
    lie = _s3()
    t = Scalar.sym(param_key("t", cx=True))
    assert frame_derive(t + Scalar.const(3), 1, lie).is_zero()


def test_frame_derive_bar_symbol():
    lie = _s3()
    tau = Scalar.sym(func_key("tau", cx=True))
    # conjugation commutes with real frame derivatives
    assert frame_derive(tau.conj(), 2, lie) == frame_derive(tau, 2, lie).conj()


def test_deep_jet_reduction_consistency():
    # reducing in any application order gives the same normal form
    lie = _s3()
    f = Scalar.sym(func_key("f"))
    a = frame_derive(frame_derive(frame_derive(f, 3, lie), 2, lie), 1, lie)
    b = frame_derive(frame_derive(frame_derive(f, 3, lie), 1, lie), 2, lie)
    c = (frame_derive(frame_derive(frame_derive(f, 1, lie), 3, lie), 2, lie))
    # a - b = L1 L2 L3 f - L2 L1 L3 f = L_{[X1,X2]} L3 f = -L3' applied outermost
    diff = a - b
    want = -frame_derive(frame_derive(f, 3, lie), 3, lie)
    assert diff == want
    assert not c.is_zero()


# ---------------------------------------------------------------------------
# SFrac


def test_sfrac_basics():
    x = Scalar.sym(param_key("x"))
    y = Scalar.sym(param_key("y"))
    q = SFrac(x * x - y * y) / SFrac(x + y)
    assert q.is_polynomial()
    assert q == SFrac(x - y)
    r = SFrac(Scalar.one(), x + y)
    assert (r * SFrac(x + y)) == SFrac.one()
    assert (r - r).is_zero()
    assert r + r == SFrac(Scalar.const(2), x + y)


def test_sfrac_eq_cross_multiplication():
    x = Scalar.sym(param_key("x"))
    y = Scalar.sym(param_key("y"))
    a = SFrac(x, y)
    b = SFrac(x * x, x * y)
    assert a == b


def test_sfrac_specialize_guard():
    x = Scalar.sym(param_key("x"))
    f = SFrac(Scalar.one(), x)
    with pytest.raises(ZeroDivisionError):
        f.specialize({"x": GRat.zero()})
    assert f.specialize({"x": GRat(2)}) == SFrac.const(Fraction(1, 2))


def test_sfrac_derive_quotient_rule():
    lie = _s3()
    f = Scalar.sym(func_key("f"))
    g = Scalar.sym(func_key("g"))
    q = SFrac(f, g)
    d = sfrac_derive(q, 1, lie)
    f1 = Scalar.sym(func_key("f", jets=(1,)))
    g1 = Scalar.sym(func_key("g", jets=(1,)))
    assert d == SFrac(f1 * g - f * g1, g * g)


# ---------------------------------------------------------------------------
# Constraint ideals


def _crf_gen():
    tau = func_key("tau", cx=True)
    return (Scalar.one() + Scalar.sym(tau) ** 2
            - Scalar.sym(tau._replace(jets=(1,))))


def test_ideal_normalization():
    g = _crf_gen()
    ideal = ConstraintIdeal([g.scale(2), g.conj(), g])
    assert ideal.serialized() == ("1+tau^2-tau;1",)
    assert ideal.verdict() == "conditional"


def test_ideal_divisibility_prune():
    x = Scalar.sym(param_key("x"))
    y = Scalar.sym(param_key("y"))
    ideal = ConstraintIdeal([x + y, (x + y) * x])
    assert ideal.serialized() == ("x+y",)


def test_ideal_verdicts():
    assert ConstraintIdeal([]).verdict() == "holds"
    assert ConstraintIdeal([Scalar.zero()]).verdict() == "holds"
    assert ConstraintIdeal([Scalar.const(GRat(0, 3))]).verdict() == "fails"
    assert ConstraintIdeal.impossible().serialized() == ("1",)
    x = Scalar.sym(param_key("x"))
    mixed = ConstraintIdeal([x, Scalar.const(2)])
    assert mixed.verdict() == "fails"
    assert mixed.serialized() == ("1",)


def test_ideal_specialize_verdict():
    ideal = ConstraintIdeal([_crf_gen()])
    assert ideal.specialize_verdict({"tau": GRat.i()}) == "holds"
    assert ideal.specialize_verdict({"tau": GRat(0, -1)}) == "holds"
    assert ideal.specialize_verdict({"tau": GRat(2)}) == "fails"


def test_ideal_merge_and_equality():
    g = _crf_gen()
    a = ConstraintIdeal([g])
    b = ConstraintIdeal([g.conj()])
    assert a == b
    assert a.merged(ConstraintIdeal.trivial()) == a


def test_normalized_assumption():
    x = Scalar.sym(param_key("x"))
    assert normalized_assumption(Scalar.const(5)) is None
    assert normalized_assumption(x.scale(3)) == "x"
    with pytest.raises(ValueError):
        normalized_assumption(Scalar.zero())


def test_split_sfrac_constraints():
    x = Scalar.sym(param_key("x"))
    y = Scalar.sym(param_key("y"))
    ideal, assume = split_sfrac_constraints([SFrac(x, y)])
    assert ideal.serialized() == ("x",)
    assert assume == {"y"}


# ---------------------------------------------------------------------------
# Parser


def test_parse_scalar_roundtrip():
    reg = {"tau": func_key("tau", cx=True), "f": func_key("f"),
           "k": param_key("k")}
    lie = _s3()
    v = parse_scalar("1+tau^2-tau;1", reg, lie)
    assert v == SFrac(_crf_gen())
    assert parse_scalar("(1+i)*f/k", reg, lie) == (
        SFrac(Scalar.sym(func_key("f")).scale(GRat(1, 1)), Scalar.sym(param_key("k"))))
    assert parse_scalar("~tau", reg, lie) == SFrac(
        Scalar.sym(func_key("tau", cx=True, bar=True)))
    assert parse_scalar("f;2,1", reg, lie) == SFrac(
        Scalar.sym(func_key("f", jets=(1, 2))) + Scalar.sym(func_key("f", jets=(3,))))
    assert parse_scalar("-2*i*k", reg, lie) == SFrac(
        Scalar.sym(param_key("k")).scale(GRat(0, -2)))


def test_parse_scalar_rejections():
    reg = {"f": func_key("f"), "k": param_key("k")}
    with pytest.raises(ValueError):
        parse_scalar("unknown", reg, None)
    with pytest.raises(ValueError):
        parse_scalar("~f", reg, None)        # real symbol has no conjugate marker
    with pytest.raises(ValueError):
        parse_scalar("k;1", reg, None)       # parameters carry no jets
    with pytest.raises(ValueError):
        parse_scalar("f;2,1", reg, None)     # descent needs frame structure
    with pytest.raises(ValueError):
        parse_scalar("f$", reg, None)
    with pytest.raises(ValueError):
        parse_scalar("f f", reg, None)
