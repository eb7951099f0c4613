import pytest
from hypothesis import given

from jankov.algebra import HEYTING, HEYTING_NO_CONST, Signature
from jankov.terms import (
    App, Identity, ParseError, Var, apply_substitution, depth, element_variables, equiv, impl,
    join, meet, neg, one, parse, parse_identity, parse_term, rename_variables, subterms, to_text,
    translate, variables,
)

from strategies import terms

x, y, z = Var("x"), Var("y"), Var("z")


@given(terms())
def test_print_parse_roundtrip(t):
    assert parse_term(to_text(t)) == t


@given(terms(), terms())
def test_identity_roundtrip(s, t):
    e = Identity(s, t)
    assert parse(to_text(e)) == e


def test_precedence():
    assert parse("~x & y | z -> x") == impl(join(meet(neg(x), y), z), x)
    assert parse("x -> y -> z") == impl(x, impl(y, z))
    assert parse("x & y & z") == meet(meet(x, y), z)
    assert to_text(impl(impl(x, y), z)) == "(x -> y) -> z"


def test_biconditional_desugars():
    assert parse("x <-> y") == equiv(x, y)
    assert parse("x <-> y") == meet(impl(x, y), impl(y, x))


def test_zero_is_negated_one():
    assert parse("0") == neg(one())
    sig = Signature(list(HEYTING.ops) + [("zero", 0)])
    assert parse("0", sig) == App("zero", ())


def test_unicode_aliases():
    assert parse("¬¬x → x ≈ ⊤") == parse("~~x -> x = 1")


def test_bare_formula_means_equal_to_one():
    assert parse_identity("x | ~x") == Identity(join(x, neg(x)), one())
    assert translate(x) == Identity(x, one())


def test_call_syntax_for_other_operations():
    sig = Signature([("box", 1), ("meet", 2)])
    assert parse("box(x & y)", sig) == App("box", (meet(x, y),))
    with pytest.raises(ParseError):
        parse("dia(x)", sig)


def test_signature_is_enforced():
    with pytest.raises(ParseError):
        parse("1", HEYTING_NO_CONST)
    with pytest.raises(ValueError):
        translate(x, HEYTING_NO_CONST)


@pytest.mark.parametrize("text,pos", [("x &", 3), ("(x", 2), ("x $ y", 2), ("x = y = z", 6)])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.position == pos


def test_variables_in_order_of_occurrence():
    assert variables(parse("y -> x & y | z")) == ["y", "x", "z"]
    assert variables(parse_identity("z = x")) == ["z", "x"]


def test_subterms_children_first():
    t = parse("x & ~x")
    subs = subterms(t)
    assert subs[-1] == t
    assert subs.index(x) < subs.index(neg(x))
    assert len(subs) == 3


def test_depth():
    assert depth(x) == 0
    assert depth(parse("~(x & y)")) == 2


@given(terms(), terms(), terms())
def test_substitution_composes(t, a, b):
    # substituting in two steps through a fresh name equals one step
    s1 = apply_substitution({"x": Var("w")}, t)
    s2 = apply_substitution({"w": a, "y": b}, s1)
    assert s2 == apply_substitution({"x": a, "y": b}, t)


def test_rename_variables():
    assert rename_variables(parse("x -> y"), {"x": "y", "y": "x"}) == parse("y -> x")


def test_element_variables():
    assert element_variables(["0", "w", "1"], "x") == ["x_0", "x_w", "x_1"]
    assert element_variables(["[a,b]", "c"], "p") == ["p_0", "p_c"]


def test_bad_variable_name():
    with pytest.raises(ValueError):
        Var("1x")
