"""Parser tests: expressions, lists, model syntax, robustness."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from cdlsem import (
    Arith,
    BitNot,
    Call,
    Cmp,
    Cond,
    Const,
    Ident,
    ListExpr,
    Logic,
    Not,
    Range,
    Single,
    has_errors,
    list_to_source,
    parse_goal_expr,
    parse_goal_exprs,
    parse_list_expr,
    parse_model,
    to_source,
)
from cdlsem.model import Flavor, Kind
from cdlsem.parser import ParseError


# ---------------------------------------------------------------------------
# goal expressions


def test_or_binds_looser_than_and():
    assert parse_goal_expr("A && B || C") == Logic(
        "||", Logic("&&", Ident("A"), Ident("B")), Ident("C")
    )


def test_conditional_lowest():
    assert parse_goal_expr("X == 1 ? Y : Z") == Cond(
        Cmp("==", Ident("X"), Const("1")), Ident("Y"), Ident("Z")
    )


def test_plain_constant():
    assert parse_goal_expr("42") == Const("42")


@pytest.mark.parametrize(
    "text,expected",
    [
        # one case per rung of the precedence ladder, lowest to highest
        ("a implies b eqv c", Logic("eqv", Logic("implies", Ident("a"), Ident("b")), Ident("c"))),
        ("a implies b ? c : d", Cond(Logic("implies", Ident("a"), Ident("b")), Ident("c"), Ident("d"))),
        ("a || b implies c", Logic("implies", Logic("||", Ident("a"), Ident("b")), Ident("c"))),
        ("a xor b && c", Logic("&&", Logic("xor", Ident("a"), Ident("b")), Ident("c"))),
        ("a | b xor c", Logic("xor", Arith("|", Ident("a"), Ident("b")), Ident("c"))),
        ("a ^ b | c", Arith("|", Arith("^", Ident("a"), Ident("b")), Ident("c"))),
        ("a & b ^ c", Arith("^", Arith("&", Ident("a"), Ident("b")), Ident("c"))),
        ("a == b & c", Arith("&", Cmp("==", Ident("a"), Ident("b")), Ident("c"))),
        ("a < b == c", Cmp("==", Cmp("<", Ident("a"), Ident("b")), Ident("c"))),
        ("a << b < c", Cmp("<", Arith("<<", Ident("a"), Ident("b")), Ident("c"))),
        ("a + b << c", Arith("<<", Arith("+", Ident("a"), Ident("b")), Ident("c"))),
        ("a * b + c", Arith("+", Arith("*", Ident("a"), Ident("b")), Ident("c"))),
        ("!a && b", Logic("&&", Not(Ident("a")), Ident("b"))),
        ("~a + b", Arith("+", BitNot(Ident("a")), Ident("b"))),
    ],
)
def test_precedence_ladder(text, expected):
    assert parse_goal_expr(text) == expected


def test_left_associativity():
    assert parse_goal_expr("a - b - c") == Arith(
        "-", Arith("-", Ident("a"), Ident("b")), Ident("c")
    )


def test_conditional_right_associative():
    assert parse_goal_expr("a ? b : c ? d : e") == Cond(
        Ident("a"), Ident("b"), Cond(Ident("c"), Ident("d"), Ident("e"))
    )


def test_parenthesized():
    assert parse_goal_expr("(a || b) && c") == Logic(
        "&&", Logic("||", Ident("a"), Ident("b")), Ident("c")
    )


def test_builtin_call():
    assert parse_goal_expr("is_substr(FLAGS, \"-g\")") == Call(
        "is_substr", (Ident("FLAGS"), Const("-g"))
    )


def test_signed_number_constants():
    assert parse_goal_expr("-5") == Const("-5")
    assert parse_goal_expr("-0x10") == Const("-0x10")
    assert parse_goal_expr("a - -5") == Arith("-", Ident("a"), Const("-5"))


def test_string_escapes():
    assert parse_goal_expr('"a\\tb\\n\\"q\\\\"') == Const('a\tb\n"q\\')


@pytest.mark.parametrize(
    "text",
    ["a &&", "&& a", "nosuch(a)", "is_substr(a)", "is_loaded(a, b)",
     "(a", "a ? b", "a ~", "", "5 $ 3", "implies", "a ? b : "],
)
def test_goal_errors(text):
    with pytest.raises(ParseError):
        parse_goal_expr(text)


def test_trailing_tokens_rejected():
    with pytest.raises(ParseError):
        parse_goal_expr("a b")
    assert parse_goal_exprs("a b") == [Ident("a"), Ident("b")]


def test_deep_nesting_is_an_error_not_a_crash():
    text = "(" * 500 + "a" + ")" * 500
    with pytest.raises(ParseError):
        parse_goal_expr(text)


# ---------------------------------------------------------------------------
# list expressions


def test_list_values_and_range():
    assert parse_list_expr("1 2 4 to 16") == ListExpr(
        (
            Single(Const("1")),
            Single(Const("2")),
            Range(Const("4"), Const("16")),
        )
    )


def test_list_single_value():
    assert parse_list_expr("0") == ListExpr((Single(Const("0")),))


def test_list_empty_string_item():
    assert parse_list_expr('"" x') == ListExpr(
        (Single(Const("")), Single(Ident("x")))
    )


def test_list_negative_bounds():
    got = parse_list_expr("1 2 4 to CYGARC_MAXINT -1024 -20.0 to -10")
    assert got == ListExpr(
        (
            Single(Const("1")),
            Single(Const("2")),
            Range(Const("4"), Ident("CYGARC_MAXINT")),
            Single(Const("-1024")),
            Range(Const("-20.0"), Const("-10")),
        )
    )


def test_list_parenthesized_item_may_contain_spaces():
    got = parse_list_expr("(a + 1) 5")
    assert got == ListExpr(
        (Single(Arith("+", Ident("a"), Const("1"))), Single(Const("5")))
    )


def test_list_braced_item_is_literal():
    assert parse_list_expr("{RAM image} 5") == ListExpr(
        (Single(Const("RAM image")), Single(Const("5")))
    )


@pytest.mark.parametrize("text", ["", "1 to", "to 3", "1 to to", "4 to 5 to 6"])
def test_list_errors(text):
    with pytest.raises(ParseError):
        parse_list_expr(text)


# ---------------------------------------------------------------------------
# round-trip properties

_names = st.sampled_from(["A", "B", "CYGPKG_IO", "x1", "_tmp"])
_numbers = st.sampled_from(["0", "1", "42", "-7", "0x1F", "2.5", "-0.125", "1e3"])
_texts = st.text(
    alphabet=st.characters(
        codec="ascii", min_codepoint=32, max_codepoint=126
    ) | st.sampled_from("\n\t"),
    max_size=8,
)
_leaves = st.one_of(
    _names.map(Ident),
    _numbers.map(Const),
    _texts.map(Const),
)


def _exprs(children):
    binary = st.sampled_from(
        [(Logic, op) for op in ("||", "&&", "implies", "eqv", "xor")]
        + [(Arith, op) for op in ("+", "-", "*", "/", "%", "<<", ">>", "^", "&", "|")]
        + [(Cmp, op) for op in ("==", "!=", "<", ">", "<=", ">=")]
    )
    return st.one_of(
        st.tuples(binary, children, children).map(
            lambda t: t[0][0](t[0][1], t[1], t[2])
        ),
        children.map(Not),
        children.map(BitNot),
        st.tuples(children, children, children).map(lambda t: Cond(*t)),
        st.tuples(_names, children).map(
            lambda t: Call("is_active", (Ident(t[0]),))
        ),
        st.tuples(children, children).map(
            lambda t: Call("version_cmp", (t[0], t[1]))
        ),
    )


goal_exprs = st.recursive(_leaves, _exprs, max_leaves=20)


@given(goal_exprs)
@settings(max_examples=300, deadline=None)
def test_goal_expr_round_trip(expr):
    assert parse_goal_expr(to_source(expr)) == expr


@given(
    st.lists(
        st.one_of(
            goal_exprs.map(Single),
            st.tuples(goal_exprs, goal_exprs).map(lambda t: Range(*t)),
        ),
        min_size=1,
        max_size=5,
    )
)
@settings(max_examples=200, deadline=None)
def test_list_expr_round_trip(items):
    lexpr = ListExpr(tuple(items))
    assert parse_list_expr(list_to_source(lexpr)) == lexpr


# ---------------------------------------------------------------------------
# model syntax


def test_single_option():
    nodes, diags = parse_model("cdl_option A { flavor bool }")
    assert not has_errors(diags)
    (a,) = nodes
    assert (a.name, a.kind, a.flavor, a.parent) == ("A", Kind.OPTION, Flavor.BOOL, None)


def test_bodyless_node_allowed():
    nodes, diags = parse_model("cdl_option A")
    assert not has_errors(diags) and nodes[0].name == "A"


def test_nesting_sets_parent():
    nodes, diags = parse_model("cdl_component C { cdl_option A {} }")
    assert not has_errors(diags)
    by_name = {n.name: n for n in nodes}
    assert by_name["A"].parent == "C"
    assert by_name["C"].parent is None


def test_empty_input():
    assert parse_model("") == ([], [])


def test_comments_and_semicolons():
    src = "# leading comment\ncdl_option A { flavor bool; requires B }\n"
    nodes, diags = parse_model(src)
    assert not has_errors(diags)
    assert nodes[0].flavor == Flavor.BOOL
    assert nodes[0].requires == [(Ident("B"),)]


def test_requires_enumeration_kept():
    nodes, _ = parse_model("cdl_option A { requires B C }")
    assert nodes[0].requires == [(Ident("B"), Ident("C"))]


def test_repeated_requires_stay_separate():
    nodes, _ = parse_model("cdl_option A { requires B\n requires C }")
    assert nodes[0].requires == [(Ident("B"),), (Ident("C"),)]


def test_line_continuation():
    nodes, diags = parse_model("cdl_option A { requires B && \\\n C }")
    assert not has_errors(diags)
    assert nodes[0].requires == [(Logic("&&", Ident("B"), Ident("C")),)]


def test_unknown_property_warns_and_is_kept():
    nodes, diags = parse_model('cdl_option A { description "text" }')
    assert not has_errors(diags)
    assert any(d.severity == "warning" for d in diags)
    assert nodes[0].annotations == {"description": ['"text"']}


def test_duplicate_flavor_is_error():
    _, diags = parse_model("cdl_option A { flavor bool\n flavor data }")
    assert has_errors(diags)


def test_unbalanced_brace():
    _, diags = parse_model("cdl_option A {")
    assert has_errors(diags)


def test_unknown_top_level_command():
    _, diags = parse_model("frobnicate A {}")
    assert has_errors(diags)


def test_malformed_expression_reported_with_location():
    _, diags = parse_model("cdl_option A {\n requires { B && }\n}", "f.cdl")
    errs = [d for d in diags if d.severity == "error"]
    assert errs and errs[0].span.file == "f.cdl" and errs[0].span.start_line == 2


def test_nesting_depth_matches_brace_depth():
    depth = 12
    src = ""
    for i in range(depth):
        src += f"cdl_component LVL{i} {{\n"
    src += "cdl_option LEAF {}\n" + "}\n" * depth
    nodes, diags = parse_model(src)
    assert not has_errors(diags)
    by_name = {n.name: n for n in nodes}
    hops = 0
    cur = by_name["LEAF"].parent
    while cur is not None:
        hops += 1
        cur = by_name[cur].parent
    assert hops == depth


def test_fuzz_never_raises_short():
    rng = random.Random(20240809)
    alphabet = "cdl_option{}\"\\#;\n\t ABC01&&||!?:()best_substr,"
    for _ in range(3000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        nodes, diags = parse_model(text)  # must not raise
        assert isinstance(nodes, list) and isinstance(diags, list)
