"""Boolean projection, rewriting and formula tests."""

import itertools
import math
import random

import pytest

from cdlsem import EvalError, FormulaError, ValidationError
from cdlsem.model import Model
from cdlsem.parser import parse_goal_expr as pg
from cdlsem.prop import (
    BBin,
    BCard,
    BConst,
    BIdent,
    BNot,
    PropConfig,
    bool_to_source,
    build_formula,
    choose,
    dump_prop_config,
    enumerate_prop_configs,
    eval_p,
    formula_to_text,
    impls_syntactic,
    load_prop_config,
    project,
    rewrite,
    validate_prop,
)
from cdlsem.semantics import (
    Configuration,
    enumerate_configurations,
    validate_configuration,
)

from conftest import mk_model


IFACE_MODEL = mk_model(
    """
    cdl_interface IFACE {}
    cdl_option IMP_A { implements IFACE }
    cdl_option IMP_B { implements IFACE }
    cdl_option IMP_C { implements IFACE }
    cdl_option PLAIN { flavor booldata }
    """
)


def valuations(names):
    for bits in itertools.product((0, 1), repeat=len(names)):
        yield dict(zip(names, bits))


def sat_set(expr, names):
    """Satisfying valuations of a rewritten expression, as bit tuples."""
    out = set()
    for val in valuations(names):
        if eval_p(expr, PropConfig(val)):
            out.add(tuple(val[n] for n in names))
    return out


def def_set(names, predicate):
    return {
        tuple(val[n] for n in names)
        for val in valuations(names)
        if predicate(val)
    }


# ---------------------------------------------------------------------------
# PropConfig and projection


def test_propconfig_root_fixed():
    cp = PropConfig({"A": 1})
    from cdlsem.model import TOP

    assert cp[TOP] == 1
    with pytest.raises(ValueError):
        PropConfig({TOP: 0})


def test_project_by_flavor():
    m = mk_model(
        "cdl_option NB { flavor bool }\n"
        "cdl_option NN { flavor none }\n"
        "cdl_option ND { flavor data }\n"
        "cdl_option NBD { flavor booldata }"
    )
    c = Configuration(
        {
            "NB": (1, 1, "0"),
            "NN": (1, 0, ""),
            "ND": (1, 1, "0"),
            "NBD": (0, 0, "7"),
            "GHOST": (1, 1, "5"),
        }
    )
    cp = project(c, m)
    assert cp["NB"] == 1  # state only
    assert cp["NN"] == 1
    assert cp["ND"] == 0  # zero data
    assert cp["NBD"] == 0  # disabled
    assert cp["GHOST"] == 0  # not in the model


def test_project_nonzero_data():
    m = mk_model("cdl_option ND { flavor data }")
    assert project(Configuration({"ND": (1, 1, "2")}), m)["ND"] == 1


# ---------------------------------------------------------------------------
# rewrite, rule by rule, against brute-forced definitions


def test_rewrite_loaded_ident():
    e = rewrite(pg("PLAIN"), IFACE_MODEL)
    assert sat_set(e, ["PLAIN"]) == def_set(["PLAIN"], lambda v: v["PLAIN"] == 1)


def test_rewrite_unloaded_ident_is_false():
    assert rewrite(pg("GHOST"), IFACE_MODEL) == BConst(0)


@pytest.mark.parametrize("text,value", [("0", 0), ("1", 1), ('"abc"', 1), ('""', 0)])
def test_rewrite_const(text, value):
    assert rewrite(pg(text), IFACE_MODEL) == BConst(value)


def test_rewrite_negated_ident():
    e = rewrite(pg("!PLAIN"), IFACE_MODEL)
    assert sat_set(e, ["PLAIN"]) == def_set(["PLAIN"], lambda v: v["PLAIN"] == 0)


def test_rewrite_negated_unloaded():
    assert rewrite(pg("!GHOST"), IFACE_MODEL) == BConst(1)


def test_rewrite_eq_nonzero_const():
    e = rewrite(pg("PLAIN == 1"), IFACE_MODEL)
    assert sat_set(e, ["PLAIN"]) == def_set(["PLAIN"], lambda v: v["PLAIN"] == 1)
    assert rewrite(pg('PLAIN == "text"'), IFACE_MODEL) == BIdent("PLAIN")


def test_rewrite_eq_zero_const():
    e = rewrite(pg("PLAIN == 0"), IFACE_MODEL)
    assert sat_set(e, ["PLAIN"]) == def_set(["PLAIN"], lambda v: v["PLAIN"] == 0)


def test_rewrite_neq_zero():
    assert rewrite(pg("PLAIN != 0"), IFACE_MODEL) == BIdent("PLAIN")
    assert rewrite(pg("PLAIN != 2"), IFACE_MODEL) is None


def test_rewrite_gt_nonnegative_const():
    assert rewrite(pg("PLAIN > 0"), IFACE_MODEL) == BIdent("PLAIN")
    assert rewrite(pg("PLAIN > 7"), IFACE_MODEL) == BIdent("PLAIN")


def test_rewrite_gt_other_consts_dropped():
    assert rewrite(pg("PLAIN > -1"), IFACE_MODEL) == BConst(1)
    assert rewrite(pg("PLAIN > 1.5"), IFACE_MODEL) == BConst(1)
    assert rewrite(pg('PLAIN > "x"'), IFACE_MODEL) == BConst(1)


def test_rewrite_flipped_comparison():
    assert rewrite(pg("0 < PLAIN"), IFACE_MODEL) == BIdent("PLAIN")
    assert rewrite(pg("1 == PLAIN"), IFACE_MODEL) == BIdent("PLAIN")


def test_rewrite_is_substr():
    assert rewrite(pg('is_substr(PLAIN, "x")'), IFACE_MODEL) == BIdent("PLAIN")
    assert rewrite(pg('is_substr("x", PLAIN)'), IFACE_MODEL) is None


@pytest.mark.parametrize("op", ["||", "&&", "implies", "eqv"])
def test_rewrite_binary_connectives(op):
    e = rewrite(pg(f"IMP_A {op} IMP_B"), IFACE_MODEL)
    table = {
        "||": lambda a, b: a | b,
        "&&": lambda a, b: a & b,
        "implies": lambda a, b: (1 - a) | b,
        "eqv": lambda a, b: int(a == b),
    }[op]
    assert sat_set(e, ["IMP_A", "IMP_B"]) == def_set(
        ["IMP_A", "IMP_B"], lambda v: table(v["IMP_A"], v["IMP_B"]) == 1
    )


def test_rewrite_conditional():
    e = rewrite(pg("PLAIN ? IMP_A : IMP_B"), IFACE_MODEL)
    names = ["PLAIN", "IMP_A", "IMP_B"]
    assert sat_set(e, names) == def_set(
        names,
        lambda v: (v["IMP_A"] if v["PLAIN"] else v["IMP_B"]) == 1,
    )


def test_rewrite_absent_cases():
    assert rewrite(pg("PLAIN + 1"), IFACE_MODEL) is None
    assert rewrite(pg("IMP_A xor IMP_B"), IFACE_MODEL) is None
    assert rewrite(pg("!(IMP_A && IMP_B)"), IFACE_MODEL) is None
    assert rewrite(pg("PLAIN < 5"), IFACE_MODEL) is None
    assert rewrite(pg("PLAIN >= 1"), IFACE_MODEL) is None
    assert rewrite(pg("PLAIN == IMP_A"), IFACE_MODEL) is None
    assert rewrite(pg("get_data(PLAIN)"), IFACE_MODEL) is None
    # one absent subterm poisons the whole connective
    assert rewrite(pg("IMP_A && (PLAIN + 1)"), IFACE_MODEL) is None


IMPL_NAMES = ["IMP_A", "IMP_B", "IMP_C"]


def iface_def(predicate):
    names = ["IFACE"] + IMPL_NAMES
    return def_set(names, predicate)


def iface_sat(text):
    e = rewrite(pg(text), IFACE_MODEL)
    return sat_set(e, ["IFACE"] + IMPL_NAMES)


def count(v):
    return sum(v[n] for n in IMPL_NAMES)


def test_rewrite_interface_eq0():
    assert iface_sat("IFACE == 0") == iface_def(
        lambda v: v["IFACE"] == 0 and count(v) == 0
    )


def test_rewrite_interface_gt0():
    assert iface_sat("IFACE > 0") == iface_def(
        lambda v: v["IFACE"] == 1 and count(v) > 0
    )


def test_rewrite_interface_neq0_matches_gt0():
    assert iface_sat("IFACE != 0") == iface_sat("IFACE > 0")


def test_rewrite_interface_eq1_exactly_one():
    assert iface_sat("IFACE == 1") == iface_def(
        lambda v: v["IFACE"] == 1 and count(v) == 1
    )


def test_rewrite_interface_ge_const():
    for k in (0, 1, 2, 3):
        assert iface_sat(f"IFACE >= {k}") == iface_def(
            lambda v, k=k: v["IFACE"] == 1 and count(v) >= k
        ), k


def test_rewrite_interface_gt_const():
    for k in (1, 2, 3):
        assert iface_sat(f"IFACE > {k}") == iface_def(
            lambda v, k=k: v["IFACE"] == 1 and count(v) > k
        ), k


def test_rewrite_interface_over_capacity_unsatisfiable():
    assert iface_sat("IFACE >= 4") == set()
    assert iface_sat("IFACE > 3") == set()


def test_rewrite_is_deterministic():
    for text in ("IFACE >= 2", "PLAIN ? IMP_A : IMP_B", "PLAIN + 1"):
        assert rewrite(pg(text), IFACE_MODEL) == rewrite(pg(text), IFACE_MODEL)


def test_impls_syntactic_ignores_configuration():
    assert impls_syntactic("IFACE", IFACE_MODEL) == {"IMP_A", "IMP_B", "IMP_C"}
    assert impls_syntactic("NOBODY", IFACE_MODEL) == frozenset()


def test_impls_syntactic_interface_implementor():
    m = mk_model("cdl_interface I {}\ncdl_interface J { implements I }")
    assert impls_syntactic("I", m) == {"J"}


# ---------------------------------------------------------------------------
# choose


def test_choose_exactly_one_brute():
    e = choose(["a", "b"], 1, 1)
    assert sat_set(e, ["a", "b"]) == {(1, 0), (0, 1)}


def test_choose_tautology_and_unsat():
    assert choose(["a", "b"], 0, 2) == BConst(1)
    assert choose(["a"], 2, 2) == BConst(0)


def test_choose_rejects_bad_bounds():
    with pytest.raises(ValueError):
        choose(["a", "b", "c"], 2, 1)
    with pytest.raises(ValueError):
        choose(["a"], -1, 1)


def test_choose_lower_bound_beyond_size_is_false():
    assert choose(["a"], 2, 1) == BConst(0)
    assert choose([], 1, 1) == BConst(0)


def test_choose_counts_binomials():
    for n in range(0, 7):
        names = [f"v{i}" for i in range(n)]
        for lo in range(0, n + 1):
            for hi in range(lo, n + 1):
                got = len(sat_set(choose(names, lo, hi), names))
                want = sum(math.comb(n, k) for k in range(lo, hi + 1))
                assert got == want, (n, lo, hi)


# ---------------------------------------------------------------------------
# eval_p


def test_eval_p_basics():
    cp = PropConfig({"a": 1, "b": 0})
    assert eval_p(BConst(1), cp) == 1
    assert eval_p(BBin("implies", BIdent("b"), BIdent("a")), cp) == 1
    assert eval_p(BBin("implies", BIdent("a"), BIdent("b")), cp) == 0
    assert eval_p(BBin("eqv", BIdent("a"), BIdent("b")), cp) == 0
    assert eval_p(BNot(BIdent("b")), cp) == 1
    assert eval_p(BCard(("a", "b"), 1, 1), cp) == 1


def test_eval_p_unknown_id():
    with pytest.raises(EvalError):
        eval_p(BIdent("nope"), PropConfig({}))


# ---------------------------------------------------------------------------
# build_formula / validate_prop


def test_formula_hierarchy_constraint():
    m = mk_model("cdl_component C { cdl_option A {} }")
    text = formula_to_text(build_formula(m))
    assert "[node:A] A implies C" in text


def test_formula_mandatory_data():
    m = mk_model("cdl_option D { flavor data }")
    assert "[flavor:D] D" in formula_to_text(build_formula(m))


def test_formula_empty_model():
    assert formula_to_text(build_formula(mk_model(""))) == ""


def test_formula_unloaded_locked_false():
    m = mk_model("cdl_option A { requires GHOST }")
    assert "[unloaded:GHOST] !GHOST" in formula_to_text(build_formula(m))


def test_formula_interface_mirrors_implementors():
    text = formula_to_text(build_formula(IFACE_MODEL))
    assert "[interface:IFACE] IFACE eqv IMP_A || IMP_B || IMP_C" in text


def test_formula_interface_without_implementors_is_negation():
    m = mk_model("cdl_interface LONELY {}")
    cp = PropConfig({"LONELY": 1})
    assert not validate_prop(m, cp).accepted
    assert validate_prop(m, PropConfig({"LONELY": 0})).accepted


def test_formula_calculated_biconditional():
    m = mk_model(
        "cdl_option G { flavor booldata }\n"
        "cdl_option K { flavor bool\n calculated G }"
    )
    assert validate_prop(m, PropConfig({"G": 1, "K": 1})).accepted
    assert validate_prop(m, PropConfig({"G": 0, "K": 0})).accepted
    assert not validate_prop(m, PropConfig({"G": 1, "K": 0})).accepted


def test_formula_calculated_unrewritable_contributes_nothing():
    m = mk_model("cdl_option K { flavor bool\n calculated { GHOST + 1 } }")
    families = {c.family for c in build_formula(m).constraints}
    assert "calculated" not in families


def test_formula_requires_well_formedness():
    m = mk_model("cdl_interface I { flavor none }")
    with pytest.raises(FormulaError):
        build_formula(m)


def test_formula_invariant_under_node_reordering():
    m = mk_model("cdl_component C { cdl_option A { requires X } }\ncdl_option X {}")
    nodes = list(m)
    rng = random.Random(5)
    for _ in range(5):
        rng.shuffle(nodes)
        again = build_formula(Model(nodes))
        assert set(again.constraints) == set(build_formula(m).constraints)
        assert again.variables == build_formula(m).variables


def test_validate_prop_examples():
    m = mk_model("cdl_component C { cdl_option A {} }")
    assert validate_prop(m, PropConfig({"A": 0, "C": 0})).accepted
    rep = validate_prop(m, PropConfig({"A": 1, "C": 0}))
    assert [(f.node, f.family) for f in rep.failures] == [("A", "node")]


def test_validate_prop_unloaded():
    m = mk_model("cdl_option A { requires GHOST }")
    rep = validate_prop(m, PropConfig({"A": 0, "GHOST": 1}))
    assert [(f.node, f.family) for f in rep.failures] == [("GHOST", "unloaded")]


def test_validate_prop_incomplete():
    m = mk_model("cdl_option A {}")
    with pytest.raises(ValidationError):
        validate_prop(m, PropConfig({}))


def test_enumerate_prop_configs_matches_validation():
    m = mk_model("cdl_component C { cdl_option A { requires X } }\ncdl_option X {}")
    ids = sorted(m.universe())
    expected = {
        PropConfig(zip(ids, bits))
        for bits in itertools.product((0, 1), repeat=len(ids))
        if validate_prop(m, PropConfig(zip(ids, bits))).accepted
    }
    assert set(enumerate_prop_configs(m)) == expected


# ---------------------------------------------------------------------------
# under-approximation: spot checks plus documented boundaries


@pytest.mark.parametrize(
    "src",
    [
        "cdl_component C { cdl_option A { requires X } }\ncdl_option X {}",
        "cdl_interface I {}\ncdl_option A { implements I }\n"
        "cdl_option U { requires { I > 0 } }",
        "cdl_option M { flavor data\n legal_values 1 2 }\n"
        "cdl_option U { requires { M != 0 } }",
    ],
)
def test_projection_soundness_spot(src):
    m = mk_model(src)
    for c in enumerate_configurations(m, ["0", "1", "2"]):
        assert validate_prop(m, project(c, m)).accepted, c


def test_boundary_zero_data_feature_projects_outside():
    # Known approximation boundary: a data feature whose value may be the
    # number zero projects to false while the Boolean side requires it
    # true.  The soundness corpus therefore guards data features with
    # nonzero legal_values.
    m = mk_model("cdl_option D { flavor data }")
    c = Configuration({"D": (1, 1, "0")})
    assert validate_configuration(m, c).accepted
    assert not validate_prop(m, project(c, m)).accepted


def test_boundary_negated_bool_with_free_data():
    # A bool feature's data value is unconstrained, so "!X" can hold in the
    # full semantics while the projection keeps X true.  The corpus only
    # negates data-carrying flavors, whose projection tracks the value.
    m = mk_model("cdl_option X { flavor bool }\ncdl_option U { requires !X }")
    c = Configuration({"X": (1, 1, "0"), "U": (1, 1, "1")})
    assert validate_configuration(m, c).accepted
    assert not validate_prop(m, project(c, m)).accepted


def test_boundary_zero_data_implementor():
    # An enabled booldata implementor with zero data counts for the
    # interface but projects to false; bool implementors avoid this.
    m = mk_model(
        "cdl_interface I { flavor data }\n"
        "cdl_option A { flavor booldata\n implements I }"
    )
    c = Configuration({"I": (1, 1, "1"), "A": (1, 1, "0")})
    assert validate_configuration(m, c).accepted
    assert not validate_prop(m, project(c, m)).accepted


# ---------------------------------------------------------------------------
# files and rendering


def test_prop_config_tsv_round_trip():
    cp = PropConfig({"A": 1, "B": 0})
    again, warnings = load_prop_config(dump_prop_config(cp))
    assert again == cp and warnings == []


def test_load_prop_config_defaults_and_strict():
    got, warnings = load_prop_config("A\t1\n", universe=["A", "B"])
    assert got == PropConfig({"A": 1, "B": 0}) and len(warnings) == 1
    with pytest.raises(ValidationError):
        load_prop_config("A\t1\n", universe=["A", "B"], strict=True)


def test_bool_to_source_minimal_parens():
    e = BBin("implies", BIdent("a"), BBin("&&", BIdent("b"), BNot(BIdent("c"))))
    assert bool_to_source(e) == "a implies b && !c"
    e = BBin("&&", BBin("||", BIdent("a"), BIdent("b")), BIdent("c"))
    assert bool_to_source(e) == "(a || b) && c"
