"""Boolean projection of models: rewriting, formulas, validation.

The Boolean semantics keeps one bit per feature.  Goal expressions are
translated by a partial rewrite function; whatever it cannot express is
dropped, loosening constraints so that every configuration accepted by
the full semantics stays accepted after projection (for the supported
constructs; see the docs on known boundaries).
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

from .errors import EvalError, FormulaError, OracleError, ValidationError
from .exprs import Call, Cmp, Cond, Const, GoalExpr, Ident, Logic, Not, to_source
from .model import TOP, Flavor, Kind, Model, check_well_formed
from .semantics import (
    Configuration,
    Failure,
    ValidationReport,
    parse_number,
    to_bool,
)

DEFAULT_PROP_BUDGET = 2_000_000


class BoolExpr:
    """Marker base class for Boolean expression nodes."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class BIdent(BoolExpr):
    name: str


@dataclass(frozen=True, slots=True)
class BConst(BoolExpr):
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValueError("Boolean constant must be 0 or 1")


@dataclass(frozen=True, slots=True)
class BNot(BoolExpr):
    child: BoolExpr


@dataclass(frozen=True, slots=True)
class BBin(BoolExpr):
    op: str  # || && implies eqv
    left: BoolExpr
    right: BoolExpr

    def __post_init__(self):
        if self.op not in ("||", "&&", "implies", "eqv"):
            raise ValueError(f"bad Boolean operator {self.op!r}")


@dataclass(frozen=True, slots=True)
class BAnd(BoolExpr):
    items: tuple[BoolExpr, ...]


@dataclass(frozen=True, slots=True)
class BOr(BoolExpr):
    items: tuple[BoolExpr, ...]


@dataclass(frozen=True, slots=True)
class BCard(BoolExpr):
    """Between ``at_least`` and ``at_most`` of the named features are true."""

    names: tuple[str, ...]
    at_least: int
    at_most: int


def bnot(e: BoolExpr) -> BoolExpr:
    if isinstance(e, BConst):
        return BConst(1 - e.value)
    if isinstance(e, BNot):
        return e.child
    return BNot(e)


def band(items) -> BoolExpr:
    flat: list[BoolExpr] = []
    for e in items:
        if isinstance(e, BConst):
            if e.value == 0:
                return BConst(0)
            continue
        flat.append(e)
    if not flat:
        return BConst(1)
    if len(flat) == 1:
        return flat[0]
    return BAnd(tuple(flat))


def bor(items) -> BoolExpr:
    flat: list[BoolExpr] = []
    for e in items:
        if isinstance(e, BConst):
            if e.value == 1:
                return BConst(1)
            continue
        flat.append(e)
    if not flat:
        return BConst(0)
    if len(flat) == 1:
        return flat[0]
    return BOr(tuple(flat))


def implies(a: BoolExpr, b: BoolExpr) -> BoolExpr:
    if isinstance(a, BConst):
        return b if a.value else BConst(1)
    if isinstance(b, BConst):
        return BConst(1) if b.value else bnot(a)
    return BBin("implies", a, b)


def eqv(a: BoolExpr, b: BoolExpr) -> BoolExpr:
    if isinstance(a, BConst):
        return b if a.value else bnot(b)
    if isinstance(b, BConst):
        return a if b.value else bnot(a)
    return BBin("eqv", a, b)


class PropConfig:
    """Immutable bit per feature; the synthetic root is fixed at 1."""

    __slots__ = ("_map", "_hash")

    def __init__(self, assignment=()):
        d: dict[str, int] = {}
        items = assignment.items() if hasattr(assignment, "items") else assignment
        for name, bit in items:
            if bit not in (0, 1):
                raise ValueError(f"bit of {name!r} must be 0 or 1")
            if name == TOP:
                if bit != 1:
                    raise ValueError("the root is fixed at 1")
                continue
            if name in d:
                raise ValueError(f"duplicate entry for {name!r}")
            d[name] = int(bit)
        d[TOP] = 1
        self._map = d
        self._hash = hash(frozenset(d.items()))

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(k for k in self._map if k != TOP)

    def __contains__(self, name: str) -> bool:
        return name in self._map

    def __getitem__(self, name: str) -> int:
        return self._map[name]

    def items(self):
        return sorted((k, v) for k, v in self._map.items() if k != TOP)

    def __eq__(self, other):
        return isinstance(other, PropConfig) and self._map == other._map

    def __hash__(self):
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.items())
        return f"PropConfig({inner})"


def project(c: Configuration, m: Model) -> PropConfig:
    """Collapse a full configuration to bits, by flavor.

    bool/none features keep their enabled state; booldata/data features
    are true when enabled with nonzero data.  Features not in the model
    project to 0.
    """
    bits: dict[str, int] = {}
    for name in c.domain:
        node = m.get(name)
        if node is None:
            bits[name] = 0
        elif node.flavor in (Flavor.BOOL, Flavor.NONE):
            bits[name] = c.state(name)
        else:
            bits[name] = c.state(name) & to_bool(c.data(name))
    return PropConfig(bits)


def eval_p(e: BoolExpr, cp: PropConfig) -> int:
    """Ordinary Boolean evaluation, plus counting for cardinality nodes."""
    if isinstance(e, BIdent):
        if e.name not in cp:
            raise EvalError("unknown-id", f"unknown feature {e.name!r}")
        return cp[e.name]
    if isinstance(e, BConst):
        return e.value
    if isinstance(e, BNot):
        return 1 - eval_p(e.child, cp)
    if isinstance(e, BBin):
        a = eval_p(e.left, cp)
        b = eval_p(e.right, cp)
        if e.op == "||":
            return a | b
        if e.op == "&&":
            return a & b
        if e.op == "implies":
            return (1 - a) | b
        return int(a == b)  # eqv
    if isinstance(e, BAnd):
        return int(all(eval_p(x, cp) for x in e.items))
    if isinstance(e, BOr):
        return int(any(eval_p(x, cp) for x in e.items))
    if isinstance(e, BCard):
        count = 0
        for name in e.names:
            if name not in cp:
                raise EvalError("unknown-id", f"unknown feature {name!r}")
            count += cp[name]
        return int(e.at_least <= count <= e.at_most)
    raise TypeError(f"not a Boolean expression: {e!r}")


def impls_syntactic(name: str, m: Model) -> frozenset[str]:
    """Names of all nodes declaring that they implement the interface."""
    return frozenset(n.name for n in m if name in n.implements)


def choose(ids, at_least: int, at_most: int) -> BoolExpr:
    """Between ``at_least`` and ``at_most`` of ``ids`` true simultaneously.

    A lower bound beyond the set size makes the formula false; that case
    is legal because cardinality rewrites ask for it directly.
    """
    if at_least < 0:
        raise ValueError("at_least must not be negative")
    names = tuple(sorted(ids))
    if at_least > len(names):
        return BConst(0)
    if at_most < at_least:
        raise ValueError("need at_least <= at_most")
    at_most = min(at_most, len(names))
    if at_least == 0 and at_most == len(names):
        return BConst(1)
    return BCard(names, at_least, at_most)


# ---------------------------------------------------------------------------
# goal expression rewriting

_FLIP = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


def rewrite(e: GoalExpr, m: Model) -> BoolExpr | None:
    """Partial translation into the Boolean fragment; None when undefined."""
    if isinstance(e, Ident):
        return BIdent(e.name) if e.name in m else BConst(0)
    if isinstance(e, Const):
        return BConst(to_bool(e.value))
    if isinstance(e, Not):
        # only negated identifiers are in the Boolean grammar; negating an
        # approximated subtree would be unsound
        if isinstance(e.child, Ident):
            return bnot(rewrite(e.child, m))
        return None
    if isinstance(e, Logic):
        if e.op == "xor":
            return None
        left = rewrite(e.left, m)
        right = rewrite(e.right, m)
        if left is None or right is None:
            return None
        return BBin(e.op, left, right)
    if isinstance(e, Cond):
        guard = rewrite(e.guard, m)
        then = rewrite(e.then, m)
        other = rewrite(e.other, m)
        if guard is None or then is None or other is None:
            return None
        return band([implies(guard, then), implies(bnot(guard), other)])
    if isinstance(e, Call):
        if (
            e.func == "is_substr"
            and isinstance(e.args[0], Ident)
            and isinstance(e.args[1], Const)
        ):
            return rewrite(e.args[0], m)
        return None
    if isinstance(e, Cmp):
        return _rewrite_cmp(e, m)
    return None


def _rewrite_cmp(e: Cmp, m: Model) -> BoolExpr | None:
    op, lhs, rhs = e.op, e.left, e.right
    if isinstance(lhs, Const) and isinstance(rhs, Ident):
        op, lhs, rhs = _FLIP[op], rhs, lhs
    if not (isinstance(lhs, Ident) and isinstance(rhs, Const)):
        return None
    name, const = lhs.name, rhs.value
    value = parse_number(const)
    node = m.get(name)
    if node is not None and node.kind == Kind.INTERFACE:
        result = _rewrite_interface_cmp(name, op, value, m)
        if result is not None:
            return result
    if op == "==":
        if to_bool(const) != 0:
            return rewrite(lhs, m)
        return bnot(rewrite(lhs, m))
    if op == "!=":
        if value == 0:
            return rewrite(lhs, m)  # negation of the == 0 case
        return None
    if op == ">":
        if isinstance(value, int) and value >= 0:
            return rewrite(lhs, m)
        return BConst(1)  # nothing useful to say; drop the constraint
    return None


def _rewrite_interface_cmp(name: str, op: str, value, m: Model) -> BoolExpr | None:
    ids = impls_syntactic(name, m)
    me = BIdent(name)
    any_impl = bor(BIdent(i) for i in sorted(ids))
    if op == "==" and value == 0:
        return band([bnot(me), *[bnot(BIdent(i)) for i in sorted(ids)]])
    if op == "==" and value == 1:
        return band([me, choose(ids, 1, 1)])
    if op == "!=" and value == 0:
        return band([me, any_impl])
    if op == ">" and isinstance(value, int):
        if value == 0:
            return band([me, any_impl])
        if value > 0:
            return band([me, choose(ids, value + 1, len(ids))])
        return None  # negative bound: fall back to the generic rule
    if op == ">=" and isinstance(value, int) and value >= 0:
        return band([me, choose(ids, value, len(ids))])
    return None


# ---------------------------------------------------------------------------
# whole-model translation


@dataclass(frozen=True, slots=True)
class Constraint:
    node: str
    family: str  # node|flavor|calculated|interface|unloaded
    expr: BoolExpr


@dataclass(frozen=True, slots=True)
class PropFormula:
    constraints: tuple[Constraint, ...]
    variables: tuple[str, ...]  # lexicographic feature order

    def var_table(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.variables, 1)}


def _ctc_p(node, m: Model) -> list[BoolExpr]:
    out = []
    for e in sorted(node.constraints(), key=to_source):
        r = rewrite(e, m)
        if r is not None:
            out.append(r)
    return out


@functools.lru_cache(maxsize=128)
def build_formula(m: Model) -> PropFormula:
    """Conjunction of per-node Boolean constraints plus unloaded locks."""
    violations = check_well_formed(m)
    if violations:
        raise FormulaError(
            "wf",
            "model is not well-formed: "
            + "; ".join(f"({v.rule}) {v.node}: {v.message}" for v in violations),
        )
    constraints: list[Constraint] = []
    for n in m:  # sorted by name
        parent = BConst(1) if n.parent == TOP else BIdent(n.parent)
        ctc = _ctc_p(n, m)
        context = band([parent, *ctc])
        me = BIdent(n.name)
        constraints.append(Constraint(n.name, "node", implies(me, context)))
        if n.flavor in (Flavor.NONE, Flavor.DATA) and n.kind != Kind.INTERFACE:
            constraints.append(Constraint(n.name, "flavor", implies(context, me)))
        if n.calculated is not None:
            target = rewrite(n.calculated, m)
            if target is not None:
                constraints.append(
                    Constraint(
                        n.name, "calculated", implies(context, eqv(me, target))
                    )
                )
        if n.kind == Kind.INTERFACE:
            any_impl = bor(
                BIdent(i) for i in sorted(impls_syntactic(n.name, m))
            )
            constraints.append(
                Constraint(
                    n.name, "interface", implies(context, eqv(me, any_impl))
                )
            )
    for x in sorted(m.unloaded_ids()):
        constraints.append(Constraint(x, "unloaded", bnot(BIdent(x))))
    return PropFormula(tuple(constraints), tuple(sorted(m.universe())))


def validate_prop(m: Model, cp: PropConfig) -> ValidationReport:
    """Check a Boolean configuration against the translated model."""
    missing = tuple(sorted(m.universe() - cp.domain))
    if missing:
        raise ValidationError(
            "incomplete",
            "configuration misses: " + ", ".join(missing),
            missing,
        )
    failures: list[Failure] = []
    loaded = m.ids()
    for x in sorted(cp.domain - loaded):
        if cp[x] == 1:
            failures.append(
                Failure(x, "unloaded", "feature is not in the model but set")
            )
    formula = build_formula(m)
    for con in formula.constraints:
        if con.family == "unloaded":
            continue  # covered by the domain scan above
        if not eval_p(con.expr, cp):
            failures.append(
                Failure(
                    con.node,
                    con.family,
                    f"constraint {bool_to_source(con.expr)} violated",
                )
            )
    return ValidationReport(tuple(failures))


def enumerate_prop_configs(
    m: Model, budget: int = DEFAULT_PROP_BUDGET
) -> list[PropConfig]:
    """All Boolean configurations the translated model accepts."""
    ids = sorted(m.universe())
    if 2 ** len(ids) > budget:
        raise OracleError(
            "too-large",
            f"2^{len(ids)} valuations exceed budget of {budget}",
        )
    formula = build_formula(m)
    accepted: list[PropConfig] = []
    for bits in itertools.product((0, 1), repeat=len(ids)):
        cp = PropConfig(zip(ids, bits))
        if all(eval_p(con.expr, cp) for con in formula.constraints):
            accepted.append(cp)
    return accepted


# ---------------------------------------------------------------------------
# rendering and files

_B_PREC = {"implies": 1, "eqv": 1, "||": 2, "&&": 3}


def bool_to_source(e: BoolExpr, parent_prec: int = 0) -> str:
    if isinstance(e, BIdent):
        return e.name
    if isinstance(e, BConst):
        return str(e.value)
    if isinstance(e, BNot):
        return "!" + bool_to_source(e.child, 5)
    if isinstance(e, BBin):
        prec = _B_PREC[e.op]
        text = (
            f"{bool_to_source(e.left, prec)} {e.op} "
            f"{bool_to_source(e.right, prec + 1)}"
        )
        return f"({text})" if prec < parent_prec else text
    if isinstance(e, BAnd):
        text = " && ".join(bool_to_source(x, 4) for x in e.items)
        return f"({text})" if 3 < parent_prec else text
    if isinstance(e, BOr):
        text = " || ".join(bool_to_source(x, 3) for x in e.items)
        return f"({text})" if 2 < parent_prec else text
    if isinstance(e, BCard):
        return (
            f"choose({e.at_least}..{e.at_most}: " + ", ".join(e.names) + ")"
        )
    raise TypeError(f"not a Boolean expression: {e!r}")


def formula_to_text(f: PropFormula) -> str:
    lines = [
        f"[{con.family}:{con.node}] {bool_to_source(con.expr)}"
        for con in f.constraints
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def dump_prop_config(cp: PropConfig) -> str:
    lines = [f"{name}\t{bit}" for name, bit in cp.items()]
    return "\n".join(lines) + ("\n" if lines else "")


def load_prop_config(
    text: str, universe=None, strict: bool = False
) -> tuple[PropConfig, list[str]]:
    """Parse the two-column TSV; missing universe ids default to 0."""
    entries: dict[str, int] = {}
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 2 tab-separated fields")
        name, bit = fields
        name = name.strip()
        if name == TOP:
            warnings.append(f"line {lineno}: the root entry is implicit; ignored")
            continue
        if name in entries:
            raise ValueError(f"line {lineno}: duplicate entry for {name!r}")
        if bit not in ("0", "1"):
            raise ValueError(f"line {lineno}: bit must be 0 or 1")
        entries[name] = int(bit)
    if universe is not None:
        missing = sorted(set(universe) - set(entries))
        if missing:
            if strict:
                raise ValidationError(
                    "incomplete",
                    "configuration misses: " + ", ".join(missing),
                    tuple(missing),
                )
            for name in missing:
                entries[name] = 0
                warnings.append(f"missing {name}: defaulted to 0")
    return PropConfig(entries), warnings
