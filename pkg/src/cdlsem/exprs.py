"""Expression trees for constraint goals and legal-value lists.

Goal expressions are the constraint language used by ``requires``,
``active_if`` and ``calculated`` properties; list expressions enumerate
values and ranges for ``legal_values``.  Trees are immutable and hashable
so they can live in frozensets on nodes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


LOGIC_OPS = ("||", "&&", "implies", "eqv", "xor")
ARITH_OPS = ("+", "-", "*", "/", "%", "<<", ">>", "^", "&", "|")
CMP_OPS = ("==", "!=", "<", ">", "<=", ">=")

# builtin name -> required argument count
BUILTINS = {
    "get_data": 1,
    "is_active": 1,
    "is_enabled": 1,
    "is_loaded": 1,
    "is_substr": 2,
    "is_xsubstr": 2,
    "version_cmp": 2,
}


class GoalExpr:
    """Marker base class for goal expression nodes."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Ident(GoalExpr):
    name: str


@dataclass(frozen=True, slots=True)
class Const(GoalExpr):
    """A literal value; numbers and strings alike are kept as text."""

    value: str


@dataclass(frozen=True, slots=True)
class Not(GoalExpr):
    child: GoalExpr


@dataclass(frozen=True, slots=True)
class BitNot(GoalExpr):
    child: GoalExpr


@dataclass(frozen=True, slots=True)
class Logic(GoalExpr):
    op: str
    left: GoalExpr
    right: GoalExpr

    def __post_init__(self):
        if self.op not in LOGIC_OPS:
            raise ValueError(f"bad logic operator {self.op!r}")


@dataclass(frozen=True, slots=True)
class Arith(GoalExpr):
    op: str
    left: GoalExpr
    right: GoalExpr

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise ValueError(f"bad arithmetic operator {self.op!r}")


@dataclass(frozen=True, slots=True)
class Cmp(GoalExpr):
    op: str
    left: GoalExpr
    right: GoalExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"bad comparison operator {self.op!r}")


@dataclass(frozen=True, slots=True)
class Call(GoalExpr):
    func: str
    args: tuple[GoalExpr, ...]

    def __post_init__(self):
        if self.func not in BUILTINS:
            raise ValueError(f"unknown builtin {self.func!r}")
        if len(self.args) != BUILTINS[self.func]:
            raise ValueError(
                f"{self.func} takes {BUILTINS[self.func]} argument(s), "
                f"got {len(self.args)}"
            )


@dataclass(frozen=True, slots=True)
class Cond(GoalExpr):
    """Ternary conditional ``guard ? then : other``."""

    guard: GoalExpr
    then: GoalExpr
    other: GoalExpr


@dataclass(frozen=True, slots=True)
class Single:
    """A plain list item: matches values equal to the expression."""

    expr: GoalExpr


@dataclass(frozen=True, slots=True)
class Range:
    """A ``low to high`` list item, inclusive on both ends."""

    low: GoalExpr
    high: GoalExpr


@dataclass(frozen=True, slots=True)
class ListExpr:
    items: tuple = field(default=())

    def __post_init__(self):
        if not self.items:
            raise ValueError("list expression needs at least one item")
        for it in self.items:
            if not isinstance(it, (Single, Range)):
                raise ValueError(f"bad list item {it!r}")


# Binding strength per operator, used both by the parser and by the
# printer to emit minimal parentheses.  Higher binds tighter.
_TERNARY_PREC = 1
_IMPL_PREC = 2
PRECEDENCE = {
    "implies": _IMPL_PREC,
    "eqv": _IMPL_PREC,
    "||": 3,
    "&&": 4,
    "xor": 5,
    "|": 6,
    "^": 7,
    "&": 8,
    "==": 9,
    "!=": 9,
    "<": 10,
    ">": 10,
    "<=": 10,
    ">=": 10,
    "<<": 11,
    ">>": 11,
    "+": 12,
    "-": 12,
    "*": 13,
    "/": 13,
    "%": 13,
}
_UNARY_PREC = 14

_IDENT_RX = r"[A-Za-z_][A-Za-z0-9_]*"
_NUMBER_RX = (
    r"[+-]?(?:0[xX][0-9a-fA-F]+"
    r"|[0-9]+\.?[0-9]*(?:[eE][+-]?[0-9]+)?"
    r"|\.[0-9]+(?:[eE][+-]?[0-9]+)?)"
)

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def quote_string(value: str) -> str:
    """Render a constant as a quoted literal with escapes."""
    out = ["\""]
    for ch in value:
        out.append(_ESCAPES.get(ch, ch))
    out.append("\"")
    return "".join(out)


def _const_source(value: str) -> str:
    # a leading '+' would not survive re-parsing verbatim, so quote it
    if re.fullmatch(_NUMBER_RX, value) and not value.startswith("+"):
        return value
    return quote_string(value)


def to_source(e: GoalExpr, parent_prec: int = 0) -> str:
    """Pretty-print a goal expression; re-parsing yields an equal tree."""
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Const):
        return _const_source(e.value)
    if isinstance(e, Not):
        return "!" + to_source(e.child, _UNARY_PREC)
    if isinstance(e, BitNot):
        return "~" + to_source(e.child, _UNARY_PREC)
    if isinstance(e, (Logic, Arith, Cmp)):
        prec = PRECEDENCE[e.op]
        # left associative: the right child needs parens at equal precedence
        text = (
            f"{to_source(e.left, prec)} {e.op} {to_source(e.right, prec + 1)}"
        )
        return f"({text})" if prec < parent_prec else text
    if isinstance(e, Call):
        args = ", ".join(to_source(a) for a in e.args)
        return f"{e.func}({args})"
    if isinstance(e, Cond):
        text = (
            f"{to_source(e.guard, _TERNARY_PREC + 1)} ? "
            f"{to_source(e.then, _TERNARY_PREC + 1)} : "
            f"{to_source(e.other, _TERNARY_PREC)}"
        )
        return f"({text})" if _TERNARY_PREC < parent_prec else text
    raise TypeError(f"not a goal expression: {e!r}")


def list_to_source(l: ListExpr) -> str:
    parts = []
    for it in l.items:
        if isinstance(it, Single):
            parts.append(_item_source(it.expr))
        else:
            parts.append(f"{_item_source(it.low)} to {_item_source(it.high)}")
    return " ".join(parts)


def _item_source(e: GoalExpr) -> str:
    # items are whitespace separated, so anything with top-level operators
    # must be wrapped in parens to stay a single item
    text = to_source(e)
    if isinstance(e, (Ident, Const, Call, Not, BitNot)):
        return text
    return f"({text})"


def referenced_ids(e: GoalExpr) -> frozenset[str]:
    """All feature names mentioned by the expression, call arguments included."""
    acc: set[str] = set()
    _collect_ids(e, acc)
    return frozenset(acc)


def list_referenced_ids(l: ListExpr) -> frozenset[str]:
    acc: set[str] = set()
    for it in l.items:
        if isinstance(it, Single):
            _collect_ids(it.expr, acc)
        else:
            _collect_ids(it.low, acc)
            _collect_ids(it.high, acc)
    return frozenset(acc)


def _collect_ids(e: GoalExpr, acc: set[str]) -> None:
    if isinstance(e, Ident):
        acc.add(e.name)
    elif isinstance(e, (Not, BitNot)):
        _collect_ids(e.child, acc)
    elif isinstance(e, (Logic, Arith, Cmp)):
        _collect_ids(e.left, acc)
        _collect_ids(e.right, acc)
    elif isinstance(e, Call):
        for a in e.args:
            _collect_ids(a, acc)
    elif isinstance(e, Cond):
        _collect_ids(e.guard, acc)
        _collect_ids(e.then, acc)
        _collect_ids(e.other, acc)
