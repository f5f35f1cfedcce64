"""Configuration semantics: evaluation, per-node checks, validation.

A configuration assigns every feature a triple (enabled state, enabled
value, data value).  A model accepts a configuration when every node's
hierarchy/constraint equivalence, flavor rule, calculated rule,
legal_values rule and interface rule hold, and every referenced but
undeclared feature is off.

Arithmetic and comparisons follow Tcl's ``expr``: values are untyped
strings, coerced to integers (decimal or 0x hex) or floats on demand;
comparisons fall back to code-point order when either side is not a
number.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass

from .errors import EvalError, OracleError, ValidationError
from .exprs import (
    Arith,
    BitNot,
    Call,
    Cmp,
    Cond,
    Const,
    GoalExpr,
    Ident,
    ListExpr,
    Logic,
    Not,
    Range,
    Single,
    to_source,
)
from .model import TOP, Flavor, Kind, Model, Node

DEFAULT_BUDGET = 2_000_000

_INT_RX = re.compile(r"[+-]?(?:0[xX][0-9a-fA-F]+|[0-9]+)")
_FLOAT_RX = re.compile(
    r"[+-]?(?:[0-9]+\.?[0-9]*(?:[eE][+-]?[0-9]+)?|\.[0-9]+(?:[eE][+-]?[0-9]+)?)"
)

_MAX_SHIFT = 1 << 16  # guard against absurd shift widths


def parse_number(v: str):
    """Number denoted by the string, or None.

    Integers win over floats; hex needs an 0x prefix; leading zeros are
    decimal.
    """
    if _INT_RX.fullmatch(v):
        return int(v, 16) if "x" in v or "X" in v else int(v, 10)
    if _FLOAT_RX.fullmatch(v):
        return float(v)
    return None


def to_bool(v: str) -> int:
    """Truthiness cast: empty and numeric zero are false, all else true."""
    if v == "":
        return 0
    n = parse_number(v)
    return 0 if n == 0 else 1


def format_number(n) -> str:
    """Render an evaluation result back to its string form."""
    if isinstance(n, bool):
        return "1" if n else "0"
    return repr(n) if isinstance(n, float) else str(n)


def compare_values(a: str, b: str) -> int:
    """Three-way comparison: numeric when both sides parse, else textual."""
    na, nb = parse_number(a), parse_number(b)
    if na is not None and nb is not None:
        return -1 if na < nb else (0 if na == nb else 1)
    return -1 if a < b else (0 if a == b else 1)


def values_equal(a: str, b: str) -> bool:
    return compare_values(a, b) == 0


class Configuration:
    """Immutable assignment of (state, value, data) triples to features.

    The synthetic root always maps to (1, 1, "1").
    """

    __slots__ = ("_map", "_hash")

    def __init__(self, assignment=()):
        d: dict[str, tuple[int, int, str]] = {}
        items = assignment.items() if hasattr(assignment, "items") else assignment
        for name, triple in items:
            s, v, data = triple
            if s not in (0, 1) or v not in (0, 1):
                raise ValueError(f"bits must be 0/1 for {name!r}")
            if not isinstance(data, str):
                raise ValueError(f"data value of {name!r} must be a string")
            if name == TOP:
                if (s, v, data) != (1, 1, "1"):
                    raise ValueError("the root is fixed at (1, 1, \"1\")")
                continue
            if name in d:
                raise ValueError(f"duplicate entry for {name!r}")
            d[name] = (int(s), int(v), data)
        d[TOP] = (1, 1, "1")
        self._map = d
        self._hash = None  # computed lazily; enumeration makes many of these

    @property
    def domain(self) -> frozenset[str]:
        """Assigned feature ids; the root is implicit and excluded."""
        return frozenset(k for k in self._map if k != TOP)

    def __contains__(self, name: str) -> bool:
        return name in self._map

    def __getitem__(self, name: str) -> tuple[int, int, str]:
        return self._map[name]

    def state(self, name: str) -> int:
        return self._map[name][0]

    def value(self, name: str) -> int:
        return self._map[name][1]

    def data(self, name: str) -> str:
        return self._map[name][2]

    def items(self):
        """(name, triple) pairs sorted by name, root excluded."""
        return sorted((k, v) for k, v in self._map.items() if k != TOP)

    def __eq__(self, other):
        return isinstance(other, Configuration) and self._map == other._map

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.items())
        return f"Configuration({inner})"


def access(x: str, c: Configuration) -> str:
    """A feature's value as seen by expressions: "0" while disabled."""
    if x not in c:
        raise EvalError("unknown-id", f"unknown feature {x!r}")
    return "0" if c.state(x) == 0 else c.data(x)


class Builtins:
    """Default behaviors of the builtin functions.

    Subclass and override individual methods to change a reading; pass the
    instance to eval_expr/validate_configuration.
    """

    def get_data(self, name: str, c: Configuration, m: Model) -> str:
        if name not in c:
            raise EvalError("unknown-id", f"unknown feature {name!r}")
        return c.data(name)  # deliberately ignores the enabled state

    def is_active(self, name: str, c: Configuration, m: Model) -> str:
        if name not in c:
            raise EvalError("unknown-id", f"unknown feature {name!r}")
        return str(c.state(name))

    def is_enabled(self, name: str, c: Configuration, m: Model) -> str:
        if name not in c:
            raise EvalError("unknown-id", f"unknown feature {name!r}")
        return str(c.value(name))

    def is_loaded(self, name: str, c: Configuration, m: Model) -> str:
        return "1" if name in m else "0"

    def is_substr(self, hay: str, needle: str) -> str:
        return "1" if needle.lower() in hay.lower() else "0"

    def is_xsubstr(self, hay: str, needle: str) -> str:
        return "1" if needle in hay else "0"

    def version_cmp(self, a: str, b: str) -> str:
        pa, pb = a.split("."), b.split(".")
        while len(pa) < len(pb):
            pa.append("0")
        while len(pb) < len(pa):
            pb.append("0")
        for xa, xb in zip(pa, pb):
            r = compare_values(xa, xb)
            if r != 0:
                return str(r)
        return "0"


DEFAULT_BUILTINS = Builtins()

_REF_FUNCS = ("get_data", "is_active", "is_enabled", "is_loaded")


def eval_expr(
    e: GoalExpr, c: Configuration, m: Model, builtins: Builtins = DEFAULT_BUILTINS
) -> str:
    """Evaluate a goal expression to its string value."""
    if isinstance(e, Ident):
        return access(e.name, c)
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Not):
        return "0" if to_bool(eval_expr(e.child, c, m, builtins)) else "1"
    if isinstance(e, BitNot):
        n = parse_number(eval_expr(e.child, c, m, builtins))
        if not isinstance(n, int):
            raise EvalError("not-numeric", "~ needs an integer operand")
        return str(~n)
    if isinstance(e, Logic):
        a = to_bool(eval_expr(e.left, c, m, builtins))
        b = to_bool(eval_expr(e.right, c, m, builtins))
        if e.op == "||":
            r = a or b
        elif e.op == "&&":
            r = a and b
        elif e.op == "implies":
            r = (not a) or b
        elif e.op == "eqv":
            r = a == b
        else:  # xor
            r = a != b
        return "1" if r else "0"
    if isinstance(e, Arith):
        return _arith(
            e.op,
            eval_expr(e.left, c, m, builtins),
            eval_expr(e.right, c, m, builtins),
        )
    if isinstance(e, Cmp):
        r = compare_values(
            eval_expr(e.left, c, m, builtins),
            eval_expr(e.right, c, m, builtins),
        )
        ok = {
            "==": r == 0,
            "!=": r != 0,
            "<": r < 0,
            ">": r > 0,
            "<=": r <= 0,
            ">=": r >= 0,
        }[e.op]
        return "1" if ok else "0"
    if isinstance(e, Cond):
        if to_bool(eval_expr(e.guard, c, m, builtins)):
            return eval_expr(e.then, c, m, builtins)
        return eval_expr(e.other, c, m, builtins)
    if isinstance(e, Call):
        return _call(e, c, m, builtins)
    raise TypeError(f"not a goal expression: {e!r}")


def _call(e: Call, c: Configuration, m: Model, builtins: Builtins) -> str:
    if e.func in _REF_FUNCS:
        name = _feature_ref(e.args[0], c, m, builtins)
        return getattr(builtins, e.func)(name, c, m)
    a = eval_expr(e.args[0], c, m, builtins)
    b = eval_expr(e.args[1], c, m, builtins)
    return getattr(builtins, e.func)(a, b)


def _feature_ref(e: GoalExpr, c: Configuration, m: Model, builtins: Builtins) -> str:
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Const):
        return e.value
    return eval_expr(e, c, m, builtins)


def _arith(op: str, a: str, b: str) -> str:
    na, nb = parse_number(a), parse_number(b)
    if na is None or nb is None:
        raise EvalError("not-numeric", f"non-numeric operand to {op!r}")
    if op in ("%", "<<", ">>", "&", "|", "^"):
        if not (isinstance(na, int) and isinstance(nb, int)):
            raise EvalError("not-numeric", f"{op!r} needs integer operands")
        if op == "%":
            if nb == 0:
                raise EvalError("div-zero", "modulo by zero")
            return str(na % nb)
        if op in ("<<", ">>"):
            if nb < 0 or nb > _MAX_SHIFT:
                raise EvalError("invalid-shift", f"bad shift width {nb}")
            return str(na << nb if op == "<<" else na >> nb)
        if op == "&":
            return str(na & nb)
        if op == "|":
            return str(na | nb)
        return str(na ^ nb)
    if op == "/":
        if isinstance(na, int) and isinstance(nb, int):
            if nb == 0:
                raise EvalError("div-zero", "division by zero")
            return str(na // nb)
        if float(nb) == 0.0:
            raise EvalError("div-zero", "division by zero")
        return format_number(float(na) / float(nb))
    if isinstance(na, int) and isinstance(nb, int):
        r = {"+": na + nb, "-": na - nb, "*": na * nb}[op]
        return str(r)
    fa, fb = float(na), float(nb)
    r = {"+": fa + fb, "-": fa - fb, "*": fa * fb}[op]
    return format_number(r)


def satisfies_legal(
    d: str,
    c: Configuration,
    l: ListExpr,
    m: Model,
    builtins: Builtins = DEFAULT_BUILTINS,
) -> int:
    """Whether a data value matches a legal_values enumeration."""
    for item in l.items:
        if isinstance(item, Single):
            if values_equal(d, eval_expr(item.expr, c, m, builtins)):
                return 1
        else:
            probe = Logic(
                "&&",
                Cmp("<=", item.low, Const(d)),
                Cmp("<=", Const(d), item.high),
            )
            if to_bool(eval_expr(probe, c, m, builtins)):
                return 1
    return 0


# ---------------------------------------------------------------------------
# per-node checks


@functools.lru_cache(maxsize=4096)
def _sorted_constraints(n: Node) -> tuple[GoalExpr, ...]:
    return tuple(sorted(n.constraints(), key=to_source))


def _ctc_holds(n: Node, c: Configuration, m: Model, builtins: Builtins) -> int:
    for e in _sorted_constraints(n):
        try:
            if not to_bool(eval_expr(e, c, m, builtins)):
                return 0
        except EvalError:
            return 0
    return 1


def _ctc_detail(
    n: Node, c: Configuration, m: Model, builtins: Builtins
) -> tuple[int, list[str]]:
    """Cross-tree constraint conjunction, with reasons for failures."""
    holds = 1
    reasons: list[str] = []
    for e in _sorted_constraints(n):
        try:
            if not to_bool(eval_expr(e, c, m, builtins)):
                holds = 0
                reasons.append(f"constraint {to_source(e)} is false")
        except EvalError as err:
            holds = 0
            reasons.append(f"constraint {to_source(e)} failed: {err.message}")
    return holds, reasons


def node_holds(
    n: Node, c: Configuration, m: Model, builtins: Builtins = DEFAULT_BUILTINS
) -> int:
    """State equivalence: on iff parent on, value set and constraints hold."""
    ctc = _ctc_holds(n, c, m, builtins)
    rhs = c.state(n.parent) and c.value(n.name) and ctc
    return int(c.state(n.name) == rhs)


def flavor_holds(n: Node, c: Configuration) -> int:
    """none/data features always have their enabled value set."""
    if n.flavor in (Flavor.NONE, Flavor.DATA):
        return c.value(n.name)
    return 1


def calculated_holds(
    n: Node, c: Configuration, m: Model, builtins: Builtins = DEFAULT_BUILTINS
) -> int:
    """The calculated expression pins value and/or data, by flavor."""
    try:
        computed = eval_expr(n.calculated, c, m, builtins)
    except EvalError:
        return 0
    if n.flavor == Flavor.BOOL:
        return int(c.value(n.name) == to_bool(computed))
    if n.flavor == Flavor.BOOLDATA:
        return int(
            c.data(n.name) == computed
            and c.value(n.name) == to_bool(c.data(n.name))
        )
    return int(c.data(n.name) == computed)  # data flavor


def legal_values_holds(
    n: Node, c: Configuration, m: Model, builtins: Builtins = DEFAULT_BUILTINS
) -> int:
    """Data value must match the enumeration; no effect on flavor none."""
    if n.flavor == Flavor.NONE:
        return 1
    try:
        return satisfies_legal(c.data(n.name), c, n.legal_values, m, builtins)
    except EvalError:
        return 0


def impls(name: str, c: Configuration, m: Model) -> frozenset[Node]:
    """Enabled nodes that implement the given interface."""
    return frozenset(
        x for x in m if name in x.implements and c.state(x.name) == 1
    )


def interface_holds(
    n: Node, c: Configuration, m: Model
) -> int:
    """Interface value mirrors the number of enabled implementors."""
    k = str(len(impls(n.name, c, m)))
    if n.flavor == Flavor.BOOLDATA:
        return int(
            c.data(n.name) == k and c.value(n.name) == to_bool(c.data(n.name))
        )
    if n.flavor == Flavor.DATA:
        return int(c.data(n.name) == k)
    if n.flavor == Flavor.BOOL:
        return int(c.value(n.name) == to_bool(k))
    return 1  # flavor none is ruled out by well-formedness


# ---------------------------------------------------------------------------
# whole-model validation


@dataclass(frozen=True, slots=True)
class Failure:
    node: str
    family: str  # node|flavor|calculated|legal_values|interface|unloaded
    explanation: str


@dataclass(frozen=True, slots=True)
class ValidationReport:
    failures: tuple[Failure, ...]

    @property
    def accepted(self) -> bool:
        return not self.failures

    @property
    def verdict(self) -> str:
        return "accepted" if self.accepted else "rejected"


def _accepts(m: Model, c: Configuration, builtins: Builtins) -> bool:
    """Early-exit acceptance check; equivalent to validate_configuration."""
    loaded = m.ids()
    for x in c.domain - loaded:
        if c.state(x) == 1:
            return False
    for n in m:
        if not node_holds(n, c, m, builtins):
            return False
        if not flavor_holds(n, c):
            return False
        if n.calculated is not None and not calculated_holds(n, c, m, builtins):
            return False
        if n.legal_values is not None and not legal_values_holds(n, c, m, builtins):
            return False
        if n.kind == Kind.INTERFACE and not interface_holds(n, c, m):
            return False
    return True


def validate_configuration(
    m: Model, c: Configuration, builtins: Builtins = DEFAULT_BUILTINS
) -> ValidationReport:
    """Check a configuration against every denotation family of the model."""
    missing = tuple(sorted(m.universe() - c.domain))
    if missing:
        raise ValidationError(
            "incomplete",
            "configuration misses: " + ", ".join(missing),
            missing,
        )
    failures: list[Failure] = []
    loaded = m.ids()
    for x in sorted(c.domain - loaded):
        if c.state(x) == 1:
            failures.append(
                Failure(x, "unloaded", "feature is not in the model but enabled")
            )
    for n in m:
        failures.extend(_node_failures(n, c, m, builtins))
    return ValidationReport(tuple(failures))


def _node_failures(n, c, m, builtins) -> list[Failure]:
    out: list[Failure] = []
    ctc, reasons = _ctc_detail(n, c, m, builtins)
    rhs = c.state(n.parent) and c.value(n.name) and ctc
    if c.state(n.name) != rhs:
        parts = [
            f"enabled_state={c.state(n.name)} but parent_state="
            f"{c.state(n.parent)}, enabled_value={c.value(n.name)}, "
            f"constraints={'ok' if ctc else 'failing'}"
        ]
        parts.extend(reasons)
        out.append(Failure(n.name, "node", "; ".join(parts)))
    if not flavor_holds(n, c):
        out.append(
            Failure(
                n.name,
                "flavor",
                f"flavor {n.flavor.value} requires enabled_value=1",
            )
        )
    if n.calculated is not None and not calculated_holds(n, c, m, builtins):
        out.append(
            Failure(
                n.name,
                "calculated",
                f"value must follow calculated {to_source(n.calculated)}",
            )
        )
    if n.legal_values is not None and not legal_values_holds(n, c, m, builtins):
        out.append(
            Failure(
                n.name,
                "legal_values",
                f"data value {c.data(n.name)!r} is not among the legal values",
            )
        )
    if n.kind == Kind.INTERFACE and not interface_holds(n, c, m):
        k = len(impls(n.name, c, m))
        out.append(
            Failure(
                n.name,
                "interface",
                f"interface valuation must mirror its {k} enabled implementor(s)",
            )
        )
    return out


def enumerate_configurations(
    m: Model,
    data_domain,
    budget: int = DEFAULT_BUDGET,
    builtins: Builtins = DEFAULT_BUILTINS,
) -> list[Configuration]:
    """All accepted configurations over a finite data domain, brute force.

    Candidate data values for declared features come from ``data_domain``;
    undeclared (referenced-only) features are pinned to data "0" since
    their data can never matter.  Deterministic order.
    """
    domain = tuple(dict.fromkeys(data_domain))
    if not domain:
        raise ValueError("data domain must not be empty")
    ids = sorted(m.universe())
    loaded = m.ids()
    total = 1
    for x in ids:
        total *= 4 * len(domain) if x in loaded else 4
        if total > budget:
            raise OracleError(
                "too-large",
                f"candidate space exceeds budget of {budget} configurations",
            )
    bits = (0, 1)
    choices = []
    for x in ids:
        values = domain if x in loaded else ("0",)
        choices.append(
            tuple((s, v, d) for s in bits for v in bits for d in values)
        )
    accepted: list[Configuration] = []
    for combo in itertools.product(*choices):
        c = Configuration(zip(ids, combo))  # total over the universe by construction
        if _accepts(m, c, builtins):
            accepted.append(c)
    return accepted


# ---------------------------------------------------------------------------
# configuration files


def dump_configuration(c: Configuration) -> str:
    """One feature per line: id, state, value, data; tab separated."""
    lines = []
    for name, (s, v, d) in c.items():
        if "\t" in d or "\n" in d:
            raise ValueError(f"data value of {name!r} cannot be written as TSV")
        lines.append(f"{name}\t{s}\t{v}\t{d}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_configuration(
    text: str, universe=None, strict: bool = False
) -> tuple[Configuration, list[str]]:
    """Parse the TSV format; returns the configuration plus warnings.

    Features of ``universe`` missing from the file default to (0, 0, "0")
    unless ``strict`` is set, in which case the load fails.
    """
    entries: dict[str, tuple[int, int, str]] = {}
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError(f"line {lineno}: expected 4 tab-separated fields")
        name, s, v, d = fields
        name = name.strip()
        if name == TOP:
            warnings.append(f"line {lineno}: the root entry is implicit; ignored")
            continue
        if name in entries:
            raise ValueError(f"line {lineno}: duplicate entry for {name!r}")
        if s not in ("0", "1") or v not in ("0", "1"):
            raise ValueError(f"line {lineno}: state and value must be 0 or 1")
        entries[name] = (int(s), int(v), d)
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
                entries[name] = (0, 0, "0")
                warnings.append(f"missing {name}: defaulted to 0\t0\t0")
    return Configuration(entries), warnings
