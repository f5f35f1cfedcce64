"""CNF conversion, a small complete SAT solver, and model analyses.

The clause form keeps every feature variable meaningful: auxiliary
definitions are biconditional, so satisfying assignments projected onto
feature variables coincide exactly with the models of the source
formula.  The solver is a plain DPLL with unit propagation and
chronological backtracking; assumptions act as temporary unit clauses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AnalysisError
from .model import Model
from .prop import (
    BAnd,
    BBin,
    BCard,
    BConst,
    BIdent,
    BNot,
    BOr,
    BoolExpr,
    PropConfig,
    PropFormula,
    band,
    bnot,
    bor,
    build_formula,
    eqv as beqv,
    implies as bimplies,
)

AUX_PREFIX = "#"


@dataclass(frozen=True, slots=True)
class Cnf:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    variables: tuple[str, ...]  # variables[i] has index i + 1

    def var_table(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.variables, 1)}

    def feature_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.variables if not n.startswith(AUX_PREFIX))


@dataclass(frozen=True, slots=True)
class SatResult:
    status: str  # "sat" | "unsat"
    witness: PropConfig | None

    @property
    def sat(self) -> bool:
        return self.status == "sat"


def simplify(e: BoolExpr) -> BoolExpr:
    """Constant folding; the result contains no reachable constants."""
    if isinstance(e, (BIdent, BConst)):
        return e
    if isinstance(e, BNot):
        return bnot(simplify(e.child))
    if isinstance(e, BBin):
        a, b = simplify(e.left), simplify(e.right)
        if e.op == "&&":
            return band([a, b])
        if e.op == "||":
            return bor([a, b])
        if e.op == "implies":
            return bimplies(a, b)
        return beqv(a, b)
    if isinstance(e, BAnd):
        return band([simplify(x) for x in e.items])
    if isinstance(e, BOr):
        return bor([simplify(x) for x in e.items])
    if isinstance(e, BCard):
        n = len(e.names)
        if e.at_least > n:
            return BConst(0)
        hi = min(e.at_most, n)
        if e.at_least == 0 and hi == n:
            return BConst(1)
        if n == 1:
            # single id: between-bounds degenerates to a literal
            return BIdent(e.names[0]) if e.at_least == 1 else bnot(BIdent(e.names[0]))
        return BCard(e.names, e.at_least, hi)
    raise TypeError(f"not a Boolean expression: {e!r}")


class _CnfBuilder:
    def __init__(self, features: tuple[str, ...]):
        self.names = list(features)
        self.index = {n: i for i, n in enumerate(features, 1)}
        self.clauses: list[tuple[int, ...]] = []
        self.seen: set[tuple[int, ...]] = set()
        self.memo: dict = {}

    def new_aux(self, hint: str) -> int:
        name = f"{AUX_PREFIX}{hint}{len(self.names) + 1}"
        self.names.append(name)
        self.index[name] = len(self.names)
        return len(self.names)

    def add_clause(self, lits) -> None:
        clause = tuple(sorted(set(lits), key=lambda l: (abs(l), l < 0)))
        for l in clause:
            if -l in clause:
                return  # tautology
        if clause not in self.seen:
            self.seen.add(clause)
            self.clauses.append(clause)

    # --- literal-level gates with biconditional definitions

    def and_lit(self, a: int, b: int) -> int:
        if a == b:
            return a
        key = ("and",) + tuple(sorted((a, b)))
        if key in self.memo:
            return self.memo[key]
        x = self.new_aux("and")
        self.add_clause((-x, a))
        self.add_clause((-x, b))
        self.add_clause((x, -a, -b))
        self.memo[key] = x
        return x

    def or_lit(self, a: int, b: int) -> int:
        if a == b:
            return a
        key = ("or",) + tuple(sorted((a, b)))
        if key in self.memo:
            return self.memo[key]
        x = self.new_aux("or")
        self.add_clause((x, -a))
        self.add_clause((x, -b))
        self.add_clause((-x, a, b))
        self.memo[key] = x
        return x

    # --- expression to literal

    def lit(self, e: BoolExpr) -> int:
        if isinstance(e, BIdent):
            return self.index[e.name]
        if isinstance(e, BNot):
            return -self.lit(e.child)
        if e in self.memo:
            return self.memo[e]
        if isinstance(e, BAnd):
            lits = [self.lit(x) for x in e.items]
            x = self.new_aux("def")
            for l in lits:
                self.add_clause((-x, l))
            self.add_clause(tuple([x] + [-l for l in lits]))
        elif isinstance(e, BOr):
            lits = [self.lit(x) for x in e.items]
            x = self.new_aux("def")
            for l in lits:
                self.add_clause((x, -l))
            self.add_clause(tuple([-x] + lits))
        elif isinstance(e, BBin):
            a, b = self.lit(e.left), self.lit(e.right)
            if e.op == "&&":
                x = self.and_lit(a, b)
            elif e.op == "||":
                x = self.or_lit(a, b)
            elif e.op == "implies":
                x = self.or_lit(-a, b)
            else:  # eqv
                x = self.new_aux("def")
                self.add_clause((-x, -a, b))
                self.add_clause((-x, a, -b))
                self.add_clause((x, a, b))
                self.add_clause((x, -a, -b))
        elif isinstance(e, BCard):
            x = self.card_lit(e)
        else:
            raise TypeError(f"cannot encode {e!r}")
        self.memo[e] = x
        return x

    def card_lit(self, e: BCard) -> int:
        """Output literal of a bidirectional sequential counter."""
        xs = [self.index[n] for n in e.names]
        n, lo, hi = len(xs), e.at_least, e.at_most
        cols = min(n, hi + 1)
        prev: list[int] = []  # prev[j-1] holds "count of first i vars >= j"
        for i, x in enumerate(xs, 1):
            cur: list[int] = []
            for j in range(1, min(i, cols) + 1):
                carry = prev[j - 1] if j - 1 < len(prev) else None
                if j == 1:
                    inc = x
                else:
                    below = prev[j - 2]  # count >= j-1 without x
                    inc = self.and_lit(x, below)
                cur.append(inc if carry is None else self.or_lit(carry, inc))
            prev = cur
        parts: list[int] = []
        if lo >= 1:
            parts.append(prev[lo - 1])
        if hi < n:
            parts.append(-prev[hi])
        if len(parts) == 1:
            return parts[0]
        return self.and_lit(parts[0], parts[1])

    # --- top-level assertion

    def assert_expr(self, e: BoolExpr) -> None:
        if isinstance(e, BConst):
            if e.value == 0:
                self.add_clause(())
            return
        if isinstance(e, BAnd):
            for x in e.items:
                self.assert_expr(x)
            return
        if isinstance(e, BIdent):
            self.add_clause((self.index[e.name],))
            return
        if isinstance(e, BNot):
            self.add_clause((-self.lit(e.child),))
            return
        if isinstance(e, BOr):
            self.add_clause(tuple(self.lit(x) for x in e.items))
            return
        if isinstance(e, BBin):
            if e.op == "&&":
                self.assert_expr(e.left)
                self.assert_expr(e.right)
            elif e.op == "||":
                self.add_clause((self.lit(e.left), self.lit(e.right)))
            elif e.op == "implies":
                self.add_clause((-self.lit(e.left), self.lit(e.right)))
            else:  # eqv
                a, b = self.lit(e.left), self.lit(e.right)
                self.add_clause((-a, b))
                self.add_clause((-b, a))
            return
        if isinstance(e, BCard):
            self.assert_card(e)
            return
        raise TypeError(f"cannot assert {e!r}")

    def assert_card(self, e: BCard) -> None:
        xs = [self.index[n] for n in e.names]
        if (e.at_least, e.at_most) == (1, 1):
            # exactly-one: pairwise at-most-one plus at-least-one
            self.add_clause(tuple(xs))
            for i in range(len(xs)):
                for j in range(i + 1, len(xs)):
                    self.add_clause((-xs[i], -xs[j]))
            return
        self.add_clause((self.card_lit(e),))


def to_cnf(f: PropFormula) -> Cnf:
    """Clause form whose feature projections equal the formula's models."""
    builder = _CnfBuilder(f.variables)
    for con in f.constraints:
        builder.assert_expr(simplify(con.expr))
    return Cnf(len(builder.names), tuple(builder.clauses), tuple(builder.names))


# ---------------------------------------------------------------------------
# the decision procedure


def solve(cnf: Cnf, assumptions=()) -> SatResult:
    """Complete DPLL search; assumptions are temporary unit constraints."""
    clauses = cnf.clauses
    assign: dict[int, bool] = {}
    trail: list[int] = []

    def value(lit: int):
        v = assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def assign_lit(lit: int) -> None:
        assign[abs(lit)] = lit > 0
        trail.append(lit)

    def undo_to(mark: int) -> None:
        while len(trail) > mark:
            del assign[abs(trail.pop())]

    for a in assumptions:
        if not (1 <= abs(a) <= cnf.num_vars):
            raise ValueError(f"assumption {a} out of range")
        v = value(a)
        if v is False:
            return SatResult("unsat", None)
        if v is None:
            assign_lit(a)

    def propagate() -> bool:
        changed = True
        while changed:
            changed = False
            for cl in clauses:
                satisfied = False
                unassigned = None
                count = 0
                for l in cl:
                    v = value(l)
                    if v is True:
                        satisfied = True
                        break
                    if v is None:
                        unassigned = l
                        count += 1
                        if count > 1:
                            break
                if satisfied or count > 1:
                    continue
                if count == 0:
                    return False
                assign_lit(unassigned)
                changed = True
        return True

    def all_satisfied() -> bool:
        return all(any(value(l) is True for l in cl) for cl in clauses)

    def search() -> bool:
        if not propagate():
            return False
        if all_satisfied():
            return True
        var = next(v for v in range(1, cnf.num_vars + 1) if v not in assign)
        for lit in (var, -var):
            mark = len(trail)
            assign_lit(lit)
            if search():
                return True
            undo_to(mark)
        return False

    if not search():
        return SatResult("unsat", None)
    table = cnf.var_table()
    witness = PropConfig(
        (name, int(assign.get(table[name], False)))
        for name in cnf.feature_names()
    )
    return SatResult("sat", witness)


# ---------------------------------------------------------------------------
# DIMACS


def export_dimacs(cnf: Cnf) -> str:
    """Standard DIMACS CNF with feature-name mapping comments."""
    lines = [
        f"c var {i} {name}"
        for i, name in enumerate(cnf.variables, 1)
        if not name.startswith(AUX_PREFIX)
    ]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    for cl in cnf.clauses:
        lines.append(" ".join([str(l) for l in cl] + ["0"]))
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Cnf:
    """Inverse of export_dimacs (names recovered from comments)."""
    num_vars = 0
    expected = None
    names: dict[int, str] = {}
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) == 4 and parts[1] == "var" and parts[2].isdigit():
                names[int(parts[2])] = parts[3]
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad DIMACS header: {line!r}")
            num_vars, expected = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(
                    tuple(sorted(set(current), key=lambda l: (abs(l), l < 0)))
                )
                current = []
            else:
                current.append(lit)
    if current:
        raise ValueError("unterminated clause at end of DIMACS input")
    if expected is not None and expected != len(clauses):
        raise ValueError(
            f"header promised {expected} clauses, found {len(clauses)}"
        )
    variables = tuple(names.get(i, f"v{i}") for i in range(1, num_vars + 1))
    return Cnf(num_vars, tuple(clauses), variables)


# ---------------------------------------------------------------------------
# analyses


def model_cnf(m: Model) -> Cnf:
    return to_cnf(build_formula(m))


def model_sat(m: Model) -> SatResult:
    """Can any Boolean configuration satisfy the translated model?"""
    return solve(model_cnf(m))


def _analysis_cnf(m: Model) -> Cnf:
    cnf = model_cnf(m)
    if not solve(cnf).sat:
        raise AnalysisError("void-model", "the model has no valid configuration")
    return cnf


def dead_features(m: Model) -> frozenset[str]:
    """Features that are false in every satisfying valuation."""
    cnf = _analysis_cnf(m)
    table = cnf.var_table()
    return frozenset(
        f for f in sorted(m.ids()) if not solve(cnf, (table[f],)).sat
    )


def core_features(m: Model) -> frozenset[str]:
    """Features that are true in every satisfying valuation."""
    cnf = _analysis_cnf(m)
    table = cnf.var_table()
    return frozenset(
        f for f in sorted(m.ids()) if not solve(cnf, (-table[f],)).sat
    )


def implication_graph(
    m: Model, reduce_transitive: bool = False
) -> frozenset[tuple[str, str]]:
    """Edges (a, b) where enabling a forces b, over non-dead features."""
    cnf = _analysis_cnf(m)
    table = cnf.var_table()
    alive = [
        f for f in sorted(m.ids()) if solve(cnf, (table[f],)).sat
    ]
    edges = set()
    for a in alive:
        for b in alive:
            if a != b and not solve(cnf, (table[a], -table[b])).sat:
                edges.add((a, b))
    if reduce_transitive:
        edges = _transitive_reduction(edges)
    return frozenset(edges)


def _transitive_reduction(edges: set[tuple[str, str]]) -> set[tuple[str, str]]:
    """Drop edges already implied by a path; deterministic greedy sweep."""
    kept = set(edges)

    def reachable(src: str, dst: str, skip: tuple[str, str]) -> bool:
        stack, seen = [src], {src}
        while stack:
            cur = stack.pop()
            for (a, b) in kept:
                if a == cur and (a, b) != skip and b not in seen:
                    if b == dst:
                        return True
                    seen.add(b)
                    stack.append(b)
        return False

    for edge in sorted(edges):
        if edge in kept and reachable(edge[0], edge[1], edge):
            kept.discard(edge)
    return kept


def export_dot(edges) -> str:
    """Implication edges as a DOT digraph, deterministically ordered."""
    lines = ["digraph implications {"]
    for a, b in sorted(edges):
        lines.append(f'    "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
