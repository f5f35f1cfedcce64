"""Feature nodes, models, normalization and well-formedness checking.

A model is a set of uniquely named nodes arranged in a tree under the
synthetic root ``TOP``.  Raw nodes come out of the parser (or are built
programmatically) and are turned into normalized, immutable nodes by
``normalize_model``.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field

from .errors import NormalizationError
from .exprs import (
    GoalExpr,
    ListExpr,
    Logic,
    list_referenced_ids,
    list_to_source,
    referenced_ids,
    to_source,
)

# Synthetic root of the node tree.  Not writable from source: feature
# identifiers are restricted to [A-Za-z0-9_].
TOP = "⊤"

_NAME_RX = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def is_valid_feature_id(name: str) -> bool:
    return bool(_NAME_RX.fullmatch(name)) and name != TOP


class Kind(str, enum.Enum):
    PACKAGE = "package"
    COMPONENT = "component"
    OPTION = "option"
    INTERFACE = "interface"


class Flavor(str, enum.Enum):
    NONE = "none"
    BOOL = "bool"
    BOOLDATA = "booldata"
    DATA = "data"


# Nodes with no explicit flavor get one from their kind.
DEFAULT_FLAVOR = {
    Kind.PACKAGE: Flavor.BOOLDATA,
    Kind.COMPONENT: Flavor.BOOL,
    Kind.OPTION: Flavor.BOOL,
    Kind.INTERFACE: Flavor.DATA,
}


@dataclass
class RawNode:
    """Pre-normalization node record as produced by the parser.

    ``requires``/``active_if`` hold one tuple per property occurrence; a
    tuple with several expressions is a whitespace enumeration that
    normalization turns into a disjunction.  ``parent`` is the enclosing
    node's name, or None for top-level nodes.
    """

    name: str
    kind: Kind
    parent: str | None = None
    flavor: Flavor | None = None
    active_if: list[tuple[GoalExpr, ...]] = field(default_factory=list)
    requires: list[tuple[GoalExpr, ...]] = field(default_factory=list)
    calculated: tuple[GoalExpr, ...] | None = None
    legal_values: ListExpr | None = None
    implements: list[str] = field(default_factory=list)
    annotations: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def from_node(cls, node: Node) -> RawNode:
        """Turn a normalized node back into an equivalent raw record."""
        return cls(
            name=node.name,
            kind=node.kind,
            parent=None if node.parent == TOP else node.parent,
            flavor=node.flavor,
            active_if=[(e,) for e in node.active_if],
            requires=[(e,) for e in node.requires],
            calculated=(node.calculated,) if node.calculated else None,
            legal_values=node.legal_values,
            implements=sorted(node.implements),
        )


@dataclass(frozen=True, slots=True)
class Node:
    name: str
    parent: str  # another node's name, or TOP
    flavor: Flavor
    active_if: frozenset[GoalExpr]
    requires: frozenset[GoalExpr]
    calculated: GoalExpr | None
    legal_values: ListExpr | None
    kind: Kind
    implements: frozenset[str]

    def constraints(self) -> frozenset[GoalExpr]:
        """active_if and requires together (the cross-tree constraints)."""
        return self.active_if | self.requires


class Model:
    """Immutable set of nodes indexed by name, tree-shaped under TOP."""

    __slots__ = ("_nodes", "_by_name", "_hash", "_universe")

    def __init__(self, nodes):
        ordered = tuple(sorted(nodes, key=lambda n: n.name))
        by_name: dict[str, Node] = {}
        for n in ordered:
            if n.name in by_name:
                raise ValueError(f"duplicate node name {n.name!r}")
            by_name[n.name] = n
        for n in ordered:
            if n.parent != TOP and n.parent not in by_name:
                raise ValueError(f"node {n.name!r} has unknown parent {n.parent!r}")
        _check_acyclic(by_name)
        self._nodes = ordered
        self._by_name = by_name
        self._hash = hash(ordered)
        self._universe: frozenset[str] | None = None

    def __iter__(self):
        return iter(self._nodes)

    def __len__(self):
        return len(self._nodes)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __eq__(self, other):
        return isinstance(other, Model) and self._nodes == other._nodes

    def __hash__(self):
        return self._hash

    def node(self, name: str) -> Node:
        return self._by_name[name]

    def get(self, name: str) -> Node | None:
        return self._by_name.get(name)

    def ids(self) -> frozenset[str]:
        return frozenset(self._by_name)

    def children(self, name: str) -> tuple[Node, ...]:
        return tuple(n for n in self._nodes if n.parent == name)

    def referenced_ids(self) -> frozenset[str]:
        """Every feature name mentioned by any expression in the model."""
        acc: set[str] = set()
        for n in self._nodes:
            for e in n.constraints():
                acc |= referenced_ids(e)
            if n.calculated is not None:
                acc |= referenced_ids(n.calculated)
            if n.legal_values is not None:
                acc |= list_referenced_ids(n.legal_values)
        return frozenset(acc)

    def universe(self) -> frozenset[str]:
        """Declared ids plus referenced-but-unloaded ids (TOP excluded)."""
        if self._universe is None:
            self._universe = self.ids() | self.referenced_ids()
        return self._universe

    def unloaded_ids(self) -> frozenset[str]:
        return self.referenced_ids() - self.ids()


def _check_acyclic(by_name: dict[str, Node]) -> None:
    for start in by_name:
        seen = {start}
        cur = by_name[start].parent
        while cur != TOP:
            if cur in seen:
                raise ValueError(f"parent cycle through {cur!r}")
            seen.add(cur)
            cur = by_name[cur].parent


def ids_of(m: Model) -> frozenset[str]:
    """Names of the nodes in the model (TOP is not a node)."""
    return m.ids()


def normalize_model(raw) -> Model:
    """Build a normalized model from raw nodes.

    Fills in default flavors, reroots top-level nodes at TOP and folds
    whitespace enumerations in requires/active_if/calculated into
    disjunctions.
    """
    raw = list(raw)
    seen: set[str] = set()
    for r in raw:
        if not is_valid_feature_id(r.name):
            raise NormalizationError("invalid-name", f"bad feature name {r.name!r}")
        if r.name in seen:
            raise NormalizationError("duplicate", f"duplicate node name {r.name!r}")
        seen.add(r.name)
    for r in raw:
        if r.parent is not None and r.parent != TOP and r.parent not in seen:
            raise NormalizationError(
                "unresolved-parent",
                f"node {r.name!r} has unknown parent {r.parent!r}",
            )
    _check_raw_cycles(raw)

    nodes = []
    for r in raw:
        flavor = r.flavor if r.flavor is not None else DEFAULT_FLAVOR[r.kind]
        calculated = None
        if r.calculated is not None:
            calculated = _disjoin(r.calculated)
        nodes.append(
            Node(
                name=r.name,
                parent=TOP if r.parent in (None, TOP) else r.parent,
                flavor=flavor,
                active_if=frozenset(_disjoin(entry) for entry in r.active_if),
                requires=frozenset(_disjoin(entry) for entry in r.requires),
                calculated=calculated,
                legal_values=r.legal_values,
                kind=r.kind,
                implements=frozenset(r.implements),
            )
        )
    return Model(nodes)


def _disjoin(entry: tuple[GoalExpr, ...]) -> GoalExpr:
    if not entry:
        raise ValueError("empty expression enumeration")
    acc = entry[0]
    for e in entry[1:]:
        acc = Logic("||", acc, e)
    return acc


def _check_raw_cycles(raw: list[RawNode]) -> None:
    parent = {r.name: r.parent for r in raw}
    for start in parent:
        seen = {start}
        cur = parent[start]
        while cur is not None and cur != TOP:
            if cur in seen:
                raise NormalizationError("cycle", f"parent cycle through {cur!r}")
            seen.add(cur)
            cur = parent.get(cur)


@dataclass(frozen=True, slots=True)
class Violation:
    rule: str  # one of "a".."e"
    node: str
    message: str


def check_well_formed(m: Model) -> list[Violation]:
    """Check the five structural rules; returns one violation per breach."""
    out: list[Violation] = []
    for n in m:
        if n.flavor == Flavor.NONE and n.calculated is not None:
            out.append(
                Violation("a", n.name, "calculated is meaningless with flavor none")
            )
        if n.calculated is not None and n.legal_values is not None:
            out.append(
                Violation("b", n.name, "calculated and legal_values exclude each other")
            )
        if n.flavor == Flavor.BOOL and n.legal_values is not None:
            out.append(
                Violation("c", n.name, "legal_values needs a data-carrying flavor")
            )
        if n.kind == Kind.INTERFACE and (
            n.flavor == Flavor.NONE or n.calculated is not None
        ):
            out.append(
                Violation(
                    "d",
                    n.name,
                    "interfaces allow neither flavor none nor calculated",
                )
            )
    # tree shape: Model construction guarantees resolvable, acyclic parents,
    # so only the leaf rule for options can still fail here
    for n in m:
        if n.parent != TOP and m.node(n.parent).kind == Kind.OPTION:
            out.append(
                Violation(
                    "e",
                    n.parent,
                    f"option node is parent of {n.name}; options must be leaves",
                )
            )
    dedup: dict[tuple[str, str], Violation] = {}
    for v in out:
        dedup.setdefault((v.rule, v.node), v)
    return sorted(dedup.values(), key=lambda v: (v.rule, v.node))


def model_to_json(m: Model) -> str:
    """Canonical JSON dump of a normalized model, stable across runs."""
    nodes = []
    for n in m:  # already sorted by name
        nodes.append(
            {
                "name": n.name,
                "parent": n.parent,
                "flavor": n.flavor.value,
                "kind": n.kind.value,
                "active_if": sorted(to_source(e) for e in n.active_if),
                "requires": sorted(to_source(e) for e in n.requires),
                "calculated": to_source(n.calculated) if n.calculated else None,
                "legal_values": (
                    list_to_source(n.legal_values) if n.legal_values else None
                ),
                "implements": sorted(n.implements),
            }
        )
    return json.dumps({"nodes": nodes}, indent=2, sort_keys=True)


def model_to_pretty(m: Model) -> str:
    """Indented tree rendering of the model for human inspection."""
    lines: list[str] = []

    def walk(parent: str, depth: int) -> None:
        for n in m.children(parent):
            pad = "    " * depth
            lines.append(f"{pad}{n.kind.value} {n.name} [{n.flavor.value}]")
            for e in sorted(to_source(x) for x in n.active_if):
                lines.append(f"{pad}    active_if {e}")
            for e in sorted(to_source(x) for x in n.requires):
                lines.append(f"{pad}    requires {e}")
            if n.calculated is not None:
                lines.append(f"{pad}    calculated {to_source(n.calculated)}")
            if n.legal_values is not None:
                lines.append(f"{pad}    legal_values {list_to_source(n.legal_values)}")
            for i in sorted(n.implements):
                lines.append(f"{pad}    implements {i}")
            walk(n.name, depth + 1)

    walk(TOP, 0)
    return "\n".join(lines) + ("\n" if lines else "")
