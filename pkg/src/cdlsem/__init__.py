"""Tooling for the CDL variability language.

Parse CDL models, validate configurations against the configuration
semantics, translate models to propositional formulas and run SAT-based
analyses on them.
"""

from .errors import (
    AnalysisError,
    CdlError,
    EvalError,
    FormulaError,
    NormalizationError,
    OracleError,
    ValidationError,
)
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
    list_to_source,
    to_source,
)
from .model import (
    TOP,
    Flavor,
    Kind,
    Model,
    Node,
    RawNode,
    Violation,
    check_well_formed,
    ids_of,
    model_to_json,
    model_to_pretty,
    normalize_model,
)
from .parser import (
    ParseDiagnostic,
    ParseError,
    SourceSpan,
    has_errors,
    parse_goal_expr,
    parse_goal_exprs,
    parse_list_expr,
    parse_model,
)
from .prop import (
    BoolExpr,
    PropConfig,
    PropFormula,
    build_formula,
    choose,
    enumerate_prop_configs,
    eval_p,
    formula_to_text,
    impls_syntactic,
    project,
    rewrite,
    validate_prop,
)
from .sat import (
    Cnf,
    SatResult,
    core_features,
    dead_features,
    export_dimacs,
    export_dot,
    implication_graph,
    model_sat,
    parse_dimacs,
    solve,
    to_cnf,
)
from .semantics import (
    Builtins,
    Configuration,
    ValidationReport,
    access,
    enumerate_configurations,
    eval_expr,
    satisfies_legal,
    to_bool,
    validate_configuration,
)

__all__ = [
    "AnalysisError",
    "Arith",
    "BitNot",
    "BoolExpr",
    "Builtins",
    "Call",
    "CdlError",
    "Cmp",
    "Cnf",
    "Cond",
    "Configuration",
    "Const",
    "EvalError",
    "Flavor",
    "FormulaError",
    "GoalExpr",
    "Ident",
    "Kind",
    "ListExpr",
    "Logic",
    "Model",
    "Node",
    "NormalizationError",
    "Not",
    "OracleError",
    "ParseDiagnostic",
    "ParseError",
    "PropConfig",
    "PropFormula",
    "Range",
    "RawNode",
    "SatResult",
    "Single",
    "SourceSpan",
    "TOP",
    "ValidationError",
    "ValidationReport",
    "Violation",
    "access",
    "build_formula",
    "check_well_formed",
    "choose",
    "core_features",
    "dead_features",
    "enumerate_configurations",
    "enumerate_prop_configs",
    "eval_expr",
    "eval_p",
    "export_dimacs",
    "export_dot",
    "formula_to_text",
    "has_errors",
    "ids_of",
    "implication_graph",
    "impls_syntactic",
    "list_to_source",
    "model_sat",
    "model_to_json",
    "model_to_pretty",
    "normalize_model",
    "parse_dimacs",
    "parse_goal_expr",
    "parse_goal_exprs",
    "parse_list_expr",
    "parse_model",
    "project",
    "rewrite",
    "satisfies_legal",
    "solve",
    "to_bool",
    "to_cnf",
    "to_source",
    "validate_configuration",
    "validate_prop",
]
