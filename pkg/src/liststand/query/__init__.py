"""Schema-guided tree queries, result-schema inference, and views."""

from liststand.query.evaluate import ResolvedSource, SourceResolver, evaluate
from liststand.query.infer import infer_result_schema
from liststand.query.path import (
    PathExpr,
    PathSyntaxError,
    Predicate,
    QueryError,
    Step,
    eval_path,
    parse_path,
    print_path,
)
from liststand.query.spec import (
    Aggregate,
    Comparison,
    QuerySpec,
    ValueExpr,
    parse_query_spec,
)
from liststand.query.views import ViewDef, ViewRegistry

__all__ = [
    "Aggregate",
    "Comparison",
    "PathExpr",
    "PathSyntaxError",
    "Predicate",
    "QueryError",
    "QuerySpec",
    "ResolvedSource",
    "SourceResolver",
    "Step",
    "ValueExpr",
    "ViewDef",
    "ViewRegistry",
    "eval_path",
    "evaluate",
    "infer_result_schema",
    "parse_path",
    "parse_query_spec",
    "print_path",
]
