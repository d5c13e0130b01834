"""
Brute-force SPARQL evaluator used as the reference side of comparisons.

Solutions are enumerated by trying every stored triple against every
pattern; no indexes, no join reordering. The evaluator covers the same
subset the translator accepts.
"""

import logging
from collections.abc import Iterator
from datetime import date
from decimal import Decimal
from typing import Any, Optional

from rdflib import BNode, Literal as RDFLiteral, URIRef

from .frontend import ParseTree, PrefixMap
from .query_model import (
    Aggregate,
    BinaryOp,
    Call,
    Expr,
    InList,
    Iri,
    Literal,
    SelectModel,
    TriplePattern,
    UnaryOp,
    Var,
    lower_query,
    pattern_variables,
    term_value,
)
from .rdf_store import Term, TripleStore
from .schemas import NodeRef, ResultTable

logger = logging.getLogger(__name__)

Solution = dict[str, Term]


class EvalError(Exception):
    """Raised when a query cannot be evaluated over the store."""

    pass


class _ExprError(Exception):
    """SPARQL expression error; FILTER treats it as false."""


# ---------------------------------------------------------------------------
# Pattern matching
# ---------------------------------------------------------------------------


def _resolve_iri(iri: Iri, prefixes: PrefixMap) -> URIRef:
    if iri.is_a:
        return URIRef("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
    if iri.text.startswith("<"):
        return URIRef(iri.text[1:-1])
    expanded = prefixes.expand(iri.text)
    if expanded is None:
        label = iri.text.partition(":")[0]
        if label:
            raise EvalError(f"Prefix '{label}:' is declared neither by the query nor by the store")
        expanded = iri.text[1:]
    return URIRef(expanded)


def _literal_matches(pattern: Literal, term: Term) -> bool:
    if not isinstance(term, RDFLiteral):
        return False
    try:
        return _equal(pattern.value, term_value(term))
    except _ExprError:
        return False


class _Matcher:
    def __init__(self, store: TripleStore, prefixes: PrefixMap):
        self.store = store
        self.prefixes = prefixes

    def _bind(self, term, value: Term, solution: Solution) -> Optional[Solution]:
        if isinstance(term, Var):
            bound = solution.get(term.name)
            if bound is None:
                return {**solution, term.name: value}
            return solution if bound == value else None
        if isinstance(term, Iri):
            return solution if value == _resolve_iri(term, self.prefixes) else None
        return solution if _literal_matches(term, value) else None

    def _path(self, start: Term, steps, end, solution: Solution) -> Iterator[Solution]:
        if not steps:
            bound = self._bind(end, start, solution)
            if bound is not None:
                yield bound
            return
        step, rest = steps[0], steps[1:]
        predicate = _resolve_iri(step.predicate, self.prefixes)
        for s, p, o in self.store.triples:
            if p != predicate:
                continue
            source, target = (o, s) if step.inverse else (s, o)
            if source == start:
                yield from self._path(target, rest, end, solution)

    def triple(self, pattern: TriplePattern, solution: Solution) -> Iterator[Solution]:
        step, rest = pattern.path[0], pattern.path[1:]
        predicate = _resolve_iri(step.predicate, self.prefixes)
        for s, p, o in self.store.triples:
            if p != predicate:
                continue
            source, target = (o, s) if step.inverse else (s, o)
            bound = self._bind(pattern.subject, source, solution)
            if bound is not None:
                yield from self._path(target, rest, pattern.object, bound)

    def bgp(self, patterns: tuple[TriplePattern, ...], solution: Solution) -> Iterator[Solution]:
        if not patterns:
            yield solution
            return
        for extended in self.triple(patterns[0], solution):
            yield from self.bgp(patterns[1:], extended)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


def _value(term: Optional[Term]) -> Any:
    if term is None:
        return None
    if isinstance(term, URIRef):
        return NodeRef(uri=str(term))
    if isinstance(term, BNode):
        return NodeRef(uri=f"_:{term}")
    return term_value(term)


def _is_number(value: Any) -> bool:
    return isinstance(value, Decimal) and not isinstance(value, bool)


def _equal(left: Any, right: Any) -> Optional[bool]:
    if _is_number(left) and _is_number(right):
        return left == right
    if type(left) is type(right):
        return left == right
    raise _ExprError(f"cannot compare {left!r} and {right!r}")


def _less(left: Any, right: Any) -> bool:
    if _is_number(left) and _is_number(right):
        return left < right
    if isinstance(left, str) and isinstance(right, str):
        return left < right
    if isinstance(left, date) and isinstance(right, date):
        return left < right
    if isinstance(left, bool) and isinstance(right, bool):
        return left < right
    raise _ExprError(f"cannot order {left!r} and {right!r}")


def _ebv(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if _is_number(value):
        return value != 0
    if isinstance(value, str):
        return bool(value)
    raise _ExprError(f"no boolean value for {value!r}")


def _number(value: Any) -> Decimal:
    if not _is_number(value):
        raise _ExprError(f"{value!r} is not a number")
    return value


def _string(value: Any) -> str:
    if not isinstance(value, str):
        raise _ExprError(f"{value!r} is not a string")
    return value


class _Evaluator:
    """Evaluates expressions against one solution or one group of solutions."""

    def __init__(self, row: dict[str, Any], group: Optional[list[dict[str, Any]]] = None):
        self.row = row
        self.group = group

    def eval(self, expr: Expr) -> Any:
        if isinstance(expr, Var):
            value = self.row.get(expr.name)
            if value is None:
                raise _ExprError(f"?{expr.name} is unbound")
            return value
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, Aggregate):
            return self.aggregate(expr)
        if isinstance(expr, UnaryOp):
            if expr.op == "!":
                return not _ebv(self.eval(expr.operand))
            operand = _number(self.eval(expr.operand))
            return -operand if expr.op == "-" else operand
        if isinstance(expr, InList):
            operand = self.eval(expr.operand)
            errors = False
            for item in expr.items:
                try:
                    if _equal(operand, item.value):
                        return True
                except _ExprError:
                    errors = True
            if errors:
                raise _ExprError("IN over incomparable values")
            return False
        if isinstance(expr, BinaryOp):
            return self.binary(expr)
        if isinstance(expr, Call):
            return self.call(expr)
        raise EvalError(f"Cannot evaluate {expr!r}")

    def binary(self, expr: BinaryOp) -> Any:
        op = expr.op
        if op in ("||", "&&"):
            results = []
            for side in (expr.left, expr.right):
                try:
                    results.append(_ebv(self.eval(side)))
                except _ExprError:
                    results.append(None)
            if op == "||":
                if True in results:
                    return True
                if None in results:
                    raise _ExprError("error in disjunction")
                return False
            if False in results:
                return False
            if None in results:
                raise _ExprError("error in conjunction")
            return True

        left, right = self.eval(expr.left), self.eval(expr.right)
        if op == "=":
            return _equal(left, right)
        if op == "!=":
            return not _equal(left, right)
        if op == "<":
            return _less(left, right)
        if op == ">":
            return _less(right, left)
        if op == "<=":
            return _equal(left, right) or _less(left, right)
        if op == ">=":
            return _equal(left, right) or _less(right, left)

        left, right = _number(left), _number(right)
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if right == 0:
                raise _ExprError("division by zero")
            return left / right
        raise EvalError(f"Unknown operator {op}")

    def call(self, expr: Call) -> Any:
        name = expr.name
        if name == "BOUND":
            return self.row.get(expr.args[0].name) is not None
        args = [self.eval(a) for a in expr.args]
        if name == "CONTAINS":
            return _string(args[1]) in _string(args[0])
        if name == "STRSTARTS":
            return _string(args[0]).startswith(_string(args[1]))
        if name == "STRENDS":
            return _string(args[0]).endswith(_string(args[1]))
        if name == "LCASE":
            return _string(args[0]).lower()
        if name == "UCASE":
            return _string(args[0]).upper()
        if name == "STRLEN":
            return Decimal(len(_string(args[0])))
        if name == "ABS":
            return abs(_number(args[0]))
        if name in ("YEAR", "MONTH", "DAY"):
            if not isinstance(args[0], date):
                raise _ExprError(f"{args[0]!r} is not a date")
            return Decimal(getattr(args[0], name.lower()))
        raise EvalError(f"Unsupported function {name}")

    def aggregate(self, agg: Aggregate) -> Any:
        if self.group is None:
            raise EvalError(f"Aggregate {agg.name} outside of a grouped context")
        if agg.arg is None:
            return Decimal(len(self.group))

        values = []
        for member in self.group:
            try:
                values.append(_Evaluator(member).eval(agg.arg))
            except _ExprError:
                continue
        if agg.distinct:
            unique: list[Any] = []
            for value in values:
                if not any(type(value) is type(u) and value == u for u in unique):
                    unique.append(value)
            values = unique

        if agg.name == "COUNT":
            return Decimal(len(values))
        if agg.name == "SUM":
            return sum((_number(v) for v in values), Decimal(0))
        if agg.name == "AVG":
            if not values:
                return Decimal(0)
            return sum((_number(v) for v in values), Decimal(0)) / Decimal(len(values))
        if agg.name in ("MIN", "MAX"):
            if not values:
                raise _ExprError(f"{agg.name} of no values")
            return (min if agg.name == "MIN" else max)(values, key=_order_key)
        raise EvalError(f"Unsupported aggregate {agg.name}")


def _try(evaluator: _Evaluator, expr: Expr) -> Any:
    try:
        return evaluator.eval(expr)
    except _ExprError:
        return None


def _holds(evaluator: _Evaluator, expr: Expr) -> bool:
    try:
        return _ebv(evaluator.eval(expr))
    except _ExprError:
        return False


def _order_key(value: Any) -> tuple:
    """Unbound first, then resources, then literals by type."""
    if value is None:
        return (0,)
    if isinstance(value, NodeRef):
        return (1, value.uri)
    if isinstance(value, bool):
        return (2, value)
    if _is_number(value):
        return (3, value)
    if isinstance(value, date):
        return (4, value.isoformat())
    return (5, str(value))


class _Descending:
    __slots__ = ("key",)

    def __init__(self, key):
        self.key = key

    def __lt__(self, other):
        return other.key < self.key

    def __eq__(self, other):
        return self.key == other.key


# ---------------------------------------------------------------------------
# Query evaluation
# ---------------------------------------------------------------------------


def _where(model: SelectModel, matcher: _Matcher) -> list[Solution]:
    solutions: list[Solution] = [{}]
    filters: list[Expr] = []
    for element in model.elements:
        if element.kind == "triples":
            solutions = [s for base in solutions for s in matcher.bgp(element.triples, base)]
        elif element.kind == "optional":
            joined = []
            for base in solutions:
                extensions = list(matcher.bgp(element.triples, base))
                joined.extend(extensions or [base])
            solutions = joined
        else:
            filters.append(element.expression)

    rows = []
    for solution in solutions:
        values = {name: _value(term) for name, term in solution.items()}
        if all(_holds(_Evaluator(values), f) for f in filters):
            rows.append(values)
    return rows


def eval_sparql(store: TripleStore, tree: ParseTree) -> ResultTable:
    """
    Evaluate a parsed SELECT query over a triple store.

    Args:
        store: Triple store
        tree: Parse tree from parse_sparql

    Returns:
        ResultTable; IRIs become NodeRef values, unbound cells None

    Raises:
        EvalError: If a projected variable is never bound or the query needs
            a namespace neither side declares
    """
    model = lower_query(tree)
    prefixes = model.prefixes.merged(store.prefixes)
    matcher = _Matcher(store, prefixes)
    in_scope = pattern_variables(tree)
    rows = _where(model, matcher)

    if model.star:
        columns = list(in_scope)
        projection = [(name, Var(name)) for name in columns]
    else:
        columns = [p.name for p in model.projection]
        projection = [(p.name, p.expression or Var(p.name)) for p in model.projection]

    if model.is_aggregating:
        contexts = _groups(model, rows)
        group_names = {alias or (e.name if isinstance(e, Var) else None) for e, alias in model.group_by}
        for name, expr in projection:
            if isinstance(expr, Var) and expr.name not in group_names:
                raise EvalError(f"Projected variable ?{expr.name} is not a grouping key")
    else:
        contexts = [(row, None) for row in rows]
        known = set(in_scope) | {p.name for p in model.projection if p.expression is not None}
        for name, expr in projection:
            if isinstance(expr, Var) and expr.name not in known:
                raise EvalError(f"Projected variable ?{expr.name} is not bound by the pattern")

    extended = []
    for row, group in contexts:
        evaluator = _Evaluator(dict(row), group)
        for name, expr in projection:
            if not (isinstance(expr, Var) and expr.name == name):
                evaluator.row[name] = _try(evaluator, expr)
        extended.append(evaluator)

    if model.order_by:

        def sort_key(evaluator: _Evaluator):
            keys = []
            for expr, descending in model.order_by:
                key = _order_key(_try(evaluator, expr))
                keys.append(_Descending(key) if descending else key)
            return keys

        extended.sort(key=sort_key)

    table = [tuple(e.row.get(name) for name, _ in projection) for e in extended]
    if model.distinct:
        seen: list[tuple] = []
        for row in table:
            if not any(_same_row(row, s) for s in seen):
                seen.append(row)
        table = seen

    start = model.offset or 0
    stop = start + model.limit if model.limit is not None else None
    table = table[start:stop]
    logger.debug("SPARQL evaluation produced %d rows", len(table))
    return ResultTable(columns=columns, rows=table)


def _same_row(a: tuple, b: tuple) -> bool:
    return all(type(x) is type(y) and x == y for x, y in zip(a, b))


def _groups(model: SelectModel, rows: list[dict[str, Any]]) -> list[tuple[dict[str, Any], list]]:
    """Partition rows by the GROUP BY keys and keep the groups passing HAVING."""
    partitions: list[tuple[tuple, dict[str, Any], list]] = []
    if not model.group_by:
        partitions.append(((), {}, rows))
    else:
        for row in rows:
            evaluator = _Evaluator(row)
            values = []
            named = {}
            for expr, alias in model.group_by:
                value = _try(evaluator, expr)
                values.append(value)
                name = alias or (expr.name if isinstance(expr, Var) else None)
                if name is not None:
                    named[name] = value
            key = tuple(values)
            for existing, _, members in partitions:
                if _same_row(existing, key):
                    members.append(row)
                    break
            else:
                partitions.append((key, named, [row]))

    kept = []
    for _, named, members in partitions:
        evaluator = _Evaluator(dict(named), members)
        if all(_holds(evaluator, h) for h in model.having):
            kept.append((named, members))
    return kept
