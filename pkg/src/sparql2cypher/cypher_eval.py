"""
Reference Cypher evaluator over a PropertyGraph.

Covers the Cypher the transpiler emits: MATCH / OPTIONAL MATCH with
labelled node and typed relationship patterns, WHERE, WITH, UNWIND and
RETURN projections with implicit grouping, ORDER BY, SKIP and LIMIT.

Queries are parsed with a lark Earley grammar into frozen dataclasses,
checked for variable scope, then evaluated row by row.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from datetime import date, datetime
from decimal import Decimal, DivisionByZero, InvalidOperation
from functools import lru_cache
from typing import Any, Iterator, Optional, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, VisitError

from .property_graph import PropertyGraph
from .schemas import NodeRef, ResultTable

logger = logging.getLogger(__name__)


class CypherEvalError(Exception):
    """
    Raised when a query cannot be evaluated.

    kind is "syntax" for parse and scope errors and "runtime" for type
    errors met while evaluating.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


_KEYWORDS = (
    "match|optional|where|with|return|order|by|skip|limit|unwind|and|or|xor|not|as|distinct"
    "|ascending|descending|asc|desc|in|contains|starts|ends|is|null|true|false"
)

_GRAMMAR = r"""
start               : _clause* return_clause

_clause             : match_clause
                    | with_clause
                    | unwind_clause

match_clause        : [OPTIONAL] _MATCH pattern ("," pattern)* [where_clause]
with_clause         : _WITH projection [where_clause]
unwind_clause       : _UNWIND expression _AS NAME
return_clause       : _RETURN projection
where_clause        : _WHERE expression

projection          : [DISTINCT] projection_item ("," projection_item)* [order_clause] _page*
projection_item     : expression [_AS NAME]
order_clause        : _ORDER _BY sort_item ("," sort_item)*
sort_item           : expression [DIRECTION]
_page               : skip_clause | limit_clause
skip_clause         : _SKIP INT
limit_clause        : _LIMIT INT

pattern             : node_pattern (relationship node_pattern)*
node_pattern        : "(" [NAME] [":" NAME] [properties] ")"
properties          : "{" property_entry ("," property_entry)* "}"
property_entry      : NAME ":" expression
relationship        : "-" "[" ":" NAME "]" "->"     -> rel_out
                    | "<-" "[" ":" NAME "]" "-"     -> rel_in
                    | "-" "[" ":" NAME "]" "-"      -> rel_both

?expression         : or_expr
?or_expr            : xor_expr (_OR xor_expr)*
?xor_expr           : and_expr (_XOR and_expr)*
?and_expr           : not_expr (_AND not_expr)*
?not_expr           : _NOT not_expr                 -> negation
                    | comparison
?comparison         : add_expr
                    | add_expr COMP_OP add_expr     -> compare
                    | add_expr _CONTAINS add_expr   -> contains
                    | add_expr _STARTS _WITH add_expr -> starts_with
                    | add_expr _ENDS _WITH add_expr -> ends_with
                    | add_expr _IN add_expr         -> membership
                    | add_expr _IS _NULL            -> is_null
                    | add_expr _IS _NOT _NULL       -> is_not_null
?add_expr           : mul_expr (ADD_OP mul_expr)*
?mul_expr           : unary (MUL_OP unary)*
?unary              : "-" unary                     -> negative
                    | "+" unary
                    | postfix
?postfix            : atom ("." NAME)*
?atom               : literal
                    | NAME                          -> variable
                    | NAME "(" "*" ")"              -> count_star
                    | NAME "(" [DISTINCT] [args] ")" -> function
                    | "[" [args] "]"                -> list_literal
                    | "(" expression ")"
args                : expression ("," expression)*
?literal            : NUMBER                        -> number
                    | STRING                        -> string
                    | _TRUE                         -> true
                    | _FALSE                        -> false
                    | _NULL                         -> null

_MATCH              : /match(?![A-Za-z0-9_])/i
OPTIONAL            : /optional(?![A-Za-z0-9_])/i
_WHERE              : /where(?![A-Za-z0-9_])/i
_WITH               : /with(?![A-Za-z0-9_])/i
_RETURN             : /return(?![A-Za-z0-9_])/i
_UNWIND             : /unwind(?![A-Za-z0-9_])/i
_ORDER              : /order(?![A-Za-z0-9_])/i
_BY                 : /by(?![A-Za-z0-9_])/i
_SKIP               : /skip(?![A-Za-z0-9_])/i
_LIMIT              : /limit(?![A-Za-z0-9_])/i
_AS                 : /as(?![A-Za-z0-9_])/i
DISTINCT            : /distinct(?![A-Za-z0-9_])/i
DIRECTION           : /(?:ascending|descending|asc|desc)(?![A-Za-z0-9_])/i
_OR                 : /or(?![A-Za-z0-9_])/i
_XOR                : /xor(?![A-Za-z0-9_])/i
_AND                : /and(?![A-Za-z0-9_])/i
_NOT                : /not(?![A-Za-z0-9_])/i
_CONTAINS           : /contains(?![A-Za-z0-9_])/i
_STARTS             : /starts(?![A-Za-z0-9_])/i
_ENDS               : /ends(?![A-Za-z0-9_])/i
_IN                 : /in(?![A-Za-z0-9_])/i
_IS                 : /is(?![A-Za-z0-9_])/i
_NULL               : /null(?![A-Za-z0-9_])/i
_TRUE               : /true(?![A-Za-z0-9_])/i
_FALSE              : /false(?![A-Za-z0-9_])/i

NAME                : /(?!(?:KEYWORDS)(?![A-Za-z0-9_]))[A-Za-z_][A-Za-z0-9_]*/i
COMP_OP             : /<>|<=|>=|=|<|>/
ADD_OP              : /[+\-]/
MUL_OP              : /[*\/%]/
INT                 : /\d+/
NUMBER              : /(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+\-]?\d+)?/
STRING              : /'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*"/

%import common.WS
%ignore WS
COMMENT             : "//" /[^\n]/*
%ignore COMMENT
""".replace("KEYWORDS", _KEYWORDS)

_CypherGrammar = Lark(_GRAMMAR, start="start", parser="earley", lexer="dynamic", maybe_placeholders=True)


# ---------------------------------------------------------------------------
# Query AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: Any
    kind: str


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Prop:
    base: "Expr"
    key: str


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "NOT"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class IsNull:
    operand: "Expr"
    negated: bool = False


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple["Expr", ...]
    distinct: bool = False
    spelling: str = field(default="", compare=False)


@dataclass(frozen=True)
class CountStar:
    spelling: str = field(default="count", compare=False)


@dataclass(frozen=True)
class ListExpr:
    items: tuple["Expr", ...]


Expr = Union[Lit, VarRef, Prop, Unary, Binary, IsNull, Func, CountStar, ListExpr]
_EXPR_TYPES = (Lit, VarRef, Prop, Unary, Binary, IsNull, Func, CountStar, ListExpr)


@dataclass(frozen=True)
class NodeSpec:
    var: Optional[str]
    label: Optional[str]
    properties: tuple[tuple[str, Expr], ...] = ()


@dataclass(frozen=True)
class RelSpec:
    rel_type: str
    direction: str  # "out", "in" or "both"


@dataclass(frozen=True)
class Pattern:
    nodes: tuple[NodeSpec, ...]
    rels: tuple[RelSpec, ...]

    def variables(self) -> list[str]:
        return [n.var for n in self.nodes if n.var]


@dataclass(frozen=True)
class MatchClause:
    patterns: tuple[Pattern, ...]
    optional: bool = False
    where: Optional[Expr] = None


@dataclass(frozen=True)
class Item:
    expr: Expr
    alias: Optional[str] = None

    @property
    def name(self) -> str:
        return self.alias or render(self.expr)


@dataclass(frozen=True)
class Projection:
    items: tuple[Item, ...]
    distinct: bool = False
    order: tuple[tuple[Expr, bool], ...] = ()
    skip: Optional[int] = None
    limit: Optional[int] = None


@dataclass(frozen=True)
class WithClause:
    projection: Projection
    where: Optional[Expr] = None


@dataclass(frozen=True)
class UnwindClause:
    expr: Expr
    name: str


@dataclass(frozen=True)
class ReturnClause:
    projection: Projection


@dataclass(frozen=True)
class CypherStatement:
    clauses: tuple[Union[MatchClause, WithClause, UnwindClause], ...]
    returns: ReturnClause


AGGREGATES = frozenset({"count", "sum", "avg", "min", "max", "collect"})
SCALAR_FUNCTIONS = frozenset({"tolower", "toupper", "size", "abs", "date"})


def _value_kind(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, Decimal):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, NodeRef):
        return "node"
    if isinstance(value, (list, tuple)):
        return "list"
    if isinstance(value, datetime):
        return "datetime"
    if isinstance(value, date):
        return "date"
    return type(value).__name__


def _literal(value: Any) -> Lit:
    return Lit(value, _value_kind(value))


def _as_float(value: Decimal) -> Decimal:
    """Give an integral Decimal a fractional exponent so it behaves as a float."""
    if value.as_tuple().exponent >= 0:
        return value + Decimal("0.0")
    return value


def _is_integer(value: Decimal) -> bool:
    return value.as_tuple().exponent >= 0


def _unescape(body: str) -> str:
    escapes = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f"}
    out = []
    index = 0
    while index < len(body):
        char = body[index]
        if char == "\\" and index + 1 < len(body):
            nxt = body[index + 1]
            out.append(escapes.get(nxt, nxt))
            index += 2
        else:
            out.append(char)
            index += 1
    return "".join(out)


def _fold(items: tuple, op: str) -> Expr:
    expr = items[0]
    for item in items[1:]:
        expr = Binary(op, expr, item)
    return expr


@v_args(inline=True)
class _Builder(Transformer):
    """Turns the lark parse tree into query dataclasses."""

    def start(self, *clauses):
        return CypherStatement(tuple(clauses[:-1]), clauses[-1])

    def match_clause(self, optional, *rest):
        where = rest[-1]
        return MatchClause(tuple(rest[:-1]), optional is not None, where)

    def with_clause(self, projection, where):
        return WithClause(projection, where)

    def unwind_clause(self, expr, name):
        return UnwindClause(expr, str(name))

    def return_clause(self, projection):
        return ReturnClause(projection)

    def where_clause(self, expr):
        return expr

    def projection(self, distinct, *rest):
        items = []
        order: tuple = ()
        pages: dict[str, int] = {}
        for part in rest:
            if isinstance(part, Item):
                items.append(part)
            elif isinstance(part, tuple) and part and part[0] in ("skip", "limit"):
                if part[0] in pages:
                    raise CypherEvalError("syntax", f"{part[0].upper()} given twice")
                pages[part[0]] = part[1]
            elif isinstance(part, list):
                order = tuple(part)
        return Projection(tuple(items), distinct is not None, order, pages.get("skip"), pages.get("limit"))

    def projection_item(self, expr, alias):
        return Item(expr, str(alias) if alias is not None else None)

    def order_clause(self, *items):
        return list(items)

    def sort_item(self, expr, direction):
        return (expr, direction is not None and str(direction).lower().startswith("desc"))

    def skip_clause(self, n):
        return ("skip", int(n))

    def limit_clause(self, n):
        return ("limit", int(n))

    def pattern(self, *parts):
        return Pattern(tuple(parts[0::2]), tuple(parts[1::2]))

    def node_pattern(self, var, label, properties):
        return NodeSpec(
            str(var) if var is not None else None,
            str(label) if label is not None else None,
            tuple(properties or ()),
        )

    def properties(self, *entries):
        return tuple(entries)

    def property_entry(self, key, expr):
        return (str(key), expr)

    def rel_out(self, name):
        return RelSpec(str(name), "out")

    def rel_in(self, name):
        return RelSpec(str(name), "in")

    def rel_both(self, name):
        return RelSpec(str(name), "both")

    def or_expr(self, *items):
        return _fold(items, "OR")

    def xor_expr(self, *items):
        return _fold(items, "XOR")

    def and_expr(self, *items):
        return _fold(items, "AND")

    def negation(self, operand):
        return Unary("NOT", operand)

    def compare(self, left, op, right):
        return Binary(str(op), left, right)

    def contains(self, left, right):
        return Binary("CONTAINS", left, right)

    def starts_with(self, left, right):
        return Binary("STARTS WITH", left, right)

    def ends_with(self, left, right):
        return Binary("ENDS WITH", left, right)

    def membership(self, left, right):
        return Binary("IN", left, right)

    def is_null(self, operand):
        return IsNull(operand)

    def is_not_null(self, operand):
        return IsNull(operand, negated=True)

    def add_expr(self, first, *rest):
        expr = first
        for op, operand in zip(rest[0::2], rest[1::2]):
            expr = Binary(str(op), expr, operand)
        return expr

    mul_expr = add_expr

    def negative(self, operand):
        return Unary("-", operand)

    def postfix(self, base, *keys):
        expr = base
        for key in keys:
            expr = Prop(expr, str(key))
        return expr

    def variable(self, name):
        return VarRef(str(name))

    def count_star(self, name):
        if str(name).lower() != "count":
            raise CypherEvalError("syntax", f"{name}(*) is not a function call")
        return CountStar(str(name))

    def function(self, name, distinct, args):
        return Func(str(name).lower(), tuple(args or ()), distinct is not None, str(name))

    def list_literal(self, args):
        return ListExpr(tuple(args or ()))

    def args(self, *exprs):
        return tuple(exprs)

    def number(self, token):
        text = str(token)
        value = Decimal(text)
        if any(c in text for c in ".eE"):
            value = _as_float(value)
        return _literal(value)

    def string(self, token):
        return _literal(_unescape(str(token)[1:-1]))

    def true(self):
        return _literal(True)

    def false(self):
        return _literal(False)

    def null(self):
        return _literal(None)


# ---------------------------------------------------------------------------
# Static checks
# ---------------------------------------------------------------------------


def _children(expr: Expr) -> tuple:
    if isinstance(expr, Prop):
        return (expr.base,)
    if isinstance(expr, (Unary, IsNull)):
        return (expr.operand,)
    if isinstance(expr, Binary):
        return (expr.left, expr.right)
    if isinstance(expr, Func):
        return expr.args
    if isinstance(expr, ListExpr):
        return expr.items
    return ()


def is_aggregate(expr: Expr) -> bool:
    return isinstance(expr, CountStar) or (isinstance(expr, Func) and expr.name in AGGREGATES)


def has_aggregate(expr: Expr) -> bool:
    return is_aggregate(expr) or any(has_aggregate(c) for c in _children(expr))


def _substitute(expr: Expr, mapping: dict) -> Expr:
    """Replace sub-expressions equal to a mapping key."""
    if expr in mapping:
        return mapping[expr]
    changes = {}
    for f in fields(expr):
        value = getattr(expr, f.name)
        if isinstance(value, _EXPR_TYPES):
            changes[f.name] = _substitute(value, mapping)
        elif isinstance(value, tuple):
            changes[f.name] = tuple(
                _substitute(v, mapping) if isinstance(v, _EXPR_TYPES) else v for v in value
            )
    return replace(expr, **changes) if changes else expr


def _check_expr(expr: Expr, scope: set[str], allow_aggregates: bool, inside: bool = False):
    if isinstance(expr, VarRef) and expr.name not in scope:
        raise CypherEvalError("syntax", f"Variable `{expr.name}` not defined")
    if isinstance(expr, Func) and expr.name not in AGGREGATES | SCALAR_FUNCTIONS:
        raise CypherEvalError("syntax", f"Unknown function '{expr.spelling}'")
    if is_aggregate(expr):
        if not allow_aggregates:
            raise CypherEvalError("syntax", "Invalid use of aggregating function")
        if inside:
            raise CypherEvalError("syntax", "Aggregate functions cannot be nested")
        inside = True
    for child in _children(expr):
        _check_expr(child, scope, allow_aggregates, inside)


def _order_mapping(projection: Projection) -> dict:
    return {item.expr: VarRef(item.name) for item in projection.items}


def _check_projection(projection: Projection, scope: set[str], require_alias: bool) -> set[str]:
    names = []
    for item in projection.items:
        _check_expr(item.expr, scope, allow_aggregates=True)
        if item.alias is None and require_alias and not isinstance(item.expr, VarRef):
            raise CypherEvalError("syntax", f"Expression in WITH must be aliased: {render(item.expr)}")
        names.append(item.name)
    if len(set(names)) != len(names):
        raise CypherEvalError("syntax", "Multiple result columns with the same name")

    grouped = projection.distinct or any(has_aggregate(i.expr) for i in projection.items)
    order_scope = set(names) if grouped else scope | set(names)
    mapping = _order_mapping(projection)
    for expr, _ in projection.order:
        _check_expr(_substitute(expr, mapping), order_scope, allow_aggregates=False)
    return set(names)


def check_scope(statement: CypherStatement):
    """
    Reject undefined variables and misplaced aggregates.

    Raises:
        CypherEvalError: With kind "syntax"
    """
    scope: set[str] = set()
    for clause in statement.clauses:
        if isinstance(clause, MatchClause):
            scope = scope | {v for p in clause.patterns for v in p.variables()}
            for pattern in clause.patterns:
                for node in pattern.nodes:
                    for _, expr in node.properties:
                        _check_expr(expr, scope, allow_aggregates=False)
            if clause.where is not None:
                _check_expr(clause.where, scope, allow_aggregates=False)
        elif isinstance(clause, UnwindClause):
            _check_expr(clause.expr, scope, allow_aggregates=False)
            scope = scope | {clause.name}
        else:
            scope = _check_projection(clause.projection, scope, require_alias=True)
            if clause.where is not None:
                _check_expr(clause.where, scope, allow_aggregates=False)
    _check_projection(statement.returns.projection, scope, require_alias=False)


@lru_cache(maxsize=512)
def parse_cypher(text: str) -> CypherStatement:
    """
    Parse and scope-check a Cypher query.

    Raises:
        CypherEvalError: With kind "syntax"
    """
    try:
        tree = _CypherGrammar.parse(text)
        statement = _Builder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, CypherEvalError):
            raise e.orig_exc from None
        raise CypherEvalError("syntax", str(e.orig_exc)) from e
    except LarkError as e:
        raise CypherEvalError("syntax", f"Invalid Cypher: {e}") from e
    check_scope(statement)
    return statement


def _render_literal(lit: Lit) -> str:
    value = lit.value
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"
    return str(value)


def render(expr: Expr) -> str:
    """Cypher text of an expression; used for unaliased column names."""
    if isinstance(expr, Lit):
        return _render_literal(expr)
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, Prop):
        return f"{render(expr.base)}.{expr.key}"
    if isinstance(expr, Unary):
        return f"-{render(expr.operand)}" if expr.op == "-" else f"NOT {render(expr.operand)}"
    if isinstance(expr, Binary):
        parts = []
        for side in (expr.left, expr.right):
            text = render(side)
            parts.append(f"({text})" if isinstance(side, Binary) else text)
        return f"{parts[0]} {expr.op} {parts[1]}"
    if isinstance(expr, IsNull):
        return f"{render(expr.operand)} IS {'NOT ' if expr.negated else ''}NULL"
    if isinstance(expr, Func):
        distinct = "DISTINCT " if expr.distinct else ""
        return f"{expr.spelling or expr.name}({distinct}{', '.join(render(a) for a in expr.args)})"
    if isinstance(expr, CountStar):
        return f"{expr.spelling}(*)"
    if isinstance(expr, ListExpr):
        return "[" + ", ".join(render(i) for i in expr.items) + "]"
    raise TypeError(f"Cannot render {expr!r}")


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

# Ascending ORDER BY: nodes, lists, temporals, strings, booleans, numbers, null last.
_ORDER_RANK = {
    "node": 1,
    "list": 3,
    "datetime": 5,
    "date": 6,
    "string": 7,
    "boolean": 8,
    "number": 9,
    "null": 10,
}


def order_key(value: Any) -> tuple:
    kind = _value_kind(value)
    if kind == "node":
        return (_ORDER_RANK[kind], value.uri)
    if kind == "list":
        return (_ORDER_RANK[kind], tuple(order_key(v) for v in value))
    if kind == "null":
        return (_ORDER_RANK[kind], 0)
    return (_ORDER_RANK.get(kind, 11), value)


def identity(value: Any) -> tuple:
    """Hashable grouping key; numbers and booleans never collide."""
    kind = _value_kind(value)
    if kind == "node":
        return (kind, value.uri)
    if kind == "list":
        return (kind, tuple(identity(v) for v in value))
    return (kind, value)


def _equal(left: Any, right: Any) -> Optional[bool]:
    if left is None or right is None:
        return None
    lk, rk = _value_kind(left), _value_kind(right)
    if lk != rk:
        return False
    if lk == "list":
        if len(left) != len(right):
            return False
        result: Optional[bool] = True
        for a, b in zip(left, right):
            same = _equal(a, b)
            if same is False:
                return False
            if same is None:
                result = None
        return result
    return left == right


_ORDERABLE = {"number", "string", "boolean", "date", "datetime"}


def _compare(op: str, left: Any, right: Any) -> Optional[bool]:
    if op == "=":
        return _equal(left, right)
    if op == "<>":
        same = _equal(left, right)
        return None if same is None else not same
    if left is None or right is None:
        return None
    lk, rk = _value_kind(left), _value_kind(right)
    if lk != rk or lk not in _ORDERABLE:
        return None
    if op == "<":
        return left < right
    if op == ">":
        return left > right
    if op == "<=":
        return left <= right
    return left >= right


def _truth(value: Any, context: str) -> Optional[bool]:
    if value is None or isinstance(value, bool):
        return value
    raise CypherEvalError("runtime", f"{context} expects a boolean, got {_value_kind(value)}")


def _number(value: Any, context: str) -> Decimal:
    if _value_kind(value) != "number":
        raise CypherEvalError("runtime", f"{context} expects a number, got {_value_kind(value)}")
    return value


def _arithmetic(op: str, left: Any, right: Any) -> Any:
    if left is None or right is None:
        return None
    if op == "+" and isinstance(left, str) and isinstance(right, str):
        return left + right
    a = _number(left, f"'{op}'")
    b = _number(right, f"'{op}'")
    floating = not (_is_integer(a) and _is_integer(b))
    try:
        if op == "+":
            result = a + b
        elif op == "-":
            result = a - b
        elif op == "*":
            result = a * b
        elif b == 0:
            raise CypherEvalError("runtime", "/ by zero")
        elif op == "/":
            result = a / b if floating else a // b
        else:
            result = a % b
    except (DivisionByZero, InvalidOperation) as e:
        raise CypherEvalError("runtime", f"arithmetic error: {e}") from e
    return _as_float(result) if floating else result


def _to_date(value: Any) -> Optional[date]:
    if value is None:
        return None
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    if isinstance(value, str):
        try:
            return date.fromisoformat(value[:10])
        except ValueError as e:
            raise CypherEvalError("runtime", f"Text cannot be parsed to a date: '{value}'") from e
    raise CypherEvalError("runtime", f"date() expects a string or temporal, got {_value_kind(value)}")


class _Evaluator:
    """Evaluates expressions against one row; group holds the rows of an aggregation group."""

    def __init__(self, graph: PropertyGraph, row: dict[str, Any], group: Optional[list] = None):
        self.graph = graph
        self.row = row
        self.group = group

    def eval(self, expr: Expr) -> Any:
        if isinstance(expr, Lit):
            return expr.value
        if isinstance(expr, VarRef):
            return self.row[expr.name]
        if isinstance(expr, Prop):
            return self.prop(self.eval(expr.base), expr.key)
        if isinstance(expr, Unary):
            value = self.eval(expr.operand)
            if expr.op == "NOT":
                value = _truth(value, "NOT")
                return None if value is None else not value
            return None if value is None else -_number(value, "unary minus")
        if isinstance(expr, IsNull):
            is_null = self.eval(expr.operand) is None
            return not is_null if expr.negated else is_null
        if isinstance(expr, Binary):
            return self.binary(expr)
        if isinstance(expr, ListExpr):
            return [self.eval(item) for item in expr.items]
        if is_aggregate(expr):
            return self.aggregate(expr)
        if isinstance(expr, Func):
            return self.call(expr)
        raise TypeError(f"Cannot evaluate {expr!r}")

    def prop(self, base: Any, key: str) -> Any:
        if base is None:
            return None
        if isinstance(base, NodeRef):
            return self.graph.properties(base.uri).get(key)
        if isinstance(base, date) and key in ("year", "month", "day"):
            return Decimal(getattr(base, key))
        raise CypherEvalError("runtime", f"Cannot read property '{key}' of a {_value_kind(base)}")

    def binary(self, expr: Binary) -> Any:
        op = expr.op
        if op in ("AND", "OR", "XOR"):
            left = _truth(self.eval(expr.left), op)
            if op == "AND" and left is False:
                return False
            if op == "OR" and left is True:
                return True
            right = _truth(self.eval(expr.right), op)
            if op == "AND":
                return False if right is False else (None if None in (left, right) else True)
            if op == "OR":
                return True if right is True else (None if None in (left, right) else False)
            return None if None in (left, right) else left != right

        left, right = self.eval(expr.left), self.eval(expr.right)
        if op in ("=", "<>", "<", ">", "<=", ">="):
            return _compare(op, left, right)
        if op in ("CONTAINS", "STARTS WITH", "ENDS WITH"):
            if not isinstance(left, str) or not isinstance(right, str):
                return None
            if op == "CONTAINS":
                return right in left
            if op == "STARTS WITH":
                return left.startswith(right)
            return left.endswith(right)
        if op == "IN":
            return self.membership(left, right)
        return _arithmetic(op, left, right)

    @staticmethod
    def membership(value: Any, items: Any) -> Optional[bool]:
        if items is None:
            return None
        if not isinstance(items, list):
            raise CypherEvalError("runtime", f"IN expects a list, got {_value_kind(items)}")
        if value is None:
            return None if items else False
        unknown = False
        for item in items:
            same = _equal(value, item)
            if same:
                return True
            if same is None:
                unknown = True
        return None if unknown else False

    def call(self, expr: Func) -> Any:
        if len(expr.args) != 1:
            raise CypherEvalError("runtime", f"{expr.spelling}() takes one argument")
        value = self.eval(expr.args[0])
        if expr.name == "date":
            return _to_date(value)
        if value is None:
            return None
        if expr.name in ("tolower", "toupper"):
            if not isinstance(value, str):
                raise CypherEvalError("runtime", f"{expr.spelling}() expects a string")
            return value.lower() if expr.name == "tolower" else value.upper()
        if expr.name == "size":
            if not isinstance(value, (str, list)):
                raise CypherEvalError("runtime", "size() expects a string or list")
            return Decimal(len(value))
        return abs(_number(value, "abs()"))

    def aggregate(self, expr: Expr) -> Any:
        if self.group is None:
            raise CypherEvalError("runtime", "aggregate outside of a projection")
        if isinstance(expr, CountStar):
            return Decimal(len(self.group))

        values = []
        for row in self.group:
            value = _Evaluator(self.graph, row).eval(expr.args[0])
            if value is not None:
                values.append(value)
        if expr.distinct:
            unique = {}
            for value in values:
                unique.setdefault(identity(value), value)
            values = list(unique.values())

        if expr.name == "count":
            return Decimal(len(values))
        if expr.name == "collect":
            return values
        if expr.name in ("sum", "avg"):
            total = Decimal(0)
            for value in values:
                total += _number(value, f"{expr.spelling}()")
            if expr.name == "sum":
                return total
            return _as_float(total / len(values)) if values else None
        if not values:
            return None
        pick = min if expr.name == "min" else max
        return pick(values, key=order_key)


# ---------------------------------------------------------------------------
# Clauses
# ---------------------------------------------------------------------------

Row = dict[str, Any]
Edge = tuple[str, str, str]


class _Engine:
    def __init__(self, graph: PropertyGraph):
        self.graph = graph

    def evaluator(self, row: Row, group: Optional[list] = None) -> _Evaluator:
        return _Evaluator(self.graph, row, group)

    def holds(self, expr: Optional[Expr], row: Row) -> bool:
        if expr is None:
            return True
        return _truth(self.evaluator(row).eval(expr), "WHERE") is True

    # -- pattern matching ---------------------------------------------------

    def node_matches(self, spec: NodeSpec, uri: str, row: Row) -> bool:
        if spec.label and spec.label not in self.graph.labels(uri):
            return False
        stored = self.graph.properties(uri)
        for key, expr in spec.properties:
            if _equal(stored.get(key), self.evaluator(row).eval(expr)) is not True:
                return False
        return True

    def bind(self, spec: NodeSpec, uri: str, row: Row) -> Optional[Row]:
        if not self.node_matches(spec, uri, row):
            return None
        if spec.var is None:
            return row
        if spec.var in row:
            bound = row[spec.var]
            return row if isinstance(bound, NodeRef) and bound.uri == uri else None
        extended = dict(row)
        extended[spec.var] = NodeRef(uri=uri)
        return extended

    def candidates(self, spec: NodeSpec, row: Row) -> list[str]:
        if spec.var is not None and spec.var in row:
            bound = row[spec.var]
            return [bound.uri] if isinstance(bound, NodeRef) else []
        return self.graph.node_ids()

    def steps(self, current: str, rel: RelSpec) -> Iterator[tuple[Edge, str]]:
        seen: set[Edge] = set()
        if rel.direction in ("out", "both"):
            for u, v, k in self.graph.out_edges(current, rel.rel_type):
                seen.add((u, k, v))
                yield (u, k, v), v
        if rel.direction in ("in", "both"):
            for u, v, k in self.graph.in_edges(current, rel.rel_type):
                if (u, k, v) not in seen:
                    yield (u, k, v), u

    def walk(self, pattern: Pattern, index: int, current: str, row: Row, used: frozenset):
        if index == len(pattern.rels):
            yield row, used
            return
        target = pattern.nodes[index + 1]
        for edge, neighbour in self.steps(current, pattern.rels[index]):
            if edge in used:
                continue
            bound = self.bind(target, neighbour, row)
            if bound is not None:
                yield from self.walk(pattern, index + 1, neighbour, bound, used | {edge})

    def match_patterns(self, patterns: tuple[Pattern, ...], row: Row, used: frozenset) -> Iterator[Row]:
        if not patterns:
            yield row
            return
        pattern = patterns[0]
        first = pattern.nodes[0]
        for uri in self.candidates(first, row):
            bound = self.bind(first, uri, row)
            if bound is None:
                continue
            for extended, now_used in self.walk(pattern, 0, uri, bound, used):
                yield from self.match_patterns(patterns[1:], extended, now_used)

    def match(self, clause: MatchClause, rows: list[Row]) -> list[Row]:
        new_vars = [v for p in clause.patterns for v in p.variables()]
        out = []
        for row in rows:
            found = [m for m in self.match_patterns(clause.patterns, row, frozenset()) if self.holds(clause.where, m)]
            if found:
                out.extend(found)
            elif clause.optional:
                padded = dict(row)
                for var in new_vars:
                    padded.setdefault(var, None)
                out.append(padded)
        return out

    # -- projections --------------------------------------------------------

    def project(self, projection: Projection, rows: list[Row]) -> list[Row]:
        """Evaluate a WITH or RETURN body; returns rows keyed by item name."""
        items = projection.items
        names = [item.name for item in items]
        aggregating = any(has_aggregate(item.expr) for item in items)

        projected: list[tuple[Row, Row]] = []
        if aggregating:
            keys = [item for item in items if not has_aggregate(item.expr)]
            groups: dict[tuple, list[Row]] = {}
            for row in rows:
                evaluator = self.evaluator(row)
                key = tuple(identity(evaluator.eval(item.expr)) for item in keys)
                groups.setdefault(key, []).append(row)
            if not groups and not keys:
                groups[()] = []
            for members in groups.values():
                evaluator = self.evaluator(members[0] if members else {}, members)
                values = {name: evaluator.eval(item.expr) for name, item in zip(names, items)}
                projected.append((values, values))
        else:
            for row in rows:
                evaluator = self.evaluator(row)
                values = {name: evaluator.eval(item.expr) for name, item in zip(names, items)}
                scope = values if projection.distinct else {**row, **values}
                projected.append((values, scope))

        if projection.distinct:
            unique: dict[tuple, tuple[Row, Row]] = {}
            for values, scope in projected:
                unique.setdefault(tuple(identity(values[n]) for n in names), (values, scope))
            projected = list(unique.values())

        if projection.order:
            mapping = _order_mapping(projection)
            for expr, descending in reversed(projection.order):
                key_expr = _substitute(expr, mapping)
                projected.sort(
                    key=lambda pair, e=key_expr: order_key(self.evaluator(pair[1]).eval(e)),
                    reverse=descending,
                )

        result = [values for values, _ in projected]
        if projection.skip is not None:
            result = result[projection.skip :]
        if projection.limit is not None:
            result = result[: projection.limit]
        return result

    def unwind(self, clause: UnwindClause, rows: list[Row]) -> list[Row]:
        out = []
        for row in rows:
            value = self.evaluator(row).eval(clause.expr)
            if value is None:
                continue
            for element in value if isinstance(value, list) else [value]:
                extended = dict(row)
                extended[clause.name] = element
                out.append(extended)
        return out

    def run(self, statement: CypherStatement) -> ResultTable:
        rows: list[Row] = [{}]
        for clause in statement.clauses:
            if isinstance(clause, MatchClause):
                rows = self.match(clause, rows)
            elif isinstance(clause, UnwindClause):
                rows = self.unwind(clause, rows)
            else:
                rows = self.project(clause.projection, rows)
                rows = [row for row in rows if self.holds(clause.where, row)]
        projection = statement.returns.projection
        names = [item.name for item in projection.items]
        result = self.project(projection, rows)
        return ResultTable(columns=names, rows=[tuple(row[n] for n in names) for row in result])


def eval_cypher(graph: PropertyGraph, query: Union[str, CypherStatement]) -> ResultTable:
    """
    Run a Cypher query against a property graph.

    Args:
        graph: Materialized property graph
        query: Query text or a statement from parse_cypher

    Returns:
        ResultTable with one column per RETURN item

    Raises:
        CypherEvalError: "syntax" for unparseable or ill-scoped queries,
            "runtime" for type errors during evaluation
    """
    statement = parse_cypher(query) if isinstance(query, str) else query
    table = _Engine(graph).run(statement)
    logger.debug("cypher returned %d rows", len(table.rows))
    return table
