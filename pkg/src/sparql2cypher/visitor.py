"""
Visitor: walks a SPARQL parse tree and fills the Cypher pattern AST.

Triples go through two passes. The first records class labels of node
variables; the second sorts every other triple into a relationship, a value
constraint on a node, or a variable property. FILTER terms land in WHERE,
aggregates and group keys in WITH, HAVING terms in WHERE_WITH.
"""

import logging
import re
from collections.abc import Callable, Iterable
from typing import Optional

from .frontend import (
    ParseTree,
    PrefixMap,
    Token,
    TokenKind,
    UnsupportedError,
    pg_name,
    resolve_prefixes,
)
from .query_model import (
    Aggregate,
    BinaryOp,
    Call,
    Expr,
    InList,
    Iri,
    Literal,
    TriplePattern,
    UnaryOp,
    Var,
    contains_aggregate,
    extract_triples,
    is_type_predicate,
    lower_expression,
    var_name,
    where_elements,
)
from .schemas import Ast, NodePattern, Relationship

logger = logging.getLogger(__name__)


class ConflictError(Exception):
    """Raised when two parts of a query assign incompatible meanings to one name."""

    pass


class UnboundVariableError(Exception):
    """Raised when a projected or filtered variable is never bound by the pattern."""

    pass


# Words the Cypher subset grammar reserves; variables may not use them.
CYPHER_RESERVED = frozenset(
    {
        "match", "optional", "where", "with", "return", "order", "by", "skip", "limit",
        "unwind", "and", "or", "xor", "not", "as", "distinct", "asc", "desc", "ascending",
        "descending", "in", "contains", "starts", "ends", "is", "null", "true", "false",
        "case", "when", "then", "else", "end", "create", "delete", "set", "remove", "merge",
        "detach", "union", "all", "call", "yield",
    }
)

_ANONYMOUS_ALIAS = re.compile(r"agg__\d+")

_RELATIONAL = {"=": "=", "!=": "<>", "<": "<", ">": ">", "<=": "<=", ">=": ">="}

_PRECEDENCE = {"||": 1, "&&": 2, "!": 3, "REL": 4, "+": 5, "-": 5, "*": 6, "/": 6, "NEG": 7}

_STRING_PREDICATES = {"CONTAINS": "CONTAINS", "STRSTARTS": "STARTS WITH", "STRENDS": "ENDS WITH"}
_FUNCTIONS = {"LCASE": "toLower", "UCASE": "toUpper", "STRLEN": "size", "ABS": "abs"}
_DATE_PARTS = {"YEAR": "year", "MONTH": "month", "DAY": "day"}


def init_ast() -> Ast:
    """Empty AST: every container empty, LIMIT and OFFSET unset."""
    return Ast()


def visit_var(v: str, in_aggregate: bool, ast: Ast) -> str:
    """
    Clean a variable name and register it.

    Args:
        v: Variable text such as `?x` or `$x`
        in_aggregate: Whether the variable sits inside an aggregate call
        ast: AST being built

    Returns:
        The bare name, or its namespaced property when inside an aggregate
    """
    name = v.strip().lstrip("?$")
    if name.lower() in CYPHER_RESERVED:
        raise UnsupportedError("RESERVED_VARIABLE", detail=f"variable '{name}' is a Cypher keyword")
    if name not in ast.vars:
        ast.vars.append(name)
    if in_aggregate and name in ast.props:
        return ast.props[name]
    return name


def visit_aggregate(expr: str, alias: Optional[str], ast: Ast) -> str:
    """
    Register an aggregate expression under an alias.

    Unaliased aggregates receive the next free `agg__N` name.

    Raises:
        ConflictError: If an explicit alias is already bound to another expression
    """
    if alias is None:
        alias = f"agg__{sum(1 for key in ast.aggregates if _ANONYMOUS_ALIAS.fullmatch(key))}"
    elif alias in ast.aggregates and ast.aggregates[alias] != expr:
        raise ConflictError(
            f"Alias '{alias}' is bound to both {ast.aggregates[alias]} and {expr}"
        )
    elif alias in ast.with_ and alias not in ast.aggregates:
        raise ConflictError(f"Alias '{alias}' is already a grouping key")

    if alias not in ast.vars:
        ast.vars.append(alias)
    ast.with_[alias] = f"{expr} AS {alias}"
    ast.aggregates[alias] = expr
    return alias


def visit_limit(n: int, ast: Ast) -> Ast:
    if n < 0:
        raise ValueError("LIMIT must be non-negative")
    ast.limit = n
    return ast


def visit_offset(n: int, ast: Ast) -> Ast:
    if n < 0:
        raise ValueError("OFFSET must be non-negative")
    ast.skip = n
    return ast


def render_expression(
    expr: Expr,
    var: Callable[[str], str],
    aggregate: Callable[[Aggregate], str],
    parent: int = 0,
) -> str:
    """
    Render a lowered SPARQL expression as Cypher text.

    `||` and `&&` are kept as written; the WHERE builders turn them into
    OR/AND with explicit grouping. Sub-expressions binding looser than their
    parent are bracketed.
    """

    def sub(e: Expr, level: int) -> str:
        return render_expression(e, var, aggregate, level)

    def wrap(text: str, level: int) -> str:
        return f"({text})" if level < parent else text

    if isinstance(expr, Var):
        return var(expr.name)
    if isinstance(expr, Literal):
        return expr.cypher
    if isinstance(expr, Aggregate):
        return aggregate(expr)
    if isinstance(expr, InList):
        items = ", ".join(item.cypher for item in expr.items)
        return wrap(f"{sub(expr.operand, 5)} IN [{items}]", 4)
    if isinstance(expr, UnaryOp):
        if expr.op == "!":
            inner = sub(expr.operand, 0)
            if not isinstance(expr.operand, (Var, Literal, Aggregate)):
                inner = f"({inner})"
            return wrap(f"NOT {inner}", 3)
        if expr.op == "-":
            return wrap(f"-{sub(expr.operand, 8)}", 7)
        return sub(expr.operand, parent)
    if isinstance(expr, BinaryOp):
        if expr.op in _RELATIONAL:
            text = f"{sub(expr.left, 5)} {_RELATIONAL[expr.op]} {sub(expr.right, 5)}"
            return wrap(text, 4)
        level = _PRECEDENCE[expr.op]
        text = f"{sub(expr.left, level)} {expr.op} {sub(expr.right, level + 1)}"
        return wrap(text, level)
    if isinstance(expr, Call):
        args = expr.args
        if expr.name in _STRING_PREDICATES:
            return wrap(f"{sub(args[0], 5)} {_STRING_PREDICATES[expr.name]} {sub(args[1], 5)}", 4)
        if expr.name == "BOUND":
            return wrap(f"{sub(args[0], 5)} IS NOT NULL", 4)
        if expr.name in _FUNCTIONS:
            return f"{_FUNCTIONS[expr.name]}({sub(args[0], 0)})"
        if expr.name in _DATE_PARTS:
            return f"date({sub(args[0], 0)}).{_DATE_PARTS[expr.name]}"
        raise UnsupportedError("UNSUPPORTED_FUNCTION", detail=expr.name)
    raise TypeError(f"Cannot render {expr!r}")


class Visitor:
    """
    Builds the AST for one query.

    Args:
        prefixes: Prefix map of the query
        explicit_rels: Prefixed predicate names always mapped to relationships
        strict_prefixes: Reject undeclared prefixes while naming
        default_prefix_label: Label for the empty prefix
    """

    def __init__(
        self,
        prefixes: PrefixMap,
        explicit_rels: Iterable[str] = (),
        strict_prefixes: bool = False,
        default_prefix_label: str = "ROOT",
    ):
        self.prefixes = prefixes
        self.strict = strict_prefixes
        self.default_label = default_prefix_label
        self.explicit = {self.name(Iri(p)) for p in explicit_rels}
        self.required_vars: set[str] = set()
        self.select_expressions: dict[str, bool] = {}
        # GROUP BY alias -> WITH key it stands for; None until the condition is visited
        self.group_aliases: dict[str, Optional[str]] = {}
        self.required_props: list[str] = []

    def name(self, iri: Iri) -> str:
        return pg_name(iri.text, self.prefixes, self.strict, self.default_label)

    # -- WHERE patterns -----------------------------------------------------

    def is_type_triple(self, triple: TriplePattern) -> bool:
        return triple.is_simple and is_type_predicate(triple.path[0].predicate, self.prefixes)

    def find_labelled_nodes(self, triples: list[TriplePattern], ast: Ast) -> Ast:
        """
        First pass: every rdf:type triple labels its subject.

        Raises:
            ConflictError: If one subject receives two different labels
        """
        for triple in triples:
            if not self.is_type_triple(triple):
                continue
            if not isinstance(triple.subject, Var):
                raise UnsupportedError("CONSTANT_SUBJECT", detail=triple.subject.text)
            if isinstance(triple.object, Var):
                raise UnsupportedError("VARIABLE_CLASS", detail=f"?{triple.object.name}")
            if isinstance(triple.object, Literal):
                raise UnsupportedError("LITERAL_CLASS", detail=triple.object.lexical)

            subject = visit_var(triple.subject.name, False, ast)
            if triple.optional and subject in self.required_vars:
                raise UnsupportedError("OPTIONAL_LABEL", detail=f"label of required node ?{subject}")
            label = self.name(triple.object)
            node = ast.nodes.setdefault(subject, NodePattern())
            if node.label is not None and node.label != label:
                raise ConflictError(f"Variable '{subject}' labelled both {node.label} and {label}")
            node.label = label
        return ast

    def categorise_triples(self, remaining: list[TriplePattern], ast: Ast) -> Ast:
        """
        Second pass: relationships, value constraints and variable properties.

        A triple becomes a relationship when both ends are node variables or
        one of its predicates is an explicit relationship type. Node-ness is
        taken from the labels found in the first pass plus the endpoints of
        explicit-relationship triples, so the outcome does not depend on
        triple order.
        """
        node_vars = set(ast.nodes)
        for triple in remaining:
            if self._forced(triple):
                for term in (triple.subject, triple.object):
                    if isinstance(term, Var):
                        node_vars.add(term.name)

        for triple in remaining:
            if not isinstance(triple.subject, Var):
                raise UnsupportedError("CONSTANT_SUBJECT", detail=triple.subject.text)
            if any(is_type_predicate(step.predicate, self.prefixes) for step in triple.path):
                raise UnsupportedError("TYPE_PATH", detail="rdf:type inside a property path")
            if len({step.inverse for step in triple.path}) > 1:
                raise UnsupportedError("MIXED_INVERSE_PATH")
            if isinstance(triple.object, Iri):
                raise UnsupportedError("IRI_OBJECT", detail=triple.object.text)

            subject = visit_var(triple.subject.name, False, ast)
            names = [self.name(step.predicate) for step in triple.path]
            obj = triple.object

            if isinstance(obj, Var) and (
                (subject in node_vars and obj.name in node_vars) or self._forced(triple)
            ):
                target = visit_var(obj.name, False, ast)
                ast.rels.append(
                    Relationship(
                        s=subject,
                        r="/".join(f":{n}" for n in names),
                        o=target,
                        optional=triple.optional,
                        inverse=triple.path[0].inverse,
                    )
                )
                for n in names:
                    if f":{n}" not in ast.rel_types:
                        ast.rel_types.append(f":{n}")
                for v in (subject, target):
                    ast.nodes.setdefault(v, NodePattern())
                continue

            if not triple.is_simple:
                raise UnsupportedError("PATH_TO_PROPERTY", detail="property path ending in a value")

            if isinstance(obj, Literal):
                if triple.optional and subject in self.required_vars:
                    raise UnsupportedError("OPTIONAL_VALUE_CONSTRAINT", detail=f"?{subject} {names[0]}")
                ast.nodes.setdefault(subject, NodePattern()).properties[names[0]] = obj.cypher
                continue

            target = visit_var(obj.name, False, ast)
            path = f"{subject}.{names[0]}"
            if target in ast.props and ast.props[target] != path:
                raise UnsupportedError(
                    "SHARED_PROPERTY_VARIABLE", detail=f"?{target} bound by {ast.props[target]} and {path}"
                )
            ast.props[target] = path
            if not triple.optional and target not in self.required_props:
                self.required_props.append(target)

        for triple in remaining:
            ast.nodes.setdefault(triple.subject.name, NodePattern())
        for name, node in ast.nodes.items():
            node.optional = name not in self.required_vars
        return ast

    def _forced(self, triple: TriplePattern) -> bool:
        return any(self.name(step.predicate) in self.explicit for step in triple.path)

    def check_optional_blocks(self, triples: list[TriplePattern], ast: Ast):
        """Every OPTIONAL subject must be required or reached by an optional relationship."""
        reached = set(self.required_vars)
        for rel in ast.rels:
            if rel.optional:
                reached.update((rel.s, rel.o))
        for triple in triples:
            if triple.optional and triple.subject.name not in reached:
                raise UnsupportedError(
                    "DISCONNECTED_OPTIONAL", detail=f"?{triple.subject.name} is not joined to the pattern"
                )

    # -- constraints --------------------------------------------------------

    def _bound_var(self, name: str, ast: Ast) -> str:
        name = visit_var(name, False, ast)
        if name in ast.props:
            return ast.props[name]
        if name in ast.nodes:
            return name
        raise UnboundVariableError(f"Variable '?{name}' is not bound by the WHERE pattern")

    def _aggregate_text(self, agg: Aggregate, ast: Ast) -> str:
        if agg.arg is None:
            inner = "*"
        else:
            inner = render_expression(
                agg.arg,
                lambda n: self._aggregate_var(n, ast),
                lambda a: self._nested_aggregate(a),
            )
        distinct = "DISTINCT " if agg.distinct else ""
        return f"{agg.name}({distinct}{inner})"

    def _aggregate_var(self, name: str, ast: Ast) -> str:
        resolved = visit_var(name, True, ast)
        if resolved == name and name not in ast.nodes:
            raise UnboundVariableError(f"Variable '?{name}' is not bound by the WHERE pattern")
        return resolved

    @staticmethod
    def _nested_aggregate(agg: Aggregate) -> str:
        raise UnsupportedError("NESTED_AGGREGATE", detail=agg.name)

    def _alias_for(self, agg: Aggregate, ast: Ast) -> str:
        text = self._aggregate_text(agg, ast)
        for alias, expr in ast.aggregates.items():
            if expr == text:
                return alias
        return visit_aggregate(text, None, ast)

    def _group_var(self, name: str, ast: Ast) -> str:
        """A variable read after WITH: make sure it was carried through."""
        name = visit_var(name, False, ast)
        if self.group_aliases.get(name):
            return self.group_aliases[name]
        if name not in ast.with_:
            if name in ast.props:
                ast.with_[name] = f"{ast.props[name]} AS {name}"
            elif name in ast.nodes:
                ast.with_[name] = name
            else:
                raise UnboundVariableError(f"Variable '?{name}' is not in scope after grouping")
        return name

    def visit_constraint(self, constraint: ParseTree, context: str, ast: Ast) -> Ast:
        """
        Categorise one FILTER or HAVING constraint.

        FILTER terms go to WHERE with variables namespaced through props.
        HAVING terms reference aggregate aliases and go to WHERE_WITH.
        Top-level comparisons and IN are stored as [lhs, op, rhs] triples.
        """
        expr = lower_expression(constraint, self.prefixes)
        if context == "FILTER":
            var = lambda n: self._bound_var(n, ast)  # noqa: E731
            agg = lambda a: self._nested_aggregate(a)  # noqa: E731
            target = ast.where
        elif context == "HAVING":
            var = lambda n: self._group_var(n, ast)  # noqa: E731
            agg = lambda a: self._alias_for(a, ast)  # noqa: E731
            target = ast.where_with
        else:
            raise ValueError(f"Unknown constraint context: {context}")

        if isinstance(expr, BinaryOp) and expr.op in _RELATIONAL:
            lhs = render_expression(expr.left, var, agg, 5)
            rhs = render_expression(expr.right, var, agg, 5)
            target.append([lhs, _RELATIONAL[expr.op], rhs])
        elif isinstance(expr, InList):
            lhs = render_expression(expr.operand, var, agg, 5)
            target.append([lhs, "IN", "(" + ", ".join(i.cypher for i in expr.items) + ")"])
        else:
            target.append(render_expression(expr, var, agg))
        return ast

    # -- projection and modifiers -------------------------------------------

    def visit_select(self, clause: ParseTree, ast: Ast) -> Ast:
        """Projection terms joined into one RETURN entry; DISTINCT leads it."""
        distinct = False
        terms: list[str] = []
        for child in clause.children:
            if isinstance(child, Token):
                if child.is_keyword("DISTINCT"):
                    distinct = True
                elif child.text == "*":
                    terms.append("*")
                continue
            terms.append(self._select_item(child, ast))

        prefix = "DISTINCT " if distinct else ""
        ast.return_items.append(prefix + ", ".join(terms))
        return ast

    def _select_item(self, item: ParseTree, ast: Ast) -> str:
        first = item.children[0]
        if isinstance(first, Token) and first.kind == TokenKind.VAR:
            name = visit_var(first.text, False, ast)
            known = (ast.props, ast.nodes, ast.with_, self.group_aliases)
            if not any(name in scope for scope in known):
                raise UnboundVariableError(f"Projected variable '?{name}' is not bound by the WHERE pattern")
            return name

        if isinstance(first, Token):
            expr = lower_expression(item.children[1], self.prefixes)
            alias: Optional[str] = var_name(item.children[3])
        else:
            expr = lower_expression(first, self.prefixes)
            alias = var_name(item.children[2]) if len(item.children) == 3 else None

        if alias is not None:
            alias = visit_var(alias, False, ast)
            if alias in ast.props or alias in ast.nodes:
                raise ConflictError(f"Alias '{alias}' is already bound by the WHERE pattern")

        if isinstance(expr, Aggregate):
            return visit_aggregate(self._aggregate_text(expr, ast), alias, ast)

        if alias is None:
            raise ConflictError("Projected expression needs an alias")
        has_aggregate = contains_aggregate(expr)
        if has_aggregate:
            text = render_expression(expr, lambda n: self._group_var(n, ast), lambda a: self._alias_for(a, ast))
        else:
            text = render_expression(expr, lambda n: self._bound_var(n, ast), self._nested_aggregate)
        self.select_expressions[alias] = has_aggregate
        return f"{text} AS {alias}"

    def visit_group_condition(self, condition: ParseTree, ast: Ast) -> str:
        """
        Register one GROUP BY condition in WITH and return its key.

        Variables backed by a property are projected as `node.prop AS var`;
        an explicit alias is registered once and its AS stripped from the key.
        `(?a AS ?b)` with a already a key leaves WITH unchanged and makes b
        stand for a.
        """
        children = condition.children
        if len(children) == 1 and isinstance(children[0], Token):
            name = visit_var(children[0].text, False, ast)
            if name not in ast.with_:
                if name in ast.props:
                    ast.with_[name] = f"{ast.props[name]} AS {name}"
                elif name in ast.nodes:
                    ast.with_[name] = name
                else:
                    raise UnboundVariableError(f"Grouping variable '?{name}' is not bound")
            return name

        if len(children) == 5:
            expr = lower_expression(children[1], self.prefixes)
            alias = visit_var(children[3].text, False, ast)
            key = alias
            if isinstance(expr, Var) and visit_var(expr.name, False, ast) in ast.with_:
                key = visit_var(expr.name, False, ast)
            elif alias not in ast.with_:
                text = render_expression(expr, lambda n: self._bound_var(n, ast), self._nested_aggregate)
                ast.with_[alias] = f"{text} AS {alias}"
            self.group_aliases[alias] = key
            return key

        inner = children[1] if len(children) == 3 else children[0]
        expr = lower_expression(inner, self.prefixes)
        if isinstance(expr, Var):
            return self.visit_group_condition(ParseTree("GroupCondition", (inner.first_token(),)), ast)
        text = render_expression(expr, lambda n: self._bound_var(n, ast), self._nested_aggregate)
        ast.with_.setdefault(text, text)
        return text

    def visit_order_condition(self, condition: ParseTree, ast: Ast) -> Ast:
        """One ORDER BY key; single-child conditions default to ASC."""
        children = condition.children
        direction = "ASC"
        if len(children) == 2:
            direction = "DESC" if children[0].is_keyword("DESC") else "ASC"
            node = children[1]
        else:
            node = children[0]
        expr = lower_expression(node, self.prefixes)

        if isinstance(expr, Var):
            name = visit_var(expr.name, False, ast)
            if name in ast.with_:
                key = name
            elif name in ast.props:
                key = ast.props[name]
            else:
                key = name
        elif isinstance(expr, Aggregate):
            key = self._alias_for(expr, ast)
        else:

            def order_var(n: str) -> str:
                n = visit_var(n, False, ast)
                if n in ast.with_:
                    return n
                return ast.props.get(n, n)

            key = render_expression(expr, order_var, lambda a: self._alias_for(a, ast))
        ast.order_by[key] = direction
        return ast

    def finalize(self, ast: Ast) -> Ast:
        """
        Route projections through WITH when the query groups.

        After a WITH only its aliases are in scope, so every projected
        variable and non-aggregate select expression is carried by it and
        ORDER BY keys naming a carried property use the alias instead.
        """
        if not ast.with_ or not ast.return_items:
            return ast

        entry = ast.return_items[0]
        distinct = entry.startswith("DISTINCT ")
        body = entry[len("DISTINCT "):] if distinct else entry
        items = []
        for item in split_top_level(body, ","):
            item = item.strip()
            if item == "*":
                items.append(item)
                continue
            expression, _, alias = item.rpartition(" AS ")
            if expression and alias in self.select_expressions:
                if not self.select_expressions[alias]:
                    ast.with_.setdefault(alias, item)
                    items.append(alias)
                else:
                    items.append(item)
                continue
            key = self._group_var(item, ast)
            items.append(key if key == item else f"{key} AS {item}")
        ast.return_items[0] = ("DISTINCT " if distinct else "") + ", ".join(items)

        carried = {ast.props[v]: v for v in ast.with_ if v in ast.props}
        ast.order_by = {carried.get(key, key): direction for key, direction in ast.order_by.items()}
        for key in ast.order_by:
            if key in ast.props or key in ast.nodes:
                self._group_var(key, ast)
        return ast


def split_top_level(text: str, separator: str) -> list[str]:
    """Split on separator outside brackets and quotes."""
    parts: list[str] = []
    depth = 0
    quote: Optional[str] = None
    start = 0
    index = 0
    while index < len(text):
        char = text[index]
        if quote:
            if char == "\\":
                index += 2
                continue
            if char == quote:
                quote = None
        elif char in "'\"":
            quote = char
        elif char in "([{":
            depth += 1
        elif char in ")]}":
            depth -= 1
        elif depth == 0 and text.startswith(separator, index):
            parts.append(text[start:index])
            index += len(separator)
            start = index
            continue
        index += 1
    parts.append(text[start:])
    return parts


def build_ast(
    tree: ParseTree,
    explicit_rels: Iterable[str] = (),
    strict_prefixes: bool = False,
    default_prefix_label: str = "ROOT",
    guard_properties: bool = False,
) -> Ast:
    """
    Traverse a parse tree and produce the complete AST.

    Args:
        tree: Parse tree from parse_sparql
        explicit_rels: Predicates forced to relationships
        strict_prefixes: Reject undeclared prefixes
        default_prefix_label: Label for the empty prefix
        guard_properties: Add `node.prop IS NOT NULL` to WHERE for every property
            variable bound by a required triple

    Returns:
        Populated Ast

    Raises:
        UnsupportedError: For constructs outside the subset; `.category` names the failure group
        ConflictError: For contradictory labels or aliases
        UnboundVariableError: For projected or filtered variables the pattern never binds
        AmbiguousNameError: For two prefixes with the same property-graph spelling
    """
    prefixes = resolve_prefixes(tree)
    prefixes.check_spellings(default_prefix_label)
    visitor = Visitor(prefixes, explicit_rels, strict_prefixes, default_prefix_label)
    ast = init_ast()

    triples = extract_triples(tree, prefixes)
    for triple in triples:
        for term in (triple.subject, triple.object):
            if isinstance(term, Var):
                visit_var(term.name, False, ast)
                if not triple.optional:
                    visitor.required_vars.add(term.name)

    visitor.find_labelled_nodes(triples, ast)
    remaining = [t for t in triples if not visitor.is_type_triple(t)]
    visitor.categorise_triples(remaining, ast)
    visitor.check_optional_blocks(triples, ast)
    if guard_properties:
        for name in visitor.required_props:
            ast.where.append(f"{ast.props[name]} IS NOT NULL")

    for element in where_elements(tree, prefixes):
        if element.kind == "filter":
            visitor.visit_constraint(element.tree, "FILTER", ast)

    select_query = tree.child("SelectQuery")
    modifier = select_query.child("SolutionModifier")
    group = modifier.child("GroupClause") if modifier is not None else None
    if group is not None:
        for condition in group.children_of("GroupCondition"):
            if len(condition.children) == 5:
                visitor.group_aliases[visit_var(condition.children[3].text, False, ast)] = None

    visitor.visit_select(select_query.child("SelectClause"), ast)

    if modifier is not None:
        if group is not None:
            for condition in group.children_of("GroupCondition"):
                visitor.visit_group_condition(condition, ast)
        having = modifier.child("HavingClause")
        if having is not None:
            for condition in having.children_of("HavingCondition"):
                visitor.visit_constraint(condition, "HAVING", ast)
        order = modifier.child("OrderClause")
        if order is not None:
            for condition in order.children_of("OrderCondition"):
                visitor.visit_order_condition(condition, ast)
        limits = modifier.child("LimitOffsetClauses")
        if limits is not None:
            for part in limits.children:
                n = int(part.children[1].text)
                if part.rule == "LimitClause":
                    visit_limit(n, ast)
                else:
                    visit_offset(n, ast)

    visitor.finalize(ast)
    logger.debug("built AST with %d nodes and %d relationships", len(ast.nodes), len(ast.rels))
    return ast
