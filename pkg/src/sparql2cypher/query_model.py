"""
Lowered views over the SPARQL parse tree.

The visitor and the brute-force SPARQL evaluator both read triples and
expressions through these small immutable types instead of re-walking raw
parse-tree shapes.
"""

from dataclasses import dataclass
from decimal import Decimal
from typing import Any, Optional, Union

from rdflib import Literal as RDFLiteral
from rdflib import URIRef
from rdflib.namespace import RDF, XSD

from .frontend import (
    AGGREGATES,
    Node,
    ParseTree,
    PrefixMap,
    SparqlSyntaxError,
    Token,
    TokenKind,
    resolve_prefixes,
)

RDF_TYPE = str(RDF.type)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Iri:
    """An IRI as written in the query: `p:local`, `:local`, `<...>` or `a`."""

    text: str

    @property
    def is_a(self) -> bool:
        return self.text == "a"


@dataclass(frozen=True)
class Literal:
    """A constant; value is the Python value, cypher its Cypher spelling."""

    value: Any
    cypher: str
    lexical: str
    datatype: Optional[str] = None


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Aggregate:
    name: str
    arg: Optional["Expr"]  # None means COUNT(*)
    distinct: bool = False


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class InList:
    operand: "Expr"
    items: tuple[Literal, ...]


Expr = Union[Var, Literal, Call, Aggregate, BinaryOp, UnaryOp, InList]
Term = Union[Var, Iri, Literal]


@dataclass(frozen=True)
class PathStep:
    predicate: Iri
    inverse: bool = False


@dataclass(frozen=True)
class TriplePattern:
    """One subject/path/object pattern; optional marks the enclosing OPTIONAL block."""

    subject: Term
    path: tuple[PathStep, ...]
    object: Term
    optional: bool = False
    block: int = 0

    @property
    def is_simple(self) -> bool:
        return len(self.path) == 1 and not self.path[0].inverse


# ---------------------------------------------------------------------------
# Literals
# ---------------------------------------------------------------------------


def term_value(literal: RDFLiteral) -> Any:
    """
    Python value of an RDF literal as both evaluators see it.

    Numbers become Decimal, booleans bool, dates datetime.date, everything
    else its lexical string.
    """
    value = literal.toPython()
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float, Decimal)):
        return Decimal(str(value))
    if isinstance(value, RDFLiteral):
        return str(literal)
    if hasattr(value, "isoformat") and literal.datatype in (XSD.date, XSD.dateTime):
        return value
    return str(value) if not isinstance(value, str) else value


def cypher_string(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def _unescape(body: str) -> str:
    out = []
    index = 0
    escapes = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
    while index < len(body):
        char = body[index]
        if char == "\\" and index + 1 < len(body):
            out.append(escapes.get(body[index + 1], body[index + 1]))
            index += 2
        else:
            out.append(char)
            index += 1
    return "".join(out)


def lower_literal(tree: ParseTree, prefixes: Optional[PrefixMap] = None) -> Literal:
    """Lower RDFLiteral, NumericLiteral or BooleanLiteral trees."""
    if tree.rule == "BooleanLiteral":
        flag = tree.children[0].text.lower() == "true"
        return Literal(flag, "true" if flag else "false", tree.children[0].text.lower(), str(XSD.boolean))

    if tree.rule == "NumericLiteral":
        text = "".join(token.text for token in tree.leaves())
        value = Decimal(text)
        is_double = "e" in text.lower()
        datatype = XSD.double if is_double else XSD.decimal if "." in text else XSD.integer
        return Literal(value, text, text, str(datatype))

    token = tree.children[0]
    quoted = token.text
    quote = quoted[0]
    body = quoted[1 : quoted.rindex(quote)]
    lexical = _unescape(body)
    if len(tree.children) == 3:
        datatype = _resolve_datatype(tree.children[2], prefixes)
        rdf_literal = RDFLiteral(lexical, datatype=URIRef(datatype))
        value = term_value(rdf_literal)
        if isinstance(value, Decimal):
            return Literal(value, str(value), lexical, datatype)
        if isinstance(value, bool):
            return Literal(value, "true" if value else "false", lexical, datatype)
        if hasattr(value, "isoformat") and not isinstance(value, str):
            return Literal(value, f"date({cypher_string(value.isoformat())})", lexical, datatype)
        return Literal(lexical, cypher_string(lexical), lexical, datatype)
    return Literal(lexical, cypher_string(lexical), lexical, None)


def _resolve_datatype(token: Token, prefixes: Optional[PrefixMap]) -> str:
    if token.kind == TokenKind.IRI:
        return token.text[1:-1]
    label, _, local = token.text.partition(":")
    if prefixes is not None:
        expanded = prefixes.expand(token.text)
        if expanded:
            return expanded
    if label == "xsd":
        return str(XSD) + local
    raise SparqlSyntaxError("a datatype with a declared prefix", token)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


def var_name(token: Token) -> str:
    """Variable name without the leading ? or $ and surrounding whitespace."""
    return token.text.strip().lstrip("?$")


def lower_expression(node: Node, prefixes: Optional[PrefixMap] = None) -> Expr:
    """
    Lower an expression subtree of the parse tree.

    Args:
        node: Expression-rule subtree or a variable token
        prefixes: Used to resolve typed-literal datatypes

    Returns:
        Expression value object
    """
    if isinstance(node, Token):
        if node.kind == TokenKind.VAR:
            return Var(var_name(node))
        raise SparqlSyntaxError("an expression", node)

    rule = node.rule
    if rule in ("Expression", "HavingCondition", "GroupCondition", "Var") and len(node.children) == 1:
        return lower_expression(node.children[0], prefixes)
    if rule == "BrackettedExpression":
        return lower_expression(node.children[1], prefixes)
    if rule in ("ConditionalOrExpression", "ConditionalAndExpression", "AdditiveExpression", "MultiplicativeExpression"):
        result = lower_expression(node.children[0], prefixes)
        for index in range(1, len(node.children), 2):
            op = node.children[index].text
            result = BinaryOp(op, result, lower_expression(node.children[index + 1], prefixes))
        return result
    if rule == "RelationalExpression":
        left, op, right = node.children
        if op.is_keyword("IN"):
            items = tuple(lower_literal(c, prefixes) for c in right.children if isinstance(c, ParseTree))
            return InList(lower_expression(left, prefixes), items)
        return BinaryOp(op.text, lower_expression(left, prefixes), lower_expression(right, prefixes))
    if rule == "UnaryExpression":
        op, operand = node.children
        return UnaryOp(op.text, lower_expression(operand, prefixes))
    if rule in ("RDFLiteral", "NumericLiteral", "BooleanLiteral"):
        return lower_literal(node, prefixes)
    if rule == "BuiltInCall":
        name = node.children[0].text.upper()
        args = tuple(
            lower_expression(c, prefixes) for c in node.children[2:-1] if not (isinstance(c, Token) and c.text == ",")
        )
        return Call(name, args)
    if rule == "Aggregate":
        name = node.children[0].text.upper()
        inner = node.children[2:-1]
        distinct = bool(inner) and isinstance(inner[0], Token) and inner[0].is_keyword("DISTINCT")
        if distinct:
            inner = inner[1:]
        if isinstance(inner[0], Token) and inner[0].text == "*":
            return Aggregate(name, None, distinct)
        return Aggregate(name, lower_expression(inner[0], prefixes), distinct)
    raise ValueError(f"Not an expression rule: {rule}")


def contains_aggregate(expr: Expr) -> bool:
    if isinstance(expr, Aggregate):
        return True
    if isinstance(expr, BinaryOp):
        return contains_aggregate(expr.left) or contains_aggregate(expr.right)
    if isinstance(expr, UnaryOp):
        return contains_aggregate(expr.operand)
    if isinstance(expr, InList):
        return contains_aggregate(expr.operand)
    if isinstance(expr, Call):
        return any(contains_aggregate(a) for a in expr.args)
    return False


def expression_vars(expr: Optional[Expr]) -> list[str]:
    """Variables of an expression in reading order, without duplicates."""
    seen: list[str] = []

    def walk(e):
        if e is None:
            return
        if isinstance(e, Var):
            if e.name not in seen:
                seen.append(e.name)
        elif isinstance(e, BinaryOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, UnaryOp):
            walk(e.operand)
        elif isinstance(e, InList):
            walk(e.operand)
        elif isinstance(e, Call):
            for a in e.args:
                walk(a)
        elif isinstance(e, Aggregate):
            walk(e.arg)

    walk(expr)
    return seen


# ---------------------------------------------------------------------------
# Triple patterns
# ---------------------------------------------------------------------------


def lower_term(tree: ParseTree, prefixes: Optional[PrefixMap] = None) -> Term:
    inner = tree.children[0]
    if isinstance(inner, ParseTree):
        return lower_literal(inner, prefixes)
    if inner.kind == TokenKind.VAR:
        return Var(var_name(inner))
    return Iri(inner.text)


def _lower_path(tree: ParseTree) -> tuple[PathStep, ...]:
    steps = []
    for elt in tree.children_of("PathElt"):
        inverse = isinstance(elt.children[0], Token) and elt.children[0].text == "^"
        steps.append(PathStep(Iri(elt.children[-1].text), inverse))
    return tuple(steps)


def _triples_of_block(block: ParseTree, prefixes, optional: bool, block_id: int) -> list[TriplePattern]:
    out: list[TriplePattern] = []
    for same_subject in block.children_of("TriplesSameSubjectPath"):
        subject_tree, property_list = same_subject.children
        subject = lower_term(subject_tree, prefixes)
        path = None
        for child in property_list.children:
            if isinstance(child, Token):
                continue
            if child.rule == "PathSequence":
                path = _lower_path(child)
            elif child.rule == "ObjectListPath":
                for obj in child.children_of("VarOrTerm"):
                    out.append(TriplePattern(subject, path, lower_term(obj, prefixes), optional, block_id))
    return out


@dataclass(frozen=True)
class GroupElement:
    """A run of required triples, an OPTIONAL block, or a FILTER, in document order."""

    kind: str  # "triples", "optional" or "filter"
    triples: tuple[TriplePattern, ...] = ()
    expression: Optional[Expr] = None
    tree: Optional[ParseTree] = None


def where_elements(tree: ParseTree, prefixes: Optional[PrefixMap] = None) -> list[GroupElement]:
    """Flatten the WHERE group of a query into ordered elements."""
    if prefixes is None:
        prefixes = resolve_prefixes(tree)
    group = next(tree.subtrees("WhereClause")).child("GroupGraphPattern")
    elements: list[GroupElement] = []
    optional_id = 0
    for child in group.children:
        if isinstance(child, Token):
            continue
        if child.rule == "TriplesBlock":
            elements.append(GroupElement("triples", tuple(_triples_of_block(child, prefixes, False, 0))))
        elif child.rule == "OptionalGraphPattern":
            optional_id += 1
            inner = child.children[1]
            triples: list[TriplePattern] = []
            for block in inner.children_of("TriplesBlock"):
                triples.extend(_triples_of_block(block, prefixes, True, optional_id))
            elements.append(GroupElement("optional", tuple(triples)))
        elif child.rule == "Filter":
            expression = lower_expression(child.children[1], prefixes)
            elements.append(GroupElement("filter", expression=expression, tree=child.children[1]))
    return elements


def extract_triples(tree: ParseTree, prefixes: Optional[PrefixMap] = None) -> list[TriplePattern]:
    """All triple patterns of the WHERE block in document order, OPTIONAL ones tagged."""
    triples: list[TriplePattern] = []
    for element in where_elements(tree, prefixes):
        triples.extend(element.triples)
    return triples


def pattern_variables(tree: ParseTree) -> list[str]:
    """In-scope variables of the WHERE block in order of first appearance."""
    names: list[str] = []
    for triple in extract_triples(tree):
        for term in (triple.subject, triple.object):
            if isinstance(term, Var) and term.name not in names:
                names.append(term.name)
    return names


def is_type_predicate(iri: Iri, prefixes: PrefixMap) -> bool:
    """True for `a`, `rdf:type` and the full rdf:type IRI."""
    if iri.is_a:
        return True
    if iri.text.startswith("<"):
        return iri.text[1:-1] == RDF_TYPE
    label, _, local = iri.text.partition(":")
    if local != "type":
        return False
    declared = prefixes.resolve(label) if label in prefixes.declared else None
    if declared is not None:
        return declared + local == RDF_TYPE
    return label == "rdf"


# ---------------------------------------------------------------------------
# Whole-query view for evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Projection:
    name: str
    expression: Optional[Expr] = None  # None projects the variable itself


@dataclass(frozen=True)
class SelectModel:
    prefixes: PrefixMap
    distinct: bool
    star: bool
    projection: tuple[Projection, ...]
    elements: tuple[GroupElement, ...]
    group_by: tuple[tuple[Expr, Optional[str]], ...]
    having: tuple[Expr, ...]
    order_by: tuple[tuple[Expr, bool], ...]  # (key, descending)
    limit: Optional[int]
    offset: Optional[int]

    @property
    def is_aggregating(self) -> bool:
        if self.group_by:
            return True
        return any(p.expression is not None and contains_aggregate(p.expression) for p in self.projection)


def lower_query(tree: ParseTree) -> SelectModel:
    """Lower a parsed SELECT query for evaluation."""
    prefixes = resolve_prefixes(tree)
    select = next(tree.subtrees("SelectClause"))
    distinct = any(isinstance(c, Token) and c.is_keyword("DISTINCT") for c in select.children)
    star = any(isinstance(c, Token) and c.text == "*" for c in select.children)

    projection: list[Projection] = []
    anonymous = 0
    for item in select.children_of("SelectItem"):
        first = item.children[0]
        if isinstance(first, Token) and first.kind == TokenKind.VAR:
            projection.append(Projection(var_name(first)))
        elif isinstance(first, Token):
            projection.append(Projection(var_name(item.children[3]), lower_expression(item.children[1], prefixes)))
        else:
            expression = lower_expression(first, prefixes)
            if len(item.children) == 3:
                name = var_name(item.children[2])
            else:
                name = f"agg__{anonymous}"
                anonymous += 1
            projection.append(Projection(name, expression))

    group_by: list[tuple[Expr, Optional[str]]] = []
    having: list[Expr] = []
    order_by: list[tuple[Expr, bool]] = []
    limit = offset = None

    modifier = tree.child("SelectQuery").child("SolutionModifier")
    if modifier is not None:
        group = modifier.child("GroupClause")
        if group is not None:
            for condition in group.children_of("GroupCondition"):
                alias = None
                if len(condition.children) == 5:
                    alias = var_name(condition.children[3])
                    expression = lower_expression(condition.children[1], prefixes)
                elif len(condition.children) == 3:
                    expression = lower_expression(condition.children[1], prefixes)
                else:
                    expression = lower_expression(condition.children[0], prefixes)
                group_by.append((expression, alias))
        clause = modifier.child("HavingClause")
        if clause is not None:
            having = [lower_expression(c, prefixes) for c in clause.children_of("HavingCondition")]
        clause = modifier.child("OrderClause")
        if clause is not None:
            for condition in clause.children_of("OrderCondition"):
                first = condition.children[0]
                if len(condition.children) == 2:
                    order_by.append((lower_expression(condition.children[1], prefixes), first.is_keyword("DESC")))
                else:
                    order_by.append((lower_expression(first, prefixes), False))
        clause = modifier.child("LimitOffsetClauses")
        if clause is not None:
            for part in clause.children:
                if part.rule == "LimitClause":
                    limit = int(part.children[1].text)
                else:
                    offset = int(part.children[1].text)

    return SelectModel(
        prefixes=prefixes,
        distinct=distinct,
        star=star,
        projection=tuple(projection),
        elements=tuple(where_elements(tree, prefixes)),
        group_by=tuple(group_by),
        having=tuple(having),
        order_by=tuple(order_by),
        limit=limit,
        offset=offset,
    )


def is_aggregate_name(name: str) -> bool:
    return name.upper() in AGGREGATES
