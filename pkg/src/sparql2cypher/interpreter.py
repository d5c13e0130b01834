"""
Interpreter: renders the Cypher query from a visitor AST.

Each builder renders one clause; assemble() concatenates them in the
order MATCH, WHERE, WITH, WHERE (after WITH), UNWIND, RETURN, then the
solution modifiers.
"""

import logging
import re
from dataclasses import dataclass, field

from .frontend import UnsupportedError
from .schemas import Ast, NodePattern, OptionalPlacement, Relationship, WhereTerm
from .visitor import split_top_level

logger = logging.getLogger(__name__)


class EmptyPatternError(Exception):
    """Raised when the AST holds neither nodes nor relationships."""

    pass


class EmptyProjectionError(Exception):
    """Raised when nothing is left to RETURN."""

    pass


CLAUSE_KINDS = (
    "MATCH",
    "OPTIONAL_MATCH",
    "WHERE",
    "WITH",
    "WHERE_WITH",
    "UNWIND",
    "RETURN",
    "ORDER_BY",
    "LIMIT",
    "SKIP",
)


@dataclass(frozen=True)
class CypherQuery:
    """Final query text plus its clauses in assembly order."""

    text: str
    clauses: list[tuple[str, str]] = field(default_factory=list)

    def kinds(self) -> list[str]:
        return [kind for kind, _ in self.clauses]


# ---------------------------------------------------------------------------
# MATCH
# ---------------------------------------------------------------------------


def _node_text(name: str, node: NodePattern, with_label: bool, with_properties: bool) -> str:
    text = name
    if with_label and node.label:
        text += f":{node.label}"
    if with_properties and node.properties:
        inline = ", ".join(f"{key}: {value}" for key, value in node.properties.items())
        text += f" {{{inline}}}"
    return f"({text})"


def _relationship_text(rel: Relationship) -> str:
    """Segments joined through anonymous intermediate nodes."""
    if rel.inverse:
        segments = [f"<-[{r}]-" for r in rel.r.split("/")]
    else:
        segments = [f"-[{r}]->" for r in rel.r.split("/")]
    return "()".join(segments)


def build_match(ast: Ast, placement: OptionalPlacement = OptionalPlacement.BEFORE_WHERE) -> tuple[str, str]:
    """
    Render MATCH and OPTIONAL MATCH lines.

    Required relationships come first, one MATCH per relationship, then
    required nodes that no required relationship covers. Labels and inline
    property maps are stated on a node's first occurrence; OPTIONAL MATCH
    lines restate labels but never property maps.

    Args:
        ast: Complete AST
        placement: Accepted for symmetry with assemble(); placement only
            affects where the optional lines end up

    Returns:
        (match text, optional match text), lines separated by newlines

    Raises:
        EmptyPatternError: If the AST holds neither nodes nor relationships
    """
    if not ast.nodes and not ast.rels:
        raise EmptyPatternError("Query pattern binds no nodes or relationships")

    stated: set[str] = set()

    def node(name: str, restate_label: bool = False) -> str:
        pattern = ast.nodes.get(name, NodePattern())
        first = name not in stated
        stated.add(name)
        return _node_text(name, pattern, first or restate_label, first)

    match_lines: list[str] = []
    covered: set[str] = set()
    for rel in ast.rels:
        if rel.optional:
            continue
        match_lines.append(f"MATCH {node(rel.s)}{_relationship_text(rel)}{node(rel.o)}")
        covered.update((rel.s, rel.o))

    for name, pattern in ast.nodes.items():
        if name in covered or pattern.optional:
            continue
        match_lines.append(f"MATCH {node(name)}")
        covered.add(name)

    optional_lines = [
        f"OPTIONAL MATCH {node(rel.s, True)}{_relationship_text(rel)}{node(rel.o, True)}"
        for rel in ast.rels
        if rel.optional
    ]
    return "\n".join(match_lines), "\n".join(optional_lines)


# ---------------------------------------------------------------------------
# WHERE / WITH / WHERE after WITH
# ---------------------------------------------------------------------------

_QUOTED = re.compile(r"'(?:[^'\\]|\\.)*'|\"(?:[^\"\\]|\\.)*\"")


def _outside_quotes(text: str, replace) -> str:
    """Apply replace() to the parts of text that are not string literals."""
    out = []
    last = 0
    for match in _QUOTED.finditer(text):
        out.append(replace(text[last : match.start()]))
        out.append(match.group(0))
        last = match.end()
    out.append(replace(text[last:]))
    return "".join(out)


def _render_term(term: WhereTerm) -> str:
    """
    One constraint term; `||` and `&&` become OR / AND with grouping.

    Raises:
        UnsupportedError: For a nested SELECT term
    """
    if isinstance(term, dict):
        raise UnsupportedError("NESTED_SELECT", detail="sub-query in a constraint")
    if isinstance(term, (list, tuple)):
        lhs, op, rhs = term
        if op == "IN" and rhs.startswith("(") and rhs.endswith(")"):
            rhs = f"[{rhs[1:-1]}]"
        return f"{lhs} {op} {rhs}"

    alternatives = split_top_level(term, "||")
    groups = [[part.strip() for part in split_top_level(alt, "&&")] for alt in alternatives]
    if len(alternatives) == 1 and len(groups[0]) == 1:
        text = term.strip()
    else:
        text = " OR ".join("(" + " AND ".join(group) + ")" for group in groups)
    return _outside_quotes(text, lambda s: s.replace("||", "OR").replace("&&", "AND"))


def _substitute_aliases(text: str, aggregates: dict[str, str]) -> str:
    for alias, expression in aggregates.items():
        pattern = re.compile(rf"(?<![\w.]){re.escape(alias)}(?![\w(])")
        text = _outside_quotes(text, lambda s, p=pattern, e=expression: p.sub(e, s))
    return text


def _conjunction(terms: list[str]) -> str:
    """Terms joined with AND; a term with a top-level OR is bracketed when it has company."""
    if len(terms) > 1:
        terms = [f"({t})" if len(split_top_level(t, " OR ")) > 1 else t for t in terms]
    return " AND ".join(terms)


def build_where(ast: Ast) -> str:
    """WHERE from the FILTER terms, aggregate aliases replaced by their expressions."""
    terms = [_substitute_aliases(_render_term(term), ast.aggregates) for term in ast.where]
    return "WHERE " + _conjunction(terms) if terms else ""


def build_with(ast: Ast) -> str:
    if not ast.with_:
        return ""
    return "WITH " + ", ".join(ast.with_.values())


def build_where_with(ast: Ast) -> str:
    """WHERE after WITH; aliases stay as they are since WITH projects them."""
    terms = [_render_term(term) for term in ast.where_with]
    if not terms:
        logger.debug("no HAVING constraints")
        return ""
    return "WHERE " + _conjunction(terms)


def build_unwind(ast: Ast) -> str:
    return "\n".join(f"UNWIND {expression} AS {var}" for var, expression in ast.unwind.items())


# ---------------------------------------------------------------------------
# RETURN and solution modifiers
# ---------------------------------------------------------------------------


def _return_item(item: str, ast: Ast) -> str:
    if item in ast.props and item not in ast.with_ and item not in ast.nodes:
        return f"{ast.props[item]} AS {item}"
    return item


def build_return(ast: Ast) -> str:
    """
    RETURN from the projection entry.

    Raises:
        EmptyProjectionError: If there is nothing to project
    """
    if not ast.return_items:
        raise EmptyProjectionError("Query projects no variables")

    entry = ast.return_items[0]
    distinct = entry.startswith("DISTINCT ")
    body = entry[len("DISTINCT "):] if distinct else entry

    items: list[str] = []
    for item in (part.strip() for part in split_top_level(body, ",")):
        if not item:
            continue
        if item == "*":
            items.extend(_return_item(v, ast) for v in ast.vars if v in ast.nodes or v in ast.props)
        else:
            items.append(_return_item(item, ast))

    if not items:
        raise EmptyProjectionError("Query projects no variables")
    return "RETURN " + ("DISTINCT " if distinct else "") + ", ".join(items)


def _modifier_clauses(ast: Ast) -> list[tuple[str, str]]:
    clauses = []
    if ast.order_by:
        keys = ", ".join(f"{key} {direction}" for key, direction in ast.order_by.items())
        clauses.append(("ORDER_BY", f"ORDER BY {keys}"))
    if ast.limit is not None:
        clauses.append(("LIMIT", f"LIMIT {ast.limit}"))
    if ast.skip is not None:
        clauses.append(("SKIP", f"SKIP {ast.skip}"))
    return clauses


def build_solution_modifiers(ast: Ast) -> str:
    """ORDER BY, LIMIT and SKIP lines in that order."""
    return "\n".join(text for _, text in _modifier_clauses(ast))


def assemble(ast: Ast, placement: OptionalPlacement = OptionalPlacement.BEFORE_WHERE) -> CypherQuery:
    """
    Build the complete Cypher query.

    Args:
        ast: AST from build_ast
        placement: BEFORE_WHERE puts OPTIONAL MATCH lines right after MATCH,
            AFTER_WHERE puts them after the first WHERE

    Returns:
        CypherQuery with the text and its clauses

    Raises:
        EmptyPatternError: If the pattern is empty
        EmptyProjectionError: If nothing is projected
    """
    match, optional = build_match(ast, placement)
    where = build_where(ast)

    clauses: list[tuple[str, str]] = [("MATCH", match)]
    if placement == OptionalPlacement.BEFORE_WHERE:
        clauses += [("OPTIONAL_MATCH", optional), ("WHERE", where)]
    else:
        clauses += [("WHERE", where), ("OPTIONAL_MATCH", optional)]

    clauses += [
        ("WITH", build_with(ast)),
        ("WHERE_WITH", build_where_with(ast)),
        ("UNWIND", build_unwind(ast)),
        ("RETURN", build_return(ast)),
    ]
    clauses += _modifier_clauses(ast)

    clauses = [(kind, text) for kind, text in clauses if text]
    text = "\n".join(text for _, text in clauses)
    logger.debug("assembled %d clauses", len(clauses))
    return CypherQuery(text=text, clauses=clauses)
