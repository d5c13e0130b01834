"""
SPARQL front end: tokenizer, recursive-descent parser and name mapping.

The parser accepts the SELECT subset the transpiler understands and builds
a parse tree whose rule names follow the W3C SPARQL 1.1 grammar. Productions
with a single child are collapsed into that child, so expression chains stay
shallow. Constructs outside the subset raise UnsupportedError with a
construct tag; malformed text raises LexError or SparqlSyntaxError.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

from .error_utils import format_keyword_error, format_position, format_prefix_error

logger = logging.getLogger(__name__)


class TokenKind(str, Enum):
    """Lexical categories of SPARQL tokens."""

    KEYWORD = "keyword"
    IRI = "iri"
    PNAME = "prefixed-name"
    VAR = "variable"
    STRING = "literal-string"
    NUMBER = "literal-number"
    PUNCT = "punct"
    OPERATOR = "operator"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    """A terminal of the parse tree."""

    kind: TokenKind
    text: str
    line: int
    col: int

    def is_keyword(self, *words: str) -> bool:
        return self.kind == TokenKind.KEYWORD and self.text.upper() in words

    def is_punct(self, *symbols: str) -> bool:
        return self.kind in (TokenKind.PUNCT, TokenKind.OPERATOR) and self.text in symbols


@dataclass(frozen=True)
class ParseTree:
    """Ordered syntax tree; leaves are tokens."""

    rule: str
    children: tuple[Union["ParseTree", Token], ...]

    def leaves(self) -> list[Token]:
        out: list[Token] = []
        for child in self.children:
            if isinstance(child, Token):
                out.append(child)
            else:
                out.extend(child.leaves())
        return out

    @property
    def text(self) -> str:
        return " ".join(token.text for token in self.leaves())

    def child(self, rule: str) -> Optional["ParseTree"]:
        for c in self.children:
            if isinstance(c, ParseTree) and c.rule == rule:
                return c
        return None

    def children_of(self, rule: str) -> list["ParseTree"]:
        return [c for c in self.children if isinstance(c, ParseTree) and c.rule == rule]

    def subtrees(self, rule: Optional[str] = None) -> Iterator["ParseTree"]:
        """Pre-order walk over this tree and every descendant tree."""
        if rule is None or self.rule == rule:
            yield self
        for c in self.children:
            if isinstance(c, ParseTree):
                yield from c.subtrees(rule)

    def first_token(self) -> Token:
        return self.leaves()[0]


Node = Union[ParseTree, Token]


class LexError(Exception):
    """Raised when the query text cannot be split into tokens."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at {format_position(line, col)}")
        self.line = line
        self.col = col


class SparqlSyntaxError(Exception):
    """Raised when the token stream does not form a query of the subset grammar."""

    def __init__(self, expected: str, found: Token, hint: str = ""):
        where = "end of input" if found.kind == TokenKind.EOF else f"'{found.text}'"
        message = f"Expected {expected} but found {where} at {format_position(found.line, found.col)}"
        if hint:
            message += f"\n\n{hint}"
        super().__init__(message)
        self.expected = expected
        self.found = found.text
        self.position = (found.line, found.col)


# Construct tags grouped by failure category; every other tag is OTHER.
NS2_CONSTRUCTS = frozenset({"NESTED_SELECT", "MINUS", "COUNT_ALL_OUTSIDE_PROJECTION"})
NS1_CONSTRUCTS = frozenset({"NOT_EXISTS", "EXISTS", "NOT_IN", "IN_NON_LITERAL"})


class UnsupportedError(Exception):
    """Raised for valid SPARQL that falls outside the translatable subset."""

    def __init__(self, construct: str, position: Optional[tuple[int, int]] = None, detail: str = ""):
        message = f"Unsupported construct {construct}"
        if position:
            message += f" at {format_position(*position)}"
        if detail:
            message += f": {detail}"
        super().__init__(message)
        self.construct = construct
        self.position = position
        self.detail = detail

    @property
    def category(self) -> str:
        if self.construct in NS2_CONSTRUCTS:
            return "NS2"
        if self.construct in NS1_CONSTRUCTS:
            return "NS1"
        return "OTHER"


class UndeclaredPrefixError(Exception):
    """Raised when a prefixed name uses a label missing from the prologue."""

    def __init__(self, prefix: str, declared: list[str]):
        super().__init__(format_prefix_error(prefix, declared))
        self.prefix = prefix


class AmbiguousNameError(Exception):
    """
    Raised when a name would break the reverse mapping: a local name with
    `__` in strict mode, or two prefixes spelled alike in the property graph.
    """

    pass


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_LANGTAG = r"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*)?"

_TOKEN_PATTERNS = [
    ("ws", r"\s+"),
    ("comment", r"#[^\n]*"),
    ("iri", r"<[^<>\"{}|^`\\\x00-\x20]*>"),
    ("var", r"[?$][A-Za-z0-9_]+"),
    ("string", r"\"(?:[^\"\\\n]|\\.)*\"" + _LANGTAG + r"|'(?:[^'\\\n]|\\.)*'" + _LANGTAG),
    ("number", r"[0-9]*\.[0-9]+(?:[eE][+-]?[0-9]+)?|[0-9]+(?:[eE][+-]?[0-9]+)?"),
    ("pname", r"(?:[A-Za-z](?:[\w.\-]*[\w\-])?)?:(?:\w(?:[\w.\-]*[\w\-])?)?"),
    ("word", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("operator", r"\|\||&&|!=|<=|>=|\^\^|[=<>!+\-*/^|?]"),
    ("punct", r"[(){}\[\].,;]"),
]

_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_PATTERNS))

_KIND_MAP = {
    "iri": TokenKind.IRI,
    "var": TokenKind.VAR,
    "string": TokenKind.STRING,
    "number": TokenKind.NUMBER,
    "pname": TokenKind.PNAME,
    "word": TokenKind.KEYWORD,
    "operator": TokenKind.OPERATOR,
    "punct": TokenKind.PUNCT,
}


def tokenize(text: str) -> list[Token]:
    """
    Split SPARQL text into tokens.

    Args:
        text: Query text

    Returns:
        Token list terminated by an EOF sentinel; whitespace and comments dropped

    Raises:
        LexError: On an unterminated string or an illegal character
    """
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0

    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if match is None:
            if text[pos] in "\"'":
                raise LexError("Unterminated string literal", line, col)
            raise LexError(f"Illegal character {text[pos]!r}", line, col)

        kind = match.lastgroup
        value = match.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(_KIND_MAP[kind], value, line, col))

        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = match.end()

    tokens.append(Token(TokenKind.EOF, "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

AGGREGATES = ("COUNT", "SUM", "AVG", "MIN", "MAX")

# name -> arity
BUILTINS = {
    "CONTAINS": 2,
    "STRSTARTS": 2,
    "STRENDS": 2,
    "LCASE": 1,
    "UCASE": 1,
    "STRLEN": 1,
    "ABS": 1,
    "BOUND": 1,
    "YEAR": 1,
    "MONTH": 1,
    "DAY": 1,
}

# Recognised SPARQL functions the translator has no Cypher rendering for.
UNSUPPORTED_FUNCTIONS = {
    "SAMPLE", "GROUP_CONCAT", "STR", "LANG", "LANGMATCHES", "DATATYPE", "IRI", "URI",
    "BNODE", "RAND", "CEIL", "FLOOR", "ROUND", "CONCAT", "SUBSTR", "REPLACE",
    "ENCODE_FOR_URI", "STRBEFORE", "STRAFTER", "HOURS", "MINUTES", "SECONDS", "TIMEZONE",
    "TZ", "NOW", "UUID", "STRUUID", "MD5", "SHA1", "SHA256", "SHA384", "SHA512",
    "COALESCE", "IF", "STRLANG", "STRDT", "SAMETERM", "ISIRI", "ISURI", "ISBLANK",
    "ISLITERAL", "ISNUMERIC", "REGEX",
}

_CLAUSE_KEYWORDS = [
    "PREFIX", "BASE", "SELECT", "DISTINCT", "WHERE", "OPTIONAL", "FILTER", "GROUP", "BY",
    "HAVING", "ORDER", "ASC", "DESC", "LIMIT", "OFFSET", "AS",
]
_KNOWN_WORDS = sorted(set(_CLAUSE_KEYWORDS) | set(AGGREGATES) | set(BUILTINS))

_PATH_OPERATORS = ("*", "+", "?", "|")


class _Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        # "select", "filter", "group", "having" or "order"
        self.context = "select"

    # -- token helpers ------------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        token = self.current
        if token.kind != TokenKind.EOF:
            self.pos += 1
        return token

    def expect_keyword(self, word: str) -> Token:
        token = self.current
        if token.is_keyword(word):
            return self.advance()
        hint = ""
        if token.kind == TokenKind.KEYWORD:
            hint = format_keyword_error(token.text, [word])
        raise SparqlSyntaxError(word, token, hint)

    def expect_punct(self, symbol: str) -> Token:
        if self.current.is_punct(symbol):
            return self.advance()
        raise SparqlSyntaxError(f"'{symbol}'", self.current)

    def expect_var(self) -> Token:
        if self.current.kind == TokenKind.VAR:
            return self.advance()
        raise SparqlSyntaxError("a variable", self.current)

    def unsupported(self, construct: str, token: Optional[Token] = None, detail: str = ""):
        token = token or self.current
        raise UnsupportedError(construct, (token.line, token.col), detail)

    # -- query structure ----------------------------------------------------

    def parse_query_unit(self) -> ParseTree:
        children: list[Node] = []
        prologue = self.parse_prologue()
        if prologue is not None:
            children.append(prologue)

        token = self.current
        if token.is_keyword("CONSTRUCT", "ASK", "DESCRIBE"):
            self.unsupported("FORM", detail=f"{token.text.upper()} queries")
        if not token.is_keyword("SELECT"):
            hint = format_keyword_error(token.text, ["SELECT"]) if token.kind == TokenKind.KEYWORD else ""
            raise SparqlSyntaxError("SELECT", token, hint)

        children.append(self.parse_select_query())

        if self.current.is_keyword("VALUES"):
            self.unsupported("VALUES")
        if self.current.kind != TokenKind.EOF:
            raise SparqlSyntaxError("end of query", self.current)
        return ParseTree("QueryUnit", tuple(children))

    def parse_prologue(self) -> Optional[ParseTree]:
        decls: list[Node] = []
        while self.current.is_keyword("PREFIX", "BASE"):
            if self.current.is_keyword("BASE"):
                self.unsupported("BASE")
            keyword = self.advance()
            label = self.current
            if label.kind != TokenKind.PNAME or not label.text.endswith(":") or label.text.count(":") != 1:
                raise SparqlSyntaxError("a prefix label such as 'ex:'", label)
            self.advance()
            iri = self.current
            if iri.kind != TokenKind.IRI:
                raise SparqlSyntaxError("an IRI in angle brackets", iri)
            self.advance()
            decls.append(ParseTree("PrefixDecl", (keyword, label, iri)))
        return ParseTree("Prologue", tuple(decls)) if decls else None

    def parse_select_query(self) -> ParseTree:
        children: list[Node] = [self.parse_select_clause()]
        if self.current.is_keyword("FROM"):
            self.unsupported("GRAPH", detail="dataset clause FROM")
        children.append(self.parse_where_clause())
        modifier = self.parse_solution_modifier()
        if modifier is not None:
            children.append(modifier)
        return ParseTree("SelectQuery", tuple(children))

    def parse_select_clause(self) -> ParseTree:
        self.context = "select"
        children: list[Node] = [self.expect_keyword("SELECT")]
        if self.current.is_keyword("DISTINCT"):
            children.append(self.advance())
        elif self.current.is_keyword("REDUCED"):
            self.unsupported("REDUCED")

        if self.current.is_punct("*"):
            children.append(self.advance())
            return ParseTree("SelectClause", tuple(children))

        items = 0
        while True:
            token = self.current
            if token.kind == TokenKind.VAR:
                children.append(ParseTree("SelectItem", (self.advance(),)))
            elif token.is_punct("("):
                opening = self.advance()
                expression = self.parse_expression()
                as_kw = self.expect_keyword("AS")
                var = self.expect_var()
                closing = self.expect_punct(")")
                children.append(ParseTree("SelectItem", (opening, expression, as_kw, var, closing)))
            elif token.is_keyword(*AGGREGATES):
                # lenient form: SELECT AVG(?x) AS ?y without the surrounding brackets
                item: list[Node] = [self.parse_aggregate()]
                if self.current.is_keyword("AS"):
                    item.append(self.advance())
                    item.append(self.expect_var())
                children.append(ParseTree("SelectItem", tuple(item)))
            else:
                break
            items += 1

        if items == 0:
            raise SparqlSyntaxError("a projection variable, expression or '*'", self.current)
        return ParseTree("SelectClause", tuple(children))

    def parse_where_clause(self) -> ParseTree:
        children: list[Node] = []
        if self.current.is_keyword("WHERE"):
            children.append(self.advance())
        elif not self.current.is_punct("{"):
            hint = ""
            if self.current.kind == TokenKind.KEYWORD:
                hint = format_keyword_error(self.current.text, ["WHERE"])
            raise SparqlSyntaxError("WHERE", self.current, hint)
        children.append(self.parse_group_graph_pattern(in_optional=False))
        return ParseTree("WhereClause", tuple(children))

    def parse_group_graph_pattern(self, in_optional: bool) -> ParseTree:
        children: list[Node] = [self.expect_punct("{")]
        if self.current.is_keyword("SELECT"):
            self.unsupported("NESTED_SELECT")

        while not self.current.is_punct("}"):
            token = self.current
            if token.kind == TokenKind.EOF:
                raise SparqlSyntaxError("'}'", token)
            if token.is_keyword("FILTER"):
                if in_optional:
                    self.unsupported("FILTER_IN_OPTIONAL")
                children.append(self.parse_filter())
            elif token.is_keyword("OPTIONAL"):
                if in_optional:
                    self.unsupported("NESTED_OPTIONAL")
                keyword = self.advance()
                group = self.parse_group_graph_pattern(in_optional=True)
                children.append(ParseTree("OptionalGraphPattern", (keyword, group)))
            elif token.is_keyword("MINUS"):
                self.unsupported("MINUS")
            elif token.is_keyword("VALUES"):
                self.unsupported("VALUES")
            elif token.is_keyword("BIND"):
                self.unsupported("BIND")
            elif token.is_keyword("SERVICE"):
                self.unsupported("SERVICE")
            elif token.is_keyword("GRAPH"):
                self.unsupported("GRAPH")
            elif token.is_punct("{"):
                self.reject_subgroup()
            elif token.is_punct("."):
                children.append(self.advance())
            else:
                children.append(self.parse_triples_block())

        children.append(self.advance())
        return ParseTree("GroupGraphPattern", tuple(children))

    def reject_subgroup(self):
        """Classify a nested group: sub-select, UNION branch or plain subgroup."""
        start = self.current
        if self.peek().is_keyword("SELECT"):
            self.unsupported("NESTED_SELECT", self.peek())
        depth = 0
        while True:
            token = self.advance()
            if token.kind == TokenKind.EOF:
                raise SparqlSyntaxError("'}'", token)
            if token.is_punct("{"):
                depth += 1
            elif token.is_punct("}"):
                depth -= 1
                if depth == 0:
                    break
        if self.current.is_keyword("UNION"):
            self.unsupported("UNION", self.current)
        self.unsupported("SUBGROUP", start)

    def parse_triples_block(self) -> ParseTree:
        children: list[Node] = [self.parse_triples_same_subject()]
        while self.current.is_punct("."):
            children.append(self.advance())
            if self._starts_triple(self.current):
                children.append(self.parse_triples_same_subject())
            else:
                break
        return ParseTree("TriplesBlock", tuple(children))

    @staticmethod
    def _starts_triple(token: Token) -> bool:
        return token.kind in (TokenKind.VAR, TokenKind.PNAME, TokenKind.IRI) or token.is_punct("[", "(")

    def parse_triples_same_subject(self) -> ParseTree:
        token = self.current
        if token.is_punct("["):
            self.unsupported("BLANK_NODE")
        if token.is_punct("("):
            self.unsupported("COLLECTION")
        if token.text == "_" and self.peek().kind == TokenKind.PNAME:
            self.unsupported("BLANK_NODE")
        if token.kind not in (TokenKind.VAR, TokenKind.PNAME, TokenKind.IRI):
            raise SparqlSyntaxError("a triple subject", token)
        subject = ParseTree("VarOrTerm", (self.advance(),))
        return ParseTree("TriplesSameSubjectPath", (subject, self.parse_property_list()))

    def parse_property_list(self) -> ParseTree:
        children: list[Node] = [self.parse_verb_path(), self.parse_object_list()]
        while self.current.is_punct(";"):
            children.append(self.advance())
            if self.current.kind in (TokenKind.VAR, TokenKind.PNAME, TokenKind.IRI) or self.current.is_punct("^"):
                children.append(self.parse_verb_path())
                children.append(self.parse_object_list())
            elif self.current.is_keyword("A"):
                children.append(self.parse_verb_path())
                children.append(self.parse_object_list())
        return ParseTree("PropertyListPathNotEmpty", tuple(children))

    def parse_verb_path(self) -> ParseTree:
        if self.current.kind == TokenKind.VAR:
            self.unsupported("VARIABLE_PREDICATE")
        children: list[Node] = [self.parse_path_elt()]
        while self.current.is_punct("/"):
            children.append(self.advance())
            children.append(self.parse_path_elt())
        if self.current.is_punct(*_PATH_OPERATORS):
            self.unsupported("PATH_OPERATOR", detail=f"'{self.current.text}'")
        return ParseTree("PathSequence", tuple(children))

    def parse_path_elt(self) -> ParseTree:
        children: list[Node] = []
        if self.current.is_punct("^"):
            children.append(self.advance())
        token = self.current
        if token.is_punct("(", "!"):
            self.unsupported("PATH_OPERATOR", detail=f"'{token.text}'")
        if token.kind in (TokenKind.PNAME, TokenKind.IRI) or (
            token.kind == TokenKind.KEYWORD and token.text == "a"
        ):
            children.append(self.advance())
        else:
            raise SparqlSyntaxError("a predicate", token)
        if self.current.is_punct(*_PATH_OPERATORS):
            self.unsupported("PATH_OPERATOR", detail=f"'{self.current.text}'")
        return ParseTree("PathElt", tuple(children))

    def parse_object_list(self) -> ParseTree:
        children: list[Node] = [self.parse_object()]
        while self.current.is_punct(","):
            children.append(self.advance())
            children.append(self.parse_object())
        return ParseTree("ObjectListPath", tuple(children))

    def parse_object(self) -> Node:
        token = self.current
        if token.is_punct("["):
            self.unsupported("BLANK_NODE")
        if token.is_punct("("):
            self.unsupported("COLLECTION")
        if token.text == "_" and self.peek().kind == TokenKind.PNAME:
            self.unsupported("BLANK_NODE")
        if token.kind in (TokenKind.VAR, TokenKind.PNAME, TokenKind.IRI):
            return ParseTree("VarOrTerm", (self.advance(),))
        literal = self.parse_literal(allow_sign=True)
        if literal is None:
            raise SparqlSyntaxError("a triple object", token)
        return ParseTree("VarOrTerm", (literal,))

    def parse_literal(self, allow_sign: bool = False) -> Optional[ParseTree]:
        token = self.current
        if token.kind == TokenKind.STRING:
            children: list[Node] = [self.advance()]
            if self.current.is_punct("^^"):
                children.append(self.advance())
                datatype = self.current
                if datatype.kind not in (TokenKind.PNAME, TokenKind.IRI):
                    raise SparqlSyntaxError("a datatype IRI", datatype)
                children.append(self.advance())
            return ParseTree("RDFLiteral", tuple(children))
        if token.kind == TokenKind.NUMBER:
            return ParseTree("NumericLiteral", (self.advance(),))
        if allow_sign and token.is_punct("+", "-") and self.peek().kind == TokenKind.NUMBER:
            sign = self.advance()
            return ParseTree("NumericLiteral", (sign, self.advance()))
        if token.is_keyword("TRUE", "FALSE"):
            return ParseTree("BooleanLiteral", (self.advance(),))
        return None

    def parse_filter(self) -> ParseTree:
        self.context = "filter"
        keyword = self.advance()
        return ParseTree("Filter", (keyword, self.parse_constraint()))

    def parse_constraint(self) -> Node:
        token = self.current
        if token.is_keyword("NOT") and self.peek().is_keyword("EXISTS"):
            self.unsupported("NOT_EXISTS")
        if token.is_keyword("EXISTS"):
            self.unsupported("EXISTS")
        if token.is_punct("("):
            return self.parse_bracketted_expression()
        if token.kind == TokenKind.KEYWORD:
            return self.parse_builtin_or_aggregate()
        if token.kind in (TokenKind.PNAME, TokenKind.IRI):
            self.unsupported("UNSUPPORTED_FUNCTION", detail=f"extension function {token.text}")
        raise SparqlSyntaxError("a bracketted expression or function call", token)

    def parse_solution_modifier(self) -> Optional[ParseTree]:
        children: list[Node] = []
        if self.current.is_keyword("GROUP"):
            children.append(self.parse_group_clause())
        if self.current.is_keyword("HAVING"):
            children.append(self.parse_having_clause())
        if self.current.is_keyword("ORDER"):
            children.append(self.parse_order_clause())
        if self.current.is_keyword("LIMIT", "OFFSET"):
            children.append(self.parse_limit_offset())
        return ParseTree("SolutionModifier", tuple(children)) if children else None

    def parse_group_clause(self) -> ParseTree:
        self.context = "group"
        children: list[Node] = [self.advance(), self.expect_keyword("BY")]
        while True:
            token = self.current
            if token.kind == TokenKind.VAR:
                children.append(ParseTree("GroupCondition", (self.advance(),)))
            elif token.is_punct("("):
                opening = self.advance()
                condition: list[Node] = [opening, self.parse_expression()]
                if self.current.is_keyword("AS"):
                    condition.append(self.advance())
                    condition.append(self.expect_var())
                condition.append(self.expect_punct(")"))
                children.append(ParseTree("GroupCondition", tuple(condition)))
            elif token.kind == TokenKind.KEYWORD and token.text.upper() in BUILTINS:
                children.append(ParseTree("GroupCondition", (self.parse_builtin_or_aggregate(),)))
            else:
                break
        if len(children) == 2:
            raise SparqlSyntaxError("a group condition", self.current)
        return ParseTree("GroupClause", tuple(children))

    def parse_having_clause(self) -> ParseTree:
        self.context = "having"
        children: list[Node] = [self.advance()]
        while self.current.is_punct("(") or (
            self.current.kind == TokenKind.KEYWORD and self.current.text.upper() in BUILTINS
        ):
            children.append(ParseTree("HavingCondition", (self.parse_constraint(),)))
        if len(children) == 1:
            raise SparqlSyntaxError("a having condition", self.current)
        return ParseTree("HavingClause", tuple(children))

    def parse_order_clause(self) -> ParseTree:
        self.context = "order"
        children: list[Node] = [self.advance(), self.expect_keyword("BY")]
        while True:
            token = self.current
            if token.is_keyword("ASC", "DESC"):
                direction = self.advance()
                if not self.current.is_punct("("):
                    raise SparqlSyntaxError("'('", self.current)
                children.append(ParseTree("OrderCondition", (direction, self.parse_bracketted_expression())))
            elif token.kind == TokenKind.VAR:
                children.append(ParseTree("OrderCondition", (self.advance(),)))
            elif token.is_punct("("):
                children.append(ParseTree("OrderCondition", (self.parse_bracketted_expression(),)))
            elif token.kind == TokenKind.KEYWORD and token.text.upper() in set(BUILTINS) | set(AGGREGATES):
                children.append(ParseTree("OrderCondition", (self.parse_builtin_or_aggregate(),)))
            else:
                break
        if len(children) == 2:
            raise SparqlSyntaxError("an order condition", self.current)
        return ParseTree("OrderClause", tuple(children))

    def parse_limit_offset(self) -> ParseTree:
        children: list[Node] = []
        seen: set[str] = set()
        while self.current.is_keyword("LIMIT", "OFFSET"):
            keyword = self.current.text.upper()
            if keyword in seen:
                raise SparqlSyntaxError("a single " + keyword + " clause", self.current)
            seen.add(keyword)
            token = self.advance()
            number = self.current
            if number.kind != TokenKind.NUMBER or not number.text.isdigit():
                raise SparqlSyntaxError("a non-negative integer", number)
            self.advance()
            rule = "LimitClause" if keyword == "LIMIT" else "OffsetClause"
            children.append(ParseTree(rule, (token, number)))
        return ParseTree("LimitOffsetClauses", tuple(children))

    # -- expressions --------------------------------------------------------

    def parse_expression(self) -> Node:
        return ParseTree("Expression", (self.parse_or(),))

    def parse_or(self) -> Node:
        children: list[Node] = [self.parse_and()]
        while self.current.is_punct("||"):
            children.append(self.advance())
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else ParseTree("ConditionalOrExpression", tuple(children))

    def parse_and(self) -> Node:
        children: list[Node] = [self.parse_relational()]
        while self.current.is_punct("&&"):
            children.append(self.advance())
            children.append(self.parse_relational())
        return children[0] if len(children) == 1 else ParseTree("ConditionalAndExpression", tuple(children))

    def parse_relational(self) -> Node:
        left = self.parse_additive()
        token = self.current
        if token.is_punct("=", "!=", "<", ">", "<=", ">="):
            op = self.advance()
            return ParseTree("RelationalExpression", (left, op, self.parse_additive()))
        if token.is_keyword("NOT") and self.peek().is_keyword("IN"):
            self.unsupported("NOT_IN")
        if token.is_keyword("IN"):
            op = self.advance()
            return ParseTree("RelationalExpression", (left, op, self.parse_literal_list()))
        return left

    def parse_literal_list(self) -> ParseTree:
        children: list[Node] = [self.expect_punct("(")]
        if self.current.is_keyword("SELECT"):
            self.unsupported("IN_NON_LITERAL", detail="IN over a sub-select")
        while not self.current.is_punct(")"):
            literal = self.parse_literal(allow_sign=True)
            if literal is None:
                if self.current.kind == TokenKind.EOF:
                    raise SparqlSyntaxError("')'", self.current)
                self.unsupported("IN_NON_LITERAL", detail=f"'{self.current.text}' in IN list")
            children.append(literal)
            if self.current.is_punct(","):
                children.append(self.advance())
            elif not self.current.is_punct(")"):
                raise SparqlSyntaxError("',' or ')'", self.current)
        children.append(self.advance())
        return ParseTree("ExpressionList", tuple(children))

    def parse_additive(self) -> Node:
        children: list[Node] = [self.parse_multiplicative()]
        while self.current.is_punct("+", "-"):
            children.append(self.advance())
            children.append(self.parse_multiplicative())
        return children[0] if len(children) == 1 else ParseTree("AdditiveExpression", tuple(children))

    def parse_multiplicative(self) -> Node:
        children: list[Node] = [self.parse_unary()]
        while self.current.is_punct("*", "/"):
            children.append(self.advance())
            children.append(self.parse_unary())
        return children[0] if len(children) == 1 else ParseTree("MultiplicativeExpression", tuple(children))

    def parse_unary(self) -> Node:
        if self.current.is_punct("!", "-", "+"):
            op = self.advance()
            return ParseTree("UnaryExpression", (op, self.parse_primary()))
        return self.parse_primary()

    def parse_primary(self) -> Node:
        token = self.current
        if token.is_punct("("):
            return self.parse_bracketted_expression()
        if token.kind == TokenKind.VAR:
            return ParseTree("Var", (self.advance(),))
        literal = self.parse_literal()
        if literal is not None:
            return literal
        if token.kind in (TokenKind.PNAME, TokenKind.IRI):
            if self.peek().is_punct("("):
                self.unsupported("UNSUPPORTED_FUNCTION", detail=f"extension function {token.text}")
            self.unsupported("IRI_CONSTANT", detail=f"{token.text} used as a value")
        if token.is_keyword("NOT") and self.peek().is_keyword("EXISTS"):
            self.unsupported("NOT_EXISTS")
        if token.is_keyword("EXISTS"):
            self.unsupported("EXISTS")
        if token.kind == TokenKind.KEYWORD:
            return self.parse_builtin_or_aggregate()
        raise SparqlSyntaxError("an expression", token)

    def parse_bracketted_expression(self) -> ParseTree:
        opening = self.expect_punct("(")
        if self.current.is_keyword("SELECT"):
            self.unsupported("NESTED_SELECT")
        expression = self.parse_expression()
        return ParseTree("BrackettedExpression", (opening, expression, self.expect_punct(")")))

    def parse_builtin_or_aggregate(self) -> ParseTree:
        token = self.current
        name = token.text.upper()
        if name in AGGREGATES:
            return self.parse_aggregate()
        if name in BUILTINS:
            keyword = self.advance()
            children: list[Node] = [keyword, self.expect_punct("(")]
            for index in range(BUILTINS[name]):
                if index:
                    children.append(self.expect_punct(","))
                if name == "BOUND":
                    children.append(ParseTree("Var", (self.expect_var(),)))
                else:
                    children.append(self.parse_expression())
            children.append(self.expect_punct(")"))
            return ParseTree("BuiltInCall", tuple(children))
        if name in UNSUPPORTED_FUNCTIONS:
            self.unsupported("UNSUPPORTED_FUNCTION", detail=name)
        if name in ("NOT", "EXISTS"):
            self.unsupported("NOT_EXISTS" if name == "NOT" else "EXISTS")
        raise SparqlSyntaxError("a function call", token, format_keyword_error(token.text, _KNOWN_WORDS))

    def parse_aggregate(self) -> ParseTree:
        keyword = self.advance()
        name = keyword.text.upper()
        if self.context == "filter":
            raise SparqlSyntaxError("an expression without aggregates inside FILTER", keyword)
        children: list[Node] = [keyword, self.expect_punct("(")]
        if self.current.is_keyword("DISTINCT"):
            children.append(self.advance())
        if self.current.is_punct("*"):
            if name != "COUNT":
                raise SparqlSyntaxError("an expression", self.current)
            if self.context != "select":
                self.unsupported("COUNT_ALL_OUTSIDE_PROJECTION", keyword)
            children.append(self.advance())
        else:
            children.append(self.parse_expression())
        children.append(self.expect_punct(")"))
        return ParseTree("Aggregate", tuple(children))


def _prescan(tokens: list[Token]):
    """Reject the constructs whose presence alone decides the failure group."""
    selects = [t for t in tokens if t.is_keyword("SELECT")]
    if len(selects) > 1:
        raise UnsupportedError("NESTED_SELECT", (selects[1].line, selects[1].col))
    for index, token in enumerate(tokens):
        if token.is_keyword("MINUS"):
            raise UnsupportedError("MINUS", (token.line, token.col))
        if token.is_keyword("EXISTS"):
            negated = index > 0 and tokens[index - 1].is_keyword("NOT")
            raise UnsupportedError("NOT_EXISTS" if negated else "EXISTS", (token.line, token.col))


def parse_sparql(tokens: list[Token]) -> ParseTree:
    """
    Parse a token stream into a SPARQL parse tree.

    Args:
        tokens: Output of tokenize

    Returns:
        ParseTree rooted at QueryUnit

    Raises:
        SparqlSyntaxError: If the tokens do not form a query
        UnsupportedError: If the query uses a construct outside the subset
    """
    if not tokens or tokens[-1].kind != TokenKind.EOF:
        raise ValueError("token stream must end with the EOF sentinel")
    _prescan(tokens)
    tree = _Parser(tokens).parse_query_unit()
    logger.debug("parsed query with %d tokens", len(tokens) - 1)
    return tree


def parse_text(text: str) -> ParseTree:
    """Tokenize and parse in one step."""
    return parse_sparql(tokenize(text))


# ---------------------------------------------------------------------------
# Prefixes and property-graph names
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrefixMap:
    """Prefix label to namespace IRI; the empty label is the default prefix."""

    entries: dict[str, str] = field(default_factory=dict)
    declared: frozenset[str] = frozenset()

    def resolve(self, label: str) -> Optional[str]:
        return self.entries.get(label)

    def expand(self, prefixed: str) -> Optional[str]:
        """Full IRI for a prefixed name, or None when the namespace is unknown."""
        label, _, local = prefixed.partition(":")
        base = self.entries.get(label)
        if not base:
            return None
        return base + local

    def shorten(self, iri: str) -> Optional[tuple[str, str]]:
        """(label, local) via the longest declared namespace that prefixes iri."""
        best: Optional[tuple[str, str]] = None
        for label, base in self.entries.items():
            if base and iri.startswith(base) and (best is None or len(base) > len(self.entries[best[0]])):
                best = (label, iri[len(base):])
        return best

    def merged(self, fallback: "PrefixMap") -> "PrefixMap":
        """Entries of fallback overridden by this map's declared entries."""
        entries = dict(fallback.entries)
        for label in self.declared:
            entries[label] = self.entries[label]
        return PrefixMap(entries, self.declared | fallback.declared)

    def check_spellings(self, default_label: str = "ROOT"):
        """
        Raise AmbiguousNameError when two labels share a property-graph spelling.

        The empty label is spelled as default_label, so a declared prefix of
        that name is rejected too.
        """
        seen: dict[str, str] = {}
        for label in sorted(self.declared | {""}):
            spelling = prefix_label(label, default_label)
            if spelling in seen:
                raise AmbiguousNameError(
                    f"Prefixes '{seen[spelling]}:' and '{label}:' both map to '{spelling}'"
                )
            seen[spelling] = label


def resolve_prefixes(tree: ParseTree) -> PrefixMap:
    """
    Collect the PREFIX declarations of a query.

    The empty prefix is always present; when the query does not declare it
    the map holds an implicit entry with an empty namespace. Redeclared
    labels keep the last IRI.
    """
    entries: dict[str, str] = {"": ""}
    declared: set[str] = set()
    prologue = tree.child("Prologue")
    if prologue is not None:
        for decl in prologue.children_of("PrefixDecl"):
            _, label, iri = decl.children
            name = label.text[:-1]
            entries[name] = iri.text[1:-1]
            declared.add(name)
    return PrefixMap(entries, frozenset(declared))


_IDENTIFIER_RE = re.compile(r"^[A-Za-z0-9_]+$")


def prefix_label(label: str, default_label: str = "ROOT") -> str:
    """Property-graph spelling of a prefix label."""
    if not label:
        return default_label
    return re.sub(r"[^A-Za-z0-9_]", "_", label)


def pg_name(
    prefixed: str,
    prefixes: PrefixMap,
    strict: bool = False,
    default_label: str = "ROOT",
) -> str:
    """
    Map a prefixed name (or IRI in angle brackets) to a property-graph name.

    Args:
        prefixed: `p:local`, `:local` or `<iri>`
        prefixes: Query prefix map
        strict: Reject undeclared prefixes and locals containing `__`
        default_label: Label used for the empty prefix

    Returns:
        Name of the form `<prefix>__<local>`

    Raises:
        UndeclaredPrefixError: Unknown prefix in strict mode, or unmappable IRI
        AmbiguousNameError: Local part contains `__` in strict mode
        UnsupportedError: Local part is not a plain identifier
    """
    if prefixed.startswith("<"):
        iri = prefixed[1:-1]
        shortened = prefixes.shorten(iri)
        if shortened is None:
            raise UndeclaredPrefixError(iri, sorted(prefixes.declared))
        label, local = shortened
    else:
        label, _, local = prefixed.partition(":")
        if strict and label not in prefixes.declared:
            raise UndeclaredPrefixError(label, sorted(prefixes.declared))

    if strict and "__" in local:
        raise AmbiguousNameError(f"Local name '{local}' contains the '__' separator")
    if not _IDENTIFIER_RE.match(local):
        raise UnsupportedError("NON_IDENTIFIER_NAME", detail=f"'{prefixed}' has no plain local name")

    return f"{prefix_label(label, default_label)}__{local}"
