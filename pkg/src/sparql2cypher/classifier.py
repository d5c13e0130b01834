"""
Failure taxonomy for queries that do not transpile.
"""

import logging
from collections import Counter
from collections.abc import Iterable
from typing import Optional, Union

from pydantic import ValidationError

from .frontend import (
    AmbiguousNameError,
    LexError,
    ParseTree,
    SparqlSyntaxError,
    Token,
    UndeclaredPrefixError,
    UnsupportedError,
)
from .interpreter import EmptyPatternError, EmptyProjectionError
from .schemas import FAILURE_KINDS, FailureCategory
from .visitor import ConflictError, UnboundVariableError

logger = logging.getLogger(__name__)

# Errors raised for parseable queries the translator cannot express.
_OTHER_ERRORS = (
    UndeclaredPrefixError,
    AmbiguousNameError,
    ConflictError,
    UnboundVariableError,
    EmptyPatternError,
    EmptyProjectionError,
    ValidationError,
)

# Every error the frontend, visitor and interpreter raise for a bad query.
TRANSLATION_ERRORS = (LexError, SparqlSyntaxError, UnsupportedError) + _OTHER_ERRORS


def has_count_all(tree: ParseTree) -> bool:
    """True when the SELECT clause projects COUNT(*)."""
    select = next(tree.subtrees("SelectClause"), None)
    if select is None:
        return False
    for aggregate in select.subtrees("Aggregate"):
        keyword = aggregate.children[0]
        if keyword.is_keyword("COUNT") and any(
            isinstance(c, Token) and c.text == "*" for c in aggregate.children[2:-1]
        ):
            return True
    return False


def classify(
    outcome: Union[ParseTree, Exception], report_mode: str = "lite"
) -> Optional[FailureCategory]:
    """
    Assign a failure category to a query outcome.

    Args:
        outcome: The parse tree of a query that transpiled, or the error it raised
        report_mode: "s2ctrans-compat" reports COUNT(*) projections as COUNT_ALL

    Returns:
        FailureCategory, or None for a parse tree that counts as translated
    """
    if isinstance(outcome, ParseTree):
        if report_mode == "s2ctrans-compat" and has_count_all(outcome):
            return FailureCategory(kind="COUNT_ALL", detail="COUNT(*) in projection")
        return None

    if isinstance(outcome, (LexError, SparqlSyntaxError)):
        return FailureCategory(kind="SYNTAX", detail=str(outcome))
    if isinstance(outcome, UnsupportedError):
        return FailureCategory(kind=outcome.category, detail=str(outcome))
    if isinstance(outcome, _OTHER_ERRORS):
        return FailureCategory(kind="OTHER", detail=f"{type(outcome).__name__}: {outcome}")

    logger.warning("unexpected %s while translating: %s", type(outcome).__name__, outcome, exc_info=outcome)
    return FailureCategory(kind="OTHER", detail=f"{type(outcome).__name__}: {outcome}")


def tally(categories: Iterable[Optional[FailureCategory]]) -> dict[str, int]:
    """Count failures per kind; every kind is present, translated entries are skipped."""
    counts = Counter(c.kind for c in categories if c is not None)
    return {kind: counts.get(kind, 0) for kind in FAILURE_KINDS}
