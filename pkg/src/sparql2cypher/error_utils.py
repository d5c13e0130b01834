"""
Error handling utilities with smart suggestions.
"""

import difflib
from typing import Optional


def suggest_keyword(word: str, available_keywords: list[str], threshold: float = 0.6) -> Optional[str]:
    """
    Suggest a SPARQL keyword or function name using fuzzy matching.

    Args:
        word: The word that was not recognised
        available_keywords: Keywords accepted at this position
        threshold: Similarity threshold (0-1)

    Returns:
        Best matching keyword or None
    """
    if not available_keywords:
        return None

    matches = difflib.get_close_matches(word.upper(), available_keywords, n=1, cutoff=threshold)
    return matches[0] if matches else None


def format_keyword_error(word: str, available_keywords: list[str]) -> str:
    """
    Format a helpful error message for an unrecognised keyword.

    Args:
        word: The word that was not recognised
        available_keywords: Keywords accepted at this position

    Returns:
        Formatted error message with suggestion
    """
    suggestion = suggest_keyword(word, available_keywords)

    message = f"Unknown keyword: '{word}'"

    if suggestion:
        message += f"\n\nDid you mean: '{suggestion}'?"

    return message


def suggest_prefix(prefix: str, declared_prefixes: list[str]) -> Optional[str]:
    """
    Suggest a declared prefix label using fuzzy matching.

    Args:
        prefix: The prefix label that was not declared
        declared_prefixes: Labels declared in the query prologue

    Returns:
        Best matching prefix label or None
    """
    candidates = [p for p in declared_prefixes if p]
    if not candidates:
        return None

    matches = difflib.get_close_matches(prefix, candidates, n=1, cutoff=0.5)
    return matches[0] if matches else None


def format_prefix_error(prefix: str, declared_prefixes: list[str]) -> str:
    """
    Format a helpful error message for an undeclared prefix.

    Args:
        prefix: The prefix label that was not declared
        declared_prefixes: Labels declared in the query prologue

    Returns:
        Formatted error message with suggestion
    """
    suggestion = suggest_prefix(prefix, declared_prefixes)

    message = f"Undeclared prefix: '{prefix}:'"

    if suggestion:
        message += f"\n\nDid you mean: '{suggestion}:'?"

    if declared_prefixes:
        labels = ", ".join(f"'{p}:'" for p in sorted(declared_prefixes))
        message += f"\n\nDeclared prefixes: {labels}"

    return message


def format_position(line: int, col: int) -> str:
    """Render a 1-based source position."""
    return f"line {line}, column {col}"
