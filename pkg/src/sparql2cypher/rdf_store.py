"""
In-memory triple store loaded from Turtle.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from rdflib import BNode, Graph, Literal, URIRef
from rdflib.namespace import RDF, RDFS, XSD

from .frontend import PrefixMap

logger = logging.getLogger(__name__)

Term = Union[URIRef, BNode, Literal]
Triple = tuple[Term, URIRef, Term]


class TurtleSyntaxError(Exception):
    """Raised when a Turtle document cannot be parsed."""

    pass


# Namespaces available to every store even when the document does not declare them.
STANDARD_PREFIXES = {
    "rdf": str(RDF),
    "rdfs": str(RDFS),
    "xsd": str(XSD),
}


@dataclass(frozen=True)
class TripleStore:
    """
    Immutable set of triples plus the prefixes the document declared.

    Triples are kept sorted so every walk over the store is deterministic.
    """

    triples: tuple[Triple, ...]
    prefixes: PrefixMap

    def __len__(self) -> int:
        return len(self.triples)

    def subjects(self) -> list[Term]:
        seen: dict[Term, None] = {}
        for s, _, _ in self.triples:
            seen.setdefault(s, None)
        return list(seen)


def _document_prefixes(graph: Graph) -> PrefixMap:
    """Prefixes the parser bound beyond those every fresh graph starts with."""
    builtin = set(Graph(bind_namespaces="none").namespaces())
    entries = dict(STANDARD_PREFIXES)
    declared = set()
    for label, namespace in graph.namespaces():
        if (label, namespace) in builtin:
            continue
        entries[label] = str(namespace)
        declared.add(label)
    return PrefixMap(entries, frozenset(declared) | frozenset(STANDARD_PREFIXES))


def load_turtle(text: str) -> TripleStore:
    """
    Parse a Turtle document into a TripleStore.

    Args:
        text: Turtle source

    Returns:
        TripleStore holding the document's triples and prefixes

    Raises:
        TurtleSyntaxError: If rdflib rejects the document
    """
    graph = Graph(bind_namespaces="none")
    try:
        graph.parse(data=text, format="turtle")
    except Exception as e:
        raise TurtleSyntaxError(f"Invalid Turtle: {e}") from e

    triples = tuple(sorted(graph, key=lambda t: tuple(t[i].n3() for i in range(3))))
    logger.debug("loaded %d triples", len(triples))
    return TripleStore(triples=triples, prefixes=_document_prefixes(graph))


def load_turtle_file(path: Union[str, Path]) -> TripleStore:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Graph file not found: {path}")
    return load_turtle(path.read_text(encoding="utf-8"))
