"""
Property graph materialized from a triple store.

Mapping follows the neosemantics defaults: rdf:type objects become labels,
literal objects become node properties and IRI objects become typed edges.
Vocabulary IRIs are shortened to `<prefix>__<local>` names; namespaces
without a declared prefix get ns0, ns1, ... in order of first use.
"""

import logging
import re
from collections.abc import Iterable
from typing import Any, Optional

import networkx as nx
from rdflib import BNode, Literal, URIRef

from .frontend import PrefixMap, prefix_label
from .query_model import RDF_TYPE, term_value
from .rdf_store import Term, TripleStore

logger = logging.getLogger(__name__)

_LOCAL_SPLIT = re.compile(r"^(.*[#/:])([^#/:]*)$")


VALUE_KEY = "value"


def node_id(term: Term) -> str:
    """
    URI of a resource node; blank nodes keep their `_:` form and literals
    their N-Triples form, so value nodes never collide with resources.
    """
    if isinstance(term, BNode):
        return f"_:{term}"
    if isinstance(term, Literal):
        return term.n3()
    return str(term)


class PropertyGraph:
    """
    Labelled property graph backed by a networkx MultiDiGraph.

    Node keys are URIs; node attributes hold `labels` (set) and
    `properties` (dict). Edge keys are relationship type names.
    """

    def __init__(self):
        self.graph = nx.MultiDiGraph()

    def add_node(self, uri: str, labels: Iterable[str] = (), properties: Optional[dict[str, Any]] = None):
        if uri not in self.graph:
            self.graph.add_node(uri, labels=set(), properties={})
        data = self.graph.nodes[uri]
        data["labels"].update(labels)
        if properties:
            data["properties"].update(properties)

    def add_edge(self, src: str, rel_type: str, dst: str):
        self.add_node(src)
        self.add_node(dst)
        if not self.graph.has_edge(src, dst, key=rel_type):
            self.graph.add_edge(src, dst, key=rel_type)

    def node_ids(self) -> list[str]:
        return sorted(self.graph.nodes)

    def labels(self, uri: str) -> set[str]:
        return self.graph.nodes[uri]["labels"]

    def properties(self, uri: str) -> dict[str, Any]:
        return self.graph.nodes[uri]["properties"]

    def out_edges(self, uri: str, rel_type: str) -> list[tuple[str, str, str]]:
        return sorted((u, v, k) for u, v, k in self.graph.out_edges(uri, keys=True) if k == rel_type)

    def in_edges(self, uri: str, rel_type: str) -> list[tuple[str, str, str]]:
        return sorted((u, v, k) for u, v, k in self.graph.in_edges(uri, keys=True) if k == rel_type)

    @property
    def edges(self) -> list[tuple[str, str, str]]:
        """(src, type, dst) triples in sorted order."""
        return sorted((u, k, v) for u, v, k in self.graph.edges(keys=True))

    def __len__(self) -> int:
        return self.graph.number_of_nodes()


class _Namer:
    """Shortens vocabulary IRIs to property-graph names."""

    def __init__(self, prefixes: PrefixMap, default_label: str):
        self.prefixes = prefixes
        self.default_label = default_label
        self.generated: dict[str, str] = {}

    def __call__(self, iri: str) -> str:
        shortened = self.prefixes.shorten(iri)
        if shortened is not None and shortened[1]:
            label, local = shortened
            return f"{prefix_label(label, self.default_label)}__{local}"
        match = _LOCAL_SPLIT.match(iri)
        namespace, local = (match.group(1), match.group(2)) if match else ("", iri)
        if namespace not in self.generated:
            self.generated[namespace] = f"ns{len(self.generated)}"
        return f"{self.generated[namespace]}__{local}"


def materialize(
    store: TripleStore,
    explicit_rels: Iterable[str] = (),
    default_prefix_label: str = "ROOT",
) -> PropertyGraph:
    """
    Convert a triple store into an equivalent property graph.

    Args:
        store: Loaded triple store
        explicit_rels: Prefixed predicate names always mapped to edges. A
            literal object of such a predicate becomes an unlabelled value
            node holding the literal under `value`, one node per literal
        default_prefix_label: Label for the document's empty prefix

    Returns:
        PropertyGraph with one node per subject and per edge endpoint

    Raises:
        AmbiguousNameError: If two document prefixes share a property-graph spelling
    """
    store.prefixes.check_spellings(default_prefix_label)
    name = _Namer(store.prefixes, default_prefix_label)
    forced = {store.prefixes.expand(p) for p in explicit_rels} - {None}
    pg = PropertyGraph()

    for s, p, o in store.triples:
        subject = node_id(s)
        pg.add_node(subject)
        predicate = str(p)

        if predicate == RDF_TYPE and isinstance(o, URIRef):
            pg.add_node(subject, labels=[name(str(o))])
        elif isinstance(o, Literal) and predicate in forced:
            value = node_id(o)
            pg.add_node(value, properties={VALUE_KEY: term_value(o)})
            pg.add_edge(subject, name(predicate), value)
        elif isinstance(o, Literal):
            key = name(predicate)
            if key in pg.properties(subject):
                logger.warning("multiple values for %s on %s, keeping the last", key, subject)
            pg.add_node(subject, properties={key: term_value(o)})
        else:
            pg.add_edge(subject, name(predicate), node_id(o))

    logger.debug("materialized %d nodes and %d edges", len(pg), len(pg.edges))
    return pg
