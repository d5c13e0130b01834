"""
Execution backends for differential evaluation.

Both backends expose the same three calls: has_graph, run_sparql and
run_cypher. The sandbox evaluates in memory over Turtle files; the
external backend forwards queries to a SPARQL protocol endpoint and to a
graph store's HTTP transaction endpoint.
"""

import logging
from decimal import Decimal
from pathlib import Path
from typing import Any, Optional, Protocol, Union

import requests
from rdflib import Literal as RDFLiteral
from rdflib import URIRef

from .cypher_eval import eval_cypher
from .frontend import parse_text
from .property_graph import PropertyGraph, materialize
from .query_model import term_value
from .rdf_store import TripleStore, load_turtle_file
from .schemas import ExternalConfig, NodeRef, ResultTable
from .sparql_eval import eval_sparql

logger = logging.getLogger(__name__)


class ExecutorError(Exception):
    """Raised when a backend cannot run a query."""

    pass


class Executor(Protocol):
    def has_graph(self, db_id: str) -> bool: ...

    def run_sparql(self, db_id: str, query: str) -> ResultTable: ...

    def run_cypher(self, db_id: str, query: str) -> ResultTable: ...


class SandboxExecutor:
    """
    In-memory backend: one Turtle file per db_id under graphs_dir.

    Stores and their materialized graphs are loaded once and reused.

    Args:
        graphs_dir: Directory holding `<db_id>.ttl` files
        explicit_rels: Predicates forced to relationships during materialization
        default_prefix_label: Label of the empty prefix
        stores: Preloaded stores keyed by db_id, checked before graphs_dir
    """

    def __init__(
        self,
        graphs_dir: Optional[Union[str, Path]] = None,
        explicit_rels: tuple[str, ...] = (),
        default_prefix_label: str = "ROOT",
        stores: Optional[dict[str, TripleStore]] = None,
    ):
        self.graphs_dir = Path(graphs_dir) if graphs_dir is not None else None
        self.explicit_rels = tuple(explicit_rels)
        self.default_prefix_label = default_prefix_label
        self._stores: dict[str, TripleStore] = dict(stores or {})
        self._graphs: dict[str, PropertyGraph] = {}

    def _path(self, db_id: str) -> Optional[Path]:
        if self.graphs_dir is None:
            return None
        return self.graphs_dir / f"{db_id}.ttl"

    def has_graph(self, db_id: str) -> bool:
        path = self._path(db_id)
        return db_id in self._stores or (path is not None and path.exists())

    def store(self, db_id: str) -> TripleStore:
        if db_id not in self._stores:
            path = self._path(db_id)
            if path is None or not path.exists():
                raise ExecutorError(f"No graph for database '{db_id}'")
            self._stores[db_id] = load_turtle_file(path)
        return self._stores[db_id]

    def graph(self, db_id: str) -> PropertyGraph:
        if db_id not in self._graphs:
            self._graphs[db_id] = materialize(
                self.store(db_id), self.explicit_rels, self.default_prefix_label
            )
        return self._graphs[db_id]

    def run_sparql(self, db_id: str, query: str) -> ResultTable:
        return eval_sparql(self.store(db_id), parse_text(query))

    def run_cypher(self, db_id: str, query: str) -> ResultTable:
        return eval_cypher(self.graph(db_id), query)


def _sparql_value(binding: Optional[dict[str, Any]]) -> Any:
    if binding is None:
        return None
    if binding["type"] == "uri":
        return NodeRef(uri=binding["value"])
    if binding["type"] == "bnode":
        return NodeRef(uri=f"_:{binding['value']}")
    datatype = binding.get("datatype")
    literal = RDFLiteral(binding["value"], datatype=URIRef(datatype) if datatype else None)
    return term_value(literal)


def _graph_value(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return Decimal(str(value))
    if isinstance(value, dict):
        # Nodes imported from RDF keep their IRI in the `uri` property.
        if "uri" in value:
            return NodeRef(uri=value["uri"])
        return str(value)
    if isinstance(value, list):
        return [_graph_value(v) for v in value]
    return value


class ExternalExecutor:
    """
    Live-store backend configured from ExternalConfig.

    The same endpoints serve every db_id.
    """

    def __init__(self, config: Optional[ExternalConfig] = None, session: Optional[requests.Session] = None):
        self.config = config or ExternalConfig.from_env()
        self.session = session or requests.Session()

    def has_graph(self, db_id: str) -> bool:
        return bool(self.config.sparql_endpoint and self.config.graph_endpoint)

    def _post(self, url: Optional[str], **kwargs) -> dict[str, Any]:
        if not url:
            raise ExecutorError("Endpoint not configured; set S2C_SPARQL_ENDPOINT and S2C_GRAPH_ENDPOINT")
        logger.debug("POST %s", url)
        try:
            response = self.session.post(url, timeout=self.config.timeout, **kwargs)
            response.raise_for_status()
            return response.json()
        except requests.RequestException as e:
            raise ExecutorError(f"Request to {url} failed: {str(e)}") from e
        except ValueError as e:
            raise ExecutorError(f"Endpoint {url} did not return JSON: {str(e)}") from e

    def run_sparql(self, db_id: str, query: str) -> ResultTable:
        payload = self._post(
            self.config.sparql_endpoint,
            data={"query": query},
            headers={"Accept": "application/sparql-results+json"},
        )
        columns = payload.get("head", {}).get("vars", [])
        rows = [
            tuple(_sparql_value(binding.get(c)) for c in columns)
            for binding in payload.get("results", {}).get("bindings", [])
        ]
        return ResultTable(columns=columns, rows=rows)

    def run_cypher(self, db_id: str, query: str) -> ResultTable:
        auth = None
        if self.config.graph_user:
            auth = (self.config.graph_user, self.config.graph_password or "")
        payload = self._post(
            self.config.graph_endpoint,
            json={"statements": [{"statement": query}]},
            auth=auth,
        )
        if payload.get("errors"):
            raise ExecutorError("; ".join(e.get("message", str(e)) for e in payload["errors"]))
        result = payload["results"][0]
        rows = [tuple(_graph_value(v) for v in item["row"]) for item in result.get("data", [])]
        return ResultTable(columns=result.get("columns", []), rows=rows)
