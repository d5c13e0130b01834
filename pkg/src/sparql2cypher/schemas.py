"""
Pydantic schemas for the transpiler AST, run configuration and reports.
"""

import os
import re
from decimal import Decimal
from enum import Enum
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class OptionalPlacement(str, Enum):
    """Where OPTIONAL MATCH lines go relative to the first WHERE."""

    BEFORE_WHERE = "BEFORE_WHERE"
    AFTER_WHERE = "AFTER_WHERE"


class NodePattern(BaseModel):
    """A node variable of the pattern."""

    label: Optional[str] = Field(None, description="Property-graph label, e.g. ROOT__Person")
    properties: dict[str, str] = Field(
        default_factory=dict, description="Value constraints: property name -> Cypher literal"
    )
    optional: bool = Field(False, description="Bound only inside OPTIONAL blocks")

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.label is not None:
            out["label"] = self.label
        if self.properties:
            out["properties"] = dict(self.properties)
        if self.optional:
            out["optional"] = True
        return out


class Relationship(BaseModel):
    """A relationship pattern between two variables."""

    s: str = Field(description="Subject variable")
    r: str = Field(description="Relationship path, e.g. ':a__b' or ':a__b/:a__c'")
    o: str = Field(description="Object variable")
    optional: bool = Field(False, description="Declared inside an OPTIONAL block")
    inverse: bool = Field(False, description="Path written with ^, arrows reversed")


# A dict term is a nested SELECT, kept so it can be reported as unsupported.
WhereTerm = Union[str, list[str], dict[str, Any]]


class Ast(BaseModel):
    """
    Cypher pattern AST built by the visitor.

    Field aliases are the JSON keys of the serialized form.
    """

    model_config = ConfigDict(populate_by_name=True)

    vars: list[str] = Field(default_factory=list)
    iri: dict[str, str] = Field(default_factory=dict)
    nodes: dict[str, NodePattern] = Field(default_factory=dict)
    props: dict[str, str] = Field(default_factory=dict)
    rels: list[Relationship] = Field(default_factory=list)
    rel_types: list[str] = Field(default_factory=list)
    aggregates: dict[str, str] = Field(default_factory=dict)
    subgraphs: dict[str, Any] = Field(default_factory=dict)
    where: list[WhereTerm] = Field(default_factory=list, alias="WHERE")
    with_: dict[str, str] = Field(default_factory=dict, alias="WITH")
    where_with: list[WhereTerm] = Field(default_factory=list, alias="WHERE_WITH")
    unwind: dict[str, str] = Field(default_factory=dict, alias="UNWIND")
    return_items: list[str] = Field(default_factory=list, alias="RETURN")
    order_by: dict[str, Literal["ASC", "DESC"]] = Field(default_factory=dict, alias="ORDER BY")
    limit: Optional[int] = Field(None, alias="LIMIT")
    skip: Optional[int] = Field(None, alias="OFFSET")

    def to_json_dict(self) -> dict[str, Any]:
        """All sixteen containers keyed by their JSON names."""
        data = self.model_dump(by_alias=True)
        data["nodes"] = {name: node.to_json_dict() for name, node in self.nodes.items()}
        return data

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "Ast":
        return cls.model_validate(data)


class RunConfig(BaseModel):
    """Translation settings shared by every command."""

    explicit_rels: list[str] = Field(
        default_factory=list, description="Predicates always mapped to relationships"
    )
    optional_placement: OptionalPlacement = Field(
        OptionalPlacement.BEFORE_WHERE, description="Placement of OPTIONAL MATCH lines"
    )
    strict_prefixes: bool = Field(False, description="Reject undeclared prefixes")
    guard_properties: bool = Field(
        False, description="Require every property a pattern reads to be present (IS NOT NULL)"
    )
    default_prefix_label: str = Field("ROOT", description="Label used for the empty prefix")
    output_format: Literal["text", "json"] = Field("text", description="Output format")
    report_mode: Literal["lite", "s2ctrans-compat"] = Field(
        "lite", description="Report COUNT(*) projections as COUNT_ALL in s2ctrans-compat mode"
    )

    @field_validator("default_prefix_label")
    @classmethod
    def _check_label(cls, value: str) -> str:
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9]*", value):
            raise ValueError(f"default prefix label must match [A-Za-z][A-Za-z0-9]*, got '{value}'")
        return value

    @field_validator("explicit_rels")
    @classmethod
    def _check_rels(cls, value: list[str]) -> list[str]:
        for name in value:
            if not re.fullmatch(r"(?:[A-Za-z][\w.\-]*)?:\w[\w.\-]*", name):
                raise ValueError(f"explicit relationship '{name}' is not a prefixed name")
        return value


class DatasetEntry(BaseModel):
    """One question/query record of a Spider4SSC-style dataset."""

    model_config = ConfigDict(extra="allow")

    db_id: str
    question: str = ""
    sql: Optional[str] = None
    sparql: str
    cypher: Optional[str] = None
    namespaces: list[str] = Field(default_factory=list)
    status: Optional[str] = Field(
        None, description="Batch outcome: \"translated\" or a failure kind"
    )

    @field_validator("sparql")
    @classmethod
    def _non_empty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("sparql must not be empty")
        return value


FailureKind = Literal["COUNT_ALL", "NS2", "NS1", "OTHER", "SYNTAX"]
FAILURE_KINDS: tuple[str, ...] = ("COUNT_ALL", "NS2", "NS1", "OTHER", "SYNTAX")


class FailureCategory(BaseModel):
    """Why a query could not be translated."""

    kind: FailureKind
    detail: str = ""


OutcomeKind = Literal["MATCH", "NUM_RES", "VAL", "EXEC"]
MISMATCH_KINDS: tuple[str, ...] = ("NUM_RES", "VAL", "EXEC")


class MatchOutcome(BaseModel):
    """Result of comparing the SPARQL and Cypher result tables of one query."""

    kind: OutcomeKind
    detail: str = ""
    entry_id: Optional[str] = None
    empty: bool = Field(False, description="Both sides returned no rows")


class Report(BaseModel):
    """Parsing and execution metrics of a run."""

    label: str = ""
    n: int = 0
    parsed: int = 0
    matched: Optional[int] = Field(None, description="Unset for translation-only runs")
    errors: dict[str, int] = Field(default_factory=dict)
    exec_acc: Optional[float] = None
    total_acc: Optional[float] = None
    parse_err_rate: Optional[float] = None
    skipped: int = 0
    intersection: Optional[int] = None
    intersection_matched: Optional[int] = None
    intersection_acc: Optional[float] = None
    intersection_errors: dict[str, int] = Field(
        default_factory=dict, description="Mismatch counts restricted to the intersection"
    )
    selection: dict[str, int] = Field(
        default_factory=dict, description="equivalent / empty / not equivalent tallies"
    )


class ExternalConfig(BaseModel):
    """Endpoints of live stores for the external backend."""

    sparql_endpoint: Optional[str] = None
    graph_endpoint: Optional[str] = None
    graph_user: Optional[str] = None
    graph_password: Optional[str] = None
    timeout: float = 30.0

    @classmethod
    def from_env(cls) -> "ExternalConfig":
        return cls(
            sparql_endpoint=os.environ.get("S2C_SPARQL_ENDPOINT"),
            graph_endpoint=os.environ.get("S2C_GRAPH_ENDPOINT"),
            graph_user=os.environ.get("S2C_GRAPH_USER"),
            graph_password=os.environ.get("S2C_GRAPH_PASSWORD"),
            timeout=float(os.environ.get("S2C_HTTP_TIMEOUT", "30")),
        )


class NodeRef(BaseModel):
    """A graph node or RDF resource inside a result table; compared by URI."""

    model_config = ConfigDict(frozen=True)

    uri: str

    def __str__(self) -> str:
        return self.uri


def _json_value(value: Any) -> Any:
    if isinstance(value, NodeRef):
        return value.uri
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Decimal):
        return int(value) if value == value.to_integral_value() else float(value)
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if hasattr(value, "isoformat"):
        return value.isoformat()
    return value


class ResultTable(BaseModel):
    """Rows produced by one evaluator; values are literals, NodeRefs or None."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    columns: list[str] = Field(default_factory=list)
    rows: list[tuple[Any, ...]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_width(self) -> "ResultTable":
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row!r} does not have {len(self.columns)} values")
        return self

    def to_records(self) -> list[dict[str, Any]]:
        """JSON-ready rows keyed by column name."""
        return [
            {column: _json_value(value) for column, value in zip(self.columns, row)}
            for row in self.rows
        ]


class SkippedEntry(BaseModel):
    """An entry left out of execution, with the reason."""

    entry_id: str
    reason: str


class Evaluation(BaseModel):
    """Per-entry outcomes of a differential run plus its report."""

    outcomes: list[MatchOutcome] = Field(default_factory=list)
    failures: dict[str, FailureCategory] = Field(
        default_factory=dict, description="Entry id -> why it did not transpile"
    )
    skipped: list[SkippedEntry] = Field(default_factory=list)
    report: Report = Field(default_factory=Report)
