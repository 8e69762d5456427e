"""Use case documents: root model, statistics, queries and sweep settings"""

import sys
from typing import Dict, Iterable, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import CostModelError, UseCaseError
from .logger import logger
from .models import (
    Concept,
    Constants,
    DataModel,
    Endpoint,
    KeyValue,
    Query,
    QueryMode,
    Reference,
    Row,
    SizeProfile,
    Statistics,
    SweepPlan,
    UseCase,
)
from .validation import validate

NOT_APPLICABLE = "N/A"


# ---------------------------------------------------------------------------
# Document schema
# ---------------------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RowSpec(_Strict):
    name: str
    primary_key: str
    keys: List[str] = Field(..., min_length=1)


class ConceptSpec(_Strict):
    name: str
    rows: List[RowSpec] = Field(..., min_length=1)


class ReferenceSpec(_Strict):
    source: str = Field(..., description="Row.key")
    target: str = Field(..., description="Row.key")
    cardinality: float = Field(1.0, gt=0)


class ModelSpec(_Strict):
    name: str = "M0"
    concepts: List[ConceptSpec] = Field(..., min_length=1)
    references: List[ReferenceSpec] = Field(default_factory=list)


class StatisticsSpec(_Strict):
    key_sizes: Dict[str, int] = Field(default_factory=dict)
    row_counts: Dict[str, float] = Field(default_factory=dict)
    selectivity: Dict[str, float] = Field(default_factory=dict)
    indexes: List[str] = Field(default_factory=list)
    shard_lookup_size: Optional[int] = None
    index_pointer_size: Optional[int] = None
    index_sizes: Dict[str, int] = Field(default_factory=dict)
    shard_sizes: Dict[str, int] = Field(default_factory=dict)


class QuerySpec(_Strict):
    """One row of the workload table"""

    query: str
    type: str = "Filter"
    mode: QueryMode = QueryMode.READ
    filter_keys: List[str] = Field(default_factory=list)
    projection_keys: List[str]
    join_keys: List[str] = Field(default_factory=list)
    sharding: Union[str, List[str], None] = None
    occurrences: float
    constraint: float = Field(..., description="Latency bound in seconds")
    message_size: Optional[int] = None


class SweepSpec(_Strict):
    scales: List[int] = Field(default_factory=lambda: [1])
    servers: List[int] = Field(default_factory=lambda: [1])


class UseCaseDocument(_Strict):
    model: ModelSpec
    statistics: StatisticsSpec = Field(default_factory=StatisticsSpec)
    queries: List[QuerySpec] = Field(default_factory=list)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    constants: Optional[Dict[str, float]] = None
    labels: Optional[Dict[str, str]] = None


def _error_path(error: dict, prefix: str = "") -> str:
    parts = [prefix] if prefix else []
    parts += [str(part) for part in error["loc"]]
    return ".".join(parts)


def _from_validation(exc: ValidationError, prefix: str = "") -> UseCaseError:
    first = exc.errors()[0]
    return UseCaseError(first["msg"], path=_error_path(first, prefix))


# ---------------------------------------------------------------------------
# Conversion
# ---------------------------------------------------------------------------


def _build_model(spec: ModelSpec, key_sizes: Dict[str, int]) -> DataModel:
    concepts = []
    rank = 0
    for c_index, concept in enumerate(spec.concepts):
        rows = []
        for r_index, row in enumerate(concept.rows):
            keys = []
            for ordinal, name in enumerate(row.keys):
                if name not in key_sizes:
                    raise UseCaseError(
                        f"no size for key '{name}'", path="statistics.key_sizes"
                    )
                keys.append(KeyValue(name=name, ordinal=ordinal, base_size=key_sizes[name]))
            if row.primary_key not in row.keys:
                raise UseCaseError(
                    f"primary key '{row.primary_key}' is not one of the row keys",
                    path=f"model.concepts.{c_index}.rows.{r_index}.primary_key",
                )
            rows.append(
                Row(name=row.name, keys=tuple(keys), primary_key=row.primary_key, rank=rank)
            )
            rank += 1
        concepts.append(Concept(name=concept.name, rows=tuple(rows)))

    references = []
    for index, ref in enumerate(spec.references):
        try:
            references.append(
                Reference(
                    source=Endpoint.parse(ref.source),
                    target=Endpoint.parse(ref.target),
                    cardinality=ref.cardinality,
                )
            )
        except ValueError as e:
            raise UseCaseError(str(e), path=f"model.references.{index}") from e

    return DataModel(
        name=spec.name, concepts=tuple(concepts), references=tuple(references)
    )


def _build_query(spec: QuerySpec, index: int) -> Query:
    sharding = spec.sharding
    if sharding is None or sharding == NOT_APPLICABLE:
        sharding = []
    elif isinstance(sharding, str):
        sharding = [sharding]

    fields = dict(
        id=spec.query,
        kind=spec.type,
        mode=spec.mode,
        filter_keys=tuple(spec.filter_keys),
        projection_keys=tuple(spec.projection_keys),
        join_keys=tuple(spec.join_keys),
        sharded_keys=tuple(sharding),
        occurrences=spec.occurrences,
        latency_bound=spec.constraint,
    )
    if spec.message_size is not None:
        fields["message_size"] = spec.message_size
    try:
        return Query(**fields)
    except ValidationError as e:
        raise _from_validation(e, prefix=f"queries.{index}") from e


def _check_references(
    model: DataModel, queries: Iterable[Query], statistics: Statistics
) -> None:
    known = {key.name for row in model.rows for key in row.keys}

    for row in model.rows:
        if row.origin not in statistics.profile.row_count:
            raise UseCaseError(
                f"no document count for row '{row.name}'", path="statistics.row_counts"
            )

    for index, query in enumerate(queries):
        for field in ("filter_keys", "projection_keys", "join_keys"):
            for key in getattr(query, field):
                if key not in known:
                    raise UseCaseError(
                        f"unknown key '{key}'", path=f"queries.{index}.{field}"
                    )
        for key in query.filter_keys:
            if key not in statistics.selectivity:
                raise UseCaseError(
                    f"no selectivity for filter key '{key}'",
                    path=f"queries.{index}.filter_keys",
                )

    for key in statistics.index_present:
        if key not in known:
            raise UseCaseError(f"unknown key '{key}'", path="statistics.indexes")


def parse_use_case(document: dict) -> UseCase:
    """Build a validated use case from an already parsed document"""
    try:
        spec = UseCaseDocument.model_validate(document)
    except ValidationError as e:
        raise _from_validation(e) from e

    stats_spec = spec.statistics
    try:
        model = _build_model(spec.model, stats_spec.key_sizes)
    except ValidationError as e:
        raise _from_validation(e, prefix="model") from e
    report = validate(model)
    if not report.ok:
        raise UseCaseError(str(report), path="model")

    stats_fields = dict(
        selectivity=stats_spec.selectivity,
        profile=SizeProfile(key_size=stats_spec.key_sizes, row_count=stats_spec.row_counts),
        index_present=tuple(stats_spec.indexes),
        index_sizes=stats_spec.index_sizes,
        shard_sizes=stats_spec.shard_sizes,
    )
    if stats_spec.shard_lookup_size is not None:
        stats_fields["shard_lookup_size"] = stats_spec.shard_lookup_size
    if stats_spec.index_pointer_size is not None:
        stats_fields["index_pointer_size"] = stats_spec.index_pointer_size

    try:
        statistics = Statistics(**stats_fields)
    except ValidationError as e:
        raise _from_validation(e, prefix="statistics") from e
    try:
        sweep = SweepPlan(
            scales=tuple(spec.sweep.scales), servers=tuple(spec.sweep.servers)
        )
    except ValidationError as e:
        raise _from_validation(e, prefix="sweep") from e
    try:
        constants = Constants(**(spec.constants or {}))
    except ValidationError as e:
        raise _from_validation(e, prefix="constants") from e

    queries = tuple(_build_query(q, i) for i, q in enumerate(spec.queries))
    ids = [q.id for q in queries]
    if len(set(ids)) != len(ids):
        raise UseCaseError("query ids must be unique", path="queries")
    _check_references(model, queries, statistics)

    return UseCase(
        model=model,
        queries=queries,
        statistics=statistics,
        sweep=sweep,
        constants=constants,
        labels=spec.labels or {},
    )


def load_use_case(document: str) -> UseCase:
    """
    Load a use case from YAML text.

    Args:
        document: YAML text with model, statistics, queries, sweep,
            constants and labels sections

    Returns:
        UseCase with the validated root model

    Raises:
        UseCaseError: malformed YAML, schema violation or dangling key
    """
    try:
        parsed = yaml.safe_load(document)
    except yaml.YAMLError as e:
        raise UseCaseError(f"malformed YAML: {e}") from e
    if not isinstance(parsed, dict):
        raise UseCaseError("document must be a mapping")
    use_case = parse_use_case(parsed)
    logger.debug(
        f"Loaded use case {use_case.model.name}: {len(use_case.model.rows)} rows, "
        f"{len(use_case.queries)} queries"
    )
    return use_case


def load_use_case_file(path: str) -> UseCase:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        use_case = load_use_case(text)
    except UseCaseError as e:
        error = UseCaseError(f"{path}: {e}")
        error.path = e.path
        raise error from e
    logger.info(f"Loaded use case from {path}")
    return use_case


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _query_document(query: Query) -> dict:
    return {
        "query": query.id,
        "type": query.kind,
        "mode": query.mode.value,
        "filter_keys": list(query.filter_keys),
        "projection_keys": list(query.projection_keys),
        "join_keys": list(query.join_keys),
        "sharding": list(query.sharded_keys) or NOT_APPLICABLE,
        "occurrences": query.occurrences,
        "constraint": query.latency_bound,
        "message_size": query.message_size,
    }


def use_case_document(use_case: UseCase) -> dict:
    model = use_case.model
    stats = use_case.statistics
    return {
        "model": {
            "name": model.name,
            "concepts": [
                {
                    "name": concept.name,
                    "rows": [
                        {
                            "name": row.name,
                            "primary_key": row.primary_key,
                            "keys": [k.name for k in row.keys],
                        }
                        for row in concept.rows
                    ],
                }
                for concept in model.concepts
            ],
            "references": [
                {
                    "source": str(ref.source),
                    "target": str(ref.target),
                    "cardinality": ref.cardinality,
                }
                for ref in model.references
            ],
        },
        "statistics": {
            "key_sizes": dict(stats.profile.key_size),
            "row_counts": dict(stats.profile.row_count),
            "selectivity": dict(stats.selectivity),
            "indexes": list(stats.index_present),
            "shard_lookup_size": stats.shard_lookup_size,
            "index_pointer_size": stats.index_pointer_size,
            "index_sizes": dict(stats.index_sizes),
            "shard_sizes": dict(stats.shard_sizes),
        },
        "queries": [_query_document(q) for q in use_case.queries],
        "sweep": {
            "scales": list(use_case.sweep.scales),
            "servers": list(use_case.sweep.servers),
        },
        "constants": use_case.constants.model_dump(),
        "labels": dict(use_case.labels),
    }


def dump_use_case(use_case: UseCase) -> str:
    """Serialize a use case back to YAML that load_use_case accepts"""
    return yaml.safe_dump(
        use_case_document(use_case), sort_keys=False, default_flow_style=None
    )


# ---------------------------------------------------------------------------
# Statistics helpers
# ---------------------------------------------------------------------------


def effective_selectivity(keys: Iterable[str], stats: Statistics) -> float:
    """
    Combined selectivity of several filter keys, assumed independent.

    Raises:
        CostModelError: a key has no selectivity
    """
    result = 1.0
    for key in keys:
        if key not in stats.selectivity:
            raise CostModelError(f"No selectivity for filter key '{key}'")
        result *= stats.selectivity[key]
    return min(1.0, max(result, sys.float_info.min))
