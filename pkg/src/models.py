"""Pydantic data models"""

from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import (
    COM_CARBON,
    COM_SPEED,
    DEFAULT_MESSAGE_SIZE,
    DEFAULT_SHARD_LOOKUP_SIZE,
    EXT_TRANSFER_FEE,
    INDEX_POINTER_SIZE,
    RAM_CARBON,
    RAM_SPEED,
    SERVER_CARBON_PER_DAY,
    SERVER_FEE_PER_DAY,
    SSD_CARBON,
    SSD_SPEED,
)

FROZEN = ConfigDict(frozen=True)


# ---------------------------------------------------------------------------
# Logical data model
# ---------------------------------------------------------------------------


class KeyKind(str, Enum):
    ATOMIC = "atomic"
    COMPLEX = "complex"


class Cardinality(str, Enum):
    ONE_TO_ONE = "one_to_one"
    ONE_TO_MANY = "one_to_many"


class Direction(str, Enum):
    """Which end of a reference becomes the nested row"""

    NEST_TARGET_INTO_SOURCE = "target_into_source"
    NEST_SOURCE_INTO_TARGET = "source_into_target"


class Multiplicity(BaseModel):
    model_config = FROZEN

    cardinality: Cardinality = Cardinality.ONE_TO_ONE
    average: float = Field(1.0, gt=0, description="Average nested rows per parent")

    @classmethod
    def one_to_one(cls) -> "Multiplicity":
        return cls()

    @classmethod
    def one_to_many(cls, average: float) -> "Multiplicity":
        return cls(cardinality=Cardinality.ONE_TO_MANY, average=average)


class Endpoint(BaseModel):
    model_config = FROZEN

    row: str = Field(..., description="Row holding the key")
    key: str = Field(..., description="Key name inside the row")

    @classmethod
    def parse(cls, text: str) -> "Endpoint":
        """Parse the ``Row.key`` notation used in use case documents"""
        row, sep, key = str(text).partition(".")
        if not sep or not row or not key:
            raise ValueError(f"expected 'Row.key', got '{text}'")
        return cls(row=row.strip(), key=key.strip())

    def __str__(self) -> str:
        return f"{self.row}.{self.key}"


class Reference(BaseModel):
    model_config = FROZEN

    source: Endpoint
    target: Endpoint
    cardinality: float = Field(
        1.0, gt=0, description="Average source instances per target instance"
    )

    @property
    def name(self) -> str:
        return f"{self.source}>{self.target}"


class MergeTrace(BaseModel):
    """Everything a merge removed, so the merge can be undone exactly"""

    model_config = FROZEN

    reference: Reference
    reference_index: int = Field(..., ge=0)
    direction: Direction
    removed_key: "KeyValue"
    removed_index: int = Field(..., ge=0)
    concept: str
    concept_index: int = Field(..., ge=0)
    row_index: int = Field(..., ge=0)


class KeyValue(BaseModel):
    model_config = FROZEN

    name: str
    kind: KeyKind = KeyKind.ATOMIC
    ordinal: int = Field(0, description="Declaration position in the origin row")
    base_size: Optional[int] = Field(None, gt=0, description="Size in bytes")
    nested_row: Optional["Row"] = None
    multiplicity: Optional[Multiplicity] = None
    trace: Optional[MergeTrace] = None

    @property
    def is_complex(self) -> bool:
        return self.kind == KeyKind.COMPLEX


class Row(BaseModel):
    model_config = FROZEN

    name: str
    keys: Tuple[KeyValue, ...] = ()
    primary_key: str
    origin: str = Field("", description="Normalized row this row descends from")
    rank: int = Field(0, description="Declaration index of the origin row")
    fragment: int = Field(0, ge=0, description="Split index, 0 when unsplit")

    @model_validator(mode="before")
    @classmethod
    def default_origin(cls, data):
        if isinstance(data, dict) and not data.get("origin"):
            data = {**data, "origin": data.get("name", "")}
        return data

    def key(self, name: str) -> Optional[KeyValue]:
        for key in self.keys:
            if key.name == name:
                return key
        return None

    @property
    def atomic_keys(self) -> List[KeyValue]:
        return [k for k in self.keys if not k.is_complex]

    @property
    def complex_keys(self) -> List[KeyValue]:
        return [k for k in self.keys if k.is_complex]


class Concept(BaseModel):
    model_config = FROZEN

    name: str
    rows: Tuple[Row, ...] = ()


class Edge(BaseModel):
    """Graph edge between concepts; carried but never produced"""

    model_config = FROZEN

    source: str
    target: str
    label: str = ""


class DataModel(BaseModel):
    model_config = FROZEN

    name: str = "M0"
    concepts: Tuple[Concept, ...] = ()
    references: Tuple[Reference, ...] = ()
    edges: Tuple[Edge, ...] = ()

    @property
    def rows(self) -> List[Row]:
        """Top-level rows in concept order"""
        return [row for concept in self.concepts for row in concept.rows]


for _model in (MergeTrace, KeyValue, Row, Concept, DataModel):
    _model.model_rebuild()


# ---------------------------------------------------------------------------
# Workload
# ---------------------------------------------------------------------------


class QueryMode(str, Enum):
    READ = "read"
    UPDATE = "update"


class Query(BaseModel):
    model_config = FROZEN

    id: str
    kind: str = Field("filter", description="Filter or join, informative only")
    mode: QueryMode = QueryMode.READ
    filter_keys: Tuple[str, ...] = ()
    projection_keys: Tuple[str, ...] = Field(..., min_length=1)
    join_keys: Tuple[str, ...] = ()
    sharded_keys: Tuple[str, ...] = ()
    occurrences: float = Field(..., ge=0, description="Executions per day")
    latency_bound: float = Field(..., gt=0, description="Time bound in seconds")
    message_size: int = Field(DEFAULT_MESSAGE_SIZE, gt=0, description="Bytes")

    @model_validator(mode="after")
    def sharded_keys_are_filters(self):
        extra = [k for k in self.sharded_keys if k not in self.filter_keys]
        if extra:
            raise ValueError(f"sharding keys {extra} are not filter keys")
        return self

    @property
    def required_keys(self) -> Tuple[str, ...]:
        """Filter, projection and join keys, first occurrence order"""
        seen = dict.fromkeys(self.filter_keys + self.projection_keys + self.join_keys)
        return tuple(seen)


class SizeProfile(BaseModel):
    model_config = FROZEN

    key_size: Dict[str, int] = Field(default_factory=dict, description="Bytes")
    row_count: Dict[str, float] = Field(
        default_factory=dict, description="Documents per unit of scale"
    )

    @field_validator("key_size", "row_count")
    @classmethod
    def positive(cls, values: dict) -> dict:
        bad = [name for name, value in values.items() if value <= 0]
        if bad:
            raise ValueError(f"must be strictly positive: {bad}")
        return values


class Statistics(BaseModel):
    model_config = FROZEN

    selectivity: Dict[str, float] = Field(default_factory=dict)
    profile: SizeProfile = Field(default_factory=SizeProfile)
    index_present: Tuple[str, ...] = ()
    shard_lookup_size: int = Field(DEFAULT_SHARD_LOOKUP_SIZE, gt=0)
    index_pointer_size: int = Field(INDEX_POINTER_SIZE, ge=0)
    index_sizes: Dict[str, int] = Field(default_factory=dict)
    shard_sizes: Dict[str, int] = Field(default_factory=dict)

    @field_validator("selectivity")
    @classmethod
    def fractions(cls, values: dict) -> dict:
        bad = [name for name, value in values.items() if not 0 < value <= 1]
        if bad:
            raise ValueError(f"selectivity must be in (0, 1]: {bad}")
        return values


class Settings(BaseModel):
    model_config = FROZEN

    scale: int = Field(..., ge=1, description="Warehouse count")
    servers: int = Field(..., ge=1)


class SweepPlan(BaseModel):
    model_config = FROZEN

    scales: Tuple[int, ...] = Field((1,), min_length=1)
    servers: Tuple[int, ...] = Field((1,), min_length=1)


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------


class Constants(BaseModel):
    model_config = FROZEN

    ram_speed: float = Field(RAM_SPEED, gt=0, description="GB/s")
    ssd_speed: float = Field(SSD_SPEED, gt=0, description="GB/s")
    com_speed: float = Field(COM_SPEED, gt=0, description="GB/s")
    ram_carbon: float = Field(RAM_CARBON, gt=0, description="kg CO2e per GB")
    ssd_carbon: float = Field(SSD_CARBON, gt=0, description="kg CO2e per GB")
    com_carbon: float = Field(COM_CARBON, gt=0, description="kg CO2e per GB")
    ext_transfer_fee: float = Field(EXT_TRANSFER_FEE, gt=0, description="EUR per GB")
    server_carbon_per_day: float = Field(SERVER_CARBON_PER_DAY, gt=0)
    server_fee_per_day: float = Field(SERVER_FEE_PER_DAY, gt=0)


class Dimension(str, Enum):
    TIME = "time"
    CARBON = "carbon"
    MONEY = "money"


class CostVector(BaseModel):
    model_config = FROZEN

    time: float = Field(0.0, ge=0, description="Seconds")
    carbon: float = Field(0.0, ge=0, description="kg CO2e")
    money: float = Field(0.0, ge=0, description="EUR")

    @classmethod
    def zero(cls) -> "CostVector":
        return cls()

    def component(self, dimension: Dimension) -> float:
        return getattr(self, Dimension(dimension).value)

    def __add__(self, other: "CostVector") -> "CostVector":
        return CostVector(
            time=self.time + other.time,
            carbon=self.carbon + other.carbon,
            money=self.money + other.money,
        )

    def __mul__(self, factor: float) -> "CostVector":
        return CostVector(
            time=self.time * factor,
            carbon=self.carbon * factor,
            money=self.money * factor,
        )

    __rmul__ = __mul__


class AccessStrategy(str, Enum):
    SHARDED = "sharded"
    INDEXED = "indexed"
    SCAN = "scan"


class VolumeBreakdown(BaseModel):
    """Bytes touched on each server by one row access"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    per_server_ram: np.ndarray
    per_server_com: np.ndarray
    ssd: float = 0.0
    external_com: float = 0.0
    internal_com: float = 0.0

    @field_validator("per_server_ram", "per_server_com", mode="before")
    @classmethod
    def as_array(cls, value) -> np.ndarray:
        return np.asarray(value, dtype=float)


class AggregatedVolumes(BaseModel):
    model_config = FROZEN

    com: float = 0.0
    ram_time: float = 0.0
    ram_carbon: float = 0.0
    ssd: float = 0.0
    external_com: float = 0.0


class RowAccess(BaseModel):
    """One step of a query plan"""

    model_config = FROZEN

    row: str
    keys: Tuple[str, ...]
    strategy: AccessStrategy
    access_key: Optional[str] = None
    selectivity: float
    documents: float = Field(..., description="Matching documents per lookup")
    cost: CostVector


# ---------------------------------------------------------------------------
# Generation and simulation results
# ---------------------------------------------------------------------------


class StepKind(str, Enum):
    MERGE = "merge"
    SPLIT = "split"


class RefinementStep(BaseModel):
    model_config = FROZEN

    kind: StepKind
    detail: str = Field(..., description="Human readable description of the step")
    parent: str = Field(..., description="Keyed signature of the parent model")
    child: str = Field(..., description="Keyed signature of the child model")


class GenerationResult(BaseModel):
    model_config = FROZEN

    root: str
    models: Dict[str, DataModel] = Field(
        default_factory=dict, description="Models keyed by keyed signature"
    )
    tree: Tuple[RefinementStep, ...] = ()
    pruned_count: int = 0

    def ordered(self) -> List[DataModel]:
        return [self.models[sig] for sig in sorted(self.models)]

    def lineage(self, keyed: str) -> List[RefinementStep]:
        """Refinement steps leading from the root to the given model"""
        parents = {step.child: step for step in self.tree}
        steps = []
        while keyed in parents:
            step = parents[keyed]
            steps.append(step)
            keyed = step.parent
        return list(reversed(steps))


class SweepRow(BaseModel):
    model_config = FROZEN

    model: str
    label: Optional[str] = None
    signature: str
    keyed: str
    scale: int
    servers: int
    per_query: Dict[str, CostVector] = Field(default_factory=dict)
    total: Optional[CostVector] = None
    storage_bytes: Optional[float] = None
    qualified: bool = False
    violations: Tuple[str, ...] = ()
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class SweepResult(BaseModel):
    model_config = FROZEN

    queries: Tuple[str, ...] = ()
    rows: Tuple[SweepRow, ...] = ()

    def qualified_rows(self) -> List[SweepRow]:
        return [row for row in self.rows if row.qualified]


class UseCase(BaseModel):
    model_config = FROZEN

    model: DataModel
    queries: Tuple[Query, ...] = ()
    statistics: Statistics
    sweep: SweepPlan = Field(default_factory=SweepPlan)
    constants: Constants = Field(default_factory=Constants)
    labels: Dict[str, str] = Field(
        default_factory=dict, description="Model label to signature selector"
    )


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


class Verb(str, Enum):
    GENERATE = "generate"
    COST = "cost"
    SWEEP = "sweep"
    RANK = "rank"
    SHOW = "show"
    PLOT = "plot"


class Command(BaseModel):
    model_config = FROZEN

    verb: Verb
    config: str
    out: Optional[str] = None
    dimensions: Tuple[Dimension, ...] = ()
    scales: Tuple[int, ...] = ()
    servers: Tuple[int, ...] = ()
    models: Tuple[str, ...] = ()
    query: Optional[str] = None
    workers: int = Field(1, ge=1)
    explain: bool = False

    @model_validator(mode="after")
    def required_flags(self):
        if self.verb in (Verb.GENERATE, Verb.SWEEP, Verb.PLOT) and not self.out:
            raise ValueError(f"'{self.verb.value}' requires --out")
        if self.verb in (Verb.COST, Verb.SHOW) and len(self.models) != 1:
            raise ValueError(f"'{self.verb.value}' requires exactly one --model")
        if self.verb == Verb.PLOT and len(self.dimensions) not in (0, 2):
            raise ValueError("'plot' takes two --dimension flags (x then y)")
        if self.verb == Verb.COST and (len(self.scales) > 1 or len(self.servers) > 1):
            raise ValueError("'cost' evaluates a single setting")
        return self
