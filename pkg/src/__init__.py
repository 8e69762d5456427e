"""Denormalized data model generation and cost simulation"""

from .logger import logger
from .config import FIXTURE_PATH, OUTPUT_DIR
from .errors import (
    AmbiguousSignatureError,
    CostModelError,
    DenormError,
    RefinementError,
    SchemaError,
    UnknownModelError,
    UseCaseError,
)
from .models import (
    Cardinality,
    Constants,
    CostVector,
    DataModel,
    Dimension,
    Direction,
    GenerationResult,
    KeyValue,
    Query,
    Reference,
    Row,
    Settings,
    Statistics,
    SweepResult,
    UseCase,
)
from .schema import find_model, keyed_signature, signature, storage_volume
from .validation import validate
from .generator import ModelGenerator, generate, merge, merge_inverse, split, split_inverse
from .cost_model import query_cost, static_cost, total_cost
from .workload import dump_use_case, load_use_case, load_use_case_file
from .simulator import normalize_for_plot, qualify, rank, sweep

__all__ = [
    "logger",
    "FIXTURE_PATH",
    "OUTPUT_DIR",
    "AmbiguousSignatureError",
    "CostModelError",
    "DenormError",
    "RefinementError",
    "SchemaError",
    "UnknownModelError",
    "UseCaseError",
    "Cardinality",
    "Constants",
    "CostVector",
    "DataModel",
    "Dimension",
    "Direction",
    "GenerationResult",
    "KeyValue",
    "Query",
    "Reference",
    "Row",
    "Settings",
    "Statistics",
    "SweepResult",
    "UseCase",
    "find_model",
    "keyed_signature",
    "signature",
    "storage_volume",
    "validate",
    "ModelGenerator",
    "generate",
    "merge",
    "merge_inverse",
    "split",
    "split_inverse",
    "query_cost",
    "static_cost",
    "total_cost",
    "dump_use_case",
    "load_use_case",
    "load_use_case_file",
    "normalize_for_plot",
    "qualify",
    "rank",
    "sweep",
]
