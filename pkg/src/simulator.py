"""Cost sweeps over models and settings, qualification, ranking and reports"""

from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .config import SWEEP_WORKERS
from .cost_model import query_costs, weighted_total
from .errors import CostModelError, DenormError
from .logger import logger
from .models import (
    Constants,
    DataModel,
    Dimension,
    Query,
    Settings,
    Statistics,
    SweepResult,
    SweepRow,
)
from .schema import keyed_signature, signature, storage_volume
from .utils import atomic_write

FLOAT_FORMAT = "%.10g"
DIMENSION_COLUMNS = {Dimension.TIME: "T", Dimension.CARBON: "E", Dimension.MONEY: "F"}


def settings_grid(scales: Sequence[int], servers: Sequence[int]) -> List[Settings]:
    return [Settings(scale=s, servers=n) for s, n in product(scales, servers)]


def evaluate(
    model: DataModel,
    queries: Sequence[Query],
    settings: Settings,
    stats: Statistics,
    constants: Constants,
    label: Optional[str] = None,
) -> SweepRow:
    """Cost one model at one setting; errors become a failed row"""
    base = dict(
        model=model.name,
        label=label,
        signature=signature(model),
        keyed=keyed_signature(model),
        scale=settings.scale,
        servers=settings.servers,
    )
    try:
        per_query = query_costs(model, queries, settings, stats, constants)
        total = weighted_total(per_query, queries, settings, constants)
        storage = storage_volume(model, settings, stats.profile)
    except DenormError as e:
        logger.warning(
            f"{model.name} at scale {settings.scale}, {settings.servers} servers "
            f"failed: {e}"
        )
        return SweepRow(**base, error=str(e))
    return SweepRow(**base, per_query=per_query, total=total, storage_bytes=storage)


def sweep(
    models: Sequence[DataModel],
    queries: Sequence[Query],
    scales: Sequence[int],
    servers: Sequence[int],
    stats: Statistics,
    constants: Constants,
    labels: Optional[Mapping[str, str]] = None,
    workers: int = SWEEP_WORKERS,
) -> SweepResult:
    """
    Evaluate every model at every (scale, servers) setting.

    Args:
        models: Models to cost
        queries: Workload
        scales: Data volume scales
        servers: Cluster sizes
        stats: Workload statistics
        constants: Cost constants
        labels: Optional label per keyed signature
        workers: Threads evaluating cells concurrently

    Returns:
        Qualified SweepResult ordered by signature, scale and servers
    """
    labels = labels or {}
    grid = settings_grid(scales, servers)
    cells = [(model, setting) for model in models for setting in grid]

    def run(cell):
        model, setting = cell
        label = labels.get(keyed_signature(model))
        return evaluate(model, queries, setting, stats, constants, label)

    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(cell) for cell in cells]

    rows.sort(key=lambda r: (r.signature, r.keyed, r.scale, r.servers))
    failed = sum(1 for row in rows if row.failed)
    logger.info(
        f"Swept {len(models)} models over {len(grid)} settings "
        f"({len(rows)} cells, {failed} failed)"
    )
    result = SweepResult(queries=tuple(q.id for q in queries), rows=tuple(rows))
    return qualify(result, queries)


def qualify(result: SweepResult, queries: Sequence[Query]) -> SweepResult:
    """
    Flag rows whose every query meets its latency bound.

    Violations list the ids of the queries over their bound. Failed rows
    are never qualified.
    """
    rows = []
    for row in result.rows:
        if row.failed:
            rows.append(row.model_copy(update={"qualified": False, "violations": ()}))
            continue
        violations = tuple(
            q.id
            for q in queries
            if q.id in row.per_query and row.per_query[q.id].time > q.latency_bound
        )
        rows.append(
            row.model_copy(update={"qualified": not violations, "violations": violations})
        )
    return result.model_copy(update={"rows": tuple(rows)})


def rank(
    result: SweepResult, dimension: Dimension, query_id: Optional[str] = None
) -> List[SweepRow]:
    """
    Qualified rows, cheapest first on one dimension.

    With ``query_id`` the ranking uses that query's cost and only requires
    that query to meet its bound. Ties go to signature order.
    """
    dimension = Dimension(dimension)
    if query_id is None:
        rows = [(row.total.component(dimension), row) for row in result.qualified_rows()]
    else:
        if query_id not in result.queries:
            raise CostModelError(f"Unknown query '{query_id}'")
        rows = [
            (row.per_query[query_id].component(dimension), row)
            for row in result.rows
            if not row.failed and query_id not in row.violations
        ]
    rows.sort(
        key=lambda pair: (
            pair[0],
            pair[1].signature,
            pair[1].keyed,
            pair[1].scale,
            pair[1].servers,
        )
    )
    return [row for _, row in rows]


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def results_frame(result: SweepResult) -> pd.DataFrame:
    """One line per row: identifiers, per-query T/E/F, totals and flags"""
    columns = ["model", "label", "signature", "keyed", "scale", "servers"]
    for query_id in result.queries:
        columns += [f"{query_id}_{c}" for c in DIMENSION_COLUMNS.values()]
    columns += list(DIMENSION_COLUMNS.values())
    columns += ["storage_bytes", "qualified", "violations", "error"]

    records = []
    for row in result.rows:
        record = {
            "model": row.model,
            "label": row.label or "",
            "signature": row.signature,
            "keyed": row.keyed,
            "scale": row.scale,
            "servers": row.servers,
            "storage_bytes": row.storage_bytes,
            "qualified": row.qualified,
            "violations": ";".join(row.violations),
            "error": row.error or "",
        }
        for query_id in result.queries:
            cost = row.per_query.get(query_id)
            for dimension, column in DIMENSION_COLUMNS.items():
                record[f"{query_id}_{column}"] = cost.component(dimension) if cost else None
        for dimension, column in DIMENSION_COLUMNS.items():
            record[column] = row.total.component(dimension) if row.total else None
        records.append(record)
    return pd.DataFrame.from_records(records, columns=columns)


def normalize_for_plot(result: SweepResult) -> pd.DataFrame:
    """
    Log-scaled min-max scores in [0, 1] for each total cost dimension.

    Failed rows are left out. A dimension with fewer than two distinct
    values scores 0 everywhere.
    """
    frame = results_frame(result)
    frame = frame[frame["error"] == ""].reset_index(drop=True)
    scores = frame[["model", "label", "signature", "keyed", "scale", "servers"]].copy()
    for dimension, column in DIMENSION_COLUMNS.items():
        raw = frame[column].to_numpy(dtype=float)
        logged = np.log1p(raw)
        if np.unique(raw).size < 2:
            scores[dimension.value] = np.zeros(raw.size)
            continue
        low, high = logged.min(), logged.max()
        if high == low:
            scores[dimension.value] = np.zeros(raw.size)
            continue
        scores[dimension.value] = (logged - low) / (high - low)
    return scores


def write_table(result: SweepResult, path: str) -> None:
    text = results_frame(result).to_csv(index=False, float_format=FLOAT_FORMAT)
    atomic_write(path, text)
    logger.info(f"Wrote {len(result.rows)} sweep rows to {path}")


def write_json(result: SweepResult, path: str) -> None:
    atomic_write(path, result.model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote sweep document to {path}")
