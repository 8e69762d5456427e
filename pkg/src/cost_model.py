"""Time, carbon and money costs of queries over a data model"""

import math
import sys
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import BYTES_PER_GB, EXACT_COVER_LIMIT
from .errors import CostModelError, SchemaError
from .logger import logger
from .models import (
    AccessStrategy,
    AggregatedVolumes,
    Constants,
    CostVector,
    DataModel,
    Query,
    QueryMode,
    Row,
    RowAccess,
    Settings,
    Statistics,
    VolumeBreakdown,
)
from .schema import (
    covered_keys,
    document_count,
    document_size,
    key_domains,
    key_fanout,
    origin_count,
    projected_size,
    row_order,
)
from .workload import effective_selectivity

# Ceilings round first so 60.000000000000007 documents count as 60
CEIL_DIGITS = 9


def _ceil(value: float) -> int:
    return math.ceil(round(value, CEIL_DIGITS))


def _clamp(selectivity: float) -> float:
    return min(1.0, max(selectivity, sys.float_info.min))


# ---------------------------------------------------------------------------
# Volumes
# ---------------------------------------------------------------------------


def servers_hit(
    settings: Settings, selectivity: float, sharded: bool, doc_count: float
) -> int:
    """Servers holding matching documents: one when sharded, else spread"""
    if sharded:
        return 1
    return max(1, min(_ceil(doc_count * selectivity), settings.servers))


def index_size(key: str, doc_count: float, settings: Settings, stats: Statistics) -> float:
    """Bytes read by one index probe: a B-tree descent over the local documents"""
    if key in stats.index_sizes:
        return float(stats.index_sizes[key])
    if key not in stats.profile.key_size:
        raise CostModelError(f"No size for index key '{key}'")
    local = _ceil(doc_count / settings.servers)
    levels = max(1, math.ceil(math.log2(local))) if local > 1 else 1
    return float(levels * (stats.profile.key_size[key] + stats.index_pointer_size))


def shard_size(key: str, stats: Statistics) -> float:
    return float(stats.shard_sizes.get(key, stats.shard_lookup_size))


def filter_volumes(
    row: Row,
    key: Optional[str],
    strategy: AccessStrategy,
    settings: Settings,
    stats: Statistics,
    query: Query,
    selectivity: float = 1.0,
    projection: Optional[Iterable[str]] = None,
) -> VolumeBreakdown:
    """
    Bytes read and shipped on each server by one access to ``row``.

    Args:
        row: Top-level row being read
        key: Access key, None for a scan without filter
        strategy: Sharded, indexed or scan access
        settings: Scale and server count
        stats: Sizes, indexes and shard lookup sizes
        query: Query issuing the access (message size, mode, keys)
        selectivity: Fraction of the row's documents matching
        projection: Keys returned per document, defaults to the query's
            projection and join keys

    Returns:
        VolumeBreakdown with one entry per server

    Raises:
        CostModelError: strategy not backed by a sharding key or an index
    """
    strategy = AccessStrategy(strategy)
    if strategy == AccessStrategy.SHARDED and key not in query.sharded_keys:
        raise CostModelError(f"'{key}' is not a sharding key of {query.id}")
    if strategy == AccessStrategy.INDEXED and key not in stats.index_present:
        raise CostModelError(f"No index on '{key}'")

    profile = stats.profile
    if projection is None:
        projection = query.projection_keys + query.join_keys
    doc_size = document_size(row, profile)
    doc_count = document_count(row, settings, profile)
    result_size = projected_size(row, projection, profile)
    matching = doc_count * selectivity
    servers = settings.servers
    message = query.message_size

    if strategy == AccessStrategy.SHARDED:
        ram = np.zeros(servers)
        com = np.zeros(servers)
        ram[0] = shard_size(key, stats) + doc_size * matching
        com[0] = message + result_size * matching
        external = result_size * matching
        internal = float(message)
    else:
        hit = servers_hit(settings, selectivity, False, doc_count)
        per_server = _ceil(matching / hit)
        com = np.full(servers, float(message))
        com[:hit] += result_size * per_server
        external = hit * result_size * per_server
        internal = float(servers * message)
        if strategy == AccessStrategy.INDEXED:
            ram = np.full(servers, index_size(key, doc_count, settings, stats))
            ram[:hit] += doc_size * per_server
        else:
            ram = np.full(servers, doc_size * doc_count / servers)

    ssd = float(ram.sum()) if query.mode == QueryMode.UPDATE else 0.0
    return VolumeBreakdown(
        per_server_ram=ram,
        per_server_com=com,
        ssd=ssd,
        external_com=external,
        internal_com=internal,
    )


def aggregate(breakdown: VolumeBreakdown) -> AggregatedVolumes:
    """RAM time follows the slowest server; every other volume is a sum"""
    ram = breakdown.per_server_ram
    return AggregatedVolumes(
        com=float(breakdown.per_server_com.sum()),
        ram_time=float(ram.max()) if ram.size else 0.0,
        ram_carbon=float(ram.sum()),
        ssd=breakdown.ssd,
        external_com=breakdown.external_com,
    )


def dimension_costs(volumes: AggregatedVolumes, constants: Constants) -> CostVector:
    ram_time = volumes.ram_time / BYTES_PER_GB
    ram_carbon = volumes.ram_carbon / BYTES_PER_GB
    ssd = volumes.ssd / BYTES_PER_GB
    com = volumes.com / BYTES_PER_GB
    external = volumes.external_com / BYTES_PER_GB
    return CostVector(
        time=ram_time / constants.ram_speed
        + ssd / constants.ssd_speed
        + com / constants.com_speed,
        carbon=ram_carbon * constants.ram_carbon
        + ssd * constants.ssd_carbon
        + com * constants.com_carbon,
        money=external * constants.ext_transfer_fee,
    )


def static_cost(settings: Settings, constants: Constants) -> CostVector:
    """Daily cost of keeping the cluster running, independent of queries"""
    return CostVector(
        time=0.0,
        carbon=settings.servers * constants.server_carbon_per_day,
        money=settings.servers * constants.server_fee_per_day,
    )


# ---------------------------------------------------------------------------
# Query plans
# ---------------------------------------------------------------------------


def document_selectivity(row: Row, keys: Iterable[str], stats: Statistics) -> float:
    """
    Fraction of documents with at least one match for every key.

    A key nested under arrays matches a document as soon as one element
    matches, so its selectivity grows with the array sizes.
    """
    keys = tuple(keys)
    adjusted = {
        key: min(1.0, stats.selectivity[key] * key_fanout(row, key))
        for key in keys
        if key in stats.selectivity
    }
    return effective_selectivity(keys, stats.model_copy(update={"selectivity": adjusted}))


def _estimate(row: Row, query: Query, settings: Settings, stats: Statistics) -> float:
    local = [k for k in query.filter_keys if k in covered_keys(row)]
    count = document_count(row, settings, stats.profile)
    return count * document_selectivity(row, local, stats)


def covered_rows(
    model: DataModel,
    query: Query,
    settings: Optional[Settings] = None,
    stats: Optional[Statistics] = None,
) -> List[Tuple[Row, Tuple[str, ...]]]:
    """
    Fewest rows whose documents hold every key the query touches.

    Rows are ordered by estimated matches after their local filters when
    settings and statistics are given, then by row order.

    Raises:
        CostModelError: a key is held by no row
    """
    required = query.required_keys
    rows = sorted(model.rows, key=row_order)
    coverage = {row.name: covered_keys(row) for row in rows}

    available = set().union(*coverage.values()) if coverage else set()
    missing = [k for k in required if k not in available]
    if missing:
        raise CostModelError(f"Key '{missing[0]}' is not held by any row of {model.name}")

    wanted = set(required)
    candidates = [row for row in rows if coverage[row.name] & wanted]

    chosen: List[Row] = []
    if len(candidates) <= EXACT_COVER_LIMIT:
        for size in range(1, len(candidates) + 1):
            for combo in combinations(candidates, size):
                if wanted <= set().union(*(coverage[r.name] for r in combo)):
                    chosen = list(combo)
                    break
            if chosen:
                break
    else:
        remaining = set(wanted)
        while remaining:
            best = max(candidates, key=lambda r: len(coverage[r.name] & remaining))
            chosen.append(best)
            remaining -= coverage[best.name]
        chosen.sort(key=row_order)

    if settings is not None and stats is not None:
        chosen.sort(key=lambda r: (_estimate(r, query, settings, stats), row_order(r)))

    return [
        (row, tuple(k for k in required if k in coverage[row.name])) for row in chosen
    ]


def choose_access(
    keys: Sequence[str], query: Query, stats: Statistics
) -> Tuple[AccessStrategy, Optional[str]]:
    """Best access path among the keys: sharded, then indexed, then scan"""
    best, best_key, best_rank = AccessStrategy.SCAN, None, 2
    for key in keys:
        if key in query.sharded_keys:
            rank, strategy = 0, AccessStrategy.SHARDED
        elif key in stats.index_present:
            rank, strategy = 1, AccessStrategy.INDEXED
        else:
            continue
        if rank < best_rank:
            best, best_key, best_rank = strategy, key, rank
    return best, best_key


def plan_query(
    model: DataModel,
    query: Query,
    settings: Settings,
    stats: Statistics,
    constants: Constants,
) -> List[RowAccess]:
    """
    Access plan of a query: one nested-loop step per covered row.

    Later rows are probed through keys whose instances earlier rows have
    already fixed; each such key narrows the probe to the documents of a
    single referenced instance.
    """
    cover = covered_rows(model, query, settings, stats)
    domains = key_domains(model)
    origins = [row.origin for row, _ in cover]
    returned = set(query.projection_keys + query.join_keys)

    bound = set()
    applied = set()
    plan = []
    for position, (row, served) in enumerate(cover):
        local = [k for k in query.filter_keys if k in served and k not in applied]
        applied.update(local)

        probes, probe_domains = [], []
        if position:
            holds = covered_keys(row)
            candidates = [k for k in query.join_keys if k in holds]
            for key in dict.fromkeys(candidates + [row.primary_key]):
                domain = domains.get(key)
                if domain in bound and domain not in probe_domains:
                    probes.append(key)
                    probe_domains.append(domain)

        selectivity = document_selectivity(row, local, stats)
        for domain in probe_domains:
            selectivity /= origin_count(domain, settings, stats.profile)
        selectivity = _clamp(selectivity)

        projection = [k for k in served if k in returned]
        if origins.count(row.origin) > 1 and row.primary_key not in projection:
            projection.append(row.primary_key)

        strategy, access_key = choose_access(local + probes, query, stats)
        volumes = filter_volumes(
            row, access_key, strategy, settings, stats, query, selectivity, projection
        )
        plan.append(
            RowAccess(
                row=row.name,
                keys=served,
                strategy=strategy,
                access_key=access_key,
                selectivity=selectivity,
                documents=document_count(row, settings, stats.profile) * selectivity,
                cost=dimension_costs(aggregate(volumes), constants),
            )
        )
        bound.update(domains[k] for k in covered_keys(row) if k in domains)
    return plan


def query_cost(
    model: DataModel,
    query: Query,
    settings: Settings,
    stats: Statistics,
    constants: Constants,
) -> CostVector:
    """
    Nested-loop cost of one execution of a query.

    The first row is read once; every later row is probed once per
    result accumulated so far.
    """
    total = CostVector.zero()
    output = 0.0
    for position, step in enumerate(plan_query(model, query, settings, stats, constants)):
        if position == 0:
            total = step.cost
            output = step.documents
        else:
            total = total + step.cost * output
            output *= step.documents
    return total


def query_costs(
    model: DataModel,
    queries: Sequence[Query],
    settings: Settings,
    stats: Statistics,
    constants: Constants,
) -> Dict[str, CostVector]:
    """Per-execution cost of each query, keyed by query id"""
    costs = {}
    for query in queries:
        try:
            costs[query.id] = query_cost(model, query, settings, stats, constants)
        except (CostModelError, SchemaError) as e:
            raise CostModelError(f"{query.id}: {e}") from e
    return costs


def weighted_total(
    per_query: Dict[str, CostVector],
    queries: Sequence[Query],
    settings: Settings,
    constants: Constants,
) -> CostVector:
    total = static_cost(settings, constants)
    for query in queries:
        total = total + per_query[query.id] * query.occurrences
    return total


def total_cost(
    model: DataModel,
    queries: Sequence[Query],
    settings: Settings,
    stats: Statistics,
    constants: Constants,
) -> CostVector:
    """
    Daily cost of a model: cluster cost plus occurrence-weighted query costs.

    Raises:
        CostModelError: a query cannot be costed, message starts with its id
    """
    per_query = query_costs(model, queries, settings, stats, constants)
    total = weighted_total(per_query, queries, settings, constants)
    logger.debug(
        f"{model.name} @ scale {settings.scale}, {settings.servers} servers: "
        f"T={total.time:.6g}s E={total.carbon:.6g}kg F={total.money:.6g}"
    )
    return total
