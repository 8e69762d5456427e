"""Command line front end"""

import argparse
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .config import DEFAULT_CONFIG_PATH, OUTPUT_DIR, SWEEP_WORKERS
from .cost_model import plan_query, query_costs, static_cost, weighted_total
from .errors import (
    CostModelError,
    DenormError,
    RefinementError,
    UnknownModelError,
    UseCaseError,
)
from .generator import generate, write_manifest
from .logger import logger
from .models import (
    Command,
    DataModel,
    Dimension,
    GenerationResult,
    Settings,
    SweepResult,
    UseCase,
    Verb,
)
from .schema import describe, find_model, keyed_signature, signature, storage_volume
from .simulator import FLOAT_FORMAT, normalize_for_plot, rank, sweep, write_json, write_table
from .utils import atomic_write
from .workload import load_use_case_file

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_UNKNOWN_MODEL = 4
EXIT_IO = 5
EXIT_COST = 6

DIMENSIONS = [d.value for d in Dimension]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        default=DEFAULT_CONFIG_PATH,
        help="Use case YAML (default: $DENORM_CONFIG or the bundled TPC-C fixture)",
    )
    common.add_argument("--workers", type=int, default=SWEEP_WORKERS)

    selection = argparse.ArgumentParser(add_help=False)
    selection.add_argument(
        "--model",
        action="append",
        default=[],
        help="Label, compact or keyed signature; repeatable",
    )
    selection.add_argument("--scale", type=int, action="append", default=[])
    selection.add_argument("--servers", type=int, action="append", default=[])

    parser = argparse.ArgumentParser(
        prog="denorm",
        description="Generate denormalized data models and price them in time, "
        "carbon and money",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    sub = verbs.add_parser("generate", parents=[common], help="Enumerate data models")
    sub.add_argument(
        "--out",
        default=os.path.join(OUTPUT_DIR, "models"),
        help="Directory for manifest and tree",
    )

    sub = verbs.add_parser(
        "cost", parents=[common, selection], help="Per-query costs of one model"
    )
    sub.add_argument("--explain", action="store_true", help="Print access plans")

    sub = verbs.add_parser("sweep", parents=[common, selection], help="Cost sweep table")
    sub.add_argument(
        "--out",
        default=os.path.join(OUTPUT_DIR, "sweep.csv"),
        help="CSV path; JSON written alongside",
    )

    sub = verbs.add_parser("rank", parents=[common, selection], help="Rank qualified models")
    sub.add_argument("--dimension", choices=DIMENSIONS, default=Dimension.TIME.value)
    sub.add_argument("--query", help="Rank on a single query")

    sub = verbs.add_parser("show", parents=[common], help="Print one model")
    sub.add_argument("selector", nargs="?", help="Label or signature")
    sub.add_argument("--model", action="append", default=[])

    sub = verbs.add_parser(
        "plot", parents=[common, selection], help="Normalized score series"
    )
    sub.add_argument("--out", default=os.path.join(OUTPUT_DIR, "plot.csv"))
    sub.add_argument(
        "--dimension", choices=DIMENSIONS, action="append", default=[], help="x then y"
    )
    return parser


def parse_command(argv: Optional[Sequence[str]] = None) -> Command:
    """Parse arguments into a validated Command"""
    args = build_parser().parse_args(argv)
    models = list(getattr(args, "model", []))
    if getattr(args, "selector", None):
        models.insert(0, args.selector)

    dimension = getattr(args, "dimension", None)
    if isinstance(dimension, list):
        dimensions = tuple(dimension)
    else:
        dimensions = (dimension,) if dimension else ()

    return Command(
        verb=Verb(args.verb),
        config=args.config,
        out=getattr(args, "out", None),
        dimensions=dimensions,
        scales=tuple(getattr(args, "scale", [])),
        servers=tuple(getattr(args, "servers", [])),
        models=tuple(models),
        query=getattr(args, "query", None),
        workers=max(1, args.workers),
        explain=getattr(args, "explain", False),
    )


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _labels_by_signature(use_case: UseCase, result: GenerationResult) -> Dict[str, str]:
    labels = {}
    for label, selector in use_case.labels.items():
        try:
            model = find_model(result.models, selector)
        except UnknownModelError as e:
            logger.warning(f"Label {label} does not match a generated model: {e}")
            continue
        labels[keyed_signature(model)] = label
    return labels


def _select(
    command: Command, use_case: UseCase, result: GenerationResult
) -> List[DataModel]:
    if not command.models:
        return result.ordered()
    return [find_model(result.models, s, use_case.labels) for s in command.models]


def _grid(command: Command, use_case: UseCase) -> Tuple[List[int], List[int]]:
    scales = list(command.scales or use_case.sweep.scales)
    servers = list(command.servers or use_case.sweep.servers)
    return scales, servers


def _sweep(
    command: Command, use_case: UseCase, result: GenerationResult
) -> SweepResult:
    scales, servers = _grid(command, use_case)
    return sweep(
        _select(command, use_case, result),
        use_case.queries,
        scales,
        servers,
        use_case.statistics,
        use_case.constants,
        labels=_labels_by_signature(use_case, result),
        workers=command.workers,
    )


def emit_plot_data(
    result: SweepResult, dimensions: Sequence[Dimension] = (Dimension.TIME, Dimension.CARBON)
) -> str:
    """
    Normalized score pairs, one series per model ordered by scale.

    Returns an empty string for an empty sweep.

    Raises:
        ValueError: unknown dimension or not exactly two dimensions
    """
    if len(dimensions) != 2:
        raise ValueError("Plot data needs exactly two dimensions")
    x, y = (Dimension(d).value for d in dimensions)
    scores = normalize_for_plot(result)
    if scores.empty:
        return ""
    scores = scores.sort_values(["signature", "keyed", "scale", "servers"], kind="stable")
    columns = ["model", "label", "signature", "scale", "servers", x]
    if y != x:
        columns.append(y)
    return scores[columns].to_csv(index=False, float_format=FLOAT_FORMAT)


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def _generate(command: Command, use_case: UseCase, result: GenerationResult) -> None:
    manifest, tree = write_manifest(result, command.out)
    labels = _labels_by_signature(use_case, result)
    print(f"Generated {len(result.models)} models ({result.pruned_count} pruned)")
    for keyed, label in sorted(labels.items(), key=lambda item: item[1]):
        model = result.models[keyed]
        print(f"  {label:<5} {model.name:<5} {signature(model)}")
    print(f"Manifest: {manifest}")
    print(f"Tree: {tree}")


def _cost(command: Command, use_case: UseCase, result: GenerationResult) -> None:
    model = _select(command, use_case, result)[0]
    scales, servers = _grid(command, use_case)
    settings = Settings(scale=scales[0], servers=servers[0])
    stats, constants = use_case.statistics, use_case.constants

    per_query = query_costs(model, use_case.queries, settings, stats, constants)
    print(f"{model.name}  {signature(model)}")
    print(f"scale={settings.scale} servers={settings.servers}")
    print(f"{'query':<8}{'time_s':>16}{'carbon_kg':>16}{'money_eur':>16}")
    for query in use_case.queries:
        cost = per_query[query.id]
        print(f"{query.id:<8}{cost.time:>16.6g}{cost.carbon:>16.6g}{cost.money:>16.6g}")
        if command.explain:
            for step in plan_query(model, query, settings, stats, constants):
                print(
                    f"    {step.row}: {step.strategy.value} on {step.access_key or '-'}"
                    f", sel={step.selectivity:.3g}, docs={step.documents:.6g}"
                )
    fixed = static_cost(settings, constants)
    total = weighted_total(per_query, use_case.queries, settings, constants)
    print(f"{'static':<8}{fixed.time:>16.6g}{fixed.carbon:>16.6g}{fixed.money:>16.6g}")
    print(f"{'daily':<8}{total.time:>16.6g}{total.carbon:>16.6g}{total.money:>16.6g}")
    print(f"storage_bytes={storage_volume(model, settings, stats.profile):.6g}")


def _sweep_verb(command: Command, use_case: UseCase, result: GenerationResult) -> None:
    swept = _sweep(command, use_case, result)
    write_table(swept, command.out)
    json_path = os.path.splitext(command.out)[0] + ".json"
    write_json(swept, json_path)
    print(f"{len(swept.rows)} rows, {len(swept.qualified_rows())} qualified")
    print(f"Table: {command.out}")
    print(f"Document: {json_path}")


def _rank(command: Command, use_case: UseCase, result: GenerationResult) -> None:
    dimension = Dimension(command.dimensions[0] if command.dimensions else Dimension.TIME)
    swept = _sweep(command, use_case, result)
    ordering = rank(swept, dimension, command.query)
    scope = command.query or "daily total"
    print(f"Ranking by {dimension.value} ({scope}), {len(ordering)} qualified rows")
    for position, row in enumerate(ordering, start=1):
        if command.query:
            value = row.per_query[command.query].component(dimension)
        else:
            value = row.total.component(dimension)
        print(
            f"{position:>4}  {row.label or '-':<5} {row.model:<6} {row.signature:<24} "
            f"scale={row.scale} servers={row.servers} {value:.6g}"
        )


def _show(command: Command, use_case: UseCase, result: GenerationResult) -> None:
    model = _select(command, use_case, result)[0]
    print(describe(model, use_case.statistics.profile))


def _plot(command: Command, use_case: UseCase, result: GenerationResult) -> None:
    dimensions = command.dimensions or (Dimension.TIME, Dimension.CARBON)
    swept = _sweep(command, use_case, result)
    atomic_write(command.out, emit_plot_data(swept, dimensions))
    print(f"Plot data: {command.out}")


HANDLERS = {
    Verb.GENERATE: _generate,
    Verb.COST: _cost,
    Verb.SWEEP: _sweep_verb,
    Verb.RANK: _rank,
    Verb.SHOW: _show,
    Verb.PLOT: _plot,
}


def _fail(message: str, code: int) -> int:
    logger.error(message)
    print(f"Error: {message}", file=sys.stderr)
    return code


def run(command: Command) -> int:
    """
    Execute one command.

    Returns:
        Exit status: 0 on success, a distinct nonzero code per failure kind
    """
    try:
        use_case = load_use_case_file(command.config)
    except UseCaseError as e:
        return _fail(f"Bad config: {e}", EXIT_CONFIG)
    except OSError as e:
        return _fail(f"Cannot read config: {e}", EXIT_IO)

    try:
        result = generate(use_case.model, use_case.queries, workers=command.workers)
        HANDLERS[command.verb](command, use_case, result)
    except UnknownModelError as e:
        return _fail(str(e), EXIT_UNKNOWN_MODEL)
    except RefinementError as e:
        return _fail(f"Bad config: {e}", EXIT_CONFIG)
    except CostModelError as e:
        return _fail(f"Costing failed: {e}", EXIT_COST)
    except OSError as e:
        return _fail(f"I/O failure: {e}", EXIT_IO)
    except DenormError as e:
        return _fail(str(e), EXIT_FAILURE)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        command = parse_command(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except ValidationError as e:
        return _fail(f"Invalid arguments: {e.errors()[0]['msg']}", EXIT_USAGE)
    return run(command)
