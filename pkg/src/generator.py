"""Merge and split refinements, and enumeration of denormalized models"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence, Tuple, Union

from .errors import RefinementError
from .logger import logger
from .models import (
    Concept,
    DataModel,
    Direction,
    Endpoint,
    GenerationResult,
    KeyKind,
    KeyValue,
    MergeTrace,
    Multiplicity,
    Query,
    Reference,
    RefinementStep,
    Row,
    StepKind,
)
from .schema import (
    covered_keys,
    find_row,
    keyed_signature,
    locate,
    merge_involved,
    row_order,
    signature,
    top_level_row,
    walk,
)
from .utils import atomic_write
from .validation import validate

MANIFEST_FILE = "signatures.tsv"
TREE_FILE = "tree.json"


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _with_rows(model: DataModel, c_index: int, rows: Sequence[Row]) -> DataModel:
    concepts = list(model.concepts)
    concepts[c_index] = concepts[c_index].model_copy(update={"rows": tuple(rows)})
    return model.model_copy(update={"concepts": tuple(concepts)})


def _reference_index(model: DataModel, ref: Union[Reference, str]) -> int:
    for index, candidate in enumerate(model.references):
        if candidate == ref or candidate.name == ref:
            return index
    name = ref.name if isinstance(ref, Reference) else ref
    raise RefinementError(f"Reference '{name}' is not in model {model.name}")


def _require_top_level(model: DataModel, name: str) -> Row:
    row = top_level_row(model, name)
    if row is not None:
        return row
    if find_row(model, name) is not None:
        raise RefinementError(f"Row '{name}' is already nested")
    raise RefinementError(f"Row '{name}' is not in model {model.name}")


def _anchor(row: Row) -> float:
    ordinals = [k.ordinal for k in row.atomic_keys if k.name != row.primary_key]
    return min(ordinals) if ordinals else math.inf


def _renumber(model: DataModel, origin: str, c_index: int) -> DataModel:
    """
    Name the fragments of ``origin`` after their first declared key.

    References follow the fragment holding their key; references to the
    primary key follow the last fragment.
    """
    concept = model.concepts[c_index]
    positions = [i for i, row in enumerate(concept.rows) if row.origin == origin]
    ordered = sorted(positions, key=lambda i: (_anchor(concept.rows[i]), i))
    single = len(ordered) == 1
    old_names = {concept.rows[i].name for i in positions}

    rows = list(concept.rows)
    for number, position in enumerate(ordered, start=1):
        rows[position] = rows[position].model_copy(
            update={
                "name": origin if single else f"{origin}{number}",
                "fragment": 0 if single else number,
            }
        )
    fragments = [rows[i] for i in ordered]
    last = fragments[-1]

    def repoint(end: Endpoint) -> Endpoint:
        if end.row not in old_names:
            return end
        if end.key == last.primary_key:
            return end.model_copy(update={"row": last.name})
        for fragment in fragments:
            if fragment.key(end.key) is not None:
                return end.model_copy(update={"row": fragment.name})
        return end

    references = tuple(
        ref.model_copy(
            update={"source": repoint(ref.source), "target": repoint(ref.target)}
        )
        for ref in model.references
    )
    model = _with_rows(model, c_index, rows)
    return model.model_copy(update={"references": references})


# ---------------------------------------------------------------------------
# Refinements
# ---------------------------------------------------------------------------


def merge(
    model: DataModel, ref: Union[Reference, str], direction: Direction
) -> DataModel:
    """
    Nest one end of a reference inside the other.

    Nesting the target into the source duplicates the target per source
    instance (one-to-one); nesting the source into the target embeds an
    array of sources (one-to-many, sized by the reference cardinality).
    The reference and its source key disappear; the complex key records
    both so merge_inverse can restore them.

    Raises:
        RefinementError: reference absent, row already nested or cyclic nesting
    """
    direction = Direction(direction)
    index = _reference_index(model, ref)
    ref = model.references[index]

    if ref.source.row == ref.target.row:
        raise RefinementError(f"Merging {ref.name} would nest a row inside itself")
    source = _require_top_level(model, ref.source.row)
    target = _require_top_level(model, ref.target.row)

    removed_index = next(
        (i for i, k in enumerate(source.keys) if k.name == ref.source.key), None
    )
    if removed_index is None:
        raise RefinementError(f"Key '{ref.source}' is not in model {model.name}")
    removed_key = source.keys[removed_index]
    stripped = source.model_copy(
        update={"keys": source.keys[:removed_index] + source.keys[removed_index + 1 :]}
    )

    if direction == Direction.NEST_TARGET_INTO_SOURCE:
        host, nested, multiplicity = stripped, target, Multiplicity.one_to_one()
    else:
        host = target
        nested = stripped
        multiplicity = Multiplicity.one_to_many(ref.cardinality)

    host_origins = {row.origin for row, _ in walk(host)}
    if any(row.origin in host_origins for row, _ in walk(nested)):
        raise RefinementError(f"Merging {ref.name} would create cyclic nesting")

    c_index, r_index = locate(model, nested.name)
    trace = MergeTrace(
        reference=ref,
        reference_index=index,
        direction=direction,
        removed_key=removed_key,
        removed_index=removed_index,
        concept=model.concepts[c_index].name,
        concept_index=c_index,
        row_index=r_index,
    )
    complex_key = KeyValue(
        name=nested.name,
        kind=KeyKind.COMPLEX,
        ordinal=len(host.keys),
        nested_row=nested,
        multiplicity=multiplicity,
        trace=trace,
    )
    host = host.model_copy(update={"keys": host.keys + (complex_key,)})

    concepts = []
    for concept in model.concepts:
        rows = []
        for row in concept.rows:
            if row.name == host.name:
                rows.append(host)
            elif row.name != nested.name:
                rows.append(row)
        if rows:
            concepts.append(concept.model_copy(update={"rows": tuple(rows)}))

    references = model.references[:index] + model.references[index + 1 :]
    logger.debug(f"merge {ref.name} {direction.value} on {model.name}")
    return model.model_copy(
        update={"concepts": tuple(concepts), "references": references}
    )


def merge_inverse(model: DataModel, nested: Union[KeyValue, str]) -> DataModel:
    """
    Lift a nested row back to the top level and restore its reference.

    Only complex keys of top-level rows can be lifted, so chained nestings
    are undone from the outside in.

    Raises:
        RefinementError: key missing, not complex or not created by a merge
    """
    name = nested.name if isinstance(nested, KeyValue) else nested

    host = next((row for row in model.rows if row.key(name) is not None), None)
    if host is None:
        for row in model.rows:
            for inner, _ in walk(row):
                if inner is not row and inner.key(name) is not None:
                    raise RefinementError(
                        f"Key '{name}' sits in nested row '{inner.name}', "
                        f"lift '{inner.name}' first"
                    )
        raise RefinementError(f"Key '{name}' is not in model {model.name}")

    key = host.key(name)
    if not key.is_complex:
        raise RefinementError(f"Key '{name}' is not a complex key")
    if key.trace is None:
        raise RefinementError(f"Key '{name}' was not created by a merge")
    trace = key.trace

    host_keys = [k for k in host.keys if k.name != name]
    lifted = key.nested_row
    if trace.direction == Direction.NEST_TARGET_INTO_SOURCE:
        host_keys.insert(min(trace.removed_index, len(host_keys)), trace.removed_key)
    else:
        lifted_keys = list(lifted.keys)
        lifted_keys.insert(min(trace.removed_index, len(lifted_keys)), trace.removed_key)
        lifted = lifted.model_copy(update={"keys": tuple(lifted_keys)})
    host = host.model_copy(update={"keys": tuple(host_keys)})

    concepts = []
    for concept in model.concepts:
        rows = tuple(host if row.name == host.name else row for row in concept.rows)
        concepts.append(concept.model_copy(update={"rows": rows}))

    home = next((i for i, c in enumerate(concepts) if c.name == trace.concept), None)
    if home is None:
        concepts.insert(
            min(trace.concept_index, len(concepts)),
            Concept(name=trace.concept, rows=(lifted,)),
        )
    else:
        rows = list(concepts[home].rows)
        rows.insert(min(trace.row_index, len(rows)), lifted)
        concepts[home] = concepts[home].model_copy(update={"rows": tuple(rows)})

    references = list(model.references)
    references.insert(min(trace.reference_index, len(references)), trace.reference)
    logger.debug(f"merge_inverse {name} on {model.name}")
    return model.model_copy(
        update={"concepts": tuple(concepts), "references": tuple(references)}
    )


def split(
    model: DataModel, row: Union[Row, str], key: Union[KeyValue, str]
) -> DataModel:
    """
    Peel one key off a row into a new row sharing the primary key.

    The row must be top-level, keep at least one other non-primary key,
    and no row of its lineage may take part in a merge yet.

    Raises:
        RefinementError: primary or complex key, key absent, merged lineage
    """
    row_name = row.name if isinstance(row, Row) else row
    key_name = key.name if isinstance(key, KeyValue) else key
    target = _require_top_level(model, row_name)

    peeled_key = target.key(key_name)
    if peeled_key is None:
        raise RefinementError(f"Key '{key_name}' is not in row '{row_name}'")
    if key_name == target.primary_key:
        raise RefinementError(f"Cannot split primary key '{key_name}' off '{row_name}'")
    if peeled_key.is_complex:
        raise RefinementError(f"Cannot split complex key '{key_name}'")
    if merge_involved(model, target.origin):
        raise RefinementError(
            f"Rows of '{target.origin}' already take part in a merge, "
            "splits must come first"
        )
    others = [
        k for k in target.atomic_keys if k.name not in (target.primary_key, key_name)
    ]
    if not others:
        raise RefinementError(f"Row '{row_name}' has nothing left to split")

    primary = target.key(target.primary_key)
    rest = target.model_copy(
        update={"keys": tuple(k for k in target.keys if k.name != key_name)}
    )
    peeled = target.model_copy(
        update={
            "keys": tuple(sorted((primary, peeled_key), key=lambda k: k.ordinal))
        }
    )

    c_index, r_index = locate(model, row_name)
    rows = list(model.concepts[c_index].rows)
    rows[r_index : r_index + 1] = [rest, peeled]
    logger.debug(f"split {row_name} on {key_name} in {model.name}")
    return _renumber(_with_rows(model, c_index, rows), target.origin, c_index)


def split_inverse(
    model: DataModel, row_a: Union[Row, str], row_b: Union[Row, str]
) -> DataModel:
    """
    Join two fragments of the same row back into one.

    Raises:
        RefinementError: rows not fragments of the same row
    """
    name_a = row_a.name if isinstance(row_a, Row) else row_a
    name_b = row_b.name if isinstance(row_b, Row) else row_b
    first = _require_top_level(model, name_a)
    second = _require_top_level(model, name_b)

    place_a, place_b = locate(model, name_a), locate(model, name_b)
    if (
        name_a == name_b
        or first.origin != second.origin
        or first.primary_key != second.primary_key
        or not first.fragment
        or not second.fragment
        or place_a[0] != place_b[0]
    ):
        raise RefinementError(f"Rows '{name_a}' and '{name_b}' are not co-lineal")
    if first.complex_keys or second.complex_keys:
        raise RefinementError("Undo merges on these rows before joining them")

    keys = {k.name: k for k in first.keys}
    keys.update({k.name: k for k in second.keys if k.name not in keys})
    joined = first.model_copy(
        update={"keys": tuple(sorted(keys.values(), key=lambda k: k.ordinal))}
    )

    c_index = place_a[0]
    keep, drop = sorted((place_a[1], place_b[1]))
    rows = list(model.concepts[c_index].rows)
    rows[keep] = joined
    del rows[drop]
    logger.debug(f"split_inverse {name_a}+{name_b} in {model.name}")
    return _renumber(_with_rows(model, c_index, rows), first.origin, c_index)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def is_normalized(model: DataModel) -> bool:
    return all(not row.complex_keys and row.fragment == 0 for row in model.rows)


def targets_query(model: DataModel, queries: Sequence[Query]) -> bool:
    """Whether some query is answered by a single row of the model"""
    if not queries:
        return True
    coverage = [covered_keys(row) for row in model.rows]
    return any(
        set(query.required_keys) <= keys for query in queries for keys in coverage
    )


class ModelGenerator:
    """Breadth-first enumeration of merge and split refinements"""

    def __init__(self, queries: Sequence[Query] = (), workers: int = 1):
        self.queries = tuple(queries)
        self.workers = max(1, workers)

    def children(self, model: DataModel) -> List[Tuple[StepKind, str, DataModel]]:
        """All single-step refinements, splits first, in a fixed order"""
        found = []
        for row in sorted(model.rows, key=row_order):
            if merge_involved(model, row.origin):
                continue
            for key in sorted(row.atomic_keys, key=lambda k: k.ordinal):
                if key.name == row.primary_key:
                    continue
                try:
                    child = split(model, row.name, key.name)
                except RefinementError:
                    continue
                found.append((StepKind.SPLIT, f"split {row.name} on {key.name}", child))

        for ref in model.references:
            for direction in Direction:
                try:
                    child = merge(model, ref, direction)
                except RefinementError:
                    continue
                found.append(
                    (StepKind.MERGE, f"merge {ref.name} {direction.value}", child)
                )
        return found

    def _expand(self, frontier: List[DataModel]):
        if self.workers == 1 or len(frontier) < 2:
            return [self.children(model) for model in frontier]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(self.children, frontier))

    def generate(self, root: DataModel) -> GenerationResult:
        """
        Enumerate every model reachable from a normalized root.

        Models are deduplicated by keyed signature, so no path revisits a
        model and the tree is acyclic. A model that answers no query from
        a single row is dropped and not expanded further.

        Raises:
            RefinementError: invalid or already refined root
        """
        report = validate(root)
        if not report.ok:
            raise RefinementError(f"Invalid root model:\n{report}")
        if not is_normalized(root):
            raise RefinementError("Root model must have no nesting and no splits")

        root_sig = keyed_signature(root)
        models: Dict[str, DataModel] = {root_sig: root}
        rejected = set()
        steps: List[RefinementStep] = []
        frontier = [root]
        depth = 0

        while frontier:
            depth += 1
            level: List[DataModel] = []
            for parent, children in zip(frontier, self._expand(frontier)):
                parent_sig = keyed_signature(parent)
                for kind, detail, child in children:
                    child_sig = keyed_signature(child)
                    if child_sig in models or child_sig in rejected:
                        continue
                    if not targets_query(child, self.queries):
                        rejected.add(child_sig)
                        continue
                    child = child.model_copy(update={"name": f"M{len(models)}"})
                    models[child_sig] = child
                    steps.append(
                        RefinementStep(
                            kind=kind, detail=detail, parent=parent_sig, child=child_sig
                        )
                    )
                    level.append(child)
            logger.debug(f"Depth {depth}: {len(level)} new models")
            frontier = sorted(level, key=keyed_signature)

        logger.info(
            f"Generated {len(models)} models from {root.name} "
            f"({len(rejected)} pruned, depth {depth - 1})"
        )
        return GenerationResult(
            root=root_sig, models=models, tree=tuple(steps), pruned_count=len(rejected)
        )


def generate(
    root: DataModel, queries: Sequence[Query] = (), workers: int = 1
) -> GenerationResult:
    return ModelGenerator(queries, workers=workers).generate(root)


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


def manifest_lines(result: GenerationResult) -> List[str]:
    """One tab separated line per model: name, signature, keyed signature, lineage"""
    lines = []
    for keyed in sorted(result.models):
        model = result.models[keyed]
        lineage = " ; ".join(step.detail for step in result.lineage(keyed)) or "root"
        lines.append(f"{model.name}\t{signature(model)}\t{keyed}\t{lineage}")
    return lines


def tree_document(result: GenerationResult) -> str:
    names = {sig: model.name for sig, model in result.models.items()}
    document = {
        "root": names[result.root],
        "models": len(result.models),
        "pruned": result.pruned_count,
        "steps": [
            {
                "parent": names[step.parent],
                "child": names[step.child],
                "kind": step.kind.value,
                "detail": step.detail,
            }
            for step in result.tree
        ],
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_manifest(result: GenerationResult, directory: str) -> Tuple[str, str]:
    """Write the signatures manifest and the generation tree into ``directory``"""
    manifest_path = os.path.join(directory, MANIFEST_FILE)
    tree_path = os.path.join(directory, TREE_FILE)
    atomic_write(manifest_path, "\n".join(manifest_lines(result)) + "\n")
    atomic_write(tree_path, tree_document(result))
    logger.info(f"Wrote {len(result.models)} signatures to {manifest_path}")
    return manifest_path, tree_path
