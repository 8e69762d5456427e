"""Signatures, sizing and lookups over logical data models"""

from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union

from .errors import AmbiguousSignatureError, SchemaError, UnknownModelError
from .models import Cardinality, DataModel, KeyValue, Row, Settings, SizeProfile


def row_order(row: Row) -> Tuple[int, int, str]:
    """Collation shared by signatures and plans: origin order, then split index"""
    return (row.rank, row.fragment, row.name)


def nested_rows(row: Row) -> List[Row]:
    return sorted((k.nested_row for k in row.complex_keys), key=row_order)


def walk(row: Row, fanout: float = 1.0) -> Iterator[Tuple[Row, float]]:
    """Yield the row and every nested row with its one-to-many fan-out."""
    yield row, fanout
    for key in row.complex_keys:
        factor = fanout
        if key.multiplicity.cardinality == Cardinality.ONE_TO_MANY:
            factor *= key.multiplicity.average
        yield from walk(key.nested_row, factor)


def all_rows(model: DataModel) -> Iterator[Row]:
    for row in model.rows:
        for inner, _ in walk(row):
            yield inner


def find_row(model: DataModel, name: str) -> Optional[Row]:
    """Find a top-level or nested row by name"""
    for row in all_rows(model):
        if row.name == name:
            return row
    return None


def top_level_row(model: DataModel, name: str) -> Optional[Row]:
    for row in model.rows:
        if row.name == name:
            return row
    return None


def locate(model: DataModel, name: str) -> Optional[Tuple[int, int]]:
    """Concept and row index of a top-level row"""
    for c_index, concept in enumerate(model.concepts):
        for r_index, row in enumerate(concept.rows):
            if row.name == name:
                return c_index, r_index
    return None


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------


def _compact(row: Row) -> str:
    inner = nested_rows(row)
    if not inner:
        return row.name
    return row.name + "{" + ",".join(_compact(r) for r in inner) + "}"


def signature(model: DataModel) -> str:
    """
    Compact signature: comma separated rows, nesting in braces.

    Example: ``O{C{W}}`` for orders embedding customers embedding warehouses.
    Not injective across splits of the same row; see keyed_signature.
    """
    return ",".join(_compact(row) for row in sorted(model.rows, key=row_order))


def _keyed(row: Row) -> str:
    atomic = sorted(row.atomic_keys, key=lambda k: (k.ordinal, k.name))
    parts = [k.name for k in atomic]
    for key in sorted(row.complex_keys, key=lambda k: row_order(k.nested_row)):
        removed = key.trace.removed_key.name if key.trace else ""
        parts.append("{" + removed + ":" + _keyed(key.nested_row) + "}")
    return f"{row.name}({','.join(parts)})"


def keyed_signature(model: DataModel) -> str:
    """
    Injective signature listing every key of every row.

    Remaining references follow a ``|`` when there are any.
    """
    text = ",".join(_keyed(row) for row in sorted(model.rows, key=row_order))
    if model.references:
        text += "|" + ";".join(sorted(ref.name for ref in model.references))
    return text


def find_model(
    models: Union[Mapping[str, DataModel], Iterable[DataModel]],
    selector: str,
    labels: Optional[Mapping[str, str]] = None,
) -> DataModel:
    """
    Resolve a label, keyed signature or compact signature to one model.

    Raises:
        AmbiguousSignatureError: compact signature shared by several models
        UnknownModelError: nothing matches
    """
    pool = list(models.values()) if isinstance(models, Mapping) else list(models)
    wanted = (labels or {}).get(selector, selector)

    for model in pool:
        if keyed_signature(model) == wanted:
            return model

    matches = [m for m in pool if signature(m) == wanted]
    if len(matches) == 1:
        return matches[0]
    if matches:
        raise AmbiguousSignatureError(
            wanted, sorted(keyed_signature(m) for m in matches)
        )

    by_name = [m for m in pool if m.name == wanted]
    if len(by_name) == 1:
        return by_name[0]
    raise UnknownModelError(f"Unknown model '{selector}'")


# ---------------------------------------------------------------------------
# Keys
# ---------------------------------------------------------------------------


def covered_keys(row: Row) -> Set[str]:
    """
    Keys a single document of this row can answer.

    Includes nested rows and the reference keys merges removed, since the
    join they stood for is materialized in the document.
    """
    keys = {k.name for k in row.atomic_keys}
    for key in row.complex_keys:
        if key.trace:
            keys.add(key.trace.removed_key.name)
        keys |= covered_keys(key.nested_row)
    return keys


def key_fanout(row: Row, key: str) -> float:
    """One-to-many fan-out above the row holding ``key`` (1 when top-level)"""
    for inner, fanout in walk(row):
        found = inner.key(key)
        if found is not None and not found.is_complex:
            return fanout
    return 1.0


def key_domains(model: DataModel) -> Dict[str, str]:
    """
    Map identifying keys to the origin row whose instances they identify.

    Primary keys identify their own origin; reference keys identify the
    origin of the row they point to.
    """
    domains: Dict[str, str] = {}
    for row in all_rows(model):
        domains.setdefault(row.primary_key, row.origin)

    references = list(model.references)
    for row in all_rows(model):
        references += [k.trace.reference for k in row.complex_keys if k.trace]
    for ref in references:
        target = find_row(model, ref.target.row)
        domains.setdefault(ref.source.key, target.origin if target else ref.target.row)
    return domains


def merge_involved(model: DataModel, origin: str) -> bool:
    """Whether any row of this origin nests or is nested by a merge"""
    for row in model.rows:
        for inner, _ in walk(row):
            if inner.origin == origin and (inner is not row or inner.complex_keys):
                return True
    return False


# ---------------------------------------------------------------------------
# Sizing
# ---------------------------------------------------------------------------


def key_size(key: KeyValue, profile: SizeProfile) -> int:
    size = profile.key_size.get(key.name, key.base_size)
    if size is None:
        raise SchemaError(f"Missing size for key '{key.name}'")
    return size


def document_size(row: Row, profile: SizeProfile) -> float:
    """Bytes of one document, nested rows weighted by their multiplicity"""
    total = 0.0
    for key in row.keys:
        if key.is_complex:
            total += key.multiplicity.average * document_size(key.nested_row, profile)
        else:
            total += key_size(key, profile)
    return total


def projected_size(row: Row, keys: Iterable[str], profile: SizeProfile) -> float:
    """Bytes of the given keys as returned from one document"""
    wanted = set(keys)
    total = 0.0
    for inner, fanout in walk(row):
        for key in inner.atomic_keys:
            if key.name in wanted:
                total += key_size(key, profile) * fanout
    return total


def origin_count(origin: str, settings: Settings, profile: SizeProfile) -> float:
    if origin not in profile.row_count:
        raise SchemaError(f"Unknown row lineage '{origin}'")
    return profile.row_count[origin] * settings.scale


def document_count(row: Row, settings: Settings, profile: SizeProfile) -> float:
    """Documents of a top-level row; fragments and hosts keep their origin's count"""
    return origin_count(row.origin, settings, profile)


def storage_volume(model: DataModel, settings: Settings, profile: SizeProfile) -> float:
    return sum(
        document_count(row, settings, profile) * document_size(row, profile)
        for row in model.rows
    )


# ---------------------------------------------------------------------------
# Display
# ---------------------------------------------------------------------------


def _describe_row(
    row: Row, profile: Optional[SizeProfile], indent: int, lines: List[str]
) -> None:
    pad = "  " * indent
    size = ""
    if profile is not None:
        try:
            size = f"  [{document_size(row, profile):g} B]"
        except SchemaError:
            size = ""
    lines.append(f"{pad}{row.name} (pk {row.primary_key}){size}")
    for key in row.atomic_keys:
        lines.append(f"{pad}  - {key.name}")
    for key in sorted(row.complex_keys, key=lambda k: row_order(k.nested_row)):
        via = f" via {key.trace.removed_key.name}" if key.trace else ""
        lines.append(
            f"{pad}  + {key.name} "
            f"{key.multiplicity.cardinality.value} x{key.multiplicity.average:g}{via}"
        )
        _describe_row(key.nested_row, profile, indent + 2, lines)


def describe(model: DataModel, profile: Optional[SizeProfile] = None) -> str:
    """Multi-line listing of a model for the terminal"""
    lines = [f"{model.name}  {signature(model)}"]
    for row in sorted(model.rows, key=row_order):
        _describe_row(row, profile, 1, lines)
    if model.references:
        lines.append("  references:")
        lines += [f"    {ref.name} (x{ref.cardinality:g})" for ref in model.references]
    return "\n".join(lines)
