"""Structural checks for logical data models"""

from collections import Counter
from typing import List, Set

from pydantic import BaseModel, Field

from .logger import logger
from .models import DataModel, Row
from .schema import all_rows


class Violation(BaseModel):
    element: str = Field(..., description="Offending concept, row, key or reference")
    message: str

    def __str__(self) -> str:
        return f"{self.element}: {self.message}"


class ValidationReport(BaseModel):
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, element: str, message: str) -> None:
        self.violations.append(Violation(element=element, message=message))

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def _check_row(row: Row, report: ValidationReport, ancestors: Set[str]) -> None:
    if row.origin in ancestors:
        report.add(row.name, "cyclic nesting")
        return

    names = Counter(k.name for k in row.keys)
    for name, count in names.items():
        if count > 1:
            report.add(f"{row.name}.{name}", "duplicate key name")

    primary = row.key(row.primary_key)
    if primary is None:
        report.add(row.name, f"primary key '{row.primary_key}' is not a key of the row")
    elif primary.is_complex:
        report.add(row.name, f"primary key '{row.primary_key}' is not atomic")

    for key in row.keys:
        element = f"{row.name}.{key.name}"
        if not key.is_complex:
            if key.nested_row is not None:
                report.add(element, "atomic key carries a nested row")
            continue
        if key.nested_row is None:
            report.add(element, "complex key without a nested row")
            continue
        if key.multiplicity is None:
            report.add(element, "complex key without a multiplicity")
        _check_row(key.nested_row, report, ancestors | {row.origin})


def validate(model: DataModel) -> ValidationReport:
    """
    Check a model against the structural rules of the logical meta-model.

    Never raises; every violation names the offending element.

    Args:
        model: Data model to check

    Returns:
        ValidationReport, ok when empty
    """
    report = ValidationReport()

    for concept in model.concepts:
        if not concept.rows:
            report.add(concept.name, "concept has no rows")
        counts = Counter(row.name for row in concept.rows)
        for name, count in counts.items():
            if count > 1:
                report.add(f"{concept.name}.{name}", "duplicate row name in concept")

    for row in model.rows:
        _check_row(row, report, set())

    names = Counter(row.name for row in all_rows(model))
    for name, count in names.items():
        if count > 1:
            report.add(name, "row name used more than once in the model")

    for ref in model.references:
        if ref.source == ref.target:
            report.add(ref.name, "reference source equals its target")
        for end in (ref.source, ref.target):
            holders = [
                row
                for row in all_rows(model)
                if row.name == end.row and row.key(end.key) is not None
            ]
            if len(holders) != 1:
                report.add(ref.name, f"dangling reference: '{end}' does not resolve")

    if not report.ok:
        logger.debug(f"Model {model.name} failed validation: {len(report.violations)}")
    return report
