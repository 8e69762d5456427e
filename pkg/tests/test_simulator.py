"""Tests for sweeps, qualification, ranking and reports"""

import json

import pandas as pd
import pytest

from src.errors import CostModelError
from src.models import CostVector, Dimension, Settings, SweepResult, SweepRow
from src.simulator import (
    evaluate,
    normalize_for_plot,
    qualify,
    rank,
    results_frame,
    settings_grid,
    sweep,
    write_json,
    write_table,
)

SCALES = [10**5, 10**6]
SERVERS = [1000]


@pytest.fixture(scope="module")
def swept(use_case, reference_models, reference_labels):
    """The labelled models over two scales"""
    return sweep(
        list(reference_models.values()),
        use_case.queries,
        SCALES,
        SERVERS,
        use_case.statistics,
        use_case.constants,
        labels=reference_labels,
    )


def _row(signature, value, qualified=True, violations=()):
    cost = CostVector(time=value, carbon=value, money=value)
    return SweepRow(
        model=signature,
        signature=signature,
        keyed=signature,
        scale=1,
        servers=1,
        per_query={"Q": cost},
        total=cost,
        qualified=qualified,
        violations=violations,
    )


class TestSweep:
    """Test evaluation over models and settings"""

    def test_settings_grid(self):
        """Test the cartesian product of scales and servers"""
        grid = settings_grid([1, 10], [2, 3])
        assert [(s.scale, s.servers) for s in grid] == [(1, 2), (1, 3), (10, 2), (10, 3)]

    def test_row_count_and_order(self, swept, reference_models):
        """Test one row per model and setting, ordered by signature then setting"""
        assert len(swept.rows) == len(reference_models) * len(SCALES)
        keys = [(r.signature, r.keyed, r.scale, r.servers) for r in swept.rows]
        assert keys == sorted(keys)
        assert swept.queries == ("Q1", "Q2", "Q3", "Q4", "Q5")

    def test_rows_carry_labels(self, swept):
        """Test labelled models keep their label"""
        assert {row.label for row in swept.rows} == {
            "M0", "M3", "M16", "M24", "M30", "M33", "M35"
        }

    def test_storage_reported(self, swept):
        """Test storage grows with scale"""
        root = [row for row in swept.rows if row.label == "M0"]
        assert root[0].storage_bytes == pytest.approx(3_120_064 * 10**5)
        assert root[1].storage_bytes == pytest.approx(3_120_064 * 10**6)

    def test_threads_match_serial(self, use_case, reference_models, reference_labels, swept):
        """Test threaded sweeps give the same rows"""
        threaded = sweep(
            list(reference_models.values()),
            use_case.queries,
            SCALES,
            SERVERS,
            use_case.statistics,
            use_case.constants,
            labels=reference_labels,
            workers=4,
        )
        assert threaded == swept

    def test_failed_cell(self, use_case):
        """Test a model that cannot be costed becomes a failed row"""
        stats = use_case.statistics.model_copy(update={"selectivity": {}})
        settings = Settings(scale=1, servers=1)
        row = evaluate(use_case.model, use_case.queries, settings, stats, use_case.constants)
        assert row.failed
        assert row.error.startswith("Q1: ")
        assert row.total is None
        result = qualify(SweepResult(queries=("Q1",), rows=(row,)), use_case.queries)
        assert not result.rows[0].qualified


class TestQualify:
    """Test latency bound qualification"""

    def test_bound_just_below_cost(self, swept, use_case):
        """Test tightening one bound below the slowest cost disqualifies that row"""
        slowest = max(swept.rows, key=lambda r: r.per_query["Q2"].time)
        bound = slowest.per_query["Q2"].time * (1 - 1e-9)
        queries = [
            q.model_copy(update={"latency_bound": bound if q.id == "Q2" else 1e12})
            for q in use_case.queries
        ]
        result = qualify(swept, queries)

        def cell(row):
            return (row.keyed, row.scale, row.servers)

        target = next(r for r in result.rows if cell(r) == cell(slowest))
        assert target.violations == ("Q2",)
        assert not target.qualified

        unqualified = {cell(r) for r in result.rows if not r.qualified}
        over_bound = {cell(r) for r in swept.rows if r.per_query["Q2"].time > bound}
        assert unqualified == over_bound
        assert all(r.violations == ("Q2",) for r in result.rows if not r.qualified)

    def test_generous_bounds(self, swept, use_case):
        """Test every row qualifies when bounds are huge"""
        queries = [q.model_copy(update={"latency_bound": 1e12}) for q in use_case.queries]
        result = qualify(swept, queries)
        assert all(r.qualified and r.violations == () for r in result.rows)

    def test_violations_are_query_ids(self, swept):
        """Test violations name the queries over their bound"""
        for row in swept.rows:
            assert set(row.violations) <= set(swept.queries)
            assert row.qualified == (not row.violations)


class TestRank:
    """Test ranking qualified rows"""

    def test_cheapest_first(self):
        """Test ascending order with signature tie-break"""
        result = SweepResult(
            queries=("Q",),
            rows=(_row("B", 2.0), _row("A", 2.0), _row("C", 1.0), _row("D", 0.5, False)),
        )
        ordering = rank(result, Dimension.TIME)
        assert [r.signature for r in ordering] == ["C", "A", "B"]

    def test_query_restriction(self):
        """Test a single-query ranking ignores other violations"""
        result = SweepResult(
            queries=("Q", "R"),
            rows=(_row("A", 2.0), _row("B", 1.0, False, ("R",)), _row("C", 3.0, False, ("Q",))),
        )
        ordering = rank(result, Dimension.MONEY, "Q")
        assert [r.signature for r in ordering] == ["B", "A"]

    def test_unknown_query(self):
        """Test ranking on a query the sweep lacks"""
        with pytest.raises(CostModelError, match="Unknown query"):
            rank(SweepResult(queries=("Q",)), Dimension.TIME, "Z")

    def test_wide_join_ranking(self, swept):
        """Test full nesting ranks first on Q5 at 10^6"""
        large = SweepResult(
            queries=swept.queries, rows=tuple(r for r in swept.rows if r.scale == 10**6)
        )
        ordering = rank(large, Dimension.TIME, "Q5")
        assert ordering[0].label == "M35"


class TestReports:
    """Test tables and plot data"""

    def test_results_frame_columns(self, swept):
        """Test the sweep table layout"""
        frame = results_frame(swept)
        identifiers = ["model", "label", "signature", "keyed", "scale", "servers"]
        assert list(frame.columns[:6]) == identifiers
        assert {"Q1_T", "Q1_E", "Q1_F", "Q5_F", "T", "E", "F"} <= set(frame.columns)
        flags = ["storage_bytes", "qualified", "violations", "error"]
        assert list(frame.columns[-4:]) == flags
        assert len(frame) == len(swept.rows)

    def test_write_table_and_json(self, swept, tmp_path):
        """Test CSV and JSON reports"""
        table = tmp_path / "sweep.csv"
        document = tmp_path / "sweep.json"
        write_table(swept, str(table))
        write_json(swept, str(document))
        frame = pd.read_csv(table)
        assert len(frame) == len(swept.rows)
        assert SweepResult.model_validate(json.loads(document.read_text())) == swept

    def test_normalized_scores(self, swept):
        """Test log-scaled scores span the unit interval"""
        scores = normalize_for_plot(swept)
        for dimension in Dimension:
            column = scores[dimension.value]
            assert column.min() == pytest.approx(0.0)
            assert column.max() == pytest.approx(1.0)

    def test_constant_scores(self):
        """Test a dimension without spread scores zero"""
        result = SweepResult(queries=("Q",), rows=(_row("A", 1.0), _row("B", 1.0)))
        scores = normalize_for_plot(result)
        assert list(scores["time"]) == [0.0, 0.0]

    def test_empty_sweep(self):
        """Test an empty sweep normalizes to an empty frame"""
        assert normalize_for_plot(SweepResult(queries=("Q",))).empty


def test_workload_without_queries(use_case):
    """Test a sweep with no queries prices the cluster alone"""
    result = sweep(
        [use_case.model], [], [1], [2], use_case.statistics, use_case.constants
    )
    row = result.rows[0]
    assert row.qualified
    assert row.total == CostVector(time=0.0, carbon=2 * 0.87671, money=2 * 0.8543)
