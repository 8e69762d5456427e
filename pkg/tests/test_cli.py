"""Tests for the command line front end"""

import os

import pandas as pd
import pytest

from src.cli import (
    EXIT_CONFIG,
    EXIT_COST,
    EXIT_IO,
    EXIT_OK,
    EXIT_UNKNOWN_MODEL,
    EXIT_USAGE,
    emit_plot_data,
    main,
    parse_command,
)
from src.generator import MANIFEST_FILE, TREE_FILE
from src.models import Dimension, SweepResult, Verb

ONE_SETTING = ["--scale", "1000000", "--servers", "1000"]


class TestParsing:
    """Test argument parsing into commands"""

    def test_show_positional(self):
        """Test show takes the model as a positional argument"""
        command = parse_command(["show", "M35"])
        assert command.verb == Verb.SHOW
        assert command.models == ("M35",)

    def test_rank_flags(self):
        """Test rank dimension and query flags"""
        command = parse_command(["rank", "--dimension", "money", "--query", "Q5"])
        assert command.dimensions == (Dimension.MONEY,)
        assert command.query == "Q5"

    def test_plot_dimensions(self):
        """Test plot takes x then y"""
        command = parse_command(
            ["plot", "--out", "p.csv", "--dimension", "money", "--dimension", "time"]
        )
        assert command.dimensions == (Dimension.MONEY, Dimension.TIME)

    def test_repeated_models(self):
        """Test sweep accepts several models and settings"""
        command = parse_command(
            ["sweep", "--out", "s.csv", "--model", "M0", "--model", "M35", "--scale", "10"]
        )
        assert command.models == ("M0", "M35")
        assert command.scales == (10,)

    def test_default_output_paths(self, monkeypatch, tmp_path):
        """Test writing verbs fall back to the configured output directory"""
        monkeypatch.setattr("src.cli.OUTPUT_DIR", str(tmp_path))
        assert parse_command(["generate"]).out == os.path.join(str(tmp_path), "models")
        assert parse_command(["sweep"]).out == os.path.join(str(tmp_path), "sweep.csv")
        assert parse_command(["plot"]).out == os.path.join(str(tmp_path), "plot.csv")
        assert parse_command(["sweep", "--out", "s.csv"]).out == "s.csv"
        assert parse_command(["rank"]).out is None


class TestExitCodes:
    """Test each failure kind maps to its exit status"""

    def test_unknown_verb(self):
        """Test argparse errors are usage errors"""
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_missing_model(self):
        """Test cost without a model is a usage error"""
        assert main(["cost"]) == EXIT_USAGE

    def test_unknown_model(self, capsys):
        """Test an unresolvable selector"""
        assert main(["show", "Z{Y}"]) == EXIT_UNKNOWN_MODEL
        assert "Unknown model" in capsys.readouterr().err

    def test_ambiguous_model(self, capsys):
        """Test an ambiguous compact signature lists the candidates"""
        assert main(["show", "C1,C2{W,O}"]) == EXIT_UNKNOWN_MODEL
        assert "ambiguous" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        """Test an unreadable config is an I/O error"""
        missing = str(tmp_path / "absent.yaml")
        assert main(["show", "M0", "--config", missing]) == EXIT_IO

    def test_invalid_config(self, tmp_path, capsys):
        """Test an invalid config"""
        path = tmp_path / "bad.yaml"
        path.write_text("model: [unclosed", encoding="utf-8")
        assert main(["show", "M0", "--config", str(path)]) == EXIT_CONFIG
        assert "Bad config" in capsys.readouterr().err

    def test_costing_failure(self, capsys):
        """Test ranking on a query the workload lacks"""
        assert main(["rank", "--query", "Q9", "--model", "M0"] + ONE_SETTING) == EXIT_COST
        assert "Costing failed" in capsys.readouterr().err


class TestVerbs:
    """Test each verb end to end on the bundled use case"""

    def test_generate(self, tmp_path, capsys):
        """Test generate writes the manifest and tree"""
        out = tmp_path / "models"
        assert main(["generate", "--out", str(out)]) == EXIT_OK
        assert os.path.exists(out / MANIFEST_FILE)
        assert os.path.exists(out / TREE_FILE)
        printed = capsys.readouterr().out
        assert "O{C{W}}" in printed
        assert "Generated" in printed

    def test_show(self, capsys):
        """Test show prints the model by label"""
        assert main(["show", "M35"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "O{C{W}}" in printed
        assert "via c_o_ID" in printed

    def test_cost(self, capsys):
        """Test cost prints per-query rows and the daily total"""
        assert main(["cost", "--model", "M0"] + ONE_SETTING) == EXIT_OK
        printed = capsys.readouterr().out
        for word in ("Q1", "Q5", "static", "daily", "storage_bytes"):
            assert word in printed

    def test_cost_explain(self, capsys):
        """Test cost can print access plans"""
        assert main(["cost", "--model", "M0", "--explain"] + ONE_SETTING) == EXIT_OK
        printed = capsys.readouterr().out
        assert "C: sharded on c_last" in printed
        assert "O: indexed on c_o_ID" in printed

    def test_sweep(self, tmp_path):
        """Test sweep writes a table and a JSON document"""
        out = tmp_path / "sweep.csv"
        argv = ["sweep", "--out", str(out), "--model", "M0", "--model", "M35"]
        assert main(argv + ONE_SETTING) == EXIT_OK
        frame = pd.read_csv(out)
        assert sorted(frame["label"]) == ["M0", "M35"]
        assert os.path.exists(tmp_path / "sweep.json")

    def test_rank(self, capsys):
        """Test rank prints qualified rows cheapest first"""
        argv = ["rank", "--query", "Q5", "--model", "M0", "--model", "M35"]
        assert main(argv + ONE_SETTING) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("Ranking by time (Q5)")
        assert "M35" in lines[1]

    def test_plot(self, tmp_path):
        """Test plot writes normalized score pairs"""
        out = tmp_path / "plot.csv"
        argv = ["plot", "--out", str(out), "--model", "M0", "--model", "M35"]
        assert main(argv + ["--scale", "1000", "--scale", "1000000"]) == EXIT_OK
        frame = pd.read_csv(out)
        expected = ["model", "label", "signature", "scale", "servers", "time", "carbon"]
        assert list(frame.columns) == expected
        assert len(frame) == 4
        assert frame["time"].between(0, 1).all()


class TestPlotData:
    """Test plot data emission"""

    def test_empty(self):
        """Test an empty sweep yields no data"""
        assert emit_plot_data(SweepResult()) == ""

    def test_dimension_count(self):
        """Test exactly two dimensions are required"""
        with pytest.raises(ValueError, match="exactly two"):
            emit_plot_data(SweepResult(), (Dimension.TIME,))

    def test_unknown_dimension(self):
        """Test dimensions are validated"""
        with pytest.raises(ValueError):
            emit_plot_data(SweepResult(), ("time", "speed"))
