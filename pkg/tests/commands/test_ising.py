#!/usr/bin/env python3

"""This module tests the ising command."""

import csv
import json

from maskfk.main import app


class TestIsingCommand:
    """Tests the ising command."""

    command = "ising"

    def invoke(self, runner, path, *args):
        return runner.invoke(app, [self.command, "--config", str(path), *args])

    def test_that_a_small_lattice_writes_metrics(self, runner, write_config, tmp_path):
        path = write_config(
            {
                "task": "ising",
                "K": 256,
                "n_steps": 20,
                "ising": {"L": 2, "beta_data": 0.2, "beta_mult": 2.0},
            }
        )
        result = self.invoke(runner, path)

        assert result.exit_code == 0, result.output
        metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
        assert metrics["beta_target"] == 0.4
        assert metrics["K"] == 256
        assert metrics["within_3_sigma"] is None
        with open(tmp_path / "out" / "samples.csv", newline="") as file:
            rows = list(csv.reader(file))
        assert rows[0] == ["config_hash", "energy", "magnetization", "log_weight"]
        assert len(rows) == 257
        assert not (tmp_path / "out" / "sweep.csv").exists()

    def test_that_replicates_report_bootstrap_sigmas(
        self, runner, write_config, tmp_path
    ):
        path = write_config(
            {
                "task": "ising",
                "K": 64,
                "n_steps": 10,
                "ising": {"L": 2, "beta_data": 0.2, "replicates": 3},
            }
        )
        result = self.invoke(runner, path, "--seed", "4")

        assert result.exit_code == 0, result.output
        metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
        assert metrics["seed"] == 4
        assert metrics["replicates"]["seeds"] == [4, 5, 6]
        assert metrics["replicates"]["energy_sigma"] >= 0.0
        assert isinstance(metrics["within_3_sigma"], bool)

    def test_that_a_sweep_writes_one_row_per_multiplier(
        self, runner, write_config, tmp_path
    ):
        path = write_config(
            {
                "task": "ising",
                "K": 64,
                "n_steps": 10,
                "ising": {"L": 2, "beta_data": 0.2, "beta_sweep": [1.0, 2.0]},
            }
        )
        result = self.invoke(runner, path)

        assert result.exit_code == 0, result.output
        sweep = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
        assert sweep[0].startswith("beta_mult,beta_target")
        assert len(sweep) == 3
        metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
        assert [point["beta_mult"] for point in metrics["sweep"]] == [1.0, 2.0]

    def test_that_a_lattice_beyond_the_limit_is_a_usage_error(
        self, runner, write_config, tmp_path
    ):
        """Test that L = 6 fails on capacity before any sampling."""
        path = write_config({"task": "ising", "ising": {"L": 6}})
        result = self.invoke(runner, path)

        assert result.exit_code == 2
        assert not (tmp_path / "out" / "metrics.json").exists()
