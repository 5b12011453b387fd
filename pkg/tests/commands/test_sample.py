#!/usr/bin/env python3

"""This module tests the sample command end to end."""

import csv
import json

import pytest

from maskfk.main import app

SINGLE_SITE = {"kind": "inline", "V": 2, "d": 1, "probs": [0.8, 0.2]}
PAIR = {"kind": "product", "marginals": [[0.8, 0.2], [0.6, 0.4]]}


class TestSampleCommand:
    """Tests the sample command."""

    command = "sample"

    def invoke(self, runner, path, *args):
        return runner.invoke(app, [self.command, "--config", str(path), *args])

    def test_that_base_run_recovers_the_data(self, runner, write_config, tmp_path):
        """Test that a base run without resampling estimates P(x0 = 1) = 0.2."""
        path = write_config(
            {
                "task": "sample",
                "data": SINGLE_SITE,
                "K": 4096,
                "n_steps": 100,
                "resampling": {"trigger": "never"},
            }
        )
        result = self.invoke(runner, path)

        assert result.exit_code == 0, result.output
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["success"]
        assert summary["statistics"]["P(x0=1)"] == pytest.approx(0.2, abs=0.03)
        assert summary["tv_to_target"] < 0.03
        assert summary["resampling_events"] == 0

    def test_that_every_step_resampling_is_counted(
        self, runner, write_config, tmp_path
    ):
        path = write_config(
            {"task": "sample", "data": SINGLE_SITE, "K": 64, "n_steps": 25}
        )
        result = self.invoke(runner, path)

        assert result.exit_code == 0, result.output
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["resampling_events"] == 25

    def test_that_outputs_have_the_documented_columns(
        self, runner, write_config, tmp_path
    ):
        path = write_config({"task": "sample", "data": PAIR, "K": 32, "n_steps": 10})
        result = self.invoke(runner, path)

        assert result.exit_code == 0, result.output
        with open(tmp_path / "out" / "samples.csv", newline="") as file:
            rows = list(csv.reader(file))
        assert rows[0] == ["particle", "x0", "x1", "log_weight"]
        assert len(rows) == 33
        trace = (tmp_path / "out" / "trace.csv").read_text().splitlines()
        assert trace[0] == "step,tau,ess,mean_g,resampled,log_normalizer"
        assert len(trace) == 11

    def test_that_thread_count_does_not_change_the_samples(
        self, runner, write_config, tmp_path
    ):
        """Test that one and three threads write byte-identical samples."""
        path = write_config(
            {
                "task": "sample",
                "data": PAIR,
                "target": {"variant": "anneal", "beta": 2.0},
                "K": 512,
                "n_steps": 20,
                "seed": 11,
            }
        )
        single = self.invoke(
            runner, path, "--threads", "1", "--out", str(tmp_path / "one")
        )
        pooled = self.invoke(
            runner, path, "--threads", "3", "--out", str(tmp_path / "three")
        )

        assert single.exit_code == pooled.exit_code == 0
        assert (tmp_path / "one" / "samples.csv").read_bytes() == (
            tmp_path / "three" / "samples.csv"
        ).read_bytes()

    def test_that_seed_override_changes_the_samples(
        self, runner, write_config, tmp_path
    ):
        path = write_config({"task": "sample", "data": PAIR, "K": 256, "n_steps": 10})
        self.invoke(runner, path, "--seed", "1", "--out", str(tmp_path / "a"))
        self.invoke(runner, path, "--seed", "2", "--out", str(tmp_path / "b"))

        first = (tmp_path / "a" / "samples.csv").read_text()
        assert first != (tmp_path / "b" / "samples.csv").read_text()
        summary = json.loads((tmp_path / "b" / "summary.json").read_text())
        assert summary["seed"] == 2

    def test_that_a_malformed_config_exits_with_usage_error(
        self, runner, write_config, tmp_path
    ):
        """Test that validation fails before any output is written."""
        path = write_config({"task": "sample", "data": SINGLE_SITE, "K": -5})
        result = self.invoke(runner, path)

        assert result.exit_code == 2
        assert not (tmp_path / "out").exists()

    def test_that_a_statistic_outside_the_sequence_is_rejected(
        self, runner, write_config
    ):
        path = write_config(
            {
                "task": "sample",
                "data": SINGLE_SITE,
                "K": 16,
                "n_steps": 5,
                "statistics": [{"position": 3, "token": 0}],
            }
        )

        assert self.invoke(runner, path).exit_code == 2

    def test_that_an_unweighted_run_reports_the_guidance_baseline(
        self, runner, write_config, tmp_path
    ):
        path = write_config(
            {
                "task": "sample",
                "data": SINGLE_SITE,
                "target": {"variant": "anneal", "beta": 2.0},
                "weighted": False,
                "K": 64,
                "n_steps": 10,
            }
        )
        result = self.invoke(runner, path)

        assert result.exit_code == 0, result.output
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert not summary["weighted"]
        assert summary["terminal_ess"] == pytest.approx(64.0)
        assert summary["resampling_events"] == 0
