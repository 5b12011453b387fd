#!/usr/bin/env python3

"""This module defines the JSON documents written by the commands."""

from typing import Dict, List

from pydantic import BaseModel, Field

from maskfk.core.config import settings
from maskfk.services.ising import IsingReport, ReplicateSummary, SweepRow
from maskfk.services.oracle import OracleReport


class ReportBase(BaseModel):
    schema_version: str = settings.summary_schema_version
    success: bool = True


class SampleSummary(ReportBase):
    """summary.json of the sample command."""

    target: str
    K: int
    n_steps: int
    seed: int
    threads: int
    weighted: bool
    statistics: Dict[str, float] = Field(
        default_factory=dict, description="SNIS estimates keyed by label"
    )
    terminal_ess: float
    log_normalizer: float
    resampling_events: int
    tv_to_target: float | None = Field(
        default=None, description="TV of the weighted samples to the exact target"
    )
    wall_time: float


class TVPoint(BaseModel):
    tau: float
    tv: float


class OracleReportOut(ReportBase):
    """oracle_report.json of the oracle command."""

    target: str
    grid: int
    method: str
    weight_scale: float
    max_tv: float
    max_drift: float
    tolerance: float
    passed: bool
    tv_trace: List[TVPoint] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: OracleReport, tolerance: float) -> "OracleReportOut":
        passed = report.passed(tolerance)
        return cls(
            success=passed,
            target=report.target,
            grid=report.grid,
            method=report.method,
            weight_scale=report.weight_scale,
            max_tv=report.max_tv,
            max_drift=report.max_drift,
            tolerance=tolerance,
            passed=passed,
            tv_trace=[
                TVPoint(tau=tau, tv=tv)
                for tau, tv in zip(report.taus, report.tv_trace)
            ],
        )


class SweepPoint(BaseModel):
    beta_mult: float
    beta_target: float
    mean_energy: float
    exact_mean_energy: float
    mean_magnetization: float
    exact_mean_magnetization: float
    terminal_ess: float

    @classmethod
    def from_row(cls, row: SweepRow) -> "SweepPoint":
        return cls(**vars(row))


class ReplicateMetrics(BaseModel):
    """Seed-replicate means with bootstrap sigmas."""

    seeds: List[int]
    mean_energy: float
    energy_sigma: float
    exact_mean_energy: float
    energy_z: float
    mean_magnetization: float
    magnetization_sigma: float
    exact_mean_magnetization: float
    magnetization_z: float
    correlation_mse: float
    base_correlation_mse: float | None = None

    @classmethod
    def from_summary(cls, summary: ReplicateSummary) -> "ReplicateMetrics":
        fields = vars(summary).copy()
        fields.pop("reports")
        return cls(**fields)


class IsingMetrics(ReportBase):
    """metrics.json of the ising command."""

    L: int
    beta_data: float
    beta_mult: float
    beta_target: float
    K: int
    n_steps: int
    seed: int
    mean_energy: float
    exact_mean_energy: float
    mean_magnetization: float
    exact_mean_magnetization: float
    within_3_sigma: bool | None = Field(
        default=None, description="Set when seed replicates were run"
    )
    correlations: List[float]
    exact_correlations: List[float]
    correlation_mse: float
    w2_energy: float
    w2_magnetization: float
    w2_energy_mcmc: float | None = None
    w2_magnetization_mcmc: float | None = None
    correlation_mse_mcmc: float | None = None
    terminal_ess: float
    log_normalizer: float
    guidance_mean_energy: float | None = None
    guidance_correlation_mse: float | None = None
    base_correlation_mse: float | None = None
    supercritical: bool
    sweep: List[SweepPoint] = Field(default_factory=list)
    replicates: ReplicateMetrics | None = None

    @classmethod
    def from_report(
        cls,
        report: IsingReport,
        sweep: List[SweepRow] | None = None,
        summary: ReplicateSummary | None = None,
    ) -> "IsingMetrics":
        fields = {key: value for key, value in vars(report).items() if key != "samples"}
        replicates = None
        if summary is not None:
            replicates = ReplicateMetrics.from_summary(summary)
        return cls(
            **fields,
            within_3_sigma=None if summary is None else summary.within(3.0),
            sweep=[SweepPoint.from_row(row) for row in sweep or []],
            replicates=replicates,
        )


class SelfcheckRow(BaseModel):
    name: str
    value: float
    limit: float
    passed: bool
    detail: str = ""


class SelfcheckReport(ReportBase):
    rows: List[SelfcheckRow] = Field(default_factory=list)
    wall_time: float = 0.0
