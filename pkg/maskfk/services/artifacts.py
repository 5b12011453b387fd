#!/usr/bin/env python3

"""Atomic writers for the CSV and JSON artifacts of every command."""

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from pydantic import BaseModel

from maskfk.services.smc import TraceRow, WeightedEnsemble

TRACE_COLUMNS = ("step", "tau", "ess", "mean_g", "resampled", "log_normalizer")


def atomic_write_text(path: Path, text: str) -> Path:
    """Writes to a temporary file in the target directory, then renames it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as file:
            file.write(text)
        os.replace(temp, path)
    except BaseException:
        Path(temp).unlink(missing_ok=True)
        raise
    return path


def write_json(path: Path, payload: BaseModel) -> Path:
    return atomic_write_text(path, payload.model_dump_json(indent=2) + "\n")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return atomic_write_text(path, buffer.getvalue())


def sample_rows(ensemble: WeightedEnsemble):
    for k, (tokens, log_weight) in enumerate(
        zip(ensemble.particles, ensemble.log_weights)
    ):
        yield [k, *(int(tok) for tok in tokens), repr(float(log_weight))]


def write_samples(path: Path, ensemble: WeightedEnsemble) -> Path:
    """samples.csv: particle, x0..x{d-1}, log_weight."""
    header = ["particle", *(f"x{k}" for k in range(ensemble.d)), "log_weight"]
    return write_csv(path, header, sample_rows(ensemble))


def write_trace(path: Path, trace: Sequence[TraceRow]) -> Path:
    """trace.csv: step, tau, ess, mean_g, resampled, log_normalizer."""
    rows = (
        [
            row.step,
            repr(row.tau),
            repr(row.ess),
            repr(row.mean_g),
            int(row.resampled),
            repr(row.log_normalizer),
        ]
        for row in trace
    )
    return write_csv(path, TRACE_COLUMNS, rows)
