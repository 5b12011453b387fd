#!/usr/bin/env python3

"""This module holds the long help text of the CLI."""

docs = """
**maskfk** simulates masked discrete-diffusion processes and steers them with
Feynman-Kac correctors (annealing, products, geometric averages and reward
tilting) using weighted sequential Monte Carlo. Small instances are checked
against exact master-equation oracles.

Every command reads one JSON experiment document (`--config`). Flags
override the document: `--seed`, `--threads`, `--out`, `--tolerance`.

**Exit codes**: 0 success, 1 a check failed, 2 usage or config error.

**Output files** (written atomically to the output directory):

- `samples.csv`: `particle, x0, ..., x{d-1}, log_weight` (sample)
- `trace.csv`: `step, tau, ess, mean_g, resampled, log_normalizer` (sample)
- `summary.json`: versioned SNIS estimates, terminal ESS, wall time (sample)
- `oracle_report.json`: max TV against the exact target per grid time (oracle)
- `metrics.json`: energy, magnetization and correlation metrics (ising);
  with `replicates > 1` also the bootstrap sigmas and z-scores over seeds
- `samples.csv`: `config_hash, energy, magnetization, log_weight` (ising)
- `sweep.csv`: `beta_mult, beta_target, mean_energy, exact_mean_energy,
  mean_magnetization, exact_mean_magnetization, terminal_ess` (ising)

**Example document**:

```json
{
  "task": "sample",
  "data": {"kind": "inline", "V": 2, "d": 1, "probs": [0.8, 0.2]},
  "target": {"variant": "anneal", "beta": 2.0},
  "K": 4096,
  "n_steps": 200,
  "seed": 7
}
```
"""
