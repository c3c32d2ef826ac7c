"""Monte Carlo experiment runner: trials, sweeps, metrics, and CSV output.

A trial executes the full per-step pipeline (protocol round, macro/micro
clustering, fusion, reputation update, threshold exclusion) for one seeded
population. Sweeps run independent trials per parameter value; each trial
derives its own RNG stream from SeedSequence([seed, value_index, trial_index])
so results are reproducible and trials parallelize without stream collisions.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import clustering, fusion, reputation, sim
from .model import Population, ScenarioConfig, validate_config, build_population


class Algorithm(str, Enum):
    RAC = "RAC"
    RACA = "RACA"
    MAJORITY = "MajorityBaseline"
    ORACLE = "OracleBaseline"


SWEEP_VARIABLES = ("p1", "p2", "alpha0", "T", "J", "K")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a base scenario, the variable to vary, its values, and the
    number of independent trials per value."""

    base: ScenarioConfig
    sweep_variable: str
    values: tuple[float, ...]
    trials: int = 20
    algorithm: Algorithm = Algorithm.RAC


@dataclass
class MetricRow:
    """Aggregated metrics for one sweep value (CSV row, columns in order)."""

    value: float
    error_prob: float
    identified_fraction: float
    mean_reputation_honest: float
    mean_reputation_byzantine: float
    trials: int
    std_error: float


CSV_COLUMNS = ("value", "error_prob", "identified_fraction",
               "mean_reputation_honest", "mean_reputation_byzantine",
               "trials", "std_error")


@dataclass
class TrialResult:
    """Raw outcome of one trial."""

    errors: np.ndarray            # per-step decision errors (bool)
    error_prob: float             # mean over post-warm-up steps
    identified_fraction: float    # NaN for baselines
    mean_reputation_honest: float
    mean_reputation_byzantine: float


def derive_rng(seed: int, value_index: int, trial_index: int) -> np.random.Generator:
    """Collision-free per-trial stream: SeedSequence([seed, value, trial])."""
    return np.random.default_rng(np.random.SeedSequence([seed, value_index, trial_index]))


def apply_sweep_value(base: ScenarioConfig, variable: str, value: float) -> ScenarioConfig:
    if variable == "p1":
        return replace(base, attack=replace(base.attack, p1=float(value)))
    if variable == "p2":
        return replace(base, attack=replace(base.attack, p2=float(value)))
    if variable == "alpha0":
        return replace(base, attack=replace(base.attack, alpha0=float(value)))
    if variable == "T":
        return replace(base, window=int(value))
    if variable == "J":
        return replace(base, n_anchors=int(value))
    if variable == "K":
        return replace(base, k_clusters=int(value))
    raise ValueError(f"unknown sweep variable {variable!r}")


def majority_bit(bits: np.ndarray) -> int:
    """Unweighted majority with even-split ties declaring 1."""
    return int(2 * int(bits.sum()) >= bits.shape[0])


def identification_fraction(pop: Population, ledger: reputation.ReputationLedger,
                            assignment: clustering.ClusterAssignment,
                            lambda_valid: float) -> float:
    """Fraction of true Byzantines whose cluster is invalidated or excluded.

    Vacuously 1.0 when the population has no Byzantines.
    """
    byz = pop.roles
    if not byz.any():
        return 1.0
    with np.errstate(invalid="ignore"):
        bad_cluster = ledger.R < lambda_valid
    bad_cluster[0] = False
    flagged = ledger.removed | bad_cluster[assignment.cluster_of]
    flagged &= assignment.cluster_of > 0
    return float(flagged[byz].mean())


StepCallback = Callable[[int, sim.RoundReport, clustering.ClusterAssignment | None,
                         fusion.FusionOutcome | None, reputation.ReputationLedger | None], None]


def run_trial(cfg: ScenarioConfig, algorithm: Algorithm,
              rng: np.random.Generator | None = None,
              on_step: StepCallback | None = None) -> TrialResult:
    """Run one full trial and return its metrics.

    The first ``window`` steps are warm-up and excluded from the error
    probability. Baselines skip clustering and reputation entirely:
    MajorityBaseline fuses all direct reports by unweighted majority and
    OracleBaseline (genie-aided lower bound) takes the majority of honest
    sensors' uncorrupted decisions.
    """
    validate_config(cfg)
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.RACA and cfg.n_anchors < 1:
        raise ValueError("RACA requires n_anchors >= 1")
    if rng is None:
        rng = derive_rng(cfg.seed, 0, 0)
    pop = build_population(cfg, rng)
    simulation = sim.Simulation(cfg, pop, rng)
    ledger = reputation.ReputationLedger.for_population(pop, 2 * cfg.k_clusters, cfg.window)
    errors = np.zeros(cfg.n_steps, dtype=bool)
    assignment = None

    for t in range(cfg.n_steps):
        report = simulation.step()
        if algorithm is Algorithm.MAJORITY:
            decision = majority_bit(report.u)
            outcome = None
        elif algorithm is Algorithm.ORACLE:
            # honest sensors never flip, so their reports equal their decisions
            decision = majority_bit(report.u[~pop.roles])
            outcome = None
        else:
            assignment = clustering.build_assignment(pop, cfg.k_clusters)
            impacts = fusion.impact_factors(assignment)
            ledger.R = reputation.cluster_reputations(ledger.r, assignment)
            if algorithm is Algorithm.RACA:
                fallback = reputation.anchor_majority(report.anchor_decisions)
            else:
                fallback = majority_bit(report.u)
            outcome = fusion.fuse(assignment, report.u, impacts, ledger.R, cfg, fallback)
            if algorithm is Algorithm.RACA:
                reputation.update_raca(ledger, pop, assignment, outcome, report.u,
                                       impacts, report.anchor_decisions)
            else:
                reputation.update_rac(ledger, pop, assignment, outcome, report.u, impacts)
            outcome = reputation.exclude_and_revote(ledger, assignment, outcome, cfg, fallback)
            decision = outcome.fc_decision
        errors[t] = decision != int(report.truth)
        if on_step is not None:
            on_step(t, report, assignment, outcome, ledger)

    counted = errors[cfg.window:] if cfg.n_steps > cfg.window else errors
    if algorithm in (Algorithm.RAC, Algorithm.RACA) and assignment is not None:
        identified = identification_fraction(pop, ledger, assignment, cfg.lambda_valid)
    else:
        identified = float("nan")
    byz = pop.roles
    mean_h = float(pop.reputation[~byz].mean()) if (~byz).any() else float("nan")
    mean_b = float(pop.reputation[byz].mean()) if byz.any() else float("nan")
    return TrialResult(errors=errors, error_prob=float(counted.mean()),
                       identified_fraction=identified,
                       mean_reputation_honest=mean_h, mean_reputation_byzantine=mean_b)


def validate_spec(spec: SweepSpec) -> SweepSpec:
    validate_config(spec.base)
    if spec.sweep_variable not in SWEEP_VARIABLES:
        raise ValueError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
    if spec.trials < 1:
        raise ValueError("trials must be >= 1")
    for v in spec.values:
        cfg = apply_sweep_value(spec.base, spec.sweep_variable, v)
        validate_config(cfg)
    algorithm = Algorithm(spec.algorithm)
    if algorithm is Algorithm.RACA and spec.sweep_variable != "J" and spec.base.n_anchors < 1:
        raise ValueError("RACA sweeps need n_anchors >= 1 in the base config")
    return spec


def _sweep_task(args: tuple[ScenarioConfig, Algorithm, int, int, int]) -> TrialResult:
    cfg, algorithm, seed, vi, ti = args
    return run_trial(cfg, algorithm, derive_rng(seed, vi, ti))


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[MetricRow]:
    """Run every (value, trial) combination and aggregate one row per value.

    ``workers`` caps process-level parallelism (default: machine capacity);
    aggregation order is fixed by the spec, not by completion order.
    """
    validate_spec(spec)
    tasks = [(apply_sweep_value(spec.base, spec.sweep_variable, v),
              Algorithm(spec.algorithm), spec.base.seed, vi, ti)
             for vi, v in enumerate(spec.values)
             for ti in range(spec.trials)]
    if workers is None:
        import os
        workers = os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=1))
    else:
        results = [_sweep_task(t) for t in tasks]

    rows: list[MetricRow] = []
    for vi, v in enumerate(spec.values):
        batch = results[vi * spec.trials:(vi + 1) * spec.trials]
        errs = np.array([b.error_prob for b in batch])
        idents = np.array([b.identified_fraction for b in batch])
        reph = np.array([b.mean_reputation_honest for b in batch])
        repb = np.array([b.mean_reputation_byzantine for b in batch])
        se = float(errs.std(ddof=1) / math.sqrt(len(errs))) if len(errs) > 1 else 0.0
        rows.append(MetricRow(value=float(v), error_prob=float(errs.mean()),
                              identified_fraction=float(np.nanmean(idents)) if not np.all(np.isnan(idents)) else float("nan"),
                              mean_reputation_honest=float(np.nanmean(reph)) if not np.all(np.isnan(reph)) else float("nan"),
                              mean_reputation_byzantine=float(np.nanmean(repb)) if not np.all(np.isnan(repb)) else float("nan"),
                              trials=spec.trials, std_error=se))
    return rows


def _format_cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_metrics_csv(rows: Iterable[MetricRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(getattr(row, col)) for col in CSV_COLUMNS])


def metrics_csv_text(rows: Sequence[MetricRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(getattr(row, col)) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
