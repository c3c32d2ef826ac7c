"""Reputation maintenance: per-sensor indexes, cluster reputations, the
threshold exclusion/re-vote pass, and the anchor-calibrated update variant.

Updates run once per time step, after the fusion decision: a cluster that
agreed with the center pulls its aligned members up, a disagreeing cluster
pulls them down, each share scaled by how representative the sensor's
match/mismatch record is of its cluster. The anchor variant additionally
scales (and possibly flips) every update by agreement with the trusted
anchor decision.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterAssignment, hamming
from .fusion import (FusionOutcome, NoValidClustersError, beta_weights,
                     cluster_validity, fc_decision)
from .model import Population, ScenarioConfig


@dataclass
class ReputationLedger:
    """Mutable reputation state owned by one simulation instance.

    ``r`` aliases the population's reputation buffer. ``removed`` marks the
    sensors excluded by the current step's threshold pass only; exclusion is
    temporary and everyone re-enters clustering next step.
    """

    r: np.ndarray
    R: np.ndarray
    removed: np.ndarray
    anchor_history: deque = field(default_factory=deque)

    @classmethod
    def for_population(cls, pop: Population, n_clusters: int, window: int) -> "ReputationLedger":
        return cls(r=pop.reputation,
                   R=np.full(n_clusters + 1, np.nan),
                   removed=np.zeros(pop.n, dtype=bool),
                   anchor_history=deque(maxlen=window))


def cluster_reputations(r: np.ndarray, assignment: ClusterAssignment) -> np.ndarray:
    """Mean member reputation per cluster id (NaN for empty clusters)."""
    nc = assignment.n_clusters + 1
    sums = np.bincount(assignment.cluster_of, weights=r, minlength=nc)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(assignment.size > 0, sums / assignment.size, np.nan)


def reputation_impact(sensor_id: int, cluster_id: int, assignment: ClusterAssignment,
                      mms_windows: np.ndarray) -> float:
    """1 / (1 + D) over match/mismatch records vs. the cluster medoid; 0 if
    the sensor is not in the cluster (same regularization as vote impacts)."""
    if assignment.cluster_of[sensor_id] != cluster_id or cluster_id <= 0:
        return 0.0
    m = assignment.medoid[cluster_id]
    return 1.0 / (1.0 + hamming(mms_windows[sensor_id], mms_windows[m]))


def reputation_impacts(assignment: ClusterAssignment, mms_windows: np.ndarray) -> np.ndarray:
    """Vectorized reputation impact factor for every clustered sensor."""
    clustered = assignment.cluster_of > 0
    medoid_rows = assignment.medoid[assignment.cluster_of[clustered]]
    d = (mms_windows[clustered] != mms_windows[medoid_rows]).sum(axis=1)
    h = np.zeros(assignment.cluster_of.shape[0])
    h[clustered] = 1.0 / (1.0 + d)
    return h


def step_size(u_members: np.ndarray, vote: int, impacts_members: np.ndarray) -> float:
    """Impact-weighted agreement of a cluster with its own vote, in [-1, 1]."""
    agree = np.where(u_members == vote, 1.0, -1.0)
    return float(np.dot(agree, impacts_members) / impacts_members.sum())


def step_sizes(assignment: ClusterAssignment, u: np.ndarray, impacts: np.ndarray,
               votes: np.ndarray) -> np.ndarray:
    """g_k for every cluster id at once (0 for empty clusters)."""
    nc = assignment.n_clusters + 1
    agree = np.where(u == votes[assignment.cluster_of], impacts, -impacts)
    num = np.bincount(assignment.cluster_of, weights=agree, minlength=nc)
    den = np.bincount(assignment.cluster_of, weights=impacts, minlength=nc)
    out = np.zeros(nc)
    np.divide(num, den, out=out, where=den > 0)
    return out


def update_rac(ledger: ReputationLedger, pop: Population, assignment: ClusterAssignment,
               outcome: FusionOutcome, u: np.ndarray, impacts: np.ndarray) -> None:
    """Feedback update: r_i += M(v_fc, V_k) * g_k * H_i / sum(H)."""
    h = reputation_impacts(assignment, pop.mms_window())
    total_h = h.sum()
    if total_h > 0.0:
        g = step_sizes(assignment, u, impacts, outcome.cluster_votes)
        align = np.where(outcome.cluster_votes == outcome.fc_decision, 1.0, -1.0)
        per_cluster = align * g
        ledger.r += per_cluster[assignment.cluster_of] * h / total_h
    ledger.R = cluster_reputations(ledger.r, assignment)


def anchor_majority(anchor_decisions: np.ndarray) -> int:
    """Majority of the anchor local decisions; even-split ties declare 1."""
    j = anchor_decisions.shape[0]
    if j == 0:
        raise ValueError("anchor decision requires at least one anchor")
    return int(2 * int(anchor_decisions.sum()) >= j)


def anchor_factor(ledger: ReputationLedger, anchor_decision: int, fc_dec: int) -> float:
    """Consistency-scaled sign factor f for the anchor-calibrated update.

    Appends the current anchor decision to the rolling history first, so the
    consistency sum includes the current step; during warm-up it divides by
    the number of entries actually available.
    """
    ledger.anchor_history.append(int(anchor_decision))
    hist = np.fromiter(ledger.anchor_history, dtype=np.int64)
    consistency = float((hist == anchor_decision).mean())
    sign = 1.0 if anchor_decision == fc_dec else -1.0
    return consistency * sign


def update_raca(ledger: ReputationLedger, pop: Population, assignment: ClusterAssignment,
                outcome: FusionOutcome, u: np.ndarray, impacts: np.ndarray,
                anchor_decisions: np.ndarray) -> None:
    """Anchor-calibrated update: r_i += M(v_fc, V_k) * g_k * f * H_i / sum(H)."""
    a_now = anchor_majority(anchor_decisions)
    f = anchor_factor(ledger, a_now, outcome.fc_decision)
    h = reputation_impacts(assignment, pop.mms_window())
    total_h = h.sum()
    if total_h > 0.0:
        g = step_sizes(assignment, u, impacts, outcome.cluster_votes)
        align = np.where(outcome.cluster_votes == outcome.fc_decision, 1.0, -1.0)
        per_cluster = align * g * f
        ledger.r += per_cluster[assignment.cluster_of] * h / total_h
    ledger.R = cluster_reputations(ledger.r, assignment)


def exclude_and_revote(ledger: ReputationLedger, assignment: ClusterAssignment,
                       outcome: FusionOutcome, cfg: ScenarioConfig,
                       fallback_decision: int) -> FusionOutcome:
    """Drop clusters whose reputation fell below tau and redo the vote.

    Each pass removes every below-threshold cluster and recomputes validity,
    weights, and the center decision over the remainder; removal is recorded
    on the ledger for this step only. If nothing votable remains the fallback
    decision applies. Terminates within 2K passes (each removes a cluster).
    """
    ledger.removed[:] = False
    dropped = np.zeros(assignment.n_clusters + 1, dtype=bool)
    final = outcome
    for _ in range(assignment.n_clusters):
        active = (assignment.size > 0) & ~dropped
        active[0] = False
        with np.errstate(invalid="ignore"):
            low = active & (ledger.R < cfg.tau)
        if not low.any():
            break
        dropped |= low
        ledger.removed |= low[assignment.cluster_of]
        sizes = np.where(dropped, 0, assignment.size)
        validity = cluster_validity(ledger.R, cfg.lambda_valid) & ~dropped
        try:
            betas = beta_weights(sizes, validity, assignment.k)
        except NoValidClustersError:
            final = FusionOutcome(cluster_votes=outcome.cluster_votes, validity=validity,
                                  betas=np.zeros(assignment.n_clusters + 1),
                                  fc_decision=int(fallback_decision), fused_score=0.0,
                                  fallback=True)
            break
        decision, score = fc_decision(outcome.cluster_votes, betas, cfg.gamma1,
                                      cfg.gamma2, cfg.lambda_fc, assignment.k)
        final = FusionOutcome(cluster_votes=outcome.cluster_votes, validity=validity,
                              betas=betas, fc_decision=decision, fused_score=score)
    return final
