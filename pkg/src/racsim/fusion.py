"""Per-step decision fusion: impact factors, cluster votes, validity flags,
inter-cluster weights, and the center's thresholded decision.

Cluster ids follow the clustering module's convention (1..K trusted half,
K+1..2K the rest). The trusted half carries weight gamma1 > gamma2 because
its sensors are less likely to be Byzantine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterAssignment, hamming
from .model import ScenarioConfig


class NoValidClustersError(RuntimeError):
    """Every cluster is empty or invalidated; the caller must fall back."""


@dataclass
class FusionOutcome:
    """Result of one fusion pass.

    When ``fallback`` is set, no valid cluster existed and fc_decision came
    from the caller's fallback rule instead of the score comparison; otherwise
    fc_decision = 1 iff fused_score > lambda_fc.
    """

    cluster_votes: np.ndarray  # per cluster id, slot 0 unused
    validity: np.ndarray       # bool per cluster id
    betas: np.ndarray          # float per cluster id
    fc_decision: int
    fused_score: float
    fallback: bool = False


def impact_factor(sensor_id: int, cluster_id: int, assignment: ClusterAssignment,
                  windows: np.ndarray) -> float:
    """Inverse-distance vote weight of one sensor within one cluster.

    1 / (1 + d) where d is the Hamming distance between the sensor's decision
    record and its cluster medoid's; 0 if the sensor is not in the cluster.
    The +1 keeps the medoid's own weight finite (and maximal) at d = 0.
    """
    if assignment.cluster_of[sensor_id] != cluster_id or cluster_id <= 0:
        return 0.0
    m = assignment.medoid[cluster_id]
    return 1.0 / (1.0 + hamming(windows[sensor_id], windows[m]))


def impact_factors(assignment: ClusterAssignment) -> np.ndarray:
    """Vector of every sensor's impact factor within its own cluster."""
    impacts = 1.0 / (1.0 + assignment.dist_to_medoid.astype(np.float64))
    impacts[assignment.cluster_of == 0] = 0.0
    return impacts


def cluster_vote(u_members: np.ndarray, impacts_members: np.ndarray) -> int:
    """Impact-weighted cluster decision, rounded half-up (0.5 -> 1)."""
    if u_members.size == 0:
        raise ValueError("cluster_vote on an empty cluster")
    num = float(np.dot(impacts_members, u_members))
    den = float(impacts_members.sum())
    return int(2.0 * num >= den)


def cluster_votes(assignment: ClusterAssignment, u: np.ndarray,
                  impacts: np.ndarray) -> np.ndarray:
    """Votes for all clusters at once (empty clusters vote 0, carry no weight)."""
    nc = assignment.n_clusters + 1
    num = np.bincount(assignment.cluster_of, weights=impacts * u, minlength=nc)
    den = np.bincount(assignment.cluster_of, weights=impacts, minlength=nc)
    votes = (2.0 * num >= den) & (assignment.size > 0)
    votes[0] = False
    return votes.astype(np.int64)


def cluster_validity(cluster_reputation: np.ndarray, lambda_valid: float) -> np.ndarray:
    """F_k = 0 iff the cluster reputation sits strictly below lambda_valid.

    Empty clusters (reputation NaN) are marked invalid.
    """
    with np.errstate(invalid="ignore"):
        return cluster_reputation >= lambda_valid


def beta_weights(sizes: np.ndarray, validity: np.ndarray, k: int) -> np.ndarray:
    """Size-proportional weights over valid clusters, normalized per half.

    Raises NoValidClustersError when every cluster in both halves carries
    zero weight; a half with no valid clusters gets all-zero betas.
    """
    weight = sizes.astype(np.float64) * validity
    weight[0] = 0.0
    if weight.sum() == 0.0:
        raise NoValidClustersError("all clusters empty or invalidated")
    betas = np.zeros_like(weight)
    for lo in (1, k + 1):
        half = slice(lo, lo + k)
        total = weight[half].sum()
        if total > 0.0:
            betas[half] = weight[half] / total
    return betas


def fc_decision(votes: np.ndarray, betas: np.ndarray, gamma1: float, gamma2: float,
                lambda_fc: float, k: int) -> tuple[int, float]:
    """Weighted two-half score against the center's threshold (ties -> 0)."""
    low = slice(1, k + 1)
    high = slice(k + 1, 2 * k + 1)
    score = gamma1 * float(np.dot(betas[low], votes[low])) \
        + gamma2 * float(np.dot(betas[high], votes[high]))
    return int(score > lambda_fc), score


def fuse(assignment: ClusterAssignment, u: np.ndarray, impacts: np.ndarray,
         cluster_reputation: np.ndarray, cfg: ScenarioConfig,
         fallback_decision: int) -> FusionOutcome:
    """One full voting phase: votes, validity, weights, decision."""
    votes = cluster_votes(assignment, u, impacts)
    validity = cluster_validity(cluster_reputation, cfg.lambda_valid)
    try:
        betas = beta_weights(assignment.size, validity, assignment.k)
    except NoValidClustersError:
        return FusionOutcome(cluster_votes=votes, validity=validity,
                             betas=np.zeros(assignment.n_clusters + 1),
                             fc_decision=int(fallback_decision), fused_score=0.0,
                             fallback=True)
    decision, score = fc_decision(votes, betas, cfg.gamma1, cfg.gamma2,
                                  cfg.lambda_fc, assignment.k)
    return FusionOutcome(cluster_votes=votes, validity=validity, betas=betas,
                         fc_decision=decision, fused_score=score)
