"""Macro partition by match/mismatch histories, then PAM k-medoid micro
clustering of each macro set by Hamming distance over decision records.

Cluster ids are global and 1-based: ids 1..K hold the all-match set, ids
K+1..2K the rest; id 0 means "not clustered". All tie-breaks resolve to the
lowest sensor id so a fixed input yields a fixed clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Population


def hamming(a, b) -> int:
    """Number of differing positions between two equal-length bit sequences."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def pairwise_hamming(windows: np.ndarray) -> np.ndarray:
    """(n, n) integer Hamming distance matrix for an (n, t) bit matrix."""
    x = windows.astype(np.float64)
    inner = x @ x.T
    ones = np.diag(inner)  # row popcounts
    d = ones[:, None] + ones[None, :] - 2.0 * inner
    return np.rint(d).astype(np.int64)


def macro_partition(pop: Population, window: int | None = None) -> np.ndarray:
    """Boolean flag per sensor: True iff the sensor's group is all-match.

    A group lands in the trusted set iff both members' match/mismatch records
    show a match at every step of the window; membership is group-atomic.
    ``window`` restricts the test to the most recent ``window`` rounds
    (default: the full available history).
    """
    if pop.hist_len == 0:
        raise ValueError("macro_partition requires at least one completed step")
    if window is None or window >= pop.hist_len:
        own_all_match = pop.mms_match_count == pop.hist_len
    else:
        cols = (pop._pos - 1 - np.arange(window)) % pop.window
        own_all_match = pop.mms[:, cols].sum(axis=1) == window
    return own_all_match & own_all_match[pop.partner]


@dataclass
class PamResult:
    labels: np.ndarray          # cluster index in 0..k-1 per member
    medoids: np.ndarray         # sensor id per cluster, ascending, len <= k
    dist_to_medoid: np.ndarray  # Hamming distance to the assigned medoid
    cost: int                   # total within-cluster distance
    cost_trace: tuple[int, ...]  # cost after BUILD and after each applied swap


def pam_cluster(members: np.ndarray, histories: np.ndarray, k: int,
                rng: np.random.Generator | None = None) -> PamResult:
    """Partition ``members`` into at most k clusters around medoids.

    Standard PAM: BUILD greedily picks k medoids minimizing total distance,
    then SWAP applies the best strictly-improving (medoid, non-medoid)
    exchange until none exists. With n <= k every member becomes its own
    singleton cluster. The rng parameter is accepted for interface parity but
    unused: tie-breaks are deterministic (lowest sensor id).
    """
    members = np.asarray(members, dtype=np.int64)
    n = members.shape[0]
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return PamResult(empty, empty.copy(), empty.copy(), 0, (0,))
    if k < 1:
        raise ValueError("k must be >= 1")
    if histories.shape[0] != n:
        raise ValueError("histories must align with members")
    if n <= k:
        labels = np.arange(n, dtype=np.int64)
        return PamResult(labels, members.copy(), np.zeros(n, dtype=np.int64), 0, (0,))

    dist = pairwise_hamming(histories)

    # BUILD: greedy cost minimization, first occurrence of the minimum wins,
    # which is the lowest sensor id because members are in ascending order.
    medoid_pos = [int(np.argmin(dist.sum(axis=1)))]
    nearest = dist[:, medoid_pos[0]].copy()
    while len(medoid_pos) < k:
        cand_cost = np.minimum(nearest[:, None], dist).sum(axis=0)
        cand_cost[medoid_pos] = np.iinfo(np.int64).max
        best = int(np.argmin(cand_cost))
        medoid_pos.append(best)
        nearest = np.minimum(nearest, dist[:, best])
    medoid_pos.sort()
    trace = []

    if k == 1:
        # BUILD is already the exact 1-medoid optimum; no swap can improve.
        m = medoid_pos[0]
        labels = np.zeros(n, dtype=np.int64)
        d_to_medoid = dist[:, m].copy()
        return PamResult(labels, members[[m]], d_to_medoid,
                         int(d_to_medoid.sum()), (int(d_to_medoid.sum()),))

    # SWAP: steepest descent over all (medoid, non-medoid) exchanges.
    fdist = dist.astype(np.float64)
    while True:
        dm = fdist[:, medoid_pos]                     # (n, k)
        near_idx = np.argmin(dm, axis=1)              # ties -> lowest medoid id
        two = np.partition(dm, 1, axis=1)
        d1 = two[:, 0]
        d2 = two[:, 1]
        cost = int(d1.sum())
        trace.append(cost)

        reduce_other = np.minimum(fdist - d1[:, None], 0.0)  # point keeps its medoid but may prefer the swap-in
        reassign = np.minimum(fdist, d2[:, None]) - d1[:, None]
        onehot = (near_idx[None, :] == np.arange(k)[:, None]).astype(np.float64)
        delta = reduce_other.sum(axis=0)[None, :] + onehot @ (reassign - reduce_other)
        delta[:, medoid_pos] = np.inf

        # Scan candidates in ascending id, then medoids, so equal-cost swaps
        # resolve to the lowest swap-in sensor id. Distances are integers, so
        # the float comparison against 0 is exact.
        flat = int(np.argmin(delta.T))
        best_delta = delta.T.flat[flat]
        if best_delta >= 0.0:
            break
        swap_in, swap_out = divmod(flat, k)
        medoid_pos[swap_out] = swap_in
        medoid_pos.sort()

    dm = dist[:, medoid_pos]
    labels = np.argmin(dm, axis=1).astype(np.int64)  # ties -> lowest medoid id
    labels[medoid_pos] = np.arange(k)                # a medoid anchors its own cluster
    d_to_medoid = dm[np.arange(n), labels]
    return PamResult(labels, members[medoid_pos], d_to_medoid,
                     int(d_to_medoid.sum()), tuple(trace))


@dataclass
class ClusterAssignment:
    """Per-step clustering of the whole network.

    cluster_of holds global ids (0 = unclustered); medoid/size are indexed by
    global id with slot 0 unused and medoid -1 marking an empty cluster.
    """

    in_tlow: np.ndarray
    cluster_of: np.ndarray
    medoid: np.ndarray
    size: np.ndarray
    dist_to_medoid: np.ndarray
    k: int

    @property
    def n_clusters(self) -> int:
        return 2 * self.k

    def members_of(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of == cid)


def build_assignment(pop: Population, k: int,
                     rng: np.random.Generator | None = None) -> ClusterAssignment:
    """Macro partition, then PAM on each macro set over decision windows."""
    in_tlow = macro_partition(pop)
    n = pop.n
    windows = pop.decision_window()
    cluster_of = np.zeros(n, dtype=np.int64)
    medoid = np.full(2 * k + 1, -1, dtype=np.int64)
    size = np.zeros(2 * k + 1, dtype=np.int64)
    dist_to_medoid = np.zeros(n, dtype=np.int64)
    for half, mask in enumerate((in_tlow, ~in_tlow)):
        ids = np.flatnonzero(mask)
        if ids.size == 0:
            continue
        res = pam_cluster(ids, windows[ids], k, rng)
        offset = 1 + half * k
        cluster_of[ids] = res.labels + offset
        medoid[offset : offset + res.medoids.size] = res.medoids
        dist_to_medoid[ids] = res.dist_to_medoid
        counts = np.bincount(res.labels, minlength=k)
        size[offset : offset + k] = counts
    return ClusterAssignment(in_tlow=in_tlow, cluster_of=cluster_of, medoid=medoid,
                             size=size, dist_to_medoid=dist_to_medoid, k=k)
