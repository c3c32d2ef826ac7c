"""Independent oracles for the test suite.

These deliberately avoid the library's closed forms: the conditional
Byzantine probabilities come from exact enumeration of the pair protocol's
flip outcomes, cluster costs from brute force over all medoid subsets, and
the trusted-set gap from exact rational arithmetic.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def enumerate_pair_cases(role_i: int, role_j: int, p1, p2):
    """Exact P(case m | roles) for m in 1..4 by enumerating the 2^6 joint flip
    outcomes (own-report flip, exchanged-copy flip, relay flip, per sensor).

    Works for float or Fraction probabilities. Case numbering: 1 = both
    match, 2 = only sensor i mismatches, 3 = only sensor j, 4 = both.
    """
    zero = p1 - p1  # 0 of the right numeric type (float or Fraction)
    one = 1 - zero
    probs = [zero, zero, zero, zero]
    for bits in itertools.product((0, 1), repeat=6):
        a_i, w_i, c_i, a_j, w_j, c_j = bits
        pr = one
        for flip, active, rate in ((a_i, role_i, p1), (w_i, role_i, p1),
                                   (c_i, role_i, p2), (a_j, role_j, p1),
                                   (w_j, role_j, p1), (c_j, role_j, p2)):
            p = rate if active else zero
            pr = pr * (p if flip else 1 - p)
        match_i = (a_i ^ w_i ^ c_j) == 0  # i's relay flip comes from partner j
        match_j = (a_j ^ w_j ^ c_i) == 0
        case = (0 if match_i else 1) + (0 if match_j else 2)
        probs[case] = probs[case] + pr
    return probs  # indices 0..3 = cases 1..4


def oracle_alpha_mms(alpha0, p1, p2):
    """P(sensor i Byzantine | case m) by exact enumeration over roles and
    flips; NaN where the conditioning event has probability zero."""
    num = [alpha0 - alpha0] * 4
    den = [alpha0 - alpha0] * 4
    for role_i, role_j in itertools.product((0, 1), (0, 1)):
        pr_roles = (alpha0 if role_i else 1 - alpha0) * (alpha0 if role_j else 1 - alpha0)
        cases = enumerate_pair_cases(role_i, role_j, p1, p2)
        for m in range(4):
            den[m] = den[m] + pr_roles * cases[m]
            if role_i:
                num[m] = num[m] + pr_roles * cases[m]
    return [n / d if d > 0 else float("nan") for n, d in zip(num, den)]


def oracle_alpha_sets(alpha0, p1, p2):
    """(alpha_under, alpha_over, p_under, p_over) by exact enumeration."""
    num_u = den_u = num_o = den_o = alpha0 - alpha0
    for role_i, role_j in itertools.product((0, 1), (0, 1)):
        pr_roles = (alpha0 if role_i else 1 - alpha0) * (alpha0 if role_j else 1 - alpha0)
        cases = enumerate_pair_cases(role_i, role_j, p1, p2)
        p_match = pr_roles * cases[0]
        p_rest = pr_roles * (cases[1] + cases[2] + cases[3])
        den_u = den_u + p_match
        den_o = den_o + p_rest
        if role_i:
            num_u = num_u + p_match
            num_o = num_o + p_rest
    a_u = num_u / den_u if den_u > 0 else alpha0
    a_o = num_o / den_o if den_o > 0 else alpha0
    return a_u, a_o, den_u, den_o


def exact_h(alpha0: Fraction, p1: Fraction, p2: Fraction) -> Fraction:
    """h = alpha_under - alpha0 in exact rational arithmetic."""
    a_u, _, _, _ = oracle_alpha_sets(alpha0, p1, p2)
    return a_u - alpha0


def brute_force_medoid_cost(dist: np.ndarray, k: int) -> int:
    """Minimum total distance over all k-subsets of medoids (exhaustive)."""
    n = dist.shape[0]
    best = None
    for medoids in itertools.combinations(range(n), k):
        cost = int(dist[:, medoids].min(axis=1).sum())
        if best is None or cost < best:
            best = cost
    return best
