"""Closed-form performance analysis of the audit-bit protocol.

Everything here is a pure function of the attack and sensor parameters:
conditional Byzantine probabilities given the four match/mismatch outcomes
of a group, the Byzantine fractions of the two macro sets, the blinding
(zero-divergence) conditions, and the record-separability divergence that
governs micro clustering.

Derivation note: a sensor's match event compares its two flip-corrupted
copies of the same local decision, so the decision itself cancels and the
event depends only on the sensor's own pair of rate-p1 flips and its
partner's rate-p2 relay flip. Match events of the two group members share no
randomness and are therefore conditionally independent given the roles,
which is what makes the per-case coefficients below products of per-sensor
terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class ConditioningImpossibleError(ZeroDivisionError):
    """The requested conditional probability conditions on a null event."""


@dataclass(frozen=True)
class MmsCoefficients:
    """P(match/mismatch case | group roles) for the four per-round cases:
    1 = both match, 2 = only the first sensor mismatches, 3 = only the
    second, 4 = both mismatch. Tuples are indexed by case - 1."""

    f_bb: tuple[float, float, float, float]
    f_hb: tuple[float, float, float, float]
    f_bh: tuple[float, float, float, float]
    f_hh: tuple[float, float, float, float]

    def case(self, m: int) -> tuple[float, float, float]:
        """(f_BB, f_HB, f_BH) for case m in 1..4 (f_HH is 1,0,0,0)."""
        return self.f_bb[m - 1], self.f_hb[m - 1], self.f_bh[m - 1]


def mms_coefficients(p1: float, p2: float) -> MmsCoefficients:
    """Exact per-case match/mismatch probabilities for each role pairing.

    With q = 2*p1*(1-p1) the chance a Byzantine's two copies disagree, a
    sensor's single-round match probability is 1 (honest pair member with an
    honest relay), 1-p2 (honest member, Byzantine relay), 1-q (Byzantine
    member, honest relay), or s = q*p2 + (1-q)*(1-p2) when both apply; the
    case probabilities are products of the two members' match/mismatch
    probabilities.
    """
    q = 2.0 * p1 * (1.0 - p1)          # own two copies disagree
    keep = 1.0 - q                      # 1 - 2 p1 + 2 p1^2
    s = q * p2 + keep * (1.0 - p2)      # match prob, Byzantine member w/ Byzantine relay
    m_b = keep                          # match prob, Byzantine member w/ honest relay
    m_h = 1.0 - p2                      # match prob, honest member w/ Byzantine relay
    f_bb = (s * s, (1.0 - s) * s, s * (1.0 - s), (1.0 - s) ** 2)
    f_bh = (m_b * m_h, (1.0 - m_b) * m_h, m_b * (1.0 - m_h), (1.0 - m_b) * (1.0 - m_h))
    f_hb = (m_h * m_b, (1.0 - m_h) * m_b, m_h * (1.0 - m_b), (1.0 - m_h) * (1.0 - m_b))
    f_hh = (1.0, 0.0, 0.0, 0.0)
    return MmsCoefficients(f_bb=f_bb, f_hb=f_hb, f_bh=f_bh, f_hh=f_hh)


def case_probability(alpha0: float, coeff: MmsCoefficients, m: int) -> float:
    """P(case m) with i.i.d. Byzantine roles at rate alpha0."""
    f_bb, f_hb, f_bh = coeff.case(m)
    f_hh = coeff.f_hh[m - 1]
    return (alpha0 ** 2 * f_bb + alpha0 * (1.0 - alpha0) * (f_hb + f_bh)
            + (1.0 - alpha0) ** 2 * f_hh)


def alpha_mms(alpha0: float, p1: float, p2: float) -> tuple[float, float, float, float]:
    """P(first sensor is Byzantine | case m) for the four per-round cases.

    Raises ConditioningImpossibleError if a case has probability zero (for
    example, a mismatch case under p1 = p2 = 0 where nobody ever flips).
    """
    coeff = mms_coefficients(p1, p2)
    out = []
    for m in (1, 2, 3, 4):
        f_bb, _, f_bh = coeff.case(m)
        num = alpha0 ** 2 * f_bb + alpha0 * (1.0 - alpha0) * f_bh
        den = case_probability(alpha0, coeff, m)
        if den == 0.0:
            raise ConditioningImpossibleError(
                f"conditioning event impossible: case {m} has probability 0")
        out.append(num / den)
    return tuple(out)


def alpha_sets(alpha0: float, p1: float, p2: float) -> tuple[float, float, float, float]:
    """Byzantine fraction of the all-match set and its complement, plus the
    two set probabilities: (alpha_under, alpha_over, p_under, p_over).

    A set of probability zero has a vacuous conditional fraction; it is
    reported as alpha0 so that degenerate populations (alpha0 in {0, 1}) and
    deterministic-match attacks (p1 = 1, p2 = 0) keep the total-probability
    identity alpha_under*p_under + alpha_over*p_over = alpha0 and h = 0.
    """
    coeff = mms_coefficients(p1, p2)
    p_under = case_probability(alpha0, coeff, 1)
    mass_under = alpha0 ** 2 * coeff.f_bb[0] + alpha0 * (1.0 - alpha0) * coeff.f_bh[0]
    # Sum the mismatch cases directly rather than via 1 - p_under: when the
    # complement set is (nearly) impossible the subtraction would cancel
    # catastrophically, and the direct products vanish exactly instead.
    p_over = sum(case_probability(alpha0, coeff, m) for m in (2, 3, 4))
    mass_over = sum(alpha0 ** 2 * coeff.f_bb[m - 1]
                    + alpha0 * (1.0 - alpha0) * coeff.f_bh[m - 1] for m in (2, 3, 4))
    a_under = mass_under / p_under if p_under > 0.0 else alpha0
    a_over = mass_over / p_over if p_over > 0.0 else alpha0
    return a_under, a_over, p_under, p_over


def _binary_kld(p: float, q: float, log=math.log) -> float:
    """KLD between Bernoulli(p) and Bernoulli(q); 0*log(0) = 0, may be inf."""
    total = 0.0
    for a, b in ((p, q), (1.0 - p, 1.0 - q)):
        if a > 0.0:
            if b <= 0.0:
                return math.inf
            total += a * log(a / b)
    return max(total, 0.0)


@dataclass(frozen=True)
class BlindingReport:
    """Detection/false-alarm rates of the two macro sets and their
    hypothesis-separating divergences. ``blind`` means both divergences sit
    below tolerance, i.e. reports from either set carry no information."""

    alpha_under: float
    alpha_over: float
    pi_under: tuple[float, float, float, float]  # (pi11, pi10, pi01, pi00)
    pi_over: tuple[float, float, float, float]
    kld_under: float
    kld_over: float
    blind: bool


def _set_rates(alpha: float, p1: float, p_d: float, p_f: float):
    flip = alpha * p1
    pi11 = p_d * (1.0 - flip) + flip * (1.0 - p_d)
    pi10 = p_f * (1.0 - flip) + flip * (1.0 - p_f)
    return pi11, pi10, 1.0 - pi11, 1.0 - pi10


def blinding_check(alpha0: float, p1: float, p2: float, p_d: float, p_f: float,
                   tolerance: float = 1e-12) -> BlindingReport:
    """Evaluate the blinding conditions for both macro sets.

    Each set's reports become useless exactly when its effective flip rate
    alpha*p1 reaches 1/2, driving detection and false-alarm rates together
    (natural-log divergences).
    """
    a_under, a_over, _, _ = alpha_sets(alpha0, p1, p2)
    pi_under = _set_rates(a_under, p1, p_d, p_f)
    pi_over = _set_rates(a_over, p1, p_d, p_f)
    kld_under = _binary_kld(pi_under[0], pi_under[1])
    kld_over = _binary_kld(pi_over[0], pi_over[1])
    return BlindingReport(alpha_under=a_under, alpha_over=a_over,
                          pi_under=pi_under, pi_over=pi_over,
                          kld_under=kld_under, kld_over=kld_over,
                          blind=kld_under < tolerance and kld_over < tolerance)


def clustering_deception(p1: float, p_d: float, p_f: float,
                         prior_h1: float = 0.5) -> tuple[float, float, float]:
    """Report-disagreement rates for honest-honest vs Byzantine-honest sensor
    pairs and the divergence separating them (base-2 logs).

    Returns (p_hh_diff, p_bh_diff, kld). kld = 0 exactly when the two rates
    coincide, i.e. when p1 = 0 or p_d = p_f = 1/2: only then can Byzantine
    records hide inside honest clusters.
    """
    pi0 = 1.0 - prior_h1
    k10 = (1.0 - p_f) * p1 + p_f * (1.0 - p1)  # Byzantine false-alarm rate
    k11 = (1.0 - p_d) * p1 + p_d * (1.0 - p1)  # Byzantine detection rate
    p_hh = 2.0 * pi0 * p_f * (1.0 - p_f) + 2.0 * prior_h1 * p_d * (1.0 - p_d)
    p_bh = pi0 * (k10 * (1.0 - p_f) + (1.0 - k10) * p_f) \
        + prior_h1 * (k11 * (1.0 - p_d) + (1.0 - k11) * p_d)
    kld = _binary_kld(p_hh, p_bh, log=math.log2)
    return p_hh, p_bh, kld


def lemma1_h(alpha0: float, p1: float, p2: float) -> float:
    """Signed gap between the all-match set's Byzantine fraction and alpha0.

    Non-positive for alpha0 <= 0.8 at every (p1, p2): the all-match set is
    the more trustworthy one, which is why it carries the larger fusion
    weight.
    """
    a_under, _, _, _ = alpha_sets(alpha0, p1, p2)
    return a_under - alpha0


def p2_max(alpha0: float) -> float:
    """Largest relay-flip rate keeping the all-match set cleaner than the
    population for alpha0 > 1/2 (the binding worst case is p1 = 1/2); for
    alpha0 <= 1/2 any p2 qualifies, so 1 is returned."""
    if alpha0 <= 0.5:
        return 1.0
    return min((alpha0 - 2.0) / (2.0 * (1.0 - 2.0 * alpha0)), 1.0)


@dataclass(frozen=True)
class TheoryPoint:
    """Every closed-form quantity evaluated at one parameter point.

    Conditional fractions whose conditioning event is impossible are NaN.
    """

    alpha0: float
    p1: float
    p2: float
    p_d: float
    p_f: float
    prior_h1: float
    alpha_mms: tuple[float, float, float, float]
    alpha_under: float
    alpha_over: float
    p_under: float
    p_over: float
    pi_under: tuple[float, float, float, float]
    pi_over: tuple[float, float, float, float]
    kld_under: float
    kld_over: float
    p_hh_diff: float
    p_bh_diff: float
    kld_cluster: float
    h: float
    p2_max: float
    blind: bool

    #: scalar CSV columns, in export order
    SCALAR_FIELDS = ("alpha_under", "alpha_over", "p_under", "p_over",
                     "alpha1", "alpha2", "alpha3", "alpha4",
                     "pi_under_11", "pi_under_10", "pi_over_11", "pi_over_10",
                     "kld_under", "kld_over", "p_hh_diff", "p_bh_diff",
                     "kld_cluster", "h", "p2_max")

    def scalar(self, name: str) -> float:
        if name.startswith("alpha") and name[5:] in "1234" and len(name) == 6:
            return self.alpha_mms[int(name[5]) - 1]
        if name == "pi_under_11":
            return self.pi_under[0]
        if name == "pi_under_10":
            return self.pi_under[1]
        if name == "pi_over_11":
            return self.pi_over[0]
        if name == "pi_over_10":
            return self.pi_over[1]
        return getattr(self, name)


def theory_point(alpha0: float, p1: float, p2: float, p_d: float = 0.9,
                 p_f: float = 0.1, prior_h1: float = 0.5) -> TheoryPoint:
    """Evaluate the full closed-form bundle at one parameter point."""
    try:
        a_mms = alpha_mms(alpha0, p1, p2)
    except ConditioningImpossibleError:
        coeff = mms_coefficients(p1, p2)
        a_mms = tuple(
            (alpha0 ** 2 * coeff.case(m)[0] + alpha0 * (1 - alpha0) * coeff.case(m)[2])
            / case_probability(alpha0, coeff, m)
            if case_probability(alpha0, coeff, m) > 0.0 else math.nan
            for m in (1, 2, 3, 4))
    a_under, a_over, p_under, p_over = alpha_sets(alpha0, p1, p2)
    report = blinding_check(alpha0, p1, p2, p_d, p_f)
    p_hh, p_bh, kld_c = clustering_deception(p1, p_d, p_f, prior_h1)
    return TheoryPoint(alpha0=alpha0, p1=p1, p2=p2, p_d=p_d, p_f=p_f,
                       prior_h1=prior_h1, alpha_mms=a_mms,
                       alpha_under=a_under, alpha_over=a_over,
                       p_under=p_under, p_over=p_over,
                       pi_under=report.pi_under, pi_over=report.pi_over,
                       kld_under=report.kld_under, kld_over=report.kld_over,
                       p_hh_diff=p_hh, p_bh_diff=p_bh, kld_cluster=kld_c,
                       h=a_under - alpha0, p2_max=p2_max(alpha0),
                       blind=report.blind)
