"""One time step of the audit-bit reporting protocol.

Each sensor i makes a local decision v_i, reports u_i to the fusion center,
hands a copy w_i to its group partner, and relays the copy it received as
z (so z_i is sensor i's w as forwarded by the partner). Honest sensors never
flip anything; a Byzantine sensor flips its own two copies independently at
rate p1 and the relayed partner copy at rate p2. The center then scores a
match for sensor i iff u_i == z_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Hypothesis, Population, ScenarioConfig, SensorModel, validate_config


@dataclass
class RoundReport:
    """Everything the fusion center sees in one time step."""

    truth: Hypothesis
    u: np.ndarray                 # direct reports, length N
    z: np.ndarray                 # relayed audit copies, length N
    mms: np.ndarray               # mms[i] = 1 iff u[i] == z[i]
    anchor_decisions: np.ndarray  # length J
    p1_eff: float                 # per-step effective flip rate (scalar mean if per-sensor)


def draw_truth(prior_h1: float, rng: np.random.Generator) -> Hypothesis:
    """H1 with probability prior_h1."""
    return Hypothesis.H1 if rng.random() < prior_h1 else Hypothesis.H0


def local_decision(truth: Hypothesis, sensor: SensorModel, rng: np.random.Generator) -> int:
    """One sensor's binary decision: 1 w.p. p_d under H1, w.p. p_f under H0."""
    p = sensor.p_d if truth == Hypothesis.H1 else sensor.p_f
    return int(rng.random() < p)


def corrupt_and_exchange(v: np.ndarray, roles: np.ndarray, partner: np.ndarray,
                         p1_eff: float | np.ndarray, p2: float,
                         rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Apply Byzantine corruption and the simultaneous intra-group exchange.

    Returns (u, z) where u is the direct report vector and z[i] is sensor i's
    exchanged copy as relayed to the center by i's partner. The exchange is
    simultaneous: each sensor forwards the w it received, so the two p1 flips
    (report vs. exchanged copy) are independent draws, and the relay flip at
    rate p2 is charged to the forwarding partner.
    """
    n = v.shape[0]
    flip_report = roles & (rng.random(n) < p1_eff)
    flip_copy = roles & (rng.random(n) < p1_eff)
    u = v ^ flip_report
    w = v ^ flip_copy
    # z[i] carries w[i]; the forwarder is partner[i], who tampers at rate p2.
    flip_relay = roles[partner] & (rng.random(n) < p2)
    z = w ^ flip_relay
    return u, z


class Simulation:
    """Sequential driver for one population; owns the RNG stream and history
    buffers. Step t+1 depends on t only through the ring buffers, so a single
    instance must not be shared across threads.
    """

    def __init__(self, cfg: ScenarioConfig, pop: Population, rng: np.random.Generator):
        validate_config(cfg)
        self.cfg = cfg
        self.pop = pop
        self.rng = rng
        self.t = 0

    def step(self) -> RoundReport:
        cfg = self.cfg
        pop = self.pop
        rng = self.rng
        truth = draw_truth(cfg.prior_h1, rng)
        # The jitter draw happens even at jitter=0 (where it returns exactly
        # 0.0) so that static and dynamic runs consume identical streams.
        atk = cfg.attack
        size = pop.n if atk.per_sensor_jitter else None
        drift = rng.uniform(-atk.jitter, atk.jitter, size)
        p1_eff = np.clip(atk.p1 + drift, 0.0, 1.0)
        p = cfg.sensor.p_d if truth == Hypothesis.H1 else cfg.sensor.p_f
        v = rng.random(pop.n) < p
        u, z = corrupt_and_exchange(v, pop.roles, pop.partner, p1_eff, atk.p2, rng)
        mms = (u == z).astype(np.uint8)
        anchor_decisions = (rng.random(pop.n_anchors) < p).astype(np.uint8)
        pop.push_round(u.astype(np.uint8), mms)
        self.t += 1
        return RoundReport(truth=truth, u=u.astype(np.uint8), z=z.astype(np.uint8),
                           mms=mms, anchor_decisions=anchor_decisions,
                           p1_eff=float(np.mean(p1_eff)))
