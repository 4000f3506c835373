"""Activation cascades: seeding, individual decisions, peer transmission.

The process is synchronous-rounds with monotone activation:

* round 0 - seeds are exposed, every agent's affect, resistance threshold
  tau and decision noise are drawn once for the whole replication, and
  exposed agents with positive decision index activate;
* round r >= 1 - agents that activated in round r-1 attempt transmission
  once over each edge to a neighbor still inactive at the start of the
  round; successful attempts are recorded, and an inactive agent with at
  least one successful incoming transmission activates when its decision
  index (base plus social term) turns positive.

Because thresholds and noise are per-agent constants within a
replication and the social count only grows, activation is monotone and
the cascade reaches a fixpoint in at most n rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .affect import (PARTICIPATORY_FORMATS, AffectParams, Design,
                     DesignError, affect_vector, matching_vector)
from .graph import SocialGraph, identity_similarity
from .stats import logistic

__all__ = [
    "DecisionParams",
    "TransmissionParams",
    "CascadeResult",
    "CascadeEngine",
    "seed_count",
    "seed_exposure",
    "initial_decision",
    "transmission_prob",
    "b2_effective",
    "run_cascade",
]


@dataclass(frozen=True)
class DecisionParams:
    """Activation index: b0 + b1 * affect + b2' * peer_count - tau + noise.

    tau is drawn once per agent from U[tau_lo, tau_hi], the noise from
    N(0, sigma_noise^2). cnr_boost multiplies b2 when the design stages
    call-and-response in a participatory format.
    """

    b0: float = 0.0
    b1: float = 1.0
    b2: float = 0.1
    sigma_noise: float = 0.003
    tau_lo: float = 0.95
    tau_hi: float = 1.25
    cnr_boost: float = 4.6

    def validate(self) -> None:
        if self.tau_lo > self.tau_hi:
            raise DesignError("tau_lo must be <= tau_hi")
        if self.sigma_noise < 0:
            raise DesignError("sigma_noise must be >= 0")
        if self.cnr_boost <= 0:
            raise DesignError("cnr_boost must be > 0")


@dataclass(frozen=True)
class TransmissionParams:
    """Per-edge success logit: l0 + l1 * sender_affect + l2 * similarity
    + l3 * [format == meme] + l4_tox * toxicity * [same block]."""

    l0: float = -6.932305623976115
    l1: float = 2.0
    l2: float = 2.75
    l3: float = 2.0
    l4_tox: float = 0.8


@dataclass
class CascadeResult:
    """Outcome of one replication."""

    exposure: np.ndarray          # (n,) bool
    affect: np.ndarray            # (n,) float
    active: np.ndarray            # (n,) bool
    activation_round: np.ndarray  # (n,) int, -1 when never active
    fired_edges: np.ndarray       # (k, 2) int directed successful attempts
    attempts: np.ndarray          # (a, 3) int rows (sender, target, success)
    rounds_run: int

    def influence_counts(self) -> np.ndarray:
        counts = np.zeros(self.exposure.shape[0], dtype=np.int64)
        if self.fired_edges.shape[0]:
            np.add.at(counts, self.fired_edges[:, 1], 1)
        return counts


def seed_count(n: int, seed_fraction: float) -> int:
    """Number of exposed agents: seed_fraction * n rounded half-up."""
    return int(math.floor(seed_fraction * n + 0.5))


def seed_exposure(graph: SocialGraph, design: Design,
                  rng: np.random.Generator | None = None,
                  match: np.ndarray | None = None) -> np.ndarray:
    """Boolean exposure mask for the design's seeding strategy.

    random needs the stream; top_degree and top_matching are deterministic
    with ties broken by agent id.
    """
    design.validate(graph.identity_dim)
    n = graph.n
    s = seed_count(n, design.seed_fraction)
    exposure = np.zeros(n, dtype=bool)
    if s == 0:
        return exposure
    if design.seeding == "random":
        if rng is None:
            raise DesignError("random seeding requires a generator")
        exposure[rng.choice(n, size=s, replace=False)] = True
    elif design.seeding == "top_degree":
        order = np.lexsort((np.arange(n), -graph.degree()))
        exposure[order[:s]] = True
    else:  # top_matching
        if match is None:
            match = matching_vector(graph.identity, design)
        order = np.lexsort((np.arange(n), -match))
        exposure[order[:s]] = True
    return exposure


def initial_decision(params: DecisionParams, affect_value: float,
                     rng: np.random.Generator) -> bool:
    """Exposure-stage decision of a single agent (no peer term)."""
    tau = rng.uniform(params.tau_lo, params.tau_hi)
    eta = rng.normal(0.0, params.sigma_noise) if params.sigma_noise > 0 else 0.0
    return bool(params.b0 + params.b1 * affect_value - tau + eta > 0.0)


def transmission_prob(params: TransmissionParams, sender_affect: float,
                      sim: float, same_block: bool, design: Design) -> float:
    logit = (params.l0
             + params.l1 * sender_affect
             + params.l2 * sim
             + (params.l3 if design.format == "meme" else 0.0)
             + params.l4_tox * design.toxicity * (1.0 if same_block else 0.0))
    return float(logistic(logit))


def b2_effective(params: DecisionParams, design: Design) -> float:
    if design.call_and_response and design.format in PARTICIPATORY_FORMATS:
        return params.b2 * params.cnr_boost
    return params.b2


class CascadeEngine:
    """Precompiled cascade for one (graph, design, parameter) tuple.

    Reusing an engine across replications avoids recomputing matchings,
    edge similarities and logit constants. Stream consumption per run is
    fixed: random seeding draw (when applicable), affect noise, tau,
    decision noise, then one uniform per attempted edge in round order.
    """

    def __init__(self, graph: SocialGraph, affect: AffectParams,
                 decision: DecisionParams, transmission: TransmissionParams,
                 design: Design):
        affect.validate()
        decision.validate()
        design.validate(graph.identity_dim)
        self.graph = graph
        self.affect = affect
        self.decision = decision
        self.transmission = transmission
        self.design = design
        n = graph.n

        self.match = matching_vector(graph.identity, design)
        self.b2eff = b2_effective(decision, design)

        # directed edge arrays sorted by (sender, target) for CSR slicing
        und = graph.edges
        if und.shape[0]:
            src = np.concatenate([und[:, 0], und[:, 1]])
            dst = np.concatenate([und[:, 1], und[:, 0]])
            order = np.lexsort((dst, src))
            src, dst = src[order], dst[order]
        else:
            src = np.empty(0, dtype=np.int64)
            dst = np.empty(0, dtype=np.int64)
        self.src, self.dst = src, dst
        self.indptr = np.searchsorted(src, np.arange(n + 1))

        sim = identity_similarity(graph.identity[src], graph.identity[dst]) \
            if src.size else np.empty(0)
        same = graph.block[src] == graph.block[dst] if src.size else np.empty(0, bool)
        self.edge_base = (transmission.l0
                          + transmission.l2 * sim
                          + (transmission.l3 if design.format == "meme" else 0.0)
                          + transmission.l4_tox * design.toxicity * same)

        self.affect_base = (affect.a0 + affect.a2 * self.match
                            + affect.a3 * graph.context)
        self.affect_gain = (affect.a1 * (1.0 + design.hook)
                            + affect.a4 * self.match + affect.a5 * graph.context)

        if design.seeding == "random":
            self.fixed_exposure = None
        else:
            self.fixed_exposure = seed_exposure(graph, design, match=self.match)

    def run(self, rng: np.random.Generator, max_rounds: int | None = None) -> CascadeResult:
        graph, dec = self.graph, self.decision
        n = graph.n
        if max_rounds is None:
            max_rounds = max(1, n)
        if max_rounds < 1:
            raise DesignError("max_rounds must be >= 1")

        if self.fixed_exposure is None:
            exposure = seed_exposure(graph, self.design, rng, match=self.match)
        else:
            exposure = self.fixed_exposure.copy()

        v = self.affect_base + exposure * self.affect_gain
        if self.affect.sigma_u > 0:
            v = v + rng.normal(0.0, self.affect.sigma_u, size=n)
        tau = rng.uniform(dec.tau_lo, dec.tau_hi, size=n)
        base = dec.b0 + dec.b1 * v - tau
        if dec.sigma_noise > 0:
            base = base + rng.normal(0.0, dec.sigma_noise, size=n)

        active = exposure & (base > 0.0)
        activation_round = np.where(active, 0, -1).astype(np.int64)
        influence = np.zeros(n, dtype=np.int64)
        frontier = np.flatnonzero(active)

        fired_src: list[np.ndarray] = []
        fired_dst: list[np.ndarray] = []
        att_src: list[np.ndarray] = []
        att_dst: list[np.ndarray] = []
        att_ok: list[np.ndarray] = []

        rounds_run = 0
        for r in range(1, max_rounds + 1):
            rounds_run = r
            if frontier.size:
                starts = self.indptr[frontier]
                counts = self.indptr[frontier + 1] - starts
                total = int(counts.sum())
                shift = np.concatenate(([0], np.cumsum(counts)[:-1]))
                eidx = (np.arange(total, dtype=np.int64)
                        - np.repeat(shift, counts) + np.repeat(starts, counts))
                if eidx.size:
                    eidx = eidx[~active[self.dst[eidx]]]
                if eidx.size:
                    logit = self.edge_base[eidx] + self.transmission.l1 * v[self.src[eidx]]
                    ok = rng.random(eidx.size) < logistic(logit)
                    att_src.append(self.src[eidx])
                    att_dst.append(self.dst[eidx])
                    att_ok.append(ok)
                    hit = self.dst[eidx[ok]]
                    if hit.size:
                        fired_src.append(self.src[eidx[ok]])
                        fired_dst.append(hit)
                        np.add.at(influence, hit, 1)

            candidates = (~active) & (influence > 0)
            new = candidates & (base + self.b2eff * influence > 0.0)
            frontier = np.flatnonzero(new)
            if frontier.size == 0:
                break
            active |= new
            activation_round[frontier] = r

        if fired_src:
            fired = np.column_stack([np.concatenate(fired_src),
                                     np.concatenate(fired_dst)])
        else:
            fired = np.empty((0, 2), dtype=np.int64)
        if att_src:
            attempts = np.column_stack([np.concatenate(att_src),
                                        np.concatenate(att_dst),
                                        np.concatenate(att_ok).astype(np.int64)])
        else:
            attempts = np.empty((0, 3), dtype=np.int64)

        return CascadeResult(exposure=exposure, affect=v, active=active,
                             activation_round=activation_round,
                             fired_edges=fired, attempts=attempts,
                             rounds_run=rounds_run)


def run_cascade(graph: SocialGraph, affect: AffectParams, decision: DecisionParams,
                transmission: TransmissionParams, design: Design,
                rng: np.random.Generator, max_rounds: int | None = None) -> CascadeResult:
    """One cascade replication; see CascadeEngine for the stream contract."""
    engine = CascadeEngine(graph, affect, decision, transmission, design)
    return engine.run(rng, max_rounds=max_rounds)
