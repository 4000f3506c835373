"""Two-side strategic competition over the same network.

Both sides seed and diffuse simultaneously under the single-side cascade
rules, with exclusive adoption: an agent joins at most one side, ever.
When an inactive agent clears both sides' activation conditions in the
same round it joins the side with the higher affective pull
(b1 * affect + b2' * peer count for that side); an exact tie is settled
by a fair coin from the replication stream. Adopters transmit only
their own side.

Payoffs weight each side's own cohesion, participation and sway, minus
a shared polarization penalty computed on pooled adoption-by-block
rates. Equilibrium search builds the full expected-payoff matrix under
common random numbers and then runs deterministic best-response
iteration, verifying any fixed point by exhaustive deviation scan.
"""

from __future__ import annotations

from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .affect import AffectParams, Design, DesignError, matching_vector
from .design import scenario_graph
from .diffusion import (CascadeResult, DecisionParams, TransmissionParams,
                        b2_effective, seed_exposure)
from .graph import (SocialGraph, block_centers, generate_network,
                    identity_similarity)
from .impact import block_rates, undecided_mask
from .scenario import Scenario, derive_stream
from .stats import logistic

__all__ = [
    "PlayerConfig",
    "JointCascadeResult",
    "EquilibriumReport",
    "JointCascadeEngine",
    "joint_cascade",
    "payoff",
    "players_from_scenario",
    "payoff_matrices",
    "best_response_dynamics",
]

SIDES = ("L", "R")


@dataclass(frozen=True)
class PlayerConfig:
    """One competitor: side label, payoff weights (cohesion,
    participation, sway), finite strategy set, home-base blocks."""

    side: str
    weights: tuple[float, float, float]
    strategy_set: tuple[Design, ...]
    anchor_blocks: tuple[int, ...]

    def validate(self) -> None:
        if self.side not in SIDES:
            raise DesignError(f"side must be one of {SIDES}, got {self.side!r}")
        if not self.strategy_set:
            raise DesignError("strategy_set must be non-empty")
        if len(self.weights) != 3 or any(w < 0 for w in self.weights):
            raise DesignError("weights must be three non-negative numbers")


@dataclass
class JointCascadeResult:
    """Joint outcome; adoption is 0 none, 1 left, 2 right."""

    adoption: np.ndarray
    left: CascadeResult
    right: CascadeResult
    match_left: np.ndarray
    match_right: np.ndarray
    polarization: float
    rounds_run: int

    def side_result(self, side: str) -> CascadeResult:
        return self.left if side == "L" else self.right

    def side_match(self, side: str) -> np.ndarray:
        return self.match_left if side == "L" else self.match_right


@dataclass(frozen=True)
class EquilibriumReport:
    profile: tuple[Design, Design]
    profile_index: tuple[int, int]
    kind: str  # "pure_nash" or "cycle"
    trajectory: tuple[tuple[int, int], ...]
    payoff_left: tuple[tuple[float, ...], ...]
    payoff_right: tuple[tuple[float, ...], ...]
    strategies_left: tuple[Design, ...]
    strategies_right: tuple[Design, ...]
    reps: int
    master_seed: int


class _Side:
    """Per-side precomputation shared across replications."""

    def __init__(self, graph: SocialGraph, affect: AffectParams,
                 decision: DecisionParams, transmission: TransmissionParams,
                 design: Design, edge_sim: np.ndarray, same_block: np.ndarray):
        design.validate(graph.identity_dim)
        self.design = design
        self.match = matching_vector(graph.identity, design)
        self.b2eff = b2_effective(decision, design)
        self.affect_base = (affect.a0 + affect.a2 * self.match
                            + affect.a3 * graph.context)
        self.affect_gain = (affect.a1 * (1.0 + design.hook)
                            + affect.a4 * self.match + affect.a5 * graph.context)
        self.edge_base = (transmission.l0
                          + transmission.l2 * edge_sim
                          + (transmission.l3 if design.format == "meme" else 0.0)
                          + transmission.l4_tox * design.toxicity * same_block)


class JointCascadeEngine:
    """Joint cascade for one (graph, left design, right design) tuple.

    Stream consumption per run: left seed draw (random seeding only),
    right seed draw, left affect noise, right affect noise, thresholds,
    decision noise, then per round left edge coins, right edge coins,
    and one fair coin per exact pull tie in ascending agent order.
    """

    def __init__(self, graph: SocialGraph, affect: AffectParams,
                 decision: DecisionParams, transmission: TransmissionParams,
                 design_left: Design, design_right: Design):
        affect.validate()
        decision.validate()
        self.graph = graph
        self.affect = affect
        self.decision = decision
        self.transmission = transmission
        n = graph.n

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
        edge_sim = identity_similarity(graph.identity[src], graph.identity[dst]) \
            if src.size else np.empty(0)
        same = graph.block[src] == graph.block[dst] if src.size else np.empty(0, bool)

        self.sides = (
            _Side(graph, affect, decision, transmission, design_left, edge_sim, same),
            _Side(graph, affect, decision, transmission, design_right, edge_sim, same),
        )

    def _out_edges(self, frontier: np.ndarray) -> np.ndarray:
        starts = self.indptr[frontier]
        counts = self.indptr[frontier + 1] - starts
        total = int(counts.sum())
        shift = np.concatenate(([0], np.cumsum(counts)[:-1]))
        return (np.arange(total, dtype=np.int64)
                - np.repeat(shift, counts) + np.repeat(starts, counts))

    def run(self, rng: np.random.Generator,
            max_rounds: int | None = None) -> JointCascadeResult:
        graph, dec = self.graph, self.decision
        n = graph.n
        if max_rounds is None:
            max_rounds = max(1, n)

        exposures = [seed_exposure(graph, s.design, rng, match=s.match)
                     for s in self.sides]
        affects = []
        for s, exp in zip(self.sides, exposures):
            v = s.affect_base + exp * s.affect_gain
            if self.affect.sigma_u > 0:
                v = v + rng.normal(0.0, self.affect.sigma_u, size=n)
            affects.append(v)
        tau = rng.uniform(dec.tau_lo, dec.tau_hi, size=n)
        noise = rng.normal(0.0, dec.sigma_noise, size=n) if dec.sigma_noise > 0 \
            else np.zeros(n)
        bases = [dec.b0 + dec.b1 * affects[k] - tau + noise for k in range(2)]

        adoption = np.zeros(n, dtype=np.int8)
        rounds = [np.full(n, -1, dtype=np.int64), np.full(n, -1, dtype=np.int64)]
        counts = [np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)]
        fired: list[list[np.ndarray]] = [[], []]
        attempts: list[list[np.ndarray]] = [[], []]

        def resolve(qual_l, qual_r, pull_l, pull_r, rnd):
            """Assign winners for this round, coin-flipping exact ties."""
            both = qual_l & qual_r
            take_l = (qual_l & ~qual_r) | (both & (pull_l > pull_r))
            take_r = (qual_r & ~qual_l) | (both & (pull_r > pull_l))
            tied = np.flatnonzero(both & (pull_l == pull_r))
            if tied.size:
                coin = rng.random(tied.size) < 0.5
                take_l[tied[coin]] = True
                take_r[tied[~coin]] = True
            adoption[take_l] = 1
            adoption[take_r] = 2
            rounds[0][take_l] = rnd
            rounds[1][take_r] = rnd
            return np.flatnonzero(take_l), np.flatnonzero(take_r)

        qual = [exposures[k] & (bases[k] > 0.0) for k in range(2)]
        pulls = [dec.b1 * affects[k] for k in range(2)]
        frontiers = resolve(qual[0], qual[1], pulls[0], pulls[1], 0)

        rounds_run = 0
        for r in range(1, max_rounds + 1):
            rounds_run = r
            open_at_start = adoption == 0
            for k in range(2):
                frontier = frontiers[k]
                if not frontier.size:
                    continue
                eidx = self._out_edges(frontier)
                if eidx.size:
                    eidx = eidx[open_at_start[self.dst[eidx]]]
                if not eidx.size:
                    continue
                side = self.sides[k]
                logit = side.edge_base[eidx] \
                    + self.transmission.l1 * affects[k][self.src[eidx]]
                ok = rng.random(eidx.size) < logistic(logit)
                attempts[k].append(np.column_stack([
                    self.src[eidx], self.dst[eidx], ok.astype(np.int64)]))
                hit = self.dst[eidx[ok]]
                if hit.size:
                    fired[k].append(np.column_stack([self.src[eidx[ok]], hit]))
                    np.add.at(counts[k], hit, 1)

            open_now = adoption == 0
            qual = [open_now & (counts[k] > 0)
                    & (bases[k] + self.sides[k].b2eff * counts[k] > 0.0)
                    for k in range(2)]
            pulls = [dec.b1 * affects[k] + self.sides[k].b2eff * counts[k]
                     for k in range(2)]
            frontiers = resolve(qual[0], qual[1], pulls[0], pulls[1], r)
            if not frontiers[0].size and not frontiers[1].size:
                break

        def stack(parts, width):
            if parts:
                return np.concatenate(parts, axis=0)
            return np.empty((0, width), dtype=np.int64)

        side_results = []
        for k in range(2):
            side_results.append(CascadeResult(
                exposure=exposures[k], affect=affects[k],
                active=adoption == k + 1, activation_round=rounds[k],
                fired_edges=stack(fired[k], 2), attempts=stack(attempts[k], 3),
                rounds_run=rounds_run))

        pooled = block_rates(graph, adoption > 0)
        polarization = float(pooled.max() - pooled.min()) if pooled.size > 1 else 0.0
        return JointCascadeResult(
            adoption=adoption, left=side_results[0], right=side_results[1],
            match_left=self.sides[0].match, match_right=self.sides[1].match,
            polarization=polarization, rounds_run=rounds_run)


def joint_cascade(graph: SocialGraph, design_left: Design, design_right: Design,
                  affect: AffectParams, decision: DecisionParams,
                  transmission: TransmissionParams, rng: np.random.Generator,
                  max_rounds: int | None = None) -> JointCascadeResult:
    engine = JointCascadeEngine(graph, affect, decision, transmission,
                                design_left, design_right)
    return engine.run(rng, max_rounds=max_rounds)


def payoff(player: PlayerConfig, graph: SocialGraph,
           joint: JointCascadeResult, kappa: float,
           delta_u: float = 0.06) -> float:
    """One side's payoff for one joint outcome."""
    player.validate()
    mine = joint.adoption == (1 if player.side == "L" else 2)
    n = graph.n
    count = int(np.count_nonzero(mine))

    participation = count / n if n else 0.0

    cohesion = 0.0
    if count >= 2 and graph.n_edges:
        inside = mine[graph.edges[:, 0]] & mine[graph.edges[:, 1]]
        cohesion = float(np.count_nonzero(inside)) / (count * (count - 1) / 2.0)

    und = undecided_mask(joint.side_match(player.side), delta_u)
    total_und = int(np.count_nonzero(und))
    sway = (float(np.count_nonzero(und & mine)) / total_und) if total_und else 0.0

    w1, w2, w3 = player.weights
    return w1 * cohesion + w2 * participation + w3 * sway \
        - kappa * joint.polarization


def players_from_scenario(scenario: Scenario) -> tuple[PlayerConfig, PlayerConfig]:
    """Both competitors implied by the scenario's game section: same
    format menu and payoff weights, symbols anchored on opposite blocks."""
    game = scenario.game
    game.validate()
    centers = block_centers(scenario.graph.n_blocks, scenario.graph.identity_dim)
    weights = (game.w_cohesion, game.w_participation, game.w_sway)
    players = []
    for side, block in (("L", game.left_block), ("R", game.right_block)):
        if not 0 <= block < scenario.graph.n_blocks:
            raise DesignError(f"game anchor block {block} outside block range")
        symbols = tuple(float(x) for x in centers[block])
        strategies = tuple(Design(
            format=fmt, symbols=symbols, hook=game.hook,
            call_and_response=game.call_and_response, toxicity=game.toxicity,
            seed_fraction=game.seed_fraction, seeding=game.seeding)
            for fmt in game.formats)
        players.append(PlayerConfig(side=side, weights=weights,
                                    strategy_set=strategies,
                                    anchor_blocks=(block,)))
    return players[0], players[1]


def _profile_cell(args) -> tuple[float, float]:
    (scenario, left_player, right_player, design_left, design_right,
     reps, master_seed) = args
    graph = None
    engine = None
    if not scenario.regenerate_graph_per_rep:
        graph = scenario_graph(scenario, master_seed)
        engine = JointCascadeEngine(graph, scenario.affect, scenario.decision,
                                    scenario.transmission, design_left,
                                    design_right)
    total_l = total_r = 0.0
    for r in range(reps):
        if scenario.regenerate_graph_per_rep:
            graph = generate_network(scenario.graph,
                                     derive_stream(master_seed, r, "graph"))
            engine = JointCascadeEngine(graph, scenario.affect,
                                        scenario.decision,
                                        scenario.transmission,
                                        design_left, design_right)
        joint = engine.run(derive_stream(master_seed, r),
                           max_rounds=scenario.max_rounds)
        total_l += payoff(left_player, graph, joint, scenario.game.kappa,
                          scenario.impact.delta_u)
        total_r += payoff(right_player, graph, joint, scenario.game.kappa,
                          scenario.impact.delta_u)
    return total_l / reps, total_r / reps


def payoff_matrices(scenario: Scenario, left_player: PlayerConfig,
                    right_player: PlayerConfig, reps: int, master_seed: int,
                    jobs: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Expected payoffs for every profile; cell (i, j) pairs the left
    player's strategy i against the right player's strategy j. Every cell
    sees the same replication streams (common random numbers)."""
    left_player.validate()
    right_player.validate()
    tasks = [(scenario, left_player, right_player, dl, dr, reps, master_seed)
             for dl in left_player.strategy_set
             for dr in right_player.strategy_set]
    if jobs > 1 and len(tasks) > 1:
        with get_context("spawn").Pool(processes=jobs) as pool:
            cells = pool.map(_profile_cell, tasks)
    else:
        cells = [_profile_cell(t) for t in tasks]
    n_l = len(left_player.strategy_set)
    n_r = len(right_player.strategy_set)
    pay_l = np.array([c[0] for c in cells]).reshape(n_l, n_r)
    pay_r = np.array([c[1] for c in cells]).reshape(n_l, n_r)
    return pay_l, pay_r


def _first_argmax(values: np.ndarray) -> int:
    return int(np.argmax(values))


def best_response_dynamics(scenario: Scenario,
                           players: tuple[PlayerConfig, PlayerConfig] | None = None,
                           reps: int | None = None,
                           master_seed: int | None = None,
                           max_iters: int | None = None,
                           jobs: int = 1) -> EquilibriumReport:
    """Alternating best responses on the precomputed payoff matrix,
    starting from each side's first strategy; left moves first. A fixed
    point is reported as pure_nash only after an exhaustive deviation
    scan; a revisited non-fixed profile is reported as a cycle."""
    if players is None:
        players = players_from_scenario(scenario)
    left_player, right_player = players
    reps = scenario.reps if reps is None else reps
    master_seed = scenario.master_seed if master_seed is None else master_seed
    max_iters = scenario.game.max_iters if max_iters is None else max_iters
    if max_iters < 1:
        raise DesignError("max_iters must be >= 1")

    pay_l, pay_r = payoff_matrices(scenario, left_player, right_player,
                                   reps, master_seed, jobs=jobs)

    i, j = 0, 0
    trajectory = [(i, j)]
    seen = {(i, j)}
    kind = "cycle"
    for _ in range(max_iters):
        ni = _first_argmax(pay_l[:, j])
        nj = _first_argmax(pay_r[ni, :])
        if (ni, nj) == (i, j):
            kind = "pure_nash"
            break
        i, j = ni, nj
        trajectory.append((i, j))
        if (i, j) in seen:
            break
        seen.add((i, j))

    if kind == "pure_nash":
        if not (np.all(pay_l[i, j] >= pay_l[:, j])
                and np.all(pay_r[i, j] >= pay_r[i, :])):
            kind = "cycle"

    return EquilibriumReport(
        profile=(left_player.strategy_set[i], right_player.strategy_set[j]),
        profile_index=(i, j),
        kind=kind,
        trajectory=tuple(trajectory),
        payoff_left=tuple(tuple(float(x) for x in row) for row in pay_l),
        payoff_right=tuple(tuple(float(x) for x in row) for row in pay_r),
        strategies_left=left_player.strategy_set,
        strategies_right=right_player.strategy_set,
        reps=reps,
        master_seed=master_seed,
    )
