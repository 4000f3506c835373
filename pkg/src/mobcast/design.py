"""Campaign design evaluation and constrained optimization.

Designs are scored by Monte-Carlo replication of the full pipeline
(seeding, affect formation, cascade, impact scoring). Replication r of
every candidate design draws from the stream derived from
(master_seed, r), so candidates face common random numbers and their
score differences are low-variance. The optimizer enumerates a finite
grid, drops designs that break the budget or the toxicity ceiling, and
returns the feasible design with the highest mean composite score.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from multiprocessing import get_context

from .affect import Design, DesignError
from .diffusion import CascadeEngine, seed_count
from .graph import SocialGraph, block_centers, generate_network
from .impact import ImpactReport, score_cascade
from .scenario import CostModel, DesignSpace, Scenario, derive_stream

__all__ = [
    "OptimizeInfeasibleError",
    "EvalRow",
    "OptimizeReport",
    "design_cost",
    "enumerate_designs",
    "scenario_graph",
    "replicate_design",
    "evaluate_design",
    "optimize",
]


class OptimizeInfeasibleError(ValueError):
    """Raised when no candidate satisfies the constraints; the message
    names which constraint(s) excluded every design."""


@dataclass(frozen=True)
class EvalRow:
    design: Design
    cost: float
    feasible: bool
    mean_score: float | None
    se_score: float | None
    mean_participation: float | None
    mean_cohesion: float | None
    mean_sway: float | None
    mean_polarization: float | None


@dataclass(frozen=True)
class OptimizeReport:
    best_design: Design
    best_mean: float
    best_se: float
    best_cost: float
    budget: float
    toxicity_limit: float
    budget_slack: float
    toxicity_slack: float
    reps: int
    master_seed: int
    table: tuple[EvalRow, ...]


def design_cost(costs: CostModel, design: Design, n: int) -> float:
    return costs.format_cost(design.format) + costs.per_seed * seed_count(
        n, design.seed_fraction)


def enumerate_designs(space: DesignSpace, graph: SocialGraph) -> tuple[Design, ...]:
    """Cartesian product of the space axes, symbols pinned to the anchor
    block's identity center. Order is the nested-loop order below and is
    part of the output contract (tables keep it)."""
    space.validate()
    if not 0 <= space.symbol_block < graph.n_blocks:
        raise DesignError("symbol_block outside the graph's block range")
    centers = block_centers(graph.n_blocks, graph.identity_dim)
    symbols = tuple(float(x) for x in centers[space.symbol_block])
    out = []
    for fmt in space.formats:
        for hook in space.hooks:
            for cnr in space.call_and_response:
                for tox in space.toxicities:
                    for frac in space.seed_fractions:
                        for seeding in space.seedings:
                            out.append(Design(
                                format=fmt, symbols=symbols, hook=hook,
                                call_and_response=cnr, toxicity=tox,
                                seed_fraction=frac, seeding=seeding))
    return tuple(out)


def scenario_graph(scenario: Scenario, master_seed: int | None = None) -> SocialGraph:
    """The scenario's fixed graph: one draw from the 'graph' substream."""
    seed = scenario.master_seed if master_seed is None else master_seed
    return generate_network(scenario.graph, derive_stream(seed, "graph"))


def replicate_design(scenario: Scenario, design: Design, reps: int,
                     master_seed: int,
                     graph: SocialGraph | None = None) -> list[ImpactReport]:
    """Impact reports for `reps` replications under the CRN contract."""
    if reps < 1:
        raise DesignError("reps must be >= 1")
    regen = scenario.regenerate_graph_per_rep
    if graph is None and not regen:
        graph = scenario_graph(scenario, master_seed)
    engine = None
    if not regen:
        engine = CascadeEngine(graph, scenario.affect, scenario.decision,
                               scenario.transmission, design)
    reports = []
    for r in range(reps):
        if regen:
            g = generate_network(scenario.graph,
                                 derive_stream(master_seed, r, "graph"))
            engine = CascadeEngine(g, scenario.affect, scenario.decision,
                                   scenario.transmission, design)
        result = engine.run(derive_stream(master_seed, r),
                            max_rounds=scenario.max_rounds)
        reports.append(score_cascade(engine.graph, design, result,
                                     scenario.impact, match=engine.match))
    return reports


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, (var / n) ** 0.5


def evaluate_design(scenario: Scenario, design: Design,
                    reps: int | None = None,
                    master_seed: int | None = None,
                    graph: SocialGraph | None = None) -> tuple[float, float]:
    """Mean and standard error of the composite score."""
    reps = scenario.reps if reps is None else reps
    master_seed = scenario.master_seed if master_seed is None else master_seed
    reports = replicate_design(scenario, design, reps, master_seed, graph=graph)
    return _mean_se([rep.score for rep in reports])


def _eval_row(args) -> EvalRow:
    scenario, design, cost, feasible, reps, master_seed = args
    if not feasible:
        return EvalRow(design, cost, False, None, None, None, None, None, None)
    reports = replicate_design(scenario, design, reps, master_seed)
    mean, se = _mean_se([rep.score for rep in reports])
    k = float(len(reports))
    return EvalRow(
        design, cost, True, mean, se,
        sum(r.participation for r in reports) / k,
        sum(r.cohesion for r in reports) / k,
        sum(r.sway for r in reports) / k,
        sum(r.polarization for r in reports) / k,
    )


def optimize(scenario: Scenario, space: DesignSpace | None = None,
             costs: CostModel | None = None, budget: float | None = None,
             toxicity_limit: float | None = None, reps: int | None = None,
             master_seed: int | None = None, jobs: int = 1) -> OptimizeReport:
    """Exhaustive search of the design grid under budget and toxicity
    constraints. Ties on mean score break toward lower cost, then toward
    the lexicographically smaller design record."""
    space = scenario.space if space is None else space
    costs = scenario.costs if costs is None else costs
    budget = space.budget if budget is None else budget
    toxicity_limit = space.toxicity_limit if toxicity_limit is None else toxicity_limit
    reps = scenario.reps if reps is None else reps
    master_seed = scenario.master_seed if master_seed is None else master_seed

    graph = scenario_graph(scenario, master_seed)
    designs = enumerate_designs(space, graph)

    tasks = []
    over_budget = over_toxicity = 0
    for design in designs:
        cost = design_cost(costs, design, scenario.graph.n)
        bad_budget = cost > budget
        bad_tox = design.toxicity > toxicity_limit
        over_budget += bad_budget
        over_toxicity += bad_tox
        tasks.append((scenario, design, cost, not (bad_budget or bad_tox),
                      reps, master_seed))

    if not any(t[3] for t in tasks):
        binding = []
        if over_budget:
            binding.append(f"budget {budget:g}")
        if over_toxicity:
            binding.append(f"toxicity_limit {toxicity_limit:g}")
        raise OptimizeInfeasibleError(
            "no feasible design in the space; binding constraint(s): "
            + ", ".join(binding))

    if jobs > 1 and sum(t[3] for t in tasks) > 1:
        with get_context("spawn").Pool(processes=jobs) as pool:
            rows = pool.map(_eval_row, tasks)
    else:
        rows = [_eval_row(t) for t in tasks]

    best = min((row for row in rows if row.feasible),
               key=lambda row: (-row.mean_score, row.cost, row.design))
    return OptimizeReport(
        best_design=best.design,
        best_mean=best.mean_score,
        best_se=best.se_score,
        best_cost=best.cost,
        budget=budget,
        toxicity_limit=toxicity_limit,
        budget_slack=budget - best.cost,
        toxicity_slack=toxicity_limit - best.design.toxicity,
        reps=reps,
        master_seed=master_seed,
        table=tuple(rows),
    )
