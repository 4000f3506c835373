"""Acceptance gate: nine numbered criteria, one printed verdict line each.

Run with `pytest -rA` (the repo default) so every `criterion N: ...` line
lands in the terminal summary. Protocols, tolerances and runtime caps are
fixed; each test prints its verdict before asserting so a failure still
reports its numbers.
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from mobcast.affect import PARTICIPATORY_FORMATS, Design
from mobcast.cli import main
from mobcast.design import optimize, replicate_design
from mobcast.estimate import (
    affect_design_matrix,
    build_panel,
    fit_activation,
    fit_affect_ols,
    fit_edge_transmission,
    fit_logistic,
    implied_affect_coefficients,
    wald_p_value,
)
from mobcast.falsify import HYPOTHESES, HypothesisSpec, calibrate, calibration_scenario
from mobcast.game import best_response_dynamics
from mobcast.graph import GraphConfig
from mobcast.scenario import (
    DesignSpace,
    Scenario,
    ama_default,
    derive_stream,
    preset_scenario,
    save_scenario,
)
from mobcast.stats import logistic, welch_t_test

from oracles import (
    enumeration_corpus,
    engine_mc_distribution,
    exact_cascade_distribution,
)

SEEDS = (101, 202, 303)


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    reps = 100_000
    gaps = {}
    for name, graph, affect, decision, transmission, design in \
            enumeration_corpus():
        _, exact_marginals = exact_cascade_distribution(
            graph, affect, decision, transmission, design)
        _, mc_marginals = engine_mc_distribution(
            graph, affect, decision, transmission, design,
            derive_stream(424242, "c1", name), reps)
        gaps[name] = float(np.max(np.abs(mc_marginals - exact_marginals)))
    elapsed = time.perf_counter() - t0
    worst = max(gaps.values())
    ok = worst <= 0.02 and elapsed < 30.0
    listing = ", ".join(f"{k} {v:.4f}" for k, v in gaps.items())
    _report(1, ok, f"max marginal gap {worst:.4f} at 1e5 reps ({listing}), "
                   f"{elapsed:.1f}s")


def test_criterion_2_memetic_reach():
    t0 = time.perf_counter()
    scenario = ama_default()
    theatre = scenario.design
    meme = replace(theatre, format="meme")
    reps = 300
    rep_t = replicate_design(scenario, theatre, reps, scenario.master_seed)
    rep_m = replicate_design(scenario, meme, reps, scenario.master_seed)
    reach_t = np.array([r.within_block_reach for r in rep_t])
    reach_m = np.array([r.within_block_reach for r in rep_m])
    sway_t = np.array([r.cross_block_sway for r in rep_t])
    sway_m = np.array([r.cross_block_sway for r in rep_m])
    w_reach = welch_t_test(reach_m, reach_t)
    w_sway = welch_t_test(sway_m, sway_t)
    elapsed = time.perf_counter() - t0
    ok = (reach_m.mean() > reach_t.mean() and w_reach.p_value < 0.01
          and sway_m.mean() < sway_t.mean() and w_sway.p_value < 0.01
          and elapsed < 120.0)
    _report(2, ok,
            f"within-block reach meme {reach_m.mean():.3f} vs theatre "
            f"{reach_t.mean():.3f} (p {w_reach.p_value:.2e}); cross-block "
            f"sway meme {sway_m.mean():.3f} vs theatre {sway_t.mean():.3f} "
            f"(p {w_sway.p_value:.2e}); {elapsed:.1f}s")


def test_criterion_3_optimizer_format_choice():
    t0 = time.perf_counter()
    picks = {}
    ok = True
    for ctx, preset in (("community", "ama-default"),
                        ("fragmented", "ama-fragmented")):
        scenario = preset_scenario(preset)
        for seed in SEEDS:
            fmt = optimize(scenario, reps=40, master_seed=seed,
                           jobs=1).best_design.format
            picks[(ctx, seed)] = fmt
            if ctx == "community":
                ok &= fmt in PARTICIPATORY_FORMATS
            else:
                ok &= fmt == "meme"
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300.0
    community = [picks[("community", s)] for s in SEEDS]
    fragmented = [picks[("fragmented", s)] for s in SEEDS]
    _report(3, ok, f"community picks {community}, fragmented picks "
                   f"{fragmented} at seeds {list(SEEDS)}, {elapsed:.1f}s")


def test_criterion_4_equilibrium_profiles():
    t0 = time.perf_counter()
    outcomes = {}
    ok = True
    for ctx, preset, want in (("community", "ama-default", "theatre"),
                              ("fragmented", "ama-fragmented", "meme")):
        scenario = preset_scenario(preset)
        for seed in SEEDS:
            report = best_response_dynamics(scenario, reps=40,
                                            master_seed=seed, jobs=1)
            profile = (report.profile[0].format, report.profile[1].format)
            outcomes[(ctx, seed)] = (report.kind, profile)
            ok &= report.kind == "pure_nash" and profile == (want, want)
    elapsed = time.perf_counter() - t0
    summary = "; ".join(f"{ctx}@{seed} {kind} {prof[0]}/{prof[1]}"
                        for (ctx, seed), (kind, prof) in outcomes.items())
    _report(4, ok, f"{summary}; {elapsed:.1f}s")


def _recovery_scenario() -> Scenario:
    base = ama_default()
    return replace(
        base,
        name="recovery",
        graph=GraphConfig(n=2000, n_blocks=4, p_in=0.03, p_out=0.005,
                          identity_dim=1, context="custom",
                          context_mean=0.5, context_spread=0.5),
        affect=replace(base.affect, sigma_u=0.3),
    )


def test_criterion_5_parameter_recovery():
    t0 = time.perf_counter()
    scenario = _recovery_scenario()
    probe = Design(format="theatre", symbols=(0.0,), hook=0.6,
                   call_and_response=True, toxicity=0.0,
                   seed_fraction=0.5, seeding="random")
    designs = (probe, replace(probe, format="meme",
                              call_and_response=False))
    truth = np.array(implied_affect_coefficients(scenario, probe))
    b1_null = replace(scenario, decision=replace(
        scenario.decision, b1=0.0, b0=1.05, b2=0.0))
    l3_null = replace(scenario, transmission=replace(
        scenario.transmission, l3=0.0))

    runs = 200
    covered = np.zeros(6, dtype=int)
    power_b1 = power_l3 = size_b1 = size_l3 = 0
    for m in range(runs):
        seed = int(derive_stream(5150, "est", m).integers(0, 2 ** 62))
        panel = build_panel(scenario, designs=designs, reps=1,
                            master_seed=seed)
        fit = fit_affect_ols(panel.affect, panel.exposure, panel.matching,
                             panel.context)
        covered += np.abs(np.array(fit.estimates) - truth) <= 0.1
        power_b1 += wald_p_value(fit_activation(panel, "oracle"),
                                 "affect") < 0.05
        power_l3 += wald_p_value(fit_edge_transmission(panel), "meme") < 0.05

        null_seed = int(derive_stream(5150, "estnull", m).integers(0, 2 ** 62))
        panel_b1 = build_panel(b1_null, designs=designs, reps=1,
                               master_seed=null_seed)
        size_b1 += wald_p_value(fit_activation(panel_b1, "oracle"),
                                "affect") < 0.05
        panel_l3 = build_panel(l3_null, designs=designs, reps=1,
                               master_seed=null_seed)
        size_l3 += wald_p_value(fit_edge_transmission(panel_l3),
                                "meme") < 0.05

    coverage = covered / runs
    elapsed = time.perf_counter() - t0
    ok = (coverage.min() >= 0.95
          and power_b1 / runs >= 0.80 and power_l3 / runs >= 0.80
          and size_b1 / runs <= 0.10 and size_l3 / runs <= 0.10)
    _report(5, ok,
            f"coverage min {coverage.min():.3f} "
            f"(per-coef {np.round(coverage, 3).tolist()}), power "
            f"b1 {power_b1 / runs:.2f} l3 {power_l3 / runs:.2f}, size "
            f"b1 {size_b1 / runs:.3f} l3 {size_l3 / runs:.3f}, "
            f"{runs} runs, {elapsed:.0f}s")


def test_criterion_6_numerical_correctness():
    rng = derive_stream(6006, "numerics")
    n = 4000
    x = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n),
                         rng.random(n)])
    beta_true = np.array([-0.3, 0.9, -0.6, 0.4])
    y = (rng.random(n) < logistic(x @ beta_true)).astype(float)
    fit = fit_logistic(y, x)
    beta_hat = np.array(fit.estimates)
    score = x.T @ (y - logistic(x @ beta_hat))
    score_norm = float(np.max(np.abs(score)))

    def ll(beta):
        xb = x @ beta
        return float((y * xb - np.logaddexp(0.0, xb)).sum())

    h = 1e-5
    worst_rel = 0.0
    for _ in range(10):
        point = rng.normal(scale=0.5, size=4)
        analytic = x.T @ (y - logistic(x @ point))
        fd = np.empty(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fd[j] = (ll(point + e) - ll(point - e)) / (2 * h)
        rel = np.max(np.abs(fd - analytic)) / max(1.0, np.max(np.abs(analytic)))
        worst_rel = max(worst_rel, float(rel))

    m = 500
    exposure = (rng.random(m) < 0.5).astype(float)
    matching = rng.random(m)
    context = rng.random(m)
    xd = affect_design_matrix(exposure, matching, context)
    yd = xd @ np.array([0.1, 0.3, 1.0, 0.2, 0.15, 0.3]) + rng.normal(
        0.0, 0.4, size=m)
    ols = fit_affect_ols(yd, exposure, matching, context)
    resid = yd - xd @ np.array(ols.estimates)
    ortho = float(np.max(np.abs(xd.T @ resid))
                  / (np.linalg.norm(xd) * np.linalg.norm(yd)))

    ok = (fit.converged and score_norm < 1e-6 and worst_rel < 1e-6
          and ortho < 1e-8)
    _report(6, ok,
            f"score max-norm {score_norm:.2e}, gradient FD rel err "
            f"{worst_rel:.2e} over 10 points, OLS orthogonality {ortho:.2e}")


def test_criterion_7_falsification_calibration():
    t0 = time.perf_counter()
    scenario = calibration_scenario(Scenario())
    rates = {}
    ok = True
    for hid in HYPOTHESES:
        spec = HypothesisSpec(id=hid, scenario=scenario, null=True, reps=40)
        report = calibrate(spec, meta_reps=400)
        rates[hid] = report.rate
        ok &= 0.01 <= report.rate <= 0.10
    elapsed = time.perf_counter() - t0
    listing = ", ".join(f"{k} {v:.3f}" for k, v in rates.items())
    _report(7, ok, f"type-I rates at nominal 0.05 over 400 nulls: {listing}; "
                   f"{elapsed:.0f}s")


def test_criterion_8_determinism(tmp_path):
    base = ama_default()
    scenario = replace(
        base,
        name="determinism",
        master_seed=4040,
        reps=8,
        graph=GraphConfig(n=120, n_blocks=4, p_in=0.3, p_out=0.05,
                          identity_dim=1),
        design=replace(base.design, seed_fraction=0.1),
        space=DesignSpace(formats=("meme", "theatre"), hooks=(0.6,),
                          call_and_response=(True,), toxicities=(0.0,),
                          seed_fractions=(0.1,), seedings=("top_matching",),
                          budget=12.0, toxicity_limit=0.5),
    )
    cfg = str(tmp_path / "det.cfg")
    save_scenario(scenario, cfg)

    def run(cmd, tag, jobs):
        out = tmp_path / f"{cmd}-{tag}"
        args = [cmd, "--scenario", cfg, "--out", str(out),
                "--jobs", str(jobs)]
        if cmd == "estimate":
            args += ["--reps", "2"]
        assert main(args) == 0
        return out

    checked = []
    mismatches = []
    plan = (("simulate", ("impacts.csv", "summary.json")),
            ("optimize", ("evaluations.csv", "optimize.json")),
            ("game", ("game.json",)),
            ("estimate", ("panel_agents.csv", "panel_edges.csv",
                          "estimate.json")))
    for cmd, artifacts in plan:
        first = run(cmd, "a", 1)
        again = run(cmd, "b", 1)
        wide = run(cmd, "c", 8)
        for name in artifacts:
            ref = (first / name).read_bytes()
            checked.append(f"{cmd}/{name}")
            if (again / name).read_bytes() != ref:
                mismatches.append(f"{cmd}/{name} rerun")
            if (wide / name).read_bytes() != ref:
                mismatches.append(f"{cmd}/{name} jobs8")

    ok = not mismatches
    detail = (f"{len(checked)} artifacts byte-identical across reruns and "
              f"jobs 1 vs 8" if ok else "mismatch: " + ", ".join(mismatches))
    _report(8, ok, detail)


def test_criterion_9_ethics_constraint():
    t0 = time.perf_counter()
    base = ama_default()
    scenario = replace(base, transmission=replace(base.transmission,
                                                  l4_tox=3.0))
    ok = True
    gaps = []
    for seed in SEEDS:
        con = optimize(scenario, toxicity_limit=0.2, reps=40,
                       master_seed=seed, jobs=1)
        unc = optimize(scenario, toxicity_limit=1.0, reps=40,
                       master_seed=seed, jobs=1)
        differs = con.best_design != unc.best_design

        def mean_pol(design):
            reports = replicate_design(scenario, design, 40, seed)
            return float(np.mean([r.polarization for r in reports]))

        gap = mean_pol(unc.best_design) - mean_pol(con.best_design)
        gaps.append(gap)
        ok &= differs and gap >= 0.05
    elapsed = time.perf_counter() - t0
    _report(9, ok,
            "constrained optimum differs and lowers polarization by "
            + "/".join(f"{g:+.3f}" for g in gaps)
            + f" at seeds {list(SEEDS)}; {elapsed:.0f}s")
