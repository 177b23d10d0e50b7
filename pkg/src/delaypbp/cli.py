"""Batch front end.

One invocation runs one command against one model (a canonical instance
name or a JSON model file), writes a machine-readable JSON report per
command under the output directory, and prints aligned tables to stdout.
Report bodies carry no timestamps, so identical inputs produce
byte-identical files.

Exit status: 0 when every asserted tolerance passes, 1 on a tolerance
failure, 2 on a malformed config/model/strategy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import dp, falsify, oracle
from .errors import InstanceTooLargeError, ModelFormatError
from .filtering import bayes_oracle_belief, chained_beliefs, max_abs_gap
from .info import other_private_key, realization_key, sort_key
from .model import (CANONICAL_NAMES, ModelSpec, resolve_model,
                    uniform_observation_variant, validate_model)
from .strategies import (StrategyProfile, constant_profile, load_profile,
                         observation_following_profile, profile_to_dict,
                         random_profile)

COMMANDS = ("validate", "filter", "solve", "pbp", "verify", "falsify", "all")

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2

# Seeds for the deterministic "random" alternative strategies in reports.
REPORT_SEEDS = (20240817, 20240818)


@dataclass
class RunConfig:
    command: str
    model: str
    agent: int = 0
    strategy: str | None = None
    out: str = "reports"
    tol_compare: float = 1e-10
    tol_improve: float = 1e-12
    max_rounds: int = 32

    def validate(self) -> list[str]:
        problems = []
        if self.command not in COMMANDS:
            problems.append(f"unknown command {self.command!r}")
        if self.agent < 0:
            problems.append("agent index must be >= 0")
        if self.strategy is not None and not os.path.exists(self.strategy):
            problems.append(f"strategy file {self.strategy!r} does not exist")
        if self.tol_compare <= 0 or self.tol_improve <= 0:
            problems.append("tolerance overrides must be positive")
        if self.max_rounds < 1:
            problems.append("max-rounds must be >= 1")
        return problems


def render_table(headers: list[str], rows: list[list]) -> str:
    cells = [[str(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    rule = "  ".join("-" * w for w in widths)
    body = [
        "  ".join(c.ljust(w) for c, w in zip(row, widths))
        for row in cells
    ]
    return "\n".join([line, rule, *body])


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _belief_rows(belief) -> list[list]:
    return [[f"x={x}|{other_private_key(lam)}", float(p)]
            for (x, lam), p in zip(belief.support, belief.probs)]


def _default_profile(spec: ModelSpec, command: str) -> StrategyProfile:
    # The sweep starts from the all-0 profile by convention; report
    # commands default to the observation-following profile, which keeps
    # every channel informative.
    if command == "pbp":
        return constant_profile(spec, 0)
    return observation_following_profile(spec)


def _profile_for(spec: ModelSpec, config: RunConfig, command: str) -> StrategyProfile:
    if config.strategy is not None:
        return load_profile(spec, config.strategy)
    return _default_profile(spec, command)


# ---------------------------------------------------------------------------
# Command implementations. Each returns (report dict, pass flag).
# ---------------------------------------------------------------------------

def cmd_validate(spec: ModelSpec, name: str, config: RunConfig):
    violations = validate_model(spec)
    doc = {
        "command": "validate",
        "model": name,
        "results": [{"check": "model-invariants", "violations": violations}],
        "gaps": [],
        "tolerances": {"compare": config.tol_compare, "improve": config.tol_improve},
        "pass": not violations,
    }
    rows = [[v] for v in violations] or [["(none)"]]
    print(f"== validate {name}")
    print(render_table(["violation"], rows))
    return doc, not violations


def cmd_filter(spec: ModelSpec, name: str, config: RunConfig):
    k = config.agent
    g = _profile_for(spec, config, "filter")
    chain = chained_beliefs(spec, g, k)
    results, gaps = [], []
    ok = True
    for t in range(spec.T + 1):
        for r in sorted(chain[t], key=sort_key):
            belief, prob = chain[t][r]
            ref = bayes_oracle_belief(spec, g, k, r)
            gap = max_abs_gap(belief, ref)
            ok = ok and gap <= config.tol_compare
            where = f"t={t} {realization_key(r)}"
            gaps.append({"where": where, "gap": gap})
            results.append({
                "t": t,
                "realization": realization_key(r),
                "prob": prob,
                "belief": _belief_rows(belief),
                "oracle_belief": _belief_rows(ref),
                "gap": gap,
            })
    doc = {
        "command": "filter",
        "model": name,
        "agent": k,
        "results": results,
        "gaps": gaps,
        "tolerances": {"compare": config.tol_compare, "improve": config.tol_improve},
        "pass": ok,
    }
    print(f"== filter {name} agent={k} (recursion vs oracle)")
    print(render_table(
        ["t", "realization", "prob", "gap"],
        [[e["t"], e["realization"], _fmt(e["prob"]), _fmt(e["gap"])] for e in results]))
    return doc, ok


def cmd_solve(spec: ModelSpec, name: str, config: RunConfig):
    k = config.agent
    g = _profile_for(spec, config, "solve")
    vtable, g_maps = dp.solve_best_response(spec, k, g)
    g_br = g.with_agent(k, g_maps)
    expected = dp.expected_value(spec, k, vtable)
    br_cost = dp.cost_via_beliefs(spec, g_br, k)
    consistency_gap = abs(expected - br_cost)
    gaps = [{"where": "initial-value vs best-response cost", "gap": consistency_gap}]
    ok = consistency_gap <= config.tol_compare

    bf_entry = None
    try:
        bf_value, _ = oracle.brute_force_best_response(spec, k, g)
        bf_gap = abs(expected - bf_value)
        gaps.append({"where": "initial-value vs brute force", "gap": bf_gap})
        ok = ok and bf_gap <= config.tol_compare
        bf_entry = {"brute_force_value": bf_value, "gap": bf_gap}
    except InstanceTooLargeError as exc:
        bf_entry = {"skipped": str(exc)}

    table_rows = []
    for t in range(spec.T + 1):
        for r in sorted(vtable.entries[t], key=sort_key):
            e = vtable.entries[t][r]
            table_rows.append({
                "t": t,
                "realization": realization_key(r),
                "value": e.value,
                "best_action": e.best_action,
            })
    doc = {
        "command": "solve",
        "model": name,
        "agent": k,
        "results": [{"expected_value": expected,
                     "best_response_cost": br_cost,
                     "brute_force": bf_entry,
                     "table": table_rows,
                     "best_response": profile_to_dict(spec, g_br)["agents"][k]}],
        "gaps": gaps,
        "tolerances": {"compare": config.tol_compare, "improve": config.tol_improve},
        "pass": ok,
    }
    print(f"== solve {name} agent={k}")
    print(render_table(
        ["t", "realization", "value", "best_action"],
        [[e["t"], e["realization"], _fmt(e["value"]), e["best_action"]] for e in table_rows]))
    print(f"expected initial value: {_fmt(expected)}")
    return doc, ok


def cmd_pbp(spec: ModelSpec, name: str, config: RunConfig):
    g0 = _profile_for(spec, config, "pbp")
    g_final, trace, converged = dp.pbp_sweep(spec, g0, config.max_rounds,
                                             improve_tol=config.tol_improve)
    monotone = all(trace[i + 1] <= trace[i] + config.tol_improve
                   for i in range(len(trace) - 1))
    ok = converged and monotone
    certification = None
    try:
        report = oracle.verify_pbp(spec, g_final, tol=config.tol_compare)
        certification = {
            "cost": report.cost,
            "agents": [{"agent": a.agent,
                        "best_response_value": a.best_response_value,
                        "gap": a.gap,
                        "stationary": a.stationary} for a in report.agents],
            "all_stationary": report.all_stationary,
        }
        ok = ok and report.all_stationary
    except InstanceTooLargeError as exc:
        certification = {"skipped": str(exc)}
    doc = {
        "command": "pbp",
        "model": name,
        "results": [{"trace": trace,
                     "converged": converged,
                     "monotone": monotone,
                     "certification": certification,
                     "final_profile": profile_to_dict(spec, g_final)}],
        "gaps": [],
        "tolerances": {"compare": config.tol_compare, "improve": config.tol_improve},
        "pass": ok,
    }
    print(f"== pbp {name}")
    print(render_table(["replacement", "cost"],
                       [[i, _fmt(c)] for i, c in enumerate(trace)]))
    print(f"converged: {converged}  monotone: {monotone}")
    if "agents" in (certification or {}):
        for a in certification["agents"]:
            print(f"agent {a['agent']}: gap {_fmt(a['gap'])} stationary {a['stationary']}")
    return doc, ok


def _alternative_strategies(spec: ModelSpec, k: int, g_maps):
    """Named alternative agent-k strategies for the dominance report."""
    alts = [("constant-0", constant_profile(spec, 0).maps[k])]
    if spec.act_sizes[k] > 1:
        alts.append(("constant-1", constant_profile(spec, 1).maps[k]))
    alts.append(("observation-following", observation_following_profile(spec).maps[k]))
    for seed in REPORT_SEEDS:
        rng = np.random.default_rng(seed)
        alts.append((f"random-{seed}", random_profile(spec, rng).maps[k]))
    alts.append(("extracted-best-response", tuple(dict(m) for m in g_maps)))
    return alts


class _AgentMaps:
    """Adapter exposing per-time maps as a strategy for one agent."""

    def __init__(self, maps):
        self.maps = maps

    def action(self, k, t, r):
        return self.maps[t][r]


def cmd_verify(spec: ModelSpec, name: str, config: RunConfig):
    k = config.agent
    g = _profile_for(spec, config, "verify")
    vtable, g_maps = dp.solve_best_response(spec, k, g)
    results, gaps = [], []
    ok = True
    for label, maps in _alternative_strategies(spec, k, g_maps):
        alt = _AgentMaps(maps)
        report = dp.verify_value_dominance(spec, k, g, vtable, alt,
                                           tol=config.tol_compare)
        n_viol = len(report.violations)
        ok = ok and n_viol == 0
        entry = {
            "alternative": label,
            "checked": len(report.entries),
            "violations": [{"t": e.t, "realization": e.key,
                            "table": e.table_value, "alt": e.alt_value}
                           for e in report.violations],
        }
        if label == "extracted-best-response":
            entry["equality_gap"] = report.max_abs_gap
            gaps.append({"where": "best-response equality", "gap": report.max_abs_gap})
            ok = ok and report.max_abs_gap <= config.tol_compare
        results.append(entry)
    doc = {
        "command": "verify",
        "model": name,
        "agent": k,
        "results": results,
        "gaps": gaps,
        "tolerances": {"compare": config.tol_compare, "improve": config.tol_improve},
        "pass": ok,
    }
    print(f"== verify {name} agent={k} (value dominance)")
    print(render_table(
        ["alternative", "checked", "violations"],
        [[e["alternative"], e["checked"], len(e["violations"])] for e in results]))
    return doc, ok


def cmd_falsify(spec: ModelSpec, name: str, config: RunConfig):
    k = config.agent
    g = _profile_for(spec, config, "falsify")
    t_check = spec.T - 1
    results = []
    ok = True

    ci = falsify.check_conditional_independence(spec, g, k, t_check)
    results.append({"check": "conditional-independence", "informational": True,
                    "t": t_check, "report": ci.to_dict()})

    ci_uniform = falsify.check_conditional_independence(
        uniform_observation_variant(spec), g, k, t_check)
    uniform_ok = ci_uniform.max_gap <= 1e-12
    ok = ok and uniform_ok
    results.append({"check": "conditional-independence-uniform-obs",
                    "tolerance": 1e-12, "pass": uniform_ok,
                    "report": ci_uniform.to_dict()})

    base = _default_profile(spec, "falsify")
    pairs = [
        ("constant-0 vs constant-1",
         constant_profile(spec, 0),
         constant_profile(spec, 0).with_agent(
             k, constant_profile(spec, min(1, spec.act_sizes[k] - 1)).maps[k])),
        ("observation-following vs constant-0",
         base, base.with_agent(k, constant_profile(spec, 0).maps[k])),
        ("observation-following vs random",
         base, base.with_agent(
             k, random_profile(spec, np.random.default_rng(REPORT_SEEDS[0])).maps[k])),
    ]
    for label, g_a, g_b in pairs:
        rep = falsify.check_policy_independence(spec, g_a, g_b, k)
        pair_ok = rep.max_gap == 0.0
        ok = ok and pair_ok
        results.append({"check": "policy-independence", "pair": label,
                        "tolerance": 0.0, "pass": pair_ok, "report": rep.to_dict()})

    markov = falsify.check_conditional_markov(spec, g, k, tol=config.tol_compare)
    markov_ok = markov.max_gap <= config.tol_compare
    ok = ok and markov_ok
    results.append({"check": "conditional-markov", "tolerance": config.tol_compare,
                    "pass": markov_ok, "report": markov.to_dict()})

    if spec.K == 1:
        k1 = falsify.check_k1_reduction(spec)
        k1_ok = k1.max_gap <= 1e-12
        ok = ok and k1_ok
        results.append({"check": "single-agent-reduction", "tolerance": 1e-12,
                        "pass": k1_ok, "report": k1.to_dict()})
    else:
        results.append({"check": "single-agent-reduction", "skipped": "K > 1"})

    payoff = falsify.check_payoff_identity(spec, g)
    payoff_ok = payoff.max_gap <= config.tol_compare
    ok = ok and payoff_ok
    results.append({"check": "payoff-identity", "tolerance": config.tol_compare,
                    "pass": payoff_ok, "report": payoff.to_dict()})

    doc = {
        "command": "falsify",
        "model": name,
        "agent": k,
        "results": results,
        "gaps": [{"where": e["check"], "gap": e["report"]["max_gap"]}
                 for e in results if "report" in e],
        "tolerances": {"compare": config.tol_compare, "improve": config.tol_improve},
        "pass": ok,
    }
    print(f"== falsify {name} agent={k}")
    rows = []
    for e in results:
        if "report" in e:
            rows.append([e["check"], _fmt(e["report"]["max_gap"]),
                         e.get("pass", "(info)"), e["report"]["witness"] or ""])
        else:
            rows.append([e["check"], "-", "skipped", e.get("skipped", "")])
    print(render_table(["check", "max_gap", "pass", "witness"], rows))
    return doc, ok


_COMMAND_FNS = {
    "validate": cmd_validate,
    "filter": cmd_filter,
    "solve": cmd_solve,
    "pbp": cmd_pbp,
    "verify": cmd_verify,
    "falsify": cmd_falsify,
}


def _jsonable(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_report(out_dir: str, filename: str, doc: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=_jsonable)
        fh.write("\n")


def run(config: RunConfig) -> int:
    """Execute one command; write reports; return the exit status."""
    problems = config.validate()
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if config.command == "all":
            all_ok = True
            summary = []
            for inst in CANONICAL_NAMES:
                name, spec = resolve_model(inst)
                for command in ("validate", "filter", "solve", "pbp", "verify", "falsify"):
                    doc, ok = _COMMAND_FNS[command](spec, name, config)
                    _write_report(config.out, f"{command}_{name}.json", doc)
                    summary.append({"model": name, "command": command, "pass": ok})
                    all_ok = all_ok and ok
            _write_report(config.out, "all_summary.json", {
                "command": "all",
                "model": "canonical-instances",
                "results": summary,
                "gaps": [],
                "tolerances": {"compare": config.tol_compare,
                               "improve": config.tol_improve},
                "pass": all_ok,
            })
            print(f"== all: pass={all_ok}")
            return EXIT_OK if all_ok else EXIT_TOLERANCE

        name, spec = resolve_model(config.model)
        if config.agent >= spec.K:
            print(f"error: agent {config.agent} out of range for K={spec.K}",
                  file=sys.stderr)
            return EXIT_CONFIG
        doc, ok = _COMMAND_FNS[config.command](spec, name, config)
        _write_report(config.out, f"{config.command}_{name}.json", doc)
        return EXIT_OK if ok else EXIT_TOLERANCE
    except (ModelFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def parse_args(argv=None) -> RunConfig:
    parser = argparse.ArgumentParser(
        prog="delaypbp",
        description="Exact solver and checker for finite delayed-sharing team problems.")
    parser.add_argument("--command", required=True, choices=COMMANDS)
    parser.add_argument("--model", default="CANON-2A",
                        help="canonical instance name or model JSON path")
    parser.add_argument("--agent", type=int, default=0,
                        help="agent index (0-based) where applicable")
    parser.add_argument("--strategy", default=None,
                        help="strategy JSON path (defaults: all-0 for pbp, "
                             "observation-following otherwise)")
    parser.add_argument("--out", default="reports", help="report output directory")
    parser.add_argument("--tol-compare", type=float, default=1e-10)
    parser.add_argument("--tol-improve", type=float, default=1e-12)
    parser.add_argument("--max-rounds", type=int, default=32)
    ns = parser.parse_args(argv)
    return RunConfig(command=ns.command, model=ns.model, agent=ns.agent,
                     strategy=ns.strategy, out=ns.out,
                     tol_compare=ns.tol_compare, tol_improve=ns.tol_improve,
                     max_rounds=ns.max_rounds)


def main(argv=None) -> int:
    return run(parse_args(argv))
