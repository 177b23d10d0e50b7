import itertools

import numpy as np
import pytest

from conftest import five_profiles, tiny_uniform_t1
from delaypbp import oracle
from delaypbp.dp import (cost_via_beliefs, expected_value, pbp_sweep,
                         solve_best_response, terminal_value,
                         verify_value_dominance)
from delaypbp.filtering import Belief, chained_beliefs
from delaypbp.strategies import (constant_profile, observation_following_profile,
                                 random_profile)
from test_oracle import truncate_to_t1, zero_cost_variant


class AgentMaps:
    """Per-time maps viewed as one agent's strategy."""

    def __init__(self, maps):
        self.maps = maps

    def action(self, k, t, r):
        return self.maps[t][r]


# --- terminal values ----------------------------------------------------------

def test_terminal_value_zero_cost(canon_2a):
    spec = zero_cost_variant(canon_2a)
    g = constant_profile(spec, 0)
    chain = chained_beliefs(spec, g, 0)
    for r, (b, _) in chain[spec.T].items():
        assert terminal_value(spec, 0, b) == 0.0


def test_terminal_value_point_mass(canon_2a):
    g = constant_profile(canon_2a, 0)
    chain = chained_beliefs(canon_2a, g, 0)
    (r, (b, _)) = next(iter(chain[canon_2a.T].items()))
    point = Belief(t=b.t, agent=b.agent, support=b.support,
                   probs=np.eye(len(b.probs))[3])
    x_star = b.support[3][0]
    assert terminal_value(canon_2a, 0, point) == canon_2a.terminal_cost[x_star]


def test_terminal_value_matches_oracle_expectation(canon_2a):
    g = observation_following_profile(canon_2a)
    chain = chained_beliefs(canon_2a, g, 0)
    t = canon_2a.T
    for r, (b, _) in chain[t].items():
        pmf = oracle.conditional_pmf(canon_2a, g, [("x", t)],
                                     oracle.realization_given(canon_2a, r), t)
        ref = sum(canon_2a.terminal_cost[x] * p for (x,), p in pmf.items())
        assert terminal_value(canon_2a, 0, b) == pytest.approx(ref, abs=1e-10)


# --- best response -------------------------------------------------------------

def test_best_response_single_stage_matches_enumeration(canon_2a):
    spec = truncate_to_t1(canon_2a)
    g = observation_following_profile(spec)
    for k in range(2):
        vtable, _ = solve_best_response(spec, k, g)
        bf_value, _ = oracle.brute_force_best_response(spec, k, g)
        assert expected_value(spec, k, vtable) == pytest.approx(bf_value, abs=1e-10)


def test_best_response_zero_costs(canon_2a):
    spec = zero_cost_variant(canon_2a)
    g = observation_following_profile(spec)
    vtable, maps = solve_best_response(spec, 0, g)
    for t in range(spec.T + 1):
        for entry in vtable.entries[t].values():
            assert entry.value == 0.0
            assert entry.best_action in (0, None)
    assert all(u == 0 for m in maps for u in m.values())


@pytest.mark.parametrize("agent", [0, 1])
def test_best_response_matches_brute_force(canon_2a, agent):
    opponents = [
        constant_profile(canon_2a, 0),
        constant_profile(canon_2a, 1),
        observation_following_profile(canon_2a),
    ]
    for g in opponents:
        vtable, maps = solve_best_response(canon_2a, agent, g)
        dp_value = expected_value(canon_2a, agent, vtable)
        bf_value, bf_maps = oracle.brute_force_best_response(canon_2a, agent, g)
        assert dp_value == pytest.approx(bf_value, abs=1e-10)
        g_dp = g.with_agent(agent, maps)
        g_bf = g.with_agent(agent, bf_maps)
        assert (oracle.enumerate_cost(canon_2a, g_dp)
                == pytest.approx(oracle.enumerate_cost(canon_2a, g_bf), abs=1e-10))


def test_best_response_consistency_with_cost(canon_2a):
    """Averaged time-0 value equals the belief-form cost of the extracted
    response played against the frozen opponents."""
    g = observation_following_profile(canon_2a)
    for k in range(2):
        vtable, maps = solve_best_response(canon_2a, k, g)
        g_br = g.with_agent(k, maps)
        assert expected_value(canon_2a, k, vtable) == pytest.approx(
            cost_via_beliefs(canon_2a, g_br, k), abs=1e-10)


def test_semi_separation_of_extracted_actions(canon_2a):
    """Realizations with identical (posterior, shared block, private block)
    share their extracted action. Identical triples can only repeat via
    numerically equal posteriors, so group and compare."""
    g = observation_following_profile(canon_2a)
    vtable, _ = solve_best_response(canon_2a, 0, g)
    for t in range(canon_2a.T):
        groups = {}
        for r, entry in vtable.entries[t].items():
            placed = False
            for key, (probs, actions) in groups.items():
                if key == (r.common, r.private) and \
                        np.max(np.abs(probs - entry.belief.probs)) <= 1e-10:
                    actions.append(entry.best_action)
                    placed = True
            if not placed:
                groups[(r.common, r.private)] = (entry.belief.probs,
                                                 [entry.best_action])
        for _, actions in groups.values():
            assert len(set(actions)) == 1


# --- payoff identity -----------------------------------------------------------

def test_cost_via_beliefs_zero(canon_2a):
    spec = zero_cost_variant(canon_2a)
    assert cost_via_beliefs(spec, constant_profile(spec, 1), 0) == 0.0


def test_cost_via_beliefs_uniform_single_stage_hand_sum():
    spec = tiny_uniform_t1()
    g = constant_profile(spec, 0)
    # uniform state and terminal transition: J = mean of c0[x][0][0] over x
    # plus mean terminal cost
    hand = 0.5 * (1.0 + 5.0) + 0.5 * (0.0 + 10.0)
    for k in range(2):
        assert cost_via_beliefs(spec, g, k) == pytest.approx(hand, abs=1e-12)
    g_follow = observation_following_profile(spec)
    # u^k = y^k uniform and independent of the state, so the stage term
    # averages the cost table over (x, u1, u2)
    hand = float(np.mean(spec.stage_cost[0])) + 5.0
    for k in range(2):
        assert cost_via_beliefs(spec, g_follow, k) == pytest.approx(hand, abs=1e-12)


def test_cost_via_beliefs_equals_enumeration(canon_2a, canon_2b, canon_1):
    for spec in (canon_2a, canon_2b, canon_1):
        for name, g in five_profiles(spec):
            ref = oracle.enumerate_cost(spec, g)
            for k in range(spec.K):
                assert cost_via_beliefs(spec, g, k) == pytest.approx(
                    ref, abs=1e-10), (name, k)


# --- best-response iteration ----------------------------------------------------

def test_sweep_zero_costs_converges_immediately(canon_2a):
    spec = zero_cost_variant(canon_2a)
    g, trace, converged = pbp_sweep(spec, constant_profile(spec, 0), 8)
    assert converged
    assert trace == [0.0] * spec.K


def test_sweep_canon_2a_certified_stationary(canon_2a):
    g0 = constant_profile(canon_2a, 0)
    g, trace, converged = pbp_sweep(canon_2a, g0, 32)
    assert converged
    assert len(trace) <= 5 * canon_2a.K
    assert all(trace[i + 1] <= trace[i] + 1e-12 for i in range(len(trace) - 1))
    report = oracle.verify_pbp(canon_2a, g)
    assert report.all_stationary
    assert trace[-1] == pytest.approx(report.cost, abs=1e-10)


def test_sweep_monotone_from_random_starts(canon_2b):
    for seed in (3, 5):
        g0 = random_profile(canon_2b, np.random.default_rng(seed))
        _, trace, converged = pbp_sweep(canon_2b, g0, 32)
        assert converged
        assert all(trace[i + 1] <= trace[i] + 1e-12 for i in range(len(trace) - 1))


def canon1_global_minimum(spec):
    """Independent exhaustive minimum for the single-agent instance:
    stage-0 and stage-1 maps enumerated, stage-2 optimized pointwise.
    Works directly on the kernel tables; shares no code with the package.
    """
    init = spec.init_dist
    Q = [spec.observation[t][0] for t in range(4)]
    S = spec.transition
    c = spec.stage_cost
    cT = spec.terminal_cost

    best = None
    for m0 in itertools.product(range(2), repeat=2):        # y0 -> u0
        for m1 in itertools.product(range(2), repeat=4):    # (y0, y1) -> u1
            # mass over (x0,y0,x1,y1,x2,y2) trajectories
            value = 0.0
            tails = {}
            for x0, y0 in itertools.product(range(2), repeat=2):
                p0 = init[x0] * Q[0][x0, y0]
                u0 = m0[y0]
                for x1, y1 in itertools.product(range(2), repeat=2):
                    p1 = p0 * S[0][x0, u0, x1] * Q[1][x1, y1]
                    u1 = m1[2 * y0 + y1]
                    for x2, y2 in itertools.product(range(2), repeat=2):
                        p2 = p1 * S[1][x1, u1, x2] * Q[2][x2, y2]
                        if p2 <= 0.0:
                            continue
                        value += p2 * (c[0][x0, u0] + c[1][x1, u1])
                        key = (y0, y1, y2)
                        for u2 in range(2):
                            tail = p2 * (c[2][x2, u2]
                                         + sum(S[2][x2, u2, x3] * cT[x3]
                                               for x3 in range(2)))
                            bucket = tails.setdefault(key, [0.0, 0.0])
                            bucket[u2] += tail
            value += sum(min(b) for b in tails.values())
            best = value if best is None else min(best, value)
    return best


def test_single_agent_sweep_is_globally_optimal(canon_1):
    reference = canon1_global_minimum(canon_1)
    g, trace, converged = pbp_sweep(canon_1, constant_profile(canon_1, 0), 32)
    assert converged
    assert trace[-1] == pytest.approx(reference, abs=1e-10)
    vtable, _ = solve_best_response(canon_1, 0, constant_profile(canon_1, 0))
    assert expected_value(canon_1, 0, vtable) == pytest.approx(reference, abs=1e-10)


# --- dominance -------------------------------------------------------------------

def test_dominance_tight_at_best_response(canon_2a):
    g = observation_following_profile(canon_2a)
    vtable, maps = solve_best_response(canon_2a, 0, g)
    report = verify_value_dominance(canon_2a, 0, g, vtable, AgentMaps(maps))
    assert report.violations == ()
    assert report.max_abs_gap <= 1e-10
    assert len(report.entries) >= 40


def test_dominance_against_constant_alternative(canon_2a):
    g = observation_following_profile(canon_2a)
    vtable, _ = solve_best_response(canon_2a, 0, g)
    alt = AgentMaps(constant_profile(canon_2a, 1).maps[0])
    report = verify_value_dominance(canon_2a, 0, g, vtable, alt)
    assert report.violations == ()
    # the costs distinguish actions somewhere, so dominance is strict there
    assert any(e.alt_value > e.table_value + 1e-6 for e in report.entries)


def test_incomplete_opponent_strategy_is_an_error(canon_2a):
    from delaypbp.errors import IncompleteStrategyError
    from delaypbp.strategies import StrategyProfile

    g = observation_following_profile(canon_2a)
    # drop agent 1's entire t=1 map: the expansion needs it
    gutted = StrategyProfile(maps=(g.maps[0], (g.maps[1][0], {})))
    with pytest.raises(IncompleteStrategyError, match="incomplete opponent strategy"):
        solve_best_response(canon_2a, 0, gutted)


def test_dominance_zero_costs(canon_2a):
    spec = zero_cost_variant(canon_2a)
    g = observation_following_profile(spec)
    vtable, _ = solve_best_response(spec, 0, g)
    alt = AgentMaps(constant_profile(spec, 1).maps[0])
    report = verify_value_dominance(spec, 0, g, vtable, alt)
    assert report.violations == ()
    assert report.max_abs_gap == 0.0
