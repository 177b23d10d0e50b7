"""Private posterior beliefs over the extended state.

Under delayed sharing, agent k cannot act on the plant state alone: the
other agents' recent private data steers their actions, so the object to
estimate is the extended state (x_t, lambda_t^{-k}) -- plant state plus
everyone else's private block. This module computes that posterior three
ways:

  * a one-step recursion (`belief_update`), which conditions on agent k's
    new observation, its own action, and the symbols newly revealed into
    the shared block;
  * a definition-level Bayes computation (`bayes_oracle_belief`) that
    enumerates joint trajectories and never touches the recursion;
  * the textbook filter for the single-agent case
    (`classical_filter_update`), which the recursion must reproduce.

Beliefs are dense vectors over the full (state x other-private) grid in
canonical order; zero-probability conditioning raises UnreachableError
rather than returning a non-distribution.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import UnreachableError
from .info import (CommonInfo, InfoRealization, JointHistory, OtherPrivate,
                   PrivateInfo, advance_common, advance_other, other_agents,
                   other_private_space, restrict_common, shared_prefix_len,
                   shift_private, split_history)
from .model import ModelSpec

# Probability mass a returned belief may be off from 1.
BELIEF_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Belief:
    """Posterior over (state, other agents' private block) at one time.

    support is the full canonical grid (state-major, then the canonical
    order of OtherPrivate values); probs is aligned with it and sums to 1.
    """

    t: int
    agent: int
    support: tuple[tuple[int, OtherPrivate], ...]
    probs: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.probs.setflags(write=False)
        self._index.update({pair: i for i, pair in enumerate(self.support)})

    def prob(self, x: int, lam: OtherPrivate) -> float:
        return float(self.probs[self._index[(x, lam)]])

    def x_marginal(self, state_size: int) -> np.ndarray:
        out = np.zeros(state_size)
        for (x, _), p in zip(self.support, self.probs):
            out[x] += p
        return out


def belief_grid(spec: ModelSpec, k: int, t: int) -> tuple[tuple[int, OtherPrivate], ...]:
    lams = other_private_space(spec, k, t)
    return tuple((x, lam) for x in range(spec.state_size) for lam in lams)


def _belief_from_matrix(spec: ModelSpec, k: int, t: int,
                        grid, mat: np.ndarray) -> tuple[Belief, float]:
    total = float(mat.sum())
    if total <= 0.0:
        raise UnreachableError("zero-probability conditioning event")
    return Belief(t=t, agent=k, support=grid, probs=mat.reshape(-1) / total), total


def max_abs_gap(a: Belief, b: Belief) -> float:
    if a.support != b.support:
        raise ValueError("beliefs live on different grids")
    return float(np.max(np.abs(a.probs - b.probs))) if len(a.probs) else 0.0


def empty_common(spec: ModelSpec, t: int = 0) -> CommonInfo:
    return CommonInfo(t=t, n=spec.n,
                      obs=tuple(() for _ in range(spec.K)),
                      acts=tuple(() for _ in range(spec.K)))


def initial_realization(spec: ModelSpec, k: int, y0k: int) -> InfoRealization:
    return InfoRealization(
        common=empty_common(spec),
        private=PrivateInfo(t=0, n=spec.n, agent=k, obs=(y0k,), acts=()))


def initial_step(spec: ModelSpec, k: int, y0k: int) -> tuple[Belief, float]:
    """Time-0 belief given agent k's first observation, plus that
    observation's marginal probability."""
    lams = other_private_space(spec, k, 0)
    others = other_agents(spec.K, k)
    mat = np.zeros((spec.state_size, len(lams)))
    for x in range(spec.state_size):
        base = spec.init_dist[x] * spec.observation[0][k][x, y0k]
        if base <= 0.0:
            continue
        for li, lam in enumerate(lams):
            w = base
            for pos, j in enumerate(others):
                w *= spec.observation[0][j][x, lam.obs[pos][0]]
            mat[x, li] = w
    try:
        return _belief_from_matrix(spec, k, 0, belief_grid(spec, k, 0), mat)
    except UnreachableError:
        raise UnreachableError(f"unreachable observation y0={y0k} for agent {k}") from None


def initial_belief(spec: ModelSpec, k: int, y0k: int) -> Belief:
    """Posterior over (x_0, other agents' first observations) given y0k."""
    return initial_step(spec, k, y0k)[0]


def other_actions(spec: ModelSpec, k: int, t: int, delta_t: CommonInfo,
                  lam: OtherPrivate, g_minus_k) -> tuple[int, ...]:
    """Evaluate every other agent's strategy at (delta_t, its private block)."""
    out = []
    for pos, j in enumerate(other_agents(spec.K, k)):
        pj = PrivateInfo(t=t, n=spec.n, agent=j, obs=lam.obs[pos], acts=lam.acts[pos])
        out.append(g_minus_k.action(j, t, InfoRealization(common=delta_t, private=pj)))
    return tuple(out)


def belief_step(spec: ModelSpec, k: int, t: int, xi: Belief, delta_next: CommonInfo,
                g_minus_k, u_t_k: int, y_next_k: int) -> tuple[Belief, float]:
    """One filter step; returns the time-(t+1) belief and the predictive
    probability of the conditioning data.

    xi is the belief at some realization (delta_t, lambda_t^k); delta_next
    is the time-(t+1) shared block, whose newest entries are the symbols
    the other agents just revealed. The returned belief conditions on
    (delta_next, u_t_k, y_next_k) jointly: support entries of xi that
    contradict the revealed symbols are excluded, the rest are pushed
    through the transition kernel under the joint action (u_t_k inserted at
    slot k, the others read from g_minus_k) and reweighted by every agent's
    time-(t+1) observation kernel. The weight is the probability of
    (revealed symbols, y_next_k) given (xi, u_t_k), i.e. the step's
    normalizer; a zero normalizer raises UnreachableError.
    """
    if delta_next.t != t + 1:
        raise ValueError(f"delta_next is at t={delta_next.t}, expected {t + 1}")
    n = spec.n
    others = other_agents(spec.K, k)
    delta_t = restrict_common(delta_next)
    promote = shared_prefix_len(n, t + 1) > shared_prefix_len(n, t)
    revealed = None
    if promote:
        revealed = [(delta_next.obs[j][-1], delta_next.acts[j][-1]) for j in others]
        if n == 1 and delta_next.acts[k][-1] != u_t_k:
            raise ValueError("delta_next promotes a different agent-k action than u_t_k")

    lams_next = other_private_space(spec, k, t + 1)
    lam_index = {lam: i for i, lam in enumerate(lams_next)}
    mat = np.zeros((spec.state_size, len(lams_next)))
    q_k = spec.observation[t + 1][k]
    obs_ranges = [range(spec.obs_sizes[j]) for j in others]

    for (x_t, lam), p in zip(xi.support, xi.probs):
        if p <= 0.0:
            continue
        if promote:
            ok = True
            for pos in range(len(others)):
                y_rev, u_rev = revealed[pos]
                if lam.obs[pos][0] != y_rev:
                    ok = False
                    break
                if n >= 2 and lam.acts[pos][0] != u_rev:
                    ok = False
                    break
            if not ok:
                continue
        u_other = other_actions(spec, k, t, delta_t, lam, g_minus_k)
        if promote and n == 1:
            # With one-step sharing the revealed actions are the current
            # ones; they must match what the strategies actually play.
            if any(u_other[pos] != revealed[pos][1] for pos in range(len(others))):
                continue
        u_full = list(u_other)
        u_full.insert(k, u_t_k)
        s_row = spec.transition[t][(x_t, *u_full)]
        for x1 in range(spec.state_size):
            w = p * float(s_row[x1]) * float(q_k[x1, y_next_k])
            if w <= 0.0:
                continue
            for ys in itertools.product(*obs_ranges):
                wy = w
                for pos, j in enumerate(others):
                    wy *= spec.observation[t + 1][j][x1, ys[pos]]
                if wy <= 0.0:
                    continue
                lam1 = advance_other(lam, ys, u_other)
                mat[x1, lam_index[lam1]] += wy
    try:
        return _belief_from_matrix(spec, k, t + 1, belief_grid(spec, k, t + 1), mat)
    except UnreachableError:
        raise UnreachableError(
            f"unreachable continuation (u={u_t_k}, y_next={y_next_k}) for agent {k} at t={t}"
        ) from None


def belief_update(spec: ModelSpec, k: int, t: int, xi: Belief, delta_next: CommonInfo,
                  g_minus_k, u_t_k: int, y_next_k: int) -> Belief:
    """The time-(t+1) posterior; see belief_step for the contract."""
    return belief_step(spec, k, t, xi, delta_next, g_minus_k, u_t_k, y_next_k)[0]


def next_common_candidates(spec: ModelSpec, k: int, r: InfoRealization, xi: Belief,
                           g_minus_k, u_t_k: int) -> list[CommonInfo]:
    """The time-(t+1) shared blocks that can follow realization r.

    Each positive-mass support entry of xi fixes one candidate: the other
    agents' promoted symbols are read from (or, for n=1, computed from the
    strategies on) that entry, and agent k's own promoted symbols come from
    r and u_t_k. Deduplicated, canonically ordered.
    """
    c, p = r.common, r.private
    t, n = c.t, c.n
    if shared_prefix_len(n, t + 1) == shared_prefix_len(n, t):
        return [advance_common(c, (), ())]
    others = other_agents(spec.K, k)
    out = set()
    for (x, lam), mass in zip(xi.support, xi.probs):
        if mass <= 0.0:
            continue
        promoted_obs = [0] * spec.K
        promoted_acts = [0] * spec.K
        promoted_obs[k] = p.obs[0]
        promoted_acts[k] = p.acts[0] if n >= 2 else u_t_k
        u_other = None
        for pos, j in enumerate(others):
            promoted_obs[j] = lam.obs[pos][0]
            if n >= 2:
                promoted_acts[j] = lam.acts[pos][0]
            else:
                if u_other is None:
                    u_other = other_actions(spec, k, t, c, lam, g_minus_k)
                promoted_acts[j] = u_other[pos]
        out.add(advance_common(c, tuple(promoted_obs), tuple(promoted_acts)))
    return sorted(out, key=lambda cc: (cc.obs, cc.acts))


def chained_beliefs(spec: ModelSpec, g_full, k: int
                    ) -> list[dict[InfoRealization, tuple[Belief, float]]]:
    """Run the recursion along every realization reachable under g_full.

    Returns, per time t = 0..T, a map realization -> (belief, probability
    of the realization). Probabilities chain the step normalizers, so this
    path never enumerates trajectories.
    """
    out: list[dict[InfoRealization, tuple[Belief, float]]] = [dict() for _ in range(spec.T + 1)]
    for y0 in range(spec.obs_sizes[k]):
        try:
            b, w = initial_step(spec, k, y0)
        except UnreachableError:
            continue
        out[0][initial_realization(spec, k, y0)] = (b, w)
    for t in range(spec.T):
        for r, (xi, pr) in out[t].items():
            u = g_full.action(k, t, r)
            for delta_next in next_common_candidates(spec, k, r, xi, g_full, u):
                for y1 in range(spec.obs_sizes[k]):
                    try:
                        b1, w = belief_step(spec, k, t, xi, delta_next, g_full, u, y1)
                    except UnreachableError:
                        continue
                    r1 = InfoRealization(common=delta_next,
                                         private=shift_private(r.private, y1, u))
                    if r1 in out[t + 1]:
                        raise AssertionError("realization reached twice; predecessor not unique")
                    out[t + 1][r1] = (b1, pr * w)
    return out


# ---------------------------------------------------------------------------
# Definition-level Bayes oracle: trajectory enumeration, no recursion.
# ---------------------------------------------------------------------------

def bayes_oracle_belief(spec: ModelSpec, g_full, k: int, info: InfoRealization) -> Belief:
    """Posterior over (x_t, lambda_t^{-k}) given the realization, computed
    from the definition.

    Every joint trajectory consistent with the realization is enumerated:
    agent k's observations and actions are clamped to the realization (its
    own strategy is never read), the other agents' shared prefixes are
    clamped, their recent observations range freely, and their actions are
    produced by g_full and checked against the clamped prefixes. Masses
    accumulate on (x_t, lambda_t^{-k}) and are normalized.
    """
    info.validate()
    t, n = info.t, spec.n
    own_obs = info.own_observations()
    own_acts = info.own_actions()
    cut = shared_prefix_len(n, t)
    others = other_agents(spec.K, k)

    lams = other_private_space(spec, k, t)
    lam_index = {lam: i for i, lam in enumerate(lams)}
    mat = np.zeros((spec.state_size, len(lams)))

    def free_obs_choices(s: int, j: int):
        if s < cut:
            return (info.common.obs[j][s],)
        return tuple(range(spec.obs_sizes[j]))

    def walk(s: int, x: int, hist: JointHistory, mass: float) -> None:
        if s == t:
            _, _, lam = split_history(hist, k, n)
            mat[x, lam_index[lam]] += mass
            return
        acts = [0] * spec.K
        acts[k] = own_acts[s]
        for j in others:
            cj, pj, _ = split_history(hist, j, n)
            u_j = g_full.action(j, s, InfoRealization(common=cj, private=pj))
            if s < cut and info.common.acts[j][s] != u_j:
                return  # contradicts the shared prefix: zero mass
            acts[j] = u_j
        for x1 in range(spec.state_size):
            p_x = float(spec.transition[s][(x, *acts, x1)])
            if p_x <= 0.0:
                continue
            p_k = float(spec.observation[s + 1][k][x1, own_obs[s + 1]])
            if p_k <= 0.0:
                continue
            for ys in itertools.product(*(free_obs_choices(s + 1, j) for j in others)):
                p_y = 1.0
                for pos, j in enumerate(others):
                    p_y *= spec.observation[s + 1][j][x1, ys[pos]]
                if p_y <= 0.0:
                    continue
                obs1 = list(hist.obs)
                acts1 = list(hist.acts)
                obs1[k] = obs1[k] + (own_obs[s + 1],)
                for pos, j in enumerate(others):
                    obs1[j] = obs1[j] + (ys[pos],)
                for j in range(spec.K):
                    acts1[j] = acts1[j] + (acts[j],)
                walk(s + 1, x1, JointHistory(t=s + 1, obs=tuple(obs1), acts=tuple(acts1)),
                     mass * p_x * p_k * p_y)

    for x0 in range(spec.state_size):
        p0 = float(spec.init_dist[x0]) * float(spec.observation[0][k][x0, own_obs[0]])
        if p0 <= 0.0:
            continue
        for ys in itertools.product(*(free_obs_choices(0, j) for j in others)):
            p_y = 1.0
            for pos, j in enumerate(others):
                p_y *= spec.observation[0][j][x0, ys[pos]]
            if p_y <= 0.0:
                continue
            obs0 = [()] * spec.K
            obs0[k] = (own_obs[0],)
            for pos, j in enumerate(others):
                obs0[j] = (ys[pos],)
            walk(0, x0, JointHistory(t=0, obs=tuple(obs0),
                                     acts=tuple(() for _ in range(spec.K))),
                 p0 * p_y)

    try:
        return _belief_from_matrix(spec, k, t, belief_grid(spec, k, t), mat)[0]
    except UnreachableError:
        raise UnreachableError(
            f"unreachable realization for agent {k} at t={t}") from None


# ---------------------------------------------------------------------------
# Single-agent textbook filter.
# ---------------------------------------------------------------------------

def classical_filter_update(spec: ModelSpec, pi: np.ndarray, u: int, y_next: int,
                            t: int) -> np.ndarray:
    """One step of the standard partially-observed filter (K must be 1):
    predict through the transition kernel under action u, correct by the
    time-(t+1) observation likelihood, normalize."""
    if spec.K != 1:
        raise ValueError("classical_filter_update requires a single-agent model")
    pred = np.zeros(spec.state_size)
    for x1 in range(spec.state_size):
        acc = 0.0
        for x in range(spec.state_size):
            acc += float(spec.transition[t][(x, u, x1)]) * float(pi[x])
        pred[x1] = acc * float(spec.observation[t + 1][0][x1, y_next])
    total = float(pred.sum())
    if total <= 0.0:
        raise UnreachableError(f"unreachable observation y_next={y_next} at t={t}")
    return pred / total
