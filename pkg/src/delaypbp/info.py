"""The n-step delayed-sharing information pattern.

At time t each agent k knows two blocks: the shared block (every agent's
observations and actions up to time t-n) and its private block (its own
last n observations and last n-1 actions). This module houses the split of
a joint history into those blocks, the one-step advance of the blocks, and
enumeration of the realizations that can occur with positive probability.

Index windows, 0-based, for delay n at time t:
  shared, per agent:  obs 0..t-n, acts 0..t-n          (empty while t < n)
  private, agent k:   obs max(0, t-n+1)..t, acts max(0, t-n+1)..t-1

When the clock moves t -> t+1 the time-(t-n+1) observation and action of
every agent leave the private blocks and join the shared block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import ModelSpec

IntSeq = tuple[int, ...]


def private_obs_len(n: int, t: int) -> int:
    return min(n, t + 1)


def private_act_len(n: int, t: int) -> int:
    return min(n - 1, t)


def shared_prefix_len(n: int, t: int) -> int:
    return max(0, t - n + 1)


@dataclass(frozen=True)
class JointHistory:
    """Complete record of a run up to time t: obs[k][s] for s <= t and
    acts[k][s] for s <= t-1, one stream per agent."""

    t: int
    obs: tuple[IntSeq, ...]
    acts: tuple[IntSeq, ...]

    def validate(self) -> None:
        if len(self.obs) != len(self.acts):
            raise ValueError("obs and acts must cover the same agents")
        for k, (ys, us) in enumerate(zip(self.obs, self.acts)):
            if len(ys) != self.t + 1:
                raise ValueError(f"agent {k}: expected {self.t + 1} observations, got {len(ys)}")
            if len(us) != self.t:
                raise ValueError(f"agent {k}: expected {self.t} actions, got {len(us)}")


@dataclass(frozen=True)
class CommonInfo:
    """The shared block: per agent, the observation and action prefixes up
    to time t-n (both empty while t < n)."""

    t: int
    n: int
    obs: tuple[IntSeq, ...]
    acts: tuple[IntSeq, ...]

    def validate(self) -> None:
        want = shared_prefix_len(self.n, self.t)
        for k, (ys, us) in enumerate(zip(self.obs, self.acts)):
            if len(ys) != want or len(us) != want:
                raise ValueError(
                    f"agent {k}: shared prefixes must have length {want}, "
                    f"got obs {len(ys)} / acts {len(us)}")


@dataclass(frozen=True)
class PrivateInfo:
    """Agent k's private block: obs over the last min(n, t+1) steps and
    acts over the last min(n-1, t) steps."""

    t: int
    n: int
    agent: int
    obs: IntSeq
    acts: IntSeq

    def validate(self) -> None:
        if len(self.obs) != private_obs_len(self.n, self.t):
            raise ValueError(f"private obs must have length {private_obs_len(self.n, self.t)}")
        if len(self.acts) != private_act_len(self.n, self.t):
            raise ValueError(f"private acts must have length {private_act_len(self.n, self.t)}")


@dataclass(frozen=True)
class OtherPrivate:
    """The private blocks of every agent other than `agent`, in increasing
    agent order; the second coordinate of the extended state agent k must
    track."""

    t: int
    n: int
    agent: int
    obs: tuple[IntSeq, ...]
    acts: tuple[IntSeq, ...]


@dataclass(frozen=True)
class InfoRealization:
    """What agent k actually knows at time t: the shared block plus its own
    private block."""

    common: CommonInfo
    private: PrivateInfo

    @property
    def t(self) -> int:
        return self.common.t

    @property
    def agent(self) -> int:
        return self.private.agent

    def validate(self) -> None:
        if self.common.t != self.private.t or self.common.n != self.private.n:
            raise ValueError("common and private blocks disagree on (t, n)")
        self.common.validate()
        self.private.validate()

    def own_actions(self) -> IntSeq:
        """Agent k's full action stream u_0..u_{t-1} (shared prefix + private)."""
        return self.common.acts[self.agent] + self.private.acts

    def own_observations(self) -> IntSeq:
        return self.common.obs[self.agent] + self.private.obs


def other_agents(K: int, k: int) -> tuple[int, ...]:
    return tuple(j for j in range(K) if j != k)


def split_history(h: JointHistory, k: int, n: int) -> tuple[CommonInfo, PrivateInfo, OtherPrivate]:
    """Decompose a joint history into agent k's view of the pattern.

    The decomposition is exact: the agent-k part of the shared block
    concatenated with the private block reproduces agent k's full stream
    with no overlap and no gap.
    """
    if n < 1:
        raise ValueError("delay n must be >= 1")
    h.validate()
    t = h.t
    cut = shared_prefix_len(n, t)  # prefix 0..t-n has this many elements
    common = CommonInfo(
        t=t, n=n,
        obs=tuple(ys[:cut] for ys in h.obs),
        acts=tuple(us[:cut] for us in h.acts),
    )
    private = PrivateInfo(
        t=t, n=n, agent=k,
        obs=h.obs[k][cut:],
        acts=h.acts[k][cut:t],
    )
    others = other_agents(len(h.obs), k)
    other = OtherPrivate(
        t=t, n=n, agent=k,
        obs=tuple(h.obs[j][cut:] for j in others),
        acts=tuple(h.acts[j][cut:t] for j in others),
    )
    return common, private, other


def advance_common(c: CommonInfo, promoted_obs: IntSeq, promoted_acts: IntSeq) -> CommonInfo:
    """Shared block at t+1: extend every agent's prefixes by the
    time-(t-n+1) symbols, or keep them empty while t+1 < n."""
    if shared_prefix_len(c.n, c.t + 1) == shared_prefix_len(c.n, c.t):
        return CommonInfo(t=c.t + 1, n=c.n, obs=c.obs, acts=c.acts)
    return CommonInfo(
        t=c.t + 1, n=c.n,
        obs=tuple(ys + (y,) for ys, y in zip(c.obs, promoted_obs)),
        acts=tuple(us + (u,) for us, u in zip(c.acts, promoted_acts)),
    )


def restrict_common(c_next: CommonInfo) -> CommonInfo:
    """Shared block at time t recovered from the block at t+1 (drop the
    newest promoted symbol of each agent, if any was promoted)."""
    t_prev, n = c_next.t - 1, c_next.n
    cut = shared_prefix_len(n, t_prev)
    return CommonInfo(t=t_prev, n=n,
                      obs=tuple(ys[:cut] for ys in c_next.obs),
                      acts=tuple(us[:cut] for us in c_next.acts))


def shift_private(p: PrivateInfo, new_obs: int, new_act: int) -> PrivateInfo:
    """Agent's private block at t+1: shed the promoted symbols (when the
    windows are full) and append the time-(t+1) observation and time-t
    action."""
    t, n = p.t, p.n
    promote = shared_prefix_len(n, t + 1) > shared_prefix_len(n, t)
    drop_obs = 1 if promote else 0
    drop_act = 1 if (n >= 2 and private_act_len(n, t) == n - 1 and private_act_len(n, t) > 0) else 0
    return PrivateInfo(
        t=t + 1, n=n, agent=p.agent,
        obs=p.obs[drop_obs:] + (new_obs,),
        acts=(p.acts[drop_act:] + (new_act,)) if n >= 2 else (),
    )


def advance_info(c: CommonInfo, p: PrivateInfo, o: OtherPrivate,
                 new_obs_k: int, new_act_k: int,
                 new_obs_minus_k: IntSeq = (),
                 acts_minus_k: IntSeq | None = None) -> tuple[CommonInfo, PrivateInfo]:
    """Advance agent k's blocks from time t to t+1.

    new_obs_k / new_act_k are agent k's time-(t+1) observation and time-t
    action. For n = 1 the time-t actions of the other agents are promoted
    straight into the shared block without ever visiting a private block,
    so they must be supplied via acts_minus_k (in increasing agent order);
    for n >= 2 they are read out of `o`. new_obs_minus_k (the other agents'
    time-(t+1) observations) never enters the returned blocks -- the shared
    block only ever absorbs n-step-old symbols -- and is accepted only so
    callers can advance symmetrically.
    """
    if not (c.t == p.t == o.t) or not (c.n == p.n == o.n):
        raise ValueError("inconsistent time indices or delays across blocks")
    if p.agent != o.agent:
        raise ValueError("private and other blocks belong to different agents")
    t, n, k = c.t, c.n, p.agent
    K = len(c.obs)
    others = other_agents(K, k)

    promote = shared_prefix_len(n, t + 1) > shared_prefix_len(n, t)
    if promote:
        promoted_obs = [0] * K
        promoted_acts = [0] * K
        promoted_obs[k] = p.obs[0]
        promoted_acts[k] = p.acts[0] if n >= 2 else new_act_k
        for pos, j in enumerate(others):
            if not o.obs[pos]:
                raise ValueError(f"agent {j}: promoted observation missing from private block")
            promoted_obs[j] = o.obs[pos][0]
            if n >= 2:
                if not o.acts[pos]:
                    raise ValueError(f"agent {j}: promoted action missing from private block")
                promoted_acts[j] = o.acts[pos][0]
            else:
                if acts_minus_k is None or len(acts_minus_k) != len(others):
                    raise ValueError(
                        "n=1 promotes the other agents' current actions; pass acts_minus_k")
                promoted_acts[j] = acts_minus_k[pos]
        c_next = advance_common(c, tuple(promoted_obs), tuple(promoted_acts))
    else:
        c_next = advance_common(c, (), ())

    p_next = shift_private(p, new_obs_k, new_act_k)
    p_next.validate()
    return c_next, p_next


def advance_other(o: OtherPrivate, new_obs: IntSeq, new_acts: IntSeq) -> OtherPrivate:
    """Advance the other agents' private blocks by their time-(t+1)
    observations and time-t actions (both in increasing agent order)."""
    t, n = o.t, o.n
    promote = shared_prefix_len(n, t + 1) > shared_prefix_len(n, t)
    drop_obs = 1 if promote else 0
    drop_act = 1 if (n >= 2 and private_act_len(n, t) == n - 1 and private_act_len(n, t) > 0) else 0
    return OtherPrivate(
        t=t + 1, n=n, agent=o.agent,
        obs=tuple(ys[drop_obs:] + (y,) for ys, y in zip(o.obs, new_obs)),
        acts=tuple((us[drop_act:] + (u,)) if n >= 2 else ()
                   for us, u in zip(o.acts, new_acts)),
    )


# ---------------------------------------------------------------------------
# Canonical ordering and keys. Realizations are compared structurally via
# nested int tuples (agent-major, then time); the string form is the stable
# key used in strategy files and reports.
# ---------------------------------------------------------------------------

def sort_key(r: InfoRealization) -> tuple:
    return (r.t, r.common.obs, r.common.acts, r.private.obs, r.private.acts)


def other_sort_key(o: OtherPrivate) -> tuple:
    return (o.obs, o.acts)


def _seq_str(s: IntSeq) -> str:
    return "-".join(str(int(v)) for v in s)


def realization_key(r: InfoRealization) -> str:
    """Stable text key, e.g. ``c(0/1;1/0)p(1/)`` for K=2, n=1, t=1."""
    common = ";".join(f"{_seq_str(ys)}/{_seq_str(us)}"
                      for ys, us in zip(r.common.obs, r.common.acts))
    private = f"{_seq_str(r.private.obs)}/{_seq_str(r.private.acts)}"
    return f"c({common})p({private})"


def other_private_key(o: OtherPrivate) -> str:
    return ";".join(f"{_seq_str(ys)}/{_seq_str(us)}" for ys, us in zip(o.obs, o.acts))


def _parse_seq(s: str) -> IntSeq:
    return tuple(int(v) for v in s.split("-")) if s else ()


def parse_realization_key(key: str, k: int, t: int, n: int) -> InfoRealization:
    """Inverse of realization_key, given the (agent, time, delay) context."""
    if not key.startswith("c(") or ")p(" not in key or not key.endswith(")"):
        raise ValueError(f"malformed realization key {key!r}")
    common_s, private_s = key[2:-1].split(")p(")
    c_obs, c_acts = [], []
    for part in common_s.split(";"):
        ys, us = part.split("/")
        c_obs.append(_parse_seq(ys))
        c_acts.append(_parse_seq(us))
    ys, us = private_s.split("/")
    r = InfoRealization(
        common=CommonInfo(t=t, n=n, obs=tuple(c_obs), acts=tuple(c_acts)),
        private=PrivateInfo(t=t, n=n, agent=k, obs=_parse_seq(ys), acts=_parse_seq(us)),
    )
    r.validate()
    return r


# ---------------------------------------------------------------------------
# Enumeration of the realization grids.
# ---------------------------------------------------------------------------

def other_private_space(spec: ModelSpec, k: int, t: int) -> tuple[OtherPrivate, ...]:
    """All index-valid OtherPrivate values at time t, in canonical order."""
    n = spec.n
    lo = private_obs_len(n, t)
    la = private_act_len(n, t)
    others = other_agents(spec.K, k)
    per_agent = []
    for j in others:
        obs_choices = list(itertools.product(range(spec.obs_sizes[j]), repeat=lo))
        act_choices = list(itertools.product(range(spec.act_sizes[j]), repeat=la))
        per_agent.append([(ys, us) for ys in obs_choices for us in act_choices])
    out = []
    for combo in itertools.product(*per_agent) if per_agent else [()]:
        out.append(OtherPrivate(
            t=t, n=n, agent=k,
            obs=tuple(c[0] for c in combo),
            acts=tuple(c[1] for c in combo),
        ))
    return tuple(out)


def structural_realizations(spec: ModelSpec, k: int, t: int) -> tuple[InfoRealization, ...]:
    """Every index-valid (shared, private) pair for agent k at time t,
    reachable or not, in canonical order. Desk-scale only: the grid is a
    full cartesian product over the index windows."""
    n = spec.n
    cut = shared_prefix_len(n, t)
    lo = private_obs_len(n, t)
    la = private_act_len(n, t)
    per_agent_common = []
    for j in range(spec.K):
        obs_choices = list(itertools.product(range(spec.obs_sizes[j]), repeat=cut))
        act_choices = list(itertools.product(range(spec.act_sizes[j]), repeat=cut))
        per_agent_common.append([(ys, us) for ys in obs_choices for us in act_choices])
    p_obs = list(itertools.product(range(spec.obs_sizes[k]), repeat=lo))
    p_acts = list(itertools.product(range(spec.act_sizes[k]), repeat=la))
    out = []
    for combo in itertools.product(*per_agent_common):
        common = CommonInfo(t=t, n=n,
                            obs=tuple(c[0] for c in combo),
                            acts=tuple(c[1] for c in combo))
        for ys in p_obs:
            for us in p_acts:
                out.append(InfoRealization(
                    common=common,
                    private=PrivateInfo(t=t, n=n, agent=k, obs=ys, acts=us)))
    out.sort(key=sort_key)
    return tuple(out)


def enumerate_reachable(spec: ModelSpec, g_minus_k, k: int, t: int
                        ) -> list[tuple[InfoRealization, tuple[OtherPrivate, ...]]]:
    """Positive-probability realizations for agent k at time t, with, for
    each, the positive-probability values of the other agents' private
    blocks.

    Agent k's own actions range over its whole action alphabet (the
    best-response recursion optimizes over them everywhere), while agents
    j != k follow g_minus_k. Output is sorted canonically.
    """
    found: dict[InfoRealization, set[OtherPrivate]] = {}
    obs_ranges = [range(spec.obs_sizes[j]) for j in range(spec.K)]

    def walk(s: int, x: int, hist: JointHistory) -> None:
        if s == t:
            c, p, o = split_history(hist, k, spec.n)
            found.setdefault(InfoRealization(common=c, private=p), set()).add(o)
            return
        action_lists = []
        for j in range(spec.K):
            if j == k:
                action_lists.append(tuple(range(spec.act_sizes[k])))
            else:
                cj, pj, _ = split_history(hist, j, spec.n)
                action_lists.append(
                    (g_minus_k.action(j, s, InfoRealization(common=cj, private=pj)),))
        for us in itertools.product(*action_lists):
            for x_next in range(spec.state_size):
                if spec.transition[s][(x, *us, x_next)] <= 0.0:
                    continue
                for ys in itertools.product(*obs_ranges):
                    p_y = 1.0
                    for j, y in enumerate(ys):
                        p_y *= spec.observation[s + 1][j][x_next, y]
                    if p_y <= 0.0:
                        continue
                    walk(s + 1, x_next, JointHistory(
                        t=s + 1,
                        obs=tuple(hist.obs[j] + (ys[j],) for j in range(spec.K)),
                        acts=tuple(hist.acts[j] + (us[j],) for j in range(spec.K))))

    for x0 in range(spec.state_size):
        if spec.init_dist[x0] <= 0.0:
            continue
        for ys in itertools.product(*obs_ranges):
            p_y = 1.0
            for j, y in enumerate(ys):
                p_y *= spec.observation[0][j][x0, y]
            if p_y <= 0.0:
                continue
            walk(0, x0, JointHistory(t=0, obs=tuple((y,) for y in ys),
                                     acts=tuple(() for _ in range(spec.K))))

    items = sorted(found.items(), key=lambda kv: sort_key(kv[0]))
    return [(r, tuple(sorted(supp, key=other_sort_key))) for r, supp in items]
