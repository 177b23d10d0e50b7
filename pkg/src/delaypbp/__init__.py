"""Exact toolkit for finite decentralized POMDPs with delayed sharing.

Everything is desk-scale and enumeration-exact: models are finite tables,
beliefs are dense vectors, expectations are finite sums. The library
computes each agent's posterior over the extended state (plant state plus
the other agents' private data), solves the per-agent best-response
dynamic program on that posterior, iterates best responses toward a
person-by-person stationary profile, and cross-checks every step against
an independent trajectory-enumeration oracle.
"""

from .dp import (ValueTable, cost_via_beliefs, expected_value, pbp_sweep,
                 solve_best_response, terminal_value, verify_value_dominance)
from .errors import (IncompleteStrategyError, InstanceTooLargeError,
                     ModelFormatError, UnreachableError)
from .falsify import (GapReport, check_conditional_independence,
                      check_conditional_markov, check_k1_reduction,
                      check_payoff_identity, check_policy_independence)
from .filtering import (Belief, bayes_oracle_belief, belief_update,
                        chained_beliefs, classical_filter_update,
                        initial_belief)
from .info import (CommonInfo, InfoRealization, JointHistory, OtherPrivate,
                   PrivateInfo, advance_info, enumerate_reachable,
                   split_history)
from .model import (ModelSpec, canonical_instance, load_model, save_model,
                    validate_model)
from .oracle import (TrajectoryAtom, brute_force_best_response,
                     conditional_pmf, enumerate_cost, verify_pbp)
from .strategies import (StrategyProfile, constant_profile, load_profile,
                         observation_following_profile, random_profile,
                         save_profile)

__version__ = "0.1.0"

__all__ = [
    "Belief", "CommonInfo", "GapReport", "IncompleteStrategyError",
    "InfoRealization", "InstanceTooLargeError", "JointHistory",
    "ModelFormatError", "ModelSpec", "OtherPrivate", "PrivateInfo",
    "StrategyProfile", "TrajectoryAtom", "UnreachableError", "ValueTable",
    "advance_info", "bayes_oracle_belief", "belief_update",
    "brute_force_best_response", "canonical_instance", "chained_beliefs",
    "check_conditional_independence", "check_conditional_markov",
    "check_k1_reduction", "check_payoff_identity",
    "check_policy_independence", "classical_filter_update",
    "conditional_pmf", "constant_profile", "cost_via_beliefs",
    "enumerate_cost", "enumerate_reachable", "expected_value",
    "initial_belief", "load_model", "load_profile",
    "observation_following_profile", "pbp_sweep", "random_profile",
    "save_model", "save_profile", "solve_best_response", "split_history",
    "terminal_value", "validate_model", "verify_pbp",
    "verify_value_dominance",
]
