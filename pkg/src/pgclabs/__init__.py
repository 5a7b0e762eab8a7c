"""Expectation-transformer semantics, predicate abstraction and MDP model
checking for small pGCL programs, with Rabin's choice-coordination study."""

from pgclabs.abstraction import (
    Partition,
    check_data_independent,
    check_info_preserving,
    cubed,
    cubes,
    di_predicates,
    is_cubed,
    wp_abs,
)
from pgclabs.expectation import Expectation
from pgclabs.mdp import Mdp, expected_reward, extract_mdp, is_deterministic, pbounded, quotient_mdp
from pgclabs.semantics import check_refinement_refute, wp, wp_bounded_loop
from pgclabs.statespace import StateSpace
from pgclabs.syntax import parse_expectation, parse_model, parse_predicate, parse_program, to_source

__version__ = "0.1.0"

__all__ = [
    "Expectation",
    "Mdp",
    "Partition",
    "StateSpace",
    "check_data_independent",
    "check_info_preserving",
    "check_refinement_refute",
    "cubed",
    "cubes",
    "di_predicates",
    "expected_reward",
    "extract_mdp",
    "is_cubed",
    "is_deterministic",
    "parse_expectation",
    "parse_model",
    "parse_predicate",
    "parse_program",
    "pbounded",
    "quotient_mdp",
    "to_source",
    "wp",
    "wp_abs",
    "wp_bounded_loop",
]
