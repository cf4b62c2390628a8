"""Exact expected welfare of sequential (picking-sequence) allocation of indivisible items."""

from seqalloc.expectation import (
    alt_closed_form_two_agents,
    bestpref_expected_sw,
    expected_utilities_borda,
    expected_utilities_general,
    pick_probabilities,
    random_expected_sw,
)
from seqalloc.limits import SizeLimitError
from seqalloc.model import (
    Allocation,
    ExpectationVector,
    Policy,
    Profile,
    ScoringFunction,
    brute_force_expectation,
    canonicalize,
    truthful_play,
)
from seqalloc.numerics import delta, gamma, gamma_bar
from seqalloc.optimality import optimal_policy
from seqalloc.strategic import spne_play

__version__ = "0.1.0"
