"""Finite-model checks of axiom-system reductions.

Theories are written in a small sorted DSL, interpreted over finite fields,
rational grids and enumerated carriers, and explored by a backtracking model
search.  The analysis layer turns searches into redundancy and independence
reports.
"""
from .analysis import (DerivedFunctionals, IndependenceReport, RedundancyReport, ResultStatus, check_independence,
                       check_redundancy, derived_functionals, verify_involution_identities,
                       verify_norm_derivations)
from .domains import (Bucket, FiniteField, RationalGrid, RationalSample, make_finite_field, multiplicative_maps)
from .dsl import parse_theory, serialize_theory
from .kernel import UNDEFINED, Interpretation, Status, Verdict, check_axiom, eval_formula, eval_term
from .search import SearchOutcome, SearchSpec, SearchStatus, enumerate_models, find_countermodel
from .theories import get_fixture, get_theory

__version__ = "0.1.0"
