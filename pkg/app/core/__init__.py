"""
Core modules for the inequality lab
"""

from .statespace import Alphabet, Configuration, Measure, Model, SiteSet, StateSpace, make_model, product_model
from .operators import d_x, dirichlet_form, generator_matrix, psi_x, semigroup_apply
from .constants import certify_constants, log_sobolev_upper, spectral_gap
from .talagrand import verify_commutation, verify_corollary, verify_talagrand
from .graphical import mc_semigroup, sample_ppp
from .trees import FullBinaryTree, enumerate_trees, tree_mass
from .influence import Event, ParamFamily, kkl_check, russo_check, sharp_threshold_check

__all__ = [
    'Alphabet', 'Configuration', 'Measure', 'Model', 'SiteSet', 'StateSpace', 'make_model', 'product_model',
    'd_x', 'dirichlet_form', 'generator_matrix', 'psi_x', 'semigroup_apply',
    'certify_constants', 'log_sobolev_upper', 'spectral_gap',
    'verify_commutation', 'verify_corollary', 'verify_talagrand',
    'mc_semigroup', 'sample_ppp',
    'FullBinaryTree', 'enumerate_trees', 'tree_mass',
    'Event', 'ParamFamily', 'kkl_check', 'russo_check', 'sharp_threshold_check',
]
