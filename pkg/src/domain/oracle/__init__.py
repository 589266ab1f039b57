"""
Oráculos de verificación independientes de la retropropagación iterativa.
"""

from .report import OracleEntry, OracleReport, relative_error
from .appendix import appendix_grads, appendix_grads_stacked
from .finite_diff import (
    FrozenInstance, kink_margin, random_layer, sample_frozen_instance, finite_diff_frozen
)
from .bounds import upper_bound, bound_check

__all__ = [
    'OracleEntry',
    'OracleReport',
    'relative_error',
    'appendix_grads',
    'appendix_grads_stacked',
    'FrozenInstance',
    'kink_margin',
    'random_layer',
    'sample_frozen_instance',
    'finite_diff_frozen',
    'upper_bound',
    'bound_check'
]
