"""
Value Objects del Dominio.

Value Objects son objetos inmutables sin identidad
que representan conceptos del dominio.
"""

from .variant import VariantFlag
from .task_kind import TaskKind, Sublayer, LrMode
from .constraint_spec import ConstraintSpec
from .pixel_permutation import PixelPermutation

__all__ = [
    'VariantFlag',
    'TaskKind',
    'Sublayer',
    'LrMode',
    'ConstraintSpec',
    'PixelPermutation'
]
