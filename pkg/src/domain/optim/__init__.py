"""
Optimización: Adam, programa de la tasa de aprendizaje y proyecciones.
"""

from .adam import AdamState, adam_step
from .constraints import ConstraintViolation, SpectralMemo, project_constraints, check_constraints
from .schedule import LrSchedule, schedule_lr

__all__ = [
    'AdamState',
    'adam_step',
    'ConstraintViolation',
    'SpectralMemo',
    'project_constraints',
    'check_constraints',
    'LrSchedule',
    'schedule_lr'
]
