# src/application/use_cases/__init__.py
"""
Casos de Uso de la aplicación.

Cada caso de uso corresponde a una orden de la línea de comandos:
entrenar, verificar, comparar variantes y exportar trazas.
"""

from .run_training import (
    RunTrainingUseCase, TrainingState, build_task_source, create_run_training_use_case
)
from .run_verify import RunVerifyUseCase, VerifySizes, create_run_verify_use_case
from .run_ablation import RunAblationUseCase, create_run_ablation_use_case
from .export_traces import (
    ExportTracesUseCase, create_export_traces_use_case, trace_frame, trace_statistics
)

__all__ = [
    'RunTrainingUseCase',
    'TrainingState',
    'build_task_source',
    'create_run_training_use_case',
    'RunVerifyUseCase',
    'VerifySizes',
    'create_run_verify_use_case',
    'RunAblationUseCase',
    'create_run_ablation_use_case',
    'ExportTracesUseCase',
    'create_export_traces_use_case',
    'trace_frame',
    'trace_statistics'
]
