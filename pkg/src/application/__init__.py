"""
Capa de Aplicación - Casos de Uso.

Contiene los casos de uso que orquestan la lógica de dominio
y coordinan las diferentes capas del sistema.
"""

from src.application.use_cases import (
    create_export_traces_use_case,
    create_run_ablation_use_case,
    create_run_training_use_case,
    create_run_verify_use_case,
)

__all__ = [
    'create_run_training_use_case',
    'create_run_verify_use_case',
    'create_run_ablation_use_case',
    'create_export_traces_use_case'
]
