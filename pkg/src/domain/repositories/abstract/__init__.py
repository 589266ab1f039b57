"""
Interfaces Abstractas de Repositorios.

Define los contratos que deben implementar las
concreciones de infraestructura.
"""

from .dataset_repository import DatasetRepository
from .checkpoint_repository import CheckpointRepository

__all__ = [
    'DatasetRepository',
    'CheckpointRepository'
]
