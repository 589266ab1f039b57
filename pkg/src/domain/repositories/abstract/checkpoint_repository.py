# src/domain/repositories/abstract/checkpoint_repository.py

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Union

from src.domain.entities.checkpoint import Checkpoint


class CheckpointRepository(ABC):
    """Interfaz abstracta para guardar y cargar checkpoints."""

    @abstractmethod
    def save(self, checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
        """
        Guarda un checkpoint de forma atómica.

        Args:
            checkpoint: Estado a guardar.
            path: Fichero destino.

        Returns:
            Ruta escrita.
        """
        pass

    @abstractmethod
    def load(self, path: Union[str, Path]) -> Checkpoint:
        """
        Carga un checkpoint.

        Args:
            path: Fichero origen.

        Returns:
            Checkpoint leído.

        Raises:
            CheckpointError: Si el fichero es ilegible o inconsistente.
        """
        pass
