# src/domain/entities/checkpoint.py
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from src.config.constants import CHECKPOINT_VERSION


@dataclass
class Checkpoint:
    """
    Estado completo de un entrenamiento en una iteración.

    Atributos:
        config_hash (str): Huella de la configuración que lo produjo
        iteration (int): Iteraciones completadas
        tensors (Dict[str, np.ndarray]): Tensores con nombre (parámetros,
            cabezal y momentos de Adam), en orden de escritura
        rng_state (Dict[str, Any]): Estado de los generadores por nombre
        optimizer (Dict[str, Any]): step_count y lr de Adam
        schedule (Dict[str, Any]): Estado del programa de lr
        config (Dict[str, str]): Configuración plana del experimento
        version (int): Versión del formato
    """

    config_hash: str
    iteration: int
    tensors: Dict[str, np.ndarray]
    rng_state: Dict[str, Any] = field(default_factory=dict)
    optimizer: Dict[str, Any] = field(default_factory=dict)
    schedule: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, str] = field(default_factory=dict)
    version: int = CHECKPOINT_VERSION

    def header(self) -> Dict[str, Any]:
        """Cabecera sin los tensores."""
        return {
            'version': self.version,
            'config_hash': self.config_hash,
            'iteration': self.iteration,
            'rng_state': self.rng_state,
            'optimizer': self.optimizer,
            'schedule': self.schedule,
            'config': self.config,
        }

    def tensors_with_prefix(self, prefix: str) -> Dict[str, np.ndarray]:
        """Tensores cuyo nombre empieza por `prefix`, sin el prefijo."""
        return {name[len(prefix):]: value for name, value in self.tensors.items()
                if name.startswith(prefix)}

    def bitwise_equal(self, other: 'Checkpoint') -> bool:
        """Igualdad exacta de cabecera y de los bytes de cada tensor."""
        if self.header() != other.header() or list(self.tensors) != list(other.tensors):
            return False
        return all(
            self.tensors[name].shape == other.tensors[name].shape
            and self.tensors[name].astype('<f8').tobytes() == other.tensors[name].astype('<f8').tobytes()
            for name in self.tensors
        )
