# src/domain/value_objects/task_kind.py
from enum import Enum

from src.domain.exceptions import InputError


class TaskKind(Enum):
    """Tareas de referencia disponibles."""
    ADDING = "adding"    # Problema de la suma (regresión)
    MNIST = "mnist"      # MNIST secuencial (clasificación)
    PMNIST = "pmnist"    # MNIST permutado (clasificación)

    def __str__(self) -> str:
        return self.value

    @property
    def is_classification(self) -> bool:
        """Retorna True si la tarea es de clasificación."""
        return self in [TaskKind.MNIST, TaskKind.PMNIST]

    @property
    def input_features(self) -> int:
        """Dimensión M de cada elemento de la secuencia."""
        return 2 if self == TaskKind.ADDING else 1

    @property
    def output_size(self) -> int:
        """Dimensión K del cabezal de lectura."""
        return 10 if self.is_classification else 1

    @classmethod
    def from_string(cls, value: str) -> 'TaskKind':
        """Crea un TaskKind desde string."""
        try:
            return cls(value.strip().lower())
        except (ValueError, AttributeError):
            raise InputError(
                f"Tarea '{value}' no válida. "
                f"Valores válidos: {', '.join(task.value for task in cls)}"
            )


class Sublayer(Enum):
    """Subcapa de una capa dual (para trazas de activación)."""
    SHORT = "short"
    LONG = "long"

    def __str__(self) -> str:
        return self.value


class LrMode(Enum):
    """Modo del planificador de tasa de aprendizaje."""
    FIXED = "fixed"       # Decaimiento cada N iteraciones
    PLATEAU = "plateau"   # Decaimiento cuando la validación no mejora

    def __str__(self) -> str:
        return self.value

    @classmethod
    def from_string(cls, value: str) -> 'LrMode':
        try:
            return cls(value.strip().lower())
        except (ValueError, AttributeError):
            raise InputError(f"Modo de lr '{value}' no válido (fixed | plateau)")
