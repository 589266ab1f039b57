# src/domain/entities/task_batch.py
from dataclasses import dataclass

import numpy as np

from src.domain.exceptions import InputError


@dataclass
class TaskBatch:
    """
    Lote de una tarea de referencia.

    Atributos:
        inputs (np.ndarray): Entradas (B, L, M)
        targets (np.ndarray): Objetivo por secuencia; float (B,) en
            regresión o etiqueta entera (B,) en clasificación
    """

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 3:
            raise InputError(f"inputs debe ser (B, L, M), tiene forma {self.inputs.shape}")
        if self.targets.shape != (self.inputs.shape[0],):
            raise InputError("Debe haber un objetivo por secuencia")

    @property
    def batch(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def length(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def features(self) -> int:
        return int(self.inputs.shape[2])

    def time_major(self) -> np.ndarray:
        """Entradas con el tiempo como primer eje: (L, B, M)."""
        return np.ascontiguousarray(np.swapaxes(self.inputs, 0, 1))

    def slice(self, start: int, stop: int) -> 'TaskBatch':
        """Sub-lote contiguo [start, stop)."""
        return TaskBatch(inputs=self.inputs[start:stop], targets=self.targets[start:stop])


@dataclass
class MnistDataset:
    """
    Conjunto MNIST aplanado.

    Atributos:
        images (np.ndarray): Secuencias (n, 784) en [0, 1], orden fila a fila
        labels (np.ndarray): Etiquetas enteras (n,) en 0..9
    """

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 2 or self.images.shape[0] != self.labels.shape[0]:
            raise InputError(
                f"Recuento de imágenes ({self.images.shape}) y etiquetas "
                f"({self.labels.shape}) no coincide"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, start: int, stop: int) -> 'MnistDataset':
        return MnistDataset(images=self.images[start:stop], labels=self.labels[start:stop])

    def class_counts(self) -> np.ndarray:
        """Número de muestras por clase."""
        return np.bincount(self.labels, minlength=10)

    def to_batch(self, indices: np.ndarray) -> TaskBatch:
        """Construye un TaskBatch (B, 784, 1) con las muestras indicadas."""
        return TaskBatch(inputs=self.images[indices][:, :, None],
                         targets=self.labels[indices].astype(np.int64))
