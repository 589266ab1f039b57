# src/domain/tasks/sources.py
"""
Fuentes de datos del entrenamiento: lotes de entrenamiento, conjunto fijo
de evaluación y, en MNIST, conjunto de prueba.
"""
from abc import ABC, abstractmethod
from typing import Iterator, Optional

import numpy as np

from src.config.settings import ADDING_TARGET_MEAN, EVAL_CHUNK
from src.domain.entities.task_batch import MnistDataset, TaskBatch
from src.domain.exceptions import InputError
from src.domain.tasks.adding import gen_adding
from src.domain.tasks.mnist import sample_batch
from src.domain.value_objects.task_kind import TaskKind


def _chunks(dataset: MnistDataset, chunk: int) -> Iterator[TaskBatch]:
    for start in range(0, len(dataset), chunk):
        yield dataset.to_batch(np.arange(start, min(start + chunk, len(dataset))))


class TaskSource(ABC):
    """Clase base abstracta para las fuentes de lotes de una tarea."""

    def __init__(self, task: TaskKind, batch_size: int):
        if batch_size < 1:
            raise InputError(f"El tamaño de lote debe ser positivo: {batch_size}")
        self.task = task
        self.batch_size = batch_size

    @property
    def classification(self) -> bool:
        return self.task.is_classification

    @property
    def head_bias(self) -> float:
        """Sesgo inicial del cabezal: la media del objetivo en regresión."""
        return 0.0 if self.classification else ADDING_TARGET_MEAN

    @abstractmethod
    def train_batch(self, rng: np.random.Generator) -> TaskBatch:
        """
        Siguiente lote de entrenamiento.

        Args:
            rng: Generador del flujo de datos; es el único estado que
                avanza, así que su estado basta para reanudar
        """
        pass

    @abstractmethod
    def eval_batches(self, chunk: int = EVAL_CHUNK) -> Iterator[TaskBatch]:
        """Conjunto fijo de evaluación, troceado en lotes de hasta `chunk`."""
        pass

    def test_batches(self, chunk: int = EVAL_CHUNK) -> Optional[Iterator[TaskBatch]]:
        """Conjunto de prueba, si la tarea tiene uno distinto del de evaluación."""
        return None


class AddingSource(TaskSource):
    """Problema de la suma: lotes nuevos cada iteración y un lote fijo de evaluación."""

    def __init__(self, seq_len: int, batch_size: int, eval_size: int,
                 eval_rng: np.random.Generator):
        super().__init__(TaskKind.ADDING, batch_size)
        self.seq_len = seq_len
        self.eval_set = gen_adding(seq_len, eval_size, eval_rng)

    def train_batch(self, rng: np.random.Generator) -> TaskBatch:
        return gen_adding(self.seq_len, self.batch_size, rng)

    def eval_batches(self, chunk: int = EVAL_CHUNK) -> Iterator[TaskBatch]:
        for start in range(0, self.eval_set.batch, chunk):
            yield self.eval_set.slice(start, start + chunk)


class MnistSource(TaskSource):
    """
    MNIST secuencial o permutado ya preparado.

    La evaluación periódica usa las primeras `eval_size` muestras de
    validación (o de prueba si no hay validación); el conjunto de prueba
    completo queda para la tasa de error final.
    """

    def __init__(self, task: TaskKind, batch_size: int, train: MnistDataset,
                 validation: MnistDataset, test: Optional[MnistDataset], eval_size: int):
        super().__init__(task, batch_size)
        if len(train) == 0:
            raise InputError("El conjunto de entrenamiento está vacío")
        self.train = train
        self.test = test
        held_out = validation if len(validation) > 0 else test
        if held_out is None or len(held_out) == 0:
            raise InputError("No hay muestras para evaluar")
        self.eval_set = held_out.subset(0, min(eval_size, len(held_out)))

    def train_batch(self, rng: np.random.Generator) -> TaskBatch:
        return sample_batch(self.train, self.batch_size, rng)

    def eval_batches(self, chunk: int = EVAL_CHUNK) -> Iterator[TaskBatch]:
        return _chunks(self.eval_set, chunk)

    def test_batches(self, chunk: int = EVAL_CHUNK) -> Optional[Iterator[TaskBatch]]:
        if self.test is None or len(self.test) == 0:
            return None
        return _chunks(self.test, chunk)
