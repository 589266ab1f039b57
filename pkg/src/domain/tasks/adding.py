# src/domain/tasks/adding.py
"""
Generador del problema de la suma.

Cada elemento tiene dos rasgos: un valor uniforme en (0, 1) y un marcador
que vale 1 en exactamente dos posiciones. El objetivo es la suma de los
dos valores marcados; un modelo que predice siempre la media (1) obtiene
un MSE de 1/6.
"""
import numpy as np

from src.domain.entities.task_batch import TaskBatch
from src.domain.exceptions import InputError


def gen_adding(length: int, batch: int, rng: np.random.Generator) -> TaskBatch:
    """
    Genera un lote del problema de la suma.

    Las posiciones de los marcadores se eligen uniformemente sin
    reemplazo sobre {0..L−1}.

    Args:
        length: Longitud L de la secuencia (≥ 2)
        batch: Número de secuencias (≥ 1)
        rng: Generador de números aleatorios

    Returns:
        TaskBatch con entradas (B, L, 2) y objetivos (B,)

    Raises:
        InputError: Si L < 2 o batch < 1
    """
    if length < 2:
        raise InputError(f"El problema de la suma necesita L ≥ 2, recibió {length}")
    if batch < 1:
        raise InputError(f"El tamaño de lote debe ser positivo, recibió {batch}")

    # Intervalo abierto: rng.uniform devuelve [low, high)
    values = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=(batch, length))
    # Dos columnas distintas por fila: argsort de claves uniformes
    markers = np.argsort(rng.uniform(size=(batch, length)), axis=1, kind='stable')[:, :2]
    flags = np.zeros((batch, length))
    rows = np.arange(batch)[:, None]
    flags[rows, markers] = 1.0

    inputs = np.stack([values, flags], axis=2)
    targets = values[rows, markers].sum(axis=1)
    return TaskBatch(inputs=inputs, targets=targets)


def adding_baseline_mse(batch: TaskBatch, prediction: float = 1.0) -> float:
    """MSE de un predictor constante (por defecto la media teórica 1)."""
    return float(np.mean((batch.targets - prediction) ** 2))
