# src/domain/entities/forward_cache.py
from dataclasses import dataclass, fields
from typing import List

import numpy as np

from src.domain.exceptions import InputError
from src.domain.value_objects.variant import VariantFlag


@dataclass
class StepCache:
    """
    Valores intermedios de un paso temporal (lote completo).

    Todas las matrices tienen forma (B, N) salvo x (B, M) y las cotas
    mm_min / mm_max (B,).
    """

    x: np.ndarray
    pre_short: np.ndarray
    h_short: np.ndarray
    sel_pre: np.ndarray
    mm_min: np.ndarray
    mm_max: np.ndarray
    mm: np.ndarray
    s: np.ndarray
    i: np.ndarray
    pre_long: np.ndarray
    h_long: np.ndarray


@dataclass
class ForwardCache:
    """
    Caché de una capa para todo el recorrido hacia delante.

    Cada campo apila los valores de StepCache con el tiempo como primer eje:
    forma (L, B, N), (L, B, M) para x y (L, B) para las cotas de mm.
    """

    variant: VariantFlag
    x: np.ndarray
    pre_short: np.ndarray
    h_short: np.ndarray
    sel_pre: np.ndarray
    mm_min: np.ndarray
    mm_max: np.ndarray
    mm: np.ndarray
    s: np.ndarray
    i: np.ndarray
    pre_long: np.ndarray
    h_long: np.ndarray

    @classmethod
    def from_steps(cls, variant: VariantFlag, steps: List[StepCache]) -> 'ForwardCache':
        """Apila los pasos en una caché de secuencia."""
        if not steps:
            raise InputError("La secuencia debe tener al menos un paso")
        stacked = {
            f.name: np.stack([getattr(step, f.name) for step in steps])
            for f in fields(StepCache)
        }
        return cls(variant=variant, **stacked)

    def step(self, t: int) -> StepCache:
        """Recupera el paso t como StepCache."""
        return StepCache(**{f.name: getattr(self, f.name)[t] for f in fields(StepCache)})

    @property
    def length(self) -> int:
        """Longitud L de la secuencia."""
        return int(self.x.shape[0])

    @property
    def batch(self) -> int:
        return int(self.x.shape[1])

    @property
    def neurons(self) -> int:
        return int(self.h_short.shape[2])

    @property
    def outputs(self) -> np.ndarray:
        """Secuencia de salida de la capa (L, B, N): h_t, o h̃_t en rnn_relu."""
        return self.h_short if self.variant.output_is_short else self.h_long

    def h_short_prev(self, t: int) -> np.ndarray:
        """h̃_{t−1} (cero para t = 0)."""
        return self.h_short[t - 1] if t > 0 else np.zeros_like(self.h_short[0])

    def h_long_prev(self, t: int) -> np.ndarray:
        """h_{t−1} (cero para t = 0)."""
        return self.h_long[t - 1] if t > 0 else np.zeros_like(self.h_long[0])
