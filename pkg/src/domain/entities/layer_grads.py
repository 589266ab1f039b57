# src/domain/entities/layer_grads.py
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.domain.entities.layer_params import PARAM_NAMES, LayerParams


@dataclass
class LayerGrads:
    """
    Gradientes de una capa, con la misma forma que LayerParams.

    Atributos:
        params (Dict[str, np.ndarray]): ∂Loss/∂θ por nombre de parámetro
        g_x (np.ndarray): ∂Loss/∂x_t por paso, forma (L, B, M), que se
            propaga como gradiente local a la capa inferior
    """

    params: Dict[str, np.ndarray]
    g_x: np.ndarray

    @classmethod
    def zeros_like(cls, layer: LayerParams, length: int, batch: int) -> 'LayerGrads':
        """Gradientes nulos para una capa y una secuencia dadas."""
        return cls(
            params={name: np.zeros_like(value) for name, value in layer.to_tensors().items()},
            g_x=np.zeros((length, batch, layer.inputs)),
        )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def scaled(self, factor: float) -> 'LayerGrads':
        """Copia escalada por un factor."""
        return LayerGrads(
            params={name: value * factor for name, value in self.params.items()},
            g_x=self.g_x * factor,
        )

    def max_abs(self) -> float:
        """Mayor valor absoluto sobre todos los tensores de parámetros."""
        return max(float(np.max(np.abs(value))) if value.size else 0.0
                   for value in self.params.values())

    def first_non_finite(self) -> Optional[str]:
        """Nombre del primer parámetro con valores no finitos, o None."""
        for name in PARAM_NAMES:
            if not np.all(np.isfinite(self.params[name])):
                return name
        return None


@dataclass
class StateGrads:
    """
    Gradientes de estado que se propagan hacia atrás en el tiempo.

    Atributos:
        g_h_long (np.ndarray): ∂Loss/∂h_t, forma (L, B, N)
        g_h_short (np.ndarray): ∂Loss/∂h̃_t, forma (L, B, N)
    """

    g_h_long: np.ndarray
    g_h_short: np.ndarray

    @classmethod
    def zeros(cls, length: int, batch: int, neurons: int) -> 'StateGrads':
        return cls(
            g_h_long=np.zeros((length, batch, neurons)),
            g_h_short=np.zeros((length, batch, neurons)),
        )
