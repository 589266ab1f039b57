# src/domain/optim/adam.py
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from src.config.settings import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_LR
from src.domain.exceptions import InputError, NumericalError


@dataclass
class AdamState:
    """
    Estado del optimizador Adam.

    Los momentos se indexan por la misma clave plana que los parámetros
    ("layer{i}.{nombre}" o "readout.w_out").

    Atributos:
        m (Dict[str, np.ndarray]): Primer momento
        v (Dict[str, np.ndarray]): Segundo momento (≥ 0)
        step_count (int): Número de pasos aplicados
        lr (float): Tasa de aprendizaje actual
        beta1, beta2, eps_hat (float): Hiperparámetros fijos
    """

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0
    lr: float = DEFAULT_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps_hat: float = ADAM_EPS

    def __post_init__(self):
        if self.step_count < 0:
            raise InputError("step_count no puede ser negativo")
        if self.lr <= 0:
            raise InputError(f"La tasa de aprendizaje debe ser positiva: {self.lr}")

    def ensure(self, params: Dict[str, np.ndarray]) -> None:
        """Crea momentos nulos para los parámetros que aún no los tienen."""
        for name, value in params.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(value, dtype=np.float64)
                self.v[name] = np.zeros_like(value, dtype=np.float64)

    def to_tensors(self) -> Dict[str, np.ndarray]:
        """Momentos como tensores con nombre, para el checkpoint."""
        tensors = {f"adam.m.{name}": value for name, value in self.m.items()}
        tensors.update({f"adam.v.{name}": value for name, value in self.v.items()})
        return tensors

    @classmethod
    def from_tensors(cls, tensors: Dict[str, np.ndarray], step_count: int, lr: float) -> 'AdamState':
        m = {key[len("adam.m."):]: np.array(value) for key, value in tensors.items()
             if key.startswith("adam.m.")}
        v = {key[len("adam.v."):]: np.array(value) for key, value in tensors.items()
             if key.startswith("adam.v.")}
        return cls(m=m, v=v, step_count=step_count, lr=lr)


def adam_step(
    state: AdamState,
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
) -> Dict[str, np.ndarray]:
    """
    Un paso de Adam con corrección de sesgo.

    θ ← θ − lr·m̂/(√v̂ + eps_hat), con m̂ = m/(1−β₁ᵗ) y v̂ = v/(1−β₂ᵗ).

    Args:
        state: Estado del optimizador (se actualiza en el sitio)
        params: Parámetros por clave
        grads: Gradientes con las mismas claves y formas

    Returns:
        Nuevos parámetros (los arrays de entrada no se modifican)

    Raises:
        InputError: Si claves o formas no coinciden
        NumericalError: Si un gradiente o la actualización no son finitos
    """
    if set(params) != set(grads):
        missing = sorted(set(params) ^ set(grads))
        raise InputError(f"Parámetros y gradientes no coinciden: {', '.join(missing)}")
    state.ensure(params)
    step = state.step_count + 1
    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step

    updated: Dict[str, np.ndarray] = {}
    for name in sorted(params):
        theta = np.asarray(params[name], dtype=np.float64)
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != theta.shape:
            raise InputError(f"Gradiente de {name} con forma {g.shape}, se esperaba {theta.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError("Gradiente no finito", step=state.step_count, parameter=name)
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        new_theta = theta - state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps_hat)
        if not np.all(np.isfinite(new_theta)):
            raise NumericalError("Actualización no finita", step=state.step_count, parameter=name)
        state.m[name], state.v[name] = m, v
        updated[name] = new_theta

    state.step_count = step
    return updated
