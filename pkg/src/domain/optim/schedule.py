# src/domain/optim/schedule.py
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

from src.config.settings import DEFAULT_LR, DEFAULT_LR_DECAY, DEFAULT_LR_EVERY, DEFAULT_LR_PATIENCE
from src.domain.exceptions import InputError
from src.domain.value_objects.task_kind import LrMode


@dataclass
class LrSchedule:
    """
    Programa de la tasa de aprendizaje.

    En modo fijo la tasa es initial_lr·decay_factor^⌊iter/decay_every⌋.
    En modo plateau se multiplica por decay_factor cuando la métrica de
    validación no mejora durante `patience` evaluaciones seguidas; ese
    modo guarda estado (best, bad_evals, current_lr) que va al checkpoint.

    Atributos:
        initial_lr (float): Tasa inicial (> 0)
        decay_factor (float): Factor de decaimiento en (0, 1)
        decay_every (int): Iteraciones entre decaimientos (modo fijo)
        mode (LrMode): fixed o plateau
        patience (int): Evaluaciones sin mejora toleradas (modo plateau)
    """

    initial_lr: float = DEFAULT_LR
    decay_factor: float = DEFAULT_LR_DECAY
    decay_every: int = DEFAULT_LR_EVERY
    mode: LrMode = LrMode.FIXED
    patience: int = DEFAULT_LR_PATIENCE
    best: float = math.inf
    bad_evals: int = 0
    current_lr: Optional[float] = None

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise InputError(f"initial_lr debe ser positivo: {self.initial_lr}")
        if not 0.0 < self.decay_factor < 1.0:
            raise InputError(f"decay_factor debe estar en (0, 1): {self.decay_factor}")
        if self.decay_every < 1 or self.patience < 1:
            raise InputError("decay_every y patience deben ser positivos")
        if self.current_lr is None:
            self.current_lr = self.initial_lr

    def state_dict(self) -> Dict[str, Any]:
        """Estado mutable del modo plateau."""
        return {'best': self.best, 'bad_evals': self.bad_evals, 'current_lr': self.current_lr}

    def load_state(self, state: Dict[str, Any]) -> None:
        self.best = float(state['best'])
        self.bad_evals = int(state['bad_evals'])
        self.current_lr = float(state['current_lr'])


def schedule_lr(sched: LrSchedule, iteration: int, metric: Optional[float] = None) -> float:
    """
    Tasa de aprendizaje para una iteración.

    Args:
        sched: Programa (en modo plateau se actualiza en el sitio)
        iteration: Iteración actual (≥ 0)
        metric: Métrica de validación recién evaluada, o None si en esta
            iteración no hay evaluación

    Returns:
        Tasa de aprendizaje
    """
    if iteration < 0:
        raise InputError(f"Iteración negativa: {iteration}")
    if sched.mode == LrMode.FIXED:
        return sched.initial_lr * sched.decay_factor ** (iteration // sched.decay_every)

    if metric is not None:
        if metric < sched.best:
            sched.best = float(metric)
            sched.bad_evals = 0
        else:
            sched.bad_evals += 1
            if sched.bad_evals >= sched.patience:
                sched.current_lr *= sched.decay_factor
                sched.bad_evals = 0
    return sched.current_lr
