# src/domain/entities/network.py
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from src.domain.cell.forward import forward_final, forward_sequence
from src.domain.cell.readout import readout
from src.domain.entities.forward_cache import ForwardCache
from src.domain.entities.layer_params import LayerParams, LayerParamsFactory, ReadoutParams
from src.domain.entities.task_batch import TaskBatch
from src.domain.exceptions import InputError
from src.domain.grad.backward import backward_sequence, final_step_grads, grads_to_dict
from src.domain.optim.constraints import (
    ConstraintViolation, SpectralMemo, check_constraints, project_constraints
)
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.variant import VariantFlag


class EvalResult(NamedTuple):
    """Pérdida media y tasa de error sobre un conjunto de evaluación."""
    loss: float
    error_rate: Optional[float]
    count: int


@dataclass
class Network:
    """
    Pila de capas duales con su cabezal de lectura.

    Atributos:
        layers (List[LayerParams]): Parámetros por capa, de abajo arriba
        head (ReadoutParams): Cabezal sobre el último estado de la capa superior
        variants (List[VariantFlag]): Variante por capa
        specs (List[ConstraintSpec]): Restricciones por capa
    """

    layers: List[LayerParams]
    head: ReadoutParams
    variants: List[VariantFlag] = field(default_factory=list)
    specs: List[ConstraintSpec] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.layers) == len(self.variants) == len(self.specs)) or not self.layers:
            raise InputError("Capas, variantes y restricciones deben tener la misma longitud")

    @property
    def inputs(self) -> int:
        return self.layers[0].inputs

    def flat_params(self) -> Dict[str, np.ndarray]:
        """Tensores con claves "layer{i}.{nombre}" y "readout.{nombre}"."""
        flat = {f"layer{index}.{name}": value
                for index, layer in enumerate(self.layers)
                for name, value in layer.to_tensors().items()}
        flat.update({f"readout.{name}": value for name, value in self.head.to_tensors().items()})
        return flat

    def with_flat(self, flat: Dict[str, np.ndarray]) -> 'Network':
        """Nueva red con los tensores dados (mismas claves que flat_params)."""
        layers = [
            LayerParams.from_tensors({name[len(f"layer{index}."):]: value
                                      for name, value in flat.items()
                                      if name.startswith(f"layer{index}.")})
            for index in range(len(self.layers))
        ]
        head = ReadoutParams.from_tensors({name[len("readout."):]: value
                                           for name, value in flat.items()
                                           if name.startswith("readout.")})
        return Network(layers=layers, head=head, variants=list(self.variants), specs=list(self.specs))

    def project(self, memos: Optional[List[SpectralMemo]] = None) -> 'Network':
        """
        Aplica project_constraints a cada capa.

        Args:
            memos: Un SpectralMemo por capa, que la proyección lee y actualiza
        """
        memos = memos or [None] * len(self.layers)
        layers = [project_constraints(layer, spec, variant, memo)
                  for layer, spec, variant, memo in zip(self.layers, self.specs, self.variants, memos)]
        return Network(layers=layers, head=self.head.copy(), variants=list(self.variants),
                       specs=list(self.specs))

    def check_constraints(self, check_sigma: bool = True,
                          memos: Optional[List[SpectralMemo]] = None) -> List[ConstraintViolation]:
        memos = memos or [None] * len(self.layers)
        violations: List[ConstraintViolation] = []
        for index, (layer, spec, variant) in enumerate(zip(self.layers, self.specs, self.variants)):
            violations.extend(check_constraints(layer, spec, variant, layer=index,
                                                check_sigma=check_sigma, memo=memos[index]))
        return violations

    # ------------------------------------------------------------------
    # Cálculo
    # ------------------------------------------------------------------

    def trace(self, x) -> List[ForwardCache]:
        """Recorrido completo con cachés, para exportar activaciones."""
        caches, _ = forward_sequence(self.layers, x, self.variants)
        return caches

    def loss_and_grads(
        self,
        batch: TaskBatch,
        classification: bool,
        train_b_s: bool = True,
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        """
        Pérdida media del lote y gradientes con las claves de flat_params.

        Raises:
            InputError: Si el lote no encaja con la red
            NumericalError: Si aparece un valor no finito
        """
        caches, top = forward_sequence(self.layers, batch, self.variants)
        result = readout(self.head, top[-1], classification, batch.targets)
        top_grads = final_step_grads(result.grad_h, batch.length)
        grads = grads_to_dict(backward_sequence(self.layers, caches, top_grads,
                                                train_b_s=train_b_s))
        grads['readout.w_out'] = result.grad_w_out
        grads['readout.b_out'] = result.grad_b_out
        return result.loss, grads

    def evaluate(self, batches: Iterable[TaskBatch], classification: bool) -> EvalResult:
        """
        Pérdida y tasa de error sobre varios lotes, ponderadas por su tamaño.

        Usa el recorrido sin cachés, así que la memoria no depende de L.
        """
        total_loss = 0.0
        total_errors = 0.0
        count = 0
        for batch in batches:
            top = forward_final(self.layers, batch, self.variants)
            result = readout(self.head, top, classification, batch.targets)
            total_loss += result.loss * batch.batch
            if result.error_rate is not None:
                total_errors += result.error_rate * batch.batch
            count += batch.batch
        if count == 0:
            raise InputError("Conjunto de evaluación vacío")
        return EvalResult(loss=total_loss / count,
                          error_rate=total_errors / count if classification else None,
                          count=count)


class NetworkFactory:
    """Factory para crear redes inicializadas."""

    @staticmethod
    def initialize(
        inputs: int,
        neurons: List[int],
        variants: List[VariantFlag],
        specs: List[ConstraintSpec],
        outputs: int,
        head_bias: float,
        rng: np.random.Generator,
    ) -> Network:
        """
        Inicializa capa a capa en orden; la entrada de la capa l es la salida de l−1.

        Args:
            inputs: Dimensión M de la entrada de la primera capa
            neurons: Neuronas por capa
            variants: Variante por capa
            specs: Restricciones por capa
            outputs: Dimensión K del cabezal
            head_bias: Sesgo inicial del cabezal
            rng: Generador para la inicialización
        """
        layers: List[LayerParams] = []
        fan_in = inputs
        for width, variant, spec in zip(neurons, variants, specs):
            layers.append(LayerParamsFactory.initialize(fan_in, width, spec, variant, rng))
            fan_in = width
        head = LayerParamsFactory.initialize_readout(neurons[-1], outputs, bias=head_bias)
        return Network(layers=layers, head=head, variants=list(variants), specs=list(specs))

    @staticmethod
    def from_tensors(
        tensors: Dict[str, np.ndarray],
        variants: List[VariantFlag],
        specs: List[ConstraintSpec],
    ) -> Network:
        """
        Reconstruye una red desde tensores planos (por ejemplo, de un checkpoint).

        Raises:
            InputError: Si faltan capas o tensores
        """
        layers = []
        for index in range(len(variants)):
            prefix = f"layer{index}."
            layer_tensors = {name[len(prefix):]: value for name, value in tensors.items()
                             if name.startswith(prefix)}
            if not layer_tensors:
                raise InputError(f"No hay tensores para la capa {index}")
            layers.append(LayerParams.from_tensors(layer_tensors))
        head = ReadoutParams.from_tensors({name[len("readout."):]: value
                                           for name, value in tensors.items()
                                           if name.startswith("readout.")})
        return Network(layers=layers, head=head, variants=list(variants), specs=list(specs))
