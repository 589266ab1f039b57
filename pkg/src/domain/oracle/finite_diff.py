# src/domain/oracle/finite_diff.py
"""
Diferencias finitas centrales sobre la pérdida con selección congelada.

La pérdida congelada repite el recorrido hacia delante recalculando la
selección a partir de los estados h̃_t, h_{t−1} y las cotas de mm
registrados en la pasada base. Para los parámetros que no son de la
selección eso equivale a fijar S_t; para W_ss, W_ls, b_s y b_thre deja
solo la dependencia directa de S_t en cada paso.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.constants import (
    FD_DEFAULT_STEP, FD_MAX_STEP, FD_MIN_STEP, KINK_MARGIN, KINK_MAX_RESAMPLES
)
from src.domain.cell.forward import forward_sequence
from src.domain.cell.readout import readout
from src.domain.entities.forward_cache import ForwardCache
from src.domain.entities.layer_params import LayerParams, LayerParamsFactory, ReadoutParams
from src.domain.exceptions import InputError, OracleEnvironmentError
from src.domain.grad.backward import backward_sequence, final_step_grads
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.variant import VariantFlag


@dataclass
class FrozenInstance:
    """
    Instancia de verificación: red, entradas, pasada base y pesos de la pérdida.

    La pérdida es Σ_t ⟨probe_t, salida_t⟩ más, si hay cabezal, el MSE de la
    lectura del último estado frente a `targets`.

    Atributos:
        layers (List[LayerParams]): Parámetros por capa
        variants (List[VariantFlag]): Variante por capa
        inputs (np.ndarray): Entradas (L, B, M)
        caches (List[ForwardCache]): Pasada base registrada
        probe (np.ndarray): Pesos (L, B, N) de la pérdida lineal
        head (Optional[ReadoutParams]): Cabezal de regresión opcional
        targets (Optional[np.ndarray]): Objetivos (B,) del cabezal
    """

    layers: List[LayerParams]
    variants: List[VariantFlag]
    inputs: np.ndarray
    caches: List[ForwardCache]
    probe: np.ndarray
    head: Optional[ReadoutParams] = None
    targets: Optional[np.ndarray] = None

    def frozen_loss(self, layers: Optional[Sequence[LayerParams]] = None,
                    head: Optional[ReadoutParams] = None) -> float:
        """Pérdida congelada con los parámetros dados (por defecto los de la instancia)."""
        layers = self.layers if layers is None else layers
        head = self.head if head is None else head
        _, outputs = forward_sequence(layers, self.inputs, self.variants, pinned=self.caches)
        loss = float(np.sum(self.probe * outputs))
        if head is not None:
            loss += readout(head, outputs[-1], False, self.targets).loss
        return loss

    def top_grads(self) -> np.ndarray:
        """Gradientes locales de la capa superior para la pérdida de la instancia."""
        grads = self.probe.copy()
        if self.head is not None:
            outputs = self.caches[-1].outputs
            result = readout(self.head, outputs[-1], False, self.targets)
            grads += final_step_grads(result.grad_h, outputs.shape[0])
        return grads

    def analytic(self, train_b_s: bool = True) -> Dict[str, np.ndarray]:
        """Gradientes analíticos por clave "layer{i}.{nombre}" y "readout.*"."""
        grads = backward_sequence(self.layers, self.caches, self.top_grads(), train_b_s=train_b_s)
        flat = {f"layer{index}.{name}": value
                for index, layer in enumerate(grads) for name, value in layer.params.items()}
        if self.head is not None:
            result = readout(self.head, self.caches[-1].outputs[-1], False, self.targets)
            flat['readout.w_out'] = result.grad_w_out
            flat['readout.b_out'] = result.grad_b_out
        return flat


def kink_margin(caches: Sequence[ForwardCache], b_thre: Sequence[float]) -> float:
    """
    Distancia mínima a un codo de relu o a un empate de mm en la pasada.

    Considera |pre-activaciones| de las subcapas activas, |mm − b_thre| y
    los huecos max − min de mm.
    """
    margin = np.inf
    for cache, thre in zip(caches, b_thre):
        variant = cache.variant
        if variant.has_short:
            margin = min(margin, float(np.min(np.abs(cache.pre_short))))
        if variant.has_long:
            margin = min(margin, float(np.min(np.abs(cache.pre_long))))
        if variant.has_selection:
            margin = min(margin, float(np.min(np.abs(cache.mm - thre))))
            margin = min(margin, float(np.min(cache.mm_max - cache.mm_min)))
    return margin


def random_layer(inputs: int, neurons: int, spec: ConstraintSpec, variant: VariantFlag,
                 rng: np.random.Generator) -> LayerParams:
    """Capa inicializada con sesgos aleatorios pequeños y b_thre en [0.05, 0.5]."""
    layer = LayerParamsFactory.initialize(inputs, neurons, spec, variant, rng)
    tensors = layer.to_tensors()
    for name in ('b_short', 'b_s', 'b_long'):
        tensors[name] = rng.uniform(-0.1, 0.1, size=neurons)
    tensors['b_thre'] = rng.uniform(0.05, 0.5)
    return LayerParams.from_tensors(tensors)


def sample_frozen_instance(
    rng: np.random.Generator,
    variants: Sequence[VariantFlag],
    neurons: Sequence[int],
    inputs: int,
    length: int,
    batch: int,
    with_head: bool = False,
    margin: float = KINK_MARGIN,
    max_resamples: int = KINK_MAX_RESAMPLES,
    all_long_active: bool = False,
) -> FrozenInstance:
    """
    Muestrea instancias hasta que la pasada base queda lejos de los codos.

    Args:
        rng: Generador
        variants: Variante por capa
        neurons: Neuronas por capa
        inputs: Dimensión de entrada M
        length: Longitud L
        batch: Tamaño de lote B
        with_head: Añadir un cabezal de regresión a la pérdida
        margin: Distancia mínima exigida a los codos
        max_resamples: Intentos antes de abandonar
        all_long_active: Exigir además que todas las neuronas largas estén
            activas en todos los pasos

    Raises:
        OracleEnvironmentError: Si no se encuentra una instancia válida
    """
    if len(variants) != len(neurons) or not variants:
        raise InputError("Se necesita una variante por capa")
    for _ in range(max_resamples):
        layers = []
        fan_in = inputs
        for index, (variant, width) in enumerate(zip(variants, neurons)):
            spec = ConstraintSpec.for_layer(length, last_layer=index == len(variants) - 1)
            layers.append(random_layer(fan_in, width, spec, variant, rng))
            fan_in = width
        x = rng.uniform(-1.0, 1.0, size=(length, batch, inputs))
        caches, _ = forward_sequence(layers, x, list(variants))
        if kink_margin(caches, [layer.b_thre for layer in layers]) <= margin:
            continue
        if all_long_active and not all(np.all(c.pre_long > 0.0) for c in caches):
            continue
        probe = rng.uniform(-1.0, 1.0, size=(length, batch, neurons[-1]))
        head = targets = None
        if with_head:
            head = ReadoutParams(w_out=rng.uniform(-0.5, 0.5, size=(1, neurons[-1])),
                                 b_out=rng.uniform(-0.5, 0.5, size=1))
            targets = rng.uniform(0.0, 2.0, size=batch)
        return FrozenInstance(layers=layers, variants=list(variants), inputs=x, caches=caches,
                              probe=probe, head=head, targets=targets)
    raise OracleEnvironmentError(
        f"Sin instancia a más de {margin} de los codos tras {max_resamples} intentos"
    )


def _perturbed(instance: FrozenInstance, key: str, index, delta: float):
    layers = list(instance.layers)
    head = instance.head
    owner, name = key.split('.', 1)
    if owner == 'readout':
        tensors = head.to_tensors()
        tensors[name] = tensors[name].copy()
        tensors[name][index] += delta
        return layers, ReadoutParams.from_tensors(tensors)
    layer_index = int(owner[len('layer'):])
    tensors = layers[layer_index].to_tensors()
    tensors[name] = np.array(tensors[name], dtype=np.float64)
    tensors[name][index] += delta
    layers[layer_index] = LayerParams.from_tensors(tensors)
    return layers, head


def finite_diff_frozen(instance: FrozenInstance, key: str, step: float = FD_DEFAULT_STEP) -> np.ndarray:
    """
    Gradiente numérico por diferencias centrales de la pérdida congelada.

    Args:
        instance: Instancia de verificación
        key: Parámetro ("layer0.w_in", "readout.w_out", ...)
        step: Paso h en [1e-7, 1e-3]

    Returns:
        Array con la forma del parámetro

    Raises:
        InputError: Si el paso está fuera de rango o la clave no existe
    """
    if not FD_MIN_STEP <= step <= FD_MAX_STEP:
        raise InputError(f"Paso {step} fuera de [{FD_MIN_STEP}, {FD_MAX_STEP}]")
    owner, _, name = key.partition('.')
    if owner == 'readout':
        if instance.head is None:
            raise InputError("La instancia no tiene cabezal de lectura")
        base = instance.head.to_tensors()
    elif owner.startswith('layer') and owner[len('layer'):].isdigit():
        layer_index = int(owner[len('layer'):])
        if layer_index >= len(instance.layers):
            raise InputError(f"Capa {layer_index} inexistente")
        base = instance.layers[layer_index].to_tensors()
    else:
        raise InputError(f"Clave de parámetro no válida: {key}")
    if name not in base:
        raise InputError(f"Parámetro desconocido: {key}")

    shape = np.shape(base[name])
    numeric = np.zeros(shape)
    indices = list(np.ndindex(*shape))
    if name == 'w_rec' and owner != 'readout' and instance.variants[layer_index].diagonal_recurrence:
        # W_rec diagonal: solo la diagonal es un parámetro libre
        indices = [(i, i) for i in range(shape[0])]
    for index in indices:
        plus = instance.frozen_loss(*_perturbed(instance, key, index, step))
        minus = instance.frozen_loss(*_perturbed(instance, key, index, -step))
        numeric[index] = (plus - minus) / (2.0 * step)
    return numeric
