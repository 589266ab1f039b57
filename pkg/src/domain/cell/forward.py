# src/domain/cell/forward.py
"""
Recorrido hacia delante de la celda dual.

Convención de lote: los estados son matrices (B, N) con una fila por
secuencia y W·x se calcula como x @ Wᵀ. Un vector 1D se trata como un
lote de tamaño 1.
"""
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from src.config.constants import MM_DEGENERATE_GAP
from src.domain.entities.forward_cache import ForwardCache, StepCache
from src.domain.entities.layer_params import LayerParams
from src.domain.entities.task_batch import TaskBatch
from src.domain.exceptions import InputError, NumericalError
from src.domain.value_objects.variant import VariantFlag


class Selection(NamedTuple):
    """Resultado del mecanismo de selección para un paso."""
    s: np.ndarray
    sel_pre: np.ndarray
    mm: np.ndarray
    mm_min: np.ndarray
    mm_max: np.ndarray


class SelectionPins(NamedTuple):
    """
    Entradas registradas de la selección para un paso.

    Con pins, la selección se recalcula a partir de los estados y las cotas
    de mm grabados en vez de los estados actuales.
    """
    h_short: np.ndarray
    h_long_prev: np.ndarray
    mm_min: np.ndarray
    mm_max: np.ndarray


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def relu_mask(z: np.ndarray) -> np.ndarray:
    """Derivada de relu como máscara {0, 1}; en z = 0 vale 0."""
    return (np.asarray(z) > 0.0).astype(np.float64)


def mm_slope(mm_min, mm_max) -> np.ndarray:
    """mm' = 1/(max − min); 0 en el caso degenerado."""
    gap = np.asarray(mm_max, dtype=np.float64) - np.asarray(mm_min, dtype=np.float64)
    ok = gap >= MM_DEGENERATE_GAP
    return np.where(ok, 1.0 / np.where(ok, gap, 1.0), 0.0)


def _normalize_with(v: np.ndarray, low, high) -> np.ndarray:
    low = np.asarray(low, dtype=np.float64)
    gap = np.asarray(high, dtype=np.float64) - low
    ok = np.expand_dims(gap >= MM_DEGENERATE_GAP, -1)
    safe = np.expand_dims(np.where(gap >= MM_DEGENERATE_GAP, gap, 1.0), -1)
    return np.where(ok, (v - np.expand_dims(low, -1)) / safe, 0.0)


def min_max_normalize(v) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Normalización min-max sobre el último eje.

    Args:
        v: Vector (N) o lote de vectores (B, N)

    Returns:
        (normalizado, min, max); min y max son escalares para un vector y
        arrays (B,) para un lote. Si max − min < 1e-12 la salida es cero.

    Raises:
        InputError: Si v está vacío
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0 or v.shape[-1] == 0:
        raise InputError("min_max_normalize requiere un vector no vacío")
    low = np.min(v, axis=-1)
    high = np.max(v, axis=-1)
    return _normalize_with(v, low, high), low, high


def _as_batch(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InputError(f"{name} debe ser un vector o un lote (B, n), tiene forma {arr.shape}")
    return arr


def selection_weights(
    params: LayerParams,
    h_short,
    h_long_prev,
    pinned: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Selection:
    """
    Pesos de selección S_t = relu(mm(W_ss·h̃_t + W_ls·h_{t−1} + b_s) − b_thre).

    Args:
        params: Parámetros de la capa
        h_short: h̃_t, (N) o (B, N)
        h_long_prev: h_{t−1}, misma forma
        pinned: Cotas (min, max) fijas de mm; por defecto se calculan

    Returns:
        Selection con S_t y los campos de caché
    """
    h_short = _as_batch(h_short, "h_short")
    h_long_prev = _as_batch(h_long_prev, "h_long_prev")
    n = params.neurons
    if h_short.shape[1] != n or h_long_prev.shape != h_short.shape:
        raise InputError(
            f"Estados incompatibles con N={n}: {h_short.shape}, {h_long_prev.shape}"
        )
    sel_pre = h_short @ params.w_ss.T + h_long_prev @ params.w_ls.T + params.b_s
    if pinned is None:
        mm, low, high = min_max_normalize(sel_pre)
    else:
        low, high = (np.asarray(bound, dtype=np.float64) for bound in pinned)
        mm = _normalize_with(sel_pre, low, high)
    s = relu(mm - params.b_thre)
    return Selection(s=s, sel_pre=sel_pre, mm=mm, mm_min=low, mm_max=high)


def forward_step(
    params: LayerParams,
    x_t,
    h_short_prev,
    h_long_prev,
    variant: VariantFlag,
    t: Optional[int] = None,
    pins: Optional[SelectionPins] = None,
) -> StepCache:
    """
    Un paso de la celda para todo el lote.

    Args:
        params: Parámetros de la capa
        x_t: Entrada (M) o (B, M)
        h_short_prev: h̃_{t−1}
        h_long_prev: h_{t−1}
        variant: Variante de la capa
        t: Índice del paso, solo para los mensajes de error
        pins: Entradas de selección registradas (pérdida congelada)

    Returns:
        StepCache con h̃_t, h_t y los valores intermedios

    Raises:
        InputError: Si las dimensiones no coinciden
        NumericalError: Si la salida no es finita
    """
    x_t = _as_batch(x_t, "x_t")
    h_short_prev = _as_batch(h_short_prev, "h_short_prev")
    h_long_prev = _as_batch(h_long_prev, "h_long_prev")
    n, m = params.neurons, params.inputs
    batch = x_t.shape[0]
    if x_t.shape[1] != m:
        raise InputError(f"x_t tiene {x_t.shape[1]} rasgos, la capa espera {m}")
    for name, state in (("h_short_prev", h_short_prev), ("h_long_prev", h_long_prev)):
        if state.shape != (batch, n):
            raise InputError(f"{name} debe tener forma {(batch, n)}, tiene {state.shape}")

    zeros = np.zeros((batch, n))
    zeros_b = np.zeros(batch)
    drive = x_t @ params.w_in.T

    if variant.has_short:
        pre_short = drive + h_short_prev @ params.w_rec.T + params.b_short
        h_short = relu(pre_short)
    else:
        pre_short, h_short = zeros, zeros.copy()

    if variant.has_selection:
        if pins is None:
            sel = selection_weights(params, h_short, h_long_prev)
        else:
            sel = selection_weights(params, pins.h_short, pins.h_long_prev,
                                    pinned=(pins.mm_min, pins.mm_max))
        s, sel_pre, mm, mm_min, mm_max = sel
    elif variant == VariantFlag.NO_SELECTION:
        s, sel_pre, mm, mm_min, mm_max = np.ones((batch, n)), zeros, zeros, zeros_b, zeros_b
    else:
        s, sel_pre, mm, mm_min, mm_max = zeros, zeros, zeros, zeros_b, zeros_b

    if variant == VariantFlag.INDRNN:
        i = zeros
        pre_long = drive + params.u * h_long_prev + params.b_long
        h_long = relu(pre_long)
    elif variant.has_long:
        i = s * h_short
        pre_long = i @ params.w_s.T + params.u * h_long_prev + params.b_long
        h_long = relu(pre_long)
    else:
        i, pre_long, h_long = zeros, zeros, zeros.copy()

    if not (np.all(np.isfinite(h_short)) and np.all(np.isfinite(h_long))):
        raise NumericalError("Estado no finito en el recorrido hacia delante", step=t)

    return StepCache(
        x=x_t, pre_short=pre_short, h_short=h_short, sel_pre=sel_pre,
        mm_min=np.asarray(mm_min, dtype=np.float64), mm_max=np.asarray(mm_max, dtype=np.float64),
        mm=mm, s=s, i=i, pre_long=pre_long, h_long=h_long,
    )


def _time_major(x: Union[TaskBatch, np.ndarray]) -> np.ndarray:
    if isinstance(x, TaskBatch):
        return x.time_major()
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise InputError(f"La secuencia debe tener forma (L, B, M), tiene {arr.shape}")
    return arr


def _pins_at(cache: ForwardCache, t: int) -> SelectionPins:
    return SelectionPins(h_short=cache.h_short[t], h_long_prev=cache.h_long_prev(t),
                         mm_min=cache.mm_min[t], mm_max=cache.mm_max[t])


def run_layer(
    params: LayerParams,
    x: np.ndarray,
    variant: VariantFlag,
    layer_index: int = 0,
    pinned: Optional[ForwardCache] = None,
) -> ForwardCache:
    """Recorre una capa sobre x (L, B, M) desde estado cero."""
    length, batch, _ = x.shape
    if pinned is not None and (pinned.length, pinned.batch) != (length, batch):
        raise InputError("La caché fijada no coincide con la secuencia")
    h_short = np.zeros((batch, params.neurons))
    h_long = np.zeros((batch, params.neurons))
    steps: List[StepCache] = []
    for t in range(length):
        pins = _pins_at(pinned, t) if pinned is not None and variant.has_selection else None
        try:
            step = forward_step(params, x[t], h_short, h_long, variant, t=t, pins=pins)
        except NumericalError as error:
            raise NumericalError("Estado no finito en el recorrido hacia delante",
                                 step=error.step, layer=layer_index) from error
        steps.append(step)
        h_short, h_long = step.h_short, step.h_long
    return ForwardCache.from_steps(variant, steps)


def forward_sequence(
    layers: Sequence[LayerParams],
    x: Union[TaskBatch, np.ndarray],
    variants: Sequence[VariantFlag],
    pinned: Optional[Sequence[ForwardCache]] = None,
) -> Tuple[List[ForwardCache], np.ndarray]:
    """
    Recorre la pila de capas; la salida de cada capa es la entrada de la siguiente.

    Args:
        layers: Parámetros por capa, de abajo arriba
        x: TaskBatch o entradas (L, B, M)
        variants: Variante por capa
        pinned: Cachés registradas cuyas entradas de selección se reutilizan

    Returns:
        (cachés por capa, salidas de la capa superior (L, B, N))

    Raises:
        InputError: Si las anchuras de las capas no encajan
        NumericalError: Si aparece un valor no finito (indica capa y paso)
    """
    if not layers:
        raise InputError("Se necesita al menos una capa")
    if len(variants) != len(layers):
        raise InputError(f"{len(layers)} capas pero {len(variants)} variantes")
    if pinned is not None and len(pinned) != len(layers):
        raise InputError("Número de cachés fijadas distinto del de capas")

    current = _time_major(x)
    caches: List[ForwardCache] = []
    for index, (params, variant) in enumerate(zip(layers, variants)):
        if current.shape[2] != params.inputs:
            raise InputError(
                f"La capa {index} espera {params.inputs} entradas y recibe {current.shape[2]}"
            )
        cache = run_layer(params, current, variant, layer_index=index,
                          pinned=None if pinned is None else pinned[index])
        caches.append(cache)
        current = cache.outputs
    return caches, current


def forward_final(
    layers: Sequence[LayerParams],
    x: Union[TaskBatch, np.ndarray],
    variants: Sequence[VariantFlag],
) -> np.ndarray:
    """
    Salida de la capa superior en el último paso, sin guardar cachés.

    Recorre el tiempo por fuera y las capas por dentro, así que la memoria
    no crece con L. Produce los mismos valores que forward_sequence.
    """
    if len(variants) != len(layers) or not layers:
        raise InputError(f"{len(layers)} capas pero {len(variants)} variantes")
    inputs = _time_major(x)
    length, batch, _ = inputs.shape
    states = [(np.zeros((batch, p.neurons)), np.zeros((batch, p.neurons))) for p in layers]
    top = None
    for t in range(length):
        current = inputs[t]
        for index, (params, variant) in enumerate(zip(layers, variants)):
            if current.shape[1] != params.inputs:
                raise InputError(
                    f"La capa {index} espera {params.inputs} entradas y recibe {current.shape[1]}"
                )
            try:
                step = forward_step(params, current, states[index][0], states[index][1], variant, t=t)
            except NumericalError as error:
                raise NumericalError("Estado no finito en el recorrido hacia delante",
                                     step=t, layer=index) from error
            states[index] = (step.h_short, step.h_long)
            current = step.h_short if variant.output_is_short else step.h_long
        top = current
    return top
