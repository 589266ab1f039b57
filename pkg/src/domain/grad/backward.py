# src/domain/grad/backward.py
"""
Retropropagación truncada en el tiempo, en forma iterativa.

La selección S_t se trata como constante en las recursiones de estado:
no hay camino de gradiente de S_t hacia h̃_t ni hacia h_{t−1}. Los
gradientes de los parámetros de la selección solo usan la aparición
directa de S_t en cada paso, con mm' = 1/(max − min) constante.
"""
from typing import List, Optional, Sequence

import numpy as np

from src.domain.cell.forward import mm_slope, relu_mask
from src.domain.entities.forward_cache import ForwardCache
from src.domain.entities.layer_grads import LayerGrads, StateGrads
from src.domain.entities.layer_params import PARAM_NAMES, LayerParams
from src.domain.exceptions import InputError, NumericalError
from src.domain.value_objects.variant import VariantFlag


def backward_state_long(g_next, local, u, relu_mask_next) -> np.ndarray:
    """
    ∂Loss/∂h_t = local_t + diag(U ∘ σ'_{s,t+1}) · ∂Loss/∂h_{t+1}.

    Funciona con vectores (N) o lotes (B, N).
    """
    return local + u * relu_mask_next * g_next


def backward_state_short(g_long_t, s_t, w_s, relu_mask_long_t,
                         g_short_next, w_rec, relu_mask_short_next) -> np.ndarray:
    """
    ∂Loss/∂h̃_t = diag(S_t)·W_sᵀ·diag(σ'_{s,t})·∂Loss/∂h_t
                + W_recᵀ·diag(σ'_{f,t+1})·∂Loss/∂h̃_{t+1}.

    Con filas de lote, Wᵀ·v se escribe v @ W.
    """
    return (s_t * ((relu_mask_long_t * g_long_t) @ w_s)
            + (relu_mask_short_next * g_short_next) @ w_rec)


def final_step_grads(grad_h: np.ndarray, length: int) -> np.ndarray:
    """Gradientes locales (L, B, N) con solo el último paso no nulo."""
    grad_h = np.atleast_2d(np.asarray(grad_h, dtype=np.float64))
    local = np.zeros((length,) + grad_h.shape)
    local[-1] = grad_h
    return local


def _check_cache(params: LayerParams, cache: ForwardCache, local: np.ndarray) -> None:
    if cache.neurons != params.neurons or cache.x.shape[2] != params.inputs:
        raise InputError(
            f"Caché ({cache.neurons} neuronas, {cache.x.shape[2]} entradas) incompatible "
            f"con la capa ({params.neurons}, {params.inputs})"
        )
    expected = (cache.length, cache.batch, cache.neurons)
    if local.shape != expected:
        raise InputError(f"Gradientes locales con forma {local.shape}, se esperaba {expected}")


def backward_states(params: LayerParams, cache: ForwardCache, local: np.ndarray) -> StateGrads:
    """
    Recorre t = L−1 … 0 manteniendo el par (∂Loss/∂h_t, ∂Loss/∂h̃_t).

    Args:
        params: Parámetros de la capa
        cache: Caché del recorrido hacia delante
        local: ∂Loss_t/∂(salida de la capa)_t, forma (L, B, N); la salida es
            h_t, o h̃_t en la variante rnn_relu

    Returns:
        StateGrads con ambos gradientes de estado por paso
    """
    local = np.asarray(local, dtype=np.float64)
    _check_cache(params, cache, local)
    variant = cache.variant
    length, batch, neurons = local.shape
    grads = StateGrads.zeros(length, batch, neurons)
    mask_long = relu_mask(cache.pre_long)
    mask_short = relu_mask(cache.pre_short)
    zero = np.zeros((batch, neurons))

    g_long_next, g_short_next = zero, zero
    mask_long_next, mask_short_next = zero, zero
    for t in range(length - 1, -1, -1):
        if variant.has_long:
            g_long = backward_state_long(g_long_next, local[t], params.u, mask_long_next)
        else:
            g_long = zero
        if variant.has_short:
            g_short = backward_state_short(g_long, cache.s[t], params.w_s, mask_long[t],
                                           g_short_next, params.w_rec, mask_short_next)
            if variant.output_is_short:
                g_short = g_short + local[t]
        else:
            g_short = zero
        grads.g_h_long[t] = g_long
        grads.g_h_short[t] = g_short
        g_long_next, g_short_next = g_long, g_short
        mask_long_next, mask_short_next = mask_long[t], mask_short[t]
    return grads


def _outer_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Σ_t Σ_b a_{t,b} b_{t,b}ᵀ para arrays (L, B, ·)."""
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def _shift_prev(states: np.ndarray) -> np.ndarray:
    """Secuencia de estados previos: (0, s_0, …, s_{L−2})."""
    prev = np.zeros_like(states)
    prev[1:] = states[:-1]
    return prev


def _first_bad_step(*deltas: np.ndarray) -> Optional[int]:
    bad = np.zeros(deltas[0].shape[0], dtype=bool)
    for delta in deltas:
        bad |= ~np.all(np.isfinite(delta), axis=tuple(range(1, delta.ndim)))
    steps = np.flatnonzero(bad)
    return int(steps[-1]) if steps.size else None


def accumulate_param_grads(
    cache: ForwardCache,
    state_grads: StateGrads,
    params: LayerParams,
    train_b_s: bool = True,
    layer_index: Optional[int] = None,
) -> LayerGrads:
    """
    Gradientes de todos los parámetros de la capa y ∂Loss/∂x_t.

    Args:
        cache: Caché del recorrido hacia delante
        state_grads: Gradientes de estado de backward_states
        params: Parámetros de la capa
        train_b_s: Si False, ∂Loss/∂b_s se deja a cero
        layer_index: Índice de capa para los mensajes de error

    Returns:
        LayerGrads

    Raises:
        NumericalError: Si algún gradiente no es finito (indica parámetro y paso)
    """
    variant = cache.variant
    grads = LayerGrads.zeros_like(params, cache.length, cache.batch)
    g = grads.params
    delta_long = relu_mask(cache.pre_long) * state_grads.g_h_long
    delta_short = relu_mask(cache.pre_short) * state_grads.g_h_short
    h_long_prev = _shift_prev(cache.h_long)
    kernel = np.zeros_like(delta_long)

    if variant.has_long:
        g['u'] = np.sum(delta_long * h_long_prev, axis=(0, 1))
        g['b_long'] = np.sum(delta_long, axis=(0, 1))

    if variant == VariantFlag.INDRNN:
        g['w_in'] = _outer_sum(delta_long, cache.x)
        grads.g_x = delta_long @ params.w_in
    elif variant.has_short:
        g['w_rec'] = _outer_sum(delta_short, _shift_prev(cache.h_short))
        if variant.diagonal_recurrence:
            g['w_rec'] = np.diag(np.diag(g['w_rec']))
        g['w_in'] = _outer_sum(delta_short, cache.x)
        g['b_short'] = np.sum(delta_short, axis=(0, 1))
        grads.g_x = delta_short @ params.w_in

    if variant.has_long and variant != VariantFlag.INDRNN:
        g['w_s'] = _outer_sum(delta_long, cache.i)

    if variant.has_selection:
        gate = (cache.mm - params.b_thre > 0.0).astype(np.float64)
        through_gate = (delta_long @ params.w_s) * cache.h_short * gate
        g['b_thre'] = np.asarray(-np.sum(through_gate))
        kernel = through_gate * mm_slope(cache.mm_min, cache.mm_max)[..., None]
        g['w_ss'] = _outer_sum(kernel, cache.h_short)
        g['w_ls'] = _outer_sum(kernel, h_long_prev)
        if train_b_s:
            g['b_s'] = np.sum(kernel, axis=(0, 1))

    bad_param = grads.first_non_finite()
    if bad_param is not None or not np.all(np.isfinite(grads.g_x)):
        raise NumericalError(
            "Gradiente no finito",
            step=_first_bad_step(delta_long, delta_short, kernel),
            layer=layer_index,
            parameter=bad_param or 'x',
        )
    return grads


def backward_layer(
    params: LayerParams,
    cache: ForwardCache,
    local: np.ndarray,
    train_b_s: bool = True,
    layer_index: Optional[int] = None,
) -> LayerGrads:
    """Gradientes de una capa dados los gradientes locales de su salida."""
    states = backward_states(params, cache, local)
    return accumulate_param_grads(cache, states, params, train_b_s=train_b_s,
                                  layer_index=layer_index)


def backward_sequence(
    layers: Sequence[LayerParams],
    caches: Sequence[ForwardCache],
    top_grads: np.ndarray,
    train_b_s: bool = True,
) -> List[LayerGrads]:
    """
    Retropropagación por toda la pila, de la capa superior a la inferior.

    Args:
        layers: Parámetros por capa (de abajo arriba)
        caches: Cachés de forward_sequence con los mismos parámetros
        top_grads: ∂Loss_t/∂(salida superior)_t, forma (L, B, N)
        train_b_s: Calcular o no ∂Loss/∂b_s

    Returns:
        LayerGrads por capa, en el orden de `layers`

    Raises:
        InputError: Si cachés y parámetros no encajan
    """
    if len(layers) != len(caches) or not layers:
        raise InputError(f"{len(layers)} capas pero {len(caches)} cachés")
    local = np.asarray(top_grads, dtype=np.float64)
    result: List[Optional[LayerGrads]] = [None] * len(layers)
    for index in range(len(layers) - 1, -1, -1):
        grads = backward_layer(layers[index], caches[index], local,
                               train_b_s=train_b_s, layer_index=index)
        result[index] = grads
        local = grads.g_x
    return result


def grads_to_dict(grads: Sequence[LayerGrads]) -> dict:
    """Aplana los gradientes por capa con claves "layer{i}.{nombre}"."""
    return {f"layer{index}.{name}": layer.params[name]
            for index, layer in enumerate(grads) for name in PARAM_NAMES}
