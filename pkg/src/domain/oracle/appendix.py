# src/domain/oracle/appendix.py
"""
Gradientes por sumas explícitas sobre (t, m, k), sin reutilización iterativa.

Cada producto de Jacobianos se calcula desde cero:

    ∂h_t/∂h_k  = ∏_{j=k+1}^{t} diag(U ∘ σ'_{s,j})
    ∂h_m/∂h̃_m = diag(σ'_{s,m}) · W_s · diag(S_m)
    ∂h̃_m/∂h̃_k = ∏_{j=k+1}^{m} diag(σ'_{f,j}) · W_rec
    ∂h_t/∂h̃_k = Σ_{m=k}^{t} (∂h_t/∂h_m)(∂h_m/∂h̃_m)(∂h̃_m/∂h̃_k)

La semántica de truncado es la misma que en la retropropagación
iterativa; el coste es O(L³) por secuencia, de ahí los límites de tamaño.
"""
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.config.constants import ORACLE_MAX_NEURONS, ORACLE_MAX_STEPS
from src.domain.cell.forward import mm_slope, relu_mask
from src.domain.entities.forward_cache import ForwardCache
from src.domain.entities.layer_grads import LayerGrads
from src.domain.entities.layer_params import LayerParams
from src.domain.exceptions import InputError
from src.domain.value_objects.variant import VariantFlag


def _long_product(u: np.ndarray, masks: np.ndarray, t: int, k: int) -> np.ndarray:
    """Diagonal de ∂h_t/∂h_k para una secuencia."""
    product = np.ones_like(u)
    for j in range(k + 1, t + 1):
        product = product * u * masks[j]
    return product


def _short_product(w_rec: np.ndarray, masks: np.ndarray, m: int, k: int) -> np.ndarray:
    """∂h̃_m/∂h̃_k para una secuencia."""
    product = np.eye(w_rec.shape[0])
    for j in range(k + 1, m + 1):
        product = (masks[j][:, None] * w_rec) @ product
    return product


class _SequenceJacobians:
    """Tablas de productos de Jacobianos para una secuencia del lote."""

    def __init__(self, params: LayerParams, cache: ForwardCache, row: int):
        length = cache.length
        self.mask_long = relu_mask(cache.pre_long[:, row])
        self.mask_short = relu_mask(cache.pre_short[:, row])
        self.long: Dict[Tuple[int, int], np.ndarray] = {
            (t, k): _long_product(params.u, self.mask_long, t, k)
            for t in range(length) for k in range(t + 1)
        }
        self.short: Dict[Tuple[int, int], np.ndarray] = {
            (m, k): _short_product(params.w_rec, self.mask_short, m, k)
            for m in range(length) for k in range(m + 1)
        }
        self.select = [
            self.mask_long[m][:, None] * params.w_s * cache.s[m, row][None, :]
            for m in range(length)
        ]

    def long_to_short(self, t: int, k: int) -> np.ndarray:
        """∂h_t/∂h̃_k como matriz N×N."""
        return sum(self.long[(t, m)][:, None] * self.select[m] @ self.short[(m, k)]
                   for m in range(k, t + 1))


def _check_size(cache: ForwardCache) -> None:
    if cache.neurons > ORACLE_MAX_NEURONS or cache.length > ORACLE_MAX_STEPS:
        raise InputError(
            f"El oráculo admite N ≤ {ORACLE_MAX_NEURONS} y L ≤ {ORACLE_MAX_STEPS}; "
            f"recibió N={cache.neurons}, L={cache.length}"
        )


def appendix_grads(
    params: LayerParams,
    cache: ForwardCache,
    local: np.ndarray,
    train_b_s: bool = True,
) -> LayerGrads:
    """
    Gradientes de una capa por sumas directas.

    Args:
        params: Parámetros de la capa
        cache: Caché del recorrido hacia delante
        local: ∂Loss_t/∂(salida)_t por paso, forma (L, B, N)
        train_b_s: Si False, ∂Loss/∂b_s queda a cero

    Returns:
        LayerGrads con los mismos campos que la retropropagación iterativa

    Raises:
        InputError: Si N > 8 o L > 10
    """
    _check_size(cache)
    local = np.asarray(local, dtype=np.float64)
    if local.shape != (cache.length, cache.batch, cache.neurons):
        raise InputError(f"Gradientes locales con forma {local.shape}")

    variant = cache.variant
    grads = LayerGrads.zeros_like(params, cache.length, cache.batch)
    g = grads.params
    length = cache.length

    for row in range(cache.batch):
        jac = _SequenceJacobians(params, cache, row)
        x = cache.x[:, row]
        h_short = cache.h_short[:, row]
        h_long = cache.h_long[:, row]
        zeros = np.zeros(params.neurons)

        def h_short_prev(k):
            return h_short[k - 1] if k > 0 else zeros

        def h_long_prev(k):
            return h_long[k - 1] if k > 0 else zeros

        for t in range(length - 1, -1, -1):
            seed = local[t, row]
            for k in range(t, -1, -1):
                # Ruta larga: h_t ← h_k
                if variant.has_long:
                    through_long = jac.long[(t, k)] * seed * jac.mask_long[k]
                    g['u'] += through_long * h_long_prev(k)
                    g['b_long'] += through_long
                    if variant == VariantFlag.INDRNN:
                        g['w_in'] += np.outer(through_long, x[k])
                        grads.g_x[k, row] += through_long @ params.w_in
                    else:
                        g['w_s'] += np.outer(through_long, cache.i[k, row])

                if variant.has_selection:
                    gate = (cache.mm[k, row] - params.b_thre > 0.0).astype(np.float64)
                    through_gate = (through_long @ params.w_s) * h_short[k] * gate
                    g['b_thre'] -= np.sum(through_gate)
                    kernel = through_gate * mm_slope(cache.mm_min[k, row], cache.mm_max[k, row])
                    g['w_ss'] += np.outer(kernel, h_short[k])
                    g['w_ls'] += np.outer(kernel, h_long_prev(k))
                    if train_b_s:
                        g['b_s'] += kernel

                # Ruta corta: salida_t ← h̃_k
                if not variant.has_short:
                    continue
                if variant.output_is_short:
                    to_short = jac.short[(t, k)]
                else:
                    to_short = jac.long_to_short(t, k)
                through_short = (seed @ to_short) * jac.mask_short[k]
                g['w_rec'] += np.outer(through_short, h_short_prev(k))
                g['w_in'] += np.outer(through_short, x[k])
                g['b_short'] += through_short
                grads.g_x[k, row] += through_short @ params.w_in

    if variant.diagonal_recurrence:
        g['w_rec'] = np.diag(np.diag(g['w_rec']))
    return grads


def appendix_grads_stacked(
    layers: Sequence[LayerParams],
    caches: Sequence[ForwardCache],
    top_grads: np.ndarray,
    train_b_s: bool = True,
) -> List[LayerGrads]:
    """Aplica el oráculo capa a capa: g_x de cada capa es el gradiente local de la inferior."""
    if len(layers) != len(caches) or not layers:
        raise InputError(f"{len(layers)} capas pero {len(caches)} cachés")
    result: List[LayerGrads] = [None] * len(layers)
    local = np.asarray(top_grads, dtype=np.float64)
    for index in range(len(layers) - 1, -1, -1):
        result[index] = appendix_grads(layers[index], caches[index], local, train_b_s=train_b_s)
        local = result[index].g_x
    return result
