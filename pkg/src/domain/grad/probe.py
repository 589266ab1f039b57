# src/domain/grad/probe.py
"""
Normas de los Jacobianos de la retropropagación a lo largo de una trayectoria.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.domain.cell.forward import relu_mask
from src.domain.entities.forward_cache import ForwardCache
from src.domain.entities.layer_params import LayerParams
from src.domain.exceptions import InputError


@dataclass
class GradNormProbe:
    """
    Resultado de grad_norm_probe para una secuencia del lote.

    Atributos:
        long_norms (np.ndarray): ‖∂h_t/∂h_{t−k}‖₂ para k = 1..span
        short_norms (np.ndarray): ‖∂h_t/∂h̃_{t−k}‖₂ para k = 1..span
        ds_max (float): max_m ‖dS_m‖₂ sobre la ventana medida (la cota s)
        long_products (np.ndarray): Diagonal de ∏ diag(U ∘ σ'_s), forma (span, N)
        active_long (np.ndarray): Neuronas largas activas en toda la ventana de
            k pasos, forma (span, N)
    """

    long_norms: np.ndarray
    short_norms: np.ndarray
    ds_max: float
    long_products: np.ndarray
    active_long: np.ndarray

    @property
    def span(self) -> int:
        return int(self.long_norms.shape[0])


def _spectral_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def selection_jacobian(params: LayerParams, cache: ForwardCache, m: int, row: int) -> np.ndarray:
    """dS_m = ∂h_m/∂h̃_m = diag(σ'_{s,m}) · W_s · diag(S_m) para una secuencia."""
    mask = relu_mask(cache.pre_long[m, row])
    return mask[:, None] * params.w_s * cache.s[m, row][None, :]


def grad_norm_probe(
    params: LayerParams,
    cache: ForwardCache,
    span: int,
    row: int = 0,
    t: Optional[int] = None,
) -> GradNormProbe:
    """
    Multiplica los Jacobianos de un paso hacia atrás desde t.

    ∂h_t/∂h_{t−k} es diagonal: ∏_{j=t−k+1}^{t} diag(U ∘ σ'_{s,j}).
    G_k = ∂h_t/∂h̃_{t−k} se obtiene con
    G_0 = dS_t,  G_k = (∂h_t/∂h_{t−k})·dS_{t−k} + G_{k−1}·diag(σ'_{f,t−k+1})·W_rec.

    Args:
        params: Parámetros de la capa
        cache: Trayectoria registrada
        span: Número de pasos k a medir
        row: Índice de la secuencia dentro del lote
        t: Paso final (por defecto el último)

    Raises:
        InputError: Si span supera la trayectoria disponible
    """
    t = cache.length - 1 if t is None else t
    if not 0 <= row < cache.batch:
        raise InputError(f"Secuencia {row} fuera del lote de {cache.batch}")
    if span < 1 or span > t + 1:
        raise InputError(f"span={span} debe estar en 1..{t + 1}")

    neurons = params.neurons
    product = np.ones(neurons)
    active = np.ones(neurons, dtype=bool)
    g_short = selection_jacobian(params, cache, t, row)
    ds_max = _spectral_norm(g_short)

    long_norms = np.zeros(span)
    short_norms = np.zeros(span)
    products = np.zeros((span, neurons))
    actives = np.zeros((span, neurons), dtype=bool)
    for k in range(1, span + 1):
        j = t - k + 1
        mask_long = relu_mask(cache.pre_long[j, row])
        product = product * params.u * mask_long
        active &= mask_long > 0.0
        # k = t + 1 llega al estado inicial, que no tiene dS propio
        d_s = selection_jacobian(params, cache, t - k, row) if k <= t else np.zeros((neurons, neurons))
        ds_max = max(ds_max, _spectral_norm(d_s))
        mask_short = relu_mask(cache.pre_short[j, row])
        g_short = product[:, None] * d_s + (g_short * mask_short[None, :]) @ params.w_rec
        long_norms[k - 1] = float(np.max(np.abs(product)))
        short_norms[k - 1] = _spectral_norm(g_short)
        products[k - 1] = product
        actives[k - 1] = active
    return GradNormProbe(long_norms=long_norms, short_norms=short_norms, ds_max=ds_max,
                         long_products=products, active_long=actives)
