# src/domain/oracle/bounds.py
"""
Comprobación de las cotas de la retropropagación sobre una trayectoria.

Cota superior: ‖∂h_t/∂h̃_{t−k}‖₂ ≤ s·γ/(1−δ) con s = max_m ‖dS_m‖₂.
Cota inferior: en las neuronas largas activas durante los k pasos, el
producto ∏ uᵢ es ≥ u_low^k, que a su vez es ≥ ε para k ≤ L.
"""
from typing import Optional

import numpy as np

from src.config.constants import BOUND_REL_TOL
from src.domain.entities.forward_cache import ForwardCache
from src.domain.entities.layer_params import LayerParams
from src.domain.grad.probe import GradNormProbe, grad_norm_probe
from src.domain.oracle.report import OracleEntry, OracleReport
from src.domain.value_objects.constraint_spec import ConstraintSpec


def upper_bound(probe: GradNormProbe, gamma: float, delta: float) -> float:
    """s·γ/(1−δ) con la s medida en la trayectoria."""
    return probe.ds_max * gamma / (1.0 - delta)


def bound_check(
    params: LayerParams,
    cache: ForwardCache,
    spec: ConstraintSpec,
    gamma: float,
    span: Optional[int] = None,
    row: int = 0,
    label: str = "layer0",
    instance: Optional[int] = None,
    tol: float = BOUND_REL_TOL,
) -> OracleReport:
    """
    Mide las normas de los Jacobianos y las compara con las cotas.

    Las violaciones no lanzan excepciones: quedan como entradas fallidas
    del informe, con el exceso relativo como error.

    Args:
        params: Parámetros de la capa
        cache: Trayectoria registrada por forward_sequence
        spec: Restricciones de la capa (δ y u_low)
        gamma: γ usada al derivar u_high
        span: Pasos a medir (por defecto toda la trayectoria)
        row: Secuencia del lote a medir
        label: Prefijo de los nombres en el informe
        instance: Índice de la instancia, para el informe
        tol: Tolerancia relativa
    """
    span = cache.length if span is None else span
    probe = grad_norm_probe(params, cache, span, row=row)
    report = OracleReport()

    bound = upper_bound(probe, gamma, spec.delta)
    worst = int(np.argmax(probe.short_norms))
    excess = max(0.0, float(probe.short_norms[worst]) - bound)
    report.add(OracleEntry(
        check='bound_upper', parameter=f"{label}.dh/dh_short",
        max_rel=excess / max(bound, np.finfo(float).tiny) if excess else 0.0,
        max_abs=excess, location=(worst + 1,), tolerance=tol, instance=instance,
    ))

    if spec.u_low > 0.0:
        steps = np.arange(1, span + 1)[:, None]
        floor = spec.u_low ** steps * np.ones_like(probe.long_products)
        deficit = np.where(probe.active_long, floor - probe.long_products, 0.0)
        relative = np.where(probe.active_long, deficit / floor, 0.0)
        k, neuron = np.unravel_index(int(np.argmax(relative)), relative.shape)
        report.add(OracleEntry(
            check='bound_lower', parameter=f"{label}.dh/dh_long",
            max_rel=max(0.0, float(relative[k, neuron])),
            max_abs=max(0.0, float(deficit[k, neuron])),
            location=(int(k) + 1, int(neuron)), tolerance=tol, instance=instance,
        ))
    return report
