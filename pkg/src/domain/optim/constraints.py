# src/domain/optim/constraints.py
"""
Proyecciones tras cada actualización y comprobación de los invariantes.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.config.constants import CONSTRAINT_TOL
from src.domain.entities.layer_params import LayerParams
from src.domain.linalg.svd import clip_with_svd, svd_small
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.variant import VariantFlag


@dataclass
class ConstraintViolation:
    """Un invariante roto: capa, parámetro, valor medido y cota."""
    layer: int
    parameter: str
    value: float
    bound: float

    def __str__(self) -> str:
        return f"capa {self.layer}: {self.parameter}={self.value:.12g} (cota {self.bound:.12g})"


@dataclass
class SpectralMemo:
    """
    Lo que la última proyección de W_rec sabe de su espectro.

    Atributos:
        basis (Optional[np.ndarray]): Vectores singulares derechos de la
            última SVD; arranque de la siguiente
        sigma_max (Optional[float]): σ_max de W_rec tras la proyección
    """
    basis: Optional[np.ndarray] = None
    sigma_max: Optional[float] = None


def project_constraints(
    params: LayerParams,
    spec: ConstraintSpec,
    variant: VariantFlag = VariantFlag.DURNN,
    memo: Optional[SpectralMemo] = None,
) -> LayerParams:
    """
    Proyecta los parámetros sobre el conjunto factible.

    W_rec pasa por C_δ (o, si es diagonal, su diagonal se acota al
    intervalo de U y el resto se anula); U se acota a [u_low, u_high];
    b_thre a [0, 1]. El resto de parámetros no cambia. Las variantes sin
    estado corto no usan W_rec y no se tocan.

    Args:
        memo: Si se da, la SVD arranca de memo.basis y el memo se
            actualiza con la nueva base y el σ_max proyectado

    Returns:
        Nuevos LayerParams
    """
    tensors = params.to_tensors()
    if variant.diagonal_recurrence:
        tensors['w_rec'] = np.diag(np.clip(np.diag(tensors['w_rec']), spec.u_low, spec.u_high))
    elif variant.has_short:
        basis = memo.basis if memo is not None else None
        tensors['w_rec'], decomposition = clip_with_svd(tensors['w_rec'], spec.delta, basis)
        if memo is not None:
            memo.basis = decomposition.v
            memo.sigma_max = min(decomposition.sigma_max, spec.delta)
    tensors['u'] = np.clip(tensors['u'], spec.u_low, spec.u_high)
    tensors['b_thre'] = np.clip(tensors['b_thre'], spec.thre_low, spec.thre_high)
    return LayerParams.from_tensors(tensors)


def check_constraints(
    params: LayerParams,
    spec: ConstraintSpec,
    variant: VariantFlag = VariantFlag.DURNN,
    layer: int = 0,
    check_sigma: bool = True,
    tol: float = CONSTRAINT_TOL,
    memo: Optional[SpectralMemo] = None,
) -> List[ConstraintViolation]:
    """
    Lista los invariantes rotos tras una proyección.

    Args:
        check_sigma: Comprobar σ_max(W_rec)
        memo: Si trae sigma_max se usa sin otra SVD; si solo trae la base,
            la SVD arranca de ella

    Returns:
        Lista vacía si todo se cumple
    """
    violations: List[ConstraintViolation] = []
    u = params.u
    if np.any(u < spec.u_low - tol):
        violations.append(ConstraintViolation(layer, 'u', float(u.min()), spec.u_low))
    if np.any(u > spec.u_high + tol):
        violations.append(ConstraintViolation(layer, 'u', float(u.max()), spec.u_high))
    if not spec.thre_low <= params.b_thre <= spec.thre_high:
        violations.append(ConstraintViolation(layer, 'b_thre', float(params.b_thre), spec.thre_high))

    w_rec = params.w_rec
    if variant.diagonal_recurrence:
        diagonal = np.diag(w_rec)
        if diagonal.size and diagonal.min() < spec.u_low - tol:
            violations.append(ConstraintViolation(layer, 'w_rec', float(diagonal.min()), spec.u_low))
        if diagonal.size and diagonal.max() > spec.u_high + tol:
            violations.append(ConstraintViolation(layer, 'w_rec', float(diagonal.max()), spec.u_high))
        off_diagonal = np.abs(w_rec - np.diag(diagonal))
        if off_diagonal.size and off_diagonal.max() > tol:
            violations.append(ConstraintViolation(layer, 'w_rec', float(off_diagonal.max()), 0.0))
    elif check_sigma and variant.has_short:
        if memo is not None and memo.sigma_max is not None:
            sigma_max = memo.sigma_max
        else:
            sigma_max = svd_small(w_rec, memo.basis if memo is not None else None).sigma_max
        if sigma_max > spec.delta + tol:
            violations.append(ConstraintViolation(layer, 'w_rec', sigma_max, spec.delta))
    return violations
