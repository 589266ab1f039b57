# src/domain/linalg/svd.py
"""
SVD de matrices cuadradas pequeñas por Jacobi de un lado (Hestenes) y
recorte de valores singulares.

Los pares de columnas se recorren en orden round-robin: en cada ronda los
pares son disjuntos y se rotan a la vez de forma vectorizada.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import null_space

from src.config.constants import JACOBI_MAX_SWEEPS, JACOBI_TOL, SVD_MAX_DIM
from src.domain.exceptions import InputError, NumericalError
from src.domain.linalg.dense import Mat, Vec, as_matrix, gemm

log = logger.bind(component="linalg")


@dataclass(frozen=True, eq=False)
class SvdResult:
    """
    Descomposición a = u · diag(sigma) · vᵀ.

    Atributos:
        u (Mat): Vectores singulares izquierdos (n×n, ortogonal)
        sigma (Vec): Valores singulares en orden descendente, no negativos
        v (Mat): Vectores singulares derechos (n×n, ortogonal)
    """
    u: Mat
    sigma: Vec
    v: Mat

    def reconstruct(self) -> Mat:
        """Recompone la matriz original."""
        return (self.u * self.sigma) @ self.v.T

    @property
    def sigma_max(self) -> float:
        """Mayor valor singular (norma espectral)."""
        return float(self.sigma[0]) if self.sigma.size else 0.0


@lru_cache(maxsize=64)
def _round_robin_pairs(n: int) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    """Rondas de pares disjuntos (p, q) que cubren todos los pares de columnas."""
    players = n + (n % 2)
    others: List[int] = list(range(1, players))
    rounds = []
    for _ in range(players - 1):
        order = [0] + others
        p_idx, q_idx = [], []
        for i in range(players // 2):
            p, q = order[i], order[players - 1 - i]
            if p < n and q < n:
                p_idx.append(min(p, q))
                q_idx.append(max(p, q))
        rounds.append((np.array(p_idx, dtype=np.intp), np.array(q_idx, dtype=np.intp)))
        others = others[-1:] + others[:-1]
    return tuple(rounds)


def _orthonormal_basis(basis: Mat, n: int) -> Mat:
    """Reortogonaliza una base inicial n×n (QR con signos fijados)."""
    basis = as_matrix(basis, "basis")
    if basis.shape != (n, n):
        raise InputError(f"La base inicial debe ser {n}×{n}, tiene forma {basis.shape}")
    q, r = np.linalg.qr(basis)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return q * signs


def svd_small(a: Mat, basis: Optional[Mat] = None) -> SvdResult:
    """
    SVD de una matriz cuadrada por Jacobi de un lado.

    Con `basis` (por ejemplo los vectores singulares derechos de una
    matriz cercana) el barrido parte de a·basis en lugar de a, y basta con
    uno o dos barridos si a apenas ha cambiado.

    Args:
        a: Matriz cuadrada n×n con n ≤ 4096 y entradas finitas
        basis: Base ortogonal n×n de arranque (opcional)

    Returns:
        SvdResult con sigma descendente

    Raises:
        InputError: Si la matriz no es cuadrada, excede el tamaño máximo o
            la base no tiene la forma de a
        NumericalError: Si no converge en JACOBI_MAX_SWEEPS barridos
    """
    a = as_matrix(a, "a")
    n, m = a.shape
    if n != m:
        raise InputError(f"svd_small requiere matriz cuadrada, recibió {a.shape}")
    if n > SVD_MAX_DIM:
        raise InputError(f"svd_small admite n ≤ {SVD_MAX_DIM}, recibió {n}")
    if n == 0:
        empty = np.zeros((0, 0))
        return SvdResult(u=empty, sigma=np.zeros(0), v=empty)

    if basis is None:
        work = a.copy()
        v = np.eye(n)
    else:
        v = _orthonormal_basis(basis, n)
        work = gemm(a, v)
    rounds = _round_robin_pairs(n)

    converged = n == 1
    residual = 0.0
    sweep = 0
    while not converged and sweep < JACOBI_MAX_SWEEPS:
        sweep += 1
        rotated_any = False
        residual = 0.0
        for p, q in rounds:
            if p.size == 0:
                continue
            ap, aq = work[:, p], work[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            norms = np.sqrt(alpha * beta)
            off = np.zeros_like(gamma)
            nz = norms > 0.0
            off[nz] = np.abs(gamma[nz]) / norms[nz]
            residual = max(residual, float(off.max()))
            rot = off > JACOBI_TOL
            if not np.any(rot):
                continue
            rotated_any = True
            p, q = p[rot], q[rot]
            ap, aq = ap[:, rot], aq[:, rot]
            zeta = (beta[rot] - alpha[rot]) / (2.0 * gamma[rot])
            sign = np.where(zeta >= 0.0, 1.0, -1.0)
            t = sign / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            work[:, p] = c * ap - s * aq
            work[:, q] = s * ap + c * aq
            vp, vq = v[:, p], v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
        converged = not rotated_any

    if not converged:
        raise NumericalError(
            f"Jacobi no convergió en {JACOBI_MAX_SWEEPS} barridos (n={n})",
            residual=residual,
        )

    sigma = np.sqrt(np.einsum("ij,ij->j", work, work))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    v = v[:, order]

    # Columnas numéricamente nulas: se completa u con el complemento ortogonal
    threshold = n * np.finfo(np.float64).eps * sigma[0]
    good = sigma > threshold
    u = np.zeros((n, n))
    u[:, good] = work[:, good] / sigma[good]
    k = int(good.sum())
    if k < n:
        sigma[~good] = 0.0
        u[:, ~good] = np.eye(n)[:, : n - k] if k == 0 else null_space(u[:, good].T)
    log.debug(f"svd_small n={n} convergió en {sweep} barridos")
    return SvdResult(u=u, sigma=sigma, v=v)


def clip_with_svd(a: Mat, delta: float, basis: Optional[Mat] = None) -> Tuple[Mat, SvdResult]:
    """
    Recorta cada valor singular a min(σᵢ, delta) y devuelve también la SVD usada.

    Los vectores singulares del resultado son los de a, así que `v` sirve
    de base de arranque para la siguiente proyección.

    Args:
        a: Matriz cuadrada
        delta: Umbral en (0, 1)
        basis: Base de arranque para svd_small (opcional)

    Returns:
        (u · diag(min(σ, delta)) · vᵀ o una copia de a si ya cumple, SVD de a)
    """
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta debe estar en (0, 1), recibió {delta}")
    a = as_matrix(a, "a")
    decomposition = svd_small(a, basis)
    if decomposition.sigma_max <= delta:
        return a.copy(), decomposition
    clipped = np.minimum(decomposition.sigma, delta)
    return gemm(decomposition.u * clipped, decomposition.v.T), decomposition


def clip_singular_values(a: Mat, delta: float, basis: Optional[Mat] = None) -> Mat:
    """
    Recorta cada valor singular a min(σᵢ, delta).

    Args:
        a: Matriz cuadrada
        delta: Umbral en (0, 1)
        basis: Base de arranque para svd_small (opcional)

    Returns:
        u · diag(min(σ, delta)) · vᵀ, o una copia de a si ya cumple
    """
    return clip_with_svd(a, delta, basis)[0]
