# src/domain/linalg/dense.py
"""
Álgebra lineal densa mínima sobre arrays de numpy en float64.

Mat y Vec son alias de np.ndarray: una matriz es un array 2D y un vector
un array 1D, siempre en 64 bits y con todas las entradas finitas.
"""
import numpy as np

from src.domain.exceptions import InputError, NumericalError

Mat = np.ndarray
Vec = np.ndarray


def as_matrix(a, name: str = "matriz") -> Mat:
    """
    Convierte a matriz float64 validando forma y finitud.

    Args:
        a: Objeto convertible a array 2D
        name: Nombre para los mensajes de error

    Returns:
        Array 2D float64
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"{name} debe ser 2D, tiene forma {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contiene valores no finitos")
    return arr


def as_vector(v, name: str = "vector") -> Vec:
    """Convierte a vector float64 validando forma y finitud."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"{name} debe ser 1D, tiene forma {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contiene valores no finitos")
    return arr


def gemm(a: Mat, b: Mat) -> Mat:
    """
    Producto matricial estándar a·b.

    Raises:
        InputError: Si a.cols != b.rows
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise InputError(
            f"Dimensiones incompatibles en gemm: {a.shape} x {b.shape}"
        )
    return a @ b


def seeded_rng(seed: int) -> np.random.Generator:
    """
    Generador determinista basado en PCG64.

    PCG64 está documentado y produce el mismo flujo en cualquier
    plataforma para la misma semilla.
    """
    return np.random.Generator(np.random.PCG64(int(seed)))


def spawn_rngs(seed: int, count: int):
    """
    Generadores independientes derivados de una semilla.

    Cada flujo (inicialización, datos, evaluación) tiene su propio
    generador, de modo que consumir uno no altera los demás.
    """
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]
