# src/domain/linalg/__init__.py
from .dense import Mat, Vec, as_matrix, as_vector, gemm, seeded_rng, spawn_rngs
from .svd import SvdResult, svd_small, clip_singular_values, clip_with_svd

__all__ = [
    'Mat',
    'Vec',
    'as_matrix',
    'as_vector',
    'gemm',
    'seeded_rng',
    'spawn_rngs',
    'SvdResult',
    'svd_small',
    'clip_singular_values',
    'clip_with_svd'
]
