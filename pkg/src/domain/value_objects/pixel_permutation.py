# src/domain/value_objects/pixel_permutation.py
import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.config.settings import MNIST_SEQ_LEN
from src.domain.exceptions import InputError
from src.domain.linalg.dense import seeded_rng


@dataclass(frozen=True, eq=False)
class PixelPermutation:
    """
    Value Object con una permutación fija de los píxeles de la secuencia.

    Atributos:
        perm (np.ndarray): Biyección sobre {0..n-1}
        seed (Optional[int]): Semilla que la generó (None si es explícita)
    """

    perm: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        perm = np.asarray(self.perm)
        if perm.ndim != 1 or not np.issubdtype(perm.dtype, np.integer):
            raise InputError("La permutación debe ser un vector de enteros")
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise InputError("El vector no es una permutación de 0..n-1")
        object.__setattr__(self, 'perm', perm.astype(np.intp))

    @classmethod
    def from_seed(cls, seed: int, size: int = MNIST_SEQ_LEN) -> 'PixelPermutation':
        """Genera la permutación de forma reproducible a partir de una semilla."""
        return cls(perm=seeded_rng(seed).permutation(size), seed=seed)

    @classmethod
    def identity(cls, size: int = MNIST_SEQ_LEN) -> 'PixelPermutation':
        """Permutación identidad."""
        return cls(perm=np.arange(size))

    @property
    def size(self) -> int:
        return int(self.perm.size)

    def inverse(self) -> 'PixelPermutation':
        """Permutación inversa."""
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return PixelPermutation(perm=inv)

    def digest(self) -> str:
        """Huella SHA-256 de la permutación (para comprobar reproducibilidad)."""
        return hashlib.sha256(self.perm.astype('<i8').tobytes()).hexdigest()
