# src/domain/tasks/mnist.py
"""
MNIST secuencial y permutado: permutación, partición y muestreo de lotes.
"""
from typing import Optional, Tuple

import numpy as np

from src.config.settings import MNIST_VALIDATION
from src.domain.entities.task_batch import MnistDataset, TaskBatch
from src.domain.exceptions import InputError
from src.domain.value_objects.pixel_permutation import PixelPermutation


def apply_permutation(dataset: MnistDataset, perm: PixelPermutation) -> MnistDataset:
    """
    Reordena cada secuencia con la MISMA permutación; las etiquetas no cambian.

    Raises:
        InputError: Si el tamaño de la permutación no coincide con la secuencia
    """
    if not isinstance(perm, PixelPermutation):
        perm = PixelPermutation(perm=np.asarray(perm))
    if perm.size != dataset.images.shape[1]:
        raise InputError(
            f"Permutación de {perm.size} elementos para secuencias de {dataset.images.shape[1]}"
        )
    return MnistDataset(images=dataset.images[:, perm.perm], labels=dataset.labels.copy())


def split_validation(dataset: MnistDataset,
                     validation: int = MNIST_VALIDATION) -> Tuple[MnistDataset, MnistDataset]:
    """Separa las últimas `validation` muestras como conjunto de validación."""
    if not 0 <= validation < len(dataset):
        raise InputError(f"Validación de {validation} muestras sobre {len(dataset)}")
    cut = len(dataset) - validation
    return dataset.subset(0, cut), dataset.subset(cut, len(dataset))


def sample_batch(dataset: MnistDataset, batch: int, rng: np.random.Generator) -> TaskBatch:
    """Lote aleatorio con reemplazo entre lotes (sin repetición dentro del lote)."""
    if len(dataset) == 0:
        raise InputError("Conjunto de datos vacío")
    size = min(batch, len(dataset))
    indices = rng.choice(len(dataset), size=size, replace=False)
    return dataset.to_batch(np.sort(indices))


def prepare_mnist(
    dataset: MnistDataset,
    permutation: Optional[PixelPermutation] = None,
    subset: Optional[int] = None,
    validation: int = MNIST_VALIDATION,
) -> Tuple[MnistDataset, MnistDataset]:
    """
    Aplica la permutación, recorta a un subconjunto fijo y separa validación.

    Args:
        dataset: Conjunto de entrenamiento completo
        permutation: Permutación de píxeles (pMNIST) o None
        subset: Número de primeras muestras a conservar, o None para todas
        validation: Muestras finales reservadas para validación

    Returns:
        (entrenamiento, validación)
    """
    if permutation is not None:
        dataset = apply_permutation(dataset, permutation)
    if subset is not None:
        if subset < 1:
            raise InputError(f"Subconjunto inválido: {subset}")
        dataset = dataset.subset(0, min(subset, len(dataset)))
        validation = min(validation, len(dataset) // 2)
    return split_validation(dataset, validation)
