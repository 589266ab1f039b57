"""
Tareas de referencia: problema de la suma y MNIST secuencial/permutado.
"""

from .adding import gen_adding, adding_baseline_mse
from .mnist import apply_permutation, split_validation, sample_batch, prepare_mnist
from .sources import TaskSource, AddingSource, MnistSource

__all__ = [
    'gen_adding',
    'adding_baseline_mse',
    'apply_permutation',
    'split_validation',
    'sample_batch',
    'prepare_mnist',
    'TaskSource',
    'AddingSource',
    'MnistSource'
]
