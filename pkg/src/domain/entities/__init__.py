"""
Entidades del Dominio.

Las entidades son los contenedores mutables de parámetros, cachés,
gradientes y datos que comparten la celda, el gradiente y el entrenamiento.
"""

from .layer_params import PARAM_NAMES, LayerParams, ReadoutParams, LayerParamsFactory
from .forward_cache import StepCache, ForwardCache
from .layer_grads import LayerGrads, StateGrads
from .task_batch import TaskBatch, MnistDataset
from .checkpoint import Checkpoint

__all__ = [
    'PARAM_NAMES',
    'LayerParams',
    'ReadoutParams',
    'LayerParamsFactory',
    'StepCache',
    'ForwardCache',
    'LayerGrads',
    'StateGrads',
    'TaskBatch',
    'MnistDataset',
    'Checkpoint'
]
