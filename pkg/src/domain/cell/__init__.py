"""
Celda dual: recorrido hacia delante, variantes, apilado y lectura.
"""

from .forward import (
    Selection, SelectionPins, relu, relu_mask, mm_slope, min_max_normalize,
    selection_weights, forward_step, run_layer, forward_sequence, forward_final
)
from .readout import ReadoutResult, log_softmax, readout

__all__ = [
    'Selection',
    'SelectionPins',
    'relu',
    'relu_mask',
    'mm_slope',
    'min_max_normalize',
    'selection_weights',
    'forward_step',
    'run_layer',
    'forward_sequence',
    'forward_final',
    'ReadoutResult',
    'log_softmax',
    'readout'
]
