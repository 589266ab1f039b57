"""
Gradientes: retropropagación truncada y sonda de normas de Jacobianos.
"""

from .backward import (
    backward_state_long, backward_state_short, backward_states, final_step_grads,
    accumulate_param_grads, backward_layer, backward_sequence, grads_to_dict
)
from .probe import GradNormProbe, selection_jacobian, grad_norm_probe

__all__ = [
    'backward_state_long',
    'backward_state_short',
    'backward_states',
    'final_step_grads',
    'accumulate_param_grads',
    'backward_layer',
    'backward_sequence',
    'grads_to_dict',
    'GradNormProbe',
    'selection_jacobian',
    'grad_norm_probe'
]
