"""
Configuración del sistema.

Contiene configuraciones, constantes y la configuración de experimentos.
"""

from . import constants
from . import settings

__all__ = [
    'constants',
    'settings'
]
