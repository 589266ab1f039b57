"""
Capa de Infraestructura.

Implementaciones concretas de repositorios y formatos de fichero.
"""

from src.infrastructure import persistence

__all__ = [
    'persistence'
]
