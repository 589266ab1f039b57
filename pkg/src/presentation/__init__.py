"""
Capa de Presentación.

Línea de comandos que traduce las órdenes del usuario a casos de uso.
"""

from src.presentation.cli import app

__all__ = ['app']
