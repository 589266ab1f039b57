# src/domain/exceptions.py
from typing import Optional


class DuRNNError(Exception):
    """Error base del paquete."""


class InputError(DuRNNError, ValueError):
    """Error fatal de entrada (dimensiones, variantes, límites de tamaño)."""


class ConfigError(InputError):
    """Error en el fichero o en los valores de configuración."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message if key is None else f"{message} (clave '{key}')")
        self.key = key


class IngestionError(InputError):
    """Error leyendo un fichero de datos; indica el offset en bytes."""

    def __init__(self, message: str, offset: Optional[int] = None):
        super().__init__(message if offset is None else f"{message} (offset {offset})")
        self.offset = offset


class NumericalError(DuRNNError, ArithmeticError):
    """
    Error numérico: valores no finitos o falta de convergencia.

    Atributos:
        step (Optional[int]): Paso temporal donde se detectó
        layer (Optional[int]): Índice de capa
        parameter (Optional[str]): Nombre del parámetro afectado
        residual (Optional[float]): Residuo al abortar una iteración
    """

    def __init__(self, message: str, step: Optional[int] = None,
                 layer: Optional[int] = None, parameter: Optional[str] = None,
                 residual: Optional[float] = None):
        details = []
        if layer is not None:
            details.append(f"capa {layer}")
        if step is not None:
            details.append(f"paso {step}")
        if parameter is not None:
            details.append(f"parámetro {parameter}")
        if residual is not None:
            details.append(f"residuo {residual:.3e}")
        suffix = f" [{', '.join(details)}]" if details else ""
        super().__init__(message + suffix)
        self.step = step
        self.layer = layer
        self.parameter = parameter
        self.residual = residual


class CheckpointError(DuRNNError):
    """Checkpoint ilegible o incompatible con la configuración."""


class OracleEnvironmentError(DuRNNError):
    """No se pudo generar una instancia de prueba lejos de los codos de relu."""
