# src/config/logging_setup.py
import sys
from typing import Optional

from loguru import logger

from src.config.settings import LOG_FORMAT, LOG_LEVEL


def configure_logging(level: Optional[str] = None, sink=sys.stderr) -> None:
    """
    Configura loguru con el formato del proyecto.

    Args:
        level: Nivel de log (por defecto LOG_LEVEL de settings)
        sink: Destino de los mensajes
    """
    logger.remove()
    logger.configure(extra={"component": "durnn"})
    logger.add(sink, level=(level or LOG_LEVEL).upper(), format=LOG_FORMAT)
