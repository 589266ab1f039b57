from pathlib import Path
from typing import Dict, Union

from loguru import logger

from src.config.experiment import ExperimentConfig
from src.domain.exceptions import ConfigError

log = logger.bind(component="config")


def parse_config_text(text: str, source: str = "config") -> Dict[str, str]:
    """
    Interpreta líneas `clave = valor`.

    Se ignoran las líneas vacías y lo que sigue a `#`.

    Raises:
        ConfigError: Línea sin `=` o clave repetida
    """
    flat: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split('#', 1)[0].strip()
        if not content:
            continue
        if '=' not in content:
            raise ConfigError(f"{source}:{number}: se esperaba 'clave = valor'")
        key, value = (part.strip() for part in content.split('=', 1))
        if not key:
            raise ConfigError(f"{source}:{number}: clave vacía")
        if key in flat:
            raise ConfigError(f"{source}:{number}: clave repetida", key=key)
        flat[key] = value
    return flat


def dump_config_text(config: ExperimentConfig) -> str:
    """Texto `clave = valor` con una clave por línea."""
    lines = [f"{key} = {value}" for key, value in config.to_flat().items()]
    return "\n".join(lines) + "\n"


def read_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Lee y valida un fichero de experimento.

    Raises:
        ConfigError: Fichero inexistente o contenido inválido
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"No existe el fichero de configuración {path}")
    config = ExperimentConfig.from_flat(parse_config_text(path.read_text(encoding='utf-8'),
                                                          source=path.name))
    log.debug(f"Configuración {path.name} leída ({len(config.layers)} capas)")
    return config.validate()


def write_config(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config_text(config), encoding='utf-8')
    return path
