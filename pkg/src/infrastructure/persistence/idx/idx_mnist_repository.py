import gzip
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger

from src.config.constants import GZIP_MAGIC, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC
from src.config.settings import DEFAULT_DATA_DIR, MNIST_FILES, MNIST_SCALE
from src.domain.entities.task_batch import MnistDataset
from src.domain.exceptions import IngestionError, InputError
from src.domain.repositories.abstract.dataset_repository import DatasetRepository

log = logger.bind(component="idx")


def read_idx_bytes(path: Union[str, Path]) -> bytes:
    """Lee un fichero IDX, descomprimiéndolo si empieza por la firma gzip."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"No existe el fichero {path}")
    raw = path.read_bytes()
    if raw[:2] == GZIP_MAGIC:
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as error:
            raise IngestionError(f"gzip corrupto en {path}: {error}", offset=0) from error
    return raw


def parse_idx(data: bytes, expected_magic: int, dims: int, source: str = "IDX") -> Tuple[Tuple[int, ...], np.ndarray]:
    """
    Decodifica la cabecera big-endian y la carga útil de bytes sin signo.

    Formato: [magic: 4 bytes][dims: 4 bytes cada una][payload].

    Returns:
        (dimensiones, array uint8 con forma dims)

    Raises:
        IngestionError: Magic incorrecto o fichero truncado (con offset)
    """
    header = 4 * (1 + dims)
    if len(data) < 4:
        raise IngestionError(f"{source}: cabecera truncada", offset=len(data))
    (magic,) = struct.unpack_from('>i', data, 0)
    if magic != expected_magic:
        raise IngestionError(f"{source}: magic {magic}, se esperaba {expected_magic}", offset=0)
    if len(data) < header:
        raise IngestionError(f"{source}: cabecera truncada", offset=len(data))
    shape = struct.unpack_from(f'>{dims}i', data, 4)
    if any(size < 0 for size in shape):
        raise IngestionError(f"{source}: dimensión negativa {shape}", offset=4)
    expected = int(np.prod(shape, dtype=np.int64))
    payload = len(data) - header
    if payload < expected:
        raise IngestionError(
            f"{source}: fichero truncado, faltan {expected - payload} bytes",
            offset=len(data),
        )
    if payload > expected:
        log.warning(f"{source}: {payload - expected} bytes sobrantes tras la carga útil")
    values = np.frombuffer(data, dtype=np.uint8, count=expected, offset=header)
    return tuple(shape), values.reshape(shape)


class IdxMnistRepository(DatasetRepository):
    """Implementación concreta de DatasetRepository para ficheros IDX (crudos o gzip)."""

    def __init__(self, data_dir: Optional[Union[str, Path]] = None):
        """
        Inicializa el repositorio.

        Args:
            data_dir: Directorio con los ficheros oficiales; por defecto
                DURNN_DATA_DIR o ./data
        """
        self.data_dir = Path(data_dir or DEFAULT_DATA_DIR)

    def load_mnist(self, images_path: Union[str, Path], labels_path: Union[str, Path]) -> MnistDataset:
        """Carga imágenes (magic 2051) y etiquetas (magic 2049)."""
        images_path, labels_path = Path(images_path), Path(labels_path)
        shape, images = parse_idx(read_idx_bytes(images_path), IDX_IMAGES_MAGIC, 3,
                                  source=images_path.name)
        (count,), labels = parse_idx(read_idx_bytes(labels_path), IDX_LABELS_MAGIC, 1,
                                     source=labels_path.name)
        if shape[0] != count:
            raise IngestionError(
                f"{shape[0]} imágenes pero {count} etiquetas", offset=4
            )
        if labels.size and labels.max() > 9:
            bad = int(np.argmax(labels > 9))
            raise IngestionError(f"Etiqueta {int(labels[bad])} fuera de 0..9", offset=8 + bad)

        sequences = images.reshape(shape[0], shape[1] * shape[2]).astype(np.float64) * MNIST_SCALE
        log.info(f"Cargadas {count} muestras de {images_path.name} ({shape[1]}x{shape[2]})")
        return MnistDataset(images=sequences, labels=labels.astype(np.int64))

    def _resolve(self, key: str) -> Path:
        name = MNIST_FILES[key]
        for candidate in (self.data_dir / name, self.data_dir / f"{name}.gz"):
            if candidate.exists():
                return candidate
        raise IngestionError(f"No se encuentra {name}[.gz] en {self.data_dir}")

    def load_split(self, split: str) -> MnistDataset:
        """Carga "train" o "test" desde el directorio de datos."""
        if split not in ("train", "test"):
            raise InputError(f"Partición '{split}' no válida (train | test)")
        return self.load_mnist(self._resolve(f"{split}_images"), self._resolve(f"{split}_labels"))
