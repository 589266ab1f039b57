import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
from loguru import logger

from src.config.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from src.domain.entities.checkpoint import Checkpoint
from src.domain.exceptions import CheckpointError
from src.domain.repositories.abstract.checkpoint_repository import CheckpointRepository

log = logger.bind(component="checkpoint")

_ITEM = 8  # bytes por float64


class BinaryCheckpointRepository(CheckpointRepository):
    """
    Checkpoints en un único fichero binario.

    Formato:
        línea 1: firma DURNN-CKPT
        línea 2: cabecera JSON (versión, hash de configuración, iteración,
                 estados de los generadores, optimizador, programa de lr
                 y el manifiesto [{name, shape, offset}] con la longitud del blob)
        resto:   tensores float64 little-endian concatenados
    """

    def encode(self, checkpoint: Checkpoint) -> bytes:
        """Serializa un checkpoint a bytes."""
        manifest: List[Dict[str, Any]] = []
        blobs: List[bytes] = []
        offset = 0
        for name, value in checkpoint.tensors.items():
            data = np.ascontiguousarray(value, dtype='<f8').tobytes()
            manifest.append({'name': name, 'shape': list(np.shape(value)), 'offset': offset})
            blobs.append(data)
            offset += len(data)
        header = dict(checkpoint.header(), manifest=manifest, blob_length=offset)
        line = json.dumps(header, sort_keys=True).encode('utf-8')
        return CHECKPOINT_MAGIC + b"\n" + line + b"\n" + b"".join(blobs)

    def decode(self, raw: bytes, source: str = "checkpoint") -> Checkpoint:
        """Reconstruye un checkpoint validando el manifiesto contra el blob."""
        magic_end = len(CHECKPOINT_MAGIC)
        if raw[:magic_end] != CHECKPOINT_MAGIC or raw[magic_end:magic_end + 1] != b"\n":
            raise CheckpointError(f"{source}: firma de checkpoint ausente")
        header_end = raw.find(b"\n", magic_end + 1)
        if header_end < 0:
            raise CheckpointError(f"{source}: cabecera sin terminar")
        try:
            header = json.loads(raw[magic_end + 1:header_end].decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as error:
            raise CheckpointError(f"{source}: cabecera ilegible ({error})") from error
        if header.get('version') != CHECKPOINT_VERSION:
            raise CheckpointError(f"{source}: versión {header.get('version')} no soportada")

        blob = raw[header_end + 1:]
        if len(blob) != header['blob_length']:
            raise CheckpointError(
                f"{source}: blob de {len(blob)} bytes, el manifiesto indica {header['blob_length']}"
            )
        tensors: Dict[str, np.ndarray] = {}
        expected_offset = 0
        for item in header['manifest']:
            shape = tuple(item['shape'])
            count = int(np.prod(shape, dtype=np.int64))
            if item['offset'] != expected_offset or item['offset'] + count * _ITEM > len(blob):
                raise CheckpointError(f"{source}: offset inconsistente para {item['name']}")
            tensors[item['name']] = np.frombuffer(
                blob, dtype='<f8', count=count, offset=item['offset']
            ).astype(np.float64).reshape(shape)
            expected_offset += count * _ITEM
        if expected_offset != len(blob):
            raise CheckpointError(f"{source}: el manifiesto no cubre todo el blob")

        return Checkpoint(
            config_hash=header['config_hash'],
            iteration=int(header['iteration']),
            tensors=tensors,
            rng_state=header['rng_state'],
            optimizer=header['optimizer'],
            schedule=header['schedule'],
            config=header.get('config', {}),
            version=header['version'],
        )

    def save(self, checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
        """Escribe en un temporal del mismo directorio y lo renombra."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = self.encode(checkpoint)
        handle, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(handle, 'wb') as stream:
                stream.write(data)
                stream.flush()
                os.fsync(stream.fileno())
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
        log.debug(f"Checkpoint de la iteración {checkpoint.iteration} guardado en {path}")
        return path

    def load(self, path: Union[str, Path]) -> Checkpoint:
        path = Path(path)
        if not path.exists():
            raise CheckpointError(f"No existe el checkpoint {path}")
        return self.decode(path.read_bytes(), source=path.name)
