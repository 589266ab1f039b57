"""
Persistencia de Datos.

Implementaciones concretas de repositorios y formatos de fichero:
IDX de MNIST, checkpoints binarios, ficheros de configuración y CSV.
"""

from .idx.idx_mnist_repository import IdxMnistRepository, parse_idx, read_idx_bytes
from .checkpoint.binary_checkpoint_repository import BinaryCheckpointRepository
from .config_file import parse_config_text, dump_config_text, read_config, write_config
from .logs.csv_logs import MetricLog, read_metric_log, write_frame, read_traces

__all__ = [
    'IdxMnistRepository',
    'parse_idx',
    'read_idx_bytes',
    'BinaryCheckpointRepository',
    'parse_config_text',
    'dump_config_text',
    'read_config',
    'write_config',
    'MetricLog',
    'read_metric_log',
    'write_frame',
    'read_traces'
]
