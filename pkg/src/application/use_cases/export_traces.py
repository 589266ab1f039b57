# src/application/use_cases/export_traces.py
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.config.experiment import ExperimentConfig
from src.config.settings import TRACE_COLUMNS
from src.domain.entities.forward_cache import ForwardCache
from src.domain.entities.network import Network, NetworkFactory
from src.domain.exceptions import DuRNNError, InputError
from src.domain.linalg.dense import seeded_rng
from src.domain.repositories.abstract.checkpoint_repository import CheckpointRepository
from src.domain.repositories.abstract.dataset_repository import DatasetRepository
from src.domain.tasks.adding import gen_adding
from src.domain.tasks.mnist import apply_permutation
from src.domain.value_objects.pixel_permutation import PixelPermutation
from src.domain.value_objects.task_kind import Sublayer, TaskKind
from src.infrastructure.persistence.checkpoint.binary_checkpoint_repository import (
    BinaryCheckpointRepository
)
from src.infrastructure.persistence.idx.idx_mnist_repository import IdxMnistRepository
from src.infrastructure.persistence.logs.csv_logs import write_frame

log = logger.bind(component="trace")

STATS_COLUMNS = ['layer', 'sublayer', 'continuously_active', 'mean_abs_change']


def trace_frame(caches: List[ForwardCache], row: int = 0) -> pd.DataFrame:
    """
    Filas `layer,sublayer,t,neuron,activation` para una secuencia del lote.

    Cada capa aporta sus dos subcapas aunque la variante no ejecute una de
    ellas (en ese caso sus activaciones son cero).
    """
    parts = []
    for layer_index, cache in enumerate(caches):
        for sublayer, states in ((Sublayer.SHORT, cache.h_short), (Sublayer.LONG, cache.h_long)):
            activations = states[:, row, :]
            length, neurons = activations.shape
            t, neuron = np.meshgrid(np.arange(length), np.arange(neurons), indexing='ij')
            parts.append(pd.DataFrame({
                'layer': layer_index,
                'sublayer': sublayer.value,
                't': t.ravel(),
                'neuron': neuron.ravel(),
                'activation': activations.ravel(),
            }))
    return pd.concat(parts, ignore_index=True)[TRACE_COLUMNS]


def trace_statistics(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Resumen por (capa, subcapa).

    continuously_active cuenta las neuronas con activación > 0 en todos
    los pasos; mean_abs_change es la media de |a_t − a_{t−1}|.
    """
    rows = []
    for (layer, sublayer), group in frame.groupby(['layer', 'sublayer'], sort=True):
        matrix = group.pivot(index='t', columns='neuron', values='activation').sort_index().to_numpy()
        change = float(np.mean(np.abs(np.diff(matrix, axis=0)))) if matrix.shape[0] > 1 else 0.0
        rows.append({
            'layer': int(layer),
            'sublayer': sublayer,
            'continuously_active': int(np.sum(np.all(matrix > 0.0, axis=0))),
            'mean_abs_change': change,
        })
    return pd.DataFrame(rows, columns=STATS_COLUMNS)


class ExportTracesUseCase:
    """Caso de uso para exportar las activaciones de una red entrenada."""

    def __init__(
        self,
        checkpoint_repository: Optional[CheckpointRepository] = None,
        dataset_repository: Optional[DatasetRepository] = None,
    ):
        self.checkpoint_repository = checkpoint_repository or BinaryCheckpointRepository()
        self.dataset_repository = dataset_repository

    def load_network(self, path: Union[str, Path]) -> Tuple[ExperimentConfig, Network]:
        """Red y configuración guardadas en un checkpoint."""
        checkpoint = self.checkpoint_repository.load(path)
        config = ExperimentConfig.from_flat(checkpoint.config)
        network = NetworkFactory.from_tensors(checkpoint.tensors, config.variants,
                                              config.constraint_specs())
        return config, network

    def _sequence(self, config: ExperimentConfig, seed: int, zero_input: bool) -> np.ndarray:
        """Secuencia (L, M) de entrada: ceros, un ejemplo de la suma o una imagen de prueba."""
        features = config.task.input_features
        if zero_input:
            return np.zeros((config.seq_len, features))
        rng = seeded_rng(seed)
        if config.task == TaskKind.ADDING:
            return gen_adding(config.seq_len, 1, rng).inputs[0]
        repository = self.dataset_repository or IdxMnistRepository(config.data_dir)
        test = repository.load_split("test")
        if config.task == TaskKind.PMNIST:
            test = apply_permutation(test, PixelPermutation.from_seed(config.permutation_seed))
        index = int(rng.integers(len(test)))
        log.info(f"Imagen de prueba {index} (etiqueta {int(test.labels[index])})")
        return test.images[index][:, None]

    def execute(
        self,
        checkpoint_path: Union[str, Path],
        out: Optional[Union[str, Path]] = None,
        seed: Optional[int] = None,
        zero_input: bool = False,
        inputs: Optional[np.ndarray] = None,
    ) -> Dict[str, Any]:
        """
        Recorre una secuencia con la red del checkpoint y exporta las activaciones.

        Args:
            checkpoint_path: Checkpoint a cargar
            out: CSV de salida (opcional)
            seed: Semilla de la secuencia (por defecto trace.seed de la configuración)
            zero_input: Usar una secuencia de ceros
            inputs: Secuencia explícita (L, M); sustituye a las anteriores

        Returns:
            Dict con 'success', 'message' y 'data' (filas y estadísticas)
        """
        try:
            config, network = self.load_network(checkpoint_path)
            if inputs is None:
                inputs = self._sequence(config, config.trace_seed if seed is None else seed,
                                        zero_input)
            inputs = np.asarray(inputs, dtype=np.float64)
            expected = (config.seq_len, config.task.input_features)
            if inputs.shape != expected:
                raise InputError(f"La secuencia tiene forma {inputs.shape}, se esperaba {expected}")
            caches = network.trace(inputs[:, None, :])
        except DuRNNError as error:
            log.error(f"No se pudieron exportar las trazas: {error}")
            return {'success': False, 'message': str(error), 'data': {'failure': 'usage'}}

        frame = trace_frame(caches)
        stats = trace_statistics(frame)
        if out is not None:
            write_frame(frame, out)
        for record in stats.itertuples(index=False):
            log.info(f"capa {record.layer} {record.sublayer}: {record.continuously_active} "
                     f"neuronas siempre activas, cambio medio {record.mean_abs_change:.4g}")
        return {
            'success': True,
            'message': f"{len(frame)} filas de activación exportadas",
            'data': {'frame': frame, 'stats': stats, 'path': Path(out) if out else None},
        }


def create_export_traces_use_case(
    checkpoint_repository: Optional[CheckpointRepository] = None,
    dataset_repository: Optional[DatasetRepository] = None,
) -> ExportTracesUseCase:
    """Crea una instancia de ExportTracesUseCase."""
    return ExportTracesUseCase(checkpoint_repository=checkpoint_repository,
                               dataset_repository=dataset_repository)
