# src/application/use_cases/run_training.py
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from tqdm import tqdm

from src.config.experiment import ExperimentConfig
from src.config.settings import SIGMA_CHECK_EVERY
from src.domain.entities.checkpoint import Checkpoint
from src.domain.entities.network import EvalResult, Network, NetworkFactory
from src.domain.entities.task_batch import TaskBatch
from src.domain.exceptions import CheckpointError, ConfigError, DuRNNError, NumericalError
from src.domain.linalg.dense import spawn_rngs
from src.domain.optim.adam import AdamState, adam_step
from src.domain.optim.constraints import SpectralMemo
from src.domain.optim.schedule import LrSchedule, schedule_lr
from src.domain.repositories.abstract.checkpoint_repository import CheckpointRepository
from src.domain.repositories.abstract.dataset_repository import DatasetRepository
from src.domain.tasks.mnist import apply_permutation, prepare_mnist
from src.domain.tasks.sources import AddingSource, MnistSource, TaskSource
from src.domain.value_objects.pixel_permutation import PixelPermutation
from src.domain.value_objects.task_kind import TaskKind
from src.infrastructure.persistence.checkpoint.binary_checkpoint_repository import (
    BinaryCheckpointRepository
)
from src.infrastructure.persistence.idx.idx_mnist_repository import IdxMnistRepository
from src.infrastructure.persistence.logs.csv_logs import MetricLog

log = logger.bind(component="train")

# Orden fijo de los flujos derivados de la semilla
_INIT, _DATA, _EVAL = range(3)

# Prefijo de las bases de arranque de la SVD en el checkpoint
_SPECTRAL = "spectral."

IterationCallback = Callable[[int, Network], None]


@dataclass
class TrainingState:
    """
    Estado mutable del bucle de entrenamiento.

    Atributos:
        network (Network): Parámetros actuales
        adam (AdamState): Momentos y contador del optimizador
        schedule (LrSchedule): Programa de la tasa de aprendizaje
        data_rng (np.random.Generator): Flujo de lotes de entrenamiento
        eval_rng (np.random.Generator): Flujo que generó el conjunto de evaluación
        iteration (int): Actualizaciones completadas
        spectral (List[SpectralMemo]): Base de arranque de la SVD de W_rec por capa
    """

    network: Network
    adam: AdamState
    schedule: LrSchedule
    data_rng: np.random.Generator
    eval_rng: np.random.Generator
    iteration: int = 0
    spectral: List[SpectralMemo] = field(default_factory=list)


def build_task_source(config: ExperimentConfig, dataset_repository: DatasetRepository,
                      eval_rng: np.random.Generator) -> TaskSource:
    """
    Crea la fuente de datos de la tarea configurada.

    Raises:
        IngestionError: Si los ficheros MNIST faltan o son inválidos
    """
    if config.task == TaskKind.ADDING:
        return AddingSource(config.seq_len, config.batch_size, config.eval_size, eval_rng)

    permutation = None
    if config.task == TaskKind.PMNIST:
        permutation = PixelPermutation.from_seed(config.permutation_seed)
        log.info(f"Permutación de píxeles {permutation.digest()[:12]} (semilla {config.permutation_seed})")
    train, validation = prepare_mnist(dataset_repository.load_split("train"), permutation,
                                      subset=config.mnist_subset,
                                      validation=config.mnist_validation)
    test = dataset_repository.load_split("test")
    if permutation is not None:
        test = apply_permutation(test, permutation)
    return MnistSource(config.task, config.batch_size, train, validation, test, config.eval_size)


class RunTrainingUseCase:
    """Caso de uso para entrenar una red con retropropagación truncada y Adam proyectado."""

    def __init__(
        self,
        checkpoint_repository: Optional[CheckpointRepository] = None,
        dataset_repository: Optional[DatasetRepository] = None,
        progress: bool = False,
        sigma_check_every: int = SIGMA_CHECK_EVERY,
    ):
        """
        Inicializa el caso de uso.

        Args:
            checkpoint_repository: Almacén de checkpoints
            dataset_repository: Origen de MNIST (se crea desde data.dir si falta)
            progress: Mostrar barra de progreso
            sigma_check_every: Cada cuántas iteraciones se vuelve a medir
                σ_max(W_rec) con su propia SVD; en las demás se usa el valor
                que deja la proyección. U y b_thre se comprueban siempre
        """
        self.checkpoint_repository = checkpoint_repository or BinaryCheckpointRepository()
        self.dataset_repository = dataset_repository
        self.progress = progress
        self.sigma_check_every = max(1, int(sigma_check_every))

    # ------------------------------------------------------------------
    # Preparación
    # ------------------------------------------------------------------

    def _fresh_state(self, config: ExperimentConfig, source: TaskSource,
                     rngs: List[np.random.Generator]) -> TrainingState:
        network = NetworkFactory.initialize(
            config.task.input_features, config.neurons, config.variants,
            config.constraint_specs(), config.task.output_size, source.head_bias, rngs[_INIT],
        )
        schedule = LrSchedule(initial_lr=config.lr_initial, decay_factor=config.lr_decay,
                              decay_every=config.lr_every, mode=config.lr_mode,
                              patience=config.lr_patience)
        adam = AdamState(lr=config.lr_initial)
        adam.ensure(network.flat_params())
        return TrainingState(network=network, adam=adam, schedule=schedule,
                             data_rng=rngs[_DATA], eval_rng=rngs[_EVAL],
                             spectral=[SpectralMemo() for _ in network.layers])

    def _restore(self, state: TrainingState, config: ExperimentConfig,
                 path: Union[str, Path]) -> TrainingState:
        checkpoint = self.checkpoint_repository.load(path)
        if checkpoint.config_hash != config.config_hash():
            raise CheckpointError(
                f"El checkpoint {Path(path).name} se creó con otra configuración "
                f"({checkpoint.config_hash[:12]} ≠ {config.config_hash()[:12]})"
            )
        if checkpoint.iteration > config.max_iters:
            raise CheckpointError(
                f"El checkpoint está en la iteración {checkpoint.iteration}, "
                f"posterior a max_iters={config.max_iters}"
            )
        state.network = NetworkFactory.from_tensors(checkpoint.tensors, config.variants,
                                                    config.constraint_specs())
        state.adam = AdamState.from_tensors(checkpoint.tensors,
                                            step_count=int(checkpoint.optimizer['step_count']),
                                            lr=float(checkpoint.optimizer['lr']))
        bases = checkpoint.tensors_with_prefix(_SPECTRAL)
        state.spectral = [SpectralMemo(basis=bases.get(f"layer{index}.basis"))
                          for index in range(len(state.network.layers))]
        state.schedule.load_state(checkpoint.schedule)
        state.data_rng.bit_generator.state = checkpoint.rng_state['data']
        state.iteration = checkpoint.iteration
        log.warning(f"Reanudando desde la iteración {checkpoint.iteration} ({Path(path).name})")
        return state

    def _checkpoint(self, state: TrainingState, config: ExperimentConfig) -> Checkpoint:
        tensors = state.network.flat_params()
        tensors.update(state.adam.to_tensors())
        tensors.update({f"{_SPECTRAL}layer{index}.basis": memo.basis
                        for index, memo in enumerate(state.spectral) if memo.basis is not None})
        return Checkpoint(
            config_hash=config.config_hash(),
            iteration=state.iteration,
            tensors=tensors,
            rng_state={'data': state.data_rng.bit_generator.state,
                       'eval': state.eval_rng.bit_generator.state},
            optimizer={'step_count': state.adam.step_count, 'lr': state.adam.lr},
            schedule=state.schedule.state_dict(),
            config=config.to_flat(),
        )

    # ------------------------------------------------------------------
    # Gradientes
    # ------------------------------------------------------------------

    def _batch_gradients(
        self,
        network: Network,
        batch: TaskBatch,
        config: ExperimentConfig,
        executor: Optional[ThreadPoolExecutor],
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        """
        Pérdida y gradientes medios del lote.

        Con varios hilos el lote se parte en trozos contiguos y los
        resultados se combinan en el orden de los trozos, ponderados por
        su tamaño.
        """
        classification = config.task.is_classification
        if executor is None or config.workers == 1 or batch.batch == 1:
            return network.loss_and_grads(batch, classification, config.train_b_s)

        bounds = np.array_split(np.arange(batch.batch), min(config.workers, batch.batch))
        chunks = [batch.slice(int(part[0]), int(part[-1]) + 1) for part in bounds if part.size]
        futures = [executor.submit(network.loss_and_grads, chunk, classification, config.train_b_s)
                   for chunk in chunks]
        loss = 0.0
        grads: Dict[str, np.ndarray] = {}
        for chunk, future in zip(chunks, futures):
            chunk_loss, chunk_grads = future.result()
            weight = chunk.batch / batch.batch
            loss += weight * chunk_loss
            for name, value in chunk_grads.items():
                grads[name] = weight * value if name not in grads else grads[name] + weight * value
        return loss, grads

    def _evaluate(self, network: Network, source: TaskSource) -> EvalResult:
        return network.evaluate(source.eval_batches(), source.classification)

    @staticmethod
    def _plateau_metric(result: EvalResult) -> float:
        """Métrica que debe bajar: tasa de error en clasificación, pérdida en regresión."""
        return result.error_rate if result.error_rate is not None else result.loss

    # ------------------------------------------------------------------
    # Bucle
    # ------------------------------------------------------------------

    def _update(self, state: TrainingState, config: ExperimentConfig, source: TaskSource,
                executor: Optional[ThreadPoolExecutor]) -> float:
        """Una iteración: lote, gradientes, Adam, proyección y comprobación."""
        iteration = state.iteration
        state.adam.lr = schedule_lr(state.schedule, iteration)
        batch = source.train_batch(state.data_rng)
        try:
            loss, grads = self._batch_gradients(state.network, batch, config, executor)
            updated = adam_step(state.adam, state.network.flat_params(), grads)
        except NumericalError as error:
            raise NumericalError(f"Iteración {iteration}: {error}", step=error.step,
                                 layer=error.layer, parameter=error.parameter) from error

        candidate = state.network.with_flat(updated)
        clamped = sum(int(np.sum((layer.u < spec.u_low) | (layer.u > spec.u_high)))
                      for layer, spec in zip(candidate.layers, candidate.specs))
        state.network = candidate.project(state.spectral)
        state.iteration = iteration + 1
        if clamped:
            log.debug(f"Iteración {state.iteration}: {clamped} entradas de U acotadas")

        memos = state.spectral
        if state.iteration % self.sigma_check_every == 0:
            memos = [SpectralMemo(basis=memo.basis) for memo in state.spectral]
        violations = state.network.check_constraints(memos=memos)
        if violations:
            first = violations[0]
            raise NumericalError(f"Restricción violada tras la proyección: {first}",
                                 step=state.iteration, layer=first.layer, parameter=first.parameter)
        return loss

    def execute(
        self,
        config: ExperimentConfig,
        resume: Optional[Union[str, Path]] = None,
        on_iteration: Optional[IterationCallback] = None,
    ) -> Dict[str, Any]:
        """
        Entrena según la configuración.

        Args:
            config: Configuración del experimento
            resume: Checkpoint desde el que continuar
            on_iteration: Llamada tras cada actualización con (iteración, red)

        Returns:
            Dict con 'success', 'message' y 'data' (métricas finales,
            ruta del checkpoint, filas del log y tipo de fallo si lo hay)
        """
        try:
            config.validate()
            rngs = spawn_rngs(config.seed, 3)
            repository = self.dataset_repository or IdxMnistRepository(config.data_dir)
            source = build_task_source(config, repository, rngs[_EVAL])
            state = self._fresh_state(config, source, rngs)
            if resume is not None:
                state = self._restore(state, config, resume)
        except (ConfigError, CheckpointError) as error:
            log.error(f"Configuración rechazada: {error}")
            return {'success': False, 'message': str(error), 'data': {'failure': 'usage'}}
        except DuRNNError as error:
            log.error(f"No se pudo preparar el entrenamiento: {error}")
            return {'success': False, 'message': str(error), 'data': {'failure': 'usage'}}

        metric_log = MetricLog(config.log_path)
        metric_log.start(resume_iteration=state.iteration if resume is not None else None,
                         keep_resume_row=state.iteration % config.eval_interval == 0)
        started = time.perf_counter()
        last_checkpoint: Optional[Path] = None
        if resume is not None:
            last_checkpoint = Path(resume)

        def record(result: EvalResult, regular: bool) -> None:
            lr = schedule_lr(state.schedule, state.iteration,
                             self._plateau_metric(result) if regular else None)
            wall_ms = (time.perf_counter() - started) * 1000.0
            metric_log.append(state.iteration, result.loss, lr, wall_ms)
            extra = f" error={result.error_rate:.4f}" if result.error_rate is not None else ""
            log.info(f"iter={state.iteration} loss={result.loss:.6f}{extra} lr={lr:.3e}")

        executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
        progress = tqdm(total=config.max_iters, initial=state.iteration, desc="train",
                        disable=not self.progress)
        result: Optional[EvalResult] = None
        try:
            if state.iteration == 0:
                result = self._evaluate(state.network, source)
                record(result, regular=True)
            while state.iteration < config.max_iters:
                train_loss = self._update(state, config, source, executor)
                progress.update(1)
                progress.set_postfix(loss=f"{train_loss:.4f}")
                if on_iteration is not None:
                    on_iteration(state.iteration, state.network)

                regular = state.iteration % config.eval_interval == 0
                if regular or state.iteration == config.max_iters:
                    result = self._evaluate(state.network, source)
                    record(result, regular)
                if config.checkpoint_path and (state.iteration % config.checkpoint_every == 0
                                               or state.iteration == config.max_iters):
                    last_checkpoint = self.checkpoint_repository.save(
                        self._checkpoint(state, config), config.checkpoint_path
                    )
        except DuRNNError as error:
            kept = f"; último checkpoint: {last_checkpoint}" if last_checkpoint else ""
            log.error(f"Entrenamiento abortado en la iteración {state.iteration}: {error}{kept}")
            return {
                'success': False,
                'message': f"Entrenamiento abortado: {error}",
                'data': {'failure': 'aborted', 'iteration': state.iteration,
                         'checkpoint': last_checkpoint, 'log': metric_log.frame()},
            }
        finally:
            progress.close()
            if executor is not None:
                executor.shutdown(wait=True)

        if result is None:
            result = self._evaluate(state.network, source)
        metrics: Dict[str, Any] = {'iteration': state.iteration, 'eval_loss': result.loss}
        if result.error_rate is not None:
            metrics['error_rate'] = result.error_rate
        test = source.test_batches()
        if test is not None:
            test_result = state.network.evaluate(test, source.classification)
            metrics['test_loss'] = test_result.loss
            metrics['test_error_rate'] = test_result.error_rate
            log.info(f"Prueba: loss={test_result.loss:.6f} error={test_result.error_rate:.4f}")

        return {
            'success': True,
            'message': f"Entrenamiento completado en {state.iteration} iteraciones",
            'data': {
                'metrics': metrics,
                'checkpoint': last_checkpoint,
                'log': metric_log.frame(),
                'network': state.network,
                'config_hash': config.config_hash(),
            },
        }


def create_run_training_use_case(
    checkpoint_repository: Optional[CheckpointRepository] = None,
    dataset_repository: Optional[DatasetRepository] = None,
    progress: bool = False,
    sigma_check_every: int = SIGMA_CHECK_EVERY,
) -> RunTrainingUseCase:
    """Crea una instancia de RunTrainingUseCase."""
    return RunTrainingUseCase(checkpoint_repository=checkpoint_repository,
                              dataset_repository=dataset_repository,
                              progress=progress, sigma_check_every=sigma_check_every)
