# src/config/experiment.py
"""
Configuración de un experimento.

ExperimentConfig se serializa a un diccionario plano de claves con puntos
(`layer.1.neurons = 128`) y vuelve a construirse desde él sin pérdidas.
"""
import hashlib
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

from src.config.settings import (
    DEFAULT_BATCH_SIZE, DEFAULT_CHECKPOINT_EVERY, DEFAULT_EPSILON, DEFAULT_EVAL_INTERVAL,
    DEFAULT_EVAL_SIZE, DEFAULT_GAMMA, DEFAULT_LR, DEFAULT_LR_DECAY, DEFAULT_LR_EVERY,
    DEFAULT_LR_PATIENCE, DEFAULT_MAX_ITERS, DEFAULT_NEURONS, DEFAULT_SEED, DEFAULT_SEQ_LEN,
    DEFAULT_WORKERS, EASE_LOWER_BOUND, MNIST_SEQ_LEN, MNIST_VALIDATION, TRAIN_B_S
)
from src.domain.exceptions import ConfigError, InputError
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.task_kind import LrMode, TaskKind
from src.domain.value_objects.variant import VariantFlag

# Claves que no cambian la arquitectura ni la trayectoria del entrenamiento
RUNTIME_KEYS = frozenset({
    'max_iters', 'workers', 'checkpoint.every', 'checkpoint.path', 'log.path', 'data.dir',
})


@dataclass
class LayerConfig:
    """
    Configuración de una capa.

    Atributos:
        neurons (int): Neuronas N de cada subcapa
        variant (VariantFlag): Variante de la capa
        u_low, u_high, delta (Optional[float]): Cotas explícitas que
            sustituyen a las derivadas de ε, γ y L
    """

    neurons: int = DEFAULT_NEURONS
    variant: VariantFlag = VariantFlag.DURNN
    u_low: Optional[float] = None
    u_high: Optional[float] = None
    delta: Optional[float] = None


@dataclass
class ExperimentConfig:
    """Todos los parámetros de un entrenamiento, con los valores por defecto de settings."""

    task: TaskKind = TaskKind.ADDING
    seq_len: int = DEFAULT_SEQ_LEN
    layers: List[LayerConfig] = field(default_factory=lambda: [LayerConfig()])
    batch_size: int = DEFAULT_BATCH_SIZE
    max_iters: int = DEFAULT_MAX_ITERS
    eval_interval: int = DEFAULT_EVAL_INTERVAL
    eval_size: int = DEFAULT_EVAL_SIZE
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    lr_mode: LrMode = LrMode.FIXED
    lr_initial: float = DEFAULT_LR
    lr_decay: float = DEFAULT_LR_DECAY
    lr_every: int = DEFAULT_LR_EVERY
    lr_patience: int = DEFAULT_LR_PATIENCE
    epsilon: float = DEFAULT_EPSILON
    gamma: float = DEFAULT_GAMMA
    delta: Optional[float] = None
    ease_lower: bool = EASE_LOWER_BOUND
    train_b_s: bool = TRAIN_B_S
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY
    checkpoint_path: Optional[str] = None
    log_path: Optional[str] = None
    data_dir: Optional[str] = None
    mnist_subset: Optional[int] = None
    mnist_validation: int = MNIST_VALIDATION
    permutation_seed: int = DEFAULT_SEED
    trace_seed: int = DEFAULT_SEED

    def validate(self) -> 'ExperimentConfig':
        """
        Valida contadores, rangos y coherencia entre tarea y longitud.

        Raises:
            ConfigError: Con la clave del valor inválido
        """
        positives = {
            'seq_len': self.seq_len, 'batch_size': self.batch_size, 'max_iters': self.max_iters,
            'eval_interval': self.eval_interval, 'eval_size': self.eval_size,
            'workers': self.workers, 'lr.every': self.lr_every, 'lr.patience': self.lr_patience,
            'checkpoint.every': self.checkpoint_every, 'layers': len(self.layers),
        }
        for key, value in positives.items():
            if value < 1:
                raise ConfigError(f"Debe ser positivo, recibió {value}", key=key)
        if self.task == TaskKind.ADDING and self.seq_len < 2:
            raise ConfigError("El problema de la suma necesita L ≥ 2", key='seq_len')
        if self.task.is_classification and self.seq_len != MNIST_SEQ_LEN:
            raise ConfigError(f"MNIST usa L = {MNIST_SEQ_LEN}", key='seq_len')
        if self.lr_initial <= 0:
            raise ConfigError("La tasa inicial debe ser positiva", key='lr.initial')
        if not 0.0 < self.lr_decay < 1.0:
            raise ConfigError("El decaimiento debe estar en (0, 1)", key='lr.decay')
        if self.mnist_subset is not None and self.mnist_subset < 2:
            raise ConfigError("El subconjunto debe tener al menos 2 muestras", key='mnist.subset')
        for index, layer in enumerate(self.layers, start=1):
            if layer.neurons < 1:
                raise ConfigError("Debe ser positivo", key=f'layer.{index}.neurons')
        try:
            self.constraint_specs()
        except InputError as error:
            raise ConfigError(str(error), key='constraint') from error
        return self

    @property
    def variants(self) -> List[VariantFlag]:
        return [layer.variant for layer in self.layers]

    @property
    def neurons(self) -> List[int]:
        return [layer.neurons for layer in self.layers]

    def constraint_specs(self) -> List[ConstraintSpec]:
        """Restricciones por capa; u_low se relaja fuera de la última capa."""
        last = len(self.layers) - 1
        return [
            ConstraintSpec.for_layer(
                self.seq_len,
                epsilon=self.epsilon,
                gamma=self.gamma,
                delta=layer.delta if layer.delta is not None else self.delta,
                last_layer=index == last,
                ease_lower=self.ease_lower,
                u_low=layer.u_low,
                u_high=layer.u_high,
            )
            for index, layer in enumerate(self.layers)
        ]

    def with_variant(self, variant: VariantFlag) -> 'ExperimentConfig':
        """Copia con todas las capas en la variante indicada."""
        return replace(self, layers=[replace(layer, variant=variant) for layer in self.layers])

    def with_overrides(self, **changes) -> 'ExperimentConfig':
        return replace(self, **changes)

    # ------------------------------------------------------------------
    # Serialización plana
    # ------------------------------------------------------------------

    def to_flat(self) -> Dict[str, str]:
        """Diccionario ordenado clave → texto; los floats se escriben con repr."""
        flat = {
            'task': self.task.value,
            'seq_len': str(self.seq_len),
            'batch_size': str(self.batch_size),
            'max_iters': str(self.max_iters),
            'eval_interval': str(self.eval_interval),
            'eval_size': str(self.eval_size),
            'seed': str(self.seed),
            'workers': str(self.workers),
            'lr.mode': self.lr_mode.value,
            'lr.initial': repr(self.lr_initial),
            'lr.decay': repr(self.lr_decay),
            'lr.every': str(self.lr_every),
            'lr.patience': str(self.lr_patience),
            'constraint.epsilon': repr(self.epsilon),
            'constraint.gamma': repr(self.gamma),
            'constraint.delta': _format_optional(self.delta, 'auto'),
            'constraint.ease_lower': _format_bool(self.ease_lower),
            'grad.train_b_s': _format_bool(self.train_b_s),
            'checkpoint.every': str(self.checkpoint_every),
            'checkpoint.path': self.checkpoint_path or 'none',
            'log.path': self.log_path or 'none',
            'data.dir': self.data_dir or 'none',
            'mnist.subset': _format_optional(self.mnist_subset, 'none'),
            'mnist.validation': str(self.mnist_validation),
            'mnist.permutation_seed': str(self.permutation_seed),
            'trace.seed': str(self.trace_seed),
            'layers': str(len(self.layers)),
        }
        for index, layer in enumerate(self.layers, start=1):
            flat[f'layer.{index}.neurons'] = str(layer.neurons)
            flat[f'layer.{index}.variant'] = layer.variant.value
            flat[f'layer.{index}.u_low'] = _format_optional(layer.u_low, 'auto')
            flat[f'layer.{index}.u_high'] = _format_optional(layer.u_high, 'auto')
            flat[f'layer.{index}.delta'] = _format_optional(layer.delta, 'auto')
        return flat

    @classmethod
    def from_flat(cls, flat: Dict[str, str]) -> 'ExperimentConfig':
        """
        Construye la configuración desde claves planas; las ausentes toman su valor por defecto.

        Raises:
            ConfigError: Clave desconocida o valor no interpretable
        """
        default = cls()
        reader = _FlatReader(flat)
        task = reader.get('task', TaskKind.from_string, default.task)
        count = reader.get('layers', int, None)
        if count is None:
            indices = {int(key.split('.')[1]) for key in flat
                       if key.startswith('layer.') and key.split('.')[1].isdigit()}
            count = max(indices) if indices else 1
        layers = [
            LayerConfig(
                neurons=reader.get(f'layer.{k}.neurons', int, DEFAULT_NEURONS),
                variant=reader.get(f'layer.{k}.variant', VariantFlag.from_string, VariantFlag.DURNN),
                u_low=reader.get(f'layer.{k}.u_low', _parse_optional_float, None),
                u_high=reader.get(f'layer.{k}.u_high', _parse_optional_float, None),
                delta=reader.get(f'layer.{k}.delta', _parse_optional_float, None),
            )
            for k in range(1, count + 1)
        ]
        config = cls(
            task=task,
            seq_len=reader.get('seq_len', int, MNIST_SEQ_LEN if task.is_classification else default.seq_len),
            layers=layers,
            batch_size=reader.get('batch_size', int, default.batch_size),
            max_iters=reader.get('max_iters', int, default.max_iters),
            eval_interval=reader.get('eval_interval', int, default.eval_interval),
            eval_size=reader.get('eval_size', int, default.eval_size),
            seed=reader.get('seed', int, default.seed),
            workers=reader.get('workers', int, default.workers),
            lr_mode=reader.get('lr.mode', LrMode.from_string, default.lr_mode),
            lr_initial=reader.get('lr.initial', float, default.lr_initial),
            lr_decay=reader.get('lr.decay', float, default.lr_decay),
            lr_every=reader.get('lr.every', int, default.lr_every),
            lr_patience=reader.get('lr.patience', int, default.lr_patience),
            epsilon=reader.get('constraint.epsilon', float, default.epsilon),
            gamma=reader.get('constraint.gamma', float, default.gamma),
            delta=reader.get('constraint.delta', _parse_optional_float, default.delta),
            ease_lower=reader.get('constraint.ease_lower', _parse_bool, default.ease_lower),
            train_b_s=reader.get('grad.train_b_s', _parse_bool, default.train_b_s),
            checkpoint_every=reader.get('checkpoint.every', int, default.checkpoint_every),
            checkpoint_path=reader.get('checkpoint.path', _parse_optional_str, None),
            log_path=reader.get('log.path', _parse_optional_str, None),
            data_dir=reader.get('data.dir', _parse_optional_str, None),
            mnist_subset=reader.get('mnist.subset', _parse_optional_int, None),
            mnist_validation=reader.get('mnist.validation', int, default.mnist_validation),
            permutation_seed=reader.get('mnist.permutation_seed', int, default.permutation_seed),
            trace_seed=reader.get('trace.seed', int, default.trace_seed),
        )
        reader.reject_unknown()
        return config

    def config_hash(self) -> str:
        """Huella SHA-256 de las claves que definen arquitectura y trayectoria."""
        items = sorted((key, value) for key, value in self.to_flat().items()
                       if key not in RUNTIME_KEYS)
        text = "\n".join(f"{key}={value}" for key, value in items)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()


class _FlatReader:
    """Lee claves tipadas de un diccionario plano y recuerda cuáles se usaron."""

    def __init__(self, flat: Dict[str, str]):
        self.flat = flat
        self.used = set()

    def get(self, key: str, parse: Callable, default):
        if key not in self.flat:
            return default
        self.used.add(key)
        raw = self.flat[key].strip()
        try:
            return parse(raw)
        except (ValueError, InputError) as error:
            raise ConfigError(f"Valor '{raw}' no válido: {error}", key=key) from error

    def reject_unknown(self) -> None:
        unknown = sorted(set(self.flat) - self.used)
        if unknown:
            raise ConfigError("Clave desconocida", key=unknown[0])


def _format_bool(value: bool) -> str:
    return 'true' if value else 'false'


def _format_optional(value, empty: str) -> str:
    if value is None:
        return empty
    return repr(value) if isinstance(value, float) else str(value)


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ('true', 'yes', '1', 'on'):
        return True
    if lowered in ('false', 'no', '0', 'off'):
        return False
    raise ValueError("se esperaba true o false")


def _parse_optional_float(raw: str) -> Optional[float]:
    return None if raw.lower() in ('auto', 'none', '') else float(raw)


def _parse_optional_int(raw: str) -> Optional[int]:
    return None if raw.lower() in ('auto', 'none', '') else int(raw)


def _parse_optional_str(raw: str) -> Optional[str]:
    return None if raw.lower() in ('none', '') else raw
