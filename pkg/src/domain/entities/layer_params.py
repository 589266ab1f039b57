# src/domain/entities/layer_params.py
from dataclasses import dataclass, fields
from typing import Dict, Tuple

import numpy as np

from src.config.settings import INIT_B_THRE
from src.domain.exceptions import InputError, NumericalError
from src.domain.linalg.svd import clip_singular_values
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.variant import VariantFlag

PARAM_NAMES: Tuple[str, ...] = (
    'w_in', 'w_rec', 'b_short', 'w_ss', 'w_ls', 'b_s', 'b_thre', 'w_s', 'u', 'b_long'
)


@dataclass
class LayerParams:
    """
    Entidad con todos los tensores entrenables de una capa dual.

    Atributos:
        w_in (np.ndarray): Matriz de entrada N×M
        w_rec (np.ndarray): Matriz recurrente corta N×N (ya recortada por C_δ)
        b_short (np.ndarray): Sesgo de la subcapa corta (N)
        w_ss (np.ndarray): Selección desde la memoria corta N×N
        w_ls (np.ndarray): Selección desde la memoria larga N×N
        b_s (np.ndarray): Sesgo de la selección (N)
        b_thre (float): Umbral de la selección, en [0, 1]
        w_s (np.ndarray): Transición corta → larga N×N
        u (np.ndarray): Pesos recurrentes independientes (N)
        b_long (np.ndarray): Sesgo de la subcapa larga (N)
    """

    w_in: np.ndarray
    w_rec: np.ndarray
    b_short: np.ndarray
    w_ss: np.ndarray
    w_ls: np.ndarray
    b_s: np.ndarray
    b_thre: float
    w_s: np.ndarray
    u: np.ndarray
    b_long: np.ndarray

    def __post_init__(self):
        """Validar formas después de la inicialización."""
        self.validate()

    def validate(self) -> None:
        """Validar formas y finitud de todos los tensores."""
        n, m = np.shape(self.w_in)
        square = {'w_rec': self.w_rec, 'w_ss': self.w_ss, 'w_ls': self.w_ls, 'w_s': self.w_s}
        for name, value in square.items():
            if np.shape(value) != (n, n):
                raise InputError(f"{name} debe ser {n}×{n}, tiene forma {np.shape(value)}")
        vectors = {'b_short': self.b_short, 'b_s': self.b_s, 'u': self.u, 'b_long': self.b_long}
        for name, value in vectors.items():
            if np.shape(value) != (n,):
                raise InputError(f"{name} debe tener longitud {n}, tiene forma {np.shape(value)}")
        if np.ndim(self.b_thre) != 0:
            raise InputError("b_thre debe ser un escalar")
        for name, value in self.to_tensors().items():
            if not np.all(np.isfinite(value)):
                raise NumericalError("Parámetro no finito", parameter=name)

    @property
    def neurons(self) -> int:
        """Número de neuronas N."""
        return int(np.shape(self.w_in)[0])

    @property
    def inputs(self) -> int:
        """Dimensión de entrada M."""
        return int(np.shape(self.w_in)[1])

    def to_tensors(self) -> Dict[str, np.ndarray]:
        """Tensores por nombre (b_thre como array 0-d)."""
        return {f.name: np.asarray(getattr(self, f.name), dtype=np.float64) for f in fields(self)}

    @classmethod
    def from_tensors(cls, tensors: Dict[str, np.ndarray]) -> 'LayerParams':
        """Crea LayerParams desde un diccionario de tensores."""
        missing = [name for name in PARAM_NAMES if name not in tensors]
        if missing:
            raise InputError(f"Faltan tensores: {', '.join(missing)}")
        values = {name: np.array(tensors[name], dtype=np.float64) for name in PARAM_NAMES}
        values['b_thre'] = float(values['b_thre'])
        return cls(**values)

    def copy(self) -> 'LayerParams':
        """Copia profunda."""
        return LayerParams.from_tensors(self.to_tensors())


@dataclass
class ReadoutParams:
    """
    Cabezal lineal de lectura sobre el estado final de la capa superior.

    Atributos:
        w_out (np.ndarray): Pesos K×N
        b_out (np.ndarray): Sesgo (K)
    """

    w_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        k, _ = np.shape(self.w_out)
        if np.shape(self.b_out) != (k,):
            raise InputError(f"b_out debe tener longitud {k}")
        if not (np.all(np.isfinite(self.w_out)) and np.all(np.isfinite(self.b_out))):
            raise NumericalError("Cabezal de lectura no finito")

    def to_tensors(self) -> Dict[str, np.ndarray]:
        return {'w_out': np.asarray(self.w_out, dtype=np.float64),
                'b_out': np.asarray(self.b_out, dtype=np.float64)}

    @classmethod
    def from_tensors(cls, tensors: Dict[str, np.ndarray]) -> 'ReadoutParams':
        return cls(w_out=np.array(tensors['w_out'], dtype=np.float64),
                   b_out=np.array(tensors['b_out'], dtype=np.float64))

    def copy(self) -> 'ReadoutParams':
        return ReadoutParams.from_tensors(self.to_tensors())


class LayerParamsFactory:
    """Factory para crear parámetros inicializados."""

    @staticmethod
    def initialize(
        inputs: int,
        neurons: int,
        spec: ConstraintSpec,
        variant: VariantFlag,
        rng: np.random.Generator,
    ) -> LayerParams:
        """
        Inicializa una capa.

        Las matrices siguen uniform(−√(1/fan_in), √(1/fan_in)); W_rec se
        proyecta de inmediato con C_δ; U se toma del intervalo de
        inicialización de la restricción; sesgos a 0 y b_thre = 0.1.
        """
        if inputs < 1 or neurons < 1:
            raise InputError(f"Dimensiones inválidas: M={inputs}, N={neurons}")

        def uniform(shape, fan_in):
            bound = np.sqrt(1.0 / fan_in)
            return rng.uniform(-bound, bound, size=shape)

        w_in = uniform((neurons, inputs), inputs)
        w_rec = uniform((neurons, neurons), neurons)
        w_ss = uniform((neurons, neurons), neurons)
        w_ls = uniform((neurons, neurons), neurons)
        w_s = uniform((neurons, neurons), neurons)
        u = rng.uniform(*spec.init_u_interval, size=neurons)

        if variant.diagonal_recurrence:
            w_rec = np.diag(rng.uniform(*spec.init_u_interval, size=neurons))
        else:
            w_rec = clip_singular_values(w_rec, spec.delta)

        return LayerParams(
            w_in=w_in,
            w_rec=w_rec,
            b_short=np.zeros(neurons),
            w_ss=w_ss,
            w_ls=w_ls,
            b_s=np.zeros(neurons),
            b_thre=INIT_B_THRE,
            w_s=w_s,
            u=u,
            b_long=np.zeros(neurons),
        )

    @staticmethod
    def initialize_readout(neurons: int, outputs: int, bias: float = 0.0) -> ReadoutParams:
        """Cabezal con pesos nulos: el modelo sin entrenar predice `bias`."""
        return ReadoutParams(w_out=np.zeros((outputs, neurons)),
                             b_out=np.full(outputs, float(bias)))
