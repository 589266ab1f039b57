# src/application/use_cases/run_verify.py
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from src.config.constants import (
    BOUND_REL_TOL, FD_REL_TOL, ORACLE_MAX_NEURONS, ORACLE_MAX_STEPS, ORACLE_REL_TOL
)
from src.config.settings import (
    DEFAULT_EPSILON, DEFAULT_GAMMA, DEFAULT_SEED, VERIFY_BOUND_INITS, VERIFY_BOUND_LENGTHS,
    VERIFY_FD_INSTANCES, VERIFY_INSTANCES
)
from src.domain.cell.forward import forward_sequence
from src.domain.entities.layer_params import PARAM_NAMES, LayerParams, LayerParamsFactory
from src.domain.exceptions import DuRNNError, InputError
from src.domain.grad.backward import backward_sequence, grads_to_dict
from src.domain.grad.probe import grad_norm_probe
from src.domain.linalg.dense import spawn_rngs
from src.domain.oracle.appendix import appendix_grads_stacked
from src.domain.oracle.bounds import bound_check
from src.domain.oracle.finite_diff import finite_diff_frozen, random_layer, sample_frozen_instance
from src.domain.oracle.report import OracleEntry, OracleReport
from src.domain.tasks.adding import gen_adding
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.variant import VariantFlag

log = logger.bind(component="verify")

SUITES = ('appendix', 'finite_diff', 'bounds')
_READOUT_NAMES = ('w_out', 'b_out')


@dataclass(frozen=True)
class VerifySizes:
    """
    Tamaños máximos de las instancias aleatorias.

    Atributos:
        neurons (int): N máximo (≤ 8)
        inputs (int): M máximo
        length (int): L máximo (≤ 10)
        batch (int): B máximo
    """

    neurons: int = 4
    inputs: int = 3
    length: int = 7
    batch: int = 2

    def __post_init__(self):
        for name in ('neurons', 'inputs', 'length', 'batch'):
            if getattr(self, name) < 1:
                raise InputError(f"{name} debe ser positivo")
        if self.neurons > ORACLE_MAX_NEURONS or self.length > ORACLE_MAX_STEPS:
            raise InputError(
                f"El oráculo admite N ≤ {ORACLE_MAX_NEURONS} y L ≤ {ORACLE_MAX_STEPS}"
            )

    @classmethod
    def from_string(cls, value: str) -> 'VerifySizes':
        """Parsea "N,M,L,B"."""
        parts = [part.strip() for part in value.split(',')]
        if len(parts) != 4:
            raise InputError(f"Se esperaba N,M,L,B y se recibió '{value}'")
        try:
            neurons, inputs, length, batch = (int(part) for part in parts)
        except ValueError as error:
            raise InputError(f"Tamaños no enteros en '{value}'") from error
        return cls(neurons=neurons, inputs=inputs, length=length, batch=batch)


def check_corrupt_name(name: Optional[str]) -> None:
    """Valida el nombre del parámetro a corromper ("w_rec" o "layer0.w_rec")."""
    if name is None:
        return
    if name.split('.')[-1] not in PARAM_NAMES + _READOUT_NAMES:
        raise InputError(f"Parámetro '{name}' desconocido para --corrupt")


def corrupt_grads(grads: Dict[str, np.ndarray], name: Optional[str]) -> Dict[str, np.ndarray]:
    """Perturba el primer elemento de los gradientes cuyo nombre coincide."""
    if name is None:
        return grads
    result = dict(grads)
    for key, value in grads.items():
        if key == name or key.endswith('.' + name):
            bad = np.array(value, dtype=np.float64)
            bad.flat[0] += 1e-3 * (1.0 + float(np.max(np.abs(bad))))
            result[key] = bad
    return result


class RunVerifyUseCase:
    """Caso de uso que ejecuta los oráculos sobre instancias aleatorias."""

    def __init__(
        self,
        seed: int = DEFAULT_SEED,
        instances: int = VERIFY_INSTANCES,
        fd_instances: int = VERIFY_FD_INSTANCES,
        bound_lengths: Sequence[int] = tuple(VERIFY_BOUND_LENGTHS),
        bound_inits: int = VERIFY_BOUND_INITS,
        epsilon: float = DEFAULT_EPSILON,
        gamma: float = DEFAULT_GAMMA,
    ):
        self.seed = seed
        self.instances = instances
        self.fd_instances = fd_instances
        self.bound_lengths = list(bound_lengths)
        self.bound_inits = bound_inits
        self.epsilon = epsilon
        self.gamma = gamma

    # ------------------------------------------------------------------
    # Oráculo de sumas explícitas
    # ------------------------------------------------------------------

    def appendix_suite(self, rng: np.random.Generator, sizes: VerifySizes,
                       corrupt: Optional[str] = None) -> OracleReport:
        """
        Retropropagación iterativa frente a sumas explícitas, por variante.

        Una de cada cuatro instancias apila dos capas; una de cada ocho
        pone una capa durnn bajo la variante comprobada.
        """
        report = OracleReport()
        for variant in VariantFlag:
            for index in range(self.instances):
                length = int(rng.integers(1, sizes.length + 1))
                batch = int(rng.integers(1, sizes.batch + 1))
                inputs = int(rng.integers(1, sizes.inputs + 1))
                variants = [variant]
                if index % 4 == 3:
                    variants = [VariantFlag.DURNN if index % 8 == 7 else variant, variant]
                layers: List[LayerParams] = []
                fan_in = inputs
                for depth, layer_variant in enumerate(variants):
                    width = int(rng.integers(1, sizes.neurons + 1))
                    spec = ConstraintSpec.for_layer(length, self.epsilon, self.gamma,
                                                    last_layer=depth == len(variants) - 1)
                    layers.append(random_layer(fan_in, width, spec, layer_variant, rng))
                    fan_in = width
                x = rng.uniform(-1.0, 1.0, size=(length, batch, inputs))
                caches, _ = forward_sequence(layers, x, variants)
                top = rng.uniform(-1.0, 1.0, size=(length, batch, fan_in))
                analytic = grads_to_dict(backward_sequence(layers, caches, top))
                expected = grads_to_dict(appendix_grads_stacked(layers, caches, top))
                analytic = corrupt_grads(analytic, corrupt)
                prefix = f"{variant.value}/"
                report.compare('appendix',
                               {prefix + key: value for key, value in expected.items()},
                               {prefix + key: value for key, value in analytic.items()},
                               ORACLE_REL_TOL, instance=index)
        return report

    # ------------------------------------------------------------------
    # Diferencias finitas sobre la pérdida congelada
    # ------------------------------------------------------------------

    def finite_diff_suite(self, rng: np.random.Generator, sizes: VerifySizes,
                          corrupt: Optional[str] = None) -> OracleReport:
        """Diferencias centrales frente a gradientes analíticos, rotando variantes."""
        report = OracleReport()
        variants = list(VariantFlag)
        neurons = max(2, min(3, sizes.neurons))
        inputs = min(2, sizes.inputs)
        length = min(5, sizes.length)
        batch = min(2, sizes.batch)
        for index in range(self.fd_instances):
            variant = variants[index % len(variants)]
            instance = sample_frozen_instance(rng, [variant], [neurons], inputs, length, batch,
                                              with_head=True)
            analytic = corrupt_grads(instance.analytic(), corrupt)
            keys = [f"layer0.{name}" for name in variant.trained_params]
            keys += [f"readout.{name}" for name in _READOUT_NAMES]
            prefix = f"{variant.value}/"
            numeric = {prefix + key: finite_diff_frozen(instance, key) for key in keys}
            report.compare('finite_diff', numeric,
                           {prefix + key: analytic[key] for key in keys},
                           FD_REL_TOL, instance=index)
        return report

    # ------------------------------------------------------------------
    # Cotas de la retropropagación
    # ------------------------------------------------------------------

    def _exact_lower_bound(self, length: int, neurons: int, spec: ConstraintSpec,
                           rng: np.random.Generator) -> OracleEntry:
        """
        Con U en su cota inferior y todas las neuronas largas activas, el
        producto de L pasos vale exactamente ε.
        """
        tensors = LayerParamsFactory.initialize(2, neurons, spec, VariantFlag.DURNN, rng).to_tensors()
        tensors['u'] = np.full(neurons, spec.u_low)
        tensors['w_s'] = np.abs(tensors['w_s'])
        tensors['b_long'] = np.ones(neurons)
        layer = LayerParams.from_tensors(tensors)
        caches, _ = forward_sequence([layer], gen_adding(length, 1, rng), [VariantFlag.DURNN])
        probe = grad_norm_probe(layer, caches[0], length)
        products = probe.long_products[length - 1]
        deviation = np.abs(products - self.epsilon)
        worst = int(np.argmax(deviation))
        return OracleEntry(
            check='bound_lower_exact', parameter=f"L{length}.dh/dh_long",
            max_rel=float(deviation[worst]) / self.epsilon, max_abs=float(deviation[worst]),
            location=(length, worst), tolerance=1e-10,
        )

    def bounds_suite(self, rng: np.random.Generator, sizes: VerifySizes) -> OracleReport:
        """Cotas superior e inferior sobre inicializaciones aleatorias a varias L."""
        report = OracleReport()
        for length in self.bound_lengths:
            spec = ConstraintSpec.for_layer(length, self.epsilon, self.gamma)
            for index in range(self.bound_inits):
                layer = LayerParamsFactory.initialize(2, sizes.neurons, spec, VariantFlag.DURNN, rng)
                caches, _ = forward_sequence([layer], gen_adding(length, 1, rng), [VariantFlag.DURNN])
                report.extend(bound_check(layer, caches[0], spec, self.gamma,
                                          label=f"L{length}", instance=index, tol=BOUND_REL_TOL))
            report.add(self._exact_lower_bound(length, sizes.neurons, spec, rng))
        return report

    def execute(
        self,
        sizes: Optional[VerifySizes] = None,
        corrupt: Optional[str] = None,
        suites: Sequence[str] = SUITES,
    ) -> Dict[str, Any]:
        """
        Ejecuta las suites pedidas.

        Args:
            sizes: Tamaños máximos de las instancias
            corrupt: Parámetro cuyo gradiente analítico se perturba
            suites: Subconjunto de ('appendix', 'finite_diff', 'bounds')

        Returns:
            Dict con 'success' (True si todo pasa), 'message' y 'data' con
            el informe, su texto y sus líneas JSON
        """
        try:
            sizes = sizes or VerifySizes()
            check_corrupt_name(corrupt)
            unknown = [suite for suite in suites if suite not in SUITES]
            if unknown:
                raise InputError(f"Suite desconocida: {', '.join(unknown)}")
        except InputError as error:
            return {'success': False, 'message': str(error), 'data': {'failure': 'usage'}}

        rng_appendix, rng_fd, rng_bounds = spawn_rngs(self.seed, 3)
        runners = {
            'appendix': lambda: self.appendix_suite(rng_appendix, sizes, corrupt),
            'finite_diff': lambda: self.finite_diff_suite(rng_fd, sizes, corrupt),
            'bounds': lambda: self.bounds_suite(rng_bounds, sizes),
        }
        report = OracleReport()
        try:
            for suite in SUITES:
                if suite not in suites:
                    continue
                started = time.perf_counter()
                partial = runners[suite]()
                log.info(f"Suite {suite}: {len(partial.entries)} comprobaciones, "
                         f"{len(partial.failures)} fallos en {time.perf_counter() - started:.1f} s")
                report.extend(partial)
        except DuRNNError as error:
            log.error(f"Verificación interrumpida: {error}")
            return {'success': False, 'message': f"Verificación interrumpida: {error}",
                    'data': {'failure': 'aborted', 'report': report}}

        failed = sorted({entry.parameter for entry in report.failures})
        message = ("Verificación superada" if report.passed
                   else f"Verificación fallida en: {', '.join(failed)}")
        return {
            'success': report.passed,
            'message': message,
            'data': {'report': report, 'text': report.to_text(), 'json': report.to_json_lines(),
                     'failed_parameters': failed},
        }


def create_run_verify_use_case(seed: int = DEFAULT_SEED, **options) -> RunVerifyUseCase:
    """Crea una instancia de RunVerifyUseCase."""
    return RunVerifyUseCase(seed=seed, **options)
