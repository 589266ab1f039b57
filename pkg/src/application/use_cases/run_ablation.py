# src/application/use_cases/run_ablation.py
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from loguru import logger

from src.application.use_cases.run_training import RunTrainingUseCase
from src.config.experiment import ExperimentConfig
from src.config.settings import METRIC_COLUMNS
from src.domain.exceptions import InputError
from src.domain.value_objects.variant import VariantFlag
from src.infrastructure.persistence.logs.csv_logs import write_frame

log = logger.bind(component="ablation")

ABLATION_COLUMNS = ['variant'] + METRIC_COLUMNS


class RunAblationUseCase:
    """
    Caso de uso que entrena la misma configuración con varias variantes.

    Todas las variantes comparten semilla, así que reciben la misma
    secuencia de lotes y el mismo conjunto de evaluación.
    """

    def __init__(self, training: Optional[RunTrainingUseCase] = None):
        self.training = training or RunTrainingUseCase()

    @staticmethod
    def _variant_config(config: ExperimentConfig, variant: VariantFlag) -> ExperimentConfig:
        """Copia con la variante en todas las capas y rutas propias por variante."""
        variant_config = config.with_variant(variant)
        checkpoint = None
        if config.checkpoint_path:
            base = Path(config.checkpoint_path)
            checkpoint = str(base.with_name(f"{base.stem}_{variant.value}{base.suffix}"))
        return replace(variant_config, checkpoint_path=checkpoint, log_path=None)

    def execute(
        self,
        config: ExperimentConfig,
        variants: Sequence[VariantFlag],
        out: Optional[Union[str, Path]] = None,
    ) -> Dict[str, Any]:
        """
        Entrena cada variante y reúne sus curvas en un CSV con columna `variant`.

        Args:
            config: Configuración base
            variants: Variantes a comparar (sin repetir)
            out: CSV de salida (opcional)

        Returns:
            Dict con 'success', 'message' y 'data' (tabla combinada y
            métricas finales por variante)
        """
        if not variants:
            return {'success': False, 'message': "No se indicó ninguna variante",
                    'data': {'failure': 'usage'}}
        if len(set(variants)) != len(variants):
            return {'success': False, 'message': "Variantes repetidas",
                    'data': {'failure': 'usage'}}

        frames: List[pd.DataFrame] = []
        metrics: Dict[str, Dict[str, Any]] = {}
        failures: List[str] = []
        for variant in variants:
            log.info(f"Entrenando variante {variant.value}")
            result = self.training.execute(self._variant_config(config, variant))
            data = result.get('data', {})
            if data.get('failure') == 'usage':
                return result
            if 'log' in data:
                frame = data['log'].copy()
                frame.insert(0, 'variant', variant.value)
                frames.append(frame)
            if result['success']:
                metrics[variant.value] = data['metrics']
            else:
                failures.append(variant.value)
                log.error(f"La variante {variant.value} no terminó: {result['message']}")

        table = (pd.concat(frames, ignore_index=True) if frames
                 else pd.DataFrame(columns=ABLATION_COLUMNS))
        if out is not None:
            try:
                write_frame(table[ABLATION_COLUMNS], out)
            except (OSError, InputError) as error:
                return {'success': False, 'message': f"No se pudo escribir {out}: {error}",
                        'data': {'failure': 'aborted', 'table': table}}

        summary = ", ".join(f"{name}: {values['eval_loss']:.4g}" for name, values in metrics.items())
        return {
            'success': not failures,
            'message': (f"Ablación completada ({summary})" if not failures
                        else f"Variantes abortadas: {', '.join(failures)}"),
            'data': {'table': table, 'metrics': metrics, 'failed_variants': failures},
        }


def create_run_ablation_use_case(training: Optional[RunTrainingUseCase] = None) -> RunAblationUseCase:
    """Crea una instancia de RunAblationUseCase."""
    return RunAblationUseCase(training=training)
