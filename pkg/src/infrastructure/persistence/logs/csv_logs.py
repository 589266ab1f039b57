from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from loguru import logger

from src.config.settings import METRIC_COLUMNS, TRACE_COLUMNS
from src.domain.exceptions import InputError

log = logger.bind(component="csv")


class MetricLog:
    """
    CSV de métricas de solo anexado con columnas `iter,loss,lr,wall_ms`.

    Cada fila se escribe en cuanto se produce, para que un entrenamiento
    abortado conserve su curva.
    """

    def __init__(self, path: Optional[Union[str, Path]]):
        self.path = Path(path) if path else None
        self.rows: List[Dict[str, float]] = []

    def start(self, resume_iteration: Optional[int] = None, keep_resume_row: bool = True) -> None:
        """
        Crea el fichero con cabecera, o al reanudar descarta las filas
        posteriores a la iteración del checkpoint.

        Args:
            resume_iteration: Iteración del checkpoint, o None para empezar de cero
            keep_resume_row: Conservar la fila de esa misma iteración (solo si
                corresponde a una evaluación periódica)
        """
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if resume_iteration is not None and self.path.exists():
            frame = read_metric_log(self.path)
            limit = frame["iter"] <= resume_iteration if keep_resume_row else frame["iter"] < resume_iteration
            kept = frame[limit]
            if len(kept) != len(frame):
                log.warning(f"Descartadas {len(frame) - len(kept)} filas posteriores a la iteración "
                            f"{resume_iteration}")
            kept.to_csv(self.path, index=False)
            self.rows = kept.to_dict('records')
            return
        pd.DataFrame(columns=METRIC_COLUMNS).to_csv(self.path, index=False)

    def append(self, iteration: int, loss: float, lr: float, wall_ms: float) -> None:
        row = {'iter': int(iteration), 'loss': float(loss), 'lr': float(lr), 'wall_ms': float(wall_ms)}
        self.rows.append(row)
        if self.path is not None:
            pd.DataFrame([row], columns=METRIC_COLUMNS).to_csv(
                self.path, mode='a', header=False, index=False
            )

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=METRIC_COLUMNS)


def read_metric_log(path: Union[str, Path]) -> pd.DataFrame:
    """Lee un CSV de métricas validando las columnas."""
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != METRIC_COLUMNS:
        raise InputError(f"Columnas inesperadas en {path}: {list(frame.columns)}")
    return frame


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Escribe un DataFrame como CSV sin índice."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    log.info(f"{len(frame)} filas escritas en {path}")
    return path


def read_traces(path: Union[str, Path]) -> pd.DataFrame:
    """Lee un CSV de trazas `layer,sublayer,t,neuron,activation`."""
    frame = pd.read_csv(path)
    if list(frame.columns) != TRACE_COLUMNS:
        raise InputError(f"Columnas inesperadas en {path}: {list(frame.columns)}")
    return frame
