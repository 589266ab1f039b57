# src/domain/oracle/report.py
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from src.config.constants import ORACLE_REL_FLOOR


def relative_error(a, b, floor: float = ORACLE_REL_FLOOR) -> Tuple[float, float, Tuple[int, ...]]:
    """
    Error relativo entre dos tensores.

    max|a − b| / max(max|a|, max|b|, floor).

    Returns:
        (error relativo, error absoluto máximo, índice del máximo)
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"Formas distintas: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0, 0.0, ()
    diff = np.abs(a - b)
    index = np.unravel_index(int(np.argmax(diff)), diff.shape) if diff.ndim else ()
    max_abs = float(diff.max())
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()), floor)
    return max_abs / scale, max_abs, tuple(int(i) for i in index)


@dataclass
class OracleEntry:
    """
    Resultado de una comprobación sobre un parámetro.

    Atributos:
        check (str): Nombre de la comprobación (appendix, finite_diff, bound_upper...)
        parameter (str): Parámetro o magnitud comprobada ("layer0.w_rec")
        max_rel (float): Error relativo máximo (≥ 0)
        max_abs (float): Error absoluto máximo (≥ 0)
        location (Tuple[int, ...]): Índices del peor elemento
        tolerance (float): Tolerancia aplicada
        instance (Optional[int]): Índice de la instancia aleatoria
    """

    check: str
    parameter: str
    max_rel: float
    max_abs: float
    location: Tuple[int, ...] = ()
    tolerance: float = 0.0
    instance: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.max_rel <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['location'] = list(self.location)
        data['passed'] = self.passed
        return data


@dataclass
class OracleReport:
    """
    Informe de verificación: una entrada por (comprobación, parámetro).

    Falla si y solo si alguna entrada supera su tolerancia.
    """

    entries: List[OracleEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    @property
    def failures(self) -> List[OracleEntry]:
        return [entry for entry in self.entries if not entry.passed]

    def add(self, entry: OracleEntry) -> None:
        self.entries.append(entry)

    def extend(self, other: 'OracleReport') -> 'OracleReport':
        self.entries.extend(other.entries)
        return self

    def compare(self, check: str, expected: Dict[str, np.ndarray], actual: Dict[str, np.ndarray],
                tolerance: float, instance: Optional[int] = None) -> None:
        """Añade una entrada por cada clave común de los dos diccionarios."""
        for name in expected:
            rel, abs_, loc = relative_error(expected[name], actual[name])
            self.add(OracleEntry(check=check, parameter=name, max_rel=rel, max_abs=abs_,
                                 location=loc, tolerance=tolerance, instance=instance))

    def summary(self) -> List[OracleEntry]:
        """Peor entrada por (comprobación, parámetro), en orden de aparición."""
        worst: Dict[Tuple[str, str], OracleEntry] = {}
        for entry in self.entries:
            key = (entry.check, entry.parameter)
            if key not in worst or entry.max_rel > worst[key].max_rel:
                worst[key] = entry
        return list(worst.values())

    def parameters(self) -> List[str]:
        return sorted({entry.parameter for entry in self.entries})

    def to_json_lines(self) -> str:
        """Una línea JSON por entrada resumida."""
        return "\n".join(json.dumps(entry.to_dict(), sort_keys=True) for entry in self.summary())

    def to_text(self) -> str:
        """Texto legible: una línea por entrada resumida y el veredicto."""
        lines = [
            f"{'OK ' if entry.passed else 'FAIL'} {entry.check:<14} {entry.parameter:<22} "
            f"rel={entry.max_rel:.3e} abs={entry.max_abs:.3e} tol={entry.tolerance:.1e} "
            f"en {entry.location}"
            for entry in self.summary()
        ]
        lines.append("PASS" if self.passed else f"FAIL ({len(self.failures)} entradas)")
        return "\n".join(lines)

    @classmethod
    def merge(cls, reports: Iterable['OracleReport']) -> 'OracleReport':
        merged = cls()
        for report in reports:
            merged.extend(report)
        return merged
