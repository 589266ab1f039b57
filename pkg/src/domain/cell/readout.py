# src/domain/cell/readout.py
"""
Cabezal lineal de lectura y funciones de pérdida.

La lectura actúa solo sobre el estado final de la capa superior; el
gradiente respecto a ese estado se inyecta en t = L.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.domain.entities.layer_params import ReadoutParams
from src.domain.exceptions import InputError, NumericalError


@dataclass
class ReadoutResult:
    """
    Resultado de la lectura sobre un lote.

    Atributos:
        predictions (np.ndarray): ŷ (B,) en regresión o logits (B, K)
        loss (float): MSE medio o entropía cruzada media
        grad_h (np.ndarray): ∂Loss/∂h_L, forma (B, N)
        grad_w_out (np.ndarray): ∂Loss/∂w_out, forma (K, N)
        grad_b_out (np.ndarray): ∂Loss/∂b_out, forma (K,)
        error_rate (Optional[float]): Fracción mal clasificada (solo clasificación)
    """

    predictions: np.ndarray
    loss: float
    grad_h: np.ndarray
    grad_w_out: np.ndarray
    grad_b_out: np.ndarray
    error_rate: Optional[float] = None


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """log-softmax estabilizado restando el máximo por fila."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def readout(
    head: ReadoutParams,
    h_last,
    classification: bool,
    targets,
) -> ReadoutResult:
    """
    Predicción, pérdida y gradientes del cabezal.

    Args:
        head: Parámetros de lectura
        h_last: Estado final de la capa superior, (N) o (B, N)
        classification: True para entropía cruzada softmax, False para MSE
        targets: Objetivos (B,); float en regresión, etiqueta entera en clasificación

    Returns:
        ReadoutResult

    Raises:
        InputError: Si las formas no encajan
        NumericalError: Si la pérdida no es finita
    """
    h_last = np.asarray(h_last, dtype=np.float64)
    if h_last.ndim == 1:
        h_last = h_last[None, :]
    targets = np.atleast_1d(np.asarray(targets))
    batch, neurons = h_last.shape
    k = head.w_out.shape[0]
    if head.w_out.shape[1] != neurons:
        raise InputError(f"w_out espera {head.w_out.shape[1]} neuronas, recibe {neurons}")
    if targets.shape != (batch,):
        raise InputError(f"Se esperaban {batch} objetivos, hay {targets.shape}")

    outputs = h_last @ head.w_out.T + head.b_out
    error_rate = None

    if classification:
        labels = targets.astype(np.int64)
        if np.any(labels < 0) or np.any(labels >= k):
            raise InputError(f"Etiquetas fuera de 0..{k - 1}")
        log_probs = log_softmax(outputs)
        rows = np.arange(batch)
        loss = float(-np.mean(log_probs[rows, labels]))
        grad_out = np.exp(log_probs)
        grad_out[rows, labels] -= 1.0
        grad_out /= batch
        predictions = outputs
        error_rate = float(np.mean(np.argmax(outputs, axis=1) != labels))
    else:
        if k != 1:
            raise InputError("La regresión usa un cabezal de una salida")
        predictions = outputs[:, 0]
        residual = predictions - targets.astype(np.float64)
        loss = float(np.mean(residual ** 2))
        grad_out = (2.0 / batch) * residual[:, None]

    if not np.isfinite(loss):
        raise NumericalError("Pérdida no finita en la lectura")

    return ReadoutResult(
        predictions=predictions,
        loss=loss,
        grad_h=grad_out @ head.w_out,
        grad_w_out=grad_out.T @ h_last,
        grad_b_out=np.sum(grad_out, axis=0),
        error_rate=error_rate,
    )
