# src/domain/value_objects/variant.py
from enum import Enum
from typing import List

from src.domain.exceptions import InputError


class VariantFlag(Enum):
    """
    Value Object que representa la variante de una capa recurrente.

    DURNN es la celda completa; el resto son las variantes de ablación.
    """

    DURNN = "durnn"                            # Celda dual completa
    NO_SELECTION = "no_selection"              # RNN-relu + IndRNN, S_t ≡ 1
    IND_PLUS_SELECTION = "ind_plus_selection"  # Primera subcapa independiente
    RNN_RELU = "rnn_relu"                      # Solo la subcapa corta
    INDRNN = "indrnn"                          # Solo la subcapa larga

    def __str__(self) -> str:
        return self.value

    @property
    def has_short(self) -> bool:
        """Retorna True si la subcapa de memoria corta se ejecuta."""
        return self != VariantFlag.INDRNN

    @property
    def has_long(self) -> bool:
        """Retorna True si la subcapa de memoria larga se ejecuta."""
        return self != VariantFlag.RNN_RELU

    @property
    def has_selection(self) -> bool:
        """Retorna True si el mecanismo de selección está activo."""
        return self in [VariantFlag.DURNN, VariantFlag.IND_PLUS_SELECTION]

    @property
    def diagonal_recurrence(self) -> bool:
        """Retorna True si W_rec se guarda como matriz diagonal."""
        return self == VariantFlag.IND_PLUS_SELECTION

    @property
    def output_is_short(self) -> bool:
        """La salida de la capa es h̃_t (solo en rnn_relu)."""
        return self == VariantFlag.RNN_RELU

    @property
    def trained_params(self) -> List[str]:
        """Parámetros que reciben gradiente en esta variante."""
        short = ['w_in', 'w_rec', 'b_short']
        selection = ['w_ss', 'w_ls', 'b_s', 'b_thre']
        long = ['w_s', 'u', 'b_long']
        if self == VariantFlag.RNN_RELU:
            return short
        if self == VariantFlag.INDRNN:
            return ['w_in', 'u', 'b_long']
        if self == VariantFlag.NO_SELECTION:
            return short + long
        return short + selection + long

    @classmethod
    def from_string(cls, value: str) -> 'VariantFlag':
        """
        Crea un VariantFlag desde string.

        Args:
            value: Nombre como "durnn", "no-selection", "IndRNN", etc.

        Raises:
            InputError: Si la variante no es válida
        """
        if not value:
            raise InputError("El nombre de la variante no puede estar vacío")

        normalized = value.strip().lower().replace('-', '_').replace('+', '_plus_')
        aliases = {
            'rnn_relu_plus_indrnn': 'no_selection',
            'indrnn_plus_selection': 'ind_plus_selection',
            'ind_selection': 'ind_plus_selection',
            'rnn': 'rnn_relu',
        }
        normalized = aliases.get(normalized, normalized)
        try:
            return cls(normalized)
        except ValueError:
            valid_values = [variant.value for variant in cls]
            raise InputError(
                f"Variante '{value}' no válida. "
                f"Valores válidos: {', '.join(valid_values)}"
            )

    @classmethod
    def parse_list(cls, values: str) -> List['VariantFlag']:
        """Parsea una lista separada por comas ("durnn,rnn_relu")."""
        return [cls.from_string(item) for item in values.split(',') if item.strip()]
