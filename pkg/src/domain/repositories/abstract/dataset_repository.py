# src/domain/repositories/abstract/dataset_repository.py

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Union

from src.domain.entities.task_batch import MnistDataset


class DatasetRepository(ABC):
    """Interfaz abstracta para repositorios de conjuntos de datos MNIST."""

    @abstractmethod
    def load_mnist(self, images_path: Union[str, Path], labels_path: Union[str, Path]) -> MnistDataset:
        """
        Carga imágenes y etiquetas.

        Args:
            images_path: Fichero de imágenes.
            labels_path: Fichero de etiquetas.

        Returns:
            MnistDataset con secuencias aplanadas y escaladas a [0, 1].

        Raises:
            IngestionError: Si los ficheros son inválidos.
        """
        pass

    @abstractmethod
    def load_split(self, split: str) -> MnistDataset:
        """
        Carga una partición estándar ("train" o "test") del directorio de datos.

        Args:
            split: Nombre de la partición.

        Returns:
            MnistDataset de la partición.
        """
        pass
