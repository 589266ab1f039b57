# tests/conftest.py
import os
import sys
from pathlib import Path

import hypothesis
import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.config.experiment import ExperimentConfig, LayerConfig  # noqa: E402
from src.config.settings import MNIST_SEQ_LEN  # noqa: E402
from src.domain.entities.task_batch import MnistDataset  # noqa: E402
from src.domain.linalg.dense import seeded_rng  # noqa: E402
from src.domain.repositories.abstract.dataset_repository import DatasetRepository  # noqa: E402
from src.domain.value_objects.task_kind import LrMode, TaskKind  # noqa: E402
from src.domain.value_objects.variant import VariantFlag  # noqa: E402

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def rng():
    return seeded_rng(1234)


@pytest.fixture
def adding_config(tmp_path):
    """Experimento de la suma pequeño: entrena en segundos."""
    return ExperimentConfig(
        task=TaskKind.ADDING,
        seq_len=6,
        layers=[LayerConfig(neurons=4, variant=VariantFlag.DURNN)],
        batch_size=4,
        max_iters=6,
        eval_interval=2,
        eval_size=16,
        seed=3,
        lr_initial=1e-2,
        lr_every=4,
        checkpoint_every=3,
        checkpoint_path=str(tmp_path / "run.ckpt"),
        log_path=str(tmp_path / "run.csv"),
    )


def fabricate_mnist(count: int, rng: np.random.Generator) -> MnistDataset:
    """Imágenes aleatorias en [0, 1] con etiquetas equilibradas."""
    images = np.round(rng.uniform(0.0, 1.0, size=(count, MNIST_SEQ_LEN)) * 255.0) / 255.0
    labels = np.arange(count) % 10
    return MnistDataset(images=images, labels=labels.astype(np.int64))


class InMemoryMnistRepository(DatasetRepository):
    """Repositorio de prueba con particiones fabricadas."""

    def __init__(self, train: MnistDataset, test: MnistDataset):
        self.splits = {"train": train, "test": test}

    def load_mnist(self, images_path, labels_path) -> MnistDataset:
        raise NotImplementedError

    def load_split(self, split: str) -> MnistDataset:
        return self.splits[split]


@pytest.fixture
def mnist_repository():
    rng = seeded_rng(99)
    return InMemoryMnistRepository(fabricate_mnist(30, rng), fabricate_mnist(12, rng))


@pytest.fixture
def mnist_config(tmp_path):
    return ExperimentConfig(
        task=TaskKind.MNIST,
        seq_len=MNIST_SEQ_LEN,
        layers=[LayerConfig(neurons=3)],
        batch_size=4,
        max_iters=2,
        eval_interval=1,
        eval_size=6,
        seed=5,
        lr_mode=LrMode.PLATEAU,
        lr_patience=1,
        mnist_validation=10,
        checkpoint_path=None,
        log_path=str(tmp_path / "mnist.csv"),
    )
