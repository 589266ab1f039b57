import numpy as np
import pytest

from src.domain.exceptions import InputError
from src.domain.linalg.dense import seeded_rng
from src.domain.tasks.adding import adding_baseline_mse, gen_adding
from src.domain.tasks.mnist import apply_permutation, prepare_mnist, sample_batch, split_validation
from src.domain.tasks.sources import AddingSource, MnistSource
from src.domain.value_objects.pixel_permutation import PixelPermutation
from src.domain.value_objects.task_kind import TaskKind


class TestAdding:
    def test_shapes_and_markers(self, rng):
        batch = gen_adding(50, 8, rng)
        assert batch.inputs.shape == (8, 50, 2)
        np.testing.assert_array_equal(batch.inputs[:, :, 1].sum(axis=1), np.full(8, 2.0))
        assert np.all((batch.inputs[:, :, 0] > 0.0) & (batch.inputs[:, :, 0] < 1.0))

    def test_target_is_sum_of_marked_values(self, rng):
        batch = gen_adding(20, 16, rng)
        marked = (batch.inputs[:, :, 0] * batch.inputs[:, :, 1]).sum(axis=1)
        np.testing.assert_allclose(batch.targets, marked, rtol=1e-15)
        assert np.all((batch.targets >= 0.0) & (batch.targets <= 2.0))

    def test_values_exclude_zero_even_at_lowest_draw(self):
        class FloorRng:
            """Devuelve siempre el extremo inferior del intervalo pedido."""

            def uniform(self, low=0.0, high=1.0, size=None):
                return np.full(size, low, dtype=np.float64)

        batch = gen_adding(4, 3, FloorRng())
        assert np.all(batch.inputs[:, :, 0] > 0.0)
        assert np.all(batch.targets > 0.0)

    def test_shortest_sequence_marks_both(self, rng):
        batch = gen_adding(2, 5, rng)
        np.testing.assert_array_equal(batch.inputs[:, :, 1], np.ones((5, 2)))

    def test_baseline_is_one_sixth(self):
        batch = gen_adding(10, 20000, seeded_rng(11))
        assert adding_baseline_mse(batch) == pytest.approx(1.0 / 6.0, abs=0.01)

    def test_marker_positions_are_uniform(self):
        batch = gen_adding(5, 20000, seeded_rng(12))
        frequency = batch.inputs[:, :, 1].mean(axis=0)
        np.testing.assert_allclose(frequency, np.full(5, 0.4), atol=0.02)

    def test_deterministic(self):
        first, second = gen_adding(30, 4, seeded_rng(3)), gen_adding(30, 4, seeded_rng(3))
        np.testing.assert_array_equal(first.inputs, second.inputs)
        np.testing.assert_array_equal(first.targets, second.targets)

    @pytest.mark.parametrize("length, batch", [(1, 4), (0, 4), (10, 0)])
    def test_invalid(self, rng, length, batch):
        with pytest.raises(InputError):
            gen_adding(length, batch, rng)

    def test_time_major(self, rng):
        batch = gen_adding(7, 3, rng)
        np.testing.assert_array_equal(batch.time_major()[4, 2], batch.inputs[2, 4])


class TestMnistPreparation:
    def test_permutation_moves_pixels_not_labels(self, mnist_repository):
        dataset = mnist_repository.load_split("train")
        perm = PixelPermutation.from_seed(7)
        permuted = apply_permutation(dataset, perm)
        np.testing.assert_array_equal(permuted.images[:, 0], dataset.images[:, perm.perm[0]])
        np.testing.assert_array_equal(permuted.labels, dataset.labels)
        restored = apply_permutation(permuted, perm.inverse())
        np.testing.assert_array_equal(restored.images, dataset.images)

    def test_permutation_size_mismatch(self, mnist_repository):
        with pytest.raises(InputError):
            apply_permutation(mnist_repository.load_split("train"), PixelPermutation.identity(10))

    def test_split_takes_tail(self, mnist_repository):
        dataset = mnist_repository.load_split("train")
        train, validation = split_validation(dataset, 10)
        assert (len(train), len(validation)) == (20, 10)
        np.testing.assert_array_equal(validation.images, dataset.images[20:])

    def test_split_too_large(self, mnist_repository):
        with pytest.raises(InputError):
            split_validation(mnist_repository.load_split("train"), 30)

    def test_subset_limits_validation(self, mnist_repository):
        train, validation = prepare_mnist(mnist_repository.load_split("train"), subset=12,
                                          validation=10)
        assert len(train) + len(validation) == 12
        assert len(validation) == 6

    def test_sample_batch(self, mnist_repository, rng):
        batch = sample_batch(mnist_repository.load_split("train"), 8, rng)
        assert batch.inputs.shape == (8, 784, 1)
        assert batch.targets.dtype == np.int64

    def test_class_counts(self, mnist_repository):
        assert mnist_repository.load_split("train").class_counts().tolist() == [3] * 10


class TestSources:
    def test_adding_source_eval_set_is_fixed(self):
        source = AddingSource(seq_len=8, batch_size=4, eval_size=10, eval_rng=seeded_rng(1))
        chunks = list(source.eval_batches(chunk=4))
        assert [chunk.batch for chunk in chunks] == [4, 4, 2]
        again = list(source.eval_batches(chunk=4))
        np.testing.assert_array_equal(chunks[0].inputs, again[0].inputs)
        assert source.head_bias == 1.0
        assert source.test_batches() is None

    def test_adding_source_train_batches_follow_rng(self):
        source = AddingSource(seq_len=8, batch_size=4, eval_size=10, eval_rng=seeded_rng(1))
        first = source.train_batch(seeded_rng(5))
        np.testing.assert_array_equal(first.inputs, source.train_batch(seeded_rng(5)).inputs)

    def test_mnist_source(self, mnist_repository, rng):
        train, validation = prepare_mnist(mnist_repository.load_split("train"), validation=10)
        source = MnistSource(TaskKind.MNIST, 4, train, validation,
                             mnist_repository.load_split("test"), eval_size=6)
        assert sum(chunk.batch for chunk in source.eval_batches()) == 6
        assert sum(chunk.batch for chunk in source.test_batches()) == 12
        assert source.train_batch(rng).batch == 4
        assert source.classification and source.head_bias == 0.0

    def test_mnist_source_without_held_out(self, mnist_repository):
        train = mnist_repository.load_split("train")
        with pytest.raises(InputError):
            MnistSource(TaskKind.MNIST, 4, train, train.subset(0, 0), None, eval_size=6)

    def test_invalid_batch_size(self):
        with pytest.raises(InputError):
            AddingSource(seq_len=8, batch_size=0, eval_size=10, eval_rng=seeded_rng(1))
