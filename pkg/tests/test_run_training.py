import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from src.application.use_cases.run_training import (
    RunTrainingUseCase, build_task_source, create_run_training_use_case
)
from src.config.experiment import LayerConfig
from src.domain.entities.checkpoint import Checkpoint
from src.domain.entities.network import Network, NetworkFactory
from src.domain.exceptions import IngestionError, InputError, NumericalError
from src.domain.linalg.dense import spawn_rngs
from src.domain.tasks.adding import adding_baseline_mse, gen_adding
from src.domain.value_objects.task_kind import LrMode, TaskKind
from src.domain.value_objects.variant import VariantFlag
from src.infrastructure.persistence.checkpoint.binary_checkpoint_repository import (
    BinaryCheckpointRepository
)
from src.infrastructure.persistence.idx.idx_mnist_repository import IdxMnistRepository
from src.infrastructure.persistence.logs.csv_logs import read_metric_log


def same_state(first: Checkpoint, second: Checkpoint) -> bool:
    """Igualdad bit a bit de todo salvo la configuración (las rutas difieren)."""
    return (first.iteration == second.iteration
            and first.rng_state == second.rng_state
            and first.optimizer == second.optimizer
            and first.schedule == second.schedule
            and list(first.tensors) == list(second.tensors)
            and all(first.tensors[name].tobytes() == second.tensors[name].tobytes()
                    for name in first.tensors))


def relocated(config, tmp_path, name):
    return config.with_overrides(checkpoint_path=str(tmp_path / f"{name}.ckpt"),
                                 log_path=str(tmp_path / f"{name}.csv"))


class TestNetwork:
    def test_flat_round_trip(self, adding_config, rng):
        config = adding_config.with_overrides(layers=[LayerConfig(4), LayerConfig(3)])
        network = NetworkFactory.initialize(2, config.neurons, config.variants,
                                            config.constraint_specs(), 1, 1.0, rng)
        rebuilt = network.with_flat(network.flat_params())
        for key, value in network.flat_params().items():
            np.testing.assert_array_equal(rebuilt.flat_params()[key], value)

    def test_gradient_keys_match_params(self, adding_config, rng):
        network = NetworkFactory.initialize(2, [4], adding_config.variants,
                                            adding_config.constraint_specs(), 1, 1.0, rng)
        loss, grads = network.loss_and_grads(gen_adding(6, 3, rng), classification=False)
        assert set(grads) == set(network.flat_params())
        assert loss >= 0.0

    def test_untrained_predicts_head_bias(self, adding_config, rng):
        network = NetworkFactory.initialize(2, [4], adding_config.variants,
                                            adding_config.constraint_specs(), 1, 1.0, rng)
        batch = gen_adding(6, 8, rng)
        result = network.evaluate([batch], classification=False)
        assert result.loss == pytest.approx(adding_baseline_mse(batch), rel=1e-12)
        assert result.error_rate is None and result.count == 8

    def test_empty_evaluation(self, adding_config, rng):
        network = NetworkFactory.initialize(2, [4], adding_config.variants,
                                            adding_config.constraint_specs(), 1, 1.0, rng)
        with pytest.raises(InputError):
            network.evaluate([], classification=False)

    def test_mismatched_lists(self, adding_config, rng):
        network = NetworkFactory.initialize(2, [4], adding_config.variants,
                                            adding_config.constraint_specs(), 1, 1.0, rng)
        with pytest.raises(InputError):
            Network(layers=network.layers, head=network.head, variants=[], specs=[])


class TestTraining:
    def test_log_and_checkpoint(self, adding_config):
        result = create_run_training_use_case().execute(adding_config)
        assert result['success'], result['message']
        frame = read_metric_log(adding_config.log_path)
        assert frame["iter"].tolist() == [0, 2, 4, 6]
        checkpoint = BinaryCheckpointRepository().load(adding_config.checkpoint_path)
        assert checkpoint.iteration == 6
        assert checkpoint.config_hash == adding_config.config_hash()
        assert result['data']['metrics']['iteration'] == 6

    def test_initial_loss_is_baseline(self, adding_config):
        result = create_run_training_use_case().execute(adding_config)
        eval_rng = spawn_rngs(adding_config.seed, 3)[2]
        eval_set = gen_adding(adding_config.seq_len, adding_config.eval_size, eval_rng)
        first = result['data']['log']["loss"].iloc[0]
        assert first == pytest.approx(adding_baseline_mse(eval_set), rel=1e-12)

    def test_deterministic(self, adding_config, tmp_path):
        repository = BinaryCheckpointRepository()
        first = relocated(adding_config, tmp_path, "a")
        second = relocated(adding_config, tmp_path, "b")
        assert create_run_training_use_case().execute(first)['success']
        assert create_run_training_use_case().execute(second)['success']
        assert same_state(repository.load(first.checkpoint_path),
                          repository.load(second.checkpoint_path))
        np.testing.assert_array_equal(read_metric_log(first.log_path)["loss"],
                                      read_metric_log(second.log_path)["loss"])

    def test_resume_matches_uninterrupted_run(self, adding_config, tmp_path):
        repository = BinaryCheckpointRepository()
        straight = relocated(adding_config, tmp_path, "straight")
        split = relocated(adding_config, tmp_path, "split")
        assert create_run_training_use_case().execute(straight)['success']

        assert create_run_training_use_case().execute(split.with_overrides(max_iters=3))['success']
        resumed = create_run_training_use_case().execute(split, resume=split.checkpoint_path)
        assert resumed['success'], resumed['message']

        assert same_state(repository.load(straight.checkpoint_path),
                          repository.load(split.checkpoint_path))
        expected = read_metric_log(straight.log_path)
        actual = read_metric_log(split.log_path)
        assert actual["iter"].tolist() == expected["iter"].tolist()
        for column in ("loss", "lr"):
            np.testing.assert_array_equal(actual[column], expected[column])

    def test_checkpoint_keeps_spectral_basis(self, adding_config):
        config = adding_config.with_overrides(
            layers=[LayerConfig(4), LayerConfig(3, variant=VariantFlag.INDRNN)]
        )
        assert create_run_training_use_case().execute(config)['success']
        checkpoint = BinaryCheckpointRepository().load(config.checkpoint_path)
        basis = checkpoint.tensors_with_prefix("spectral.")
        assert list(basis) == ["layer0.basis"]
        np.testing.assert_allclose(basis["layer0.basis"].T @ basis["layer0.basis"], np.eye(4),
                                   atol=1e-10)
        network = NetworkFactory.from_tensors(checkpoint.tensors, config.variants,
                                              config.constraint_specs())
        assert network.check_constraints() == []

    def test_sigma_measured_every_iteration(self, adding_config, tmp_path):
        repository = BinaryCheckpointRepository()
        every = relocated(adding_config, tmp_path, "every")
        assert create_run_training_use_case(sigma_check_every=1).execute(every)['success']
        assert create_run_training_use_case().execute(adding_config)['success']
        assert same_state(repository.load(every.checkpoint_path),
                          repository.load(adding_config.checkpoint_path))

    def test_resume_with_other_config_is_usage_error(self, adding_config):
        assert create_run_training_use_case().execute(adding_config)['success']
        other = adding_config.with_overrides(seed=adding_config.seed + 1)
        result = create_run_training_use_case().execute(other, resume=adding_config.checkpoint_path)
        assert not result['success']
        assert result['data']['failure'] == 'usage'

    def test_resume_past_max_iters(self, adding_config):
        assert create_run_training_use_case().execute(adding_config)['success']
        shorter = adding_config.with_overrides(max_iters=4)
        result = create_run_training_use_case().execute(shorter, resume=adding_config.checkpoint_path)
        assert result['data']['failure'] == 'usage'

    def test_missing_resume_file(self, adding_config, tmp_path):
        result = create_run_training_use_case().execute(adding_config, resume=tmp_path / "x.ckpt")
        assert result['data']['failure'] == 'usage'

    def test_constraints_hold_after_every_update(self, adding_config):
        seen = []

        def check(iteration, network):
            assert network.check_constraints() == []
            seen.append(iteration)

        big_steps = adding_config.with_overrides(lr_initial=0.5, checkpoint_path=None)
        assert create_run_training_use_case().execute(big_steps, on_iteration=check)['success']
        assert seen == list(range(1, 7))

    def test_numerical_failure_aborts_and_keeps_checkpoint(self, adding_config):
        def explode(iteration, network):
            if iteration == 4:
                raise NumericalError("estado no finito", step=2, layer=0)

        result = create_run_training_use_case().execute(adding_config, on_iteration=explode)
        assert not result['success']
        assert result['data']['failure'] == 'aborted'
        assert result['data']['iteration'] == 4
        assert BinaryCheckpointRepository().load(result['data']['checkpoint']).iteration == 3

    def test_invalid_config_is_usage_error(self, adding_config):
        result = create_run_training_use_case().execute(adding_config.with_overrides(batch_size=0))
        assert result['data']['failure'] == 'usage'

    def test_threaded_gradients_match(self, adding_config):
        config = adding_config.with_overrides(workers=2)
        rngs = spawn_rngs(config.seed, 3)
        source = build_task_source(config, None, rngs[2])
        network = NetworkFactory.initialize(2, config.neurons, config.variants,
                                            config.constraint_specs(), 1, 1.0, rngs[0])
        batch = gen_adding(config.seq_len, 5, rngs[1])
        use_case = RunTrainingUseCase()
        single_loss, single = use_case._batch_gradients(network, batch, adding_config, None)
        with ThreadPoolExecutor(max_workers=2) as executor:
            split_loss, split = use_case._batch_gradients(network, batch, config, executor)
        assert split_loss == pytest.approx(single_loss, rel=1e-12)
        for key, value in single.items():
            np.testing.assert_allclose(split[key], value, rtol=1e-10, atol=1e-14)
        assert source.batch_size == config.batch_size

    def test_threaded_run_completes(self, adding_config):
        result = create_run_training_use_case().execute(adding_config.with_overrides(workers=2))
        assert result['success']

    def test_mnist_run(self, mnist_config, mnist_repository):
        result = create_run_training_use_case(dataset_repository=mnist_repository).execute(mnist_config)
        assert result['success'], result['message']
        frame = read_metric_log(mnist_config.log_path)
        assert frame["iter"].tolist() == [0, 1, 2]
        assert frame["loss"].iloc[0] == pytest.approx(math.log(10))
        metrics = result['data']['metrics']
        assert 0.0 <= metrics['error_rate'] <= 1.0
        assert 0.0 <= metrics['test_error_rate'] <= 1.0

    def test_pmnist_run(self, mnist_config, mnist_repository):
        config = mnist_config.with_overrides(task=TaskKind.PMNIST, permutation_seed=3)
        result = create_run_training_use_case(dataset_repository=mnist_repository).execute(config)
        assert result['success'], result['message']


@pytest.mark.slow
class TestAcceptance:
    def test_constraint_invariants_over_long_run(self, adding_config):
        config = adding_config.with_overrides(
            seq_len=30, layers=[LayerConfig(16)], batch_size=10, max_iters=2000,
            eval_interval=500, lr_initial=2e-3, checkpoint_path=None, log_path=None,
        )
        violations = []

        def check(iteration, network):
            violations.extend(network.check_constraints())

        assert create_run_training_use_case().execute(config, on_iteration=check)['success']
        assert violations == []

    def test_adding_100_learns(self, adding_config):
        config = adding_config.with_overrides(
            seq_len=100, layers=[LayerConfig(128)], batch_size=50, max_iters=20000,
            eval_interval=1000, eval_size=1000, lr_initial=2e-4, lr_every=20000,
            checkpoint_path=None, log_path=None,
        )
        result = create_run_training_use_case().execute(config)
        frame = result['data']['log']
        assert 0.15 <= frame["loss"].iloc[0] <= 0.19
        assert frame["loss"].min() < 1e-2

    def test_sequential_mnist_subset(self, mnist_config):
        repository = IdxMnistRepository()
        try:
            repository.load_split("test")
        except IngestionError:
            pytest.skip("Ficheros IDX de MNIST no disponibles")
        config = mnist_config.with_overrides(
            layers=[LayerConfig(128)], batch_size=32, max_iters=15000, eval_interval=1000,
            eval_size=1000, lr_initial=2e-4, lr_mode=LrMode.FIXED, mnist_subset=10000,
            mnist_validation=1000,
        )
        result = create_run_training_use_case(dataset_repository=repository).execute(config)
        assert result['success'], result['message']
        frame = result['data']['log']
        early = frame[frame["iter"] <= 3000]["loss"]
        assert early.min() < 0.5 * frame["loss"].iloc[0]
        assert result['data']['metrics']['test_error_rate'] < 0.15
