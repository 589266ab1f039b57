import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.domain.cell.forward import (
    forward_final, forward_sequence, forward_step, min_max_normalize, relu, selection_weights
)
from src.domain.cell.readout import readout
from src.domain.entities.layer_params import LayerParams, LayerParamsFactory, ReadoutParams
from src.domain.exceptions import InputError, NumericalError
from src.domain.oracle.finite_diff import random_layer
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.variant import VariantFlag


def hand_layer(**overrides) -> LayerParams:
    """Capa N=2, M=1 del ejemplo calculado a mano."""
    values = dict(
        w_in=np.array([[1.0], [0.0]]), w_rec=np.zeros((2, 2)), b_short=np.zeros(2),
        w_ss=np.eye(2), w_ls=np.zeros((2, 2)), b_s=np.zeros(2), b_thre=0.5,
        w_s=np.eye(2), u=np.ones(2), b_long=np.zeros(2),
    )
    values.update(overrides)
    return LayerParams(**values)


def random_stack(rng, variants, inputs=2, neurons=(3, 4), length=5):
    layers, fan_in = [], inputs
    for index, (variant, width) in enumerate(zip(variants, neurons)):
        spec = ConstraintSpec.for_layer(length, last_layer=index == len(variants) - 1)
        layers.append(random_layer(fan_in, width, spec, variant, rng))
        fan_in = width
    return layers


class TestMinMax:
    def test_affine_values(self):
        normalized, low, high = min_max_normalize([1.0, 2.0, 3.0])
        np.testing.assert_allclose(normalized, [0.0, 0.5, 1.0])
        assert (low, high) == (1.0, 3.0)

    def test_degenerate(self):
        np.testing.assert_array_equal(min_max_normalize([2.0, 2.0, 2.0])[0], np.zeros(3))

    def test_empty(self):
        with pytest.raises(InputError):
            min_max_normalize([])

    @given(arrays(np.float64, 16, elements=st.integers(-1000, 1000).map(float), unique=True))
    def test_range_with_unique_extremes(self, v):
        normalized, _, _ = min_max_normalize(v)
        assert np.all((normalized >= 0.0) & (normalized <= 1.0))
        assert np.sum(normalized == 0.0) == 1
        assert np.sum(normalized == 1.0) == 1

    def test_batched_rows_are_independent(self, rng):
        batch = rng.normal(size=(3, 5))
        normalized, low, high = min_max_normalize(batch)
        for row in range(3):
            np.testing.assert_allclose(normalized[row], min_max_normalize(batch[row])[0])
        np.testing.assert_allclose(low, batch.min(axis=1))
        np.testing.assert_allclose(high, batch.max(axis=1))


class TestSelection:
    def test_zero_chain(self):
        selection = selection_weights(hand_layer(), np.zeros(2), np.zeros(2))
        np.testing.assert_array_equal(selection.s, np.zeros((1, 2)))

    def test_threshold(self):
        layer = hand_layer(w_ss=np.eye(3), w_ls=np.zeros((3, 3)), b_s=np.zeros(3),
                           w_in=np.ones((3, 1)), w_rec=np.zeros((3, 3)), b_short=np.zeros(3),
                           w_s=np.eye(3), u=np.ones(3), b_long=np.zeros(3))
        selection = selection_weights(layer, np.array([1.0, 0.2, 0.0]), np.zeros(3))
        np.testing.assert_allclose(selection.s, [[0.5, 0.0, 0.0]])

    def test_matches_direct_evaluation(self, rng):
        layer = random_stack(rng, [VariantFlag.DURNN])[0]
        h_short, h_long = rng.uniform(size=(2, 3)), rng.uniform(size=(2, 3))
        selection = selection_weights(layer, h_short, h_long)
        for row in range(2):
            pre = layer.w_ss @ h_short[row] + layer.w_ls @ h_long[row] + layer.b_s
            expected = relu((pre - pre.min()) / (pre.max() - pre.min()) - layer.b_thre)
            np.testing.assert_allclose(selection.s[row], expected, rtol=1e-12)


class TestForwardStep:
    def test_hand_example(self):
        step = forward_step(hand_layer(), [1.0], np.zeros(2), np.zeros(2), VariantFlag.DURNN)
        np.testing.assert_allclose(step.h_short, [[1.0, 0.0]])
        np.testing.assert_allclose(step.mm, [[1.0, 0.0]])
        np.testing.assert_allclose(step.s, [[0.5, 0.0]])
        np.testing.assert_allclose(step.h_long, [[0.5, 0.0]])

    def test_zero_chain(self, rng):
        layer = LayerParamsFactory.initialize(2, 3, ConstraintSpec.for_layer(10),
                                              VariantFlag.DURNN, rng)
        step = forward_step(layer, np.zeros(2), np.zeros(3), np.zeros(3), VariantFlag.DURNN)
        for value in (step.h_short, step.s, step.h_long):
            np.testing.assert_array_equal(value, np.zeros((1, 3)))

    def test_no_selection_equals_unit_selection(self, rng):
        layer = random_stack(rng, [VariantFlag.DURNN])[0]
        x, h_short, h_long = rng.normal(size=(2, 2)), rng.uniform(size=(2, 3)), rng.uniform(size=(2, 3))
        step = forward_step(layer, x, h_short, h_long, VariantFlag.NO_SELECTION)
        full = forward_step(layer, x, h_short, h_long, VariantFlag.DURNN)
        expected = relu(full.h_short @ layer.w_s.T + layer.u * h_long + layer.b_long)
        np.testing.assert_allclose(step.h_long, expected, rtol=1e-12)
        np.testing.assert_array_equal(step.s, np.ones((2, 3)))

    def test_indrnn_uses_input_directly(self, rng):
        layer = random_stack(rng, [VariantFlag.INDRNN])[0]
        x, h_long = rng.normal(size=(1, 2)), rng.uniform(size=(1, 3))
        step = forward_step(layer, x, np.zeros((1, 3)), h_long, VariantFlag.INDRNN)
        np.testing.assert_allclose(step.h_long, relu(x @ layer.w_in.T + layer.u * h_long + layer.b_long))
        np.testing.assert_array_equal(step.h_short, np.zeros((1, 3)))

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            forward_step(hand_layer(), [1.0, 2.0], np.zeros(2), np.zeros(2), VariantFlag.DURNN)

    def test_non_finite_names_step(self):
        layer = hand_layer(w_in=np.array([[1e308], [0.0]]), w_rec=np.array([[10.0, 0.0], [0.0, 0.0]]))
        with pytest.raises(NumericalError) as info:
            forward_sequence([layer], np.ones((3, 1, 1)), [VariantFlag.DURNN])
        assert info.value.step is not None and info.value.layer == 0


class TestForwardSequence:
    def test_single_step_equals_forward_step(self, rng):
        layer = random_stack(rng, [VariantFlag.DURNN])[0]
        x = rng.normal(size=(1, 2, 2))
        caches, _ = forward_sequence([layer], x, [VariantFlag.DURNN])
        step = forward_step(layer, x[0], np.zeros((2, 3)), np.zeros((2, 3)), VariantFlag.DURNN)
        np.testing.assert_array_equal(caches[0].h_long[0], step.h_long)

    def test_stacking_feeds_outputs(self, rng):
        variants = [VariantFlag.DURNN, VariantFlag.RNN_RELU]
        layers = random_stack(rng, variants)
        caches, top = forward_sequence(layers, rng.normal(size=(5, 2, 2)), variants)
        np.testing.assert_array_equal(caches[1].x, caches[0].h_long)
        np.testing.assert_array_equal(top, caches[1].h_short)

    def test_three_layer_replay(self, rng):
        variants = [VariantFlag.DURNN, VariantFlag.IND_PLUS_SELECTION, VariantFlag.NO_SELECTION]
        layers = random_stack(rng, variants, neurons=(3, 2, 4))
        x = rng.normal(size=(5, 2, 2))
        caches, _ = forward_sequence(layers, x, variants)
        current = x
        for layer, variant, cache in zip(layers, variants, caches):
            h_short = h_long = np.zeros((2, layer.neurons))
            for t in range(5):
                step = forward_step(layer, current[t], h_short, h_long, variant)
                np.testing.assert_array_equal(cache.h_long[t], step.h_long)
                h_short, h_long = step.h_short, step.h_long
            current = cache.outputs

    def test_final_matches_full_pass(self, rng):
        variants = [VariantFlag.DURNN, VariantFlag.INDRNN]
        layers = random_stack(rng, variants)
        x = rng.normal(size=(6, 3, 2))
        _, top = forward_sequence(layers, x, variants)
        np.testing.assert_array_equal(forward_final(layers, x, variants), top[-1])

    def test_repeated_pass_is_bit_identical(self, rng):
        variants = [VariantFlag.DURNN, VariantFlag.NO_SELECTION]
        layers = random_stack(rng, variants)
        x = rng.normal(size=(5, 2, 2))
        first, _ = forward_sequence(layers, x, variants)
        second, _ = forward_sequence(layers, x, variants)
        for one, other in zip(first, second):
            for name in ('pre_short', 'h_short', 'sel_pre', 'mm', 's', 'i', 'pre_long', 'h_long'):
                assert getattr(one, name).tobytes() == getattr(other, name).tobytes(), name

    def test_full_threshold_closes_long_path(self, rng):
        tensors = random_stack(rng, [VariantFlag.DURNN])[0].to_tensors()
        tensors.update(b_thre=np.float64(1.0), b_long=np.zeros(3))
        layer = LayerParams.from_tensors(tensors)
        caches, _ = forward_sequence([layer], rng.normal(size=(6, 2, 2)), [VariantFlag.DURNN])
        np.testing.assert_array_equal(caches[0].s, np.zeros((6, 2, 3)))
        np.testing.assert_array_equal(caches[0].h_long, np.zeros((6, 2, 3)))

    @given(st.sampled_from(list(VariantFlag)), st.integers(0, 2 ** 32 - 1))
    def test_states_non_negative_and_selection_in_unit_interval(self, variant, seed):
        generator = np.random.default_rng(seed)
        layers = random_stack(generator, [variant], neurons=(4,))
        caches, _ = forward_sequence(layers, generator.normal(size=(6, 3, 2)), [variant])
        cache = caches[0]
        assert np.all(cache.h_short >= 0.0)
        assert np.all(cache.h_long >= 0.0)
        assert np.all((cache.s >= 0.0) & (cache.s <= 1.0))

    def test_width_mismatch(self, rng):
        layers = random_stack(rng, [VariantFlag.DURNN])
        with pytest.raises(InputError):
            forward_sequence(layers, np.zeros((3, 1, 5)), [VariantFlag.DURNN])
        with pytest.raises(InputError):
            forward_sequence(layers, np.zeros((3, 1, 2)), [])


class TestReadout:
    def test_exact_fit(self):
        head = ReadoutParams(w_out=np.zeros((1, 3)), b_out=np.array([1.5]))
        result = readout(head, np.ones((2, 3)), False, np.array([1.5, 1.5]))
        assert result.loss == 0.0
        np.testing.assert_array_equal(result.grad_h, np.zeros((2, 3)))

    def test_uniform_logits(self):
        head = ReadoutParams(w_out=np.zeros((10, 4)), b_out=np.zeros(10))
        result = readout(head, np.ones((3, 4)), True, np.array([0, 4, 9]))
        assert result.loss == pytest.approx(math.log(10))
        assert result.error_rate is not None

    def test_mse_gradients(self, rng):
        head = ReadoutParams(w_out=rng.normal(size=(1, 3)), b_out=rng.normal(size=1))
        h, y = rng.normal(size=(4, 3)), rng.normal(size=4)
        result = readout(head, h, False, y)
        residual = h @ head.w_out[0] + head.b_out[0] - y
        np.testing.assert_allclose(result.grad_b_out, [2.0 * residual.mean()])
        np.testing.assert_allclose(result.grad_h, (2.0 / 4) * residual[:, None] * head.w_out)

    def test_cross_entropy_gradient_numerically(self, rng):
        head = ReadoutParams(w_out=rng.normal(size=(10, 3)), b_out=rng.normal(size=10))
        h, labels = rng.normal(size=(2, 3)), np.array([3, 7])
        result = readout(head, h, True, labels)
        step = 1e-6
        numeric = np.zeros(10)
        for k in range(10):
            bias = head.b_out.copy()
            bias[k] += step
            plus = readout(ReadoutParams(head.w_out, bias), h, True, labels).loss
            bias[k] -= 2 * step
            minus = readout(ReadoutParams(head.w_out, bias), h, True, labels).loss
            numeric[k] = (plus - minus) / (2 * step)
        np.testing.assert_allclose(result.grad_b_out, numeric, atol=1e-8)

    def test_label_out_of_range(self):
        head = ReadoutParams(w_out=np.zeros((10, 2)), b_out=np.zeros(10))
        with pytest.raises(InputError):
            readout(head, np.ones((1, 2)), True, np.array([10]))
