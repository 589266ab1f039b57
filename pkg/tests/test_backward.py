import numpy as np
import pytest

from src.config.constants import FD_REL_TOL, ORACLE_REL_TOL
from src.domain.cell.forward import forward_sequence
from src.domain.entities.layer_grads import StateGrads
from src.domain.exceptions import InputError, OracleEnvironmentError
from src.domain.grad.backward import (
    accumulate_param_grads, backward_sequence, backward_state_long, backward_state_short,
    final_step_grads, grads_to_dict
)
from src.domain.grad.probe import grad_norm_probe
from src.domain.oracle.appendix import appendix_grads, appendix_grads_stacked
from src.domain.oracle.finite_diff import (
    finite_diff_frozen, kink_margin, random_layer, sample_frozen_instance
)
from src.domain.oracle.report import relative_error
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.variant import VariantFlag


def build_stack(rng, variants, widths, inputs=2, length=5, batch=2):
    layers, fan_in = [], inputs
    for depth, (variant, width) in enumerate(zip(variants, widths)):
        spec = ConstraintSpec.for_layer(length, last_layer=depth == len(variants) - 1)
        layers.append(random_layer(fan_in, width, spec, variant, rng))
        fan_in = width
    x = rng.uniform(-1.0, 1.0, size=(length, batch, inputs))
    caches, _ = forward_sequence(layers, x, variants)
    top = rng.uniform(-1.0, 1.0, size=(length, batch, widths[-1]))
    return layers, caches, top


class TestStateRecursions:
    def test_long_without_future(self):
        local = np.array([0.3, -0.2])
        result = backward_state_long(np.zeros(2), local, np.array([0.9, 1.0]), np.ones(2))
        np.testing.assert_array_equal(result, local)

    def test_long_carries_through_active_units(self):
        result = backward_state_long(np.array([1.0, 1.0]), np.zeros(2),
                                     np.array([0.5, 2.0]), np.array([1.0, 0.0]))
        np.testing.assert_array_equal(result, [0.5, 0.0])

    def test_short_from_long_only(self):
        result = backward_state_short(
            g_long_t=np.array([1.0, 2.0]), s_t=np.array([0.5, 0.0]), w_s=np.eye(2),
            relu_mask_long_t=np.ones(2), g_short_next=np.zeros(2), w_rec=np.eye(2),
            relu_mask_short_next=np.ones(2),
        )
        np.testing.assert_array_equal(result, [0.5, 0.0])

    def test_short_recurrent_path(self):
        w_rec = np.array([[0.0, 1.0], [2.0, 0.0]])
        result = backward_state_short(
            g_long_t=np.zeros(2), s_t=np.ones(2), w_s=np.eye(2), relu_mask_long_t=np.ones(2),
            g_short_next=np.array([1.0, 1.0]), w_rec=w_rec, relu_mask_short_next=np.ones(2),
        )
        np.testing.assert_array_equal(result, w_rec.T @ np.ones(2))

    def test_zero_state_grads_give_zero_param_grads(self, rng):
        layers, caches, _ = build_stack(rng, [VariantFlag.DURNN], [3])
        grads = accumulate_param_grads(caches[0], StateGrads.zeros(5, 2, 3), layers[0])
        assert grads.max_abs() == 0.0
        np.testing.assert_array_equal(grads.g_x, 0.0)

    def test_final_step_grads(self):
        local = final_step_grads(np.array([[1.0, 2.0]]), 3)
        assert local.shape == (3, 1, 2)
        np.testing.assert_array_equal(local[:2], 0.0)
        np.testing.assert_array_equal(local[2], [[1.0, 2.0]])


class TestAgainstDirectSums:
    @pytest.mark.parametrize("variant", list(VariantFlag))
    def test_single_layer(self, rng, variant):
        for _ in range(5):
            layers, caches, top = build_stack(rng, [variant], [3])
            iterative = grads_to_dict(backward_sequence(layers, caches, top))
            direct = grads_to_dict(appendix_grads_stacked(layers, caches, top))
            for key, value in direct.items():
                assert relative_error(value, iterative[key])[0] <= ORACLE_REL_TOL, key

    @pytest.mark.parametrize("variant", list(VariantFlag))
    def test_stacked_under_durnn(self, rng, variant):
        variants = [VariantFlag.DURNN, variant]
        layers, caches, top = build_stack(rng, variants, [4, 3], length=4)
        iterative = backward_sequence(layers, caches, top)
        direct = appendix_grads_stacked(layers, caches, top)
        for got, want in zip(iterative, direct):
            for name, value in want.params.items():
                assert relative_error(value, got.params[name])[0] <= ORACLE_REL_TOL, name
            assert relative_error(want.g_x, got.g_x)[0] <= ORACLE_REL_TOL

    def test_single_step(self, rng):
        layers, caches, top = build_stack(rng, [VariantFlag.DURNN], [3], length=1)
        iterative = backward_sequence(layers, caches, top)[0]
        direct = appendix_grads(layers[0], caches[0], top)
        np.testing.assert_allclose(iterative.params['w_ss'], direct.params['w_ss'], rtol=1e-9, atol=1e-15)

    def test_direct_sums_reject_large_sizes(self, rng):
        layers, caches, top = build_stack(rng, [VariantFlag.DURNN], [9], length=3)
        with pytest.raises(InputError):
            appendix_grads(layers[0], caches[0], top)


class TestGradientStructure:
    def test_frozen_b_s(self, rng):
        layers, caches, top = build_stack(rng, [VariantFlag.DURNN], [3])
        frozen = backward_sequence(layers, caches, top, train_b_s=False)[0]
        trained = backward_sequence(layers, caches, top)[0]
        np.testing.assert_array_equal(frozen.params['b_s'], np.zeros(3))
        np.testing.assert_array_equal(frozen.params['w_ss'], trained.params['w_ss'])

    def test_diagonal_recurrence_masks_w_rec(self, rng):
        layers, caches, top = build_stack(rng, [VariantFlag.IND_PLUS_SELECTION], [4])
        g_rec = backward_sequence(layers, caches, top)[0].params['w_rec']
        np.testing.assert_array_equal(g_rec, np.diag(np.diag(g_rec)))

    @pytest.mark.parametrize("variant", list(VariantFlag))
    def test_untrained_parameters_have_zero_gradient(self, rng, variant):
        layers, caches, top = build_stack(rng, [variant], [3])
        grads = backward_sequence(layers, caches, top)[0]
        for name, value in grads.params.items():
            if name not in variant.trained_params:
                assert not np.any(value), name

    def test_zero_top_gradient(self, rng):
        layers, caches, _ = build_stack(rng, [VariantFlag.DURNN], [3])
        grads = backward_sequence(layers, caches, np.zeros((5, 2, 3)))[0]
        assert grads.max_abs() == 0.0

    @pytest.mark.parametrize("variant", list(VariantFlag))
    def test_gradients_scale_with_top_gradient(self, rng, variant):
        layers, caches, top = build_stack(rng, [VariantFlag.DURNN, variant], [4, 3])
        base = backward_sequence(layers, caches, top)
        scaled = backward_sequence(layers, caches, 3.0 * top)
        for one, three in zip(base, scaled):
            for name, value in one.params.items():
                np.testing.assert_allclose(three.params[name], 3.0 * value, rtol=1e-12, atol=1e-13)
            np.testing.assert_allclose(three.g_x, 3.0 * one.g_x, rtol=1e-12, atol=1e-13)

    def test_mismatched_cache(self, rng):
        layers, caches, top = build_stack(rng, [VariantFlag.DURNN], [3])
        with pytest.raises(InputError):
            backward_sequence(layers, caches, top[:, :, :2])
        with pytest.raises(InputError):
            backward_sequence(layers, [], top)


class TestFiniteDifferences:
    @pytest.mark.parametrize("variant", list(VariantFlag))
    def test_frozen_loss_agrees(self, rng, variant):
        instance = sample_frozen_instance(rng, [variant], [3], inputs=2, length=4, batch=2,
                                          with_head=True)
        analytic = instance.analytic()
        keys = [f"layer0.{name}" for name in variant.trained_params] + ['readout.w_out', 'readout.b_out']
        for key in keys:
            numeric = finite_diff_frozen(instance, key)
            assert relative_error(numeric, analytic[key])[0] <= FD_REL_TOL, key

    def test_two_layers(self, rng):
        instance = sample_frozen_instance(rng, [VariantFlag.DURNN, VariantFlag.DURNN], [3, 2],
                                          inputs=2, length=3, batch=1)
        analytic = instance.analytic()
        for key in ('layer0.w_in', 'layer0.w_ss', 'layer1.u', 'layer1.b_thre'):
            assert relative_error(finite_diff_frozen(instance, key), analytic[key])[0] <= FD_REL_TOL

    def test_base_pass_clears_kinks(self, rng):
        instance = sample_frozen_instance(rng, [VariantFlag.DURNN], [3], 2, 4, 2)
        assert kink_margin(instance.caches, [instance.layers[0].b_thre]) > 1e-3

    def test_smaller_steps_agree(self, rng):
        instance = sample_frozen_instance(rng, [VariantFlag.DURNN], [3], 2, 4, 2, with_head=True)
        exact = instance.analytic()['layer0.w_in']
        medium = finite_diff_frozen(instance, 'layer0.w_in', step=1e-4)
        fine = finite_diff_frozen(instance, 'layer0.w_in', step=1e-5)
        assert relative_error(medium, fine)[0] <= FD_REL_TOL
        assert relative_error(fine, exact)[0] <= FD_REL_TOL

    @pytest.mark.parametrize("step", [1e-8, 1e-2])
    def test_step_range(self, rng, step):
        instance = sample_frozen_instance(rng, [VariantFlag.INDRNN], [2], 1, 3, 1)
        with pytest.raises(InputError):
            finite_diff_frozen(instance, 'layer0.u', step=step)

    @pytest.mark.parametrize("key", ["layer3.u", "layer0.bogus", "readout.w_out", "u"])
    def test_bad_keys(self, rng, key):
        instance = sample_frozen_instance(rng, [VariantFlag.INDRNN], [2], 1, 3, 1)
        with pytest.raises(InputError):
            finite_diff_frozen(instance, key)

    def test_unreachable_margin(self, rng):
        with pytest.raises(OracleEnvironmentError):
            sample_frozen_instance(rng, [VariantFlag.DURNN], [3], 2, 4, 2,
                                   margin=10.0, max_resamples=3)


class TestProbe:
    def test_long_product_is_diagonal_product(self, rng):
        layers, caches, _ = build_stack(rng, [VariantFlag.DURNN], [3], length=6, batch=1)
        probe = grad_norm_probe(layers[0], caches[0], span=4)
        masks = (caches[0].pre_long[:, 0] > 0.0).astype(float)
        expected = np.prod(layers[0].u * masks[2:6], axis=0)
        np.testing.assert_allclose(probe.long_products[3], expected)
        assert probe.span == 4

    def test_span_range(self, rng):
        layers, caches, _ = build_stack(rng, [VariantFlag.DURNN], [3], length=3, batch=1)
        with pytest.raises(InputError):
            grad_norm_probe(layers[0], caches[0], span=4)
        with pytest.raises(InputError):
            grad_norm_probe(layers[0], caches[0], span=1, row=2)
