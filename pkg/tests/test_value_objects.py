import numpy as np
import pytest

from src.domain.exceptions import InputError
from src.domain.value_objects.constraint_spec import ConstraintSpec
from src.domain.value_objects.pixel_permutation import PixelPermutation
from src.domain.value_objects.task_kind import LrMode, TaskKind
from src.domain.value_objects.variant import VariantFlag


class TestVariantFlag:
    @pytest.mark.parametrize("text, expected", [
        ("durnn", VariantFlag.DURNN),
        ("No-Selection", VariantFlag.NO_SELECTION),
        ("rnn_relu+indrnn", VariantFlag.NO_SELECTION),
        ("IndRNN+selection", VariantFlag.IND_PLUS_SELECTION),
        ("IndRNN", VariantFlag.INDRNN),
        ("rnn", VariantFlag.RNN_RELU),
    ])
    def test_from_string(self, text, expected):
        assert VariantFlag.from_string(text) == expected

    @pytest.mark.parametrize("text", ["", "lstm"])
    def test_invalid(self, text):
        with pytest.raises(InputError):
            VariantFlag.from_string(text)

    def test_parse_list(self):
        assert VariantFlag.parse_list("durnn, rnn_relu,") == [VariantFlag.DURNN, VariantFlag.RNN_RELU]

    def test_sublayer_flags(self):
        assert not VariantFlag.INDRNN.has_short
        assert not VariantFlag.RNN_RELU.has_long
        assert VariantFlag.RNN_RELU.output_is_short
        assert VariantFlag.IND_PLUS_SELECTION.diagonal_recurrence
        assert not VariantFlag.NO_SELECTION.has_selection

    def test_trained_params(self):
        assert VariantFlag.INDRNN.trained_params == ['w_in', 'u', 'b_long']
        assert 'b_thre' in VariantFlag.DURNN.trained_params
        assert 'w_ss' not in VariantFlag.NO_SELECTION.trained_params


class TestTaskKind:
    def test_dimensions(self):
        assert TaskKind.ADDING.input_features == 2
        assert TaskKind.PMNIST.input_features == 1
        assert TaskKind.MNIST.output_size == 10
        assert not TaskKind.ADDING.is_classification

    def test_invalid(self):
        with pytest.raises(InputError):
            TaskKind.from_string("cifar")
        with pytest.raises(InputError):
            LrMode.from_string("cosine")


class TestConstraintSpec:
    def test_derived_bounds(self):
        spec = ConstraintSpec.for_layer(100, epsilon=0.5, gamma=2.0)
        assert spec.u_high == pytest.approx(2.0 ** 0.01)
        assert spec.u_low == pytest.approx(0.5 ** 0.01)
        assert spec.delta == pytest.approx(0.5 ** 0.01)
        assert spec.u_high == pytest.approx(1.00696, abs=1e-5)

    def test_lower_bound_eased_below_top_layer(self):
        assert ConstraintSpec.for_layer(100, last_layer=False).u_low == 0.0
        assert ConstraintSpec.for_layer(100, last_layer=False, ease_lower=False).u_low > 0.0

    def test_overrides(self):
        spec = ConstraintSpec.for_layer(100, u_high=1.005, delta=0.8)
        assert spec.u_high == 1.005
        assert spec.delta == 0.8
        assert spec.u_low == pytest.approx(0.5 ** 0.01)

    def test_low_u_high_frees_lower_bound(self):
        spec = ConstraintSpec.for_layer(100, u_high=0.9)
        assert spec.u_high == 0.9
        assert spec.u_low == 0.0
        assert spec.init_u_interval == (0.9, 0.9)

    def test_explicit_lower_bound_still_checked(self):
        with pytest.raises(InputError):
            ConstraintSpec.for_layer(100, u_low=0.95, u_high=0.9)

    def test_init_interval_inside_bounds(self):
        low, high = ConstraintSpec.for_layer(1000).init_u_interval
        spec = ConstraintSpec.for_layer(1000)
        assert spec.u_low <= low <= high <= spec.u_high

    @pytest.mark.parametrize("kwargs", [
        {'epsilon': 1.5}, {'gamma': 0.5}, {'delta': 1.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InputError):
            ConstraintSpec.for_layer(10, **kwargs)

    def test_invalid_length(self):
        with pytest.raises(InputError):
            ConstraintSpec.for_layer(0)


class TestPixelPermutation:
    def test_seeded_reproducible(self):
        first = PixelPermutation.from_seed(7)
        assert first.digest() == PixelPermutation.from_seed(7).digest()
        assert first.digest() != PixelPermutation.from_seed(8).digest()
        assert first.size == 784

    def test_inverse(self):
        perm = PixelPermutation.from_seed(3, size=10)
        np.testing.assert_array_equal(perm.perm[perm.inverse().perm], np.arange(10))

    @pytest.mark.parametrize("values", [[0, 0, 1], [1, 2, 3], [0.0, 1.0]])
    def test_rejects_non_permutations(self, values):
        with pytest.raises(InputError):
            PixelPermutation(perm=np.array(values))

    def test_identity(self):
        np.testing.assert_array_equal(PixelPermutation.identity(5).perm, np.arange(5))
        assert PixelPermutation.identity().size == 784
