from pathlib import Path

import pandas as pd
import pytest

from src.application.use_cases.run_ablation import ABLATION_COLUMNS, create_run_ablation_use_case
from src.config.experiment import LayerConfig
from src.domain.value_objects.variant import VariantFlag


def test_variants_share_batches_and_report_curves(adding_config, tmp_path):
    out = tmp_path / "ablation.csv"
    variants = [VariantFlag.DURNN, VariantFlag.RNN_RELU, VariantFlag.INDRNN]
    result = create_run_ablation_use_case().execute(adding_config, variants, out=out)
    assert result['success'], result['message']
    table = pd.read_csv(out)
    assert list(table.columns) == ABLATION_COLUMNS
    assert table["variant"].unique().tolist() == [variant.value for variant in variants]
    assert table.groupby("variant")["iter"].apply(list).tolist() == [[0, 2, 4, 6]] * 3
    # Mismo conjunto de evaluación y cabezal nulo: la pérdida inicial coincide
    assert table[table["iter"] == 0]["loss"].nunique() == 1
    assert set(result['data']['metrics']) == {variant.value for variant in variants}


def test_checkpoints_are_written_per_variant(adding_config, tmp_path):
    variants = [VariantFlag.DURNN, VariantFlag.NO_SELECTION]
    assert create_run_ablation_use_case().execute(adding_config, variants)['success']
    base = Path(adding_config.checkpoint_path)
    for variant in variants:
        assert base.with_name(f"{base.stem}_{variant.value}{base.suffix}").exists()


def test_variant_override_applies_to_every_layer(adding_config):
    config = adding_config.with_overrides(layers=[LayerConfig(3), LayerConfig(2)])
    assert config.with_variant(VariantFlag.INDRNN).variants == [VariantFlag.INDRNN] * 2


@pytest.mark.parametrize("variants", [[], [VariantFlag.DURNN, VariantFlag.DURNN]])
def test_invalid_variant_lists(adding_config, variants):
    result = create_run_ablation_use_case().execute(adding_config, variants)
    assert not result['success']
    assert result['data']['failure'] == 'usage'


def test_invalid_config_stops_early(adding_config):
    result = create_run_ablation_use_case().execute(adding_config.with_overrides(eval_size=0),
                                                    [VariantFlag.DURNN])
    assert result['data']['failure'] == 'usage'


@pytest.mark.slow
def test_long_sequence_ablation(adding_config):
    config = adding_config.with_overrides(
        seq_len=1000, layers=[LayerConfig(128)], batch_size=50, max_iters=40000,
        eval_interval=1000, eval_size=1000, lr_initial=2e-4, lr_every=20000,
        checkpoint_path=None, log_path=None,
    )
    result = create_run_ablation_use_case().execute(config, [VariantFlag.DURNN, VariantFlag.RNN_RELU])
    table = result['data']['table']
    durnn = table[table["variant"] == "durnn"]["loss"]
    plain = table[table["variant"] == "rnn_relu"]["loss"]
    assert durnn.min() < 5e-2
    assert plain.between(0.15, 0.19).all()
