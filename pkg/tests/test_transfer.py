"""Checkpoint format, model surgery, freeze policies, and adaptation."""

import numpy as np
import pytest

from simorx.checkpoint import (
    STRICT_KEYS,
    Checkpoint,
    checkpoint_bytes,
    checkpoint_from_model,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from simorx.errors import CheckpointError, ConfigError
from simorx.receiver import ModelSpec, ReceiverModel
from simorx.training import TrainConfig, run_training
from simorx.transfer import (
    REFERENCE_PARAM_TOTALS,
    AdaptConfig,
    add_resnet_block,
    adapt,
    count_params,
    reference_comparison,
    run_benchmark,
    set_trainable,
)


def tiny_cfg(grid, **kw):
    base = dict(
        modulation="qpsk",
        profile="flat",
        grid=grid,
        n_rx=1,
        width_in=4,
        width_res=6,
        num_blocks=4,
        batch=2,
        iterations=20,
        lr=1e-3,
        seed=3,
    )
    base.update(kw)
    return TrainConfig(**base)


def model_weights(model):
    return {
        f"{qual}.{pname}": arr.copy()
        for qual, _, pname, arr, _ in model.named_param_items()
    }


# ---------------------------------------------------------------------------
# checkpoint round trips


def test_file_round_trip_is_bit_exact(tmp_path):
    model = ReceiverModel(ModelSpec(2, 4, 6, 2, 2), seed=5)
    model.trainable["block1"] = False
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path, fingerprint={"modulation": "qpsk", "seed": 5})
    ck = read_checkpoint(path)

    loaded = load_checkpoint(ck)
    assert loaded.reinitialized == []
    before = model_weights(model)
    after = model_weights(loaded.model)
    assert before.keys() == after.keys()
    for key in before:
        np.testing.assert_array_equal(before[key], after[key])
    assert loaded.model.trainable == model.trainable

    # Serialising the parsed checkpoint reproduces the file byte for byte.
    assert checkpoint_bytes(ck) == path.read_bytes()


def test_fingerprint_id_is_stable_and_order_free():
    a = Checkpoint({"x": "1", "y": "2"}, [])
    b = Checkpoint({"y": "2", "x": "1"}, [])
    assert a.fingerprint_id == b.fingerprint_id
    assert len(a.fingerprint_id) == 12
    assert a.fingerprint_id != Checkpoint({"x": "1", "y": "3"}, []).fingerprint_id


def valid_blob(tmp_path):
    model = ReceiverModel(ModelSpec(2, 4, 6, 2, 2), seed=5)
    path = tmp_path / "ok.ckpt"
    save_checkpoint(model, path)
    return path, path.read_bytes()


def corrupt(tmp_path, blob, old, new):
    assert len(old) == len(new), "corruption must preserve offsets"
    assert blob.count(old) == 1
    path = tmp_path / "bad.ckpt"
    path.write_bytes(blob.replace(old, new))
    return path


def test_rejects_bad_magic(tmp_path):
    path, blob = valid_blob(tmp_path)
    bad = corrupt(tmp_path, blob, b"NRXCKPT1", b"NRXCKPT9")
    with pytest.raises(CheckpointError, match="bad magic"):
        read_checkpoint(bad)


def test_rejects_truncated_file(tmp_path):
    path, blob = valid_blob(tmp_path)
    path.write_bytes(blob[:-4])
    with pytest.raises(CheckpointError, match="truncated"):
        read_checkpoint(path)
    path.write_bytes(blob + b"\x00")
    with pytest.raises(CheckpointError, match="truncated or oversized"):
        read_checkpoint(path)


def test_rejects_unsupported_format(tmp_path):
    _, blob = valid_blob(tmp_path)
    bad = corrupt(tmp_path, blob, b"format=1\n", b"format=2\n")
    with pytest.raises(CheckpointError, match="unsupported format"):
        read_checkpoint(bad)


def test_rejects_unknown_layer_kind(tmp_path):
    _, blob = valid_blob(tmp_path)
    bad = corrupt(tmp_path, blob, b"layer.0.kind=conv2d\n", b"layer.0.kind=conv3d\n")
    with pytest.raises(CheckpointError, match="unknown layer kind"):
        read_checkpoint(bad)


def test_rejects_offset_gap(tmp_path):
    _, blob = valid_blob(tmp_path)
    bad = corrupt(tmp_path, blob, b"layer.0.offset=0\n", b"layer.0.offset=4\n")
    with pytest.raises(CheckpointError, match="tile exactly"):
        read_checkpoint(bad)


def test_rejects_size_shape_disagreement(tmp_path):
    _, blob = valid_blob(tmp_path)
    # input conv is 4x2x3x3 + 4 bias floats = 304 bytes
    bad = corrupt(tmp_path, blob, b"layer.0.nbytes=304\n", b"layer.0.nbytes=300\n")
    with pytest.raises(CheckpointError, match="disagrees with its shape"):
        read_checkpoint(bad)


def test_rejects_non_header_garbage(tmp_path):
    _, blob = valid_blob(tmp_path)
    bad = corrupt(tmp_path, blob, b"format=1\n", b"format+1\n")
    with pytest.raises(CheckpointError, match="not key=value"):
        read_checkpoint(bad)


# ---------------------------------------------------------------------------
# load policies


def test_strict_load_requires_matching_spec_keys():
    src = checkpoint_from_model(ReceiverModel(ModelSpec(2, 4, 6, 2, 2), seed=5))
    with pytest.raises(CheckpointError, match="fingerprint mismatch on out_bits"):
        load_checkpoint(src, policy="strict", target_spec=ModelSpec(2, 4, 6, 2, 4))
    ok = load_checkpoint(src, policy="strict", target_spec=ModelSpec(2, 4, 6, 2, 2))
    assert ok.reinitialized == []


def test_permissive_load_transplants_what_fits():
    source_model = ReceiverModel(ModelSpec(2, 4, 6, 2, 2), seed=5)
    src = checkpoint_from_model(source_model)
    target_spec = ModelSpec(2, 4, 6, 2, 4)  # wider head: 4 bits per RE
    out = load_checkpoint(src, policy="permissive", target_spec=target_spec, init_seed=9)

    assert [n for n, _ in out.reinitialized] == ["output_conv"]
    assert "shape mismatch" in out.delta[0]
    np.testing.assert_array_equal(out.model.input_conv.wmat, source_model.input_conv.wmat)
    np.testing.assert_array_equal(
        out.model.blocks[1].conv2.wmat, source_model.blocks[1].conv2.wmat
    )
    # The head falls back to the fresh init for the target seed.
    fresh = ReceiverModel(target_spec, seed=9)
    np.testing.assert_array_equal(out.model.output_conv.wmat, fresh.output_conv.wmat)


def test_strict_load_refuses_partial_application():
    src = checkpoint_from_model(ReceiverModel(ModelSpec(2, 4, 6, 2, 2), seed=5))
    bigger = ModelSpec(2, 4, 6, 3, 2)
    with pytest.raises(CheckpointError, match="fingerprint mismatch on num_blocks"):
        load_checkpoint(src, policy="strict", target_spec=bigger)
    out = load_checkpoint(src, policy="permissive", target_spec=bigger)
    assert {n for n, _ in out.reinitialized} == {
        f"block3.{sub}" for sub in ("norm1", "conv1", "norm2", "conv2")
    }


def test_unknown_policy_rejected():
    src = checkpoint_from_model(ReceiverModel(ModelSpec(2, 4, 6, 2, 2)))
    with pytest.raises(CheckpointError, match="unknown load policy"):
        load_checkpoint(src, policy="lenient", target_spec=ModelSpec(2, 4, 6, 2, 2))


def test_spec_comes_from_fingerprint_when_no_target_given():
    model = ReceiverModel(ModelSpec(2, 4, 6, 2, 2), seed=5)
    ck = checkpoint_from_model(model, {"seed": 5})
    out = load_checkpoint(ck)
    assert out.model.spec == model.spec
    assert out.model.seed == 5


# ---------------------------------------------------------------------------
# surgery and freeze policies


def test_surgery_adds_one_block_to_a_four_block_model():
    model = ReceiverModel(ModelSpec(2, 4, 6, 4, 2), seed=1)
    before = model_weights(model)
    add_resnet_block(model)
    assert model.spec.num_blocks == 5
    assert "block5" in model.trainable
    after = model_weights(model)
    for key in before:  # existing tensors untouched by surgery
        np.testing.assert_array_equal(before[key], after[key])
    with pytest.raises(ConfigError, match="four-block receiver only"):
        add_resnet_block(model)
    with pytest.raises(ConfigError, match="four-block receiver only"):
        add_resnet_block(ReceiverModel(ModelSpec(2, 4, 6, 2, 2)))


def test_zeroed_new_block_is_a_pass_through(seeded):
    model = ReceiverModel(ModelSpec(2, 4, 6, 4, 2), seed=1)
    x = seeded(2).standard_normal((2, 2, 8, 9)).astype(np.float32)
    want = model.forward(x)
    add_resnet_block(model)
    model.blocks[4].conv2.wmat[:] = 0.0
    model.blocks[4].conv2.bias[:] = 0.0
    np.testing.assert_array_equal(model.forward(x), want)


def test_freeze_policies_set_exact_flags():
    model = add_resnet_block(ReceiverModel(ModelSpec(2, 4, 6, 4, 2), seed=1))
    names = [n for n, _ in model.coarse_layers()]
    assert names == ["input_conv", "block1", "block2", "block3", "block4", "block5", "output_conv"]

    set_trainable(model, "freeze_first_k", k=2)
    assert [model.trainable[n] for n in names] == [False, False, True, True, True, True, True]

    set_trainable(model, "freeze_transferred")
    assert [model.trainable[n] for n in names] == [False] * 5 + [True, True]

    set_trainable(model, "all")
    assert all(model.trainable[n] for n in names)

    with pytest.raises(ConfigError, match="freeze_first_k needs"):
        set_trainable(model, "freeze_first_k", k=7)
    with pytest.raises(ConfigError, match="unknown freeze policy"):
        set_trainable(model, "thaw")


# ---------------------------------------------------------------------------
# parameter accounting


def conv_params(c_in, c_out, k=3):
    return c_out * c_in * k * k + c_out


def block_params(c_in, c_out):
    n = 2 * c_in + conv_params(c_in, c_out) + 2 * c_out + conv_params(c_out, c_out)
    if c_in != c_out:
        n += conv_params(c_in, c_out, k=1)
    return n


def test_counts_match_closed_forms():
    model = ReceiverModel(ModelSpec(2, 4, 6, 4, 2), seed=0)
    report = count_params(model)
    by_name = {l.name: l.params for l in report.layers}
    assert by_name["input_conv"] == conv_params(2, 4)
    assert by_name["block1"] == block_params(4, 6)
    assert by_name["block2"] == block_params(6, 6)
    assert by_name["output_conv"] == conv_params(6, 2)
    assert report.total == sum(by_name.values())
    assert report.total == report.trainable_total + report.frozen_total


def test_accounting_identities_across_techniques():
    spec = ModelSpec(2, 4, 6, 4, 2)
    six_total = count_params(ReceiverModel(spec)).total

    model = add_resnet_block(ReceiverModel(spec, seed=0))
    seven = count_params(model)
    assert seven.total == six_total + block_params(6, 6)

    ftp = count_params(set_trainable(model, "freeze_first_k", k=2))
    assert ftp.trainable_total == seven.total - conv_params(2, 4) - block_params(4, 6)
    assert ftp.frozen_total == conv_params(2, 4) + block_params(4, 6)

    fe = count_params(set_trainable(model, "freeze_transferred"))
    assert fe.trainable_total == block_params(6, 6) + conv_params(6, 2)

    ft = count_params(set_trainable(ReceiverModel(spec), "all"))
    assert ft.trainable_total == ft.total == six_total


def test_report_format_lists_every_layer_and_the_totals():
    model = set_trainable(add_resnet_block(ReceiverModel(ModelSpec(2, 4, 6, 4, 2))), "freeze_transferred")
    text = count_params(model).format()
    for name in ("input_conv", "block5", "output_conv", "frozen", "trainable"):
        assert name in text
    assert f"total {count_params(model).total}" in text


def test_published_reference_totals_are_frozen():
    assert REFERENCE_PARAM_TOTALS == {
        "fine_tuning_trainable": 4_858_882,
        "seven_layer_total": 6_071_554,
        "feature_extraction_trainable": 1_214_978,
        "fine_tuning_plus_trainable": 4_852_994,
    }


def test_reference_comparison_prints_ours_beside_published(tiny_grid):
    cfg = tiny_cfg(tiny_grid)
    text = reference_comparison(cfg)
    for published in ("4858882", "6071554", "1214978", "4852994"):
        assert published in text
    spec = cfg.model_spec()
    ours_ft = count_params(ReceiverModel(spec)).total
    assert str(ours_ft) in text
    assert "differ" in text or "reference counts assume" in text


# ---------------------------------------------------------------------------
# adaptation


def test_adapt_config_budget_rounding(tiny_grid):
    target = tiny_cfg(tiny_grid, iterations=2000)
    assert AdaptConfig("fine_tuning", 0.1, target).steps == 200
    assert AdaptConfig("fine_tuning", 1.0, target).steps == 2000
    assert AdaptConfig("fine_tuning", 0.0001, target).steps == 1
    with pytest.raises(ConfigError, match="unknown technique"):
        AdaptConfig("distillation", 0.1, target)
    for bad_alpha in (0.0, -0.1, 1.5):
        with pytest.raises(ConfigError, match="alpha"):
            AdaptConfig("fine_tuning", bad_alpha, target)


@pytest.fixture
def tiny_source(tiny_grid):
    cfg = tiny_cfg(tiny_grid)
    model = ReceiverModel(cfg.model_spec(), seed=cfg.seed)
    return checkpoint_from_model(model, cfg.fingerprint()), cfg


def changed(src_ck, model, coarse):
    """True if any tensor of the coarse layer differs from the checkpoint."""
    any_diff = False
    for rec in src_ck.layers:
        if rec.name.split(".")[0] != coarse:
            continue
        layer = dict(model.primitive_layers())[rec.name]
        now = [layer.weights, layer.bias] if rec.kind == "conv2d" else [layer.gamma, layer.beta]
        any_diff |= any(not np.array_equal(a, b) for a, b in zip(rec.arrays, now))
    return any_diff


def test_fine_tuning_updates_every_layer(tiny_source):
    src, cfg = tiny_source
    out = adapt(src, AdaptConfig("fine_tuning", 0.25, cfg))
    assert out.steps == 5
    assert out.model.spec.num_blocks == 4
    for name, _ in out.model.coarse_layers():
        assert changed(src, out.model, name), f"{name} never moved"
    assert out.checkpoint.fingerprint["technique"] == "fine_tuning"
    assert out.checkpoint.fingerprint["alpha"] == repr(0.25)


def new_block_trained(model):
    # The surgery block's conv biases start at exactly zero, so any training
    # step that touches it leaves them nonzero.
    return np.any(model.blocks[4].conv1.bias != 0) or np.any(model.blocks[4].conv2.bias != 0)


def test_fine_tuning_plus_freezes_the_first_two_layers_bit_exactly(tiny_source):
    src, cfg = tiny_source
    out = adapt(src, AdaptConfig("fine_tuning_plus", 0.25, cfg))
    assert out.model.spec.num_blocks == 5
    for frozen in ("input_conv", "block1"):
        assert not changed(src, out.model, frozen), f"{frozen} should be bit-identical"
    for hot in ("block2", "block3", "block4", "output_conv"):
        assert changed(src, out.model, hot), f"{hot} never moved"
    assert new_block_trained(out.model)


def test_feature_extraction_trains_only_the_new_head(tiny_source):
    src, cfg = tiny_source
    out = adapt(src, AdaptConfig("feature_extraction", 0.25, cfg))
    assert out.model.spec.num_blocks == 5
    for frozen in ("input_conv", "block1", "block2", "block3", "block4"):
        assert not changed(src, out.model, frozen)
    assert changed(src, out.model, "output_conv")
    assert new_block_trained(out.model)


def test_modulation_change_reinitialises_the_head(tiny_source, tiny_grid):
    src, cfg = tiny_source
    target = tiny_cfg(tiny_grid, modulation="16qam")
    out = adapt(src, AdaptConfig("fine_tuning", 0.25, target))
    assert any("output_conv" in line for line in out.transplant_delta)
    assert out.model.spec.out_bits == 4
    assert out.model.trainable["output_conv"]


def test_adapt_log_has_one_row_per_step(tiny_source, tmp_path):
    src, cfg = tiny_source
    out = adapt(src, AdaptConfig("feature_extraction", 0.25, cfg))
    assert len(out.log_lines) == out.steps + 1  # header + rows
    p = tmp_path / "adapt.csv"
    out.write_log(p)
    assert p.read_text().splitlines() == out.log_lines


def test_without_tl_benchmark_spends_the_alpha_budget(tiny_grid):
    cfg = tiny_cfg(tiny_grid)
    out = run_benchmark("without_tl", None, cfg, alpha=0.25)
    assert out.steps == 5
    assert len(out.log_lines) == 6
    with pytest.raises(ConfigError, match="alpha budget"):
        run_benchmark("without_tl", None, cfg)


def test_model_transfer_benchmark_runs_zero_updates(tiny_source):
    src, cfg = tiny_source
    out = run_benchmark("model_transfer", src, cfg)
    assert out.steps == 0
    assert out.log_lines == []
    for name, _ in out.model.coarse_layers():
        assert not changed(src, out.model, name)
    assert out.checkpoint.fingerprint["technique"] == "model_transfer"


def test_unknown_benchmark_rejected(tiny_source):
    src, cfg = tiny_source
    with pytest.raises(ConfigError, match="unknown benchmark"):
        run_benchmark("oracle", src, cfg)
