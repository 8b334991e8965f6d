"""Receiver network, bit-metric loss, and LLR grid extraction."""

import math

import numpy as np
import pytest

from simorx.errors import ConfigError
from simorx.phy.grid import GridConfig, extract_data_res
from simorx.receiver import (
    BmdGridObjective,
    ModelSpec,
    ReceiverModel,
    bmd_loss,
    bmd_loss_grad,
    expit,
    extract_llr_bits,
    forward_llrs,
    preprocess,
    reassemble_complex,
    scatter_llr_bit_grad,
)

# ---------------------------------------------------------------------------
# preprocessing


def test_preprocess_interleaves_real_and_imag_per_antenna():
    rx = (np.arange(24) + 1j * (100 + np.arange(24))).reshape(1, 2, 3, 4)
    planes = preprocess(rx)
    assert planes.shape == (1, 4, 3, 4)
    np.testing.assert_array_equal(planes[:, 0], rx.real[:, 0])
    np.testing.assert_array_equal(planes[:, 1], rx.imag[:, 0])
    np.testing.assert_array_equal(planes[:, 2], rx.real[:, 1])
    np.testing.assert_array_equal(planes[:, 3], rx.imag[:, 1])


@pytest.mark.parametrize(
    "cdtype,rdtype", [(np.complex64, np.float32), (np.complex128, np.float64)]
)
def test_preprocess_round_trip_is_bit_exact(cdtype, rdtype, seeded):
    rng = seeded(3)
    rx = (rng.standard_normal((2, 2, 5, 6)) + 1j * rng.standard_normal((2, 2, 5, 6))).astype(cdtype)
    planes = preprocess(rx)
    assert planes.dtype == rdtype
    back = reassemble_complex(planes)
    np.testing.assert_array_equal(back, rx)


def test_preprocess_rejects_non_complex_or_wrong_rank():
    with pytest.raises(ConfigError):
        preprocess(np.zeros((1, 2, 3, 4)))
    with pytest.raises(ConfigError):
        preprocess(np.zeros((2, 3, 4), dtype=np.complex128))
    with pytest.raises(ConfigError):
        reassemble_complex(np.zeros((1, 3, 3, 4)))


# ---------------------------------------------------------------------------
# model plumbing


def small_spec(**kw):
    base = dict(in_channels=4, width_in=6, width_res=8, num_blocks=2, out_bits=4)
    base.update(kw)
    return ModelSpec(**base)


def test_forward_shapes_and_dtype(seeded):
    model = ReceiverModel(small_spec(), seed=7)
    x = seeded(0).standard_normal((3, 4, 10, 12)).astype(np.float32)
    y = forward_llrs(model, x)
    assert y.shape == (3, 10, 12, 4)
    assert y.dtype == np.float32


def test_forward_rejects_channel_mismatch():
    model = ReceiverModel(small_spec())
    with pytest.raises(ConfigError):
        model.forward(np.zeros((2, 3, 10, 12), dtype=np.float32))
    with pytest.raises(ConfigError):
        model.forward(np.zeros((4, 10, 12), dtype=np.float32))


def test_spec_rejects_non_positive_fields():
    for field in ("in_channels", "width_in", "width_res", "num_blocks", "out_bits"):
        with pytest.raises(ConfigError):
            small_spec(**{field: 0})


def test_spec_edits_return_new_specs():
    spec = small_spec()
    assert spec.with_extra_block().num_blocks == spec.num_blocks + 1
    assert spec.with_out_bits(6).out_bits == 6
    assert spec.num_blocks == 2  # originals untouched


def test_adding_a_block_leaves_other_layer_inits_alone():
    a = ReceiverModel(small_spec(), seed=11)
    b = ReceiverModel(small_spec().with_extra_block(), seed=11)
    np.testing.assert_array_equal(a.input_conv.wmat, b.input_conv.wmat)
    np.testing.assert_array_equal(a.blocks[0].conv1.wmat, b.blocks[0].conv1.wmat)
    np.testing.assert_array_equal(a.blocks[1].conv2.wmat, b.blocks[1].conv2.wmat)
    np.testing.assert_array_equal(a.output_conv.wmat, b.output_conv.wmat)


def test_different_seeds_give_different_weights():
    a = ReceiverModel(small_spec(), seed=0)
    b = ReceiverModel(small_spec(), seed=1)
    assert not np.array_equal(a.input_conv.wmat, b.input_conv.wmat)


def test_stage_forward_plan_reproduces_forward_exactly(seeded):
    model = ReceiverModel(small_spec(), seed=2)
    x = seeded(4).standard_normal((2, 4, 8, 9)).astype(np.float32)
    want = model.forward(x)
    y, stages = model.stage_forward_plan(x)
    for _, fn in stages:
        y = fn(y)
    np.testing.assert_array_equal(y, want)


# ---------------------------------------------------------------------------
# bit-metric decoding loss


def test_zero_logits_give_exactly_one_bit_of_cross_entropy():
    L, bce = bmd_loss(np.zeros(17), np.random.default_rng(0).integers(0, 2, 17))
    assert bce == 1.0
    assert L == 0.0


def test_single_bit_hand_values():
    # logit ln 3 means p(bit=1) = 3/4: matching bit costs log2(4/3),
    # mismatching bit costs log2 4 = 2 bits.
    _, bce = bmd_loss(np.array([math.log(3.0)]), np.array([1.0]))
    assert bce == pytest.approx(math.log2(4.0 / 3.0), abs=1e-15)
    L, bce = bmd_loss(np.array([math.log(3.0)]), np.array([0.0]))
    assert bce == pytest.approx(2.0, abs=1e-15)
    assert L == pytest.approx(-1.0, abs=1e-15)


def test_confident_correct_logits_approach_one_bit_per_bit(seeded):
    bits = seeded(1).integers(0, 2, 64).astype(float)
    llrs = 50.0 * (2 * bits - 1)
    L, bce = bmd_loss(llrs, bits)
    assert bce < 1e-12
    assert L == pytest.approx(1.0, abs=1e-12)


def test_loss_validates_shapes_and_finiteness():
    with pytest.raises(ConfigError, match="must match"):
        bmd_loss(np.zeros(3), np.zeros(4))
    for bad in (np.inf, -np.inf, np.nan):
        with pytest.raises(ConfigError, match="non-finite"):
            bmd_loss(np.array([0.0, bad]), np.zeros(2))


def test_loss_gradient_matches_central_differences(seeded):
    rng = seeded(6)
    llrs = rng.standard_normal(40)
    bits = rng.integers(0, 2, 40).astype(float)
    grad = bmd_loss_grad(llrs, bits)
    eps = 1e-6
    for i in (0, 7, 19, 39):
        up, dn = llrs.copy(), llrs.copy()
        up[i] += eps
        dn[i] -= eps
        fd = (bmd_loss(up, bits)[1] - bmd_loss(dn, bits)[1]) / (2 * eps)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-12)


def test_expit_is_stable_and_correct():
    with np.errstate(over="raise", under="ignore"):
        out = expit(np.array([-1000.0, -1.0, 0.0, 1.0, 1000.0]))
    np.testing.assert_allclose(
        out[1:4], 1.0 / (1.0 + np.exp(-np.array([-1.0, 0.0, 1.0]))), rtol=1e-15
    )
    assert out[0] == 0.0 and out[4] == 1.0


# ---------------------------------------------------------------------------
# grid extraction and the masked objective


def coord_coded_grid(cfg: GridConfig, k: int) -> np.ndarray:
    """LLR grid whose value at (t, f, bit) encodes its own coordinates."""
    t = np.arange(cfg.num_symbols)[:, None, None]
    f = np.arange(cfg.num_subcarriers)[None, :, None]
    b = np.arange(k)[None, None, :]
    return (t * 10000.0 + f * 10.0 + b)[None]


def test_extraction_is_symbol_major_subcarrier_minor_bits_innermost(tiny_grid):
    k = 2
    flat = extract_llr_bits(coord_coded_grid(tiny_grid, k), tiny_grid)
    want = [
        t * 10000.0 + f * 10.0 + b
        for t in tiny_grid.data_symbols
        for f in tiny_grid.active_subcarriers
        for b in range(k)
    ]
    np.testing.assert_array_equal(flat[0], want)


def test_extraction_agrees_with_grid_module_route(tiny_grid, seeded):
    grid = seeded(8).standard_normal((3, tiny_grid.num_symbols, tiny_grid.num_subcarriers, 4))
    a = extract_llr_bits(grid, tiny_grid)
    b = extract_data_res(grid, tiny_grid).reshape(3, -1)
    np.testing.assert_array_equal(a, b)


def test_extraction_rejects_wrong_grid_shape(tiny_grid):
    with pytest.raises(ConfigError):
        extract_llr_bits(np.zeros((1, 9, 9, 2)), tiny_grid)


def test_scatter_is_the_exact_adjoint_of_extraction(tiny_grid, seeded):
    rng = seeded(9)
    k = 2
    grid = rng.standard_normal((2, tiny_grid.num_symbols, tiny_grid.num_subcarriers, k))
    vec = rng.standard_normal((2, tiny_grid.num_data_res * k))
    lhs = float(np.vdot(extract_llr_bits(grid, tiny_grid), vec))
    rhs = float(np.vdot(grid, scatter_llr_bit_grad(vec, tiny_grid, k)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_scatter_touches_only_data_resource_elements(tiny_grid, seeded):
    k = 2
    vec = seeded(10).standard_normal((1, tiny_grid.num_data_res * k))
    grid = scatter_llr_bit_grad(vec, tiny_grid, k)
    for t in tiny_grid.pilot_symbols:
        assert np.all(grid[:, t] == 0.0)
    assert np.all(grid[:, :, : tiny_grid.guard_lo] == 0.0)
    assert np.all(grid[:, :, tiny_grid.num_subcarriers - tiny_grid.guard_hi :] == 0.0)
    assert np.count_nonzero(grid) == np.count_nonzero(vec)


def test_objective_ignores_pilot_and_guard_positions(tiny_grid, seeded):
    rng = seeded(11)
    k = 2
    bits = rng.integers(0, 2, (1, tiny_grid.num_data_res * k)).astype(float)
    obj = BmdGridObjective(bits, tiny_grid)
    grid = rng.standard_normal((1, tiny_grid.num_symbols, tiny_grid.num_subcarriers, k))
    base = obj.value(grid)
    poked = grid.copy()
    poked[0, tiny_grid.pilot_symbols[0], :, :] += 100.0  # pilot symbol row
    poked[0, :, 0, :] += 100.0  # guard column
    assert obj.value(poked) == base
    g = obj.grad(grid)
    assert np.all(g[0, tiny_grid.pilot_symbols[0]] == 0.0)
    assert np.all(g[0, :, 0] == 0.0)


def test_objective_gradient_matches_central_differences(tiny_grid, seeded):
    rng = seeded(12)
    k = 2
    bits = rng.integers(0, 2, (1, tiny_grid.num_data_res * k)).astype(float)
    obj = BmdGridObjective(bits, tiny_grid)
    grid = rng.standard_normal((1, tiny_grid.num_symbols, tiny_grid.num_subcarriers, k))
    g = obj.grad(grid)
    eps = 1e-6
    t0 = int(tiny_grid.data_symbol_index[5])
    f0 = int(tiny_grid.data_subcarrier_index[5])
    for bit in range(k):
        up, dn = grid.copy(), grid.copy()
        up[0, t0, f0, bit] += eps
        dn[0, t0, f0, bit] -= eps
        fd = (obj.value(up) - obj.value(dn)) / (2 * eps)
        assert g[0, t0, f0, bit] == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_objective_rejects_ragged_bit_counts(tiny_grid):
    with pytest.raises(ConfigError, match="whole number"):
        BmdGridObjective(np.zeros((1, tiny_grid.num_data_res * 2 + 1)), tiny_grid)
