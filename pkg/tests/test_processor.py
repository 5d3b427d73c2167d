import numpy as np
import pytest

from knar.errors import ShapeMismatch
from knar.processor import (
    ProcessorConfig,
    encode_probes,
    homogeneity_check,
    init_params,
    mp_step,
)

WIDTHS = {"node": 3, "edge": 2, "graph": 4}


def _params(d=8, seed=0, widths=WIDTHS, **switches):
    cfg = ProcessorConfig(hidden_dim=d, **switches)
    return cfg, init_params(cfg, widths, seed)


def _inputs(rng, V=5):
    return rng.standard_normal((V, 3)), rng.standard_normal((V, V, 2)), rng.standard_normal(4)


def test_init_deterministic():
    _, a = _params(seed=3, use_bias=True, use_gating=True, use_layer_norm=True)
    _, b = _params(seed=3, use_bias=True, use_gating=True, use_layer_norm=True)
    for x, y in [(a.message, b.message), (a.update, b.update), (a.gate, b.gate)]:
        np.testing.assert_array_equal(x, y)
    for x, y in zip(a.node_encoders, b.node_encoders):
        np.testing.assert_array_equal(x, y)


def test_init_shapes_and_bounds():
    cfg, p = _params(d=4)
    assert p.node_encoders[0].shape == (3, 4)
    assert p.edge_encoders[0].shape == (2, 4)
    assert p.message.shape == (16, 4) and p.update.shape == (8, 4)
    assert np.abs(p.message).max() <= 0.5


def test_no_bias_arrays_without_switch():
    _, p = _params()
    assert p.encoder_bias == {} and p.message_bias is None and p.update_bias is None
    assert p.gate is None and p.norm_scale is None


def test_multiple_probes_are_summed(rng):
    cfg = ProcessorConfig(hidden_dim=4)
    p = init_params(cfg, {"node": (1, 2), "edge": 1, "graph": 1}, 0)
    a, b = rng.standard_normal((3, 1)), rng.standard_normal((3, 2))
    E, g = np.zeros((3, 3, 1)), np.zeros(1)
    X, _, _ = encode_probes(p, [a, b], E, g)
    np.testing.assert_allclose(X, a @ p.node_encoders[0] + b @ p.node_encoders[1])


def test_encode_zero_inputs_give_zero():
    _, p = _params()
    X, E, g = encode_probes(p, np.zeros((4, 3)), np.zeros((4, 4, 2)), np.zeros(4))
    assert not X.any() and not E.any() and not g.any()


def test_encode_is_linear(rng):
    _, p = _params()
    n, e, gr = _inputs(rng)
    base = encode_probes(p, n, e, gr)
    scaled = encode_probes(p, 3.5 * n, 3.5 * e, 3.5 * gr)
    for x, y in zip(base, scaled):
        np.testing.assert_allclose(y, 3.5 * x, rtol=1e-14)
    mixed = encode_probes(p, n + 2 * n, e + 2 * e, gr + 2 * gr)
    for x, y in zip(base, mixed):
        np.testing.assert_allclose(y, 3 * x, rtol=1e-13)


def test_single_node_single_probe():
    cfg = ProcessorConfig(hidden_dim=4)
    p = init_params(cfg, {"node": 1, "edge": 1, "graph": 1}, 0)
    X, _, _ = encode_probes(p, np.array([[2.0]]), np.zeros((1, 1, 1)), np.zeros(1))
    np.testing.assert_allclose(X[0], 2.0 * p.node_encoders[0][0])


def test_encode_shape_mismatch():
    _, p = _params()
    with pytest.raises(ShapeMismatch):
        encode_probes(p, np.zeros((4, 2)), np.zeros((4, 4, 2)), np.zeros(4))
    with pytest.raises(ShapeMismatch):
        encode_probes(p, np.zeros((4, 3)), np.zeros((3, 3, 2)), np.zeros(4))


def test_mp_step_zero_fixed_point():
    cfg, p = _params()
    out = mp_step(p, cfg, np.zeros((4, 8)), np.zeros((4, 4, 8)), np.zeros(8))
    assert out.shape == (4, 8) and not out.any()


def test_mp_step_shape_mismatch():
    cfg, p = _params()
    with pytest.raises(ShapeMismatch):
        mp_step(p, cfg, np.zeros((4, 8)), np.zeros((4, 3, 8)), np.zeros(8))


def test_mp_step_matches_loop_reference(rng):
    cfg, p = _params(d=6, aggregation="max")
    X, E, g = rng.standard_normal((3, 6)), rng.standard_normal((3, 3, 6)), rng.standard_normal(6)
    out = mp_step(p, cfg, X, E, g)
    for i in range(3):
        msgs = [np.maximum(np.concatenate([X[i], X[j], E[i, j], g]) @ p.message, 0) for j in range(3)]
        m = np.max(msgs, axis=0)
        ref = np.maximum(np.concatenate([X[i], m]) @ p.update, 0)
        np.testing.assert_allclose(out[i], ref, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("aggregation", ["max", "sum"])
def test_homogeneous_scaling(rng, aggregation):
    cfg, p = _params(d=16, aggregation=aggregation)
    X, E, g = rng.standard_normal((5, 16)), rng.standard_normal((5, 5, 16)), rng.standard_normal(16)
    base = mp_step(p, cfg, X, E, g)
    for a in (0.5, 2.0, 10.0):
        np.testing.assert_allclose(mp_step(p, cfg, a * X, a * E, a * g), a * base, rtol=1e-6)


def test_bias_breaks_scaling(rng):
    cfg, p = _params(d=16, use_bias=True)
    X, E, g = rng.standard_normal((5, 16)), rng.standard_normal((5, 5, 16)), rng.standard_normal(16)
    ref = 10 * mp_step(p, cfg, X, E, g)
    dev = np.linalg.norm(mp_step(p, cfg, 10 * X, 10 * E, 10 * g) - ref) / np.linalg.norm(ref)
    assert dev > 1e-3


def test_homogeneity_check_identity_scale():
    cfg, p = _params(d=8, use_bias=True)
    assert homogeneity_check(p, cfg, trial_count=5, alphas=(1.0,)) == 0.0


@pytest.mark.parametrize("switch", ["use_bias", "use_layer_norm", "use_gating"])
def test_homogeneity_check_negative_controls(switch):
    cfg, p = _params(d=32, **{switch: True})
    assert homogeneity_check(p, cfg, trial_count=10, alphas=(0.5, 2.0, 10.0)) > 1e-3


def test_homogeneity_check_passes_bias_free():
    cfg, p = _params(d=32)
    assert homogeneity_check(p, cfg, trial_count=20, alphas=(0.5, 2.0, 10.0)) < 1e-6


def test_homogeneity_check_rejects_nonpositive_alpha():
    cfg, p = _params()
    with pytest.raises(ValueError):
        homogeneity_check(p, cfg, alphas=(0.0,))


def test_config_validation():
    with pytest.raises(ValueError):
        ProcessorConfig(hidden_dim=0)
    with pytest.raises(ValueError):
        ProcessorConfig(aggregation="mean")
