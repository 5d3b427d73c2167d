"""A small fully-connected message-passing processor with probe encoders.

With bias, layer normalisation and gating switched off every operation is
linear or positively homogeneous (ReLU, max, sum), so the whole step satisfies
``f(a * x) == a * f(x)`` for ``a > 0``. Each switch breaks that property and
serves as a negative control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from knar.errors import ShapeMismatch

LAYER_NORM_EPS = 1e-5


@dataclass(frozen=True)
class ProcessorConfig:
    hidden_dim: int = 128
    use_bias: bool = False
    use_layer_norm: bool = False
    use_gating: bool = False
    aggregation: str = "max"

    def __post_init__(self):
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")
        if self.aggregation not in ("max", "sum"):
            raise ValueError(f"aggregation must be 'max' or 'sum', got {self.aggregation!r}")

    @property
    def homogeneous(self):
        return not (self.use_bias or self.use_layer_norm or self.use_gating)


@dataclass(frozen=True, eq=False)
class ProcessorParams:
    """Encoder matrices per probe and location, message/update transforms.

    Optional entries are ``None`` unless the matching config switch is on.
    """

    node_encoders: tuple[np.ndarray, ...]
    edge_encoders: tuple[np.ndarray, ...]
    graph_encoders: tuple[np.ndarray, ...]
    message: np.ndarray  # (4d, d): [x_i | x_j | e_ij | g]
    update: np.ndarray  # (2d, d): [x_i | m_i]
    encoder_bias: dict = field(default_factory=dict)
    message_bias: np.ndarray | None = None
    update_bias: np.ndarray | None = None
    gate: np.ndarray | None = None  # (2d, d)
    gate_bias: np.ndarray | None = None
    norm_scale: np.ndarray | None = None

    @property
    def hidden_dim(self):
        return self.message.shape[1]


def _widths(spec):
    if isinstance(spec, int):
        return (spec,)
    return tuple(int(w) for w in spec)


def init_params(config: ProcessorConfig, input_widths, seed=0) -> ProcessorParams:
    """Seeded uniform(-1/sqrt(d), 1/sqrt(d)) initialisation.

    ``input_widths`` maps ``"node"``, ``"edge"`` and ``"graph"`` to one width per
    probe (an int for a single probe). Each probe gets its own encoder and the
    encodings are summed per location.
    """
    d = config.hidden_dim
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d)

    def mat(rows):
        return rng.uniform(-bound, bound, size=(rows, d))

    def vec():
        return rng.uniform(-bound, bound, size=d)

    widths = {loc: _widths(input_widths.get(loc, ())) for loc in ("node", "edge", "graph")}
    for loc, ws in widths.items():
        if any(w < 1 for w in ws):
            raise ValueError(f"{loc} probe widths must be positive")
    encoders = {loc: tuple(mat(w) for w in ws) for loc, ws in widths.items()}
    message = mat(4 * d)
    update = mat(2 * d)
    extra = {}
    if config.use_bias:
        extra["encoder_bias"] = {loc: vec() for loc in ("node", "edge", "graph")}
        extra["message_bias"] = vec()
        extra["update_bias"] = vec()
    if config.use_gating:
        extra["gate"] = mat(2 * d)
        if config.use_bias:
            extra["gate_bias"] = vec()
    if config.use_layer_norm:
        extra["norm_scale"] = np.ones(d)
    return ProcessorParams(
        encoders["node"], encoders["edge"], encoders["graph"], message, update, **extra
    )


def _encode(encoders, inputs, lead_shape_ndim, bias, loc):
    if isinstance(inputs, np.ndarray) or not isinstance(inputs, (list, tuple)):
        inputs = (inputs,)
    if len(inputs) != len(encoders):
        raise ShapeMismatch(f"{loc}: {len(inputs)} probes for {len(encoders)} encoders")
    out = None
    for W, x in zip(encoders, inputs):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == lead_shape_ndim:
            x = x[..., None]
        if x.ndim != lead_shape_ndim + 1 or x.shape[-1] != W.shape[0]:
            raise ShapeMismatch(f"{loc}: probe shape {x.shape} for encoder {W.shape}")
        y = x @ W
        out = y if out is None else out + y
    if bias is not None:
        out = out + bias
    return out


def encode_probes(params: ProcessorParams, node_inputs, edge_inputs, graph_inputs):
    """Linearly encode every probe to the hidden width and sum per location.

    Returns ``(X, E, g)`` with shapes (V, d), (V, V, d) and (d,).
    """
    bias = params.encoder_bias or {}
    X = _encode(params.node_encoders, node_inputs, 1, bias.get("node"), "node")
    E = _encode(params.edge_encoders, edge_inputs, 2, bias.get("edge"), "edge")
    g = _encode(params.graph_encoders, graph_inputs, 0, bias.get("graph"), "graph")
    if E.shape[:2] != (X.shape[0], X.shape[0]):
        raise ShapeMismatch(f"edge probes {E.shape[:2]} do not match {X.shape[0]} nodes")
    return X, E, g


def _relu(x):
    return np.maximum(x, 0.0)


def mp_step(params: ProcessorParams, config: ProcessorConfig, X, E, g):
    """One round of pairwise message passing over a fully connected graph."""
    X = np.asarray(X, dtype=np.float64)
    E = np.asarray(E, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    d = params.hidden_dim
    V = X.shape[0] if X.ndim == 2 else -1
    if X.shape != (V, d) or E.shape != (V, V, d) or g.shape != (d,):
        raise ShapeMismatch(
            f"X {X.shape}, E {E.shape}, g {g.shape} inconsistent with d={d}"
        )
    Wm = params.message
    pre = (
        (X @ Wm[:d])[:, None, :]
        + (X @ Wm[d : 2 * d])[None, :, :]
        + E @ Wm[2 * d : 3 * d]
        + g @ Wm[3 * d :]
    )
    if config.use_bias:
        pre = pre + params.message_bias
    msgs = _relu(pre)
    if V == 0:
        m = np.zeros((0, d))
    elif config.aggregation == "max":
        m = msgs.max(axis=1)
    else:
        m = msgs.sum(axis=1)
    z = np.concatenate([X, m], axis=1)
    h = z @ params.update
    if config.use_bias:
        h = h + params.update_bias
    h = _relu(h)
    if config.use_gating:
        a = z @ params.gate
        if params.gate_bias is not None:
            a = a + params.gate_bias
        gate = 0.5 * (1.0 + np.tanh(0.5 * a))  # overflow-free sigmoid
        h = gate * h + (1.0 - gate) * X
    if config.use_layer_norm:
        mu = h.mean(axis=1, keepdims=True)
        var = h.var(axis=1, keepdims=True)
        h = (h - mu) / np.sqrt(var + LAYER_NORM_EPS) * params.norm_scale
    return h


def homogeneity_check(params, config, trial_count=100, alphas=(0.5, 2.0, 10.0, 100.0),
                      seed=0, node_range=(2, 8), eps=1e-12) -> float:
    """Largest ``|f(a x) - a f(x)| / max(|a f(x)|, eps)`` over random inputs and scales.

    Norms are Frobenius norms over the node-feature output of :func:`mp_step`.
    """
    if any(a <= 0 for a in alphas):
        raise ValueError("alphas must be positive")
    rng = np.random.default_rng(seed)
    d = params.hidden_dim
    worst = 0.0
    for _ in range(trial_count):
        V = int(rng.integers(node_range[0], node_range[1] + 1))
        X = rng.standard_normal((V, d))
        E = rng.standard_normal((V, V, d))
        g = rng.standard_normal(d)
        base = mp_step(params, config, X, E, g)
        for a in alphas:
            scaled = mp_step(params, config, a * X, a * E, a * g)
            ref = a * base
            dev = np.linalg.norm(scaled - ref) / max(np.linalg.norm(ref), eps)
            worst = max(worst, float(dev))
    return worst
