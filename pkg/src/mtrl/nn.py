"""Small dense neural-network engine with manual backpropagation and Adam.

Everything works on float64 arrays. A network maps a batch ``(n, in)`` (or a
single vector ``(in,)``) to ``(n, out)``. Weights are stored ``(out, in)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


class ShapeError(ValueError):
    """Input or parameter shapes do not line up."""


class NonFiniteError(FloatingPointError):
    """A NaN or Inf showed up where finite numbers are required."""


def activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return expit(z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "linear":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation, given pre-activation z and output a."""
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class Dense:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "linear"

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


class DenseNet:
    """A chain of dense layers.

    A net with no layers is the identity map on ``width`` inputs; the
    multi-task network uses that for input blocks that do nothing.
    """

    def __init__(self, layers: list[Dense], width: int | None = None):
        self.layers = list(layers)
        if not self.layers and width is None:
            raise ShapeError("an empty DenseNet needs an explicit width")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.n_out != nxt.n_in:
                raise ShapeError(
                    f"layer dims do not chain: {prev.n_out} -> {nxt.n_in}")
        for layer in self.layers:
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"unknown activation {layer.activation!r}")
            if layer.b.shape != (layer.n_out,):
                raise ShapeError("bias shape does not match weight rows")
        self._width = width

    @classmethod
    def build(cls, sizes, activations, rng: np.random.Generator) -> "DenseNet":
        """Glorot-uniform weights, zero biases.

        ``sizes`` lists every width including the input, so
        ``build([4, 80, 2], ["relu", "linear"], rng)`` has two layers.
        """
        sizes = list(sizes)
        if isinstance(activations, str):
            activations = [activations] * (len(sizes) - 1)
        if len(activations) != len(sizes) - 1:
            raise ShapeError("need one activation per layer")
        layers = []
        for n_in, n_out, act in zip(sizes[:-1], sizes[1:], activations):
            limit = np.sqrt(6.0 / (n_in + n_out))
            W = rng.uniform(-limit, limit, size=(n_out, n_in))
            layers.append(Dense(W, np.zeros(n_out), act))
        return cls(layers, width=sizes[0])

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in if self.layers else self._width

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out if self.layers else self._width

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def param_names(self) -> list[str]:
        names = []
        for i in range(len(self.layers)):
            names.extend((f"layer{i}.W", f"layer{i}.b"))
        return names

    def copy(self) -> "DenseNet":
        return DenseNet([Dense(l.W.copy(), l.b.copy(), l.activation)
                         for l in self.layers], width=self.n_in)

    def spec(self) -> dict:
        return {"width": self.n_in,
                "layers": [[l.n_in, l.n_out, l.activation] for l in self.layers]}

    def same_architecture(self, other: "DenseNet") -> bool:
        return self.spec() == other.spec()

    def forward(self, x, cache: bool = False):
        """Evaluate the net. With ``cache=True`` also return the activations
        needed by :func:`net_backward`."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        X = x[None, :] if single else x
        if X.ndim != 2 or X.shape[1] != self.n_in:
            raise ShapeError(f"expected input width {self.n_in}, got shape {x.shape}")
        trace = [X]
        for layer in self.layers:
            Z = X @ layer.W.T + layer.b
            X = activate(layer.activation, Z)
            trace.append((Z, X))
        out = X[0] if single else X
        if cache:
            return out, (single, trace)
        return out

    __call__ = forward

    def backward(self, cache, dL_dy):
        """Reverse-mode gradients, summed over the batch.

        Returns ``(grads, dL_dx)`` with ``grads`` aligned to :meth:`params`.
        """
        single, trace = cache
        G = np.asarray(dL_dy, dtype=np.float64)
        if single:
            G = G[None, :]
        if G.shape != (trace[0].shape[0], self.n_out):
            raise ShapeError(f"upstream gradient shape {G.shape} does not match output")
        grads: list[np.ndarray] = [None] * (2 * len(self.layers))
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            Z, A = trace[i + 1]
            X_in = trace[0] if i == 0 else trace[i][1]
            dZ = G * activation_grad(layer.activation, Z, A)
            grads[2 * i] = dZ.T @ X_in
            grads[2 * i + 1] = dZ.sum(axis=0)
            G = dZ @ layer.W
        dx = G[0] if single else G
        return grads, dx

    def check_finite(self) -> None:
        for name, p in zip(self.param_names(), self.params()):
            if not np.all(np.isfinite(p)):
                raise NonFiniteError(f"non-finite values in {name}")


def net_forward(net: DenseNet, x) -> np.ndarray:
    return net.forward(x)


def net_backward(net: DenseNet, x, dL_dy):
    """Gradients of the scalar whose output-gradient is ``dL_dy``."""
    _, cache = net.forward(x, cache=True)
    return net.backward(cache, dL_dy)


# -- optimizer ---------------------------------------------------------------

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, params, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in params],
                   [np.zeros_like(p) for p in params], **kw)

    def copy(self) -> "AdamState":
        return AdamState([m.copy() for m in self.m], [v.copy() for v in self.v],
                         self.t, self.beta1, self.beta2, self.eps)


def adam_step(params, grads, state: AdamState, lr: float, names=None):
    """One bias-corrected Adam step, applied to ``params`` in place."""
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and optimizer state disagree in length")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.m[i].shape:
            raise ShapeError(f"shape mismatch in parameter block {i}")
        if not np.all(np.isfinite(g)):
            label = names[i] if names else f"block {i}"
            raise NonFiniteError(f"non-finite gradient in {label}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# -- losses ------------------------------------------------------------------

@dataclass(frozen=True)
class LossSpec:
    kind: str = "mse"
    delta: float = 1.0
    scale: float | None = None  # divide by this to get a loss in [0, 1]

    def __post_init__(self):
        if self.kind not in ("mse", "huber"):
            raise ValueError(f"unknown loss {self.kind!r}")
        if self.delta <= 0:
            raise ValueError("huber delta must be positive")
        if self.scale is not None and self.scale <= 0:
            raise ValueError("loss scale must be positive")


def loss_eval(spec: LossSpec, pred, target):
    """Elementwise loss value and derivative w.r.t. ``pred``.

    mse is e**2 / 2 so both kinds share the quadratic branch near zero.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(target))):
        raise NonFiniteError("loss inputs must be finite")
    e = pred - target
    if spec.kind == "mse":
        value, grad = 0.5 * e * e, e
    else:
        d = spec.delta
        small = np.abs(e) <= d
        value = np.where(small, 0.5 * e * e, d * (np.abs(e) - 0.5 * d))
        grad = np.where(small, e, d * np.sign(e))
    if spec.scale is not None:
        value, grad = value / spec.scale, grad / spec.scale
    if value.ndim == 0:
        return float(value), float(grad)
    return value, grad


# -- snapshots ---------------------------------------------------------------

SNAPSHOT_VERSION = 1


def net_arrays(net: DenseNet, prefix: str = "") -> tuple[dict, dict]:
    """Flatten a net into (metadata, arrays) for an ``.npz`` snapshot."""
    arrays = {prefix + name: p for name, p in zip(net.param_names(), net.params())}
    return net.spec(), arrays


def net_from_arrays(meta: dict, arrays, prefix: str = "") -> DenseNet:
    layers = []
    for i, (n_in, n_out, act) in enumerate(meta["layers"]):
        W = np.array(arrays[f"{prefix}layer{i}.W"], dtype=np.float64)
        b = np.array(arrays[f"{prefix}layer{i}.b"], dtype=np.float64)
        if W.shape != (n_out, n_in):
            raise ShapeError(f"snapshot layer {i} has shape {W.shape}")
        layers.append(Dense(W, b, act))
    return DenseNet(layers, width=meta["width"])


def save_net(net: DenseNet, path) -> None:
    meta, arrays = net_arrays(net)
    header = json.dumps({"format": "densenet", "version": SNAPSHOT_VERSION, "net": meta})
    with open(Path(path), "wb") as fh:
        np.savez(fh, __meta__=np.array(header), **arrays)


def load_net(path) -> DenseNet:
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["__meta__"]))
        if header.get("format") != "densenet":
            raise ValueError(f"{path} is not a DenseNet snapshot")
        return net_from_arrays(header["net"], data)
