"""Micro feed-forward networks with exact backpropagation and Adam.

These are deliberately small, pure-numpy MLPs (all math in float64) used as
message/update functions inside message-passing layers and as link heads.
Forward and backward operate on batched inputs of shape (..., width).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .rng import stream

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(float)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
}

# Lipschitz constant of each activation under the sup norm.
_ACT_LIPSCHITZ = {"relu": 1.0, "tanh": 1.0, "identity": 1.0, "sigmoid": 0.25}


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class FeedForwardNet:
    """MLP with one activation on hidden layers and identity/sigmoid output.

    Parameters are ``weights[k]`` of shape (dims[k+1], dims[k]) and
    ``biases[k]`` of shape (dims[k+1],). ``backward`` returns exact
    gradients of the scalar <grad_out, forward(x)>.
    """

    def __init__(self, dims, activation="tanh", output_activation="identity",
                 weights=None, biases=None):
        if not dims or len(dims) < 2:
            raise ValueError("dims must list at least input and output widths")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if output_activation not in ("identity", "sigmoid"):
            raise ValueError(f"unknown output activation {output_activation!r}")
        self.dims = [int(d) for d in dims]
        self.activation = activation
        self.output_activation = output_activation
        if weights is None:
            weights = [np.zeros((o, i)) for i, o in zip(self.dims, self.dims[1:])]
            biases = [np.zeros(o) for o in self.dims[1:]]
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        for k, (i, o) in enumerate(zip(self.dims, self.dims[1:])):
            if self.weights[k].shape != (o, i) or self.biases[k].shape != (o,):
                raise ValueError(f"layer {k} parameter shape mismatch")

    # -- basic properties ----------------------------------------------------

    @property
    def width_in(self) -> int:
        return self.dims[0]

    @property
    def width_out(self) -> int:
        return self.dims[-1]

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def set_parameters(self, params) -> None:
        it = iter(params)
        for k in range(len(self.weights)):
            self.weights[k] = np.asarray(next(it), dtype=float)
            self.biases[k] = np.asarray(next(it), dtype=float)

    def copy(self) -> "FeedForwardNet":
        return FeedForwardNet(
            self.dims, self.activation, self.output_activation,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def formal_bias(self) -> float:
        """Sup norm of the output at the zero input."""
        zero = np.zeros(self.width_in)
        return float(np.max(np.abs(self.forward(zero))))

    # -- forward / backward ----------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.width_in:
            raise ValueError(f"input width {x.shape[-1]} != {self.width_in}")
        act, _ = _ACTIVATIONS[self.activation]
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            h = z if k == last else act(z)
        if self.output_activation == "sigmoid":
            h = sigmoid(h)
        return h

    def forward_cache(self, x: np.ndarray):
        """Forward pass retaining pre-activations for backward()."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.width_in:
            raise ValueError(f"input width {x.shape[-1]} != {self.width_in}")
        act, _ = _ACTIVATIONS[self.activation]
        inputs = [x]
        zs = []
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            zs.append(z)
            h = z if k == last else act(z)
            if k != last:
                inputs.append(h)
        out = sigmoid(h) if self.output_activation == "sigmoid" else h
        return out, (inputs, zs, out)

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of <grad_out, forward(x)> w.r.t. parameters and input.

        Returns (param_grads, grad_in). Parameter gradients are summed over
        all batch elements; grad_in matches the input batch shape.
        """
        inputs, zs, out = cache
        delta = np.asarray(grad_out, dtype=float)
        if self.output_activation == "sigmoid":
            delta = delta * out * (1.0 - out)
        return self._backward_from_logits(cache, delta)

    def backward_from_logits(self, cache, grad_logits: np.ndarray):
        """Like backward() but the gradient is taken at the pre-activation
        output (the logits), bypassing the output nonlinearity."""
        return self._backward_from_logits(cache, np.asarray(grad_logits, dtype=float))

    def _backward_from_logits(self, cache, delta):
        inputs, zs, _ = cache
        _, dact = _ACTIVATIONS[self.activation]
        grads = [None] * (2 * len(self.weights))
        for k in range(len(self.weights) - 1, -1, -1):
            h_in = inputs[k]
            flat_delta = delta.reshape(-1, delta.shape[-1])
            flat_in = h_in.reshape(-1, h_in.shape[-1])
            grads[2 * k] = flat_delta.T @ flat_in
            grads[2 * k + 1] = flat_delta.sum(axis=0)
            delta = delta @ self.weights[k]
            if k > 0:
                delta = delta * dact(zs[k - 1])
        return grads, delta


def init_net(dims, activation="tanh", seed=0, output_activation="identity",
             zero=False, tag="init") -> FeedForwardNet:
    """Random net with weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    Deterministic in ``(seed, tag)``; distinct tags give independent nets
    from one seed. ``zero=True`` overrides with all-zero parameters.
    """
    net = FeedForwardNet(dims, activation, output_activation)
    if zero:
        return net
    rng = stream(seed, tag)
    for k, (i, o) in enumerate(zip(net.dims, net.dims[1:])):
        bound = 1.0 / np.sqrt(i)
        net.weights[k] = rng.uniform(-bound, bound, size=(o, i))
        net.biases[k] = rng.uniform(-bound, bound, size=o)
    return net


def lipschitz_upper_bound(net: FeedForwardNet) -> float:
    """Product of per-layer sup-operator norms times activation constants.

    The sup-operator norm of a weight matrix is its maximum absolute row
    sum; the product is a valid upper bound on the net's Lipschitz constant
    under the sup norm.
    """
    bound = 1.0
    n_layers = len(net.weights)
    for k, w in enumerate(net.weights):
        bound *= float(np.max(np.sum(np.abs(w), axis=1)))
        act = net.activation if k < n_layers - 1 else (
            net.output_activation if net.output_activation != "identity" else "identity"
        )
        bound *= _ACT_LIPSCHITZ[act]
    return bound


# --- Adam ---------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment accumulators, shaped like the parameter list."""

    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameters(cls, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            step=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        )


def adam_step(params, grads, state: AdamState) -> list:
    """One Adam update over a flat parameter list; returns new parameters.

    ``state`` is updated in place (step count and moments).
    """
    state.step += 1
    t = state.step
    out = []
    for k, (p, g) in enumerate(zip(params, grads)):
        state.m[k] = state.beta1 * state.m[k] + (1 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1 - state.beta2) * g * g
        m_hat = state.m[k] / (1 - state.beta1 ** t)
        v_hat = state.v[k] / (1 - state.beta2 ** t)
        out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


# --- checkpointing --------------------------------------------------------------

def save_net(net: FeedForwardNet, path) -> None:
    """Text checkpoint: a header line of dims, then one float per line."""
    with open(path, "w") as fh:
        dims = " ".join(str(d) for d in net.dims)
        fh.write(f"dims {dims} activation {net.activation} output {net.output_activation}\n")
        for p in net.parameters():
            for v in np.asarray(p).reshape(-1):
                fh.write(f"{float(v)!r}\n")


def load_net(path) -> FeedForwardNet:
    with open(path) as fh:
        header = fh.readline().split()
        values = [float(line) for line in fh if line.strip()]
    i_act = header.index("activation")
    dims = [int(d) for d in header[1:i_act]]
    activation = header[i_act + 1]
    output_activation = header[header.index("output") + 1]
    net = FeedForwardNet(dims, activation, output_activation)
    flat = np.array(values)
    offset = 0
    params = []
    for p in net.parameters():
        size = p.size
        params.append(flat[offset : offset + size].reshape(p.shape))
        offset += size
    if offset != flat.size:
        raise ValueError(f"{path}: expected {offset} values, got {flat.size}")
    net.set_parameters(params)
    return net
