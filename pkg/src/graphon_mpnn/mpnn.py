"""Message-passing networks: per-layer message/update functions.

A network is T layers of (message, update) pairs. Message functions map a
pair of feature vectors (x, y) to a message; update functions map (x, m) to
the next feature vector. Both come either as micro feed-forward nets or as
closed-form symbolic functions, and both operate on batched arrays whose
last axis is the feature width.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .nn import FeedForwardNet, init_net, lipschitz_upper_bound

NEIGHBOR_AVERAGE = "neighbor_average"
N_NORMALIZED_SUM = "n_normalized_sum"
AGGREGATIONS = (NEIGHBOR_AVERAGE, N_NORMALIZED_SUM)

#: Division guard for the closed-form ratio update; documented constant.
EPS_DIV = 1e-12


class NeighborProjection:
    """Message function (x, y) -> y.

    Lipschitz constant 1 under the sup norm, zero formal bias. Aggregations
    of this message reduce to adjacency matrix products, which the graph
    paths exploit as a fast path.
    """

    is_neighbor_projection = True
    trainable = False
    net = None

    def __init__(self, width: int):
        self.width_in = 2 * int(width)
        self.width_out = int(width)

    def __call__(self, x, y):
        return np.asarray(y, dtype=float)

    def lipschitz(self) -> float:
        return 1.0

    def formal_bias(self) -> float:
        return 0.0


class RatioUpdate:
    """Update function (x, m) -> x / max(m, EPS_DIV), applied entrywise.

    Not globally Lipschitz; bound computations reject it.
    """

    is_neighbor_projection = False
    trainable = False
    net = None

    def __init__(self, width: int, eps_div: float = EPS_DIV):
        self.width_in = 2 * int(width)
        self.width_out = int(width)
        self.eps_div = float(eps_div)

    def __call__(self, x, m):
        x = np.asarray(x, dtype=float)
        m = np.asarray(m, dtype=float)
        return x / np.maximum(m, self.eps_div)

    def lipschitz(self):
        return None

    def formal_bias(self) -> float:
        return 0.0


class NetMessage:
    """Message function backed by a net on the concatenated pair [x, y]."""

    is_neighbor_projection = False

    def __init__(self, net: FeedForwardNet, trainable: bool = True):
        if net.width_in % 2 != 0:
            raise ValueError("message net input width must be even (pair input)")
        self.net = net
        self.trainable = trainable
        self.width_in = net.width_in
        self.width_out = net.width_out

    def __call__(self, x, y):
        return self.net.forward(np.concatenate([x, y], axis=-1))

    def lipschitz(self) -> float:
        return lipschitz_upper_bound(self.net)

    def formal_bias(self) -> float:
        return self.net.formal_bias()


class NetUpdate:
    """Update function backed by a net on the concatenated [x, m]."""

    is_neighbor_projection = False

    def __init__(self, net: FeedForwardNet, trainable: bool = True):
        self.net = net
        self.trainable = trainable
        self.width_in = net.width_in
        self.width_out = net.width_out

    def __call__(self, x, m):
        return self.net.forward(np.concatenate([x, m], axis=-1))

    def lipschitz(self) -> float:
        return lipschitz_upper_bound(self.net)

    def formal_bias(self) -> float:
        return self.net.formal_bias()


@dataclass(frozen=True)
class Mpnn:
    """T layers of (message, update) pairs plus the node aggregation mode.

    Feature widths must chain: for layer t with input width F, the message
    function consumes 2F and emits H, and the update consumes F + H. Width
    mismatches are construction-time errors.
    """

    layers: tuple
    aggregation: str = NEIGHBOR_AVERAGE

    def __post_init__(self):
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        layers = tuple(tuple(pair) for pair in self.layers)
        if not layers:
            raise ValueError("need at least one layer")
        f = layers[0][0].width_in // 2
        for t, (msg, upd) in enumerate(layers):
            if msg.width_in != 2 * f:
                raise ValueError(
                    f"layer {t}: message input width {msg.width_in} != 2*{f}"
                )
            if upd.width_in != f + msg.width_out:
                raise ValueError(
                    f"layer {t}: update input width {upd.width_in} != "
                    f"{f} + {msg.width_out}"
                )
            f = upd.width_out
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def feature_dims(self) -> list:
        dims = [self.layers[0][0].width_in // 2]
        for _, upd in self.layers:
            dims.append(upd.width_out)
        return dims

    @property
    def message_dims(self) -> list:
        return [msg.width_out for msg, _ in self.layers]

    @property
    def all_symbolic(self) -> bool:
        return all(msg.net is None and upd.net is None for msg, upd in self.layers)

    def trainable_nets(self) -> list:
        nets = []
        for msg, upd in self.layers:
            if msg.net is not None and msg.trainable:
                nets.append(msg.net)
            if upd.net is not None and upd.trainable:
                nets.append(upd.net)
        return nets

    def with_aggregation(self, aggregation: str) -> "Mpnn":
        return dataclasses.replace(self, aggregation=aggregation)


def graphsage_mpnn(feature_dims, update_hidden=10, activation="tanh", seed=0,
                   aggregation=NEIGHBOR_AVERAGE, trainable=True) -> Mpnn:
    """Randomly initialized network in the neighbor-sampling style.

    Each layer projects the neighbor feature as its message and updates via
    a one-hidden-layer net on [own, aggregated]: for ``feature_dims``
    [F0, F1, ..., FT] layer t maps width F_{t-1} to F_t.
    """
    layers = []
    for t in range(len(feature_dims) - 1):
        f_in, f_out = feature_dims[t], feature_dims[t + 1]
        net = init_net([2 * f_in, update_hidden, f_out], activation,
                       seed=seed, tag=f"init/update{t}")
        layers.append((NeighborProjection(f_in), NetUpdate(net, trainable=trainable)))
    return Mpnn(layers=tuple(layers), aggregation=aggregation)


def random_net_mpnn(feature_dims, message_dims, hidden=6, activation="tanh",
                    seed=0, aggregation=NEIGHBOR_AVERAGE) -> Mpnn:
    """Network with random nets for both message and update (test fodder)."""
    if len(message_dims) != len(feature_dims) - 1:
        raise ValueError("need one message width per layer")
    layers = []
    for t in range(len(feature_dims) - 1):
        f_in, f_out, h = feature_dims[t], feature_dims[t + 1], message_dims[t]
        msg = init_net([2 * f_in, hidden, h], activation, seed=seed, tag=f"init/msg{t}")
        upd = init_net([f_in + h, hidden, f_out], activation, seed=seed,
                       tag=f"init/upd{t}")
        layers.append((NetMessage(msg), NetUpdate(upd)))
    return Mpnn(layers=tuple(layers), aggregation=aggregation)
