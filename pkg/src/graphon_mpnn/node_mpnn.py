"""Node embeddings: discrete message passing on a sampled graph and its
exact continuous counterpart on the block model.

The discrete path follows the layer recursion

    mean mode:  m_i = (1/n) sum_j (A_ij / d_i) msg(f_i, f_j)
    sum mode:   m_i = (1/n) sum_j  A_ij        msg(f_i, f_j)
    f_i <- upd(f_i, m_i)

with d_i the size-normalized degree. The continuous path collapses to an
exact r-dimensional recursion over blocks because the edge-probability
function is piecewise constant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError
from .mpnn import NEIGHBOR_AVERAGE, Mpnn
from .sbm import GraphStats, SampledGraph, SbmSpec, graphon_degree

log = logging.getLogger(__name__)

_CHUNK_ROWS = 128


@dataclass(frozen=True)
class NodeEmbeddings:
    """n x F matrix of per-node features with a provenance tag."""

    values: np.ndarray
    provenance: str  # "discrete" | "continuous_sampled"

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BlockEmbeddings:
    """r x F matrix of per-block continuous features."""

    values: np.ndarray

    @property
    def r(self) -> int:
        return self.values.shape[0]


def _resolve_node_init(graph: SampledGraph, stats: GraphStats, init) -> np.ndarray:
    if init is None:
        return np.asarray(graph.node_features, dtype=float)
    if isinstance(init, str):
        if init == "degree":
            return stats.degrees.reshape(-1, 1).copy()
        if init == "block_signal":
            return np.asarray(graph.node_features, dtype=float)
        raise ValueError(f"unknown init {init!r}")
    init = np.asarray(init, dtype=float)
    if init.ndim == 1:
        init = init.reshape(-1, 1)
    if init.shape[0] != graph.n:
        raise ValueError(f"init must have {graph.n} rows")
    return init


def _message_sum(adjacency, features, message, row_weights):
    """sum_j A_ij w_i msg(f_i, f_j) for all i, streamed over row chunks."""
    n = adjacency.shape[0]
    if message.is_neighbor_projection:
        return (adjacency @ features) * row_weights[:, None]
    out = np.empty((n, message.width_out))
    for start in range(0, n, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n)
        xi = np.broadcast_to(
            features[start:stop, None, :], (stop - start, n, features.shape[1])
        )
        xj = np.broadcast_to(features[None, :, :], (stop - start, n, features.shape[1]))
        msgs = message(xi, xj)
        out[start:stop] = np.einsum("ij,ijh->ih", adjacency[start:stop], msgs)
    return out * row_weights[:, None]


def gmpnn_node(graph: SampledGraph, stats: GraphStats, mpnn: Mpnn,
               init=None) -> NodeEmbeddings:
    """Run the discrete node recursion on a sampled graph.

    ``init`` is the initial feature matrix: None for the graph's block
    signal, "degree" for size-normalized degrees, or an explicit (n, F0)
    array. In mean mode, isolated nodes receive a zero message (logged).
    """
    f = _resolve_node_init(graph, stats, init)
    if f.shape[1] != mpnn.feature_dims[0]:
        raise ValueError(
            f"init width {f.shape[1]} != network input width {mpnn.feature_dims[0]}"
        )
    n = graph.n
    if mpnn.aggregation == NEIGHBOR_AVERAGE:
        isolated = stats.degrees == 0.0
        if isolated.any():
            log.info("mean aggregation: %d isolated nodes get zero messages",
                     int(isolated.sum()))
        weights = np.zeros(n)
        weights[~isolated] = 1.0 / (n * stats.degrees[~isolated])
    else:
        weights = np.full(n, 1.0 / n)

    for message, update in mpnn.layers:
        m = _message_sum(graph.adjacency, f, message, weights)
        f = update(f, m)
        if not np.all(np.isfinite(f)):
            raise NumericalError("non-finite node features during message passing")
    return NodeEmbeddings(values=f, provenance="discrete")


def _block_messages(spec: SbmSpec, features: np.ndarray, message) -> np.ndarray:
    """sum_b pi_b S_ab msg(B_a, B_b) for every block a."""
    r, f_width = features.shape
    xa = np.broadcast_to(features[:, None, :], (r, r, f_width))
    xb = np.broadcast_to(features[None, :, :], (r, r, f_width))
    msgs = message(xa, xb)
    w = spec.S * spec.block_mass[None, :]
    return np.einsum("ab,abh->ah", w, msgs)


def cmpnn_node_sbm(spec: SbmSpec, mpnn: Mpnn, init=None,
                   return_layers: bool = False):
    """Exact continuous node recursion, one state vector per block.

    mean mode:  g_a = (1/d(a)) sum_b pi_b S_ab msg(B_a, B_b)
    sum mode:   g_a =          sum_b pi_b S_ab msg(B_a, B_b)
    B_a <- upd(B_a, g_a)

    ``init`` defaults to the spec's block signal; pass "degree" for the
    per-block expected degree, or an explicit (r, F0) array.
    """
    if init is None:
        f = np.asarray(spec.B, dtype=float).copy()
    elif isinstance(init, str) and init == "degree":
        f = graphon_degree(spec).reshape(-1, 1)
    else:
        f = np.asarray(init, dtype=float)
        if f.ndim == 1:
            f = f.reshape(-1, 1)
    if f.shape[0] != spec.r:
        raise ValueError(f"init must have {spec.r} rows")
    if f.shape[1] != mpnn.feature_dims[0]:
        raise ValueError(
            f"init width {f.shape[1]} != network input width {mpnn.feature_dims[0]}"
        )

    mean_mode = mpnn.aggregation == NEIGHBOR_AVERAGE
    if mean_mode:
        d = graphon_degree(spec)
        if d.min() <= 0.0:
            raise PreconditionError(
                "mean aggregation undefined: a block has zero expected degree"
            )

    trace = [BlockEmbeddings(values=f.copy())]
    for message, update in mpnn.layers:
        g = _block_messages(spec, f, message)
        if mean_mode:
            g = g / d[:, None]
        f = update(f, g)
        trace.append(BlockEmbeddings(values=f.copy()))
    if return_layers:
        return trace
    return trace[-1]


def lift_block_embeddings(block_emb: BlockEmbeddings,
                          graph: SampledGraph) -> NodeEmbeddings:
    """Expand per-block values to per-node rows via each node's block."""
    if block_emb.values.shape[0] <= graph.block_of.max():
        raise ValueError("block count does not cover the graph's blocks")
    return NodeEmbeddings(
        values=block_emb.values[graph.block_of], provenance="continuous_sampled"
    )


def write_embeddings_csv(emb: NodeEmbeddings, path) -> None:
    """One row per node, one column per feature."""
    with open(path, "w") as fh:
        width = emb.values.shape[1]
        fh.write(",".join(f"f{k + 1}" for k in range(width)) + "\n")
        for row in emb.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
