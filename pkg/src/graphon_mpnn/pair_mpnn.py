"""Pairwise embeddings: discrete message passing over node pairs and its
exact continuous counterpart on the block model.

The discrete recursion for a pair (i, j) aggregates over shared third
nodes, normalized by the common-neighbor fraction c(i, j):

    m_ij = (1 / (2n c_ij)) sum_z [ A_jz msg(f_ij, f_iz) + A_iz msg(f_ij, f_jz) ]
    f_ij <- upd(f_ij, m_ij)

For the neighbor-projection message this reduces to two adjacency matrix
products per feature channel, the fast path that makes n = 8192 feasible.
The continuous recursion collapses to r x r block-pair states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError
from .mpnn import Mpnn, NeighborProjection, RatioUpdate, NetUpdate
from .nn import init_net
from .sbm import (
    GraphStats,
    SampledGraph,
    SbmSpec,
    graphon_common_neighbors,
)

#: Dense pair tensors are capped to protect memory; the fully symbolic
#: variant affords a larger cap because it never materializes per-pair
#: message inputs.
N_MAX_GENERAL = 4096
N_MAX_SYMBOLIC = 8192


@dataclass(frozen=True)
class PairEmbeddings:
    """Dense n x n x F tensor of per-pair features."""

    values: np.ndarray
    provenance: str  # "discrete" | "continuous_sampled"

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BlockPairEmbeddings:
    """r x r x F tensor of continuous per-block-pair features."""

    values: np.ndarray

    @property
    def r(self) -> int:
        return self.values.shape[0]


def fixed_psi_mpnn(T: int) -> Mpnn:
    """The closed-form variant: message (x, y) -> y, update (x, m) -> x/m.

    The update guards division by EPS_DIV (see RatioUpdate). All layers are
    width 1; the edge-probability function itself is a stationary point of
    the pairwise recursion under this pair.
    """
    if T < 1:
        raise PreconditionError("need at least one layer")
    layers = tuple((NeighborProjection(1), RatioUpdate(1)) for _ in range(T))
    return Mpnn(layers=layers)


def learnable_psi_mpnn(T: int, hidden: int = 5, n_hidden_layers: int = 2,
                       activation="tanh", seed=0) -> Mpnn:
    """Neighbor-projection messages with a trainable per-layer update net."""
    if T < 1:
        raise PreconditionError("need at least one layer")
    layers = []
    for t in range(T):
        dims = [2] + [hidden] * n_hidden_layers + [1]
        net = init_net(dims, activation, seed=seed, tag=f"init/pair-update{t}")
        layers.append((NeighborProjection(1), NetUpdate(net, trainable=True)))
    return Mpnn(layers=tuple(layers))


def pair_message_weights(stats: GraphStats) -> np.ndarray:
    """Normalization weights 1 / (2n c_ij), with the 1/n fallback in c."""
    return 1.0 / (2.0 * stats.n * stats.common_neighbors)


def _fast_pair_messages(adjacency, f, weights):
    """(1/(2n c)) (F A + A F) per feature channel; exact for projections."""
    n, _, width = f.shape
    m = np.empty_like(f)
    for k in range(width):
        fk = f[:, :, k]
        m[:, :, k] = (fk @ adjacency + adjacency @ fk) * weights
    return m


def _general_pair_messages(adjacency, f, message, weights):
    n, _, width = f.shape
    h = message.width_out
    m = np.empty((n, n, h))
    for i in range(n):
        fij = np.broadcast_to(f[i][:, None, :], (n, n, width))
        own = message(fij, np.broadcast_to(f[i][None, :, :], (n, n, width)))
        other = message(fij, f)
        term = np.einsum("jz,jzh->jh", adjacency, own)
        term += np.einsum("z,jzh->jh", adjacency[i], other)
        m[i] = term * weights[i][:, None]
    return m


def gmpnn_pair(graph: SampledGraph, stats: GraphStats, mpnn: Mpnn,
               n_max: int | None = None) -> PairEmbeddings:
    """Run the discrete pairwise recursion from the all-ones initialization."""
    n = graph.n
    if n_max is None:
        n_max = N_MAX_SYMBOLIC if mpnn.all_symbolic else N_MAX_GENERAL
    if n > n_max:
        raise PreconditionError(f"pair recursion capped at n_max={n_max}, got n={n}")
    width0 = mpnn.feature_dims[0]
    f = np.ones((n, n, width0))
    weights = pair_message_weights(stats)
    for message, update in mpnn.layers:
        if message.is_neighbor_projection:
            m = _fast_pair_messages(graph.adjacency, f, weights)
        else:
            m = _general_pair_messages(graph.adjacency, f, message, weights)
        f = update(f, m)
        if not np.all(np.isfinite(f)):
            raise NumericalError("non-finite pair features during message passing")
    return PairEmbeddings(values=f, provenance="discrete")


def cmpnn_pair_sbm(spec: SbmSpec, mpnn: Mpnn, init=None,
                   return_layers: bool = False):
    """Exact continuous pairwise recursion over r x r block-pair states.

    g_ab = (1/(2 c_ab)) sum_c pi_c [ S_bc msg(F_ab, F_ac) + S_ac msg(F_ab, F_bc) ]
    F_ab <- upd(F_ab, g_ab)

    ``init`` defaults to all ones; pass an (r, r) or (r, r, F0) array for
    other starting signals (e.g. the edge-probability matrix itself).
    """
    r = spec.r
    c = graphon_common_neighbors(spec)
    if c.min() <= 0.0:
        raise PreconditionError(
            "pairwise recursion undefined: a block pair has zero "
            "common-neighbor fraction"
        )
    width0 = mpnn.feature_dims[0]
    if init is None:
        f = np.ones((r, r, width0))
    else:
        f = np.asarray(init, dtype=float)
        if f.ndim == 2:
            f = f[:, :, None]
        if f.shape[:2] != (r, r) or f.shape[2] != width0:
            raise ValueError(f"init must be ({r}, {r}, {width0})")
        f = f.copy()

    pi = spec.block_mass
    trace = [BlockPairEmbeddings(values=f.copy())]
    for message, update in mpnn.layers:
        fab = np.broadcast_to(f[:, :, None, :], (r, r, r, f.shape[2]))
        fac = np.broadcast_to(f[:, None, :, :], (r, r, r, f.shape[2]))
        fbc = np.broadcast_to(f[None, :, :, :], (r, r, r, f.shape[2]))
        own = message(fab, fac)   # msg(F_ab, F_ac), indexed [a, b, c]
        other = message(fab, fbc)  # msg(F_ab, F_bc)
        g = np.einsum("c,bc,abch->abh", pi, spec.S, own)
        g += np.einsum("c,ac,abch->abh", pi, spec.S, other)
        g /= 2.0 * c[:, :, None]
        f = update(f, g)
        trace.append(BlockPairEmbeddings(values=f.copy()))
    if return_layers:
        return trace
    return trace[-1]


def lift_block_pair(block_pair: BlockPairEmbeddings,
                    graph: SampledGraph) -> PairEmbeddings:
    """Expand block-pair values to per-node-pair entries."""
    if block_pair.values.shape[0] <= graph.block_of.max():
        raise ValueError("block count does not cover the graph's blocks")
    bo = graph.block_of
    return PairEmbeddings(
        values=block_pair.values[np.ix_(bo, bo)], provenance="continuous_sampled"
    )


def write_pair_embeddings_csv(emb: PairEmbeddings, path) -> None:
    """Upper triangle only: one row `i,j,f_1..f_F` per pair with i < j."""
    n, _, width = emb.values.shape
    with open(path, "w") as fh:
        fh.write("i,j," + ",".join(f"f{k + 1}" for k in range(width)) + "\n")
        for i in range(n):
            for j in range(i + 1, n):
                cells = ",".join(repr(float(v)) for v in emb.values[i, j])
                fh.write(f"{i},{j},{cells}\n")
