"""Block random-graph models: specification, sampling, and exact statistics.

A model is a symmetric block matrix of edge probabilities `S`, block masses
`block_mass` partitioning [0, 1], and a per-block signal matrix `B`. Nodes
draw latent positions uniformly on [0, 1]; the position determines the block
and hence the edge probability to every other node.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, SpecValidationError
from .rng import stream

log = logging.getLogger(__name__)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SbmSpec:
    """Block random-graph model.

    Parameters
    ----------
    block_mass : (r,) probabilities of each block (must sum to 1).
    S : (r, r) symmetric matrix of edge probabilities in [0, 1].
    B : (r, F0) per-block signal values.
    """

    block_mass: np.ndarray
    S: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        bm = _freeze(np.asarray(self.block_mass, dtype=float).reshape(-1))
        S = _freeze(np.asarray(self.S, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        B = _freeze(B)
        r = bm.shape[0]
        if S.shape != (r, r):
            raise ValueError(f"S must be ({r}, {r}), got {S.shape}")
        if B.shape[0] != r:
            raise ValueError(f"B must have {r} rows, got {B.shape[0]}")
        object.__setattr__(self, "block_mass", bm)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "B", B)

    @property
    def r(self) -> int:
        return self.block_mass.shape[0]

    @property
    def F0(self) -> int:
        return self.B.shape[1]

    @property
    def boundaries(self) -> np.ndarray:
        """Interval right endpoints t_1..t_r with t_r = cumulative mass."""
        return np.cumsum(self.block_mass)

    @property
    def w_sup(self) -> float:
        """Supremum of the underlying edge-probability function."""
        return float(np.max(self.S))

    def require_valid(self, pairwise: bool = False) -> None:
        report = validate_sbm(self)
        if not report.ok:
            raise SpecValidationError("; ".join(report.violations))
        if report.d_min <= 0.0:
            raise SpecValidationError("zero minimum block degree")
        if pairwise and report.d_cmin <= 0.0:
            raise SpecValidationError(
                "zero minimum common-neighbor fraction; pairwise recursion undefined"
            )

    def save(self, path) -> None:
        write_spec_file(self, path)

    @classmethod
    def load(cls, path) -> "SbmSpec":
        return read_spec_file(path)


@dataclass(frozen=True)
class ValidationReport:
    d_min: float
    d_cmin: float
    node_use_ok: bool
    pair_use_ok: bool
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_sbm(spec: SbmSpec) -> ValidationReport:
    """Check model invariants and compute the exact degree minima.

    Violations are collected (not raised) so a caller can report all of
    them at once. ``node_use_ok`` requires d_min > 0 (mean aggregation
    divides by the block degree), ``pair_use_ok`` requires d_cmin > 0.
    """
    violations = []
    bm, S = spec.block_mass, spec.S
    if np.any(bm <= 0):
        violations.append("block_mass entries must be strictly positive")
    if abs(bm.sum() - 1.0) > 1e-12:
        violations.append(f"block_mass must sum to 1 (got {bm.sum()!r})")
    if not np.array_equal(S, S.T):
        violations.append("S must be symmetric")
    if np.any(S < 0.0) or np.any(S > 1.0):
        violations.append("S entries must lie in [0, 1]")
    if np.any(~np.isfinite(spec.B)):
        violations.append("B entries must be finite")

    d = graphon_degree(spec)
    c = graphon_common_neighbors(spec)
    d_min = float(d.min())
    d_cmin = float(c.min())
    return ValidationReport(
        d_min=d_min,
        d_cmin=d_cmin,
        node_use_ok=(not violations) and d_min > 0.0,
        pair_use_ok=(not violations) and d_cmin > 0.0,
        violations=tuple(violations),
    )


def graphon_degree(spec: SbmSpec) -> np.ndarray:
    """Per-block expected degree: d(a) = sum_b pi_b S_ab."""
    return spec.S @ spec.block_mass


def graphon_common_neighbors(spec: SbmSpec) -> np.ndarray:
    """Per-block-pair common-neighbor fraction: c(a,b) = sum_c pi_c S_ac S_bc."""
    return (spec.S * spec.block_mass) @ spec.S.T


def isomorphic_block_pairs(spec: SbmSpec, tol: float = 1e-9) -> list:
    """All unordered block pairs {a, b} the model cannot distinguish.

    A pair qualifies when the masses agree, swapping a and b leaves S
    unchanged entrywise, and the block signals agree, all within ``tol``.
    """
    pairs = []
    r = spec.r
    for a in range(r):
        for b in range(a + 1, r):
            if abs(spec.block_mass[a] - spec.block_mass[b]) > tol:
                continue
            perm = np.arange(r)
            perm[a], perm[b] = b, a
            S_swapped = spec.S[np.ix_(perm, perm)]
            if np.max(np.abs(S_swapped - spec.S)) > tol:
                continue
            if np.max(np.abs(spec.B[a] - spec.B[b])) > tol:
                continue
            pairs.append((a, b))
    return pairs


@dataclass(frozen=True)
class SampledGraph:
    """One graph drawn from an SbmSpec. Arrays are read-only after sampling."""

    n: int
    positions: np.ndarray
    block_of: np.ndarray
    adjacency: np.ndarray
    node_features: np.ndarray
    seed: int

    def with_adjacency(self, adjacency: np.ndarray) -> "SampledGraph":
        """Copy of this graph with edges replaced (e.g. after hiding some)."""
        adjacency = _freeze(np.asarray(adjacency, dtype=float))
        return dataclasses.replace(self, adjacency=adjacency)

    def edge_list(self) -> np.ndarray:
        """(m, 2) array of undirected edges i < j."""
        iu, ju = np.triu_indices(self.n, k=1)
        mask = self.adjacency[iu, ju] > 0
        return np.column_stack([iu[mask], ju[mask]])


def sample_graph(spec: SbmSpec, n: int, seed: int) -> SampledGraph:
    """Draw one n-node graph: i.i.d. positions, one Bernoulli per pair.

    Positions come from the "positions" stream, edge coins from the "edges"
    stream, both keyed by ``seed``; the draw is a pure function of
    (spec, n, seed). Each unordered pair {i, j} with i < j receives a
    single coin mirrored to both adjacency entries; the diagonal stays 0.
    """
    if n < 2:
        raise PreconditionError(f"need n >= 2, got {n}")
    spec.require_valid()
    positions = stream(seed, "positions").random(n)
    block_of = np.searchsorted(spec.boundaries[:-1], positions, side="right")

    adj = np.zeros((n, n), dtype=float)
    edges_rng = stream(seed, "edges")
    for i in range(n - 1):
        z = edges_rng.random(n - 1 - i)
        adj[i, i + 1 :] = z < spec.S[block_of[i], block_of[i + 1 :]]
    adj += adj.T

    features = spec.B[block_of]
    return SampledGraph(
        n=n,
        positions=_freeze(positions),
        block_of=_freeze(block_of),
        adjacency=_freeze(adj),
        node_features=_freeze(features),
        seed=int(seed),
    )


class GraphStats:
    """Size-normalized degrees and the common-neighbor fraction matrix.

    ``degrees[i] = (1/n) sum_j A_ij`` exactly. ``common_neighbors[i, j] =
    (1/n) sum_z A_iz A_jz`` with entries that would be zero replaced by
    ``1/n`` so pairwise aggregation never divides by zero. The matrix is
    computed lazily (it is an n x n product) and cached.
    """

    def __init__(self, graph: SampledGraph):
        self._graph = graph
        self.n = graph.n
        self.degrees = _freeze(graph.adjacency.mean(axis=1))
        self._common = None

    @property
    def common_neighbors(self) -> np.ndarray:
        if self._common is None:
            a = self._graph.adjacency
            c = (a @ a) / self.n
            c[c == 0.0] = 1.0 / self.n
            self._common = _freeze(c)
        return self._common


def graph_stats(graph: SampledGraph) -> GraphStats:
    return GraphStats(graph)


# --- flat key-value serialization -------------------------------------------

def _format_row_major(a: np.ndarray) -> str:
    return "[" + ", ".join(repr(float(v)) for v in np.asarray(a).reshape(-1)) + "]"


def write_spec_file(spec: SbmSpec, path) -> None:
    lines = [
        f"r = {spec.r}",
        f"block_mass = {_format_row_major(spec.block_mass)}",
        f"S = {_format_row_major(spec.S)}",
        f"B = {_format_row_major(spec.B)}",
        "",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def _parse_floats(text: str) -> np.ndarray:
    text = text.strip().lstrip("[").rstrip("]")
    parts = [p for p in text.replace(",", " ").split() if p]
    return np.array([float(p) for p in parts])


def read_spec_file(path) -> SbmSpec:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpecValidationError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    missing = {"r", "block_mass", "S", "B"} - set(values)
    if missing:
        raise SpecValidationError(f"{path}: missing keys: {sorted(missing)}")
    r = int(values["r"])
    block_mass = _parse_floats(values["block_mass"])
    S = _parse_floats(values["S"])
    B = _parse_floats(values["B"])
    if block_mass.shape[0] != r:
        raise SpecValidationError(f"{path}: block_mass must have {r} entries")
    if S.shape[0] != r * r:
        raise SpecValidationError(f"{path}: S must have {r * r} entries (row-major)")
    if B.shape[0] % r != 0:
        raise SpecValidationError(f"{path}: B length must be a multiple of {r}")
    return SbmSpec(block_mass=block_mass, S=S.reshape(r, r), B=B.reshape(r, -1))


def write_edge_list(graph: SampledGraph, edges_path, blocks_path=None) -> None:
    """Dump edges as '<i> <j>' per line (0-indexed) plus a block column file."""
    edges = graph.edge_list()
    with open(edges_path, "w") as fh:
        for i, j in edges:
            fh.write(f"{i} {j}\n")
    if blocks_path is not None:
        with open(blocks_path, "w") as fh:
            for b in graph.block_of:
                fh.write(f"{b}\n")
