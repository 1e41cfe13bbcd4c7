"""Convergence and stability measurements plus the concentration-bound
constants that upper-bound the discrete-to-continuous gap.

The gap delta is the maximum (over nodes, or node pairs) sup-norm
difference between discrete embeddings and the lifted continuous ones. Its
high-probability upper bound has the form

    node:  (C1 + C2 ||f||) sqrt(log(2 n   / p)) / sqrt(n)
    pair:  (C3 + C4 ||f||) sqrt(log(2 n^2 / p)) / sqrt(n)

with constants assembled layer by layer from Lipschitz bounds and formal
biases of the message/update functions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .mpnn import NEIGHBOR_AVERAGE, N_NORMALIZED_SUM, Mpnn
from .node_mpnn import NodeEmbeddings, cmpnn_node_sbm, gmpnn_node, lift_block_embeddings
from .pair_mpnn import PairEmbeddings, cmpnn_pair_sbm, gmpnn_pair, lift_block_pair
from .rng import stream
from .sbm import SampledGraph, SbmSpec, graph_stats, graphon_degree, graphon_common_neighbors, sample_graph
from .util import parallel_map

log = logging.getLogger(__name__)

SWEEP_MODES = ("node_mean", "node_sum", "pair_fixed", "pair_net")


# --- gap metrics ------------------------------------------------------------

def delta_node(discrete: NodeEmbeddings, continuous: NodeEmbeddings) -> float:
    """Max over nodes of the sup-norm row difference."""
    a, b = discrete.values, continuous.values
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))


def delta_pair(discrete: PairEmbeddings, continuous: PairEmbeddings,
               include_diagonal: bool = False) -> float:
    """Max over node pairs of the sup-norm entry difference.

    The diagonal (i, i) is excluded by default: the empirical
    common-neighbor count of a node with itself estimates its degree, not
    the squared-kernel integral, so the diagonal gap does not shrink with n
    and is not covered by the pairwise concentration argument.
    """
    a, b = discrete.values, continuous.values
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    gaps = np.abs(a - b)
    if not include_diagonal:
        n = gaps.shape[0]
        mask = ~np.eye(n, dtype=bool)
        return float(np.max(gaps[mask]))
    return float(np.max(gaps))


# --- convergence sweep --------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRecord:
    mode: str
    n: int
    seed: int
    delta: float
    bound: float | None = None


def _sweep_one(args):
    spec, mpnn, mode, n, seed, p = args
    graph = sample_graph(spec, n, seed)
    stats = graph_stats(graph)
    if mode in ("node_mean", "node_sum"):
        agg = NEIGHBOR_AVERAGE if mode == "node_mean" else N_NORMALIZED_SUM
        net = mpnn.with_aggregation(agg)
        discrete = gmpnn_node(graph, stats, net, init="degree")
        block = cmpnn_node_sbm(spec, net, init="degree")
        delta = delta_node(discrete, lift_block_embeddings(block, graph))
        f_inf = float(np.max(np.abs(graphon_degree(spec))))
    else:
        discrete = gmpnn_pair(graph, stats, mpnn)
        block = cmpnn_pair_sbm(spec, mpnn)
        delta = delta_pair(discrete, lift_block_pair(block, graph))
        f_inf = 1.0
    bound = None
    if mode != "pair_fixed":
        bound_mode = mode if mode.startswith("node") else "pair"
        report = bound_constants(mpnn, f_inf, spec, p=p, mode=bound_mode, n=n)
        bound = report.bound_value
    return ConvergenceRecord(mode=mode, n=n, seed=seed, delta=delta, bound=bound)


def convergence_sweep(spec: SbmSpec, mpnn: Mpnn, mode: str, n_list, seeds,
                      p: float | None = None, jobs: int = 1) -> list:
    """Gap records for every (n, seed): sample, run both paths, measure.

    Matched initializations per mode: node modes start from size-normalized
    degrees (discrete) and per-block expected degrees (continuous); pair
    modes start from all ones on both sides. Fully deterministic in
    (spec, mpnn, mode, n_list, seeds).
    """
    if mode not in SWEEP_MODES:
        raise ValueError(f"mode must be one of {SWEEP_MODES}")
    spec.require_valid(pairwise=mode.startswith("pair"))
    tasks = [(spec, mpnn, mode, int(n), int(seed), p)
             for n in n_list for seed in seeds]
    return parallel_map(_sweep_one, tasks, jobs=jobs)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_values: tuple
    medians: tuple


def loglog_slope(records) -> SlopeFit:
    """Least squares on (ln n, ln median delta per n).

    Records with non-positive delta are excluded with a warning; at least
    three distinct n must remain.
    """
    by_n = {}
    for rec in records:
        if rec.delta <= 0.0:
            log.warning("excluding non-positive delta at n=%d seed=%d",
                        rec.n, rec.seed)
            continue
        by_n.setdefault(rec.n, []).append(rec.delta)
    if len(by_n) < 3:
        raise PreconditionError("need at least 3 distinct n with positive deltas")
    ns = sorted(by_n)
    medians = [float(np.median(by_n[n])) for n in ns]
    x = np.log(np.array(ns, dtype=float))
    y = np.log(np.array(medians))
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return SlopeFit(slope=float(slope), intercept=float(intercept), r_squared=r2,
                    n_values=tuple(ns), medians=tuple(medians))


# --- bound constants ------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Per-layer constants and the assembled gap bound at a given n.

    ``c_offset``/``c_scale`` are the additive and ||f||-scaling constants
    for the requested mode (C1/C2 for mean aggregation, C1s/C2s for sum,
    C3/C4 for pairwise); ``bound_value`` is their combination at ``n``.
    """

    mode: str
    n: int
    p: float
    f_inf_norm: float
    lipschitz_message: tuple
    lipschitz_update: tuple
    bias_message: tuple
    bias_update: tuple
    b1: tuple
    b2: tuple
    contraction: tuple  # K per layer
    layer_terms: tuple  # D per layer at n
    c_offset: float
    c_scale: float
    bound_value: float
    n_condition_ok: bool

    def named_constants(self) -> dict:
        names = {"node_mean": ("C1", "C2"), "node_sum": ("C1s", "C2s"),
                 "pair": ("C3", "C4")}[self.mode]
        return {names[0]: self.c_offset, names[1]: self.c_scale}


def default_probability_budget(mpnn: Mpnn, target: float = 0.01) -> float:
    """p such that the failure mass sum_l 2(H_l + 1) p equals ``target``."""
    weight = sum(2 * (h + 1) for h in mpnn.message_dims)
    return target / weight


def bound_constants(mpnn: Mpnn, f_inf_norm: float, spec: SbmSpec,
                    p: float | None = None, mode: str = "node_mean",
                    n: int = 1024) -> BoundReport:
    """Evaluate the layer recursion constants and the gap bound at n.

    Requires finite Lipschitz upper bounds for every message and update
    function. Three modes: "node_mean" (normalizes by the degree minimum),
    "node_sum" (no normalization), "pair" (normalizes by the
    common-neighbor minimum and uses the log(2 n^2 / p) rate).
    """
    if mode not in ("node_mean", "node_sum", "pair"):
        raise ValueError(f"unknown mode {mode!r}")
    if p is None:
        p = default_probability_budget(mpnn)
    l_msg, l_upd, bias_msg, bias_upd = [], [], [], []
    for message, update in mpnn.layers:
        lm, lu = message.lipschitz(), update.lipschitz()
        if lm is None or lu is None:
            raise PreconditionError(
                "bound constants need finite Lipschitz bounds for every layer"
            )
        l_msg.append(lm)
        l_upd.append(lu)
        bias_msg.append(message.formal_bias())
        bias_upd.append(update.formal_bias())

    w_sup = spec.w_sup
    if mode == "node_mean":
        denom = float(graphon_degree(spec).min())
    elif mode == "pair":
        denom = float(graphon_common_neighbors(spec).min())
    else:
        denom = None
    if mode != "node_sum" and (denom is None or denom <= 0.0):
        raise PreconditionError("degree/common-neighbor minimum must be positive")

    # Per-layer norm growth of the continuous recursion:
    #   ||f^(l)|| <= b1[l] + b2[l] ||f||.
    growth = w_sup / denom if mode != "node_sum" else w_sup
    b1, b2 = [], []
    b1_cur, b2_cur = 0.0, 1.0
    for lm, lu, bm, bu in zip(l_msg, l_upd, bias_msg, bias_upd):
        factor = lu * (1.0 + growth * lm)
        b1_cur = b1_cur * factor + lu * growth * bm + bu
        b2_cur = b2_cur * factor
        b1.append(b1_cur)
        b2.append(b2_cur)

    # Contraction factor K per layer and the shared deviation coefficient.
    contraction = []
    for lm, lu in zip(l_msg, l_upd):
        if mode == "node_sum":
            contraction.append(math.sqrt(lu ** 2 + 2.0 * lm ** 2 * lu ** 2))
        else:
            contraction.append(
                math.sqrt(lu ** 2 + (8.0 / denom ** 2) * lm ** 2 * lu ** 2)
            )
    if mode == "node_sum":
        coef = 2.0 * math.sqrt(2.0)
    else:
        coef = 4.0 * math.sqrt(2.0) / denom ** 2 + 2.0 * math.sqrt(2.0) / denom
    coef_parts = [coef] * mpnn.depth

    c_offset = 0.0
    c_scale = 0.0
    tail = 1.0
    tails = [1.0] * mpnn.depth  # prod_{l' > l} K^(l')
    for l in range(mpnn.depth - 1, -1, -1):
        tails[l] = tail
        tail *= contraction[l]
    for l in range(mpnn.depth):
        c_offset += l_upd[l] * coef_parts[l] * (l_msg[l] * b1[l] + bias_msg[l]) * tails[l]
        c_scale += l_upd[l] * coef_parts[l] * l_msg[l] * b2[l] * tails[l]

    log_term = math.log(2.0 * n * n / p) if mode == "pair" else math.log(2.0 * n / p)
    rate = math.sqrt(log_term) / math.sqrt(n)
    bound_value = (c_offset + c_scale * f_inf_norm) * rate
    layer_terms = tuple(
        l_upd[l] * coef_parts[l]
        * (l_msg[l] * (b1[l] + b2[l] * f_inf_norm) + bias_msg[l]) * rate
        for l in range(mpnn.depth)
    )

    if mode == "node_sum":
        n_condition_ok = True
    else:
        n_condition_ok = math.sqrt(n) / math.sqrt(log_term) >= 4.0 * math.sqrt(2.0) / denom

    return BoundReport(
        mode=mode, n=int(n), p=float(p), f_inf_norm=float(f_inf_norm),
        lipschitz_message=tuple(l_msg), lipschitz_update=tuple(l_upd),
        bias_message=tuple(bias_msg), bias_update=tuple(bias_upd),
        b1=tuple(b1), b2=tuple(b2), contraction=tuple(contraction),
        layer_terms=layer_terms, c_offset=float(c_offset),
        c_scale=float(c_scale), bound_value=float(bound_value),
        n_condition_ok=n_condition_ok,
    )


# --- stability histograms -----------------------------------------------------

@dataclass(frozen=True)
class IsoGapStats:
    """Per-pair maximum-coordinate embedding gaps, split by block relation."""

    gaps_iso: np.ndarray
    gaps_non_iso: np.ndarray
    quantiles: dict = field(default_factory=dict)

    @property
    def median_iso(self) -> float:
        return float(np.median(self.gaps_iso))

    @property
    def median_non_iso(self) -> float:
        return float(np.median(self.gaps_non_iso))


def _category_pools(graph: SampledGraph, iso_pairs, r: int):
    iso_set = {tuple(sorted(p)) for p in iso_pairs}
    nodes_by_block = [np.flatnonzero(graph.block_of == a) for a in range(r)]
    iso_pool, non_iso_pool = [], []
    for a in range(r):
        for b in range(a + 1, r):
            entry = (nodes_by_block[a], nodes_by_block[b])
            if (a, b) in iso_set:
                iso_pool.append(entry)
            else:
                non_iso_pool.append(entry)
    return iso_pool, non_iso_pool


def _sample_gaps(emb_values, pool, budget, rng):
    sizes = [len(ia) * len(jb) for ia, jb in pool]
    total = int(sum(sizes))
    if total == 0:
        raise PreconditionError("no node pairs available in this category")
    if budget >= total:
        flat = np.arange(total)
    else:
        flat = np.sort(rng.choice(total, size=budget, replace=False))
    offsets = np.cumsum([0] + sizes)
    gaps = np.empty(len(flat))
    for k, idx in enumerate(flat):
        which = int(np.searchsorted(offsets, idx, side="right") - 1)
        local = idx - offsets[which]
        ia, jb = pool[which]
        i = ia[local // len(jb)]
        j = jb[local % len(jb)]
        diff = emb_values[i] - emb_values[j]
        gaps[k] = np.max(np.abs(diff))
    return gaps


def iso_gap_stats(node_emb: NodeEmbeddings, graph: SampledGraph, iso_pairs,
                  sample_budget: int = 2000, seed: int = 0) -> IsoGapStats:
    """Sample per-pair embedding gaps within and outside matched-block pairs.

    "iso" pairs take one endpoint from each block of a matched pair;
    "non-iso" pairs span two distinct blocks that are not matched. When the
    budget covers a category's full pool the enumeration is exhaustive.
    """
    if not iso_pairs:
        raise PreconditionError("the model has no matched block pair")
    r = int(graph.block_of.max()) + 1
    iso_pool, non_iso_pool = _category_pools(graph, iso_pairs, r)
    if not non_iso_pool:
        raise PreconditionError("the model has no unmatched block pair")
    rng = stream(seed, "iso-gaps")
    gaps_iso = _sample_gaps(node_emb.values, iso_pool, sample_budget, rng)
    gaps_non_iso = _sample_gaps(node_emb.values, non_iso_pool, sample_budget, rng)
    qs = (0.25, 0.5, 0.75)
    quantiles = {
        "iso": {q: float(np.quantile(gaps_iso, q)) for q in qs},
        "non_iso": {q: float(np.quantile(gaps_non_iso, q)) for q in qs},
    }
    return IsoGapStats(gaps_iso=gaps_iso, gaps_non_iso=gaps_non_iso,
                       quantiles=quantiles)
