"""Link prediction: scenario construction, end-to-end training, metrics.

Protocol per run: sample a training graph, hide 10% of its edges, split the
hidden edges 80/10/10 into train/val/(transductive) test positives, and draw
equally many negatives uniformly from non-edges whose endpoints lie in two
distinct matched (interchangeable) blocks. Inductive scenarios sample a
fresh test graph, hide 10% of it, and draw the same number of test
positives from its hidden edges for comparability.

Backbones are either node networks (scored through a head on the two
endpoint embeddings) or pairwise networks (scored through a head on the
pair embedding). Training is full-batch Adam on binary cross-entropy with
model selection on validation accuracy.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, PreconditionError
from .mpnn import NEIGHBOR_AVERAGE, Mpnn
from .nn import AdamState, FeedForwardNet, adam_step, init_net, sigmoid
from .node_mpnn import gmpnn_node
from .pair_mpnn import gmpnn_pair, pair_message_weights
from .rng import child_seed, stream
from .sbm import (
    SampledGraph,
    SbmSpec,
    graph_stats,
    isomorphic_block_pairs,
    sample_graph,
)
from .util import parallel_map

log = logging.getLogger(__name__)

SCENARIOS = ("transductive", "inductive_same", "inductive_ood")
METHODS = ("node", "pair_fixed", "pair_learn", "oracle")


# --- datasets -------------------------------------------------------------------

@dataclass(frozen=True)
class LinkDataset:
    """Observed graph plus positive/negative pairs per split."""

    observed: SampledGraph
    positives: dict  # split -> (k, 2) int array
    negatives: dict  # split -> (k, 2) int array
    scenario: str


def _hide_edges(graph: SampledGraph, fraction: float, rng) -> tuple:
    """Remove a uniform fraction of edges; returns (observed, hidden edges)."""
    edges = graph.edge_list()
    m = len(edges)
    n_hide = int(math.floor(fraction * m))
    order = rng.permutation(m)
    hidden = edges[order[:n_hide]]
    adj = graph.adjacency.copy()
    adj[hidden[:, 0], hidden[:, 1]] = 0.0
    adj[hidden[:, 1], hidden[:, 0]] = 0.0
    return graph.with_adjacency(adj), hidden


def sample_across_block_nonedges(graph: SampledGraph, iso_pairs, count: int,
                                 rng) -> np.ndarray:
    """Uniform sample, without replacement, of non-edges whose endpoints lie
    in two distinct matched blocks. Fails if the pool is too small."""
    if not iso_pairs:
        raise PreconditionError("negative sampling needs a matched block pair")
    nodes_by_block = {}
    pools = []
    pool_edges = 0
    for a, b in iso_pairs:
        for blk in (a, b):
            if blk not in nodes_by_block:
                nodes_by_block[blk] = np.flatnonzero(graph.block_of == blk)
        ia, jb = nodes_by_block[a], nodes_by_block[b]
        pools.append((ia, jb))
        pool_edges += int(graph.adjacency[np.ix_(ia, jb)].sum())
    sizes = [len(ia) * len(jb) for ia, jb in pools]
    total = int(sum(sizes))
    if total - pool_edges < count:
        raise PreconditionError(
            f"across-block non-edge pool has {total - pool_edges} pairs, "
            f"need {count}"
        )
    offsets = np.cumsum([0] + sizes)
    chosen = []
    seen = set()
    attempts = 0
    max_attempts = 200 * count + 1000
    while len(chosen) < count:
        attempts += 1
        if attempts > max_attempts:
            raise PreconditionError("negative sampling stalled; pool too dense")
        idx = int(rng.integers(total))
        if idx in seen:
            continue
        seen.add(idx)
        which = int(np.searchsorted(offsets, idx, side="right") - 1)
        local = idx - offsets[which]
        ia, jb = pools[which]
        i = int(ia[local // len(jb)])
        j = int(jb[local % len(jb)])
        if graph.adjacency[i, j] > 0:
            continue
        chosen.append((i, j))
    return np.array(chosen, dtype=int)


def build_scenario(spec: SbmSpec, n_tr: int, n_te: int, seed: int,
                   scenario: str) -> tuple:
    """Construct the (train, test) datasets for one scenario and seed.

    All randomness is derived from ``seed`` through purpose-tagged streams,
    so the training split is identical across the three scenarios of the
    same seed and the whole construction is reproducible.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}")
    iso_pairs = isomorphic_block_pairs(spec)
    if not iso_pairs:
        raise PreconditionError("the model needs at least one matched block pair")

    graph_tr = sample_graph(spec, n_tr, child_seed(seed, "train-graph"))
    split_rng = stream(seed, "splits")
    observed_tr, hidden = _hide_edges(graph_tr, 0.10, split_rng)
    n_hidden = len(hidden)
    n_train = int(math.floor(0.8 * n_hidden))
    n_val = int(math.floor(0.1 * n_hidden))
    n_test = n_hidden - n_train - n_val
    pos_train = hidden[:n_train]
    pos_val = hidden[n_train : n_train + n_val]
    pos_test_reserved = hidden[n_train + n_val :]

    neg_rng = stream(seed, "negatives")
    negs = sample_across_block_nonedges(graph_tr, iso_pairs,
                                        n_train + n_val + n_test, neg_rng)
    neg_train, neg_val = negs[:n_train], negs[n_train : n_train + n_val]
    neg_test_transductive = negs[n_train + n_val :]

    train_ds = LinkDataset(
        observed=observed_tr,
        positives={"train": pos_train, "val": pos_val},
        negatives={"train": neg_train, "val": neg_val},
        scenario=scenario,
    )

    if scenario == "transductive":
        test_ds = LinkDataset(
            observed=observed_tr,
            positives={"test": pos_test_reserved},
            negatives={"test": neg_test_transductive},
            scenario=scenario,
        )
        return train_ds, test_ds

    graph_te = sample_graph(spec, n_te, child_seed(seed, f"test-graph/{scenario}"))
    te_rng = stream(seed, f"splits/{scenario}")
    observed_te, hidden_te = _hide_edges(graph_te, 0.10, te_rng)
    if len(hidden_te) < n_test:
        raise PreconditionError(
            f"test graph hides {len(hidden_te)} edges, need {n_test} positives"
        )
    pos_test = hidden_te[:n_test]
    te_neg_rng = stream(seed, f"negatives/{scenario}")
    neg_test = sample_across_block_nonedges(graph_te, iso_pairs, n_test, te_neg_rng)
    test_ds = LinkDataset(
        observed=observed_te,
        positives={"test": pos_test},
        negatives={"test": neg_test},
        scenario=scenario,
    )
    return train_ds, test_ds


# --- models --------------------------------------------------------------------

@dataclass
class LinkModel:
    """Embedding backbone plus a sigmoid-output link head.

    ``kind`` is "node" or "pair". Node backbones feed the head either the
    concatenated endpoint embeddings or their inner product; pair backbones
    feed the pair embedding directly. ``backbone_trainable`` controls
    whether gradients flow into the backbone's update nets.
    """

    kind: str
    mpnn: Mpnn
    head: FeedForwardNet
    head_input: str = "concat"  # node backbones: "concat" | "inner_product"
    tau: float = 0.5
    node_init: str = "degree"
    backbone_trainable: bool = True

    def copy(self) -> "LinkModel":
        return copy.deepcopy(self)

    def trainable_nets(self) -> list:
        nets = [self.head]
        if self.backbone_trainable:
            nets.extend(self.mpnn.trainable_nets())
        return nets


def node_link_model(spec_f0: int = 1, feature_dims=(8, 8), update_hidden=10,
                    head_hidden=(10, 10, 10), head_input="concat",
                    seed: int = 0) -> LinkModel:
    """Node backbone in the neighbor-sampling style with an MLP head."""
    from .mpnn import graphsage_mpnn

    dims = [spec_f0, *feature_dims]
    mpnn = graphsage_mpnn(dims, update_hidden=update_hidden, seed=seed,
                          aggregation=NEIGHBOR_AVERAGE)
    f_t = dims[-1]
    head_in = 2 * f_t if head_input == "concat" else 1
    head = init_net([head_in, *head_hidden, 1], "tanh", seed=seed,
                    output_activation="sigmoid", tag="init/head")
    return LinkModel(kind="node", mpnn=mpnn, head=head, head_input=head_input,
                     node_init="degree", backbone_trainable=True)


def pair_link_model(T: int = 2, learn_update: bool = False, update_hidden=5,
                    head_hidden=(10, 10, 10), seed: int = 0) -> LinkModel:
    """Pairwise backbone: fixed ratio update or a trainable update net."""
    from .pair_mpnn import fixed_psi_mpnn, learnable_psi_mpnn

    if learn_update:
        mpnn = learnable_psi_mpnn(T, hidden=update_hidden, seed=seed)
    else:
        mpnn = fixed_psi_mpnn(T)
    head = init_net([1, *head_hidden, 1], "tanh", seed=seed,
                    output_activation="sigmoid", tag="init/head")
    return LinkModel(kind="pair", mpnn=mpnn, head=head,
                     backbone_trainable=learn_update)


# --- forward/backward through the backbones -----------------------------------

def _require_projection_messages(mpnn: Mpnn) -> None:
    if not all(msg.is_neighbor_projection for msg, _ in mpnn.layers):
        raise PreconditionError(
            "end-to-end training supports neighbor-projection messages only"
        )


def _node_forward(model: LinkModel, graph: SampledGraph, stats,
                  with_cache: bool = False):
    """Discrete node embeddings; optionally caches per-layer state for backprop."""
    if not with_cache:
        emb = gmpnn_node(graph, stats, model.mpnn, init=model.node_init)
        return emb.values, None
    _require_projection_messages(model.mpnn)
    n = graph.n
    if model.mpnn.aggregation == NEIGHBOR_AVERAGE:
        weights = np.zeros(n)
        nz = stats.degrees > 0
        weights[nz] = 1.0 / (n * stats.degrees[nz])
    else:
        weights = np.full(n, 1.0 / n)
    if model.node_init == "degree":
        f = stats.degrees.reshape(-1, 1).copy()
    else:
        f = np.asarray(graph.node_features, dtype=float).copy()
    layer_caches = []
    for message, update in model.mpnn.layers:
        m = (graph.adjacency @ f) * weights[:, None]
        u = np.concatenate([f, m], axis=-1)
        out, cache = update.net.forward_cache(u)
        layer_caches.append((cache, f.shape[1]))
        f = out
    return f, (layer_caches, weights)


def _node_backward(model: LinkModel, graph: SampledGraph, state, d_emb):
    """Gradients of the scalar loss w.r.t. each update net's parameters."""
    layer_caches, weights = state
    grads_per_layer = [None] * len(layer_caches)
    delta = d_emb
    for t in range(len(layer_caches) - 1, -1, -1):
        cache, f_width = layer_caches[t]
        _, update = model.mpnn.layers[t]
        param_grads, d_u = update.net.backward(cache, delta)
        grads_per_layer[t] = param_grads
        d_f = d_u[:, :f_width]
        d_m = d_u[:, f_width:]
        delta = d_f + graph.adjacency @ (d_m * weights[:, None])
    return grads_per_layer


def _pair_forward(model: LinkModel, graph: SampledGraph, stats,
                  with_cache: bool = False):
    """Dense pairwise embeddings; optionally caches per-layer state."""
    if not with_cache:
        emb = gmpnn_pair(graph, stats, model.mpnn)
        return emb.values, None
    _require_projection_messages(model.mpnn)
    n = graph.n
    weights = pair_message_weights(stats)
    f = np.ones((n, n, model.mpnn.feature_dims[0]))
    layer_caches = []
    for message, update in model.mpnn.layers:
        m = np.empty_like(f)
        for k in range(f.shape[2]):
            fk = f[:, :, k]
            m[:, :, k] = (fk @ graph.adjacency + graph.adjacency @ fk) * weights
        u = np.concatenate([f, m], axis=-1)
        out, cache = update.net.forward_cache(u)
        layer_caches.append((cache, f.shape[2]))
        f = out
    return f, (layer_caches, weights)


def _pair_backward(model: LinkModel, graph: SampledGraph, state, d_emb):
    layer_caches, weights = state
    grads_per_layer = [None] * len(layer_caches)
    delta = d_emb
    for t in range(len(layer_caches) - 1, -1, -1):
        cache, f_width = layer_caches[t]
        _, update = model.mpnn.layers[t]
        param_grads, d_u = update.net.backward(cache, delta)
        grads_per_layer[t] = param_grads
        d_f = d_u[:, :, :f_width]
        d_m = d_u[:, :, f_width:]
        prev = d_f.copy()
        for k in range(f_width):
            g = d_m[:, :, k] * weights
            prev[:, :, k] += g @ graph.adjacency + graph.adjacency @ g
        delta = prev
    return grads_per_layer


def _head_inputs(model: LinkModel, emb, pairs):
    i, j = pairs[:, 0], pairs[:, 1]
    if model.kind == "pair":
        return emb[i, j]
    if model.head_input == "concat":
        return np.concatenate([emb[i], emb[j]], axis=-1)
    return np.sum(emb[i] * emb[j], axis=-1, keepdims=True)


def backbone_embeddings(model: LinkModel, graph: SampledGraph, stats=None):
    if stats is None:
        stats = graph_stats(graph)
    forward = _node_forward if model.kind == "node" else _pair_forward
    emb, _ = forward(model, graph, stats)
    return emb


def model_scores(model: LinkModel, graph: SampledGraph, pairs,
                 stats=None) -> np.ndarray:
    """Head probabilities for the given pairs on the given observed graph."""
    emb = backbone_embeddings(model, graph, stats)
    return model.head.forward(_head_inputs(model, emb, pairs)).reshape(-1)


def _loss_and_grads(model: LinkModel, graph: SampledGraph, stats, pairs,
                    labels, frozen_emb=None):
    """Cross-entropy over the given pairs and its exact parameter gradients.

    Gradients are ordered like ``model.trainable_nets()`` parameters: head
    first, then backbone update nets layer by layer (when trainable).
    Returns (loss, grads, embeddings-at-current-parameters).
    """
    if frozen_emb is not None:
        emb, bb_state = frozen_emb, None
    elif model.kind == "node":
        emb, bb_state = _node_forward(model, graph, stats, with_cache=True)
    else:
        emb, bb_state = _pair_forward(model, graph, stats, with_cache=True)

    head_in = _head_inputs(model, emb, pairs)
    _, cache = model.head.forward_cache(head_in)
    logits = cache[1][-1].reshape(-1)
    loss, d_logits = _bce_loss_and_grad(logits, labels)
    head_grads, d_head_in = model.head.backward_from_logits(
        cache, d_logits.reshape(-1, 1)
    )
    grads = list(head_grads)
    if model.backbone_trainable:
        d_emb = np.zeros_like(emb)
        i, j = pairs[:, 0], pairs[:, 1]
        if model.kind == "pair":
            np.add.at(d_emb, (i, j), d_head_in)
        elif model.head_input == "concat":
            f_t = emb.shape[1]
            np.add.at(d_emb, i, d_head_in[:, :f_t])
            np.add.at(d_emb, j, d_head_in[:, f_t:])
        else:
            np.add.at(d_emb, i, d_head_in * emb[j])
            np.add.at(d_emb, j, d_head_in * emb[i])
        if model.kind == "node":
            layer_grads = _node_backward(model, graph, bb_state, d_emb)
        else:
            layer_grads = _pair_backward(model, graph, bb_state, d_emb)
        for g in layer_grads:
            grads.extend(g)
    return loss, grads, emb


# --- training --------------------------------------------------------------------

@dataclass
class TrainLog:
    losses: list = field(default_factory=list)
    val_accuracies: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = -1.0


def _bce_loss_and_grad(logits, labels):
    # softplus(z) - y z, stable for large |z|
    loss = float(np.mean(np.maximum(logits, 0.0) - logits * labels
                         + np.log1p(np.exp(-np.abs(logits)))))
    grad = (sigmoid(logits) - labels) / logits.shape[0]
    return loss, grad


def _gather_params(nets):
    params = []
    for net in nets:
        params.extend(net.parameters())
    return params


def _scatter_params(nets, params):
    offset = 0
    for net in nets:
        k = 2 * len(net.weights)
        net.set_parameters(params[offset : offset + k])
        offset += k


def train_link_model(model: LinkModel, dataset: LinkDataset, epochs: int = 200,
                     lr: float = 1e-3, seed: int = 0) -> tuple:
    """Full-batch Adam on cross-entropy; returns (best model, train log).

    Validation accuracy at the model threshold is evaluated after every
    epoch; the returned model carries the parameters of the best epoch
    (earliest on ties). Non-finite losses abort with a NumericalError.
    """
    model = model.copy()
    graph = dataset.observed
    stats = graph_stats(graph)
    pos_tr, neg_tr = dataset.positives["train"], dataset.negatives["train"]
    pos_val, neg_val = dataset.positives["val"], dataset.negatives["val"]
    train_pairs = np.concatenate([pos_tr, neg_tr], axis=0)
    labels = np.concatenate([np.ones(len(pos_tr)), np.zeros(len(neg_tr))])

    nets = model.trainable_nets()
    params = _gather_params(nets)
    state = AdamState.for_parameters(params, lr=lr)
    log_out = TrainLog()

    frozen_backbone_emb = None
    if not model.backbone_trainable:
        frozen_backbone_emb = backbone_embeddings(model, graph, stats)

    def val_accuracy(emb) -> float:
        scores_p = model.head.forward(_head_inputs(model, emb, pos_val)).reshape(-1)
        scores_n = model.head.forward(_head_inputs(model, emb, neg_val)).reshape(-1)
        correct = int(np.sum(scores_p > model.tau)) + int(np.sum(scores_n <= model.tau))
        return correct / (len(scores_p) + len(scores_n))

    best = None  # (val_acc, epoch, params); strict improvement keeps ties early

    for epoch in range(epochs + 1):
        if epoch == epochs:
            if frozen_backbone_emb is not None:
                emb = frozen_backbone_emb
            else:
                emb = backbone_embeddings(model, graph, stats)
        else:
            loss, grads, emb = _loss_and_grads(
                model, graph, stats, train_pairs, labels,
                frozen_emb=frozen_backbone_emb,
            )
            if not np.isfinite(loss):
                log.error("training diverged at epoch %d (loss=%r)", epoch, loss)
                raise NumericalError(f"non-finite loss at epoch {epoch}")
            log_out.losses.append(loss)

        # Accuracy of the parameters produced by `epoch` completed epochs.
        acc = val_accuracy(emb)
        log_out.val_accuracies.append(acc)
        if best is None or acc > best[0]:
            best = (acc, epoch - 1, [p.copy() for p in params])
        if epoch == epochs:
            break

        params = adam_step(params, grads, state)
        _scatter_params(nets, params)

    log_out.best_val_accuracy, log_out.best_epoch = best[0], best[1]
    _scatter_params(nets, best[2])
    return model, log_out


# --- scoring and metrics -----------------------------------------------------------

def oracle_scores(spec: SbmSpec, graph: SampledGraph, pairs) -> np.ndarray:
    """Edge probabilities read off the generating model."""
    pairs = np.asarray(pairs, dtype=int)
    return spec.S[graph.block_of[pairs[:, 0]], graph.block_of[pairs[:, 1]]]


def evaluate(scores_pos, scores_neg, tau: float = 0.5,
             k_list=(10, 50, 100)) -> dict:
    """Ranking and threshold metrics for one scored test split.

    hits@K counts positives strictly above the K-th largest negative score
    (ties count as failure). mcc and balanced accuracy come from the
    confusion matrix of "predict a link iff score > tau"; mcc is 0 when its
    denominator vanishes.
    """
    scores_pos = np.asarray(scores_pos, dtype=float)
    scores_neg = np.asarray(scores_neg, dtype=float)
    if scores_pos.size == 0 or scores_neg.size == 0:
        raise PreconditionError("need non-empty positive and negative scores")
    metrics = {}
    neg_sorted = np.sort(scores_neg)[::-1]
    for k in k_list:
        if k > scores_neg.size:
            raise PreconditionError(f"hits@{k} needs at least {k} negatives")
        metrics[f"hits@{k}"] = float(np.mean(scores_pos > neg_sorted[k - 1]))
    tp = int(np.sum(scores_pos > tau))
    fn = scores_pos.size - tp
    fp = int(np.sum(scores_neg > tau))
    tn = scores_neg.size - fp
    denom = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = 0.0 if denom == 0.0 else (tp * tn - fp * fn) / denom
    metrics["mcc"] = float(mcc)
    metrics["balanced_accuracy"] = 0.5 * (tp / (tp + fn) + tn / (tn + fp))
    return metrics


# --- the full table ----------------------------------------------------------------

@dataclass(frozen=True)
class RunTableConfig:
    spec: SbmSpec
    n_train: int = 500
    n_test_ood: int = 2000
    runs: int = 10
    seed: int = 0
    methods: tuple = METHODS
    scenarios: tuple = SCENARIOS
    epochs_head: int = 200
    epochs_end_to_end: int = 200
    lr: float = 1e-3
    node_feature_dims: tuple = (8, 8)
    node_update_hidden: int = 10
    head_hidden: tuple = (10, 10, 10)
    head_input: str = "concat"
    pair_layers: int = 2
    pair_update_hidden: int = 5
    k_list: tuple = (10, 50, 100)
    jobs: int = 1


@dataclass
class EvalReport:
    """Per-(scenario, method, metric) means and deviations over runs."""

    values: dict  # (scenario, method) -> {metric: [per-run floats]}
    runs: int
    k_list: tuple

    def mean_std(self, scenario, method, metric) -> tuple:
        vals = np.array(self.values[(scenario, method)][metric])
        std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        return float(vals.mean()), std

    def metric_names(self) -> list:
        return [f"hits@{k}" for k in self.k_list] + ["mcc", "balanced_accuracy"]

    def csv_rows(self) -> list:
        from .util import format_float

        rows = []
        for (scenario, method) in sorted(self.values):
            for metric in self.metric_names():
                mean, std = self.mean_std(scenario, method, metric)
                rows.append([scenario, method, metric, format_float(mean),
                             format_float(std), self.runs])
        return rows

    def format_table(self) -> str:
        metrics = self.metric_names()
        header = ["scenario", "method"] + metrics
        lines = []
        rows = []
        for (scenario, method) in sorted(self.values):
            cells = [scenario, method]
            for metric in metrics:
                mean, std = self.mean_std(scenario, method, metric)
                cells.append(f"{mean:.4f}({std:.4f})")
            rows.append(cells)
        widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]
        for r in [header] + rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
        return "\n".join(lines)


def _train_models_for_run(config: RunTableConfig, train_ds: LinkDataset,
                          run_seed: int) -> dict:
    models = {}
    if "node" in config.methods:
        model = node_link_model(
            feature_dims=config.node_feature_dims,
            update_hidden=config.node_update_hidden,
            head_hidden=config.head_hidden,
            head_input=config.head_input,
            seed=child_seed(run_seed, "model/node"),
        )
        models["node"], _ = train_link_model(
            model, train_ds, epochs=config.epochs_end_to_end, lr=config.lr
        )
    if "pair_fixed" in config.methods:
        model = pair_link_model(
            T=config.pair_layers, learn_update=False,
            head_hidden=config.head_hidden,
            seed=child_seed(run_seed, "model/pair-fixed"),
        )
        models["pair_fixed"], _ = train_link_model(
            model, train_ds, epochs=config.epochs_head, lr=config.lr
        )
    if "pair_learn" in config.methods:
        model = pair_link_model(
            T=config.pair_layers, learn_update=True,
            update_hidden=config.pair_update_hidden,
            head_hidden=config.head_hidden,
            seed=child_seed(run_seed, "model/pair-learn"),
        )
        models["pair_learn"], _ = train_link_model(
            model, train_ds, epochs=config.epochs_end_to_end, lr=config.lr
        )
    return models


def _run_one(args) -> dict:
    config, run_seed = args
    spec = config.spec
    out = {}
    scenario_data = {}
    for scenario in config.scenarios:
        n_te = {"transductive": config.n_train,
                "inductive_same": config.n_train,
                "inductive_ood": config.n_test_ood}[scenario]
        scenario_data[scenario] = build_scenario(spec, config.n_train, n_te,
                                                 run_seed, scenario)
    train_ds = scenario_data[config.scenarios[0]][0]
    models = _train_models_for_run(config, train_ds, run_seed)

    for scenario in config.scenarios:
        _, test_ds = scenario_data[scenario]
        pos, neg = test_ds.positives["test"], test_ds.negatives["test"]
        test_stats = graph_stats(test_ds.observed)
        for method in config.methods:
            if method == "oracle":
                sp = oracle_scores(spec, test_ds.observed, pos)
                sn = oracle_scores(spec, test_ds.observed, neg)
            else:
                model = models[method]
                sp = model_scores(model, test_ds.observed, pos, test_stats)
                sn = model_scores(model, test_ds.observed, neg, test_stats)
            out[(scenario, method)] = evaluate(sp, sn, tau=0.5,
                                               k_list=config.k_list)
    return out


def run_table(config: RunTableConfig) -> EvalReport:
    """Execute the full protocol over independent runs and aggregate."""
    config.spec.require_valid(pairwise=True)
    tasks = [(config, child_seed(config.seed, f"run/{r}"))
             for r in range(config.runs)]
    per_run = parallel_map(_run_one, tasks, jobs=config.jobs)
    values = {}
    for result in per_run:
        for key, metrics in result.items():
            bucket = values.setdefault(key, {})
            for metric, v in metrics.items():
                bucket.setdefault(metric, []).append(v)
    return EvalReport(values=values, runs=config.runs, k_list=config.k_list)
