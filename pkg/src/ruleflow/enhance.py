"""Threshold and topology enhancement: constrained retraining of a compiled
rule network, regularized toward the user's tree by a behavior term and a
differentiable tree-distance proxy, plus the direct fine-tuning baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ted as ted_mod
from .compile import ParseConfig, parse
from .data import TAG_TEST, TAG_TRAIN, Dataset, accuracy
from .distill import distill, faithfulness, tune_depth
from .network import (AdamState, Layer, Network, TrainConfig, adam_step,
                      cross_entropy, random_network, train_supervised)
from .ted import CostConfig, EditOp, TedResult
from .tree import DecisionTree

LAMBDA_B_MAX = 1.0
# TED is measured in edits (order ~10) while CE sits around one nat; the
# ceiling keeps both terms the same order at initialization.
LAMBDA_T_MAX = 0.1

PROXY_MIN_PAIRS = 8
PROXY_FIT_STEPS = 200
PROXY_LR = 1e-3


class EnhanceError(ValueError):
    pass


@dataclass
class Constraints:
    prediction_similarity: int = 50
    structure_similarity: int = 50
    locked_nodes: set[int] = field(default_factory=set)
    restricted_nodes: set[int] = field(default_factory=set)

    def __post_init__(self):
        if not (0 <= self.prediction_similarity <= 100
                and 0 <= self.structure_similarity <= 100):
            raise EnhanceError("slider values must lie in 0..100")


def map_sliders(c: Constraints) -> tuple[float, float]:
    """Linear slider-to-weight map; see LAMBDA_*_MAX for the scales."""
    return (c.prediction_similarity / 100.0 * LAMBDA_B_MAX,
            c.structure_similarity / 100.0 * LAMBDA_T_MAX)


class ProxyModel:
    """Small regressor from flattened network parameters to predicted tree
    distance, with its own optimizer state and a replay buffer.

    Raw parameter vectors mix wildly different scales (steepness-scaled layer-1
    entries vs. near-zero padding), so inputs are standardized against buffer
    statistics; the standardization is refreshed at each refit and is a fixed
    affine map in between, so gradients w.r.t. theta stay exact.
    """

    def __init__(self, n_params: int, hidden: int = 64, seed: int = 0):
        self.n_params = n_params
        self.hidden = hidden
        self.seed = seed
        self.net = None
        self.state = None
        self.mu = np.zeros(n_params)
        self.sigma = np.ones(n_params)
        self.buffer: list[tuple[np.ndarray, float]] = []
        self.fitted = False

    def add(self, theta: np.ndarray, d: float) -> None:
        self.buffer.append((theta.copy(), float(d)))

    def _normalize(self, theta: np.ndarray) -> np.ndarray:
        return (theta - self.mu) / self.sigma

    def fit(self, steps: int = PROXY_FIT_STEPS) -> None:
        if len(self.buffer) < PROXY_MIN_PAIRS:
            return
        thetas = np.stack([t for t, _ in self.buffer])
        y = np.array([d for _, d in self.buffer])
        self.mu = thetas.mean(axis=0)
        self.sigma = np.maximum(thetas.std(axis=0), 1e-6)
        X = self._normalize(thetas)
        # fresh regressor each refit (cheap at this scale, never dead)
        self.net = random_network([self.n_params, self.hidden, self.hidden, 1],
                                  ["relu", "relu", "relu"], seed=self.seed,
                                  scale=1.0 / np.sqrt(max(self.n_params, 1)))
        self.net.layers[-1].biases[:] = max(float(y.mean()), 0.1)
        self.state = AdamState(len(self.net.param_vector()),
                               TrainConfig(learning_rate=PROXY_LR, epochs=1))
        for _ in range(steps):
            zs, acts, out = self.net.forward(X)
            pred = out[:, 0]
            grad_out = (2.0 * (pred - y) / len(y))[:, None]
            gw, gb, gtau, _ = self.net.backward(zs, acts, grad_out)
            adam_step(self.net, gw, gb, gtau, self.state)
        self.fitted = True

    def predict(self, theta: np.ndarray) -> float:
        x = np.atleast_2d(self._normalize(theta))
        _, _, out = self.net.forward(x)
        return float(out[0, 0])

    def input_gradient(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        """Value and d(prediction)/d(theta); proxy parameters stay untouched."""
        zs, acts, out = self.net.forward(self._normalize(theta)[None, :])
        _, _, _, gx = self.net.backward(zs, acts, np.ones((1, 1)))
        return float(out[0, 0]), gx[0] / self.sigma


def fit_proxy(proxy: ProxyModel, snapshots=None, steps: int = PROXY_FIT_STEPS) -> ProxyModel:
    if snapshots:
        for theta, d in snapshots:
            proxy.add(theta, d)
    proxy.fit(steps)
    return proxy


def composite_loss(net: Network, X: np.ndarray, y: np.ndarray,
                   user_tree: DecisionTree, proxy: ProxyModel | None,
                   lambda_b: float, lambda_t: float):
    """Data CE + lambda_b * CE against the user tree's hard labels
    + lambda_t * proxy-predicted tree distance.  Returns
    (total, (gw, gb, gtau), parts)."""
    zs, acts, out = net.forward(X)
    l_data, g_data = cross_entropy(out, y)
    grad_out = g_data
    l_beh = 0.0
    if lambda_b > 0:
        tree_labels = user_tree.evaluate_batch(X)
        l_beh, g_beh = cross_entropy(out, tree_labels)
        grad_out = grad_out + lambda_b * g_beh
    gw, gb, gtau, _ = net.backward(zs, acts, grad_out)
    l_top = 0.0
    if lambda_t > 0:
        if proxy is None or not proxy.fitted:
            raise EnhanceError("topology term requested but proxy is unfit")
        d_hat, g_theta = proxy.input_gradient(net.param_vector())
        l_top = d_hat
        pw, pb, ptau = net.vector_to_grads(lambda_t * g_theta)
        gw = [a + b for a, b in zip(gw, pw)]
        gb = [a + b for a, b in zip(gb, pb)]
        gtau = gtau + ptau
    total = l_data + lambda_b * l_beh + lambda_t * l_top
    return total, (gw, gb, gtau), {"L_data": l_data, "L_behavior": l_beh,
                                   "L_topology": l_top}


@dataclass
class EnhanceResult:
    network: Network
    tree: DecisionTree
    script: list[EditOp]
    ted: TedResult
    metrics: dict
    history: list[dict]
    warning: str | None = None


def _training_rows(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    sub = ds.select(split=TAG_TRAIN)
    if len(sub) == 0:
        sub = ds
    if len(sub) == 0:
        raise EnhanceError("empty training data")
    return sub.rows, sub.labels


def _tree_metrics(tree: DecisionTree, net: Network, ds: Dataset,
                  X_train: np.ndarray) -> dict:
    metrics = {"faithfulness_train": faithfulness(net, tree, X_train)}
    for name, split in (("train", TAG_TRAIN), ("test", TAG_TEST)):
        sub = ds.select(split=split)
        if len(sub):
            metrics[f"tree_acc_{name}"] = accuracy(tree.evaluate, sub)
            metrics[f"net_acc_{name}"] = float(
                np.mean(net.predict(sub.rows) == sub.labels))
    return metrics


def enhance_thresholds(user_tree: DecisionTree, ds: Dataset,
                       cfg: TrainConfig = TrainConfig(),
                       constraints: Constraints = Constraints(),
                       parse_cfg: ParseConfig = ParseConfig(),
                       on_epoch=None) -> EnhanceResult:
    """Retrain only the shared threshold parameters; topology cannot drift.

    Thresholds are read back from the trained tau vector, so the result tree
    is the user tree with (at most) its thresholds moved.
    """
    X, y = _training_rows(ds)
    net = parse(user_tree, len(ds.schema), parse_cfg)
    net.set_freeze("biases_layer1_only")
    for nid in constraints.locked_nodes:
        net.lock_node(nid)

    internal = user_tree.internal_nodes()
    warning = None
    history: list[dict] = []
    if internal and set(constraints.locked_nodes) >= set(internal):
        warning = "all nodes locked; thresholds unchanged"
    else:
        rng = np.random.default_rng(cfg.seed)
        state = AdamState(len(net.param_vector()), cfg)
        for _ in range(cfg.epochs):
            order = rng.permutation(len(X))
            losses = []
            for s in range(0, len(X), cfg.batch_size):
                idx = order[s:s + cfg.batch_size]
                zs, acts, out = net.forward(X[idx])
                loss, gout = cross_entropy(out, y[idx])
                gw, gb, gtau, _ = net.backward(zs, acts, gout)
                adam_step(net, gw, gb, gtau, state)
                losses.append(loss)
            history.append({"L_data": float(np.mean(losses)),
                            "L_behavior": 0.0, "L_topology": 0.0})
            if on_epoch is not None:
                on_epoch(len(history), history[-1])

    result_tree = user_tree
    for nid, t in net.thresholds().items():
        result_tree = result_tree.with_threshold(nid, float(np.clip(t, 0.0, 1.0)))
    ted_res = ted_mod.distance(user_tree, result_tree)
    metrics = _tree_metrics(result_tree, net, ds, X)
    metrics["ted_to_user"] = ted_res.distance
    return EnhanceResult(net, result_tree, ted_res.script, ted_res, metrics,
                         history, warning)


def enhance_topology(user_tree: DecisionTree, ds: Dataset,
                     cfg: TrainConfig = TrainConfig(),
                     constraints: Constraints = Constraints(),
                     parse_cfg: ParseConfig = ParseConfig(),
                     cost: CostConfig = CostConfig(),
                     max_depth: int = 4, max_leaves: int = 16,
                     on_epoch=None) -> EnhanceResult:
    """Full retraining with the composite loss, alternating per epoch between
    snapshotting (theta, measured distance) pairs, refitting the distance
    proxy, and one epoch of gradient descent."""
    X, y = _training_rows(ds)
    lambda_b, lambda_t = map_sliders(constraints)
    net = parse(user_tree, len(ds.schema), parse_cfg)
    net.set_freeze("none")
    for nid in constraints.locked_nodes:
        net.lock_node(nid)

    proxy = ProxyModel(len(net.param_vector()), seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    state = AdamState(len(net.param_vector()), cfg)
    history: list[dict] = []

    def measured_distance() -> float:
        snap_tree, _ = distill(net, ds, X, max_depth=max_depth,
                               max_leaves=max_leaves)
        return ted_mod.distance(user_tree, snap_tree, cost,
                                restricted=constraints.restricted_nodes).distance

    for _ in range(cfg.epochs):
        if lambda_t > 0:
            proxy.add(net.param_vector(), measured_distance())
            proxy.fit()
        lt = lambda_t if proxy.fitted else 0.0
        order = rng.permutation(len(X))
        parts_sum = {"L_data": 0.0, "L_behavior": 0.0, "L_topology": 0.0}
        n_batches = 0
        for s in range(0, len(X), cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            _, (gw, gb, gtau), parts = composite_loss(
                net, X[idx], y[idx], user_tree, proxy, lambda_b, lt)
            adam_step(net, gw, gb, gtau, state)
            for key in parts_sum:
                parts_sum[key] += parts[key]
            n_batches += 1
        history.append({k: v / n_batches for k, v in parts_sum.items()})
        if on_epoch is not None:
            on_epoch(len(history), history[-1])

    result_tree = tune_depth(net, ds, X, max_depth=max_depth,
                             max_leaves=max_leaves)
    ted_res = ted_mod.distance(user_tree, result_tree, cost,
                               restricted=constraints.restricted_nodes)
    metrics = _tree_metrics(result_tree, net, ds, X)
    metrics["ted_to_user"] = ted_res.distance
    return EnhanceResult(net, result_tree, ted_res.script, ted_res, metrics,
                         history)


def diff_history(before: DecisionTree, after: DecisionTree,
                 cost: CostConfig = CostConfig()) -> list[EditOp]:
    """Edit operations turning ``before`` into ``after``, for the UI history."""
    return ted_mod.distance(before, after, cost).script


@dataclass
class FinetunePoint:
    fraction: float
    guideline_accuracy: float
    pretrained_accuracy: float
    ted_to_guideline: float
    ted_to_pretrained: float


def finetune_baseline(pretrained_net: Network, guideline_ds: Dataset,
                      pretrained_ds: Dataset, oracle_tree: DecisionTree,
                      pretrained_tree: DecisionTree, fractions: list[float],
                      cfg: TrainConfig = TrainConfig(epochs=10),
                      max_depth: int = 4) -> list[FinetunePoint]:
    """Direct fine-tuning curve: train clones of the pretrained network on
    growing fractions of guideline rows labeled by the oracle tree."""
    Xg = guideline_ds.select(split=TAG_TRAIN).rows
    g_test = guideline_ds.select(split=TAG_TEST)
    p_test = pretrained_ds.select(split=TAG_TEST)
    if len(Xg) == 0 or len(g_test) == 0 or len(p_test) == 0:
        raise EnhanceError("fine-tuning needs non-empty train and test splits")
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(Xg))
    points = []
    for frac in fractions:
        if not 0.0 <= frac <= 1.0:
            raise EnhanceError(f"fraction {frac} outside [0,1]")
        net = pretrained_net.clone()
        n = int(round(frac * len(Xg)))
        if frac > 0:
            if n < 2:
                raise EnhanceError(f"fraction {frac} yields fewer than 2 rows")
            sub = Xg[order[:n]]
            labels = oracle_tree.evaluate_batch(sub)
            train_supervised(net, sub, labels, cfg)
        tree = tune_depth(net, guideline_ds, np.vstack([Xg, p_test.rows]),
                          max_depth=max_depth)
        points.append(FinetunePoint(
            frac,
            float(np.mean(net.predict(g_test.rows) == g_test.labels)),
            float(np.mean(net.predict(p_test.rows) == p_test.labels)),
            ted_mod.distance(oracle_tree, tree).distance,
            ted_mod.distance(pretrained_tree, tree).distance))
    return points


def train_fresh_network(ds: Dataset, epochs: int = 5, seed: int = 0,
                        hidden: int = 16,
                        learning_rate: float = 1e-2) -> Network:
    """Freshly seeded MLP trained on the dataset's training rows."""
    X, y = _training_rows(ds)
    net = random_network([len(ds.schema), hidden, hidden, len(ds.class_names)],
                         ["relu", "relu", "identity"], seed=seed)
    train_supervised(net, X, y, TrainConfig(learning_rate=learning_rate,
                                            epochs=epochs, seed=seed))
    return net


def make_guideline_tree(guideline_ds: Dataset, seed: int = 0,
                        epochs: int = 5, max_depth: int = 4) -> tuple[DecisionTree, Network]:
    """Guideline rules: a five-epoch network on the guideline split, distilled."""
    net = train_fresh_network(guideline_ds, epochs=epochs, seed=seed)
    X, _ = _training_rows(guideline_ds)
    return tune_depth(net, guideline_ds, X, max_depth=max_depth), net
