"""Dense feedforward networks with dual forward modes, freeze masks, and Adam.

Layer-1 biases of decision-node pairs are driven by a shared threshold vector
``tau``: the true-branch neuron sees ``-k*tau[i]`` and the false-branch neuron
``+k*tau[i]``, so threshold training can never break the pairing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("sigmoid", "relu", "crelu", "identity")


class NetworkError(ValueError):
    pass


@dataclass
class Layer:
    weights: np.ndarray  # (in, out)
    biases: np.ndarray   # (out,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise NetworkError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[1],):
            raise NetworkError("weight/bias shape mismatch")


@dataclass(frozen=True)
class NodeBinding:
    tree_node_id: int
    true_neuron: int
    false_neuron: int


def _act(z: np.ndarray, kind: str, hard: bool) -> np.ndarray:
    if kind == "sigmoid":
        if hard:
            return (z > 0).astype(np.float64)
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "crelu":
        return np.clip(z, 0.0, 1.0)
    return z


def _act_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    # Subgradient 0 exactly at relu/crelu kinks.
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "crelu":
        return ((z > 0) & (z < 1)).astype(np.float64)
    return np.ones_like(z)


@dataclass
class Network:
    layers: list[Layer]
    bindings: list[NodeBinding] = field(default_factory=list)
    tau: np.ndarray = field(default_factory=lambda: np.zeros(0))
    steepness: float = 50.0
    freeze_w: list[np.ndarray] = None
    freeze_b: list[np.ndarray] = None
    freeze_tau: np.ndarray = None

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=np.float64)
        for prev, nxt in zip(self.layers[:-1], self.layers[1:]):
            if prev.weights.shape[1] != nxt.weights.shape[0]:
                raise NetworkError("consecutive layer dimensions disagree")
        if len(self.tau) != len(self.bindings):
            raise NetworkError("tau length must match bindings")
        w1 = self.layers[0].weights.shape[1] if self.layers else 0
        seen: set[int] = set()
        for b in self.bindings:
            if b.true_neuron == b.false_neuron or not (
                    0 <= b.true_neuron < w1 and 0 <= b.false_neuron < w1):
                raise NetworkError("binding neuron indices invalid")
            if b.true_neuron in seen or b.false_neuron in seen:
                raise NetworkError("binding neuron indices overlap")
            seen.update((b.true_neuron, b.false_neuron))
        if self.freeze_w is None:
            self.freeze_w = [np.zeros_like(l.weights, dtype=bool) for l in self.layers]
        if self.freeze_b is None:
            self.freeze_b = [np.zeros_like(l.biases, dtype=bool) for l in self.layers]
        if self.freeze_tau is None:
            self.freeze_tau = np.zeros(len(self.tau), dtype=bool)
        self._sync_bound_biases()

    # -- structure ----------------------------------------------------------

    @property
    def input_width(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def output_width(self) -> int:
        return self.layers[-1].weights.shape[1]

    def _sync_bound_biases(self) -> None:
        b = self.layers[0].biases
        k = self.steepness
        for i, bind in enumerate(self.bindings):
            b[bind.true_neuron] = -k * self.tau[i]
            b[bind.false_neuron] = +k * self.tau[i]

    def clone(self) -> "Network":
        return Network([Layer(l.weights.copy(), l.biases.copy(), l.activation)
                        for l in self.layers],
                       list(self.bindings), self.tau.copy(), self.steepness,
                       [m.copy() for m in self.freeze_w],
                       [m.copy() for m in self.freeze_b],
                       self.freeze_tau.copy())

    # -- forward / backward ---------------------------------------------------

    def forward(self, x: np.ndarray, mode: str = "smooth"):
        """Return (pre-activations, activations, output) for a batch or vector."""
        if mode not in ("smooth", "hard"):
            raise NetworkError(f"unknown mode {mode!r}")
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        a = x[None, :] if squeeze else x
        if a.shape[1] != self.input_width:
            raise NetworkError(f"input width {a.shape[1]} != {self.input_width}")
        zs, acts = [], [a]
        hard = mode == "hard"
        for layer in self.layers:
            z = acts[-1] @ layer.weights + layer.biases
            zs.append(z)
            acts.append(_act(z, layer.activation, hard))
        out = acts[-1][0] if squeeze else acts[-1]
        return zs, acts, out

    def predict(self, x: np.ndarray, mode: str = "smooth") -> np.ndarray | int:
        _, _, out = self.forward(x, mode)
        return int(np.argmax(out)) if out.ndim == 1 else np.argmax(out, axis=1)

    def backward(self, zs, acts, grad_out: np.ndarray):
        """Reverse-mode gradients given d(loss)/d(output activations).

        Returns (grad_w list, grad_b list, grad_tau, grad_x) with freeze masks
        applied (frozen entries get exact zeros).  Smooth mode only.
        """
        gw = [None] * len(self.layers)
        gb = [None] * len(self.layers)
        delta = np.asarray(grad_out, dtype=np.float64)
        if delta.ndim == 1:
            delta = delta[None, :]
        for li in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[li]
            delta = delta * _act_grad(zs[li], acts[li + 1], layer.activation)
            gw[li] = acts[li].T @ delta
            gb[li] = delta.sum(axis=0)
            delta = delta @ layer.weights.T
        grad_x = delta
        k = self.steepness
        gtau = np.zeros(len(self.tau))
        for i, bind in enumerate(self.bindings):
            gtau[i] = k * (gb[0][bind.false_neuron] - gb[0][bind.true_neuron])
            gb[0][bind.true_neuron] = 0.0
            gb[0][bind.false_neuron] = 0.0
        for li in range(len(self.layers)):
            gw[li][self.freeze_w[li]] = 0.0
            gb[li][self.freeze_b[li]] = 0.0
        gtau[self.freeze_tau] = 0.0
        return gw, gb, gtau, grad_x

    # -- flat parameter view ---------------------------------------------------

    def param_vector(self) -> np.ndarray:
        parts = []
        for l in self.layers:
            parts.append(l.weights.ravel())
            parts.append(l.biases)
        parts.append(self.tau)
        return np.concatenate(parts)

    def set_param_vector(self, vec: np.ndarray) -> None:
        off = 0
        for l in self.layers:
            n = l.weights.size
            l.weights[:] = vec[off:off + n].reshape(l.weights.shape)
            off += n
            n = l.biases.size
            l.biases[:] = vec[off:off + n]
            off += n
        self.tau[:] = vec[off:off + len(self.tau)]
        self._sync_bound_biases()

    def grad_vector(self, gw, gb, gtau) -> np.ndarray:
        parts = []
        for w, b in zip(gw, gb):
            parts.append(w.ravel())
            parts.append(b)
        parts.append(gtau)
        return np.concatenate(parts)

    def vector_to_grads(self, vec: np.ndarray):
        """Split a parameter-space gradient vector into (gw, gb, gtau), folding
        gradients on bound layer-1 biases into the shared tau entries and
        applying freeze masks."""
        gw, gb = [], []
        off = 0
        for l in self.layers:
            n = l.weights.size
            gw.append(vec[off:off + n].reshape(l.weights.shape).copy())
            off += n
            n = l.biases.size
            gb.append(vec[off:off + n].copy())
            off += n
        gtau = vec[off:off + len(self.tau)].copy()
        k = self.steepness
        for i, bind in enumerate(self.bindings):
            gtau[i] += k * (gb[0][bind.false_neuron] - gb[0][bind.true_neuron])
            gb[0][bind.true_neuron] = 0.0
            gb[0][bind.false_neuron] = 0.0
        for li in range(len(self.layers)):
            gw[li][self.freeze_w[li]] = 0.0
            gb[li][self.freeze_b[li]] = 0.0
        gtau[self.freeze_tau] = 0.0
        return gw, gb, gtau

    def freeze_vector(self) -> np.ndarray:
        parts = []
        for i, l in enumerate(self.layers):
            parts.append(self.freeze_w[i].ravel())
            fb = self.freeze_b[i].copy()
            if i == 0:
                for bind in self.bindings:
                    fb[bind.true_neuron] = True  # driven by tau, never direct
                    fb[bind.false_neuron] = True
            parts.append(fb)
        parts.append(self.freeze_tau)
        return np.concatenate(parts)

    # -- freezing ----------------------------------------------------------------

    def set_freeze(self, policy, custom: np.ndarray | None = None) -> "Network":
        """Replace the freeze mask: 'all', 'none', 'biases_layer1_only', 'custom'."""
        if policy == "custom":
            if custom is None or custom.shape != self.param_vector().shape:
                raise NetworkError("custom mask shape mismatch")
            off = 0
            for i, l in enumerate(self.layers):
                n = l.weights.size
                self.freeze_w[i] = custom[off:off + n].reshape(l.weights.shape).astype(bool)
                off += n
                n = l.biases.size
                self.freeze_b[i] = custom[off:off + n].astype(bool)
                off += n
            self.freeze_tau = custom[off:].astype(bool)
            return self
        if policy not in ("all", "none", "biases_layer1_only"):
            raise NetworkError(f"unknown freeze policy {policy!r}")
        frozen = policy == "all"
        for i in range(len(self.layers)):
            self.freeze_w[i][:] = frozen or policy == "biases_layer1_only"
            self.freeze_b[i][:] = frozen or (policy == "biases_layer1_only" and i != 0)
        self.freeze_tau[:] = frozen
        return self

    def lock_node(self, tree_node_id: int) -> "Network":
        """Freeze the shared threshold (both paired biases) of one decision node."""
        for i, b in enumerate(self.bindings):
            if b.tree_node_id == tree_node_id:
                self.freeze_tau[i] = True
                return self
        raise NetworkError(f"no binding for tree node {tree_node_id}")

    def thresholds(self) -> dict[int, float]:
        """Current normalized threshold per bound tree node."""
        return {b.tree_node_id: float(self.tau[i])
                for i, b in enumerate(self.bindings)}

    # -- serialization -------------------------------------------------------------

    def to_checkpoint(self) -> str:
        doc = {
            "layers": [{"w": l.weights.tolist(), "b": l.biases.tolist(),
                        "act": l.activation} for l in self.layers],
            "freeze": {"w": [m.astype(int).tolist() for m in self.freeze_w],
                       "b": [m.astype(int).tolist() for m in self.freeze_b],
                       "tau": self.freeze_tau.astype(int).tolist()},
            "bindings": [{"node": b.tree_node_id, "true": b.true_neuron,
                          "false": b.false_neuron} for b in self.bindings],
            "tau": self.tau.tolist(),
            "steepness": self.steepness,
        }
        return json.dumps(doc, separators=(",", ":"))

    @staticmethod
    def from_checkpoint(text: str) -> "Network":
        doc = json.loads(text)
        layers = [Layer(np.array(l["w"]), np.array(l["b"]), l["act"])
                  for l in doc["layers"]]
        return Network(
            layers,
            [NodeBinding(b["node"], b["true"], b["false"]) for b in doc["bindings"]],
            np.array(doc["tau"], dtype=np.float64), doc["steepness"],
            [np.array(m, dtype=bool) for m in doc["freeze"]["w"]],
            [np.array(m, dtype=bool) for m in doc["freeze"]["b"]],
            np.array(doc["freeze"]["tau"], dtype=bool))


# -- losses ----------------------------------------------------------------------

def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(out: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. the outputs."""
    p = softmax(out)
    n = len(out)
    loss = float(-np.log(np.clip(p[np.arange(n), targets], 1e-12, None)).mean())
    grad = p.copy()
    grad[np.arange(n), targets] -= 1.0
    return loss, grad / n


# -- optimizer -------------------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise NetworkError("learning_rate must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise NetworkError("betas must lie in (0,1)")


class AdamState:
    def __init__(self, n_params: int, cfg: TrainConfig):
        self.cfg = cfg
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grads: np.ndarray,
             frozen: np.ndarray) -> np.ndarray:
        """One bias-corrected Adam update; frozen entries pass through untouched."""
        self.t += 1
        c = self.cfg
        self.m = c.adam_beta1 * self.m + (1 - c.adam_beta1) * grads
        self.v = c.adam_beta2 * self.v + (1 - c.adam_beta2) * grads ** 2
        mh = self.m / (1 - c.adam_beta1 ** self.t)
        vh = self.v / (1 - c.adam_beta2 ** self.t)
        upd = params - c.learning_rate * mh / (np.sqrt(vh) + c.adam_eps)
        return np.where(frozen, params, upd)


def adam_step(net: Network, gw, gb, gtau, state: AdamState) -> None:
    """Apply one Adam step to a network's parameters in place."""
    params = net.param_vector()
    grads = net.grad_vector(gw, gb, gtau)
    net.set_param_vector(state.step(params, grads, net.freeze_vector()))


def random_network(widths: list[int], activations: list[str], seed: int = 0,
                   scale: float = 0.5) -> Network:
    """Freshly seeded MLP (no bindings); used for pre-training and tests."""
    rng = np.random.default_rng(seed)
    layers = []
    for w_in, w_out, act in zip(widths[:-1], widths[1:], activations):
        layers.append(Layer(rng.normal(0, scale, (w_in, w_out)),
                            rng.normal(0, scale, w_out), act))
    return Network(layers)


def train_supervised(net: Network, X: np.ndarray, y: np.ndarray,
                     cfg: TrainConfig) -> list[float]:
    """Plain cross-entropy minibatch training; returns per-epoch mean loss."""
    rng = np.random.default_rng(cfg.seed)
    state = AdamState(len(net.param_vector()), cfg)
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(X))
        losses = []
        for start in range(0, len(X), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            zs, acts, out = net.forward(X[idx])
            loss, gout = cross_entropy(out, y[idx])
            gw, gb, gtau, _ = net.backward(zs, acts, gout)
            adam_step(net, gw, gb, gtau, state)
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return history
