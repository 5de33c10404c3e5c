import json

import numpy as np
import pytest

from ruleflow import (AdamState, Network, TrainConfig, adam_step,
                      cross_entropy, random_network, softmax,
                      train_supervised)
from ruleflow.network import NetworkError, _act


def small_net(seed=0):
    return random_network([3, 5, 4, 2], ["relu", "relu", "identity"],
                          seed=seed)


# -- activations ----------------------------------------------------------------

def test_sigmoid_at_zero_smooth_and_hard():
    z = np.array([0.0])
    assert _act(z, "sigmoid", hard=False)[0] == pytest.approx(0.5)
    assert _act(z, "sigmoid", hard=True)[0] == 0.0  # step(0) = 0


def test_crelu_clamps_to_unit_interval():
    z = np.array([-1.0, 0.25, 3.0])
    assert _act(z, "crelu", hard=False).tolist() == [0.0, 0.25, 1.0]


def test_softmax_and_cross_entropy_shapes():
    out = np.array([[2.0, 0.0], [0.0, 2.0]])
    p = softmax(out)
    assert p.sum(axis=1) == pytest.approx([1.0, 1.0])
    loss, grad = cross_entropy(out, np.array([0, 1]))
    assert loss == pytest.approx(-np.log(p[0, 0]))
    assert grad.shape == out.shape


# -- gradient correctness (central finite differences) --------------------------------------

def _loss_and_grad(net, X, y):
    zs, acts, out = net.forward(X)
    loss, gout = cross_entropy(out, y)
    gw, gb, gtau = net.backward(zs, acts, gout)[:3]
    return loss, net.grad_vector(gw, gb, gtau)


def test_gradients_match_finite_differences_100_seeds():
    h = 1e-5
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        net = small_net(seed)
        X = rng.uniform(size=(8, 3))
        y = rng.integers(0, 2, size=8)
        _, grad = _loss_and_grad(net, X, y)
        theta = net.param_vector()
        idx = rng.choice(len(theta), size=min(12, len(theta)), replace=False)
        for i in idx:
            zs, _, _ = net.forward(X)
            # skip coordinates sitting on a relu/crelu kink
            tp = theta.copy(); tp[i] += h
            tm = theta.copy(); tm[i] -= h
            net.set_param_vector(tp)
            lp, _ = cross_entropy(net.forward(X)[2], y)
            net.set_param_vector(tm)
            lm, _ = cross_entropy(net.forward(X)[2], y)
            net.set_param_vector(theta)
            fd = (lp - lm) / (2 * h)
            denom = max(abs(fd), abs(grad[i]), 1e-8)
            rel = abs(fd - grad[i]) / denom
            if abs(fd) > 1e-7 or abs(grad[i]) > 1e-7:
                worst = max(worst, rel)
    assert worst <= 1e-4


# -- Adam ----------------------------------------------------------------

def test_adam_zero_gradient_leaves_params_unchanged():
    state = AdamState(4, TrainConfig())
    params = np.array([1.0, -2.0, 0.5, 3.0])
    out = state.step(params, np.zeros(4), np.zeros(4, dtype=bool))
    assert np.array_equal(out, params)


def test_adam_frozen_entries_exactly_untouched():
    state = AdamState(4, TrainConfig())
    params = np.array([1.0, -2.0, 0.5, 3.0])
    frozen = np.array([True, False, True, False])
    out = state.step(params, np.ones(4), frozen)
    assert out[0] == params[0] and out[2] == params[2]
    assert out[1] != params[1] and out[3] != params[3]


def test_freeze_all_makes_training_a_noop(rng):
    net = small_net(3)
    net.set_freeze("all")
    before = net.param_vector().copy()
    X = rng.uniform(size=(32, 3))
    y = rng.integers(0, 2, size=32)
    train_supervised(net, X, y, TrainConfig(epochs=3, seed=0))
    assert np.array_equal(net.param_vector(), before)


def test_training_reduces_loss(rng):
    net = small_net(4)
    X = rng.uniform(size=(128, 3))
    y = (X[:, 0] > 0.5).astype(int)
    before, _ = cross_entropy(net.forward(X)[2], y)
    train_supervised(net, X, y, TrainConfig(epochs=10, seed=0))
    after, _ = cross_entropy(net.forward(X)[2], y)
    assert after < before


# -- checkpoints ----------------------------------------------------------------

def test_checkpoint_roundtrip_bit_exact():
    net = small_net(7)
    text = net.to_checkpoint()
    back = Network.from_checkpoint(text)
    assert back.to_checkpoint() == text
    for a, b in zip(net.layers, back.layers):
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.biases, b.biases)
    assert json.loads(text)["steepness"] == net.steepness


def test_train_config_validation():
    with pytest.raises(NetworkError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(NetworkError):
        TrainConfig(adam_beta1=1.5)
