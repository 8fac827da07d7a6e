"""Gradient correctness, optimization behavior, and training determinism."""

import numpy as np
import pytest

from abstractnet import (
    LabeledDataset,
    Network,
    TrainConfig,
    TrainingError,
    ValidationError,
    accuracy,
    init_network,
    loss_and_grads,
    make_synthetic_digits,
    train,
)


def numeric_grads(net, x, y, h=1e-6):
    """Central differences on every parameter."""
    ws = [w.copy() for w in net.weights]
    bs = [b.copy() for b in net.biases]

    def loss_at(ws_, bs_):
        probe = Network(tuple(ws_), tuple(bs_), "identity")
        return loss_and_grads(probe, x, y)[0]

    dws, dbs = [], []
    for j in range(len(ws)):
        g = np.zeros_like(ws[j])
        for idx in np.ndindex(*ws[j].shape):
            bumped = [w.copy() for w in ws]
            bumped[j][idx] += h
            up = loss_at(bumped, bs)
            bumped[j][idx] -= 2 * h
            down = loss_at(bumped, bs)
            g[idx] = (up - down) / (2 * h)
        dws.append(g)
        gb = np.zeros_like(bs[j])
        for idx in np.ndindex(*bs[j].shape):
            bumped = [b.copy() for b in bs]
            bumped[j][idx] += h
            up = loss_at(ws, bumped)
            bumped[j][idx] -= 2 * h
            down = loss_at(ws, bumped)
            gb[idx] = (up - down) / (2 * h)
        dbs.append(gb)
    return dws, dbs


def test_gradients_match_central_differences():
    rng = np.random.default_rng(5)
    net = init_network((2, 3, 2), seed=1)
    x = rng.normal(size=(4, 2))
    y = np.array([0, 1, 1, 0])
    _, dws, dbs = loss_and_grads(net, x, y)
    nws, nbs = numeric_grads(net, x, y)
    for got, want in zip(dws, nws):
        assert np.allclose(got, want, rtol=1e-5, atol=1e-7)
    for got, want in zip(dbs, nbs):
        assert np.allclose(got, want, rtol=1e-5, atol=1e-7)


def test_loss_and_grads_validation():
    net = init_network((2, 3, 2), seed=0)
    x = np.zeros((2, 2))
    with pytest.raises(ValidationError):
        loss_and_grads(net, x, np.array([0]))  # label count mismatch
    with pytest.raises(ValidationError):
        loss_and_grads(net, x, np.array([0, 2]))  # label out of range
    relu_net = Network(net.weights, net.biases, "relu")
    with pytest.raises(ValidationError):
        loss_and_grads(relu_net, x, np.array([0, 1]))


def test_init_network_shapes_and_bound():
    net = init_network((4, 7, 3), seed=2)
    assert net.layer_sizes == (4, 7, 3)
    assert all(np.all(b == 0.0) for b in net.biases)
    for w, fan_in in zip(net.weights, (4, 7)):
        assert np.all(np.abs(w) <= np.sqrt(6.0 / fan_in))
    a = init_network((4, 7, 3), seed=2)
    for wa, wb in zip(a.weights, net.weights):
        assert np.array_equal(wa, wb)
    with pytest.raises(ValidationError):
        init_network((4,))
    with pytest.raises(ValidationError):
        init_network((4, 0, 3))


def test_zero_epochs_returns_seeded_init():
    ds = make_synthetic_digits(40, seed=0)
    cfg = TrainConfig(hidden=(5,), epochs=0, seed=11)
    net = train(ds, cfg)
    ref = init_network((64, 5, ds.num_classes), seed=11)
    for got, want in zip(net.weights, ref.weights):
        assert np.array_equal(got, want)


def test_first_sgd_step_reduces_batch_loss():
    rng = np.random.default_rng(3)
    net = init_network((3, 6, 2), seed=4)
    x = rng.normal(size=(8, 3))
    y = rng.integers(0, 2, size=8)
    loss0, dws, dbs = loss_and_grads(net, x, y)
    lr = 0.05
    stepped = Network(
        tuple(w - lr * g for w, g in zip(net.weights, dws)),
        tuple(b - lr * g for b, g in zip(net.biases, dbs)),
        "identity",
    )
    loss1 = loss_and_grads(stepped, x, y)[0]
    assert loss1 < loss0


def separable_dataset(n=60, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(loc=(2.0, 2.0), scale=0.3, size=(half, 2))
    b = rng.normal(loc=(-2.0, -2.0), scale=0.3, size=(half, 2))
    inputs = np.vstack([a, b])
    labels = np.array([0] * half + [1] * half)
    return LabeledDataset(inputs, labels)


def test_training_solves_separable_problem():
    ds = separable_dataset()
    cfg = TrainConfig(hidden=(8,), epochs=50, batch_size=8, learning_rate=0.01, seed=0)
    net = train(ds, cfg)
    assert accuracy(net, ds) == 1.0
    assert net.output_activation == "identity"
    assert net.layer_sizes == (2, 8, 2)


def test_sgd_optimizer_also_learns():
    ds = separable_dataset()
    cfg = TrainConfig(
        hidden=(8,), epochs=50, batch_size=8, learning_rate=0.05, optimizer="sgd", seed=0
    )
    net = train(ds, cfg)
    assert accuracy(net, ds) >= 0.95


def test_divergence_raises_training_error():
    ds = separable_dataset()
    # absurd learning rate blows the parameters up; patience high enough that
    # early stopping cannot end the run before the overflow
    cfg = TrainConfig(
        hidden=(8,),
        epochs=50,
        batch_size=60,
        learning_rate=1e12,
        optimizer="sgd",
        seed=0,
        patience=50,
    )
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(TrainingError):
            train(ds, cfg)


def test_training_is_deterministic():
    ds = make_synthetic_digits(80, seed=1)
    cfg = TrainConfig(hidden=(10,), epochs=3, batch_size=16, seed=7)
    a = train(ds, cfg)
    b = train(ds, cfg)
    assert a.to_json() == b.to_json()
    c = train(ds, TrainConfig(hidden=(10,), epochs=3, batch_size=16, seed=8))
    assert a.to_json() != c.to_json()


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(hidden=(0,))
    with pytest.raises(ValidationError):
        TrainConfig(hidden=(4,), epochs=-1)
    with pytest.raises(ValidationError):
        TrainConfig(hidden=(4,), optimizer="rmsprop")
    with pytest.raises(ValidationError):
        TrainConfig(hidden=(4,), val_fraction=1.5)
    single_class = LabeledDataset(np.zeros((4, 2)), np.zeros(4, dtype=int))
    with pytest.raises(ValidationError):
        train(single_class, TrainConfig(hidden=(4,)))
