"""Central finite differences against the hand-written backward passes."""

from __future__ import annotations

import numpy as np

from ogan.nn import (
    Conv1d,
    Dense,
    Flatten,
    LeakyReLU,
    MaxPool1d,
    Network,
    Reshape,
    Sigmoid,
    Tanh,
    conv_discriminator,
    dense_discriminator,
    generator,
    init_weights,
)

STEP = 1e-5


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-8)
    return float(np.linalg.norm(a - b) / scale)


def _loss(net: Network, x, weights) -> float:
    return float(np.sum(net(x) * weights))


def check_network(net: Network, x: np.ndarray, rng) -> float:
    """Worst relative error over the input gradient and every parameter."""
    weights = rng.normal(size=net(x).shape)
    net.zero_grad()
    net(x)
    gx = net.backward(weights)
    analytic = [gx] + [layer.grads[name].copy() for layer, name in net.parameters()]
    numeric = [np.zeros_like(x)]
    targets = [x] + [layer.params[name] for layer, name in net.parameters()]
    numeric += [np.zeros_like(t) for t in targets[1:]]
    for target, out in zip(targets, numeric):
        flat, g = target.reshape(-1), out.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + STEP
            up = _loss(net, x, weights)
            flat[i] = old - STEP
            down = _loss(net, x, weights)
            flat[i] = old
            g[i] = (up - down) / (2 * STEP)
    return max(rel_error(a, n) for a, n in zip(analytic, numeric))


def _init(net, rng):
    for layer, name in net.parameters():
        layer.params[name][...] = rng.normal(scale=0.5, size=layer.params[name].shape)
    return net


def layer_cases(rng):
    """(name, factory) pairs; each factory returns (network, input)."""
    def dense():
        n_in, n_out = rng.integers(1, 6, size=2)
        return _init(Network([Dense(n_in, n_out)]), rng), rng.normal(size=(rng.integers(1, 5), n_in))

    def conv():
        cin, cout, length = rng.integers(1, 4), rng.integers(1, 4), rng.integers(2, 7)
        net = _init(Network([Conv1d(cin, cout, kernel=2, padding=1)]), rng)
        return net, rng.normal(size=(rng.integers(1, 4), cin, length))

    def pool():
        return Network([MaxPool1d(2)]), rng.normal(size=(2, 3, rng.integers(2, 8)))

    def act(layer):
        return lambda: (Network([layer]), rng.normal(size=(3, 5)))

    def reshape():
        return Network([Reshape(2, 3), Flatten()]), rng.normal(size=(2, 6))

    return [("dense", dense), ("conv1d", conv), ("maxpool", pool),
            ("leaky_relu", act(LeakyReLU(0.01))), ("tanh", act(Tanh())),
            ("sigmoid", act(Sigmoid())), ("reshape_flatten", reshape)]


def composed_case(rng, conv: bool = True):
    """A small generator and a frozen discriminator of matching width."""
    dim = int(rng.integers(2, 7))
    g = generator(3, dim, hidden=6, n_hidden=2)
    d = (conv_discriminator(dim, feature_maps=3, hidden=5) if conv
         else dense_discriminator(dim, hidden=5, n_hidden=2))
    init_weights(g, rng)
    init_weights(d, rng)
    d.frozen = True
    return g, d, rng.uniform(-1, 1, size=(3, 3))


def check_composed(g: Network, d: Network, z: np.ndarray, rng) -> float:
    """Gradient of sum(w * D(G(z))) reaching G's parameters and z through
    the frozen D."""
    weights = rng.normal(size=(z.shape[0], 1))

    def loss():
        return float(np.sum(d(g(z)) * weights))

    g.zero_grad()
    d.zero_grad()
    d(g(z))
    gz = g.backward(d.backward(weights))
    assert not np.any(d.flat_grads), "frozen network accumulated parameter gradients"
    analytic = [gz] + [layer.grads[name].copy() for layer, name in g.parameters()]
    targets = [z] + [layer.params[name] for layer, name in g.parameters()]
    errors = []
    for target, a in zip(targets, analytic):
        flat, num = target.reshape(-1), np.zeros(target.size)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + STEP
            up = loss()
            flat[i] = old - STEP
            down = loss()
            flat[i] = old
            num[i] = (up - down) / (2 * STEP)
        errors.append(rel_error(a.reshape(-1), num))
    return max(errors)
