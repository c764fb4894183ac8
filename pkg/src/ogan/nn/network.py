"""Sequential networks, weight initialisation, Adam and checkpoints."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .layers import Conv1d, Dense, Layer, LeakyReLU, Sigmoid, Tanh


class Network:
    """A stack of layers applied in order.

    A frozen network still back-propagates gradients to its input but
    accumulates no parameter gradients, and optimizers leave it untouched.
    """

    def __init__(self, layers: list[Layer], dtype=np.float64):
        self.layers = list(layers)
        self.dtype = np.dtype(dtype)
        self.frozen = False
        self._recorded = False
        # all parameters (and gradients) live in one flat buffer; the layer
        # dictionaries hold views into it, so updates must be in place
        sizes = [layer.params[name].size for layer, name in self.parameters()]
        self.flat_params = np.zeros(sum(sizes), dtype=self.dtype)
        self.flat_grads = np.zeros(sum(sizes), dtype=self.dtype)
        offset = 0
        for (layer, name), size in zip(self.parameters(), sizes):
            shape = layer.params[name].shape
            view = self.flat_params[offset:offset + size].reshape(shape)
            view[...] = layer.params[name]
            layer.params[name] = view
            layer.grads[name] = self.flat_grads[offset:offset + size].reshape(shape)
            offset += size

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        for layer in self.layers:
            x = layer.forward(x)
        self._recorded = True
        return x

    __call__ = forward

    def backward(self, grad) -> np.ndarray:
        """Propagate ``d loss / d output`` back; returns ``d loss / d input``."""
        if not self._recorded:
            raise RuntimeError("backward() called without a preceding forward()")
        grad = np.asarray(grad, dtype=self.dtype)
        for layer in reversed(self.layers):
            grad = layer.backward(grad, param_grads=not self.frozen)
        self._recorded = False
        return grad

    def parameters(self) -> list[tuple[Layer, str]]:
        return [(layer, name) for layer in self.layers for name in layer.params]

    def zero_grad(self):
        self.flat_grads.fill(0.0)

    def state(self) -> dict[str, np.ndarray]:
        return {
            f"{i}.{name}": layer.params[name].copy()
            for i, layer in enumerate(self.layers)
            for name in layer.params
        }

    def load_state(self, state: dict[str, np.ndarray]):
        for i, layer in enumerate(self.layers):
            for name, value in layer.params.items():
                saved = np.asarray(state[f"{i}.{name}"], dtype=float)
                if saved.shape != value.shape:
                    raise ValueError(f"layer {i} {name}: shape {saved.shape} != {value.shape}")
                value[...] = saved

    def save(self, path: str | Path):
        """Checkpoint as ``.npz`` with keys ``<layer-index>.<tensor-name>``."""
        np.savez(path, **self.state())

    def load(self, path: str | Path):
        with np.load(path) as data:
            self.load_state(dict(data))

    def __repr__(self):
        return "Network([" + ", ".join(map(repr, self.layers)) + "])"


def _feeding_activation(layers: list[Layer], i: int):
    for layer in layers[i + 1:]:
        if isinstance(layer, (LeakyReLU, Tanh, Sigmoid)):
            return layer
        if layer.params:
            return None
    return None


def init_weights(net: Network, rng: np.random.Generator):
    """He-uniform for layers feeding a leaky ReLU, Glorot-uniform otherwise
    (tanh, sigmoid or no activation).  Biases start at zero."""
    for i, layer in enumerate(net.layers):
        if not isinstance(layer, (Dense, Conv1d)):
            continue
        fan_in, fan_out = layer.fans
        act = _feeding_activation(net.layers, i)
        if isinstance(act, LeakyReLU):
            gain = np.sqrt(2.0 / (1.0 + act.slope ** 2))
            bound = gain * np.sqrt(3.0 / fan_in)
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = layer.params["W"]
        # draw in float64 so the stream is the same for every dtype
        w[...] = rng.uniform(-bound, bound, size=w.shape)
        layer.params["b"].fill(0.0)
    net.zero_grad()


class Adam:
    """Adam with bias correction over a network's flat parameter buffer."""

    def __init__(self, net: Network, lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.net = net
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = np.zeros_like(net.flat_params)
        self.v = np.zeros_like(net.flat_params)
        self._tmp = np.zeros_like(net.flat_params)

    def step(self):
        """Apply one update and clear the gradients.  No-op on frozen nets."""
        g = self.net.flat_grads
        if not self.net.frozen:
            self.step_count += 1
            b1, b2 = self.beta1, self.beta2
            c1 = 1.0 - b1 ** self.step_count
            c2 = 1.0 - b2 ** self.step_count
            m, v, tmp = self.m, self.v, self._tmp
            m *= b1
            np.multiply(g, 1.0 - b1, out=tmp)
            m += tmp
            v *= b2
            np.multiply(g, g, out=tmp)
            tmp *= 1.0 - b2
            v += tmp
            # tmp <- lr/c1 * m / (sqrt(v / c2) + eps)
            np.multiply(v, 1.0 / c2, out=tmp)
            np.sqrt(tmp, out=tmp)
            tmp += self.eps
            np.divide(m, tmp, out=tmp)
            tmp *= self.lr / c1
            self.net.flat_params -= tmp
        g.fill(0.0)
