"""Layers with hand-written forward and backward passes.

Every layer caches what its backward pass needs during ``forward``.  Shapes
follow the (batch, channels, length) convention for 1-D convolutions.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    pass


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray, param_grads: bool = True) -> np.ndarray:
        raise NotImplementedError

    def zero_grad(self):
        for k, v in self.params.items():
            if k in self.grads:
                self.grads[k].fill(0.0)
            else:
                self.grads[k] = np.zeros_like(v)

    def __repr__(self):
        return f"{type(self).__name__}()"


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.params = {"W": np.zeros((n_in, n_out)), "b": np.zeros(n_out)}
        self.zero_grad()
        self._x = None

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"Dense({self.n_in}, {self.n_out}) got input of shape {x.shape}")
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad, param_grads=True):
        if param_grads:
            self.grads["W"] += self._x.T @ grad
            self.grads["b"] += grad.sum(axis=0)
        return grad @ self.params["W"].T

    @property
    def fans(self):
        return self.n_in, self.n_out

    def __repr__(self):
        return f"Dense({self.n_in}, {self.n_out})"


class Conv1d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel: int = 2, padding: int = 1):
        super().__init__()
        self.cin, self.cout, self.k, self.pad = in_channels, out_channels, kernel, padding
        self.params = {"W": np.zeros((out_channels, in_channels, kernel)), "b": np.zeros(out_channels)}
        self.zero_grad()
        self._xp = None
        self._lout = 0

    def out_length(self, length: int) -> int:
        return length + 2 * self.pad - self.k + 1

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.cin:
            raise ShapeError(f"Conv1d({self.cin}, {self.cout}) got input of shape {x.shape}")
        n, c, length = x.shape
        lout = self.out_length(length)
        if lout < 1:
            raise ShapeError(f"Conv1d input of length {length} is shorter than the kernel")
        xp = np.zeros((n, c, length + 2 * self.pad), dtype=x.dtype)
        xp[:, :, self.pad:self.pad + length] = x
        self._xp, self._lout = xp, lout
        W = self.params["W"]
        out = W[:, :, 0] @ xp[:, :, :lout]
        for j in range(1, self.k):
            out += W[:, :, j] @ xp[:, :, j:j + lout]
        out += self.params["b"][:, None]
        return out

    def backward(self, grad, param_grads=True):
        xp, lout, W = self._xp, self._lout, self.params["W"]
        if param_grads:
            gW = self.grads["W"]
            for j in range(self.k):
                gW[:, :, j] += np.einsum("nol,ncl->oc", grad, xp[:, :, j:j + lout])
            self.grads["b"] += grad.sum(axis=(0, 2))
        gxp = np.zeros_like(xp)
        for j in range(self.k):
            gxp[:, :, j:j + lout] += W[:, :, j].T @ grad
        return gxp[:, :, self.pad:xp.shape[2] - self.pad]

    @property
    def fans(self):
        return self.cin * self.k, self.cout * self.k

    def __repr__(self):
        return f"Conv1d({self.cin}, {self.cout}, kernel={self.k}, padding={self.pad})"


class MaxPool1d(Layer):
    """Window 2, stride 2; a trailing odd sample is dropped."""

    def __init__(self, window: int = 2):
        super().__init__()
        self.window = window
        self._mask = None
        self._in_shape = None

    def forward(self, x):
        if x.ndim != 3:
            raise ShapeError(f"MaxPool1d expects (batch, channels, length), got {x.shape}")
        n, c, length = x.shape
        lout = length // self.window
        if lout < 1:
            raise ShapeError(f"MaxPool1d input of length {length} is shorter than the window")
        xr = x[:, :, :lout * self.window].reshape(n, c, lout, self.window)
        if self.window == 2:
            first = xr[..., 0] >= xr[..., 1]  # ties go to the first element
            self._mask = np.stack([first, ~first], axis=-1)
            out = np.where(first, xr[..., 0], xr[..., 1])
        else:
            idx = xr.argmax(axis=3)
            self._mask = idx[..., None] == np.arange(self.window)
            out = np.take_along_axis(xr, idx[..., None], axis=3)[..., 0]
        self._in_shape = x.shape
        return out

    def backward(self, grad, param_grads=True):
        n, c, length = self._in_shape
        lout = grad.shape[2]
        gx = np.zeros(self._in_shape, dtype=grad.dtype)
        gx[:, :, :lout * self.window] = (self._mask * grad[..., None]).reshape(n, c, lout * self.window)
        return gx


class LeakyReLU(Layer):
    def __init__(self, slope: float = 0.01):
        super().__init__()
        self.slope = slope
        self._pos = None

    def forward(self, x):
        self._pos = x > 0
        # max(x, s x) is the leaky ReLU for 0 <= s < 1
        if 0.0 <= self.slope < 1.0:
            return np.maximum(x, x * x.dtype.type(self.slope))
        return np.where(self._pos, x, x * x.dtype.type(self.slope))

    def backward(self, grad, param_grads=True):
        return np.where(self._pos, grad, grad * grad.dtype.type(self.slope))


class Tanh(Layer):
    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad, param_grads=True):
        return grad * (1.0 - self._y ** 2)


class Sigmoid(Layer):
    def forward(self, x):
        # 0.5 * (1 + tanh(x / 2)) is the overflow-free logistic function
        self._y = 0.5 * (1.0 + np.tanh(0.5 * x))
        return self._y

    def backward(self, grad, param_grads=True):
        return grad * self._y * (1.0 - self._y)


class Flatten(Layer):
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad, param_grads=True):
        return grad.reshape(self._shape)


class Reshape(Layer):
    """Reshape the non-batch dimensions, e.g. (n, D) -> (n, 1, D)."""

    def __init__(self, *shape: int):
        super().__init__()
        self.shape = shape

    def forward(self, x):
        if int(np.prod(x.shape[1:])) != int(np.prod(self.shape)):
            raise ShapeError(f"cannot reshape input of shape {x.shape} to (batch, {self.shape})")
        self._shape = x.shape
        return x.reshape(x.shape[0], *self.shape)

    def backward(self, grad, param_grads=True):
        return grad.reshape(self._shape)

    def __repr__(self):
        return f"Reshape{self.shape}"


ACTIVATIONS = (LeakyReLU, Tanh, Sigmoid)
