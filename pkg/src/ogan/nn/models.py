"""Generator and discriminator architectures used by the falsifier."""

from __future__ import annotations

import numpy as np

from .layers import Conv1d, Dense, Flatten, LeakyReLU, MaxPool1d, Reshape, Sigmoid, Tanh
from .network import Network

HIDDEN = 128
HIDDEN_LAYERS = 3
SLOPE = 0.01
FEATURE_MAPS = 16


def _dense_body(n_in: int, hidden: int, n_hidden: int) -> list:
    layers, width = [], n_in
    for _ in range(n_hidden):
        layers += [Dense(width, hidden), LeakyReLU(SLOPE)]
        width = hidden
    return layers


def generator(latent_dim: int, test_dim: int, hidden: int = HIDDEN,
              n_hidden: int = HIDDEN_LAYERS, dtype=np.float64) -> Network:
    """Latent noise in [-1, 1]^latent_dim to tests in [-1, 1]^test_dim."""
    return Network(_dense_body(latent_dim, hidden, n_hidden) + [Dense(hidden, test_dim), Tanh()], dtype)


def dense_discriminator(test_dim: int, hidden: int = HIDDEN,
                        n_hidden: int = HIDDEN_LAYERS, dtype=np.float64) -> Network:
    """Generator-shaped body with a sigmoid scalar head, for vector inputs."""
    return Network(_dense_body(test_dim, hidden, n_hidden) + [Dense(hidden, 1), Sigmoid()], dtype)


def conv_feature_length(test_dim: int) -> int:
    length = test_dim
    for _ in range(2):
        length = (length + 1) // 2  # conv (k=2, p=1) adds one sample, pool halves
    return length


def conv_discriminator(test_dim: int, feature_maps: int = FEATURE_MAPS,
                       hidden: int = HIDDEN, dtype=np.float64) -> Network:
    """Treats the test vector as a one-channel sequence of length test_dim."""
    flat = feature_maps * conv_feature_length(test_dim)
    return Network([
        Reshape(1, test_dim),
        Conv1d(1, feature_maps, kernel=2, padding=1),
        LeakyReLU(SLOPE),
        MaxPool1d(2),
        Conv1d(feature_maps, feature_maps, kernel=2, padding=1),
        LeakyReLU(SLOPE),
        MaxPool1d(2),
        Flatten(),
        Dense(flat, hidden),
        Dense(hidden, 1),
        Sigmoid(),
    ], dtype)
