"""Small numpy neural-network engine with explicit back-propagation."""

from .layers import Conv1d, Dense, Flatten, LeakyReLU, MaxPool1d, Reshape, ShapeError, Sigmoid, Tanh
from .loss import loss_and_grad, ogan_loss, squash_logit
from .models import conv_discriminator, dense_discriminator, generator
from .network import Adam, Network, init_weights

__all__ = [
    "Adam", "Conv1d", "Dense", "Flatten", "LeakyReLU", "MaxPool1d", "Network",
    "Reshape", "ShapeError", "Sigmoid", "Tanh", "conv_discriminator",
    "dense_discriminator", "generator", "init_weights", "loss_and_grad",
    "ogan_loss", "squash_logit",
]
