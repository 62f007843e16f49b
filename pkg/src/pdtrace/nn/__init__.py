"""A small numpy neural-network toolkit with explicit backward passes."""

from .functional import bce_loss, conv2d_forward, dropout, leaky_relu, lstm_forward, maxpool_forward, relu, sigmoid
from .layers import LSTM, Conv2D, Dense, Dropout, Flatten, LeakyReLU, MaxPool2D, ReLU, Sigmoid
from .network import Network, NonFiniteError, build_cnn, build_rnn
from .optim import SGD
from .train import History, TrainConfig, evaluate, train

__all__ = [
    "LSTM", "SGD", "Conv2D", "Dense", "Dropout", "Flatten", "History", "LeakyReLU", "MaxPool2D",
    "Network", "NonFiniteError", "ReLU", "Sigmoid", "TrainConfig", "bce_loss", "build_cnn",
    "build_rnn", "conv2d_forward", "dropout", "evaluate", "leaky_relu", "lstm_forward",
    "maxpool_forward", "relu", "sigmoid", "train",
]
