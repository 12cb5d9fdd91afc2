"""Extreme learning machine used as the base localization predictor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import check_score


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class ElmModel:
    """Single hidden layer with fixed random weights and a ridge readout.

    Inputs are min-max scaled with statistics from the training set, and
    targets are centred before the readout is fitted.
    """

    input_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    x_min: np.ndarray
    x_range: np.ndarray
    target_offset: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.hidden_bias.shape[0]

    def scale(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.x_min) / self.x_range

    def hidden(self, X) -> np.ndarray:
        return _sigmoid(self.scale(X) @ self.input_weights + self.hidden_bias)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        out = self.hidden(np.atleast_2d(X)) @ self.output_weights + self.target_offset
        return out[0] if single else out


def train_elm(X, Y, hidden: int = 256, ridge: float = 1e-3, seed: int = 0,
              center_targets: bool = True) -> ElmModel:
    """Fit an ELM mapping RSSI vectors to (longitude, latitude).

    Args:
        X: ``(n, M)`` raw features.
        Y: ``(n, k)`` targets.
        hidden: Hidden layer width.
        ridge: Ridge penalty on the readout; must be positive.
        seed: Seed for the uniform ``[-1, 1]`` input weights and biases.
        center_targets: Subtract the training mean from the targets and
            add it back at prediction time.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y have different numbers of rows")
    if not ridge > 0:
        raise ValueError("ridge must be positive")
    rng = np.random.default_rng(seed)
    x_min = X.min(axis=0)
    x_range = X.max(axis=0) - x_min
    x_range[x_range == 0] = 1.0
    W = rng.uniform(-1.0, 1.0, (X.shape[1], hidden))
    b = rng.uniform(-1.0, 1.0, hidden)
    offset = Y.mean(axis=0) if center_targets else np.zeros(Y.shape[1])
    model = ElmModel(W, b, np.zeros((hidden, Y.shape[1])), x_min, x_range, offset)
    H = model.hidden(X)
    gram = H.T @ H + ridge * np.eye(hidden)
    model.output_weights = np.linalg.solve(gram, H.T @ (Y - offset))
    return model


_COLUMN = {"longitude": 0, "latitude": 1}


def residual_score(model: ElmModel, sample, bound: float, target: str = "longitude") -> float:
    """Residual ``|y - f(x)| / bound`` for one coordinate; must land in ``[0, 1]``."""
    pred = model.predict(sample.rssi)[_COLUMN[target]]
    return check_score(abs(getattr(sample, target) - pred) / bound, 1.0)


def residuals(model: ElmModel, rssi, y, target: str = "longitude") -> np.ndarray:
    """Unnormalised absolute residuals for a batch."""
    return np.abs(np.asarray(y) - model.predict(rssi)[:, _COLUMN[target]])
