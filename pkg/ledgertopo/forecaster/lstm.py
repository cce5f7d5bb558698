"""Stacked LSTM regressor with hand-written backpropagation through time.

Each layer keeps one weight matrix ``W`` of shape ``(inputs + hidden, 4 *
hidden)`` acting on ``[x_t, h_{t-1}]`` and a bias ``b``; the four gate blocks
are ordered input, forget, output, candidate. A linear head maps the last
hidden state of the top layer to one scalar.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from ledgertopo.utils.exceptions import InputValidationError, WindowShapeError


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LSTMParams:
    """Parameter tensors, addressable by name for optimizers and checks."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head_w: np.ndarray
    head_b: np.ndarray

    @property
    def input_size(self) -> int:
        return self.weights[0].shape[0] - self.hidden_size

    @property
    def hidden_size(self) -> int:
        return self.head_w.shape[0]

    @property
    def layers(self) -> int:
        return len(self.weights)

    @classmethod
    def initialize(
        cls, input_size: int, hidden_size: int, layers: int, rng: np.random.Generator
    ) -> "LSTMParams":
        """Uniform ``(-1/sqrt(H), 1/sqrt(H))`` weights, forget-gate bias 1."""
        bound = 1.0 / np.sqrt(hidden_size)
        weights, biases = [], []
        for layer in range(layers):
            fan_in = (input_size if layer == 0 else hidden_size) + hidden_size
            weights.append(rng.uniform(-bound, bound, size=(fan_in, 4 * hidden_size)))
            bias = np.zeros(4 * hidden_size)
            bias[hidden_size : 2 * hidden_size] = 1.0
            biases.append(bias)
        head_w = rng.uniform(-bound, bound, size=hidden_size)
        return cls(weights, biases, head_w, np.zeros(1))

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int, layers: int) -> "LSTMParams":
        weights = [
            np.zeros((size + hidden_size, 4 * hidden_size))
            for size in [input_size] + [hidden_size] * (layers - 1)
        ]
        biases = [np.zeros(4 * hidden_size) for _ in range(layers)]
        return cls(weights, biases, np.zeros(hidden_size), np.zeros(1))

    def tensors(self) -> dict[str, np.ndarray]:
        """Named views of every tensor; in-place edits change the model."""
        named: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            named[f"W{i}"] = w
            named[f"b{i}"] = b
        named["head_w"] = self.head_w
        named["head_b"] = self.head_b
        return named

    def copy(self) -> "LSTMParams":
        return LSTMParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.head_w.copy(),
            self.head_b.copy(),
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors().values())


def forward(params: LSTMParams, x: np.ndarray) -> tuple[np.ndarray, list[Any]]:
    """Run a batch of windows ``x`` of shape ``(N, L, F)``.

    Returns:
        Outputs of shape ``(N,)`` and the per-layer caches for :func:`backward`
    """
    if x.ndim != 3 or x.shape[2] != params.input_size:
        raise WindowShapeError(
            f"Expected windows of shape (N, L, {params.input_size}), got {x.shape}"
        )
    n, steps, _ = x.shape
    hidden = params.hidden_size
    caches = []
    inputs = x
    for w, b in zip(params.weights, params.biases):
        h = np.zeros((n, hidden))
        c = np.zeros((n, hidden))
        outputs = np.empty((n, steps, hidden))
        steps_cache = []
        for s in range(steps):
            stacked = np.concatenate([inputs[:, s, :], h], axis=1)
            z = stacked @ w + b
            gi = sigmoid(z[:, :hidden])
            gf = sigmoid(z[:, hidden : 2 * hidden])
            go = sigmoid(z[:, 2 * hidden : 3 * hidden])
            gg = np.tanh(z[:, 3 * hidden :])
            c_prev = c
            c = gf * c_prev + gi * gg
            tanh_c = np.tanh(c)
            h = go * tanh_c
            outputs[:, s, :] = h
            steps_cache.append((stacked, gi, gf, go, gg, c_prev, tanh_c))
        caches.append(steps_cache)
        inputs = outputs
    last = inputs[:, -1, :]
    out = last @ params.head_w + params.head_b[0]
    caches.append(last)
    return out, caches


def backward(
    params: LSTMParams, caches: list[Any], d_out: np.ndarray
) -> dict[str, np.ndarray]:
    """Gradients of ``sum(d_out * out)`` with respect to every tensor."""
    last = caches[-1]
    grads: dict[str, np.ndarray] = {
        "head_w": last.T @ d_out,
        "head_b": np.array([d_out.sum()]),
    }
    hidden = params.hidden_size
    n = d_out.shape[0]
    steps = len(caches[0])

    # Gradient flowing into the outputs h_s of the current layer.
    d_outputs = np.zeros((n, steps, hidden))
    d_outputs[:, -1, :] = d_out[:, None] * params.head_w[None, :]

    for layer in range(params.layers - 1, -1, -1):
        w = params.weights[layer]
        in_size = w.shape[0] - hidden
        d_w = np.zeros_like(w)
        d_b = np.zeros(4 * hidden)
        d_inputs = np.zeros((n, steps, in_size))
        dh_next = np.zeros((n, hidden))
        dc_next = np.zeros((n, hidden))
        for s in range(steps - 1, -1, -1):
            stacked, gi, gf, go, gg, c_prev, tanh_c = caches[layer][s]
            dh = d_outputs[:, s, :] + dh_next
            dc = dc_next + dh * go * (1.0 - tanh_c**2)
            dz = np.concatenate(
                [
                    dc * gg * gi * (1.0 - gi),
                    dc * c_prev * gf * (1.0 - gf),
                    dh * tanh_c * go * (1.0 - go),
                    dc * gi * (1.0 - gg**2),
                ],
                axis=1,
            )
            d_w += stacked.T @ dz
            d_b += dz.sum(axis=0)
            d_stacked = dz @ w.T
            d_inputs[:, s, :] = d_stacked[:, :in_size]
            dh_next = d_stacked[:, in_size:]
            dc_next = dc * gf
        grads[f"W{layer}"] = d_w
        grads[f"b{layer}"] = d_b
        d_outputs = d_inputs
    return grads


def mse_loss(params: LSTMParams, x: np.ndarray, y: np.ndarray) -> float:
    out, _ = forward(params, x)
    return float(np.mean((out - y) ** 2))


def loss_and_gradients(
    params: LSTMParams, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error and its analytic gradients."""
    out, caches = forward(params, x)
    residual = out - y
    loss = float(np.mean(residual**2))
    grads = backward(params, caches, 2.0 * residual / y.shape[0])
    return loss, grads


def gradient_check(
    input_size: int,
    hidden_size: int,
    layers: int,
    x: np.ndarray,
    y: np.ndarray,
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    A fresh model is drawn from ``seed``; for every tensor the relative error
    is ``|g_analytic - g_numeric| / (|g_analytic| + |g_numeric|)`` in the
    Euclidean norm, and the maximum over tensors is returned.

    Raises:
        InputValidationError: If ``h`` lies outside ``[1e-6, 1e-4]``
    """
    if not 1e-6 <= h <= 1e-4:
        raise InputValidationError(
            f"Perturbation h={h} is outside [1e-6, 1e-4]",
            field="h",
            value=h,
            expected_type="float in [1e-6, 1e-4]",
        )
    params = LSTMParams.initialize(
        input_size, hidden_size, layers, np.random.default_rng(seed)
    )
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, analytic = loss_and_gradients(params, x, y)

    worst = 0.0
    for name, tensor in params.tensors().items():
        numeric = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        numeric_flat = numeric.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = mse_loss(params, x, y)
            flat[i] = original - h
            minus = mse_loss(params, x, y)
            flat[i] = original
            numeric_flat[i] = (plus - minus) / (2.0 * h)
        diff = np.linalg.norm(analytic[name] - numeric)
        if diff == 0.0:
            continue
        scale = np.linalg.norm(analytic[name]) + np.linalg.norm(numeric)
        worst = max(worst, float(diff / max(scale, 1e-300)))
    return worst
