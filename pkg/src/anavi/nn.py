"""Small numpy neural-network toolkit with hand-written backward passes."""

from __future__ import annotations

import math

import numpy as np

GELU_C = math.sqrt(2.0 / math.pi)


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError


class Linear(Layer):
    def __init__(self, n_in, n_out, rng):
        super().__init__()
        bound = 1.0 / math.sqrt(n_in)
        self.params["W"] = rng.uniform(-bound, bound, (n_in, n_out))
        self.params["b"] = rng.uniform(-bound, bound, n_out)

    def forward(self, x, train=False):
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, g):
        self.grads["W"] = self._x.T @ g
        self.grads["b"] = g.sum(axis=0)
        return g @ self.params["W"].T


class BatchNorm(Layer):
    """Per-feature batch normalization; batch statistics when training,
    running statistics otherwise."""

    def __init__(self, n, momentum=0.1, eps=1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(n)
        self.params["beta"] = np.zeros(n)
        self.buffers["running_mean"] = np.zeros(n)
        self.buffers["running_var"] = np.ones(n)
        self.track_stats = True

    def forward(self, x, train=False):
        if train:
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            if self.track_stats:
                n = x.shape[0]
                unbiased = var * n / (n - 1) if n > 1 else var
                m = self.momentum
                self.buffers["running_mean"] = (1 - m) * self.buffers["running_mean"] + m * mean
                self.buffers["running_var"] = (1 - m) * self.buffers["running_var"] + m * unbiased
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std, train)
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, g):
        xhat, inv_std, train = self._cache
        gamma = self.params["gamma"]
        self.grads["gamma"] = (g * xhat).sum(axis=0)
        self.grads["beta"] = g.sum(axis=0)
        gx = g * gamma
        if not train:
            return gx * inv_std
        n = g.shape[0]
        return inv_std / n * (n * gx - gx.sum(axis=0) - xhat * (gx * xhat).sum(axis=0))


class ReLU(Layer):
    def forward(self, x, train=False):
        self._mask = x > 0
        return x * self._mask

    def backward(self, g):
        return g * self._mask


class GELU(Layer):
    """tanh approximation of GELU."""

    def forward(self, x, train=False):
        u = GELU_C * (x + 0.044715 * x ** 3)
        t = np.tanh(u)
        self._cache = (x, t)
        return 0.5 * x * (1.0 + t)

    def backward(self, g):
        x, t = self._cache
        du = GELU_C * (1.0 + 3 * 0.044715 * x * x)
        return g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


ACTIVATIONS = {"relu": ReLU, "gelu": GELU}


class Sequential(Layer):
    def __init__(self, layers):
        super().__init__()
        self.layers = list(layers)

    def forward(self, x, train=False):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, g):
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def named_layers(self, prefix=""):
        for i, layer in enumerate(self.layers):
            yield f"{prefix}{i}", layer


def mlp_blocks(sizes, activation, batch_norm, rng, final_linear=True):
    """Blocks of linear [+ batch norm] + activation; the last size is a bare
    linear output layer when ``final_linear``."""
    layers = []
    n_blocks = len(sizes) - 1
    for i in range(n_blocks):
        layers.append(Linear(sizes[i], sizes[i + 1], rng))
        if final_linear and i == n_blocks - 1:
            break
        if batch_norm:
            layers.append(BatchNorm(sizes[i + 1]))
        layers.append(ACTIVATIONS[activation]())
    return layers


def huber(pred, target, delta=0.1):
    """Mean Huber loss and its gradient with respect to ``pred``."""
    e = pred - target
    a = np.abs(e)
    quad = a <= delta
    loss = np.where(quad, 0.5 * e * e, delta * (a - 0.5 * delta))
    grad = np.where(quad, e, delta * np.sign(e)) / e.size
    return float(loss.mean()), grad


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy and its gradient with respect to ``logits``."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsum
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(self, params: dict, lr=0.01, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, p in self.params.items():
            g = grads[k]
            if self.weight_decay:
                p *= 1.0 - self.lr * self.weight_decay
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
