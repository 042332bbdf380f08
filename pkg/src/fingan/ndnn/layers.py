"""Stateful layer wrappers around :mod:`fingan.ndnn.functional`.

Each layer caches what its last ``forward`` needs and accumulates parameter
gradients into ``self.grads`` on ``backward``. Call ``zero_grad`` between
independent backward passes.
"""

from __future__ import annotations

import numpy as np

from fingan.ndnn import functional as F


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def hyper(self) -> dict:
        return {}

    def forward(self, x, train=True):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def zero_grad(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)

    def _accumulate(self, **grads):
        for k, g in grads.items():
            self.grads[k] = self.grads[k] + g if k in self.grads else g

    def __repr__(self):
        hp = ", ".join(f"{k}={v}" for k, v in self.hyper().items())
        return f"{type(self).__name__}({hp})"


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in, n_out, rng=None):
        super().__init__()
        self.n_in, self.n_out = int(n_in), int(n_out)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params["W"] = rng.standard_normal((self.n_in, self.n_out)) * np.sqrt(2.0 / self.n_in)
        self.params["b"] = np.zeros(self.n_out)
        self.zero_grad()

    def hyper(self):
        return {"n_in": self.n_in, "n_out": self.n_out}

    def forward(self, x, train=True):
        y, self._cache = F.dense_forward(self.params["W"], self.params["b"], x)
        return y

    def backward(self, grad_out):
        dW, db, dx = F.dense_backward(self._cache, self.params["W"], grad_out)
        self._accumulate(W=dW, b=db)
        return dx


class Conv1d(Layer):
    kind = "conv1d"

    def __init__(self, in_ch, out_ch, kernel_size=3, stride=1, padding=1, rng=None):
        super().__init__()
        self.in_ch, self.out_ch = int(in_ch), int(out_ch)
        self.kernel_size, self.stride, self.padding = int(kernel_size), int(stride), int(padding)
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = self.in_ch * self.kernel_size
        self.params["W"] = rng.standard_normal((self.out_ch, self.in_ch, self.kernel_size)) * np.sqrt(2.0 / fan_in)
        self.params["b"] = np.zeros(self.out_ch)
        self.zero_grad()

    def hyper(self):
        return {"in_ch": self.in_ch, "out_ch": self.out_ch, "kernel_size": self.kernel_size,
                "stride": self.stride, "padding": self.padding}

    def out_len(self, length):
        return F.conv1d_out_len(length, self.kernel_size, self.stride, self.padding)

    def forward(self, x, train=True):
        y, self._cache = F.conv1d_forward(self.params["W"], self.params["b"], x, self.stride, self.padding)
        return y

    def backward(self, grad_out):
        dW, db, dx = F.conv1d_backward(self._cache, self.params["W"], grad_out)
        self._accumulate(W=dW, b=db)
        return dx


class BatchNorm1d(Layer):
    kind = "batchnorm"

    def __init__(self, features, momentum=0.1, eps=1e-5):
        super().__init__()
        if not eps > 0:
            raise ValueError("batchnorm epsilon must be > 0")
        self.features, self.momentum, self.eps = int(features), float(momentum), float(eps)
        self.params["gamma"] = np.ones(self.features)
        self.params["beta"] = np.zeros(self.features)
        self.buffers["running_mean"] = np.zeros(self.features)
        self.buffers["running_var"] = np.ones(self.features)
        self.zero_grad()

    def hyper(self):
        return {"features": self.features, "momentum": self.momentum, "eps": self.eps}

    def forward(self, x, train=True):
        y, self._cache = F.batchnorm_forward(
            self.params["gamma"], self.params["beta"], x,
            self.buffers["running_mean"], self.buffers["running_var"],
            mode="train" if train else "eval", momentum=self.momentum, eps=self.eps,
        )
        return y

    def backward(self, grad_out):
        dgamma, dbeta, dx = F.batchnorm_backward(self._cache, self.params["gamma"], grad_out)
        self._accumulate(gamma=dgamma, beta=dbeta)
        return dx


class LeakyReLU(Layer):
    kind = "leaky_relu"

    def __init__(self, slope=0.01):
        super().__init__()
        self.slope = float(slope)

    def hyper(self):
        return {"slope": self.slope}

    def forward(self, x, train=True):
        self._x = x
        return F.leaky_relu(x, self.slope)

    def backward(self, grad_out):
        return F.leaky_relu_backward(self._x, grad_out, self.slope)


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=True):
        self._x = x
        return F.relu(x)

    def backward(self, grad_out):
        return F.relu_backward(self._x, grad_out)


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, train=True):
        self._y = F.sigmoid(x)
        return self._y

    def backward(self, grad_out):
        return F.sigmoid_backward(self._y, grad_out)


class Softplus(Layer):
    kind = "softplus"

    def forward(self, x, train=True):
        self._x = x
        return F.softplus(x)

    def backward(self, grad_out):
        return F.softplus_backward(self._x, grad_out)


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, train=True):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._shape)


class Sequential:
    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x, train=True):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    __call__ = forward

    def backward(self, grad_out):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def parameters(self):
        """``[(layer, name), ...]`` for every trainable array, in a fixed order."""
        return [(layer, name) for layer in self.layers for name in layer.params]

    def num_params(self):
        return sum(layer.params[n].size for layer, n in self.parameters())

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)


LAYER_TYPES = {cls.kind: cls for cls in (Dense, Conv1d, BatchNorm1d, LeakyReLU, ReLU, Sigmoid, Softplus, Flatten)}


def build_layer(kind, hyper):
    try:
        cls = LAYER_TYPES[kind]
    except KeyError:
        raise ValueError(f"unknown layer kind {kind!r}") from None
    return cls(**hyper)
