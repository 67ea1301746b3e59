"""Neural network layers with explicit forward/backward passes.

All math is plain NumPy so training is bit-reproducible for a fixed seed
and thread count. Parameters are float32 (matching the on-disk format);
gradient checking upcasts a copy of the model to float64.

Each layer exposes:
  params()   ordered list of Param records (serialization order)
  forward(x, train)  caches whatever backward needs
  backward(grad)     accumulates into param.grad, returns input gradient
  state()    extra non-trainable tensors (batch-norm running stats)
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Param:
    name: str
    value: np.ndarray
    grad: np.ndarray | None = None
    is_weight: bool = True  # weight-decay applies only to true weights

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)


class Layer:
    def params(self) -> list[Param]:
        return []

    def state(self) -> list[tuple[str, np.ndarray]]:
        return []

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def astype(self, dtype) -> None:
        for p in self.params():
            p.value = p.value.astype(dtype)


def _uniform_fan_in(rng: np.random.Generator, shape: tuple, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape).astype(dtype)


class Conv1d(Layer):
    """1-D convolution over the length axis, (N, C_in, L) -> (N, C_out, L_out)."""

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int,
                 padding: int, rng: np.random.Generator, dtype=np.float32):
        self.c_in, self.c_out = c_in, c_out
        self.kernel, self.stride, self.padding = kernel, stride, padding
        self.weight = Param("weight", _uniform_fan_in(rng, (c_out, c_in, kernel),
                                                      c_in * kernel, dtype))
        self.bias = Param("bias", np.zeros(c_out, dtype=dtype), is_weight=False)

    def params(self):
        return [self.weight, self.bias]

    def out_len(self, length: int) -> int:
        return (length + 2 * self.padding - self.kernel) // self.stride + 1

    def forward(self, x, train):
        n, c, length = x.shape
        l_out = self.out_len(length)
        pad = self.padding
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
        # gather windows as strided slices per kernel offset: (N, L_out, C*K)
        cols = np.empty((n, l_out, c, self.kernel), dtype=x.dtype)
        for k in range(self.kernel):
            cols[:, :, :, k] = xp[:, :, k : k + self.stride * l_out : self.stride].transpose(0, 2, 1)
        cols = cols.reshape(n * l_out, c * self.kernel)
        w = self.weight.value.reshape(self.c_out, -1)
        out = cols @ w.T + self.bias.value
        self._cache = (cols, x.shape)
        return out.reshape(n, l_out, self.c_out).transpose(0, 2, 1)

    def backward(self, grad):
        cols, x_shape = self._cache
        n, c, length = x_shape
        l_out = grad.shape[2]
        g = grad.transpose(0, 2, 1).reshape(n * l_out, self.c_out)
        self.weight.grad += (g.T @ cols).reshape(self.weight.value.shape)
        self.bias.grad += g.sum(axis=0)
        dcols = (g @ self.weight.value.reshape(self.c_out, -1))
        dcols = dcols.reshape(n, l_out, c, self.kernel)
        pad = self.padding
        dxp = np.zeros((n, c, length + 2 * pad), dtype=grad.dtype)
        for k in range(self.kernel):
            dxp[:, :, k : k + self.stride * l_out : self.stride] += dcols[:, :, :, k].transpose(0, 2, 1)
        return dxp[:, :, pad : pad + length]


class BatchNorm1d(Layer):
    """Per-channel normalization over (N, L); running stats for eval mode."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5,
                 dtype=np.float32):
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = Param("gamma", np.ones(channels, dtype=dtype), is_weight=False)
        self.beta = Param("beta", np.zeros(channels, dtype=dtype), is_weight=False)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def params(self):
        return [self.gamma, self.beta]

    def state(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def astype(self, dtype):
        super().astype(dtype)
        self.running_mean = self.running_mean.astype(dtype)
        self.running_var = self.running_var.astype(dtype)

    def forward(self, x, train):
        if train:
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            m = self.momentum
            self.running_mean = ((1 - m) * self.running_mean + m * mean).astype(x.dtype)
            self.running_var = ((1 - m) * self.running_var + m * var).astype(x.dtype)
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[:, None]) * inv_std[:, None]
        self._cache = (xhat, inv_std, train, x.shape)
        return self.gamma.value[:, None] * xhat + self.beta.value[:, None]

    def backward(self, grad):
        xhat, inv_std, train, shape = self._cache
        n_eff = shape[0] * shape[2]
        self.gamma.grad += (grad * xhat).sum(axis=(0, 2))
        self.beta.grad += grad.sum(axis=(0, 2))
        gy = grad * self.gamma.value[:, None]
        if not train:
            return gy * inv_std[:, None]
        term = gy - gy.mean(axis=(0, 2))[:, None] \
            - xhat * (gy * xhat).mean(axis=(0, 2))[:, None]
        return term * inv_std[:, None]


class LeakyReLU(Layer):
    def __init__(self, slope: float = 0.01):
        self.slope = slope

    def forward(self, x, train):
        self._mask = x > 0
        return np.where(self._mask, x, self.slope * x)

    def backward(self, grad):
        return np.where(self._mask, grad, self.slope * grad)


class MaxPool1d(Layer):
    """Size-2/stride-2 pooling; ties route gradient to the first maximum."""

    def __init__(self, size: int = 2, stride: int = 2):
        self.size, self.stride = size, stride

    def forward(self, x, train):
        n, c, length = x.shape
        l_out = (length - self.size) // self.stride + 1
        windows = x[:, :, : self.stride * l_out].reshape(n, c, l_out, self.size)
        self._argmax = windows.argmax(axis=3)
        self._x_shape = x.shape
        return np.take_along_axis(windows, self._argmax[..., None], axis=3)[..., 0]

    def backward(self, grad):
        n, c, length = self._x_shape
        l_out = grad.shape[2]
        dwin = np.zeros((n, c, l_out, self.size), dtype=grad.dtype)
        np.put_along_axis(dwin, self._argmax[..., None], grad[..., None], axis=3)
        dx = np.zeros((n, c, length), dtype=grad.dtype)
        dx[:, :, : self.stride * l_out] = dwin.reshape(n, c, self.stride * l_out)
        return dx


class Flatten(Layer):
    def forward(self, x, train):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Dense(Layer):
    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.weight = Param("weight", _uniform_fan_in(rng, (fan_out, fan_in),
                                                      fan_in, dtype))
        self.bias = Param("bias", np.zeros(fan_out, dtype=dtype), is_weight=False)

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x, train):
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, grad):
        self.weight.grad += grad.T @ self._x
        self.bias.grad += grad.sum(axis=0)
        return grad @ self.weight.value


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy; returns (loss, dlogits)."""
    n = logits.shape[0]
    probs = softmax(logits)
    eps = np.finfo(logits.dtype).tiny
    loss = -np.log(probs[np.arange(n), labels] + eps).mean()
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return float(loss), dlogits / n


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Half mean squared error over the batch: (1/2N) sum of squared I/Q errors."""
    n = pred.shape[0]
    diff = pred - target
    loss = float((diff**2).sum() / (2 * n))
    return loss, diff / n
