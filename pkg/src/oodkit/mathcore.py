"""Numeric core: activations, optimizers, seeded RNG, gradient checking.

Parameters are stored as float32 numpy arrays; losses and finite-difference
checks accumulate in float64 so the checks stay meaningful at storage
precision.
"""

import hashlib

import numpy as np

DTYPE = np.float32


class NumericError(RuntimeError):
    """A non-finite value appeared where the pipeline requires finite math."""


def make_rng(seed):
    """Seeded generator (PCG64: same seed gives the same stream on any platform)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(seed, tag):
    """Stable per-stage sub-seed so pipeline stages draw independent streams."""
    digest = hashlib.blake2b(f"{int(seed)}:{tag}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def sigmoid(x):
    """Elementwise logistic function, stable for large |x|."""
    x = np.asarray(x)
    if x.dtype.kind != "f":
        x = x.astype(np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


tanh = np.tanh


def softmax(v):
    """Probability vector from scores; max is subtracted before exponentiation."""
    v = np.asarray(v)
    if v.size < 1:
        raise ValueError("softmax needs at least one entry")
    if not np.all(np.isfinite(v)):
        raise ValueError("softmax input must be finite")
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / np.sum(e)


def glorot_uniform(rng, rows, cols, dtype=DTYPE):
    """Dense weight init: uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out))."""
    s = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-s, s, size=(rows, cols)).astype(dtype)


def _check_shapes(param, grad):
    if param.shape != grad.shape:
        raise ValueError(f"gradient shape {grad.shape} != parameter shape {param.shape}")


class Adam:
    """Adam with bias correction; sparse row updates use the global step count."""

    name = "adam"

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {}
        self._v = {}

    def start_step(self):
        self.t += 1

    def _slots(self, key, param):
        if key not in self._m:
            self._m[key] = np.zeros_like(param)
            self._v[key] = np.zeros_like(param)
        return self._m[key], self._v[key]

    def update(self, key, param, grad):
        _check_shapes(param, grad)
        m, v = self._slots(key, param)
        m += (1.0 - self.beta1) * (grad - m)
        v += (1.0 - self.beta2) * (grad * grad - v)
        m_hat = m / (1.0 - self.beta1 ** self.t)
        v_hat = v / (1.0 - self.beta2 ** self.t)
        param -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(param.dtype)

    def update_rows(self, key, param, rows, grad_rows):
        m, v = self._slots(key, param)
        g = grad_rows
        m[rows] += (1.0 - self.beta1) * (g - m[rows])
        v[rows] += (1.0 - self.beta2) * (g * g - v[rows])
        m_hat = m[rows] / (1.0 - self.beta1 ** self.t)
        v_hat = v[rows] / (1.0 - self.beta2 ** self.t)
        param[rows] -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(param.dtype)

    def step(self, params, grads):
        """One optimizer step over name-matched parameter and gradient dicts."""
        self.start_step()
        for key, param in params.items():
            self.update(key, param, grads[key])


class RmsProp:
    name = "rmsprop"

    def __init__(self, lr=1e-3, rho=0.9, eps=1e-8):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.t = 0
        self._acc = {}

    def start_step(self):
        self.t += 1

    def _slot(self, key, param):
        if key not in self._acc:
            self._acc[key] = np.zeros_like(param)
        return self._acc[key]

    def update(self, key, param, grad):
        _check_shapes(param, grad)
        acc = self._slot(key, param)
        acc += (1.0 - self.rho) * (grad * grad - acc)
        param -= (self.lr * grad / (np.sqrt(acc) + self.eps)).astype(param.dtype)

    def update_rows(self, key, param, rows, grad_rows):
        acc = self._slot(key, param)
        g = grad_rows
        acc[rows] += (1.0 - self.rho) * (g * g - acc[rows])
        param[rows] -= (self.lr * g / (np.sqrt(acc[rows]) + self.eps)).astype(param.dtype)

    def step(self, params, grads):
        self.start_step()
        for key, param in params.items():
            self.update(key, param, grads[key])


class Adadelta:
    name = "adadelta"

    def __init__(self, lr=1.0, rho=0.95, eps=1e-6):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.t = 0
        self._acc_g = {}
        self._acc_dx = {}

    def start_step(self):
        self.t += 1

    def _slots(self, key, param):
        if key not in self._acc_g:
            self._acc_g[key] = np.zeros_like(param)
            self._acc_dx[key] = np.zeros_like(param)
        return self._acc_g[key], self._acc_dx[key]

    def update(self, key, param, grad):
        _check_shapes(param, grad)
        acc_g, acc_dx = self._slots(key, param)
        acc_g += (1.0 - self.rho) * (grad * grad - acc_g)
        dx = -np.sqrt(acc_dx + self.eps) / np.sqrt(acc_g + self.eps) * grad
        acc_dx += (1.0 - self.rho) * (dx * dx - acc_dx)
        param += (self.lr * dx).astype(param.dtype)

    def update_rows(self, key, param, rows, grad_rows):
        acc_g, acc_dx = self._slots(key, param)
        g = grad_rows
        acc_g[rows] += (1.0 - self.rho) * (g * g - acc_g[rows])
        dx = -np.sqrt(acc_dx[rows] + self.eps) / np.sqrt(acc_g[rows] + self.eps) * g
        acc_dx[rows] += (1.0 - self.rho) * (dx * dx - acc_dx[rows])
        param[rows] += (self.lr * dx).astype(param.dtype)

    def step(self, params, grads):
        self.start_step()
        for key, param in params.items():
            self.update(key, param, grads[key])


OPTIMIZERS = {"adam": Adam, "rmsprop": RmsProp, "adadelta": Adadelta}


def make_optimizer(name, **hyper):
    try:
        cls = OPTIMIZERS[name]
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}")
    return cls(**hyper)


def clip_global_norm(grads, max_norm):
    """Scale all gradients in place so their joint L2 norm is at most max_norm."""
    total = 0.0
    for g in grads:
        total += float(np.sum(np.asarray(g, dtype=np.float64) ** 2))
    norm = np.sqrt(total)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads:
            g *= g.dtype.type(scale)
    return norm


def grad_check(loss_fn, params, grads, epsilon=1e-5, max_coords=None, rng=None):
    """Compare analytic gradients against central finite differences.

    loss_fn is a zero-argument callable evaluating the scalar loss at the
    current parameter values; params and grads are name-matched dicts. Each
    sampled coordinate is perturbed by +/- epsilon and the relative error
    |analytic - numeric| / max(1, |analytic|, |numeric|) is accumulated in
    float64. Returns the max over all sampled coordinates.
    """
    if not (1e-6 <= epsilon <= 1e-3):
        raise ValueError("epsilon must lie in [1e-6, 1e-3]")
    if rng is None:
        rng = make_rng(0)
    worst = 0.0
    for key, param in params.items():
        grad = grads[key]
        _check_shapes(param, grad)
        size = param.size
        if max_coords is None or size <= max_coords:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=max_coords, replace=False)
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = float(loss_fn())
            flat[i] = orig - epsilon
            f_minus = float(loss_fn())
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NumericError("loss is not finite during gradient check")
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            analytic = float(gflat[i])
            rel = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
            worst = max(worst, rel)
    return worst
