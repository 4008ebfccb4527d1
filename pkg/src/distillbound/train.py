"""Small dense networks with manual backprop, SGD/Adam, and the distillation step."""

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .compgraph import from_mlp
from .errors import NumericalError, ShapeError
from .linalg import read_dbm, row_norms, spectral_norm, write_dbm
from .margins import softmax_error, softmax_gamma

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
SPECTRAL_COEF = 1.0


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 1e-3
    schedule: str = "constant"
    batch_size: int = 64
    epochs: int = 20
    seed: int = 0
    gamma: float = 1.0

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def rate(self, epoch):
        if self.schedule == "cosine":
            return self.lr * 0.5 * (1.0 + math.cos(math.pi * epoch / max(self.epochs, 1)))
        return self.lr

    def to_json(self):
        return asdict(self)


@dataclass
class DenseNet:
    """Bias-free dense chain; ``input_bias`` appends a constant-1 input feature."""

    weights: list
    gates: list = None
    input_bias: bool = False

    def __post_init__(self):
        self.weights = [np.array(w, dtype=np.float64) for w in self.weights]
        if self.gates is None:
            self.gates = ["relu"] * (len(self.weights) - 1) + ["identity"]
        if len(self.gates) != len(self.weights):
            raise ShapeError("need one gate per layer")
        for i in range(1, len(self.weights)):
            if self.weights[i].shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(f"layer {i} input dim does not match layer {i - 1} output")

    @property
    def depth(self):
        return len(self.weights)

    @property
    def in_dim(self):
        return self.weights[0].shape[1] - int(self.input_bias)

    @property
    def out_dim(self):
        return self.weights[-1].shape[0]

    def shapes(self):
        return [w.shape for w in self.weights]

    def prepare(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"expected inputs with {self.in_dim} columns, got shape {x.shape}")
        return np.hstack([x, np.ones((x.shape[0], 1))]) if self.input_bias else x

    def forward(self, x, chunk=None):
        if chunk is not None and x.shape[0] > chunk:
            return np.concatenate([self.forward(x[i:i + chunk]) for i in range(0, x.shape[0], chunk)])
        a = self.prepare(x)
        for w, gate in zip(self.weights, self.gates):
            a = a @ w.T
            if gate == "relu":
                np.maximum(a, 0.0, out=a)
        return a

    def _forward_cache(self, x):
        acts = [self.prepare(x)]
        for w, gate in zip(self.weights, self.gates):
            z = acts[-1] @ w.T
            acts.append(np.maximum(z, 0.0) if gate == "relu" else z)
        return acts

    def backward(self, acts, grad_out):
        """Weight gradients given the cached activations and d loss / d output."""
        grads = [None] * self.depth
        g = grad_out
        for i in range(self.depth - 1, -1, -1):
            if self.gates[i] == "relu":
                g = g * (acts[i + 1] > 0)
            grads[i] = g.T @ acts[i]
            if i:
                g = g @ self.weights[i]
        return grads

    def copy(self):
        return DenseNet([w.copy() for w in self.weights], list(self.gates), self.input_bias)

    def to_graph(self):
        return from_mlp(self.weights, self.gates)

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        meta = {"format": "dense-net/1", "gates": self.gates, "input_bias": self.input_bias,
                "weights": [f"W{i}.dbm" for i in range(self.depth)]}
        for name, w in zip(meta["weights"], self.weights):
            write_dbm(os.path.join(directory, name), w)
        with open(os.path.join(directory, "net.json"), "w") as fh:
            json.dump(meta, fh, indent=2)

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "net.json")) as fh:
            meta = json.load(fh)
        ws = [read_dbm(os.path.join(directory, name)) for name in meta["weights"]]
        return cls(ws, meta["gates"], meta["input_bias"])


def init_dense(in_dim, hidden, out_dim, seed=0, input_bias=False):
    """He-normal initialization for ``len(hidden) + 1`` layers."""
    rng = np.random.default_rng(seed)
    dims = [in_dim + int(input_bias), *hidden, out_dim]
    ws = [rng.standard_normal((o, i)) * math.sqrt(2.0 / i) for i, o in zip(dims[:-1], dims[1:])]
    return DenseNet(ws, input_bias=input_bias)


def same_architecture(a, b):
    return a.shapes() == b.shapes() and a.gates == b.gates and a.input_bias == b.input_bias


# losses: each returns (value, d value / d logits)

def cross_entropy(logits, labels):
    n = logits.shape[0]
    p = softmax_gamma(logits, 1.0)
    rows = np.arange(n)
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    val = float(np.mean(lse - z[rows, labels]))
    grad = p.copy()
    grad[rows, labels] -= 1.0
    return val, grad / n


def phi_loss(logits, target_probs, gamma):
    """Mean l1 distance to fixed target softmaxes, with ``sign(0) = 0``."""
    m = logits.shape[0]
    p = softmax_gamma(logits, gamma)
    diff = p - target_probs
    val = float(np.abs(diff).sum(axis=1).mean())
    sgn = np.sign(diff)
    grad = p * (sgn - (p * sgn).sum(axis=1, keepdims=True)) / gamma
    return val, grad / m


class SpectralTracker:
    """Warm power-iteration vectors, refreshed once per optimizer step."""

    def __init__(self, weights, seed=0):
        rng = np.random.default_rng(seed)
        self.v = []
        for w in weights:
            v = rng.standard_normal(w.shape[1])
            self.v.append(v / np.linalg.norm(v))

    def refresh(self, weights):
        out = []
        for i, w in enumerate(weights):
            v = w.T @ (w @ self.v[i])
            nv = np.linalg.norm(v)
            if nv > 0:
                self.v[i] = v / nv
            u = w @ self.v[i]
            sigma = float(np.linalg.norm(u))
            out.append((sigma, u / sigma if sigma > 0 else u, self.v[i]))
        return out


def complexity_surrogate(net, mode="A", coef=SPECTRAL_COEF):
    """Mode A: sum of (2,1) norms.  Mode B adds ``coef * sum ln(1 + ||W_i||_2)``."""
    weights = net.weights if isinstance(net, DenseNet) else net
    val = float(sum(row_norms(w).sum() for w in weights))
    if mode == "B":
        val += coef * sum(math.log1p(spectral_norm(w)) for w in weights)
    elif mode != "A":
        raise ValueError(f"unknown complexity mode {mode!r}")
    return val


def complexity_grad(weights, mode="A", coef=SPECTRAL_COEF, spectral=None):
    """Subgradient; zero rows get a zero subgradient.

    ``spectral`` supplies ``(sigma, u, v)`` per layer for mode B; without it
    converged singular vectors are computed.
    """
    grads = []
    for w in weights:
        nr = row_norms(w)
        safe = np.where(nr > 0, nr, 1.0)
        grads.append(np.where(nr[:, None] > 0, w / safe[:, None], 0.0))
    if mode == "B":
        if spectral is None:
            spectral = [_top_singular(w) for w in weights]
        for g, (sigma, u, v) in zip(grads, spectral):
            g += coef * np.outer(u, v) / (1.0 + sigma)
    elif mode != "A":
        raise ValueError(f"unknown complexity mode {mode!r}")
    return grads


def _top_singular(w):
    u, sv, vt = np.linalg.svd(w, full_matrices=False)
    return float(sv[0]), u[:, 0], vt[0]


class _Adam:
    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads, lr):
        b1, b2 = ADAM_BETAS
        self.t += 1
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


class _SGD:
    def __init__(self, params):
        pass

    def step(self, params, grads, lr):
        for p, g in zip(params, grads):
            p -= lr * g


def _optimizer(cfg, params):
    return _Adam(params) if cfg.optimizer == "adam" else _SGD(params)


@dataclass
class TrainHistory:
    losses: list = field(default_factory=list)
    train_err: float = None


def _minibatches(rng, n, batch):
    perm = rng.permutation(n)
    for i in range(0, n, batch):
        yield perm[i:i + batch]


def _check_finite(val, net, snapshot):
    if not math.isfinite(val) or not all(np.isfinite(w).all() for w in net.weights):
        raise NumericalError("training diverged (non-finite loss or weights)", last=snapshot)


def train_initial(net, x, y, cfg):
    """Cross-entropy training of ``net`` (a copy is returned); deterministic in ``cfg.seed``."""
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] != y.shape[0]:
        raise ShapeError("inputs and labels differ in length")
    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    opt = _optimizer(cfg, net.weights)
    hist = TrainHistory()
    snapshot = net.copy()
    for epoch in range(cfg.epochs):
        lr = cfg.rate(epoch)
        total = 0.0
        for idx in _minibatches(rng, x.shape[0], cfg.batch_size):
            acts = net._forward_cache(x[idx])
            val, g = cross_entropy(acts[-1], y[idx])
            _check_finite(val, net, snapshot)
            opt.step(net.weights, net.backward(acts, g), lr)
            total += val * len(idx)
        _check_finite(total, net, snapshot)
        snapshot = net.copy()
        hist.losses.append(total / x.shape[0])
    hist.train_err = float(np.mean(net.forward(x).argmax(axis=1) != y))
    net.history = hist
    return net


def composite_loss(g, target_probs, z, lam, gamma, mode="A"):
    """Full-batch ``Phi(f, g) + lam * complexity(g)`` on the points ``z``."""
    val, _ = phi_loss(g.forward(z), target_probs, gamma)
    return val + lam * complexity_surrogate(g, mode)


def distill_step(f, g_init, lam, z, cfg, mode="A", target_probs=None):
    """Approximately minimize ``Phi_{gamma}(f, g) + lam * complexity(g)`` over ``z``."""
    if not same_architecture(f, g_init):
        raise ShapeError("f and g must share an architecture")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if target_probs is None:
        target_probs = softmax_gamma(f.forward(z), cfg.gamma)
    g = g_init.copy()
    rng = np.random.default_rng(cfg.seed)
    opt = _optimizer(cfg, g.weights)
    tracker = SpectralTracker(g.weights, cfg.seed) if mode == "B" else None
    snapshot = g.copy()
    for epoch in range(cfg.epochs):
        lr = cfg.rate(epoch)
        for idx in _minibatches(rng, z.shape[0], cfg.batch_size):
            acts = g._forward_cache(z[idx])
            val, dlog = phi_loss(acts[-1], target_probs[idx], cfg.gamma)
            _check_finite(val, g, snapshot)
            grads = g.backward(acts, dlog)
            if lam > 0:
                spec = tracker.refresh(g.weights) if tracker else None
                for gr, cg in zip(grads, complexity_grad(g.weights, mode, spectral=spec)):
                    gr += lam * cg
            opt.step(g.weights, grads, lr)
        _check_finite(0.0, g, snapshot)
        snapshot = g.copy()
    return g


def train_risk(net, x, y, gamma):
    """Training softmax error, the risk used to seed the ladder."""
    return softmax_error(net.forward(x), y, gamma)
