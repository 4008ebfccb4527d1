"""Importance-sampling constructions behind the covering arguments.

Each construction is an existence statement proved by the probabilistic
method.  Here it is realised as best-of-``draws`` independent samples; when the
best draw still misses the guaranteed error, the number of draws is doubled
(``retries`` times) before giving up with :class:`NumericalError`.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NumericalError, PreconditionError, ShapeError, UnsupportedError
from .linalg import as_matrix, norm21_of_transpose, project_frobenius, spectral_norm

DEFAULT_DRAWS = 32
DEFAULT_RETRIES = 3


@dataclass
class SamplingMatrix:
    """Diagonal ``M = sum_l z_l e_{i_l} e_{i_l}^T / ||A e_{i_l}||`` stored by draw."""

    indices: np.ndarray
    z: np.ndarray
    col_norms: np.ndarray
    source_dims: int

    @property
    def k(self):
        return len(self.indices)

    @property
    def coefficients(self):
        """Per-draw diagonal contribution ``z_l / ||A e_{i_l}||``."""
        if self.k == 0:
            return np.zeros(0)
        return self.z / self.col_norms

    def diagonal(self):
        diag = np.zeros(self.source_dims)
        np.add.at(diag, self.indices, self.coefficients)
        return diag

    def dense(self):
        return np.diag(self.diagonal())

    def support(self):
        return np.unique(self.indices)

    def to_json(self):
        return {
            "indices": [int(i) for i in self.indices],
            "weights": [float(w) for w in self.z],
            "col_norms": [float(c) for c in self.col_norms],
            "dims": int(self.source_dims),
        }

    @classmethod
    def from_json(cls, d):
        return cls(np.asarray(d["indices"], dtype=np.int64), np.asarray(d["weights"], dtype=np.float64),
                   np.asarray(d["col_norms"], dtype=np.float64), int(d["dims"]))

    def dumps(self):
        return json.dumps(self.to_json())


def _empty_sampling(m):
    return SamplingMatrix(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0), m)


def _best_of(sample, score, bound_sq, draws, retries, require_bound, what):
    """Run ``sample(n_draws) -> (idx, coef, extra)`` and keep the lowest ``score``.

    The draw count doubles on each retry while the best squared error exceeds
    ``bound_sq``.
    """
    n_draws = draws
    best = None
    for attempt in range(retries + 1):
        cand = sample(n_draws)
        errs = score(cand)
        t = int(np.argmin(errs))
        if best is None or errs[t] < best[0]:
            best = (float(errs[t]), cand, t)
        if best[0] ** 2 <= bound_sq * (1 + 1e-12):
            return best
        n_draws *= 2
    if require_bound:
        raise NumericalError(
            f"{what}: best squared error {best[0] ** 2:.6g} exceeds guarantee {bound_sq:.6g} "
            f"after {retries} doublings", last=best)
    return best


def maurey_product(A, B, k, draws=DEFAULT_DRAWS, seed=0, retries=DEFAULT_RETRIES, require_bound=True):
    """Sample ``k`` columns with probabilities ``||a_i||^2 / ||A||_F^2``.

    Returns ``(M, error)`` with ``error = ||A B^T - A M B^T||_F`` for the best
    draw; the guarantee is ``error^2 <= ||A||_F^2 ||B||_F^2 / k``.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"A has {A.shape[1]} columns, B has {B.shape[1]}")
    if k < 1:
        raise ValueError("k must be >= 1")
    m = A.shape[1]
    target = A @ B.T
    col = np.sqrt(np.sum(A * A, axis=0))
    total = float(np.sum(col**2))
    if total == 0.0:
        return _empty_sampling(m), float(np.linalg.norm(target))
    bound_sq = total * float(np.sum(B * B)) / k
    return _maurey_core(A, B, target, col, total, k, bound_sq, draws, seed, retries, require_bound, "maurey_product")


def _maurey_core(A, B, target, col, total, k, bound_sq, draws, seed, retries, require_bound, what):
    m = A.shape[1]
    probs = col**2 / total
    rng = np.random.default_rng(seed)

    def sample(n_draws):
        idx = rng.choice(m, size=(n_draws, k), p=probs)
        coef = total / (k * col[idx] ** 2)
        return idx, coef

    def score(cand):
        idx, coef = cand
        return kernels.outer_residual_norms(target, A, B, idx, idx, coef)

    err, (idx, _), t = _best_of(sample, score, bound_sq, draws, retries, require_bound, what)
    chosen = idx[t]
    z = total / (k * col[chosen])
    return SamplingMatrix(chosen.astype(np.int64), z, col[chosen].copy(), m), err


def maurey_product_bounded(A, B, k, draws=DEFAULT_DRAWS, seed=0, retries=DEFAULT_RETRIES, require_bound=True):
    """Maurey sampling after zeroing columns shorter than ``||A||_F / sqrt(m k)``.

    Returns ``(M, error, max_weight)``; guarantees ``error^2 <= 4 ||A||^2 ||B||^2 / k``
    and every weight ``z <= ||A||_F sqrt(m / k)``.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"A has {A.shape[1]} columns, B has {B.shape[1]}")
    if k < 1:
        raise ValueError("k must be >= 1")
    m = A.shape[1]
    target = A @ B.T
    col = np.sqrt(np.sum(A * A, axis=0))
    fro = float(np.sqrt(np.sum(col**2)))
    if fro == 0.0:
        return _empty_sampling(m), float(np.linalg.norm(target)), 0.0
    tau = fro / math.sqrt(m * k)
    kept = col >= tau
    col_tau = np.where(kept, col, 0.0)
    total_tau = float(np.sum(col_tau**2))
    bound_sq = 4.0 * fro**2 * float(np.sum(B * B)) / k
    # A M = A_tau M because M is supported on the kept columns
    sm, err = _maurey_core(A, B, target, col_tau, total_tau, k, bound_sq, draws, seed, retries,
                           require_bound, "maurey_product_bounded")
    cap = fro * math.sqrt(m / k)
    sm.z = np.minimum(sm.z, cap)
    return sm, err, float(sm.z.max())


@dataclass
class CoverElement:
    """Sparse ``W_hat = sum_l c_l e_{i_l} e_{j_l}^T`` from the (2,1)-norm cover."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    shape: tuple

    def dense(self):
        out = np.zeros(self.shape)
        np.add.at(out, (self.rows, self.cols), self.values)
        return out


def cover21_log_cardinality(rows, cols, k):
    """``ln |cover family| <= k ln(2 * rows * cols)``."""
    return k * math.log(2 * rows * cols)


def cover21_sample(W, X, r, k, draws=DEFAULT_DRAWS, seed=0, retries=DEFAULT_RETRIES, require_bound=True):
    """Pick an element of the (2,1)-norm matrix cover close to ``W`` on data ``X``.

    ``W`` is (h x d), ``X`` is (n x d) and ``||W^T||_{2,1} <= r`` is required.
    Each of the ``k`` terms is ``(r ||X||_F / k) s e_i e_j^T / ||X e_j||``; the
    guarantee is ``||W X^T - W_hat X^T||_F^2 <= r^2 ||X||_F^2 / k``.
    """
    W = as_matrix(W, "W")
    X = as_matrix(X, "X")
    if W.shape[1] != X.shape[1]:
        raise ShapeError(f"W has {W.shape[1]} columns, X has {X.shape[1]}")
    if k < 1:
        raise ValueError("k must be >= 1")
    measured = norm21_of_transpose(W)
    if measured > r * (1 + 1e-12) + 1e-300:
        raise PreconditionError(f"||W^T||_(2,1) = {measured} exceeds r = {r}")
    h, d = W.shape
    target = W @ X.T
    xcol = np.sqrt(np.sum(X * X, axis=0))
    xfro = float(np.sqrt(np.sum(xcol**2)))
    empty = CoverElement(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0), W.shape)
    if not np.any(W) or xfro == 0.0:
        # k/2 cancelling pairs (or nothing) realise W_hat X^T = 0 exactly
        return empty, float(np.linalg.norm(target))
    q = np.abs(W) * xcol[None, :] / (r * xfro)
    slack = max(0.0, 1.0 - float(q.sum()))
    j0 = int(np.flatnonzero(xcol > 0)[0])
    # outcomes: every (i, j, sign(W_ij)) plus a +/- pair on (0, j0) carrying the slack
    flat_q = q.ravel()
    probs = np.concatenate([flat_q, [slack / 2, slack / 2]])
    probs = probs / probs.sum()
    rows = np.concatenate([np.repeat(np.arange(h), d), [0, 0]])
    cols = np.concatenate([np.tile(np.arange(d), h), [j0, j0]])
    signs = np.concatenate([np.sign(W).ravel(), [1.0, -1.0]])
    safe = np.where(xcol > 0, xcol, 1.0)
    scale = r * xfro / k
    eye = np.eye(h)
    rng = np.random.default_rng(seed)

    def sample(n_draws):
        pick = rng.choice(len(probs), size=(n_draws, k), p=probs)
        coef = scale * signs[pick] / safe[cols[pick]]
        return pick, coef

    def score(cand):
        pick, coef = cand
        return kernels.outer_residual_norms(target, eye, X, rows[pick], cols[pick], coef)

    bound_sq = r**2 * xfro**2 / k
    err, (pick, coef), t = _best_of(sample, score, bound_sq, draws, retries, require_bound, "cover21_sample")
    return CoverElement(rows[pick[t]].astype(np.int64), cols[pick[t]].astype(np.int64), coef[t].copy(), W.shape), err


@dataclass
class SparsifiedNetwork:
    sampling: list
    kept: list
    radii: list
    max_weights: list
    weight_caps: list
    layer_errors: list
    discrepancy: float
    bound_value: float
    outputs: np.ndarray = field(repr=False, default=None)

    @property
    def k(self):
        return [s.k for s in self.sampling]


_HOMOGENEOUS = {"relu": lambda z: np.maximum(z, 0.0), "identity": lambda z: z}


def sparsification_bound(weights, X, k_vec):
    """``||X||_F * prod ||W_i||_2 * sum_i sqrt(sr(W_i) / k_i)``."""
    specs = [spectral_norm(w) for w in weights]
    fros = [float(np.linalg.norm(w)) for w in weights]
    terms = [math.sqrt((f / s) ** 2 / k) if s > 0 else 0.0 for f, s, k in zip(fros, specs, k_vec)]
    return float(np.linalg.norm(X)) * float(np.prod(specs)) * sum(terms)


def network_sparsify(weights, X, k_vec, gates=None, draws=DEFAULT_DRAWS, seed=0, retries=DEFAULT_RETRIES,
                     slack=2.0):
    """Sparsify every product ``W_i X_{i-1}^T`` of a dense chain with bounded Maurey.

    Layer outputs are projected onto the Frobenius ball of radius
    ``||X||_F prod_{j<=i} ||W_j||_2``.  The final discrepancy against the exact
    network is checked against ``slack`` times the guarantee (the bounded
    sampler's per-layer constant is 2).
    """
    X = as_matrix(X, "X")
    weights = [as_matrix(w, f"W{i}") for i, w in enumerate(weights)]
    if gates is None:
        gates = ["relu"] * (len(weights) - 1) + ["identity"]
    if len(k_vec) != len(weights) or len(gates) != len(weights):
        raise ShapeError("need one k and one gate per layer")
    for g in gates:
        if g not in _HOMOGENEOUS:
            raise UnsupportedError(f"gate {g!r} is not 1-Lipschitz and homogeneous")
    if any(k < 1 for k in k_vec):
        raise ValueError("every k_i must be >= 1")
    rng = np.random.default_rng(seed)
    x_exact, x_hat = X, X
    radius = float(np.linalg.norm(X))
    sampling, kept, radii, max_w, caps, errs = [], [], [], [], [], []
    for i, (w, gate, k) in enumerate(zip(weights, gates, k_vec)):
        act = _HOMOGENEOUS[gate]
        sm, err, mw = maurey_product_bounded(w, x_hat, k, draws=draws, seed=int(rng.integers(2**63)),
                                             retries=retries)
        radius *= spectral_norm(w)
        x_exact = act(x_exact @ w.T)
        x_hat = project_frobenius(act((x_hat * sm.diagonal()) @ w.T), radius)
        sampling.append(sm)
        kept.append(sm.indices.copy())
        radii.append(radius)
        max_w.append(mw)
        caps.append(float(np.linalg.norm(w)) * math.sqrt(w.shape[1] / k))
        errs.append(err)
    disc = float(np.linalg.norm(x_exact - x_hat))
    bound = sparsification_bound(weights, X, k_vec)
    if disc > slack * bound * (1 + 1e-12):
        raise NumericalError(f"network discrepancy {disc:.6g} exceeds {slack} x guarantee {bound:.6g}")
    return SparsifiedNetwork(sampling, kept, radii, max_w, caps, errs, disc, bound, x_hat)


def infty_grid_cover_round(A, support_rows, support_cols, b, eps):
    """Round a sparse, entrywise-bounded matrix to the grid of pitch ``eps / sqrt(k1 k2)``.

    Returns ``(A_hat, log_cardinality)``; ``||A - A_hat||_F <= eps``.  The log
    cardinality is ``(k1 + k2) ln m + k1 k2 ln(2 b sqrt(k1 k2) / eps)`` with
    ``m`` the larger dimension and the grid term floored at zero.
    """
    A = as_matrix(A, "A")
    k2, k1 = int(support_rows), int(support_cols)
    if not eps > 0:
        raise ValueError("eps must be positive")
    nz = A != 0
    if int(nz.any(axis=1).sum()) > k2 or int(nz.any(axis=0).sum()) > k1:
        raise PreconditionError("A has more nonzero rows/columns than declared")
    if np.abs(A).max(initial=0.0) > b:
        raise PreconditionError(f"A has an entry above the magnitude bound {b}")
    if k1 == 0 or k2 == 0:
        return np.zeros_like(A), 0.0
    pitch = eps / math.sqrt(k1 * k2)
    top = math.floor(b / pitch) * pitch
    rounded = np.clip(np.round(A / pitch) * pitch, -top, top)
    A_hat = np.where(nz, rounded, 0.0)
    m = max(A.shape)
    log_card = (k1 + k2) * math.log(m) + k1 * k2 * max(0.0, math.log(2 * b * math.sqrt(k1 * k2) / eps))
    return A_hat, log_card
