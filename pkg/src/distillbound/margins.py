"""Temperature softmax, distillation distance, ramp loss and margin histograms."""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

HISTOGRAM_BINS = 64


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"temperature must be positive, got {gamma}")


def softmax_gamma(v, gamma):
    """Softmax of ``v / gamma`` along the last axis (max-subtracted)."""
    _check_gamma(gamma)
    z = np.asarray(v, dtype=np.float64) / gamma
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_gamma_jacobian(v, gamma):
    """Analytic Jacobian ``d phi_y / d v_j = phi_y (delta_yj - phi_j) / gamma`` of one vector."""
    p = softmax_gamma(np.asarray(v, dtype=np.float64), gamma)
    return (np.diag(p) - np.outer(p, p)) / gamma


def _same_shape(f_out, g_out):
    f_out = np.asarray(f_out, dtype=np.float64)
    g_out = np.asarray(g_out, dtype=np.float64)
    if f_out.shape != g_out.shape or f_out.ndim != 2:
        raise ShapeError(f"output batches differ in shape: {f_out.shape} vs {g_out.shape}")
    return f_out, g_out


def distillation_distance(f_out, g_out, gamma):
    """Mean l1 distance between the temperature softmaxes of two output batches."""
    f_out, g_out = _same_shape(f_out, g_out)
    if f_out.shape[0] == 0:
        raise ShapeError("empty output batch")
    diff = softmax_gamma(f_out, gamma) - softmax_gamma(g_out, gamma)
    return float(np.abs(diff).sum(axis=1).mean())


def _check_labels(labels, n, k):
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    return labels.astype(np.int64)


def softmax_error(g_out, labels, gamma):
    """Mean of ``1 - phi_gamma(g(x_i))_{y_i}``."""
    g_out = np.asarray(g_out, dtype=np.float64)
    labels = _check_labels(labels, g_out.shape[0], g_out.shape[1])
    p = softmax_gamma(g_out, gamma)
    return float(np.mean(1.0 - p[np.arange(len(labels)), labels]))


def ramp(z, gamma):
    _check_gamma(gamma)
    return np.clip(1.0 - np.asarray(z, dtype=np.float64) / gamma, 0.0, 1.0)


def raw_margins(out, labels):
    """``out[i, y_i] - max_{j != y_i} out[i, j]`` per row."""
    out = np.asarray(out, dtype=np.float64)
    labels = _check_labels(labels, out.shape[0], out.shape[1])
    if out.shape[1] < 2:
        raise ShapeError("margins need at least two classes")
    rows = np.arange(out.shape[0])
    correct = out[rows, labels]
    others = out.copy()
    others[rows, labels] = -np.inf
    return correct - others.max(axis=1)


def ramp_margin_loss(v, y, gamma):
    """Ramp loss of the margin of class ``y``: 1 at or below 0, 0 at or above gamma."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] < 2:
        raise ShapeError("ramp loss needs k >= 2")
    return float(ramp(raw_margins(v[None, :], [y])[0], gamma))


def ramp_vector(out, gamma):
    """Per-coordinate ramp of ``v_j - max_{j' != j} v_j'`` for each row."""
    out = np.asarray(out, dtype=np.float64)
    if out.ndim != 2 or out.shape[1] < 2:
        raise ShapeError("ramp vectors need a batch with k >= 2 columns")
    order = np.sort(out, axis=1)
    top, second = order[:, -1:], order[:, -2:-1]
    best_other = np.where(out == top, second, top)
    # ties at the top: each tied coordinate sees the other as best
    return ramp(out - best_other, gamma)


def ramp_distance(f_out, g_out, gamma):
    """Mean l1 distance between ramp vectors of two output batches."""
    f_out, g_out = _same_shape(f_out, g_out)
    if f_out.shape[0] == 0:
        raise ShapeError("empty output batch")
    return float(np.abs(ramp_vector(f_out, gamma) - ramp_vector(g_out, gamma)).sum(axis=1).mean())


def ramp_error(g_out, labels, gamma):
    """Mean ramp loss of the labeled margins."""
    return float(np.mean(ramp(raw_margins(g_out, labels), gamma)))


@dataclass
class MarginHistogram:
    normalized_margins: np.ndarray
    normalizer: float
    bin_edges: np.ndarray
    counts: np.ndarray
    q10: float
    median: float

    def write(self, csv_path, gamma=None, extra=None):
        """CSV of bins plus a JSON sidecar next to it (``.json`` suffix)."""
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count"])
            for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
        meta = {
            "normalizer": self.normalizer,
            "gamma": gamma,
            "q10": self.q10,
            "median": self.median,
            "n": int(self.counts.sum()),
            "quantity": "normalized margin (correct score - best other) / Rad_n bound",
        }
        meta.update(extra or {})
        with open(str(csv_path).rsplit(".", 1)[0] + ".json", "w") as fh:
            json.dump(meta, fh, indent=2)


def margin_histogram(g_out, labels, normalizer, bins=HISTOGRAM_BINS):
    """Normalized margins, equal-width bins over their range, exact quantiles."""
    if not normalizer > 0:
        raise ValueError("normalizer must be positive")
    g_out = np.asarray(g_out, dtype=np.float64)
    if g_out.shape[0] == 0:
        raise ShapeError("margin histogram of an empty batch")
    nm = raw_margins(g_out, labels) / normalizer
    lo, hi = float(nm.min()), float(nm.max())
    if lo == hi:
        edges = np.array([lo, hi])
        counts = np.array([nm.size])
    else:
        counts, edges = np.histogram(nm, bins=bins, range=(lo, hi))
    return MarginHistogram(nm, float(normalizer), edges, counts,
                           float(np.quantile(nm, 0.1)), float(np.median(nm)))
