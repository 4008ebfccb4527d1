"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors every signature and
must agree with them to rounding.
"""

import numpy as np

_LOG_2PI = np.log(2.0 * np.pi)


def kde_log_density(points, anchors, sigma, chunk=2048):
    """log of the isotropic Gaussian KDE ``(1/n) sum_i N(z; x_i, sigma^2 I)``.

    Evaluated with a streaming log-sum-exp so that ``sigma << 1`` never
    underflows to ``-inf`` inside the mixture.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    anchors = np.ascontiguousarray(anchors, dtype=np.float64)
    n, d = anchors.shape
    out = np.empty(points.shape[0])
    norm = -0.5 * d * (_LOG_2PI + 2.0 * np.log(sigma)) - np.log(n)
    inv = 1.0 / (2.0 * sigma * sigma)
    a_sq = np.einsum("ij,ij->i", anchors, anchors)
    for start in range(0, points.shape[0], chunk):
        z = points[start:start + chunk]
        sq = np.einsum("ij,ij->i", z, z)[:, None] + a_sq[None, :] - 2.0 * (z @ anchors.T)
        np.maximum(sq, 0.0, out=sq)
        e = -sq * inv
        mx = e.max(axis=1)
        out[start:start + chunk] = mx + np.log(np.exp(e - mx[:, None]).sum(axis=1)) + norm
    return out


def outer_residual_norms(target, left, right, left_idx, right_idx, coef):
    """Frobenius residuals ``||T - sum_l c_l * left[:, p_l] right[:, q_l]^T||`` per draw.

    ``left_idx``, ``right_idx`` and ``coef`` are ``(draws, k)``.
    """
    target = np.asarray(target, dtype=np.float64)
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    out = np.empty(left_idx.shape[0])
    for t in range(left_idx.shape[0]):
        approx = (left[:, left_idx[t]] * coef[t]) @ right[:, right_idx[t]].T
        out[t] = np.linalg.norm(target - approx)
    return out


def power_iteration(a, v0, tol, max_iter):
    """Top eigenpair of ``A^T A`` by power iteration.

    Returns ``(lam, v, iterations, converged)``; convergence is declared once
    ``||A^T A v - lam v|| <= tol * lam``.
    """
    a = np.asarray(a, dtype=np.float64)
    v = np.array(v0, dtype=np.float64)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        av = a @ v
        lam = float(av @ av)
        if lam == 0.0:
            return 0.0, v, it, True
        w = a.T @ av
        res = np.linalg.norm(w - lam * v)
        v = w / np.linalg.norm(w)
        if res <= tol * lam:
            av = a @ v
            return float(av @ av), v, it, True
    return lam, v, max_iter, False
