"""Data augmentation measure: half uniform on the unit cube, half Gaussian KDE.

The Gaussian component places an isotropic Gaussian of standard deviation
``sigma = n ** (-1 / (2 alpha + d))`` on a uniformly chosen anchor.  Gaussians
are not truncated to the cube, so the measure has some mass outside it.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import PreconditionError, ShapeError

MIN_GRID_RESOLUTION = 8


def bandwidth(n, alpha, d):
    return n ** (-1.0 / (2.0 * alpha + d))


@dataclass(frozen=True)
class AugmentationSampler:
    anchors: np.ndarray
    alpha: float = 1.0
    beta: float = 0.5
    dim: int = None

    def __post_init__(self):
        anchors = np.asarray(self.anchors, dtype=np.float64)
        if anchors.ndim == 1:
            anchors = anchors.reshape(-1, self.dim or 1) if anchors.size else anchors.reshape(0, self.dim or 1)
        if anchors.ndim != 2:
            raise ShapeError("anchors must be an (n, d) array")
        if anchors.size and (anchors.min() < 0.0 or anchors.max() > 1.0):
            raise ValueError("anchors must lie inside the unit cube")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "dim", anchors.shape[1])

    @property
    def n(self):
        return self.anchors.shape[0]

    @property
    def sigma(self):
        return bandwidth(self.n, self.alpha, self.dim) if self.n else None

    def metadata(self, seed=None):
        return {"sigma": self.sigma, "beta": self.beta, "alpha": self.alpha, "n_anchors": self.n,
                "dim": self.dim, "seed": seed, "degenerate": self.n == 0}


def sample_augmented(s, m, seed=0, return_info=False):
    """Draw ``m`` points from the mixture (fair coin per point when ``beta = 1/2``)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    d = s.dim
    uniform = rng.random(m) < s.beta
    if s.n == 0:
        uniform[:] = True
    pts = rng.random((m, d))
    g = ~uniform
    if g.any():
        idx = rng.integers(0, s.n, size=int(g.sum()))
        pts[g] = s.anchors[idx] + s.sigma * rng.standard_normal((int(g.sum()), d))
    if return_info:
        info = s.metadata(seed)
        info["uniform_fraction"] = float(uniform.mean())
        return pts, info
    return pts


def _inside_cube(z):
    return np.all((z >= 0.0) & (z <= 1.0), axis=1)


def log_density_nu(s, z):
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if z.shape[1] != s.dim:
        raise ShapeError(f"points have dim {z.shape[1]}, sampler has {s.dim}")
    inside = _inside_cube(z)
    log_unif = np.where(inside, math.log(s.beta), -np.inf)
    if s.n == 0:
        return log_unif
    log_kde = kernels.kde_log_density(z, s.anchors, s.sigma) + math.log(1.0 - s.beta)
    return np.logaddexp(log_unif, log_kde)


def density_nu(s, z):
    """Density of the augmentation measure at each row of ``z``."""
    out = np.exp(log_density_nu(s, z))
    return out if np.ndim(z) == 2 else float(out[0])


@dataclass(frozen=True)
class HolderDensity:
    """Closed-form densities on ``[0, 1]^d``.

    ``constant`` is the uniform density; ``cosine`` is
    ``prod_c (1 + a cos(2 pi x_c))``; ``tent`` is ``prod_c 2 (1 - |2 x_c - 1|)``.
    """

    family: str
    dim: int
    amplitude: float = 0.5

    def __post_init__(self):
        if self.family not in ("constant", "cosine", "tent"):
            raise ValueError(f"unknown density family {self.family!r}")
        if self.family == "cosine" and not 0 <= self.amplitude < 1:
            raise ValueError("cosine amplitude must lie in [0, 1)")
        if self.dim <= 3:
            res = 200 if self.dim == 1 else (100 if self.dim == 2 else 40)
            axis = (np.arange(res) + 0.5) / res
            grid = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), -1).reshape(-1, self.dim)
            mass = float(self.pdf(grid).mean())
            if abs(mass - 1.0) > 1e-3:
                raise ValueError(f"density integrates to {mass}, not 1")

    @property
    def alpha(self):
        return 1.0

    @property
    def holder_constant(self):
        if self.family == "constant":
            return 0.0
        per_axis = 2 * math.pi * self.amplitude if self.family == "cosine" else 4.0
        return per_axis * math.sqrt(self.dim) * self.max_density

    @property
    def max_density(self):
        if self.family == "constant":
            return 1.0
        if self.family == "cosine":
            return (1.0 + self.amplitude) ** self.dim
        return 2.0**self.dim

    def pdf(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        inside = _inside_cube(z)
        if self.family == "constant":
            vals = np.ones(z.shape[0])
        elif self.family == "cosine":
            vals = np.prod(1.0 + self.amplitude * np.cos(2 * np.pi * z), axis=1)
        else:
            vals = np.prod(2.0 * (1.0 - np.abs(2.0 * z - 1.0)), axis=1)
        return np.where(inside, vals, 0.0)

    def sample(self, n, seed=0):
        """Rejection sampling against the uniform proposal."""
        rng = np.random.default_rng(seed)
        out = []
        have = 0
        while have < n:
            cand = rng.random((max(2 * (n - have), 16), self.dim))
            keep = rng.random(cand.shape[0]) * self.max_density < self.pdf(cand)
            out.append(cand[keep])
            have += int(keep.sum())
        return np.concatenate(out)[:n]


def density_ratio_sup(p, s, grid_resolution=64):
    """Max of ``p(z) / density_nu(z)`` over a regular grid on the closed cube."""
    if s.dim > 3:
        raise PreconditionError("grid evaluation only for d <= 3")
    if grid_resolution < MIN_GRID_RESOLUTION:
        raise PreconditionError(f"grid resolution {grid_resolution} < {MIN_GRID_RESOLUTION}")
    axis = np.linspace(0.0, 1.0, grid_resolution)
    grid = np.stack(np.meshgrid(*([axis] * s.dim), indexing="ij"), -1).reshape(-1, s.dim)
    dens = p.pdf(grid)
    log_nu = log_density_nu(s, grid)
    ratio = np.where(dens > 0, dens * np.exp(-log_nu), 0.0)
    return float(ratio.max())


def ratio_bound_formula(n, alpha, d, C=1.0):
    """``4 + C sqrt(ln n) / n^(alpha / (2 alpha + d))``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return 4.0 + C * math.sqrt(math.log(n)) / n ** (alpha / (2.0 * alpha + d))
