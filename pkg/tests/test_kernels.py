import importlib
import subprocess
import sys

import numpy as np
import pytest

from distillbound import _kernels_py, kernels

try:
    from distillbound import _kernels as compiled
except ImportError:
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")


def test_pure_python_switch():
    code = "from distillbound import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"DISTILLBOUND_PURE_PYTHON": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "python"


def test_kde_against_direct_sum():
    rng = np.random.default_rng(0)
    z, a, sigma = rng.random((7, 2)), rng.random((5, 2)), 0.3
    direct = np.log(np.mean(np.exp(-((z[:, None] - a[None]) ** 2).sum(-1) / (2 * sigma**2)), axis=1)
                    / (2 * np.pi * sigma**2))
    np.testing.assert_allclose(_kernels_py.kde_log_density(z, a, sigma), direct, rtol=1e-12)


def test_kde_tiny_sigma_finite():
    v = _kernels_py.kde_log_density(np.array([[0.9, 0.9]]), np.array([[0.1, 0.1]]), 1e-3)
    assert np.isfinite(v).all()


@needs_ext
def test_backends_agree():
    rng = np.random.default_rng(1)
    z, a = rng.random((300, 3)), rng.random((40, 3))
    np.testing.assert_allclose(compiled.kde_log_density(z, a, 0.2), _kernels_py.kde_log_density(z, a, 0.2),
                               rtol=1e-12)
    A, B = rng.standard_normal((6, 20)), rng.standard_normal((4, 20))
    idx = rng.integers(0, 20, (8, 5))
    coef = rng.random((8, 5))
    np.testing.assert_allclose(compiled.outer_residual_norms(A @ B.T, A, B, idx, idx, coef),
                               _kernels_py.outer_residual_norms(A @ B.T, A, B, idx, idx, coef), rtol=1e-12)
    M, v0 = rng.standard_normal((20, 50)), rng.standard_normal(50)
    lc, vc, _, okc = compiled.power_iteration(M, v0, 1e-12, 5000)
    lp, vp, _, okp = _kernels_py.power_iteration(M, v0, 1e-12, 5000)
    assert okc and okp
    assert lc == pytest.approx(lp, rel=1e-10)
    assert np.linalg.norm(np.abs(vc) - np.abs(vp)) <= 1e-5
