"""Closed-form generalization-bound evaluators.

All evaluators use a leading constant ``C`` (default 1) in place of the
unstated constants hidden by the O-tilde notation, and drop the polylog
factors it suppresses.  They check term structure and trends, not absolute
calibration.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .compgraph import GraphHyperParams
from .errors import PreconditionError, UnsupportedError

TERM_ORDER = ("distillation", "softmax_error", "rad_f", "rad_g_m", "rad_g_n", "confidence")


def _as_vec(x):
    return np.atleast_1d(np.asarray(x, dtype=np.float64))


def _check_hp(hp):
    rho, b, r, s = (_as_vec(v) for v in (hp.rho, hp.b, hp.r, hp.s))
    if not (len(rho) == len(b) == len(r) == len(s)):
        raise ValueError("hyperparameter vectors differ in length")
    if np.any(r < 0) or np.any(rho <= 0) or np.any(b <= 0) or np.any(s <= 0):
        raise ValueError("hyperparameters must be positive (r may be zero)")
    if hp.width < 1:
        raise ValueError("width must be >= 1")
    return rho, b, r, s


def layer_sum(hp):
    """``sum_i (r_i b_i rho_i prod_{l>i} s_l rho_l)^(2/3)``."""
    rho, b, r, s = _check_hp(hp)
    sr = s * rho
    tail = np.append(np.cumprod(sr[::-1])[::-1][1:], 1.0)
    return float(np.sum((r * b * rho * tail) ** (2.0 / 3.0)))


def rad_compgraph(hp, n):
    """``4/n + 12 sqrt(ln(2 m^2) / n) * layer_sum^(3/2)`` with ``m`` the max width.

    ``b_i`` is per example; the batch radius ``b_i sqrt(n)`` of the projections
    cancels against the ``1/n`` of the Rademacher average.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    S = layer_sum(hp)
    return 4.0 / n + 12.0 * math.sqrt(math.log(2.0 * hp.width**2) / n) * S**1.5


def covering_log_cardinality(hp, n, eps):
    """``2^(4/3) n ln(2 m^2) / eps^2 * layer_sum^3``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    S = layer_sum(hp)
    return 2.0 ** (4.0 / 3.0) * n * math.log(2.0 * hp.width**2) / eps**2 * S**3


def dudley_rad_from_cover(tau, n):
    """Rademacher bound ``12 max(tau, 1/3) / n`` from a cover with ``ln N(eps) <= tau^2 / eps^2``.

    This is the chain's ``12 tau_hat`` step (after dropping the nonpositive
    ``-12 tau_hat ln(3 tau_hat)`` part), which is nondecreasing in ``tau`` and
    at most ``(12 tau + 4) / n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return 12.0 * max(tau, 1.0 / 3.0) / n


@dataclass
class BoundInputs:
    n: int
    m: int
    k: int
    gamma: float
    delta: float
    ratio: float
    phi: float
    softmax_err: float
    hp: GraphHyperParams = None
    rad_f: float = 0.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.n < 1 or self.m < 1 or self.k < 1:
            raise ValueError("n, m, k must be >= 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        for name in ("ratio", "phi", "softmax_err", "rad_f"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def to_json(self):
        d = {k: getattr(self, k) for k in ("n", "m", "k", "gamma", "delta", "ratio", "phi", "softmax_err", "rad_f")}
        d["hp"] = None if self.hp is None else self.hp.to_json()
        return d


@dataclass
class BoundReport:
    terms: dict
    total: float
    formula_id: str
    constant_policy: dict
    inputs: dict = field(default_factory=dict)

    def to_json(self):
        return {"formula_id": self.formula_id, "terms": dict(self.terms), "total": self.total,
                "constant_policy": self.constant_policy, "inputs": self.inputs}

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    def csv_row(self):
        return [self.formula_id] + [repr(float(self.terms.get(t, 0.0))) for t in TERM_ORDER] + [repr(self.total)]

    @staticmethod
    def csv_header():
        return ["formula_id", *TERM_ORDER, "total"]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(self.csv_header())
        w.writerow(self.csv_row())
        return buf.getvalue()


def _report(terms, formula_id, C, inputs):
    total = 0.0
    for name in TERM_ORDER:
        total += terms[name]
    return BoundReport(terms, total, formula_id, {"C": C, "polylog_factors": "dropped"}, inputs)


def _augmentation_terms(bi, rad_g_m, rad_g_n, C, lead, conf):
    if rad_g_m < 0 or rad_g_n < 0:
        raise ValueError("Rademacher estimates must be nonnegative")
    k15 = bi.k**1.5 / bi.gamma
    return {
        "distillation": lead * bi.ratio * bi.phi,
        "softmax_error": lead * bi.softmax_err,
        "rad_f": C * k15 * bi.ratio * bi.rad_f,
        "rad_g_m": C * k15 * bi.ratio * rad_g_m,
        "rad_g_n": C * math.sqrt(bi.k) / bi.gamma * rad_g_n,
        "confidence": conf * math.sqrt(math.log(1.0 / bi.delta) / (2.0 * bi.n))
        * (1.0 + bi.ratio * math.sqrt(bi.n / bi.m)),
    }


def abstract_bound(bi, rad_g_m, rad_g_n, C=1.0, formula_id="abstract_augmentation"):
    """Softmax distillation bound for arbitrary classes given Rademacher estimates."""
    terms = _augmentation_terms(bi, rad_g_m, rad_g_n, C, 2.0, 6.0)
    inputs = bi.to_json()
    inputs.update(rad_g_m=rad_g_m, rad_g_n=rad_g_n)
    return _report(terms, formula_id, C, inputs)


def ramp_bound(bi, rad_g_m, rad_g_n, C=1.0):
    """Ramp-loss variant; ``bi.phi`` and ``bi.softmax_err`` carry the ramp quantities.

    The ramp upper-bounds the 0-1 loss directly, so the distance and error
    terms lose their factor 2 and the confidence term halves.
    """
    terms = _augmentation_terms(bi, rad_g_m, rad_g_n, C, 1.0, 3.0)
    inputs = bi.to_json()
    inputs.update(rad_g_m=rad_g_m, rad_g_n=rad_g_n)
    return _report(terms, "ramp_augmentation", C, inputs)


def full_bound_compgraph(bi, C=1.0):
    """Computation-graph bound: the abstract bound with graph Rademacher terms.

    The g-class terms combine into ``(sqrt(k)/gamma)(Rad_n + k ratio Rad_m)``,
    i.e. the ``(1 + k ratio sqrt(n/m))`` multiplier on the layer-sum term.  The
    infimum over hyperparameter shells is evaluated at ``bi.hp`` (measured and
    clamped, hence feasible).
    """
    if bi.hp is None:
        raise ValueError("full_bound_compgraph needs hyperparameters")
    return abstract_bound(bi, rad_compgraph(bi.hp, bi.m), rad_compgraph(bi.hp, bi.n), C=C,
                          formula_id="compgraph_augmentation")


def stable_rank_rad(spectral, frobenius, x_frob, n, width=None, C=1.0):
    """Stable-rank Rademacher bound for dense chains.

    ``C ||X||_F / n^(3/4) * prod s_j * (sum (R_i/s_i)^(4/5))^(5/4) * (sum ln max(R_i, e))^(1/4)``.
    ``width`` only enters through the dropped polylog factors.
    """
    s = _as_vec(spectral)
    R = _as_vec(frobenius)
    if s.shape != R.shape:
        raise ValueError("need one spectral and one Frobenius norm per layer")
    if np.any(s <= 0):
        raise PreconditionError("spectral norms must be positive")
    if np.any(R < s * (1 - 1e-12)):
        raise PreconditionError("Frobenius norm below spectral norm is impossible")
    if n < 1:
        raise ValueError("n must be >= 1")
    sr_term = np.sum((R / s) ** 0.8) ** 1.25
    ln_term = np.sum(np.log(np.maximum(R, math.e))) ** 0.25
    return C * x_frob / n**0.75 * float(np.prod(s)) * float(sr_term) * float(ln_term)


def generalization_measure_frob(weights=None, graph=None):
    """Product of Frobenius norms; only meaningful for dense chains."""
    if graph is not None:
        for i, layer in enumerate(graph.layers):
            if layer.F is not None or not layer.full_selector:
                raise UnsupportedError(
                    f"layer {i} has a skip connection or selector: the Frobenius-product measure "
                    "needs a dense chain (a single identity residual block would score 0)")
        weights = [layer.W for layer in graph.layers]
    return float(np.prod([np.linalg.norm(w) for w in weights]))
