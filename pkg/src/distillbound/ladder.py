"""Distillation ladder: doubling regularization, warm starts, per-step bound evaluation."""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .augment import ratio_bound_formula, sample_augmented
from .bounds import BoundInputs, full_bound_compgraph, generalization_measure_frob, rad_compgraph, stable_rank_rad
from .compgraph import measure_hyperparams
from .linalg import spectral_norm
from .margins import margin_histogram, softmax_error, softmax_gamma
from .train import complexity_surrogate, composite_loss, distill_step, train_risk

EVAL_CHUNK = 65536


@dataclass
class BoundSetup:
    """How bounds are evaluated: a fresh augmentation sample of size ``m_eval``."""

    m_eval: int
    delta: float = 0.01
    alpha: float = 1.0
    ratio_C: float = 1.0
    C: float = 1.0
    seed: int = 12345
    rad_f_override: float = None

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class StepStats:
    phi: float
    complexity: float
    train_err: float
    test_err: float
    softmax_err: float
    hp: object
    rad_n: float
    stable_rank_rad: float
    frob_measure: float
    bound: object
    histogram: object

    @property
    def margin_q10(self):
        return self.histogram.q10

    @property
    def margin_median(self):
        return self.histogram.median


class NetEvaluator:
    """Evaluates candidate students ``g`` against a fixed teacher ``f``."""

    def __init__(self, f, data, sampler, setup, gamma, mode="A"):
        self.f = f
        self.data = data
        self.setup = setup
        self.gamma = gamma
        self.mode = mode
        n = data.n
        self.ratio = ratio_bound_formula(n, setup.alpha, data.d, setup.ratio_C)
        self._z_seed = setup.seed
        self._sampler = sampler
        self.f_probs = self._map_eval(lambda z: softmax_gamma(f.forward(z), gamma))
        self.hp_f = self.hyperparams(f)
        if setup.rad_f_override is not None:
            self.rad_f = float(setup.rad_f_override)
        else:
            self.rad_f = rad_compgraph(self.hp_f, setup.m_eval)

    def _eval_chunks(self):
        # regenerate the evaluation sample chunk by chunk to bound memory
        rng_seeds = np.random.SeedSequence(self._z_seed).spawn(math.ceil(self.setup.m_eval / EVAL_CHUNK))
        left = self.setup.m_eval
        for ss in rng_seeds:
            size = min(EVAL_CHUNK, left)
            left -= size
            yield sample_augmented(self._sampler, size, seed=ss)

    def _map_eval(self, fn):
        return [fn(z) for z in self._eval_chunks()]

    def eval_frobenius(self):
        """``||Z||_F`` of the (prepared) evaluation sample."""
        if getattr(self, "_z_frob", None) is None:
            sq = sum(float(np.sum(self.f.prepare(z) ** 2)) for z in self._eval_chunks())
            self._z_frob = math.sqrt(sq)
        return self._z_frob

    def hyperparams(self, net):
        return measure_hyperparams(net.to_graph(), net.prepare(self.data.x_train))

    def phi(self, g):
        total = 0.0
        for z, fp in zip(self._eval_chunks(), self.f_probs):
            gp = softmax_gamma(g.forward(z), self.gamma)
            total += float(np.abs(gp - fp).sum())
        return total / self.setup.m_eval

    def evaluate(self, g):
        d = self.data
        out_tr = g.forward(d.x_train)
        hp = self.hyperparams(g)
        n = d.n
        rad_n = rad_compgraph(hp, n)
        smerr = softmax_error(out_tr, d.y_train, self.gamma)
        phi = self.phi(g)
        bi = BoundInputs(n=n, m=self.setup.m_eval, k=d.k, gamma=self.gamma, delta=self.setup.delta,
                         ratio=self.ratio, phi=phi, softmax_err=smerr, hp=hp, rad_f=self.rad_f)
        spec = [spectral_norm(w) for w in g.weights]
        frob = [float(np.linalg.norm(w)) for w in g.weights]
        if min(spec) > 0:
            sr = stable_rank_rad(spec, frob, float(np.linalg.norm(g.prepare(d.x_train))), n, C=self.setup.C)
        else:
            sr = 0.0
        return StepStats(
            phi=phi,
            complexity=complexity_surrogate(g, self.mode),
            train_err=float(np.mean(out_tr.argmax(1) != d.y_train)),
            test_err=float(np.mean(g.forward(d.x_test).argmax(1) != d.y_test)),
            softmax_err=smerr,
            hp=hp,
            rad_n=rad_n,
            stable_rank_rad=sr,
            frob_measure=generalization_measure_frob(g.weights),
            bound=full_bound_compgraph(bi, C=self.setup.C),
            histogram=margin_histogram(out_tr, d.y_train, rad_n),
        )


@dataclass
class LadderStep:
    index: int
    lam: float
    net: object
    stats: StepStats = None
    init_loss: float = None
    final_loss: float = None


@dataclass
class DistillationTrace:
    lam0: float
    teacher: StepStats
    steps: list = field(default_factory=list)
    mode: str = "A"

    @property
    def lambdas(self):
        return [s.lam for s in self.steps]

    def selected(self):
        """Step (index >= 1) whose 10% margin quantile is largest; step 0 if the ladder has one step."""
        cands = self.steps[1:] or self.steps
        return max(cands, key=lambda s: s.stats.margin_q10)

    COLUMN_DOC = {
        "step": "0 is the teacher f, j >= 1 the j-th distilled network",
        "lam": "regularization weight (0 for the teacher)",
        "phi": "mean l1 distance of temperature softmaxes to f on the evaluation augmentation sample",
        "complexity": "complexity surrogate optimized by the ladder",
        "train_err": "training 0-1 error",
        "test_err": "test 0-1 error",
        "softmax_err": "training softmax error mean(1 - phi_gamma(g(x))_y)",
        "bound_total": "computation-graph augmentation bound (test error upper bound)",
        "rad_n": "computation-graph Rademacher bound at the training size",
        "stable_rank_rad": "stable-rank Rademacher bound at the training size",
        "frob_measure": "product of layer Frobenius norms",
        "margin_q10": "10% quantile of training margins divided by rad_n",
        "margin_median": "median of training margins divided by rad_n",
    }

    COLUMNS = ["step", "lam", "phi", "complexity", "train_err", "test_err", "softmax_err", "bound_total",
               "rad_n", "stable_rank_rad", "frob_measure", "margin_q10", "margin_median"]

    def rows(self):
        """Teacher row (step 0, lam 0) followed by one row per ladder step."""
        out = []
        entries = [(0, 0.0, self.teacher)] + [(s.index + 1, s.lam, s.stats) for s in self.steps]
        for step, lam, st in entries:
            out.append([step, lam, st.phi, st.complexity, st.train_err, st.test_err, st.softmax_err,
                        st.bound.total, st.rad_n, st.stable_rank_rad, st.frob_measure,
                        st.margin_q10, st.margin_median])
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        with open(str(path).rsplit(".", 1)[0] + ".json", "w") as fh:
            json.dump({"columns": self.COLUMN_DOC, "lam0": self.lam0, "mode": self.mode,
                       "selected_step": self.selected().index + 1}, fh, indent=2)


def distill_ladder(f, data, sampler, cfg, steps, setup=None, m_train=None, mode="A",
                   lam_multiplier=1.0, aug_seed=None, evaluator=None):
    """Run ``steps`` distillation steps with ``lam_{j+1} = 2 lam_j`` warm-started from ``f``.

    The optimization sample (default ``4n`` points) is drawn once per ladder.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if evaluator is None:
        evaluator = NetEvaluator(f, data, sampler, setup or BoundSetup(m_eval=4 * data.n), cfg.gamma, mode)
    m_train = 4 * data.n if m_train is None else m_train
    z = sample_augmented(sampler, m_train, seed=cfg.seed + 1 if aug_seed is None else aug_seed)
    probs = softmax_gamma(f.forward(z), cfg.gamma)
    lam0 = lam_multiplier * train_risk(f, data.x_train, data.y_train, cfg.gamma) / complexity_surrogate(f, mode)
    trace = DistillationTrace(lam0, evaluator.evaluate(f), mode=mode)
    g = f.copy()
    lam = lam0
    for j in range(steps):
        step = LadderStep(j, lam, None, init_loss=composite_loss(g, probs, z, lam, cfg.gamma, mode))
        g = distill_step(f, g, lam, z, cfg, mode=mode, target_probs=probs)
        step.net = g
        step.final_loss = composite_loss(g, probs, z, lam, cfg.gamma, mode)
        step.stats = evaluator.evaluate(g)
        trace.steps.append(step)
        lam = 2.0 * lam
    return trace
