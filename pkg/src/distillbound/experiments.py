"""Experiment configs, runners and artifact layout.

Every run writes ``<out>/manifest.json`` plus ``traces/``, ``histograms/``,
``models/`` (and ``reports/``, ``sparsify/``, ``augment/`` where relevant).
"""

import copy
import csv
import hashlib
import json
import os
import platform
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, kernels
from .augment import AugmentationSampler, HolderDensity, density_ratio_sup, ratio_bound_formula, sample_augmented
from .bounds import BoundInputs, abstract_bound, rad_compgraph, stable_rank_rad
from .compgraph import save_graph
from .data import idx_dataset, permute_labels, synthetic_blobs, synthetic_ring
from .errors import ConfigError
from .ladder import BoundSetup, NetEvaluator, distill_ladder
from .linalg import spectral_norm, write_dbm
from .sparsify import network_sparsify
from .train import DenseNet, TrainConfig, init_dense, train_initial

EXPERIMENTS = ("train", "distill", "bounds", "sparsify", "augment", "ladder", "width_sweep", "random_labels",
               "bound_compare")

DEFAULTS = {
    "experiment": None,
    "seed": 0,
    "seeds": None,
    "gamma": 1.0,
    "dataset": {"source": "synthetic_blobs", "n_train": 200, "n_test": 1000, "d": 2, "k": 2, "spread": 0.06,
                "label_permute_fraction": 0.0, "images": None, "labels": None},
    "arch": {"hidden": [256], "input_bias": True},
    "train": {"optimizer": "adam", "lr": 3e-3, "schedule": "constant", "batch_size": 32, "epochs": 60},
    "distill": {"optimizer": "adam", "lr": 3e-3, "schedule": "constant", "batch_size": 64, "epochs": 20,
                "steps": 12, "mode": "A", "lam_multiplier": 1.0, "m_train": None},
    "augment": {"alpha": 1.0, "beta": 0.5, "m": 1000, "density": None, "grid_resolution": 64},
    "bounds": {"m_eval": None, "delta": 0.01, "C": 1.0, "ratio_C": 1.0, "rad_f_override": None,
               "eval_seed": 12345},
    "sparsify": {"k": None, "draws": 32, "retries": 3},
    "widths": [16, 64, 256],
    "fractions": [0.0, 0.25, 0.5, 0.75, 1.0],
    "model": None,
    "teacher": None,
    "out": None,
}


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {path + key!r} must be an object")
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def load_config(source, seed=None, out=None):
    """Parse a JSON config (path or dict) and materialize every default."""
    if isinstance(source, dict):
        raw = source
    else:
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = _merge(DEFAULTS, raw)
    if seed is not None:
        cfg["seed"] = int(seed)
    if out is not None:
        cfg["out"] = out
    if cfg["seeds"] is None:
        cfg["seeds"] = [cfg["seed"]]
    _validate(cfg)
    return cfg


def _validate(cfg):
    exp = cfg["experiment"]
    if exp is not None and exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}")
    ds = cfg["dataset"]
    if ds["source"] not in ("synthetic_blobs", "synthetic_ring", "idx_files"):
        raise ConfigError(f"unknown dataset source {ds['source']!r}")
    if ds["source"] == "idx_files":
        for key in ("images", "labels"):
            if not ds[key] or not os.path.exists(ds[key]):
                raise ConfigError(f"dataset.{key} must name an existing file")
    if not 0.0 <= ds["label_permute_fraction"] <= 1.0:
        raise ConfigError("label_permute_fraction must lie in [0, 1]")
    for key in ("model", "teacher"):
        if cfg[key] is not None and not os.path.exists(os.path.join(cfg[key], "net.json")):
            raise ConfigError(f"{key} must be a saved network directory")
    for q in cfg["fractions"]:
        if not 0.0 <= q <= 1.0:
            raise ConfigError("fractions must lie in [0, 1]")
    if any(int(w) < 1 for w in cfg["widths"]):
        raise ConfigError("widths must be positive")
    if cfg["distill"]["mode"] not in ("A", "B"):
        raise ConfigError("distill.mode must be A or B")
    if cfg["distill"]["steps"] < 1:
        raise ConfigError("distill.steps must be >= 1")
    try:
        train_cfg(cfg, cfg["seed"])
        train_cfg(cfg, cfg["seed"], "distill")
        AugmentationSampler(np.zeros((0, 1)), cfg["augment"]["alpha"], cfg["augment"]["beta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not 0 < cfg["bounds"]["delta"] < 1:
        raise ConfigError("bounds.delta must lie in (0, 1)")


def config_hash(cfg):
    blob = json.dumps({k: v for k, v in cfg.items() if k != "out"}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def train_cfg(cfg, seed, section="train"):
    sec = cfg[section]
    return TrainConfig(optimizer=sec["optimizer"], lr=sec["lr"], schedule=sec["schedule"],
                       batch_size=sec["batch_size"], epochs=sec["epochs"], seed=int(seed), gamma=cfg["gamma"])


def make_dataset(cfg, seed, fraction=None):
    ds = cfg["dataset"]
    if ds["source"] == "synthetic_blobs":
        data = synthetic_blobs(ds["n_train"], ds["n_test"], ds["d"], ds["k"], ds["spread"], seed=seed)
    elif ds["source"] == "synthetic_ring":
        data = synthetic_ring(ds["n_train"], ds["n_test"], seed=seed)
    else:
        data = idx_dataset(ds["images"], ds["labels"], ds["n_train"], ds["n_test"], ds["k"])
    q = ds["label_permute_fraction"] if fraction is None else fraction
    if q > 0:
        perm_seed = np.random.SeedSequence([seed, 1])
        data.y_train, moved = permute_labels(data.y_train, q, seed=perm_seed)
        data.meta["permuted"] = len(moved)
    data.meta["label_permute_fraction"] = q
    return data


def make_net(cfg, data, seed, width=None):
    hidden = list(cfg["arch"]["hidden"])
    if width is not None:
        hidden = [int(width)] * len(hidden)
    return init_dense(data.d, hidden, data.k, seed=seed, input_bias=cfg["arch"]["input_bias"])


def bound_setup(cfg, data):
    b = cfg["bounds"]
    m_eval = b["m_eval"] if b["m_eval"] is not None else 4 * data.n
    return BoundSetup(m_eval=int(m_eval), delta=b["delta"], alpha=cfg["augment"]["alpha"], ratio_C=b["ratio_C"],
                      C=b["C"], seed=b["eval_seed"], rad_f_override=b["rad_f_override"])


def sampler_for(cfg, data):
    return AugmentationSampler(data.x_train, cfg["augment"]["alpha"], cfg["augment"]["beta"])


def effective_parallel(k):
    cap = os.environ.get("DISTILLBOUND_THREADS")
    k = max(1, int(k or 1))
    if cap:
        try:
            k = min(k, max(1, int(cap)))
        except ValueError as exc:
            raise ConfigError(f"DISTILLBOUND_THREADS must be an integer, got {cap!r}") from exc
    return k


def _versions():
    return {"distillbound": __version__, "numpy": np.__version__, "python": platform.python_version(),
            "kernel_backend": kernels.BACKEND}


class Run:
    """Output directory with a manifest written on success and on failure."""

    def __init__(self, cfg, default_name):
        self.cfg = cfg
        self.out = cfg["out"] or os.path.join("runs", default_name)
        for sub in ("traces", "histograms", "models"):
            os.makedirs(os.path.join(self.out, sub), exist_ok=True)
        self.files = []
        self.results = {}

    def path(self, *parts):
        p = os.path.join(self.out, *parts)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        self.files.append(os.path.relpath(p, self.out))
        return p

    def manifest(self, status="ok", error=None):
        doc = {"experiment": self.cfg["experiment"], "status": status, "config": self.cfg,
               "config_hash": config_hash(self.cfg), "seed": self.cfg["seed"], "seeds": self.cfg["seeds"],
               "versions": _versions(), "files": sorted(set(self.files)), "results": self.results}
        if error is not None:
            doc["error"] = f"{type(error).__name__}: {error}"
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(doc, fh, indent=2, default=_json_default)
        return doc

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.manifest("failed" if exc else "ok", exc)
        return False


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def save_net(run, net, name):
    d = os.path.join(run.out, "models", name)
    net.save(d)
    save_graph(net.to_graph(), os.path.join(d, "graph"))
    run.files.append(os.path.relpath(d, run.out))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _write_doc(path, columns, **extra):
    with open(str(path).rsplit(".", 1)[0] + ".json", "w") as fh:
        json.dump({"columns": columns, **extra}, fh, indent=2, default=_json_default)


def _teacher(cfg, data, seed, width=None):
    if cfg["teacher"] is not None:
        return DenseNet.load(cfg["teacher"])
    return train_initial(make_net(cfg, data, seed, width), data.x_train, data.y_train, train_cfg(cfg, seed))


def _ladder(cfg, f, data, seed, setup=None, evaluator=None):
    dist = cfg["distill"]
    return distill_ladder(f, data, sampler_for(cfg, data), train_cfg(cfg, seed, "distill"), dist["steps"],
                          setup=setup or bound_setup(cfg, data), m_train=dist["m_train"], mode=dist["mode"],
                          lam_multiplier=dist["lam_multiplier"], evaluator=evaluator)


# single-purpose subcommands

def run_train(cfg):
    with Run(cfg, "train") as run:
        seed = cfg["seed"]
        data = make_dataset(cfg, seed)
        f = train_initial(make_net(cfg, data, seed), data.x_train, data.y_train, train_cfg(cfg, seed))
        save_net(run, f, "f")
        p = run.path("traces", "train_loss.csv")
        _write_rows(p, ["epoch", "loss"], [[i + 1, v] for i, v in enumerate(f.history.losses)])
        _write_doc(p, {"epoch": "epoch number", "loss": "mean training cross-entropy over the epoch"})
        run.results = {"train_err": f.history.train_err,
                       "test_err": float(np.mean(f.forward(data.x_test).argmax(1) != data.y_test)),
                       "dataset": data.meta}
    return run.out


def run_distill(cfg):
    with Run(cfg, "distill") as run:
        seed = cfg["seed"]
        data = make_dataset(cfg, seed)
        f = _teacher(cfg, data, seed)
        trace = _ladder(cfg, f, data, seed)
        save_net(run, f, "f")
        for s in trace.steps:
            save_net(run, s.net, f"g{s.index + 1}")
        trace.write_csv(run.path("traces", "distill.csv"))
        run.files.append("traces/distill.json")
        sel = trace.selected()
        run.results = {"lam0": trace.lam0, "selected_step": sel.index + 1, "selected_q10": sel.stats.margin_q10}
    return run.out


def run_bounds(cfg):
    with Run(cfg, "bounds") as run:
        seed = cfg["seed"]
        data = make_dataset(cfg, seed)
        g = DenseNet.load(cfg["model"]) if cfg["model"] else _teacher(cfg, data, seed)
        f = DenseNet.load(cfg["teacher"]) if cfg["teacher"] else g
        ev = NetEvaluator(f, data, sampler_for(cfg, data), bound_setup(cfg, data), cfg["gamma"],
                          cfg["distill"]["mode"])
        st = ev.evaluate(g)
        rep = st.bound
        with open(run.path("reports", "bound.json"), "w") as fh:
            fh.write(rep.dumps())
        with open(run.path("reports", "bound.csv"), "w") as fh:
            fh.write(rep.to_csv())
        st.histogram.write(run.path("histograms", "margins.csv"), cfg["gamma"])
        run.files.append("histograms/margins.json")
        run.results = {"bound_total": rep.total, "terms": rep.terms, "rad_n": st.rad_n,
                       "stable_rank_rad": st.stable_rank_rad, "test_err": st.test_err}
    return run.out


def run_sparsify(cfg):
    with Run(cfg, "sparsify") as run:
        seed = cfg["seed"]
        data = make_dataset(cfg, seed)
        net = DenseNet.load(cfg["model"]) if cfg["model"] else _teacher(cfg, data, seed)
        sp = cfg["sparsify"]
        k_vec = sp["k"] or [16] * net.depth
        if len(k_vec) != net.depth:
            raise ConfigError(f"sparsify.k needs {net.depth} entries")
        res = network_sparsify(net.weights, net.prepare(data.x_train), k_vec, net.gates, draws=sp["draws"],
                               seed=seed, retries=sp["retries"])
        rows = []
        for i, sm in enumerate(res.sampling):
            with open(run.path("sparsify", f"layer{i}_sampling.json"), "w") as fh:
                fh.write(sm.dumps())
            rows.append([i, k_vec[i], len(np.unique(sm.indices)), res.max_weights[i], res.weight_caps[i],
                         res.layer_errors[i], res.radii[i]])
        p = run.path("traces", "sparsify.csv")
        _write_rows(p, ["layer", "k", "distinct_kept", "max_weight", "weight_cap", "layer_error", "radius"], rows)
        _write_doc(p, {"layer": "layer index", "k": "number of importance samples",
                       "distinct_kept": "distinct input coordinates kept", "max_weight": "largest sampling weight",
                       "weight_cap": "||W||_F sqrt(d / k) cap on sampling weights",
                       "layer_error": "Frobenius error of the sampled product at this layer",
                       "radius": "projection radius applied to this layer's output"},
                   discrepancy=res.discrepancy, bound=res.bound_value)
        run.results = {"discrepancy": res.discrepancy, "bound": res.bound_value, "k": list(k_vec)}
    return run.out


def run_augment(cfg):
    with Run(cfg, "augment") as run:
        seed = cfg["seed"]
        data = make_dataset(cfg, seed)
        s = sampler_for(cfg, data)
        pts, info = sample_augmented(s, cfg["augment"]["m"], seed=seed, return_info=True)
        write_dbm(run.path("augment", "points.dbm"), pts)
        run.results = {"sampler": info,
                       "ratio_formula": ratio_bound_formula(data.n, s.alpha, data.d, cfg["bounds"]["ratio_C"])}
        fam = cfg["augment"]["density"]
        if fam is not None:
            dens = HolderDensity(fam, data.d)
            anchors = dens.sample(data.n, seed=seed)
            s2 = AugmentationSampler(anchors, s.alpha, s.beta)
            run.results["density"] = fam
            run.results["density_ratio_sup"] = density_ratio_sup(dens, s2, cfg["augment"]["grid_resolution"])
        with open(run.path("augment", "points.json"), "w") as fh:
            json.dump(run.results, fh, indent=2, default=_json_default)
    return run.out


# multi-run experiments

def run_ladder(cfg):
    with Run(cfg, "ladder") as run:
        seed = cfg["seed"]
        data = make_dataset(cfg, seed)
        f = _teacher(cfg, data, seed)
        trace = _ladder(cfg, f, data, seed)
        trace.write_csv(run.path("traces", "ladder.csv"))
        run.files.append("traces/ladder.json")
        header = ["step", "lam", *trace.teacher.bound.csv_header()]
        rows = [[0, 0.0, *trace.teacher.bound.csv_row()]]
        rows += [[s.index + 1, s.lam, *s.stats.bound.csv_row()] for s in trace.steps]
        p = run.path("traces", "bound_terms.csv")
        _write_rows(p, header, rows)
        _write_doc(p, {"step": "0 is the teacher", "lam": "regularization weight",
                       "formula_id": "bound formula", "total": "sum of the term columns"},
                   constant_policy=trace.teacher.bound.constant_policy)
        save_net(run, f, "f")
        for s in trace.steps:
            save_net(run, s.net, f"g{s.index + 1}")
        trace.teacher.histogram.write(run.path("histograms", "teacher.csv"), cfg["gamma"])
        sel = trace.selected()
        sel.stats.histogram.write(run.path("histograms", "selected.csv"), cfg["gamma"], {"step": sel.index + 1})
        run.files += ["histograms/teacher.json", "histograms/selected.json"]
        totals = [r[7] for r in trace.rows()]
        run.results = {"lam0": trace.lam0, "bound_step0": totals[0], "bound_min": min(totals),
                       "selected_step": sel.index + 1, "dataset": data.meta, "m_eval": trace.teacher.bound.inputs["m"]}
    return run.out, trace


def _cell(args):
    """One (seed, width, fraction) cell: train, ladder, pre/post histograms."""
    cfg, seed, width, fraction, out, tag = args
    data = make_dataset(cfg, seed, fraction)
    f = train_initial(make_net(cfg, data, seed, width), data.x_train, data.y_train, train_cfg(cfg, seed))
    trace = _ladder(cfg, f, data, seed)
    sel = trace.selected()
    pre, post = trace.teacher.histogram, sel.stats.histogram
    files = []
    for kind, h in (("pre", pre), ("post", post)):
        name = f"{tag}_{kind}.csv"
        h.write(os.path.join(out, "histograms", name), cfg["gamma"],
                {"seed": seed, "width": width, "fraction": fraction, "stage": kind, "step": 0 if kind == "pre"
                 else sel.index + 1})
        files += [f"histograms/{name}", f"histograms/{tag}_{kind}.json"]
    mdir = os.path.join(out, "models", tag)
    sel.net.save(mdir)
    return {"seed": seed, "width": width, "fraction": fraction, "pre_q10": pre.q10, "post_q10": post.q10,
            "pre_median": pre.median, "post_median": post.median, "selected_step": sel.index + 1,
            "train_err": trace.teacher.train_err, "post_margins": post.normalized_margins,
            "files": files + [f"models/{tag}"]}


def _run_cells(cells, parallel):
    k = effective_parallel(parallel)
    if k == 1 or len(cells) == 1:
        return [_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=k) as ex:
        return list(ex.map(_cell, cells))


def _cell_rows(results, keys):
    return [[r[k] for k in keys] for r in results]


def run_width_sweep(cfg, parallel=1):
    with Run(cfg, "width_sweep") as run:
        cells = [(cfg, s, int(w), 0.0, run.out, f"width{int(w)}_seed{s}")
                 for s in cfg["seeds"] for w in cfg["widths"]]
        results = _run_cells(cells, parallel)
        keys = ["seed", "width", "pre_q10", "post_q10", "pre_median", "post_median", "selected_step"]
        p = run.path("traces", "width_sweep.csv")
        _write_rows(p, keys, _cell_rows(results, keys))
        _write_doc(p, {"seed": "run seed", "width": "hidden width",
                       "pre_q10": "10% quantile of normalized training margins of the trained network",
                       "post_q10": "same for the selected distilled network",
                       "pre_median": "median normalized margin before distillation",
                       "post_median": "median normalized margin after distillation",
                       "selected_step": "ladder step with the largest 10% margin quantile"})
        for r in results:
            run.files += r["files"]
        summary = {}
        for w in cfg["widths"]:
            rs = [r for r in results if r["width"] == int(w)]
            summary[str(int(w))] = {"pre_q10_median": float(np.median([r["pre_q10"] for r in rs])),
                                    "post_q10_median": float(np.median([r["post_q10"] for r in rs]))}
        run.results = {"per_width": summary}
    return run.out, results


def run_random_labels(cfg, parallel=1):
    with Run(cfg, "random_labels") as run:
        width = int(cfg["arch"]["hidden"][0])
        cells = [(cfg, s, width, float(q), run.out, f"width{width}_seed{s}_frac{float(q):.2f}")
                 for s in cfg["seeds"] for q in cfg["fractions"]]
        results = _run_cells(cells, parallel)
        keys = ["seed", "fraction", "train_err", "pre_median", "post_median", "post_q10", "selected_step"]
        p = run.path("traces", "random_labels.csv")
        _write_rows(p, keys, _cell_rows(results, keys))
        _write_doc(p, {"seed": "run seed", "fraction": "fraction of training labels permuted",
                       "train_err": "training error of the trained network",
                       "pre_median": "median normalized margin before distillation",
                       "post_median": "median normalized margin of the selected distilled network",
                       "post_q10": "10% quantile of the same", "selected_step": "selected ladder step"})
        for r in results:
            run.files += r["files"]
        # overlay: common bins across fractions, per seed
        rows = []
        for s in cfg["seeds"]:
            rs = [r for r in results if r["seed"] == s]
            allm = np.concatenate([r["post_margins"] for r in rs])
            lo, hi = float(allm.min()), float(allm.max())
            edges = np.linspace(lo, hi if hi > lo else lo + 1.0, 65)
            counts = [np.histogram(r["post_margins"], bins=edges)[0] for r in rs]
            for i in range(64):
                rows.append([s, float(edges[i]), float(edges[i + 1]), *[int(c[i]) for c in counts]])
        p = run.path("histograms", "overlay.csv")
        fr_cols = [f"count_frac{float(q):.2f}" for q in cfg["fractions"]]
        _write_rows(p, ["seed", "bin_left", "bin_right", *fr_cols], rows)
        _write_doc(p, {"seed": "run seed", "bin_left": "bin edge", "bin_right": "bin edge",
                       **{c: "post-distillation normalized margin counts at this permuted fraction"
                          for c in fr_cols}})
        run.results = {"medians": {f"{r['seed']}:{r['fraction']}": r["post_median"] for r in results}}
    return run.out, results


def run_bound_compare(cfg):
    with Run(cfg, "bound_compare") as run:
        seed = cfg["seed"]
        data = make_dataset(cfg, seed)
        f = _teacher(cfg, data, seed)
        setup = bound_setup(cfg, data)
        ev = NetEvaluator(f, data, sampler_for(cfg, data), setup, cfg["gamma"], cfg["distill"]["mode"])
        trace = _ladder(cfg, f, data, seed, evaluator=ev)
        n, m = data.n, setup.m_eval
        x_frob = float(np.linalg.norm(f.prepare(data.x_train)))
        z_frob = ev.eval_frobenius()

        def sr(net, frob, size):
            spec = [spectral_norm(w) for w in net.weights]
            if min(spec) == 0:
                return 0.0
            return stable_rank_rad(spec, [float(np.linalg.norm(w)) for w in net.weights], frob, size, C=setup.C)

        rad_f_sr = sr(f, z_frob, m)
        rows = []
        for step, lam, net, st in [(0, 0.0, f, trace.teacher)] + [(s.index + 1, s.lam, s.net, s.stats)
                                                                   for s in trace.steps]:
            bi = BoundInputs(n=n, m=m, k=data.k, gamma=cfg["gamma"], delta=setup.delta, ratio=ev.ratio,
                             phi=st.phi, softmax_err=st.softmax_err, hp=st.hp, rad_f=rad_f_sr)
            sr_n, sr_m = sr(net, x_frob, n), sr(net, z_frob, m)
            b_sr = abstract_bound(bi, sr_m, sr_n, C=setup.C, formula_id="stable_rank_augmentation")
            rows.append([step, lam, st.phi, sr_n, sr_m, st.rad_n, rad_compgraph(st.hp, m), b_sr.total,
                         st.bound.total])
        cols = ["step", "lam", "phi", "stable_rank_rad_n", "stable_rank_rad_m", "rad_compgraph_n",
                "rad_compgraph_m", "bound_stable_rank", "bound_compgraph"]
        p = run.path("traces", "bound_compare.csv")
        _write_rows(p, cols, rows)
        _write_doc(p, {"step": "0 is the teacher", "lam": "regularization weight",
                       "phi": "distillation distance on the evaluation sample",
                       "stable_rank_rad_n": "stable-rank Rademacher bound at the training size",
                       "stable_rank_rad_m": "same at the evaluation-sample size",
                       "rad_compgraph_n": "computation-graph Rademacher bound at the training size",
                       "rad_compgraph_m": "same at the evaluation-sample size",
                       "bound_stable_rank": "augmentation bound using stable-rank complexities",
                       "bound_compgraph": "augmentation bound using computation-graph complexities"})
        save_net(run, f, "f")
        run.results = {"rows": len(rows)}
    return run.out, rows


RUNNERS = {"train": run_train, "distill": run_distill, "bounds": run_bounds, "sparsify": run_sparsify,
           "augment": run_augment, "ladder": run_ladder, "width_sweep": run_width_sweep,
           "random_labels": run_random_labels, "bound_compare": run_bound_compare}
