"""Canonical computation graphs.

A layer maps a batch ``X`` (n x d_in, one example per row) to

    sigma([ W Pi(D X^T) ; F X^T ])^T

where ``D`` is a 0/1 coordinate selector, ``Pi`` projects the whole selected
batch onto the Frobenius ball of radius ``b * sqrt(n)``, ``W`` is trainable and
``F`` is fixed (a skip connection, for instance).  The stacked pre-activation
has the ``W`` rows first and the ``F`` rows after them.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, UnsupportedError
from .linalg import as_matrix, norm21_of_transpose, project_frobenius, read_dbm, spectral_norm, write_dbm

_ELEMENTWISE = ("relu", "identity")


@dataclass(frozen=True)
class GateSpec:
    """Gate applied to the stacked pre-activation.

    ``relu`` and ``identity`` act elementwise.  ``add`` sums the W block and the
    F block (they must have equal height), which is how a residual connection
    closes; its Frobenius Lipschitz constant is sqrt(2).  ``blockwise`` applies
    an elementwise kind per contiguous block of output coordinates.
    """

    kind: str = "relu"
    blocks: tuple = ()
    lipschitz: float = None

    def __post_init__(self):
        if self.kind not in _ELEMENTWISE + ("add", "blockwise"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "blockwise":
            if not self.blocks:
                raise ValueError("blockwise gate needs blocks")
            for kind, size in self.blocks:
                if kind not in _ELEMENTWISE or size < 0:
                    raise ValueError(f"bad gate block {(kind, size)!r}")
            object.__setattr__(self, "blocks", tuple((k, int(s)) for k, s in self.blocks))
        default = math.sqrt(2.0) if self.kind == "add" else 1.0
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", default)
        elif self.lipschitz < default:
            raise ValueError(f"declared Lipschitz constant {self.lipschitz} below {default} for {self.kind}")

    def apply(self, z, split):
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "identity":
            return z
        if self.kind == "add":
            return z[:, :split] + z[:, split:]
        out = np.empty_like(z)
        start = 0
        for kind, size in self.blocks:
            block = z[:, start:start + size]
            out[:, start:start + size] = np.maximum(block, 0.0) if kind == "relu" else block
            start += size
        return out

    def to_json(self):
        d = {"kind": self.kind, "lipschitz": self.lipschitz}
        if self.blocks:
            d["blocks"] = [list(b) for b in self.blocks]
        return d

    @classmethod
    def from_json(cls, d):
        return cls(d["kind"], tuple(tuple(b) for b in d.get("blocks", ())), d.get("lipschitz"))


@dataclass
class GraphLayer:
    W: np.ndarray
    D: np.ndarray = None
    F: np.ndarray = None
    radius: float = math.inf
    gate: GateSpec = field(default_factory=GateSpec)

    def __post_init__(self):
        self.W = as_matrix(self.W, "W")
        d_in = self.W.shape[1]
        if self.D is None:
            self.D = np.ones(d_in)
        self.D = np.asarray(self.D, dtype=np.float64).ravel()
        if self.D.shape != (d_in,) or not np.all((self.D == 0) | (self.D == 1)):
            raise ShapeError("D must be a 0/1 vector with one entry per input coordinate")
        if self.F is not None:
            self.F = as_matrix(self.F, "F").copy()
            self.F.setflags(write=False)
            if self.F.shape[1] != d_in:
                raise ShapeError(f"F has {self.F.shape[1]} columns, W has {d_in}")
        if not self.radius > 0:
            raise ValueError("projection radius must be positive")
        h, f = self.W.shape[0], self.f_rows
        if self.gate.kind == "add" and h != f:
            raise ShapeError(f"add gate needs equal W and F heights, got {h} and {f}")
        if self.gate.kind == "blockwise" and sum(s for _, s in self.gate.blocks) != h + f:
            raise ShapeError("blockwise gate sizes do not cover the layer output")

    @property
    def in_dim(self):
        return self.W.shape[1]

    @property
    def f_rows(self):
        return 0 if self.F is None else self.F.shape[0]

    @property
    def out_dim(self):
        h = self.W.shape[0]
        return h if self.gate.kind == "add" else h + self.f_rows

    @property
    def full_selector(self):
        return bool(np.all(self.D == 1))

    def projected_input(self, x):
        n = x.shape[0]
        return project_frobenius(x * self.D, self.radius * math.sqrt(n))

    def forward(self, x):
        top = self.projected_input(x) @ self.W.T
        z = top if self.F is None else np.hstack([top, x @ self.F.T])
        return self.gate.apply(z, self.W.shape[0])

    def linear_block(self):
        """The stacked linear map ``[W D ; F]`` with the projection left out."""
        wd = self.W * self.D
        return wd if self.F is None else np.vstack([wd, self.F])


@dataclass
class CanonicalGraph:
    layers: list
    input_dim: int = None

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("graph needs at least one layer")
        if self.input_dim is None:
            self.input_dim = self.layers[0].in_dim
        dim = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.in_dim != dim:
                raise ShapeError(f"layer {i} expects input dim {layer.in_dim}, previous output is {dim}")
            dim = layer.out_dim

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    @property
    def depth(self):
        return len(self.layers)

    def forward(self, x):
        return forward_batch(self, x)


def forward_batch(g, x):
    x = as_matrix(x, "X")
    if x.shape[1] != g.input_dim:
        raise ShapeError(f"layer 0: input has {x.shape[1]} columns, graph expects {g.input_dim}")
    for layer in g.layers:
        x = layer.forward(x)
    return x


@dataclass
class GraphHyperParams:
    rho: np.ndarray
    b: np.ndarray
    r: np.ndarray
    s: np.ndarray
    width: int
    depth: int
    raw_r: np.ndarray = None
    raw_s: np.ndarray = None
    b_active: np.ndarray = None

    def to_json(self):
        out = {}
        for key in ("rho", "b", "r", "s", "raw_r", "raw_s", "b_active"):
            val = getattr(self, key)
            out[key] = None if val is None else [float(v) for v in val]
        out["width"] = self.width
        out["depth"] = self.depth
        return out


def layer_operator_norm(layer):
    """Upper bound on the Frobenius Lipschitz constant of ``X -> [W Pi D X^T ; F X^T]``.

    Without an active projection the map is linear and this is the spectral
    norm of the stacked block.  With a projection and a skip block, the
    projection can rotate the W-part of a difference, so the bound becomes
    ``sqrt(||W D||^2 + ||F||^2)``.
    """
    if layer.F is None or not math.isfinite(layer.radius):
        return spectral_norm(layer.linear_block())
    wd = spectral_norm(layer.W * layer.D)
    f = spectral_norm(layer.F)
    return math.hypot(wd, f)


def measure_hyperparams(g, x, b_mode="configured", floor=1.0):
    """Measure ``(rho, b, r, s)`` for ``g`` on batch ``x``.

    ``b_mode="configured"`` takes ``b_i`` from the layer's projection radius and
    falls back to the measured value when the radius is infinite;
    ``"measured"`` always uses ``max ||Pi D X^T||_F / sqrt(n)`` from the pass.
    Every vector is clamped below at ``floor``; the unclamped ``r`` and ``s``
    are kept in ``raw_r`` / ``raw_s``.
    """
    x = as_matrix(x, "X")
    if x.shape[0] == 0:
        raise ShapeError("measure_hyperparams needs a nonempty batch")
    if x.shape[1] != g.input_dim:
        raise ShapeError(f"layer 0: input has {x.shape[1]} columns, graph expects {g.input_dim}")
    n = x.shape[0]
    rho, b, b_act, r, s = [], [], [], [], []
    width = g.input_dim
    for layer in g.layers:
        active = float(np.linalg.norm(layer.projected_input(x))) / math.sqrt(n)
        b_act.append(active)
        if b_mode == "configured" and math.isfinite(layer.radius):
            b.append(layer.radius)
        elif b_mode in ("configured", "measured"):
            b.append(active)
        else:
            raise ValueError(f"unknown b_mode {b_mode!r}")
        r.append(norm21_of_transpose(layer.W))
        s.append(layer_operator_norm(layer))
        rho.append(layer.gate.lipschitz)
        width = max(width, layer.W.shape[0] + layer.f_rows, layer.out_dim)
        x = layer.forward(x)
    clamp = lambda v: np.maximum(np.asarray(v, dtype=np.float64), floor)
    return GraphHyperParams(
        rho=clamp(rho), b=clamp(b), r=clamp(r), s=clamp(s),
        width=int(width), depth=g.depth,
        raw_r=np.asarray(r), raw_s=np.asarray(s), b_active=np.asarray(b_act),
    )


def lipschitz_bound(hp):
    """Product of ``s_i * rho_i``, using unclamped ``s`` when available."""
    s = hp.raw_s if hp.raw_s is not None else hp.s
    return float(np.prod(s * hp.rho))


def from_mlp(weights, gates=None, radii=None):
    """Build a graph from a dense chain; gates default to relu with an identity output."""
    if gates is None:
        gates = ["relu"] * (len(weights) - 1) + ["identity"]
    if radii is None:
        radii = [math.inf] * len(weights)
    layers = [GraphLayer(W=np.array(w, dtype=np.float64), radius=rad, gate=GateSpec(gk))
              for w, gk, rad in zip(weights, gates, radii)]
    return CanonicalGraph(layers)


def to_plain_mlp(g):
    """Return ``[(W_i, gate_kind)]`` for graphs that are plain dense chains."""
    out = []
    for i, layer in enumerate(g.layers):
        if layer.F is not None or not layer.full_selector:
            raise UnsupportedError(f"layer {i} has a skip block or selector; not a dense chain")
        if layer.gate.kind not in _ELEMENTWISE:
            raise UnsupportedError(f"layer {i} gate {layer.gate.kind!r} is not elementwise")
        if math.isfinite(layer.radius):
            raise UnsupportedError(f"layer {i} has an active projection radius")
        out.append((layer.W, layer.gate.kind))
    return out


def save_graph(g, directory):
    """Write ``graph.json`` plus one DBM1 blob per weight / fixed matrix."""
    os.makedirs(directory, exist_ok=True)
    layers = []
    for i, layer in enumerate(g.layers):
        entry = {
            "in_dim": layer.in_dim,
            "out_dim": layer.out_dim,
            "W": f"layer{i}_W.dbm",
            "D": [int(v) for v in layer.D],
            "F": None,
            "radius": None if not math.isfinite(layer.radius) else layer.radius,
            "gate": layer.gate.to_json(),
        }
        write_dbm(os.path.join(directory, entry["W"]), layer.W)
        if layer.F is not None:
            entry["F"] = f"layer{i}_F.dbm"
            write_dbm(os.path.join(directory, entry["F"]), layer.F)
        layers.append(entry)
    manifest = {"format": "canonical-graph/1", "input_dim": g.input_dim, "layers": layers}
    with open(os.path.join(directory, "graph.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_graph(directory):
    with open(os.path.join(directory, "graph.json")) as fh:
        manifest = json.load(fh)
    layers = []
    for entry in manifest["layers"]:
        F = read_dbm(os.path.join(directory, entry["F"])) if entry["F"] else None
        radius = math.inf if entry["radius"] is None else float(entry["radius"])
        layers.append(GraphLayer(
            W=read_dbm(os.path.join(directory, entry["W"])),
            D=np.asarray(entry["D"], dtype=np.float64),
            F=F, radius=radius, gate=GateSpec.from_json(entry["gate"]),
        ))
    return CanonicalGraph(layers, manifest["input_dim"])
