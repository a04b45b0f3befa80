"""Loudness predictors: distance heuristic, log-distance regression, and
MLPs over direction/distance with or without a panorama scan."""

from __future__ import annotations

import base64
import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .acoustics import heuristic_db
from .gridmap import LISTENER_RADIUS as R_MAX
from .sensing import feature_width

log = logging.getLogger(__name__)

FORMAT = "anavi-model"
VERSION = 1
KINDS = ("heuristic", "dislinreg", "dirdismlp", "vis_pano", "vis_ego",
         "binned16", "binned64", "binned128")
LINREG_EPS = 1e-3


class ModelError(ValueError):
    pass


class LayoutMismatch(ModelError):
    pass


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpSpec:
    """Predictor layer sizes (input first); ``scan_in > 0`` adds the visual and
    direction-distance encoders in front of the predictor."""
    layer_sizes: tuple
    activation: str = "gelu"
    batch_norm: bool = True
    head: int = 1  # 1 = scalar regression, m = m-bin logits
    scan_in: int = 0
    vis_dim: int = 64
    dirdis_dim: int = 16

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ModelError("need at least two layer sizes")
        if self.layer_sizes[-1] != self.head:
            raise ModelError("last layer size must match the head")
        if self.scan_in and self.layer_sizes[0] != self.vis_dim + self.dirdis_dim:
            raise ModelError("predictor input must equal vis_dim + dirdis_dim")
        if self.activation not in nn.ACTIVATIONS:
            raise ModelError(f"unknown activation {self.activation!r}")

    def to_dict(self):
        d = asdict(self)
        d["layer_sizes"] = list(self.layer_sizes)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["layer_sizes"] = tuple(d["layer_sizes"])
        return cls(**d)


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "huber"
    huber_delta: float = 0.1
    learning_rate: float = 0.01
    lr_decay: float = 0.95
    lr_decay_every: int = 10
    batch_size: int = 64
    epochs: int = 60
    weight_decay: float = 0.01
    seed: int = 0
    betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.loss not in ("huber", "cross_entropy"):
            raise ModelError(f"unknown loss {self.loss!r}")
        for k in ("huber_delta", "learning_rate", "lr_decay", "lr_decay_every",
                  "batch_size", "epochs"):
            if not getattr(self, k) > 0:
                raise ModelError(f"{k} must be positive")
        if self.weight_decay < 0:
            raise ModelError("weight_decay must be >= 0")

    def lr_at(self, epoch: int) -> float:
        return self.learning_rate * self.lr_decay ** (epoch // self.lr_decay_every)


def default_spec(kind: str) -> MlpSpec:
    if kind == "dirdismlp":
        return MlpSpec((2, 8, 8, 1), activation="relu")
    scan_in = feature_width("ego" if kind == "vis_ego" else "pano") - 2
    head = int(kind[6:]) if kind.startswith("binned") else 1
    return MlpSpec((80, 64, 32, 8, head), activation="gelu", head=head, scan_in=scan_in)


def layout_for(kind: str) -> str:
    if kind in ("heuristic", "dislinreg", "dirdismlp"):
        return "dirdist"
    return "ego" if kind == "vis_ego" else "pano"


class Network:
    """Either a plain MLP over all inputs, or (``scan_in > 0``) separate
    linear encoders for the scan and for (r, theta) feeding a shrinking MLP."""

    def __init__(self, spec: MlpSpec, rng: np.random.Generator):
        self.spec = spec
        self.modules: dict[str, nn.Layer] = {}
        if spec.scan_in:
            self.vis = nn.Sequential([nn.Linear(spec.scan_in, spec.vis_dim, rng),
                                      nn.BatchNorm(spec.vis_dim)])
            self.dirdis = nn.Sequential([nn.Linear(2, spec.dirdis_dim, rng)])
        else:
            self.vis = self.dirdis = None
        self.body = nn.Sequential(nn.mlp_blocks(spec.layer_sizes, spec.activation,
                                                spec.batch_norm, rng))
        for name, seq in (("vis", self.vis), ("dirdis", self.dirdis), ("body", self.body)):
            if seq is not None:
                for lname, layer in seq.named_layers(f"{name}."):
                    self.modules[lname] = layer

    def forward(self, x, train=False):
        if self.vis is None:
            return self.body.forward(x, train)
        e_vis = self.vis.forward(x[:, 2:], train)
        e_dd = self.dirdis.forward(x[:, :2], train)
        return self.body.forward(np.concatenate([e_vis, e_dd], axis=1), train)

    def backward(self, g):
        g = self.body.backward(g)
        if self.vis is not None:
            self.vis.backward(g[:, :self.spec.vis_dim])
            self.dirdis.backward(g[:, self.spec.vis_dim:])

    def params(self) -> dict:
        return {f"{m}.{k}": v for m, layer in self.modules.items() for k, v in layer.params.items()}

    def grads(self) -> dict:
        return {f"{m}.{k}": v for m, layer in self.modules.items() for k, v in layer.grads.items()}

    def buffers(self) -> dict:
        return {f"{m}.{k}": v for m, layer in self.modules.items() for k, v in layer.buffers.items()}

    def set_state(self, params: dict, buffers: dict):
        for m, layer in self.modules.items():
            for k in layer.params:
                layer.params[k][...] = params[f"{m}.{k}"]
            for k in layer.buffers:
                layer.buffers[k] = np.array(buffers[f"{m}.{k}"], dtype=float)

    def set_track_stats(self, flag: bool):
        for layer in self.modules.values():
            if isinstance(layer, nn.BatchNorm):
                layer.track_stats = flag

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.params().values())


@dataclass
class PredictorModel:
    kind: str
    input_layout: str
    spec: MlpSpec | None = None
    net: Network | None = None
    coef: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")

    @property
    def n_params(self) -> int:
        if self.kind == "heuristic":
            return 0
        if self.kind == "dislinreg":
            return 3
        return self.net.n_params

    def raw(self, X: np.ndarray) -> np.ndarray:
        """Unclamped network output (scalar head) or logits."""
        return self.net.forward(X, train=False)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != feature_width(self.input_layout):
            raise LayoutMismatch(f"{self.kind} expects {self.input_layout!r} features "
                                 f"of width {feature_width(self.input_layout)}, got {X.shape[1]}")
        if self.kind == "heuristic":
            return np.array([heuristic_db(r).y for r in X[:, 0] * R_MAX])
        if self.kind == "dislinreg":
            out = linreg_basis(X[:, 0]) @ self.coef
        elif self.spec.head > 1:
            return (np.argmax(self.raw(X), axis=1) + 0.5) / self.spec.head
        else:
            out = self.raw(X)[:, 0]
        return np.clip(out, 0.0, 1.0)

    def predict(self, features) -> float:
        layout = getattr(features, "layout", None)
        if layout is not None and layout != self.input_layout:
            raise LayoutMismatch(f"{self.kind} expects {self.input_layout!r} features, got {layout!r}")
        values = getattr(features, "values", features)
        return float(self.predict_batch(values)[0])


def predict(model: PredictorModel, features) -> float:
    return model.predict(features)


def heuristic_model() -> PredictorModel:
    return PredictorModel("heuristic", "dirdist")


def bin_labels(y, m: int):
    """Bin index floor(y * m), clamped to m - 1."""
    if m not in (16, 64, 128):
        raise ModelError(f"unsupported bin count {m}")
    idx = np.minimum(np.floor(np.asarray(y, dtype=float) * m).astype(int), m - 1)
    return idx if idx.ndim else int(idx)


def linreg_basis(r_norm: np.ndarray) -> np.ndarray:
    r_norm = np.asarray(r_norm, dtype=float)
    return np.stack([np.ones_like(r_norm), np.log10(r_norm + LINREG_EPS), r_norm], axis=1)


def fit_dislinreg(X: np.ndarray, y: np.ndarray) -> PredictorModel:
    """Least squares of y on [1, log10(r_norm + 1e-3), r_norm]."""
    A = linreg_basis(np.asarray(X)[:, 0])
    if A.shape[0] < 2 or np.linalg.matrix_rank(A) < A.shape[1]:
        raise ModelError("degenerate data: normal equations are singular")
    coef, *_ = np.linalg.lstsq(A, np.asarray(y, dtype=float), rcond=None)
    return PredictorModel("dislinreg", "dirdist", coef=coef)


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)  # (epoch, train_loss, val_loss, lr)
    best_epoch: int = -1
    weight_decay: float = 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "val_loss", "lr"])
            for row in self.epochs:
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def _backprop(net: Network, X, y, cfg: TrainConfig):
    out = net.forward(X, train=True)
    if cfg.loss == "huber":
        loss, g = nn.huber(out[:, 0], y, cfg.huber_delta)
        g = g[:, None]
    else:
        loss, g = nn.cross_entropy(out, bin_labels(y, net.spec.head))
    net.backward(g)
    return loss


def evaluate_loss(net: Network, X, y, cfg: TrainConfig, batch=4096) -> float:
    total = 0.0
    for i in range(0, len(X), batch):
        out = net.forward(X[i:i + batch], train=False)
        if cfg.loss == "huber":
            l, _ = nn.huber(out[:, 0], y[i:i + batch], cfg.huber_delta)
        else:
            l, _ = nn.cross_entropy(out, bin_labels(y[i:i + batch], net.spec.head))
        total += l * len(out)
    return total / len(X)


def train(kind: str, cfg: TrainConfig, train_set, val_set, spec: MlpSpec | None = None):
    """Fit an MLP predictor with mini-batch AdamW; returns the parameters of
    the epoch with the lowest validation loss."""
    X, y = (np.asarray(a, dtype=float) for a in train_set)
    Xv, yv = (np.asarray(a, dtype=float) for a in val_set)
    if len(X) == 0 or len(Xv) == 0:
        raise ModelError("training and validation sets must be non-empty")
    spec = spec or default_spec(kind)
    layout = layout_for(kind)
    width = feature_width(layout)
    if X.shape[1] != width or Xv.shape[1] != width:
        raise LayoutMismatch(f"{kind} expects {layout!r} features of width {width}")
    if spec.head > 1 and cfg.loss != "cross_entropy":
        cfg = TrainConfig(**{**asdict(cfg), "loss": "cross_entropy"})

    rng = np.random.default_rng(cfg.seed)
    net = Network(spec, rng)
    params = net.params()
    opt = nn.AdamW(params, lr=cfg.learning_rate, betas=cfg.betas, eps=cfg.adam_eps,
                   weight_decay=cfg.weight_decay)
    tlog = TrainLog(weight_decay=cfg.weight_decay)
    best = (math.inf, None, None)
    n = len(X)
    for epoch in range(cfg.epochs):
        opt.lr = cfg.lr_at(epoch)
        order = rng.permutation(n)
        total = 0.0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            if len(idx) < 2 and n > 1:
                continue  # batch norm needs two rows
            loss = _backprop(net, X[idx], y[idx], cfg)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch {bi}, lr {opt.lr}")
            opt.step(net.grads())
            total += loss * len(idx)
        val = evaluate_loss(net, Xv, yv, cfg)
        if not math.isfinite(val):
            raise TrainingDiverged(f"non-finite validation loss at epoch {epoch}, lr {opt.lr}")
        tlog.epochs.append((epoch, total / n, val, opt.lr))
        if val < best[0]:
            best = (val, {k: v.copy() for k, v in params.items()},
                    {k: v.copy() for k, v in net.buffers().items()})
            tlog.best_epoch = epoch
        log.debug("%s epoch %d train %.5f val %.5f", kind, epoch, total / n, val)
    net.set_state(best[1], best[2])
    return PredictorModel(kind, layout, spec=spec, net=net), tlog


def fit(kind: str, train_set, val_set, cfg: TrainConfig | None = None):
    """Build any model kind; returns (model, TrainLog or None)."""
    cfg = cfg or TrainConfig()
    if kind == "heuristic":
        return heuristic_model(), None
    if kind == "dislinreg":
        return fit_dislinreg(*train_set), None
    if kind.startswith("binned"):
        cfg = TrainConfig(**{**asdict(cfg), "loss": "cross_entropy"})
    return train(kind, cfg, train_set, val_set)


def _encode(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"], validate=True)
    return np.frombuffer(raw, dtype="<f8").reshape(d["shape"]).astype(float)


def model_to_dict(model: PredictorModel) -> dict:
    d = {"format": FORMAT, "version": VERSION, "kind": model.kind,
         "input_layout": model.input_layout}
    if model.coef is not None:
        d["coef"] = _encode(model.coef)
    if model.net is not None:
        d["spec"] = model.spec.to_dict()
        d["params"] = {k: _encode(v) for k, v in model.net.params().items()}
        d["norm_stats"] = {k: _encode(v) for k, v in model.net.buffers().items()}
    return d


def model_from_dict(d: dict) -> PredictorModel:
    if d.get("format") != FORMAT:
        raise ModelError("not an anavi model file")
    if d.get("version") != VERSION:
        raise ModelError(f"model version {d.get('version')} unsupported (expected {VERSION})")
    try:
        kind = d["kind"]
        if d["input_layout"] != layout_for(kind):
            raise ModelError(f"layout {d['input_layout']!r} does not match kind {kind!r}")
        if kind == "heuristic":
            return heuristic_model()
        if kind == "dislinreg":
            coef = _decode(d["coef"])
            if coef.shape != (3,):
                raise ModelError("dislinreg needs 3 coefficients")
            return PredictorModel(kind, "dirdist", coef=coef)
        spec = MlpSpec.from_dict(d["spec"])
        net = Network(spec, np.random.default_rng(0))
        params = {k: _decode(v) for k, v in d["params"].items()}
        buffers = {k: _decode(v) for k, v in d["norm_stats"].items()}
        expected = net.params()
        if set(params) != set(expected) or any(params[k].shape != v.shape for k, v in expected.items()):
            raise ModelError("parameter layout does not match the model spec")
        net.set_state(params, buffers)
        return PredictorModel(kind, d["input_layout"], spec=spec, net=net)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"corrupted model file: {exc}") from None


def save_model(model: PredictorModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n")


def load_model(path) -> PredictorModel:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: corrupted model file (line {exc.lineno}: {exc.msg})") from None
    return model_from_dict(d)
