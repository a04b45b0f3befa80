"""Epsilon-thresholded accuracy curves and prediction distribution dumps."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

DEFAULT_EPSILONS = np.arange(1, 17) / 128.0


@dataclass(frozen=True, eq=False)
class EpsCurve:
    epsilons: np.ndarray
    accuracies: np.ndarray
    n: int

    def at(self, eps: float) -> float:
        i = int(np.argmin(np.abs(self.epsilons - eps)))
        if not np.isclose(self.epsilons[i], eps, rtol=0, atol=1e-12):
            raise KeyError(f"epsilon {eps} not on the curve grid")
        return float(self.accuracies[i])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "accuracy", "n"])
            for e, a in zip(self.epsilons, self.accuracies):
                w.writerow([repr(float(e)), repr(float(a)), self.n])


def eps_accuracy(y_true, y_pred, epsilons=DEFAULT_EPSILONS) -> EpsCurve:
    """Fraction of |y_true - y_pred| <= eps for each eps (boundary inclusive)."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("empty input")
    eps = np.sort(np.asarray(epsilons, dtype=float))
    err = np.sort(np.abs(y_true - y_pred).ravel())
    counts = np.searchsorted(err, eps, side="right")
    return EpsCurve(eps, counts / err.size, int(err.size))


def curve_auc(curve: EpsCurve) -> float:
    """Trapezoidal area under the curve divided by the epsilon range."""
    e, a = curve.epsilons, curve.accuracies
    if len(e) < 2 or e[-1] <= e[0]:
        raise ValueError("need at least two distinct epsilon grid points")
    area = float(np.sum((e[1:] - e[:-1]) * (a[1:] + a[:-1]) / 2.0))
    return area / float(e[-1] - e[0])


def dump_distribution(samples, model, path) -> int:
    """Write ``r,y_true,y_pred,map_id`` rows in dataset order; returns the row count."""
    rows = []
    if samples:
        X = np.stack([s.features(model.input_layout).values for s in samples])
        preds = model.predict_batch(X)
        rows = [(s.r, s.y, float(p), s.map_id) for s, p in zip(samples, preds)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "y_true", "y_pred", "map_id"])
        for r, yt, yp, mid in rows:
            w.writerow([repr(r), repr(yt), repr(yp), mid])
    return len(rows)


def evaluate(samples, model, epsilons=DEFAULT_EPSILONS) -> EpsCurve:
    X = np.stack([s.features(model.input_layout).values for s in samples])
    y = np.array([s.y for s in samples])
    return eps_accuracy(y, model.predict_batch(X), epsilons)
