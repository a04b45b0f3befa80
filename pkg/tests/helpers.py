"""Shared scenario builders for the test suite."""

import numpy as np

from anavi.acoustics import AcousticConfig, histogram_to_label, trace_impulse
from anavi.dataset import Sample
from anavi.gridmap import Pose2
from anavi.sensing import polar, scan_panorama

# Two-room fixture: the drywall divider occupies x in [6.5, 6.75] with a door
# at y in [2, 3]. A source just left of the divider hears a listener 1 m to
# its right through the wall, and a listener 1 m to its left in the open.
DIVIDER_SOURCE_X = 6.125


def wall_pairs(n, seed=0):
    """``n`` (source, walled listener, open listener) triples at r = 1 m."""
    rng = np.random.default_rng(seed)
    ys = np.concatenate([np.arange(1, 7), np.arange(13, 19)]) * 0.25 + 0.125
    out = []
    for _ in range(n):
        y = float(rng.choice(ys))
        s = Pose2(DIVIDER_SOURCE_X, y)
        out.append((s, Pose2(s.x + 1.0, y), Pose2(s.x - 1.0, y)))
    return out


def labeled(grid, source, listener, seed):
    cfg = AcousticConfig()
    h = trace_impulse(grid, None, source, listener, cfg, np.random.default_rng(seed))
    lab = histogram_to_label(h)
    r, theta = polar(source, listener)
    return Sample(grid.id, source, listener, r, theta, scan_panorama(grid, None, source),
                  lab.y, lab.db_max)


GRAD_FLOOR = 1e-6  # central-difference round-off is ~1e-10; truly-zero gradients sit below this


def grad_check(kind, seed=0, batch=12, h=1e-5, per_tensor=64):
    """Max elementwise relative error between analytic and central-difference
    gradients of the training loss for a freshly initialized ``kind`` network.

    Up to ``per_tensor`` randomly chosen entries of every parameter tensor are
    checked. Relative error is |a - n| / max(|a|, |n|, GRAD_FLOOR).
    """
    from anavi import predictor
    from anavi.sensing import feature_width

    spec = predictor.default_spec(kind)
    rng = np.random.default_rng(seed)
    net = predictor.Network(spec, rng)
    net.set_track_stats(False)
    X = rng.random((batch, feature_width(predictor.layout_for(kind))))
    y = rng.random(batch)
    cfg = predictor.TrainConfig(loss="cross_entropy" if spec.head > 1 else "huber")
    predictor._backprop(net, X, y, cfg)
    analytic = {k: v.copy() for k, v in net.grads().items()}

    def loss():
        return predictor._backprop(net, X, y, cfg)

    worst = 0.0
    for name, p in net.params().items():
        flat = p.reshape(-1)
        g = analytic[name].reshape(-1)
        picks = np.arange(flat.size)
        if flat.size > per_tensor:
            picks = np.sort(rng.choice(flat.size, per_tensor, replace=False))
        for i in picks:
            old = flat[i]
            flat[i] = old + h
            up = loss()
            flat[i] = old - h
            down = loss()
            flat[i] = old
            num = (up - down) / (2 * h)
            denom = max(abs(num), abs(g[i]), GRAD_FLOOR)
            worst = max(worst, abs(num - g[i]) / denom)
    return worst
