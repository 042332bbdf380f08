"""DNN, CNN and KNN localizers mapping an RSS vector to a 2-D position."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fingan import rng as rngmod
from fingan.errors import EmptyDataset, KTooLarge
from fingan.gan.standardize import Standardizer
from fingan.ndnn.layers import Conv1d, Dense, Flatten, LeakyReLU, ReLU, Sequential
from fingan.ndnn.optim import Adam
from fingan.signal_model import FingerprintDataset


@dataclass
class LocalizerConfig:
    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    leaky_slope: float = 0.01
    dnn_hidden: tuple = (128, 128, 64)
    cnn_filters: tuple = (32, 16)
    cnn_dense: int = 64
    k: int = 5


@dataclass
class LocalizerModel:
    kind: str
    standardizer: Standardizer
    net: Sequential | None = None
    db: FingerprintDataset | None = None
    k: int = 5
    loss_history: list = field(default_factory=list)

    def predict(self, rss) -> np.ndarray:
        rss = np.atleast_2d(np.asarray(rss, dtype=np.float64))
        if self.kind == "knn":
            return knn_predict(self.db, rss, self.k, self.standardizer)
        x = self.standardizer.rss(rss)
        if self.kind == "cnn":
            x = x[:, None, :]
        out = np.concatenate([self.net.forward(x[lo:lo + 1024], train=False) for lo in range(0, len(x), 1024)])
        return self.standardizer.rp_inverse(out)


def build_dnn(num_rus, cfg: LocalizerConfig, rng):
    layers, n_in = [], num_rus
    for width in cfg.dnn_hidden:
        layers += [Dense(n_in, width, rng), LeakyReLU(cfg.leaky_slope)]
        n_in = width
    layers.append(Dense(n_in, 2, rng))
    return Sequential(layers)


def build_cnn(num_rus, cfg: LocalizerConfig, rng):
    layers, in_ch = [], 1
    for out_ch in cfg.cnn_filters:
        layers += [Conv1d(in_ch, out_ch, 3, 1, 1, rng), ReLU()]
        in_ch = out_ch
    layers += [Flatten(), Dense(in_ch * num_rus, cfg.cnn_dense, rng), ReLU(), Dense(cfg.cnn_dense, 2, rng)]
    return Sequential(layers)


def mse_loss(pred, target):
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def _fit_regressor(kind, ds: FingerprintDataset, cfg: LocalizerConfig) -> LocalizerModel:
    if len(ds) == 0:
        raise EmptyDataset("cannot train a localizer on an empty dataset")
    cfg = cfg or LocalizerConfig()
    std = Standardizer.fit(ds)
    rng = rngmod.derive(cfg.seed, f"localizer/{kind}/init")
    net = build_dnn(ds.num_rus, cfg, rng) if kind == "dnn" else build_cnn(ds.num_rus, cfg, rng)
    x = std.rss(ds.rss)
    if kind == "cnn":
        x = x[:, None, :]
    y = std.rp(ds.rps)
    opt = Adam(net.parameters(), learning_rate=cfg.learning_rate)
    order_rng = rngmod.derive(cfg.seed, f"localizer/{kind}/batches")
    n = len(x)
    bs = min(cfg.batch_size, n)
    model = LocalizerModel(kind, std, net)
    for _ in range(cfg.epochs):
        perm = order_rng.permutation(n)
        total = 0.0
        for lo in range(0, n, bs):
            idx = perm[lo:lo + bs]
            net.zero_grad()
            loss, grad = mse_loss(net.forward(x[idx]), y[idx])
            net.backward(grad)
            opt.step()
            total += loss * len(idx)
        model.loss_history.append(total / n)
    return model


def train_dnn_localizer(ds: FingerprintDataset, config: LocalizerConfig | None = None) -> LocalizerModel:
    """Fully connected regressor on standardized RSS and coordinates (MSE loss)."""
    return _fit_regressor("dnn", ds, config or LocalizerConfig())


def train_cnn_localizer(ds: FingerprintDataset, config: LocalizerConfig | None = None) -> LocalizerModel:
    """1-D conv regressor over the RSS sequence (MSE loss)."""
    return _fit_regressor("cnn", ds, config or LocalizerConfig())


def build_knn_localizer(ds: FingerprintDataset, config: LocalizerConfig | None = None) -> LocalizerModel:
    if len(ds) == 0:
        raise EmptyDataset("KNN database is empty")
    k = (config or LocalizerConfig()).k
    if k > len(ds):
        raise KTooLarge(f"k={k} exceeds database size {len(ds)}")
    return LocalizerModel("knn", Standardizer.fit(ds), db=ds, k=k)


def knn_predict(db: FingerprintDataset, queries, k, standardizer) -> np.ndarray:
    if k > len(db):
        raise KTooLarge(f"k={k} exceeds database size {len(db)}")
    ref = standardizer.rss(db.rss)
    q = standardizer.rss(np.atleast_2d(queries))
    out = np.empty((len(q), 2))
    for lo in range(0, len(q), 256):
        block = q[lo:lo + 256]
        d2 = ((block[:, None, :] - ref[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[lo:lo + 256] = db.rps[nearest].mean(axis=1)
    return out


def knn_localize(db: FingerprintDataset, query, k=5, standardizer=None) -> np.ndarray:
    """Unweighted mean RP of the ``k`` nearest fingerprints in standardized RSS space.

    Ties keep dataset order.
    """
    standardizer = standardizer or Standardizer.fit(db)
    return knn_predict(db, query, k, standardizer)[0]


def localization_rmse(model: LocalizerModel, test: FingerprintDataset) -> float:
    if len(test) == 0:
        raise EmptyDataset("test set is empty")
    return rmse(model.predict(test.rss), test.rps)


def rmse(pred, truth) -> float:
    d = np.asarray(pred) - np.asarray(truth)
    return float(np.sqrt(np.mean((d * d).sum(axis=1))))


def train_localizer(kind, ds, config=None) -> LocalizerModel:
    builders = {"dnn": train_dnn_localizer, "cnn": train_cnn_localizer, "knn": build_knn_localizer}
    try:
        return builders[kind](ds, config)
    except KeyError:
        raise ValueError(f"unknown localizer {kind!r}") from None
