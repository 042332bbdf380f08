"""Generator, discriminator and AuxNet assembly plus checkpointing."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from fingan import rng as rngmod
from fingan.errors import BadCheckpoint, ConfigError, DataError, ShapeMismatch
from fingan.gan.standardize import Standardizer
from fingan.ndnn import checkpoint as ckpt
from fingan.ndnn import functional as F
from fingan.ndnn.layers import BatchNorm1d, Conv1d, Dense, Flatten, LeakyReLU, ReLU, Sequential, Sigmoid
from fingan.signal_model import RP_MATCH_TOL

NOISE_DIM = 64
CODE_DIM = 2
SIGMA_FLOOR = 1e-6
GEN_FILTERS = (256, 128, 64)
DISC_FILTERS = (128, 64, 16)
AUX_HIDDEN = 128


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 64
    learning_rate: float = 1e-4
    adam_beta1: float = 0.5
    aux_output_gain: float = 0.1
    lam: float = 1.0
    seed: int = 0
    leaky_slope: float = 0.01
    d_steps_per_g_step: int = 1
    variant: str = "full"
    condition_discriminator: bool = True
    kernel_size: int = 3

    def __post_init__(self):
        for name in ("epochs", "batch_size", "d_steps_per_g_step", "kernel_size"):
            if int(getattr(self, name)) < 1:
                raise ConfigError("must be a positive integer", f"train.{name}")
        if self.batch_size < 2:
            raise ConfigError("batch normalization needs batches of at least 2", "train.batch_size")
        if not self.learning_rate > 0:
            raise ConfigError("must be > 0", "train.learning_rate")
        if not 0 <= self.adam_beta1 < 1:
            raise ConfigError("must lie in [0, 1)", "train.adam_beta1")
        if not self.aux_output_gain > 0:
            raise ConfigError("must be > 0", "train.aux_output_gain")
        if not self.lam >= 0:
            raise ConfigError("must be >= 0", "train.lam")
        if not self.leaky_slope >= 0:
            raise ConfigError("must be >= 0", "train.leaky_slope")
        if self.variant not in ("full", "lite"):
            raise ConfigError("must be 'full' or 'lite'", "train.variant")
        if self.kernel_size % 2 != 1:
            raise ConfigError("odd kernel sizes keep sequence length with 'same' padding", "train.kernel_size")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def build_generator(num_rus, rng, slope=0.01, k=3):
    layers = []
    in_ch = 1
    for out_ch in GEN_FILTERS:
        layers += [Conv1d(in_ch, out_ch, k, 1, k // 2, rng=rng), LeakyReLU(slope)]
        in_ch = out_ch
    layers += [Flatten(), Dense(in_ch * (NOISE_DIM + CODE_DIM), num_rus, rng=rng)]
    return Sequential(layers)


def build_discriminator(in_len, rng, k=3):
    """Shared conv trunk, authenticity head and AuxNet head."""
    layers = []
    in_ch = 1
    for out_ch in DISC_FILTERS:
        layers += [Conv1d(in_ch, out_ch, k, 1, k // 2, rng=rng), ReLU()]
        in_ch = out_ch
    layers.append(Flatten())
    feat = in_ch * in_len
    trunk = Sequential(layers)
    head = Sequential([Dense(feat, 1, rng=rng), Sigmoid()])
    aux = Sequential([Dense(feat, AUX_HIDDEN, rng=rng), ReLU(), BatchNorm1d(AUX_HIDDEN), Dense(AUX_HIDDEN, 2 * CODE_DIM, rng=rng)])
    return trunk, head, aux


@dataclass
class CodeTable:
    """Mean-RSS latent codes: RP -> 2-D projection of the RP's mean standardized RSS."""

    rps: np.ndarray
    codes: np.ndarray
    center: np.ndarray
    components: np.ndarray
    scale: np.ndarray

    def lookup(self, rps):
        rps = np.atleast_2d(np.asarray(rps, dtype=np.float64))
        d = np.abs(rps[:, None, :] - self.rps[None, :, :]).max(axis=2)
        hit = d <= RP_MATCH_TOL
        missing = ~hit.any(axis=1)
        if missing.any():
            raise DataError(f"no mean-RSS code for RP {tuple(rps[missing][0])}; "
                            "mean-RSS codes exist only for RPs of the fitting dataset")
        return self.codes[hit.argmax(axis=1)]

    def project(self, mean_rss_std):
        return ((np.asarray(mean_rss_std) - self.center) @ self.components.T) / self.scale

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("rps", "codes", "center", "components", "scale")}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.asarray(d[k], dtype=np.float64) for k in ("rps", "codes", "center", "components", "scale")))


@dataclass
class FinGanModel:
    generator: Sequential
    trunk: Sequential
    head: Sequential
    aux: Sequential | None
    standardizer: Standardizer
    num_rus: int
    config: TrainConfig = field(default_factory=TrainConfig)
    code_source: str = "rp"
    code_table: CodeTable | None = None
    history: list = field(default_factory=list)

    @classmethod
    def init(cls, num_rus, standardizer, config: TrainConfig | None = None):
        config = config or TrainConfig()
        rng = rngmod.derive(config.seed, "init")
        gen = build_generator(num_rus, rng, config.leaky_slope, config.kernel_size)
        in_len = num_rus + CODE_DIM if config.condition_discriminator else num_rus
        trunk, head, aux = build_discriminator(in_len, rng, config.kernel_size)
        if config.variant == "lite":
            aux = None
        else:
            # a small initial (mu, sigma) keeps the early log-likelihood from swamping L_Dc
            aux.layers[-1].params["W"] *= config.aux_output_gain
        return cls(gen, trunk, head, aux, standardizer, num_rus, config)

    @property
    def variant(self):
        return self.config.variant

    @property
    def lam(self):
        return 0.0 if self.aux is None else self.config.lam

    def copy(self):
        return copy.deepcopy(self)

    # -- conditioning codes ----------------------------------------------------

    def codes_for(self, rps):
        if self.code_source == "rp":
            return self.standardizer.rp(np.atleast_2d(rps))
        if self.code_table is None:
            raise DataError("mean-RSS code source without a fitted code table")
        return self.code_table.lookup(rps)

    # -- forward passes ----------------------------------------------------------

    def generator_forward(self, z, c, train=True):
        """Standardized RSS, shape (batch, num_rus)."""
        z, c = np.asarray(z, dtype=np.float64), np.asarray(c, dtype=np.float64)
        if z.ndim != 2 or c.ndim != 2 or z.shape[0] != c.shape[0] or z.shape[1] != NOISE_DIM or c.shape[1] != CODE_DIM:
            raise ShapeMismatch(f"expected z (B, {NOISE_DIM}) and c (B, {CODE_DIM}), got {z.shape}, {c.shape}")
        x = np.concatenate([c, z], axis=1)[:, None, :]
        return self.generator.forward(x, train)

    def _disc_input(self, rss, c):
        rss = np.asarray(rss, dtype=np.float64)
        if rss.ndim != 2 or rss.shape[1] != self.num_rus:
            raise ShapeMismatch(f"expected rss (B, {self.num_rus}), got {rss.shape}")
        if self.config.condition_discriminator:
            c = np.asarray(c, dtype=np.float64)
            if c.shape != (rss.shape[0], CODE_DIM):
                raise ShapeMismatch(f"expected c ({rss.shape[0]}, {CODE_DIM}), got {c.shape}")
            rss = np.concatenate([rss, c], axis=1)
        return rss[:, None, :]

    def trunk_forward(self, rss, c, train=True):
        return self.trunk.forward(self._disc_input(rss, c), train)

    def aux_forward(self, feats, train=True):
        raw = self.aux.forward(feats, train)
        self._aux_raw_sigma = raw[:, CODE_DIM:]
        mu = raw[:, :CODE_DIM]
        sigma = F.softplus(self._aux_raw_sigma) + SIGMA_FLOOR
        return mu, sigma

    def aux_backward(self, d_mu, d_sigma):
        d_raw = np.concatenate([d_mu, F.softplus_backward(self._aux_raw_sigma, d_sigma)], axis=1)
        return self.aux.backward(d_raw)

    def discriminator_forward(self, rss, c, train=True):
        """``(authenticity, (mu, sigma))``; the aux pair is None for the lite variant."""
        feats = self.trunk_forward(rss, c, train)
        auth = self.head.forward(feats, train)[:, 0]
        aux = self.aux_forward(feats, train) if self.aux is not None else None
        return auth, aux

    # -- parameter groups ------------------------------------------------------

    def networks(self):
        nets = {"generator": self.generator, "trunk": self.trunk, "head": self.head}
        if self.aux is not None:
            nets["aux"] = self.aux
        return nets

    def generator_refs(self):
        return self.generator.parameters()

    def discriminator_refs(self):
        return self.trunk.parameters() + self.head.parameters()

    def aux_refs(self):
        return self.aux.parameters() if self.aux is not None else []

    def zero_grad(self):
        for net in self.networks().values():
            net.zero_grad()

    # -- persistence -------------------------------------------------------------

    def to_json(self) -> str:
        section = {
            "variant": self.variant,
            "lambda": self.config.lam,
            "num_rus": self.num_rus,
            "code_source": self.code_source,
            "standardizer": self.standardizer.to_dict(),
            "train_config": asdict(self.config),
            "code_table": self.code_table.to_dict() if self.code_table is not None else None,
            "history": self.history,
        }
        return ckpt.dumps(self.networks(), fingan=section)

    @classmethod
    def from_json(cls, text: str) -> "FinGanModel":
        nets, doc = ckpt.loads(text)
        try:
            sec = doc["fingan"]
            config = TrainConfig(**sec["train_config"])
            table = CodeTable.from_dict(sec["code_table"]) if sec.get("code_table") else None
            model = cls(
                nets["generator"], nets["trunk"], nets["head"], nets.get("aux"),
                Standardizer.from_dict(sec["standardizer"]), int(sec["num_rus"]), config,
                sec.get("code_source", "rp"), table, list(sec.get("history", [])),
            )
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            raise BadCheckpoint(f"bad fingan section: {exc}") from exc
        if (model.aux is None) != (config.variant == "lite"):
            raise BadCheckpoint("variant flag disagrees with the presence of AuxNet parameters")
        return model

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(fh.read())
        except OSError as exc:
            raise BadCheckpoint(str(exc)) from exc


def history_csv(history) -> str:
    lines = ["epoch,loss_d,loss_g,loss_mi"]
    for h in history:
        lines.append(f"{h['epoch']},{h['loss_d']!r},{h['loss_g']!r},{h['loss_mi']!r}")
    return "\n".join(lines) + "\n"


def config_from_dict(d) -> TrainConfig:
    unknown = set(d) - set(TrainConfig.field_names())
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "train")
    return TrainConfig(**d)


def dump_config(config: TrainConfig) -> str:
    return json.dumps(asdict(config), sort_keys=True)
