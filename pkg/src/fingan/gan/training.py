"""Losses with backward passes, alternating training, and generation."""

from __future__ import annotations

import logging
import math
from dataclasses import replace

import numpy as np

from fingan import rng as rngmod
from fingan.errors import DataError, DivergenceDetected, EmptyDataset, NonFiniteError
from fingan.gan.losses import loss_adversarial_d, loss_adversarial_g, mutual_info_term
from fingan.gan.model import CODE_DIM, NOISE_DIM, CodeTable, FinGanModel, TrainConfig
from fingan.gan.standardize import STD_FLOOR, Standardizer
from fingan.ndnn.optim import Adam
from fingan.signal_model import FingerprintDataset

log = logging.getLogger(__name__)

GEN_CHUNK = 256


def discriminator_loss(model: FinGanModel, real_x, real_c, z, fake_c, backward=True):
    """``L_D = L_Dc - lambda * L_m`` with the generator held fixed.

    With ``backward`` the gradients land in the trunk, head and AuxNet
    layers (zeroed first). Returns ``{"loss", "adv", "mi"}``.
    """
    fake = model.generator_forward(z, fake_c)
    n = real_x.shape[0]
    if backward:
        model.zero_grad()
    feats = model.trunk_forward(np.concatenate([real_x, fake]), np.concatenate([real_c, fake_c]))
    p = model.head.forward(feats)[:, 0]
    adv, dp_real, dp_fake = loss_adversarial_d(p[:n], p[n:])
    mi = 0.0
    if model.aux is not None:
        mu, sigma = model.aux_forward(feats[n:])
        mi, d_mu, d_sigma = mutual_info_term(fake_c, mu, sigma)
    lam = model.lam
    out = {"loss": adv - lam * mi, "adv": adv, "mi": mi, "fake": fake}
    if backward:
        grad_feats = model.head.backward(np.concatenate([dp_real, dp_fake])[:, None])
        if model.aux is not None:
            grad_feats[n:] += model.aux_backward(-lam * d_mu, -lam * d_sigma)
        model.trunk.backward(grad_feats)
    return out


def generator_loss(model: FinGanModel, z, c, backward=True, fake=None):
    """``L_G = L_Gc - lambda * L_m``; backward reaches every network.

    ``fake`` may pass in ``G(z|c)`` from the preceding D step; it is only
    valid if that was the generator's latest forward pass (its layer caches
    are reused by the backward pass).
    """
    if backward:
        model.zero_grad()
    if fake is None:
        fake = model.generator_forward(z, c)
    feats = model.trunk_forward(fake, c)
    p = model.head.forward(feats)[:, 0]
    adv, dp = loss_adversarial_g(p)
    mi = 0.0
    if model.aux is not None:
        mu, sigma = model.aux_forward(feats)
        mi, d_mu, d_sigma = mutual_info_term(c, mu, sigma)
    lam = model.lam
    out = {"loss": adv - lam * mi, "adv": adv, "mi": mi}
    if backward:
        grad_feats = model.head.backward(dp[:, None])
        if model.aux is not None:
            grad_feats = grad_feats + model.aux_backward(-lam * d_mu, -lam * d_sigma)
        grad_in = model.trunk.backward(grad_feats)
        model.generator.backward(grad_in[:, 0, : model.num_rus])
    return out


def total_losses(model: FinGanModel, real_x, real_c, z, fake_c=None):
    """``(L_G, L_D)`` on one batch; fake samples reuse the real codes by default."""
    fake_c = real_c if fake_c is None else fake_c
    ld = discriminator_loss(model, real_x, real_c, z, fake_c, backward=False)
    lg = generator_loss(model, z, fake_c, backward=False)
    return lg["loss"], ld["loss"]


def _training_arrays(model: FinGanModel, ds: FingerprintDataset):
    x = model.standardizer.rss(ds.rss)
    c = model.codes_for(ds.rps)
    return x, c


def train(dataset: FingerprintDataset, config: TrainConfig | None = None, model: FinGanModel | None = None,
          progress=None) -> FinGanModel:
    """Alternating Adam training: a D step on ``L_D`` then a G step on ``L_G``.

    AuxNet parameters are stepped in both phases since ``L_m`` appears in
    both losses. ``model`` lets a pre-built model (e.g. a code-swap model)
    be trained; otherwise a fresh one is initialised from ``config``.
    """
    if len(dataset) == 0:
        raise EmptyDataset("training dataset is empty")
    if model is None:
        config = config or TrainConfig()
        model = FinGanModel.init(dataset.num_rus, Standardizer.fit(dataset), config)
    else:
        config = config or model.config
        model.config = replace(model.config, **{k: getattr(config, k) for k in
                                                ("epochs", "batch_size", "learning_rate", "adam_beta1", "seed",
                                                 "d_steps_per_g_step")})
    if dataset.num_rus != model.num_rus:
        raise DataError(f"dataset has {dataset.num_rus} RUs, model expects {model.num_rus}")
    x_all, c_all = _training_arrays(model, dataset)
    n = len(x_all)
    bs = min(config.batch_size, n)
    if bs < 2:
        raise EmptyDataset("training needs at least 2 samples")

    lr = config.learning_rate
    b1 = config.adam_beta1
    opt_d = Adam(model.discriminator_refs() + model.aux_refs(), learning_rate=lr, beta1=b1)
    opt_g = Adam(model.generator_refs() + model.aux_refs(), learning_rate=lr, beta1=b1)
    shuffle_rng = rngmod.derive(config.seed, "batches")
    noise_rng = rngmod.derive(config.seed, "noise")

    start = len(model.history)
    for epoch in range(start, start + config.epochs):
        perm = shuffle_rng.permutation(n)
        sums = np.zeros(3)
        steps = 0
        try:
            for lo in range(0, n - bs + 1, bs):
                idx = perm[lo:lo + bs]
                xb, cb = x_all[idx], c_all[idx]
                for _ in range(config.d_steps_per_g_step):
                    z = noise_rng.standard_normal((bs, NOISE_DIM))
                    d_out = discriminator_loss(model, xb, cb, z, cb)
                    opt_d.step()
                # G is unchanged since the last D step, so its fake batch is reused
                g_out = generator_loss(model, z, cb, fake=d_out["fake"])
                opt_g.step()
                sums += (d_out["loss"], g_out["loss"], g_out["mi"])
                steps += 1
                if not all(math.isfinite(v) for v in sums):
                    raise DivergenceDetected(epoch)
        except NonFiniteError as exc:
            raise DivergenceDetected(epoch, str(exc)) from exc
        ld, lg, lm = sums / max(steps, 1)
        model.history.append({"epoch": epoch, "loss_d": float(ld), "loss_g": float(lg), "loss_mi": float(lm)})
        if progress is not None:
            progress(model.history[-1])
        log.debug("epoch %d loss_d=%.4f loss_g=%.4f loss_mi=%.4f", epoch, ld, lg, lm)
    return model


def generate(model: FinGanModel, rps, n_per_rp: int, rng_seed: int = 0) -> FingerprintDataset:
    """Synthesize ``n_per_rp`` fingerprints (dBm) at each RP.

    RP ``i`` draws its noise from the ``(rng_seed, "generate/rp/i")`` stream.
    """
    rps = np.asarray(rps, dtype=np.float64).reshape(-1, 2)
    if n_per_rp < 0:
        raise ValueError("n_per_rp must be >= 0")
    if n_per_rp == 0 or len(rps) == 0:
        return FingerprintDataset(np.zeros((0, 2)), np.zeros((0, model.num_rus)), None, model.num_rus)
    if not np.isfinite(rps).all():
        raise ValueError("RPs must be finite")
    codes = model.codes_for(rps)
    z = np.concatenate([rngmod.derive(rng_seed, f"generate/rp/{i}").standard_normal((n_per_rp, NOISE_DIM))
                        for i in range(len(rps))])
    c = np.repeat(codes, n_per_rp, axis=0)
    out = np.concatenate([model.generator_forward(z[lo:lo + GEN_CHUNK], c[lo:lo + GEN_CHUNK], train=False)
                          for lo in range(0, len(z), GEN_CHUNK)])
    rss = model.standardizer.rss_inverse(out)
    return FingerprintDataset(np.repeat(rps, n_per_rp, axis=0), rss, None, model.num_rus)


def fit_code_table(model: FinGanModel, dataset: FingerprintDataset) -> CodeTable:
    """Two standardized principal components of the per-RP mean standardized RSS."""
    groups = dataset.rp_groups()
    rps = np.array([rp for rp, _ in groups])
    x = model.standardizer.rss(dataset.rss)
    means = np.array([x[idx].mean(axis=0) for _, idx in groups])
    center = means.mean(axis=0)
    _, _, vt = np.linalg.svd(means - center, full_matrices=False)
    comps = np.zeros((CODE_DIM, means.shape[1]))
    k = min(CODE_DIM, vt.shape[0])
    comps[:k] = vt[:k]
    for i in range(k):
        # sign convention: largest-magnitude loading is positive
        if comps[i, np.argmax(np.abs(comps[i]))] < 0:
            comps[i] = -comps[i]
    proj = (means - center) @ comps.T
    scale = np.maximum(proj.std(axis=0), STD_FLOOR)
    return CodeTable(rps, proj / scale, center, comps, scale)


def make_code_swap_model(model: FinGanModel, dataset: FingerprintDataset) -> FinGanModel:
    """Copy of ``model`` conditioned on mean-RSS codes instead of RP coordinates."""
    swapped = model.copy()
    swapped.code_source = "mean_rss"
    swapped.code_table = fit_code_table(model, dataset)
    return swapped
