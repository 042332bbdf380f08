"""Finite-difference gradient checks of the losses the pipeline trains on."""

from __future__ import annotations

import numpy as np

from fingan import rng as rngmod
from fingan.evaluation.localizers import LocalizerConfig, build_cnn, build_dnn, mse_loss
from fingan.gan.model import CODE_DIM, NOISE_DIM, FinGanModel, TrainConfig
from fingan.gan.standardize import Standardizer
from fingan.gan.training import discriminator_loss, generator_loss
from fingan.ndnn.gradcheck import grad_check

COMPONENTS = ("quadratic", "generator-loss", "discriminator-loss", "dnn-localizer", "cnn-localizer")
THRESHOLD = 1e-4


def _identity_standardizer(num_rus):
    return Standardizer(np.zeros(num_rus), np.ones(num_rus), np.zeros(2), np.ones(2))


def _corrupting(model_fn, corrupt):
    if not corrupt:
        return model_fn

    def wrapped():
        loss, grads = model_fn()
        # the test hook: a backward pass that is off by 10 %
        return loss, [1.1 * g for g in grads]

    return wrapped


def component_check(component, variant="full", probes=200, seed=0, batch=8, num_rus=6, corrupt=False):
    """Max relative error between analytic and central-difference gradients.

    GAN losses are checked on a freshly initialised model and a random
    batch; ``discriminator-loss`` probes discriminator + AuxNet parameters,
    ``generator-loss`` probes generator + AuxNet parameters.
    """
    if component not in COMPONENTS:
        raise ValueError(f"unknown component {component!r}")
    data_rng = rngmod.derive(seed, f"gradcheck/{component}/data")
    probe_rng = rngmod.derive(seed, f"gradcheck/{component}/probes")

    if component == "quadratic":
        w = data_rng.standard_normal(12)
        a = w - data_rng.choice([-1.0, 1.0], 12) * data_rng.uniform(0.5, 1.5, 12)

        def model_fn():
            d = w - a
            return 0.5 * float(d @ d), [d]

        params = [w]
        # exact on a quadratic up to roundoff, and kink-free
        return grad_check(_corrupting(model_fn, corrupt), params, probe_count=min(probes, 12), h=1e-3,
                          rng=probe_rng, kink_retries=0)
    elif component in ("generator-loss", "discriminator-loss"):
        cfg = TrainConfig(seed=seed, variant=variant)
        model = FinGanModel.init(num_rus, _identity_standardizer(num_rus), cfg)
        x = data_rng.standard_normal((batch, num_rus))
        c = data_rng.standard_normal((batch, CODE_DIM))
        z = data_rng.standard_normal((batch, NOISE_DIM))
        if component == "generator-loss":
            refs = model.generator_refs() + model.aux_refs()

            def loss_fn():
                return generator_loss(model, z, c)["loss"]
        else:
            refs = model.discriminator_refs() + model.aux_refs()

            def loss_fn():
                return discriminator_loss(model, x, c, z, c)["loss"]

        def model_fn():
            return loss_fn(), [layer.grads[n] for layer, n in refs]

        params = [layer.params[n] for layer, n in refs]
    else:
        lcfg = LocalizerConfig(seed=seed)
        net_rng = rngmod.derive(seed, f"gradcheck/{component}/init")
        cnn = component == "cnn-localizer"
        net = build_cnn(num_rus, lcfg, net_rng) if cnn else build_dnn(num_rus, lcfg, net_rng)
        x = data_rng.standard_normal((batch, 1, num_rus) if cnn else (batch, num_rus))
        y = data_rng.standard_normal((batch, 2))
        refs = net.parameters()

        def model_fn():
            net.zero_grad()
            loss, g = mse_loss(net.forward(x), y)
            net.backward(g)
            return loss, [layer.grads[n] for layer, n in refs]

        params = [layer.params[n] for layer, n in refs]
    return grad_check(_corrupting(model_fn, corrupt), params, probe_count=probes, rng=probe_rng)
