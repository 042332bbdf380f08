"""RP-conditioned InfoGAN-style RSS generator."""

from fingan.gan.losses import loss_adversarial_d, loss_adversarial_g, mutual_info_term
from fingan.gan.model import FinGanModel, TrainConfig
from fingan.gan.standardize import Standardizer
from fingan.gan.training import (
    discriminator_loss,
    generate,
    generator_loss,
    make_code_swap_model,
    total_losses,
    train,
)

__all__ = [
    "FinGanModel", "Standardizer", "TrainConfig", "discriminator_loss", "generate", "generator_loss",
    "loss_adversarial_d", "loss_adversarial_g", "make_code_swap_model", "mutual_info_term",
    "total_losses", "train",
]
