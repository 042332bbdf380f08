"""FinGAN: RP-conditioned RSS fingerprint synthesis and evaluation."""

__version__ = "0.1.0"
