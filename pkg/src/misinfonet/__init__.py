"""Dual-branch recurrent-convolutional ensemble classifier over sentence embeddings."""

__version__ = "0.1.0"
