"""Small numpy neural-network engine: layers, residual networks, Adam, KPM1 checkpoints."""

from .adam import AdamState, adam_step
from .checkpoint import read_checkpoint, write_checkpoint
from .demo import IdentityTrial, demo_identity, exact_identity_network
from .layers import AvgPool1D, Conv1D, Dense, Flatten, Reshape, layer_from_spec
from .network import Network, backward, forward

__all__ = [
    "AdamState",
    "AvgPool1D",
    "Conv1D",
    "Dense",
    "Flatten",
    "IdentityTrial",
    "Network",
    "Reshape",
    "adam_step",
    "backward",
    "demo_identity",
    "exact_identity_network",
    "forward",
    "layer_from_spec",
    "read_checkpoint",
    "write_checkpoint",
]
