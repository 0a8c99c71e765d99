"""Preference-conditioned TD3 agent, replay machinery, and the training loop."""

from .preferences import (AnchorInterpolator, NormalizingInterpolator, angle_loss,
                          augment, interpolate_preference, sample_preference,
                          scalarize, validate_preference)
from .replay import ReplayBuffer, Transition, her_relabel
from .td3 import AgentConfig, PDMORLAgent
from .training import Trainer, resume, train

__all__ = [
    "AnchorInterpolator", "NormalizingInterpolator", "angle_loss", "augment",
    "interpolate_preference", "sample_preference", "scalarize",
    "validate_preference", "ReplayBuffer", "Transition", "her_relabel",
    "AgentConfig", "PDMORLAgent", "Trainer", "resume", "train",
]
