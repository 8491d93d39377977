"""Lorentz encoder, projector, graph learner, optimizer and gradient plumbing."""

from .autograd import NonScalarLossError, backward
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import Encoder, LorentzAggregation, LorentzConv, LorentzLinear, Projector
from .learner import GraphLearner
from .optim import NonFiniteGradientError, ParamGroup, RiemannianAdam

__all__ = [
    "Encoder", "GraphLearner", "LorentzAggregation", "LorentzConv", "LorentzLinear",
    "NonFiniteGradientError", "NonScalarLossError", "ParamGroup", "Projector",
    "RiemannianAdam", "backward", "load_checkpoint", "save_checkpoint",
]
