"""Distillation-based generalization bounds: sampling constructions, bound evaluators and desk-scale experiments."""

__version__ = "0.1.0"
