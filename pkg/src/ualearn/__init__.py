"""ualearn: uncertainty-driven active learning with Bayesian classifiers.

Trains variational Bayesian neural classifiers (optionally behind a small
Vision-Transformer trunk), scores unlabeled pools with uncertainty-based
acquisition functions, and runs cyclic query/label/retrain loops against a
simulated or human oracle.
"""

__version__ = "0.1.0"
