"""Syntactic-distance language model with unsupervised tree induction.

Submodules: ``autodiff`` (reverse-mode engine), ``model``, ``trees``,
``evaluation``, ``corpus``, ``pcfg``, ``training`` and ``cli``.
"""

__version__ = "0.1.0"
