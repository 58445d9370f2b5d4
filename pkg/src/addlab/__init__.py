"""Numerics for random unitary channels and minimum-output-entropy bounds.

The package has five computational layers plus a CLI:

- ``channel_core``: construction and sampling of random unitary channels,
  complementary and conjugate channels, Stinespring dilation, and the
  product-channel evaluation on the maximally entangled input.
- ``entropy_geometry``: entropy functionals, the scalar functions ``F`` and
  ``f``, Fannes-type perturbation bounds, and ball/tube geometry on states.
- ``moe_optimizer``: multi-start projected gradient descent estimating the
  minimum output entropy over pure inputs, plus the closed-form product
  bounds.
- ``random_state_stats``: the induced-state map ``G(z)``, exact eigenvalue
  density with its normalization constant, overlap and cross-term tail laws,
  and Monte Carlo estimators for typicality and tube hits.
- ``bound_calculator``: the closed-form certificate machinery, including
  ``M_d``, the f-ratio supremum, the h_min curve, and the searches that yield
  the minimal-dimension and maximal-violation estimates.

All randomness flows through :class:`addlab.rng.RngStream`, so every result
is reproducible from a (seed, stream-id) pair.
"""

__version__ = "0.1.0"

from .rng import RngStream

__all__ = ["RngStream", "__version__"]
