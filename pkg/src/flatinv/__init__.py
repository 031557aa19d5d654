"""Certified invariant ellipsoids for single-input flat systems.

The pipeline: approximate the linearizing input map with a small ReLU
network, enumerate the network's affine regions into a union of
polytopes, synthesize a stabilizing gain with a quadratic Lyapunov
certificate, then locate the largest certified sublevel ellipsoid by
scanning the union's boundary facets.  Controllers (safety filter,
reference governor, predictive control) consume the certificate online.
"""

__version__ = "0.1.0"
