"""Homogenization of one-dimensional transmission eigenvalues.

Modules: ``numerics`` (grids, quadrature, rate fits, banded solves),
``periodic_media`` (index profiles), ``cell_problems``, ``bvp4`` (the clamped
fourth-order problem), ``spectrum`` (transfer-matrix eigenvalues),
``correctors``, ``eigen_correction`` (first-order eigenvalue shift) and
``harness`` (experiments and CLI).
"""

__version__ = "0.1.0"
