"""Two independent evaluations of the order-m energy on a discrete curve.

``energy_direct`` differentiates the unit normal m times along arc length and
integrates 1 + |N^(m)|^2 directly; ``energy_via_jet`` evaluates the exact jet
polynomial produced by the Frenet recursion.  Their agreement on generic
curves is the central cross-validation of the symbolic layer.
"""

from __future__ import annotations

import numpy as np

from .curves import ClosedCurve, curvature_jet, measure, param_derivative
from .errors import ResolutionExceeded
from .jets import integrand


def _resolution_guard(c: ClosedCurve, m: int):
    if m < 1:
        raise ValueError("m must be >= 1")
    if c.n < 8 * (m + 1):
        raise ResolutionExceeded(
            f"order-{m} energy needs at least {8 * (m + 1)} vertices, curve has {c.n}"
        )


def quadrature_weights(c: ClosedCurve, backend: str = "spectral") -> np.ndarray:
    """Trapezoidal weights (2*pi/N) * |x_u| for arc-length integrals."""
    gd = measure(c, backend)
    return 2.0 * np.pi / c.n * gd.arc_element


def energy_direct(c: ClosedCurve, m: int, backend: str = "spectral") -> float:
    """Integral of 1 + |d_s^m N|^2 by repeated discrete differentiation."""
    _resolution_guard(c, m)
    gd = measure(c, backend)
    field = gd.normal
    for _ in range(m):
        field = param_derivative(field, backend) / gd.arc_element[:, None]
    density = 1.0 + np.sum(field ** 2, axis=1)
    return float(2.0 * np.pi / c.n * np.sum(density * gd.arc_element))


def energy_via_jet(c: ClosedCurve, m: int, backend: str = "spectral") -> float:
    """Integral of the exact jet polynomial 1 + a_m^2 + b_m^2."""
    _resolution_guard(c, m)
    poly = integrand(m)
    jet = curvature_jet(c, max(m - 1, 0), backend)
    density = poly.evaluate(jet.k_levels)
    gd = measure(c, backend)
    return float(2.0 * np.pi / c.n * np.sum(density * gd.arc_element))


def circle_energy(m: int, radius: float) -> float:
    """Closed form on circles: 2*pi*r + 2*pi*r^(1-2m)."""
    return float(2.0 * np.pi * radius + 2.0 * np.pi * radius ** (1 - 2 * m))
