"""Discrete second variation at critical curves: assembly, spectrum,
coercivity surrogate, and Newton polishing of critical points.

The operator is assembled by differentiating the discrete Euler-Lagrange
field under normal graph perturbations, which makes it exactly the
linearization of the simulated flow.  The symbolic linearization from the
jet layer serves as an independent cross-check on circles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ClosedCurve, measure, param_derivative, resample_uniform
from .energy import quadrature_weights
from .errors import NotCritical
from .gradient import euler_lagrange, gradient_norm

KERNEL_TOL = 1e-6
CRITICAL_GATE = 1e-5


def displace_normal(c: ClosedCurve, f: np.ndarray, backend: str = "spectral") -> ClosedCurve:
    """Curve moved by the scalar field f along its unit normal."""
    gd = measure(c, backend)
    return ClosedCurve(c.vertices + np.asarray(f)[:, None] * gd.normal)


@dataclass(frozen=True)
class SecondVariationMatrix:
    """Matrix of the linearized Euler-Lagrange operator against L2(ds).

    ``entries`` acts on vertex values of normal perturbations rescaled by the
    square root of the quadrature weights, so Rayleigh quotients are L2(ds)
    Rayleigh quotients of the underlying operator.
    """

    entries: np.ndarray
    basepoint: ClosedCurve
    m: int
    weights: np.ndarray

    def asymmetry(self) -> float:
        a = self.entries
        denom = np.linalg.norm(a)
        return float(np.linalg.norm(a - a.T) / denom) if denom else 0.0

    def rayleigh(self, f: np.ndarray) -> float:
        """L2(ds) Rayleigh quotient of the perturbation field f."""
        u = np.sqrt(self.weights) * np.asarray(f, dtype=float)
        return float(u @ self.entries @ u / (u @ u))


def _jacobian(c: ClosedCurve, m: int, h: float, backend: str) -> np.ndarray:
    """Columns: d(E_m)/d(normal bump at vertex j), by central differences."""
    gd = measure(c, backend)
    n = c.n
    jac = np.empty((n, n))
    base = c.vertices
    for j in range(n):
        bump = np.zeros_like(base)
        bump[j] = h * gd.normal[j]
        e_plus = euler_lagrange(ClosedCurve(base + bump), m, backend)
        e_minus = euler_lagrange(ClosedCurve(base - bump), m, backend)
        jac[:, j] = (e_plus - e_minus) / (2.0 * h)
    return jac


def _jacobian_refined(c: ClosedCurve, m: int, h: float, backend: str) -> np.ndarray:
    """Fourth-order column differences: vertex bumps are rough directions, so
    the plain quotient's h^2 term is large and low-frequency; eliminate it."""
    coarse = _jacobian(c, m, h, backend)
    fine = _jacobian(c, m, h / 2.0, backend)
    return (4.0 * fine - coarse) / 3.0


def assemble(
    c: ClosedCurve,
    m: int,
    backend: str = "spectral",
    h: float | None = None,
) -> SecondVariationMatrix:
    """Second-variation matrix at a near-critical curve.

    Requires gradient_norm(c, m) <= 1e-5: away from critical points the
    quadratic form would pick up measure-variation terms this assembly does
    not represent.
    """
    gnorm = gradient_norm(c, m, backend)
    if gnorm > CRITICAL_GATE:
        raise NotCritical(
            f"gradient norm {gnorm:.3e} exceeds {CRITICAL_GATE:.0e}; polish first"
        )
    gd = measure(c, backend)
    if h is None:
        h = 1e-5 * gd.length
    jac = _jacobian_refined(c, m, h, backend)
    w = quadrature_weights(c, backend)
    root = np.sqrt(w)
    entries = root[:, None] * jac / root[None, :]
    return SecondVariationMatrix(entries=entries, basepoint=c, m=m, weights=w)


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    kernel_dim: int
    matrix_norm: float


def _resolved_band_basis(n: int) -> np.ndarray:
    """Orthonormal real Fourier modes with frequency at most n/3.

    The differentiation stack is blind to the top of the grid spectrum (the
    flow removes it each step), so eigenvalues there are discretization
    artifacts; the physical spectrum lives in the resolved band.
    """
    q_max = n // 3
    theta = 2.0 * np.pi * np.arange(n) / n
    cols = [np.full(n, 1.0 / np.sqrt(n))]
    for q in range(1, q_max + 1):
        cols.append(np.cos(q * theta) * np.sqrt(2.0 / n))
        cols.append(np.sin(q * theta) * np.sqrt(2.0 / n))
    return np.column_stack(cols)


def spectrum(a: SecondVariationMatrix, kernel_tol: float | None = None) -> SpectrumResult:
    """Eigenvalues of the operator on the resolved band, plus kernel count.

    With explicit ``kernel_tol`` the kernel is counted as |eig| <= tol * ||A||.
    The default is adaptive: the physical operator norm grows like the
    frequency cutoff to the power 2m+2, so any fixed relative tolerance either
    swallows the first positive eigenvalues or misses the numerically-zero
    ones; instead the kernel is cut at the largest ratio gap (at least 1e3)
    among the smallest eigenvalue magnitudes.
    """
    sym = 0.5 * (a.entries + a.entries.T)
    basis = _resolved_band_basis(a.entries.shape[0])
    reduced = basis.T @ sym @ basis
    eigvals = np.linalg.eigvalsh(0.5 * (reduced + reduced.T))
    norm = float(np.max(np.abs(eigvals))) if eigvals.size else 0.0
    if kernel_tol is not None:
        kernel_dim = int(np.sum(np.abs(eigvals) <= kernel_tol * norm))
        return SpectrumResult(eigenvalues=eigvals, kernel_dim=kernel_dim, matrix_norm=norm)
    mags = np.sort(np.abs(eigvals))
    kernel_dim = 0
    candidates = mags[: min(8, len(mags) - 1)]
    best_ratio = 0.0
    for i, low in enumerate(candidates):
        ratio = mags[i + 1] / max(low, 1e-300)
        if ratio >= 1e3 and ratio > best_ratio:
            best_ratio = ratio
            kernel_dim = i + 1
    return SpectrumResult(eigenvalues=eigvals, kernel_dim=kernel_dim, matrix_norm=norm)


# ----------------------------------------------------------------------
# Coercivity surrogate for the leading operator
# ----------------------------------------------------------------------

def shifted_leading_operator(
    c: ClosedCurve, m: int, shift: float, backend: str = "spectral"
) -> np.ndarray:
    """Matrix of shift*Id + 2 L^(m+1), L = -d_ss with the curve's metric,
    symmetrized against L2(ds)."""
    gd = measure(c, backend)
    n = c.n
    d_u = param_derivative(np.eye(n), backend)
    d_s = d_u / gd.arc_element[:, None]
    lap = -d_s @ d_s
    op = shift * np.eye(n) + 2.0 * np.linalg.matrix_power(lap, m + 1)
    w = 2.0 * np.pi / n * gd.arc_element
    root = np.sqrt(w)
    return root[:, None] * op / root[None, :]


def coercivity_check(c: ClosedCurve, m: int, shift: float, backend: str = "spectral") -> bool:
    """True when the smallest eigenvalue of shift*Id + 2 L^(m+1) is >= shift - 1e-8.

    Holds whenever the discrete L^(m+1) is positive semidefinite, which is the
    finite-dimensional shadow of the invertibility of the shifted leading
    operator for large shifts.
    """
    op = shifted_leading_operator(c, m, shift, backend)
    sym = 0.5 * (op + op.T)
    min_eig = float(np.linalg.eigvalsh(sym)[0])
    return min_eig >= shift - 1e-8


# ----------------------------------------------------------------------
# Newton polish of critical points
# ----------------------------------------------------------------------

def refine_critical(
    c: ClosedCurve,
    m: int,
    backend: str = "spectral",
    tol: float = 1e-10,
    max_iter: int = 12,
) -> tuple[ClosedCurve, float, int]:
    """Damped Newton iteration on the normal graph until ||E_m|| <= tol.

    The Jacobian is the finite-difference linearization of the discrete
    Euler-Lagrange field; kernel directions (translations) are suppressed by
    the minimum-norm least-squares solve.  Returns (curve, grad_norm, iters).
    """
    curve = resample_uniform(c, backend)
    gnorm = gradient_norm(curve, m, backend)
    for it in range(max_iter):
        if gnorm <= tol:
            return curve, gnorm, it
        gd = measure(curve, backend)
        jac = _jacobian(curve, m, 1e-6 * gd.length, backend)
        el = euler_lagrange(curve, m, backend)
        delta, *_ = np.linalg.lstsq(jac, -el, rcond=1e-10)
        lam = 1.0
        improved = False
        for _ in range(8):
            trial = resample_uniform(displace_normal(curve, lam * delta, backend), backend)
            trial_norm = gradient_norm(trial, m, backend)
            if trial_norm < gnorm:
                curve, gnorm = trial, trial_norm
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    return curve, gnorm, max_iter
