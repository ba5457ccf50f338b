"""Quantitative convergence monitor for relaxation runs.

Implements the desk-scale skeleton of a gradient-inequality convergence
argument: represent nearby curves as normal graphs over a limit curve,
fit the exponent of the gradient inequality along the trace, verify the
differential inequality for H(t) = |F(t) - F_inf|^alpha, track the Cauchy
tail of height-function distances, and watch the running bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ClosedCurve, curvature_jet, measure, trig_interp
from .energy import quadrature_weights
from .errors import InsufficientDecay, OutOfTubularNeighborhood

GRAD_WINDOW_CEILING = 1e-2
GRAD_FLOOR = 1e-12
MIN_SAMPLES = 30
MIN_DECADES = 3.0


# ----------------------------------------------------------------------
# Height functions over a base curve
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HeightFunction:
    """Signed normal offsets of a nearby curve over the base curve."""

    values: np.ndarray
    base: ClosedCurve


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def reach_estimate(base: ClosedCurve, backend: str = "spectral") -> float:
    """Tubular-neighborhood radius estimated as 1 / max |k|."""
    jet = curvature_jet(base, 0, backend)
    return float(1.0 / np.max(np.abs(jet.level(0))))


def height_over(base: ClosedCurve, c: ClosedCurve, backend: str = "spectral") -> HeightFunction:
    """Heights f with c = base + f * normal (up to reparametrization).

    For each base vertex the intersection of its normal line with c is found
    by Newton iteration on the band-limited interpolant of c.  Curves farther
    than half the reach apart are rejected.
    """
    reach = reach_estimate(base, backend)
    if _hausdorff(base.vertices, c.vertices) >= 0.5 * reach:
        raise OutOfTubularNeighborhood(
            "curve too far from the base for a normal graph"
        )
    gd = measure(base, backend)
    n_c = c.n
    coeffs = np.fft.rfft(c.vertices, axis=0)
    q = np.arange(n_c // 2 + 1)
    dcoeffs = coeffs * (1j * q)[:, None]
    if n_c % 2 == 0:
        dcoeffs[-1] = 0.0

    # initial guess: parameter of the closest vertex of c
    d = np.linalg.norm(base.vertices[:, None, :] - c.vertices[None, :, :], axis=2)
    u = 2.0 * np.pi * np.argmin(d, axis=1) / n_c

    from .curves import _trig_eval_from_coeffs

    x0 = base.vertices
    tang = gd.tangent
    for _ in range(40):
        pos = _trig_eval_from_coeffs(coeffs, n_c, u)
        vel = _trig_eval_from_coeffs(dcoeffs, n_c, u)
        g = np.einsum("ij,ij->i", pos - x0, tang)
        gp = np.einsum("ij,ij->i", vel, tang)
        if np.any(np.abs(gp) < 1e-14):
            raise OutOfTubularNeighborhood("normal line nearly tangent to the curve")
        du = g / gp
        u = u - du
        if np.max(np.abs(du)) < 1e-14:
            break
    pos = _trig_eval_from_coeffs(coeffs, n_c, u)
    residual = np.einsum("ij,ij->i", pos - x0, tang)
    if np.max(np.abs(residual)) > 1e-8 * gd.length:
        raise OutOfTubularNeighborhood("projection onto normal lines did not converge")
    values = np.einsum("ij,ij->i", pos - x0, gd.normal)
    if np.max(np.abs(values)) >= 0.5 * reach:
        raise OutOfTubularNeighborhood("height exceeds half the reach")
    return HeightFunction(values=values, base=base)


# ----------------------------------------------------------------------
# Gradient-inequality exponent fitting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LojaReport:
    """Fitted gradient inequality |F - F_inf|^(1-alpha) <= C * ||grad||."""

    alpha: float
    C: float
    window: tuple[float, float]
    r2: float
    violations: int
    n_samples: int
    decades: float


def _tail_window(trace, f_inf: float, delta_floor: float | None):
    arr = trace.arrays() if hasattr(trace, "arrays") else trace
    t = np.asarray(arr["t"], dtype=float)
    energy = np.asarray(arr["energy"], dtype=float)
    grad = np.asarray(arr["grad_norm"], dtype=float)
    delta = energy - f_inf
    if delta_floor is None:
        delta_floor = 100.0 * np.finfo(float).eps * float(np.max(np.abs(energy)))
    below = np.nonzero(grad <= GRAD_WINDOW_CEILING)[0]
    if below.size == 0:
        raise InsufficientDecay("gradient never drops below the window ceiling")
    start = below[0]
    idx = np.arange(start, len(t))
    keep = (grad[idx] > GRAD_FLOOR) & (delta[idx] > delta_floor)
    idx = idx[keep]
    return t, energy, grad, delta, idx


def fit_exponent(trace, f_inf: float, delta_floor: float | None = None) -> LojaReport:
    """Least-squares exponent of log ||grad|| against log |F - F_inf|.

    The window is the tail of the trace with small gradients and energies
    above the double-precision floor; the constant is the smallest one with
    zero violations on that window.
    """
    arr = trace.arrays() if hasattr(trace, "arrays") else trace
    energy = np.asarray(arr["energy"], dtype=float)
    slack = 1e-8 * max(1.0, abs(f_inf))
    if f_inf > float(np.min(energy)) + slack:
        raise InsufficientDecay("limit energy exceeds the smallest trace energy")
    t, energy, grad, delta, idx = _tail_window(trace, f_inf, delta_floor)
    if idx.size < MIN_SAMPLES:
        raise InsufficientDecay(
            f"only {idx.size} usable samples in the tail window (need {MIN_SAMPLES})"
        )
    x = np.log(delta[idx])
    y = np.log(grad[idx])
    decades = (x.max() - x.min()) / np.log(10.0)
    if decades < MIN_DECADES:
        raise InsufficientDecay(
            f"energy gap spans {decades:.2f} decades in the window (need {MIN_DECADES})"
        )
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    alpha = 1.0 - float(slope)
    big_c = float(np.max(delta[idx] ** (1.0 - alpha) / grad[idx]))
    violations = int(np.sum(delta[idx] ** (1.0 - alpha) > big_c * grad[idx] * (1.0 + 1e-12)))
    return LojaReport(
        alpha=alpha,
        C=big_c,
        window=(float(t[idx[0]]), float(t[idx[-1]])),
        r2=r2,
        violations=violations,
        n_samples=int(idx.size),
        decades=float(decades),
    )


def check_H_decay(trace, f_inf: float, alpha: float, delta_floor: float | None = None) -> float:
    """Worst ratio of dH/dt to the L2 speed on the tail window.

    H(t) = |F(t) - F_inf|^alpha and the speed equals the gradient norm, so a
    strictly negative return value verifies the differential inequality
    dH/dt <= -c * ||speed|| that drives the convergence argument.

    The default window floor is higher than the fitting one: consecutive
    energy decrements must stay above the rounding resolution of the energy
    itself, otherwise ulp-level wiggles flip the sign of dH.
    """
    if delta_floor is None:
        arr = trace.arrays() if hasattr(trace, "arrays") else trace
        delta_floor = 1e6 * np.finfo(float).eps * float(
            np.max(np.abs(np.asarray(arr["energy"], dtype=float)))
        )
    t, energy, grad, delta, idx = _tail_window(trace, f_inf, delta_floor)
    if idx.size < 5:
        raise InsufficientDecay("too few tail samples for the decay check")
    h = delta[idx] ** alpha
    tt = t[idx]
    gg = grad[idx]
    dh = np.diff(h) / np.diff(tt)
    speed = 0.5 * (gg[1:] + gg[:-1])
    ok = speed > GRAD_FLOOR
    if not np.any(ok):
        raise InsufficientDecay("all tail speeds at the floor")
    return float(np.max(dh[ok] / speed[ok]))


# ----------------------------------------------------------------------
# Cauchy tail and compact-set tracking
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CauchyReport:
    consecutive: np.ndarray
    tail_sup: np.ndarray
    heights: np.ndarray


def cauchy_tracker(snapshots, base: ClosedCurve, backend: str = "spectral") -> CauchyReport:
    """L2(ds_base) distances between snapshot height functions.

    ``consecutive[j]`` is the distance between snapshots j and j+1;
    ``tail_sup[j]`` is the supremum over all pairs taken from snapshot j on,
    which is non-increasing and must shrink to zero for a convergent run.
    """
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    heights = np.stack(
        [height_over(base, snap, backend).values for snap in snapshots]
    )
    w = quadrature_weights(base, backend)
    diff = heights[:, None, :] - heights[None, :, :]
    dist = np.sqrt(np.einsum("ijk,k->ij", diff ** 2, w))
    s = len(snapshots)
    consecutive = np.array([dist[j, j + 1] for j in range(s - 1)])
    tail_sup = np.array([np.max(dist[j:, j:]) for j in range(s - 1)])
    return CauchyReport(consecutive=consecutive, tail_sup=tail_sup, heights=heights)


@dataclass(frozen=True)
class CompactSetReport:
    final_box: tuple[float, float, float, float]
    stabilized: bool
    stabilization_index: int


def compact_set_tracker(trace) -> CompactSetReport:
    """Running union of the per-sample bounding boxes.

    ``stabilized`` is true when the union stops growing within the first half
    of the trace, the discrete echo of confinement to a fixed compact set.
    """
    boxes = getattr(trace, "bbox", None)
    if boxes is None or any(b is None for b in boxes):
        raise ValueError("trace carries no bounding boxes")
    boxes = np.asarray(boxes, dtype=float)
    xmin = np.minimum.accumulate(boxes[:, 0])
    xmax = np.maximum.accumulate(boxes[:, 1])
    ymin = np.minimum.accumulate(boxes[:, 2])
    ymax = np.maximum.accumulate(boxes[:, 3])
    final = (float(xmin[-1]), float(xmax[-1]), float(ymin[-1]), float(ymax[-1]))
    diam = np.hypot(final[1] - final[0], final[3] - final[2])
    tol = 1e-9 * max(diam, 1e-300)
    settled = (
        (np.abs(xmin - final[0]) <= tol)
        & (np.abs(xmax - final[1]) <= tol)
        & (np.abs(ymin - final[2]) <= tol)
        & (np.abs(ymax - final[3]) <= tol)
    )
    first = int(np.argmax(settled)) if np.any(settled) else len(settled)
    mid = (len(settled) - 1) // 2
    return CompactSetReport(
        final_box=final,
        stabilized=bool(first <= mid),
        stabilization_index=first,
    )


def estimate_limit_energy(trace, spacing: int | None = None) -> float:
    """Limit energy by geometric-tail extrapolation of the energy series.

    Applies one Aitken step to three late, well-separated samples; falls back
    to the final energy when the tail is already flat.  The result is clamped
    to the smallest observed energy.
    """
    arr = trace.arrays() if hasattr(trace, "arrays") else trace
    energy = np.asarray(arr["energy"], dtype=float)
    n = len(energy)
    if n < 3:
        return float(energy[-1])
    if spacing is None:
        spacing = max(n // 10, 1)
    f_a = energy[-1 - 2 * spacing]
    f_b = energy[-1 - spacing]
    f_c = energy[-1]
    denom = f_a - 2.0 * f_b + f_c
    if abs(denom) < 1e3 * np.finfo(float).eps * max(abs(f_c), 1.0):
        est = float(f_c)
    else:
        est = float(f_c - (f_c - f_b) ** 2 / denom)
    return min(est, float(np.min(energy)))
