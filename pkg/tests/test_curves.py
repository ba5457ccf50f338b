"""Discrete curve measurements, jets, resampling, and the interpolation probe."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hyperflow.curves import (
    ClosedCurve,
    circle,
    curvature_jet,
    ellipse,
    gn_interpolation_check,
    measure,
    random_curve,
    resample_uniform,
    trig_interp,
    wiggled_circle,
)
from hyperflow.errors import ConstantInput, DegenerateCurve, ResolutionExceeded

BACKEND_TOLS = {"spectral": 1e-10, "fd4": 2e-5}


def rotate(c, angle):
    r = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    return ClosedCurve(c.vertices @ r.T)


# ----------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------

def test_rejects_odd_or_tiny_vertex_counts():
    theta = 2 * np.pi * np.arange(15) / 15
    with pytest.raises(ValueError):
        ClosedCurve(np.column_stack((np.cos(theta), np.sin(theta))))
    theta = 2 * np.pi * np.arange(14) / 14
    with pytest.raises(ValueError):
        ClosedCurve(np.column_stack((np.cos(theta), np.sin(theta))))


def test_rejects_coincident_vertices():
    pts = circle(16).vertices.copy()
    pts[3] = pts[4]
    with pytest.raises(DegenerateCurve):
        ClosedCurve(pts)


def test_vertices_are_frozen():
    c = circle(16)
    with pytest.raises(ValueError):
        c.vertices[0, 0] = 5.0


# ----------------------------------------------------------------------
# measure
# ----------------------------------------------------------------------

@pytest.mark.parametrize("backend,n,tol", [("spectral", 64, 1e-10), ("fd4", 256, 1e-6)])
def test_circle_length(backend, n, tol):
    gd = measure(circle(n), backend)
    assert abs(gd.length - 2 * np.pi) < tol


def test_fd4_circle_length_is_fourth_order():
    errs = [abs(measure(circle(n), "fd4").length - 2 * np.pi) for n in (64, 128, 256)]
    assert errs[0] / errs[1] > 12
    assert errs[1] / errs[2] > 12


def test_ellipse_length_against_quadrature():
    oracle, err = quad(
        lambda t: np.sqrt(4 * np.sin(t) ** 2 + np.cos(t) ** 2), 0, 2 * np.pi,
        epsabs=1e-12, limit=200,
    )
    gd = measure(ellipse(128, 2.0, 1.0))
    assert err < 1e-8
    assert abs(gd.length - oracle) < 1e-8


def test_frame_is_orthonormal():
    gd = measure(random_curve(128, seed=3))
    assert np.max(np.abs(np.linalg.norm(gd.tangent, axis=1) - 1)) < 1e-12
    assert np.max(np.abs(np.linalg.norm(gd.normal, axis=1) - 1)) < 1e-12
    assert np.max(np.abs(np.einsum("ij,ij->i", gd.tangent, gd.normal))) < 1e-12


def test_counterclockwise_circle_has_outward_normal():
    c = circle(64, radius=2.0)
    gd = measure(c)
    outward = c.vertices / np.linalg.norm(c.vertices, axis=1)[:, None]
    assert np.max(np.abs(gd.normal - outward)) < 1e-10


def test_clockwise_circle_has_inward_normal_and_negative_curvature():
    c = circle(64, radius=2.0, clockwise=True)
    gd = measure(c)
    inward = -c.vertices / np.linalg.norm(c.vertices, axis=1)[:, None]
    assert np.max(np.abs(gd.normal - inward)) < 1e-10
    jet = curvature_jet(c, 0)
    assert np.max(np.abs(jet.level(0) + 0.5)) < 1e-10


def test_degenerate_curve_detected():
    # a figure collapsing to scale ~1e-12 relative to its length
    theta = 2 * np.pi * np.arange(32) / 32
    pts = np.column_stack((np.cos(theta), 1e-14 * np.sin(theta)))
    with pytest.raises(DegenerateCurve):
        measure(ClosedCurve(pts))


# ----------------------------------------------------------------------
# curvature jets
# ----------------------------------------------------------------------

@pytest.mark.parametrize("backend", ["spectral", "fd4"])
def test_circle_curvature_constant(backend):
    tol = BACKEND_TOLS[backend]
    jet = curvature_jet(circle(64, radius=2.0), 2, backend)
    assert np.max(np.abs(jet.level(0) - 0.5)) < tol
    assert np.max(np.abs(jet.level(1))) < tol * 10
    assert np.max(np.abs(jet.level(2))) < tol * 100


def test_ellipse_curvature_analytic():
    a, b = 2.0, 1.0
    c = ellipse(128, a, b)
    theta = c.params()
    jet = curvature_jet(c, 0)
    analytic = a * b / (a ** 2 * np.sin(theta) ** 2 + b ** 2 * np.cos(theta) ** 2) ** 1.5
    assert np.max(np.abs(jet.level(0) - analytic)) < 1e-9
    assert abs(jet.level(0)[0] - 2.0) < 1e-9  # k = a/b^2 at theta = 0


def test_resolution_guard():
    with pytest.raises(ResolutionExceeded):
        curvature_jet(circle(16), 5)


def test_rotation_equivariance():
    # each differentiation level amplifies roundoff by ~N/2
    c = random_curve(128, seed=11)
    j0 = curvature_jet(c, 3)
    j1 = curvature_jet(rotate(c, 0.7), 3)
    for j, tol in enumerate((1e-10, 1e-10, 1e-10, 1e-8)):
        scale = max(np.max(np.abs(j0.level(j))), 1.0)
        assert np.max(np.abs(j0.level(j) - j1.level(j))) < tol * scale


def test_dilation_scaling():
    c = random_curve(128, seed=5)
    lam = 1.7
    scaled = ClosedCurve(lam * c.vertices)
    j0 = curvature_jet(c, 3)
    j1 = curvature_jet(scaled, 3)
    for j in range(4):
        assert np.allclose(j1.level(j), j0.level(j) / lam ** (j + 1), atol=1e-9)


@pytest.mark.parametrize("backend,tol", [("spectral", 1e-8), ("fd4", 1e-4)])
def test_total_turning_number(backend, tol):
    for seed in (0, 1, 2):
        c = random_curve(128, seed=seed)
        jet = curvature_jet(c, 0, backend)
        gd = measure(c, backend)
        total = 2 * np.pi / c.n * np.sum(jet.level(0) * gd.arc_element)
        assert abs(total / (2 * np.pi) - 1.0) < tol


def _polar_curvature(theta, amp, mode):
    # curvature of r(theta) = 1 + amp*cos(mode*theta) in polar form
    r = 1 + amp * np.cos(mode * theta)
    rp = -amp * mode * np.sin(mode * theta)
    rpp = -amp * mode ** 2 * np.cos(mode * theta)
    return (r ** 2 + 2 * rp ** 2 - r * rpp) / (r ** 2 + rp ** 2) ** 1.5


def test_refinement_order_fd4():
    # a single-mode curve would let the stencil errors cancel in the
    # curvature ratio, so probe with a genuinely multi-mode polar curve
    errors = []
    for n in (32, 64, 128):
        c = wiggled_circle(n, mode=4, amplitude=0.1)
        jet = curvature_jet(c, 0, "fd4")
        analytic = _polar_curvature(c.params(), 0.1, 4)
        errors.append(np.max(np.abs(jet.level(0) - analytic)))
    assert errors[0] / errors[1] > 12
    assert errors[1] / errors[2] > 12


def test_refinement_spectral_beats_fd4():
    errs = {}
    for backend in ("spectral", "fd4"):
        c = wiggled_circle(64, mode=4, amplitude=0.1)
        jet = curvature_jet(c, 0, backend)
        analytic = _polar_curvature(c.params(), 0.1, 4)
        errs[backend] = np.max(np.abs(jet.level(0) - analytic))
    assert errs["spectral"] < errs["fd4"] * 1e-3


# ----------------------------------------------------------------------
# resampling
# ----------------------------------------------------------------------

def test_resample_fixed_point_on_uniform_circle():
    c = circle(64)
    r = resample_uniform(c)
    assert np.max(np.abs(r.vertices - c.vertices)) < 1e-10


def test_resample_nonuniform_circle_preserves_radius():
    n = 64
    u = 2 * np.pi * np.arange(n) / n
    theta = u + 0.3 * np.sin(u)  # smooth non-uniform sampling of the unit circle
    c = ClosedCurve(np.column_stack((np.cos(theta), np.sin(theta))))
    r = resample_uniform(c)
    radii = np.linalg.norm(r.vertices, axis=1)
    assert np.max(np.abs(radii - 1.0)) < 1e-8
    gd = measure(r)
    rel_var = (gd.arc_element.max() - gd.arc_element.min()) / gd.arc_element.mean()
    assert rel_var < 1e-6


def test_resample_anchors_vertex_zero():
    c = wiggled_circle(64, mode=3, amplitude=0.08)
    r = resample_uniform(c)
    assert np.linalg.norm(r.vertices[0] - c.vertices[0]) < 1e-10


def test_resample_preserves_length_with_refinement():
    # length drift decays at least 4th order as N doubles
    drifts = []
    for n in (32, 64, 128):
        c = wiggled_circle(n, mode=4, amplitude=0.1)
        before = measure(c).length
        after = measure(resample_uniform(c)).length
        drifts.append(abs(after - before) / before + 1e-16)
    assert drifts[0] / drifts[1] > 16 or drifts[1] < 1e-12
    assert drifts[1] / drifts[2] > 16 or drifts[2] < 1e-12


def test_resample_arc_element_constant():
    c = random_curve(128, seed=9)
    r = resample_uniform(c)
    gd = measure(r)
    rel = (gd.arc_element.max() - gd.arc_element.min()) / gd.arc_element.mean()
    assert rel < 1e-6


def test_trig_interp_reproduces_grid_values():
    c = random_curve(64, seed=4)
    vals = trig_interp(c.vertices, c.params())
    assert np.max(np.abs(vals - c.vertices)) < 1e-12


# ----------------------------------------------------------------------
# interpolation-inequality probe
# ----------------------------------------------------------------------

def test_gn_single_mode_is_extremal():
    n = 64
    theta = 2 * np.pi * np.arange(n) / n
    ratio = gn_interpolation_check(np.sin(theta), 1, 1)
    assert abs(ratio - 1.0) < 1e-12


def test_gn_constant_input():
    with pytest.raises(ConstantInput):
        gn_interpolation_check(np.full(64, 3.7), 1, 1)


def test_gn_rejects_bad_orders():
    with pytest.raises(ValueError):
        gn_interpolation_check(np.sin(np.linspace(0, 2 * np.pi, 64, endpoint=False)), 2, 1)


@pytest.mark.parametrize("l,mtop", [(1, 1), (1, 2), (2, 2)])
def test_gn_random_band_limited_bounded(l, mtop):
    rng = np.random.default_rng(20)
    n = 64
    theta = 2 * np.pi * np.arange(n) / n
    worst = 0.0
    for _ in range(200):
        u = np.zeros(n)
        for q in range(1, n // 4):
            aq, bq = rng.standard_normal(2) * np.exp(-0.3 * q)
            u += aq * np.cos(q * theta) + bq * np.sin(q * theta)
        u += rng.standard_normal()  # arbitrary mean offset
        worst = max(worst, gn_interpolation_check(u, l, mtop))
    assert worst <= 1.0 + 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=2), st.data())
def test_gn_ratio_never_exceeds_one(l, data):
    mtop = data.draw(st.integers(min_value=l, max_value=3))
    rng = np.random.default_rng(data.draw(st.integers(0, 10_000)))
    n = 32
    theta = 2 * np.pi * np.arange(n) / n
    u = np.zeros(n)
    for q in range(1, 8):
        aq, bq = rng.standard_normal(2)
        u += aq * np.cos(q * theta) + bq * np.sin(q * theta)
    assert gn_interpolation_check(u, l, mtop) <= 1.0 + 1e-8
