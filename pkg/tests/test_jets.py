"""Exactness and structure of the symbolic jet layer."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperflow import jets
from hyperflow.errors import JetOrderError
from hyperflow.jets import (
    CURVATURE,
    VARIATION,
    DiffPoly,
    circle_euler_lagrange,
    euler_lagrange_poly,
    first_variation,
    frenet_expand,
    fvar,
    integrand,
    kvar,
    normal_variation,
    poly_from_dict,
    second_variation,
)

K, F = CURVATURE, VARIATION


def test_frenet_base_case():
    fr = frenet_expand(1)
    assert fr.tangential == DiffPoly.variable(kvar(0))
    assert fr.normal == DiffPoly.zero()


def test_frenet_m2_hand_values():
    fr = frenet_expand(2)
    assert fr.tangential == poly_from_dict({((K, 1, 1),): 1})
    assert fr.normal == poly_from_dict({((K, 0, 2),): -1})


def test_frenet_m3_hand_values():
    fr = frenet_expand(3)
    assert fr.tangential == poly_from_dict({((K, 2, 1),): 1, ((K, 0, 3),): -1})
    assert fr.normal == poly_from_dict({((K, 0, 1), (K, 1, 1)): -3})


def test_integrand_m1_m2():
    assert integrand(1) == poly_from_dict({(): 1, ((K, 0, 2),): 1})
    assert integrand(2) == poly_from_dict({(): 1, ((K, 1, 2),): 1, ((K, 0, 4),): 1})


def test_integrand_m3():
    want = poly_from_dict(
        {
            (): 1,
            ((K, 2, 2),): 1,
            ((K, 0, 3), (K, 2, 1)): -2,
            ((K, 0, 6),): 1,
            ((K, 0, 2), (K, 1, 2)): 9,
        }
    )
    assert integrand(3) == want


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_integrand_on_constant_jet_is_circle_density(m):
    # on a circle of radius r the density is 1 + r^(-2m)
    for r in (Fraction(1), Fraction(2), Fraction(5, 3)):
        got = integrand(m).eval_constant_jet(Fraction(1) / r)
        assert got == 1 + r ** (-2 * m)


def test_first_variation_elastic_case():
    e1 = first_variation(integrand(1))
    want = poly_from_dict({((K, 2, 1),): -2, ((K, 0, 3),): -1, ((K, 0, 1),): 1})
    assert e1 == want


def test_euler_lagrange_m2_hand_derived():
    # independent derivation: classical per-term gradients of the arc
    # integrals of k1^2, k0^4 and 1, summed
    want = poly_from_dict(
        {
            ((K, 4, 1),): 2,
            ((K, 0, 2), (K, 2, 1)): -10,
            ((K, 0, 1), (K, 1, 2)): -25,
            ((K, 0, 5),): -3,
            ((K, 0, 1),): 1,
        }
    )
    assert euler_lagrange_poly(2) == want


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_leading_term_and_length_term(m):
    poly = euler_lagrange_poly(m)
    top = poly.max_order(K)
    assert top == 2 * m
    top_terms = [
        (key, coeff)
        for key, coeff in poly.terms()
        if any(v.order == top for v, _ in key)
    ]
    assert len(top_terms) == 1
    key, coeff = top_terms[0]
    assert key == ((kvar(2 * m), 1),)
    assert coeff == Fraction(2 * (-1) ** m)
    assert poly.coefficient(((kvar(0), 1),)) == 1


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_circle_family_oracle(m):
    poly = euler_lagrange_poly(m)
    for r in (Fraction(1), Fraction(2), Fraction(3, 2), Fraction(7, 5), Fraction(1, 3)):
        assert poly.eval_constant_jet(Fraction(1) / r) == circle_euler_lagrange(m, r)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_scaling_weights(m):
    # the energy part of E_m is homogeneous of weight 2m+1; the length part
    # contributes the single weight-1 monomial k0
    poly = euler_lagrange_poly(m)
    weights = {}
    for key, coeff in poly.terms():
        w = sum(v.weight * p for v, p in key)
        weights.setdefault(w, []).append((key, coeff))
    assert set(weights) == {1, 2 * m + 1}
    assert weights[1] == [(((kvar(0), 1),), Fraction(1))]

    density = integrand(m)
    assert density.monomial_weights() == {0, 2 * m}


@pytest.mark.parametrize("m", [1, 2, 3])
def test_second_variation_structure(m):
    sv = second_variation(m)
    assert sv.degree_in(F) == 1
    top = sv.max_order(F)
    assert top == 2 * m + 2
    lead = sv.coefficient(((fvar(2 * m + 2), 1),))
    assert lead == Fraction(2 * (-1) ** (m + 1))
    # remainder after the leading term only differentiates f up to order 2m
    rest = sv - DiffPoly({((fvar(2 * m + 2), 1),): lead})
    assert rest.max_order(F) <= 2 * m


def test_second_variation_m1_hand_derived():
    want = poly_from_dict(
        {
            ((F, 4, 1),): 2,
            ((K, 0, 2), (F, 2, 1)): 5,
            ((F, 2, 1),): -1,
            ((K, 0, 1), (K, 1, 1), (F, 1, 1)): 10,
            ((K, 1, 2), (F, 0, 1)): 6,
            ((K, 0, 1), (K, 2, 1), (F, 0, 1)): 8,
            ((K, 0, 4), (F, 0, 1)): 3,
            ((K, 0, 2), (F, 0, 1)): -1,
        }
    )
    assert second_variation(1) == want


def test_second_variation_constant_mode_on_unit_circle():
    # quadratic form of f == 1 at the unit circle integrates to 4*pi
    sv = second_variation(1)
    k_levels = [np.ones(4), np.zeros(4), np.zeros(4), np.zeros(4)]
    f_levels = [np.ones(4)] + [np.zeros(4)] * 6
    vals = sv.evaluate(k_levels, f_levels)
    assert np.allclose(vals, 2.0)
    assert np.isclose(2.0 * 2.0 * np.pi, 4.0 * np.pi)


def test_jet_order_cap_raises():
    with pytest.raises(JetOrderError):
        first_variation(integrand(2), cap=3)
    # generous cap succeeds
    first_variation(integrand(2), cap=8)


def test_first_variation_rejects_variation_input():
    with pytest.raises(ValueError):
        first_variation(DiffPoly.variable(fvar(0)))


def test_variation_is_linear_in_f():
    sv = normal_variation(integrand(2))
    assert sv.degree_in(F) == 1


def test_text_rendering_matches_frozen_strings():
    assert euler_lagrange_poly(1).to_text() == "-2*k2 - k0^3 + k0"
    assert integrand(1).to_text() == "k0^2 + 1"


def test_json_rendering_roundtrip_fields():
    blob = euler_lagrange_poly(1).to_json_obj()
    assert blob[0] == {
        "coeff_num": -2,
        "coeff_den": 1,
        "factors": [{"var": "k", "order": 2, "power": 1}],
    }
    assert all(set(t) == {"coeff_num", "coeff_den", "factors"} for t in blob)


# ----------------------------------------------------------------------
# ring axioms on random polynomials
# ----------------------------------------------------------------------

def _vars():
    return st.tuples(
        st.sampled_from([K, F]), st.integers(min_value=0, max_value=3)
    )


def _monomials():
    return st.tuples(
        st.lists(st.tuples(_vars(), st.integers(1, 2)), max_size=2),
        st.fractions(min_value=-4, max_value=4),
    )


def _polys():
    def build(monos):
        out = DiffPoly.zero()
        for factors, coeff in monos:
            key = {}
            for (kind, order), power in factors:
                key[(kind, order, power)] = None
            out = out + poly_from_dict(
                {tuple((kind, order, power) for ((kind, order), power) in factors): coeff}
            )
        return out

    return st.lists(_monomials(), max_size=3).map(build)


@settings(max_examples=60, deadline=None)
@given(_polys(), _polys(), _polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)


@settings(max_examples=60, deadline=None)
@given(_polys(), _polys())
def test_derivative_is_a_derivation(a, b):
    cap = 10
    assert (a * b).d_ds(cap) == a.d_ds(cap) * b + a * b.d_ds(cap)
    assert (a + b).d_ds(cap) == a.d_ds(cap) + b.d_ds(cap)


@settings(max_examples=40, deadline=None)
@given(_polys())
def test_numeric_evaluation_matches_exact(poly):
    rng = np.random.default_rng(7)
    k_levels = rng.uniform(-2, 2, size=(5, 1))
    f_levels = rng.uniform(-2, 2, size=(5, 1))
    got = poly.evaluate(k_levels, f_levels)
    want = 0.0
    for key, coeff in poly.terms():
        term = float(coeff)
        for var, power in key:
            levels = k_levels if var.kind == K else f_levels
            term *= float(levels[var.order][0]) ** power
        want += term
    assert np.allclose(np.asarray(got).ravel()[0] if np.ndim(got) else got, want, atol=1e-12)
