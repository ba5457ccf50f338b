"""Exact differential polynomials in the curvature jet of a closed plane curve.

Variables are written ``k0, k1, k2, ...`` for the signed curvature and its
arc-length derivatives, and ``f0, f1, ...`` for a normal variation speed and
its arc-length derivatives.  Coefficients are exact rationals; no floating
point enters any derivation.

Conventions (fixed once for the whole package): the tangent is the unit
velocity T, the normal is T rotated by -pi/2, so a counterclockwise circle of
radius r has outward normal and k = +1/r.  The Frenet relations then read
T' = -k N and N' = k T, which drive the recursion producing the m-th
derivative of the normal as a polynomial in the curvature jet.

Rewrite rules for a normal variation with speed f:

    delta k0   = -(f'' + k0^2 f)
    delta ds   = k0 f ds
    delta d/ds = d/ds delta - (k0 f) d/ds

These are the one-dimensional content of the usual evolution formulas for the
metric, the mean curvature, and the time/Laplacian commutator.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import JetOrderError

CURVATURE = "k"
VARIATION = "f"

_KIND_RANK = {CURVATURE: 0, VARIATION: 1}


@dataclass(frozen=True)
class JetVar:
    """One jet variable: the curvature or variation speed, differentiated
    ``order`` times along arc length."""

    kind: str
    order: int

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown jet kind {self.kind!r}")
        if self.order < 0:
            raise ValueError("jet order must be non-negative")

    def sort_key(self):
        return (_KIND_RANK[self.kind], self.order)

    def symbol(self) -> str:
        return f"{self.kind}{self.order}"

    @property
    def weight(self) -> int:
        """Scaling weight: k_j picks up lambda^(j+1) when lengths shrink by
        lambda; same bookkeeping for the variation jet."""
        return self.order + 1


def kvar(order: int) -> JetVar:
    return JetVar(CURVATURE, order)


def fvar(order: int) -> JetVar:
    return JetVar(VARIATION, order)


# A monomial key is a tuple of (JetVar, power) pairs sorted canonically.
FactorKey = tuple


def _merge_factors(*factor_groups) -> FactorKey:
    acc: dict[JetVar, int] = {}
    for group in factor_groups:
        for var, power in group:
            acc[var] = acc.get(var, 0) + power
    items = [(v, p) for v, p in acc.items() if p != 0]
    items.sort(key=lambda vp: vp[0].sort_key())
    return tuple(items)


class DiffPoly:
    """Differential polynomial with exact rational coefficients.

    Immutable; monomials with equal factor multisets are always merged, and
    zero coefficients are dropped, so equality is structural.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean: dict[FactorKey, Fraction] = {}
        if terms:
            for key, coeff in dict(terms).items():
                coeff = Fraction(coeff)
                if coeff:
                    clean[key] = coeff
        self._terms = clean

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "DiffPoly":
        return DiffPoly()

    @staticmethod
    def constant(value) -> "DiffPoly":
        return DiffPoly({(): Fraction(value)})

    @staticmethod
    def variable(var: JetVar) -> "DiffPoly":
        return DiffPoly({((var, 1),): Fraction(1)})

    # -- mapping-style access ------------------------------------------

    def terms(self):
        """Iterate (factors, coefficient) pairs; factors is a sorted tuple of
        (JetVar, power)."""
        return self._terms.items()

    def coefficient(self, factors: FactorKey) -> Fraction:
        return self._terms.get(_merge_factors(factors), Fraction(0))

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # -- ring operations ------------------------------------------------

    def __add__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for key, coeff in other._terms.items():
            tot = out.get(key, Fraction(0)) + coeff
            if tot:
                out[key] = tot
            else:
                out.pop(key, None)
        return DiffPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[FactorKey, Fraction] = {}
        for ka, ca in self._terms.items():
            for kb, cb in other._terms.items():
                key = _merge_factors(ka, kb)
                tot = out.get(key, Fraction(0)) + ca * cb
                if tot:
                    out[key] = tot
                else:
                    out.pop(key, None)
        return DiffPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = DiffPoly.constant(1)
        for _ in range(n):
            out = out * self
        return out

    # -- structure queries ------------------------------------------------

    def max_order(self, kind: str | None = None) -> int:
        """Highest derivative order present (-1 for a constant polynomial)."""
        top = -1
        for key in self._terms:
            for var, _ in key:
                if kind is None or var.kind == kind:
                    top = max(top, var.order)
        return top

    def degree_in(self, kind: str) -> int:
        deg = 0
        for key in self._terms:
            deg = max(deg, sum(p for v, p in key if v.kind == kind))
        return deg

    def monomial_weights(self, kind: str | None = None) -> set[int]:
        """Set of total scaling weights of the monomials (constants weigh 0)."""
        out = set()
        for key in self._terms:
            w = sum(v.weight * p for v, p in key if kind is None or v.kind == kind)
            out.add(w)
        return out

    # -- calculus ------------------------------------------------------

    def d_ds(self, cap: int | None = None) -> "DiffPoly":
        """Formal arc-length derivative: Leibniz rule, order j -> j + 1.

        Raises JetOrderError when a produced order would exceed ``cap``.
        """
        out = DiffPoly.zero()
        for key, coeff in self._terms.items():
            for i, (var, power) in enumerate(key):
                if cap is not None and var.order + 1 > cap:
                    raise JetOrderError(
                        f"derivative of {var.symbol()} exceeds jet order cap {cap}"
                    )
                bumped = JetVar(var.kind, var.order + 1)
                rest = list(key[:i]) + list(key[i + 1:])
                new_key = _merge_factors(rest, [(var, power - 1), (bumped, 1)])
                out = out + DiffPoly({new_key: coeff * power})
        return out

    # -- evaluation ------------------------------------------------------

    def evaluate(self, k_levels, f_levels=None):
        """Evaluate numerically: ``k_levels[j]`` holds the values of k_j,
        ``f_levels[j]`` of f_j (arrays or scalars)."""
        total = None
        for key, coeff in self._terms.items():
            term = float(coeff)
            for var, power in key:
                levels = k_levels if var.kind == CURVATURE else f_levels
                if levels is None or var.order >= len(levels):
                    raise ValueError(
                        f"missing values for {var.symbol()} in evaluation"
                    )
                term = term * np.asarray(levels[var.order]) ** power
            total = term if total is None else total + term
        if total is None:
            return 0.0
        return total

    def eval_constant_jet(self, k0_value) -> Fraction:
        """Exact evaluation at the constant jet k0 = value, k_j = 0 for j >= 1.

        The polynomial must not contain variation variables.
        """
        value = Fraction(k0_value)
        total = Fraction(0)
        for key, coeff in self._terms.items():
            term = coeff
            dead = False
            for var, power in key:
                if var.kind != CURVATURE:
                    raise ValueError("constant-jet evaluation is for k-only polynomials")
                if var.order == 0:
                    term *= value ** power
                else:
                    dead = True
                    break
            if not dead:
                total += term
        return total

    # -- rendering ------------------------------------------------------

    def sorted_terms(self):
        """Terms in canonical display order: highest derivative order first,
        then highest total degree, then factor tuple."""

        def key_fn(item):
            factors, _ = item
            top = max((v.order for v, _ in factors), default=-1)
            deg = sum(p for _, p in factors)
            canon = tuple((v.sort_key(), p) for v, p in factors)
            return (-top, -deg, canon)

        return sorted(self._terms.items(), key=key_fn)

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for factors, coeff in self.sorted_terms():
            mag = abs(coeff)
            body = "*".join(
                v.symbol() + (f"^{p}" if p > 1 else "") for v, p in factors
            )
            if not body:
                body = str(mag)
            elif mag != 1:
                body = f"{mag}*{body}"
            if not pieces:
                pieces.append(body if coeff > 0 else f"-{body}")
            else:
                pieces.append(f"+ {body}" if coeff > 0 else f"- {body}")
        return " ".join(pieces)

    def to_json_obj(self) -> list[dict]:
        out = []
        for factors, coeff in self.sorted_terms():
            out.append(
                {
                    "coeff_num": coeff.numerator,
                    "coeff_den": coeff.denominator,
                    "factors": [
                        {"var": v.kind, "order": v.order, "power": p}
                        for v, p in factors
                    ],
                }
            )
        return out

    def __repr__(self):
        return f"DiffPoly({self.to_text()})"


def _as_poly(value):
    if isinstance(value, DiffPoly):
        return value
    if isinstance(value, (int, Fraction)):
        return DiffPoly.constant(value)
    return NotImplemented


def poly_from_dict(spec: dict) -> DiffPoly:
    """Build a DiffPoly from {((kind, order, power), ...): coeff} shorthand."""
    terms = {}
    for raw_key, coeff in spec.items():
        factors = [(JetVar(kind, order), power) for kind, order, power in raw_key]
        terms[_merge_factors(factors)] = Fraction(coeff)
    return DiffPoly(terms)


# ----------------------------------------------------------------------
# Frenet recursion and the energy integrand
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class FrenetVector:
    """Tangential/normal components of an iterated derivative of the normal."""

    tangential: DiffPoly
    normal: DiffPoly


def default_cap(m: int) -> int:
    return 2 * m + 4


@lru_cache(maxsize=None)
def frenet_expand(m: int, cap: int | None = None) -> FrenetVector:
    """Components (a_m, b_m) of the m-th arc-length derivative of the normal,
    N^(m) = a_m T + b_m N, as exact jet polynomials.

    Recursion from T' = -k N, N' = k T:
        a_1 = k0, b_1 = 0,
        a_{j+1} = a_j' + k0 b_j,   b_{j+1} = b_j' - k0 a_j.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if cap is None:
        cap = default_cap(m)
    k0 = DiffPoly.variable(kvar(0))
    a, b = k0, DiffPoly.zero()
    for _ in range(m - 1):
        a, b = a.d_ds(cap) + k0 * b, b.d_ds(cap) - k0 * a
    return FrenetVector(tangential=a, normal=b)


@lru_cache(maxsize=None)
def integrand(m: int, cap: int | None = None) -> DiffPoly:
    """Density 1 + |N^(m)|^2 = 1 + a_m^2 + b_m^2 of the order-m energy."""
    fr = frenet_expand(m, cap)
    return DiffPoly.constant(1) + fr.tangential ** 2 + fr.normal ** 2


# ----------------------------------------------------------------------
# Normal-variation rewrite rules
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _delta_k(order: int, cap: int) -> DiffPoly:
    """Variation of k_order under a normal perturbation with speed f.

    delta k0 = -(f2 + k0^2 f0); higher orders by the commutator rule
    delta k_{j+1} = (delta k_j)' - k0 f0 k_{j+1}.
    """
    if order + 2 > cap:
        raise JetOrderError(
            f"variation of k{order} needs f{order + 2}, above cap {cap}"
        )
    if order == 0:
        f0 = DiffPoly.variable(fvar(0))
        f2 = DiffPoly.variable(fvar(2))
        k0 = DiffPoly.variable(kvar(0))
        return -(f2 + k0 * k0 * f0)
    prev = _delta_k(order - 1, cap)
    k0 = DiffPoly.variable(kvar(0))
    f0 = DiffPoly.variable(fvar(0))
    kj = DiffPoly.variable(kvar(order))
    return prev.d_ds(cap) - k0 * f0 * kj


def normal_variation(poly: DiffPoly, cap: int | None = None) -> DiffPoly:
    """Linearize a k-jet polynomial along a normal perturbation with speed f.

    Returns a polynomial linear in the variation jet (no measure term)."""
    if poly.degree_in(VARIATION) > 0:
        raise ValueError("input already contains variation variables")
    if cap is None:
        cap = default_cap(max(poly.max_order(CURVATURE), 0) + 1)
    out = DiffPoly.zero()
    for key, coeff in poly.terms():
        for i, (var, power) in enumerate(key):
            rest = list(key[:i]) + list(key[i + 1:])
            partial_key = _merge_factors(rest, [(var, power - 1)])
            partial = DiffPoly({partial_key: coeff * power})
            out = out + partial * _delta_k(var.order, cap)
    return out


def first_variation(density: DiffPoly, cap: int | None = None) -> DiffPoly:
    """Euler-Lagrange operator of the arc-length integral of ``density``.

    Computes the variation of the integral under a normal speed f (including
    the k0*f measure term), then moves every derivative off f by formal
    integration by parts.  The result contains only curvature variables.
    """
    if density.degree_in(VARIATION) > 0:
        raise ValueError("density must not contain variation variables")
    if cap is None:
        cap = default_cap(max(density.max_order(CURVATURE), 0) + 1)

    k0f = DiffPoly.variable(kvar(0)) * DiffPoly.variable(fvar(0))
    varied = normal_variation(density, cap) + density * k0f

    # Collect coefficient polynomials c_j with varied = sum_j c_j * f_j.
    by_order: dict[int, DiffPoly] = {}
    for key, coeff in varied.terms():
        f_factors = [(v, p) for v, p in key if v.kind == VARIATION]
        if len(f_factors) != 1 or f_factors[0][1] != 1:
            raise ValueError("variation is not linear in the f-jet")
        j = f_factors[0][0].order
        k_key = tuple((v, p) for v, p in key if v.kind == CURVATURE)
        by_order[j] = by_order.get(j, DiffPoly.zero()) + DiffPoly({k_key: coeff})

    total = DiffPoly.zero()
    for j, cj in by_order.items():
        term = cj
        for _ in range(j):
            term = term.d_ds(cap)
        total = total + (term if j % 2 == 0 else -term)
    return total


@lru_cache(maxsize=None)
def euler_lagrange_poly(m: int, cap: int | None = None) -> DiffPoly:
    """Euler-Lagrange operator of the order-m energy, as a k-jet polynomial.

    Leading term 2*(-1)^m * k_{2m}; the length part contributes +k0.
    """
    return first_variation(integrand(m, cap), cap)


@lru_cache(maxsize=None)
def second_variation(m: int, cap: int | None = None) -> DiffPoly:
    """Linearization of the Euler-Lagrange operator along a normal speed f.

    Linear in the variation jet, not reduced by integration by parts; at a
    critical curve the associated quadratic form is the second derivative of
    the energy.  Top variation order is 2m + 2 with coefficient 2*(-1)^(m+1).
    """
    if cap is None:
        cap = default_cap(m)
    return normal_variation(euler_lagrange_poly(m, cap), cap)


def circle_euler_lagrange(m: int, radius) -> Fraction:
    """Exact value of the EL operator on a circle: k - (2m-1) k^(2m+1)."""
    k = Fraction(1, 1) / Fraction(radius)
    return k - (2 * m - 1) * k ** (2 * m + 1)
