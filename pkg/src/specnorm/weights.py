"""Weight families, their sectors of analyticity and scaling constants.

Two families are supported:

* ``GammaBeta``: ``sigma(x) = x**(gamma/2) * exp(-tau * x**beta)``.  With
  ``tau = 1/2`` this contains the Laguerre weight ``exp(-x/2)`` (beta=1, half
  line) and the Hermite weight ``exp(-x**2/2)`` (beta=2, full line).
* ``PolyExp``: ``sigma(x) = exp(-sum_j c_j x**j)`` with a positive leading
  coefficient.

For a rotation angle ``theta`` the scaling constants ``s``, ``c`` satisfy
``|sigma(exp(i theta) r)| >= c * sigma(s r)`` for every ``r > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import mpmath
from mpmath import mp

from .numerics import FULL_LINE, HALF_LINE


class SectorViolation(ValueError):
    """The requested angle or point lies outside the sector of analyticity."""


def to_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string, float or mpf."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x}")
        return Fraction(repr(x))
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(man) * Fraction(2) ** exp


def frac_to_mpf(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def to_mpf(x):
    """mpf at the working precision; Fractions are divided out exactly."""
    return frac_to_mpf(x) if isinstance(x, Fraction) else mpmath.mpf(x)


@dataclass(frozen=True)
class Angle:
    """An angle stored exactly: ``value`` radians, or ``value * pi`` if ``pi_units``."""

    value: Fraction
    pi_units: bool = False

    def radians(self):
        """Radians at the current working precision."""
        v = frac_to_mpf(self.value)
        return v * mp.pi if self.pi_units else v

    def over_pi(self):
        return frac_to_mpf(self.value) if self.pi_units else frac_to_mpf(self.value) / mp.pi

    def __neg__(self) -> "Angle":
        return Angle(-self.value, self.pi_units)

    def __abs__(self) -> "Angle":
        return Angle(abs(self.value), self.pi_units)

    def __float__(self) -> float:
        with mp.workdps(20):
            return float(self.radians())

    def is_zero(self) -> bool:
        return self.value == 0

    def scaled(self, factor) -> "Angle":
        return Angle(self.value * to_fraction(factor), self.pi_units)

    def __str__(self) -> str:
        return f"{self.value}pi" if self.pi_units else str(self.value)


def as_angle(theta) -> Angle:
    if isinstance(theta, Angle):
        return theta
    return Angle(to_fraction(theta))


@dataclass(frozen=True)
class GammaBeta:
    gamma: Fraction = Fraction(0)
    beta: Fraction = Fraction(1)
    tau: Fraction = Fraction(1, 2)
    domain: str = HALF_LINE

    def __post_init__(self) -> None:
        for name in ("gamma", "beta", "tau"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        if self.gamma <= -1:
            raise ValueError("gamma must be > -1")
        if self.beta <= 0 or self.tau <= 0:
            raise ValueError("beta and tau must be positive")
        if self.domain not in (HALF_LINE, FULL_LINE):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == FULL_LINE:
            if self.gamma != 0 or self.beta.denominator != 1 or self.beta.numerator % 2:
                raise ValueError("full-line GammaBeta weights need gamma = 0 and even integer beta")

    @property
    def sector_over_pi(self) -> Fraction:
        return 1 / (2 * self.beta)

    @property
    def is_hermite(self) -> bool:
        return self.domain == FULL_LINE and self.gamma == 0 and self.beta == 2

    @property
    def is_laguerre(self) -> bool:
        return self.domain == HALF_LINE and self.gamma == 0 and self.beta == 1

    @property
    def name(self) -> str:
        if self.is_hermite and self.tau == Fraction(1, 2):
            return "hermite"
        if self.is_laguerre and self.tau == Fraction(1, 2):
            return "laguerre"
        return "gammabeta"

    def params(self) -> dict:
        return {
            "family": self.name,
            "variant": "gammabeta",
            "gamma": str(self.gamma),
            "beta": str(self.beta),
            "tau": str(self.tau),
            "domain": self.domain,
        }


@dataclass(frozen=True)
class PolyExp:
    coeffs: tuple = field(default=(Fraction(1),))
    domain: str = HALF_LINE

    def __post_init__(self) -> None:
        cs = tuple(to_fraction(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", cs)
        if not cs:
            raise ValueError("need at least one coefficient")
        if cs[-1] <= 0:
            raise ValueError("leading coefficient c_n must be positive")
        if self.domain not in (HALF_LINE, FULL_LINE):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == FULL_LINE and self.degree % 2:
            raise ValueError("full-line PolyExp weights need an even leading index")

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def sector_over_pi(self) -> Fraction:
        return Fraction(1, 2 * self.degree)

    is_hermite = False
    is_laguerre = False
    name = "polyexp"

    def params(self) -> dict:
        return {
            "family": "polyexp",
            "variant": "polyexp",
            "coeffs": [str(c) for c in self.coeffs],
            "domain": self.domain,
        }


WeightSpec = Union[GammaBeta, PolyExp]


def hermite(tau=Fraction(1, 2)) -> GammaBeta:
    return GammaBeta(0, 2, tau, FULL_LINE)


def laguerre(tau=Fraction(1, 2)) -> GammaBeta:
    return GammaBeta(0, 1, tau, HALF_LINE)


def sector(spec: WeightSpec):
    """Half-angle of the sector, in radians at the current precision."""
    return frac_to_mpf(spec.sector_over_pi) * mp.pi


def check_sector(spec: WeightSpec, theta) -> Angle:
    """Return ``theta`` as an :class:`Angle`, raising if ``|theta| >= sector``."""
    angle = as_angle(theta)
    if angle.pi_units:
        inside = abs(angle.value) < spec.sector_over_pi
    else:
        with mp.workprec(mp.prec + 20):
            inside = abs(angle.radians()) < sector(spec)
    if not inside:
        raise SectorViolation(
            f"|theta| = {abs(angle)} is not inside the sector pi*{spec.sector_over_pi} of {spec.name}"
        )
    return angle


@dataclass(frozen=True)
class ScaleParams:
    theta: Angle
    s_theta: object
    c_theta: object
    k_theta: object


def _polyval(coeffs: Sequence, x):
    acc = mp.zero
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _derivative(coeffs: Sequence) -> list:
    return [j * coeffs[j] for j in range(1, len(coeffs))]


def _bisect(coeffs, a, b):
    fa = _polyval(coeffs, a)
    for _ in range(mp.prec + 10):
        m = (a + b) / 2
        if m == a or m == b:
            break
        fm = _polyval(coeffs, m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return (a + b) / 2


def sign_change_roots(coeffs: Sequence, lo, hi) -> list:
    """Real roots of a polynomial in ``(lo, hi)``: sign changes, plus any root
    that sits exactly on a critical point.

    Coefficients are in ascending order.  Sign changes are bracketed between
    consecutive sign-change roots of the derivative, found recursively, then
    refined by bisection.
    """
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    if len(coeffs) <= 1:
        return []
    crit = sign_change_roots(_derivative(coeffs), lo, hi)
    points = [lo, *crit, hi]
    roots = []
    for a, b in zip(points, points[1:]):
        fa, fb = _polyval(coeffs, a), _polyval(coeffs, b)
        if fa == 0 and a != lo:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(_bisect(coeffs, a, b))
    return roots


def _poly_sup_positive(q: Sequence):
    """``sup_{r > 0} q(r)`` for a polynomial with negative leading coefficient.

    The value ``q(0+) = q[0]`` is included as the limit at the origin.
    """
    dq = _derivative(q)
    lead = dq[-1]
    bound = 1 + max(abs(c / lead) for c in dq)
    best = q[0]
    for r in sign_change_roots(dq, mp.zero, bound):
        best = max(best, _polyval(q, r))
    return best


def _polyexp_k(spec: PolyExp, theta, s):
    cs = [frac_to_mpf(c) for c in spec.coeffs]
    q = [mp.zero] + [cs[j - 1] * (mpmath.cos(j * theta) - s**j) for j in range(1, len(cs) + 1)]
    k = _poly_sup_positive(q)
    if spec.domain == FULL_LINE:
        q_neg = [c if j % 2 == 0 else -c for j, c in enumerate(q)]
        k = max(k, _poly_sup_positive(q_neg))
    return max(k, mp.zero)


def scale_constants(spec: WeightSpec, theta) -> ScaleParams:
    angle = check_sector(spec, theta)
    th = abs(angle.radians())
    if isinstance(spec, GammaBeta):
        beta = frac_to_mpf(spec.beta)
        s = mpmath.cos(beta * th) ** (1 / beta)
        c = s ** (-frac_to_mpf(spec.gamma) / 2)
        return ScaleParams(angle, s, c, mp.zero)
    n = spec.degree
    s = ((1 + mpmath.cos(n * th)) / 2) ** (mpmath.mpf(1) / n)
    if angle.is_zero():
        return ScaleParams(angle, mp.one, mp.one, mp.zero)
    k = _polyexp_k(spec, th, s)
    return ScaleParams(angle, s, mpmath.exp(-k), k)


def _in_sector_point(spec: WeightSpec, z) -> bool:
    alpha = sector(spec)
    if z == 0:
        return True
    if abs(mpmath.arg(z)) < alpha:
        return True
    return spec.domain == FULL_LINE and abs(mpmath.arg(-z)) < alpha


def weight_eval(spec: WeightSpec, z):
    """sigma(z) on the principal branch."""
    z = mpmath.mpc(z)
    if not _in_sector_point(spec, z):
        raise SectorViolation(f"z = {mpmath.nstr(z, 8)} lies outside the sector of {spec.name}")
    if isinstance(spec, GammaBeta):
        gamma = frac_to_mpf(spec.gamma)
        if z == 0:
            if spec.gamma < 0:
                raise SectorViolation("sigma is singular at z = 0 for gamma < 0")
            return mpmath.mpc(1 if spec.gamma == 0 else 0)
        beta = spec.beta
        zb = z ** int(beta) if beta.denominator == 1 else mpmath.power(z, frac_to_mpf(beta))
        pref = mpmath.power(z, gamma / 2) if spec.gamma != 0 else mp.one
        return pref * mpmath.exp(-frac_to_mpf(spec.tau) * zb)
    cs = [frac_to_mpf(c) for c in spec.coeffs]
    return mpmath.exp(-_polyval([mp.zero, *cs], z))


@dataclass(frozen=True)
class BasicConditionReport:
    min_ratio: object
    worst_r: object
    ok: bool


def verify_basic_condition(spec: WeightSpec, theta, r_grid: Sequence, tol_digits: int | None = None):
    """Check ``|sigma(e^{i theta} r)| >= c_theta sigma(s_theta r)`` on a grid.

    Returns the smallest ratio of the two sides.  Full-line weights are also
    checked at ``-r``.
    """
    params = scale_constants(spec, theta)
    rot = mpmath.expj(params.theta.radians())
    tol = mpmath.mpf(10) ** -(tol_digits if tol_digits is not None else mp.dps - 5)
    worst, worst_r = None, None
    signs = (1, -1) if spec.domain == FULL_LINE else (1,)
    for r in r_grid:
        for sgn in signs:
            x = sgn * to_mpf(r)
            lhs = abs(weight_eval(spec, rot * x))
            rhs = params.c_theta * abs(weight_eval(spec, params.s_theta * x))
            ratio = lhs / rhs
            if worst is None or ratio < worst:
                worst, worst_r = ratio, x
    return BasicConditionReport(worst, worst_r, bool(worst >= 1 - tol))
