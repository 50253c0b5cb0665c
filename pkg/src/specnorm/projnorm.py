"""Projection norms N_{n,theta} and the bounds that sandwich them.

For a weight ``sigma`` with real orthonormal polynomials ``p_n`` and a
rotation ``z = r e^{i theta}``,

    N_{n,theta} = int |p_n(e^{i theta} x) sigma(e^{i theta} x)|^2 dx
                = sum_{r,s} a_r a_s cos((r - s) theta) M_{r+s}(theta),

where ``a`` are the monomial coefficients of ``p_n`` and ``M_k`` the moments
of ``|sigma(e^{i theta} x)|^2``.  The value does not depend on ``|z|``.
The double sum cancels heavily near ``theta = 0`` and is evaluated under
:func:`~specnorm.numerics.certify` with cancellation tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import mpmath
from mpmath import mp

from .numerics import (
    FULL_LINE,
    HALF_LINE,
    CertifiedValue,
    PrecisionPolicy,
    Summed,
    certify,
    parallel_map,
    tanh_sinh_integrate,
)
from .orthopoly import orthonormal_basis, rotated_moments
from .weights import (
    Angle,
    WeightSpec,
    check_sector,
    hermite,
    laguerre,
    scale_constants,
    to_mpf,
    weight_eval,
)


class UnsupportedParity(ValueError):
    """The Hermite upper bound is only available for even degree."""


@dataclass(frozen=True)
class CrossMomentTable:
    weight: WeightSpec
    theta: Angle
    entries: tuple


@dataclass(frozen=True)
class NormResult:
    n: int
    theta: Angle
    norm: CertifiedValue
    lower: object
    upper: object | None
    lower_ok: bool
    upper_ok: bool | None  # None when no upper bound applies

    @property
    def value(self):
        return self.norm.value


def cross_moments(spec: WeightSpec, theta, k_max: int, policy: PrecisionPolicy | None = None):
    """Moments of ``|sigma(e^{i theta} x)|^2`` for k = 0..k_max."""
    angle = check_sector(spec, theta)
    if policy is None:
        return CrossMomentTable(spec, angle, tuple(rotated_moments(spec, angle.radians(), k_max)))

    def run(prec):
        with mp.workprec(prec):
            return tuple(rotated_moments(spec, angle.radians(), k_max))

    cv = certify(run, policy)
    return CrossMomentTable(spec, angle, cv.value)


def bilinear_norm(coeffs: Sequence, moments_: Sequence, theta) -> Summed:
    """``sum_{r,s} a_r a_s cos((r-s) theta) M_{r+s}`` with its absolute-term sum.

    The (r, s) and (s, r) terms coincide, so only ``r <= s`` is visited.
    """
    nz = [r for r, a in enumerate(coeffs) if a]
    cosd = [mpmath.cos(d * theta) for d in range(len(coeffs))]
    total = mp.zero
    mag = mp.zero
    for i, r in enumerate(nz):
        ar = coeffs[r]
        diag = ar * ar * moments_[2 * r]
        total += diag
        mag += abs(diag)
        rest = nz[i + 1:]
        if not rest:
            continue
        row = [coeffs[s] * cosd[s - r] for s in rest]
        ms = [moments_[r + s] for s in rest]
        total += 2 * ar * mpmath.fdot(row, ms)
        mag += 2 * abs(ar) * mpmath.fdot([abs(v) for v in row], ms)
    return Summed(total, mag)


def _norm_at_precision(spec: WeightSpec, n: int, angle: Angle, prec: int) -> Summed:
    with mp.workprec(prec):
        basis = orthonormal_basis(spec, n)
        th = angle.radians()
        ms = rotated_moments(spec, th, 2 * n)
        return bilinear_norm(basis.coeffs, ms, th)


def start_digits(policy: PrecisionPolicy, n: int) -> int:
    """First-attempt working digits; measured cancellation tops this up."""
    return policy.working_digits + math.ceil(0.3 * n)


def norm_value(spec: WeightSpec, n: int, theta, policy: PrecisionPolicy | None = None) -> CertifiedValue:
    """Certified N_{n,theta} without the bound bookkeeping."""
    if n < 0:
        raise ValueError("n must be >= 0")
    policy = policy or PrecisionPolicy()
    angle = check_sector(spec, theta)
    return certify(partial(_norm_at_precision, spec, n, angle), policy, start_digits(policy, n))


def projection_norm(spec: WeightSpec, n: int, theta, policy: PrecisionPolicy | None = None) -> NormResult:
    policy = policy or PrecisionPolicy()
    angle = check_sector(spec, theta)
    cv = norm_value(spec, n, angle, policy)
    with mp.workprec(cv.precision_used):
        lo = lower_bound(spec, angle, n)
        up = applicable_upper_bound(spec, angle, n)
        slack = 1 - mpmath.mpf(10) ** -cv.certified_digits
        lower_ok = bool(cv.value >= lo * slack)
        upper_ok = None if up is None else bool(cv.value * slack <= up)
    return NormResult(n, angle, cv, lo, up, lower_ok, upper_ok)


# ---------------------------------------------------------------------------
# Bounds

def lower_bound(spec: WeightSpec, theta, n: int):
    """c_theta^2 s_theta^(-2n-1)."""
    sp = scale_constants(spec, theta)
    return sp.c_theta**2 * sp.s_theta ** (-2 * n - 1)


def upper_bound_laguerre(theta, n: int):
    """sec(theta)^(2n+1) 2^(4n+2) for the Laguerre weight, |theta| < pi/2."""
    angle = check_sector(laguerre(), theta)
    sec = 1 / mpmath.cos(angle.radians())
    return sec ** (2 * n + 1) * mpmath.mpf(2) ** (4 * n + 2)


def upper_bound_hermite_even(theta, m: int):
    """pi (n+1)^(1/2) 2^(4n+2) cos(2 theta)^(-(4n+1)/2) with n = m/2."""
    angle = check_sector(hermite(), theta)
    if m % 2:
        raise UnsupportedParity(f"no Hermite upper bound for odd degree {m}")
    n = m // 2
    c = mpmath.cos(2 * angle.radians())
    return mp.pi * mpmath.sqrt(n + 1) * mpmath.mpf(2) ** (4 * n + 2) * c ** (-(mpmath.mpf(4 * n + 1) / 2))


def applicable_upper_bound(spec: WeightSpec, theta, n: int):
    """The proven upper bound for this family and degree, or None."""
    if spec.is_laguerre:
        return upper_bound_laguerre(theta, n)
    if spec.is_hermite and n % 2 == 0:
        return upper_bound_hermite_even(theta, n)
    return None


# ---------------------------------------------------------------------------
# Independent quadrature path

def _hermite_recurrence(n: int):
    """Orthonormal Hermite p_n by its three-term recurrence, as a function of w."""
    p0 = 1 / mpmath.sqrt(mpmath.sqrt(mp.pi))
    steps = [(mpmath.sqrt(mpmath.mpf(2) / (k + 1)), mpmath.sqrt(mpmath.mpf(k) / (k + 1))) for k in range(n)]

    def p(w):
        p_prev, cur = mp.zero, p0
        for a, b in steps:
            p_prev, cur = cur, a * w * cur - b * p_prev
        return cur

    return p


def _laguerre_recurrence(n: int, w):
    """(-1)^n L_n(w), orthonormal for exp(-x) with positive leading coefficient."""
    l_prev = mp.zero
    l = mp.one
    for k in range(n):
        l_prev, l = l, ((2 * k + 1 - w) * l - k * l_prev) / (k + 1)
    return -l if n % 2 else l


def _poly_evaluator(spec: WeightSpec, n: int):
    if spec.is_hermite:
        scale = mpmath.sqrt(2 * mpmath.mpf(spec.tau.numerator) / spec.tau.denominator)
        herm = _hermite_recurrence(n)
        root = mpmath.sqrt(scale)
        return lambda w: root * herm(scale * w)
    if spec.is_laguerre:
        scale = 2 * mpmath.mpf(spec.tau.numerator) / spec.tau.denominator
        return lambda w: mpmath.sqrt(scale) * _laguerre_recurrence(n, scale * w)
    basis = orthonormal_basis(spec, n)
    return basis


def quadrature_norm_oracle(
    spec: WeightSpec,
    n: int,
    theta,
    policy: PrecisionPolicy | None = None,
    modulus=1,
) -> CertifiedValue:
    """N_{n,theta} by direct quadrature of ``|z| |p_n(z x) sigma(z x)|^2``, ``z = modulus e^{i theta}``.

    Hermite and Laguerre polynomials are evaluated by their three-term
    recurrences, so this path shares nothing with the moment sum except the
    definition.
    """
    policy = policy or PrecisionPolicy()
    angle = check_sector(spec, theta)
    # the monomial form loses digits to cancellation; the recurrences do not
    extra = 10 if (spec.is_hermite or spec.is_laguerre) else 10 + n
    inner = PrecisionPolicy(policy.target_digits, policy.guard_digits + extra, policy.max_digits + extra)
    with mp.workdps(inner.working_digits):
        z = to_mpf(modulus) * mpmath.expj(angle.radians())
        p = _poly_evaluator(spec, n)

        def integrand(x):
            w = z * x
            return abs(z) * abs(p(w) * weight_eval(spec, w)) ** 2

        domain = FULL_LINE if spec.domain == FULL_LINE else HALF_LINE
        return tanh_sinh_integrate(integrand, domain, inner)


# ---------------------------------------------------------------------------
# Sweeps

def sweep_cell(spec: WeightSpec, angle: Angle, policy: PrecisionPolicy, n: int) -> NormResult:
    return projection_norm(spec, n, angle, policy)


def norm_sweep(
    spec: WeightSpec,
    ns: Sequence[int],
    theta,
    policy: PrecisionPolicy | None = None,
    workers: int | None = None,
) -> list[NormResult]:
    """projection_norm for every n in ``ns``, in order; ``workers > 1`` uses processes."""
    policy = policy or PrecisionPolicy()
    angle = check_sector(spec, theta)
    return parallel_map(partial(sweep_cell, spec, angle, policy), list(ns), workers)

