"""Monomial coefficients of orthonormal polynomials for the supported weights.

Hermite and Laguerre polynomials come from exact integer/rational cores with
one irrational normalisation applied at the end.  Any other weight goes
through Cholesky factorisation of its Hankel moment matrix.

Coefficients are ascending (``coeffs[k]`` multiplies ``x**k``) and the
leading coefficient is always positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
from mpmath import mp

from .numerics import (
    FULL_LINE,
    HALF_LINE,
    PrecisionLoss,
    PrecisionPolicy,
    certify,
    gamma_real,
    tanh_sinh_integrate_many,
)
from .weights import GammaBeta, PolyExp, WeightSpec, frac_to_mpf, hermite, laguerre, to_mpf


@dataclass(frozen=True)
class PolyBasis:
    weight: WeightSpec
    degree: int
    coeffs: tuple
    parity: str  # "even", "odd" or "none"

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


@dataclass(frozen=True)
class MomentTable:
    weight: WeightSpec
    moments: tuple
    precision: int

    @property
    def k_max(self) -> int:
        return len(self.moments) - 1


def _parity(spec: WeightSpec | None, n: int) -> str:
    if spec is not None and spec.domain == FULL_LINE and (isinstance(spec, GammaBeta) or _polyexp_even(spec)):
        return "odd" if n % 2 else "even"
    return "none"


def _polyexp_even(spec: PolyExp) -> bool:
    return all(c == 0 for j, c in enumerate(spec.coeffs, start=1) if j % 2)


# ---------------------------------------------------------------------------
# Hermite

_HERMITE_TABLE: list[tuple[int, ...]] = [(1,), (0, 2)]


def hermite_integer_coeffs(n: int) -> tuple[int, ...]:
    """Integer coefficients of the physicists' H_n via H_{k+1} = 2x H_k - 2k H_{k-1}."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    table = _HERMITE_TABLE
    while len(table) <= n:
        k = len(table) - 1
        hk, hkm1 = table[k], table[k - 1]
        nxt = [0] * (k + 2)
        for i, c in enumerate(hk):
            nxt[i + 1] += 2 * c
        for i, c in enumerate(hkm1):
            nxt[i] -= 2 * k * c
        table.append(tuple(nxt))
    return table[n]


def hermite_series_integer_coeffs(n: int) -> tuple[int, ...]:
    """H_n from the explicit series ``sum_j (-1)^j n!/(j!(n-2j)!) (2x)^(n-2j)``."""
    out = [0] * (n + 1)
    for j in range(n // 2 + 1):
        k = n - 2 * j
        out[k] = (-1) ** j * math.factorial(n) // (math.factorial(j) * math.factorial(k)) * 2**k
    return tuple(out)


def hermite_even_closed_form(n: int, r: int):
    """Coefficient of ``x**(2r)`` in the orthonormal ``p_{2n}`` (closed form)."""
    num = (-1) ** (n - r) * mpmath.mpf(2) ** (2 * r - n) * mpmath.sqrt(math.factorial(2 * n))
    return num / (mp.pi ** mpmath.mpf(0.25) * math.factorial(n - r) * math.factorial(2 * r))


def hermite_norm_factor(n: int):
    """k_n = pi^(-1/4) 2^(-n/2) (n!)^(-1/2)."""
    return 1 / mpmath.sqrt(mpmath.sqrt(mp.pi) * mpmath.mpf(2) ** n * math.factorial(n))


def hermite_coeffs(n: int, tau=Fraction(1, 2)) -> PolyBasis:
    """Orthonormal Hermite polynomial for ``exp(-2 tau x^2)`` at the working precision."""
    spec = hermite(tau)
    h = hermite_integer_coeffs(n)
    kn = hermite_norm_factor(n)
    if spec.tau == Fraction(1, 2):
        coeffs = tuple(kn * c if c else mp.zero for c in h)
    else:
        # p(x) = (2 tau)^(1/4) p_std(sqrt(2 tau) x)
        root = mpmath.sqrt(2 * frac_to_mpf(spec.tau))
        pref = kn * mpmath.sqrt(root)
        coeffs = tuple(pref * c * root**k if c else mp.zero for k, c in enumerate(h))
    return PolyBasis(spec, n, coeffs, "odd" if n % 2 else "even")


# ---------------------------------------------------------------------------
# Laguerre

@lru_cache(maxsize=None)
def laguerre_rational_coeffs(n: int) -> tuple[Fraction, ...]:
    """(-1)^(n-r) n! / ((r!)^2 (n-r)!) for r = 0..n."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    nf = math.factorial(n)
    return tuple(
        Fraction((-1) ** (n - r) * nf, math.factorial(r) ** 2 * math.factorial(n - r))
        for r in range(n + 1)
    )


def laguerre_coeffs(n: int, tau=Fraction(1, 2)) -> PolyBasis:
    """Orthonormal Laguerre polynomial for ``exp(-2 tau x)`` on the half line."""
    spec = laguerre(tau)
    b = laguerre_rational_coeffs(n)
    if spec.tau == Fraction(1, 2):
        coeffs = tuple(frac_to_mpf(c) for c in b)
    else:
        t2 = 2 * spec.tau
        coeffs = tuple(
            frac_to_mpf(c * t2**k) * mpmath.sqrt(frac_to_mpf(t2)) for k, c in enumerate(b)
        )
    return PolyBasis(spec, n, coeffs, "none")


# ---------------------------------------------------------------------------
# Moments

def rotated_moments(spec: WeightSpec, theta, k_max: int) -> list:
    """``int x^k |sigma(e^{i theta} x)|^2 dx`` for k = 0..k_max at the working precision.

    ``theta`` is in radians.  For ``theta = 0`` these are the ordinary moments.
    """
    if isinstance(spec, GammaBeta):
        beta = spec.beta
        base = 2 * frac_to_mpf(spec.tau) * mpmath.cos(frac_to_mpf(beta) * theta)
        if base <= 0:
            raise ValueError("rotated weight is not integrable at this angle")
        log_base = mpmath.log(base)
        bmpf = frac_to_mpf(beta)
        full = spec.domain == FULL_LINE
        out = []
        for k in range(k_max + 1):
            if full and k % 2:
                out.append(mp.zero)
                continue
            arg = (k + spec.gamma + 1) / beta
            val = gamma_real(arg) * mpmath.exp(-frac_to_mpf(arg) * log_base) / bmpf
            out.append(2 * val if full else val)
        return out
    return _polyexp_moments(spec, theta, k_max)


def _round_up(k: int, block: int) -> int:
    """Smallest ``block * m - 1 >= k``; fixes cache keys as a function of k alone."""
    return block * (k // block + 1) - 1


def _polyexp_moments(spec: PolyExp, theta, k_max: int) -> list:
    # extra moments share the quadrature nodes, so compute a fixed block
    k_cap = _round_up(k_max, 16)
    return list(_polyexp_moments_cached(spec, +theta, k_cap, mp.prec)[: k_max + 1])


@lru_cache(maxsize=256)
def _polyexp_moments_cached(spec: PolyExp, theta, k_max: int, prec: int) -> tuple:
    with mp.workprec(prec):
        return tuple(_polyexp_moments_raw(spec, theta, k_max))


def _polyexp_moments_raw(spec: PolyExp, theta, k_max: int) -> list:
    cs = [2 * frac_to_mpf(c) * mpmath.cos(j * theta) for j, c in enumerate(spec.coeffs, start=1)]
    if cs[-1] <= 0:
        raise ValueError("rotated weight is not integrable at this angle")
    full = spec.domain == FULL_LINE

    def integrand(x):
        acc = mp.zero
        for c in reversed(cs):
            acc = (acc + c) * x
        w = mpmath.exp(-acc)
        vals = []
        for _ in range(k_max + 1):
            vals.append(w)
            w = w * x
        return vals

    digits = mp.dps
    policy = PrecisionPolicy(target_digits=max(digits - 10, 5), guard_digits=10, max_digits=4 * digits + 20)
    results = tanh_sinh_integrate_many(integrand, FULL_LINE if full else HALF_LINE, policy)
    return [+r.value for r in results]


def moments(spec: WeightSpec, k_max: int, policy: PrecisionPolicy | None = None) -> MomentTable:
    """Moments of ``sigma^2``; certified when a policy is given."""
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if policy is None:
        return MomentTable(spec, tuple(rotated_moments(spec, mp.zero, k_max)), mp.prec)

    def run(prec):
        with mp.workprec(prec):
            return tuple(rotated_moments(spec, mp.zero, k_max))

    cv = certify(run, policy)
    return MomentTable(spec, cv.value, cv.precision_used)


# ---------------------------------------------------------------------------
# Gram-Schmidt via Cholesky

def gram_polys(table: MomentTable, n_max: int, policy: PrecisionPolicy | None = None) -> list[PolyBasis]:
    """Orthonormal p_0..p_{n_max} from a moment table.

    The Hankel matrix ``[mu_{i+j}]`` is factored as ``L L^T``; row ``k`` of
    ``L^{-1}`` holds the coefficients of ``p_k``.  A non-positive pivot
    raises :class:`PrecisionLoss`.  With a policy the table is recomputed
    from its weight under :func:`certify`.
    """
    if table.k_max < 2 * n_max:
        raise ValueError(f"moment table covers k <= {table.k_max}, need {2 * n_max}")
    if policy is not None:
        spec = table.weight
        if spec is None:
            raise ValueError("certified Gram-Schmidt needs a table with a weight to recompute")

        def run(prec):
            with mp.workprec(prec):
                t = MomentTable(spec, tuple(rotated_moments(spec, mp.zero, 2 * n_max)), prec)
                return tuple(b.coeffs for b in gram_polys(t, n_max))

        cv = certify(run, policy)
        return [
            PolyBasis(spec, k, c, _parity(spec, k)) for k, c in enumerate(cv.value)
        ]

    mu = [to_mpf(m) for m in table.moments]
    size = n_max + 1
    L = [[mp.zero] * size for _ in range(size)]
    for i in range(size):
        for j in range(i + 1):
            s = mu[i + j] - mpmath.fsum(L[i][k] * L[j][k] for k in range(j))
            if i == j:
                if s <= 0:
                    raise PrecisionLoss(f"Hankel pivot {i} is not positive")
                L[i][i] = mpmath.sqrt(s)
            else:
                L[i][j] = s / L[j][j]
    # rows of L^{-1} by forward substitution
    inv = [[mp.zero] * size for _ in range(size)]
    for i in range(size):
        inv[i][i] = 1 / L[i][i]
        for j in range(i):
            s = mpmath.fsum(L[i][k] * inv[k][j] for k in range(j, i))
            inv[i][j] = -s / L[i][i]
    spec = table.weight
    bases = []
    for k in range(size):
        coeffs = list(inv[k][: k + 1])
        par = _parity(spec, k)
        if par != "none":
            coeffs = [c if (j - k) % 2 == 0 else mp.zero for j, c in enumerate(coeffs)]
        bases.append(PolyBasis(spec, k, tuple(coeffs), par))
    return bases


def orthonormality_residual(bases: Sequence[PolyBasis], table: MomentTable):
    """max over pairs of ``|<p_i, p_j> - delta_ij|`` using the moment table."""
    mu = table.moments
    worst = mp.zero
    for i, p in enumerate(bases):
        for j in range(i, len(bases)):
            q = bases[j]
            if len(p.coeffs) + len(q.coeffs) - 1 > len(mu):
                raise ValueError("moment table too short for these bases")
            s = mpmath.fsum(
                a * b * mu[r + s]
                for r, a in enumerate(p.coeffs) if a
                for s, b in enumerate(q.coeffs) if b
            )
            worst = max(worst, abs(s - (1 if i == j else 0)))
    return worst


@lru_cache(maxsize=64)
def _gram_cached(spec: WeightSpec, n: int, prec: int) -> tuple:
    # p_k depends only on the leading (k+1) x (k+1) block, so n is a block cap
    with mp.workprec(prec):
        table = MomentTable(spec, tuple(rotated_moments(spec, mp.zero, 2 * n)), prec)
        return tuple(gram_polys(table, n))


def orthonormal_basis(spec: WeightSpec, n: int) -> PolyBasis:
    """p_n for ``spec`` at the working precision, closed form when one exists."""
    if spec.is_hermite:
        return hermite_coeffs(n, spec.tau)
    if spec.is_laguerre:
        return laguerre_coeffs(n, spec.tau)
    return _gram_cached(spec, _round_up(n, 8), mp.prec)[n]


def orthonormal_basis_certified(spec: WeightSpec, n: int, policy: PrecisionPolicy | None = None):
    """Certified coefficients of p_n, returned as a :class:`CertifiedValue` of a tuple."""

    def run(prec):
        with mp.workprec(prec):
            return tuple(orthonormal_basis(spec, n).coeffs)

    return certify(run, policy, start_digits=(policy or PrecisionPolicy()).working_digits + n)
