"""Growth of projection norms in n and what it implies for exp(-Ht).

For the harmonic oscillator ``-f'' + z^4 x^2 f`` with ``z = e^{i theta}``
the eigenvalues are ``z^2 (2n+1)`` and ``||P_n|| = N_{n,theta}`` for the
Hermite weight.  The per-index growth rate of ``||P_n||`` is bracketed by
``log sec 2theta`` and ``log(4 sec 2theta)``; the expansion
``sum e^{-lambda_n t} P_n`` converges in norm above ``t_z`` and diverges
below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp

from .numerics import PrecisionPolicy, parallel_map
from .projnorm import sweep_cell, norm_value
from .weights import Angle, WeightSpec, check_sector, frac_to_mpf, hermite, scale_constants, to_fraction

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INDETERMINATE = "indeterminate"

SLOPE_DEAD_BAND = 1e-6


@dataclass(frozen=True)
class GrowthEntry:
    n: int
    norm: object
    exponent: float | None  # log(N_n) / n
    sigma: object | None  # sqrt(N_n / N_{n-2})


@dataclass(frozen=True)
class GrowthReport:
    theta: Angle
    entries: tuple
    s_lower: float
    s_upper: float | None
    s_estimate: float
    fit: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExpansionReport:
    theta: Angle
    t: float
    ns: tuple
    terms: tuple  # log of ||e^{-lambda_n t} P_n||
    tail_slope: float
    verdict: str
    theory_verdict: str
    t_z_bracket: tuple


@dataclass(frozen=True)
class SemiclassicalParams:
    theta: Angle
    n: int
    eta: object
    x0: object
    psi1: object
    psi2: object
    lam: object


def _norms(spec, ns, angle, policy, workers):
    fn = partial(sweep_cell, spec, angle, policy)
    return {r.n: r.value for r in parallel_map(fn, list(ns), workers)}


def sigma_ratio(spec: WeightSpec, n: int, theta, policy: PrecisionPolicy | None = None):
    """sqrt(N_n / N_{n-2}) from same-parity neighbours."""
    if n < 2:
        raise ValueError("sigma_ratio needs n >= 2")
    policy = policy or PrecisionPolicy()
    a = norm_value(spec, n, theta, policy)
    b = norm_value(spec, n - 2, theta, policy)
    with mp.workprec(min(a.precision_used, b.precision_used)):
        return mpmath.sqrt(a.value / b.value)


def per_index_lower(spec: WeightSpec, theta) -> float:
    """-2 log s_theta: the per-index rate of the lower bound (log sec 2theta for Hermite)."""
    sp = scale_constants(spec, theta)
    return float(-2 * mpmath.log(sp.s_theta))


def per_index_upper(spec: WeightSpec, theta) -> float | None:
    if spec.is_hermite:
        return float(mpmath.log(4 / mpmath.cos(2 * check_sector(spec, theta).radians())))
    if spec.is_laguerre:
        return float(mpmath.log(16 / mpmath.cos(check_sector(spec, theta).radians()) ** 2))
    return None


def fit_growth(ns: Sequence[int], log_norms: Sequence[float]) -> dict:
    """Least squares ``log N_n = s n + (c/2) log n + d``; returns s, c, d."""
    n = np.asarray(ns, dtype=float)
    y = np.asarray(log_norms, dtype=float)
    if len(n) >= 3:
        design = np.column_stack([n, 0.5 * np.log(n), np.ones_like(n)])
        (s, c, d), *_ = np.linalg.lstsq(design, y, rcond=None)
        return {"s": float(s), "c": float(c), "d": float(d)}
    return {"s": float(y[-1] / n[-1]), "c": 0.0, "d": 0.0}


def growth_report(
    spec: WeightSpec,
    theta,
    n_max: int,
    stride: int = 2,
    policy: PrecisionPolicy | None = None,
    workers: int | None = None,
) -> GrowthReport:
    """Norms on ``n = stride, 2 stride, ..., <= n_max`` with exponents and sigma ratios.

    ``s_estimate`` fits ``log N_n`` over the top half of the grid.
    """
    policy = policy or PrecisionPolicy()
    angle = check_sector(spec, theta)
    grid = list(range(stride, n_max + 1, stride))
    if not grid:
        raise ValueError("empty index grid")
    needed = sorted(set(grid) | {n - 2 for n in grid if n >= 2})
    norms = _norms(spec, needed, angle, policy, workers)
    entries = []
    for n in grid:
        val = norms[n]
        with mp.workprec(200):
            expo = float(mpmath.log(val) / n)
            sig = mpmath.sqrt(val / norms[n - 2]) if n >= 2 else None
        entries.append(GrowthEntry(n, val, expo, sig))
    top = [e for e in entries if e.n >= n_max / 2] or entries
    fit = fit_growth([e.n for e in top], [e.exponent * e.n for e in top])
    return GrowthReport(
        theta=angle,
        entries=tuple(entries),
        s_lower=per_index_lower(spec, angle),
        s_upper=per_index_upper(spec, angle),
        s_estimate=fit["s"],
        fit=fit,
    )


def tz_bracket(theta) -> tuple[float, float]:
    """[log sec 2theta, log(4 sec 2theta)] / (2 cos 2theta) for the Hermite case."""
    angle = check_sector(hermite(), theta)
    if angle.is_zero():
        return (0.0, 0.0)
    with mp.workdps(30):
        c = mpmath.cos(2 * angle.radians())
        return (float(mpmath.log(1 / c) / (2 * c)), float(mpmath.log(4 / c) / (2 * c)))


def _tail_slope(ns: Sequence[int], logs: Sequence[float]) -> float:
    k = max(2, len(ns) // 4)
    x = np.asarray(ns[-k:], dtype=float)
    y = np.asarray(logs[-k:], dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def expansion_terms(
    theta,
    t,
    n_max: int,
    stride: int = 2,
    policy: PrecisionPolicy | None = None,
    spec: WeightSpec | None = None,
    workers: int | None = None,
) -> ExpansionReport:
    """Norms ``e^{-(2n+1) cos(2theta) t} N_n`` of the terms of the spectral expansion.

    ``verdict`` comes from the log-slope of the last quarter of terms with a
    dead-band of ``SLOPE_DEAD_BAND``; ``theory_verdict`` from the bracket on
    ``t_z`` alone.
    """
    spec = spec or hermite()
    policy = policy or PrecisionPolicy()
    angle = check_sector(spec, theta)
    if t < 0:
        raise ValueError("t must be >= 0")
    ns = list(range(0, n_max + 1, stride))
    norms = _norms(spec, ns, angle, policy, workers)
    with mp.workdps(50):
        c = mpmath.cos(2 * angle.radians())
        tt = frac_to_mpf(to_fraction(t))
        logs = [float(mpmath.log(norms[n]) - (2 * n + 1) * c * tt) for n in ns]
    slope = _tail_slope(ns, logs)
    if slope < -SLOPE_DEAD_BAND:
        verdict = CONVERGENT
    elif slope > SLOPE_DEAD_BAND:
        verdict = DIVERGENT
    else:
        verdict = INDETERMINATE
    lo, hi = tz_bracket(angle)
    if angle.is_zero():
        theory = CONVERGENT if t > 0 else DIVERGENT
    elif t > hi:
        theory = CONVERGENT
    elif t < lo:
        theory = DIVERGENT
    else:
        theory = INDETERMINATE
    return ExpansionReport(angle, float(t), tuple(ns), tuple(logs), slope, verdict, theory, (lo, hi))


def semiclassical_mu(theta):
    """exp(tan 2theta), the heuristic per-index growth factor of ||P_n||."""
    angle = check_sector(hermite(), theta)
    return mpmath.exp(mpmath.tan(2 * angle.radians()))


def semiclassical_params(theta, n: int) -> SemiclassicalParams:
    """Gaussian approximate-eigenvector parameters at ``eta = sqrt(n / cos 2theta)``, ``z = e^{i theta}``."""
    angle = check_sector(hermite(), theta)
    th = angle.radians()
    eta = mpmath.sqrt(n / mpmath.cos(2 * th))
    z4 = mpmath.expj(4 * th)
    return SemiclassicalParams(
        theta=angle,
        n=n,
        eta=eta,
        x0=eta,
        psi1=1j * eta,
        psi2=-1j * z4,
        lam=(1 + z4) * eta**2,
    )


def gaussian_ratio(psi1, psi2):
    """int |e^{-psi1 s - psi2 s^2/2}|^2 ds / |int e^{-2 psi1 s - psi2 s^2} ds| over the real line."""
    psi1 = mpmath.mpc(psi1)
    psi2 = mpmath.mpc(psi2)
    if psi2.real <= 0:
        raise ValueError("Re(psi2) must be positive for the numerator to converge")
    a = psi2.real
    return mpmath.sqrt(abs(psi2) / a) * mpmath.exp(psi1.real**2 / a - (psi1**2 / psi2).real)


def log_gaussian_ratio(psi1, psi2):
    psi1 = mpmath.mpc(psi1)
    psi2 = mpmath.mpc(psi2)
    if psi2.real <= 0:
        raise ValueError("Re(psi2) must be positive for the numerator to converge")
    a = psi2.real
    return mpmath.log(abs(psi2) / a) / 2 + psi1.real**2 / a - (psi1**2 / psi2).real


@dataclass(frozen=True)
class SemiclassicalComparison:
    theta: Angle
    n: int
    log_norm: float
    log_gaussian_ratio: float
    n_tan_2theta: float


def semiclassical_comparison(
    theta, n: int, policy: PrecisionPolicy | None = None
) -> SemiclassicalComparison:
    """Put log N_n next to the Gaussian-ratio estimate and n tan 2theta.

    Nothing is asserted about their agreement; the point is to see it.
    """
    angle = check_sector(hermite(), theta)
    cv = norm_value(hermite(), n, angle, policy)
    with mp.workdps(40):
        sp = semiclassical_params(angle, n)
        return SemiclassicalComparison(
            angle,
            n,
            float(mpmath.log(cv.value)),
            float(log_gaussian_ratio(sp.psi1, sp.psi2)) if not angle.is_zero() else 0.0,
            float(n * mpmath.tan(2 * angle.radians())),
        )

