"""Arbitrary-precision plumbing shared by every compute module.

Values are ``mpmath`` numbers evaluated under an explicit working precision
(``mp.workprec``).  Precision is tracked in bits internally and exposed in
decimal digits.  A result is *certified* when two evaluations, at ``p`` and
``2p`` bits, agree to the requested number of decimal digits.

The global ``mpmath`` context is not thread safe, so sweeps parallelise over
processes (see :func:`parallel_map`), never threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, NamedTuple, Sequence

import mpmath
from mpmath import mp

LOG2_10 = math.log2(10)


class PrecisionBudgetError(ArithmeticError):
    """Raised when the precision ceiling is reached without agreement."""

    def __init__(self, message: str, achieved_digits: float = 0.0, best: Any = None):
        super().__init__(message)
        self.achieved_digits = achieved_digits
        self.best = best


class PrecisionLoss(ArithmeticError):
    """Signals that a computation lost all significance at the current precision.

    :func:`certify` reacts by escalating instead of failing.
    """


def digits_to_bits(digits: float) -> int:
    return int(math.ceil(digits * LOG2_10))


def bits_to_digits(bits: int) -> int:
    return int(bits / LOG2_10)


@dataclass(frozen=True)
class PrecisionPolicy:
    target_digits: int = 30
    guard_digits: int = 15
    max_digits: int = 2000
    escalation_factor: float = 2.0

    def __post_init__(self) -> None:
        if self.target_digits < 1:
            raise ValueError("target_digits must be >= 1")
        if self.guard_digits < 0:
            raise ValueError("guard_digits must be >= 0")
        if self.max_digits < self.target_digits + self.guard_digits:
            raise ValueError("max_digits must be >= target_digits + guard_digits")
        if self.escalation_factor < 2:
            raise ValueError("escalation_factor must be >= 2")

    @property
    def working_digits(self) -> int:
        return self.target_digits + self.guard_digits


@dataclass(frozen=True)
class CertifiedValue:
    """A value whose leading ``certified_digits`` survived a precision doubling.

    ``value`` is normally an ``mpf``; certified vector computations store a
    tuple.  ``cancellation_magnitude`` is ``log10(sum|terms| / |result|)`` when
    the value came from a tracked summation, else 0.
    """

    value: Any
    certified_digits: int
    precision_used: int
    cancellation_magnitude: float = 0.0

    def __float__(self) -> float:
        return float(self.value)


class Summed(NamedTuple):
    """Result of a tracked summation: the sum and the sum of absolute terms."""

    value: Any
    magnitude: Any

    @property
    def cancellation(self) -> float:
        return cancellation_log10(self.value, self.magnitude)


def cancellation_log10(value, magnitude) -> float:
    if magnitude == 0:
        return 0.0
    if value == 0:
        return math.inf
    return max(0.0, float(mpmath.log10(magnitude / abs(value))))


def tracked_sum(terms: Iterable) -> Summed:
    total = mp.zero
    mag = mp.zero
    for t in terms:
        total += t
        mag += abs(t)
    return Summed(total, mag)


def _flatten(value) -> list:
    if isinstance(value, (list, tuple)):
        out = []
        for v in value:
            out.extend(_flatten(v))
        return out
    return [value]


def agreement_digits(a, b, cap: float) -> float:
    """Decimal digits on which ``a`` and ``b`` agree, capped at ``cap``.

    Sequences are compared entry by entry (relative error per entry) and the
    worst entry wins.
    """
    worst = cap
    for x, y in zip(_flatten(a), _flatten(b), strict=True):
        if x == y:
            continue
        scale = max(abs(x), abs(y))
        rel = abs(x - y) / scale
        worst = min(worst, -float(mpmath.log10(rel)))
    return max(worst, 0.0)


def _quantize(digits: float, step: int = 8) -> int:
    # coarse precision steps let cached intermediates be reused across calls
    return step * math.ceil(digits / step)


def certify(
    computation: Callable[[int], Any],
    policy: PrecisionPolicy | None = None,
    start_digits: float | None = None,
) -> CertifiedValue:
    """Run ``computation(prec_bits)`` at ``p`` and ``2p`` until they agree.

    ``computation`` may return a number, a sequence of numbers, or a
    :class:`Summed`.  For :class:`Summed` results the measured cancellation
    raises the working precision before the comparison run, so the doubling
    step is rarely wasted.  A :class:`PrecisionLoss` raised by the
    computation triggers escalation.
    """
    policy = policy or PrecisionPolicy()
    digits = min(_quantize(max(start_digits or 0, policy.working_digits)), policy.max_digits)
    last_agree = 0.0
    best = None
    while True:
        p = digits_to_bits(digits)
        try:
            lo = computation(p)
            canc = min(lo.cancellation, bits_to_digits(p)) if isinstance(lo, Summed) else 0.0
            needed = policy.working_digits + canc
            if needed > digits and digits < policy.max_digits:
                digits = min(_quantize(needed), policy.max_digits)
                continue
            hi = computation(2 * p)
        except PrecisionLoss:
            if digits >= policy.max_digits:
                raise PrecisionBudgetError(
                    f"significance lost at the {policy.max_digits}-digit ceiling",
                    last_agree, best,
                ) from None
            digits = min(math.ceil(digits * policy.escalation_factor), policy.max_digits)
            continue
        if isinstance(hi, Summed):
            canc = min(hi.cancellation, bits_to_digits(2 * p))
            lo_v, hi_v = lo.value, hi.value
        else:
            lo_v, hi_v = lo, hi
        with mp.workprec(2 * p):
            last_agree = agreement_digits(lo_v, hi_v, cap=bits_to_digits(p))
        best = hi_v
        if last_agree >= policy.target_digits:
            return CertifiedValue(
                value=hi_v,
                certified_digits=int(last_agree),
                precision_used=2 * p,
                cancellation_magnitude=canc,
            )
        if digits >= policy.max_digits:
            raise PrecisionBudgetError(
                f"only {last_agree:.1f} digits agree at the {policy.max_digits}-digit ceiling",
                last_agree, best,
            )
        digits = min(math.ceil(digits * policy.escalation_factor), policy.max_digits)


# ---------------------------------------------------------------------------
# Gamma function

def _as_fraction(x) -> Fraction | None:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    try:
        f = Fraction(mpmath.mpf(x).man_exp[0]) * Fraction(2) ** mpmath.mpf(x).man_exp[1]
    except (TypeError, ValueError):
        return None
    return f


def _gamma_half_integer(twice: int):
    """Gamma(twice/2) for a positive integer ``twice`` by exact recursion."""
    if twice % 2 == 0:
        return mpmath.mpf(math.factorial(twice // 2 - 1))
    m = twice // 2
    # Gamma(m + 1/2) = sqrt(pi) (2m)! / (4^m m!)
    num = math.factorial(2 * m)
    den = 4**m * math.factorial(m)
    return mpmath.sqrt(mp.pi) * mpmath.mpf(num) / den


def _log_gamma_stirling(x, eps):
    """Stirling series for log Gamma(x), x large and real.

    For real x > 0 the remainder is bounded by the first omitted term, so the
    loop stops once a term falls below ``eps``.
    """
    s = (x - mpmath.mpf(0.5)) * mpmath.log(x) - x + mpmath.log(2 * mp.pi) / 2
    x2 = x * x
    xpow = x
    k = 1
    prev = None
    while True:
        b = mpmath.bernoulli(2 * k)
        term = b / (2 * k * (2 * k - 1) * xpow)
        if abs(term) < eps:
            break
        if prev is not None and abs(term) > abs(prev):
            raise PrecisionLoss("Stirling series started diverging before convergence")
        s += term
        prev = term
        xpow *= x2
        k += 1
    return s


def gamma_real(x):
    """Gamma(x) for real ``x > 0`` at the current working precision.

    Integer and half-integer arguments use exact recursion from Gamma(1) and
    Gamma(1/2); other arguments are shifted above a precision-dependent
    threshold and evaluated with the Stirling series.
    """
    frac = x if isinstance(x, Fraction) else _as_fraction(x)
    if frac is not None and frac <= 0 or frac is None and x <= 0:
        raise ValueError(f"gamma_real needs x > 0, got {x}")
    if frac is not None and (2 * frac).denominator == 1:
        return +_gamma_half_integer(int(2 * frac))

    prec = mp.prec
    with mp.workprec(prec + 20):
        if frac is not None:
            xv = mpmath.mpf(frac.numerator) / frac.denominator
        else:
            xv = mpmath.mpf(x)
        digits = bits_to_digits(prec + 20)
        threshold = int(0.37 * digits) + 10
        shift = max(0, math.ceil(threshold - float(xv)))
        denom = mpmath.mpf(1)
        for j in range(shift):
            denom *= xv + j
        eps = mpmath.mpf(2) ** (-(prec + 30))
        lg = _log_gamma_stirling(xv + shift, eps)
        result = mpmath.exp(lg) / denom
    return +result


# ---------------------------------------------------------------------------
# Double-exponential quadrature

HALF_LINE = "half"
FULL_LINE = "full"


def _de_node(t, domain: str):
    """Abscissa and Jacobian of the double-exponential map at ``t``."""
    half_pi = mp.pi / 2
    if domain == HALF_LINE:
        u = half_pi * mpmath.sinh(t)
        x = mpmath.exp(u)
        return x, half_pi * mpmath.cosh(t) * x
    if domain == FULL_LINE:
        u = half_pi * mpmath.sinh(t)
        return mpmath.sinh(u), half_pi * mpmath.cosh(t) * mpmath.cosh(u)
    raise ValueError(f"unknown domain {domain!r}")


def tanh_sinh_integrate_many(
    f: Callable[[Any], Sequence],
    domain: str,
    policy: PrecisionPolicy | None = None,
    max_level: int = 14,
) -> list[CertifiedValue]:
    """Integrate a vector-valued integrand with a shared set of nodes.

    Half-line integrals use ``x = exp(pi/2 sinh t)``, full-line integrals
    ``x = sinh(pi/2 sinh t)``.  The trapezoid step is halved until every
    component agrees with the previous level to ``target_digits``.
    """
    policy = policy or PrecisionPolicy()
    prec = digits_to_bits(policy.working_digits)
    with mp.workprec(prec):
        # nodes beyond |t| = t_max carry weight far below 10^-digits
        t_max = float(mpmath.asinh(4 * policy.working_digits * math.log(10) / math.pi)) + 1.0
        h = mpmath.mpf(1)

        tiny = mpmath.mpf(10) ** -(policy.working_digits + 5)
        peak: list = []

        def side(ks, step):
            # walk outward; stop once two nodes in a row are negligible
            acc = None
            quiet = 0
            for k in ks:
                x, w = _de_node(k * step, domain)
                terms = [w * v for v in f(x)]
                sizes = [abs(v) for v in terms]
                if not peak:
                    peak.extend(sizes)
                else:
                    peak[:] = [max(a, b) for a, b in zip(peak, sizes)]
                acc = terms if acc is None else [a + v for a, v in zip(acc, terms)]
                small = all(v <= tiny * m for v, m in zip(sizes, peak))
                quiet = quiet + 1 if small else 0
                if quiet >= 2:
                    break
            return acc

        def accumulate(first, stride, step):
            kmax = int(t_max / float(step)) + 1
            centre = side([0], step) if first == 0 else None
            start = first if first else stride
            right = side(range(start, kmax + 1, stride), step)
            left = side(range(-start, -kmax - 1, -stride), step)
            parts = [v for v in (centre, right, left) if v is not None]
            return [sum(col) for col in zip(*parts)]

        sums = accumulate(0, 1, h)
        est = [s * h for s in sums]
        agree = 0.0
        for level in range(1, max_level + 1):
            h /= 2
            new = accumulate(1, 2, h)
            sums = [s + n for s, n in zip(sums, new)]
            prev, est = est, [s * h for s in sums]
            agree = agreement_digits(prev, est, cap=policy.working_digits)
            if level >= 3 and agree >= policy.target_digits:
                return [
                    CertifiedValue(value=+e, certified_digits=int(agree), precision_used=prec)
                    for e in est
                ]
    raise PrecisionBudgetError(
        f"quadrature did not converge by level {max_level} ({agree:.1f} digits)",
        agree, est,
    )


def tanh_sinh_integrate(
    f: Callable[[Any], Any],
    domain: str,
    policy: PrecisionPolicy | None = None,
    max_level: int = 14,
) -> CertifiedValue:
    """Integrate ``f`` over ``(0, inf)`` (``HALF_LINE``) or the real line."""
    return tanh_sinh_integrate_many(lambda x: (f(x),), domain, policy, max_level)[0]


# ---------------------------------------------------------------------------

def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Map ``fn`` over ``items`` in order, optionally across processes.

    Results are returned in input order regardless of completion order.
    ``fn`` must be picklable (a module-level function or ``functools.partial``).
    """
    if not workers or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
