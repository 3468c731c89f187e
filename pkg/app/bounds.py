"""Closed-form degrees-of-freedom bounds and minimum-diversity requirements.

Rational bounds are exact. Bounds involving √L, L^(1/4) or (L/2)^(1/N) are
exact when the root is rational and otherwise enclosed in an interval
computed with mpmath's interval context at BOUND_PRECISION digits plus guard
digits, so every comparison against a measured DoF is conservative.
"""

from collections.abc import Callable
from fractions import Fraction
from math import isqrt

import mpmath
from mpmath import iv
from mpmath.libmp import to_rational

from app.config import config
from app.errors import InputError
from app.logger import get_logger
from app.models import BoundTable, BoundValue, VerifyReport

logger = get_logger(__name__)

GUARD_DIGITS = 10

type Interval = tuple[Fraction, Fraction]


def _iroot(a: int, n: int) -> int:
    """⌊a^(1/n)⌋ for a ≥ 0."""
    if a < 2 or n == 1:
        return a
    if n == 2:
        return isqrt(a)
    x = 1 << -(-a.bit_length() // n)
    while True:
        y = ((n - 1) * x + a // x ** (n - 1)) // n
        if y >= x:
            return x
        x = y


def exact_root(x: Fraction, n: int) -> Fraction | None:
    """x^(1/n) when it is rational, else None (x > 0)."""
    p, q = _iroot(x.numerator, n), _iroot(x.denominator, n)
    if p**n == x.numerator and q**n == x.denominator:
        return Fraction(p, q)
    return None


def _to_iv(x: Fraction):
    return iv.mpf(x.numerator) / x.denominator


def _endpoints(value) -> Interval:
    lower, upper = value._mpi_
    return Fraction(*to_rational(lower)), Fraction(*to_rational(upper))


def _enclose(compute: Callable[[], object]) -> Interval:
    previous = iv.dps
    iv.dps = config.BOUND_PRECISION + GUARD_DIGITS
    try:
        return _endpoints(compute())
    finally:
        iv.dps = previous


def _decimal(x: Fraction) -> str:
    with mpmath.workdps(config.BOUND_PRECISION):
        return mpmath.nstr(mpmath.mpf(x.numerator) / x.denominator, config.BOUND_PRECISION)


def _exact(x: Fraction) -> BoundValue:
    return BoundValue(exact=x, lower=x, upper=x, decimal=_decimal(x))


def _monotone(
    f: Callable[[Fraction], Fraction], inner: Interval, increasing: bool
) -> BoundValue:
    low, high = (f(inner[0]), f(inner[1])) if increasing else (f(inner[1]), f(inner[0]))
    return BoundValue(lower=low, upper=high, decimal=_decimal((low + high) / 2))


def _sqrt(x: Fraction) -> Interval:
    root = exact_root(x, 2)
    if root is not None:
        return root, root
    return _enclose(lambda: iv.sqrt(_to_iv(x)))


def bresler_eq1(l: int) -> BoundValue:
    """(3/2)(1 − 1/(4L − 2⌊L/2⌋ − 1)), the three-user value."""
    return _exact(Fraction(3, 2) * (1 - Fraction(1, 4 * l - 2 * (l // 2) - 1)))


def cj_eq2(k: int, l: int, c: Fraction = Fraction(1)) -> BoundValue:
    """(K/2)(1 − C·N/(L/2)^(1/N)) with N = (K−1)(K−2) − 1."""
    n = (k - 1) * (k - 2) - 1
    base = Fraction(l, 2)

    def value(r: Fraction) -> Fraction:
        return Fraction(k, 2) * (1 - c * n / r)

    root = exact_root(base, n)
    if root is not None:
        return _exact(value(root))
    inner = _enclose(lambda: iv.exp(iv.ln(_to_iv(base)) / n))
    return _monotone(value, inner, increasing=c > 0)


def _sqrt_bound(k: int, l: int, constant: int) -> BoundValue:
    def value(s: Fraction) -> Fraction:
        return Fraction(k, 2) * (1 - 1 / (constant * s))

    inner = _sqrt(Fraction(l))
    if inner[0] == inner[1]:
        return _exact(value(inner[0]))
    return _monotone(value, inner, increasing=True)


def thm1(k: int, l: int) -> BoundValue:
    """(K/2)(1 − 1/(11√L)), fast fading."""
    return _sqrt_bound(k, l, 11)


def thm2(k: int, l: int) -> BoundValue:
    """(K/2)(1 − 1/(20√L)), block fading."""
    return _sqrt_bound(k, l, 20)


def thm3(k: int, l: int) -> BoundValue:
    """(K/2)(1 − 2⁻¹⁷·min{L^(−1/4), 2^((K−2)(K−3)/4)/√L})."""
    m = (k - 2) * (k - 3)

    def value(x: Fraction) -> Fraction:
        return Fraction(k, 2) * (1 - Fraction(1, 2**17) * x)

    fourth = exact_root(Fraction(l), 4)
    spread = exact_root(Fraction(2**m), 4)
    root_l = exact_root(Fraction(l), 2)
    if fourth is not None and spread is not None and root_l is not None:
        return _exact(value(min(1 / fourth, spread / root_l)))
    first = _enclose(lambda: 1 / iv.sqrt(iv.sqrt(_to_iv(Fraction(l)))))
    second = _enclose(lambda: iv.sqrt(iv.sqrt(iv.mpf(2**m))) / iv.sqrt(iv.mpf(l)))
    inner = (min(first[0], second[0]), min(first[1], second[1]))
    return _monotone(value, inner, increasing=False)


def thm4_l_min(eps: Fraction) -> BoundValue:
    """L ≥ ε⁻²/121."""
    return _exact(1 / (eps**2 * 121))


def thm5_l_min(eps: Fraction) -> BoundValue:
    """L ≥ ε⁻²/400."""
    return _exact(1 / (eps**2 * 400))


def thm6_l_min(eps: Fraction, m: int) -> BoundValue:
    """L ≥ 2⁻³⁴ ε⁻² min{2^(M/2), ε⁻²}; M = (K−2)(K−3) is even."""
    inverse_square = 1 / eps**2
    return _exact(Fraction(1, 2**34) * inverse_square * min(Fraction(2 ** (m // 2)), inverse_square))


def eval_bounds(
    k: int,
    l: int,
    t: int = 1,
    eps: Fraction | int | str | None = None,
    c_for_eq2: Fraction | int | str = 1,
) -> BoundTable:
    """Evaluate every bound for (K, L, T); the width bounds need K ≥ 4, the L_min rows need ε > 0.

    Raises:
        InputError: If k < 3, l < 1, t < 1, C ≤ 0 or ε ≤ 0
    """
    if k < 3 or l < 1 or t < 1:
        raise InputError(f"bounds need k ≥ 3, l ≥ 1, t ≥ 1; got k={k}, l={l}, t={t}")
    c = Fraction(c_for_eq2)
    if c <= 0:
        raise InputError(f"the constant C must be positive, got {c}")
    m = (k - 2) * (k - 3)
    fields: dict[str, object] = {}
    if k >= 4:
        fields |= {"thm1": thm1(k, l), "thm2": thm2(k, l), "thm3": thm3(k, l)}
    else:
        logger.debug("Width bounds not applicable for k=%s", k)
    epsilon = None
    if eps is not None:
        epsilon = Fraction(eps)
        if epsilon <= 0:
            raise InputError(f"eps must be positive, got {epsilon}")
        fields |= {
            "thm4_l_min": thm4_l_min(epsilon),
            "thm5_l_min": thm5_l_min(epsilon),
            "thm6_l_min": thm6_l_min(epsilon, m),
        }
    return BoundTable(
        k=k,
        l=l,
        t=t,
        m=m,
        eps=epsilon,
        c=c,
        cj_n=(k - 1) * (k - 2) - 1,
        bresler_eq1=bresler_eq1(l),
        cj_eq2=cj_eq2(k, l, c),
        **fields,
    )


def applicable_bounds(table: BoundTable) -> dict[str, BoundValue]:
    """Upper bounds a measured DoF must respect: the three-user value for K = 3 at
    T = 1 and the width bounds at K ≥ 4 (thm1 only for fast fading)."""
    bounds: dict[str, BoundValue] = {}
    if table.k == 3 and table.t == 1:
        bounds["bresler_eq1"] = table.bresler_eq1
    if table.thm1 is not None and table.t == 1:
        bounds["thm1"] = table.thm1
    if table.thm2 is not None:
        bounds["thm2"] = table.thm2
    if table.thm3 is not None:
        bounds["thm3"] = table.thm3
    return bounds


def bound_consistency(report: VerifyReport, table: BoundTable) -> dict[str, bool]:
    """Per-bound verdict for a feasible scheme; a violation is logged with the seed."""
    verdicts = {name: bound.admits(report.dof) for name, bound in applicable_bounds(table).items()}
    for name, ok in verdicts.items():
        if not ok:
            logger.error(
                "DoF %s exceeds %s for k=%s, l=%s, t=%s (seed=%s)",
                report.dof, name, table.k, table.l, table.t, report.seed,
            )
    return verdicts
