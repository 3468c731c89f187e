"""Extension and contraction operators and the widths built on them.

e_T V = V + TV and c_T V = V ∩ TV; iterated forms are computed one image at
a time and stop early once a fixed point is reached.
"""

from collections.abc import Iterable, Sequence
from fractions import Fraction
from math import ceil
from typing import Literal

from cachetools import LRUCache, cached

from app.channel import TFamily
from app.config import config
from app.errors import InputError, InvariantViolationError, PreconditionError
from app.logger import get_logger
from app.models import SecondOrderReport, WalkResult, WalkStep, WidthReport
from app.sparsity import n_sparsity
from app.subspace import (
    DiagMap,
    Subspace,
    apply,
    as_vector,
    canonicalize,
    intersect,
    subspace_sum,
)

logger = get_logger(__name__)

type Mode = Literal["extension", "contraction"]


def _check_steps(n: int) -> None:
    if n < 0:
        raise InputError(f"number of steps must be nonnegative, got {n}")


def extend(v: Subspace, m: DiagMap, n: int = 1) -> Subspace:
    """e_T^n V = V + TV + ... + TⁿV."""
    _check_steps(n)
    current = v
    for _ in range(n):
        following = subspace_sum(v, apply(m, current))
        if following == current:
            break
        current = following
    return current


def contract(v: Subspace, m: DiagMap, n: int = 1) -> Subspace:
    """c_T^n V = V ∩ TV ∩ ... ∩ TⁿV."""
    _check_steps(n)
    current = v
    for _ in range(n):
        following = intersect(v, apply(m, current))
        if following == current:
            break
        current = following
    return current


@cached(cache=LRUCache(maxsize=8192))
def alignment_width(v: Subspace, m: DiagMap) -> WidthReport:
    """Δ_T V, computed both ways and cross-checked.

    Raises:
        InvariantViolationError: If dim e_T V − dim V != dim V − dim c_T V
    """
    extended = extend(v, m)
    contracted = contract(v, m)
    grown = extended.dim - v.dim
    shrunk = v.dim - contracted.dim
    if grown != shrunk:
        raise InvariantViolationError(
            f"extension grew by {grown} but contraction shrank by {shrunk}"
        )
    return WidthReport(
        width=grown,
        dim_before=v.dim,
        dim_after_extend=extended.dim,
        dim_after_contract=contracted.dim,
    )


def second_order(v: Subspace, m1: DiagMap, m2: DiagMap) -> SecondOrderReport:
    """Change of Δ_{T1} under one extension (ext2) or contraction (con2) by T2.

    Raises:
        InvariantViolationError: If ext2 > con2
    """
    base = alignment_width(v, m1).width
    ext2 = alignment_width(extend(v, m2), m1).width - base
    con2 = base - alignment_width(contract(v, m2), m1).width
    if ext2 > con2:
        raise InvariantViolationError(
            f"second-order extension width {ext2} exceeds contraction width {con2}"
        )
    return SecondOrderReport(ext2=ext2, con2=con2)


def _members(family: TFamily | Sequence[DiagMap]) -> tuple[DiagMap, ...]:
    members = family.members if isinstance(family, TFamily) else tuple(family)
    if not members:
        raise InputError("the family of maps is empty")
    return members


def average_width(v: Subspace, family: TFamily | Sequence[DiagMap]) -> Fraction:
    members = _members(family)
    return Fraction(sum(alignment_width(v, m).width for m in members), len(members))


def grid_span(
    x: Sequence[Fraction | int | str], maps: Sequence[DiagMap], ns: Sequence[int]
) -> Subspace:
    """span{∏ T_i^{α_i} x : 0 ≤ α_i ≤ n_i}."""
    if len(maps) != len(ns):
        raise InputError(f"{len(maps)} maps but {len(ns)} exponent ranges")
    vector = as_vector(x)
    span = canonicalize([vector], len(vector))
    for m, n in zip(maps, ns):
        span = extend(span, m, n)
    return span


def _average_second_order(
    v: Subspace, members: Sequence[DiagMap], pivot: DiagMap
) -> tuple[Fraction, Fraction]:
    """Averages over the family of Δ²_{T_j,T_k} and ∇²_{T_j,T_k} for T_k = pivot."""
    reports = [second_order(v, m, pivot) for m in members]
    total = len(members)
    return (
        Fraction(sum(r.ext2 for r in reports), total),
        Fraction(sum(r.con2 for r in reports), total),
    )


def adaptive_walk(
    w: Subspace,
    family: TFamily,
    s: Iterable[int],
    a: Sequence[Fraction | int | str],
    mode: Mode = "extension",
    check_sparsity: bool = True,
) -> WalkResult:
    """Extend (or contract) W along low-width family members while the
    average width stays under the thresholds a_1 < ... < a_n.

    At each step the smallest index k ∈ s with Δ_{T_k} ≤ 2·Δ̄ is chosen. If
    one more step along T_k would push the average width past the next
    threshold, the opposite operator is applied once and the walk stops;
    otherwise the step is taken and k leaves s.

    Args:
        w: Starting subspace W
        family: The maps T_1..T_M
        s: 1-based indices into the family that may be used
        a: Strictly increasing thresholds, a_1 > Δ̄W
        mode: "extension" or "contraction"
        check_sparsity: Also verify the sparsity guarantee (skipped above SPARSITY_CAP)

    Returns:
        The resulting subspace with its step count, δ and guarantee checks

    Raises:
        PreconditionError: If the threshold or subset hypotheses fail
        InvariantViolationError: If no index is eligible
    """
    members = _members(family)
    m = len(members)
    remaining = sorted(set(s))
    if any(not 1 <= k <= m for k in remaining):
        raise InputError(f"indices {remaining} out of range 1..{m}")
    thresholds = [Fraction(x) for x in as_vector(a)]
    n = len(thresholds)
    if n > len(remaining) - Fraction(m, 2):
        raise PreconditionError(
            f"n = {n} exceeds |s| − M/2 = {len(remaining) - Fraction(m, 2)}"
        )
    if any(x >= y for x, y in zip(thresholds, thresholds[1:])):
        raise PreconditionError("thresholds must be strictly increasing")
    start_average = average_width(w, members)
    if n and thresholds[0] <= start_average:
        raise PreconditionError(
            f"a_1 = {thresholds[0]} must exceed the average width {start_average}"
        )

    forward, backward = (
        (extend, contract) if mode == "extension" else (contract, extend)
    )
    current = w
    steps: list[WalkStep] = []
    broke = False
    for threshold in thresholds:
        average = average_width(current, members)
        eligible = [
            k for k in remaining if alignment_width(current, members[k - 1]).width <= 2 * average
        ]
        if not eligible:
            raise InvariantViolationError(
                f"no eligible index among {remaining} at average width {average}"
            )
        k = eligible[0]
        pivot = members[k - 1]
        ext2, con2 = _average_second_order(current, members, pivot)
        growth = ext2 if mode == "extension" else -con2
        label = family.labels[k - 1]
        if growth > threshold - average:
            current = backward(current, pivot)
            steps.append(WalkStep(operator=backward.__name__, index=k, label=label))
            broke = True
            break
        current = forward(current, pivot)
        steps.append(WalkStep(operator=forward.__name__, index=k, label=label))
        remaining.remove(k)

    n_tilde = len(steps)
    history = [start_average] + thresholds
    delta = 2 * sum(history[:n_tilde], Fraction(0))
    final_average = average_width(current, members)
    if broke:
        case_tag = "contraction_break" if mode == "extension" else "extension_break"
        bound = 2 * history[n_tilde - 1] - history[n_tilde]
    else:
        case_tag = "full_extension" if mode == "extension" else "full_contraction"
        bound = history[n]

    sparsity_guarantee = None
    l, t = members[0].l, members[0].t
    if check_sparsity and t * l <= config.SPARSITY_CAP:
        sparsity_guarantee = all(
            n_sparsity(current, ceil(big_n + delta), l, t).at_least(
                n_sparsity(w, big_n, l, t).value
            )
            for big_n in range(1, w.dim + 1)
            if ceil(big_n + delta) >= 1
        )

    result = WalkResult(
        w_tilde=current,
        n_tilde=n_tilde,
        delta=delta,
        case_tag=case_tag,
        op_sequence=tuple(steps),
        mode=mode,
        average_width=final_average,
        average_width_bound=bound,
        dim_guarantee=abs(current.dim - w.dim) <= delta,
        width_guarantee=final_average <= bound,
        sparsity_guarantee=sparsity_guarantee,
    )
    if not (result.dim_guarantee and result.width_guarantee and sparsity_guarantee is not False):
        logger.error("Adaptive walk guarantee failed: %s", result.model_dump_json())
    return result
