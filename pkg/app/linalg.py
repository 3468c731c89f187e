"""Integer Gauss-Jordan elimination over the rationals.

Rows are cleared of denominators on entry and kept primitive (gcd of the
entries equal to one) after every elimination step, so entries stay as small
as the row space allows. Callers get back either the rank or the reduced
row-echelon basis with pivot entries normalized to 1.
"""

from collections.abc import Iterable, Sequence
from fractions import Fraction
from math import gcd, lcm

type Vector = tuple[Fraction, ...]


def _primitive(row: list[int]) -> list[int]:
    g = gcd(*row)
    if g > 1:
        return [a // g for a in row]
    return row


def integer_row(row: Sequence[Fraction | int]) -> list[int]:
    """Scale a rational row to a primitive integer row with the same span."""
    values = [Fraction(a) for a in row]
    denominator = lcm(*(a.denominator for a in values)) if values else 1
    return _primitive([a.numerator * (denominator // a.denominator) for a in values])


def _eliminate(
    rows: Iterable[Sequence[Fraction | int]], ncols: int, *, reduce_above: bool
) -> tuple[list[int], list[list[int]]]:
    work = [r for r in (integer_row(row) for row in rows) if any(r)]
    pivots: list[int] = []
    rank = 0
    for col in range(ncols):
        if rank == len(work):
            break
        pivot_index = next((i for i in range(rank, len(work)) if work[i][col]), None)
        if pivot_index is None:
            continue
        work[rank], work[pivot_index] = work[pivot_index], work[rank]
        pivot_row = work[rank]
        p = pivot_row[col]
        start = 0 if reduce_above else rank + 1
        for i in range(start, len(work)):
            if i == rank:
                continue
            f = work[i][col]
            if f:
                work[i] = _primitive([p * a - f * b for a, b in zip(work[i], pivot_row)])
        pivots.append(col)
        rank += 1
        # Rows cancelled to zero carry no information.
        work = work[:rank] + [r for r in work[rank:] if any(r)]
    return pivots, work[:rank]


def rank(rows: Iterable[Sequence[Fraction | int]], ncols: int) -> int:
    pivots, _ = _eliminate(rows, ncols, reduce_above=False)
    return len(pivots)


def rref(rows: Iterable[Sequence[Fraction | int]], ncols: int) -> tuple[Vector, ...]:
    """Reduced row-echelon basis of the row span, one tuple of Fractions per row."""
    pivots, reduced = _eliminate(rows, ncols, reduce_above=True)
    return tuple(
        tuple(Fraction(a, row[col]) for a in row)
        for col, row in zip(pivots, reduced)
    )
