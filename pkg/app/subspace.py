"""Exact subspaces of Q^n and the diagonal maps acting on them.

A Subspace is stored by its reduced row-echelon basis, so two values are equal
exactly when they describe the same subspace. All operations return new
canonical values; nothing here mutates its inputs.
"""

from collections.abc import Iterable, Sequence
from fractions import Fraction
from typing import Annotated, Self

from pydantic import (
    BaseModel,
    ConfigDict,
    PlainSerializer,
    PlainValidator,
    PositiveInt,
    model_validator,
)

from app.config import config
from app.errors import CapacityError, InputError
from app.linalg import Vector, rref


def parse_rational(value: object) -> Fraction:
    """Parse "p/q", "p" or an int into a Fraction. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or not isinstance(value, int | str):
        raise ValueError(f"expected an integer or a 'p/q' string, got {value!r}")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"invalid rational {value!r}") from e


Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(str, return_type=str),
]


def as_vector(x: Iterable[Fraction | int | str]) -> Vector:
    return tuple(parse_rational(a) for a in x)


def support(x: Sequence[Fraction]) -> tuple[int, ...]:
    """0-based indices of the nonzero entries of x."""
    return tuple(i for i, a in enumerate(x) if a)


def weight(x: Sequence[Fraction]) -> int:
    """Number of nonzero entries, ‖x‖₀."""
    return sum(1 for a in x if a)


class Subspace(BaseModel):
    model_config = ConfigDict(frozen=True)

    ambient_dim: PositiveInt
    basis: tuple[tuple[Rational, ...], ...] = ()

    @model_validator(mode="after")
    def _check_canonical(self) -> Self:
        if any(len(row) != self.ambient_dim for row in self.basis):
            raise ValueError("basis rows must have length ambient_dim")
        if rref(self.basis, self.ambient_dim) != self.basis:
            raise ValueError("basis is not in reduced row-echelon form")
        return self

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(i for i, a in enumerate(row) if a) for row in self.basis)

    @property
    def is_zero(self) -> bool:
        return not self.basis

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def __add__(self, other: "Subspace") -> "Subspace":
        return subspace_sum(self, other)

    def __and__(self, other: "Subspace") -> "Subspace":
        return intersect(self, other)

    def __contains__(self, x: Sequence[Fraction]) -> bool:
        return contains(self, x)


def _check_ambient(ambient_dim: int) -> None:
    if ambient_dim < 1:
        raise InputError(f"ambient dimension must be positive, got {ambient_dim}")
    if ambient_dim > config.MAX_AMBIENT_DIM:
        raise CapacityError(
            f"ambient dimension {ambient_dim} exceeds the cap of {config.MAX_AMBIENT_DIM} "
            "(raise MAX_AMBIENT_DIM to allow it)"
        )


def _from_rref(basis: tuple[Vector, ...], ambient_dim: int) -> Subspace:
    return Subspace.model_construct(ambient_dim=ambient_dim, basis=basis)


def canonicalize(rows: Iterable[Sequence[Fraction | int | str]], ambient_dim: int) -> Subspace:
    """Return the subspace spanned by rows, in canonical form.

    Raises:
        InputError: If a row does not have length ambient_dim
        CapacityError: If ambient_dim exceeds MAX_AMBIENT_DIM
    """
    _check_ambient(ambient_dim)
    vectors = [as_vector(row) for row in rows]
    for row in vectors:
        if len(row) != ambient_dim:
            raise InputError(
                f"row of length {len(row)} in a space of dimension {ambient_dim}"
            )
    return _from_rref(rref(vectors, ambient_dim), ambient_dim)


def zero_subspace(ambient_dim: int) -> Subspace:
    _check_ambient(ambient_dim)
    return _from_rref((), ambient_dim)


def full_space(ambient_dim: int) -> Subspace:
    return coordinate_subspace(range(1, ambient_dim + 1), ambient_dim)


def coordinate_subspace(s: Iterable[int], ambient_dim: int) -> Subspace:
    """R^S for a set S of 1-based coordinates."""
    _check_ambient(ambient_dim)
    indices = sorted(set(s))
    if indices and (indices[0] < 1 or indices[-1] > ambient_dim):
        raise InputError(f"coordinates {indices} out of range 1..{ambient_dim}")
    basis = tuple(
        tuple(Fraction(1) if c == i - 1 else Fraction(0) for c in range(ambient_dim))
        for i in indices
    )
    return _from_rref(basis, ambient_dim)


def _check_same_ambient(v: Subspace, w: Subspace) -> None:
    if v.ambient_dim != w.ambient_dim:
        raise InputError(
            f"ambient dimension mismatch: {v.ambient_dim} != {w.ambient_dim}"
        )


def subspace_sum(v: Subspace, w: Subspace) -> Subspace:
    _check_same_ambient(v, w)
    if w.is_zero or v.is_full:
        return v
    if v.is_zero or w.is_full:
        return w
    return _from_rref(rref(v.basis + w.basis, v.ambient_dim), v.ambient_dim)


def intersect(v: Subspace, w: Subspace) -> Subspace:
    """V ∩ W by the Zassenhaus block elimination of [V V; W 0]."""
    _check_same_ambient(v, w)
    n = v.ambient_dim
    if v.is_zero or w.is_full:
        return v
    if w.is_zero or v.is_full:
        return w
    zeros = (Fraction(0),) * n
    stacked = [row + row for row in v.basis] + [row + zeros for row in w.basis]
    reduced = rref(stacked, 2 * n)
    basis = tuple(row[n:] for row in reduced if not any(row[:n]))
    return _from_rref(basis, n)


def contains(v: Subspace, x: Sequence[Fraction | int | str]) -> bool:
    vector = list(as_vector(x))
    if len(vector) != v.ambient_dim:
        raise InputError(
            f"vector of length {len(vector)} in a space of dimension {v.ambient_dim}"
        )
    for pivot, row in zip(v.pivots, v.basis):
        coefficient = vector[pivot]
        if coefficient:
            vector = [a - coefficient * b for a, b in zip(vector, row)]
    return not any(vector)


def is_subspace(v: Subspace, w: Subspace) -> bool:
    """True iff V ⊆ W."""
    _check_same_ambient(v, w)
    if v.dim > w.dim:
        return False
    return all(contains(w, row) for row in v.basis)


class DiagMap(BaseModel):
    """The invertible map I_T ⊗ diag(entries) on Q^(T·L)."""

    model_config = ConfigDict(frozen=True)

    l: PositiveInt
    t: PositiveInt = 1
    entries: tuple[Rational, ...]

    @model_validator(mode="after")
    def _check_entries(self) -> Self:
        if len(self.entries) != self.l:
            raise ValueError(f"expected {self.l} entries, got {len(self.entries)}")
        if any(a == 0 for a in self.entries):
            raise ValueError("diagonal entries must be nonzero")
        return self

    @classmethod
    def identity(cls, l: int, t: int = 1) -> "DiagMap":
        return block_lift([Fraction(1)] * l, t)

    @property
    def dim(self) -> int:
        return self.t * self.l

    @property
    def diagonal(self) -> Vector:
        return self.entries * self.t

    @property
    def is_identity(self) -> bool:
        return all(a == 1 for a in self.entries)

    def inverse(self) -> "DiagMap":
        return _diag(self.l, self.t, tuple(1 / a for a in self.entries))

    def power(self, n: int) -> "DiagMap":
        return _diag(self.l, self.t, tuple(a**n for a in self.entries))

    def compose(self, other: "DiagMap") -> "DiagMap":
        """The product self·other (diagonal maps commute)."""
        if (self.l, self.t) != (other.l, other.t):
            raise InputError(
                f"cannot compose maps of shape (l={self.l}, t={self.t}) "
                f"and (l={other.l}, t={other.t})"
            )
        return _diag(
            self.l, self.t, tuple(a * b for a, b in zip(self.entries, other.entries))
        )


def _diag(l: int, t: int, entries: tuple[Fraction, ...]) -> DiagMap:
    return DiagMap.model_construct(l=l, t=t, entries=entries)


def block_lift(entries: Sequence[Fraction | int | str], t: int) -> DiagMap:
    """I_T ⊗ diag(entries).

    Raises:
        InputError: If an entry is zero or t < 1
    """
    values = as_vector(entries)
    if not values:
        raise InputError("a diagonal map needs at least one entry")
    if t < 1:
        raise InputError(f"coherence length must be positive, got {t}")
    if any(a == 0 for a in values):
        raise InputError("diagonal entries must be nonzero")
    return _diag(len(values), t, values)


def product(maps: Iterable[DiagMap], exponents: Iterable[int]) -> DiagMap:
    """∏ maps[i]^exponents[i]; the maps must share a shape."""
    result: DiagMap | None = None
    for m, e in zip(maps, exponents, strict=True):
        factor = m.power(e)
        result = factor if result is None else result.compose(factor)
    if result is None:
        raise InputError("product of an empty list of maps")
    return result


def apply_vector(m: DiagMap, x: Sequence[Fraction]) -> Vector:
    if len(x) != m.dim:
        raise InputError(f"map acts on dimension {m.dim}, vector has length {len(x)}")
    return tuple(a * b for a, b in zip(m.diagonal, x))


def apply(m: DiagMap, v: Subspace) -> Subspace:
    """Image MV. A diagonal map keeps pivot positions, so only pivots need rescaling."""
    if m.dim != v.ambient_dim:
        raise InputError(
            f"map acts on dimension {m.dim}, subspace lives in {v.ambient_dim}"
        )
    diagonal = m.diagonal
    basis = []
    for pivot, row in zip(v.pivots, v.basis):
        scale = 1 / diagonal[pivot]
        basis.append(tuple(a * d * scale for a, d in zip(row, diagonal)))
    return _from_rref(tuple(basis), v.ambient_dim)


class BlockProjection(BaseModel):
    """P_k: the T coordinates {L(i−1)+k : i = 1..T} belonging to channel use k."""

    model_config = ConfigDict(frozen=True)

    k: PositiveInt
    l: PositiveInt
    t: PositiveInt = 1

    @model_validator(mode="after")
    def _check_k(self) -> Self:
        if self.k > self.l:
            raise ValueError(f"k={self.k} out of range 1..{self.l}")
        return self

    @property
    def coordinates(self) -> tuple[int, ...]:
        return tuple(self.l * i + self.k for i in range(self.t))

    def project_vector(self, x: Sequence[Fraction]) -> Vector:
        return tuple(x[c - 1] for c in self.coordinates)

    def project(self, v: Subspace) -> Subspace:
        if v.ambient_dim != self.t * self.l:
            raise InputError(
                f"projection for dimension {self.t * self.l} applied to {v.ambient_dim}"
            )
        return canonicalize((self.project_vector(row) for row in v.basis), self.t)

    def lift(self, w: Subspace) -> Subspace:
        """P_kᵀ W̃: embed a subspace of Q^T into the coordinates of period k."""
        if w.ambient_dim != self.t:
            raise InputError(f"expected a subspace of Q^{self.t}, got Q^{w.ambient_dim}")
        n = self.t * self.l
        rows = []
        for row in w.basis:
            lifted = [Fraction(0)] * n
            for c, a in zip(self.coordinates, row):
                lifted[c - 1] = a
            rows.append(lifted)
        return canonicalize(rows, n)
