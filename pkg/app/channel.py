"""Channel instances, cross-ratio maps and the linear independence condition.

Users, receivers and coherence periods are 1-based everywhere in this module,
matching the H_ij / T_ijk notation; vector coordinates stay 0-based.
"""

import random
from collections.abc import Iterable, Sequence
from fractions import Fraction
from itertools import combinations, product
from typing import Self

from cachetools import LRUCache, cached
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from app.config import config
from app.errors import (
    CapacityError,
    DegenerateInstanceError,
    InputError,
    PreconditionError,
    UnsupportedError,
)
from app.linalg import rank
from app.logger import get_logger
from app.sparsity import support_dim
from app.subspace import (
    BlockProjection,
    DiagMap,
    Rational,
    Subspace,
    apply,
    apply_vector,
    as_vector,
    block_lift,
    product as map_product,
    weight,
)

logger = get_logger(__name__)

type ExponentVector = tuple[int, ...]


class ChannelInstance(BaseModel):
    """All K² diagonal channels H_ij of one (K, L, T) draw.

    h[i][j] holds the L per-period coefficients of H_(i+1)(j+1): receiver i+1,
    transmitter j+1.
    """

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=2)
    l: PositiveInt
    t: PositiveInt = 1
    bits: PositiveInt
    seed: int
    h: tuple[tuple[tuple[Rational, ...], ...], ...]

    @model_validator(mode="after")
    def _check_shape(self) -> Self:
        if len(self.h) != self.k or any(len(row) != self.k for row in self.h):
            raise ValueError(f"h must be a {self.k}x{self.k} array")
        for row in self.h:
            for coefficients in row:
                if len(coefficients) != self.l:
                    raise ValueError(f"each channel needs {self.l} coefficients")
                if any(a == 0 for a in coefficients):
                    raise ValueError("channel coefficients must be nonzero")
        return self

    @property
    def dim(self) -> int:
        return self.t * self.l

    def channel(self, i: int, j: int) -> DiagMap:
        """H_ij, the channel from transmitter j to receiver i."""
        self._check_user(i)
        self._check_user(j)
        return block_lift(self.h[i - 1][j - 1], self.t)

    def _check_user(self, i: int) -> None:
        if not 1 <= i <= self.k:
            raise InputError(f"user index {i} out of range 1..{self.k}")


class TFamily(BaseModel):
    """The cross-ratio maps T_(user)jk, ordered lexicographically by (j, k)."""

    model_config = ConfigDict(frozen=True)

    user: int
    labels: tuple[tuple[int, int], ...] = ()
    members: tuple[DiagMap, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _default_labels(cls, data: object) -> object:
        # Hand-built families are labelled (0, position).
        if isinstance(data, dict) and not data.get("labels"):
            count = len(data.get("members", ()))
            data = {**data, "labels": tuple((0, a) for a in range(1, count + 1))}
        return data

    @model_validator(mode="after")
    def _check_labels(self) -> Self:
        if len(self.labels) != len(self.members):
            raise ValueError("every family member needs a label")
        return self

    @property
    def m(self) -> int:
        return len(self.members)


def sample_instance(
    k: int, l: int, t: int = 1, bits: int | None = None, seed: int = 0
) -> ChannelInstance:
    """Draw every coefficient uniformly from {1..2^bits} with a seeded generator.

    Coefficients are drawn in (receiver, transmitter, period) order, so the
    instance is a pure function of its arguments.

    Raises:
        UnsupportedError: If k < 3
        InputError: If l, t or bits are out of range
        CapacityError: If t·l exceeds MAX_AMBIENT_DIM
    """
    bits = config.DEFAULT_BITS if bits is None else bits
    if k < 3:
        raise UnsupportedError(f"k={k}: the alignment machinery needs at least 3 users")
    if l < 1 or t < 1:
        raise InputError(f"l and t must be positive, got l={l}, t={t}")
    if bits < 4:
        raise InputError(f"bits must be at least 4, got {bits}")
    if t * l > config.MAX_AMBIENT_DIM:
        raise CapacityError(
            f"t·l = {t * l} exceeds the cap of {config.MAX_AMBIENT_DIM}"
        )
    rng = random.Random(seed)
    top = 2**bits
    h = tuple(
        tuple(tuple(Fraction(rng.randint(1, top)) for _ in range(l)) for _ in range(k))
        for _ in range(k)
    )
    return ChannelInstance(k=k, l=l, t=t, bits=bits, seed=seed, h=h)


@cached(cache=LRUCache(maxsize=4096))
def derive_t(instance: ChannelInstance, i: int, j: int, k: int) -> DiagMap:
    """T_ijk = H_1i⁻¹ H_1k H_jk⁻¹ H_ji.

    Raises:
        InputError: If i, j, k are not distinct, include user 1 or are out of range
    """
    if len({i, j, k}) != 3 or 1 in (i, j, k):
        raise InputError(f"T_ijk needs distinct i, j, k other than 1, got ({i}, {j}, {k})")
    for index in (i, j, k):
        instance._check_user(index)
    h = instance.h
    entries = tuple(
        h[0][k - 1][p] * h[j - 1][i - 1][p] / (h[0][i - 1][p] * h[j - 1][k - 1][p])
        for p in range(instance.l)
    )
    return block_lift(entries, instance.t)


def t_family(instance: ChannelInstance, user: int = 2) -> TFamily:
    """{T_2jk : j, k ∈ 3..K, j ≠ k}, of size (K−2)(K−3).

    Raises:
        UnsupportedError: If user != 2
    """
    if user != 2:
        raise UnsupportedError("only the user-2 family is exposed")
    labels = tuple(
        (j, k) for j in range(3, instance.k + 1) for k in range(3, instance.k + 1) if j != k
    )
    return TFamily(
        user=user,
        labels=labels,
        members=tuple(derive_t(instance, user, j, k) for j, k in labels),
    )


def _exponent_set(maps: Sequence[DiagMap], a: Iterable[Sequence[int]]) -> list[ExponentVector]:
    exponents = sorted({tuple(x) for x in a})
    if any(len(x) != len(maps) for x in exponents):
        raise InputError(f"exponent vectors must have length {len(maps)}")
    if len(exponents) > config.EXPONENT_SET_CAP:
        raise CapacityError(
            f"|A| = {len(exponents)} exceeds the cap of {config.EXPONENT_SET_CAP}"
        )
    shapes = {(m.l, m.t) for m in maps}
    if len(shapes) > 1:
        raise InputError("maps must share the same (l, t) shape")
    return exponents


def monomial(maps: Sequence[DiagMap], x: ExponentVector) -> DiagMap:
    return map_product(maps, x)


def check_lin_indep(
    maps: Sequence[DiagMap], a: Iterable[Sequence[int]], v: Sequence[Fraction | int | str]
) -> bool:
    """Decide whether {∏ T_i^{x_i} v : x ∈ A} is linearly independent.

    For t > 1 every monomial acts as one scalar per coherence period, so the
    images span at most as many dimensions as v has nonzero periods; the test
    then asks for rank min(|A|, nonzero periods).

    Raises:
        PreconditionError: If ‖v‖₀ < |A| (t = 1) or |A| > L (t > 1)
        CapacityError: If |A| exceeds EXPONENT_SET_CAP
    """
    if not maps:
        raise InputError("at least one map is required")
    exponents = _exponent_set(maps, a)
    vector = as_vector(v)
    l, t = maps[0].l, maps[0].t
    if len(vector) != l * t:
        raise InputError(f"vector of length {len(vector)} for maps on dimension {l * t}")
    if t == 1:
        if weight(vector) < len(exponents):
            raise PreconditionError(
                f"‖v‖₀ = {weight(vector)} < |A| = {len(exponents)}: independence is impossible"
            )
        expected = len(exponents)
    else:
        if len(exponents) > l:
            raise PreconditionError(f"|A| = {len(exponents)} exceeds L = {l}")
        periods = sum(
            1 for p in range(1, l + 1) if any(BlockProjection(k=p, l=l, t=t).project_vector(vector))
        )
        expected = min(len(exponents), periods)
    images = [apply_vector(monomial(maps, x), vector) for x in exponents]
    return rank(images, l * t) == expected


def check_block_lin_indep(
    maps: Sequence[DiagMap], a: Iterable[Sequence[int]], v: Subspace
) -> bool:
    """Decide whether dim Σ_{x∈A} Φ(x)V = sp^(T)(V) for an exponent set of size L.

    Raises:
        PreconditionError: If |A| != L
    """
    if not maps:
        raise InputError("at least one map is required")
    exponents = _exponent_set(maps, a)
    l, t = maps[0].l, maps[0].t
    if v.ambient_dim != l * t:
        raise InputError(f"subspace of Q^{v.ambient_dim} for maps on dimension {l * t}")
    if len(exponents) != l:
        raise PreconditionError(f"the block condition needs |A| = L = {l}, got {len(exponents)}")
    rows = [row for x in exponents for row in apply(monomial(maps, x), v).basis]
    return rank(rows, l * t) == support_dim(v, l, t)


def probe_maps(instance: ChannelInstance) -> tuple[DiagMap, DiagMap]:
    """The pair of maps the genericity probe exercises."""
    family = t_family(instance) if instance.k >= 4 else None
    if family is not None and family.m >= 2:
        return family.members[0], family.members[1]
    return instance.channel(1, 2), instance.channel(1, 3)


def probe_genericity(
    instance: ChannelInstance, max_exponent: int = 2, v: Sequence[Fraction] | None = None
) -> int:
    """Count failing exponent sets A ⊆ {0..max_exponent}² of size min(L, grid).

    Independence of every maximal set implies it for all smaller ones, so
    only maximal sets are tested. Returns the number of failures.
    """
    maps = probe_maps(instance)
    vector = tuple(v) if v is not None else (Fraction(1),) * instance.dim
    grid = list(product(range(max_exponent + 1), repeat=2))
    size = min(instance.l, len(grid), config.EXPONENT_SET_CAP)
    if instance.t == 1:
        size = min(size, weight(vector))
    failures = 0
    for a in combinations(grid, size):
        if not check_lin_indep(maps, a, vector):
            failures += 1
    return failures


def sample_generic_instance(
    k: int, l: int, t: int = 1, bits: int | None = None, seed: int = 0
) -> ChannelInstance:
    """sample_instance, resampled with seed+1 while the genericity probe fails.

    Raises:
        DegenerateInstanceError: If RESAMPLE_LIMIT consecutive seeds are degenerate
    """
    current = seed
    for _ in range(config.RESAMPLE_LIMIT + 1):
        instance = sample_instance(k, l, t, bits, current)
        failures = probe_genericity(instance)
        if not failures:
            return instance
        logger.warning(
            "Degenerate instance (k=%s, l=%s, t=%s, seed=%s): %s independence failures, "
            "resampling with seed %s",
            k, l, t, current, failures, current + 1,
        )
        current += 1
    raise DegenerateInstanceError(
        f"no generic instance within {config.RESAMPLE_LIMIT} resamples", seed=seed
    )
