"""Scheme builders: orthogonal baseline, configured grid-span patterns and
seeded random search."""

import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import batched
from pathlib import Path
from typing import Self

import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator

from app.alignment import grid_span
from app.channel import ChannelInstance, derive_t
from app.config import config
from app.errors import InputError
from app.logger import get_logger
from app.models import Scheme, SearchResult, SearchStats, VerifyReport
from app.subspace import (
    DiagMap,
    Rational,
    Subspace,
    apply_vector,
    canonicalize,
    coordinate_subspace,
)
from app.verify import make_scheme, verify_decoding

logger = get_logger(__name__)

# Restart r of a search draws from Random(seed + r * RESTART_STRIDE).
RESTART_STRIDE = 10007
MAX_REDRAWS = 100


def build_orthogonal_scheme(k: int, l: int, t: int, d_per_user: int) -> Scheme:
    """V_i = coordinates (i−1)·d+1 .. i·d.

    Raises:
        InputError: If k·d exceeds t·l or d is negative
    """
    if d_per_user < 0:
        raise InputError(f"d must be nonnegative, got {d_per_user}")
    if k * d_per_user > t * l:
        raise InputError(f"k·d = {k * d_per_user} exceeds t·l = {t * l}")
    return make_scheme(
        [
            coordinate_subspace(range((i - 1) * d_per_user + 1, i * d_per_user + 1), t * l)
            for i in range(1, k + 1)
        ]
    )


# ============================================================================
# Chain patterns
# ============================================================================


class MapFactor(BaseModel):
    """One factor H_ij^power or T_ijk^power (1-based indices)."""

    h: tuple[int, int] | None = None
    t: tuple[int, int, int] | None = None
    power: int = 1

    @model_validator(mode="after")
    def _one_kind(self) -> Self:
        if (self.h is None) == (self.t is None):
            raise ValueError("a factor names exactly one of h or t")
        return self

    def resolve(self, instance: ChannelInstance) -> DiagMap:
        if self.h is not None:
            return instance.channel(*self.h).power(self.power)
        assert self.t is not None
        return derive_t(instance, *self.t).power(self.power)


class PatternAxis(BaseModel):
    factors: list[MapFactor] = Field(min_length=1)
    steps: int = Field(ge=0)


class UserPattern(BaseModel):
    support: list[int] | None = None
    seed_vector: list[Rational] | None = None
    premap: list[MapFactor] = []
    axes: list[PatternAxis] = []

    @model_validator(mode="after")
    def _one_seed(self) -> Self:
        if self.support is not None and self.seed_vector is not None:
            raise ValueError("give either support or seed_vector, not both")
        return self


class ChainPattern(BaseModel):
    name: str = "pattern"
    description: str = ""
    users: list[UserPattern]


def load_pattern(path: Path | str) -> ChainPattern:
    """Read a YAML chain pattern.

    Raises:
        InputError: If the file is unreadable or malformed
    """
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
        return ChainPattern.model_validate(data)
    except (OSError, yaml.YAMLError, ValidationError) as e:
        raise InputError(f"invalid pattern {path}: {e}") from e


def _product(instance: ChannelInstance, factors: list[MapFactor]) -> DiagMap:
    result = DiagMap.identity(instance.l, instance.t)
    for factor in factors:
        result = result.compose(factor.resolve(instance))
    return result


def _seed_vector(user: UserPattern, dim: int) -> tuple[Fraction, ...]:
    if user.seed_vector is not None:
        if len(user.seed_vector) != dim:
            raise InputError(f"seed vector of length {len(user.seed_vector)}, expected {dim}")
        return tuple(user.seed_vector)
    if user.support is not None:
        # Validates the coordinates.
        indicator = coordinate_subspace(user.support, dim)
        return tuple(sum(column) for column in zip(*indicator.basis)) or (Fraction(0),) * dim
    return (Fraction(1),) * dim


def build_chain_scheme(instance: ChannelInstance, pattern: ChainPattern) -> Scheme:
    """V_i = span{∏_a M_a^{α_a} P x : 0 ≤ α_a ≤ steps_a} for each user's premap P,
    axis maps M_a and seed vector x. Feasibility is not checked here.

    Raises:
        InputError: If the pattern does not fit the instance
    """
    if len(pattern.users) != instance.k:
        raise InputError(f"pattern has {len(pattern.users)} users, instance has {instance.k}")
    subspaces = []
    for user in pattern.users:
        x = apply_vector(_product(instance, user.premap), _seed_vector(user, instance.dim))
        maps = [_product(instance, axis.factors) for axis in user.axes]
        subspaces.append(grid_span(x, maps, [axis.steps for axis in user.axes]))
    return make_scheme(subspaces)


# ============================================================================
# Random search
# ============================================================================


def _random_subspace(rng: random.Random, d: int, dim: int) -> Subspace:
    bound = config.COEFFICIENT_RANGE
    for _ in range(MAX_REDRAWS):
        rows = [[rng.randint(-bound, bound) for _ in range(dim)] for _ in range(d)]
        v = canonicalize(rows, dim)
        if v.dim == d:
            return v
    raise InputError(f"could not draw a rank-{d} basis in {MAX_REDRAWS} attempts")


def _trial(
    instance: ChannelInstance, d: int, seed: int, restart: int
) -> tuple[Scheme, VerifyReport]:
    rng = random.Random(seed + restart * RESTART_STRIDE)
    scheme = make_scheme([_random_subspace(rng, d, instance.dim) for _ in range(instance.k)])
    return scheme, verify_decoding(instance, scheme)


def random_search(
    instance: ChannelInstance, d: int, restarts: int, seed: int, parallel: int = 1
) -> SearchResult:
    """Sample uniform-d schemes until one decodes; restart r uses its own seed.

    The first feasible restart (lowest index) wins and statistics cover the
    restarts up to and including it, whatever the degree of parallelism.

    Raises:
        InputError: If d < 1
    """
    if d < 1:
        raise InputError(f"d must be at least 1, got {d}")
    failures = [0] * instance.k
    if d > instance.dim:
        stats = SearchStats(trials=0, failures_per_receiver=tuple(failures))
        return SearchResult(scheme=None, restart=None, stats=stats)

    trials = 0
    found: tuple[int, Scheme] | None = None
    batch_size = max(parallel, 1)
    executor = ProcessPoolExecutor(max_workers=parallel) if parallel > 1 else None
    try:
        for batch in batched(range(restarts), batch_size):
            if executor is not None:
                outcomes = list(
                    executor.map(
                        _trial,
                        [instance] * len(batch),
                        [d] * len(batch),
                        [seed] * len(batch),
                        batch,
                    )
                )
            else:
                outcomes = [_trial(instance, d, seed, r) for r in batch]
            for restart, (scheme, report) in zip(batch, outcomes):
                trials += 1
                for receiver in report.per_receiver:
                    if receiver.overlap_dim:
                        failures[receiver.receiver - 1] += 1
                if report.feasible:
                    found = (restart, scheme)
                    break
            if found is not None:
                break
    finally:
        if executor is not None:
            executor.shutdown()

    stats = SearchStats(trials=trials, failures_per_receiver=tuple(failures))
    logger.debug("Random search (seed=%s, d=%s): %s", instance.seed, d, stats)
    if found is None:
        return SearchResult(scheme=None, restart=None, stats=stats)
    return SearchResult(scheme=found[1], restart=found[0], stats=stats)
