"""N-sparsity of subspaces by exhaustive support search.

For a basis B (D rows) of V and a coordinate set S,
dim(V ∩ R^S) = D − rank(B restricted to the columns outside S). The flat
search therefore looks for the largest column set C whose rank is at most
D − N and returns its complement. Two exact enumerations are available:
subsets S by increasing size (cheap when V has sparse vectors) and the
closures of independent (D − N)-column sets, i.e. the flats of the column
matroid (cheap for generic V). The cheaper one by a generic cost estimate
runs; both return the lexicographically smallest optimal S.

Block sparsity (t > 1) minimizes Σ dim W̃_k over per-period subspaces
W̃_k ⊆ R^T, which equals the minimum of Σ dim P_k U over N-dimensional
U ⊆ V. Writing U through coefficient functionals on the rows of B, the
per-period column spaces C_k ⊆ Q^D decide everything, and three cases are
solved exactly:

- N = D: U = V and the value is Σ dim P_k V.
- N = 1: the value is the fewest nonzero periods of a vector of V, found
  from the largest set of periods whose columns have rank below D.
- N = D − 1 and T ≤ 2: U is cut out by one line s ⊆ Q^D, and the best s
  is a line of some C_k or the meet of two of them.

Every other case combines coordinate-structured blocks with a branch and
bound over candidate W̃_k (coordinate subspaces and the spans of P_k applied
to subsets of V's basis rows). That value is an upper bound. It is exact
when it meets the lower bound sp_1 + N − 1, and flagged heuristic otherwise.
"""

from collections.abc import Iterator, Sequence
from fractions import Fraction
from itertools import combinations, product
from math import comb

from app.config import config
from app.errors import CapacityError, InputError
from app.linalg import Vector, rank
from app.logger import get_logger
from app.models import INFINITE, SparsityResult
from app.subspace import (
    BlockProjection,
    Subspace,
    canonicalize,
    contains,
    coordinate_subspace,
    full_space,
    intersect,
    subspace_sum,
    zero_subspace,
)

logger = get_logger(__name__)


def _check_shape(v: Subspace, l: int, t: int) -> None:
    if l < 1 or t < 1:
        raise InputError(f"l and t must be positive, got l={l}, t={t}")
    if v.ambient_dim != t * l:
        raise InputError(f"subspace of Q^{v.ambient_dim} but t·l = {t * l}")


def support_dim(v: Subspace, l: int, t: int = 1) -> int:
    """sp^(T)(V) = Σ_k dim(P_k V); for t = 1 the largest support in V."""
    _check_shape(v, l, t)
    if t == 1:
        return sum(1 for c in range(l) if any(row[c] for row in v.basis))
    return sum(BlockProjection(k=k, l=l, t=t).project(v).dim for k in range(1, l + 1))


def _columns(v: Subspace) -> list[Vector]:
    return [tuple(row[c] for row in v.basis) for c in range(v.ambient_dim)]


def _by_size(columns: list[Vector], d: int, n: int) -> tuple[int, ...] | None:
    """Smallest S, lexicographic within size, with rank(columns ∉ S) ≤ d − n."""
    budget = d - n
    total = len(columns)
    for size in range(n, total + 1):
        for s in combinations(range(total), size):
            chosen = set(s)
            outside = [columns[c] for c in range(total) if c not in chosen]
            if rank(outside, d) <= budget:
                return s
    return None


def _by_flats(columns: list[Vector], d: int, n: int) -> tuple[int, ...]:
    """Complement of the largest rank-(d − n) flat of the column matroid."""
    budget = d - n
    total = len(columns)
    best: tuple[int, ...] | None = None
    for basis in combinations(range(total), budget):
        if budget and rank([columns[c] for c in basis], d) < budget:
            continue
        span = canonicalize([columns[c] for c in basis], d)
        flat = {c for c in range(total) if contains(span, columns[c])}
        s = tuple(c for c in range(total) if c not in flat)
        if best is None or (len(s), s) < (len(best), best):
            best = s
    if best is None:  # pragma: no cover - the columns have rank d ≥ budget
        raise AssertionError("no independent column set of the required size")
    return best


def _flat_search(v: Subspace, n: int) -> tuple[int, ...]:
    columns = _columns(v)
    total, d = len(columns), v.dim
    budget = d - n
    flats_cost = comb(total, budget)
    size_cost = sum(comb(total, s) for s in range(n, total - budget + 1))
    if flats_cost <= size_cost:
        logger.debug("Sparsity by flats: %s candidate sets", flats_cost)
        return _by_flats(columns, d, n)
    logger.debug("Sparsity by support size: up to %s candidate sets", size_cost)
    s = _by_size(columns, d, n)
    if s is None:  # pragma: no cover - S = all coordinates always qualifies
        raise AssertionError("no support found although n ≤ dim V")
    return s


def _check_capacity(l: int, t: int) -> None:
    if t * l > config.SPARSITY_CAP:
        logger.warning("Refusing sparsity search over %s coordinates", t * l)
        raise CapacityError(
            f"t·l = {t * l} exceeds the sparsity enumeration cap of {config.SPARSITY_CAP}"
        )


def n_sparsity(v: Subspace, n: int, l: int, t: int = 1) -> SparsityResult:
    """sp_N(V) (t = 1) or the block N-sparsity sp_N^(T)(V) (t > 1).

    Raises:
        InputError: If n < 1 or the shape does not match
        CapacityError: If t·l exceeds SPARSITY_CAP
    """
    _check_shape(v, l, t)
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    _check_capacity(l, t)
    if n > v.dim:
        return SparsityResult(n=n, value=INFINITE, method="none")

    if t == 1:
        support = tuple(c + 1 for c in _flat_search(v, n))
        return SparsityResult(n=n, value=len(support), witness_support=support)
    return _block_sparsity(v, n, l, t)


def _coordinate_blocks(support: Sequence[int], l: int, t: int) -> tuple[Subspace, ...]:
    chosen = set(support)
    blocks = []
    for k in range(1, l + 1):
        coordinates = BlockProjection(k=k, l=l, t=t).coordinates
        blocks.append(
            coordinate_subspace(
                (i + 1 for i, c in enumerate(coordinates) if c in chosen), t
            )
        )
    return tuple(blocks)


def block_subspace(blocks: Sequence[Subspace], l: int, t: int) -> Subspace:
    """{x : P_k x ∈ W̃_k for every k}, the direct sum of the lifted W̃_k."""
    if len(blocks) != l:
        raise InputError(f"expected {l} per-period subspaces, got {len(blocks)}")
    result = zero_subspace(t * l)
    for k, block in enumerate(blocks, start=1):
        result = subspace_sum(result, BlockProjection(k=k, l=l, t=t).lift(block))
    return result


def witness_subspace(result: SparsityResult, l: int, t: int = 1) -> Subspace | None:
    """The coordinate (t = 1) or block subspace that certifies result.value."""
    if result.witness_blocks is not None:
        return block_subspace(result.witness_blocks, l, t)
    if result.witness_support is not None:
        return coordinate_subspace(result.witness_support, t * l)
    return None


def certifies(v: Subspace, result: SparsityResult, l: int, t: int = 1) -> bool:
    """Re-check a finite result: the witness has size value and meets V in ≥ n dimensions."""
    if result.is_infinite:
        return result.n > v.dim
    w = witness_subspace(result, l, t)
    if w is None:
        return False
    size = w.dim
    return size == result.value and intersect(v, w).dim >= result.n


# ============================================================================
# Block sparsity
# ============================================================================


def _block_size(blocks: Sequence[Subspace]) -> int:
    return sum(w.dim for w in blocks)


def _period_columns(v: Subspace, l: int, t: int) -> list[list[Vector]]:
    columns = _columns(v)
    return [
        [columns[c - 1] for c in BlockProjection(k=k, l=l, t=t).coordinates]
        for k in range(1, l + 1)
    ]


def _blocks_from(v: Subspace, coefficients: Sequence[Vector], l: int, t: int) -> tuple[Subspace, ...]:
    """P_k U for U spanned by the given combinations of V's basis rows."""
    u = [
        tuple(
            sum((phi[i] * row[c] for i, row in enumerate(v.basis)), Fraction(0))
            for c in range(v.ambient_dim)
        )
        for phi in coefficients
    ]
    return tuple(
        canonicalize((projection.project_vector(x) for x in u), t)
        for projection in (BlockProjection(k=k, l=l, t=t) for k in range(1, l + 1))
    )


def _sparsest_block_vector(v: Subspace, l: int, t: int) -> tuple[Subspace, ...]:
    """Blocks of a nonzero x ∈ V with the fewest nonzero periods."""
    d = v.dim
    groups = _period_columns(v, l, t)
    for size in range(l, -1, -1):
        for periods in combinations(range(l), size):
            columns = [c for k in periods for c in groups[k]]
            if rank(columns, d) < d:
                phi = _annihilator(canonicalize(columns, d))[0]
                return _blocks_from(v, [phi], l, t)
    raise AssertionError("no vanishing period set although dim V ≥ 1")  # pragma: no cover


def _best_line_blocks(v: Subspace, l: int, t: int) -> tuple[Subspace, ...]:
    """Exact blocks for N = D − 1 when every period column space has dim ≤ 2."""
    d = v.dim
    spaces = [canonicalize(columns, d) for columns in _period_columns(v, l, t)]
    lines = {canonicalize([row], d) for space in spaces for row in space.basis}
    for a, b in combinations(spaces, 2):
        meet = intersect(a, b)
        if meet.dim == 1:
            lines.add(meet)
    best: tuple[Subspace, ...] | None = None
    for line in sorted(lines, key=lambda s: s.basis):
        blocks = _blocks_from(v, _annihilator(line), l, t)
        if best is None or _block_size(blocks) < _block_size(best):
            best = blocks
    if best is None:  # pragma: no cover - V ≠ 0 has a nonzero column
        raise AssertionError("no candidate line")
    return best


def _block_sparsity(v: Subspace, n: int, l: int, t: int) -> SparsityResult:
    d = v.dim
    if n == d:
        blocks = tuple(BlockProjection(k=k, l=l, t=t).project(v) for k in range(1, l + 1))
        return SparsityResult(
            n=n, value=_block_size(blocks), witness_blocks=blocks, method="block-support"
        )
    vector_blocks = _sparsest_block_vector(v, l, t)
    if n == 1:
        return SparsityResult(
            n=n, value=_block_size(vector_blocks), witness_blocks=vector_blocks, method="block-vectors"
        )
    if n == d - 1 and t <= 2:
        blocks = _best_line_blocks(v, l, t)
        return SparsityResult(
            n=n, value=_block_size(blocks), witness_blocks=blocks, method="block-lines"
        )

    floor = _block_size(vector_blocks) + n - 1
    support = tuple(c + 1 for c in _flat_search(v, n))
    result = SparsityResult(
        n=n,
        value=len(support),
        witness_support=support,
        witness_blocks=_coordinate_blocks(support, l, t),
        method="coordinate-blocks",
    )
    if len(support) > floor:
        if config.SPARSITY_REFINE_BLOCKS and t <= 2 and l <= config.REFINE_MAX_PERIODS:
            refined = _refined_blocks(v, n, l, t, bound=len(support))
            if refined is not None:
                value, blocks = refined
                result = SparsityResult(
                    n=n, value=value, witness_blocks=blocks, method="refined-blocks"
                )
        else:
            logger.debug("Refined block search skipped for l=%s, t=%s", l, t)

    if result.value == floor:
        return result
    logger.debug("Block sparsity for n=%s is an upper bound above %s", n, floor)
    return result.model_copy(update={"heuristic": True})


# ============================================================================
# Refined block search
# ============================================================================


def _annihilator(w: Subspace) -> list[Vector]:
    """Basis of {φ : ⟨φ, x⟩ = 0 for all x ∈ W}."""
    pivots = w.pivots
    free = [c for c in range(w.ambient_dim) if c not in pivots]
    rows = []
    for f in free:
        phi = [Fraction(0)] * w.ambient_dim
        phi[f] = Fraction(1)
        for p, row in zip(pivots, w.basis):
            phi[p] = -row[f]
        rows.append(tuple(phi))
    return rows


def _subsets(rows: Sequence[Vector]) -> Iterator[tuple[Vector, ...]]:
    for size in range(1, len(rows) + 1):
        yield from combinations(rows, size)


def _period_options(v: Subspace, k: int, l: int, t: int) -> list[tuple[int, Subspace, list[Vector]]]:
    """Candidate W̃_k with their constraint vectors on the coefficients of V."""
    projection = BlockProjection(k=k, l=l, t=t)
    candidates = {
        coordinate_subspace((i + 1 for i in range(t) if mask[i]), t)
        for mask in product((False, True), repeat=t)
    }
    candidates.update(
        canonicalize((projection.project_vector(row) for row in rows), t)
        for rows in _subsets(v.basis)
    )
    candidates.add(full_space(t))
    coords = [c - 1 for c in projection.coordinates]
    options = []
    for w in candidates:
        constraints = [
            tuple(sum((row[c] * phi[i] for i, c in enumerate(coords)), Fraction(0)) for row in v.basis)
            for phi in _annihilator(w)
        ]
        options.append((w.dim, w, constraints))
    options.sort(key=lambda option: (option[0], option[1].basis))
    return options


def _refined_blocks(
    v: Subspace, n: int, l: int, t: int, bound: int
) -> tuple[int, tuple[Subspace, ...]] | None:
    """Branch and bound over per-period options; None when nothing beats bound."""
    d = v.dim
    budget = d - n
    options = [_period_options(v, k, l, t) for k in range(1, l + 1)]
    best: tuple[int, tuple[Subspace, ...]] | None = None
    best_value = bound

    def search(k: int, used: int, constraints: list[Vector], chosen: list[Subspace]) -> None:
        nonlocal best, best_value
        if k == l:
            if used < best_value:
                best_value = used
                best = (used, tuple(chosen))
            return
        for size, w, rows in options[k]:
            if used + size >= best_value:
                break
            combined = constraints + rows
            if rank(combined, d) > budget:
                continue
            search(k + 1, used + size, combined, chosen + [w])

    search(0, 0, [], [])
    return best
