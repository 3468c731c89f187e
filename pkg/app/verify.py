"""Decoding-condition verification and the necessary conditions a feasible
scheme must meet.

Receiver i decodes when H_ii V_i meets Σ_{j≠i} H_ij V_j only at zero. For a
uniform per-user dimension D, ε = 1 − 2D/(TL) and feasible schemes satisfy
Δ_{T_ijk} V_i ≤ 2εTL and sp_N(V_i) ≥ 2N − εTL; violations of either are
contradictions, logged with the instance seed.
"""

from collections.abc import Sequence
from fractions import Fraction
from math import floor

from app.alignment import alignment_width, contract, extend, grid_span
from app.channel import ChannelInstance, derive_t
from app.errors import InputError, PreconditionError
from app.logger import get_logger
from app.models import (
    GridWitness,
    ReceiverReport,
    Scheme,
    SchemeDocument,
    SparsityCheck,
    SparsityRequirementReport,
    VerifyReport,
    WidthCheck,
    WidthRequirementReport,
)
from app.sparsity import n_sparsity, support_dim
from app.subspace import (
    DiagMap,
    Subspace,
    apply,
    canonicalize,
    intersect,
    is_subspace,
    subspace_sum,
    weight,
    zero_subspace,
)

logger = get_logger(__name__)


def make_scheme(subspaces: Sequence[Subspace]) -> Scheme:
    """Scheme from one subspace per user.

    Raises:
        InputError: If the list is empty or ambient dimensions differ
    """
    if not subspaces:
        raise InputError("a scheme needs at least one user")
    if len({v.ambient_dim for v in subspaces}) != 1:
        raise InputError("all subspaces of a scheme must share one ambient dimension")
    return Scheme(k=len(subspaces), subspaces=tuple(subspaces))


def scheme_from_document(document: SchemeDocument) -> Scheme:
    """Canonicalize the basis rows of a scheme document.

    Raises:
        InputError: If the document is inconsistent
    """
    if len(document.bases) != document.k or len(document.dims) != document.k:
        raise InputError(f"scheme document must list {document.k} bases and dims")
    widths = {len(row) for basis in document.bases for row in basis}
    if document.ambient_dim is not None:
        widths.add(document.ambient_dim)
    if len(widths) != 1:
        raise InputError("cannot determine a single ambient dimension for the scheme")
    ambient = widths.pop()
    subspaces = [canonicalize(basis, ambient) for basis in document.bases]
    for i, (v, d) in enumerate(zip(subspaces, document.dims), start=1):
        if v.dim != d:
            raise InputError(f"user {i}: declared dim {d} but the basis spans {v.dim}")
    return make_scheme(subspaces)


def scheme_to_document(scheme: Scheme) -> SchemeDocument:
    return SchemeDocument(
        k=scheme.k,
        ambient_dim=scheme.ambient_dim,
        dims=list(scheme.dims),
        bases=[[list(row) for row in v.basis] for v in scheme.subspaces],
    )


def degrees_of_freedom(scheme: Scheme, l: int, t: int = 1) -> Fraction:
    """Σ D_i / (T·L)."""
    return Fraction(sum(scheme.dims), t * l)


def scheme_eps(scheme: Scheme, l: int, t: int = 1) -> Fraction | None:
    """ε = 1 − 2D/(TL) for uniform schemes, None otherwise."""
    d = scheme.uniform_d
    if d is None:
        return None
    return 1 - Fraction(2 * d, t * l)


def _check_compatible(instance: ChannelInstance, scheme: Scheme) -> None:
    if scheme.k != instance.k:
        raise InputError(f"scheme has {scheme.k} users, instance has {instance.k}")
    if scheme.ambient_dim != instance.dim:
        raise InputError(
            f"scheme lives in Q^{scheme.ambient_dim}, instance acts on Q^{instance.dim}"
        )


def verify_decoding(instance: ChannelInstance, scheme: Scheme) -> VerifyReport:
    """Check the decoding condition at every receiver.

    Raises:
        InputError: If the scheme does not match the instance
    """
    _check_compatible(instance, scheme)
    receivers = []
    for i in range(1, instance.k + 1):
        signal = apply(instance.channel(i, i), scheme.subspace(i))
        interference = zero_subspace(instance.dim)
        for j in range(1, instance.k + 1):
            if j != i:
                interference = subspace_sum(
                    interference, apply(instance.channel(i, j), scheme.subspace(j))
                )
        receivers.append(
            ReceiverReport(
                receiver=i,
                signal_dim=signal.dim,
                interference_dim=interference.dim,
                overlap_dim=intersect(signal, interference).dim,
            )
        )
    feasible = all(r.overlap_dim == 0 for r in receivers)
    logger.debug("Decoding check for seed %s: feasible=%s", instance.seed, feasible)
    return VerifyReport(
        feasible=feasible,
        per_receiver=tuple(receivers),
        dof=degrees_of_freedom(scheme, instance.l, instance.t),
        eps=scheme_eps(scheme, instance.l, instance.t),
        seed=instance.seed,
    )


def _require_feasible(instance: ChannelInstance, scheme: Scheme) -> VerifyReport:
    report = verify_decoding(instance, scheme)
    if not report.feasible:
        raise PreconditionError("the scheme does not satisfy the decoding condition")
    return report


def check_width_requirement(
    instance: ChannelInstance, scheme: Scheme
) -> WidthRequirementReport:
    """Δ_{T_ijk} V_i ≤ 2εTL for all distinct i, j, k ≠ 1.

    Raises:
        PreconditionError: If the scheme is infeasible
    """
    report = _require_feasible(instance, scheme)
    if report.eps is None:
        return WidthRequirementReport(applicable=False)
    bound = 2 * report.eps * instance.dim
    users = range(2, instance.k + 1)
    checks = []
    for i in users:
        for j in users:
            for k in users:
                if len({i, j, k}) != 3:
                    continue
                width = alignment_width(scheme.subspace(i), derive_t(instance, i, j, k)).width
                checks.append(
                    WidthCheck(i=i, j=j, k=k, width=width, bound=bound, passed=width <= bound)
                )
    result = WidthRequirementReport(applicable=True, eps=report.eps, checks=tuple(checks))
    for check in checks:
        if not check.passed:
            logger.error(
                "Width requirement violated for seed %s: user %s under T_%s%s%s has width %s > %s",
                instance.seed, check.i, check.i, check.j, check.k, check.width, check.bound,
            )
    return result


def check_sparsity_requirement(
    instance: ChannelInstance, scheme: Scheme
) -> SparsityRequirementReport:
    """sp_N(V_i) ≥ 2N − εTL for every user and N = 1..D (block sparsity for T > 1).

    Raises:
        PreconditionError: If the scheme is infeasible
        CapacityError: If T·L exceeds the sparsity cap
    """
    report = _require_feasible(instance, scheme)
    if report.eps is None or instance.k < 3:
        return SparsityRequirementReport(applicable=False)
    checks = []
    slack = report.eps * instance.dim
    for i in range(1, instance.k + 1):
        v = scheme.subspace(i)
        for big_n in range(1, v.dim + 1):
            result = n_sparsity(v, big_n, instance.l, instance.t)
            bound = 2 * big_n - slack
            checks.append(
                SparsityCheck(
                    i=i,
                    n=big_n,
                    sp=result.value,
                    bound=bound,
                    passed=result.at_least(bound),
                    heuristic=result.heuristic,
                )
            )
    for check in checks:
        if not check.passed:
            logger.error(
                "Sparsity requirement violated for seed %s: user %s, N=%s, sp=%s < %s",
                instance.seed, check.i, check.n, check.sp, check.bound,
            )
    return SparsityRequirementReport(applicable=True, eps=report.eps, checks=tuple(checks))


def _densest_vector(v: Subspace) -> tuple[Fraction, ...]:
    """A vector of V with the largest possible support.

    Σ λ^r b_r vanishes at a coordinate of V's support for fewer than dim V
    values of λ, so scanning λ = 1, 2, ... terminates within
    (dim V − 1)·(support size) + 1 tries.
    """
    target = support_dim(v, v.ambient_dim)
    best: tuple[Fraction, ...] = (Fraction(0),) * v.ambient_dim
    for lam in range(1, (v.dim - 1) * target + 2):
        x = tuple(
            sum((Fraction(lam) ** r * row[c] for r, row in enumerate(v.basis)), Fraction(0))
            for c in range(v.ambient_dim)
        )
        if weight(x) > weight(best):
            best = x
        if weight(best) == target:
            break
    return best


def grid_witness(
    v: Subspace,
    m1: DiagMap,
    m2: DiagMap,
    n_target: int,
    eps: Fraction | int | str,
    l: int,
) -> GridWitness:
    """Run the grid construction bounding sp_N(V) for a feasible subspace V.

    With n1 = ⌊(D−N)/(2εL)⌋ a vector x ∈ c_{T1⁻¹}^{n1} V with ‖x‖₀ ≥ sp_N(V)
    exists. With n2 = ⌊(sp_N(V)−1−D)/(2εL)⌋, the grid of T2^{α2} T1^{α1} x lies
    in e_{T2}^{n2} V, which forces sp_N(V) − 1 ≥ (n1+1)(n2+1). A negative n2
    means the grid is empty; it is clamped to −1 and the raw value reported.

    Raises:
        PreconditionError: If dim V != (1−ε)L/2, ε ≤ 0, N is out of range or
            either map has width above 2εL
    """
    eps = Fraction(eps)
    if v.ambient_dim != l:
        raise InputError(f"subspace of Q^{v.ambient_dim} but l = {l}")
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    d = v.dim
    if (1 - eps) * l / 2 != d:
        raise PreconditionError(f"dim V = {d} but (1−ε)L/2 = {(1 - eps) * l / 2}")
    if not 1 <= n_target <= d:
        raise PreconditionError(f"N = {n_target} outside 1..{d}")
    step = 2 * eps * l
    for name, m in (("m1", m1), ("m2", m2)):
        width = alignment_width(v, m).width
        if width > step:
            raise PreconditionError(f"Δ_{name} V = {width} exceeds 2εL = {step}")

    sparsity = n_sparsity(v, n_target, l).value
    assert sparsity != "inf"
    n1 = floor((d - n_target) / step)
    contracted = contract(v, m1.inverse(), n1)
    x = _densest_vector(contracted)
    n2_raw = floor((sparsity - 1 - d) / step)
    n2 = max(n2_raw, -1)

    line = grid_span(x, [m1], [n1])
    if n2 >= 0:
        grid = extend(line, m2, n2)
        extended = extend(v, m2, n2)
    else:
        grid = zero_subspace(l)
        extended = zero_subspace(l)

    witness = GridWitness(
        n=n_target,
        n1=n1,
        n2=n2,
        n2_raw=n2_raw,
        x=x,
        x_weight=weight(x),
        sparsity=sparsity,
        dim_v=d,
        dim_contracted=contracted.dim,
        dim_line=line.dim,
        dim_grid=grid.dim,
        dim_extended=extended.dim,
        grid_in_extension=is_subspace(grid, extended) and is_subspace(line, v),
        inequality_holds=sparsity - 1 >= (n1 + 1) * (n2 + 1),
    )
    if not witness.inequality_holds or witness.x_weight < sparsity:
        logger.error("Grid witness failed: %s", witness.model_dump_json())
    return witness
