"""Invariant suite run by `iawidth selftest`.

Every check draws its corpus from explicit seeds and counts exact failures;
the quick profile shrinks the corpora for the test suite.
"""

import random
from collections.abc import Callable, Iterator
from fractions import Fraction
from itertools import islice
from pathlib import Path

from pydantic import BaseModel
from rich.table import Table

from app.alignment import alignment_width, contract, extend, grid_span, second_order
from app.bounds import bresler_eq1, thm1
from app.channel import ChannelInstance, sample_generic_instance, sample_instance, t_family
from app.config import config
from app.errors import WorkbenchError
from app.logger import get_logger
from app.models import Scheme
from app.schemes import build_orthogonal_scheme, random_search
from app.subspace import DiagMap, Subspace, block_lift, canonicalize, is_subspace, weight
from app.sweep import evaluate_point, load_sweep_config
from app.verify import (
    check_sparsity_requirement,
    check_width_requirement,
    grid_witness,
    verify_decoding,
)

logger = get_logger(__name__)

DEFAULT_SWEEP = Path(__file__).parent.parent / "sweeps" / "default.yaml"
SELFTEST_SEED = 20260101


class SelftestProfile(BaseModel):
    operator_cases: int = 200
    max_l: int = 12
    grid_cases: int = 50
    scheme_seeds: int = 20
    min_necessity_cases: int = 50
    witness_cases: int = 10
    infeasible_seeds: int = 20
    sweep_points: int | None = None
    min_feasible_sweep_rows: int = 100


FULL = SelftestProfile()
QUICK = SelftestProfile(
    operator_cases=20,
    max_l=8,
    grid_cases=6,
    scheme_seeds=2,
    min_necessity_cases=6,
    witness_cases=3,
    infeasible_seeds=3,
    sweep_points=12,
    min_feasible_sweep_rows=1,
)


class CheckResult(BaseModel):
    name: str
    cases: int
    failures: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _random_map(rng: random.Random, l: int) -> DiagMap:
    return block_lift([rng.randint(1, 4) * rng.choice((1, -1)) for _ in range(l)], 1)


def _random_subspace(rng: random.Random, l: int) -> Subspace:
    bound = config.COEFFICIENT_RANGE
    rows = [
        [rng.randint(-bound, bound) if rng.random() < 0.7 else 0 for _ in range(l)]
        for _ in range(rng.randint(0, l))
    ]
    return canonicalize(rows, l)


def operator_corpus(
    count: int, seed: int, max_l: int = 12
) -> Iterator[tuple[Subspace, DiagMap, DiagMap]]:
    """Seeded random (V, T1, T2) triples with L ≤ max_l."""
    rng = random.Random(seed)
    for _ in range(count):
        l = rng.randint(1, max_l)
        yield _random_subspace(rng, l), _random_map(rng, l), _random_map(rng, l)


def _count(
    name: str, cases: list, check: Callable[..., bool]
) -> CheckResult:
    failures = 0
    first = ""
    for index, case in enumerate(cases):
        try:
            ok = check(*case)
        except WorkbenchError as e:
            ok = False
            first = first or f"case {index}: {e.message}"
        if not ok:
            failures += 1
            first = first or f"case {index}"
    return CheckResult(name=name, cases=len(cases), failures=failures, detail=first)


def check_operator_identity(corpus: list) -> CheckResult:
    def holds(v: Subspace, m: DiagMap, _: DiagMap) -> bool:
        return extend(v, m).dim - v.dim == v.dim - contract(v, m).dim

    return _count("extension/contraction identity", corpus, holds)


def check_width_monotone(corpus: list) -> CheckResult:
    def holds(v: Subspace, m: DiagMap, _: DiagMap) -> bool:
        width = alignment_width(v, m).width
        return (
            alignment_width(extend(v, m), m).width <= width
            and alignment_width(contract(v, m), m).width <= width
        )

    return _count("width does not increase", corpus, holds)


def check_containments(corpus: list) -> CheckResult:
    def holds(v: Subspace, m1: DiagMap, m2: DiagMap) -> bool:
        inverse = m1.inverse()
        return (
            is_subspace(extend(contract(v, m2), m1), contract(extend(v, m1), m2))
            and is_subspace(extend(contract(v, inverse), m1), v)
            and is_subspace(v, contract(extend(v, m1), inverse))
        )

    return _count("extension/contraction containments", corpus, holds)


def check_second_order(corpus: list) -> CheckResult:
    def holds(v: Subspace, m1: DiagMap, m2: DiagMap) -> bool:
        report = second_order(v, m1, m2)
        return report.ext2 <= report.con2

    return _count("second-order widths", corpus, holds)


def check_grid_span_law(count: int, seed: int, max_l: int = 12) -> CheckResult:
    """dim grid_span = min{(n1+1)(n2+1), ‖v‖₀} on generic instances.

    A mismatch resamples the instance (seed + 1); it only counts as a failure
    when RESAMPLE_LIMIT resamples in a row all disagree.
    """
    rng = random.Random(seed)
    failures = 0
    detail = ""
    for case in range(count):
        l = rng.randint(2, max_l)
        n1 = rng.randint(0, 11)
        n2 = rng.randint(0, 12 // (n1 + 1) - 1)
        v = [Fraction(1)] * l
        if case % 2:
            for c in rng.sample(range(l), rng.randint(1, l - 1)):
                v[c] = Fraction(0)
        expected = min((n1 + 1) * (n2 + 1), weight(v))
        instance_seed = seed + case
        for _ in range(config.RESAMPLE_LIMIT + 1):
            maps = t_family(sample_instance(4, l, seed=instance_seed)).members[:2]
            if grid_span(v, maps, [n1, n2]).dim == expected:
                break
            logger.warning(
                "Grid span degenerate for seed %s, resampling with seed %s",
                instance_seed, instance_seed + 1,
            )
            instance_seed += 1
        else:
            failures += 1
            detail = detail or f"l={l}, n=({n1}, {n2}), seed={seed + case}"
    return CheckResult(name="grid span dimension", cases=count, failures=failures, detail=detail)


def necessity_corpus(seeds: int) -> Iterator[tuple[ChannelInstance, Scheme]]:
    """Feasible uniform schemes at K = 4, L ∈ {4, 6, 8}: orthogonal and searched."""
    for l in (4, 6, 8):
        d = l // 4
        for seed in range(seeds):
            instance = sample_generic_instance(4, l, seed=seed)
            yield instance, build_orthogonal_scheme(4, l, 1, d)
            found = random_search(instance, d, restarts=20, seed=seed).scheme
            if found is not None:
                yield instance, found


def check_necessary_conditions(seeds: int, min_cases: int = 0) -> list[CheckResult]:
    """Width and sparsity requirements on the feasible part of the necessity corpus.

    Both checks fail outright when fewer than min_cases schemes were checked.
    """
    corpus = [
        (instance, scheme)
        for instance, scheme in necessity_corpus(seeds)
        if verify_decoding(instance, scheme).feasible
    ]
    width_failures = 0
    sparsity_failures = 0
    sparsity_cases = 0
    detail = ""
    for instance, scheme in corpus:
        if not check_width_requirement(instance, scheme).all_pass:
            width_failures += 1
            detail = detail or f"width: seed={instance.seed}, l={instance.l}"
        if instance.dim <= 16:
            sparsity_cases += 1
            if not check_sparsity_requirement(instance, scheme).all_pass:
                sparsity_failures += 1
                detail = detail or f"sparsity: seed={instance.seed}, l={instance.l}"
    width_detail = detail if width_failures else ""
    sparsity_detail = detail if sparsity_failures else ""
    if len(corpus) < min_cases:
        width_failures += 1
        width_detail = f"{width_detail}; only {len(corpus)} feasible schemes".lstrip("; ")
    if sparsity_cases < min_cases:
        sparsity_failures += 1
        sparsity_detail = f"{sparsity_detail}; only {sparsity_cases} schemes checked".lstrip("; ")
    return [
        CheckResult(
            name="width requirement on feasible schemes",
            cases=len(corpus),
            failures=width_failures,
            detail=width_detail,
        ),
        CheckResult(
            name="sparsity requirement on feasible schemes",
            cases=sparsity_cases,
            failures=sparsity_failures,
            detail=sparsity_detail,
        ),
    ]


def check_closed_forms() -> CheckResult:
    expected = [
        ("three-user bound, L=1", bresler_eq1(1).exact, Fraction(1)),
        ("three-user bound, L=2", bresler_eq1(2).exact, Fraction(6, 5)),
        ("fast-fading bound, K=4, L=4", thm1(4, 4).exact, Fraction(21, 11)),
    ]
    wrong = [f"{name}: {got} != {value}" for name, got, value in expected if got != value]
    return CheckResult(
        name="closed-form bound values",
        cases=len(expected),
        failures=len(wrong),
        detail="; ".join(wrong),
    )


def check_bound_consistency(
    sweep_path: Path, limit: int | None, min_feasible: int
) -> CheckResult:
    sweep = load_sweep_config(sweep_path)
    rows = [evaluate_point(point) for point in islice(sweep.points(), limit)]
    bad = [row for row in rows if row.error or row.consistent is False]
    # d = 0 rows are feasible but make no DoF claim
    feasible = sum(1 for row in rows if row.feasible and row.dof)
    detail = ", ".join(
        f"seed={row.seed} k={row.k} l={row.l} {row.scheme_kind}" for row in bad[:5]
    )
    failures = len(bad)
    if feasible < min_feasible:
        failures += 1
        detail = f"{detail}; only {feasible} feasible rows with dof > 0".lstrip("; ")
    return CheckResult(
        name="DoF within bounds across the default sweep",
        cases=len(rows),
        failures=failures,
        detail=detail,
    )


def witness_inputs(count: int, seed: int) -> Iterator[tuple[Subspace, DiagMap, DiagMap, int, Fraction, int]]:
    """Grid spans of a generic vector that meet the witness hypotheses.

    Even cases use L = 12 and ε = 1/3, so dim V = 4 and V is spanned by
    {T1^a T2^b u : a, b ≤ 1}; widths are at most dim V = 4 ≤ 2εL and n1 = 0.
    Odd cases use L = 20 and ε = 1/10 with V = span{T1^a u : a ≤ 8} and
    T2 = T1², whose widths 1 and 2 stay under 2εL = 4. There N = 3 gives
    sp_3(V) = 14 and n1 = n2 = 1.
    """
    rng = random.Random(seed)
    for case in range(count):
        if case % 2:
            l = 20
            m1 = t_family(sample_generic_instance(4, l, seed=seed + case)).members[0]
            u = [rng.randint(1, 2**8) for _ in range(l)]
            yield grid_span(u, [m1], [8]), m1, m1.power(2), 3, Fraction(1, 10), l
        else:
            l = 12
            family = t_family(sample_generic_instance(4, l, seed=seed + case))
            m1, m2 = family.members[0], family.members[1]
            u = [rng.randint(1, 2**8) for _ in range(l)]
            v = grid_span(u, [m1, m2], [1, 1])
            yield v, m1, m2, 1 + (case // 2) % v.dim, Fraction(1, 3), l


def check_grid_witness(count: int, seed: int) -> CheckResult:
    def holds(v: Subspace, m1: DiagMap, m2: DiagMap, n: int, eps: Fraction, l: int) -> bool:
        witness = grid_witness(v, m1, m2, n, eps, l)
        return (
            witness.inequality_holds
            and witness.grid_in_extension
            and witness.x_weight >= witness.sparsity
        )

    return _count("grid witness inequality", list(witness_inputs(count, seed)), holds)


def _scalar_instance(k: int, seed: int) -> ChannelInstance:
    rng = random.Random(seed)
    top = 2**config.DEFAULT_BITS
    h = tuple(tuple((Fraction(rng.randint(1, top)),) for _ in range(k)) for _ in range(k))
    return ChannelInstance(k=k, l=1, bits=config.DEFAULT_BITS, seed=seed, h=h)


def check_single_use_infeasible(seeds: int) -> CheckResult:
    """With one channel use no two users can each send a stream."""
    cases = [(_scalar_instance(k, seed),) for k in (2, 3, 4) for seed in range(seeds)]

    def holds(instance: ChannelInstance) -> bool:
        return random_search(instance, 1, restarts=10, seed=instance.seed).scheme is None

    return _count("L=1 admits no d=1 scheme", cases, holds)


def run_selftest(quick: bool = False, sweep_path: Path = DEFAULT_SWEEP) -> list[CheckResult]:
    profile = QUICK if quick else FULL
    logger.info("Running %s selftest", "quick" if quick else "full")
    corpus = list(operator_corpus(profile.operator_cases, SELFTEST_SEED, profile.max_l))
    results = [
        check_operator_identity(corpus),
        check_width_monotone(corpus),
        check_containments(corpus),
        check_second_order(corpus),
        check_grid_span_law(profile.grid_cases, SELFTEST_SEED, profile.max_l),
        *check_necessary_conditions(profile.scheme_seeds, profile.min_necessity_cases),
        check_closed_forms(),
        check_bound_consistency(
            sweep_path, profile.sweep_points, profile.min_feasible_sweep_rows
        ),
        check_grid_witness(profile.witness_cases, SELFTEST_SEED),
        check_single_use_infeasible(profile.infeasible_seeds),
    ]
    for result in results:
        if not result.passed:
            logger.error("Selftest check %r failed: %s", result.name, result.detail)
    return results


def results_table(results: list[CheckResult]) -> Table:
    table = Table(title="selftest")
    table.add_column("check")
    table.add_column("cases", justify="right")
    table.add_column("failures", justify="right")
    table.add_column("status")
    for result in results:
        table.add_row(
            result.name,
            str(result.cases),
            str(result.failures),
            "ok" if result.passed else f"FAIL {result.detail}",
        )
    return table
