from fractions import Fraction
from typing import Literal

from pydantic import BaseModel, ConfigDict

from app.subspace import Rational, Subspace

INFINITE = "inf"

type SparsityValue = int | Literal["inf"]


class Report(BaseModel):
    model_config = ConfigDict(frozen=True)


# ============================================================================
# Operator reports
# ============================================================================


class WidthReport(Report):
    width: int
    dim_before: int
    dim_after_extend: int
    dim_after_contract: int


class SecondOrderReport(Report):
    ext2: int
    con2: int


class WalkStep(Report):
    operator: Literal["extend", "contract"]
    index: int  # 1-based position in the family
    label: tuple[int, int]


class WalkResult(Report):
    w_tilde: Subspace
    n_tilde: int
    delta: Rational
    case_tag: Literal[
        "contraction_break", "full_extension", "extension_break", "full_contraction"
    ]
    op_sequence: tuple[WalkStep, ...] = ()
    mode: Literal["extension", "contraction"] = "extension"
    average_width: Rational
    average_width_bound: Rational
    dim_guarantee: bool
    width_guarantee: bool
    sparsity_guarantee: bool | None = None


# ============================================================================
# Sparsity
# ============================================================================


class SparsityResult(Report):
    n: int
    value: SparsityValue
    witness_support: tuple[int, ...] | None = None
    witness_blocks: tuple[Subspace, ...] | None = None
    heuristic: bool = False
    method: Literal[
        "flat",
        "block-support",
        "block-vectors",
        "block-lines",
        "coordinate-blocks",
        "refined-blocks",
        "none",
    ] = "flat"

    @property
    def is_infinite(self) -> bool:
        return self.value == INFINITE

    def at_least(self, bound: Fraction | int) -> bool:
        return self.value == INFINITE or self.value >= bound


# ============================================================================
# Schemes and verification
# ============================================================================


class Scheme(Report):
    k: int
    subspaces: tuple[Subspace, ...]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(v.dim for v in self.subspaces)

    @property
    def ambient_dim(self) -> int:
        return self.subspaces[0].ambient_dim

    @property
    def uniform_d(self) -> int | None:
        return self.dims[0] if len(set(self.dims)) == 1 else None

    def subspace(self, i: int) -> Subspace:
        """V_i, 1-based."""
        return self.subspaces[i - 1]


class SchemeDocument(BaseModel):
    """Wire form of a Scheme: per-user dimensions and basis rows."""

    k: int
    ambient_dim: int | None = None
    dims: list[int]
    bases: list[list[list[Rational]]]


class ReceiverReport(Report):
    receiver: int
    signal_dim: int
    interference_dim: int
    overlap_dim: int


class VerifyReport(Report):
    feasible: bool
    per_receiver: tuple[ReceiverReport, ...]
    dof: Rational
    eps: Rational | None = None
    seed: int | None = None


class WidthCheck(Report):
    i: int
    j: int
    k: int
    width: int
    bound: Rational
    passed: bool


class WidthRequirementReport(Report):
    applicable: bool
    eps: Rational | None = None
    checks: tuple[WidthCheck, ...] = ()

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_width(self) -> int | None:
        return max((c.width for c in self.checks), default=None)


class SparsityCheck(Report):
    i: int
    n: int
    sp: SparsityValue
    bound: Rational
    passed: bool
    heuristic: bool = False


class SparsityRequirementReport(Report):
    applicable: bool
    eps: Rational | None = None
    checks: tuple[SparsityCheck, ...] = ()

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def min_margin(self) -> Fraction | None:
        margins = [c.sp - c.bound for c in self.checks if c.sp != INFINITE]
        return min(margins, default=None)


class GridWitness(Report):
    n: int
    n1: int
    n2: int
    n2_raw: int
    x: tuple[Rational, ...]
    x_weight: int
    sparsity: int
    dim_v: int
    dim_contracted: int
    dim_line: int
    dim_grid: int
    dim_extended: int
    grid_in_extension: bool
    inequality_holds: bool


# ============================================================================
# Bounds
# ============================================================================


class BoundValue(Report):
    """A bound as an exact rational when one exists, plus an enclosing interval."""

    exact: Rational | None = None
    lower: Rational
    upper: Rational
    decimal: str

    def admits(self, x: Fraction) -> bool:
        """False only when x certainly exceeds the bound."""
        return x <= self.upper


class BoundTable(Report):
    k: int
    l: int
    t: int
    m: int
    eps: Rational | None = None
    c: Rational
    cj_n: int
    bresler_eq1: BoundValue
    cj_eq2: BoundValue
    thm1: BoundValue | None = None
    thm2: BoundValue | None = None
    thm3: BoundValue | None = None
    thm4_l_min: BoundValue | None = None
    thm5_l_min: BoundValue | None = None
    thm6_l_min: BoundValue | None = None


# ============================================================================
# Search
# ============================================================================


class SearchStats(Report):
    trials: int
    failures_per_receiver: tuple[int, ...]


class SearchResult(Report):
    scheme: Scheme | None
    restart: int | None
    stats: SearchStats
