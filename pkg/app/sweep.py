"""Parameter sweeps over (K, L, T, bits, d, scheme kind) grids.

A sweep file lists one or more grids; every grid point is evaluated once per
seed and becomes one CSV row. Rows come out in grid × seed order whatever
the degree of parallelism, and a failing point records its error in the row
instead of aborting the sweep.
"""

import csv
from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path
from typing import IO, Self

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from app.bounds import bound_consistency, eval_bounds
from app.channel import ChannelInstance, sample_generic_instance
from app.config import config
from app.errors import InputError, WorkbenchError
from app.logger import get_logger
from app.models import BoundValue, Scheme
from app.schemes import (
    build_chain_scheme,
    build_orthogonal_scheme,
    load_pattern,
    random_search,
)
from app.subspace import Rational
from app.verify import (
    check_sparsity_requirement,
    check_width_requirement,
    verify_decoding,
)

logger = get_logger(__name__)

CSV_COLUMNS = (
    "k",
    "l",
    "t",
    "bits",
    "seed",
    "scheme_kind",
    "d",
    "feasible",
    "dof",
    "eps",
    "max_width",
    "min_sparsity_margin",
    "bound_eq1",
    "bound_thm1",
    "bound_thm2",
    "bound_thm3",
    "consistent",
    "error",
)

CHAIN_PREFIX = "chain:"


class SweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    l: int
    t: int
    bits: int
    d: int | None
    seed: int
    scheme_kind: str
    pattern_path: Path | None = None
    restarts: int


class SweepGrid(BaseModel):
    """Cartesian product of parameter lists; d = null picks ⌊TL/K⌋ for
    orthogonal schemes and 1 for random search."""

    k: list[int]
    l: list[PositiveInt]
    t: list[PositiveInt] = [1]
    bits: list[int] = Field(default_factory=lambda: [config.DEFAULT_BITS])
    d: list[NonNegativeInt | None] = [None]
    seeds: list[int]
    scheme_kinds: list[str] = ["orthogonal"]

    @field_validator("scheme_kinds")
    @classmethod
    def _check_kinds(cls, kinds: list[str]) -> list[str]:
        for kind in kinds:
            if kind in ("orthogonal", "search"):
                continue
            if not kind.startswith(CHAIN_PREFIX) or kind == CHAIN_PREFIX:
                raise ValueError(
                    f"unknown scheme kind {kind!r}: use orthogonal, search or chain:<pattern-file>"
                )
        return kinds

    @model_validator(mode="after")
    def _check_caps(self) -> Self:
        if self.l and self.t and max(self.l) * max(self.t) > config.MAX_AMBIENT_DIM:
            raise ValueError(
                f"t·l up to {max(self.l) * max(self.t)} exceeds the cap of {config.MAX_AMBIENT_DIM}"
            )
        return self


class SweepConfig(BaseModel):
    grids: list[SweepGrid] = []
    restarts: PositiveInt = 20
    output: Path | None = None
    parallel: PositiveInt = 1
    # Chain pattern paths are resolved against this directory.
    base_dir: Path = Path(".")

    def _pattern_path(self, kind: str) -> Path | None:
        if not kind.startswith(CHAIN_PREFIX):
            return None
        path = Path(kind.removeprefix(CHAIN_PREFIX))
        return path if path.is_absolute() else self.base_dir / path

    def points(self) -> Iterator[SweepPoint]:
        for grid in self.grids:
            axes = product(grid.k, grid.l, grid.t, grid.bits, grid.d, grid.scheme_kinds)
            for k, l, t, bits, d, kind in axes:
                for seed in grid.seeds:
                    yield SweepPoint(
                        k=k,
                        l=l,
                        t=t,
                        bits=bits,
                        d=d,
                        seed=seed,
                        scheme_kind=kind,
                        pattern_path=self._pattern_path(kind),
                        restarts=self.restarts,
                    )


class SweepRow(BaseModel):
    k: int
    l: int
    t: int
    bits: int
    seed: int
    scheme_kind: str
    d: int | None = None
    feasible: bool | None = None
    dof: Rational | None = None
    eps: Rational | None = None
    max_width: int | None = None
    min_sparsity_margin: Rational | None = None
    bound_eq1: str | None = None
    bound_thm1: str | None = None
    bound_thm2: str | None = None
    bound_thm3: str | None = None
    consistent: bool | None = None
    error: str = ""

    def csv_row(self) -> dict[str, str]:
        row = {}
        for column, value in self.model_dump().items():
            if value is None:
                row[column] = ""
            elif isinstance(value, bool):
                row[column] = "true" if value else "false"
            else:
                row[column] = str(value)
        return row


def load_sweep_config(path: Path | str) -> SweepConfig:
    """Read a YAML sweep file; relative pattern paths resolve against its directory.

    Raises:
        InputError: If the file is unreadable or malformed
    """
    path = Path(path)
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        return SweepConfig.model_validate({"base_dir": path.parent, **data})
    except (OSError, yaml.YAMLError, ValidationError) as e:
        raise InputError(f"invalid sweep config {path}: {e}") from e


def _bound_cell(value: BoundValue | None) -> str | None:
    if value is None:
        return None
    return str(value.exact) if value.exact is not None else value.decimal


def _build_scheme(point: SweepPoint, instance: ChannelInstance) -> tuple[Scheme | None, int | None]:
    match point.scheme_kind:
        case "orthogonal":
            d = instance.dim // instance.k if point.d is None else point.d
            return build_orthogonal_scheme(point.k, point.l, point.t, d), d
        case "search":
            d = 1 if point.d is None else point.d
            return random_search(instance, d, point.restarts, point.seed).scheme, d
        case _:
            assert point.pattern_path is not None
            scheme = build_chain_scheme(instance, load_pattern(point.pattern_path))
            return scheme, scheme.uniform_d


def evaluate_point(point: SweepPoint) -> SweepRow:
    """Build, verify and cross-check one scheme; never raises for expected failures.

    Infeasible schemes make no DoF claim and are reported as consistent.
    """
    row: dict[str, object] = {
        "k": point.k,
        "l": point.l,
        "t": point.t,
        "bits": point.bits,
        "seed": point.seed,
        "scheme_kind": point.scheme_kind,
    }
    try:
        instance = sample_generic_instance(point.k, point.l, point.t, point.bits, point.seed)
        scheme, row["d"] = _build_scheme(point, instance)
        table = eval_bounds(point.k, point.l, point.t)
        row |= {
            "bound_eq1": _bound_cell(table.bresler_eq1),
            "bound_thm1": _bound_cell(table.thm1),
            "bound_thm2": _bound_cell(table.thm2),
            "bound_thm3": _bound_cell(table.thm3),
        }
        if scheme is None:
            return SweepRow(**row, feasible=False, consistent=True)

        report = verify_decoding(instance, scheme)
        row |= {"feasible": report.feasible, "dof": report.dof, "eps": report.eps}
        if not report.feasible:
            return SweepRow(**row, consistent=True)

        verdicts = bound_consistency(report, table)
        widths = check_width_requirement(instance, scheme)
        row["max_width"] = widths.max_width
        sparsity = check_sparsity_requirement(instance, scheme)
        row["min_sparsity_margin"] = sparsity.min_margin
        row["consistent"] = all(verdicts.values()) and widths.all_pass and sparsity.all_pass
        return SweepRow(**row)
    except WorkbenchError as e:
        logger.warning("Sweep point %s failed: %s", point.model_dump_json(), e.message)
        return SweepRow(**row, error=e.message)


def run_sweep(sweep: SweepConfig) -> list[SweepRow]:
    points = list(sweep.points())
    logger.info("Running sweep: %s points, parallel=%s", len(points), sweep.parallel)
    if sweep.parallel > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=sweep.parallel) as executor:
            rows = list(executor.map(evaluate_point, points))
    else:
        rows = []
        for index, point in enumerate(points, start=1):
            rows.append(evaluate_point(point))
            logger.debug("Sweep point %s/%s done", index, len(points))
    failed = sum(1 for row in rows if row.error)
    feasible = sum(1 for row in rows if row.feasible)
    logger.info("Sweep finished: %s rows, %s feasible, %s failed", len(rows), feasible, failed)
    return rows


def write_csv(rows: list[SweepRow], stream: IO[str]) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.csv_row())
