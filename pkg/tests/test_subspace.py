"""Tests for exact subspaces, diagonal maps and block projections."""

from fractions import Fraction

import pytest
from hypothesis import given, seed
from pydantic import ValidationError

from app.errors import CapacityError, InputError
from app.subspace import (
    BlockProjection,
    DiagMap,
    Subspace,
    apply,
    apply_vector,
    block_lift,
    canonicalize,
    contains,
    coordinate_subspace,
    full_space,
    intersect,
    is_subspace,
    parse_rational,
    product,
    subspace_sum,
    support,
    weight,
    zero_subspace,
)
from tests.strategies import subspace_with_maps, subspaces

F = Fraction


class TestParseRational:
    """Test the rational parser used by every wire format."""

    @pytest.mark.parametrize(
        "value, expected",
        [("3/4", F(3, 4)), ("-2", F(-2)), (5, F(5)), (F(1, 3), F(1, 3))],
    )
    def test_accepts(self, value: object, expected: Fraction) -> None:
        """Test integers, strings and fractions."""
        assert parse_rational(value) == expected

    @pytest.mark.parametrize("value", [0.5, True, "1/0", "abc", None])
    def test_rejects(self, value: object) -> None:
        """Test that floats, booleans and garbage are refused."""
        with pytest.raises(ValueError):
            parse_rational(value)


class TestCanonicalForm:
    """Test that equal subspaces have equal representations."""

    def test_same_span_same_value(self) -> None:
        """Test two different bases of one plane."""
        v = canonicalize([[1, 1, 0], [0, 1, 1]], 3)
        w = canonicalize([[1, 2, 1], [1, 0, -1]], 3)

        assert v == w
        assert hash(v) == hash(w)

    def test_coordinate_subspace_is_one_based(self) -> None:
        """Test that coordinates 1 and 3 select the first and last axes."""
        v = coordinate_subspace([1, 3], 3)

        assert v.basis == ((F(1), F(0), F(0)), (F(0), F(0), F(1)))

    def test_coordinate_subspace_out_of_range(self) -> None:
        with pytest.raises(InputError):
            coordinate_subspace([0], 3)

    def test_row_length_mismatch(self) -> None:
        with pytest.raises(InputError):
            canonicalize([[1, 2]], 3)

    def test_ambient_dimension_cap(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that spaces above MAX_AMBIENT_DIM are refused."""
        monkeypatch.setattr("app.subspace.config.MAX_AMBIENT_DIM", 4)

        with pytest.raises(CapacityError):
            zero_subspace(5)

    def test_validated_model_requires_rref(self) -> None:
        """Test that a deserialized subspace must already be canonical."""
        with pytest.raises(ValidationError):
            Subspace(ambient_dim=2, basis=((F(2), F(0)),))

    def test_json_round_trip(self) -> None:
        v = canonicalize([[1, F(1, 2), 0]], 3)

        assert Subspace.model_validate_json(v.model_dump_json()) == v

    @seed(5)
    @given(subspaces())
    def test_canonicalize_is_idempotent(self, v: Subspace) -> None:
        assert canonicalize(v.basis, v.ambient_dim) == v
        assert canonicalize([[2 * a for a in row] for row in reversed(v.basis)], v.ambient_dim) == v


class TestLattice:
    """Test sums, intersections and containment."""

    def test_intersection_of_planes(self) -> None:
        """Test that span{e1, e2} ∩ span{e2, e3} = span{e2}."""
        v = coordinate_subspace([1, 2], 3)
        w = coordinate_subspace([2, 3], 3)

        assert intersect(v, w) == coordinate_subspace([2], 3)
        assert v & w == coordinate_subspace([2], 3)
        assert v + w == full_space(3)

    def test_intersection_with_skew_line(self) -> None:
        """Test a line meeting a plane only at zero."""
        line = canonicalize([[1, 1, 1]], 3)
        plane = coordinate_subspace([1, 2], 3)

        assert intersect(line, plane).is_zero

    def test_contains(self) -> None:
        v = canonicalize([[1, 2, 0], [0, 0, 1]], 3)

        assert contains(v, [2, 4, 7])
        assert [F(1, 2), 1, 0] in v
        assert not contains(v, [1, 0, 0])

    def test_is_subspace(self) -> None:
        line = canonicalize([[1, 2, 3]], 3)

        assert is_subspace(zero_subspace(3), line)
        assert is_subspace(line, full_space(3))
        assert not is_subspace(full_space(3), line)

    def test_ambient_mismatch(self) -> None:
        with pytest.raises(InputError):
            subspace_sum(zero_subspace(2), zero_subspace(3))

    @seed(2)
    @given(subspaces(l=4), subspaces(l=4))
    def test_dimension_formula(self, v: Subspace, w: Subspace) -> None:
        """Test dim(V + W) + dim(V ∩ W) = dim V + dim W."""
        total = subspace_sum(v, w)
        common = intersect(v, w)

        assert total.dim + common.dim == v.dim + w.dim
        assert is_subspace(common, v) and is_subspace(common, w)
        assert is_subspace(v, total) and is_subspace(w, total)

    @seed(4)
    @given(subspaces(l=4), subspaces(l=4), subspaces(l=4))
    def test_sum_and_intersection_laws(self, u: Subspace, v: Subspace, w: Subspace) -> None:
        """Test commutativity and associativity of + and ∩ on canonical values."""
        assert subspace_sum(v, w) == subspace_sum(w, v)
        assert intersect(v, w) == intersect(w, v)
        assert subspace_sum(subspace_sum(u, v), w) == subspace_sum(u, subspace_sum(v, w))
        assert intersect(intersect(u, v), w) == intersect(u, intersect(v, w))


class TestDiagMap:
    """Test diagonal maps and their action."""

    def test_block_lift_repeats_entries(self) -> None:
        """Test that coordinate c is scaled by entries[c mod L]."""
        m = block_lift([2, 3], 2)

        assert m.diagonal == (F(2), F(3), F(2), F(3))
        assert m.dim == 4

    def test_block_lift_rejects_zero(self) -> None:
        with pytest.raises(InputError):
            block_lift([1, 0], 1)

    def test_validated_model_rejects_zero(self) -> None:
        with pytest.raises(ValidationError):
            DiagMap(l=2, entries=(F(1), F(0)))

    def test_inverse_power_compose(self) -> None:
        m = block_lift([2, F(1, 3)], 1)

        assert m.compose(m.inverse()).is_identity
        assert m.power(-2).entries == (F(1, 4), F(9))
        assert product([m, m], [1, -1]).is_identity
        assert DiagMap.identity(2).is_identity

    def test_compose_shape_mismatch(self) -> None:
        with pytest.raises(InputError):
            block_lift([1, 2], 1).compose(block_lift([1, 2], 2))

    def test_apply_vector(self) -> None:
        assert apply_vector(block_lift([2, 3], 1), [F(1), F(1, 3)]) == (F(2), F(1))

    def test_apply_rescales_pivots(self) -> None:
        """Test that MV stays canonical after the pivot rescale."""
        v = canonicalize([[1, 1, 1]], 3)
        image = apply(block_lift([1, 2, 4], 1), v)

        assert image == canonicalize([[1, 2, 4]], 3)

    @seed(3)
    @given(subspace_with_maps())
    def test_apply_matches_canonicalize(self, case: tuple[Subspace, list[DiagMap]]) -> None:
        """Test the fast image against canonicalizing the mapped basis."""
        v, (m,) = case

        assert apply(m, v) == canonicalize(
            [apply_vector(m, row) for row in v.basis], v.ambient_dim
        )

    @seed(6)
    @given(subspace_with_maps())
    def test_apply_inverse_restores(self, case: tuple[Subspace, list[DiagMap]]) -> None:
        v, (m,) = case

        assert apply(m, apply(m.inverse(), v)) == v
        assert apply(m.inverse(), apply(m, v)) == v


class TestSupport:
    def test_support_and_weight(self) -> None:
        x = (F(0), F(3), F(0), F(-1))

        assert support(x) == (1, 3)
        assert weight(x) == 2


class TestBlockProjection:
    """Test the per-period projections P_k."""

    def test_coordinates(self) -> None:
        """Test that period k of L = 3, T = 2 owns coordinates k and k + 3."""
        assert BlockProjection(k=2, l=3, t=2).coordinates == (2, 5)

    def test_k_out_of_range(self) -> None:
        with pytest.raises(ValidationError):
            BlockProjection(k=4, l=3, t=2)

    def test_project_and_lift(self) -> None:
        v = canonicalize([[1, 0, 0, 2, 0, 0], [0, 1, 0, 0, 0, 0]], 6)
        p1 = BlockProjection(k=1, l=3, t=2)

        projected = p1.project(v)
        assert projected == canonicalize([[1, 2]], 2)
        assert p1.lift(projected) == canonicalize([[1, 0, 0, 2, 0, 0]], 6)
        assert BlockProjection(k=3, l=3, t=2).project(v).is_zero
