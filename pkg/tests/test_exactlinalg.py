import numpy as np
import pytest

from persenc.algebra.exactlinalg import (
    Matrix,
    block_diagonal,
    cokernel_projection,
    column_span_basis,
    hstack,
    kernel_basis,
    rank,
    rref,
    solve_in_span,
    vstack,
)
from persenc.config import FieldConfig
from persenc.errors import DimensionMismatch, FieldMismatch, NoSolution


def test_rref_identity_and_zero():
    r, piv = rref(Matrix.identity(2))
    assert r == Matrix.identity(2)
    assert piv == [0, 1]

    r, piv = rref(Matrix.zeros(3, 2))
    assert r.is_zero()
    assert piv == []


def test_rref_over_f2():
    r, piv = rref(Matrix([[1, 1], [1, 1]], p=2))
    assert r.tolist() == [[1, 1], [0, 0]]
    assert piv == [0]


def test_entries_are_reduced_mod_p():
    m = Matrix([[-1, 102]], p=101)
    assert m.tolist() == [[100, 1]]


def test_kernel_basis_of_injective_and_zero_maps():
    assert kernel_basis(Matrix.identity(2)).shape == (2, 0)
    k = kernel_basis(Matrix.zeros(1, 3))
    assert k.shape == (3, 3)
    assert rank(k) == 3


def test_kernel_basis_of_single_row():
    m = Matrix([[1, 2]], p=101)
    k = kernel_basis(m)
    assert k.shape == (2, 1)
    assert (m @ k).is_zero()
    # spans (2, -1) up to scalar
    assert k.tolist() == [[99], [1]]


def test_solve_in_span():
    target = Matrix([[3, 4], [5, 6]])
    assert solve_in_span(Matrix.identity(2), target) == target

    x = solve_in_span(Matrix.zeros(2, 0), Matrix.zeros(2, 0))
    assert x.shape == (0, 0)

    x = solve_in_span(Matrix([[1], [1]]), Matrix([[2], [2]]))
    assert x.tolist() == [[2]]


def test_solve_in_span_raises_outside_span():
    with pytest.raises(NoSolution) as err:
        solve_in_span(Matrix([[1], [0]]), Matrix([[0], [1]]))
    assert err.value.certificate["target_column"] == 0


def test_cokernel_projection():
    assert cokernel_projection(Matrix.identity(3)).shape == (0, 3)
    assert cokernel_projection(Matrix.zeros(2, 4)) == Matrix.identity(2)

    m = Matrix([[1], [0]])
    q = cokernel_projection(m)
    assert (q @ m).is_zero()
    assert rank(q) == 1


def test_column_span_basis_keeps_pivot_columns():
    m = Matrix([[1, 2, 0], [0, 0, 1]])
    assert column_span_basis(m).tolist() == [[1, 0], [0, 1]]


def test_stacking_and_block_diagonal():
    a = Matrix([[1, 2]])
    b = Matrix([[3, 4]])
    assert vstack(a, b).tolist() == [[1, 2], [3, 4]]
    assert hstack(a, b).tolist() == [[1, 2, 3, 4]]
    d = block_diagonal(Matrix.identity(1), Matrix.zeros(2, 0), Matrix([[5]]))
    assert d.shape == (4, 2)
    assert d.tolist() == [[1, 0], [0, 0], [0, 0], [0, 5]]


def test_kron_shapes_with_zero_dimensions():
    k = Matrix.identity(2).kron(Matrix.zeros(0, 3))
    assert k.shape == (0, 6)
    assert Matrix([[2]]).kron(Matrix.identity(2)) == Matrix.identity(2).scale(2)


def test_mixed_fields_and_bad_shapes_raise():
    with pytest.raises(FieldMismatch):
        Matrix.identity(2, p=2) @ Matrix.identity(2, p=3)
    with pytest.raises(DimensionMismatch):
        Matrix.zeros(2, 3) @ Matrix.zeros(2, 3)


def test_rank_nullity_on_random_matrix():
    rng = np.random.default_rng(3)
    m = Matrix(rng.integers(0, 101, (4, 6)))
    assert rank(m) + kernel_basis(m).cols == 6
    assert (m @ kernel_basis(m)).is_zero()


def test_field_config_rejects_composites_and_huge_primes():
    with pytest.raises(ValueError):
        FieldConfig(100)
    with pytest.raises(ValueError):
        FieldConfig(16777259)
    assert FieldConfig(2).p == 2
