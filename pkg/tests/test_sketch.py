import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspace_sketch.errors import DegenerateSketchError, RejectedInputError
from subspace_sketch.sketch import SketchOperator, apply, gaussian_operator, sketch_pair
from subspace_sketch.subspace import (
    Subspace,
    distance_sq,
    generate_pair_with_angles,
    generate_random_subspace,
    principal_bases,
)

import oracles


def test_operator_deterministic():
    a = gaussian_operator(20, 50, 9).entries
    b = gaussian_operator(20, 50, 9).entries
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != gaussian_operator(20, 50, 10).entries.tobytes()


def test_operator_entry_variance():
    op = gaussian_operator(100, 400, 1)
    assert 0.008 <= op.entries.var() <= 0.012
    assert op.moments_ok()


def test_operator_row_norms():
    op = gaussian_operator(100, 400, 2)
    mean_sq = np.mean(np.sum(op.entries**2, axis=1))
    assert mean_sq == pytest.approx(4.0, rel=0.05)


def test_operator_rejects_n_not_below_ambient():
    with pytest.raises(RejectedInputError):
        gaussian_operator(50, 50, 0)


def test_apply_coordinate_line():
    op = gaussian_operator(6, 15, 3)
    y = apply(op, Subspace.from_basis(np.eye(15)[:, :1]))
    col = op.entries[:, 0] / np.linalg.norm(op.entries[:, 0])
    np.testing.assert_allclose(y.basis[:, 0], col, atol=1e-15)


def test_apply_preserves_dimension():
    for seed in range(1000):
        x = generate_random_subspace(200, 5, seed)
        assert apply(gaussian_operator(50, 200, seed + 10_000), x).dim == 5


def test_apply_span_invariance():
    x = generate_random_subspace(40, 3, 4)
    op = gaussian_operator(12, 40, 5)
    y = apply(op, x)
    scaled = op.entries @ (7.0 * x.basis)
    np.testing.assert_allclose(y.projector(), oracles.projector(scaled), atol=1e-9)


def test_apply_matches_projector_of_image():
    x = generate_random_subspace(60, 4, 6)
    op = gaussian_operator(20, 60, 7)
    np.testing.assert_allclose(apply(op, x).projector(), oracles.projector(op.entries @ x.basis), atol=1e-9)


def test_apply_rank_collapse_reports_seed():
    entries = np.zeros((5, 10))
    entries[:, :3] = np.random.default_rng(0).standard_normal((5, 3))
    op = SketchOperator(n=5, ambient=10, entries=entries, seed=1234)
    x = Subspace.from_basis(np.eye(10)[:, 4:6])
    with pytest.raises(DegenerateSketchError) as exc:
        apply(op, x)
    assert exc.value.seed == 1234


def test_apply_dimension_checks():
    op = gaussian_operator(4, 10, 0)
    with pytest.raises(RejectedInputError):
        apply(op, generate_random_subspace(11, 2, 0))
    with pytest.raises(RejectedInputError):
        apply(op, generate_random_subspace(10, 4, 0))


def _check_pair(sp):
    for a, abar, v in ((sp.a1, sp.abar1, sp.v1), (sp.a2, sp.abar2, sp.v2)):
        k = v.shape[1]
        assert np.linalg.norm(v.T @ v - np.eye(k)) <= 1e-10
        np.testing.assert_allclose(v @ v.T, oracles.projector(a), atol=1e-8)
        np.testing.assert_allclose(v[:, 0], abar[:, 0], atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(abar, axis=0), 1.0, atol=1e-12)
        # column order: every prefix of v spans the same prefix of a
        for j in range(1, k + 1):
            np.testing.assert_allclose(v[:, :j] @ v[:, :j].T, oracles.projector(a[:, :j]), atol=1e-8)


def test_sketch_pair_structure():
    x1, x2, pb = generate_pair_with_angles(80, [0.8, 0.3], 4, 1)
    sp = sketch_pair(gaussian_operator(25, 80, 2), pb)
    _check_pair(sp)
    np.testing.assert_allclose(sp.a1, gaussian_operator(25, 80, 2).entries @ pb.u1, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d1=st.integers(1, 4), extra=st.integers(0, 3))
def test_sketch_pair_property(seed, d1, extra):
    d2 = d1 + extra
    ambient = 60
    pb = principal_bases(
        generate_random_subspace(ambient, d1, seed), generate_random_subspace(ambient, d2, seed + 7)
    )
    _check_pair(sketch_pair(gaussian_operator(d2 + 10, ambient, seed), pb))


def test_sketch_pair_identical_subspaces():
    x = generate_random_subspace(50, 3, 8)
    sp = sketch_pair(gaussian_operator(10, 50, 9), principal_bases(x, x))
    assert distance_sq(sp.y1, sp.y2) == pytest.approx(0.0, abs=1e-9)


def test_sketch_pair_line_is_normalized_image():
    _, _, pb = generate_pair_with_angles(30, [0.4], 3, 5)
    sp = sketch_pair(gaussian_operator(8, 30, 6), pb)
    np.testing.assert_array_equal(sp.v1, sp.abar1)
