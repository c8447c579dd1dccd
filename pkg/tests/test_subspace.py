import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspace_sketch.errors import DegenerateGeometryError, DegenerateInputError, RejectedInputError
from subspace_sketch.subspace import (
    Subspace,
    affinity_sq,
    affinity_to_distance_sq,
    distance_sq,
    generate_pair_with_angles,
    generate_random_subspace,
    make_subspace,
    pf_distance_direct,
    principal_angles,
    principal_bases,
)

import oracles


def test_subspace_rejects_non_orthonormal():
    with pytest.raises(RejectedInputError, match="orthonormal"):
        Subspace.from_basis(np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))


def test_subspace_basis_read_only():
    x = generate_random_subspace(6, 2, 0)
    with pytest.raises(ValueError):
        x.basis[0, 0] = 1.0


def test_make_subspace_standard_basis():
    e = np.eye(5)[:, :2]
    np.testing.assert_array_equal(make_subspace(e).basis, e)


def test_make_subspace_single_column():
    np.testing.assert_allclose(make_subspace([3.0, 4.0, 0.0]).basis[:, 0], [0.6, 0.8, 0.0])


def test_make_subspace_projector_idempotent():
    p = make_subspace(np.random.default_rng(1).standard_normal((20, 4))).projector()
    assert np.linalg.norm(p @ p - p) <= 1e-9


def test_make_subspace_rank_deficiency_propagates():
    a = np.ones((4, 2))
    with pytest.raises(DegenerateInputError):
        make_subspace(a)


def test_principal_angles_identical():
    x = generate_random_subspace(10, 3, 4)
    g = principal_angles(x, x)
    np.testing.assert_allclose(g.cosines, [1, 1, 1], atol=1e-12)
    assert g.affinity_sq == pytest.approx(3.0, abs=1e-12)
    assert g.distance_sq == pytest.approx(0.0, abs=1e-12)


def test_principal_angles_orthogonal():
    e = np.eye(6)
    g = principal_angles(Subspace.from_basis(e[:, :2]), Subspace.from_basis(e[:, 2:6]))
    assert g.affinity_sq == 0.0
    assert g.distance_sq == 3.0


def test_principal_angles_two_lines():
    l1 = Subspace.from_basis(np.array([[1.0], [0.0]]))
    l2 = Subspace.from_basis(np.array([[0.6], [0.8]]))
    g = principal_angles(l1, l2)
    assert g.cosines[0] == pytest.approx(0.6, abs=1e-15)
    assert g.distance == pytest.approx(0.8, abs=1e-15)


def test_principal_angles_ambient_mismatch():
    with pytest.raises(RejectedInputError):
        principal_angles(generate_random_subspace(5, 2, 0), generate_random_subspace(6, 2, 0))


def test_principal_angles_order_independent():
    x1, x2 = generate_random_subspace(12, 2, 1), generate_random_subspace(12, 5, 2)
    g, h = principal_angles(x1, x2), principal_angles(x2, x1)
    assert (g.d1, g.d2) == (h.d1, h.d2) == (2, 5)
    np.testing.assert_allclose(g.cosines, h.cosines, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    ambient=st.integers(2, 40),
    d1=st.integers(1, 8),
    d2=st.integers(1, 8),
)
def test_geometry_against_lapack_and_projectors(seed, ambient, d1, d2):
    d1, d2 = min(d1, ambient), min(d2, ambient)
    x1 = generate_random_subspace(ambient, d1, seed)
    x2 = generate_random_subspace(ambient, d2, seed + 1)
    g = principal_angles(x1, x2)
    ref = oracles.cosines_via_lapack(x1.basis, x2.basis)
    np.testing.assert_allclose(g.cosines, ref, atol=1e-10)
    assert np.all(np.diff(g.cosines) <= 1e-15)
    assert -1e-10 <= g.affinity_sq <= min(d1, d2) + 1e-10
    assert g.affinity_sq == pytest.approx(affinity_sq(x1, x2), abs=1e-10)
    assert g.distance_sq == pytest.approx(oracles.projector_distance_sq(x1.basis, x2.basis), abs=1e-9)
    assert pf_distance_direct(x1, x2) ** 2 == pytest.approx(distance_sq(x1, x2), abs=1e-9)


def test_pf_distance_direct_trivial_cases():
    x = generate_random_subspace(7, 3, 3)
    assert pf_distance_direct(x, x) == pytest.approx(0.0, abs=1e-14)
    e = np.eye(2)
    lines = Subspace.from_basis(e[:, :1]), Subspace.from_basis(e[:, 1:])
    assert pf_distance_direct(*lines) == pytest.approx(1.0, abs=1e-15)


def test_affinity_to_distance_sq_examples():
    assert affinity_to_distance_sq(3.0, 3, 3) == 0.0
    assert affinity_to_distance_sq(0.0, 2, 4) == 3.0
    assert affinity_to_distance_sq(0.36, 1, 1) == pytest.approx(0.64)
    assert affinity_to_distance_sq(0.0, 4, 2) == 3.0
    with pytest.raises(RejectedInputError):
        affinity_to_distance_sq(2.5, 2, 4)
    with pytest.raises(RejectedInputError):
        affinity_to_distance_sq(-0.1, 2, 4)


def _check_principal_structure(pb, ambient):
    d1, d2 = pb.d1, pb.d2
    assert np.linalg.norm(pb.u1.T @ pb.u1 - np.eye(d1)) <= 1e-10
    assert np.linalg.norm(pb.u2.T @ pb.u2 - np.eye(d2)) <= 1e-10
    cross = pb.u2.T @ pb.u1
    expect = np.zeros((d2, d1))
    expect[:d1, :d1] = np.diag(pb.lam)
    np.testing.assert_allclose(cross, expect, atol=1e-8)
    if pb.u0 is not None:
        assert np.abs(pb.u2.T @ pb.u0).max() <= 1e-8
        lam_perp = np.sqrt(1.0 - pb.lam**2)
        np.testing.assert_allclose(pb.u1, pb.u2[:, :d1] * pb.lam + pb.u0 * lam_perp, atol=1e-8)


def test_principal_bases_random_pair():
    x1, x2 = generate_random_subspace(30, 3, 10), generate_random_subspace(30, 5, 11)
    pb = principal_bases(x1, x2)
    assert pb.u0 is not None
    _check_principal_structure(pb, 30)
    np.testing.assert_allclose(pb.lam, principal_angles(x1, x2).cosines, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d1=st.integers(1, 5), extra=st.integers(0, 4))
def test_principal_bases_property(seed, d1, extra):
    d2 = d1 + extra
    ambient = d1 + d2 + 3
    pb = principal_bases(
        generate_random_subspace(ambient, d1, seed), generate_random_subspace(ambient, d2, seed ^ 1)
    )
    _check_principal_structure(pb, ambient)


def test_principal_bases_orthogonal_pair():
    e = np.eye(6)
    pb = principal_bases(Subspace.from_basis(e[:, :2]), Subspace.from_basis(e[:, 2:5]))
    np.testing.assert_array_equal(pb.lam, [0.0, 0.0])
    np.testing.assert_allclose(pb.u0, pb.u1, atol=1e-15)


def test_principal_bases_identical_pair():
    x = generate_random_subspace(8, 3, 5)
    pb = principal_bases(x, x)
    np.testing.assert_allclose(pb.lam, np.ones(3), atol=1e-12)
    assert pb.u0 is None
    with pytest.raises(DegenerateGeometryError):
        principal_bases(x, x, complement=True)


def test_principal_bases_complement_needs_room():
    x1, x2 = generate_random_subspace(6, 3, 0), generate_random_subspace(6, 4, 1)
    assert principal_bases(x1, x2).u0 is None
    with pytest.raises(DegenerateGeometryError, match="ambient"):
        principal_bases(x1, x2, complement=True)


def test_generate_pair_containment():
    x1, x2, _ = generate_pair_with_angles(20, [1.0, 1.0], 5, seed=3)
    assert distance_sq(x1, x2) == pytest.approx((5 - 2) / 2, abs=1e-12)


def test_generate_pair_orthogonal_line():
    x1, x2, _ = generate_pair_with_angles(20, [0.0], 5, seed=4)
    assert affinity_sq(x1, x2) == pytest.approx(0.0, abs=1e-14)


def test_generate_pair_round_trip():
    for seed in range(20):
        x1, x2, pb = generate_pair_with_angles(40, [0.9, 0.5, 0.1], 6, seed)
        np.testing.assert_allclose(principal_angles(x1, x2).cosines, [0.9, 0.5, 0.1], atol=1e-8)
        _check_principal_structure(pb, 40)


def test_generate_pair_rejections():
    with pytest.raises(RejectedInputError):
        generate_pair_with_angles(8, [0.5, 0.4, 0.3], 6, 0)
    with pytest.raises(RejectedInputError):
        generate_pair_with_angles(20, [0.5, 0.9], 4, 0)
    with pytest.raises(RejectedInputError):
        generate_pair_with_angles(20, [1.2], 4, 0)


def test_random_subspace_full_dimension():
    u = generate_random_subspace(9, 9, 2).basis
    assert np.linalg.norm(u @ u.T - np.eye(9)) <= 1e-9


def test_random_subspace_deterministic():
    a = generate_random_subspace(30, 4, 77).basis
    b = generate_random_subspace(30, 4, 77).basis
    assert a.tobytes() == b.tobytes()


def test_random_lines_nearly_orthogonal_in_high_dimension():
    small = 0
    for t in range(1000):
        u = generate_random_subspace(1000, 1, 2 * t).basis[:, 0]
        v = generate_random_subspace(1000, 1, 2 * t + 1).basis[:, 0]
        small += abs(u @ v) < 0.2
    assert small >= 990


def test_random_subspace_rotation_invariance():
    # first coordinate of a Haar line in R^N: u_1^2 ~ Beta(1/2, (N-1)/2)
    from scipy import stats

    n = 12
    sq = [generate_random_subspace(n, 1, s).basis[0, 0] ** 2 for s in range(3000)]
    assert stats.kstest(sq, stats.beta(0.5, (n - 1) / 2).cdf).pvalue > 1e-3
