"""Kernels: CG solver, quickhull volumes, Nelder-Mead."""

import numpy as np
import pytest

from facemakeup.errors import DegenerateGamut, DimensionMismatch, NotConverged
from facemakeup.numerics import (
    Hull3,
    SparseMatrix,
    cg_solve,
    hull_union_volume,
    nelder_mead,
    quickhull3,
)


# --- oracles ----------------------------------------------------------------

def gaussian_elimination(A, b):
    """Dense direct solve with partial pivoting, independent of the CG path."""
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = len(b)
    for col in range(n):
        piv = col + int(np.abs(A[col:, col]).argmax())
        A[[col, piv]] = A[[piv, col]]
        b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            m = A[row, col] / A[col, col]
            A[row, col:] -= m * A[col, col:]
            b[row] -= m * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - A[row, row + 1:].dot(x[row + 1:])) / A[row, row]
    return x


def monte_carlo_hull_volume(hull: Hull3, n_samples: int, seed: int = 0) -> float:
    """Membership-test volume estimate over the hull's bounding box."""
    verts = hull.vertices
    a, b, c = (verts[hull.faces[:, i]] for i in range(3))
    normals = np.cross(b - a, c - a)
    offsets = np.einsum("ij,ij->i", normals, a)

    lo, hi = verts.min(axis=0), verts.max(axis=0)
    box_vol = np.prod(hi - lo)
    rng = np.random.default_rng(seed)
    inside = 0
    chunk = 200_000
    remaining = n_samples
    while remaining:
        k = min(chunk, remaining)
        samples = rng.uniform(lo, hi, size=(k, 3))
        dist = samples @ normals.T - offsets
        inside += int((dist <= 1e-12).all(axis=1).sum())
        remaining -= k
    return box_vol * inside / n_samples


def random_spd(n, rng):
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


# --- cg_solve ---------------------------------------------------------------

class TestCgSolve:
    def test_identity(self):
        A = SparseMatrix.identity(4)
        b = np.array([1.0, 2.0, 3.0, 4.0])
        x = cg_solve(A, b, tol=1e-12, max_iter=50)
        np.testing.assert_allclose(x, b, atol=1e-12)

    def test_diagonal_scaling(self):
        A = SparseMatrix.from_triplets([0, 1, 2], [0, 1, 2], [2.0, 2.0, 2.0], (3, 3),
                                       symmetric=True)
        x = cg_solve(A, np.array([2.0, 4.0, 6.0]), tol=1e-12, max_iter=50)
        np.testing.assert_allclose(x, [1.0, 2.0, 3.0], atol=1e-12)

    def test_random_spd_matches_dense_oracle(self):
        rng = np.random.default_rng(7)
        dense = random_spd(6, rng)
        b = rng.standard_normal(6)
        expected = gaussian_elimination(dense, b)
        rows, cols = np.nonzero(dense)
        A = SparseMatrix.from_triplets(rows, cols, dense[rows, cols], (6, 6),
                                       symmetric=True)
        x = cg_solve(A, b, tol=1e-10, max_iter=500)
        np.testing.assert_allclose(x, expected, atol=1e-8)

    def test_spd_fixtures_within_ten_times_tol(self):
        rng = np.random.default_rng(21)
        for n in (3, 8, 20, 40):
            dense = random_spd(n, rng)
            b = rng.standard_normal(n)
            expected = gaussian_elimination(dense, b)
            rows, cols = np.nonzero(dense)
            A = SparseMatrix.from_triplets(rows, cols, dense[rows, cols], (n, n),
                                           symmetric=True)
            tol = 1e-9
            x = cg_solve(A, b, tol=tol, max_iter=10 * n)
            rel = np.linalg.norm(x - expected) / np.linalg.norm(expected)
            assert rel <= 10 * tol

    def test_dimension_mismatch(self):
        A = SparseMatrix.identity(4)
        with pytest.raises(DimensionMismatch):
            cg_solve(A, np.ones(3), tol=1e-8, max_iter=10)

    def test_not_converged_carries_residual(self):
        rng = np.random.default_rng(3)
        dense = random_spd(30, rng)
        rows, cols = np.nonzero(dense)
        A = SparseMatrix.from_triplets(rows, cols, dense[rows, cols], (30, 30),
                                       symmetric=True)
        with pytest.raises(NotConverged) as err:
            cg_solve(A, rng.standard_normal(30), tol=1e-14, max_iter=2)
        assert err.value.residual is not None and err.value.residual > 0

    def test_duplicate_triplets_are_summed(self):
        A = SparseMatrix.from_triplets([0, 0, 1], [0, 0, 1], [1.0, 1.0, 2.0], (2, 2),
                                       symmetric=True)
        np.testing.assert_allclose(A.dense(), [[2.0, 0.0], [0.0, 2.0]])

    def test_asymmetric_flagged_matrix_rejected(self):
        with pytest.raises(DimensionMismatch):
            SparseMatrix.from_triplets([0, 1], [1, 0], [1.0, 2.0], (2, 2),
                                       symmetric=True)


# --- quickhull3 -------------------------------------------------------------

UNIT_CUBE = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)],
                     dtype=float)


class TestQuickhull:
    def test_unit_cube_volume(self):
        hull = quickhull3(UNIT_CUBE)
        assert hull.volume == pytest.approx(1.0, abs=1e-12)

    def test_standard_simplex_volume(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
        hull = quickhull3(pts)
        assert hull.volume == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_random_ball_cloud_matches_monte_carlo(self):
        rng = np.random.default_rng(11)
        pts = rng.standard_normal((50, 3))
        pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1))[:, None]
        hull = quickhull3(pts)
        mc = monte_carlo_hull_volume(hull, 1_000_000, seed=5)
        assert hull.volume == pytest.approx(mc, rel=0.01)

    def test_all_points_inside_or_on_hull(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            pts = rng.uniform(-1, 1, size=(rng.integers(4, 120), 3))
            try:
                hull = quickhull3(pts)
            except DegenerateGamut:
                continue
            a, b, c = (hull.vertices[hull.faces[:, i]] for i in range(3))
            normals = np.cross(b - a, c - a)
            normals /= np.linalg.norm(normals, axis=1)[:, None]
            offsets = np.einsum("ij,ij->i", normals, a)
            dist = pts @ normals.T - offsets
            diag = np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))
            assert dist.max() <= 1e-9 * diag

    def test_volume_is_signed_tetrahedron_sum(self):
        rng = np.random.default_rng(4)
        hull = quickhull3(rng.standard_normal((40, 3)))
        centroid = hull.vertices.mean(axis=0)
        spans = hull.vertices[hull.faces] - centroid
        signed = np.linalg.det(spans) / 6.0
        assert (signed > 0).all()
        assert signed.sum() == pytest.approx(hull.volume, rel=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(23)
        pts = rng.uniform(size=(60, 3))
        base = quickhull3(pts).volume
        for seed in range(5):
            perm = np.random.default_rng(seed).permutation(60)
            assert quickhull3(pts[perm]).volume == pytest.approx(base, rel=1e-9)

    def test_scaling_law(self):
        rng = np.random.default_rng(29)
        pts = rng.uniform(size=(40, 3))
        base = quickhull3(pts).volume
        for s in (0.5, 2.0, 7.3):
            assert quickhull3(s * pts).volume == pytest.approx(s ** 3 * base, rel=1e-9)

    @pytest.mark.parametrize("pts", [
        np.zeros((4, 3)),                                       # coincident
        np.array([[0, 0, 0], [1, 1, 1], [2, 2, 2], [3, 3, 3]], dtype=float),  # collinear
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float),  # coplanar
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float),             # too few
    ])
    def test_degenerate_inputs_rejected(self, pts):
        with pytest.raises(DegenerateGamut):
            quickhull3(pts)


class TestHullUnion:
    def test_idempotent_union(self):
        hull = quickhull3(UNIT_CUBE)
        assert hull_union_volume(hull, hull) == pytest.approx(1.0, abs=1e-12)

    def test_shifted_cubes_form_prism(self):
        a = quickhull3(UNIT_CUBE)
        b = quickhull3(UNIT_CUBE + np.array([2.0, 0.0, 0.0]))
        vol = hull_union_volume(a, b)
        assert vol == pytest.approx(3.0, abs=1e-9)
        mc = monte_carlo_hull_volume(
            quickhull3(np.vstack([a.vertices, b.vertices])), 1_000_000, seed=9)
        assert vol == pytest.approx(mc, rel=0.01)

    def test_symmetry_and_monotonicity(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            a = quickhull3(rng.uniform(size=(20, 3)))
            b = quickhull3(rng.uniform(-0.5, 1.5, size=(20, 3)))
            ab = hull_union_volume(a, b)
            ba = hull_union_volume(b, a)
            assert ab == pytest.approx(ba, rel=1e-9)
            assert ab >= max(a.volume, b.volume) - 1e-12

    def test_union_with_contained_hull(self):
        outer = quickhull3(2.0 * UNIT_CUBE)
        inner = quickhull3(0.5 * UNIT_CUBE + 0.5)
        assert hull_union_volume(outer, inner) == pytest.approx(outer.volume, rel=1e-12)


# --- nelder_mead ------------------------------------------------------------

class TestNelderMead:
    def test_convex_quadratic(self):
        res = nelder_mead(lambda x: float(x @ x), np.array([3.0, 4.0]),
                          scale=1.0, tol=1e-10, max_iter=500)
        assert res.converged
        assert np.linalg.norm(res.x) < 1e-4

    def test_rosenbrock(self):
        def rosen(x):
            return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)

        res = nelder_mead(rosen, np.array([-1.2, 1.0]), scale=0.5,
                          tol=1e-12, max_iter=5000)
        assert np.linalg.norm(res.x - 1.0) < 1e-3

    def test_coincident_hull_energy_objective(self):
        rng = np.random.default_rng(13)
        pts = rng.uniform(size=(30, 3))
        hull = quickhull3(pts)

        def energy(params):
            T = params.reshape(3, 3)
            if abs(np.linalg.det(T)) < 1e-9:
                return float("inf")
            try:
                mapped = quickhull3(hull.vertices @ T.T)
            except DegenerateGamut:
                return float("inf")
            union = hull_union_volume(mapped, hull)
            return 2.0 * union - hull.volume - mapped.volume

        res = nelder_mead(energy, np.eye(3).ravel(), scale=0.05,
                          tol=1e-9, max_iter=3000)
        assert res.value < 1e-6

    def test_final_value_never_exceeds_initial(self):
        rng = np.random.default_rng(37)
        for seed in range(10):
            coeffs = rng.uniform(0.5, 3.0, size=4)
            x0 = rng.standard_normal(4)

            def bowl(x, c=coeffs):
                return float(np.sum(c * x ** 4) + np.sum(np.abs(x)))

            res = nelder_mead(bowl, x0, scale=0.3, tol=1e-8, max_iter=60)
            assert res.value <= bowl(x0) + 1e-15

    def test_unconverged_returns_flag(self):
        res = nelder_mead(lambda x: float(x @ x), np.array([5.0, 5.0]),
                          scale=0.5, tol=1e-16, max_iter=3)
        assert not res.converged
        assert res.value <= 50.0
