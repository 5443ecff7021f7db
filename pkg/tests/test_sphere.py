import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import betainc

from ntk_spectrum.errors import DomainError
from ntk_spectrum.sphere import (
    Dataset, cap_volume_bounds, load_dataset, operator_norm, sample_uniform_sphere,
    separation_stats,
)

E1, E2, E3 = np.eye(3)

# Once-calibrated constant for the cap upper bound: the exact cap fraction
# requires C >= 1.0906 (attained near d0 = 17); see tests below.
CAP_CONST = 1.1


def exact_cap_fraction(d0, delta):
    """Normalized area of {y : |y - x| <= delta} via the regularized incomplete beta."""
    phi = 2.0 * math.asin(delta / 2.0)
    return 0.5 * betainc((d0 - 1) / 2.0, 0.5, math.sin(phi) ** 2)


class TestDataset:
    def test_rejects_non_unit_columns(self):
        with pytest.raises(DomainError):
            Dataset(np.array([[1.0, 2.0], [0.0, 0.0]]))

    def test_normalize_flag(self):
        data = Dataset.from_points(np.array([[3.0], [4.0]]), normalize=True)
        np.testing.assert_allclose(data.points[:, 0], [0.6, 0.8])

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            Dataset(np.zeros((3, 0)))

    def test_immutable(self):
        data = sample_uniform_sphere(3, 4, 0)
        with pytest.raises(ValueError):
            data.points[0, 0] = 1.0

    def test_json_round_trip_is_exact(self):
        data = sample_uniform_sphere(5, 7, 11)
        back = Dataset.from_json(data.to_json())
        assert np.array_equal(back.points, data.points)

    def test_csv_round_trip_is_exact(self, tmp_path):
        data = sample_uniform_sphere(4, 6, 3)
        text = data.to_csv()
        assert text.splitlines()[0] == "x0,x1,x2,x3"
        path = tmp_path / "pts.csv"
        path.write_text(text)
        assert np.array_equal(load_dataset(path).points, data.points)


class TestSampling:
    def test_single_point_unit_norm(self):
        data = sample_uniform_sphere(3, 1, 42)
        assert abs(np.linalg.norm(data.points[:, 0]) - 1.0) <= 1e-12

    def test_deterministic(self):
        a = sample_uniform_sphere(3, 10, 7)
        b = sample_uniform_sphere(3, 10, 7)
        assert np.array_equal(a.points, b.points)

    def test_prefix_property(self):
        a = sample_uniform_sphere(4, 10, 5)
        b = sample_uniform_sphere(4, 3, 5)
        assert np.array_equal(a.points[:, :3], b.points)

    def test_mean_vector_small(self):
        # sd of the mean norm is about sqrt(1/5000) ~ 0.014; 0.05 clears every seed tried
        for seed in range(20):
            data = sample_uniform_sphere(3, 5000, seed)
            assert np.linalg.norm(data.points.mean(axis=1)) < 0.05

    @pytest.mark.parametrize("d0,n", [(0, 3), (3, 0)])
    def test_domain(self, d0, n):
        with pytest.raises(DomainError):
            sample_uniform_sphere(d0, n, 0)


class TestSeparation:
    def test_antipodal(self):
        s = separation_stats(Dataset(np.column_stack([E1, -E1])))
        assert s.delta == 0.0
        assert s.delta_prime == 2.0

    def test_orthogonal(self):
        s = separation_stats(Dataset(np.column_stack([E1, E2])))
        assert s.delta == pytest.approx(math.sqrt(2), abs=1e-15)
        assert s.delta_prime == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_three_points(self):
        s = separation_stats(Dataset(np.column_stack([E1, E2, (E1 + E2) / math.sqrt(2)])))
        target = math.sqrt(2 - math.sqrt(2))
        assert s.delta == pytest.approx(target, abs=1e-15)
        assert s.delta_prime == pytest.approx(target, abs=1e-15)
        assert set(s.argmin_pair) in ({0, 2}, {1, 2})

    def test_single_point_sentinel(self):
        s = separation_stats(sample_uniform_sphere(3, 1, 0))
        assert s.delta == math.inf and s.delta_prime == math.inf and s.argmin_pair is None

    def test_matches_brute_force(self):
        data = sample_uniform_sphere(5, 30, 2)
        X = data.points
        minus = min(np.linalg.norm(X[:, i] - X[:, k]) for i in range(30) for k in range(i + 1, 30))
        plus = min(np.linalg.norm(X[:, i] + X[:, k]) for i in range(30) for k in range(i + 1, 30))
        s = separation_stats(data)
        assert s.delta_prime == pytest.approx(minus, rel=1e-14)
        assert s.delta == pytest.approx(min(minus, plus), rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32), n=st.integers(2, 12), flip=st.integers(0, 11))
    def test_permutation_and_sign_invariance(self, seed, n, flip):
        data = sample_uniform_sphere(3, n, seed)
        base = separation_stats(data)
        assert base.delta <= base.delta_prime
        perm = np.random.default_rng(seed).permutation(n)
        X = data.points[:, perm].copy()
        X[:, flip % n] *= -1.0
        other = separation_stats(Dataset(X))
        assert other.delta == pytest.approx(base.delta, rel=1e-12)


class TestOperatorNorm:
    def test_duplicate_column(self):
        assert operator_norm(Dataset(np.column_stack([E1, E1]))) == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_orthonormal(self):
        assert operator_norm(Dataset(np.column_stack([E1, E2]))) == pytest.approx(1.0, rel=1e-15)

    def test_two_by_two_gram(self):
        data = Dataset(np.column_stack([E1, (E1 + E2) / math.sqrt(2)]))
        assert operator_norm(data) == pytest.approx(math.sqrt(1 + 1 / math.sqrt(2)), rel=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32), d0=st.integers(1, 8), n=st.integers(1, 40))
    def test_trace_bound(self, seed, d0, n):
        assert operator_norm(sample_uniform_sphere(d0, n, seed)) ** 2 <= n * (1 + 1e-12)

    def test_concentrates_near_linear_in_n_over_d(self):
        # |X|^2 for uniform data grows like 1 + c n / d0; fit c and check it is O(1)
        d0 = 20
        ratios = []
        for n in (20, 80, 320):
            vals = [operator_norm(sample_uniform_sphere(d0, n, s)) ** 2 for s in range(10)]
            ratios.append((np.median(vals) - 1.0) / (n / d0))
        assert all(0.3 < r < 4.0 for r in ratios)


class TestCapBounds:
    def test_example_values(self):
        lower, upper = cap_volume_bounds(3, 0.25, 1.0)
        assert lower == pytest.approx(0.0078125, rel=1e-15)
        assert upper == pytest.approx(4 * math.sqrt(math.pi) * 0.0625 / 9, rel=1e-15)
        assert upper == pytest.approx(0.04924, abs=1e-5)

    @pytest.mark.parametrize("delta", [0.0, 0.5, 0.7])
    def test_domain(self, delta):
        with pytest.raises(DomainError):
            cap_volume_bounds(3, delta)

    def test_exact_fraction_matches_monte_carlo(self):
        rng = np.random.default_rng(0)
        for d0, delta in [(2, 0.3), (3, 0.4), (4, 0.45)]:
            U = rng.standard_normal((400_000, d0))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
            x = np.zeros(d0)
            x[0] = 1.0
            freq = np.mean(np.linalg.norm(U - x, axis=1) <= delta)
            se = math.sqrt(freq * (1 - freq) / U.shape[0])
            assert abs(freq - exact_cap_fraction(d0, delta)) <= 4 * se

    def test_bracket_holds_with_calibrated_constant(self):
        for d0 in range(2, 41):
            for delta in np.linspace(1e-3, 0.499, 60):
                lower, upper = cap_volume_bounds(d0, float(delta), CAP_CONST)
                exact = exact_cap_fraction(d0, float(delta))
                assert lower <= exact <= upper, (d0, delta)

    def test_unit_constant_is_too_small_in_higher_dimension(self):
        # with C = 1 the upper bound undershoots the true cap for d0 >= 7
        _, upper = cap_volume_bounds(10, 0.01, 1.0)
        assert upper < exact_cap_fraction(10, 0.01)
