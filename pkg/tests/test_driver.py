import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from stable_sde_lab import (
    GridPath,
    JumpPath,
    StableParams,
    laplace_exponent,
    levy_tail_mass,
    path_value,
    sample_exact_increment,
    sample_grid_path,
    sample_truncated_path,
    thin_path,
)
from stable_sde_lab.stats import SampleSet, ks_two_sample


def quadrature_tail_mass(alpha: float, c: float, eps: float) -> float:
    """Independent oracle: integrate the jump density above the cutoff."""
    val, err = quad(lambda h: c * h ** (-1.0 - alpha), eps, np.inf)
    assert err < 1e-6
    return val


class TestTailMass:
    def test_matches_quadrature_alpha_half(self):
        params = StableParams(0.5, 0.5 / math.sqrt(math.pi))
        assert levy_tail_mass(params, 1.0) == pytest.approx(
            quadrature_tail_mass(0.5, params.c, 1.0), rel=1e-12
        )
        assert levy_tail_mass(params, 1.0) == pytest.approx(0.5641895835477563, rel=1e-12)

    def test_matches_quadrature_alpha_07(self):
        params = StableParams(0.7, 1.0)
        assert levy_tail_mass(params, 0.01) == pytest.approx(
            quadrature_tail_mass(0.7, 1.0, 0.01), rel=1e-9
        )
        assert levy_tail_mass(params, 0.01) == pytest.approx(35.88409187870828, rel=1e-12)

    def test_vanishes_for_huge_cutoff(self):
        params = StableParams(0.5, 1.0)
        assert levy_tail_mass(params, 1e300) < 1e-140

    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_rejects_nonpositive_cutoff(self, eps):
        with pytest.raises(ValueError):
            levy_tail_mass(StableParams.default(0.5), eps)


class TestLaplaceExponent:
    def test_default_normalization_anchor(self):
        params = StableParams.default(0.5)
        assert laplace_exponent(params, 1.0) == pytest.approx(1.0, rel=1e-12)
        assert laplace_exponent(params, 4.0) == pytest.approx(2.0, rel=1e-12)

    def test_homogeneity_in_lambda(self):
        params = StableParams(0.3, 2.7)
        ratios = [laplace_exponent(params, lam) / lam**0.3 for lam in (0.1, 1.0, 17.0)]
        assert max(ratios) - min(ratios) < 1e-12 * max(ratios)

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(ValueError):
            laplace_exponent(StableParams.default(0.5), 0.0)


class TestStableParams:
    def test_domain_checks(self):
        with pytest.raises(ValueError):
            StableParams(1.0, 1.0)
        with pytest.raises(ValueError):
            StableParams(0.5, 0.0)

    def test_default_scale_is_unit(self):
        assert StableParams.default(0.5).unit_time_scale == pytest.approx(1.0, rel=1e-12)


class TestTruncatedPath:
    def test_event_count_mean_matches_intensity(self):
        params = StableParams(0.5, 0.5 / math.sqrt(math.pi))
        rate = levy_tail_mass(params, 1.0)
        rng = np.random.default_rng(2024)
        n = 30_000
        counts = np.array(
            [len(sample_truncated_path(params, 1.0, 1.0, rng)) for _ in range(n)]
        )
        band = 3.0 * math.sqrt(rate / n)  # Poisson variance equals the mean
        assert abs(counts.mean() - rate) < band

    def test_jump_size_median_is_pareto_median(self):
        # Pareto CDF 1 - (eps/h)**alpha gives median eps * 2**(1/alpha) = 4.
        params = StableParams.default(0.5)
        rng = np.random.default_rng(7)
        sizes = np.concatenate(
            [sample_truncated_path(params, 50.0, 1.0, rng).sizes for _ in range(40)]
        )
        frac_below = np.mean(sizes <= 4.0)
        assert abs(frac_below - 0.5) < 3.0 * 0.5 / math.sqrt(sizes.size)

    def test_vanishing_intensity_gives_empty_path(self):
        params = StableParams.default(0.5)
        eps = 1e30  # tail mass ~ 1e-15
        assert levy_tail_mass(params, eps) * 1.0 < 1e-12
        path = sample_truncated_path(params, 1.0, eps, np.random.default_rng(0))
        assert len(path) == 0
        assert path.value_at(1.0) == 0.0
        assert path.total == 0.0

    def test_deterministic_given_seed(self):
        params = StableParams.default(0.7)
        a = sample_truncated_path(params, 2.0, 0.01, np.random.default_rng(99))
        b = sample_truncated_path(params, 2.0, 0.01, np.random.default_rng(99))
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.sizes, b.sizes)

    def test_times_inside_interval_and_sorted(self):
        params = StableParams.default(0.6)
        path = sample_truncated_path(params, 3.0, 0.02, np.random.default_rng(5))
        assert np.all(path.times > 0.0)
        assert np.all(path.times <= 3.0)
        assert np.all(np.diff(path.times) > 0.0)
        assert np.all(path.sizes >= 0.02)

    def test_rejects_bad_horizon_or_eps(self):
        params = StableParams.default(0.5)
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_truncated_path(params, 0.0, 0.1, rng)
        with pytest.raises(ValueError):
            sample_truncated_path(params, 1.0, -0.1, rng)


class TestPathValue:
    def test_empty_path(self):
        path = JumpPath(horizon=1.0, times=np.array([]), sizes=np.array([]), cutoff=0.5)
        assert path_value(path, 0.7) == 0.0

    def test_cadlag_convention(self):
        path = JumpPath(
            horizon=1.0, times=np.array([0.5]), sizes=np.array([2.0]), cutoff=0.5
        )
        assert path_value(path, 0.49) == 0.0
        assert path_value(path, 0.5) == 2.0

    def test_sum_of_sizes(self):
        path = JumpPath(
            horizon=1.0,
            times=np.array([0.2, 0.7]),
            sizes=np.array([1.0, 0.5]),
            cutoff=0.25,
        )
        assert path_value(path, 1.0) == 1.5

    def test_rejects_out_of_range(self):
        path = JumpPath(horizon=1.0, times=np.array([]), sizes=np.array([]), cutoff=0.5)
        with pytest.raises(ValueError):
            path_value(path, 1.5)
        with pytest.raises(ValueError):
            path_value(path, -0.1)


class TestThinning:
    def _path(self):
        return JumpPath(
            horizon=1.0,
            times=np.array([0.2, 0.5, 0.9]),
            sizes=np.array([0.3, 1.2, 0.05]),
            cutoff=0.05,
        )

    def test_keeps_only_large_jumps(self):
        thinned = thin_path(self._path(), 0.5)
        assert thinned.sizes.tolist() == [1.2]
        assert thinned.times.tolist() == [0.5]
        assert thinned.cutoff == 0.5

    def test_identity_at_own_cutoff(self):
        path = self._path()
        same = thin_path(path, path.cutoff)
        assert np.array_equal(same.times, path.times)
        assert np.array_equal(same.sizes, path.sizes)

    def test_composition(self):
        path = self._path()
        twice = thin_path(thin_path(path, 0.1), 0.5)
        once = thin_path(path, 0.5)
        assert np.array_equal(twice.times, once.times)
        assert np.array_equal(twice.sizes, once.sizes)

    def test_rejects_thinning_below_cutoff(self):
        with pytest.raises(ValueError):
            thin_path(self._path(), 0.01)

    def test_thinned_value_dominated_exactly(self):
        params = StableParams.default(0.6)
        path = sample_truncated_path(params, 1.0, 0.01, np.random.default_rng(3))
        thinned = thin_path(path, 0.1)
        for t in np.linspace(0.0, 1.0, 101):
            assert thinned.value_at(t) <= path.value_at(t)

    @given(
        e1=st.floats(min_value=0.01, max_value=1.0),
        e2=st.floats(min_value=0.01, max_value=1.0),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=40, deadline=None)
    def test_composition_property(self, e1, e2, seed):
        lo, hi = sorted((e1, e2))
        params = StableParams.default(0.5)
        path = sample_truncated_path(params, 1.0, 0.01, np.random.default_rng(seed))
        via_lo = thin_path(thin_path(path, lo), hi)
        direct = thin_path(path, hi)
        assert np.array_equal(via_lo.times, direct.times)

    def test_thinning_coherence_in_law(self):
        # thin(sample(eps1), eps2) must match sample(eps2) in law: KS on the
        # terminal values and on event counts.
        params = StableParams.default(0.5)
        rng = np.random.default_rng(11)
        n = 1500
        thinned_totals, direct_totals = np.empty(n), np.empty(n)
        thinned_counts, direct_counts = np.empty(n), np.empty(n)
        for i in range(n):
            fine = sample_truncated_path(params, 1.0, 0.05, rng)
            coarse = thin_path(fine, 0.2)
            direct = sample_truncated_path(params, 1.0, 0.2, rng)
            thinned_totals[i], direct_totals[i] = coarse.total, direct.total
            thinned_counts[i], direct_counts[i] = len(coarse), len(direct)
        ks_totals = ks_two_sample(
            SampleSet(thinned_totals, "thinned"), SampleSet(direct_totals, "direct")
        )
        assert ks_totals.p_value > 0.01
        ks_counts = ks_two_sample(
            SampleSet(thinned_counts, "thinned"), SampleSet(direct_counts, "direct")
        )
        assert ks_counts.p_value > 0.01


class TestExactIncrement:
    def test_laplace_transform_at_unit_time(self):
        params = StableParams.default(0.5)
        rng = np.random.default_rng(123)
        z = sample_exact_increment(params, 1.0, rng, size=100_000)
        probe = np.exp(-z)
        band = 3.0 * probe.std(ddof=1) / math.sqrt(probe.size)
        assert abs(probe.mean() - math.exp(-1.0)) < band

    def test_laplace_transform_general_scale(self):
        # E exp(-Z_t) = exp(-t * psi(1)) for any admissible (alpha, c).
        params = StableParams(0.7, 2.0)
        rng = np.random.default_rng(321)
        z = sample_exact_increment(params, 0.5, rng, size=100_000)
        target = math.exp(-0.5 * laplace_exponent(params, 1.0))
        probe = np.exp(-z)
        band = 3.0 * probe.std(ddof=1) / math.sqrt(probe.size)
        assert abs(probe.mean() - target) < band

    def test_self_similarity_ks(self):
        params = StableParams.default(0.5)
        rng = np.random.default_rng(17)
        small = sample_exact_increment(params, 0.25, rng, size=4000)
        scaled = 0.25 ** (1.0 / 0.5) * sample_exact_increment(params, 1.0, rng, size=4000)
        report = ks_two_sample(SampleSet(small, "dt"), SampleSet(scaled, "scaled"))
        assert report.p_value > 0.01

    def test_small_dt_medians_shrink(self):
        params = StableParams.default(0.5)
        rng = np.random.default_rng(29)
        tiny = sample_exact_increment(params, 1e-6, rng, size=4000)
        small = sample_exact_increment(params, 1e-3, rng, size=4000)
        assert np.median(tiny) < np.median(small)
        assert np.all(tiny > 0.0)

    def test_scalar_mode_and_preconditions(self):
        params = StableParams.default(0.5)
        value = sample_exact_increment(params, 1.0, np.random.default_rng(0))
        assert isinstance(value, float) and value > 0.0
        with pytest.raises(ValueError):
            sample_exact_increment(params, 0.0, np.random.default_rng(0))


class TestTruncatedLaplace:
    def test_against_quadrature_oracle(self):
        # E exp(-Z^eps_1) = exp(-int_eps^inf (1-e^-h) nu(dh)); the integral is
        # evaluated by quadrature, the expectation by Monte Carlo.
        params = StableParams.default(0.5)
        eps = 0.1
        integral, err = quad(
            lambda h: (1.0 - np.exp(-h)) * params.c * h ** (-1.5), eps, np.inf
        )
        assert err < 1e-8
        target = math.exp(-integral)
        assert target == pytest.approx(0.43845297940986366, rel=1e-9)
        rng = np.random.default_rng(41)
        n = 20_000
        probe = np.array(
            [
                math.exp(-sample_truncated_path(params, 1.0, eps, rng).total)
                for _ in range(n)
            ]
        )
        band = 3.0 * probe.std(ddof=1) / math.sqrt(n)
        assert abs(probe.mean() - target) < band


class TestGridPath:
    def test_shape_and_monotonicity(self):
        params = StableParams.default(0.5)
        grid = sample_grid_path(params, 2.0, 500, np.random.default_rng(1))
        assert grid.times[0] == 0.0
        assert grid.values[0] == 0.0
        assert grid.horizon == 2.0
        assert np.all(np.diff(grid.values) > 0.0)

    def test_step_evaluation(self):
        grid = GridPath(times=np.array([0.0, 1.0, 2.0]), values=np.array([0.0, 3.0, 5.0]))
        assert grid.value_at(0.5) == 0.0
        assert grid.value_at(1.0) == 3.0
        assert grid.value_at(1.999) == 3.0
        assert grid.value_at(2.0) == 5.0

    def test_validation(self):
        with pytest.raises(ValueError):
            GridPath(times=np.array([0.0, 1.0]), values=np.array([0.0, -1.0]))
        with pytest.raises(ValueError):
            GridPath(times=np.array([0.5, 1.0]), values=np.array([0.0, 1.0]))


class TestSerialization:
    def test_jump_path_csv(self, tmp_path):
        path = JumpPath(
            horizon=1.0,
            times=np.array([0.25, 0.75]),
            sizes=np.array([1.0 / 3.0, 0.1]),
            cutoff=0.05,
        )
        out = tmp_path / "path.csv"
        path.write_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,dz"
        t, dz = lines[1].split(",")
        assert float(t) == 0.25
        assert float(dz) == 1.0 / 3.0  # 17 significant digits round-trip

    def test_grid_path_csv(self, tmp_path):
        grid = GridPath(times=np.array([0.0, 0.5]), values=np.array([0.0, 2.0]))
        out = tmp_path / "grid.csv"
        grid.write_csv(out)
        assert out.read_text().splitlines()[0] == "s,value"


class TestJumpPathValidation:
    def test_rejects_unsorted_times(self):
        with pytest.raises(ValueError):
            JumpPath(
                horizon=1.0,
                times=np.array([0.5, 0.2]),
                sizes=np.array([1.0, 1.0]),
                cutoff=0.5,
            )

    def test_rejects_sizes_below_cutoff(self):
        with pytest.raises(ValueError):
            JumpPath(
                horizon=1.0,
                times=np.array([0.5]),
                sizes=np.array([0.01]),
                cutoff=0.5,
            )

    def test_rejects_times_outside_horizon(self):
        with pytest.raises(ValueError):
            JumpPath(
                horizon=1.0,
                times=np.array([1.5]),
                sizes=np.array([1.0]),
                cutoff=0.5,
            )
