import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multicause import (
    AsymptoticFrame,
    InvalidScalingError,
    StructuralParams,
    asymptotic_shift_ratio,
    equivalent_params,
    ignorance_multiplier,
    implied_outcome_variance,
    observable_covariance,
    valid_c_range,
)


def params_m3():
    return StructuralParams(
        alpha=np.ones(3),
        beta=np.array([1.0, 0.0, 0.0]),
        gamma=1.0,
        sigma2_u=1.0,
        sigma2_a=np.ones(3),
        sigma2_y=1.0,
    )


def exchangeable(m, a, b, gamma=1.0, sigma2_u=1.0, sigma2_a=1.0, sigma2_y=1.0):
    ones = np.ones(m)
    return StructuralParams(
        alpha=a * ones,
        beta=b * ones,
        gamma=gamma,
        sigma2_u=sigma2_u,
        sigma2_a=sigma2_a * ones,
        sigma2_y=sigma2_y,
    )


class TestObservableCovariance:
    def test_m3_worked_example(self):
        cov = observable_covariance(params_m3())
        expected_aa = np.full((3, 3), 1.0) + np.eye(3)
        assert np.array_equal(cov.sigma_aa, expected_aa)
        assert np.array_equal(cov.sigma_ay, [3.0, 2.0, 2.0])
        assert cov.sigma_yy == 6.0

    def test_m3_against_monte_carlo(self):
        # Independent oracle: sample covariance of 1e6 draws from the
        # structural equations themselves.
        p = params_m3()
        rng = np.random.default_rng(42)
        n = 1_000_000
        u = rng.normal(0.0, 1.0, n)
        a = np.outer(u, p.alpha) + rng.normal(0.0, 1.0, (n, 3))
        y = a @ p.beta + p.gamma * u + rng.normal(0.0, 1.0, n)
        emp = np.cov(np.column_stack([a, y]).T)
        assert np.max(np.abs(emp - observable_covariance(p).full_matrix())) < 0.02

    def test_zero_loading_reduces_to_noise(self):
        p = StructuralParams(
            alpha=np.zeros(2),
            beta=np.array([0.5, -1.0]),
            gamma=0.0,
            sigma2_u=1.0,
            sigma2_a=np.array([2.0, 3.0]),
            sigma2_y=0.5,
        )
        cov = observable_covariance(p)
        assert np.array_equal(cov.sigma_aa, np.diag([2.0, 3.0]))
        assert np.array_equal(cov.sigma_ay, np.diag([2.0, 3.0]) @ p.beta)
        assert cov.sigma_yy == p.beta @ (p.sigma2_a * p.beta) + 0.5

    def test_null_effect_gives_zero_cross_covariance(self):
        p = StructuralParams(
            alpha=np.array([1.0, -2.0]),
            beta=np.zeros(2),
            gamma=0.0,
            sigma2_u=0.7,
            sigma2_a=np.array([1.0, 1.5]),
            sigma2_y=2.0,
        )
        assert np.array_equal(observable_covariance(p).sigma_ay, np.zeros(2))

    @pytest.mark.parametrize("field", ["sigma2_u", "sigma2_y"])
    def test_rejects_nonpositive_variances(self, field):
        kwargs = dict(
            alpha=np.ones(2),
            beta=np.ones(2),
            gamma=0.0,
            sigma2_u=1.0,
            sigma2_a=np.ones(2),
            sigma2_y=1.0,
        )
        kwargs[field] = 0.0
        with pytest.raises(ValueError, match="positive"):
            StructuralParams(**kwargs)

    def test_rejects_nonpositive_noise_vector(self):
        with pytest.raises(ValueError, match="positive"):
            StructuralParams(
                alpha=np.ones(2),
                beta=np.ones(2),
                gamma=0.0,
                sigma2_u=1.0,
                sigma2_a=np.array([1.0, -1.0]),
                sigma2_y=1.0,
            )

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            StructuralParams(
                alpha=np.ones(3),
                beta=np.ones(2),
                gamma=0.0,
                sigma2_u=1.0,
                sigma2_a=np.ones(3),
                sigma2_y=1.0,
            )


class TestEquivalentParams:
    def test_identity_scaling_returns_params_unchanged(self):
        p = params_m3()
        q = equivalent_params(p, 1.0)
        assert np.array_equal(q.alpha, p.alpha)
        assert np.array_equal(q.beta, p.beta)
        assert (q.gamma, q.sigma2_u, q.sigma2_y) == (p.gamma, p.sigma2_u, p.sigma2_y)

    def test_m3_at_c2(self):
        # Sigma_AA^{-1} alpha = 0.25 * ones by direct solve on (I + J).
        p = params_m3()
        solved = np.linalg.solve(observable_covariance(p).sigma_aa, p.alpha)
        assert np.allclose(solved, 0.25, rtol=0, atol=1e-14)
        q = equivalent_params(p, 2.0)
        assert np.allclose(q.beta, [1.125, 0.125, 0.125], rtol=0, atol=1e-14)
        assert np.allclose(
            observable_covariance(q).full_matrix(),
            observable_covariance(p).full_matrix(),
            rtol=1e-12,
        )

    def test_gamma_zero_leaves_beta_exactly(self):
        p = StructuralParams(
            alpha=np.array([1.0, 2.0, -0.5]),
            beta=np.array([0.3, -0.2, 1.1]),
            gamma=0.0,
            sigma2_u=0.8,
            sigma2_a=np.array([1.0, 2.0, 0.5]),
            sigma2_y=1.5,
        )
        for c in (0.25, 0.5, 2.0, 7.0):
            assert np.array_equal(equivalent_params(p, c).beta, p.beta)

    def test_invalid_scaling_raises_naming_outcome_variance(self):
        p = params_m3()
        grid = np.geomspace(0.01, 1.0, 200)
        invalid = sorted(set(grid) - set(valid_c_range(p, grid)))
        assert invalid, "expected some invalid scaling factors at small c"
        with pytest.raises(InvalidScalingError, match="sigma2_y1"):
            equivalent_params(p, invalid[0])

    def test_rejects_nonpositive_c(self):
        with pytest.raises(ValueError, match="positive"):
            equivalent_params(params_m3(), -1.0)


class TestValidCRange:
    def test_contains_one(self):
        grid = np.array([0.5, 1.0, 2.0])
        assert 1.0 in valid_c_range(params_m3(), grid)

    def test_gamma_zero_keeps_whole_grid(self):
        p = exchangeable(4, a=1.0, b=0.5, gamma=0.0)
        grid = np.geomspace(0.01, 100.0, 50)
        assert np.array_equal(valid_c_range(p, grid), grid)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            valid_c_range(params_m3(), [])

    def test_nonpositive_grid_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            valid_c_range(params_m3(), [0.5, 0.0])

    def test_boundary_brackets_sign_change(self):
        # Root-bracketing oracle: sigma2_y1 changes sign exactly where the
        # valid subset of the grid starts.
        p = params_m3()
        grid = np.arange(0.1, 5.01, 0.1)
        valid = valid_c_range(p, grid)
        s2 = np.array([implied_outcome_variance(p, c) for c in grid])
        first_valid = grid[s2 > 0][0]
        assert valid[0] == pytest.approx(first_valid)
        below = grid[grid < first_valid]
        assert below.size > 0 and implied_outcome_variance(p, below[-1]) <= 0
        assert implied_outcome_variance(p, first_valid) > 0


class TestIgnoranceMultiplier:
    def test_identity_scaling(self):
        assert ignorance_multiplier(exchangeable(6, 1.0, 0.1), 1.0) == 1.0

    def test_gamma_zero_is_constant_one(self):
        p = exchangeable(6, 1.0, 0.1, gamma=0.0)
        for c in (0.2, 0.7, 3.0):
            assert ignorance_multiplier(p, c) == 1.0

    def test_multiplier_spans_negative_and_above_one(self):
        # The effect-scale sweep must reach the opposite sign of the truth as
        # well as overstatements; verified componentwise on beta1 over the
        # valid grid.  (The sign change requires a weak effect relative to the
        # loading; a = b = 0.5 keeps s(c) within [0.65, 1.40] and never flips.)
        p = exchangeable(6, a=1.0, b=0.1)
        valid = valid_c_range(p, np.geomspace(0.01, 200.0, 2000))
        s = np.array([ignorance_multiplier(p, c) for c in valid])
        for c, s_c in zip(valid[:: len(valid) // 20], s[:: len(valid) // 20]):
            beta1 = equivalent_params(p, c).beta
            assert np.allclose(beta1, s_c * p.beta, rtol=1e-10)
        assert s.min() < 0.0
        assert s.max() > 1.0

    def test_requires_constant_vectors(self):
        p = params_m3()  # beta = (1, 0, 0) is not constant
        with pytest.raises(ValueError, match="constant"):
            ignorance_multiplier(p, 2.0)

    def test_requires_nonzero_effect(self):
        with pytest.raises(ValueError, match="nonzero"):
            ignorance_multiplier(exchangeable(4, 1.0, 0.0), 2.0)


class TestAsymptoticFrame:
    def frame(self):
        return AsymptoticFrame(a0=1.0, b0=1.0, s0_sq=1.0, gamma=1.0, sigma2_u=1.0, sigma2_y=1.0)

    def test_identity_and_no_confounding_give_zero(self):
        assert asymptotic_shift_ratio(self.frame(), 1.0) == 0.0
        fr = AsymptoticFrame(a0=1.0, b0=2.0, s0_sq=1.0, gamma=0.0, sigma2_u=1.0, sigma2_y=1.0)
        assert asymptotic_shift_ratio(fr, 3.0) == 0.0

    def test_quarter_at_c2(self):
        assert asymptotic_shift_ratio(self.frame(), 2.0) == pytest.approx(0.25, abs=1e-15)

    def test_matches_finite_m_shift_componentwise(self):
        fr = AsymptoticFrame(a0=1.3, b0=0.7, s0_sq=1.5, gamma=0.8, sigma2_u=1.2, sigma2_y=2.0)
        for c in (0.6, 2.0, 5.0):
            ratio = asymptotic_shift_ratio(fr, c)
            for m in (10, 100, 1000):
                pm = fr.params_at(m)
                q = equivalent_params(pm, c)
                component_ratios = (q.beta - pm.beta) / pm.beta
                assert np.max(np.abs(component_ratios - ratio)) < 1e-8
                assert component_ratios.max() - component_ratios.min() < 1e-10

    def test_sherman_morrison_consistency(self):
        # Closed form for constant loadings: Sigma_AA^{-1} alpha =
        # m^{-1/2} * ones * a0 / (s0_sq + sigma2_u a0^2).
        fr = AsymptoticFrame(a0=0.9, b0=1.1, s0_sq=2.0, gamma=1.0, sigma2_u=0.5, sigma2_y=1.0)
        for m in (10, 100, 1000):
            pm = fr.params_at(m)
            solved = np.linalg.solve(observable_covariance(pm).sigma_aa, pm.alpha)
            closed = np.ones(m) / np.sqrt(m) * fr.a0 / (fr.s0_sq + fr.sigma2_u * fr.a0**2)
            assert np.max(np.abs(solved - closed)) < 1e-10

    def test_rejects_zero_b0(self):
        fr = AsymptoticFrame(a0=1.0, b0=0.0, s0_sq=1.0, gamma=1.0, sigma2_u=1.0, sigma2_y=1.0)
        with pytest.raises(ValueError, match="b0"):
            asymptotic_shift_ratio(fr, 2.0)


@st.composite
def random_params(draw, max_m=6):
    m = draw(st.integers(min_value=1, max_value=max_m))
    finite = dict(allow_nan=False, allow_infinity=False)
    alpha = draw(
        st.lists(st.floats(-2.0, 2.0, **finite), min_size=m, max_size=m)
    )
    beta = draw(st.lists(st.floats(-2.0, 2.0, **finite), min_size=m, max_size=m))
    gamma = draw(st.floats(-2.0, 2.0, **finite))
    sigma2_u = draw(st.floats(0.2, 3.0, **finite))
    sigma2_a = draw(st.lists(st.floats(0.2, 3.0, **finite), min_size=m, max_size=m))
    sigma2_y = draw(st.floats(0.5, 3.0, **finite))
    return StructuralParams(
        alpha=np.array(alpha),
        beta=np.array(beta),
        gamma=gamma,
        sigma2_u=sigma2_u,
        sigma2_a=np.array(sigma2_a),
        sigma2_y=sigma2_y,
    )


class TestEquivalenceClassProperties:
    @settings(max_examples=60, deadline=None)
    @given(random_params(), st.floats(0.3, 3.0, allow_nan=False))
    def test_equivalence_class_soundness(self, p, c):
        if valid_c_range(p, [c]).size == 0:
            return
        q = equivalent_params(p, c)
        assert np.allclose(
            observable_covariance(q).full_matrix(),
            observable_covariance(p).full_matrix(),
            rtol=1e-10,
            atol=1e-12,
        )

    @settings(max_examples=60, deadline=None)
    @given(random_params(), st.floats(0.3, 3.0, allow_nan=False))
    def test_non_identification_witness(self, p, c):
        # Any confounded model with nonzero loadings admits a structurally
        # different effect vector at every valid c != 1.  Loadings must sit
        # above float-noise scale or the shift underflows beta + shift == beta.
        if abs(p.gamma) < 1e-3 or np.max(np.abs(p.alpha)) < 1e-3 or abs(c - 1.0) < 1e-3:
            return
        if valid_c_range(p, [c]).size == 0:
            return
        q = equivalent_params(p, c)
        assert np.max(np.abs(q.beta - p.beta)) > 0.0
