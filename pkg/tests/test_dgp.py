import numpy as np
import pytest

from riskratio import (
    DGPSpec,
    ValidationError,
    export_sample,
    generate,
    load_csv,
    oracle_models,
    softplus_mean_quadrature,
    true_rr,
)
from riskratio.dgp import KINDS

LUNCEFORD_MEAN_COVARIATES = np.array([-0.6, 0.6, 0.2, -0.6, 0.6, 0.35])
LUNCEFORD_BASELINE_COEF = np.array([-1.0, 1.0, -1.0, -1.0, 1.0, 1.0])
LUNCEFORD_MEAN_BASELINE = float(LUNCEFORD_BASELINE_COEF @ LUNCEFORD_MEAN_COVARIATES)  # 2.55


def independent_lunceford_covariates(n, seed):
    """Reference implementation of the mixture covariate law using numpy's RNG."""
    g = np.random.default_rng(seed)
    cov = np.array(
        [
            [1.0, 0.5, -0.5, -0.5],
            [0.5, 1.0, -0.5, -0.5],
            [-0.5, -0.5, 1.0, 0.5],
            [-0.5, -0.5, 0.5, 1.0],
        ]
    )
    x3 = (g.random(n) < 0.2).astype(float)
    mean = np.where(x3[:, None] == 1.0, [1.0, 1.0, -1.0, -1.0], [-1.0, -1.0, 1.0, 1.0])
    block = g.multivariate_normal(np.zeros(4), cov, size=n) + mean
    v3 = (g.random(n) < (0.75 * x3 + 0.25 * (1 - x3))).astype(float)
    return np.column_stack([block[:, 0], block[:, 2], x3, block[:, 1], block[:, 3], v3])


class TestGenerate:
    @pytest.mark.parametrize("kind", KINDS)
    def test_observed_outcome_is_consistent_row_wise(self, kind):
        s = generate(DGPSpec(kind=kind, n=500, seed=1))
        recombined = np.where(s.dataset.t == 1, s.y1, s.y0)
        assert np.array_equal(s.dataset.y, recombined)
        assert np.all((s.e_true > 0.0) & (s.e_true < 1.0))
        assert s.dataset.p == 6

    def test_reproducible_bit_for_bit(self):
        a = generate(DGPSpec(kind="lunceford", n=300, seed=5))
        b = generate(DGPSpec(kind="lunceford", n=300, seed=5))
        assert np.array_equal(a.dataset.x, b.dataset.x)
        assert np.array_equal(a.dataset.y, b.dataset.y)
        assert np.array_equal(a.dataset.t, b.dataset.t)
        c = generate(DGPSpec(kind="lunceford", n=300, seed=6))
        assert not np.array_equal(a.dataset.y, c.dataset.y)

    def test_constant_effect_with_zero_noise(self):
        s = generate(DGPSpec(kind="lunceford", n=200, seed=2, noise_sd=0.0))
        assert np.allclose(s.y1 - s.y0, 2.0)
        assert np.allclose(s.y0, s.dataset.x @ LUNCEFORD_BASELINE_COEF)
        assert np.allclose(s.mu1_true - s.mu0_true, 2.0)

    def test_noise_variance_close_to_nominal(self):
        s = generate(DGPSpec(kind="linear_rct", n=100_000, seed=3, noise_sd=2.0))
        assert np.var(s.y0 - s.mu0_true) == pytest.approx(4.0, rel=0.05)
        assert np.var(s.y1 - s.mu1_true) == pytest.approx(4.0, rel=0.05)

    def test_lunceford_covariate_law_matches_reference(self):
        ours = generate(DGPSpec(kind="lunceford", n=100_000, seed=4)).dataset.x
        ref = independent_lunceford_covariates(10**6, seed=0)
        assert np.allclose(ours.mean(axis=0), ref.mean(axis=0), atol=0.02)
        assert np.allclose(ours.mean(axis=0), LUNCEFORD_MEAN_COVARIATES, atol=0.02)
        b_ours = ours @ LUNCEFORD_BASELINE_COEF
        b_ref = ref @ LUNCEFORD_BASELINE_COEF
        assert b_ours.mean() == pytest.approx(b_ref.mean(), abs=0.05)
        assert b_ours.var() == pytest.approx(b_ref.var(), rel=0.05)

    def test_lunceford_propensity_mean_and_overlap(self):
        sample = generate(DGPSpec(kind="lunceford", n=100_000, seed=7))
        from riskratio.nuisance import expit

        ref = independent_lunceford_covariates(10**6, seed=1)
        target = expit(ref[:, :3] @ np.array([-0.6, 0.6, -0.6])).mean()
        assert sample.e_true.mean() == pytest.approx(target, abs=0.01)
        assert 0.001 < sample.e_true.min() and sample.e_true.max() < 0.999

    def test_uniform_designs_stay_in_unit_cube(self):
        for kind in ("nonlinear_rct", "wager_nl_nonlogistic"):
            s = generate(DGPSpec(kind=kind, n=5_000, seed=8))
            assert s.dataset.x.min() >= 0.0 and s.dataset.x.max() < 1.0

    def test_clipped_sine_propensity_band(self):
        s = generate(DGPSpec(kind="wager_nl_nonlogistic", n=5_000, seed=9))
        assert s.e_true.min() >= 0.1 and s.e_true.max() <= 0.9

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            DGPSpec(kind="unknown", n=10, seed=0)
        with pytest.raises(ValidationError):
            DGPSpec(kind="lunceford", n=0, seed=0)
        with pytest.raises(ValidationError):
            DGPSpec(kind="lunceford", n=10, seed=0, noise_sd=-1.0)


class TestTrueRR:
    def test_linear_design_closed_form(self):
        t = true_rr("linear_rct")
        assert t.value == 2.0 and t.provenance == "closed_form"

    def test_mixture_design_matches_analytic_mean(self):
        t = true_rr("lunceford", mc_draws=10**6, seed=11)
        expected = 2.0 / LUNCEFORD_MEAN_BASELINE + 1.0
        assert t.provenance == "mc_oracle"
        assert t.value == pytest.approx(expected, abs=4 * t.mc_se + 1e-4)
        assert t.mc_draws == 10**6 and t.mc_se < 0.01

    def test_softplus_design_quadrature_agreement(self):
        t = true_rr("wager_nl_logistic", mc_draws=10**6, seed=12)
        by_quadrature = 1.0 / softplus_mean_quadrature(scale_sq=3.0) + 1.0
        assert abs(t.value - by_quadrature) < 1e-3

    def test_quadrature_node_count_stability(self):
        assert softplus_mean_quadrature(nodes=64) == pytest.approx(
            softplus_mean_quadrature(nodes=160), abs=1e-9
        )

    def test_draw_floor_enforced(self):
        with pytest.raises(ValidationError):
            true_rr("lunceford", mc_draws=10**4)


class TestOracleModels:
    def test_outcome_ratio_on_linear_design(self):
        from riskratio import rr_g

        _, mu0, mu1 = oracle_models("linear_rct")
        sample = generate(DGPSpec(kind="linear_rct", n=100_000, seed=13))
        assert rr_g(sample.dataset, mu0, mu1).value == pytest.approx(2.0, abs=0.02)

    def test_randomised_designs_have_constant_half_propensity(self):
        for kind in ("linear_rct", "nonlinear_rct"):
            e_model, _, _ = oracle_models(kind)
            x = generate(DGPSpec(kind=kind, n=50, seed=14)).dataset.x
            assert np.allclose(e_model.predict(x), 0.5)

    def test_logistic_oracle_at_origin_is_half(self):
        e_model, _, _ = oracle_models("wager_nl_logistic")
        row = np.array([3.0, 0.0, 0.0, -2.0, 1.0, 0.5])  # second and third are zero
        assert e_model.predict(row)[0] == 0.5

    @pytest.mark.parametrize("kind", KINDS)
    def test_surfaces_match_generated_truth(self, kind):
        e_model, mu0, mu1 = oracle_models(kind)
        s = generate(DGPSpec(kind=kind, n=400, seed=15))
        assert np.allclose(mu0.predict(s.dataset.x), s.mu0_true)
        assert np.allclose(mu1.predict(s.dataset.x), s.mu1_true)
        assert np.allclose(e_model.predict(s.dataset.x), s.e_true, atol=1e-6)


class TestExport:
    def test_export_round_trip(self, tmp_path):
        s = generate(DGPSpec(kind="lunceford", n=50, seed=16))
        csv_path, sidecar_path = export_sample(s, tmp_path)
        back = load_csv(csv_path)
        assert np.array_equal(back.y, s.dataset.y)
        assert np.array_equal(back.x, s.dataset.x)
        import json

        sidecar = json.loads(open(sidecar_path, encoding="utf-8").read())
        assert np.allclose(sidecar["y0"], s.y0)
        assert np.allclose(sidecar["e_true"], s.e_true)
        assert set(sidecar) == {"y0", "y1", "e_true", "mu0_true", "mu1_true"}
