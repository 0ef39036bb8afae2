import json

import numpy as np
import pytest

from sshwalk import (
    ChainGenerator,
    FeedbackConfig,
    RateConfig,
    SetLeadConfig,
    build_feedback_generator,
    build_local_blocks,
    build_set_generator,
    build_ssh_generator,
    counting_generator,
)

from helpers import embedded_dense

FERMI_AT_ONE_THERMAL = 0.2689414213699951  # 1/(e+1)


class TestRateConfig:
    def test_bias_parameterization(self):
        rc = RateConfig(gamma_bar=1.0, alpha=0.5)
        assert rc.gamma_L == 1.5 and rc.gamma_R == 0.5
        assert rc.gamma_L + rc.gamma_R == 2.0 * rc.gamma_bar  # exact

    def test_coupling_parameterization(self):
        rc = RateConfig(gamma_L=1.5, gamma_R=0.5)
        assert rc.gamma_bar == 1.0 and rc.alpha == 0.5

    def test_both_must_agree(self):
        RateConfig(gamma_bar=1.0, alpha=0.5, gamma_L=1.5, gamma_R=0.5)
        with pytest.raises(ValueError):
            RateConfig(gamma_bar=1.0, alpha=0.5, gamma_L=1.5, gamma_R=0.6)

    @pytest.mark.parametrize("kw", [
        {},
        {"gamma_bar": 1.0},
        {"gamma_bar": 1.0, "alpha": 1.0},     # gamma_R = 0
        {"gamma_bar": 1.0, "alpha": -1.5},    # gamma_L < 0
        {"gamma_L": -0.1, "gamma_R": 1.0},
    ])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            RateConfig(**kw)


class TestLocalBlocks:
    def test_direct_substitution(self):
        L0, Lp, Lm = build_local_blocks(RateConfig(gamma_bar=1.0, alpha=0.5))
        assert np.array_equal(L0, [[-2.0, 1.5], [1.5, -2.0]])
        assert np.array_equal(Lp, [[0.0, 0.5], [0.0, 0.0]])
        assert np.array_equal(Lm, Lp.T)

    def test_unbiased_walk(self):
        L0, Lp, _ = build_local_blocks(RateConfig(gamma_bar=1.0, alpha=0.0))
        assert Lp[0, 1] == L0[0, 1]

    def test_column_sums_vanish(self):
        L0, Lp, Lm = build_local_blocks(RateConfig(gamma_bar=1.0, alpha=-0.5))
        assert L0[0, 1] == 0.5 and Lp[0, 1] == 1.5
        total = (L0 + Lp + Lm).sum(axis=0)
        assert np.max(np.abs(total)) < 1e-12


class TestSshGenerator:
    def test_even_chain(self):
        gen = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.5), 4)
        assert np.array_equal(gen.diagonal, [-2.0] * 4)
        assert np.array_equal(gen.off_diagonal, [1.5, 0.5, 1.5])
        assert np.array_equal(gen.jump_left, [0.5, 0, 0, 0])
        assert np.array_equal(gen.jump_right, [0, 0, 0, 0.5])

    def test_odd_chain_right_jump_is_gamma_L(self):
        gen = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.5), 3)
        assert np.array_equal(gen.off_diagonal, [1.5, 0.5])
        assert gen.jump_right[2] == 1.5

    def test_gap_closing_point_is_uniform(self):
        gen = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.0), 7)
        assert np.all(gen.off_diagonal == 1.0)

    def test_rejects_zero_sites(self):
        with pytest.raises(ValueError):
            build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.1), 0)

    @pytest.mark.parametrize("n", [1, 2, 3, 10, 17, 18])
    @pytest.mark.parametrize("alpha", [-0.7, -0.123, 0.4, 0.9])
    def test_conservation_and_chirality(self, n, alpha):
        gen = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=alpha), n)
        # every diagonal entry is exactly -2 gamma_bar
        assert np.all(gen.diagonal == -2.0)
        # embedding the section with its jump vectors conserves probability
        cols = embedded_dense(gen)[:, 1:-1].sum(axis=0)
        assert np.max(np.abs(cols)) < 1e-12

    @pytest.mark.parametrize("n", [3, 5, 9, 17])
    def test_site_reversal_flips_alpha_for_odd_chains(self, n):
        plus = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.37), n)
        minus = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=-0.37), n)
        assert np.allclose(plus.off_diagonal[::-1], minus.off_diagonal, atol=1e-15)
        assert np.allclose(plus.jump_left[::-1], minus.jump_right, atol=1e-15)
        assert np.allclose(plus.jump_right[::-1], minus.jump_left, atol=1e-15)

    @pytest.mark.parametrize("n", [2, 4, 10, 18])
    def test_even_chains_are_mirror_symmetric(self, n):
        # reversal maps an even chain onto itself, not onto -alpha
        gen = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.37), n)
        assert np.array_equal(gen.off_diagonal[::-1], gen.off_diagonal)
        assert gen.jump_left[0] == gen.jump_right[-1]

    def test_json_round_trip(self):
        gen = build_ssh_generator(RateConfig(gamma_bar=2.0, alpha=-0.3), 6)
        again = ChainGenerator.from_json(gen.to_json())
        assert again.n_sites == 6
        assert np.array_equal(again.off_diagonal, gen.off_diagonal)
        assert again.config == gen.config
        assert again.fingerprint() == gen.fingerprint()


class TestCountingGenerator:
    def test_chi_zero_recovers_total_rate(self):
        L, (lx, ly) = counting_generator(RateConfig(gamma_bar=1.0, alpha=0.3), 0.0)
        assert (lx, ly) == (2.0, 0.0)
        evals = sorted(np.linalg.eigvals(L).real)
        assert abs(evals[0] + 4.0) < 1e-12 and abs(evals[1]) < 1e-12

    def test_chi_pi(self):
        _, (lx, ly) = counting_generator(RateConfig(gamma_bar=1.0, alpha=0.3), np.pi)
        assert abs(lx - 0.6) < 1e-12 and abs(ly) < 1e-12

    def test_quarter_turn(self):
        rc = RateConfig(gamma_bar=1.0, alpha=-0.5)
        _, (lx, ly) = counting_generator(rc, np.pi / 2)
        assert abs(lx - 0.5) < 1e-12 and abs(ly - 1.5) < 1e-12
        # |l|^2 = gamma_L^2 + gamma_R^2 + 2 gamma_L gamma_R cos(chi)
        for chi in np.linspace(-np.pi, np.pi, 9):
            _, (lx, ly) = counting_generator(rc, chi)
            expect = rc.gamma_L**2 + rc.gamma_R**2 + 2 * rc.gamma_L * rc.gamma_R * np.cos(chi)
            assert abs(lx**2 + ly**2 - expect) < 1e-12

    def test_no_sigma_z_component(self):
        L, _ = counting_generator(RateConfig(gamma_bar=1.0, alpha=0.7), 1.234)
        assert L[0, 0] == L[1, 1]


class TestSetGenerator:
    def lead(self, **kw):
        base = dict(mu_L=0.0, mu_R=0.0, T_L=1.0, T_R=1.0, epsilon_dot=0.0,
                    gamma_tilde_L=3.0, gamma_tilde_R=1.0)
        base.update(kw)
        return SetLeadConfig(**base)

    def test_half_occupation_matches_chain(self):
        lead = self.lead()
        gen = build_set_generator(lead, 3)
        f_L, f_R = lead.fermi_factors()
        assert f_L == 0.5 and f_R == 0.5
        assert gen.is_symmetric()
        # effective couplings are half the bare tunnel rates
        rc = RateConfig(gamma_L=1.5, gamma_R=0.5)
        chain = build_ssh_generator(rc, 6)
        assert np.allclose(gen.lower, chain.off_diagonal, atol=1e-15)
        assert np.allclose(gen.diagonal, chain.diagonal, atol=1e-15)
        assert np.allclose(gen.jump_left, chain.jump_left, atol=1e-15)
        assert np.allclose(gen.jump_right, chain.jump_right, atol=1e-15)

    def test_high_temperature_limit(self):
        lead = self.lead(mu_L=0.4, mu_R=-0.2, T_L=1e8, T_R=1e8)
        f_L, f_R = lead.fermi_factors()
        assert abs(f_L - 0.5) < 1e-8 and abs(f_R - 0.5) < 1e-8

    def test_fermi_one_thermal_unit(self):
        lead = self.lead(epsilon_dot=1.0, mu_L=0.0, T_L=1.0)
        f_L, _ = lead.fermi_factors()
        assert abs(f_L - FERMI_AT_ONE_THERMAL) < 1e-15

    def test_general_occupation_conserves_probability(self):
        lead = self.lead(mu_L=0.7, mu_R=-0.3, T_L=0.5, T_R=2.0)
        gen = build_set_generator(lead, 4)
        assert not gen.is_symmetric()
        cols = embedded_dense(gen)[:, 1:-1].sum(axis=0)
        assert np.max(np.abs(cols)) < 1e-12

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            self.lead(T_L=0.0)
        with pytest.raises(ValueError):
            self.lead(gamma_tilde_R=-1.0)


class TestFeedbackGenerator:
    def test_degenerate_pattern_is_uniform_chain(self):
        fb = FeedbackConfig(gamma_R=1.0, gamma_L_even=1.0, gamma_L_odd=1.0)
        gen = build_feedback_generator(fb, 8)
        ssh = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.0), 8)
        assert np.allclose(gen.off_diagonal, ssh.off_diagonal, atol=1e-15)
        assert np.allclose(gen.diagonal, ssh.diagonal, atol=1e-15)

    def test_biased_parameterization_bond_pattern(self):
        fb = FeedbackConfig.from_bias(gamma_L_even=1.0, alpha=0.4)
        gen = build_feedback_generator(fb, 8)
        assert np.allclose(gen.off_diagonal, [1.4, 1.0, 1.4, 0.6, 1.4, 1.0, 1.4], atol=1e-15)

    def test_interior_diagonal_balances_bonds(self):
        fb = FeedbackConfig(gamma_R=0.7, gamma_L_even=1.3, gamma_L_odd=0.4)
        gen = build_feedback_generator(fb, 4)
        a, b = gen.off_diagonal[0], gen.off_diagonal[1]
        assert gen.diagonal[1] == -(a + b)
        cols = embedded_dense(gen)[:, 1:-1].sum(axis=0)
        assert np.max(np.abs(cols)) < 1e-12

    def test_rejects_nonpositive_rates(self):
        with pytest.raises(ValueError):
            FeedbackConfig(gamma_R=0.0, gamma_L_even=1.0, gamma_L_odd=1.0)
        with pytest.raises(ValueError):
            FeedbackConfig.from_bias(gamma_L_even=1.0, alpha=1.0)  # odd rate hits zero


def test_generator_schema_accepts_serialized_form():
    jsonschema = pytest.importorskip("jsonschema")
    from importlib.resources import files

    schema = json.loads(files("sshwalk.schemas").joinpath("generator.schema.json").read_text())
    gen = build_ssh_generator(RateConfig(gamma_bar=1.0, alpha=0.2), 5)
    jsonschema.validate(gen.to_dict(), schema)
