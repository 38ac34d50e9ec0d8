import numpy as np
import pytest

from hetgas import equilibrium as eq
from hetgas.gasmodel import (AtomicCharges, ConfinementSpec, ContinuousCharges,
                             GasSpec, KernelSpec, WeightSpec,
                             geometric_constants)


def make_spec(weight, charges, d=2, kernel=None, confinement=None):
    return GasSpec(d=d, kernel=kernel or KernelSpec.coulomb(),
                   confinement=confinement or ConfinementSpec.quadratic(),
                   weight=weight, charges=charges)


class TestConstantG:
    def test_unit_disk(self):
        spec = make_spec(WeightSpec.constant(1.0), AtomicCharges([(1.0, 1.0)]))
        p = eq.constant_g_profile(spec)
        assert p.R == pytest.approx(1.0)
        assert p.rho(np.array([0.3]))[0] == pytest.approx(1 / np.pi)
        assert p.rho(np.array([1.2]))[0] == 0.0

    def test_uniform_charge_support_radius(self):
        spec = make_spec(WeightSpec.constant(1.0),
                         ContinuousCharges.uniform(1.0, 2.0))
        p = eq.constant_g_profile(spec)
        assert p.R == pytest.approx(np.sqrt(1.5))

    def test_density_level_scales_with_g(self):
        geo = geometric_constants(2)
        for g in (0.5, 1.0, 2.0):
            spec = make_spec(WeightSpec.constant(g), AtomicCharges([(1.0, 1.0)]))
            p = eq.constant_g_profile(spec)
            assert p.rho_q(np.array([0.1]))[0] == pytest.approx(g * 2 / geo.k)
            assert p.R == pytest.approx((geo.c / g) ** 0.5)

    def test_d3_radius(self):
        spec = make_spec(WeightSpec.constant(1.0), AtomicCharges([(1.0, 1.0)]),
                         d=3)
        p = eq.constant_g_profile(spec)
        assert p.R == pytest.approx(1.0)  # (c_3 * 1 / 1)^(1/3) = 1

    def test_charge_mass_normalized(self):
        spec = make_spec(WeightSpec.constant(2.0),
                         ContinuousCharges.uniform(1.0, 2.0))
        p = eq.constant_g_profile(spec)
        r = np.linspace(0, p.R, 20001)[1:]
        mass = np.trapezoid(p.rho(r) * 2 * np.pi * r, r)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_requires_constant_weight(self):
        spec = make_spec(WeightSpec.linear(),
                         ContinuousCharges.uniform(1.0, 2.0))
        with pytest.raises(eq.WrongRegimeError):
            eq.constant_g_profile(spec)


class TestShellLayout:
    def setup_method(self):
        self.spec = make_spec(
            WeightSpec.linear(),
            AtomicCharges([(1.0, 1 / 3), (2.0, 1 / 3), (3.0, 1 / 3)]))
        self.layout = eq.shell_layout(self.spec)

    def test_six_radii(self):
        want = [(3.0, 0.0, 0.5773502692), (2.0, 0.7071067812, 0.9128709292),
                (1.0, 1.2909944487, 1.4142135624)]
        for shell, (q, ri, ro) in zip(self.layout.shells, want):
            assert shell.charge == q
            assert shell.r_inner == pytest.approx(ri, abs=1e-9)
            assert shell.r_outer == pytest.approx(ro, abs=1e-9)

    def test_gaps_positive_for_nonconstant_g(self):
        assert np.all(self.layout.gaps() > 0)

    def test_shell_density_formula(self):
        # per-shell uniform density d g(q) / (k_d q)
        geo = geometric_constants(2)
        for s in self.layout.shells:
            assert s.density == pytest.approx(2 * s.charge / (geo.k * s.charge))

    def test_fractions_fill_shell_volumes(self):
        for s in self.layout.shells:
            vol = np.pi * (s.r_outer ** 2 - s.r_inner ** 2)
            assert s.density * vol == pytest.approx(s.fraction)

    def test_decreasing_g_reverses_order(self):
        spec = make_spec(WeightSpec.inverse_sqrt(),
                         AtomicCharges([(1.0, 0.5), (4.0, 0.5)]))
        layout = eq.shell_layout(spec)
        assert layout.shells[0].charge == 1.0  # small charges innermost

    def test_degenerate_single_species(self):
        spec = make_spec(WeightSpec.linear(), AtomicCharges([(2.0, 1.0)]))
        layout = eq.shell_layout(spec)
        geo = geometric_constants(2)
        assert layout.shells[0].r_inner == pytest.approx(0.0)
        assert layout.R == pytest.approx((geo.c * 2.0 / 2.0) ** 0.5)

    def test_to_profile_preserves_charge_mass(self):
        p = self.layout.to_profile()
        r = np.linspace(0, p.R * 1.0001, 40001)[1:]
        qmass = np.trapezoid(p.rho_q(r) * 2 * np.pi * r, r)
        assert qmass == pytest.approx(2.0, abs=2e-3)


class TestContinuousProfile:
    def setup_method(self):
        self.spec = make_spec(WeightSpec.linear(),
                              ContinuousCharges.uniform(1.0, 2.0))
        self.p = eq.continuous_profile(self.spec)

    def test_charge_radius_map_closed_form(self):
        r = np.linspace(0.0, 1.2, 25)
        want = -r ** 2 + np.sqrt(r ** 4 + 4)
        assert np.allclose(self.p.q_of_r(r), want, atol=1e-6)

    def test_density_closed_form(self):
        r = np.linspace(0.0, 1.2, 25)
        want = (1 / np.pi) * (1 - r ** 2 / np.sqrt(r ** 4 + 4))
        assert np.allclose(self.p.rho(r), want, atol=1e-6)

    def test_support_radius(self):
        assert self.p.R == pytest.approx(np.sqrt(1.5), abs=1e-9)

    def test_center_density_matches_shell_limit(self):
        # rho(0) = d g(q(0)) / (k_d q(0)); q(0) = 2 here, g = q
        geo = geometric_constants(2)
        assert self.p.rho(np.array([1e-9]))[0] == pytest.approx(2 / geo.k,
                                                                rel=1e-5)

    def test_r_of_q_roundtrip(self):
        q = np.linspace(1.01, 1.99, 17)
        r = self.p.r_of_q(q)
        assert np.allclose(self.p.q_of_r(r), q, atol=1e-6)

    def test_monotone_decreasing_g_orientation(self):
        spec = make_spec(WeightSpec.inverse_sqrt(),
                         ContinuousCharges.uniform(1.0, 2.0))
        p = eq.continuous_profile(spec)
        q = np.linspace(1.05, 1.95, 9)
        r = p.r_of_q(q)
        assert np.all(np.diff(r) > 0)  # g decreasing: large q outside

    def test_increasing_g_large_charges_inside(self):
        q = np.linspace(1.05, 1.95, 9)
        r = self.p.r_of_q(q)
        assert np.all(np.diff(r) < 0)


class TestPredictDispatch:
    def test_constant_goes_to_circular_law(self):
        spec = make_spec(WeightSpec.constant(1.0),
                         ContinuousCharges.uniform(1.0, 2.0))
        p = eq.predict(spec)
        assert isinstance(p, eq.EquilibriumProfile)
        assert p.flag == eq.FLAG_DISORDERED

    def test_atoms_go_to_shells(self):
        spec = make_spec(WeightSpec.linear(),
                         AtomicCharges([(1.0, 0.5), (2.0, 0.5)]))
        assert isinstance(eq.predict(spec), eq.ShellLayout)

    def test_continuous_monotone_goes_to_profile(self):
        spec = make_spec(WeightSpec.linear(),
                         ContinuousCharges.uniform(1.0, 2.0))
        p = eq.predict(spec)
        assert p.has_charge_map

    def test_nonmonotone_gives_partial_prediction(self):
        spec = make_spec(WeightSpec.sine_offset(),
                         ContinuousCharges.uniform(1.0, 8.0))
        p = eq.predict(spec)
        assert isinstance(p, eq.PartialPrediction)
        roots = p.admissible_charges(g_level=float(spec.weight(2.0)))
        assert len(roots) >= 2  # level sets hit multiple charges

    def test_non_coulomb_rejected(self):
        spec = make_spec(WeightSpec.constant(1.0),
                         ContinuousCharges.uniform(1.0, 2.0),
                         kernel=KernelSpec.riesz(0.5))
        with pytest.raises(eq.WrongRegimeError):
            eq.predict(spec)

    def test_non_quadratic_rejected(self):
        spec = make_spec(WeightSpec.constant(1.0),
                         ContinuousCharges.uniform(1.0, 2.0),
                         confinement=ConfinementSpec.quartic_minus_quadratic())
        with pytest.raises(eq.WrongRegimeError):
            eq.predict(spec)
