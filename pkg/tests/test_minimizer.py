import numpy as np
import pytest

from hetgas import energy, minimizer
from hetgas.gasmodel import (AtomicCharges, ConfinementSpec, Configuration,
                             ContinuousCharges, GasSpec, KernelSpec,
                             ManifoldSpec, WeightSpec)
from hetgas.minimizer import AnnealSchedule

QUICK = AnnealSchedule(beta0=0.5, beta_growth=2.0, stages=6,
                       steps_per_stage=80, step_size=0.5,
                       residual_tol=1e-3, descent_steps=3000)


def make_spec(weight=None, charges=None, **kw):
    base = dict(d=2, kernel=KernelSpec.coulomb(),
                confinement=ConfinementSpec.quadratic(),
                weight=weight or WeightSpec.constant(1.0),
                charges=charges or ContinuousCharges.uniform(1.0, 2.0))
    base.update(kw)
    return GasSpec(**base)


class TestSinglesAndPairs:
    def test_single_particle_contracts_to_origin(self):
        spec = make_spec(charges=AtomicCharges([(1.0, 1.0)]))
        res = minimizer.minimize(spec, 1, schedule=QUICK, seed=0)
        assert np.linalg.norm(res.config.positions) < 1e-3

    def test_single_particle_deterministic_contraction_rate(self):
        # x <- x (1 - 2 eta g / N) per step for the pure confinement flow
        spec = make_spec(charges=AtomicCharges([(1.0, 1.0)]))
        x0 = np.array([[0.7, 0.0]])
        c = Configuration(positions=x0, charges=np.ones(1))
        rng = np.random.default_rng(0)
        c1 = minimizer.langevin_step(c, spec, beta=np.inf, step_size=0.1,
                                     rng=rng)
        assert c1.positions[0, 0] == pytest.approx(0.7 * (1 - 2 * 0.1 / 1))

    def test_two_particles_unit_separation(self):
        # oracle: radial stationarity 4r - 1/r = 0 -> r* = 1/2, separation 1
        spec = make_spec(charges=AtomicCharges([(1.0, 1.0)]))
        res = minimizer.minimize(spec, 2, schedule=QUICK, seed=1)
        sep = np.linalg.norm(res.config.positions[0] - res.config.positions[1])
        assert sep == pytest.approx(1.0, abs=2e-3)
        mid = res.config.positions.mean(axis=0)
        assert np.linalg.norm(mid) < 2e-3


class TestDescentInvariants:
    def test_energy_never_increases_in_descent(self):
        spec = make_spec()
        res = minimizer.minimize(spec, 60, schedule=AnnealSchedule(
            beta0=1.0, beta_growth=2.0, stages=0, steps_per_stage=0,
            step_size=0.5, residual_tol=1e-4, descent_steps=2000), seed=2)
        descent = res.energy_trace[res.energy_trace[:, 3] == np.inf]
        assert np.all(np.diff(descent[:, 1]) <= 1e-9)

    def test_converged_residual_below_tolerance(self):
        spec = make_spec()
        res = minimizer.minimize(spec, 60, schedule=QUICK, seed=3)
        assert res.converged
        assert res.residual < QUICK.residual_tol

    def test_seed_reproducibility(self):
        spec = make_spec()
        a = minimizer.minimize(spec, 40, schedule=QUICK, seed=4)
        b = minimizer.minimize(spec, 40, schedule=QUICK, seed=4)
        assert np.array_equal(a.config.positions, b.config.positions)

    def test_different_seeds_differ(self):
        spec = make_spec()
        a = minimizer.minimize(spec, 40, schedule=QUICK, seed=4)
        b = minimizer.minimize(spec, 40, schedule=QUICK, seed=5)
        assert not np.allclose(a.config.positions, b.config.positions)

    def test_deterministic_descent_permutation_equivariant(self):
        # the beta = inf flow commutes with particle relabeling
        spec = make_spec()
        rng = np.random.default_rng(6)
        x = rng.normal(size=(30, 2))
        q = rng.uniform(1, 2, 30)
        perm = rng.permutation(30)
        c = Configuration(positions=x, charges=q)
        cp = Configuration(positions=x[perm], charges=q[perm])
        rng1, rng2 = np.random.default_rng(0), np.random.default_rng(0)
        s1 = minimizer.langevin_step(c, spec, np.inf, 0.3, rng1)
        s2 = minimizer.langevin_step(cp, spec, np.inf, 0.3, rng2)
        assert np.allclose(s1.positions[perm], s2.positions, atol=1e-12)

    def test_no_collisions_in_result(self):
        from hetgas._pairwise import min_pair_distance
        spec = make_spec()
        res = minimizer.minimize(spec, 80, schedule=QUICK, seed=7)
        assert min_pair_distance(res.config.positions) > 1e-6


class TestSupport:
    def test_support_radius_near_prediction(self):
        from hetgas import equilibrium
        spec = make_spec()
        res = minimizer.minimize(spec, 200, schedule=QUICK, seed=8)
        R = equilibrium.predict(spec).R
        assert np.max(res.config.radii()) < 1.08 * R
        assert np.max(res.config.radii()) > 0.9 * R

    def test_quartic_double_ring(self):
        # nonconvex confinement: particles avoid the local max at the origin
        spec = make_spec(confinement=ConfinementSpec.quartic_minus_quadratic())
        res = minimizer.minimize(spec, 60, schedule=QUICK, seed=9)
        assert np.min(res.config.radii()) > 0.1


class TestManifold:
    def test_sphere_constraint_throughout(self):
        spec = GasSpec(d=3, kernel=KernelSpec.riesz(-1.0),
                       confinement=ConfinementSpec.coordinate_square(2),
                       weight=WeightSpec.linear(),
                       charges=ContinuousCharges.uniform(1.0, 2.0),
                       manifold=ManifoldSpec.unit_sphere())
        res = minimizer.minimize(spec, 80, schedule=QUICK, seed=10)
        assert np.max(np.abs(np.linalg.norm(res.config.positions, axis=1) - 1)) < 1e-10
        assert res.converged

    def test_torus_constraint(self):
        spec = GasSpec(d=3, kernel=KernelSpec.riesz(-1.0),
                       confinement=ConfinementSpec.coordinate_square(1),
                       weight=WeightSpec.linear(),
                       charges=ContinuousCharges.uniform(1.0, 2.0),
                       manifold=ManifoldSpec.torus())
        res = minimizer.minimize(spec, 60, schedule=QUICK, seed=11)
        m = ManifoldSpec.torus()
        assert np.max(np.abs(m.F(res.config.positions))) < 1e-10
