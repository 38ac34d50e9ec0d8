"""Energy minimization by annealed overdamped Langevin descent.

The dynamics use forces scaled by 1/N^2 so that step sizes are
N-independent (per-particle gradients of H_N scale with N).  A noisy
annealing phase with growing inverse temperature is followed by a
deterministic descent with a line-search guard, which never accepts an
energy increase.  On an implicit manifold the drift and noise are
projected to the tangent space and points re-projected to the surface
after every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _pairwise
from .energy import forces, total_energy
from .gasmodel import Configuration, GasSpec, sample_charges


@dataclass(frozen=True)
class AnnealSchedule:
    beta0: float = 1.0
    beta_growth: float = 1.5
    stages: int = 40
    steps_per_stage: int = 500
    step_size: float = 0.5
    step_decay: float = 1.0              # multiplicative per stage
    residual_tol: float = 1e-3
    descent_steps: int = 4000
    guard_factor: float = 1e-9           # collision guard = guard_factor * R_est

    def __post_init__(self):
        if min(self.beta0, self.beta_growth - 1.0, self.step_size) <= 0 or min(
            self.stages, self.steps_per_stage
        ) < 0:
            raise ValueError("schedule parameters must be positive")


# compact schedule for desk-scale runs; converges in a few thousand force
# evaluations at N ~ 1000
FAST_SCHEDULE = AnnealSchedule(beta0=0.3, beta_growth=1.8, stages=10,
                               steps_per_stage=150, step_size=0.5,
                               residual_tol=5e-3, descent_steps=2500)


@dataclass
class MinimizeResult:
    config: Configuration
    energy_trace: np.ndarray      # (k, 4): step, energy, residual, beta
    converged: bool
    residual: float

    @property
    def energies(self):
        return self.energy_trace[:, 1]


def residual_force_norm(config: Configuration, spec: GasSpec,
                        F: Optional[np.ndarray] = None) -> float:
    """max_i |F_i| / (N^2 q_i max(1, g(q_i))), tangential on manifolds."""
    if F is None:
        F = forces(config, spec)
    if spec.manifold is not None:
        F = spec.manifold.tangent_project(config.positions, F)
    q = config.charges
    g = np.asarray(spec.weight(q))
    scale = config.n ** 2 * q * np.maximum(1.0, g)
    return float(np.max(np.linalg.norm(F, axis=1) / scale))


def _apply_step(x: np.ndarray, disp: np.ndarray, spec: GasSpec, guard: float):
    """Apply a displacement with the collision guard: displacements of
    particles ending up closer than the guard are halved and retried."""
    for _ in range(20):
        cand = x + disp
        if spec.manifold is not None:
            cand = spec.manifold.project(cand)
        if len(cand) < 2:
            return cand
        if _pairwise.min_pair_distance(cand) >= guard:
            return cand
        from scipy.spatial import cKDTree
        tree = cKDTree(cand)
        pairs = tree.query_pairs(guard, output_type="ndarray")
        bad = np.unique(pairs.ravel())
        disp = disp.copy()
        disp[bad] *= 0.5
    cand = x + disp
    return spec.manifold.project(cand) if spec.manifold is not None else cand


def langevin_step(config: Configuration, spec: GasSpec, beta: float,
                  step_size: float, rng: np.random.Generator,
                  guard: float = 1e-12) -> Configuration:
    """One overdamped step x <- x + eta F/N^2 + sqrt(2 eta/(beta N^2)) xi."""
    n = config.n
    F = forces(config, spec)
    disp = step_size * F / n ** 2
    amplitude = np.sqrt(2.0 * step_size / (beta * n ** 2)) if np.isfinite(beta) else 0.0
    if amplitude > 1e-12:
        disp = disp + amplitude * rng.normal(size=disp.shape)
    if spec.manifold is not None:
        disp = spec.manifold.tangent_project(config.positions, disp)
    x = _apply_step(config.positions, disp, spec, guard)
    return replace(config, positions=x)


def initial_configuration(spec: GasSpec, n: int, seed: int,
                          stratified: bool = False,
                          charges: Optional[np.ndarray] = None) -> Configuration:
    """i.i.d. Gaussian positions scaled to the predicted support radius
    (unit scale when no prediction applies), projected to the manifold."""
    rng = np.random.default_rng(seed)
    if charges is None:
        charges = sample_charges(spec.charges, n, seed + 1, stratified=stratified)
    scale = 1.0
    try:
        from .equilibrium import predict, EquilibriumProfile, ShellLayout
        pred = predict(spec)
        if isinstance(pred, (EquilibriumProfile, ShellLayout)):
            scale = 0.5 * pred.R
    except Exception:
        pass
    x = rng.normal(scale=scale, size=(n, spec.d))
    if spec.manifold is not None:
        x = spec.manifold.project(x + 1e-3)  # offset avoids the singular center
    return Configuration(positions=x, charges=charges,
                         manifold=spec.manifold.name if spec.manifold else None)


def minimize(spec: GasSpec, n: int, schedule: AnnealSchedule = FAST_SCHEDULE,
             seed: int = 0, init: Optional[Configuration] = None,
             stratified: bool = False, record_every: int = 50) -> MinimizeResult:
    """Annealed Langevin descent to a (local) minimizer of H_N."""
    if n < 1:
        raise ValueError("n must be >= 1")
    schedule = schedule if schedule is not None else FAST_SCHEDULE
    rng = np.random.default_rng(seed)
    config = init if init is not None else initial_configuration(
        spec, n, seed, stratified=stratified)
    r_est = max(float(np.max(config.radii())), 1e-6)
    guard = schedule.guard_factor * r_est
    trace = []
    step = 0
    # drift per step scales like eta/N while the typical interparticle
    # spacing shrinks like N^(-1/d); grow eta with sqrt(N) so annealing can
    # rearrange particles across the support at any N
    eta = schedule.step_size * max(1.0, np.sqrt(n) / 8.0)

    for stage in range(schedule.stages):
        beta = schedule.beta0 * schedule.beta_growth ** stage
        for _ in range(schedule.steps_per_stage):
            config = langevin_step(config, spec, beta, eta, rng, guard=guard)
            step += 1
            if step % record_every == 0:
                F = forces(config, spec)
                trace.append([step, total_energy(config, spec),
                              residual_force_norm(config, spec, F), beta])
        eta *= schedule.step_decay

    # deterministic descent with line-search guard
    energy = total_energy(config, spec)
    F = forces(config, spec)
    residual = residual_force_norm(config, spec, F)
    converged = residual < schedule.residual_tol
    n2 = max(n, 1) ** 2
    for _ in range(schedule.descent_steps):
        if converged:
            break
        disp = eta * F / n2
        if spec.manifold is not None:
            disp = spec.manifold.tangent_project(config.positions, disp)
        cand = Configuration(
            positions=_apply_step(config.positions, disp, spec, guard),
            charges=config.charges, manifold=config.manifold)
        cand_energy = total_energy(cand, spec)
        step += 1
        if cand_energy <= energy:
            config, energy = cand, cand_energy
            F = forces(config, spec)
            residual = residual_force_norm(config, spec, F)
            eta *= 1.1
            converged = residual < schedule.residual_tol
        else:
            eta *= 0.5
            if eta < 1e-14:
                break
        if step % record_every == 0:
            trace.append([step, energy, residual, np.inf])

    trace.append([step, energy, residual, np.inf])
    return MinimizeResult(
        config=config,
        energy_trace=np.array(trace, dtype=float),
        converged=converged,
        residual=residual,
    )
