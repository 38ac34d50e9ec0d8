"""N-particle energy, forces, mean-field quantities and the splitting
decomposition.

The pair-sum convention follows the Hamiltonian with ordered pairs (each
unordered pair counted twice); all derived formulas (the factor 2 in the
forces, the mean-field force balance) use the same convention.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
from scipy import integrate

from . import _pairwise
from .gasmodel import Configuration, GasSpec, kernel_value
from .equilibrium import EquilibriumProfile, FLAG_DISORDERED

MIN_PAIR_DISTANCE = 1e-12


class SingularConfigurationError(ValueError):
    """Two particles (numerically) coincide; the repulsion diverges."""


def _interaction_exponent(spec: GasSpec) -> float:
    return float(spec.kernel.exponent(spec.d))


def total_energy(config: Configuration, spec: GasSpec) -> float:
    """H_N = N sum q g(q) V(x) - sum_{i != j} q_i q_j W(r_ij)."""
    x, q = config.positions, config.charges
    n = config.n
    pair, min_r = _pairwise.pair_interaction_energy(x, q, _interaction_exponent(spec))
    if min_r < MIN_PAIR_DISTANCE:
        raise SingularConfigurationError(
            f"minimum pair distance {min_r:.3e} below guard {MIN_PAIR_DISTANCE:.0e}"
        )
    g = np.asarray(spec.weight(q))
    conf = n * float(np.sum(q * g * spec.confinement.value(x)))
    return conf - pair


def forces(config: Configuration, spec: GasSpec) -> np.ndarray:
    """-grad_{x_i} H_N as an (N, d) matrix (ambient gradient; manifold
    constraints are handled by the caller)."""
    x, q = config.positions, config.charges
    n = config.n
    F = _pairwise.pair_interaction_forces(x, q, _interaction_exponent(spec))
    g = np.asarray(spec.weight(q))
    F -= n * (q * g)[:, None] * spec.confinement.gradient(x)
    return F


# ---------------------------------------------------------------------------
# mean-field quantities for radial equilibrium profiles

class MeanField:
    """Cached radial mean-field potential Phi*(r) = int q' W(|x-x'|) dmu*.

    For the Coulomb kernel the shell theorem gives
    Phi(r) = W(r) M(r) + int_r^R W(u) dM(u) with M the enclosed rho_q
    mass; outside the support Phi(r) = <q> W(r).  Non-Coulomb kernels use
    a numerically averaged shell kernel.
    """

    def __init__(self, profile: EquilibriumProfile, spec: GasSpec, grid_points: int = 4096):
        self.profile = profile
        self.spec = spec
        d = spec.d
        R = profile.R
        r = R * (np.arange(1, grid_points + 1) / grid_points) ** (1.0 / d)
        self._r = r
        self._M = np.asarray(profile.enclosed_charge(r))
        if spec.kernel.is_coulomb:
            w = np.asarray(kernel_value(spec.kernel, d, r))
            dM = np.diff(np.concatenate([[0.0], self._M]))
            # tail integral T(r) = int_r^R W dM via midpoint masses
            wmid = np.concatenate([[w[0]], 0.5 * (w[1:] + w[:-1])])
            tail = np.cumsum((wmid * dM)[::-1])[::-1]
            self._phi_grid = w * self._M + np.concatenate([tail[1:], [0.0]])
            self._phi_center = float(tail[0])  # Phi(0) = int_0^R W dM
        else:
            self._phi_grid = np.array([self._phi_direct(ri) for ri in r])
            self._phi_center = float(self._phi_grid[0])

    def _phi_direct(self, r: float) -> float:
        """Angular-averaged shell integral for general kernels."""
        spec, profile = self.spec, self.profile
        d = spec.d

        def wbar(u):
            if d == 2:
                theta = np.linspace(0.0, np.pi, 257)
                rr = np.sqrt(np.maximum(r * r + u * u - 2 * r * u * np.cos(theta), 1e-24))
                return np.trapezoid(kernel_value(spec.kernel, d, rr), theta) / np.pi
            t = np.linspace(-1.0, 1.0, 257)
            rr = np.sqrt(np.maximum(r * r + u * u - 2 * r * u * t, 1e-24))
            return 0.5 * np.trapezoid(kernel_value(spec.kernel, d, rr), t)

        u = self._r
        dM = np.diff(np.concatenate([[0.0], self._M]))
        umid = np.concatenate([[u[0] / 2], 0.5 * (u[1:] + u[:-1])])
        return float(np.sum([wbar(ui) * dmi for ui, dmi in zip(umid, dM)]))

    def phi(self, x) -> np.ndarray:
        """Phi*(x) for points x of shape (N, d) or radii of shape (N,)."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1) if x.ndim > 1 else x
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        inside = r <= self.profile.R
        xp = np.concatenate([[0.0], self._r])
        fp = np.concatenate([[self._phi_center], self._phi_grid])
        out[inside] = np.interp(r[inside], xp, fp)
        if np.any(~inside):
            out[~inside] = self.profile.qbar * np.asarray(
                kernel_value(self.spec.kernel, self.spec.d, r[~inside])
            )
        return float(out[0]) if out.size == 1 and np.ndim(x) == 0 else out

    def phi_radial_gradient(self, r: float, h: float = 1e-6) -> float:
        lo = max(r - h, 1e-12)
        hi_v = self.phi(np.array([r + h]))[0]
        lo_v = self.phi(np.array([lo]))[0]
        return float((hi_v - lo_v) / (r + h - lo))

    def interaction_energy(self) -> float:
        """I_WW = int int W dmu_q* dmu_q* = int Phi dM."""
        dM = np.diff(np.concatenate([[0.0], self._M]))
        phimid = np.concatenate([[self._phi_grid[0]], 0.5 * (self._phi_grid[1:] + self._phi_grid[:-1])])
        return float(np.sum(phimid * dM))


def mean_field_potential(profile: EquilibriumProfile, spec: GasSpec, x) -> float:
    """Phi*(x); for repeated evaluation construct a MeanField once."""
    mf = MeanField(profile, spec)
    out = mf.phi(np.atleast_2d(np.asarray(x, dtype=float)))
    return float(out[0]) if out.size == 1 else out


def intensive_energy(profile: EquilibriumProfile, spec: GasSpec,
                     mean_field: Optional[MeanField] = None) -> float:
    """h(mu) = int q g(q) V dmu - int int q q' W dmu dmu for the radial
    double-layer measure described by the profile."""
    mf = mean_field if mean_field is not None else MeanField(profile, spec)
    d = spec.d
    area = spec.constants.sphere_area

    def v_radial(r):
        pts = np.zeros((len(r), d))
        pts[:, 0] = r
        return np.asarray(spec.confinement.value(pts))

    r = np.linspace(0.0, profile.R, 16385)[1:]
    if profile.flag == FLAG_DISORDERED:
        qg = spec.charges.mean_qg(spec.weight)
        conf = qg * np.trapezoid(v_radial(r) * profile.rho(r) * area * r ** (d - 1), r)
    else:
        qr = profile.q_of_r(r)
        conf = np.trapezoid(
            qr * np.asarray(spec.weight(qr)) * v_radial(r)
            * profile.rho(r) * area * r ** (d - 1), r)
    return float(conf) - mf.interaction_energy()


def intensive_energy_montecarlo(profile: EquilibriumProfile, spec: GasSpec,
                                n_pairs: int, seed: int) -> tuple:
    """Monte-Carlo oracle for h(mu): (estimate, standard error)."""
    rng = np.random.default_rng(seed)
    d = spec.d

    def draw(n):
        # sample radii from rho via inverse CDF on the profile grid
        r_grid = np.linspace(0.0, profile.R, 8193)[1:]
        pdf = profile.rho(r_grid) * spec.constants.sphere_area * r_grid ** (d - 1)
        cdf = np.cumsum(pdf)
        cdf /= cdf[-1]
        r = np.interp(rng.uniform(size=n), cdf, r_grid)
        dirs = rng.normal(size=(n, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        x = dirs * r[:, None]
        if profile.has_charge_map:
            q = np.asarray(profile.q_of_r(r))
        else:
            q = spec.charges.sample(n, int(rng.integers(2 ** 31)))
        return x, q

    x1, q1 = draw(n_pairs)
    x2, q2 = draw(n_pairs)
    g1 = np.asarray(spec.weight(q1))
    conf_samples = q1 * g1 * np.asarray(spec.confinement.value(x1))
    rr = np.linalg.norm(x1 - x2, axis=1)
    w_samples = q1 * q2 * np.asarray(kernel_value(spec.kernel, d, np.maximum(rr, 1e-12)))
    samples = conf_samples - w_samples
    return float(np.mean(samples)), float(np.std(samples) / np.sqrt(n_pairs))


def zeta(profile: EquilibriumProfile, spec: GasSpec, q: float, x,
         mean_field: Optional[MeanField] = None) -> float:
    """zeta(q, x) = q g(q) V(x)/2 - q Phi*(x) - q C(q)/2, normalized so that
    zeta and its gradient vanish where charge q sits at equilibrium."""
    law = spec.charges
    if q < law.q_min - 1e-12 or q > law.q_max + 1e-12:
        raise ValueError(f"charge {q} outside the law's support")
    mf = mean_field if mean_field is not None else MeanField(profile, spec)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.asarray(spec.confinement.value(x))
    phi = mf.phi(x)
    c_q = equilibrium_constant(profile, spec, q, mf)
    g = float(spec.weight(q))
    out = 0.5 * q * g * v - q * phi - 0.5 * q * c_q
    return float(out[0]) if out.size == 1 else out


def equilibrium_constant(profile: EquilibriumProfile, spec: GasSpec, q: float,
                         mean_field: Optional[MeanField] = None) -> float:
    """C(q) = g(q) V - 2 Phi* evaluated at the equilibrium radius of q."""
    mf = mean_field if mean_field is not None else MeanField(profile, spec)
    r_eq = float(np.atleast_1d(profile.equilibrium_radius(q))[0])
    pt = np.zeros((1, spec.d))
    pt[0, 0] = r_eq
    v = float(np.asarray(spec.confinement.value(pt))[0])
    return float(spec.weight(q)) * v - 2.0 * float(mf.phi(pt)[0])


# ---------------------------------------------------------------------------
# splitting decomposition

@dataclass
class SplitBreakdown:
    """Three-term decomposition of H_N around the mean-field minimizer.

    leading + zeta_term + quadratic_remainder reproduces total_check
    exactly (the decomposition is algebraic); nlogn_coefficient is the
    d = 2 diagnostic (leading - total) / (N log N).
    """

    leading: float
    zeta_term: float
    quadratic_remainder: float
    total_check: float
    nlogn_coefficient: Optional[float]
    intensive: float            # h(mu*)
    interaction_integral: float  # I_WW
    sum_zeta: float             # 2 sum_i zeta(q_i, x_i), diagnostic only
    identity_residual: float

    def to_json(self, **extra) -> str:
        payload = asdict(self)
        payload.update(extra)
        return json.dumps(payload, indent=2)


def splitting_terms(config: Configuration, profile: EquilibriumProfile,
                    spec: GasSpec) -> SplitBreakdown:
    """Evaluate the splitting decomposition for a configuration.

    zeta_term is the mean-field linear fluctuation term
    2 N int zeta d(mu~_N - N mu*); written out it equals
    N sum_i [q_i g_i V_i - 2 q_i Phi_i] - N^2 (h - I_WW), which makes the
    three-term identity exact for any configuration (the printed
    2 sum zeta_i form agrees only up to the finite-sample charge marginal).
    """
    x, q = config.positions, config.charges
    n = config.n
    mf = MeanField(profile, spec)
    h = intensive_energy(profile, spec, mean_field=mf)
    i_ww = mf.interaction_energy()
    g = np.asarray(spec.weight(q))
    v = np.asarray(spec.confinement.value(x))
    phi = mf.phi(x)
    pair, min_r = _pairwise.pair_interaction_energy(x, q, _interaction_exponent(spec))
    if min_r < MIN_PAIR_DISTANCE:
        raise SingularConfigurationError("coincident particles in splitting_terms")

    leading = n * n * h
    zeta_term = n * float(np.sum(q * g * v - 2.0 * q * phi)) - n * n * (h - i_ww)
    quadratic = -(pair - 2.0 * n * float(np.sum(q * phi)) + n * n * i_ww)
    total = n * float(np.sum(q * g * v)) - pair

    uniq = np.unique(q)
    cmap = {qi: equilibrium_constant(profile, spec, qi, mf) for qi in uniq}
    c_i = np.array([cmap[qi] for qi in q])
    sum_zeta = float(np.sum(q * g * v - 2.0 * q * phi - q * c_i))

    nlogn = None
    if spec.d == 2 and n > 1:
        nlogn = (leading - total) / (n * np.log(n))
    residual = leading + zeta_term + quadratic - total
    return SplitBreakdown(
        leading=leading,
        zeta_term=zeta_term,
        quadratic_remainder=quadratic,
        total_check=total,
        nlogn_coefficient=nlogn,
        intensive=h,
        interaction_integral=i_ww,
        sum_zeta=sum_zeta,
        identity_residual=residual,
    )
