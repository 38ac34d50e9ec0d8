"""Analytic predictions of macroscopic minimizers.

Three regimes are covered for the Coulomb kernel with quadratic
confinement:

* constant g: uniform charge density d g / k_d on a ball (generalized
  circular law), charge independent of position;
* strictly monotone g with atomic charge law: concentric shells separated
  by strictly positive gaps;
* strictly monotone g with continuous charge law: radial profiles obtained
  from the explicit r(q) map and the change-of-variables formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .gasmodel import (
    AtomicCharges,
    ContinuousCharges,
    GasSpec,
)


class WrongRegimeError(ValueError):
    """Spec does not match the requested analytic regime."""


class PredictionError(RuntimeError):
    """Internal consistency failure while building a prediction."""


FLAG_DISORDERED = "uniform_disordered"
FLAG_ORDERED_INC = "ordered_increasing"    # q(r) increasing with radius (g decreasing)
FLAG_ORDERED_DEC = "ordered_decreasing"    # q(r) decreasing with radius (g increasing)

_GRID_POINTS = 2048


class EquilibriumProfile:
    """Radial equilibrium prediction: rho(r), rho_q(r), q(r), r(q), R.

    Constructed by the builders below; the radial functions are vectorized
    callables valid on [0, inf) (zero outside the support).  ``r_grid`` and
    the tabulated arrays use an equal-volume grid (uniform in r^d).
    """

    def __init__(self, d: int, R: float, flag: str, qbar: float,
                 rho, rho_q, enclosed_charge,
                 q_of_r=None, r_of_q=None, check: bool = True):
        self.d = int(d)
        self.R = float(R)
        self.flag = flag
        self.qbar = float(qbar)          # total charge mass <q>
        self._rho = rho
        self._rho_q = rho_q
        self._M = enclosed_charge
        self._q_of_r = q_of_r
        self._r_of_q = r_of_q
        self.r_grid = self.R * (np.arange(1, _GRID_POINTS + 1) / _GRID_POINTS) ** (1.0 / d)
        if check:
            self._check_normalization()

    # radial functions -----------------------------------------------------
    def rho(self, r):
        return self._rho(np.asarray(r, dtype=float))

    def rho_q(self, r):
        return self._rho_q(np.asarray(r, dtype=float))

    def enclosed_charge(self, r):
        """Charge mass of rho_q inside radius r."""
        return self._M(np.asarray(r, dtype=float))

    def q_of_r(self, r):
        if self._q_of_r is None:
            raise WrongRegimeError(f"q(r) undefined for flag {self.flag!r}")
        return self._q_of_r(np.asarray(r, dtype=float))

    def r_of_q(self, q):
        if self._r_of_q is None:
            raise WrongRegimeError(f"r(q) undefined for flag {self.flag!r}")
        return self._r_of_q(np.asarray(q, dtype=float))

    def equilibrium_radius(self, q):
        """Radius at which a charge q is at equilibrium (0 for disordered gases,
        where any supported radius is an equilibrium)."""
        if self.flag == FLAG_DISORDERED:
            return np.zeros_like(np.asarray(q, dtype=float))
        return self.r_of_q(q)

    @property
    def has_charge_map(self) -> bool:
        return self._q_of_r is not None

    # bookkeeping ----------------------------------------------------------
    def _sphere_area(self):
        from .gasmodel import geometric_constants
        return geometric_constants(self.d).sphere_area

    def _check_normalization(self):
        area = self._sphere_area()
        r = np.linspace(0.0, self.R, 16385)[1:]
        mass = np.trapezoid(self.rho(r) * area * r ** (self.d - 1), r)
        qmass = np.trapezoid(self.rho_q(r) * area * r ** (self.d - 1), r)
        if abs(mass - 1.0) > 1e-6:
            raise PredictionError(f"profile mass {mass} != 1")
        if abs(qmass - self.qbar) > 1e-6 * max(1.0, self.qbar):
            raise PredictionError(f"profile charge mass {qmass} != {self.qbar}")

    def tabulate(self):
        """(r, rho, rho_q, q_of_r) arrays on the equal-volume grid."""
        r = self.r_grid
        q = self.q_of_r(r) if self.has_charge_map else np.full_like(r, np.nan)
        return r, self.rho(r), self.rho_q(r), q


@dataclass(frozen=True)
class Shell:
    charge: float
    fraction: float
    r_inner: float
    r_outer: float
    density: float  # uniform particle density within the shell


@dataclass(frozen=True)
class ShellLayout:
    """Concentric shells for a multicomponent gas, sorted by radius."""

    d: int
    shells: List[Shell]
    qbar: float

    def gaps(self) -> np.ndarray:
        return np.array(
            [self.shells[i + 1].r_inner - self.shells[i].r_outer
             for i in range(len(self.shells) - 1)]
        )

    @property
    def R(self) -> float:
        return self.shells[-1].r_outer

    def to_profile(self) -> EquilibriumProfile:
        """Piecewise-constant radial profile equivalent of the layout."""
        from .gasmodel import geometric_constants
        geo = geometric_constants(self.d)
        d = self.d
        shells = self.shells
        r_in = np.array([s.r_inner for s in shells])
        r_out = np.array([s.r_outer for s in shells])
        dens = np.array([s.density for s in shells])
        qs = np.array([s.charge for s in shells])
        m_below = np.concatenate([[0.0], np.cumsum(qs * np.array([s.fraction for s in shells]))])

        def rho(r):
            out = np.zeros_like(r)
            for i in range(len(shells)):
                mask = (r >= r_in[i]) & (r <= r_out[i])
                out[mask] = dens[i]
            return out

        def rho_q(r):
            out = np.zeros_like(r)
            for i in range(len(shells)):
                mask = (r >= r_in[i]) & (r <= r_out[i])
                out[mask] = dens[i] * qs[i]
            return out

        def enclosed(r):
            out = np.full_like(r, m_below[-1])
            below_first = r < r_in[0]
            out[below_first] = 0.0
            for i in range(len(shells)):
                mask = (r >= r_in[i]) & (r < r_out[i])
                out[mask] = m_below[i] + dens[i] * qs[i] * geo.ball_volume * (
                    r[mask] ** d - r_in[i] ** d
                )
                if i + 1 < len(shells):
                    gap = (r >= r_out[i]) & (r < r_in[i + 1])
                    out[gap] = m_below[i + 1]
            return out

        def r_of_q(q):
            q = np.atleast_1d(q)
            out = np.empty_like(q)
            for j, qq in enumerate(q):
                i = int(np.argmin(np.abs(qs - qq)))
                if abs(qs[i] - qq) > 1e-9 * max(1.0, qq):
                    raise WrongRegimeError(f"charge {qq} is not one of the atoms")
                # equal-volume midpoint of the shell
                out[j] = (0.5 * (r_in[i] ** d + r_out[i] ** d)) ** (1.0 / d)
            return out if out.size > 1 else float(out[0])

        flag = FLAG_ORDERED_DEC if qs[0] > qs[-1] else FLAG_ORDERED_INC
        # exact by construction (density * shell volume per species equals the
        # species fraction); trapezoid quadrature over the discontinuous
        # density would be O(1e-4) off, so skip the check
        return EquilibriumProfile(
            d=d, R=self.R, flag=flag, qbar=self.qbar,
            rho=rho, rho_q=rho_q, enclosed_charge=enclosed, r_of_q=r_of_q,
            check=False,
        )


def _require_coulomb_quadratic(spec: GasSpec, what: str):
    if not spec.kernel.is_coulomb:
        raise WrongRegimeError(f"{what} requires the Coulomb kernel")
    if spec.confinement.family != "quadratic":
        raise WrongRegimeError(f"{what} requires quadratic confinement")
    if spec.manifold is not None:
        raise WrongRegimeError(f"{what} has no manifold analytic form")


def constant_g_profile(spec: GasSpec) -> EquilibriumProfile:
    """Generalized circular law for constant g: rho_q = g d / k_d on the ball
    of radius (c_d <q> / g)^(1/d)."""
    if not spec.weight.is_constant:
        raise WrongRegimeError("constant_g_profile requires constant g")
    _require_coulomb_quadratic(spec, "constant_g_profile")
    geo = spec.constants
    d = spec.d
    g = float(spec.weight(spec.charges.q_min))
    qbar = spec.charges.mean
    R = (geo.c * qbar / g) ** (1.0 / d)
    rq = g * d / geo.k

    def rho_q(r):
        return np.where(r <= R, rq, 0.0)

    def rho(r):
        return np.where(r <= R, rq / qbar, 0.0)

    def enclosed(r):
        return np.minimum(g * np.clip(r, 0.0, None) ** d / geo.c, qbar)

    return EquilibriumProfile(
        d=d, R=R, flag=FLAG_DISORDERED, qbar=qbar,
        rho=rho, rho_q=rho_q, enclosed_charge=enclosed,
    )


def shell_layout(spec: GasSpec) -> ShellLayout:
    """Concentric shell radii for atomic charges and strictly monotone g."""
    if not isinstance(spec.charges, AtomicCharges):
        raise WrongRegimeError("shell_layout requires an atomic charge law")
    if not spec.weight.is_monotone:
        raise WrongRegimeError("shell_layout requires strictly monotone g")
    _require_coulomb_quadratic(spec, "shell_layout")
    geo = spec.constants
    d = spec.d
    qs = spec.charges.values
    nus = spec.charges.weights
    m = len(qs)
    increasing = spec.weight.monotonicity == "increasing"

    shells = []
    for i in range(m):
        inner_set = range(i + 1, m) if increasing else range(0, i)
        g_i = float(spec.weight(qs[i]))
        inner_mass = sum(qs[j] * nus[j] for j in inner_set)
        r_minus = (geo.c / g_i * inner_mass) ** (1.0 / d)
        r_plus = (r_minus ** d + qs[i] * nus[i] * geo.k / (d * g_i * geo.ball_volume)) ** (1.0 / d)
        density = d * g_i / (geo.k * qs[i])
        shells.append(Shell(float(qs[i]), float(nus[i]), r_minus, r_plus, density))

    shells.sort(key=lambda s: s.r_inner)
    layout = ShellLayout(d=d, shells=shells, qbar=spec.charges.mean)
    if np.any(layout.gaps() < 0.0):
        raise PredictionError("negative inter-shell gap; inconsistent layout")
    return layout


def continuous_profile(spec: GasSpec, grid_points: int = 4097) -> EquilibriumProfile:
    """Radial profile for a continuous charge law and strictly monotone g.

    r(q) = (c_d / g(q) * int_{q-}^{q+} u nu(u) du)^(1/d) with bounds
    [q_min, q] for g decreasing and [q, q_max] for g increasing; the
    particle density follows from the change of variables through
    xi = r^d.
    """
    law = spec.charges
    if not isinstance(law, ContinuousCharges):
        raise WrongRegimeError("continuous_profile requires a continuous charge law")
    if not spec.weight.is_monotone:
        raise WrongRegimeError("continuous_profile requires strictly monotone g")
    _require_coulomb_quadratic(spec, "continuous_profile")
    geo = spec.constants
    d = spec.d
    increasing = spec.weight.monotonicity == "increasing"

    q = np.linspace(law.q_min, law.q_max, grid_points)
    nu = np.asarray(law.density(q), dtype=float)
    g = np.asarray(spec.weight(q), dtype=float)
    integrand = q * nu
    A = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(q))])
    part = (A[-1] - A) if increasing else A
    xi = geo.c / g * part          # xi(q) = r(q)^d
    r_pts = xi ** (1.0 / d)

    # d xi / dq, with b = g'/g evaluated on the grid
    b = np.gradient(g, q) / g
    sign = -1.0 if increasing else 1.0
    dxi_dq = -b * xi + sign * geo.c * q * nu / g
    rho_pts = d * nu / (geo.sphere_area * np.abs(dxi_dq))

    # order by increasing radius for interpolation
    order = np.argsort(r_pts)
    r_s, q_s, rho_s = r_pts[order], q[order], rho_pts[order]
    R = float(r_s[-1])
    # enclosed charge M(r(q)) equals the r(q)-defining integral: g xi / c_d
    M_s = g[order] * xi[order] / geo.c

    def rho(r):
        return np.where(r <= R, np.interp(r, r_s, rho_s), 0.0)

    def q_of_r(r):
        return np.interp(r, r_s, q_s)

    def rho_q(r):
        return np.where(r <= R, np.interp(r, r_s, q_s * rho_s), 0.0)

    def enclosed(r):
        return np.interp(r, r_s, M_s, right=float(M_s[-1]))

    def r_of_q(qq):
        # r_pts is indexed by the ascending q grid (monotone either way)
        return np.interp(qq, q, r_pts)

    flag = FLAG_ORDERED_DEC if increasing else FLAG_ORDERED_INC
    profile = EquilibriumProfile(
        d=d, R=R, flag=flag, qbar=law.mean,
        rho=rho, rho_q=rho_q, enclosed_charge=enclosed,
        q_of_r=q_of_r, r_of_q=r_of_q,
    )
    # inverse-map roundtrip sanity
    mid = 0.5 * (law.q_min + law.q_max)
    if abs(profile.q_of_r(profile.r_of_q(mid)) - mid) > 1e-6 * mid:
        raise PredictionError("q(r(q)) roundtrip failed")
    return profile


@dataclass(frozen=True)
class PartialPrediction:
    """Level-set prediction for non-monotonic g: per radius, the set of
    charges sharing the equilibrium weight value is admissible."""

    spec: GasSpec

    def admissible_charges(self, g_level: float, samples: int = 4096) -> np.ndarray:
        """Charges q in Q with g(q) = g_level (sign changes on a fine grid)."""
        law = self.spec.charges
        q = np.linspace(law.q_min, law.q_max, samples)
        v = np.asarray(self.spec.weight(q)) - g_level
        roots = []
        sign_change = np.where(np.sign(v[:-1]) * np.sign(v[1:]) <= 0)[0]
        for i in sign_change:
            if v[i] == v[i + 1]:
                roots.append(q[i])
            else:
                roots.append(q[i] - v[i] * (q[i + 1] - q[i]) / (v[i + 1] - v[i]))
        return np.unique(np.round(np.array(roots), 12))


def predict(spec: GasSpec):
    """Dispatch to the analytic prediction matching the gas regime."""
    w = spec.weight
    if w.family == "custom" and w.monotonicity is None:
        raise WrongRegimeError("custom weight requires an explicit monotonicity tag")
    if w.is_constant:
        return constant_g_profile(spec)
    if w.is_monotone:
        if isinstance(spec.charges, AtomicCharges):
            return shell_layout(spec)
        return continuous_profile(spec)
    return PartialPrediction(spec=spec)
