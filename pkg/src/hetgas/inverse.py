"""Inverse design: given a target decreasing radial density f and a
monotone weight g, construct the charge density nu whose gas equilibrates
to f.

The construction runs the phase-plane system

    dq/dt = 1 - a(q) f(xi),     dxi/dt = -b(q) xi,

with a(q) = (|S_{d-1}|/d) q / g(q) and b = g'/g, starting on the unstable
manifold of the saddle at (q_min, 0) where a(q_min) f(0) = 1, and reads
off nu(q) = (|S_{d-1}|/d) f(xi) |dxi/dq| along the trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .gasmodel import (ChargeDistribution, ContinuousCharges, GasSpec,
                       KernelSpec, ConfinementSpec, WeightSpec,
                       geometric_constants)
from . import equilibrium


class IncompatibleTargetError(ValueError):
    """The target density cannot be produced by any admissible charge law."""


class IntegrationFailureError(RuntimeError):
    """Phase-plane trajectory left the admissible quadrant."""


class IntegrationArtifactError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialTarget:
    """Decreasing radial density with support [0, r_max).

    `value` takes r^d (the volume coordinate xi); `support_xi` is the xi
    at which the density vanishes (inf allowed).
    """
    value: Callable[[float], float]
    support_xi: float
    name: str = "custom"

    def f(self, xi: float) -> float:
        if xi >= self.support_xi:
            return 0.0
        return float(self.value(xi))

    @classmethod
    def from_radial(cls, f_of_r: Callable[[float], float], r_max: float,
                    d: int, name: str = "custom") -> "RadialTarget":
        return cls(value=lambda xi: f_of_r(xi ** (1.0 / d)),
                   support_xi=r_max ** d, name=name)

    @classmethod
    def fig7(cls, d: int = 2) -> "RadialTarget":
        """Linear ramp (3/4pi)(2 - r) on the unit disk."""
        return cls.from_radial(lambda r: 3.0 / (4 * np.pi) * (2.0 - r),
                               r_max=1.0, d=d, name="fig7")

    @classmethod
    def parabolic(cls, d: int = 2) -> "RadialTarget":
        """(2/pi)(1 - r^2) on the unit disk."""
        return cls.from_radial(lambda r: 2.0 / np.pi * (1.0 - r * r),
                               r_max=1.0, d=d, name="parabolic")

    @classmethod
    def tabulated(cls, r: np.ndarray, f: np.ndarray, d: int,
                  name: str = "tabulated") -> "RadialTarget":
        r = np.asarray(r, dtype=float)
        f = np.asarray(f, dtype=float)
        if np.any(np.diff(r) <= 0):
            raise ValueError("r samples must be strictly increasing")
        if np.any(np.diff(f) > 0):
            raise IncompatibleTargetError("tabulated target must be decreasing")
        interp = PchipInterpolator(r ** d, f, extrapolate=False)
        # the tabulation defines the support; beyond it the density is 0
        xmax = r[-1] ** d
        def val(xi):
            y = interp(xi)
            return float(np.nan_to_num(y, nan=0.0))
        return cls(value=val, support_xi=xmax, name=name)

    def check_decreasing(self, probes: int = 256) -> None:
        hi = self.support_xi if np.isfinite(self.support_xi) else 16.0
        xi = np.linspace(0.0, hi * (1 - 1e-9), probes)
        vals = np.array([self.f(x) for x in xi])
        if vals[0] <= 0 or not np.isfinite(vals[0]):
            raise IncompatibleTargetError("f(0) must be finite and positive")
        # flag non-decreasing stretches, ignoring the negligible far tail of
        # unbounded-support targets where the values underflow
        flat = (np.diff(vals) >= 0) & (vals[:-1] > 1e-12 * vals[0])
        if np.any(flat):
            raise IncompatibleTargetError(
                "target density must be strictly decreasing (flat pieces "
                "make the phase-plane construction degenerate)")


@dataclass
class ManifoldCurve:
    """Unstable-manifold trajectory through the phase plane."""
    q: np.ndarray           # ordered samples
    xi: np.ndarray
    q_min: float
    q_max: float
    eigenvector: np.ndarray
    mass: float
    d: int


def _a_of(g: WeightSpec, d: int) -> Callable[[float], float]:
    geo = geometric_constants(d)
    c = geo.sphere_area / d
    return lambda q: c * q / g(np.array([q]))[0]


def _b_of(g: WeightSpec) -> Callable[[float], float]:
    def b(q, h=1e-6):
        qa = np.array([q - h, q + h])
        gv = g(qa)
        return (gv[1] - gv[0]) / (2 * h) / g(np.array([q]))[0]
    return b


def saddle_charge(target: RadialTarget, g: WeightSpec, d: int) -> float:
    """Charge at which the phase-plane saddle sits: a(q) f(0) = 1."""
    target.check_decreasing()
    if not g.is_monotone:
        raise IncompatibleTargetError("weight must be strictly monotone")
    a = _a_of(g, d)
    f0 = target.f(0.0)
    func = lambda q: a(q) * f0 - 1.0
    lo, hi = 1e-9, 1e9
    # a(q)*f0 - 1 is monotone in q for monotone g; bracket by scanning.
    if func(lo) * func(hi) > 0:
        raise IncompatibleTargetError(
            "no admissible saddle charge: a(q) f(0) = 1 has no root")
    return float(brentq(func, lo, hi, xtol=1e-14, rtol=8.9e-16))


def _saddle_jacobian(target: RadialTarget, g: WeightSpec, d: int,
                     q_min: float) -> np.ndarray:
    a = _a_of(g, d)
    b = _b_of(g)
    h = 1e-6 * max(q_min, 1.0)
    da = (a(q_min + h) - a(q_min - h)) / (2 * h)
    hxi = 1e-6 * max(target.support_xi if np.isfinite(target.support_xi) else 1.0, 1e-3)
    df0 = (target.f(hxi) - target.f(0.0)) / hxi
    f0 = target.f(0.0)
    return np.array([[-da * f0, -a(q_min) * df0],
                     [0.0, -b(q_min)]])


def integrate_unstable_manifold(target: RadialTarget, g: WeightSpec, d: int,
                                eps_scale: float = 1e-8,
                                max_time: float = 1e4) -> ManifoldCurve:
    """Follow the unstable manifold of the saddle until the accumulated
    charge mass reaches 1."""
    q_star = saddle_charge(target, g, d)
    # For increasing g the fixed point sits at the top of the charge
    # support and the curve is traced in reversed time (q decreasing).
    sgn = -1.0 if g.monotonicity == "increasing" else 1.0
    jac = sgn * _saddle_jacobian(target, g, d, q_star)
    evals, evecs = np.linalg.eig(jac)
    if evals[0].real * evals[1].real >= 0:
        raise IntegrationFailureError(
            f"fixed point is not a saddle: eigenvalues {evals}")
    k = int(np.argmax(evals.real))
    v = np.real(evecs[:, k])
    if v[1] < 0:
        v = -v
    if abs(v[1]) < 1e-14:
        raise IntegrationFailureError("unstable eigenvector has no xi component")

    a = _a_of(g, d)
    b = _b_of(g)
    geo = geometric_constants(d)
    scale = max(q_star, 1.0)
    eps = eps_scale * scale

    def rhs(t, y):
        q, xi, mass = y
        f = target.f(max(xi, 0.0))
        dq = sgn * (1.0 - a(q) * f)
        dxi = sgn * (-b(q) * xi)
        # nu(q) dq accumulated as mass: nu = (|S|/d) f |dxi/dq|
        dmass = geo.sphere_area / d * f * abs(dxi)
        return [dq, dxi, dmass]

    def full_mass(t, y):
        # the mass converges to 1 exactly as xi reaches the support edge;
        # stop just short of the asymptote
        return y[2] - (1.0 - 1e-7)
    full_mass.terminal = True
    full_mass.direction = 1

    def left_quadrant(t, y):
        return min(y[0], y[1] + 1e-15)
    left_quadrant.terminal = True
    left_quadrant.direction = -1

    y0 = [q_star + eps * v[0], eps * v[1], 0.0]
    sol = solve_ivp(rhs, (0.0, max_time), y0, events=[full_mass, left_quadrant],
                    rtol=1e-10, atol=1e-14, dense_output=True, max_step=1.0)
    if len(sol.t_events[1]) > 0:
        raise IntegrationFailureError(
            f"trajectory left the admissible quadrant at state {sol.y_events[1]}")
    if len(sol.t_events[0]) == 0 and abs(sol.y[2, -1] - 1.0) > 1e-4:
        raise IncompatibleTargetError(
            f"charge mass reached only {sol.y[2, -1]:.6f} before the "
            "target support was exhausted")
    # resample the dense solution uniformly in time for accurate
    # quadrature/differentiation downstream
    ts = np.linspace(0.0, sol.t[-1], 4097)
    ys = sol.sol(ts)
    q = ys[0]
    xi = ys[1]
    mass = float(ys[2, -1])
    # drop duplicate endpoint samples and keep q strictly monotone
    keep = np.concatenate([[True], sgn * np.diff(q) > 0])
    q, xi = q[keep], xi[keep]
    if np.any(np.diff(xi) <= 0):
        raise IntegrationFailureError("xi not strictly monotone along the curve")
    if sgn < 0:
        q, xi = q[::-1], xi[::-1]
    return ManifoldCurve(q=q, xi=xi, q_min=float(q[0]), q_max=float(q[-1]),
                         eigenvector=v, mass=mass, d=d)


def reconstruct_charge_density(curve: ManifoldCurve,
                               target: RadialTarget) -> ContinuousCharges:
    """nu(q) = (|S_{d-1}|/d) f(xi(q)) |dxi/dq| tabulated along the curve."""
    geo = geometric_constants(curve.d)
    dxi_dq = np.gradient(curve.xi, curve.q)
    f = np.array([target.f(x) for x in curve.xi])
    nu = geo.sphere_area / curve.d * f * np.abs(dxi_dq)
    if np.any(nu < -1e-12):
        raise IntegrationArtifactError("negative density sample in reconstruction")
    nu = np.clip(nu, 0.0, None)
    total = np.trapezoid(nu, curve.q)
    if abs(total - 1.0) > 1e-4:
        raise IntegrationArtifactError(
            f"reconstructed mass {total:.6f} deviates from 1 beyond tolerance")
    return ContinuousCharges.tabulated(curve.q, nu / total)


def design_charge_density(target: RadialTarget, g: WeightSpec, d: int,
                          eps_scale: float = 1e-8):
    """One-call pipeline: saddle -> manifold -> charge density."""
    curve = integrate_unstable_manifold(target, g, d, eps_scale=eps_scale)
    nu = reconstruct_charge_density(curve, target)
    return curve, nu


@dataclass
class RoundtripReport:
    rms_deviation: float
    sup_deviation: float
    ordering: float
    q_min: float
    q_max: float
    n: int
    replicas: int
    predicted_sup_error: float = float("nan")


def predicted_profile_error(target: RadialTarget, g: WeightSpec, d: int,
                            nu: ContinuousCharges,
                            inner_fraction: float = 0.95) -> float:
    """Simulation-free consistency loop: push the reconstructed nu through
    the forward equilibrium prediction and compare to f."""
    spec = GasSpec(d=d, kernel=KernelSpec.coulomb(),
                   confinement=ConfinementSpec.quadratic(),
                   weight=g, charges=nu)
    prof = equilibrium.continuous_profile(spec)
    r_edge = prof.R * inner_fraction ** (1.0 / d)
    r = np.linspace(0.0, r_edge, 512)
    pred = np.array([prof.rho(x) for x in r])
    want = np.array([target.f(x ** d) for x in r])
    return float(np.max(np.abs(pred - want)))


def verify_roundtrip(target: RadialTarget, g: WeightSpec, d: int, n: int,
                     seed: int, replicas: int = 4, schedule=None,
                     bins: int = 24) -> RoundtripReport:
    """Minimize a gas with the reconstructed nu and compare the empirical
    radial density against the target."""
    from . import minimizer, stats

    curve, nu = design_charge_density(target, g, d)
    spec = GasSpec(d=d, kernel=KernelSpec.coulomb(),
                   confinement=ConfinementSpec.quadratic(),
                   weight=g, charges=nu)
    configs = []
    orderings = []
    for k in range(replicas):
        res = minimizer.minimize(spec, n, schedule=schedule, seed=seed + k,
                                 stratified=True)
        configs.append(res.config)
        orderings.append(stats.ordering_metric(res.config))
    r_max = target.support_xi ** (1.0 / d)
    hist = stats.radial_profiles(configs, bins=bins, r_max=r_max)
    centers = hist.centers
    want = np.array([target.f(c ** d) for c in centers])
    dev = hist.density - want
    # compare on the inner 95% of the support (edge bins are noisy)
    inner = centers <= r_max * 0.95 ** (1.0 / d)
    return RoundtripReport(
        rms_deviation=float(np.sqrt(np.mean(dev[inner] ** 2))),
        sup_deviation=float(np.max(np.abs(dev[inner]))),
        ordering=float(np.mean(orderings)),
        q_min=curve.q_min, q_max=curve.q_max, n=n, replicas=replicas,
        predicted_sup_error=predicted_profile_error(target, g, d, nu),
    )
