"""Problem description for heterogeneous gases with singular repulsion.

A gas is specified by a dimension d >= 2, an interaction kernel W, a
confining potential V, a weight function g modulating the confinement of
each charge, and a probability law for the charges.  The N-particle energy
is

    H_N = N sum_i q_i g(q_i) V(x_i) - sum_i sum_{j != i} q_i q_j W(|x_i - x_j|)

with the double sum running over ordered pairs.  All types in this module
are immutable after construction and safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gamma as _gamma


class GasModelError(ValueError):
    """Base class for invalid gas descriptions."""


class InvalidDimensionError(GasModelError):
    pass


class InvalidKernelError(GasModelError):
    pass


class InvalidWeightError(GasModelError):
    pass


class InvalidChargeLawError(GasModelError):
    pass


# ---------------------------------------------------------------------------
# geometric constants

@dataclass(frozen=True)
class GeometricConstants:
    c: float            # kernel normalization: c_2 = 1, c_d = d - 2 for d >= 3
    k: float            # k_d = c_d |S_{d-1}|
    sphere_area: float  # |S_{d-1}|
    ball_volume: float  # |B_d|


def geometric_constants(d: int) -> GeometricConstants:
    """Constants (c_d, k_d, |S_{d-1}|, |B_d|) for dimension d >= 2."""
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {d!r}")
    sphere = 2.0 * math.pi ** (d / 2.0) / _gamma(d / 2.0)
    ball = math.pi ** (d / 2.0) / _gamma(d / 2.0 + 1.0)
    c = 1.0 if d == 2 else float(d - 2)
    return GeometricConstants(c=c, k=c * sphere, sphere_area=sphere, ball_volume=ball)


# ---------------------------------------------------------------------------
# interaction kernel

@dataclass(frozen=True)
class KernelSpec:
    """Radial interaction kernel, W'(r) = r^(-d+1-eta).

    eta = 0 is the Coulomb kernel (Green function of the Laplacian up to
    the k_d normalization): W(r) = log r in d = 2, W(r) = -1/r^(d-2) for
    d >= 3.  The normalization for eta != 0 is W(r) = -r^(-s)/s with
    s = d - 2 + eta, which is continuous in eta and recovers the Coulomb
    case exactly at eta = 0.
    """

    eta: float = 0.0

    @classmethod
    def coulomb(cls) -> "KernelSpec":
        return cls(eta=0.0)

    @classmethod
    def riesz(cls, eta: float) -> "KernelSpec":
        return cls(eta=float(eta))

    @property
    def is_coulomb(self) -> bool:
        return self.eta == 0.0

    def exponent(self, d: int) -> float:
        return d - 2 + self.eta

    def validate(self, d: int) -> None:
        if self.eta <= -(d + 2):
            raise InvalidKernelError(
                f"Riesz parameter eta={self.eta} violates eta > -(d+2) for d={d}"
            )


def kernel_value(kernel: KernelSpec, d: int, r):
    """W(r) for r > 0 (scalar or array)."""
    kernel.validate(d)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("kernel_value requires r > 0")
    s = kernel.exponent(d)
    if s == 0.0:
        out = np.log(r)
    else:
        out = -(r ** (-s)) / s
    return float(out) if out.ndim == 0 else out


def kernel_derivative(kernel: KernelSpec, d: int, r):
    """W'(r) = r^(-d+1-eta), strictly positive for r > 0."""
    kernel.validate(d)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("kernel_derivative requires r > 0")
    out = r ** (-(d - 1 + kernel.eta))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# confinement

@dataclass(frozen=True)
class ConfinementSpec:
    """External potential V with value and gradient, vectorized over (N, d)."""

    family: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    axis: Optional[int] = None

    @classmethod
    def quadratic(cls) -> "ConfinementSpec":
        return cls(
            family="quadratic",
            value=lambda x: np.sum(x * x, axis=-1),
            gradient=lambda x: 2.0 * x,
        )

    @classmethod
    def quartic_minus_quadratic(cls) -> "ConfinementSpec":
        return cls(
            family="quartic_minus_quadratic",
            value=lambda x: 0.5 * np.sum(x ** 4, axis=-1) - np.sum(x * x, axis=-1),
            gradient=lambda x: 2.0 * x ** 3 - 2.0 * x,
        )

    @classmethod
    def coordinate_square(cls, axis: int) -> "ConfinementSpec":
        def value(x, axis=axis):
            return x[..., axis] ** 2

        def gradient(x, axis=axis):
            g = np.zeros_like(x)
            g[..., axis] = 2.0 * x[..., axis]
            return g

        return cls(family="coordinate_square", value=value, gradient=gradient, axis=axis)

    @classmethod
    def custom(cls, value, gradient, check_growth: bool = True, d: int = 2) -> "ConfinementSpec":
        spec = cls(family="custom", value=value, gradient=gradient)
        if check_growth:
            spec.check_confining(d)
        return spec

    def check_confining(self, d: int, scales=(1.0, 10.0, 100.0)) -> None:
        # sampled check of V(x) -> +inf as |x| -> inf (coordinate_square grows
        # along its axis only; it is confining on compact manifolds)
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(32, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        vals = [float(np.min(self.value(dirs * s))) for s in scales]
        if self.family != "coordinate_square" and not vals[-1] > vals[0]:
            raise GasModelError("confinement does not grow at large |x| (H2 violated)")


# ---------------------------------------------------------------------------
# weight function

_WEIGHT_FAMILIES = {
    "constant": (lambda q, c: np.full_like(np.asarray(q, dtype=float), c), "constant"),
    "linear": (lambda q, c: c * np.asarray(q, dtype=float), "increasing"),
    "inverse_sqrt": (lambda q, c: c / np.sqrt(np.asarray(q, dtype=float)), "decreasing"),
    "inverse": (lambda q, c: c / np.asarray(q, dtype=float), "decreasing"),
    "sine_offset": (
        lambda q, c: c * (2.0 + np.sin(np.pi * np.asarray(q, dtype=float) / 3.0)),
        "non-monotonic",
    ),
}


@dataclass(frozen=True)
class WeightSpec:
    """Charge weight g(q) > 0 with a declared monotonicity tag."""

    family: str
    monotonicity: str
    c: float = 1.0
    fn: Optional[Callable] = None

    @classmethod
    def constant(cls, c: float = 1.0) -> "WeightSpec":
        return cls(family="constant", monotonicity="constant", c=c)

    @classmethod
    def linear(cls) -> "WeightSpec":
        return cls(family="linear", monotonicity="increasing")

    @classmethod
    def inverse_sqrt(cls) -> "WeightSpec":
        return cls(family="inverse_sqrt", monotonicity="decreasing")

    @classmethod
    def inverse(cls) -> "WeightSpec":
        return cls(family="inverse", monotonicity="decreasing")

    @classmethod
    def sine_offset(cls) -> "WeightSpec":
        return cls(family="sine_offset", monotonicity="non-monotonic")

    @classmethod
    def custom(cls, fn: Callable, monotonicity: Optional[str] = None) -> "WeightSpec":
        if monotonicity is None:
            raise InvalidWeightError("custom weight requires an explicit monotonicity tag")
        return cls(family="custom", monotonicity=monotonicity, fn=fn)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        if self.family == "custom":
            out = np.asarray(self.fn(q), dtype=float)
        else:
            out = _WEIGHT_FAMILIES[self.family][0](q, self.c)
        return float(out) if out.ndim == 0 else out

    @property
    def is_constant(self) -> bool:
        return self.monotonicity == "constant"

    @property
    def is_monotone(self) -> bool:
        return self.monotonicity in ("increasing", "decreasing")

    def check_monotonicity(self, q_min: float, q_max: float, n: int = 512) -> None:
        """Verify the declared tag against the sampled sign of g' on [q_min, q_max]."""
        q = np.linspace(q_min, q_max, n)
        v = np.asarray(self(q))
        if np.any(v <= 0.0):
            raise InvalidWeightError("weight g(q) must be positive on Q")
        if q_max == q_min:
            return  # single-point support: any tag is vacuously consistent
        dv = np.diff(v)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(v))))
        inc, dec = np.all(dv > tol), np.all(dv < -tol)
        const = np.all(np.abs(dv) <= tol)
        observed = (
            "constant" if const else "increasing" if inc else "decreasing" if dec else "non-monotonic"
        )
        if observed != self.monotonicity:
            raise InvalidWeightError(
                f"declared monotonicity {self.monotonicity!r} but sampled g is {observed!r}"
            )


def weight_eval(w: WeightSpec, q) -> float:
    out = w(q)
    if np.any(np.asarray(out) <= 0.0):
        raise InvalidWeightError(f"weight g({q}) is not positive")
    return out


# ---------------------------------------------------------------------------
# charge distributions

class ChargeDistribution:
    """Common interface: support [q_min, q_max] with q_min > 0, moments, sampling."""

    q_min: float
    q_max: float

    def moment(self, fn: Callable) -> float:
        raise NotImplementedError

    def sample(self, n: int, seed: int, stratified: bool = False) -> np.ndarray:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return self._moments()[0]

    @property
    def mean_sq(self) -> float:
        return self._moments()[1]

    def mean_qg(self, w: WeightSpec) -> float:
        return self.moment(lambda q: q * np.asarray(w(q)))

    def _moments(self):
        cached = getattr(self, "_cached_moments", None)
        if cached is None:
            cached = (self.moment(lambda q: q), self.moment(lambda q: q * q))
            object.__setattr__(self, "_cached_moments", cached)
        return cached

    def _check_support(self):
        if self.q_min <= 0.0:
            raise InvalidChargeLawError(f"q_min must be positive, got {self.q_min}")
        if self.q_max < self.q_min:
            raise InvalidChargeLawError("q_max < q_min")


class AtomicCharges(ChargeDistribution):
    """Finite mixture of point charges sum_i nu_i delta_{q_i}."""

    def __init__(self, atoms: Sequence[tuple]):
        atoms = sorted((float(q), float(w)) for q, w in atoms)
        self.values = np.array([q for q, _ in atoms])
        self.weights = np.array([w for _, w in atoms])
        if np.any(self.weights < 0.0):
            raise InvalidChargeLawError("atom weights must be non-negative")
        if abs(self.weights.sum() - 1.0) > 1e-10:
            raise InvalidChargeLawError(
                f"atom weights sum to {self.weights.sum()}, expected 1 within 1e-10"
            )
        self.q_min = float(self.values[0])
        self.q_max = float(self.values[-1])
        self._check_support()

    def moment(self, fn) -> float:
        return float(np.sum(np.asarray(fn(self.values)) * self.weights))

    def sample(self, n: int, seed: int, stratified: bool = False) -> np.ndarray:
        rng = np.random.default_rng(seed)
        if stratified:
            # deterministic largest-remainder apportionment, shuffled once
            exact = self.weights * n
            counts = np.floor(exact).astype(int)
            rem = exact - counts
            for i in np.argsort(-rem)[: n - counts.sum()]:
                counts[i] += 1
            out = np.repeat(self.values, counts)
            rng.shuffle(out)
            return out
        return rng.choice(self.values, size=n, p=self.weights)


class ContinuousCharges(ChargeDistribution):
    """Absolutely continuous charge law on [q_min, q_max]."""

    def __init__(self, q_min: float, q_max: float, density: Callable,
                 renormalize: bool = False, grid_points: int = 8193):
        self.q_min = float(q_min)
        self.q_max = float(q_max)
        self._check_support()
        self._grid = np.linspace(self.q_min, self.q_max, grid_points)
        vals = np.asarray(density(self._grid), dtype=float)
        if np.any(vals < -1e-12):
            raise InvalidChargeLawError("charge density must be non-negative")
        vals = np.clip(vals, 0.0, None)
        mass = float(np.trapezoid(vals, self._grid))
        if renormalize:
            vals = vals / mass
        elif abs(mass - 1.0) > 1e-6:
            raise InvalidChargeLawError(f"charge density mass {mass} != 1")
        self._vals = vals
        self._density = density if not renormalize else (lambda q: np.interp(q, self._grid, self._vals))
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(self._grid))])
        self._cdf = cdf / cdf[-1]

    @classmethod
    def uniform(cls, q_min: float, q_max: float) -> "ContinuousCharges":
        width = float(q_max) - float(q_min)
        return cls(q_min, q_max, lambda q: np.full_like(np.asarray(q, dtype=float), 1.0 / width))

    @classmethod
    def tabulated(cls, q: np.ndarray, nu: np.ndarray, renormalize: bool = True) -> "ContinuousCharges":
        q = np.asarray(q, dtype=float)
        nu = np.asarray(nu, dtype=float)
        return cls(q[0], q[-1], lambda u: np.interp(u, q, nu, left=0.0, right=0.0),
                   renormalize=renormalize)

    @property
    def q_grid(self) -> np.ndarray:
        return self._grid

    @property
    def nu_grid(self) -> np.ndarray:
        return self._vals

    def density(self, q):
        return self._density(np.asarray(q, dtype=float))

    def moment(self, fn) -> float:
        return float(np.trapezoid(np.asarray(fn(self._grid)) * self._vals, self._grid))

    def quantile(self, p):
        return np.interp(p, self._cdf, self._grid)

    def sample(self, n: int, seed: int, stratified: bool = False) -> np.ndarray:
        rng = np.random.default_rng(seed)
        if stratified:
            out = self.quantile((np.arange(n) + 0.5) / n)
            rng.shuffle(out)
            return out
        return self.quantile(rng.uniform(size=n))


def sample_charges(law: ChargeDistribution, n: int, seed: int,
                   stratified: bool = False) -> np.ndarray:
    """Draw n charges from the law; reproducible per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = law.sample(n, seed, stratified=stratified)
    return np.asarray(out, dtype=float)


# ---------------------------------------------------------------------------
# manifolds

@dataclass(frozen=True)
class ManifoldSpec:
    """Implicit surface F(x) = 0 with closest-point Newton projection."""

    name: str
    F: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    newton_iterations: int = 20
    tolerance: float = 1e-12

    @classmethod
    def unit_sphere(cls) -> "ManifoldSpec":
        return cls(
            name="unit_sphere",
            F=lambda x: np.sum(x * x, axis=-1) - 1.0,
            grad=lambda x: 2.0 * x,
        )

    @classmethod
    def torus(cls) -> "ManifoldSpec":
        def F(x):
            rho = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
            return (1.0 - rho) ** 2 + x[..., 2] ** 2 - 0.25

        def grad(x):
            rho = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
            safe = np.where(rho > 1e-300, rho, 1.0)
            g = np.empty_like(x)
            fac = -2.0 * (1.0 - rho) / safe
            g[..., 0] = fac * x[..., 0]
            g[..., 1] = fac * x[..., 1]
            g[..., 2] = 2.0 * x[..., 2]
            return g

        return cls(name="torus", F=F, grad=grad)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Newton iteration along grad F towards the surface."""
        y = np.array(x, dtype=float)
        for _ in range(self.newton_iterations):
            f = np.asarray(self.F(y))
            if np.max(np.abs(f)) < self.tolerance:
                break
            g = np.asarray(self.grad(y))
            g2 = np.sum(g * g, axis=-1)
            y = y - (f / g2)[..., None] * g
        return y

    def tangent_project(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Remove the normal component of v at the surface points x."""
        g = np.asarray(self.grad(x))
        n2 = np.sum(g * g, axis=-1, keepdims=True)
        return v - (np.sum(v * g, axis=-1, keepdims=True) / n2) * g


# ---------------------------------------------------------------------------
# full specification and configurations

@dataclass(frozen=True)
class GasSpec:
    """Complete physical problem description."""

    d: int
    kernel: KernelSpec = field(default_factory=KernelSpec.coulomb)
    confinement: ConfinementSpec = field(default_factory=ConfinementSpec.quadratic)
    weight: WeightSpec = field(default_factory=WeightSpec.constant)
    charges: ChargeDistribution = None
    q0: float = 1.0
    mu0: float = 1.0
    manifold: Optional[ManifoldSpec] = None

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 2:
            raise InvalidDimensionError(f"dimension must be an integer >= 2, got {self.d!r}")
        self.kernel.validate(self.d)
        if self.charges is None:
            raise InvalidChargeLawError("charge law is required")
        if self.q0 <= 0 or self.mu0 <= 0:
            raise GasModelError("units q0, mu0 must be positive")
        self.weight.check_monotonicity(self.charges.q_min, self.charges.q_max)

    @property
    def constants(self) -> GeometricConstants:
        return geometric_constants(self.d)


@dataclass(frozen=True)
class Configuration:
    """N particle positions and charges."""

    positions: np.ndarray  # (N, d)
    charges: np.ndarray    # (N,)
    manifold: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "charges", np.asarray(self.charges, dtype=float))
        if self.positions.ndim != 2 or len(self.charges) != len(self.positions):
            raise GasModelError("positions must be (N, d) with matching charges")
        if np.any(self.charges <= 0.0):
            raise GasModelError("all charges must be positive")

    @property
    def n(self) -> int:
        return len(self.charges)

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)

    def validate(self, spec: GasSpec) -> None:
        if np.any(self.charges < spec.charges.q_min - 1e-12) or np.any(
            self.charges > spec.charges.q_max + 1e-12
        ):
            raise GasModelError("charges outside the law's support")
        if spec.manifold is not None:
            res = np.max(np.abs(spec.manifold.F(self.positions)))
            if res > 1e-10:
                raise GasModelError(f"points off the manifold: |F| = {res:.2e}")
