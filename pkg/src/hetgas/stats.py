"""Empirical observables: radial profiles, nearest-neighbor statistics,
local two-point correlations and the charge-ordering metric."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import spearmanr

from .gasmodel import Configuration, geometric_constants


class InsufficientStatisticsError(RuntimeError):
    pass


class UndefinedMetricError(ValueError):
    pass


@dataclass
class RadialHistogram:
    """Ensemble-averaged radial densities on equal-volume bins."""

    edges: np.ndarray            # (bins + 1,)
    density: np.ndarray          # particle density per bin (measure-normalized)
    charge_density: np.ndarray
    mean_charge: np.ndarray      # nan on empty bins
    counts: np.ndarray
    density_se: np.ndarray
    charge_density_se: np.ndarray
    mean_charge_se: np.ndarray
    empty_bins: np.ndarray       # boolean flags, kept rather than dropped

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def radial_profiles(configs: Sequence[Configuration], bins: int = 32,
                    r_max: Optional[float] = None) -> RadialHistogram:
    """Per-bin particle density, charge density and mean charge with
    standard errors across the ensemble."""
    if len(configs) == 0:
        raise ValueError("at least one configuration required")
    d = configs[0].d
    geo = geometric_constants(d)
    if r_max is None:
        r_max = max(float(np.max(c.radii())) for c in configs) * (1.0 + 1e-9)
    # equal-volume bins: edges uniform in r^d
    edges = r_max * (np.arange(bins + 1) / bins) ** (1.0 / d)
    vol = geo.ball_volume * (edges[1:] ** d - edges[:-1] ** d)

    dens, qdens, meanq, counts = [], [], [], []
    for c in configs:
        r = c.radii()
        idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, bins - 1)
        cnt = np.bincount(idx, minlength=bins).astype(float)
        qsum = np.bincount(idx, weights=c.charges, minlength=bins)
        dens.append(cnt / (c.n * vol))
        qdens.append(qsum / (c.n * vol))
        with np.errstate(invalid="ignore"):
            meanq.append(np.where(cnt > 0, qsum / np.maximum(cnt, 1), np.nan))
        counts.append(cnt)
    dens = np.array(dens)
    qdens = np.array(qdens)
    meanq = np.array(meanq)
    counts = np.array(counts)
    k = len(configs)
    se = lambda a: np.nanstd(a, axis=0) / np.sqrt(k) if k > 1 else np.zeros(bins)
    total_counts = counts.sum(axis=0)
    import warnings
    with warnings.catch_warnings():
        # all-empty bins legitimately produce nan mean charges; they are
        # flagged below rather than dropped
        warnings.simplefilter("ignore", RuntimeWarning)
        return RadialHistogram(
            edges=edges,
            density=dens.mean(axis=0),
            charge_density=qdens.mean(axis=0),
            mean_charge=np.nanmean(np.where(counts > 0, meanq, np.nan), axis=0),
            counts=total_counts,
            density_se=se(dens),
            charge_density_se=se(qdens),
            mean_charge_se=se(meanq),
            empty_bins=total_counts == 0,
        )


def nearest_neighbor_distances(config: Configuration,
                               blow_up: bool = False) -> np.ndarray:
    """Per-particle distance to the nearest other particle; optionally
    rescaled by N^(1/d)."""
    if config.n < 2:
        raise ValueError("need at least two particles")
    tree = cKDTree(config.positions)
    dist, _ = tree.query(config.positions, k=2)
    out = dist[:, 1]
    if blow_up:
        out = out * config.n ** (1.0 / config.d)
    return out


@dataclass
class CorrelationCurve:
    r0: float
    r: np.ndarray            # blown-up distance grid (bin centers)
    G: np.ndarray
    G_se: np.ndarray
    annulus_width: float
    n_reference: int
    replicas: int


def _angular_nodes(d: int, points: int = 64):
    """Quadrature nodes/weights for the angle between a fixed direction and a
    uniformly random one (density proportional to sin^(d-2) theta on [0, pi])."""
    t, w = np.polynomial.legendre.leggauss(points)
    theta = 0.5 * np.pi * (t + 1.0)
    w = 0.5 * np.pi * w * np.sin(theta) ** (d - 2)
    return np.cos(theta), w / np.sum(w)


def local_pair_correlation(configs: Sequence[Configuration], r0: float,
                           annulus_width: float, r_grid: np.ndarray,
                           min_reference: int = 10) -> CorrelationCurve:
    """G(r0, r): density of blown-up neighbor distances around reference
    particles at radius ~ r0, normalized so any uncorrelated isotropic
    ensemble gives G = 1 (the expected counts integrate the empirical radial
    density over each distance shell, so boundary truncation cancels)."""
    d = configs[0].d
    edges = np.asarray(r_grid, dtype=float)
    centers = 0.5 * (edges[1:] + edges[:-1])
    geo = geometric_constants(d)
    shell = geo.sphere_area * centers ** (d - 1) * np.diff(edges)

    # empirical radial particle density (measure-normalized), pooled over
    # the ensemble; isotropy turns it into expected counts at any distance
    r_max = max(float(np.max(c.radii())) for c in configs)
    pooled = radial_profiles(configs, bins=max(8, int(np.sqrt(configs[0].n))),
                             r_max=r_max * 1.001)
    rho_emp = lambda r: np.interp(r, pooled.centers, pooled.density,
                                  left=pooled.density[0], right=0.0)
    cos_t, w_t = _angular_nodes(d)

    per_replica = []
    total_ref = 0
    for c in configs:
        n = c.n
        blow = n ** (1.0 / d)
        radii = c.radii()
        ref = np.where(np.abs(radii - r0) < 0.5 * annulus_width)[0]
        total_ref += len(ref)
        if len(ref) == 0:
            continue
        diffs = c.positions[ref][:, None, :] - c.positions[None, :, :]
        dist = np.linalg.norm(diffs, axis=-1) * blow
        dist = dist[dist > 1e-12]
        hist, _ = np.histogram(dist, bins=edges)
        # expected counts: for a reference at radius a, the angle-averaged
        # density at distance s is E_theta rho(sqrt(a^2 + s^2 - 2 a s cos))
        a = radii[ref][:, None, None]                      # (ref, 1, 1)
        s = (centers / blow)[None, :, None]                # (1, bins, 1)
        rr = np.sqrt(np.maximum(a * a + s * s - 2.0 * a * s * cos_t, 0.0))
        rho_bar = np.sum(rho_emp(rr) * w_t, axis=-1)       # (ref, bins)
        norm = np.sum(rho_bar, axis=0) * shell             # blown-up volume
        with np.errstate(divide="ignore", invalid="ignore"):
            per_replica.append(np.where(norm > 0, hist / norm, 0.0))
    if total_ref < min_reference:
        raise InsufficientStatisticsError(
            f"only {total_ref} reference particles near r0={r0}")
    G = np.mean(per_replica, axis=0)
    G_se = (np.std(per_replica, axis=0) / np.sqrt(len(per_replica))
            if len(per_replica) > 1 else np.zeros_like(G))
    return CorrelationCurve(
        r0=r0, r=centers, G=G, G_se=G_se,
        annulus_width=annulus_width, n_reference=total_ref,
        replicas=len(per_replica),
    )


def ordering_metric(config: Configuration) -> float:
    """Spearman rank correlation between charge and radius in [-1, 1]."""
    if config.n < 10:
        raise ValueError("need at least 10 particles")
    if np.unique(config.charges).size < 2:
        raise UndefinedMetricError("all charges equal; ordering undefined")
    rho, _ = spearmanr(config.charges, config.radii())
    return float(rho)
