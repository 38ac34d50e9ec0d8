"""Jitted O(N^2) pair loops shared by the energy and minimizer modules.

All kernels take the Riesz exponent s = d - 2 + eta; s = 0 selects the
logarithmic kernel.  Loops are single-threaded so trajectories are
bit-reproducible.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def pair_interaction_energy(x, q, s):
    """(ordered-pair sum of q_i q_j W(r_ij), min pair distance)."""
    n, d = x.shape
    total = 0.0
    min_r2 = 1e300
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                r2 += diff * diff
            if r2 < min_r2:
                min_r2 = r2
            if s == 0.0:
                w = 0.5 * np.log(r2)
            else:
                w = -(r2 ** (-0.5 * s)) / s
            total += 2.0 * q[i] * q[j] * w
    return total, np.sqrt(min_r2)


@njit(cache=True)
def pair_interaction_forces(x, q, s):
    """Repulsive part of the force, 2 q_i sum_j q_j W'(r_ij) (x_i-x_j)/r_ij."""
    n, d = x.shape
    F = np.zeros((n, d))
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                r2 += diff * diff
            # W'(r)/r = r^(-s-2)
            c = 2.0 * q[i] * q[j] * r2 ** (-0.5 * s - 1.0)
            for k in range(d):
                f = c * (x[i, k] - x[j, k])
                F[i, k] += f
                F[j, k] -= f
    return F


@njit(cache=True)
def min_pair_distance(x):
    n, d = x.shape
    min_r2 = 1e300
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                r2 += diff * diff
            if r2 < min_r2:
                min_r2 = r2
    return np.sqrt(min_r2)
