"""Finite-shot modeling: single-shot variances and Gaussian query noise.

Shot statistics never enter the circuit simulations themselves.  Instead,
every measurement query carries an exact single-shot variance, each query
value is perturbed by a Gaussian of width sqrt(var / shots-per-query), and
the matrices are reassembled from the perturbed values, so queries shared
between elements move together.  Solving the perturbed pencil many times
yields the sampled energy distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDistributionError, SelectionFailureError, EmptySubspaceError
from .gevp import solve_pencil
from .pauli import expect_pauli, sandwich_pauli


def _tr_prod(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.sum(a * b.T))


def var_dsp(rho: np.ndarray, bar: np.ndarray, axes: str,
            rb: np.ndarray | None = None) -> float:
    """Single-shot variance of one Pauli reading through the uncompute test.

    Var = Tr[(rho bar + rho P bar P)/2] - Tr[(bar rho + rho bar)/2 P]^2.
    Callers evaluating many observables against one state pair can pass the
    product rho @ bar to avoid recomputing it.
    """
    if rb is None:
        rb = rho @ bar
    mean = float(np.real(expect_pauli(rb, axes)))
    second = 0.5 * float(np.real(np.trace(rb))
                         + np.real(_tr_prod(rho, sandwich_pauli(bar, axes))))
    return float(max(second - mean * mean, 0.0))


def var_pauli_state(value: float) -> float:
    """Single-shot variance of a plain +-1 Pauli measurement with this mean."""
    return float(max(1.0 - value * value, 0.0))


def var_product(mean_a: float, var_a: float, mean_b: float, var_b: float) -> float:
    """Variance of a product of two independent estimators."""
    if var_a < 0 or var_b < 0:
        raise ValueError("variances must be non-negative")
    return float(var_a * var_b + var_a * mean_b * mean_b + var_b * mean_a * mean_a)


def var_product_chain(means_vars) -> float:
    """Fold var_product over a sequence of (mean, var) pairs."""
    mean, var = 1.0, 0.0
    for m, v in means_vars:
        var = var_product(mean, var, m, v)
        mean = mean * m
    return var


@dataclass(frozen=True)
class ShotConfig:
    """Total shot budget and sampling controls."""

    ns: float
    n_samples: int = 1000
    seed: int = 0
    per_element: bool = False


@dataclass
class EnergyDistribution:
    samples: np.ndarray
    mean: float
    stddev: float
    rejections: int


def perturb(matrices, cfg: ShotConfig, rng: np.random.Generator):
    """One Gaussian-perturbed (S, H) sample.

    Shots are split equally over the unique queries; by default one draw per
    query is shared by every matrix element that reuses it.  The per-element
    switch draws independently at each use instead.
    """
    keys = matrices.query_keys()
    q = len(keys)
    if q == 0:
        return matrices.assemble()
    if cfg.ns < q:
        raise ValueError(f"shot budget {cfg.ns} below one shot per query ({q})")
    spq = cfg.ns / q
    if cfg.per_element:
        def lookup(key):
            qu = matrices.queries[key]
            return qu.value + rng.normal(0.0, np.sqrt(qu.var / spq))
        return matrices.assemble(lookup)
    noisy = {}
    for key in keys:
        qu = matrices.queries[key]
        noisy[key] = qu.value + rng.normal(0.0, np.sqrt(qu.var / spq))
    return matrices.assemble(noisy.__getitem__)


def sample_distribution(matrices, cfg: ShotConfig, window: tuple[float, float],
                        threshold: float | None = None) -> EnergyDistribution:
    """Sample the mitigated-energy distribution under finite shots.

    Each sample runs perturb -> regularize -> solve; failed window selections
    are counted as rejections and excluded from the moments.
    """
    if threshold is None:
        threshold = 10.0 / np.sqrt(cfg.ns)
    energies = []
    rejections = 0
    for k in range(cfg.n_samples):
        rng = np.random.default_rng([cfg.seed, k])
        s, h = perturb(matrices, cfg, rng)
        try:
            sol = solve_pencil(s, h, window, threshold)
        except (SelectionFailureError, EmptySubspaceError):
            rejections += 1
            continue
        energies.append(sol.energy)
    if not energies:
        raise EmptyDistributionError("every sample was rejected")
    arr = np.array(energies)
    return EnergyDistribution(arr, float(arr.mean()), float(arr.std()), rejections)
