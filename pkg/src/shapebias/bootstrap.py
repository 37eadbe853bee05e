"""Parametric bootstrap corrections for the template estimation bias.

Both procedures assume the noise level sigma is known.  A *replication*
runs the full generative-model-plus-estimation pipeline at a given
template and registers the resulting estimate back onto it, so the
replication bias Log(template, replication) lives in the horizontal
(shape) directions at the template.

* Iterative bootstrap: fixed-point iteration.  At step k, estimate the
  bias by replicating at the current iterate, transport it to the initial
  estimate, and re-correct the initial estimate with it.  Contraction
  toward the true template in the infinite-data regime.
* Nested bootstrap: one-shot.  One replication estimates the bias; an
  inner round of replications at the replicated point estimates how the
  bias itself changes, correcting the bias estimate before applying it.

For the plane and sphere examples the Monte Carlo replication can be
swapped for the analytic expectation of the induced shape density
(``replication="analytic"``), which gives noiseless fixed-point iterates
(the infinite-data regime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .densities import ExampleSpace, asymptotic_estimate
from .errors import DegenerateOrbitError, DomainError
from .estimation import EstimationConfig, estimate_template_coords
from .generative import sample_generative_coords
from .groups import register_coords
from .seeding import substream
from .spaces import (
    Euclidean,
    ManifoldPoint,
    NoiseModel,
    Space,
    Sphere,
    TangentVector,
    distance_coords,
    exp_coords,
    frechet_mean_coords,
    log_coords,
    stack_points,
    transport_coords,
)

REPLICATION_MODES = ("monte_carlo", "analytic")

# substream tags
_ITERATIVE = 1
_NESTED_OUTER = 2
_NESTED_INNER = 3
_CURVATURE = 4


@dataclass(frozen=True)
class BootstrapConfig:
    n_bootstrap: int
    sigma: float
    max_iter: int = 20
    eps: float = 1e-4
    n_nested: int = 50
    master_seed: int = 0
    pose_distribution: str = "dirac"
    replication: str = "monte_carlo"
    truncation_multiplier: float = 3.0
    estimation: EstimationConfig = EstimationConfig()

    def __post_init__(self):
        if self.replication not in REPLICATION_MODES:
            raise DomainError(f"unknown replication mode {self.replication!r}")
        if self.replication == "monte_carlo" and self.n_bootstrap < 1:
            raise DomainError("n_bootstrap must be >= 1 for Monte Carlo replication")
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise DomainError("sigma must be finite and >= 0")
        if self.max_iter < 1 or self.n_nested < 1:
            raise DomainError("iteration counts must be positive")
        if self.eps <= 0:
            raise DomainError("eps must be positive")

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.sigma, self.truncation_multiplier)


@dataclass(frozen=True, eq=False)
class BootstrapTrace:
    """Per-iteration record: estimates (length iterations+1, starting at the
    uncorrected input) and the replication bias vector measured at each
    iterate."""

    estimates: list[ManifoldPoint]
    bias_vectors: list[TangentVector]
    converged: bool
    iterations: int

    def __post_init__(self):
        if len(self.estimates) != self.iterations + 1 or len(self.bias_vectors) != self.iterations:
            raise DomainError("inconsistent trace lengths")


def _analytic_replication(space: Space, y: np.ndarray, sigma: float) -> np.ndarray:
    if space == Euclidean(2):
        r = float(np.linalg.norm(y))
        if r < 1e-12:
            raise DegenerateOrbitError("analytic replication at the singular origin")
        return y * (asymptotic_estimate(ExampleSpace.PLANE, r, sigma) / r)
    if space == Sphere(2):
        s = math.hypot(y[0], y[1])
        if s < 1e-12:
            raise DegenerateOrbitError("analytic replication at a pole")
        theta = math.acos(max(-1.0, min(1.0, y[2])))
        theta_new = asymptotic_estimate(ExampleSpace.SPHERE, theta, sigma)
        return np.array(
            [math.sin(theta_new) * y[0] / s, math.sin(theta_new) * y[1] / s, math.cos(theta_new)]
        )
    raise DomainError("analytic replication is defined for Euclidean(2)/Sphere(2) only")


def _replicate(
    space: Space, y: np.ndarray, cfg: BootstrapConfig, rng: np.random.Generator
) -> np.ndarray:
    """One bootstrap replication at template coords ``y``, registered onto y."""
    if cfg.sigma == 0.0:
        return y.copy()
    if cfg.replication == "analytic":
        return _analytic_replication(space, y, cfg.sigma)
    data = sample_generative_coords(
        ManifoldPoint(space, y), cfg.noise, cfg.n_bootstrap, rng, cfg.pose_distribution
    )
    estimate, _, _, _ = estimate_template_coords(space, data, cfg.estimation)
    _, registered = register_coords(space, y, estimate[None])
    return registered[0]


def iterative_bootstrap(
    y_hat0: ManifoldPoint, cfg: BootstrapConfig
) -> tuple[ManifoldPoint, BootstrapTrace]:
    """Iteratively re-estimate and subtract the bias, starting from the
    uncorrected estimate ``y_hat0``.

    At iteration k the expected estimation bias at the current iterate is
    measured by a replication, parallel-transported back to ``y_hat0``,
    and subtracted there.  Stops when consecutive iterates are closer than
    ``cfg.eps`` or after ``cfg.max_iter`` iterations (non-convergence is
    flagged, the last iterate is still returned).
    """
    space = y_hat0.space
    y0 = y_hat0.coords
    yk = y0.copy()
    estimates = [y_hat0]
    bias_vectors: list[TangentVector] = []
    converged = False
    iterations = 0
    for k in range(cfg.max_iter):
        rng = substream(cfg.master_seed, _ITERATIVE, k)
        replication = _replicate(space, yk, cfg, rng)
        bias_k = log_coords(space, yk, replication)
        bias_at_y0 = transport_coords(space, yk, y0, bias_k)
        y_next = exp_coords(space, y0, -bias_at_y0)
        delta = float(distance_coords(space, y_next, yk))
        bias_vectors.append(TangentVector(estimates[-1], bias_k))
        estimates.append(ManifoldPoint(space, y_next))
        yk = y_next
        iterations = k + 1
        if delta < cfg.eps:
            converged = True
            break
    trace = BootstrapTrace(
        estimates=estimates,
        bias_vectors=bias_vectors,
        converged=converged,
        iterations=iterations,
    )
    return estimates[-1], trace


def nested_bootstrap_coords(
    space: Space, coords: np.ndarray, cfg: BootstrapConfig
) -> np.ndarray:
    """Array-level nested bootstrap; see :func:`nested_bootstrap`."""
    y0, _, _, _ = estimate_template_coords(space, np.asarray(coords, dtype=float), cfg.estimation)
    if cfg.sigma == 0.0:
        return y0
    rng_outer = substream(cfg.master_seed, _NESTED_OUTER)
    y0_star = _replicate(space, y0, cfg, rng_outer)
    bias = log_coords(space, y0, y0_star)

    inner = np.stack(
        [
            _replicate(space, y0_star, cfg, substream(cfg.master_seed, _NESTED_INNER, i))
            for i in range(cfg.n_nested)
        ]
    )
    # aggregate the inner replications before measuring the inner bias
    inner_mean = frechet_mean_coords(
        space, inner, cfg.estimation.frechet_tol, cfg.estimation.frechet_max_iter
    )
    inner_log = log_coords(space, y0_star, inner_mean)
    bias_of_bias = bias - transport_coords(space, y0_star, y0, inner_log)
    return exp_coords(space, y0, -(bias + bias_of_bias))


def nested_bootstrap(data: Sequence[ManifoldPoint], cfg: BootstrapConfig) -> ManifoldPoint:
    """One-shot bias correction with an inner bootstrap round.

    Estimates the template from ``data``, measures its bias with one
    replication, de-biases that bias estimate with ``cfg.n_nested`` inner
    replications, and applies the corrected bias.  With ``sigma == 0`` the
    uncorrected estimate is returned unchanged.
    """
    space, coords = stack_points(data)
    return ManifoldPoint(space, nested_bootstrap_coords(space, coords, cfg))


def estimate_mean_curvature_empirical(
    y: ManifoldPoint,
    sigma: float,
    n: int,
    seed: int,
    truncation_multiplier: float = 3.0,
    estimation: EstimationConfig = EstimationConfig(),
) -> TangentVector:
    """Empirical orbit mean curvature at ``y``.

    Runs one replication at template ``y`` and rescales the measured bias
    by -2/sigma^2, inverting the small-noise bias law.  Needs sigma small
    relative to the distance to the nearest singular orbit.
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    cfg = BootstrapConfig(
        n_bootstrap=n,
        sigma=sigma,
        master_seed=seed,
        truncation_multiplier=truncation_multiplier,
        estimation=estimation,
    )
    rng = substream(seed, _CURVATURE)
    replication = _replicate(y.space, y.coords, cfg, rng)
    bias = log_coords(y.space, y.coords, replication)
    return TangentVector(y, (-2.0 / sigma**2) * bias)
