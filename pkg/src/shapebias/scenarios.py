"""End-to-end experiment pipelines shared by the CLI and the test suite."""

from __future__ import annotations

import math

import numpy as np

from .bootstrap import (
    BootstrapConfig,
    BootstrapTrace,
    iterative_bootstrap,
    nested_bootstrap_coords,
)
from .errors import DomainError
from .estimation import (
    EstimationConfig,
    EstimationResult,
    _params_to_elements,
    estimate_template_coords,
)
from .generative import sample_generative_coords
from .groups import orbit_distance_coords
from .seeding import substream
from .spaces import Landmarks, ManifoldPoint, NoiseModel, TangentVector, log_coords

_DATA_STREAM = 0

CORRECTIONS = ("none", "iterative", "nested")


def generate_dataset(
    template: ManifoldPoint,
    sigma: float,
    n: int,
    seed: int,
    poses: str = "dirac",
    truncation_multiplier: float = 3.0,
) -> np.ndarray:
    """Stacked synthetic dataset (n, d) from the generative model."""
    rng = substream(seed, _DATA_STREAM)
    noise = NoiseModel(sigma, truncation_multiplier)
    return sample_generative_coords(template, noise, n, rng, poses)


def default_correction_eps(sigma: float, ambient_dim: int, n_bootstrap: int) -> float:
    """Convergence threshold for Monte Carlo bootstrap iterations.

    Consecutive iterates jitter at the replication noise scale
    ~sigma*sqrt(dim/n); the threshold sits a factor ~4 above it so the
    stopping rule still fires, and never drops below the noiseless
    default 1e-4.
    """
    return max(1e-4, 4.0 * sigma * math.sqrt(2.0 * ambient_dim / max(n_bootstrap, 1)))


def correction_pipeline(
    template: ManifoldPoint,
    sigma: float,
    n: int,
    seed: int,
    correction: str = "none",
    n_bootstrap: int | None = None,
    n_nested: int = 50,
    eps: float | None = None,
    max_iter: int = 20,
    analytic: bool = False,
    estimation: EstimationConfig = EstimationConfig(),
) -> tuple[EstimationResult, BootstrapTrace | None]:
    """Generate data at identity poses, estimate the template, optionally
    correct the estimate.

    Returns the estimation result for the raw data and, for corrected
    runs, a bootstrap trace whose last estimate is the corrected template.
    For the nested method the trace has a single iteration whose bias
    vector is the total correction that was applied.
    """
    if correction not in CORRECTIONS:
        raise DomainError(f"unknown correction {correction!r}")
    space = template.space
    coords = generate_dataset(template, sigma, n, seed)
    y_hat, params, trace, converged = estimate_template_coords(space, coords, estimation)
    result = EstimationResult(
        template_hat=ManifoldPoint(space, y_hat),
        registrations=_params_to_elements(space, params),
        cost_trace=trace,
        converged=converged,
    )
    if correction == "none":
        return result, None

    n_boot = n if n_bootstrap is None else n_bootstrap
    cfg = BootstrapConfig(
        n_bootstrap=n_boot,
        sigma=sigma,
        max_iter=max_iter,
        eps=eps
        if eps is not None
        else (
            1e-4
            if analytic
            else default_correction_eps(sigma, space.ambient_dim, n_boot)
        ),
        n_nested=n_nested,
        master_seed=seed,
        replication="analytic" if analytic else "monte_carlo",
        estimation=estimation,
    )
    if correction == "iterative":
        _, boot_trace = iterative_bootstrap(result.template_hat, cfg)
        return result, boot_trace

    corrected = nested_bootstrap_coords(space, coords, cfg)
    corrected_pt = ManifoldPoint(space, corrected)
    applied = -log_coords(space, y_hat, corrected)
    boot_trace = BootstrapTrace(
        estimates=[result.template_hat, corrected_pt],
        bias_vectors=[TangentVector(result.template_hat, applied)],
        converged=True,
        iterations=1,
    )
    return result, boot_trace


def triangle_pipeline(
    template: ManifoldPoint,
    sigma: float,
    n: int,
    seed: int,
    correction: str = "none",
    **kwargs,
) -> tuple[EstimationResult, BootstrapTrace | None]:
    """Landmark simulation: noisy triangles at identity poses, Kabsch-based
    estimation, optional correction.  See :func:`correction_pipeline`."""
    if not isinstance(template.space, Landmarks) or template.space.k != 3:
        raise DomainError("triangle pipeline needs a Landmarks(3, m) template")
    return correction_pipeline(template, sigma, n, seed, correction=correction, **kwargs)


def uncorrected_orbit_error(template: ManifoldPoint, estimate: ManifoldPoint) -> float:
    """Quotient distance from the true template's orbit to the estimate."""
    return float(orbit_distance_coords(template.space, template.coords, estimate.coords[None])[0])
