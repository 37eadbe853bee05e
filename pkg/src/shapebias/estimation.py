"""Alternating template estimation (register, then Fréchet-average).

The estimator alternates two block-coordinate steps: (i) register every
datum onto the current template candidate, (ii) replace the candidate by
the Fréchet mean of the registered data.  Each step minimizes the summed
squared ambient distance in one block, so the cost never increases; the
loop stops when its relative decrease falls below ``cost_tol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolationError, DomainError
from .groups import (
    AxialAngle,
    GroupElement,
    PlanarAngle,
    RotationMatrix,
    act,
    register_coords,
)
from .spaces import (
    Euclidean,
    Landmarks,
    ManifoldPoint,
    Space,
    distance_coords,
    frechet_mean_coords,
    stack_points,
)


@dataclass(frozen=True)
class EstimationConfig:
    max_outer_iter: int = 100
    cost_tol: float = 1e-10          # relative cost decrease threshold
    frechet_tol: float = 1e-10
    frechet_max_iter: int = 200
    init: str = "first"              # "first" (default) or "frechet_raw"

    def __post_init__(self):
        if self.max_outer_iter <= 0 or self.frechet_max_iter <= 0:
            raise DomainError("iteration limits must be positive")
        if self.cost_tol <= 0 or self.frechet_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.init not in ("first", "frechet_raw"):
            raise DomainError(f"unknown init mode {self.init!r}")


@dataclass(frozen=True, eq=False)
class EstimationResult:
    template_hat: ManifoldPoint
    registrations: list[GroupElement]
    cost_trace: list[float]
    converged: bool

    def __post_init__(self):
        trace = np.asarray(self.cost_trace, dtype=float)
        slack = 1e-12 * (1.0 + np.abs(trace[:-1])) if len(trace) > 1 else 0.0
        if len(trace) > 1 and np.any(np.diff(trace) > slack):
            raise ContractViolationError("cost trace is not non-increasing")


def cost_coords(space: Space, y: np.ndarray, registered: np.ndarray) -> float:
    return float(np.sum(distance_coords(space, y, registered) ** 2))


def cost(
    y: ManifoldPoint, gs: Sequence[GroupElement], data: Sequence[ManifoldPoint]
) -> float:
    """Sum of squared ambient distances from ``y`` to the posed data g_i . x_i."""
    if len(gs) != len(data):
        raise ContractViolationError(
            f"{len(gs)} group elements for {len(data)} data points"
        )
    total = 0.0
    for g, x in zip(gs, data):
        posed = act(g, x)
        total += distance_coords(y.space, y.coords, posed.coords).item() ** 2
    return total


def estimate_template_coords(
    space: Space,
    coords: np.ndarray,
    cfg: EstimationConfig = EstimationConfig(),
) -> tuple[np.ndarray, np.ndarray, list[float], bool]:
    """Array-level estimator on stacked data (n, d).

    Returns (template coords, registration params of the last pass,
    cost trace, converged flag).  Registration params are angles or
    rotation stacks as in :func:`shapebias.groups.register_coords`.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[0] == 0:
        raise DomainError("no data to estimate from")
    if cfg.init == "first":
        y = coords[0].copy()
    else:
        y = frechet_mean_coords(space, coords, cfg.frechet_tol, cfg.frechet_max_iter)

    trace: list[float] = []
    params = None
    converged = False
    for _ in range(cfg.max_outer_iter):
        params, registered = register_coords(space, y, coords)
        y = frechet_mean_coords(space, registered, cfg.frechet_tol, cfg.frechet_max_iter)
        c = cost_coords(space, y, registered)
        prev = trace[-1] if trace else None
        trace.append(c)
        if c <= 1e-300 or (
            prev is not None and prev - c <= cfg.cost_tol * max(prev, 1e-300)
        ):
            converged = True
            break
    return y, params, trace, converged


def _params_to_elements(space: Space, params: np.ndarray) -> list[GroupElement]:
    if isinstance(space, Euclidean):
        return [PlanarAngle(float(a)) for a in params]
    if isinstance(space, Landmarks):
        return [RotationMatrix(rot) for rot in params]
    return [AxialAngle(float(a)) for a in params]


def estimate_template(
    data: Sequence[ManifoldPoint],
    cfg: EstimationConfig = EstimationConfig(),
) -> EstimationResult:
    """Template estimate for a dataset on a single space.

    Initialized at the first datum (the usual convention); stops when the
    relative cost decrease drops below ``cfg.cost_tol`` or after
    ``cfg.max_outer_iter`` passes.
    """
    space, coords = stack_points(data)
    y, params, trace, converged = estimate_template_coords(space, coords, cfg)
    return EstimationResult(
        template_hat=ManifoldPoint(space, y),
        registrations=_params_to_elements(space, params),
        cost_trace=trace,
        converged=converged,
    )
