"""Riemannian primitives on the supported object spaces.

Three spaces carry the whole library: flat Euclidean vectors, the unit
sphere (geodesics are great circles, all maps in closed form), and landmark
configurations (k points in R^m, flat as a product space).  Points and
tangent vectors are immutable value types; every operation is a pure
function, and anything stochastic takes an explicit generator.

Two API levels coexist.  The object level (``exp``, ``log``, ``distance``,
``parallel_transport``, ``sample_gaussian``, ``frechet_mean``) works on
:class:`ManifoldPoint`/:class:`TangentVector` and validates its inputs.
The array level (``exp_coords`` etc.) works on raw coordinate arrays with
a leading batch axis and is what the estimation and bootstrap loops use
for large Monte Carlo runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    ContractViolationError,
    ConvergenceError,
    CutLocusError,
    DomainError,
)

# Inner products this close to -1 are treated as antipodal (log undefined).
ANTIPODAL_TOL = 1e-12


@dataclass(frozen=True)
class Euclidean:
    """Flat space R^dim."""

    dim: int

    @property
    def ambient_dim(self) -> int:
        return self.dim

    @property
    def tangent_dim(self) -> int:
        return self.dim


@dataclass(frozen=True)
class Sphere:
    """Unit sphere S^dim embedded in R^(dim+1)."""

    dim: int

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    @property
    def tangent_dim(self) -> int:
        return self.dim


@dataclass(frozen=True)
class Landmarks:
    """k labeled landmarks in R^m, stored as a flat (k*m,) coordinate vector."""

    k: int
    m: int

    @property
    def ambient_dim(self) -> int:
        return self.k * self.m

    @property
    def tangent_dim(self) -> int:
        return self.k * self.m


Space = Union[Euclidean, Sphere, Landmarks]


def _as_coords(values, dim: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (dim,):
        raise ContractViolationError(
            f"{what} must have shape ({dim},), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} contains non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A point on one of the supported spaces.

    Invariants checked on construction: coordinates are finite, have the
    space's ambient dimension, and sphere points have unit norm to 1e-12.
    """

    space: Space
    coords: np.ndarray

    def __post_init__(self):
        arr = _as_coords(self.coords, self.space.ambient_dim, "point coords")
        if isinstance(self.space, Sphere):
            nrm = float(np.linalg.norm(arr))
            if abs(nrm - 1.0) > 1e-12:
                raise DomainError(f"sphere point has norm {nrm!r}, expected 1")
        object.__setattr__(self, "coords", arr)

    def landmark_matrix(self) -> np.ndarray:
        """Coordinates reshaped to (k, m); Landmarks only."""
        if not isinstance(self.space, Landmarks):
            raise ContractViolationError("landmark_matrix requires a Landmarks point")
        return self.coords.reshape(self.space.k, self.space.m)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector: base point plus ambient components.

    For a Sphere base the components must be orthogonal to the base point
    (within 1e-10); flat spaces accept any finite components.
    """

    base: ManifoldPoint
    components: np.ndarray

    def __post_init__(self):
        arr = _as_coords(
            self.components, self.base.space.ambient_dim, "tangent components"
        )
        if isinstance(self.base.space, Sphere):
            dot = float(np.dot(arr, self.base.coords))
            if abs(dot) > 1e-10:
                raise DomainError(
                    f"tangent components not orthogonal to sphere base (<v,p>={dot!r})"
                )
        object.__setattr__(self, "components", arr)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.base, -self.components)


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic tangent Gaussian: per-coordinate std ``sigma``, with the
    full tangent vector rejection-truncated at
    ``truncation_multiplier * sigma * sqrt(tangent_dim)``.

    ``sigma = 0`` is accepted as the degenerate noise-free model (a Dirac
    at the base point); the bootstrap identity checks rely on it.
    """

    sigma: float
    truncation_multiplier: float = 3.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not (math.isfinite(self.truncation_multiplier) and self.truncation_multiplier > 0.0):
            raise DomainError(
                f"truncation_multiplier must be positive, got {self.truncation_multiplier!r}"
            )

    def truncation_radius(self, space: Space) -> float:
        return self.truncation_multiplier * self.sigma * math.sqrt(space.tangent_dim)


def _require_same_space(a: Space, b: Space) -> None:
    if a != b:
        raise ContractViolationError(f"space mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# Array-level kernels.  `base` is a single point (d,), the other argument
# may carry a leading batch axis.
# ---------------------------------------------------------------------------


def exp_coords(space: Space, base: np.ndarray, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if isinstance(space, Sphere):
        nrm = np.linalg.norm(v, axis=-1, keepdims=True)
        # sin(t)/t with the removable singularity at t=0
        with np.errstate(invalid="ignore", divide="ignore"):
            sinc = np.where(nrm > 0, np.sin(nrm) / np.where(nrm > 0, nrm, 1.0), 1.0)
        out = np.cos(nrm) * base + sinc * v
        out /= np.linalg.norm(out, axis=-1, keepdims=True)
        return out
    return base + v


def log_coords(space: Space, base: np.ndarray, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if isinstance(space, Sphere):
        dot = np.clip(q @ base, -1.0, 1.0)
        if np.any(dot < -1.0 + ANTIPODAL_TOL):
            raise CutLocusError("log undefined for (near-)antipodal sphere points")
        theta = np.arccos(dot)
        perp = q - dot[..., None] * base
        pn = np.linalg.norm(perp, axis=-1)
        safe = np.where(pn > 0, pn, 1.0)
        scale = np.where(pn > 1e-15, theta / safe, 0.0)
        return scale[..., None] * perp
    return q - base


def distance_coords(space: Space, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if isinstance(space, Sphere):
        dot = np.clip(np.sum(p * q, axis=-1), -1.0, 1.0)
        return np.arccos(dot)
    return np.linalg.norm(q - p, axis=-1)


def transport_coords(
    space: Space, start: np.ndarray, target: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """Parallel transport of ``v`` (tangent at ``start``) along the geodesic
    from ``start`` to ``target``.  Flat spaces: identity."""
    v = np.asarray(v, dtype=float)
    if not isinstance(space, Sphere):
        return v.copy()
    l_pq = log_coords(space, start, target)
    theta_sq = float(l_pq @ l_pq)
    if theta_sq < 1e-30:
        out = v - (v @ target)[..., None] * target
        return out
    l_qp = log_coords(space, target, start)
    coef = (v @ l_pq) / theta_sq
    out = v - coef[..., None] * (l_pq + l_qp)
    # numerical hygiene: re-project onto the tangent space at the target
    out = out - (out @ target)[..., None] * target
    return out


def sample_tangent_coords(
    space: Space,
    base: np.ndarray,
    noise: NoiseModel,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """n isotropic truncated Gaussian tangent draws at ``base``, shape (n, d).

    Rejection-resamples rows whose norm exceeds the truncation radius, so
    the output is an exact draw from the truncated law and is a
    deterministic function of the generator state.
    """
    d = space.ambient_dim
    radius = noise.truncation_radius(space)

    def draw(count: int) -> np.ndarray:
        eps = rng.standard_normal((count, d)) * noise.sigma
        if isinstance(space, Sphere):
            eps -= np.outer(eps @ base, base)
        return eps

    out = draw(n)
    bad = np.linalg.norm(out, axis=-1) > radius
    while np.any(bad):
        out[bad] = draw(int(bad.sum()))
        bad = np.linalg.norm(out, axis=-1) > radius
    return out


def sample_gaussian_coords(
    space: Space,
    base: np.ndarray,
    noise: NoiseModel,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """n draws from the generative noise model Exp(base, eps), shape (n, d)."""
    return exp_coords(space, base, sample_tangent_coords(space, base, noise, n, rng))


def frechet_mean_coords(
    space: Space,
    points: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """Fréchet mean of stacked points (n, d).

    Flat spaces: the arithmetic mean, exactly.  Sphere: tangent-mean
    fixed-point iteration (Karcher flow with unit step) until the mean log
    has norm below ``tol``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise DomainError("need a non-empty (n, d) array of points")
    if not isinstance(space, Sphere):
        return points.mean(axis=0)
    mu = points.mean(axis=0)
    nrm = np.linalg.norm(mu)
    mu = points[0] if nrm < 1e-12 else mu / nrm
    for _ in range(max_iter):
        grad = log_coords(space, mu, points).mean(axis=0)
        if np.linalg.norm(grad) < tol:
            return mu
        mu = exp_coords(space, mu, grad)
    raise ConvergenceError(
        f"Fréchet mean did not converge in {max_iter} iterations",
        last_iterate=ManifoldPoint(space, mu),
    )


# ---------------------------------------------------------------------------
# Object-level operations.
# ---------------------------------------------------------------------------


def exp(p: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    """Riemannian exponential: shoot from ``p`` along ``v``.

    Flat spaces add components; the sphere follows the great circle
    cos(|v|) p + sin(|v|) v/|v| and renormalizes.
    """
    if v.base.space != p.space or not np.allclose(
        v.base.coords, p.coords, rtol=0.0, atol=1e-12
    ):
        raise ContractViolationError("tangent vector is not based at p")
    return ManifoldPoint(p.space, exp_coords(p.space, p.coords, v.components))


def log(p: ManifoldPoint, q: ManifoldPoint) -> TangentVector:
    """Riemannian logarithm: the tangent vector at ``p`` shooting to ``q``."""
    _require_same_space(p.space, q.space)
    return TangentVector(p, log_coords(p.space, p.coords, q.coords))


def distance(p: ManifoldPoint, q: ManifoldPoint) -> float:
    _require_same_space(p.space, q.space)
    return float(distance_coords(p.space, p.coords, q.coords))


def parallel_transport(v: TangentVector, to: ManifoldPoint) -> TangentVector:
    """Transport ``v`` along the geodesic from its base to ``to``.

    Closed form on the sphere (rejects antipodal pairs); identity on the
    flat spaces.  Preserves the tangent norm.
    """
    _require_same_space(v.base.space, to.space)
    moved = transport_coords(v.base.space, v.base.coords, to.coords, v.components)
    return TangentVector(to, moved)


def sample_gaussian(
    p: ManifoldPoint, noise: NoiseModel, rng: np.random.Generator
) -> ManifoldPoint:
    """One draw from the noise model at ``p`` (see :class:`NoiseModel`)."""
    coords = sample_gaussian_coords(p.space, p.coords, noise, 1, rng)[0]
    return ManifoldPoint(p.space, coords)


def frechet_mean(
    points: Sequence[ManifoldPoint],
    tol: float = 1e-10,
    max_iter: int = 200,
) -> ManifoldPoint:
    """Fréchet mean of a non-empty collection of points on one space."""
    if len(points) == 0:
        raise DomainError("frechet_mean of an empty collection")
    space = points[0].space
    for pt in points[1:]:
        _require_same_space(space, pt.space)
    stacked = np.stack([pt.coords for pt in points])
    return ManifoldPoint(space, frechet_mean_coords(space, stacked, tol, max_iter))


def stack_points(points: Sequence[ManifoldPoint]) -> tuple[Space, np.ndarray]:
    """Validate a homogeneous point collection and stack its coordinates."""
    if len(points) == 0:
        raise DomainError("empty point collection")
    space = points[0].space
    for pt in points[1:]:
        _require_same_space(space, pt.space)
    return space, np.stack([pt.coords for pt in points])
