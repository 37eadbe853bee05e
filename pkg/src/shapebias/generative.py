"""Generative model for synthetic shape data and template constructors.

Data are drawn as X_i = Exp(g_i . Y, eps_i): pose the template by a group
element, then add truncated isotropic Gaussian tangent noise.  The pose
step defaults to a Dirac at the identity (registration quotients poses
out, so the estimator's law does not depend on it); a uniform pose draw is
available for robustness checks.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import special_ortho_group

from .errors import ContractViolationError, DomainError
from .spaces import (
    Euclidean,
    Landmarks,
    ManifoldPoint,
    NoiseModel,
    Space,
    Sphere,
    sample_gaussian_coords,
)

POSE_DISTRIBUTIONS = ("dirac", "uniform")


def plane_template(radius: float) -> ManifoldPoint:
    """Template at radius ``radius`` on the positive x-axis of R^2."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    return ManifoldPoint(Euclidean(2), np.array([radius, 0.0]))


def sphere_template(theta: float) -> ManifoldPoint:
    """Template at colatitude ``theta`` on the zero meridian of S^2."""
    if not (0.0 < theta < math.pi):
        raise DomainError("colatitude must lie strictly in (0, pi)")
    return ManifoldPoint(Sphere(2), np.array([math.sin(theta), 0.0, math.cos(theta)]))


def triangle_template(vertices=None, m: int = 2) -> ManifoldPoint:
    """Triangle configuration in R^m, default a centered equilateral triangle
    of circumradius 0.6 (side length ~1.039)."""
    if vertices is None:
        angles = np.deg2rad([90.0, 210.0, 330.0])
        verts = 0.6 * np.column_stack((np.cos(angles), np.sin(angles)))
        if m == 3:
            verts = np.column_stack((verts, np.zeros(3)))
    else:
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] != 3:
            raise DomainError("triangle template needs a (3, m) vertex array")
        m = verts.shape[1]
    return ManifoldPoint(Landmarks(3, m), verts.ravel())


def smallest_edge(triangle: ManifoldPoint) -> float:
    verts = triangle.landmark_matrix()
    edges = [np.linalg.norm(verts[i] - verts[j]) for i, j in ((0, 1), (1, 2), (2, 0))]
    return float(min(edges))


def _apply_random_poses(
    space: Space, samples: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    n = samples.shape[0]
    if space == Euclidean(2) or space == Sphere(2):
        phi = rng.uniform(-math.pi, math.pi, size=n)
        c, s = np.cos(phi), np.sin(phi)
        out = samples.copy()
        out[:, 0] = c * samples[:, 0] - s * samples[:, 1]
        out[:, 1] = s * samples[:, 0] + c * samples[:, 1]
        return out
    if isinstance(space, Landmarks):
        if space.m == 2:
            phi = rng.uniform(-math.pi, math.pi, size=n)
            c, s = np.cos(phi), np.sin(phi)
            configs = samples.reshape(n, space.k, 2)
            out = np.empty_like(configs)
            out[..., 0] = c[:, None] * configs[..., 0] + s[:, None] * configs[..., 1]
            out[..., 1] = -s[:, None] * configs[..., 0] + c[:, None] * configs[..., 1]
            return out.reshape(n, -1)
        rots = special_ortho_group.rvs(dim=space.m, size=n, random_state=rng)
        configs = samples.reshape(n, space.k, space.m)
        return np.einsum("nki,nij->nkj", configs, rots).reshape(n, -1)
    raise ContractViolationError(f"no group action defined on {space}")


def sample_generative_coords(
    template: ManifoldPoint,
    noise: NoiseModel,
    n: int,
    rng: np.random.Generator,
    poses: str = "dirac",
) -> np.ndarray:
    """n draws from the generative model, stacked as (n, d).

    With uniform poses the group element is applied to the noisy sample;
    for an isometric action and isotropic noise this has the same law as
    posing first and perturbing after.
    """
    if poses not in POSE_DISTRIBUTIONS:
        raise DomainError(f"unknown pose distribution {poses!r}")
    if n <= 0:
        raise DomainError("need at least one sample")
    samples = sample_gaussian_coords(template.space, template.coords, noise, n, rng)
    if poses == "uniform":
        samples = _apply_random_poses(template.space, samples, rng)
    return samples


def shape_coordinate(space: Space, coords: np.ndarray) -> np.ndarray:
    """Scalar shape coordinate of stacked points: radius on the plane,
    colatitude on the sphere."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if space == Euclidean(2):
        return np.linalg.norm(coords, axis=1)
    if space == Sphere(2):
        return np.arccos(np.clip(coords[:, 2], -1.0, 1.0))
    raise ContractViolationError(f"no scalar shape coordinate on {space}")
