"""Rotation actions on the object spaces and closed-form registration.

The group quotients pose out of the data: planar rotations act on R^2,
rotations about the pole axis act on S^2, and SO(m) acts diagonally on
landmark configurations (each landmark row right-multiplied).  All three
actions are isometric, so registering x against a template y (minimizing
the ambient distance over the group) computes the quotient distance
between their orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import ContractViolationError, DegenerateOrbitError, DomainError
from .spaces import (
    Euclidean,
    Landmarks,
    ManifoldPoint,
    Space,
    Sphere,
    distance_coords,
)

# Relative gap below which the optimal Kabsch rotation is flagged non-unique.
KABSCH_UNIQUENESS_TOL = 1e-9


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(a, math.tau)
    if w <= -math.pi:
        w += math.tau
    return w


@dataclass(frozen=True)
class PlanarAngle:
    """Rotation of R^2 by ``theta`` radians (counter-clockwise)."""

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise DomainError("angle must be finite")
        object.__setattr__(self, "theta", _wrap_angle(self.theta))


@dataclass(frozen=True)
class AxialAngle:
    """Rotation of S^2 about the pole axis by ``phi`` radians."""

    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise DomainError("angle must be finite")
        object.__setattr__(self, "phi", _wrap_angle(self.phi))


@dataclass(frozen=True, eq=False)
class RotationMatrix:
    """Proper rotation in SO(m); orthogonality and det +1 checked to 1e-10."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ContractViolationError(f"rotation matrix must be square, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise DomainError("rotation matrix contains non-finite values")
        m = mat.shape[0]
        if np.max(np.abs(mat.T @ mat - np.eye(m))) > 1e-10:
            raise DomainError("matrix is not orthogonal within 1e-10")
        if abs(np.linalg.det(mat) - 1.0) > 1e-10:
            raise DomainError("matrix determinant is not +1 within 1e-10")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)


GroupElement = Union[PlanarAngle, AxialAngle, RotationMatrix]


def _planar_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _check_compatible(g: GroupElement, space: Space) -> None:
    ok = (
        (isinstance(g, PlanarAngle) and space == Euclidean(2))
        or (isinstance(g, AxialAngle) and space == Sphere(2))
        or (
            isinstance(g, RotationMatrix)
            and isinstance(space, Landmarks)
            and g.matrix.shape[0] == space.m
        )
    )
    if not ok:
        raise ContractViolationError(f"group element {type(g).__name__} incompatible with {space}")


def act(g: GroupElement, x: ManifoldPoint) -> ManifoldPoint:
    """Apply the isometric action of ``g`` to ``x``."""
    _check_compatible(g, x.space)
    if isinstance(g, PlanarAngle):
        return ManifoldPoint(x.space, _planar_matrix(g.theta) @ x.coords)
    if isinstance(g, AxialAngle):
        out = x.coords.copy()
        out[:2] = _planar_matrix(g.phi) @ x.coords[:2]
        # rotation about the axis keeps the norm exactly, but renormalize
        # against accumulated drift
        out /= np.linalg.norm(out)
        return ManifoldPoint(x.space, out)
    config = x.landmark_matrix()
    return ManifoldPoint(x.space, (config @ g.matrix).ravel())


def identity(space: Space) -> GroupElement:
    if space == Euclidean(2):
        return PlanarAngle(0.0)
    if space == Sphere(2):
        return AxialAngle(0.0)
    if isinstance(space, Landmarks):
        return RotationMatrix(np.eye(space.m))
    raise ContractViolationError(f"no group action defined on {space}")


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """Element acting as g1 after g2:  act(compose(g1, g2), x) == act(g1, act(g2, x))."""
    if isinstance(g1, PlanarAngle) and isinstance(g2, PlanarAngle):
        return PlanarAngle(g1.theta + g2.theta)
    if isinstance(g1, AxialAngle) and isinstance(g2, AxialAngle):
        return AxialAngle(g1.phi + g2.phi)
    if isinstance(g1, RotationMatrix) and isinstance(g2, RotationMatrix):
        if g1.matrix.shape != g2.matrix.shape:
            raise ContractViolationError("rotation size mismatch in compose")
        # rows are right-multiplied, so later factors multiply on the right
        return RotationMatrix(g2.matrix @ g1.matrix)
    raise ContractViolationError(
        f"cannot compose {type(g1).__name__} with {type(g2).__name__}"
    )


def inverse(g: GroupElement) -> GroupElement:
    if isinstance(g, PlanarAngle):
        return PlanarAngle(-g.theta)
    if isinstance(g, AxialAngle):
        return AxialAngle(-g.phi)
    return RotationMatrix(g.matrix.T)


class Registration(NamedTuple):
    transform: GroupElement
    registered: ManifoldPoint
    unique: bool


# ---------------------------------------------------------------------------
# Batch kernels: template (d,), data (n, d).
# ---------------------------------------------------------------------------


def _check_template_coords(space: Space, template: np.ndarray) -> None:
    """Reject templates fixed by (a continuum of) the group."""
    if isinstance(space, Euclidean):
        if np.linalg.norm(template) < 1e-12:
            raise DegenerateOrbitError("zero template: registration target is a fixed point")
    elif isinstance(space, Sphere):
        if math.hypot(template[0], template[1]) < 1e-12:
            raise DegenerateOrbitError("pole template: fixed by the whole group")
    else:
        config = template.reshape(space.k, space.m)
        sv = np.linalg.svd(config, compute_uv=False)
        rank = int(np.sum(sv > 1e-10 * max(sv[0], 1e-300)))
        if rank < space.m - 1:
            raise DegenerateOrbitError(
                f"rank-deficient template (rank {rank} < {space.m - 1}): nontrivial isotropy"
            )


def register_coords(
    space: Space, template: np.ndarray, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Register each row of ``xs`` (n, d) onto ``template``.

    Returns ``(params, registered)`` where ``params`` holds the optimal
    angles (shape (n,), Euclidean/Sphere case) or rotation matrices
    (shape (n, m, m), Landmarks case).
    """
    template = np.asarray(template, dtype=float)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    _check_template_coords(space, template)

    if isinstance(space, Euclidean):
        if space.dim != 2:
            raise ContractViolationError("planar rotations act on Euclidean(2) only")
        unit = template / np.linalg.norm(template)
        radii = np.linalg.norm(xs, axis=1)
        registered = radii[:, None] * unit
        phi_t = math.atan2(unit[1], unit[0])
        angles = np.where(
            radii > 0.0, phi_t - np.arctan2(xs[:, 1], xs[:, 0]), 0.0
        )
        return angles, registered

    if isinstance(space, Sphere):
        if space.dim != 2:
            raise ContractViolationError("axial rotations act on Sphere(2) only")
        phi_t = math.atan2(template[1], template[0])
        sx = np.hypot(xs[:, 0], xs[:, 1])
        at_pole = sx < 1e-15
        angles = np.where(at_pole, 0.0, phi_t - np.arctan2(xs[:, 1], xs[:, 0]))
        registered = np.column_stack(
            (sx * math.cos(phi_t), sx * math.sin(phi_t), xs[:, 2])
        )
        registered[at_pole] = xs[at_pole]
        return angles, registered

    configs = xs.reshape(-1, space.k, space.m)
    target = template.reshape(space.k, space.m)
    cross = np.einsum("nki,kj->nij", configs, target)
    if space.m == 2:
        # closed-form SO(2) Procrustes (identical to Kabsch-SVD)
        a = cross[:, 0, 0] + cross[:, 1, 1]
        b = cross[:, 1, 0] - cross[:, 0, 1]
        theta = np.arctan2(b, a)
        c, s = np.cos(theta), np.sin(theta)
        rots = np.empty((len(theta), 2, 2))
        rots[:, 0, 0] = c
        rots[:, 0, 1] = -s
        rots[:, 1, 0] = s
        rots[:, 1, 1] = c
    else:
        rots = _kabsch_many(cross)
    registered = np.einsum("nki,nij->nkj", configs, rots).reshape(len(configs), -1)
    return rots, registered


def _kabsch_many(cross: np.ndarray) -> np.ndarray:
    """Optimal proper rotations from stacked cross-covariances (n, m, m)."""
    u, _, vh = np.linalg.svd(cross)
    signs = np.sign(np.linalg.det(u) * np.linalg.det(vh))
    signs = np.where(signs == 0.0, 1.0, signs)
    u = u.copy()
    u[:, :, -1] *= signs[:, None]
    return u @ vh


def register(template: ManifoldPoint, x: ManifoldPoint) -> Registration:
    """Optimal alignment of ``x`` onto ``template``.

    Returns the minimizing group element, the registered point, and a flag
    that is False when the minimizer is numerically non-unique (Kabsch with
    a vanishing smallest singular value).
    """
    if template.space != x.space:
        raise ContractViolationError("registration requires a common space")
    space = template.space
    _check_template_coords(space, template.coords)

    if isinstance(space, Landmarks):
        cross = x.landmark_matrix().T @ template.landmark_matrix()
        sv = np.linalg.svd(cross, compute_uv=False)
        unique = bool(sv[-1] > KABSCH_UNIQUENESS_TOL * max(sv[0], 1e-300))
        rot = _kabsch_many(cross[None])[0]
        registered = ManifoldPoint(space, (x.landmark_matrix() @ rot).ravel())
        return Registration(RotationMatrix(rot), registered, unique)

    params, registered = register_coords(space, template.coords, x.coords[None])
    point = ManifoldPoint(space, registered[0])
    if isinstance(space, Euclidean):
        return Registration(PlanarAngle(float(params[0])), point, True)
    return Registration(AxialAngle(float(params[0])), point, True)


def orbit_distance(y: ManifoldPoint, x: ManifoldPoint) -> float:
    """Quotient distance between the orbits of ``y`` and ``x``:
    inf over the group of the ambient distance."""
    reg = register(y, x)
    return distance_coords(y.space, y.coords, reg.registered.coords).item()


def orbit_distance_coords(space: Space, y: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Quotient distances from ``y`` (d,) to each row of ``xs`` (n, d)."""
    _, registered = register_coords(space, y, xs)
    return distance_coords(space, y, registered)
