"""Radius-of-gyration noise bookkeeping for protein-scale point clouds.

Coordinate errors inflate the squared radius of gyration by an exactly
computable amount, which propagates into any quantity built on the
protein's volume, notably the false-positive probability of motif
detection.  sigma is always the per-coordinate standard deviation of the
isotropic 3D coordinate error, in the same units as the positions
(angstroms throughout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSignalError, DomainError


@dataclass(frozen=True, eq=False)
class AtomCloud:
    """N >= 2 atom positions, shape (N, 3).  Element-agnostic: filtering
    (e.g. dropping hydrogens) is the caller's responsibility."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 2:
            raise DomainError(f"positions must be (N>=2, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise DomainError("positions contain non-finite values")
        pos = pos.copy()
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]


def read_atoms(path) -> AtomCloud:
    """Plain-text atom coordinates: one atom per line, three whitespace
    separated values; '#' starts a comment."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DomainError(f"{path}:{lineno}: expected 3 coordinates, got {len(parts)}")
        rows.append([float(v) for v in parts])
    if len(rows) < 2:
        raise DomainError(f"{path}: need at least 2 atoms")
    return AtomCloud(np.array(rows))


def radius_of_gyration(cloud: AtomCloud) -> float:
    """Root-mean-square distance of the atoms to their centroid."""
    centered = cloud.positions - cloud.positions.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum(centered**2, axis=1))))


def rg_squared_bias(sigma: float, n_atoms: int) -> float:
    """Exact inflation of the squared radius of gyration under i.i.d.
    isotropic coordinate noise: sigma^2 * 3 (N-1) / N."""
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    if n_atoms < 2:
        raise DomainError("need at least 2 atoms")
    return sigma**2 * 3.0 * (n_atoms - 1) / n_atoms


class CorrectedRg(NamedTuple):
    rg_squared: float
    snr_squared: float


def corrected_rg_squared(observed_rg2: float, sigma: float, n_atoms: int) -> CorrectedRg:
    """Invert the noise inflation of the observed squared radius of gyration.

    Also reports the squared signal-to-noise ratio Rg^2 / sigma^2 of the
    corrected value (infinite when sigma = 0).
    """
    bias = rg_squared_bias(sigma, n_atoms)
    if observed_rg2 <= bias:
        raise DegenerateSignalError(
            f"observed Rg^2 = {observed_rg2} does not exceed the noise bias {bias}"
        )
    rg2 = observed_rg2 - bias
    snr2 = math.inf if sigma == 0 else rg2 / sigma**2
    return CorrectedRg(rg2, snr2)


class FalsePositive(NamedTuple):
    probability: float
    error_zone_volume: float
    protein_volume: float


def false_positive_probability(rg: float, sigma: float, chi_sq: float = 8.0) -> FalsePositive:
    """Usual false-positive probability of motif detection: the ratio of the
    allowed error-zone volume chi^3 * (4/3) pi sigma^3 to the protein volume,
    a ball of radius Rg."""
    if rg <= 0 or sigma < 0 or chi_sq <= 0:
        raise DomainError("need rg > 0, sigma >= 0, chi_sq > 0")
    v0 = chi_sq**1.5 * (4.0 / 3.0) * math.pi * sigma**3
    vl = (4.0 / 3.0) * math.pi * rg**3
    return FalsePositive(v0 / vl, v0, vl)


def false_positive_underestimation(rg: float, sigma: float, n_atoms: int) -> float:
    """Relative underestimation of the false-positive probability when the
    protein volume is computed from the noise-inflated radius of gyration.

    The Rg^2 inflation factor is applied to the volume's radius cubed,
    i.e. the underestimation is 1 - (1 + bias/Rg^2)^(-3); chi and sigma
    cancel in the ratio.
    """
    if rg <= 0:
        raise DomainError("rg must be positive")
    ratio = 1.0 + rg_squared_bias(sigma, n_atoms) / rg**2
    return 1.0 - ratio**-3
