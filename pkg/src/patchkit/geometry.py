"""Spatial conventions shared by every other module.

A patch is a cube of side ``2h`` that is periodic in all three directions.
Along the macroscale axis x the patch is split into four equal regions:
the core ``|x| < h/4``, the left action region ``|x + h/2| < h/4``, the
right action region ``|x - h/2| < h/4``, and the buffer ``|x| > 3h/4``.
All functions here are pure and operate on plain floats or numpy arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Region(enum.Enum):
    CORE = "core"
    LEFT_ACTION = "left-action"
    RIGHT_ACTION = "right-action"
    BUFFER = "buffer"


@dataclass(frozen=True)
class PatchGeometry:
    """Patch half-width ``h`` and macroscale half-domain / patch spacing ``H``.

    Lengths are nondimensional (inter-atomic equilibrium distance = 1).
    The scale ratio ``r = h/H`` satisfies ``0 < r <= 1``.
    """

    h: float
    H: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"patch half-width must be positive, got h={self.h}")
        if not self.H >= self.h:
            raise ValueError(f"need H >= h, got h={self.h}, H={self.H}")

    @property
    def side(self) -> float:
        """Edge length of the periodic patch cube, 2h."""
        return 2.0 * self.h

    @property
    def r(self) -> float:
        """Scale ratio h/H."""
        return self.h / self.H

    @property
    def region_half_width(self) -> float:
        return self.h / 4.0

    @property
    def action_center(self) -> float:
        """Offset of the action-region centers from the patch center."""
        return self.h / 2.0


@dataclass(frozen=True)
class MacroDomain:
    """Macroscale arrangement of patches.

    ``dirichlet-single-patch``: one patch centered at 0, boundary
    temperatures prescribed at x = +-H.  ``periodic-multi-patch``:
    M >= 2 equispaced patches centered at X_j = j*H on a domain of
    length L = M*H with periodic wrap.
    """

    kind: str
    H: float
    M: int = 1
    T_L: float | None = None
    T_R: float | None = None

    KINDS = ("dirichlet-single-patch", "periodic-multi-patch")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown macrodomain kind {self.kind!r}")
        if self.kind == "dirichlet-single-patch" and self.M != 1:
            raise ValueError("dirichlet-single-patch requires M = 1")
        if self.kind == "periodic-multi-patch" and self.M < 2:
            raise ValueError("periodic-multi-patch requires M >= 2")
        if self.H <= 0:
            raise ValueError("H must be positive")

    @property
    def L(self) -> float:
        """Total macrodomain length (periodic case)."""
        return self.M * self.H

    def patch_centers(self) -> np.ndarray:
        return self.H * np.arange(self.M, dtype=float)


def wrap(x, side):
    """Map coordinates into the primary periodic interval [-side/2, side/2].

    Implements x - round(x/side)*side with round-half-away-from-zero, so
    that wrap(-x) == -wrap(x) holds exactly, ties included.  Works on
    scalars and arrays.
    """
    x = np.asarray(x, dtype=float)
    u = x / side
    rounded = np.trunc(u + np.copysign(0.5, u))
    out = x - rounded * side
    if out.ndim == 0:
        return float(out)
    return out


def min_image_displacement(xi, xj, side):
    """Displacement from xi to the nearest periodic image of xj.

    Returns xj - xi + s with the shift s in {-side, 0, +side} minimizing
    the magnitude (applied per axis for array input).  Antisymmetric in
    its arguments by the wrap tie rule.
    """
    return wrap(np.asarray(xj, dtype=float) - np.asarray(xi, dtype=float), side)


def classify_region(x: float, geom: PatchGeometry) -> Region:
    """Which of the four patch regions the (wrapped) coordinate x lies in.

    Boundaries are measure zero; each interval is closed at its lower-x
    end so that every x gets exactly one region.
    """
    q = geom.region_half_width
    if -q <= x < q:
        return Region.CORE
    if -3.0 * q <= x < -q:
        return Region.LEFT_ACTION
    if q <= x < 3.0 * q:
        return Region.RIGHT_ACTION
    return Region.BUFFER


def region_masks(x: np.ndarray, geom: PatchGeometry):
    """Boolean (left, core, right) membership masks for wrapped coordinates.

    Vectorized companion of classify_region with the same tie rule; the
    buffer is the complement of the union.
    """
    q = geom.region_half_width
    left = (x >= -3.0 * q) & (x < -q)
    core = (x >= -q) & (x < q)
    right = (x >= q) & (x < 3.0 * q)
    return left, core, right
