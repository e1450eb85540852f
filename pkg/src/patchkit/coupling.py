"""Macroscale <-> patch coupling formulas.

The patch reports the mean kinetic energies of its core and action
regions; the macroscale supplies boundary (or neighbouring-patch)
values.  This module holds the parabolic interpolation of a single
patch against Dirichlet sidewalls, the proportional control
acceleration it drives, and the general centred-difference Lagrange
interpolation used to couple many patches.

All functions are pure scalar/array formulas with no state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import Region


@dataclass(frozen=True)
class RegionTemperatures:
    """Mean kinetic energy per atom in the left action, core, and right
    action regions of one patch."""

    T_l: float
    T_c: float
    T_r: float


@dataclass(frozen=True)
class CouplingTargets:
    """Interpolated macroscale temperatures the controller drives toward.

    T_0 is the patch-center value of the interpolant; T_int_minus and
    T_int_plus are its averages over the left and right action regions.
    """

    T_0: float
    T_int_minus: float
    T_int_plus: float


def core_to_center(T_c: float, T_L: float, T_R: float, h: float, H: float) -> float:
    """Patch-center temperature T_0 from the finite-width core mean.

    Inverts the core average of the parabolic interpolant: with
    rho = h/(4H),  T_c = (T_L+T_R) rho^2/6 + T_0 (1 - rho^2/3).
    """
    rho = h / (4.0 * H)
    return (T_c - (T_L + T_R) * rho * rho / 6.0) / (1.0 - rho * rho / 3.0)


def parabolic_interpolant(T_L: float, T_0: float, T_R: float, H: float, x):
    """Quadratic through (-H, T_L), (0, T_0), (+H, T_R) evaluated at x."""
    x = np.asarray(x, dtype=float)
    out = (
        T_L * x * (x - H) / (2.0 * H * H)
        + T_0 * (H * H - x * x) / (H * H)
        + T_R * x * (x + H) / (2.0 * H * H)
    )
    if out.ndim == 0:
        return float(out)
    return out


def action_targets(T_0: float, T_L: float, T_R: float, h: float, H: float) -> tuple[float, float]:
    """Average of the macroscale interpolant over each action region.

    Returns (T_int_minus, T_int_plus) for the left/right action regions:
    T_int,+- = T_0 +- (T_R - T_L) rho + (13/6)(T_R - 2 T_0 + T_L) rho^2,
    rho = h/(4H).
    """
    rho = h / (4.0 * H)
    grad = (T_R - T_L) * rho
    curv = (13.0 / 6.0) * (T_R - 2.0 * T_0 + T_L) * rho * rho
    return T_0 - grad + curv, T_0 + grad + curv


def coupling_targets(temps: RegionTemperatures, T_L: float, T_R: float,
                     h: float, H: float) -> CouplingTargets:
    """Full chain from measured region temperatures to control targets."""
    T_0 = core_to_center(temps.T_c, T_L, T_R, h, H)
    lo, hi = action_targets(T_0, T_L, T_R, h, H)
    return CouplingTargets(T_0=T_0, T_int_minus=lo, T_int_plus=hi)


def control_rate(T_region: float, T_target: float, mu: float, K: float,
                 h: float, temp_floor: float = 1e-6) -> float:
    """Proportional-control coefficient multiplying an atom's velocity.

    rate = K mu (T_target - T_region) / (2 h^2 max(T_region, floor)).
    Positive rate accelerates the atoms (region too cool), negative
    decelerates them.
    """
    denom = max(T_region, temp_floor)
    return K * mu * (T_target - T_region) / (2.0 * h * h * denom)


def control_acceleration(q: np.ndarray, region: Region, temps: RegionTemperatures,
                         targets: CouplingTargets, mu: float, K: float, h: float,
                         temp_floor: float = 1e-6) -> np.ndarray:
    """Control acceleration for one atom of velocity q in the given region.

    Zero for core and buffer atoms; action-region atoms are pushed along
    (or against) their own velocity in proportion to the temperature error.
    """
    q = np.asarray(q, dtype=float)
    if region is Region.RIGHT_ACTION:
        return control_rate(temps.T_r, targets.T_int_plus, mu, K, h, temp_floor) * q
    if region is Region.LEFT_ACTION:
        return control_rate(temps.T_l, targets.T_int_minus, mu, K, h, temp_floor) * q
    return np.zeros_like(q)


# --- multi-patch Lagrange coupling -----------------------------------------

def lagrange_offset_coefficients(r: float) -> dict[int, np.ndarray]:
    """Stencil of the mid-action interpolant I_j^+ as polynomials in gamma.

    Returns {offset m: coeffs} where coeffs[p] multiplies gamma^p and the
    stencil value is sum_m coeffs(U_{j+m}).  Built from centred difference
    and mean operators: with d = delta and mb = centred mean,
        I^+ = {1 + gamma[(r/2) mb d + (r^2/8) d^2]
                 + gamma^2[-r(1/4 - r/8) mb d^3 - r(1/8 - r/16) d^4]} U_j,
    truncated exactly at the gamma^2 terms.  I_j^- is the mirror image
    (offsets negated).
    """
    out = {m: np.zeros(3) for m in range(-2, 3)}
    out[0][0] = 1.0
    # gamma^1: (r/2) * (U_{j+1} - U_{j-1})/2 + (r^2/8) * (U_{j+1} - 2U_j + U_{j-1})
    out[1][1] += r / 4.0 + r * r / 8.0
    out[-1][1] += -r / 4.0 + r * r / 8.0
    out[0][1] += -r * r / 4.0
    # gamma^2: -r(1/4 - r/8) mb d^3 - r(1/8 - r/16) d^4
    c3 = -r * (0.25 - r / 8.0)
    c4 = -r * (0.125 - r / 16.0)
    # mb d^3 U_j = (U_{j+2} - 2U_{j+1} + 2U_{j-1} - U_{j-2}) / 2
    for m, w in ((2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)):
        out[m][2] += c3 * w
    # d^4 U_j = U_{j+2} - 4U_{j+1} + 6U_j - 4U_{j-1} + U_{j-2}
    for m, w in ((2, 1.0), (1, -4.0), (0, 6.0), (-1, -4.0), (-2, 1.0)):
        out[m][2] += c4 * w
    return out


@dataclass
class CoreAmplitudes:
    """Core averages U_j of M patches plus the coupling bookkeeping.

    ``U`` is 0-based (U[0] is patch 0).  For a periodic macrodomain
    neighbour indices wrap; for a Dirichlet one the synonyms U_{-1} and
    U_{M} hold the boundary values and anything beyond them is a
    configuration error.
    """

    U: np.ndarray
    gamma: float
    r: float
    periodic: bool = True
    left_value: float | None = None
    right_value: float | None = None

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        if not (0.0 <= self.gamma <= 1.0):
            raise ConfigurationError(f"gamma must be in [0, 1], got {self.gamma}")
        if not (0.0 < self.r <= 1.0):
            raise ConfigurationError(f"r must be in (0, 1], got {self.r}")

    def value(self, j: int) -> float:
        m = len(self.U)
        if self.periodic:
            return float(self.U[j % m])
        if 0 <= j < m:
            return float(self.U[j])
        if j == -1:
            if self.left_value is None:
                raise ConfigurationError("left boundary synonym not set")
            return self.left_value
        if j == m:
            if self.right_value is None:
                raise ConfigurationError("right boundary synonym not set")
            return self.right_value
        raise ConfigurationError(f"neighbour index {j} out of range for M={m}")


def lagrange_action_targets(amps: CoreAmplitudes, j: int) -> tuple[float, float]:
    """Interpolated mid-action values (I_j^-, I_j^+) for patch j.

    Five-point stencil from the gamma^2-truncated centred-operator
    expansion; at gamma = 0 both values reduce to U_j.
    """
    coeffs = lagrange_offset_coefficients(amps.r)
    powers = np.array([1.0, amps.gamma, amps.gamma ** 2])
    plus = 0.0
    minus = 0.0
    for m, cpoly in coeffs.items():
        w = float(cpoly @ powers)
        if w == 0.0:
            continue
        plus += w * amps.value(j + m)
        minus += w * amps.value(j - m)
    return minus, plus
