"""Closed-form and root-finding analysis of the controlled patch.

The controlled single-patch diffusion operator has symmetric and
antisymmetric eigenmodes decaying like exp(-K k^2 t); the admissible
wavenumbers k solve transcendental characteristic equations.  All but
one root scale like 1/h (fast sub-patch modes); the exceptional small
root is the macroscale mode, and matching it to the gravest mode of the
reference heat problem fixes a good control strength.  This module
finds the roots by bracketed scanning, evaluates the calibration
formulas for the control strength, and provides the rough diffusivity
heuristics used to apply them to an unknown microscale simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, curve_fit

from .errors import AnalysisError

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"


@dataclass(frozen=True)
class ModeRoot:
    """One eigenmode of the controlled patch: wavenumber, decay rate,
    symmetry class, and which factor of its characteristic equation
    vanished ("cos", "sin", or the control-dependent "tan" branch)."""

    k: float
    lam: float
    symmetry: str
    branch: str
    kh: float
    residual: float


def symmetric_char_residual(k: float, h: float, r: float, mu: float) -> float:
    """Characteristic function of the symmetric eigenmodes.

    cos(kh/2) sin(kh/4) [ F(r) (4/kh) sin(kh/4) + ((kh)^2/mu - 1) cos(kh/4) ]
    with F(r) = (1 - 7 r^2/48)/(1 - r^2/48).  Setting r = 0 gives the
    isolated-patch linearization (the factor replaced by one).
    """
    kh = k * h
    factor = (1.0 - 7.0 * r * r / 48.0) / (1.0 - r * r / 48.0)
    bracket = factor * (4.0 / kh) * math.sin(kh / 4.0) \
        + (kh * kh / mu - 1.0) * math.cos(kh / 4.0)
    return math.cos(kh / 2.0) * math.sin(kh / 4.0) * bracket


def antisymmetric_char_residual(k: float, h: float, mu: float) -> float:
    """Characteristic function of the antisymmetric eigenmodes.

    sin(kh/2) [ (2/kh) sin(kh/2) + ((kh)^2/mu - 1) cos(kh/2) ].  The
    k -> 0 limit vanishes but is degenerate, not an eigenmode.
    """
    kh = k * h
    bracket = (2.0 / kh) * math.sin(kh / 2.0) \
        + (kh * kh / mu - 1.0) * math.cos(kh / 2.0)
    return math.sin(kh / 2.0) * bracket


def _classify_branch(kh: float, symmetry: str, h: float, r: float, mu: float) -> str:
    if symmetry == SYMMETRIC:
        factor = (1.0 - 7.0 * r * r / 48.0) / (1.0 - r * r / 48.0)
        vals = {
            "cos": abs(math.cos(kh / 2.0)),
            "sin": abs(math.sin(kh / 4.0)),
            "tan": abs(factor * (4.0 / kh) * math.sin(kh / 4.0)
                       + (kh * kh / mu - 1.0) * math.cos(kh / 4.0)),
        }
    else:
        vals = {
            "sin": abs(math.sin(kh / 2.0)),
            "tan": abs((2.0 / kh) * math.sin(kh / 2.0)
                       + (kh * kh / mu - 1.0) * math.cos(kh / 2.0)),
        }
    return min(vals, key=vals.get)


def find_mode_roots(symmetry: str, h: float, mu: float, count: int,
                    r: float = 0.0, K: float = 1.0,
                    kh_max: float = 20.0 * math.pi,
                    scan_step: float = math.pi / 200.0) -> list[ModeRoot]:
    """The ``count`` smallest positive eigen-wavenumbers of one symmetry class.

    Scans kh on (0, kh_max] for sign changes of the characteristic
    function and polishes each bracket with Brent's method; roots come
    back sorted with decay rate lam = -K k^2 and a residual check.
    """
    if count < 1:
        raise AnalysisError("count must be >= 1")
    if symmetry == SYMMETRIC:
        fun = lambda kh: symmetric_char_residual(kh / h, h, r, mu)
    elif symmetry == ANTISYMMETRIC:
        fun = lambda kh: antisymmetric_char_residual(kh / h, h, mu)
    else:
        raise AnalysisError(f"unknown symmetry class {symmetry!r}")

    roots_kh: list[float] = []
    a = scan_step
    fa = fun(a)
    while a < kh_max and len(roots_kh) < count:
        b = a + scan_step
        fb = fun(b)
        if fa == 0.0:
            roots_kh.append(a)
        elif fa * fb < 0.0:
            roots_kh.append(brentq(fun, a, b, xtol=1e-15, rtol=8.9e-16))
        a, fa = b, fb
    if len(roots_kh) < count:
        raise AnalysisError(
            f"found only {len(roots_kh)} {symmetry} roots with kh <= {kh_max:g}; "
            "raise kh_max")

    out = []
    for kh in roots_kh[:count]:
        k = kh / h
        res = symmetric_char_residual(k, h, r, mu) if symmetry == SYMMETRIC \
            else antisymmetric_char_residual(k, h, mu)
        out.append(ModeRoot(k=k, lam=-K * k * k, symmetry=symmetry,
                            branch=_classify_branch(kh, symmetry, h, r, mu),
                            kh=kh, residual=res))
    return out


def scan_sign_changes(symmetry: str, h: float, mu: float, r: float = 0.0,
                      kh_max: float = 20.0 * math.pi,
                      step: float = math.pi / 2000.0) -> int:
    """Brute-force count of characteristic sign changes on (0, kh_max].

    Independent completeness oracle for find_mode_roots: a finer grid
    must not reveal roots the bracketed search missed.
    """
    kh = np.arange(step, kh_max, step)
    if symmetry == SYMMETRIC:
        vals = np.array([symmetric_char_residual(v / h, h, r, mu) for v in kh])
    else:
        vals = np.array([antisymmetric_char_residual(v / h, h, mu) for v in kh])
    return int((np.sign(vals[:-1]) * np.sign(vals[1:]) < 0).sum())


def macro_wavenumber_approx(mu: float) -> float:
    """Small-r approximation of the macroscale eigen-wavenumber:
    kH = kh/r ~ sqrt(6 / (1 + 48/mu))."""
    return math.sqrt(6.0 / (1.0 + 48.0 / mu))


def optimal_mu_single_patch() -> float:
    """Control strength matching the patch's macroscale mode to the
    gravest heat-equation mode (kH = pi/2): 1/mu = (24/pi^2 - 1)/48,
    i.e. mu = 48 pi^2 / (24 - pi^2) ~ 33.53."""
    return 48.0 * math.pi ** 2 / (24.0 - math.pi ** 2)


def optimal_mu_multipatch() -> tuple[float, float]:
    """Control strengths matching the emergent stencil to the mesoscale
    advection-diffusion: (mu_advection, mu_diffusion).

    15/[4(1+48/mu)(1+12/mu)] = 1 gives mu = (120 + 24 sqrt(69))/11;
    3/(1+48/mu) = 1 gives mu = 24.
    """
    return (120.0 + 24.0 * math.sqrt(69.0)) / 11.0, 24.0


def estimate_diffusivity(h: float) -> float:
    """Rough microscale diffusivity from the patch size alone.

    Assumes the leading antisymmetric wavenumber sits mid-range,
    k3 h ~ 3 pi/2, so K ~ 1/k3^2 = 4 h^2 / (9 pi^2).
    """
    return 4.0 * h * h / (9.0 * math.pi ** 2)


def spectral_gap_bound(K: float, h: float) -> float:
    """Lower bound beta = 9 K / h^2 on the decay rate of every sub-patch
    mode (the slowest, k = pi/h, decays at K pi^2/h^2 > beta)."""
    return 9.0 * K / (h * h)


def estimate_diffusivity_from_transient(t, delta, h: float, mu: float):
    """Diffusivity from the transient of the action-region temperature gap.

    Fits delta(t) ~ D (1 - exp(-lam t)) and divides the fitted rate by
    the square of the leading antisymmetric wavenumber at this control
    strength: K ~ lam / k3^2.  Returns (K_est, lam, k3, D).
    """
    t = np.asarray(t, dtype=float)
    delta = np.asarray(delta, dtype=float)
    k3 = find_mode_roots(ANTISYMMETRIC, h=h, mu=mu, count=1)[0].k

    def model(tt, d_inf, lam):
        return d_inf * (1.0 - np.exp(-lam * tt))

    scale = max(abs(delta[len(delta) // 2:]).mean(), 1e-6)
    (d_inf, lam), _ = curve_fit(
        model, t, delta, p0=(scale, 1.0),
        bounds=([-10.0 * scale, 1e-3], [10.0 * scale, 50.0]), maxfev=20000)
    return lam / k3 ** 2, lam, k3, d_inf


def write_modes_csv(roots: list[ModeRoot], path):
    with open(path, "w") as f:
        f.write("symmetry,branch,k,kh,lambda\n")
        for m in roots:
            f.write(f"{m.symmetry},{m.branch},{m.k:.17g},{m.kh:.17g},{m.lam:.17g}\n")
