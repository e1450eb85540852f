"""Finite-difference oracles for the continuum models of the patch scheme.

Three solvers, all second order in space with explicit RK4 stepping at
a diffusive CFL fraction:

* the reference heat equation T_t = K T_xx on [-H, H] with Dirichlet
  ends (vertex grid);
* the controlled single-patch diffusion equation on the 2h-periodic
  patch, forced by (K mu / h^2) times the piecewise-constant control
  shape built from region averages and the parabolic interpolation
  targets;
* the controlled multi-patch advection-diffusion system, one periodic
  patch PDE per macroscale node, coupled through the Lagrange
  interpolation of the core averages.

Patch grids are cell-centered with n a multiple of 8 so the region
boundaries +-h/4, +-3h/4 fall exactly on cell edges; region averages
are then plain means over blocks of n/4 cells (midpoint rule on cells
fully inside each quarter).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coupling
from .errors import ConfigurationError
from .geometry import MacroDomain, PatchGeometry

RK4_REAL_STABILITY = 2.785  # |z| bound of the real stability interval


@dataclass
class GridField:
    """Field values on a uniform grid at one time."""

    x: np.ndarray
    values: np.ndarray
    dx: float
    t: float = 0.0


@dataclass
class ControlledPdeConfig:
    """Discretization and physics parameters shared by the patch solvers."""

    K: float
    geometry: PatchGeometry
    n: int
    alpha: float = 0.0
    mu: float = 0.0
    gamma: float = 1.0
    domain: MacroDomain | None = None
    dt: float | None = None
    # gamma-order of the inter-patch interpolation: 1 couples through the
    # nearest neighbours only, which is the truncation the slow-manifold
    # analysis describes and the choice that reproduces the macroscale
    # dynamics; 2 adds the printed gamma^2 five-point terms.
    interp_order: int = 1

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigurationError("; ".join(problems))

    def violations(self, dx: float | None = None) -> list[str]:
        """Static checks; pass the solver's grid spacing to also check dt."""
        out = []
        if self.K <= 0:
            out.append(f"diffusivity K must be positive, got {self.K}")
        if self.n < 8 or self.n % 8 != 0:
            out.append(f"grid size n must be a positive multiple of 8, got {self.n}")
        if self.mu < 0:
            out.append(f"control strength mu must be >= 0, got {self.mu}")
        if self.interp_order not in (1, 2):
            out.append(f"interp_order must be 1 or 2, got {self.interp_order}")
        if dx is not None and self.dt is not None and not out:
            if self.dt > self.stability_limit(dx):
                out.append(
                    f"dt={self.dt:g} exceeds the explicit stability bound "
                    f"{self.stability_limit(dx):g} (diffusive CFL)")
        return out

    def stability_limit(self, dx: float) -> float:
        lam = 4.0 * self.K / dx ** 2
        if self.mu > 0:
            lam += self.K * self.mu / self.geometry.h ** 2
        return RK4_REAL_STABILITY / lam

    def resolve_dt(self, dx: float) -> float:
        if self.dt is not None:
            return self.dt
        return 0.25 * dx ** 2 / self.K


def patch_grid(geom: PatchGeometry, n: int) -> tuple[np.ndarray, float]:
    """Cell centers of n equal cells covering the periodic patch [-h, h)."""
    dx = geom.side / n
    x = -geom.h + (np.arange(n) + 0.5) * dx
    return x, dx


def _region_slices(n: int):
    """(left, core, right) cell-index slices of the cell-centered patch grid."""
    e = n // 8
    return slice(e, 3 * e), slice(3 * e, 5 * e), slice(5 * e, 7 * e)


def _as_fun(v):
    return v if callable(v) else (lambda t, v=float(v): v)


def _rk4_steps(y, t, t_end, dt, rhs):
    """Yield (t, y) after every step of fixed-step RK4 from t to t_end."""
    while t < t_end - 1e-12 * max(1.0, t_end):
        h = min(dt, t_end - t)
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + h
        yield t, y


# --- reference heat equation -------------------------------------------------

def solve_heat_reference(cfg: ControlledPdeConfig, T_L, T_R, ic,
                         t_end: float, record_dt: float | None = None) -> list[GridField]:
    """Heat equation on the macrodomain [-H, H] with Dirichlet ends.

    ``ic`` is a callable of x or an array on the n+1 vertex grid; the
    boundary values are pinned to T_L(t), T_R(t) each stage.
    """
    H = cfg.geometry.H
    n = cfg.n
    x = np.linspace(-H, H, n + 1)
    dx = 2.0 * H / n
    fL, fR = _as_fun(T_L), _as_fun(T_R)
    y0 = np.array([ic(xi) for xi in x], dtype=float) if callable(ic) \
        else np.asarray(ic, dtype=float).copy()
    if y0.shape != x.shape:
        raise ConfigurationError(f"initial condition must have {n + 1} vertex values")
    dt = cfg.resolve_dt(dx)
    if dt > RK4_REAL_STABILITY * dx ** 2 / (4.0 * cfg.K):
        raise ConfigurationError(
            f"dt={dt:g} exceeds the diffusive stability bound "
            f"{RK4_REAL_STABILITY * dx ** 2 / (4.0 * cfg.K):g}")

    def rhs(t, y):
        y = y.copy()
        y[0], y[-1] = fL(t), fR(t)
        dydt = np.zeros_like(y)
        dydt[1:-1] = cfg.K * (y[2:] - 2.0 * y[1:-1] + y[:-2]) / dx ** 2
        return dydt

    record_dt = record_dt or t_end
    out = [GridField(x=x, values=y0.copy(), dx=dx, t=0.0)]
    next_rec = record_dt
    for t, y in _rk4_steps(y0, 0.0, t_end, dt, rhs):
        if t >= next_rec - 1e-12 or t >= t_end - 1e-12:
            yy = y.copy()
            yy[0], yy[-1] = fL(t), fR(t)
            out.append(GridField(x=x, values=yy, dx=dx, t=t))
            next_rec += record_dt
    return out


# --- controlled single patch -------------------------------------------------

def _control_shape(u, T_L, T_R, h, H, slices):
    """Piecewise-constant control forcing from region averages."""
    sl, sc, sr = slices
    temps = coupling.RegionTemperatures(
        T_l=float(u[sl].mean()), T_c=float(u[sc].mean()), T_r=float(u[sr].mean()))
    targets = coupling.coupling_targets(temps, T_L, T_R, h, H)
    g = np.zeros_like(u)
    g[sl] = targets.T_int_minus - temps.T_l
    g[sr] = targets.T_int_plus - temps.T_r
    return g


def solve_controlled_patch_pde(cfg: ControlledPdeConfig, T_L, T_R, ic,
                               t_end: float, record_dt: float | None = None) -> list[GridField]:
    """Diffusion on the 2h-periodic patch with the proportional control.

    u_t = K u_xx + (K mu / h^2) g(x, u) where g holds the difference
    between the interpolated action-region targets and the current
    action-region averages, recomputed every derivative evaluation.
    """
    geom = cfg.geometry
    x, dx = patch_grid(geom, cfg.n)
    slices = _region_slices(cfg.n)
    fL, fR = _as_fun(T_L), _as_fun(T_R)
    y0 = np.array([ic(xi) for xi in x], dtype=float) if callable(ic) \
        else np.asarray(ic, dtype=float).copy()
    if y0.shape != x.shape:
        raise ConfigurationError(f"initial condition must have {cfg.n} cell values")
    dt = cfg.resolve_dt(dx)
    if dt > cfg.stability_limit(dx):
        raise ConfigurationError("dt exceeds the explicit stability bound")
    mu_coef = cfg.K * cfg.mu / geom.h ** 2

    def rhs(t, u):
        lap = (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / dx ** 2
        dudt = cfg.K * lap
        if cfg.mu > 0:
            dudt = dudt + mu_coef * _control_shape(u, fL(t), fR(t), geom.h, geom.H, slices)
        return dudt

    record_dt = record_dt or t_end
    out = [GridField(x=x, values=y0.copy(), dx=dx, t=0.0)]
    next_rec = record_dt
    for t, y in _rk4_steps(y0, 0.0, t_end, dt, rhs):
        if t >= next_rec - 1e-12 or t >= t_end - 1e-12:
            out.append(GridField(x=x, values=y.copy(), dx=dx, t=t))
            next_rec += record_dt
    return out


def controlled_patch_steady_state(cfg: ControlledPdeConfig, T_L: float, T_R: float) -> GridField:
    """Equilibrium of the controlled patch PDE by direct linear solve.

    The semi-discrete system is linear in the cell values (the targets
    are affine in the core average), so the steady state follows from
    one dense solve instead of marching the stiff slow mode to rest.
    """
    geom = cfg.geometry
    n = cfg.n
    x, dx = patch_grid(geom, n)
    sl, sc, sr = _region_slices(n)
    rho = geom.h / (4.0 * geom.H)
    denom = 1.0 - rho * rho / 3.0
    s = T_L + T_R
    d = T_R - T_L
    # T_int,+- = a * T_c + b_+- with T_c the discrete core mean
    a = (1.0 - 13.0 * rho * rho / 3.0) / denom
    b_common = (13.0 / 6.0) * s * rho * rho - (s * rho * rho / 6.0) * \
        (1.0 - 13.0 * rho * rho / 3.0) / denom
    b_plus = b_common + d * rho
    b_minus = b_common - d * rho

    lap = np.zeros((n, n))
    idx = np.arange(n)
    lap[idx, idx] = -2.0
    lap[idx, (idx + 1) % n] = 1.0
    lap[idx, (idx - 1) % n] = 1.0
    lap *= cfg.K / dx ** 2

    m = n // 4
    core_mean = np.zeros(n)
    core_mean[sc] = 1.0 / m
    left_mean = np.zeros(n)
    left_mean[sl] = 1.0 / m
    right_mean = np.zeros(n)
    right_mean[sr] = 1.0 / m
    chi_l = np.zeros(n)
    chi_l[sl] = 1.0
    chi_r = np.zeros(n)
    chi_r[sr] = 1.0

    mu_coef = cfg.K * cfg.mu / geom.h ** 2
    A = lap + mu_coef * (np.outer(chi_r, a * core_mean - right_mean)
                         + np.outer(chi_l, a * core_mean - left_mean))
    b = -mu_coef * (chi_r * b_plus + chi_l * b_minus)
    values = np.linalg.solve(A, b)
    return GridField(x=x, values=values, dx=dx, t=np.inf)


def equilibrium_profile(x, mu: float, T_L: float, T_R: float, h: float, H: float):
    """Closed-form equilibrium of the controlled patch (2h-periodic in x).

    T_0 = (T_L + T_R)/2 and DT = (T_R - T_L) (h/4H) / (1 + mu/12); the
    profile is linear in the core and buffer and parabolic in the action
    regions, C^1 across all interfaces and the periodic wrap.
    """
    x = np.asarray(x, dtype=float)
    xw = x - np.round(x / (2.0 * h)) * 2.0 * h
    T_0 = 0.5 * (T_L + T_R)
    dT = (T_R - T_L) * (h / (4.0 * H)) / (1.0 + mu / 12.0)
    amp = mu * dT
    y = np.abs(xw)
    sgn = np.sign(xw)
    out = np.where(
        y < h / 4.0,
        T_0 + amp / 4.0 * xw / h,
        np.where(
            y < 3.0 * h / 4.0,
            T_0 + sgn * amp / 16.0 * (1.5 - 2.0 * (2.0 * y / h - 1.0) ** 2),
            T_0 + amp / 4.0 * (sgn - xw / h),
        ),
    )
    if out.ndim == 0:
        return float(out)
    return out


# --- controlled multi-patch system -------------------------------------------

@dataclass
class MultipatchResult:
    """Core-average histories plus the final (or full) per-patch fields."""

    times: np.ndarray            # (T,)
    U: np.ndarray                # (T, M)
    x: np.ndarray                # (M, n), global coordinates
    final_fields: np.ndarray     # (M, n)
    fields: np.ndarray | None = None  # (T, M, n) when kept

    def grid_fields(self, k: int = -1) -> list[GridField]:
        t = float(self.times[k])
        data = self.final_fields if self.fields is None else self.fields[k]
        dx = float(self.x[0, 1] - self.x[0, 0])
        return [GridField(x=self.x[j], values=data[j].copy(), dx=dx, t=t)
                for j in range(self.x.shape[0])]


def _interp_stencil(r: float, gamma: float, order: int = 1) -> dict[int, float]:
    powers = np.array([1.0, gamma, gamma ** 2 if order >= 2 else 0.0])
    return {m: float(c @ powers)
            for m, c in coupling.lagrange_offset_coefficients(r).items()}


def solve_multipatch_pde(cfg: ControlledPdeConfig, ic, t_end: float,
                         record_dt: float | None = None,
                         keep_fields: bool = False) -> MultipatchResult:
    """Controlled periodic-patch advection-diffusion on M coupled patches.

    du_j/dt = K u_xx - alpha u_x + (K mu / h^2) [(I_j^+ - u_j^+) chi^+ +
    (I_j^- - u_j^-) chi^-], with I_j^+- the Lagrange interpolation of the
    instantaneous core averages.  The macrodomain must be periodic;
    ``ic`` maps (j, x_local_array) to the initial field of patch j, or is
    an (M, n) array.
    """
    if cfg.domain is None or cfg.domain.kind != "periodic-multi-patch":
        raise ConfigurationError("multipatch solver needs a periodic-multi-patch domain")
    geom = cfg.geometry
    M, n = cfg.domain.M, cfg.n
    x_local, dx = patch_grid(geom, n)
    sl, sc, sr = _region_slices(n)
    centers = cfg.domain.patch_centers()
    x_global = centers[:, None] + x_local[None, :]

    if callable(ic):
        y0 = np.array([np.broadcast_to(ic(j, x_local), (n,)).astype(float) for j in range(M)])
    else:
        y0 = np.asarray(ic, dtype=float).copy()
    if y0.shape != (M, n):
        raise ConfigurationError(f"initial condition must have shape {(M, n)}")

    dt = cfg.resolve_dt(dx)
    if dt > cfg.stability_limit(dx):
        raise ConfigurationError("dt exceeds the explicit stability bound")
    mu_coef = cfg.K * cfg.mu / geom.h ** 2
    stencil = _interp_stencil(geom.r, cfg.gamma, cfg.interp_order)

    def rhs(t, u):
        lap = (np.roll(u, -1, axis=1) - 2.0 * u + np.roll(u, 1, axis=1)) / dx ** 2
        dudt = cfg.K * lap
        if cfg.alpha != 0.0:
            dudt -= cfg.alpha * (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2.0 * dx)
        if cfg.mu > 0:
            U = u[:, sc].mean(axis=1)
            i_plus = np.zeros(M)
            i_minus = np.zeros(M)
            for m, w in stencil.items():
                if w == 0.0:
                    continue
                i_plus += w * np.roll(U, -m)
                i_minus += w * np.roll(U, m)
            g = np.zeros_like(u)
            g[:, sr] = (i_plus - u[:, sr].mean(axis=1))[:, None]
            g[:, sl] = (i_minus - u[:, sl].mean(axis=1))[:, None]
            dudt = dudt + mu_coef * g
        return dudt

    record_dt = record_dt or t_end
    times = [0.0]
    U_hist = [y0[:, sc].mean(axis=1)]
    frames = [y0.copy()] if keep_fields else None
    y = y0
    next_rec = record_dt
    for t, y in _rk4_steps(y0, 0.0, t_end, dt, rhs):
        if t >= next_rec - 1e-12 or t >= t_end - 1e-12:
            times.append(t)
            U_hist.append(y[:, sc].mean(axis=1))
            if keep_fields:
                frames.append(y.copy())
            next_rec += record_dt
    return MultipatchResult(
        times=np.array(times), U=np.array(U_hist), x=x_global,
        final_fields=y.copy(),
        fields=np.array(frames) if keep_fields else None)


def macro_ode_rhs(U, alpha: float, K: float, mu: float, H: float) -> np.ndarray:
    """Emergent macroscale stencil for the core averages (periodic index).

    dU_j/dt = -alpha 15 (U_{j+1} - U_{j-1}) / [8H (1+48/mu)(1+12/mu)]
              + K 3 (U_{j-1} - 2U_j + U_{j+1}) / [H^2 (1+48/mu)].
    """
    U = np.asarray(U, dtype=float)
    up = np.roll(U, -1)
    um = np.roll(U, 1)
    f48 = 1.0 + 48.0 / mu
    f12 = 1.0 + 12.0 / mu
    adv = -alpha * 15.0 * (up - um) / (8.0 * H * f48 * f12)
    diff = K * 3.0 * (um - 2.0 * U + up) / (H * H * f48)
    return adv + diff


# --- CSV export ---------------------------------------------------------------

def write_field_csv(field: GridField, path):
    with open(path, "w") as f:
        f.write("x,value\n")
        for xi, vi in zip(field.x, field.values):
            f.write(f"{xi:.17g},{vi:.17g}\n")


def write_amplitudes_csv(times, U_hist, path):
    U_hist = np.asarray(U_hist)
    with open(path, "w") as f:
        f.write("t," + ",".join(f"U_{j + 1}" for j in range(U_hist.shape[1])) + "\n")
        for t, row in zip(times, U_hist):
            f.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")
