"""Triply-periodic Lennard-Jones patch simulator with proportional control.

N atoms of unit mass interact through the nondimensional Lennard-Jones
force F(r) = 1/r^7 - 1/r^13 (equilibrium distance 1, positive =
attraction) inside a periodic cube of side 2h.  Interactions use the
single nearest image per axis; the scaled pair factor carries an extra
1/r and is clamped below at -force_cap, with a small distance guard so
the self pair contributes nothing.

When the control strength mu is positive, atoms in the two action
regions are accelerated along their own velocities in proportion to the
difference between the region temperature and the macroscale
interpolation target (see coupling module).

Positions are integrated unwrapped so the ODE right-hand side stays
smooth; wrapping happens only inside force and observable evaluation.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass

import numpy as np

from . import coupling
from .errors import ConfigurationError, IntegrationError, RegionEmptyError
from .geometry import PatchGeometry, region_masks, wrap

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


AUX_NAMES = ("Tl", "Tc", "Tr", "ul", "vl", "wl", "uc", "vc", "wc", "ur", "vr", "wr")


@dataclass
class SimConfig:
    """Parameters of one patch simulation.

    ``side`` defaults to N^(1/3) so the mean density is one atom per unit
    cell; ``H`` defaults to ``side`` (boundaries at x = +-2h, as in the
    single-patch coupling scenario).  ``K`` is the diffusivity estimate
    entering the control gain.  The seed drives a named 64-bit generator
    (PCG64); the draw order is cell permutation, then position offsets,
    then velocity offsets.
    """

    N: int
    tEnd: float
    side: float | None = None
    mu: float = 0.0
    K: float = 0.5
    T_L: float = 1.0
    T_R: float = 1.0
    H: float | None = None
    seed: int = 0
    dt: float = 0.002
    record_dt: float = 0.05
    method: str = "rk4"          # "rk4" (fixed step) or "rk23" (adaptive pair)
    rtol: float = 1e-3
    atol: float = 1e-6
    force_cap: float = 100.0
    dist_guard: float = 1e-8
    temp_floor: float = 1e-6
    empty_region: str = "error"  # or "hold" (keep last seen temperature)

    def __post_init__(self):
        if self.side is None:
            self.side = self.N ** (1.0 / 3.0)
        if self.H is None:
            self.H = self.side
        if self.N < 1:
            raise ConfigurationError("need at least one atom")
        if self.side <= 0 or self.tEnd <= 0 or self.dt <= 0:
            raise ConfigurationError("side, tEnd and dt must be positive")
        if self.mu < 0:
            raise ConfigurationError("control strength mu must be >= 0")
        if self.mu > 0 and (self.T_L <= 0 or self.T_R <= 0):
            raise ConfigurationError("boundary temperatures must be positive when controlled")
        if self.method not in ("rk4", "rk23"):
            raise ConfigurationError(f"unknown integration method {self.method!r}")
        if self.empty_region not in ("error", "hold"):
            raise ConfigurationError(f"unknown empty-region policy {self.empty_region!r}")

    @property
    def h(self) -> float:
        return self.side / 2.0

    @property
    def geometry(self) -> PatchGeometry:
        return PatchGeometry(h=self.h, H=self.H)


@dataclass
class AtomState:
    """Positions and velocities (N x 3 each) plus the simulation clock."""

    positions: np.ndarray
    velocities: np.ndarray
    t: float = 0.0

    def copy(self) -> "AtomState":
        return AtomState(self.positions.copy(), self.velocities.copy(), self.t)


@dataclass
class TrajectoryRecord:
    """One output sample: time, the 12 auxiliaries, optional state snapshot.

    aux order matches AUX_NAMES: region temperatures (left, core, right)
    then the mean velocity components in left, core, right.  Entries are
    NaN when the corresponding region is empty at the sample time.
    """

    t: float
    aux: np.ndarray
    state: AtomState | None = None
    cap_events: int = 0


def lj_force_factor(r) -> float:
    """Radial Lennard-Jones force r^-7 - r^-13 (positive = attraction)."""
    r = np.asarray(r, dtype=float)
    out = r ** -7.0 - r ** -13.0
    if out.ndim == 0:
        return float(out)
    return out


def lj_pair_potential(r):
    """Pair potential V(r) = 1/(12 r^12) - 1/(6 r^6), with V'(r) equal to
    the force factor and V(inf) = 0."""
    r = np.asarray(r, dtype=float)
    out = r ** -12.0 / 12.0 - r ** -6.0 / 6.0
    if out.ndim == 0:
        return float(out)
    return out


def lattice_sites(N: int, side: float) -> tuple[np.ndarray, int]:
    """Centers of the ns^3 cubic cells the initial atoms occupy.

    ns = ceil(side), with a tiny tolerance so a side computed as N^(1/3)
    does not spill into an extra row of cells through roundoff.
    """
    ns = math.ceil(side - 1e-9)
    if N > ns ** 3:
        raise ConfigurationError(f"{N} atoms need more than the {ns ** 3} available cells")
    centers = (np.arange(ns) + 0.5) / ns - 0.5  # cell centers of [-1/2, 1/2]
    gx, gy, gz = np.meshgrid(side * centers, side * centers, side * centers, indexing="ij")
    sites = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    return sites, ns


def init_atoms(cfg: SimConfig) -> AtomState:
    """Place atoms on distinct lattice cells with small random offsets.

    Position offsets are uniform in [-0.15, 0.15] per component and
    velocity offsets uniform in [-0.3, 0.3]; both are de-meaned so the
    lattice centroid is kept and the total momentum is exactly zero.
    Identical seeds give bitwise-identical states.
    """
    sites, _ = lattice_sites(cfg.N, cfg.side)
    rng = np.random.default_rng(np.random.PCG64(cfg.seed))
    chosen = rng.permutation(len(sites))[: cfg.N]
    pos = sites[chosen]
    dpos = rng.uniform(-0.15, 0.15, size=(cfg.N, 3))
    dvel = rng.uniform(-0.3, 0.3, size=(cfg.N, 3))
    dpos -= dpos.mean(axis=0)
    dvel -= dvel.mean(axis=0)
    return AtomState(positions=pos + dpos, velocities=dvel, t=0.0)


# --- pairwise forces ---------------------------------------------------------

def _forces_numpy(pos: np.ndarray, side: float, cap: float, guard: float):
    """Vectorized O(N^2) reference path; returns (accelerations, cap_count)."""
    d = pos[None, :, :] - pos[:, None, :]
    u = d / side
    d = d - side * np.trunc(u + np.copysign(0.5, u))
    r = np.sqrt((d * d).sum(axis=2)) + guard
    inv2 = 1.0 / (r * r)
    inv8 = inv2 ** 4
    fs = inv8 - inv8 * inv2 ** 3
    n = pos.shape[0]
    # self pairs are always capped and every real pair appears twice
    capped = (int((fs < -cap).sum()) - n) // 2
    np.maximum(fs, -cap, out=fs)
    np.fill_diagonal(fs, 0.0)
    return (fs[:, :, None] * d).sum(axis=1), capped


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _forces_kernel(pos, side, cap, guard):  # pragma: no cover - jitted
        n = pos.shape[0]
        acc = np.zeros((n, 3))
        capped = 0
        for i in range(n):
            xi = pos[i, 0]
            yi = pos[i, 1]
            zi = pos[i, 2]
            for j in range(i + 1, n):
                dx = pos[j, 0] - xi
                dy = pos[j, 1] - yi
                dz = pos[j, 2] - zi
                u = dx / side
                dx -= side * (np.floor(abs(u) + 0.5) * (1.0 if u >= 0 else -1.0))
                u = dy / side
                dy -= side * (np.floor(abs(u) + 0.5) * (1.0 if u >= 0 else -1.0))
                u = dz / side
                dz -= side * (np.floor(abs(u) + 0.5) * (1.0 if u >= 0 else -1.0))
                r = np.sqrt(dx * dx + dy * dy + dz * dz) + guard
                inv = 1.0 / r
                inv2 = inv * inv
                inv8 = inv2 * inv2 * inv2 * inv2
                fs = inv8 - inv8 * inv2 * inv2 * inv2
                if fs < -cap:
                    fs = -cap
                    capped += 1
                fx = fs * dx
                fy = fs * dy
                fz = fs * dz
                acc[i, 0] += fx
                acc[i, 1] += fy
                acc[i, 2] += fz
                acc[j, 0] -= fx
                acc[j, 1] -= fy
                acc[j, 2] -= fz
        return acc, capped


def compute_forces(state: AtomState, cfg: SimConfig, count_cap: bool = False):
    """Accelerations from the capped, distance-guarded pair sum.

    a_i = sum_j fs(r_ij) d_ij with d_ij the minimum-image displacement
    toward atom j and fs(r) = max(-cap, (r+g)^-8 - (r+g)^-14).  Pair
    terms are accumulated with explicit action/reaction so momentum is
    conserved to rounding.
    """
    pos = state.positions
    if not np.isfinite(pos).all():
        raise IntegrationError("non-finite positions in force evaluation")
    if _HAVE_NUMBA:
        acc, capped = _forces_kernel(pos, cfg.side, cfg.force_cap, cfg.dist_guard)
    else:
        acc, capped = _forces_numpy(pos, cfg.side, cfg.force_cap, cfg.dist_guard)
    if count_cap:
        return acc, capped
    return acc


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _pair_pe_kernel(pos, side):  # pragma: no cover - jitted
        n = pos.shape[0]
        pe = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                dx = pos[j, 0] - pos[i, 0]
                dy = pos[j, 1] - pos[i, 1]
                dz = pos[j, 2] - pos[i, 2]
                u = dx / side
                dx -= side * (np.floor(abs(u) + 0.5) * (1.0 if u >= 0 else -1.0))
                u = dy / side
                dy -= side * (np.floor(abs(u) + 0.5) * (1.0 if u >= 0 else -1.0))
                u = dz / side
                dz -= side * (np.floor(abs(u) + 0.5) * (1.0 if u >= 0 else -1.0))
                r2 = dx * dx + dy * dy + dz * dz
                inv6 = 1.0 / (r2 * r2 * r2)
                pe += inv6 * inv6 / 12.0 - inv6 / 6.0
        return pe


def _pair_pe_numpy(pos, side):
    d = pos[None, :, :] - pos[:, None, :]
    u = d / side
    d = d - side * np.trunc(u + np.copysign(0.5, u))
    r2 = (d * d).sum(axis=2)
    iu = np.triu_indices(pos.shape[0], k=1)
    inv6 = 1.0 / r2[iu] ** 3
    return float((inv6 * inv6 / 12.0 - inv6 / 6.0).sum())


def energies(state: AtomState, cfg: SimConfig) -> tuple[float, float, float]:
    """Kinetic, potential, and total energy of the state.

    KE = sum |q_j|^2 / 2; PE sums the minimum-image pair potential (the
    antiderivative of the force law, no cap or guard).
    """
    ke = 0.5 * float((state.velocities ** 2).sum())
    if state.positions.shape[0] > 1:
        if _HAVE_NUMBA:
            pe = float(_pair_pe_kernel(state.positions, cfg.side))
        else:
            pe = _pair_pe_numpy(state.positions, cfg.side)
    else:
        pe = 0.0
    return ke, pe, ke + pe


def region_temperatures(state: AtomState, geom: PatchGeometry,
                        policy: str = "error") -> coupling.RegionTemperatures:
    """Mean kinetic energy per atom in the left, core, right regions.

    Classification uses the wrapped x coordinate.  An empty region
    raises RegionEmptyError unless policy != "error", in which case the
    missing entry comes back NaN for the caller to handle.
    """
    xw = wrap(state.positions[:, 0], geom.side)
    left, core, right = region_masks(xw, geom)
    ke = 0.5 * (state.velocities ** 2).sum(axis=1)
    out = []
    for name, mask in (("left", left), ("core", core), ("right", right)):
        if mask.any():
            out.append(float(ke[mask].mean()))
        elif policy == "error":
            raise RegionEmptyError(f"{name} region contains no atoms at t={state.t:g}")
        else:
            out.append(math.nan)
    return coupling.RegionTemperatures(T_l=out[0], T_c=out[1], T_r=out[2])


class _Controller:
    """Evaluates the control acceleration, holding last-seen temperatures
    when the empty-region policy asks for it."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.geom = cfg.geometry
        self.last = {}

    def _region_temp(self, name: str, ke: np.ndarray, mask: np.ndarray, t: float) -> float:
        if mask.any():
            val = float(ke[mask].mean())
            self.last[name] = val
            return val
        if self.cfg.empty_region == "hold" and name in self.last:
            return self.last[name]
        raise RegionEmptyError(f"{name} region contains no atoms at t={t:g}")

    def acceleration(self, xw: np.ndarray, vel: np.ndarray, t: float) -> np.ndarray:
        cfg = self.cfg
        left, core, right = region_masks(xw, self.geom)
        ke = 0.5 * (vel ** 2).sum(axis=1)
        T_l = self._region_temp("left", ke, left, t)
        T_c = self._region_temp("core", ke, core, t)
        T_r = self._region_temp("right", ke, right, t)
        temps = coupling.RegionTemperatures(T_l=T_l, T_c=T_c, T_r=T_r)
        targets = coupling.coupling_targets(temps, cfg.T_L, cfg.T_R, cfg.h, cfg.H)
        rate_l = coupling.control_rate(T_l, targets.T_int_minus, cfg.mu, cfg.K,
                                       cfg.h, cfg.temp_floor)
        rate_r = coupling.control_rate(T_r, targets.T_int_plus, cfg.mu, cfg.K,
                                       cfg.h, cfg.temp_floor)
        rate = rate_l * left + rate_r * right
        return rate[:, None] * vel


def _auxiliaries(state: AtomState, geom: PatchGeometry) -> np.ndarray:
    """Instantaneous 12-vector of region temperatures and mean velocities."""
    xw = wrap(state.positions[:, 0], geom.side)
    left, core, right = region_masks(xw, geom)
    ke = 0.5 * (state.velocities ** 2).sum(axis=1)
    aux = np.full(12, np.nan)
    for k, mask in enumerate((left, core, right)):
        if mask.any():
            aux[k] = ke[mask].mean()
            aux[3 + 3 * k: 6 + 3 * k] = state.velocities[mask].mean(axis=0)
    return aux


def integrate(cfg: SimConfig, keep_states: bool = False,
              progress=None, max_wall: float | None = None) -> list[TrajectoryRecord]:
    """Run the simulation from init_atoms to tEnd.

    Records the auxiliaries every record_dt; the final record always
    carries the end state (every record does when keep_states is set).
    ``progress`` is an optional callback progress(t, tEnd) invoked at
    record times; ``max_wall`` aborts with IntegrationError after that
    many wall seconds.
    """
    state = init_atoms(cfg)
    geom = cfg.geometry
    controller = _Controller(cfg) if cfg.mu > 0 else None

    def deriv(pos, vel, t):
        acc = compute_forces(AtomState(pos, vel, t), cfg)
        if controller is not None:
            acc = acc + controller.acceleration(wrap(pos[:, 0], cfg.side), vel, t)
        return vel, acc

    if cfg.method == "rk23":
        return _integrate_rk23(cfg, state, deriv, keep_states, progress, max_wall)

    n_rec = max(1, round(cfg.record_dt / cfg.dt))
    n_steps = math.ceil(cfg.tEnd / cfg.dt - 1e-12)
    records = [TrajectoryRecord(t=0.0, aux=_auxiliaries(state, geom),
                                state=state.copy() if keep_states else None,
                                cap_events=compute_forces(state, cfg, count_cap=True)[1])]
    t0_wall = _time.perf_counter()
    pos, vel = state.positions, state.velocities
    t = 0.0
    for step in range(1, n_steps + 1):
        dt = min(cfg.dt, cfg.tEnd - t)
        k1p, k1v = deriv(pos, vel, t)
        k2p, k2v = deriv(pos + 0.5 * dt * k1p, vel + 0.5 * dt * k1v, t + 0.5 * dt)
        k3p, k3v = deriv(pos + 0.5 * dt * k2p, vel + 0.5 * dt * k2v, t + 0.5 * dt)
        k4p, k4v = deriv(pos + dt * k3p, vel + dt * k3v, t + dt)
        pos = pos + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        vel = vel + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t += dt
        if step % n_rec == 0 or step == n_steps:
            state = AtomState(pos, vel, t)
            records.append(TrajectoryRecord(
                t=t, aux=_auxiliaries(state, geom),
                state=state.copy() if keep_states else None,
                cap_events=compute_forces(state, cfg, count_cap=True)[1]))
            if progress is not None:
                progress(t, cfg.tEnd)
            if max_wall is not None and _time.perf_counter() - t0_wall > max_wall:
                raise IntegrationError(
                    f"wall limit {max_wall:g}s exceeded at t={t:g} of {cfg.tEnd:g}")
    if records[-1].state is None:
        records[-1].state = AtomState(pos.copy(), vel.copy(), t)
    return records


def _integrate_rk23(cfg, state, deriv, keep_states, progress, max_wall):
    """Adaptive embedded RK(2,3) mode mirroring a generic ODE-suite run."""
    from scipy.integrate import solve_ivp

    n = cfg.N
    geom = cfg.geometry
    t0_wall = _time.perf_counter()

    def rhs(t, y):
        if max_wall is not None and _time.perf_counter() - t0_wall > max_wall:
            raise IntegrationError(f"wall limit {max_wall:g}s exceeded at t={t:g}")
        pos = y[: 3 * n].reshape(n, 3)
        vel = y[3 * n:].reshape(n, 3)
        dp, dv = deriv(pos, vel, t)
        return np.concatenate([dp.ravel(), dv.ravel()])

    y0 = np.concatenate([state.positions.ravel(), state.velocities.ravel()])
    t_eval = np.arange(0.0, cfg.tEnd + 0.5 * cfg.record_dt, cfg.record_dt)
    t_eval[-1] = min(t_eval[-1], cfg.tEnd)
    sol = solve_ivp(rhs, (0.0, cfg.tEnd), y0, method="RK23",
                    t_eval=t_eval, rtol=cfg.rtol, atol=cfg.atol)
    if not sol.success:
        raise IntegrationError(f"rk23 integration failed: {sol.message}")
    records = []
    for i, t in enumerate(sol.t):
        pos = sol.y[: 3 * n, i].reshape(n, 3)
        vel = sol.y[3 * n:, i].reshape(n, 3)
        st = AtomState(pos.copy(), vel.copy(), float(t))
        records.append(TrajectoryRecord(
            t=float(t), aux=_auxiliaries(st, geom),
            state=st if keep_states else None))
        if progress is not None:
            progress(float(t), cfg.tEnd)
    records[-1].state = AtomState(sol.y[: 3 * n, -1].reshape(n, 3).copy(),
                                  sol.y[3 * n:, -1].reshape(n, 3).copy(), float(sol.t[-1]))
    return records


# --- CSV export --------------------------------------------------------------

def write_snapshot_csv(state: AtomState, cfg: SimConfig, path):
    """One row per atom: atom,x,y,z,u,v,w with wrapped positions."""
    pw = wrap(state.positions, cfg.side)
    with open(path, "w") as f:
        f.write("atom,x,y,z,u,v,w\n")
        for i in range(pw.shape[0]):
            vals = [*pw[i], *state.velocities[i]]
            f.write(f"{i}," + ",".join(f"{v:.17g}" for v in vals) + "\n")


def write_trajectory_csv(records: list[TrajectoryRecord], path):
    """Times and the 12 auxiliaries, one record per row."""
    with open(path, "w") as f:
        f.write("t," + ",".join(AUX_NAMES) + "\n")
        for rec in records:
            f.write(f"{rec.t:.17g}," + ",".join(f"{v:.17g}" for v in rec.aux) + "\n")
