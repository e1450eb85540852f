"""Numeric construction of the slow manifold of the controlled patches.

The controlled periodic-patch mesoscale PDE (diffusion K, advection
alpha, control mu, coupling gamma) has an attracting manifold
parametrized by the core averages U_j.  On it the patch field is, to
first order in gamma and alpha, a piecewise polynomial in the scaled
offset xi = (x - X_j)/h depending linearly on (U_{j-1}, U_j, U_{j+1}),
and the U_j evolve by a three-point stencil.

The construction mirrors the residual-driven iteration of the original
computer-algebra derivation, replaced by exact linear algebra: scalar
coefficients live in a (gamma, alpha)-truncated algebra (terms of order
gamma^2 or alpha^2 drop), the unknown correction at each order is a
degree-4 polynomial per region plus one evolution coefficient, and the
thirteen residuals (four region PDEs, eight C0/C1 interface conditions,
one core-amplitude condition) expand into one dense linear system per
neighbour basis.  Iteration stops when every residual vanishes at the
truncation order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .coupling import lagrange_offset_coefficients
from .errors import ConstructionError

DEG = 4                       # polynomial degree per region
REGIONS = ("l", "c", "r", "b")
INTERVALS = {"l": (-0.75, -0.25), "c": (-0.25, 0.25),
             "r": (0.25, 0.75), "b": (0.75, 1.25)}
OFFSETS = (-1, 0, 1)          # neighbour amplitudes U_{j+m}
RES_TOL = 1e-11


def _tmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product in the truncated algebra: (2,2) blocks of gamma^i alpha^k
    coefficients, dropping i >= 2 or k >= 2."""
    out = np.zeros((2, 2))
    out[0, 0] = a[0, 0] * b[0, 0]
    out[1, 0] = a[1, 0] * b[0, 0] + a[0, 0] * b[1, 0]
    out[0, 1] = a[0, 1] * b[0, 0] + a[0, 0] * b[0, 1]
    out[1, 1] = (a[1, 1] * b[0, 0] + a[0, 0] * b[1, 1]
                 + a[1, 0] * b[0, 1] + a[0, 1] * b[1, 0])
    return out


def _times_alpha(p: np.ndarray) -> np.ndarray:
    """Multiply by the symbol alpha (shift the alpha power, truncate)."""
    out = np.zeros_like(p)
    out[..., 1] = p[..., 0]
    return out


def _poly_xi_deriv(p: np.ndarray) -> np.ndarray:
    """d/dxi of a polynomial with truncated-algebra coefficients."""
    out = np.zeros_like(p)
    for n in range(1, p.shape[0]):
        out[n - 1] = n * p[n]
    return out


def _weights_eval(x0: float) -> np.ndarray:
    return np.array([x0 ** n for n in range(DEG + 1)])


def _weights_deriv(x0: float) -> np.ndarray:
    return np.array([0.0] + [n * x0 ** (n - 1) for n in range(1, DEG + 1)])


def _weights_avg(a: float, b: float) -> np.ndarray:
    return np.array([(b ** (n + 1) - a ** (n + 1)) / ((b - a) * (n + 1))
                     for n in range(DEG + 1)])


# interface list: (name, left region, right region, xi_left, xi_right);
# the last entry is the periodic wrap from the buffer back to the left
# action region (xi = 5/4 is congruent to -3/4).
INTERFACES = (
    ("lc", "l", "c", -0.25, -0.25),
    ("cr", "c", "r", 0.25, 0.25),
    ("rb", "r", "b", 0.75, 0.75),
    ("bl", "b", "l", 1.25, -0.75),
)


class _State:
    """Fields and evolution coefficients in the truncated algebra."""

    def __init__(self):
        # P[region][m_idx, n, i, k]; base field is U_j itself
        self.P = {reg: np.zeros((3, DEG + 1, 2, 2)) for reg in REGIONS}
        for reg in REGIONS:
            self.P[reg][OFFSETS.index(0), 0, 0, 0] = 1.0
        self.g = np.zeros((3, 2, 2))


def _interp_blocks(r: float):
    """I_j^+ and I_j^- stencils as truncated-algebra blocks per offset.

    gamma^2 terms of the printed interpolation vanish identically at
    this truncation order, so only the gamma^0 and gamma^1 parts enter.
    """
    coeffs = lagrange_offset_coefficients(r)
    iplus = np.zeros((3, 2, 2))
    iminus = np.zeros((3, 2, 2))
    for mi, m in enumerate(OFFSETS):
        iplus[mi, 0, 0] = coeffs[m][0]
        iplus[mi, 1, 0] = coeffs[m][1]
        iminus[mi, 0, 0] = coeffs[-m][0]
        iminus[mi, 1, 0] = coeffs[-m][1]
    return iplus, iminus


def _residuals(st: _State, K: float, mu: float, r: float, H: float):
    """All thirteen residual functionals of the current approximation.

    Returns (pde, c0, c1, amp): pde[region] is a per-basis polynomial
    (3, DEG+1, 2, 2); the interface and amplitude entries are per-basis
    blocks (3, 2, 2).
    """
    h = r * H
    muc = K * mu / (h * h)
    iplus, iminus = _interp_blocks(r)
    avg = {reg: _weights_avg(*INTERVALS[reg]) for reg in REGIONS}

    pde = {}
    for reg in REGIONS:
        res = np.zeros((3, DEG + 1, 2, 2))
        # du/dt = sum_{m1} P_{m1} * dU_{j+m1}/dt, dU_{j+m}/dt = sum_{m2} g_{m2} U_{j+m+m2}
        for (m1i, m1), (m2i, m2) in itertools.product(enumerate(OFFSETS), repeat=2):
            mt = m1 + m2
            for n in range(DEG + 1):
                term = _tmul(st.P[reg][m1i, n], st.g[m2i])
                if abs(mt) <= 1:
                    res[OFFSETS.index(mt), n] += term
                elif np.abs(term).max() > RES_TOL:
                    raise ConstructionError(
                        "evolution terms reached beyond nearest neighbours "
                        "below the truncation order")
        # - K u_xx  (xi derivatives carry 1/h each)
        for mi in range(3):
            res[mi] -= (K / (h * h)) * _poly_xi_deriv(_poly_xi_deriv(st.P[reg][mi]))
        # + alpha u_x
        for mi in range(3):
            res[mi] += _times_alpha(_poly_xi_deriv(st.P[reg][mi])) / h
        # - mu_c (I - region average) in the action regions
        if reg in ("l", "r"):
            iblk = iminus if reg == "l" else iplus
            for mi in range(3):
                u_avg = np.tensordot(avg[reg], st.P[reg][mi], axes=(0, 0))
                res[mi, 0] -= muc * (iblk[mi] - u_avg)
        pde[reg] = res

    c0 = {}
    c1 = {}
    for name, ra, rb, xa, xb in INTERFACES:
        wa, wb = _weights_eval(xa), _weights_eval(xb)
        da, db = _weights_deriv(xa), _weights_deriv(xb)
        c0[name] = np.stack([
            np.tensordot(wb, st.P[rb][mi], axes=(0, 0))
            - np.tensordot(wa, st.P[ra][mi], axes=(0, 0)) for mi in range(3)])
        c1[name] = np.stack([
            np.tensordot(db, st.P[rb][mi], axes=(0, 0))
            - np.tensordot(da, st.P[ra][mi], axes=(0, 0)) for mi in range(3)])

    amp = np.stack([
        np.tensordot(avg["c"], st.P["c"][mi], axes=(0, 0)) for mi in range(3)])
    amp[OFFSETS.index(0), 0, 0] -= 1.0  # core average of the U_j basis is one
    return pde, c0, c1, amp


def _max_residual(st: _State, K, mu, r, H) -> float:
    pde, c0, c1, amp = _residuals(st, K, mu, r, H)
    worst = max(np.abs(p).max() for p in pde.values())
    worst = max(worst, max(np.abs(v).max() for v in c0.values()))
    worst = max(worst, max(np.abs(v).max() for v in c1.values()))
    return max(worst, np.abs(amp).max())


def _build_matrix(K: float, mu: float, r: float, H: float) -> np.ndarray:
    """Linearization of the residuals in the order-correction unknowns.

    Unknowns: DEG+1 polynomial coefficients for each of the four regions
    followed by the evolution coefficient (21 total).  Rows: the PDE
    residual coefficients of xi^0..xi^DEG per region, then the eight
    interface conditions, then the amplitude condition.
    """
    h = r * H
    muc = K * mu / (h * h)
    ncoef = DEG + 1
    off = {reg: i * ncoef for i, reg in enumerate(REGIONS)}
    icg = 4 * ncoef
    n_rows = 4 * ncoef + 2 * len(INTERFACES) + 1
    A = np.zeros((n_rows, icg + 1))

    row = 0
    for reg in REGIONS:
        for d in range(ncoef):
            if d == 0:
                A[row, icg] = 1.0  # dU/dt correction through the base field
            if d + 2 <= DEG:
                A[row, off[reg] + d + 2] -= (K / (h * h)) * (d + 2) * (d + 1)
            if d == 0 and reg in ("l", "r"):
                A[row, off[reg]: off[reg] + ncoef] += muc * _weights_avg(*INTERVALS[reg])
            row += 1
    for _name, ra, rb, xa, xb in INTERFACES:
        A[row, off[rb]: off[rb] + ncoef] += _weights_eval(xb)
        A[row, off[ra]: off[ra] + ncoef] -= _weights_eval(xa)
        row += 1
    for _name, ra, rb, xa, xb in INTERFACES:
        A[row, off[rb]: off[rb] + ncoef] += _weights_deriv(xb)
        A[row, off[ra]: off[ra] + ncoef] -= _weights_deriv(xa)
        row += 1
    A[row, off["c"]: off["c"] + ncoef] = _weights_avg(*INTERVALS["c"])
    return A


def _rhs_for_slot(pde, c0, c1, amp, mi: int, slot) -> np.ndarray:
    i, k = slot
    parts = [pde[reg][mi, :, i, k] for reg in REGIONS]
    parts.append(np.array([c0[name][mi, i, k] for name, *_ in INTERFACES]))
    parts.append(np.array([c1[name][mi, i, k] for name, *_ in INTERFACES]))
    parts.append(np.array([amp[mi, i, k]]))
    return -np.concatenate(parts)


@dataclass
class PiecewiseField:
    """Slow-manifold patch field at full coupling, linear in the
    neighbouring core averages.

    ``coeffs[region]`` has shape (3, 5): polynomial coefficients in
    xi = (x - X_j)/h for the U_{j-1}, U_j, U_{j+1} bases.  Regions:
    left action [-3/4, -1/4), core [-1/4, 1/4), right action
    [1/4, 3/4), buffer [3/4, 5/4) with period 2.  First order in the
    coupling gamma and the advection alpha.
    """

    coeffs: dict[str, np.ndarray]
    r: float
    mu: float
    alpha: float
    K: float
    H: float
    gamma_order: int = 1

    def region_of(self, xi: float) -> str:
        xi = ((xi + 0.75) % 2.0) - 0.75
        for reg, (a, b) in INTERVALS.items():
            if a <= xi < b:
                return reg
        return "b"

    def basis_values(self, xi) -> np.ndarray:
        """Values of the three basis fields at xi (scalar or array),
        shape (..., 3) ordered (U_{j-1}, U_j, U_{j+1})."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape + (3,))
        flat = out.reshape(-1, 3)
        for idx, x in enumerate(np.atleast_1d(xi).ravel()):
            xw = ((x + 0.75) % 2.0) - 0.75
            c = self.coeffs[self.region_of(xw)]
            flat[idx] = c @ np.array([xw ** n for n in range(DEG + 1)])
        return out

    def evaluate(self, xi, U_m1: float, U_0: float, U_p1: float):
        b = self.basis_values(xi)
        return b[..., 0] * U_m1 + b[..., 1] * U_0 + b[..., 2] * U_p1

    def interface_defects(self) -> dict[str, float]:
        """Worst C0/C1 mismatch across interfaces and the amplitude error."""
        worst0 = worst1 = 0.0
        for name, ra, rb, xa, xb in INTERFACES:
            for mi in range(3):
                va = self.coeffs[ra][mi] @ _weights_eval(xa)
                vb = self.coeffs[rb][mi] @ _weights_eval(xb)
                worst0 = max(worst0, abs(vb - va))
                da = self.coeffs[ra][mi] @ _weights_deriv(xa)
                db = self.coeffs[rb][mi] @ _weights_deriv(xb)
                worst1 = max(worst1, abs(db - da))
        avg = _weights_avg(*INTERVALS["c"])
        amp = self.coeffs["c"] @ avg - np.array([0.0, 1.0, 0.0])
        return {"c0": worst0, "c1": worst1, "amplitude": float(np.abs(amp).max())}


@dataclass
class StencilModel:
    """Emergent three-point stencil of the core-average dynamics.

    dU_j/dt = -a_adv (U_{j+1} - U_{j-1}) + a_diff (U_{j-1} - 2U_j + U_{j+1});
    a_adv carries the sign of alpha (upwind positive).  The per-unit
    ratios are the equivalent-PDE calibration numbers
    15/[4(1+48/mu)(1+12/mu)] and 3/(1+48/mu).
    """

    a_adv: float
    a_diff: float
    adv_coeff_per_alpha: float
    diff_coeff_per_k: float
    alpha: float
    K: float
    mu: float
    r: float
    H: float

    def rhs(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        up, um = np.roll(U, -1), np.roll(U, 1)
        return -self.a_adv * (up - um) + self.a_diff * (um - 2.0 * U + up)


def construct_slow_manifold(alpha: float, K: float, mu: float, r: float,
                            H: float) -> tuple[PiecewiseField, StencilModel]:
    """Build the slow manifold and its emergent stencil.

    Iterates order by order (gamma first, then the mixed gamma-alpha
    order), solving one 21-unknown least-squares system per neighbour
    basis per order and checking rank; raises ConstructionError when the
    system is singular or the residuals refuse to vanish.
    """
    if mu <= 0:
        raise ConstructionError(f"control strength must be positive, got mu={mu}")
    if not (0.0 < r <= 1.0):
        raise ConstructionError(f"scale ratio must be in (0, 1], got r={r}")
    if K <= 0 or H <= 0:
        raise ConstructionError("need positive K and H")

    st = _State()
    A = _build_matrix(K, mu, r, H)
    slots = {1: (1, 0), 2: (1, 1)}
    ncoef = DEG + 1
    for it in (1, 2):
        pde, c0, c1, amp = _residuals(st, K, mu, r, H)
        slot = slots[it]
        for mi in range(3):
            b = _rhs_for_slot(pde, c0, c1, amp, mi, slot)
            x, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
            if rank < A.shape[1]:
                cond = sv[0] / sv[-1] if sv[-1] != 0 else np.inf
                raise ConstructionError(
                    f"singular correction system at order {slot}, "
                    f"rank {rank} < {A.shape[1]}, condition number {cond:.3g}")
            if np.abs(A @ x - b).max() > 1e-9 * max(1.0, np.abs(b).max()):
                raise ConstructionError(
                    f"inconsistent correction system at order {slot}")
            for ri, reg in enumerate(REGIONS):
                st.P[reg][mi, :, slot[0], slot[1]] += x[ri * ncoef:(ri + 1) * ncoef]
            st.g[mi, slot[0], slot[1]] += x[4 * ncoef]

    worst = _max_residual(st, K, mu, r, H)
    if worst > RES_TOL:
        raise ConstructionError(f"residuals did not converge: max {worst:.3g}")

    # contract gamma -> 1 and the alpha symbol -> its numeric value
    weights = np.array([[1.0, alpha], [1.0, alpha]])
    coeffs = {reg: np.tensordot(st.P[reg], weights, axes=([2, 3], [0, 1]))
              for reg in REGIONS}
    # the (0,0) and (1,*) slots all contribute once at gamma = 1; the
    # tensordot above double counts nothing because slot (0,1) is empty
    field = PiecewiseField(coeffs=coeffs, r=r, mu=mu, alpha=alpha, K=K, H=H)

    g_num = st.g[:, 1, 0] + alpha * st.g[:, 1, 1]
    a_diff = 0.5 * (g_num[2] + g_num[0])
    s_adv = 0.5 * (g_num[2] - g_num[0])
    if abs(g_num[1] + 2.0 * a_diff) > 1e-9 * max(1.0, abs(a_diff)):
        raise ConstructionError("stencil lost the conservation property")
    adv_per_alpha = -H * (st.g[2, 1, 1] - st.g[0, 1, 1])
    diff_per_k = H * H * a_diff / K
    stencil = StencilModel(
        a_adv=-s_adv, a_diff=a_diff,
        adv_coeff_per_alpha=adv_per_alpha, diff_coeff_per_k=diff_per_k,
        alpha=alpha, K=K, mu=mu, r=r, H=H)
    return field, stencil


def equivalent_pde(model: StencilModel) -> tuple[float, float]:
    """Equivalent-PDE coefficients of the stencil, normalized per unit
    advection speed and per unit diffusivity.

    U_t = -alpha * adv * U_x + K * diff * U_xx + O(H^2) with
    adv = a_adv * 2H / alpha and diff = a_diff * H^2 / K; both equal one
    when the control strength is calibrated.
    """
    return model.adv_coeff_per_alpha, model.diff_coeff_per_k


def write_manifold_coeffs_csv(field: PiecewiseField, stencil: StencilModel, path):
    """Polynomial coefficients per region per basis plus the stencil row."""
    with open(path, "w") as f:
        f.write("region,basis,xi_power,coefficient\n")
        for reg in REGIONS:
            for mi, m in enumerate(OFFSETS):
                for n in range(DEG + 1):
                    f.write(f"{reg},{m:+d},{n},{field.coeffs[reg][mi, n]:.17g}\n")
        f.write(f"stencil,a_adv,,{stencil.a_adv:.17g}\n")
        f.write(f"stencil,a_diff,,{stencil.a_diff:.17g}\n")
        f.write(f"stencil,adv_coeff_per_alpha,,{stencil.adv_coeff_per_alpha:.17g}\n")
        f.write(f"stencil,diff_coeff_per_k,,{stencil.diff_coeff_per_k:.17g}\n")


def write_manifold_samples_csv(field: PiecewiseField, path, num: int = 401):
    """Sampled basis fields over one period, one curve per neighbour."""
    xi = np.linspace(-0.75, 1.25, num)
    vals = field.basis_values(xi)
    with open(path, "w") as f:
        f.write("xi,u_prev,u_center,u_next\n")
        for x, (vm, v0, vp) in zip(xi, vals):
            f.write(f"{x:.17g},{vm:.17g},{v0:.17g},{vp:.17g}\n")
