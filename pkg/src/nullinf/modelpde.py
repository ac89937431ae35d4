"""Characteristic solvers for the model equations at the radiation face.

The model operator factors into a radial-logarithmic transport for the
auxiliary w = (rho0 d/drho0 - rhoI d/drhoI) u and a transport for u along
the diagonals rho0 * rhoI = const.  Both are integrated with the implicit
trapezoid (second order) on a shared logarithmic grid; the damped first
factor is integrated exactly through its exponential weight.  The grid is
extended to the left so that every diagonal through the requested window
starts on the data edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expansions


@dataclass(frozen=True)
class CharacteristicGrid:
    """Shared logarithmic grids in the two corner defining functions."""

    eps: float = 0.1
    rho0_min: float = 1e-5
    rhoI_min: float = 1e-5
    points_per_decade: int = 16
    ell: int = 0

    def __post_init__(self):
        if self.points_per_decade < 16:
            raise ValueError("need at least 16 points per decade")
        if min(self.rho0_min, self.rhoI_min) < 1e-8:
            raise ValueError("grid floor below 1e-8")
        if not (0 < self.rho0_min < self.eps and 0 < self.rhoI_min < self.eps):
            raise ValueError("grid ordering is wrong: need 0 < rho_min < eps")
        if self.ell < 0:
            raise ValueError("mode number must be nonnegative")

    @property
    def h(self) -> float:
        return math.log(10.0) / self.points_per_decade

    def _count(self, lo) -> int:
        n = round(math.log(self.eps / lo) / self.h)
        return int(n) + 1

    @property
    def rho0(self) -> np.ndarray:
        n = self._count(self.rho0_min)
        return self.eps * np.exp(self.h * (np.arange(n) - (n - 1)))

    @property
    def rhoI(self) -> np.ndarray:
        n = self._count(self.rhoI_min)
        return self.eps * np.exp(self.h * (np.arange(n) - (n - 1)))

    def refined(self, factor: int) -> "CharacteristicGrid":
        return CharacteristicGrid(
            self.eps, self.rho0_min, self.rhoI_min, self.points_per_decade * factor, self.ell
        )


@dataclass(frozen=True)
class BoundaryData:
    """Data on the two inflow edges; callables of the edge coordinate."""

    u_top: object = None      # u at rhoI = eps, function of rho0
    w_top: object = None      # auxiliary w at rhoI = eps, function of rho0
    u_right: object = None    # optional consistency data at rho0 = eps

    def top_values(self, rho0):
        u = np.zeros_like(rho0) if self.u_top is None else np.asarray(self.u_top(rho0), dtype=float)
        w = np.zeros_like(rho0) if self.w_top is None else np.asarray(self.w_top(rho0), dtype=float)
        return np.broadcast_to(u, rho0.shape).copy(), np.broadcast_to(w, rho0.shape).copy()


@dataclass
class ModeSolution:
    grid: CharacteristicGrid
    gamma: float
    u: np.ndarray          # (n_rho0, n_rhoI), core window
    w: np.ndarray
    corner_mismatch: float = 0.0

    def column(self, rho0_value=None):
        rho0 = self.grid.rho0
        i = len(rho0) // 2 if rho0_value is None else int(np.argmin(np.abs(rho0 - rho0_value)))
        return rho0[i], self.u[i, :]

    def leading_fit(self, model="const", rho0_value=None):
        _, col = self.column(rho0_value)
        return fit_leading_terms(self.grid.rhoI, col, model)

    def rhoI_log_derivative(self):
        """rhoI d/drhoI of u by centered differences on the log grid."""
        h = self.grid.h
        out = np.empty_like(self.u)
        out[:, 1:-1] = (self.u[:, 2:] - self.u[:, :-2]) / (2.0 * h)
        out[:, 0] = (self.u[:, 1] - self.u[:, 0]) / h
        out[:, -1] = (self.u[:, -1] - self.u[:, -2]) / h
        return out

    def d1(self):
        """The flat outgoing-null derivative through the corner frame (m = 0)."""
        rho0 = self.grid.rho0[:, None]
        rhoI = self.grid.rhoI[None, :]
        di = self.rhoI_log_derivative()
        return rho0 * (self.w + 0.5 * rhoI * di)


def _march(grid: CharacteristicGrid, gamma, forcing, data: BoundaryData):
    """Integrate the factored model inward from the top edge.

    Works on the grid extended to the left by one diagonal sweep so that the
    whole requested window is reached from the data edge; returns core
    arrays (u, w).
    """
    h = grid.h
    rhoI = grid.rhoI
    nJ = len(rhoI)
    ncore = len(grid.rho0)
    next_ = ncore + nJ - 1
    rho0_ext = grid.eps * np.exp(h * (np.arange(next_) - (next_ - 1)))

    lam = float(grid.ell * (grid.ell + 1))
    U = np.full((next_, nJ), np.nan)
    W = np.full((next_, nJ), np.nan)
    u_top, w_top = data.top_values(rho0_ext)
    U[:, nJ - 1] = u_top
    W[:, nJ - 1] = w_top

    def F(col_j):
        if forcing is None:
            return np.zeros(next_)
        return np.asarray(forcing(rho0_ext, np.full(next_, rhoI[col_j])), dtype=float)

    decay = math.exp(-gamma * h)
    F_above = F(nJ - 1)
    for j in range(nJ - 2, -1, -1):
        S_above = 0.5 * rhoI[j + 1] * (F_above + lam * U[:, j + 1])
        B = decay * (W[:, j + 1] - 0.5 * h * S_above)
        F_here = F(j)
        c = 0.25 * h * rhoI[j]
        A = np.full(next_, np.nan)
        A[1:] = U[:-1, j + 1] + 0.5 * h * W[:-1, j + 1]
        W[:, j] = (B - c * F_here - c * lam * A) / (1.0 + 0.5 * c * lam * h)
        U[:, j] = A + 0.5 * h * W[:, j]
        F_above = F_here

    u = U[nJ - 1 :, :]
    w = W[nJ - 1 :, :]
    if np.any(np.isnan(u)) or np.any(np.isnan(w)):
        raise RuntimeError("characteristic march left unfilled cells in the core window")

    mismatch = 0.0
    if data.u_right is not None:
        target = np.asarray(data.u_right(rhoI), dtype=float)
        mismatch = float(np.max(np.abs(u[-1, :] - target)))
    return u, w, mismatch


def solve_damped_mode(grid: CharacteristicGrid, gamma, forcing=None, data: BoundaryData | None = None) -> ModeSolution:
    """Mode solver with the damped first factor (rhoI d/drhoI - gamma)."""
    if gamma < 0:
        raise ValueError("damping exponent must be nonnegative")
    data = data or BoundaryData()
    u, w, mismatch = _march(grid, float(gamma), forcing, data)
    return ModeSolution(grid, float(gamma), u, w, mismatch)


def solve_wave_mode(grid: CharacteristicGrid, forcing=None, data: BoundaryData | None = None) -> ModeSolution:
    """Undamped model: identical code path with the damping set to zero."""
    return solve_damped_mode(grid, 0.0, forcing, data)


# -- the weak-null triangular system ----------------------------------------


@dataclass
class WeakNullSolution:
    u0: ModeSolution
    u1c: ModeSolution
    u1: ModeSolution

    def components(self):
        return (self.u0, self.u1c, self.u1)


def _quadratic_source(sol: ModeSolution):
    """rho^{-1} (d_1 u)^2 sampled on the core grid."""
    rho0 = sol.grid.rho0[:, None]
    rhoI = sol.grid.rhoI[None, :]
    d1u = sol.d1()
    return d1u**2 / (rho0 * rhoI)


def _grid_interp(grid: CharacteristicGrid, table):
    """Nearest-column interpolant for grid-sampled sources on the extension.

    Sources vanish off the core window (the extension sits at smaller rho0,
    where the quadratic sources are below the data floor by construction).
    """
    rho0 = grid.rho0
    rhoI = grid.rhoI

    def f(r0, rI):
        out = np.zeros_like(r0)
        j = np.argmin(np.abs(np.log(rI[0] / rhoI)))
        mask = r0 >= rho0[0] * (1.0 - 1e-12)
        idx = np.clip(np.round(np.log(r0[mask] / rho0[0]) / grid.h).astype(int), 0, len(rho0) - 1)
        out[mask] = table[idx, j]
        return out

    return f


def solve_weak_null_system(
    grid: CharacteristicGrid,
    gamma,
    data=(None, None, None),
    forcing=(None, None, None),
    couple=True,
) -> WeakNullSolution:
    """Sequential solve of the lower-triangular weak-null model system."""
    data = [d or BoundaryData() for d in data]
    u0 = solve_damped_mode(grid, gamma, forcing[0], data[0])

    def with_quadratic(base, source_sol):
        if not couple:
            return base
        table = _quadratic_source(source_sol)
        extra = _grid_interp(grid, table)
        if base is None:
            return extra
        return lambda r0, rI: np.asarray(base(r0, rI), dtype=float) + extra(r0, rI)

    u1c = solve_wave_mode(grid, with_quadratic(forcing[1], u0), data[1])
    u1 = solve_wave_mode(grid, with_quadratic(forcing[2], u1c), data[2])
    return WeakNullSolution(u0, u1c, u1)


def newton_iterate(
    grid: CharacteristicGrid,
    gamma,
    data=(None, None, None),
    forcing=(None, None, None),
    steps=8,
    reference_step=None,
):
    """Global linear-solve iteration for the weak-null system.

    Starts from zero and solves the linearized triangular system at each
    step (the quadratic couplings are frozen at the previous iterate, so a
    step is three marches with modified sources).  Returns the iterates and
    the quadratic-convergence ratios against the final iterate.
    """
    data = [d or BoundaryData() for d in data]
    zero = ModeSolution(grid, 0.0, np.zeros((len(grid.rho0), len(grid.rhoI))),
                        np.zeros((len(grid.rho0), len(grid.rhoI))))
    iterates = []
    prev = (zero, zero, zero)
    sup_history = []
    for k in range(steps):
        u0 = solve_damped_mode(grid, gamma, forcing[0], data[0])

        def linearized(base, prev_sol, new_sol):
            a_prev = prev_sol.d1()
            a_new = new_sol.d1()
            rho0 = grid.rho0[:, None]
            rhoI = grid.rhoI[None, :]
            table = (2.0 * a_prev * a_new - a_prev**2) / (rho0 * rhoI)
            extra = _grid_interp(grid, table)
            if base is None:
                return extra
            return lambda r0, rI: np.asarray(base(r0, rI), dtype=float) + extra(r0, rI)

        u1c = solve_wave_mode(grid, linearized(forcing[1], prev[0], u0), data[1])
        u1 = solve_wave_mode(grid, linearized(forcing[2], prev[1], u1c), data[2])
        current = (u0, u1c, u1)
        iterates.append(current)
        sup = max(float(np.max(np.abs(c.u))) for c in current)
        sup_history.append(sup)
        if k >= 3 and all(
            sup_history[-i - 1] > sup_history[-i - 2] * (1.0 + 1e-9) for i in range(3)
        ):
            raise RuntimeError("iteration diverging: sup norm grew for 3 consecutive steps")
        prev = current

    ref_idx = (reference_step if reference_step is not None else steps) - 1
    ref = iterates[ref_idx]
    errors = []
    for it in iterates:
        errors.append(
            max(float(np.max(np.abs(it[c].u - ref[c].u))) for c in range(3))
        )
    ratios = []
    for k in range(len(errors) - 1):
        if errors[k] == 0.0:
            ratios.append(0.0)
        else:
            ratios.append(errors[k + 1] / errors[k] ** 2)
    return iterates, errors, ratios


# -- leading-term fits -------------------------------------------------------


@dataclass
class LeadingFit:
    model: str
    c_log: float | None
    c0: float | None
    exponent: float | None
    amplitude: float | None
    residual: float
    ill_conditioned: bool = False


def _last_decade(rhoI, values):
    rhoI = np.asarray(rhoI, dtype=float)
    values = np.asarray(values, dtype=float)
    top = rhoI[0] * 10.0
    mask = rhoI <= top * (1.0 + 1e-12)
    if np.count_nonzero(mask) < 4:
        mask = np.arange(len(rhoI)) < max(4, len(rhoI) // 3)
    return rhoI[mask], values[mask]


def fit_leading_terms(rhoI, values, model="const") -> LeadingFit:
    """Fit the boundary behavior of a radial profile on its last decade."""
    x, y = _last_decade(rhoI, values)
    lx = np.log(x)

    if model == "log+const":
        design = np.stack([lx, np.ones_like(lx)], axis=1)
        coef, res_, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
        return LeadingFit(model, float(coef[0]), float(coef[1]), None, None, resid)

    if model == "power":
        if np.any(y == 0.0):
            return LeadingFit(model, None, None, 0.0, 0.0, 0.0, ill_conditioned=True)
        sign = np.sign(y[0])
        if np.any(np.sign(y) != sign):
            return LeadingFit(model, None, None, 0.0, 0.0, float(np.std(y)), ill_conditioned=True)
        coef = np.polyfit(lx, np.log(np.abs(y)), 1)
        amp = sign * math.exp(coef[1])
        fitted = amp * x ** coef[0]
        resid = float(np.sqrt(np.mean((fitted - y) ** 2)))
        return LeadingFit(model, None, None, float(coef[0]), float(amp), resid)

    if model == "const":
        d = np.diff(y)
        if np.all(d == 0.0):
            return LeadingFit(model, None, float(y[0]), None, 0.0, 0.0)
        if np.any(d == 0.0) or np.any(np.sign(d) != np.sign(d[np.nonzero(d)[0][0]])):
            # remainder not resolved as a clean power; fall back to the mean
            c0 = float(np.mean(y))
            return LeadingFit(model, None, c0, None, None,
                              float(np.std(y)), ill_conditioned=True)
        slope = np.polyfit(lx[:-1], np.log(np.abs(d)), 1)
        e = float(slope[0])
        growth = math.exp(e * (lx[1] - lx[0])) - 1.0
        amp = d[0] / (x[0] ** e * growth)
        c0 = float(y[0] - amp * x[0] ** e)
        fitted = c0 + amp * x**e
        resid = float(np.sqrt(np.mean((fitted - y) ** 2)))
        return LeadingFit(model, None, c0, e, float(amp), resid)

    raise ValueError(f"unknown fit model {model!r}")


# -- exact expansion transport (re-exported interface) ------------------------


def transport_phg(f, operator="rho_D_rho", truncation=None):
    """Exact term-by-term transport of a finite expansion.

    ``operator`` selects the radial model (``rho_D_rho``, acting on
    single-variable expansions) or the corner model (``two_face``, acting on
    separated bivariate expansions); returns the solution expansion and the
    index set predicted by the transport bookkeeping.
    """
    if operator == "rho_D_rho":
        return expansions.transport_rho(f)
    if operator == "two_face":
        if truncation is None:
            raise ValueError("two_face transport needs a truncation for the index bookkeeping")
        return expansions.transport_two_face(f, truncation)
    raise ValueError(f"unknown transport operator {operator!r}")


# -- model operator matrices ---------------------------------------------------


def damping_block(gamma1, gamma2) -> np.ndarray:
    """Coupling matrix of the decoupled damped block; spectrum {2 g1, g1, g2}."""
    return np.array(
        [
            [2.0 * gamma1, 0.0, 0.0],
            [0.0, gamma1, 0.0],
            [2.0 * gamma2, 0.0, gamma2],
        ]
    )


def toy_block(gamma, d1_u1c_leading) -> np.ndarray:
    """Coupling matrix of the toy system; the lower 2x2 block is nilpotent."""
    return np.array(
        [
            [gamma, 0.0, 0.0],
            [0.0, 0.0, 0.0],
            [0.0, float(d1_u1c_leading), 0.0],
        ]
    )


#: slots of the 7-component splitting used by the full coupling matrices
SPLITTING_7 = ("qq", "qs", "qa", "ss", "sa", "sph-trace", "sph-tracefree")
#: slots selected by the projection onto the components driven by the gauge
PI0_SLOTS = (0, 2, 5)
PI11_SLOT = 3
PI11C_SLOTS = (1, 4, 6)


def full_coupling_matrices(h, m, gamma1, gamma2):
    """The 7x7 first- and zeroth-order coupling matrices, entries as callables.

    Entries are scalar fields of (q, s, theta, phi); tensorial slots report
    their theta-theta representative.  Stored for inspection and structure
    tests, not used by the solvers.
    """
    import sympy as sp

    from .compactify import _mass
    from .metrics import PH, Q, RR, S, TH, ROUND_INV, MetricField, _diff_ops

    m = _mass(m)
    D = _diff_ops(m)
    hq = h.qs_exprs(m)
    d1 = D[1]
    h_up = ROUND_INV * sp.Matrix([[hq["22"], hq["23"]], [hq["23"], hq["33"]]]) * ROUND_INV
    raised_rep = h_up[0, 0]
    vec_rep = sum(ROUND_INV[0, b] * hq[("12", "13")[b]] for b in range(2))

    A = [[sp.Integer(0)] * 7 for _ in range(7)]
    B = [[sp.Integer(0)] * 7 for _ in range(7)]
    A[0][0] = sp.Float(2 * gamma1)
    A[1][0] = gamma1 - gamma2 - 2 * d1(hq["01"])
    A[1][5] = sp.Rational(1, 2) * (gamma1 - gamma2)
    A[2][2] = sp.Float(gamma1)
    A[3][0] = -2 * d1(hq["11"])
    A[3][5] = sp.Float(gamma1)
    A[3][6] = sp.Rational(1, 2) * d1(raised_rep)
    A[4][0] = -2 * d1(hq["12"])
    A[4][2] = gamma1 + d1(vec_rep)
    A[5][0] = sp.Float(2 * gamma2)
    A[5][5] = sp.Float(gamma2)
    B[1][0] = 2 * d1(d1(hq["01"]))
    B[3][0] = 2 * d1(d1(hq["11"]))
    B[4][0] = 2 * d1(d1(hq["12"]))
    B[6][0] = 2 * d1(d1(hq["22"]))

    metric = MetricField(m)

    def compile_matrix(M):
        flat = [M[i][j] for i in range(7) for j in range(7)]
        fn = sp.lambdify((RR, Q, S, TH, PH), flat, modules="numpy", cse=True)

        def evaluate(q, s, theta, phi):
            r = metric.radius(q, s)
            vals = fn(r, q, s, theta, phi)
            return np.array(vals, dtype=float).reshape(7, 7)

        return evaluate

    return compile_matrix(A), compile_matrix(B)
