"""Spheres at large radius, Hawking and Bondi masses, and the mass-loss budget.

A congruence of asymptotically radial null geodesics carries the cut
geometry: sphere tangents and curvatures come from angular stencils of
trajectories, masses from quadrature over the cuts, and the retarded-time
evolution of the mass aspect from the leading transport law of the gauged
field equations, with radiated flux entering at the calibrated coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .compactify import inverse_tortoise
from .geodesics import integrate_radial_null_geodesic
from .leading_terms import _sphere_div_tensor, _sphere_div_vector
from .metrics import PH, RHO0, RHOI, TH, ROUND_INV, ROUND_METRIC, MetricField
from . import tensors

#: coefficient of |news|^2 in the retarded-time transport of the mass aspect;
#: fixed once by the single-mode budget calibration
MASS_ASPECT_FLUX_COEFF = 0.125


def sphere_quadrature(n_theta=24, n_phi=48):
    """Gauss-Legendre in the polar cosine times uniform azimuth."""
    xg, wg = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(xg)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    w2 = np.outer(wg, np.full(n_phi, 2.0 * np.pi / n_phi))
    TH2, PH2 = np.meshgrid(theta, phi, indexing="ij")
    return TH2.ravel(), PH2.ravel(), w2.ravel()


_STENCIL = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]
_CENTER = 4


class Congruence:
    """Batched radial null geodesics toward one cut of the radiation face."""

    def __init__(self, metric: MetricField, u, theta, phi, s0=15.0, delta=5e-3, **kw):
        self.metric = metric
        self.u = float(u)
        self.theta = np.asarray(theta, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.delta = float(delta)
        n = len(self.theta)
        angles = np.empty((n * 9, 2))
        for o, (a, b) in enumerate(_STENCIL):
            angles[o::9, 0] = self.theta + a * delta
            angles[o::9, 1] = self.phi + b * delta
        self.traj = integrate_radial_null_geodesic(metric, u, angles, s0=s0, **kw)
        self.n = n

    def _radius_along(self):
        x = self.traj.x
        return inverse_tortoise(0.5 * (x[..., 0] - x[..., 1]), self.metric.m)

    def affine_at_radius(self, r_coord):
        """Affine parameters where each congruence member crosses the radius."""
        r = self._radius_along()
        tau = np.log(self.traj.s)
        lr = np.log(r)
        target = math.log(r_coord)
        out = np.empty(r.shape[0])
        for i in range(r.shape[0]):
            out[i] = np.exp(np.interp(target, lr[i], tau))
        if r[:, 0].max() > r_coord or r[:, -1].min() < r_coord:
            raise ValueError(
                f"radius {r_coord} is outside the congruence window "
                f"[{r[:, 0].max():.3g}, {r[:, -1].min():.3g}]"
            )
        # secant refinement on the interpolated trajectory
        m = self.metric.m
        lo, hi = self.traj.s[0], self.traj.s[-1]
        for _ in range(4):
            x_here, _ = self.traj.interpolate_per_member(out)
            r_here = inverse_tortoise(0.5 * (x_here[:, 0] - x_here[:, 1]), m)
            x_off, _ = self.traj.interpolate_per_member(out * (1.0 + 1e-6))
            r_off = inverse_tortoise(0.5 * (x_off[:, 0] - x_off[:, 1]), m)
            slope = (r_off - r_here) / (out * 1e-6)
            step = (r_coord - r_here) / slope
            out = np.clip(out + step, lo, hi)
            if np.max(np.abs(step / out)) < 1e-13:
                break
        return out

    def cut(self, r_coord):
        """Points, velocities, tangents and curvature data of one sphere."""
        s_star = self.affine_at_radius(r_coord)
        n = self.n
        d = self.delta
        x_all, v_all = self.traj.interpolate_per_member(s_star)
        P = x_all.reshape(n, 9, 4)
        V = v_all.reshape(n, 9, 4)

        Pc = P[:, _CENTER, :]
        L = V[:, _CENTER, :]
        T_th = (P[:, 7, :] - P[:, 1, :]) / (2 * d)
        T_ph = (P[:, 5, :] - P[:, 3, :]) / (2 * d)
        D = {
            (0, 0): (P[:, 7, :] - 2 * Pc + P[:, 1, :]) / d**2,
            (1, 1): (P[:, 5, :] - 2 * Pc + P[:, 3, :]) / d**2,
            (0, 1): (P[:, 8, :] - P[:, 6, :] - P[:, 2, :] + P[:, 0, :]) / (4 * d**2),
        }
        D[(1, 0)] = D[(0, 1)]

        ev = self.metric.at(Pc[:, 0], Pc[:, 1], Pc[:, 2], Pc[:, 3])
        gam = tensors.christoffel(ev)
        g = ev.g
        T = np.stack([T_th, T_ph], axis=1)  # (n, 2, 4)

        cov = np.empty((self.n, 2, 2, 4))
        for a in range(2):
            for b in range(2):
                cov[:, a, b, :] = D[(a, b)] + np.einsum(
                    "nkmu,nm,nu->nk", gam, T[:, a, :], T[:, b, :]
                )

        return SphereCut(self, float(r_coord), s_star[_CENTER::9], Pc, L, T, cov, g, ev)


@dataclass
class SphereCut:
    congruence: "Congruence"
    r_coord: float
    s_star: np.ndarray
    points: np.ndarray     # (n, 4)
    L: np.ndarray          # (n, 4) outgoing null generator (velocity normalization)
    T: np.ndarray          # (n, 2, 4) sphere tangents
    cov: np.ndarray        # (n, 2, 2, 4) nabla_{T_a} T_b
    g: np.ndarray          # (n, 4, 4)
    ev: object

    def induced_metric(self):
        return np.einsum("nmk,nam,nbk->nab", self.g, self.T, self.T)

    def conjugate_normal(self):
        """The unique future null normal with g(L, Lbar) = 2."""
        n = self.points.shape[0]
        Lbar = np.empty((n, 4))
        for i in range(n):
            gi = self.g[i]
            A = np.stack(
                [
                    self.T[i, 0] @ gi,
                    self.T[i, 1] @ gi,
                    self.L[i] @ gi,
                ]
            )
            rhs = np.array([0.0, 0.0, 2.0])
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if abs(self.L[i] @ gi @ sol - 2.0) > 1e-6:
                raise ValueError("degenerate cut: cannot normalize the conjugate normal")
            # one-parameter family sol + t L; fix t by the null condition
            norm = sol @ gi @ sol
            t = -norm / 4.0
            Lbar[i] = sol + t * self.L[i]
        return Lbar

    def second_fundamental_forms(self):
        """(tr chi, chihat, tr chibar, chibarhat, induced metric)."""
        Lbar = self.conjugate_normal()
        chi = -np.einsum("nm,nabm->nab", np.einsum("nk,nkm->nm", self.L, self.g), self.cov)
        chibar = -np.einsum("nm,nabm->nab", np.einsum("nk,nkm->nm", Lbar, self.g), self.cov)
        q = self.induced_metric()
        qinv = np.linalg.inv(q)
        trchi = np.einsum("nab,nab->n", qinv, chi)
        trchibar = np.einsum("nab,nab->n", qinv, chibar)
        chihat = chi - 0.5 * q * trchi[:, None, None]
        chibarhat = chibar - 0.5 * q * trchibar[:, None, None]
        return trchi, chihat, trchibar, chibarhat, q


def area_radius(cut: SphereCut):
    """Fourth root of det([pi* round]^{-1}[g]) on gauge-fixed tangents.

    Tangent representatives are f_a d_1 + d_a with f_a chosen orthogonal to
    the null generator; the angular projection differentiates the congruence
    parameterization at fixed affine parameter.
    """
    con = cut.congruence
    n = cut.points.shape[0]
    d = con.delta
    # embedding-derivative columns at the center affine parameter
    s_members = np.repeat(cut.s_star, 9)
    xc, _ = con.traj.interpolate_per_member(s_members)
    xc = xc.reshape(n, 9, 4)
    cols = {
        "th": (xc[:, 7, :] - xc[:, 1, :]) / (2 * d),
        "ph": (xc[:, 5, :] - xc[:, 3, :]) / (2 * d),
    }
    Js = cut.L  # d x / d s

    rout = np.empty(n)
    ghat = np.zeros((2, 2))
    for i in range(n):
        th = cut.points[i, 2]
        ghat[0, 0] = 1.0
        ghat[1, 1] = math.sin(th) ** 2
        gi = cut.g[i]
        va = np.zeros((2, 4))
        for a, coord in enumerate((2, 3)):
            e = np.zeros(4)
            e[coord] = 1.0
            gv = cut.L[i] @ gi
            f_a = -(gv @ e) / gv[1]
            va[a] = e
            va[a, 1] += f_a
        J = np.stack([cols["th"][i], cols["ph"][i], Js[i]], axis=1)  # (4,3)
        gmat = np.empty((2, 2))
        pg = np.empty((2, 2))
        dpi = np.empty((2, 2))
        for a in range(2):
            c, *_ = np.linalg.lstsq(J, va[a], rcond=None)
            dpi[a] = c[:2]
        for a in range(2):
            for b in range(2):
                gmat[a, b] = va[a] @ gi @ va[b]
                pg[a, b] = dpi[a] @ ghat @ dpi[b]
        M = np.linalg.solve(pg, gmat)
        det = np.linalg.det(M)
        if det <= 0:
            raise ValueError("degenerate sphere: non-positive area determinant")
        rout[i] = det**0.25
    return rout


def hawking_mass(metric: MetricField, u, r_coord, quad=(24, 48), s0=None, **kw):
    """Hawking mass of the constant-radius cut of the outgoing cone."""
    th, ph, w = sphere_quadrature(*quad)
    if s0 is None:
        s0 = max(2.5, 0.3 * (2.0 * r_coord + u))
    kw.setdefault("tail_decades", 7.5)
    con = Congruence(metric, u, th, ph, s0=s0, **kw)
    return hawking_mass_of_cut(con.cut(r_coord), w)


def hawking_mass_of_cut(cut: SphereCut, w):
    trchi, _, trchibar, _, q = cut.second_fundamental_forms()
    sin_th = np.sin(cut.points[:, 2])
    dets = np.linalg.det(q)
    if np.any(dets <= 0):
        raise ValueError("degenerate sphere metric")
    area_density = np.sqrt(dets) / sin_th
    area = float(np.sum(w * area_density))
    r_area = math.sqrt(area / (4.0 * math.pi))
    integral = float(np.sum(w * trchi * trchibar * area_density))
    return 0.5 * r_area * (1.0 + integral / (16.0 * math.pi))


# -- news tensors and the mass aspect ----------------------------------------


def real_spherical_harmonic(ell, em):
    Y = sp.Znm(ell, em, TH, PH)
    return sp.simplify(sp.expand_func(Y.rewrite(sp.Ynm)))


def tensor_harmonic(ell, em):
    """Trace-free symmetric spherical 2-tensor from a scalar harmonic."""
    Y = real_spherical_harmonic(ell, em)
    coords = (TH, PH)
    # second covariant derivative on the round sphere
    from .leading_terms import _GHAT_GAMMA

    DD = sp.zeros(2, 2)
    dY = [sp.diff(Y, c) for c in coords]
    for a in range(2):
        for b in range(2):
            e = sp.diff(dY[b], coords[a])
            for c in range(2):
                e -= _GHAT_GAMMA[(c, a, b)] * dY[c]
            DD[a, b] = e
    lap = sum(ROUND_INV[a, b] * DD[a, b] for a in range(2) for b in range(2))
    E = DD - ROUND_METRIC * lap / 2
    return sp.simplify(E)


def news_compatible_field(amplitude, profile, mode=(2, 0), weights=None, with_log=False):
    """Radiating perturbation compatible with the gauge structure.

    The spherical part carries the news; the mixed and long components are
    fixed by the angular and long-direction gauge relations (including the
    quadratic term), so cut geometry reproduces the boundary mass formulas.
    ``profile`` is a sympy expression in the spatial-face defining function.
    """
    from .metrics import Weights, perturbation

    w = weights or Weights(0.45, 0.3, 0.4, -0.1)
    E = tensor_harmonic(*mode)
    A = sp.nsimplify(amplitude) * sp.sympify(profile)
    hmat = A * E
    divh = _sphere_div_tensor(hmat)
    h1b = [sp.simplify(divh[0] / 2), sp.simplify(divh[1] / 2)]
    divdiv = sp.simplify(_sphere_div_vector(divh))
    dA = RHO0**2 * sp.diff(A, RHO0)
    raised = ROUND_INV * E * ROUND_INV
    e2 = sp.simplify(sum(raised[a, b] * E[a, b] for a in range(2) for b in range(2)))
    h11 = sp.simplify(A * divdiv / 2 - A * dA * e2 / 2)
    log_coeff = 0
    if with_log:
        log_coeff = sp.nsimplify(with_log) * (1 + sp.cos(TH) ** 2)
        h11 = h11 + log_coeff * sp.log(RHOI)
    comps = {
        "22": hmat[0, 0],
        "23": hmat[0, 1],
        "33": hmat[1, 1],
        "12": h1b[0],
        "13": h1b[1],
        "11": h11,
    }
    return perturbation(comps, w, log11=log_coeff if with_log else None,
                        label="news-compatible"), log_coeff


@dataclass
class NewsTensor:
    """Separable news: sum of retarded-time profiles times angular tensors."""

    modes: list                     # [(profile callable u -> array, E 2x2 sympy)]
    support: tuple                  # (u_start, u_end)

    def __post_init__(self):
        self._pair_fns = {}
        mats = [m for _, m in self.modes]
        for k, Ek in enumerate(mats):
            tracek = sum(ROUND_INV[a, b] * Ek[a, b] for a in range(2) for b in range(2))
            if sp.simplify(tracek) != 0:
                raise ValueError("news angular part is not trace-free")
            for l, El in enumerate(mats):
                expr = sum(
                    ROUND_INV[a, c] * ROUND_INV[b, d_] * Ek[a, b] * El[c, d_]
                    for a in range(2)
                    for b in range(2)
                    for c in range(2)
                    for d_ in range(2)
                )
                self._pair_fns[(k, l)] = sp.lambdify((TH, PH), expr, modules="numpy")
        self._divdiv = [
            sp.lambdify((TH, PH), _double_divergence(m), modules="numpy")
            for _, m in self.modes
        ]

    def squared_norm(self, u, theta, phi):
        """|N|^2 with round-metric contractions, on (u-grid) x (angular nodes)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        amps = [np.asarray(p(u), dtype=float) for p, _ in self.modes]
        out = np.zeros((len(u), len(theta)))
        for k in range(len(self.modes)):
            for l in range(len(self.modes)):
                ang = np.broadcast_to(self._pair_fns[(k, l)](theta, phi), theta.shape)
                out += np.outer(amps[k] * amps[l], ang)
        return out

    def trace_residual(self, theta, phi):
        total = 0.0
        for _, E in self.modes:
            fn = sp.lambdify((TH, PH), sum(ROUND_INV[a, b] * E[a, b] for a in range(2) for b in range(2)), modules="numpy")
            total = max(total, float(np.max(np.abs(np.broadcast_to(fn(theta, phi), theta.shape)))))
        return total


def _double_divergence(mat):
    """nabla^a nabla^b T_ab on the round sphere, symbolic."""
    div1 = _sphere_div_tensor(mat)          # covariant vector (index down)
    return sp.simplify(_sphere_div_vector(div1))


@dataclass
class BondiReport:
    u: np.ndarray
    mass: np.ndarray              # M_B(u)
    flux: np.ndarray              # E(u)
    budget_residual: np.ndarray
    mass_aspect: np.ndarray       # (n_u, n_nodes)
    theta: np.ndarray
    phi: np.ndarray
    hawking_samples: list = field(default_factory=list)


def evolve_mass_aspect(news: NewsTensor, m, u_grid, quad=(24, 48)) -> BondiReport:
    """Integrate the leading (1,1) transport law through the news flux.

    The mass-aspect density loses |N|^2 at the calibrated coefficient; its
    angular average gives the Bondi mass, whose drop balances the flux
    integral identically on the shared grids.
    """
    u = np.asarray(u_grid, dtype=float)
    if not (u[0] <= news.support[0] and news.support[1] <= u[-1]):
        raise ValueError("news support must lie inside the retarded-time grid")
    th, ph, w = sphere_quadrature(*quad)
    n2 = news.squared_norm(u, th, ph)

    mu = np.zeros_like(n2)
    du = np.diff(u)
    integrand = -MASS_ASPECT_FLUX_COEFF * n2
    mu[1:] = np.cumsum(0.5 * du[:, None] * (integrand[1:] + integrand[:-1]), axis=0)

    # divergence part of the aspect: -1/4 nabla nabla integral of the news
    aspect = m + mu
    amps = [np.asarray(p(u), dtype=float) for p, _ in news.modes]
    for k, (_, _) in enumerate(news.modes):
        cum = np.zeros(len(u))
        cum[1:] = np.cumsum(0.5 * du * (amps[k][1:] + amps[k][:-1]))
        ang = np.broadcast_to(news._divdiv[k](th, ph), th.shape)
        aspect = aspect - 0.25 * np.outer(cum, ang)

    mass = m + (0.25 / math.pi) * (mu @ w)
    flux = (n2 @ w) / (32.0 * math.pi)
    cum_flux = np.zeros(len(u))
    cum_flux[1:] = np.cumsum(0.5 * du * (flux[1:] + flux[:-1]))
    budget = np.abs(mass - mass[0] + cum_flux)
    return BondiReport(u, mass, flux, budget, aspect, th, ph)


def bondi_mass_from_data(log_coeff, h_sphere, m, quad=(24, 48)):
    """Mass aspect and Bondi mass from radiation-face data.

    ``log_coeff`` is the log coefficient of the long-direction component
    (its boundary transport value is -1/2 of it), ``h_sphere`` the 2x2
    spherical part; the double-divergence term integrates to zero.
    """
    th, ph, w = sphere_quadrature(*quad)
    lead = sp.sympify(log_coeff)
    fn = sp.lambdify((TH, PH), lead, modules="numpy")
    transport = -0.5 * np.broadcast_to(np.asarray(fn(th, ph), dtype=float), th.shape)
    divdiv = np.zeros_like(th)
    if h_sphere is not None:
        fn2 = sp.lambdify((TH, PH), _double_divergence_raised(h_sphere), modules="numpy")
        divdiv = np.broadcast_to(np.asarray(fn2(th, ph), dtype=float), th.shape)
    aspect = m + transport - 0.25 * divdiv
    mass = m + (0.25 / math.pi) * float(np.sum(w * transport))
    div_integral = float(np.sum(w * divdiv))
    return aspect, mass, div_integral


def _double_divergence_raised(h_sphere):
    """Double divergence with indices raised: nabla_a nabla_b h^{ab}."""
    mat = sp.Matrix(h_sphere)
    return _double_divergence(mat)


# -- static scattering solutions ----------------------------------------------


def scattering_solution(ell, R):
    """Closed-form static mode solutions on the temporal face."""
    R = np.asarray(R, dtype=float)
    if np.any((R <= 0) | (R >= 1)):
        raise ValueError("the static chart needs 0 < R < 1")
    if np.any(R > 1 - 1e-6):
        import warnings

        warnings.warn("evaluating a static solution within 1e-6 of the pole")
    L = np.log((1.0 - R) / (1.0 + R))
    if ell == 0:
        return L / R
    if ell == 1:
        return L / R**2 + 2.0 / R
    if ell == 2:
        return (3.0 - R**2) / (2.0 * R**3) * L + 3.0 / R**2
    raise ValueError("modes 0, 1, 2 are implemented")


def scattering_operator_residual(ell, R, h=1e-3):
    """Residual of the static mode operator on the closed form, by differences."""

    def u(RR_):
        return scattering_solution(ell, RR_)

    R = float(R)
    pts = np.array([-2, -1, 1, 2]) * h + R
    u0 = u(R)
    up = u(pts)

    def flux(RR_):
        # R^2 (1 - R^2) du/dR by a 4th-order stencil around RR_
        q = np.array([-2, -1, 1, 2]) * h + RR_
        du = (u(q[0]) - 8 * u(q[1]) + 8 * u(q[2]) - u(q[3])) / (12 * h)
        return RR_**2 * (1 - RR_**2) * du

    dflux = (flux(R - 2 * h) - 8 * flux(R - h) + 8 * flux(R + h) - flux(R + 2 * h)) / (12 * h)
    val = -dflux / R**2 + ell * (ell + 1) / R**2 * u0 + 2.0 * u0
    return abs(val)


def scattering_limit_combination(eps_values=(1e-3, 1e-4, 1e-5)):
    """Boundary limit of the quarter/half/quarter combination, extrapolated.

    The combination has an (1-R) log(1-R) approach to its limit; a
    three-point solve in (eps, eps log eps) removes both terms.
    """
    eps = np.asarray(eps_values, dtype=float)
    vals = np.array(
        [
            0.25 * scattering_solution(0, 1 - e)
            - 0.5 * scattering_solution(1, 1 - e)
            + 0.25 * scattering_solution(2, 1 - e)
            for e in eps
        ]
    )
    A = np.stack([np.ones_like(eps), eps * np.log(eps), eps], axis=1)
    coef = np.linalg.solve(A, vals)
    return float(coef[0])
