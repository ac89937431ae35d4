"""Metric fields in the double-null spherical splitting.

The mass-m static metric plus an optional perturbation with prescribed
decay classes is built symbolically in coordinates (q, s, theta, phi) with
the area radius r entering implicitly through r_* = (q - s)/2; the implicit
dependence is differentiated exactly via dr/dr_* = 1 - 2m/r.  All component
values and their first and second coordinate derivatives are compiled to
vectorized numpy callables once per field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .compactify import _mass, inverse_tortoise

Q, S, TH, PH, RR = sp.symbols("q s theta phi r", real=True, positive=False)
RHO0, RHOI = sp.symbols("rho0 rhoI", positive=True)

_COMP_KEYS = ("00", "01", "02", "03", "11", "12", "13", "22", "23", "33")
_IDX = {(0, 0): "00", (0, 1): "01", (0, 2): "02", (0, 3): "03",
        (1, 1): "11", (1, 2): "12", (1, 3): "13",
        (2, 2): "22", (2, 3): "23", (3, 3): "33"}

ROUND_METRIC = sp.Matrix([[1, 0], [0, sp.sin(TH) ** 2]])
ROUND_INV = sp.Matrix([[1, 0], [0, 1 / sp.sin(TH) ** 2]])


def _diff_ops(m):
    """Coordinate derivatives with the implicit radius chained in exactly."""
    drdq = (1 - 2 * m / RR) / 2

    def dq(e):
        return sp.diff(e, Q) + drdq * sp.diff(e, RR)

    def ds(e):
        return sp.diff(e, S) - drdq * sp.diff(e, RR)

    return (dq, ds, lambda e: sp.diff(e, TH), lambda e: sp.diff(e, PH))


@dataclass(frozen=True)
class Weights:
    b0: float = 0.6
    bI: float = 0.3
    bI_prime: float = 0.4
    b_plus: float = -0.1

    def __post_init__(self):
        if not (-0.5 < self.b_plus < 0 < self.bI < self.bI_prime < min(0.5, self.b0)):
            raise ValueError("weights must satisfy -1/2 < b+ < 0 < bI < bI' < min(1/2, b0)")


@dataclass(frozen=True)
class PerturbationField:
    """Rescaled (barred) perturbation components on (rho0, rhoI, theta, phi).

    Keys "00", "01", "0b", "11", "1b", "ab" follow the null/spherical
    splitting; spherical slots are sympy expressions per coordinate pair.
    Missing components are zero.  ``log11`` optionally declares the
    coefficient of log(rhoI) in the (1,1) slot, and ``weights`` declares the
    decay class the field is built to satisfy.
    """

    comps: dict = field(default_factory=dict)
    weights: Weights = Weights()
    log11: object = None
    label: str = "h"

    def expr(self, key):
        return sp.sympify(self.comps.get(key, 0))

    def qs_exprs(self, m):
        """Barred components as expressions in (r, q, s, theta, phi)."""
        m = _mass(m)
        subs = {RHO0: -1 / S, RHOI: -S / RR}
        return {k: self.expr(k).subs(subs) for k in _COMP_KEYS}

    # spherical pieces with indices raised by the round metric
    def spherical_matrix(self):
        return sp.Matrix([[self.expr("22"), self.expr("23")],
                          [self.expr("23"), self.expr("33")]])


def perturbation(comps, weights=None, log11=None, label="h"):
    pf = PerturbationField(dict(comps), weights or Weights(), log11, label)
    # symmetry of the spherical part is implicit in the component keys
    return pf


@dataclass
class MetricEval:
    """Metric data evaluated on a batch of points."""

    q: np.ndarray
    s: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    r: np.ndarray
    g: np.ndarray        # (N, 4, 4)
    dg: np.ndarray       # (N, 4, 4, 4)  index order (kappa, mu, nu)
    d2g: np.ndarray      # (N, 4, 4, 4, 4)

    @property
    def ginv(self):
        return np.linalg.inv(self.g)


class MetricField:
    """The static background of mass m, optionally perturbed."""

    def __init__(self, m, h: PerturbationField | None = None):
        self.m = _mass(m)
        self.h = h
        self._build()

    @staticmethod
    def schwarzschild(m) -> "MetricField":
        return MetricField(m, None)

    def _component_exprs(self):
        m = self.m
        gh = {k: sp.Integer(0) for k in _COMP_KEYS}
        if self.h is not None:
            gh = self.h.qs_exprs(m)
        g = {}
        g["00"] = gh["00"] / RR
        g["01"] = (1 - 2 * m / RR) / 2 + gh["01"] / RR
        g["02"] = gh["02"]
        g["03"] = gh["03"]
        g["11"] = gh["11"] / RR
        g["12"] = gh["12"]
        g["13"] = gh["13"]
        g["22"] = -(RR**2) * ROUND_METRIC[0, 0] + RR * gh["22"]
        g["23"] = -(RR**2) * ROUND_METRIC[0, 1] + RR * gh["23"]
        g["33"] = -(RR**2) * ROUND_METRIC[1, 1] + RR * gh["33"]
        return g

    def _build(self):
        g = self._component_exprs()
        D = _diff_ops(self.m)
        first = {}
        second = {}
        for key, e in g.items():
            for k in range(4):
                first[(k, key)] = D[k](e)
        for key in g:
            for k in range(4):
                for l in range(k, 4):
                    second[(k, l, key)] = D[l](first[(k, key)])

        exprs = [g[k] for k in _COMP_KEYS]
        exprs += [first[(k, key)] for k in range(4) for key in _COMP_KEYS]
        exprs += [second[(k, l, key)] for k in range(4) for l in range(k, 4) for key in _COMP_KEYS]
        self._fn = sp.lambdify((RR, Q, S, TH, PH), exprs, modules="numpy", cse=True)

    def radius(self, q, s):
        rstar = 0.5 * (np.asarray(q, dtype=float) - np.asarray(s, dtype=float))
        return inverse_tortoise(rstar, self.m)

    def at(self, q, s, theta, phi) -> MetricEval:
        q, s, theta, phi = np.broadcast_arrays(
            *(np.atleast_1d(np.asarray(x, dtype=float)) for x in (q, s, theta, phi))
        )
        r = np.atleast_1d(self.radius(q, s))
        vals = self._fn(r, q, s, theta, phi)
        vals = [np.broadcast_to(np.asarray(v, dtype=float), q.shape) for v in vals]
        n = q.shape
        g = np.zeros(n + (4, 4))
        dg = np.zeros(n + (4, 4, 4))
        d2g = np.zeros(n + (4, 4, 4, 4))
        idx_pairs = list(_IDX.keys())
        for i, (mu, nu) in enumerate(idx_pairs):
            g[..., mu, nu] = g[..., nu, mu] = vals[i]
        pos = len(idx_pairs)
        for k in range(4):
            for i, (mu, nu) in enumerate(idx_pairs):
                dg[..., k, mu, nu] = dg[..., k, nu, mu] = vals[pos]
                pos += 1
        for k in range(4):
            for l in range(k, 4):
                for i, (mu, nu) in enumerate(idx_pairs):
                    d2g[..., k, l, mu, nu] = d2g[..., k, l, nu, mu] = vals[pos]
                    d2g[..., l, k, mu, nu] = d2g[..., l, k, nu, mu] = vals[pos]
                    pos += 1
        return MetricEval(q, s, theta, phi, r, g, dg, d2g)


# -- exact closed forms for the unperturbed metric --------------------------


@dataclass
class SchwarzschildExact:
    r: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray     # (N, 4, 4, 4): Gamma^kappa_{mu nu}
    riemann: np.ndarray   # (N, 4, 4, 4, 4): R^kappa_{lambda mu nu}
    ricci: np.ndarray     # (N, 4, 4)


def schwarzschild_exact(r, theta, m) -> SchwarzschildExact:
    """Closed-form connection and curvature of the mass-m metric.

    Components are in the coordinate frame (q, s, theta, phi); the Ricci
    tensor vanishes identically.
    """
    m = _mass(m)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.broadcast_to(np.atleast_1d(np.asarray(theta, dtype=float)), r.shape).copy()
    if np.any(r <= 2 * m) or np.any(r <= 0):
        raise ValueError("need r > 2m and r > 0")
    n = r.shape
    sin, cos = np.sin(theta), np.cos(theta)
    ghat = np.zeros(n + (2, 2))
    ghat[..., 0, 0] = 1.0
    ghat[..., 1, 1] = sin**2

    f = 1.0 - 2.0 * m / r
    gamma = np.zeros(n + (4, 4, 4))
    gamma[..., 0, 0, 0] = m / r**2
    gamma[..., 1, 1, 1] = -m / r**2
    half_f_over_r = 0.5 * f / r
    for c in (2, 3):
        gamma[..., c, 0, c] = gamma[..., c, c, 0] = half_f_over_r
        gamma[..., c, 1, c] = gamma[..., c, c, 1] = -half_f_over_r
    for a in (2, 3):
        for b in (2, 3):
            gamma[..., 0, a, b] = -r * ghat[..., a - 2, b - 2]
            gamma[..., 1, a, b] = r * ghat[..., a - 2, b - 2]
    # round-sphere symbols
    gamma[..., 2, 3, 3] = -sin * cos
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = np.where(sin != 0.0, cos / sin, 0.0)
    gamma[..., 3, 2, 3] = gamma[..., 3, 3, 2] = cot

    riem = np.zeros(n + (4, 4, 4, 4))

    def put(k, lam, mu, nu, val):
        riem[..., k, lam, mu, nu] += val
        riem[..., k, lam, nu, mu] -= val

    mr3f = m / r**3 * f
    put(0, 0, 0, 1, -mr3f)
    put(1, 1, 0, 1, mr3f)
    for b in (2, 3):
        for d in (2, 3):
            gh = ghat[..., b - 2, d - 2]
            put(0, b, 0, d, -m / r * gh)
            put(1, b, 1, d, -m / r * gh)
    for a in (2, 3):
        put(a, 0, 1, a, -0.5 * mr3f)
        put(a, 1, 0, a, -0.5 * mr3f)
    # spherical block: R^a_{bcd} = 2 m / r (delta^a_c ghat_bd - delta^a_d ghat_bc)
    for a in (2, 3):
        for b in (2, 3):
            for c in (2, 3):
                for d in (2, 3):
                    val = 2.0 * m / r * (
                        (1.0 if a == c else 0.0) * ghat[..., b - 2, d - 2]
                        - (1.0 if a == d else 0.0) * ghat[..., b - 2, c - 2]
                    )
                    riem[..., a, b, c, d] = val

    ricci = np.zeros(n + (4, 4))
    return SchwarzschildExact(r, theta, gamma, riem, ricci)


# -- manufactured perturbations --------------------------------------------


def manufactured_suite(weights: Weights | None = None):
    """Closed-form perturbations inside the admissible decay classes.

    Each field decays like rho0^b0 at the spatial face; good components
    carry rhoI^bI', the remaining remainders rhoI^bI, and the (1,1) slot of
    the last fields carries a log term.
    """
    w = weights or Weights()
    a0 = RHO0 ** sp.nsimplify(w.b0)
    aI = RHOI ** sp.nsimplify(w.bI)
    aIp = RHOI ** sp.nsimplify(w.bI_prime)
    ct, st, cp = sp.cos(TH), sp.sin(TH), sp.cos(PH)

    fields = [
        perturbation({"11": a0 * sp.sqrt(RHOI)}, w, label="h11-sqrt"),
        perturbation({"00": a0 * aIp * (1 + ct**2 / 2)}, w, label="h00-good"),
        perturbation(
            {"01": a0 * (1 + aI * (2 + ct)), "00": a0 * aIp},
            w,
            label="h01-leading",
        ),
        perturbation(
            {
                "22": a0 * (1 + aI) * st**2 * cp,
                "33": -a0 * (1 + aI) * st**4 * cp,
                "23": a0 * (sp.Rational(1, 2) + aI) * st**3,
            },
            w,
            label="hab-tracefree",
        ),
        perturbation(
            {"12": a0 * (1 + 2 * aI) * st, "13": a0 * (1 - aI) * st**2, "01": a0 * (2 + aI)},
            w,
            label="h1b-leading",
        ),
        perturbation(
            {
                "11": a0 * (-sp.log(RHOI) + 1 + aI),
                "01": a0 * (1 + aI),
                "22": a0 * (1 + aI) * st**2,
                "33": -a0 * (1 + aI) * st**4,
                "00": a0 * aIp * ct,
            },
            w,
            log11=a0,
            label="mixed-log",
        ),
    ]
    return fields


def rate_saturating_field(weights: Weights | None = None, amplitude=0.05):
    """Perturbation whose components saturate their decay classes.

    The long-range slot is built from the product of the two corner defining
    functions, so its outgoing-null derivative gains an order; this mimics
    the improvement the gauge condition enforces and lets null geodesics
    pick up velocity corrections at the class rates.
    """
    w = weights or Weights(b0=0.45, bI=0.3, bI_prime=0.4, b_plus=-0.1)
    amp = sp.nsimplify(amplitude)
    a0 = amp * RHO0 ** sp.nsimplify(w.b0)
    aI = RHOI ** sp.nsimplify(w.bI)
    st, ct = sp.sin(TH), sp.cos(TH)
    long_range = amp * (RHO0 * RHOI) ** sp.nsimplify(max(w.b0, w.bI_prime))
    return perturbation(
        {
            "00": long_range * (1 + ct / 3),
            "01": a0 * aI * (2 + ct),
            "11": a0 * (1 + aI),
            "12": a0 * (1 + aI) * st / 2,
            "22": a0 * (1 + aI) * st**2 / 2,
            "33": -a0 * (1 + aI) * st**4 / 2,
        },
        w,
        label="rate-saturating",
    )
