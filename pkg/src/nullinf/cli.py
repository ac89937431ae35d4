"""Configuration-driven experiment runner and CSV emitter.

Subcommands run the module pipelines on plain key=value configs, write
plot-ready CSVs plus a check report, and exit 0/1/2 for success, failed
checks, or config and IO errors.  Reruns with the same config are
byte-identical.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np


class ConfigError(Exception):
    pass


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def emit_csv(header, rows, path: Path):
    """Write one table: header, then rows at 17 significant digits."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


@dataclass
class Check:
    name: str
    expected: object
    got: object
    tolerance: float
    passed: bool


class RunReport:
    def __init__(self, name):
        self.name = name
        self.checks: list[Check] = []

    def add(self, name, expected, got, tolerance):
        expected_f = float(expected)
        got_f = float(got)
        passed = abs(got_f - expected_f) <= tolerance
        self.checks.append(Check(name, expected_f, got_f, tolerance, passed))
        return passed

    def add_bound(self, name, got, bound):
        got_f = float(got)
        self.checks.append(Check(name, 0.0, got_f, bound, abs(got_f) <= bound))

    def add_exact(self, name, expected, got):
        self.checks.append(Check(name, expected, got, 0.0, expected == got))

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def rows(self):
        return [
            (c.name, _fmt(c.expected), _fmt(c.got), c.tolerance, "pass" if c.passed else "fail")
            for c in self.checks
        ]


# -- config handling ----------------------------------------------------------


def parse_config(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


SCHEMAS = {
    "index-sets": {"truncation": "4"},
    "model-pde": {
        "gamma": "0.5",
        "ell": "0",
        "eps": "0.1",
        "rho_min": "1e-5",
        "points_per_decade": "16",
        "forcing_amplitude": "1.0",
        "forcing_center": "0.01",
        "exponent_rel_tol": "0.10",
    },
    "geodesics": {
        "mass": None,
        "x1bar": "-30.0",
        "theta": "1.1",
        "phi": "0.7",
        "s0": "20.0",
        "null_norm_tol": "1e-8",
        "component_drift_tol": "1e-10",
    },
    "bondi": {
        "mass": None,
        "news_amplitude": "1.0",
        "news_center": "-5.0",
        "news_width": "1.0",
        "u_start": "-18.0",
        "u_end": "8.0",
        "u_samples": "601",
        "quad_theta": "16",
        "quad_phi": "24",
        "budget_tol": "1e-6",
    },
    "verify-appendix": {
        "mass": None,
        "rho0": "0.1",
        "window_low": "1e-4",
        "window_high": "1e-2",
        "slack": "0.1",
    },
}


def resolve_options(subcommand, raw: dict) -> dict:
    schema = SCHEMAS[subcommand]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s) for {subcommand}: {', '.join(unknown)}")
    out = {}
    for key, default in schema.items():
        if key in raw:
            out[key] = raw[key]
        elif default is None:
            raise ConfigError(f"missing required config key for {subcommand}: {key}")
        else:
            out[key] = default
    return out


# -- subcommand pipelines -------------------------------------------------------


def run_index_sets(opts, outdir: Path) -> RunReport:
    from . import indexsets as ix

    trunc = Fraction(opts["truncation"])
    report = RunReport("index-sets")

    cases = {
        "schwartz": (ix.IndexSet.empty(trunc), True),
        "taylor-ladder": (ix.IndexSet.single(1, 0, trunc), True),
        "taylor-plain": (ix.IndexSet.single(1, 0, trunc), False),
    }
    expected = {
        ("schwartz", "radiation"): {0: 1, 1: 4, 2: 7, 3: 10},
        ("schwartz", "radiation-good"): {1: 2, 2: 5, 3: 8},
        ("schwartz", "temporal"): {0: 0, 1: 6, 2: 15, 3: 27},
        ("taylor-ladder", "radiation"): {0: 1, 1: 6, 2: 14, 3: 25},
        ("taylor-ladder", "radiation-good"): {1: 3, 2: 9, 3: 18},
        ("taylor-ladder", "temporal"): {0: 0, 1: 8, 2: 24, 3: 51},
        ("taylor-plain", "radiation"): {0: 1, 1: 6, 2: 11, 3: 16},
        ("taylor-plain", "radiation-good"): {1: 3, 2: 8, 3: 13},
        ("taylor-plain", "temporal"): {0: 0, 1: 8, 2: 21, 3: 39},
    }
    for label, (seed, flag) in cases.items():
        res = ix.solve_index_recursion(seed, trunc, include_elog_prime=flag)
        sets = {
            "spatial": res.e0,
            "radiation": res.ei,
            "radiation-good": res.ei_prime,
            "radiation-bounded": res.ei_bar,
            "temporal": res.eplus,
        }
        for name, s in sets.items():
            (outdir / f"indexset_{label}_{name}.txt").write_text(ix.serialize(s))
            want = expected.get((label, name))
            if want is None:
                continue
            for p, k in want.items():
                if Fraction(p) >= trunc:
                    continue
                got = s.log_bound(p)
                report.add_exact(f"{label}/{name}/power-{p}", k, got)
    return report


def run_model_pde(opts, outdir: Path) -> RunReport:
    from . import modelpde as mp

    report = RunReport("model-pde")
    gamma = float(opts["gamma"])
    grid = mp.CharacteristicGrid(
        eps=float(opts["eps"]),
        rho0_min=float(opts["rho_min"]),
        rhoI_min=float(opts["rho_min"]),
        points_per_decade=int(opts["points_per_decade"]),
        ell=int(opts["ell"]),
    )
    amp = float(opts["forcing_amplitude"])
    center = float(opts["forcing_center"])

    def bump(x, c, width):
        z = np.log(np.asarray(x, dtype=float) / c) / 1.2
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = np.exp(-(z[inside] ** 2) / (1.0 - z[inside] ** 2) / width)
        return out

    forcing = lambda r0, rI: amp * bump(r0, 2e-2, 0.6) * bump(rI, center, 0.4)
    sol = mp.solve_damped_mode(grid, gamma, forcing)

    rows = []
    for i, r0 in enumerate(grid.rho0):
        for j, rI in enumerate(grid.rhoI):
            rows.append((r0, rI, grid.ell, "u", sol.u[i, j]))
            rows.append((r0, rI, grid.ell, "w", sol.w[i, j]))
    emit_csv(("rho0", "rhoI", "l", "component", "value"), rows, outdir / "modelpde_solution.csv")

    fit = sol.leading_fit("const", rho0_value=0.05)
    fit_log = sol.leading_fit("log+const", rho0_value=0.05)
    emit_csv(
        ("component", "c_log", "c0", "exponent", "residual"),
        [
            ("u", 0.0, fit.c0, fit.exponent if fit.exponent is not None else 0.0, fit.residual),
            ("u-logmodel", fit_log.c_log, fit_log.c0, 0.0, fit_log.residual),
        ],
        outdir / "modelpde_summary.csv",
    )
    if gamma > 0:
        report.add("decay-exponent", gamma, fit.exponent, float(opts["exponent_rel_tol"]) * gamma)
    else:
        report.add_bound("leading-term-present", 1.0 / max(abs(fit.c0), 1e-300), 1e6)
    return report


def run_geodesics(opts, outdir: Path) -> RunReport:
    from .geodesics import integrate_radial_null_geodesic
    from .metrics import MetricField

    report = RunReport("geodesics")
    metric = MetricField(float(opts["mass"]))
    traj = integrate_radial_null_geodesic(
        metric,
        float(opts["x1bar"]),
        np.array([float(opts["theta"]), float(opts["phi"])]),
        s0=float(opts["s0"]),
    )
    nn = traj.null_norm(metric)
    rows = [
        (traj.s[i], *traj.x[i], *traj.v[i], nn[i])
        for i in range(len(traj.s))
    ]
    emit_csv(
        ("s", "x0", "x1", "x2", "x3", "v0", "v1", "v2", "v3", "nullnorm"),
        rows,
        outdir / "trajectory.csv",
    )
    report.add_bound("null-norm", np.max(np.abs(nn)), float(opts["null_norm_tol"]))
    drift = max(
        np.max(np.abs(traj.x[:, 1] - float(opts["x1bar"]))),
        np.max(np.abs(traj.x[:, 2] - float(opts["theta"]))),
        np.max(np.abs(traj.x[:, 3] - float(opts["phi"]))),
    )
    report.add_bound("component-drift", drift, float(opts["component_drift_tol"]))
    return report


def run_bondi(opts, outdir: Path) -> RunReport:
    from . import bondi as bd

    report = RunReport("bondi")
    m = float(opts["mass"])
    amp = float(opts["news_amplitude"])
    center = float(opts["news_center"])
    width = float(opts["news_width"])
    u = np.linspace(float(opts["u_start"]), float(opts["u_end"]), int(opts["u_samples"]))

    def profile(uu):
        uu = np.asarray(uu, dtype=float)
        z = (uu - center) / width
        return amp * np.exp(-(z**2)) * (np.abs(z) < 10.0)

    news = bd.NewsTensor(
        [(profile, bd.tensor_harmonic(2, 0))],
        (center - 10.0 * width, center + 10.0 * width),
    )
    rep = bd.evolve_mass_aspect(
        news, m, u, quad=(int(opts["quad_theta"]), int(opts["quad_phi"]))
    )
    emit_csv(
        ("u", "M_B", "E", "budget_residual"),
        list(zip(rep.u, rep.mass, rep.flux, rep.budget_residual)),
        outdir / "bondi_report.csv",
    )
    report.add_bound("mass-loss-budget", np.max(rep.budget_residual), float(opts["budget_tol"]))
    report.add("initial-mass", m, rep.mass[0], 0.0)
    if amp == 0.0:
        report.add_bound("mass-constant", np.ptp(rep.mass), 0.0)
    return report


def run_verify_appendix(opts, outdir: Path) -> RunReport:
    from .leading_terms import excess_decay_slopes
    from .metrics import manufactured_suite

    report = RunReport("verify-appendix")
    m = float(opts["mass"])
    rows = []
    for h in manufactured_suite():
        results = excess_decay_slopes(
            h,
            m,
            rho0=float(opts["rho0"]),
            window=(float(opts["window_low"]), float(opts["window_high"])),
            slack=float(opts["slack"]),
        )
        for c in results:
            rows.append(
                (
                    c.line_id,
                    h.label,
                    c.max_abs_diff,
                    c.leading_scale,
                    c.slope if math.isfinite(c.slope) else 99.0,
                    "pass" if c.passed else "fail",
                )
            )
            report.add_bound(
                f"{h.label}/{c.line_id}",
                0.0 if c.passed else max(c.required - c.slope, 1.0),
                0.0,
            )
    emit_csv(
        ("line_id", "point", "numeric", "leading_formula", "fitted_excess_decay", "pass"),
        rows,
        outdir / "appendix_lines.csv",
    )
    return report


RUNNERS = {
    "index-sets": run_index_sets,
    "model-pde": run_model_pde,
    "geodesics": run_geodesics,
    "bondi": run_bondi,
    "verify-appendix": run_verify_appendix,
}


def _write_report(report: RunReport, outdir: Path):
    emit_csv(
        ("name", "expected", "got", "tolerance", "pass"),
        report.rows(),
        outdir / f"report_{report.name}.csv",
    )


def run(subcommand, config_path, outdir, jobs=1) -> int:
    """Execute one subcommand (or ``all``); returns the process exit code."""
    try:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        raw = parse_config(Path(config_path)) if config_path else {}
        names = list(RUNNERS) if subcommand == "all" else [subcommand]
        options = {name: resolve_options(name, raw if subcommand != "all" else _slice_config(raw, name)) for name in names}
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2

    reports = []

    def one(name):
        return RUNNERS[name](options[name], outdir)

    try:
        if jobs > 1 and len(names) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                reports = list(pool.map(one, names))
        else:
            reports = [one(name) for name in names]
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2

    ok = True
    for report in reports:
        _write_report(report, outdir)
        for c in report.checks:
            status = "pass" if c.passed else "FAIL"
            print(f"[{report.name}] {status} {c.name}: got {_fmt(c.got)} (expected {_fmt(c.expected)} +- {c.tolerance:g})")
        ok = ok and report.passed
    return 0 if ok else 1


def _slice_config(raw: dict, name: str) -> dict:
    prefix = name.replace("-", "_") + "."
    out = {}
    for key, value in raw.items():
        if key.startswith(prefix):
            out[key[len(prefix):]] = value
        elif "." not in key and key in SCHEMAS[name]:
            out[key] = value
    return out


def list_checks():
    lines = []
    for name, schema in SCHEMAS.items():
        keys = ", ".join(f"{k}{'' if v is not None else ' (required)'}" for k, v in schema.items())
        lines.append(f"{name}: config keys: {keys}")
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="nullinf",
        description="Experiment runner for the compactified null-infinity toolkit.",
    )
    parser.add_argument("subcommand", choices=[*RUNNERS, "all"])
    parser.add_argument("--config", default=None, help="plain key=value config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--list-checks", action="store_true")
    args = parser.parse_args(argv)
    if args.list_checks:
        print(list_checks())
        return 0
    return run(args.subcommand, args.config, args.out, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
