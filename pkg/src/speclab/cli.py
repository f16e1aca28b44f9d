"""Scenario runner: configure a grid/potential pair, run a named pipeline,
persist JSON reports and CSV scans.

Subcommands: threshold, invert, evolve, ftscan, full, fixtures.
Exit codes: 0 success, 2 assertion failure (a configured check did not
hold), 3 configuration error.  Reports embed the full tolerance set and the
grid metadata, carry no wall-clock data, and use fixed key order, so
identical scenario files produce byte-identical JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import birman, evolution, ftdiag, grids, jordan, lowenergy, potentials
from .grids import GridFunction, Mode

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_ASSERT = 2
EXIT_CONFIG = 3


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


class CheckFailure(AssertionError):
    """A configured acceptance check did not hold."""


# ---------------------------------------------------------------------------
# Potential library

def builtin_potential(name, params, grid):
    """Sampled builtin potential plus metadata on the PotentialSpec.

    Families: exact_eigen(s >= 2, tuned coupling, known eigenfunction in
    spec.metadata), gaussian_well(depth, width), complex_perturbed(base
    builtin, gamma, width).
    """
    params = dict(params or {})
    p = float(params.pop("p", 1.4))
    q = float(params.pop("q", 2.0))
    if name == "exact_eigen":
        s = float(params.pop("s", 2.0))
        if s < 2.0:
            raise ConfigError(f"exact_eigen requires s >= 2, got {s}")
        _reject_extra(name, params)
        raw = potentials.exact_eigen(grid, s=s, p=p, q=q)
        tuned, c, info = potentials.tune_coupling(raw, grid)
        tuned.metadata.update(
            s=s, coupling=[c.real, c.imag], eigenfunction=info["state"]
        )
        return tuned
    if name == "gaussian_well":
        depth = float(params.pop("depth", 4.0))
        width = float(params.pop("width", 1.0))
        _reject_extra(name, params)
        spec = potentials.gaussian_well(grid, depth=depth, width=width, p=p, q=q)
        spec.metadata.update(depth=depth, width=width)
        return spec
    if name == "complex_perturbed":
        gamma = float(params.pop("gamma", 0.3))
        width = float(params.pop("width", 1.0))
        base_cfg = params.pop("base", None)
        _reject_extra(name, params)
        base = None
        if base_cfg is not None:
            base = builtin_potential(
                base_cfg.get("name", "gaussian_well"),
                base_cfg.get("params", {}),
                grid,
            )
        spec = potentials.complex_perturbed(
            grid, base=base, gamma=gamma, width=width, p=p, q=q
        )
        spec.metadata.update(gamma=gamma, width=width)
        return spec
    raise ConfigError(f"unknown builtin potential {name!r}")


def _reject_extra(name, params):
    if params:
        raise ConfigError(f"unknown parameters for {name}: {sorted(params)}")


# ---------------------------------------------------------------------------
# Configuration

_MODES = {"radial_swave": Mode.RADIAL_SWAVE, "box3d": Mode.BOX3D}

_DEFAULT_TOLERANCES = {
    "identity_residual": 1e-6,
    "one_sided_residual": 1e-9,
    "verdict_tol_res": 1e-2,
}


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    for key in ("grid", "potential"):
        if key not in cfg:
            raise ConfigError(f"config is missing the {key!r} section")
    return cfg


def make_scenario_grid(cfg, grid_scale=1):
    gspec = cfg["grid"]
    mode = gspec.get("mode", "radial_swave")
    if mode not in _MODES:
        raise ConfigError(f"unknown grid mode {mode!r}")
    extent = float(gspec.get("extent", 20.0))
    nodes = int(gspec.get("nodes", 200))
    if extent <= 0 or nodes <= 0:
        raise ConfigError("grid extent and node count must be positive")
    return grids.make_grid(_MODES[mode], extent, nodes * int(grid_scale))


def make_scenario_potential(cfg, grid):
    pspec = cfg["potential"]
    if "builtin" in pspec:
        return builtin_potential(pspec["builtin"], pspec.get("params", {}), grid)
    if "samples_file" in pspec:
        path = pspec["samples_file"]
        if not os.path.exists(path):
            raise ConfigError(f"samples file not found: {path}")
        vals = np.loadtxt(path, dtype=complex)
        if vals.shape != (grid.size,):
            raise ConfigError(
                f"samples file holds {vals.shape} values, grid has {grid.size}"
            )
        return birman.PotentialSpec(
            os.path.basename(path), GridFunction(grid, vals),
            float(pspec.get("p", 1.4)), float(pspec.get("q", 2.0)),
        )
    raise ConfigError("potential needs either 'builtin' or 'samples_file'")


def _tolerances(cfg):
    tol = dict(_DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    for key, val in tol.items():
        if not (isinstance(val, (int, float)) and val > 0):
            raise ConfigError(f"tolerance {key!r} must be positive")
    return tol


def _grid_metadata(grid):
    side = grid.size if grid.mode is Mode.RADIAL_SWAVE else round(grid.size ** (1 / 3))
    return {
        "mode": grid.mode.value,
        "extent": float(grid.extent),
        "nodes": int(side),
        "spacing": float(grid.spacing),
    }


def _default_bump(grid):
    """L1-normalized origin-centered Gaussian bump profile."""
    prof = np.exp(-grid.radii**2)
    vals = prof * grid.radii if grid.mode is Mode.RADIAL_SWAVE else prof
    f = GridFunction(grid, vals.astype(complex))
    return GridFunction(grid, f.values / grids.profile_lp_norm(f, 1))


# ---------------------------------------------------------------------------
# Pipelines (each returns a report dict; CheckFailure on violated gates)

def run_threshold(cfg, grid, V, rng, out_dir=None):
    tol = _tolerances(cfg)
    report = jordan.threshold_report(V, grid, tol_res=tol["verdict_tol_res"])
    out = {
        "pipeline": "threshold",
        "potential": V.name,
        "grid": _grid_metadata(grid),
        "tolerances": tol,
        "dims": report["dims"],
        "verdicts": report["verdicts"],
        "c0": report["c0"],
    }
    expected = cfg.get("threshold", {}).get("expect_verdicts")
    if expected is not None and report["verdicts"] != expected:
        raise CheckFailure(
            f"verdicts {report['verdicts']} != expected {expected}"
        )
    expected_dim = cfg.get("threshold", {}).get("expect_dim_X1")
    if expected_dim is not None:
        got = report["dims"][0] if report["dims"] else 0
        if got != expected_dim:
            raise CheckFailure(f"dim X1 = {got} != expected {expected_dim}")
    return out


def run_invert(cfg, grid, V, rng, out_dir=None):
    tol = _tolerances(cfg)
    section = cfg.get("invert", {})
    lambdas = [float(l) for l in section.get("lambdas", [0.03, 0.1, 0.2])]
    window = section.get("window", "auto")
    basis = jordan.build_threshold_basis(V, grid)
    reg = lowenergy.build_S0(V, grid, basis, window=window)
    residuals = {
        "one_sided_S0": lowenergy.one_sided_residual(reg, 0.0),
        "range_constraint": lowenergy.range_constraint_residual(reg),
    }
    per_lambda = []
    for lam in lambdas:
        per_lambda.append({
            "lambda": lam,
            "chain": max(
                (r["rel"] for r in
                 lowenergy.chain_identity_residual(V, grid, basis, lam)),
                default=0.0,
            ),
            "telescope": max(
                (r["rel"] for r in
                 lowenergy.telescope_residual(V, grid, basis, lam)),
                default=0.0,
            ),
            "exact_inverse": max(
                (r["scaled"] for r in
                 lowenergy.exact_inverse_residual(V, grid, basis, lam)),
                default=0.0,
            ),
        })
    out = {
        "pipeline": "invert",
        "potential": V.name,
        "grid": _grid_metadata(grid),
        "tolerances": tol,
        "window": reg.window,
        "dims": {str(k): v for k, v in basis.multiplicities.items()},
        "residuals": residuals,
        "per_lambda": per_lambda,
    }
    if out_dir is not None and basis.dim > 0:
        f_adm = _admissible_probe(reg, grid, rng)
        f_gen = _default_bump(grid)
        scan_lams = np.array(lambdas)
        lowenergy.low_energy_scan(
            reg, V, grid, scan_lams, f_adm, f_gen,
            path=os.path.join(out_dir, "low_energy_scan.csv"),
        )
    for key in ("one_sided_S0", "range_constraint"):
        if residuals[key] > tol["one_sided_residual"]:
            raise CheckFailure(f"{key} residual {residuals[key]:.3e}")
    for row in per_lambda:
        for key in ("chain", "telescope", "exact_inverse"):
            if row[key] > tol["identity_residual"]:
                raise CheckFailure(
                    f"{key} residual {row[key]:.3e} at lambda={row['lambda']}"
                )
    return out


def _admissible_probe(reg, grid, rng):
    """Random probe with all bilinear pairings against the chain basis removed.

    The self-dual antidiagonal Gram pattern makes psi_{k+1-j,k} the dual
    partner of psi_{j,k}, so subtracting pair(f, psi_{j,k}) psi_{k+1-j,k}
    leaves f orthogonal to the whole generalized eigenspace.
    """
    basis = reg.basis
    vals = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    f = GridFunction(grid, vals)
    for (j, k, ell) in basis.labels:
        coef = grids.bilinear_pair(f, basis.vectors[(j, k, ell)])
        f = GridFunction(
            grid, f.values - coef * basis.vectors[(k + 1 - j, k, ell)].values
        )
    return f


def run_evolve(cfg, grid, V, rng, out_dir=None):
    tol = _tolerances(cfg)
    section = cfg.get("evolve", {})
    t0 = float(section.get("t_start", 2.0))
    t1 = float(section.get("t_end", 8.0))
    n_times = int(section.get("n_times", 10))
    k_max = section.get("k_max")
    times = np.linspace(t0, t1, n_times)
    plan = evolution.make_plan(V, grid, times, k_max=k_max, T_fit_min=t0)
    f = _default_bump(grid)
    P = None
    if section.get("project", False):
        basis = jordan.build_threshold_basis(V, grid)
        P = jordan.build_Ppp(
            V, grid, basis=basis,
            delta_im=float(section.get("delta_im", 1e-3)),
        )
    report = evolution.dispersive_scan(plan, f, P)
    out = {
        "pipeline": "evolve",
        "potential": V.name,
        "grid": _grid_metadata(grid),
        "tolerances": tol,
        "projected": P is not None,
        "exponent": report["exponent"],
        "stderr": report["stderr"],
        "fit_window": report["fit_window"],
        "T_max": report["T_max"],
    }
    if out_dir is not None:
        evolution.write_decay_csv(report, os.path.join(out_dir, "decay_scan.csv"))
    gate = section.get("expect_exponent")
    if gate is not None:
        center, width = float(gate[0]), float(gate[1])
        if abs(report["exponent"] - center) > width:
            raise CheckFailure(
                f"decay exponent {report['exponent']:.4f} outside "
                f"{center} +/- {width}"
            )
    return out


def run_ftscan(cfg, grid, V, rng, out_dir=None):
    tol = _tolerances(cfg)
    section = cfg.get("ftscan", {})
    window = section.get("window", "HIGH").upper()
    if window not in ("HIGH", "MID", "LOW"):
        raise ConfigError(f"unknown transform window {window!r}")
    params = {
        "n": int(section.get("n", 256)),
        "lam_max": float(section.get("lam_max", 8.0)),
        "lambda1": float(section.get("lambda1", 1.0)),
        "r": float(section.get("r", 0.25)),
    }
    if "cap" in section:
        params["cap"] = float(section["cap"])
    f = _default_bump(grid)
    if section.get("project", False):
        basis = jordan.build_threshold_basis(V, grid)
        if basis.dim > 0:
            P0 = jordan.build_P0(basis, grid)
            f = GridFunction(grid, f.values - P0.effective @ f.values)
    scan = ftdiag.t_hat_l1_scan(V, grid, f, window, params)
    out = {
        "pipeline": "ftscan",
        "potential": V.name,
        "grid": _grid_metadata(grid),
        "tolerances": tol,
        "window": window,
        "params": params,
        "total": scan.total,
        "verdict": scan.verdict,
    }
    if out_dir is not None:
        scan.to_csv(os.path.join(out_dir, f"ftscan_{window.lower()}.csv"))
    if section.get("expect_verdict") is not None:
        if scan.verdict != section["expect_verdict"]:
            raise CheckFailure(
                f"transform verdict {scan.verdict} != {section['expect_verdict']}"
            )
    return out


def run_full(cfg, grid, V, rng, out_dir=None):
    """Threshold classification, inversion residuals, transform scan, and the
    dispersive-decay measurement, in order, on one scenario."""
    report = {
        "pipeline": "full",
        "potential": V.name,
        "grid": _grid_metadata(grid),
        "tolerances": _tolerances(cfg),
        "stages": {},
    }
    report["stages"]["threshold"] = run_threshold(cfg, grid, V, rng)
    report["stages"]["invert"] = run_invert(cfg, grid, V, rng, out_dir)
    report["stages"]["ftscan"] = run_ftscan(cfg, grid, V, rng, out_dir)
    report["stages"]["evolve"] = run_evolve(cfg, grid, V, rng, out_dir)
    return report


_PIPELINES = {
    "threshold": run_threshold,
    "invert": run_invert,
    "evolve": run_evolve,
    "ftscan": run_ftscan,
    "full": run_full,
}


# ---------------------------------------------------------------------------
# Fixture scenario files

_FIXTURE_SCENARIOS = {
    "threshold_exact_eigen": {
        "schema_version": SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 20.0, "nodes": 200},
        "potential": {"builtin": "exact_eigen", "params": {"s": 2.0}},
        "threshold": {"expect_dim_X1": 1, "expect_verdicts": ["EIGENVALUE"]},
    },
    "evolve_free": {
        "schema_version": SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 40.0, "nodes": 800},
        "potential": {"builtin": "gaussian_well", "params": {"depth": 0.0}},
        "evolve": {
            "t_start": 2.0, "t_end": 6.4, "n_times": 10, "k_max": 2.5,
            "expect_exponent": [-1.5, 0.1],
        },
    },
    "invert_exact_eigen": {
        "schema_version": SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 2.25, "nodes": 225},
        "potential": {"builtin": "exact_eigen", "params": {"s": 2.0}},
        "invert": {"lambdas": [0.03, 0.1, 0.2], "window": 0.25},
    },
    "full_exact_eigen": {
        "schema_version": SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 80.0, "nodes": 1600},
        "potential": {"builtin": "exact_eigen", "params": {"s": 2.0}},
        "threshold": {"expect_dim_X1": 1, "expect_verdicts": ["EIGENVALUE"]},
        "invert": {"lambdas": [0.0002, 0.0005], "window": "auto"},
        "ftscan": {"window": "HIGH", "n": 128, "lam_max": 8.0,
                   "expect_verdict": "OK"},
        "evolve": {
            "t_start": 2.5, "t_end": 8.0, "n_times": 10, "k_max": 4.0,
            "project": True, "expect_exponent": [-1.5, 0.15],
        },
    },
    "ftscan_well_high": {
        "schema_version": SCHEMA_VERSION,
        "grid": {"mode": "radial_swave", "extent": 20.0, "nodes": 200},
        "potential": {"builtin": "gaussian_well",
                      "params": {"depth": 4.0, "width": 1.0}},
        "ftscan": {"window": "HIGH", "n": 256, "lam_max": 8.0,
                   "expect_verdict": "OK"},
    },
}


def emit_fixtures(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in sorted(_FIXTURE_SCENARIOS):
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(_FIXTURE_SCENARIOS[name], fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# Entry point

def build_parser():
    parser = argparse.ArgumentParser(
        prog="speclab",
        description="Threshold/inversion/evolution scenario runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*_PIPELINES, "fixtures"):
        p = sub.add_parser(name)
        if name != "fixtures":
            p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--grid-scale", type=int, choices=(1, 2), default=1)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "fixtures":
        out_dir = args.out or "fixtures"
        for path in emit_fixtures(out_dir):
            print(path)
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        grid = make_scenario_grid(cfg, args.grid_scale)
        V = make_scenario_potential(cfg, grid)
        rng = np.random.default_rng(args.seed)
        if args.out is not None:
            os.makedirs(args.out, exist_ok=True)
        report = _PIPELINES[args.command](cfg, grid, V, rng, args.out)
        report["seed"] = args.seed
        report["grid_scale"] = args.grid_scale
        payload = json.dumps(report, indent=2, sort_keys=True, default=_json_default)
        if args.out is not None:
            with open(os.path.join(args.out, f"{args.command}_report.json"), "w") as fh:
                fh.write(payload + "\n")
        print(payload)
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERT


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


if __name__ == "__main__":
    sys.exit(main())
