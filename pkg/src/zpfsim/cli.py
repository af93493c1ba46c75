"""Command-line entry point: one subcommand per experiment.

Every run writes its artifacts into an output directory and finishes by
writing `manifest.json` (config echo, code version, master seed, wall
time).  The manifest doubles as a completion marker: a directory that
contains files but no manifest is treated as debris from an interrupted
run and is never overwritten.  Reruns over a completed directory are
allowed and, for identical config and seed, reproduce every artifact
byte for byte (the manifest's wall time excluded).
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .boost import boost_spectrum_check
from .config import EXPERIMENTS, RunConfig, parse_config
from .dynamics import SedConfig, integrate_trajectory, lane_realization, run_ensemble, stationary_report
from .errors import ConfigurationError
from .field import build_mode_set, estimate_spectrum, realization_to_csv, sample_vacuum_amplitudes
from .oracles import GaussianWignerParams, QuantumMoments
from .wigner import (
    HamiltonianSpec,
    WignerGrid,
    cfl_limit,
    evolve_wigner,
    expectation,
    gaussian_grid,
    grid_from_binary,
    grid_from_csv,
    grid_to_binary,
    grid_to_csv,
    hbar_scaling_study,
)

MANIFEST_NAME = "manifest.json"


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _json_text(payload, compact: bool = False) -> str:
    data = _jsonable(payload)
    if compact:
        return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _resolve_workers(cfg: RunConfig) -> int:
    n = cfg["workers"]
    if n == 0:
        n = int(os.environ.get("ZPF_WORKERS", "1"))
    if n < 1:
        raise ConfigurationError(f"workers must be >= 1, got {n}")
    return n


def _sed_config(cfg: RunConfig, workers: int) -> SedConfig:
    return SedConfig(
        unit_system=cfg.unit_system(),
        potential=cfg.potential(),
        omega_min=cfg["omega_min"],
        omega_max=cfg["omega_max"],
        n_modes=cfg["n_modes"],
        dt=cfg["dt"],
        t_end=cfg["t_end"],
        t_burn=cfg["t_burn"],
        n_trajectories=cfg["n_trajectories"],
        strategy=cfg["strategy"],
        rr_model=cfg["rr_model"],
        x0=cfg["x0"],
        p0=cfg["p0"],
        init_sampler=cfg["init_sampler"],
        stride=cfg["stride"],
        workers=workers,
    )


def _trajectory_csv(traj) -> str:
    buf = io.StringIO()
    buf.write("t,x,p\n")
    for t, x, p in zip(traj.t, traj.x, traj.p):
        buf.write(f"{float(t)!r},{float(x)!r},{float(p)!r}\n")
    return buf.getvalue()


def _run_sample_field(cfg: RunConfig) -> dict:
    seed = cfg["seed"]
    units = cfg.unit_system()
    modes = build_mode_set(
        cfg["omega_min"], cfg["omega_max"], cfg["n_modes"], units,
        strategy=cfg["strategy"], seed=seed,
    )
    realization = sample_vacuum_amplitudes(modes, seed)
    spectrum = estimate_spectrum(realization, cfg["duration"], cfg["dt"])
    pg = io.StringIO()
    pg.write("omega,power\n")
    for w, s in zip(spectrum.omega, spectrum.power):
        pg.write(f"{float(w)!r},{float(s)!r}\n")
    summary = {
        "fit_exponent": spectrum.fit_exponent,
        "fit_stderr": spectrum.fit_stderr,
        "n_segments": spectrum.n_segments,
        "fit_lo": spectrum.fit_lo,
        "fit_hi": spectrum.fit_hi,
        "band_power": modes.band_power(),
        "mean_amplitude_sq": float(np.mean(realization.amplitude_sq())),
    }
    print(
        f"fit_exponent = {spectrum.fit_exponent:.4f} +/- {spectrum.fit_stderr:.4f} "
        f"over {spectrum.n_segments} segments"
    )
    return {
        "realization.csv": realization_to_csv(realization),
        "periodogram.csv": pg.getvalue(),
        "spectrum.json": _json_text(summary, compact=True),
    }


def _run_sed(cfg: RunConfig) -> dict:
    workers = _resolve_workers(cfg)
    sed = _sed_config(cfg, workers)
    stats = run_ensemble(sed, cfg["seed"])
    artifacts = {"ensemble_stats.json": _json_text(stats)}
    for k in range(cfg["n_record"]):
        traj = integrate_trajectory(sed, lane_realization(sed, cfg["seed"], k))
        artifacts[f"trajectory_{k}.csv"] = _trajectory_csv(traj)
    print(
        f"var_x = {stats.var_x:.4f} +/- {stats.se_var_x:.4f}; "
        f"var_p = {stats.var_p:.4f} +/- {stats.se_var_p:.4f}; "
        f"mean_energy = {stats.mean_energy:.4f} +/- {stats.se_mean_energy:.4f} "
        f"({stats.n_trajectories - stats.n_failed}/{stats.n_trajectories} trajectories)"
    )
    return artifacts


def _initial_grid(cfg: RunConfig) -> WignerGrid:
    path = cfg["initial_grid"]
    if path:
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[:1] == b"#":
            return grid_from_csv(blob.decode("utf-8"))
        return grid_from_binary(blob)
    params = GaussianWignerParams(
        mean_x=cfg["mean_x"], mean_p=cfg["mean_p"],
        var_x=cfg["sigma_x"] ** 2, var_p=cfg["sigma_p"] ** 2,
    )
    return gaussian_grid(
        params, (cfg["x_min"], cfg["x_max"]), (cfg["p_min"], cfg["p_max"]),
        cfg["n_x"], cfg["n_p"],
    )


def _run_evolve_wigner(cfg: RunConfig) -> dict:
    grid = _initial_grid(cfg)
    ham = HamiltonianSpec(cfg["mass"], cfg.potential(), cfg["hbar"])
    t_final = cfg["t_final"]
    dt = cfg["dt"]
    if dt <= 0.0:
        dt = 0.9 * cfl_limit(grid, ham)
    n_steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    dt = t_final / n_steps
    final = evolve_wigner(grid, ham, cfg["order"], dt, n_steps)
    summary = {
        "order": cfg["order"],
        "dt": dt,
        "n_steps": n_steps,
        "t_final": t_final,
        "norm_drift": final.diagnostics["norm_drift"],
        "min_w": float(final.diagnostics["min_w_trace"].min()),
        "mean_x": expectation(final, {(1, 0): 1.0}),
        "mean_p": expectation(final, {(0, 1): 1.0}),
        "var_x": None,
        "var_p": None,
    }
    mx, mp = summary["mean_x"], summary["mean_p"]
    summary["var_x"] = expectation(final, {(2, 0): 1.0}) - mx * mx
    summary["var_p"] = expectation(final, {(0, 2): 1.0}) - mp * mp
    artifacts = {
        "final_grid.csv": grid_to_csv(final),
        "evolution.json": _json_text(summary),
    }
    if cfg["write_binary"]:
        artifacts["final_grid.bin"] = grid_to_binary(final)
    print(
        f"evolved {n_steps} steps of dt = {dt:.6g} at order {cfg['order']}; "
        f"norm drift {summary['norm_drift']:.2e}"
    )
    return artifacts


def _run_hbar_scaling(cfg: RunConfig) -> dict:
    dt = cfg["dt"] if cfg["dt"] > 0.0 else None
    report = hbar_scaling_study(
        cfg.potential(),
        cfg["hbar_values"],
        cfg["t_final"],
        mass=cfg["mass"],
        x_span=(cfg["x_min"], cfg["x_max"]),
        p_span=(cfg["p_min"], cfg["p_max"]),
        n_x=cfg["n_x"],
        n_p=cfg["n_p"],
        mean=(cfg["mean_x"], cfg["mean_p"]),
        sigma=(cfg["sigma_x"], cfg["sigma_p"]),
        dt=dt,
    )
    rows = io.StringIO()
    rows.write("hbar,distance\n")
    for h, d in zip(report.hbar_values, report.distances):
        rows.write(f"{h!r},{d!r}\n")
    print(f"scaling slope = {report.slope:.4f} +/- {report.stderr:.4f}")
    return {
        "scaling.csv": rows.getvalue(),
        "scaling.json": _json_text(report),
    }


def _run_check_lorentz(cfg: RunConfig) -> dict:
    report = boost_spectrum_check(
        cfg["spectral_exponent"],
        cfg["beta"],
        cfg["n_samples"],
        omega_min=cfg["omega_min"],
        omega_max=cfg["omega_max"],
        n_bins=cfg["n_bins"],
        seed=cfg["seed"],
    )
    rows = io.StringIO()
    rows.write("omega,density_rest,density_boosted\n")
    for w, a, b in zip(report.bin_centers, report.density_before, report.density_after):
        rows.write(f"{float(w)!r},{float(a)!r},{float(b)!r}\n")
    summary = {
        "spectral_exponent": report.spectral_exponent,
        "beta": report.beta,
        "n_samples": report.n_samples,
        "exponent_before": report.exponent_before,
        "exponent_after": report.exponent_after,
        "exponent_drift": abs(report.exponent_after - report.exponent_before),
        "amplitude_ratio": report.amplitude_ratio,
        "forward_backward_ratio": report.forward_backward_ratio,
        "invariant": report.invariant,
    }
    print(
        f"exponent {report.exponent_before:.3f} -> {report.exponent_after:.3f}, "
        f"amplitude ratio {report.amplitude_ratio:.4f}, invariant: {report.invariant}"
    )
    return {
        "boost_report.csv": rows.getvalue(),
        "boost.json": _json_text(summary, compact=True),
    }


def _oracle_for(cfg: RunConfig) -> QuantumMoments:
    pot = cfg.potential()
    units = cfg.unit_system()
    c = pot.coefficients
    deg = pot.degree
    lower = c[:deg] if deg > 0 else c
    if deg == 2 and all(v == 0.0 for v in lower):
        omega = math.sqrt(2.0 * c[2] / units.mass)
        return QuantumMoments.from_oscillator(units.mass, omega, units.hbar)
    if deg == 4 and all(v == 0.0 for v in lower):
        return QuantumMoments.from_quartic(c[4], units.hbar, mass=units.mass)
    raise ConfigurationError(
        "no closed-form quantum oracle for this potential; `compare` supports "
        "pure harmonic (c2 x^2) and pure quartic (c4 x^4) wells"
    )


def _run_compare(cfg: RunConfig) -> dict:
    workers = _resolve_workers(cfg)
    sed = _sed_config(cfg, workers)
    oracle = _oracle_for(cfg)
    stats = run_ensemble(sed, cfg["seed"])
    report = stationary_report(stats, oracle, tolerance=cfg["tolerance"])
    rows = io.StringIO()
    rows.write("name,simulated,stderr,reference,rel_deviation,significance\n")
    for r in report.rows:
        rows.write(
            f"{r.name},{r.simulated!r},{r.stderr!r},{r.reference!r},"
            f"{r.rel_deviation!r},{r.significance!r}\n"
        )
    for r in report.rows:
        print(
            f"{r.name}: {r.simulated:.4f} vs {r.reference:.4f} "
            f"({r.rel_deviation:+.2%}, {r.significance:+.1f} sigma)"
        )
    print(f"verdict: {'agree' if report.agree else 'disagree'} at {report.tolerance:.0%}")
    return {
        "ensemble_stats.json": _json_text(stats),
        "comparison.csv": rows.getvalue(),
        "comparison.json": _json_text(report),
    }


_RUNNERS = {
    "sample-field": _run_sample_field,
    "run-sed": _run_sed,
    "evolve-wigner": _run_evolve_wigner,
    "hbar-scaling": _run_hbar_scaling,
    "check-lorentz": _run_check_lorentz,
    "compare": _run_compare,
}


def _prepare_out_dir(cfg: RunConfig) -> str:
    out_dir = cfg["out_dir"] or f"zpfsim_{cfg.experiment.replace('-', '_')}"
    if os.path.isdir(out_dir):
        entries = os.listdir(out_dir)
        if entries and MANIFEST_NAME not in entries:
            raise ConfigurationError(
                f"output directory {out_dir} contains files but no "
                f"{MANIFEST_NAME}; refusing to overwrite what may be an "
                "interrupted run (clean it up first)"
            )
        stale = os.path.join(out_dir, MANIFEST_NAME)
        if os.path.exists(stale):
            os.remove(stale)
    elif os.path.exists(out_dir):
        raise ConfigurationError(f"output path {out_dir} exists and is not a directory")
    else:
        os.makedirs(out_dir)
    return out_dir


def run(cfg: RunConfig) -> int:
    """Execute one configured experiment and write its artifacts."""
    out_dir = _prepare_out_dir(cfg)
    t0 = time.monotonic()
    try:
        artifacts = _RUNNERS[cfg.experiment](cfg)
    except Exception as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        with open(os.path.join(out_dir, "error.json"), "w", encoding="utf-8") as fh:
            fh.write(_json_text(record))
        raise
    for name, payload in sorted(artifacts.items()):
        path = os.path.join(out_dir, name)
        if isinstance(payload, bytes):
            with open(path, "wb") as fh:
                fh.write(payload)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(payload)
    manifest = {
        "experiment": cfg.experiment,
        "version": __version__,
        "seed": cfg["seed"],
        "wall_time_s": round(time.monotonic() - t0, 3),
        "config": {k: _jsonable(v) for k, v in sorted(cfg.values.items())},
        "artifacts": sorted(artifacts),
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write(_json_text(manifest))
    print(f"wrote {len(artifacts) + 1} files to {out_dir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zpfsim",
        description="Zero-point field sampling, stochastic trajectories, and "
        "phase-space evolution experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out-dir", help="output directory (overrides config)")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            dest="overrides",
            metavar="KEY=VALUE",
            help="override any config key; repeatable",
        )
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out_dir:
        overrides.append(f"out_dir={args.out_dir}")
    try:
        cfg = parse_config(args.config, overrides, experiment=args.command)
        return run(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports all failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
