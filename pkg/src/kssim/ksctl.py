"""
Command-line entry point: profile / spectrum / evolve / check / sweep.

Configuration comes from an optional JSON file (keys mirroring the
subcommand options) with flags taking precedence.  All outputs are UTF-8
CSV/JSON under the output directory, plus a manifest with the config hash;
identical config + seed reproduces identical bytes (timestamp confined to
the manifest).  KSSIM_THREADS bounds the sweep worker pool.
"""

from __future__ import annotations

import json
import os
import sys as _sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import bounds, checks, dynamics, io, linops
from .numgrid import ModelParams, PlanarGrid, make_radial_grid, min_r_max
from .profiles import closed_form_limit, profile_mass, solve_profile


def _load_config(path: str | None, section: str) -> dict:
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise click.ClickException(f"config file {path}: {e}") from e
    if not isinstance(cfg, dict):
        raise click.ClickException(f"config file {path}: top level must be an object")
    merged = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    merged.update(cfg.get(section, {}))
    return merged


def _resolve(cfg: dict, flags: dict, defaults: dict) -> dict:
    """Flags win over config values win over defaults."""
    out = dict(defaults)
    for key, val in cfg.items():
        if key in out:
            out[key] = val
    for key, val in flags.items():
        if val is not None:
            out[key] = val
    return out


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; flags override its values.")
@click.option("--out", "out_dir", type=click.Path(), default="out",
              help="Output directory.")
@click.pass_context
def main(ctx, config_path, out_dir):
    """Self-similar chemotaxis laboratory."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["out"] = Path(out_dir)


def _profile_csv(path, prof):
    rows = zip(prof.grid.r, prof.P, prof.dP, prof.lapP, prof.Q)
    io.write_csv(path, "profile",
                 {"mu": prof.params.mu, "eps": prof.params.eps,
                  "r_max": prof.grid.r_max, "n": prof.grid.n,
                  "residual": prof.residual, "iterations": prof.iterations},
                 ["r", "P", "dP", "lapP", "Q"], rows)


@main.command()
@click.option("--mu", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--r-max", "r_max", type=float, default=None)
@click.option("--n", type=int, default=None)
@click.option("--check-bounds/--no-check-bounds", "check_bounds", default=None)
@click.option("--alpha", type=float, default=None)
@click.pass_context
def profile(ctx, **flags):
    """Solve the steady profile; write profile.csv (+ bound reports)."""
    cfg = _load_config(ctx.obj["config_path"], "profile")
    opt = _resolve(cfg, flags, {"mu": 1.0, "eps": 0.02, "r_max": None,
                                "n": 4000, "check_bounds": False, "alpha": 0.95})
    t0 = time.perf_counter()
    try:
        params = ModelParams(mu=opt["mu"], eps=opt["eps"])
    except Exception as e:
        raise click.ClickException(f"invalid parameters: {e}") from e
    r_max = opt["r_max"] or max(min_r_max(opt["mu"]), 10.0)
    grid = make_radial_grid(r_max, opt["n"])
    prof = solve_profile(params, grid)
    out = ctx.obj["out"]
    _profile_csv(out / "profile.csv", prof)
    failed = []
    if opt["check_bounds"]:
        limit = closed_form_limit(grid)
        sandwich = bounds.check_profile_sandwich(prof, limit, opt["alpha"])
        uniform = bounds.check_uniform_bounds(prof)
        io.write_json(out / "reports" / "sandwich.json", sandwich.as_dict())
        io.write_json(out / "reports" / "uniform_bounds.json", uniform.as_dict())
        # persisted envelope curves so figure generation never computes them
        mu, alpha = params.mu, opt["alpha"]
        env_lo = limit.Q * np.exp(-mu * grid.r**2 / 2.0)
        env_hi = limit.Q * np.exp(-mu * (1.0 - alpha) * grid.r**2 / 2.0)
        io.write_csv(out / "envelopes.csv", "envelopes",
                     {"mu": mu, "eps": params.eps, "alpha": alpha},
                     ["r", "Q_limit", "Q_lower", "Q_upper"],
                     zip(grid.r, limit.Q, env_lo, env_hi))
        failed = [r.ineq for r in (sandwich, uniform) if not r.passed]
    io.write_manifest(out, {"profile": opt}, time.perf_counter() - t0)
    click.echo(f"profile: mass = {profile_mass(prof):.6f}, "
               f"residual = {prof.residual:.3e}")
    if failed:
        raise click.ClickException("failed checks: " + ", ".join(failed))


def _parse_modes(spec: str) -> list:
    if ".." in spec:
        a, b = spec.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in spec.split(",") if x != ""]


@main.command()
@click.option("--mu", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--k", type=float, default=None)
@click.option("--modes", type=str, default=None, help="e.g. 0..3 or 0,1,2")
@click.option("--n", type=int, default=None)
@click.option("--deflate-m0/--no-deflate-m0", "deflate", default=None)
@click.pass_context
def spectrum(ctx, **flags):
    """Angular-block spectra; write spectra.csv + spectra_meta.json."""
    cfg = _load_config(ctx.obj["config_path"], "spectrum")
    opt = _resolve(cfg, flags, {"mu": 1.0, "eps": 0.02, "k": 4.0,
                                "modes": "0..3", "n": 1500, "deflate": True})
    t0 = time.perf_counter()
    params = ModelParams(mu=opt["mu"], eps=opt["eps"], k=opt["k"])
    sys = linops.build_system(params, linops.default_planar_grid(opt["mu"], 64))
    rows, meta_modes = [], {}
    for m in _parse_modes(opt["modes"]):
        opm = linops.assemble_mode_operator(
            m, sys, make_radial_grid(sys.prof.grid.r_max, opt["n"]))
        rep = linops.spectrum(opm, deflate=(m == 0 and opt["deflate"]))
        rows.extend(rep.as_rows())
        meta_modes[str(m)] = {"gap": rep.gap, "deflated": rep.deflated}
    out = ctx.obj["out"]
    io.write_csv(out / "spectra.csv", "spectra",
                 {"mu": opt["mu"], "eps": opt["eps"], "k": opt["k"], "n": opt["n"]},
                 ["m", "re", "im"], rows)
    io.write_json(out / "spectra_meta.json",
                  {"modes": meta_modes, "mu": opt["mu"], "eps": opt["eps"]})
    io.write_manifest(out, {"spectrum": opt}, time.perf_counter() - t0)
    click.echo("spectrum: gaps " + ", ".join(
        f"m={m}: {v['gap']:.4f}" for m, v in meta_modes.items()))


def _trajectory_csv(path, traj, meta):
    cols = ["t", "l2k_g", "h1k_g", "hdots_w", "hdot1_w", "hdot2_w",
            "x_norm", "y_norm", "mass_g"]
    rows = zip(traj.times, traj.series("l2k"), traj.series("h1k"),
               traj.series("hdots"), traj.series("hdot1"), traj.series("hdot2"),
               traj.series("x_norm"), traj.series("y_norm"), traj.mass_g)
    io.write_csv(path, "trajectory", meta, cols, rows)


@main.command()
@click.option("--mu", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--k", type=float, default=None)
@click.option("--s", type=float, default=None)
@click.option("--amplitude", type=float, default=None)
@click.option("--t-end", "t_end", type=float, default=None)
@click.option("--dt", type=float, default=None)
@click.option("--scheme", type=click.Choice(["imex-euler", "imex-bdf2"]), default=None)
@click.option("--linear/--nonlinear", "linear", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--grid-n", "grid_n", type=int, default=None)
@click.pass_context
def evolve(ctx, **flags):
    """Integrate the perturbation system; write trajectory.csv + decay fit."""
    cfg = _load_config(ctx.obj["config_path"], "evolve")
    opt = _resolve(cfg, flags, {"mu": 1.0, "eps": 0.02, "k": 4.0, "s": 0.5,
                                "amplitude": 1e-3, "t_end": 10.0, "dt": 2e-3,
                                "scheme": "imex-euler", "linear": False,
                                "seed": 2024, "grid_n": 128})
    t0 = time.perf_counter()
    params = ModelParams(mu=opt["mu"], eps=opt["eps"], k=opt["k"], s=opt["s"])
    grid = linops.dynamics_grid(opt["mu"], opt["grid_n"])
    sys = linops.build_system(params, grid)
    st0 = dynamics.make_initial_state(grid, params, seed=opt["seed"],
                                      amplitude=opt["amplitude"])
    ecfg = dynamics.EvolveConfig(dt=opt["dt"], t_end=opt["t_end"],
                                 scheme=opt["scheme"], linear_only=opt["linear"],
                                 record_every=max(1, int(round(0.05 / opt["dt"]))))
    traj = dynamics.evolve(st0, sys, ecfg)
    out = ctx.obj["out"]
    meta = {k: opt[k] for k in ("mu", "eps", "k", "s", "amplitude", "t_end",
                                "dt", "scheme", "linear", "seed", "grid_n")}
    meta["stable"] = traj.stable
    _trajectory_csv(out / "trajectory.csv", traj, meta)
    fit_payload = {"stable": traj.stable, "blowup_time": traj.blowup_time,
                   "boundary_alarm": traj.boundary_alarm}
    if traj.stable:
        fit = dynamics.fit_decay(traj, (opt["t_end"] / 5.0, opt["t_end"]))
        fit_payload.update({"rate": fit.rate, "intercept": fit.intercept,
                            "window": list(fit.window), "residual": fit.residual,
                            "valid": fit.valid})
        click.echo(f"evolve: fitted X-norm rate {fit.rate:.4f} "
                   f"(residual {fit.residual:.3f})")
    else:
        click.echo(f"evolve: blow-up at t = {traj.blowup_time}")
    io.write_json(out / "decay_fit.json", fit_payload)
    io.write_manifest(out, {"evolve": meta}, time.perf_counter() - t0)


@main.command()
@click.option("--suite", "suites", multiple=True,
              type=click.Choice(sorted(checks.SUITES)),
              help="Suites to run (default: all).")
@click.option("--mu", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.pass_context
def check(ctx, suites, mu, eps):
    """Run verification suites; nonzero exit when any check fails."""
    cfg = _load_config(ctx.obj["config_path"], "check")
    selected = list(suites) or list(cfg.get("suites", [])) or sorted(checks.SUITES)
    out = ctx.obj["out"]
    t0 = time.perf_counter()
    failed = []
    for name in selected:
        kwargs = {}
        if mu is not None:
            kwargs["mu"] = mu
        if eps is not None and name not in ("profile", "sandwich", "epsrates",
                                            "identities"):
            kwargs["eps"] = eps
        res = checks.SUITES[name](**kwargs)
        io.write_json(out / "reports" / f"{name}.json", res.as_dict())
        status = "PASS" if res.passed else "FAIL"
        click.echo(f"{status} {name} ({res.duration_s:.1f} s)")
        if not res.passed:
            failed.append(name)
        if name == "epsrates":
            dev = res.details["deviations"]
            rows = zip(res.details["eps_list"], dev["gradP"], dev["lapP"],
                       dev["Q"], dev["gradQ"])
            io.write_csv(out / "epsconv.csv", "epsconv",
                         {"mu": mu if mu is not None else 1.0,
                          "slopes": res.details["slopes"]},
                         ["eps", "dev_gradP", "dev_lapP", "dev_Q", "dev_gradQ"],
                         rows)
    io.write_manifest(out, {"check": {"suites": selected}},
                      time.perf_counter() - t0)
    if failed:
        raise click.ClickException("failing checks: " + ", ".join(failed))


def _sweep_point(task: dict) -> dict:
    mu, eps = task["mu"], task["eps"]
    row = {"mu": mu, "eps": eps, "k": task["k"], "s": task["s"],
           "mass": np.nan, "sandwich_pass": False, "alpha": task["alpha"],
           "decay_rate": np.nan, "status": "ok", "error": ""}
    for m in task["modes"]:
        row[f"gap_m{m}"] = np.nan
    try:
        params = ModelParams(mu=mu, eps=eps, k=task["k"], s=task["s"])
        rgrid = make_radial_grid(max(min_r_max(mu), 10.0), task["n_profile"])
        prof = solve_profile(params, rgrid)
        row["mass"] = profile_mass(prof)
        rep = bounds.check_profile_sandwich(prof, closed_form_limit(rgrid),
                                            task["alpha"])
        row["sandwich_pass"] = rep.passed
        sys = linops.build_system(params, linops.default_planar_grid(mu, 64))
        for m in task["modes"]:
            opm = linops.assemble_mode_operator(
                m, sys, make_radial_grid(sys.prof.grid.r_max, task["n_eig"]))
            row[f"gap_m{m}"] = linops.spectrum(opm, deflate=(m == 0)).gap
        if task["with_evolve"]:
            grid = linops.dynamics_grid(mu, task["evolve_n"])
            sys_e = linops.build_system(params, grid, prof=sys.prof)
            st0 = dynamics.make_initial_state(grid, params, seed=task["seed"],
                                              amplitude=task["amplitude"])
            dt = min(0.1 * eps, 0.002)
            cfg = dynamics.EvolveConfig(dt=dt, t_end=task["t_end"],
                                        record_every=max(1, int(round(0.05 / dt))))
            traj = dynamics.evolve(st0, sys_e, cfg)
            if traj.stable:
                fit = dynamics.fit_decay(traj, (task["t_end"] / 5.0, task["t_end"]))
                row["decay_rate"] = fit.rate
            else:
                row["status"] = "blowup"
    except Exception as e:  # never a silent gap: carry the error text
        row["status"] = "error"
        row["error"] = f"{type(e).__name__}: {e}"
    return row


@main.command()
@click.option("--mu", "mu_list", type=str, default=None, help="comma list")
@click.option("--eps", "eps_list", type=str, default=None, help="comma list")
@click.option("--k", type=float, default=None)
@click.option("--s", type=float, default=None)
@click.option("--modes", type=str, default=None)
@click.option("--with-evolve/--no-evolve", "with_evolve", default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def sweep(ctx, **flags):
    """Parameter sweep over the (mu, eps) lattice; one CSV row per point."""
    cfg = _load_config(ctx.obj["config_path"], "sweep")
    opt = _resolve(cfg, flags, {"mu_list": "0.5,1,2", "eps_list": "0.005,0.01,0.02",
                                "k": 4.0, "s": 0.5, "modes": "0,1",
                                "with_evolve": True, "seed": 2024})
    t0 = time.perf_counter()
    mus = [float(x) for x in str(opt["mu_list"]).split(",")]
    epss = [float(x) for x in str(opt["eps_list"]).split(",")]
    modes = _parse_modes(opt["modes"])
    tasks = [{"mu": mu, "eps": eps, "k": opt["k"], "s": opt["s"], "alpha": 0.95,
              "modes": modes, "n_profile": 2000, "n_eig": 800,
              "with_evolve": opt["with_evolve"], "evolve_n": 64, "t_end": 4.0,
              "seed": opt["seed"], "amplitude": 1e-3}
             for mu in mus for eps in epss]
    workers = int(os.environ.get("KSSIM_THREADS", "0")) or min(4, os.cpu_count() or 1)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    cols = (["mu", "eps", "k", "s", "mass", "sandwich_pass", "alpha"]
            + [f"gap_m{m}" for m in modes] + ["decay_rate", "status", "error"])
    out = ctx.obj["out"]
    io.write_csv(out / "sweep.csv", "sweep",
                 {"modes": modes, "with_evolve": opt["with_evolve"]},
                 cols, ([r[c] for c in cols] for r in rows))
    io.write_manifest(out, {"sweep": opt}, time.perf_counter() - t0)
    bad = [r for r in rows if r["status"] != "ok"]
    click.echo(f"sweep: {len(rows)} points, {len(bad)} not ok")
    if bad:
        _sys.exit(1)


if __name__ == "__main__":
    main()
