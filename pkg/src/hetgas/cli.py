"""Command-line runner.

Subcommands: simulate, predict, inverse, stats, splitting, scenario.
Exit codes: 0 success, 2 configuration error, 3 convergence failure,
4 insufficient statistics. Each failure prints a one-line machine-parsable
diagnostic on stderr: `hetgas: error code=<n> kind=<kind> msg=<message>`.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import energy, equilibrium, inverse, minimizer, stats
from .config import ConfigError, ScenarioConfig, apply_overrides, load_preset, preset_names
from .gasmodel import Configuration, GasSpec, WeightSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_STATISTICS = 4


class ConvergenceError(RuntimeError):
    pass


def _fail(code: int, kind: str, msg: str) -> int:
    msg = " ".join(str(msg).split())
    print(f"hetgas: error code={code} kind={kind} msg={msg}", file=sys.stderr)
    return code


def _load_config(args) -> ScenarioConfig:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        doc = load_preset(args.preset).to_dict()
    elif args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        doc = json.loads(path.read_text())
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    else:
        raise ConfigError("one of --preset or --config is required")
    if args.override:
        doc = apply_overrides(doc, args.override)
    cfg = ScenarioConfig.from_dict(doc)
    if args.seed is not None:
        cfg.run["seed"] = int(args.seed)
    if args.out is not None:
        cfg.output["directory"] = str(args.out)
    return cfg


def _outdir(cfg: ScenarioConfig) -> Path:
    out = Path(cfg.output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header_meta: dict, columns: dict) -> None:
    """Delimited output with `# key=value` metadata lines and a header row."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with open(path, "w") as fh:
        for k, v in header_meta.items():
            fh.write(f"# {k}={v}\n")
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def _write_checkpoint(path: Path, config: Configuration, meta: dict) -> None:
    cols = {"q": config.charges}
    for j in range(config.d):
        cols[f"x{j + 1}"] = config.positions[:, j]
    _write_csv(path, meta, cols)


def _run_replicas(cfg: ScenarioConfig, spec: GasSpec, threads: int):
    sched = cfg.build_schedule()
    n = int(cfg.run["n"])
    seed = int(cfg.run["seed"])
    replicas = int(cfg.run["replicas"])
    stratified = bool(cfg.run["stratified"])

    def one(k):
        return minimizer.minimize(spec, n, schedule=sched, seed=seed + k,
                                  stratified=stratified)

    if threads > 1 and replicas > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(replicas)))
    else:
        results = [one(k) for k in range(replicas)]
    bad = [k for k, r in enumerate(results) if not r.converged]
    if bad:
        raise ConvergenceError(
            f"replica(s) {bad} did not reach the residual tolerance "
            f"(worst residual {max(results[k].residual for k in bad):.3e})")
    return results


def _png(cfg: ScenarioConfig) -> bool:
    return "png" in cfg.output["formats"]


# ---- subcommands ---------------------------------------------------------

def cmd_simulate(cfg: ScenarioConfig, threads: int) -> int:
    from . import plotting
    spec = cfg.build_gas_spec()
    out = _outdir(cfg)
    results = _run_replicas(cfg, spec, threads)
    for k, res in enumerate(results):
        meta = {"scenario": cfg.name, "replica": k,
                "seed": int(cfg.run["seed"]) + k, "n": res.config.n,
                "d": res.config.d, "residual": f"{res.residual:.6e}"}
        _write_checkpoint(out / f"checkpoint_{k}.csv", res.config, meta)
        if "npz" in cfg.output["formats"]:
            np.savez_compressed(out / f"checkpoint_{k}.npz",
                                positions=res.config.positions,
                                charges=res.config.charges)
        _write_csv(out / f"trace_{k}.csv", meta,
                   {"step": res.energy_trace[:, 0],
                    "energy": res.energy_trace[:, 1],
                    "residual": res.energy_trace[:, 2],
                    "beta": res.energy_trace[:, 3]})
        if _png(cfg):
            plotting.plot_configuration(res.config, out / f"config_{k}.png",
                                        title=cfg.name)
            plotting.plot_energy_trace(res.energy_trace, out / f"trace_{k}.png",
                                       title=cfg.name)
    return EXIT_OK


def cmd_predict(cfg: ScenarioConfig, threads: int) -> int:
    spec = cfg.build_gas_spec()
    out = _outdir(cfg)
    pred = equilibrium.predict(spec)
    meta = {"scenario": cfg.name, "kind": type(pred).__name__}
    if isinstance(pred, equilibrium.ShellLayout):
        _write_csv(out / "shells.csv", meta, {
            "q": [s.charge for s in pred.shells],
            "fraction": [s.fraction for s in pred.shells],
            "r_inner": [s.r_inner for s in pred.shells],
            "r_outer": [s.r_outer for s in pred.shells],
            "density": [s.density for s in pred.shells],
        })
        prof = pred.to_profile()
    elif isinstance(pred, equilibrium.EquilibriumProfile):
        prof = pred
    else:  # PartialPrediction for non-monotone g
        raise equilibrium.WrongRegimeError(
            "non-monotone weight: no closed-form profile; only level-set "
            "admissibility is defined")
    r, rho, rho_q, q_of_r = prof.tabulate()
    _write_csv(out / "profile.csv", {**meta, "R": f"{prof.R:.12g}",
                                     "flag": prof.flag},
               {"r": r, "rho": rho, "rho_q": rho_q,
                "q_of_r": np.nan_to_num(q_of_r)})
    if _png(cfg):
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(5.5, 4))
        ax.plot(r, rho, label="rho")
        ax.plot(r, rho_q, label="rho_q")
        ax.set_xlabel("r")
        ax.legend()
        fig.savefig(out / "profile.png", dpi=130, bbox_inches="tight")
        plt.close(fig)
    return EXIT_OK


def _resolve_target(name_or_path: str, d: int) -> inverse.RadialTarget:
    if name_or_path == "fig7":
        return inverse.RadialTarget.fig7(d)
    if name_or_path == "parabolic":
        return inverse.RadialTarget.parabolic(d)
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(
            f"target '{name_or_path}' is neither a preset (fig7, parabolic) "
            "nor a readable CSV file")
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=0, ndmin=2)
    return inverse.RadialTarget.tabulated(data[:, 0], data[:, 1], d=d,
                                          name=path.stem)


def cmd_inverse(cfg: ScenarioConfig, threads: int, target_name: str,
                roundtrip: bool) -> int:
    out = _outdir(cfg)
    d = int(cfg.gas["d"])
    weight = cfg.build_weight()
    target = _resolve_target(target_name, d)
    curve, nu = inverse.design_charge_density(target, weight, d)
    _write_csv(out / "nu.csv", {"scenario": cfg.name, "target": target.name,
                                "q_min": f"{curve.q_min:.12g}",
                                "q_max": f"{curve.q_max:.12g}"},
               {"q": nu.q_grid, "nu": nu.nu_grid})
    meta = {"target": target.name, "q_min": curve.q_min, "q_max": curve.q_max,
            "mass": curve.mass,
            "predicted_sup_error": inverse.predicted_profile_error(
                target, weight, d, nu)}
    if roundtrip:
        report = inverse.verify_roundtrip(
            target, weight, d, n=int(cfg.run["n"]), seed=int(cfg.run["seed"]),
            replicas=int(cfg.run["replicas"]), schedule=cfg.build_schedule(),
            bins=int(cfg.analysis["bins"]))
        meta.update(rms_deviation=report.rms_deviation,
                    sup_deviation=report.sup_deviation,
                    ordering=report.ordering)
    (out / "inverse_report.json").write_text(json.dumps(meta, indent=2))
    if _png(cfg):
        from . import plotting
        plotting.plot_charge_density(nu.q_grid, nu.nu_grid,
                                     out / "nu.png", title=target.name)
    return EXIT_OK


def cmd_stats(cfg: ScenarioConfig, threads: int) -> int:
    from . import plotting
    spec = cfg.build_gas_spec()
    out = _outdir(cfg)
    results = _run_replicas(cfg, spec, threads)
    configs = [r.config for r in results]
    wanted = cfg.analysis["observables"]
    meta = {"scenario": cfg.name, "replicas": len(configs),
            "n": configs[0].n}
    if "radial" in wanted:
        hist = stats.radial_profiles(configs, bins=int(cfg.analysis["bins"]))
        _write_csv(out / "radial.csv", meta, {
            "r": hist.centers, "density": hist.density,
            "charge_density": hist.charge_density,
            "mean_charge": np.nan_to_num(hist.mean_charge),
            "density_se": hist.density_se, "counts": hist.counts})
        if _png(cfg):
            prof = None
            try:
                pred = equilibrium.predict(spec)
                prof = pred.to_profile() if isinstance(
                    pred, equilibrium.ShellLayout) else (
                    pred if isinstance(pred, equilibrium.EquilibriumProfile)
                    else None)
            except equilibrium.WrongRegimeError:
                pass
            plotting.plot_radial_profiles(hist, out / "radial.png",
                                          profile=prof, title=cfg.name)
    if "nearest" in wanted:
        dist = np.concatenate([
            stats.nearest_neighbor_distances(c, blow_up=True) for c in configs])
        _write_csv(out / "nearest.csv", meta, {"distance": np.sort(dist)})
        if _png(cfg):
            plotting.plot_nearest_neighbor_hist(dist, out / "nearest.png",
                                                title=cfg.name)
    if "correlation" in wanted:
        R = max(float(np.max(c.radii())) for c in configs)
        r0_list = cfg.analysis.get("r0_list") or [0.2 * R, 0.5 * R, 0.8 * R]
        width = float(cfg.analysis.get("annulus_width") or 0.1 * R)
        grid = np.linspace(0.0, 8.0, 65)
        curves = []
        for r0 in r0_list:
            cc = stats.local_pair_correlation(configs, float(r0), width, grid)
            curves.append(cc)
            _write_csv(out / f"correlation_r0_{r0:.3g}.csv",
                       {**meta, "r0": f"{r0:.6g}", "width": f"{width:.6g}",
                        "n_reference": cc.n_reference},
                       {"r": cc.r, "G": cc.G, "G_se": cc.G_se})
        if _png(cfg):
            plotting.plot_correlations(curves, out / "correlation.png",
                                       title=cfg.name)
    if "ordering" in wanted:
        vals = [stats.ordering_metric(c) for c in configs]
        _write_csv(out / "ordering.csv", meta,
                   {"replica": np.arange(len(vals)), "metric": vals})
    return EXIT_OK


def cmd_splitting(cfg: ScenarioConfig, threads: int, minimized: bool) -> int:
    spec = cfg.build_gas_spec()
    out = _outdir(cfg)
    n = int(cfg.run["n"])
    seed = int(cfg.run["seed"])
    if minimized:
        res = minimizer.minimize(spec, n, schedule=cfg.build_schedule(),
                                 seed=seed, stratified=bool(cfg.run["stratified"]))
        config = res.config
    else:
        config = minimizer.initial_configuration(
            spec, n, seed=seed, stratified=bool(cfg.run["stratified"]))
    profile = equilibrium.predict(spec)
    if isinstance(profile, equilibrium.ShellLayout):
        profile = profile.to_profile()
    breakdown = energy.splitting_terms(config, profile, spec)
    (out / "splitting.json").write_text(breakdown.to_json())
    return EXIT_OK


def cmd_scenario(cfg: ScenarioConfig, threads: int) -> int:
    if cfg.name == "fig7_reconstruction":
        return cmd_inverse(cfg, threads, target_name="fig7", roundtrip=True)
    rc = cmd_stats(cfg, threads)
    if rc != EXIT_OK:
        return rc
    if cfg.gas.get("manifold") in (None, "none"):
        try:
            cmd_predict(cfg, threads)
        except equilibrium.WrongRegimeError:
            pass  # non-monotone weights have no closed-form profile
    return EXIT_OK


# ---- entry point ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hetgas",
        description="Simulation and analysis of heterogeneous gases of "
                    "positive charges with singular repulsion.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "minimize replicas; write checkpoints and traces"),
        ("predict", "closed-form equilibrium profile CSVs"),
        ("inverse", "design a charge density for a target radial density"),
        ("stats", "minimize replicas and compute observables"),
        ("splitting", "energy splitting breakdown JSON"),
        ("scenario", "run a named preset end-to-end"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None,
                       help="scenario config JSON path")
        p.add_argument("--preset", type=str, default=None,
                       help=f"named preset ({', '.join(preset_names())})")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1,
                       help="replica-level parallelism; 1 is deterministic")
        p.add_argument("--out", type=str, default=None,
                       help="output directory")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="config override, repeatable (dotted paths)")
        if name == "inverse":
            p.add_argument("--target", type=str, default="fig7",
                           help="target preset (fig7, parabolic) or CSV path")
            p.add_argument("--roundtrip", action="store_true",
                           help="also run the forward simulation check")
        if name == "splitting":
            p.add_argument("--minimized", action="store_true",
                           help="compute on a minimized configuration")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, json.JSONDecodeError, OSError) as e:
        return _fail(EXIT_CONFIG, "config", e)
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, args.threads)
        if args.command == "predict":
            return cmd_predict(cfg, args.threads)
        if args.command == "inverse":
            return cmd_inverse(cfg, args.threads, args.target, args.roundtrip)
        if args.command == "stats":
            return cmd_stats(cfg, args.threads)
        if args.command == "splitting":
            return cmd_splitting(cfg, args.threads, args.minimized)
        if args.command == "scenario":
            return cmd_scenario(cfg, args.threads)
        return _fail(EXIT_CONFIG, "config", f"unknown command {args.command}")
    except (ConfigError, equilibrium.WrongRegimeError) as e:
        return _fail(EXIT_CONFIG, "config", e)
    except (ConvergenceError, inverse.IntegrationFailureError,
            inverse.IncompatibleTargetError,
            equilibrium.PredictionError) as e:
        return _fail(EXIT_CONVERGENCE, "convergence", e)
    except (stats.InsufficientStatisticsError,
            stats.UndefinedMetricError) as e:
        return _fail(EXIT_STATISTICS, "statistics", e)


if __name__ == "__main__":
    sys.exit(main())
