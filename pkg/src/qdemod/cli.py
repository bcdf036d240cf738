"""Command-line harness tying the toolkit together.

Subcommands (each takes one config file and an output directory):

  design    synthesise a loop design and dump its filter spectra
  simulate  run one PLL configuration with full diagnostics
  sweep     Monte Carlo over a (beta, lambda-or-r) grid
  limits    analytic tables for the closed-form predictions
  fock      Fock-space oracle checks and a canonical phase density
  sense     sensor-parameter mapping

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  The
QDEMOD_OUT environment variable overrides the output directory (and nothing
else).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from . import fock as fock_mod
from . import limits as limits_mod
from .config import ConfigError, parse_config, serialize_config
from .grids import TimeGrid
from .pll import (LoopDivergenceError, PllConfig, run_cell)
from .qnoise import (COHERENT, PHASE_SQUEEZED, SQUEEZED_Z, NoiseModel)
from .results import RunManifest, emit_results
from .sensing import (SensorConfig, interrogation_constraint, position_pm_params,
                      velocity_fm_params)
from .signals import FLAT, LORENTZIAN, MessageSpec, ModulationScheme, message_psd
from .wiener import (FactorizationError, LoopInstabilityError,
                     NonConvergenceError, design_loop, dump_design)

_NUMERICAL_ERRORS = (FactorizationError, LoopInstabilityError,
                     LoopDivergenceError, NonConvergenceError,
                     np.linalg.LinAlgError, FloatingPointError,
                     fock_mod.ResourceBudgetError, fock_mod.TruncationError)


def _build_setup(cfg: dict, beta: float, r: float, variant: str,
                 lam: float | None = None, n_photon: float | None = None):
    """(message, mod, alpha, noise, design, lam) from a resolved config.

    Flat messages: Lambda = 4 |a|^2 (B/b) / S2(0), so a photon budget maps
    through the budgeted Lambda formula.  Lorentzian messages: the photon
    number fixes |a|^2 = N b / B directly and the reported Lambda uses the
    grid's S_m(0).
    """
    grid = TimeGrid(cfg["bandwidth"], cfg["n_samples"])
    if cfg["message_kind"] == FLAT:
        message = MessageSpec.flat(grid, cfg["band_bins"])
    elif cfg["message_kind"] == LORENTZIAN:
        message = MessageSpec(grid, LORENTZIAN, grid.bandwidth / cfg["lorentz_ratio"])
    else:
        raise ConfigError(f"unknown message_kind {cfg['message_kind']!r}")
    s_m_at_0 = float(message_psd(message).values[0])
    s2_at_0 = float(np.exp(-2.0 * r)) if r > 0 else 1.0
    mod = ModulationScheme(cfg["mod_kind"], beta, message.bandwidth)
    if lam is None:
        if n_photon is None:
            raise ConfigError("need lambda or n_photon")
        if cfg["message_kind"] == LORENTZIAN:
            alpha = float(np.sqrt(n_photon * message.bandwidth / grid.bandwidth))
            lam = 4.0 * alpha**2 * s_m_at_0 / s2_at_0
        else:
            lam = limits_mod.LimitQuery(kind=cfg["mod_kind"], beta=beta,
                                        n_photon=n_photon, r=r).resolved_lambda()
            alpha = float(np.sqrt(lam * s2_at_0 * message.bandwidth
                                  / (4.0 * grid.bandwidth)))
    else:
        alpha = float(np.sqrt(lam * s2_at_0 / (4.0 * s_m_at_0)))
    if variant == COHERENT:
        noise = NoiseModel(COHERENT, alpha)
    else:
        kind = SQUEEZED_Z if variant == SQUEEZED_Z else PHASE_SQUEEZED
        noise = NoiseModel(kind, alpha, r, message.bandwidth)
    delay = cfg.get("delay", -1)
    design = design_loop(message, mod, alpha, noise,
                         delay=None if delay < 0 else delay)
    return message, mod, alpha, noise, design, lam


def _cell_row(run_id: str, cfg: dict, beta: float, lam: float, r: float,
              cell, design) -> dict:
    kind = cfg["mod_kind"]
    if cfg["message_kind"] == FLAT:
        sigma0_analytic = limits_mod.sigma0(kind, beta, lam)
    else:
        sigma0_analytic = limits_mod.sigma0_grid(
            design.s_m, design.h, design.four_alpha_sq, design.s2.values)
    lhs = sigma0_analytic * float(np.exp(4.0 * r)) if cfg["variant"] == PHASE_SQUEEZED \
        else sigma0_analytic
    n_photon = cfg.get("n_photon")
    return {
        "run_id": run_id,
        "seed": cfg["seed"],
        "variant": cfg["variant"],
        "mod_kind": kind,
        "beta": beta,
        "lambda": lam,
        "n_photon": n_photon if n_photon is not None else float("nan"),
        "r": r,
        "snr_empirical": cell.snr_empirical,
        "snr_stderr": cell.snr_stderr,
        "snr_analytic": cell.snr_analytic,
        "sigma0_sq": sigma0_analytic,
        "sigma0_sq_empirical": cell.sigma0_sq_empirical,
        "cycle_slips": cell.total_slips,
        "pass_threshold": lhs <= 0.25,
    }


def _analytic_snr(design) -> float:
    return 1.0 / limits_mod.irreducible_error(
        design.s_m, design.h, design.four_alpha_sq, design.s2.values)


def _cmd_design(cfg: dict, outdir: str, manifest: RunManifest) -> None:
    r = cfg.get("r", 0.0)
    variant = COHERENT if r == 0 else SQUEEZED_Z
    *_, design, lam = _build_setup(cfg, cfg["beta"], r, variant,
                                   lam=cfg.get("lambda"), n_photon=cfg.get("n_photon"))
    path = os.path.join(outdir, "design.txt")
    dump_design(design, path)
    manifest.outputs.append(path)
    print(f"design: wh_residual = {design.wh_residual:.3e}, delay = {design.delay}")


def _cmd_simulate(cfg: dict, outdir: str, manifest: RunManifest) -> None:
    r = cfg.get("r", 0.0)
    message, mod, alpha, noise, design, lam = _build_setup(
        cfg, cfg["beta"], r, cfg["variant"],
        lam=cfg.get("lambda"), n_photon=cfg.get("n_photon"))
    pll_cfg = PllConfig(design, noise, cfg["variant"], cfg["trials"], cfg["seed"],
                        feedback_delay=cfg["feedback_delay"],
                        relinearize=cfg["relinearize"])
    cell = run_cell(pll_cfg, snr_analytic=_analytic_snr(design))
    rows = [_cell_row("simulate-0", cfg, cfg["beta"], lam, r, cell, design)]
    for t in cell.trials:  # per-trial diagnostics under the same schema
        row = _cell_row(f"trial-{t.trial}", cfg, cfg["beta"], lam, r, cell, design)
        row.update(snr_empirical=t.snr_empirical, snr_stderr=float("nan"),
                   sigma0_sq_empirical=t.sigma0_sq_empirical,
                   cycle_slips=t.cycle_slips)
        rows.append(row)
    path = os.path.join(outdir, "results.csv")
    emit_results(rows, path)
    manifest.outputs.append(path)
    print(f"simulate: snr = {cell.snr_empirical:.4g} "
          f"(analytic {cell.snr_analytic:.4g}), slips = {cell.total_slips}")


def _cmd_sweep(cfg: dict, outdir: str, manifest: RunManifest) -> None:
    rows = []
    run_index = 0
    lambdas = cfg.get("lambdas")
    if lambdas is None and cfg.get("n_photon") is None:
        raise ConfigError("sweep needs lambdas or n_photon")
    for beta in cfg["betas"]:
        for r in cfg["rs"]:
            if lambdas is not None and r == 0.0:
                cell_params = [(lam, None) for lam in lambdas]
            else:
                cell_params = [(None, cfg["n_photon"])]
            for lam_in, n_in in cell_params:
                message, mod, alpha, noise, design, lam = _build_setup(
                    cfg, beta, r, cfg["variant"], lam=lam_in, n_photon=n_in)
                pll_cfg = PllConfig(design, noise, cfg["variant"], cfg["trials"],
                                    cfg["seed"], feedback_delay=cfg["feedback_delay"],
                                    relinearize=cfg["relinearize"])
                cell = run_cell(pll_cfg, snr_analytic=_analytic_snr(design))
                rows.append(_cell_row(f"sweep-{run_index}", cfg, beta, lam, r,
                                      cell, design))
                run_index += 1
    path = os.path.join(outdir, "results.csv")
    emit_results(rows, path)
    manifest.outputs.append(path)
    print(f"sweep: {len(rows)} cells written")


def _cmd_limits(cfg: dict, outdir: str, manifest: RunManifest) -> None:
    query = limits_mod.LimitQuery(kind=cfg["mod_kind"], beta=cfg["beta"],
                                  lam=cfg.get("lambda"), n_photon=cfg.get("n_photon"),
                                  r=cfg.get("r", 0.0))
    table = query.evaluate()
    row = {
        "run_id": "limits-0",
        "seed": 0,
        "variant": "analytic",
        "mod_kind": table["kind"],
        "beta": table["beta"],
        "lambda": table["lambda"],
        "n_photon": cfg.get("n_photon") if cfg.get("n_photon") is not None else float("nan"),
        "r": cfg.get("r", 0.0),
        "snr_empirical": float("nan"),
        "snr_stderr": float("nan"),
        "snr_analytic": table["snr"],
        "sigma0_sq": table["sigma0_sq"],
        "sigma0_sq_empirical": float("nan"),
        "cycle_slips": 0,
        "pass_threshold": table["pass_threshold"],
    }
    path = os.path.join(outdir, "results.csv")
    emit_results([row], path)
    manifest.outputs.append(path)
    print(f"limits: sigma_sq = {table['sigma_sq']:.5g}, snr = {table['snr']:.6g}, "
          f"sigma0_sq = {table['sigma0_sq']:.5g}")


def _cmd_fock(cfg: dict, outdir: str, manifest: RunManifest) -> None:
    n_max = cfg["n_max"]
    points = cfg["points"] or 8 * (n_max + 1)
    povm = fock_mod.povm_resolution_check(n_max, points)
    pb_u = fock_mod.unitary_defect(fock_mod.pegg_barnett_unitary(cfg["pb_s"]).matrix)
    pb_c = fock_mod.pegg_barnett_commutator_residual(cfg["pb_s"])
    state = fock_mod.coherent_coeffs(cfg["alpha"], n_max) if cfg["alpha"] ** 2 + 10 * cfg["alpha"] + 20 <= n_max \
        else fock_mod.coherent_coeffs(0.0, n_max)
    density = fock_mod.canonical_phase_density(state, points)
    norm = float(np.sum(density) * fock_mod.density_weight(points, 1))
    fluid = fock_mod.fluid_velocity_commutator_check(cfg["sites"], cfg["bosons"])
    checks = [
        ("povm_resolution_residual", povm, 1e-10),
        ("pegg_barnett_unitarity", pb_u, 1e-12),
        ("pegg_barnett_commutator", pb_c, 1e-12),
        ("density_normalization", abs(norm - 1.0), 1e-10),
        ("fluid_projected_residual", fluid.projected_residual, 1e-12),
        ("fluid_residual_within_bound",
         max(0.0, fluid.max_residual - fluid.projector_bound), 0.0),
    ]
    path = os.path.join(outdir, "fock_checks.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("check,value,threshold,pass\n")
        for name, value, thr in checks:
            ok = value <= thr if thr > 0 else value == 0.0
            fh.write(f"{name},{value:.17e},{thr:.1e},{'true' if ok else 'false'}\n")
    manifest.outputs.append(path)
    dpath = os.path.join(outdir, "phase_density.csv")
    with open(dpath, "w", encoding="utf-8") as fh:
        fh.write("phi,density\n")
        for phi, val in zip(fock_mod.phase_grid(points), density):
            fh.write(f"{phi:.17e},{val:.17e}\n")
    manifest.outputs.append(dpath)
    worst = max(value for _, value, _ in checks[:5])
    print(f"fock: worst oracle residual = {worst:.3e}")
    if any((value > thr if thr > 0 else value != 0.0) for _, value, thr in checks):
        raise FactorizationError("fock oracle check failed")


def _cmd_sense(cfg: dict, outdir: str, manifest: RunManifest) -> None:
    sensor = SensorConfig(
        kind=cfg["kind"], passes=cfg["passes"], reflectivity=cfg.get("reflectivity"),
        incidence=cfg["incidence"], wavelength=cfg["wavelength"],
        rms_position=cfg.get("rms_position"), rms_velocity=cfg.get("rms_velocity"),
        message_bandwidth=cfg["message_bandwidth"], cavity_length=cfg["cavity_length"])
    rows = [("effective_passes", sensor.effective_passes)]
    if sensor.rms_position is not None:
        pos = position_pm_params(sensor)
        rows += [("position_beta", pos.beta),
                 ("position_narrowband_ok", float(pos.narrowband_ok))]
    if sensor.rms_velocity is not None:
        vel = velocity_fm_params(sensor)
        rows += [("velocity_deviation_hz", vel.deviation),
                 ("velocity_beta", vel.beta),
                 ("velocity_narrowband_ok", float(vel.narrowband_ok))]
    lhs, ok = interrogation_constraint(sensor)
    rows += [("interrogation_lhs_s", lhs), ("interrogation_pass", float(ok))]
    path = os.path.join(outdir, "sense_results.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("key,value\n")
        for key, value in rows:
            fh.write(f"{key},{value:.17e}\n")
    manifest.outputs.append(path)
    print("sense: " + ", ".join(f"{k} = {v:.6g}" for k, v in rows))


_COMMANDS = {
    "design": _cmd_design,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "limits": _cmd_limits,
    "fock": _cmd_fock,
    "sense": _cmd_sense,
}


def cli_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qdemod", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("config", help="path to the key = value config file")
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)
    outdir = os.environ.get("QDEMOD_OUT", args.out)
    try:
        cfg = parse_config(args.config, args.command)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(outdir, exist_ok=True)
    manifest = RunManifest(
        command=args.command, version=__version__,
        seed=cfg.get("seed"), config_text=serialize_config(cfg, args.command))
    manifest.start()
    try:
        _COMMANDS[args.command](cfg, outdir, manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    manifest.finish()
    manifest.write(os.path.join(outdir, "manifest.txt"))
    return 0


def main() -> None:
    sys.exit(cli_main())
