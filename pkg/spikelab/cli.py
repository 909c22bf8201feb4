#!/usr/bin/env python3
"""
🧮 spikelab - Command Line

Subcommands:
    potential       i_RS(E) and its derivative on a grid of E (CSV)
    thresholds      Δ_AMP, Δ_RS, brackets and stationary points (JSON)
    se              SE trace from E = v (CSV)
    coupled-se      coupled SE history per block (CSV)
    amp             AMP errors per seed against SE (CSV)
    coupled-amp     coupled AMP errors per block against coupled SE (CSV)
    phase-diagram   thresholds over a ρ grid (CSV)
    oracle          small-n exact posterior checks (JSON)

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import reporting
from .amp import (
    DEFAULT_T_MAX,
    amp_experiment,
    coupled_se_prediction,
    matrix_se_prediction,
    run_coupled_amp,
    sample_coupled_instance,
    sample_instance,
    se_prediction,
    spectral_estimate,
)
from .config import RunConfig, build_config, family_prior, worker_count
from .errors import AmpDiverged, ConfigError, NoBracket, SpikelabError
from .exact_oracle import (
    finite_n_mutual_information,
    guerra_gap,
    immse_check,
    mmse_inequality_check,
    nishimori_check,
    oracle_sweep,
    superadditivity_check,
)
from .model import ScalarModel
from .potential import i_rs, i_rs_derivative, potential_report, threshold_report
from .spatial_coupling import COUPLED_MAX_SWEEPS, COUPLED_TOL, run_coupled_se, triangle_coupling
from .state_evolution import SE_MAX_ITERATIONS, SE_TOL, e_good, run_se
from .workers import ordered_map, sub_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2

PHASE_RTOL = 1e-4

CommandResult = Tuple[bool, str]


def _single_delta(config: RunConfig) -> float:
    if len(config.delta) > 1:
        logger.warning("using the first of %d Δ values (%g)", len(config.delta), config.delta[0])
    return config.delta[0]


def _seeds(config: RunConfig) -> List[int]:
    return [sub_seed(config.seed, k) for k in range(config.seeds)]


def cmd_potential(config: RunConfig) -> CommandResult:
    """i_RS(E; Δ) and ∂i_RS/∂E on `points` values of E ∈ [0, v]."""
    prior = config.build_prior()
    model = ScalarModel(prior, _single_delta(config))
    errors = np.linspace(0.0, model.v, config.points)
    frame = pd.DataFrame({
        "E": errors,
        "i_rs": np.asarray(i_rs(model, errors)),
        "d_i_rs": np.asarray(i_rs_derivative(model, errors)),
    })

    report = potential_report(model)
    reporting.section(f"📈 POTENTIAL  {prior.describe()}  Δ={model.delta:g}")
    reporting.print_table(
        zip(report.stationary_points, report.kinds, report.values),
        ["E", "kind", "i_rs"],
    )
    reporting.status(not report.assumption_violated, f"global minimum at E={report.global_min_E:.6g}")
    return not report.assumption_violated, reporting.to_csv(frame) if config.format == "csv" else reporting.to_json(frame)


def cmd_thresholds(config: RunConfig) -> CommandResult:
    """Δ_AMP and Δ_RS of the prior, with brackets located automatically unless given."""
    prior = config.build_prior()
    report = threshold_report(prior, config.amp_interval, config.rs_interval, probes=config.delta)
    payload = {
        "prior": prior.describe(),
        "delta_amp": report.delta_amp,
        "delta_rs": report.delta_rs,
        "delta_opt": report.delta_opt,
        "delta_spectral": report.delta_spectral,
        "brackets": {"amp": list(report.amp_bracket), "rs": list(report.rs_bracket)},
        "stationary_points": {f"{p.delta:.17g}": p.stationary_points for p in report.probes},
        "e_good": {f"{p.delta:.17g}": p.e_good for p in report.probes},
    }
    reporting.section(f"🎯 THRESHOLDS  {prior.describe()}")
    reporting.print_table(
        [["Δ_AMP", report.delta_amp, report.amp_bracket_width],
         ["Δ_RS", report.delta_rs, report.rs_bracket_width],
         ["Δ_spectral", report.delta_spectral, 0.0]],
        ["threshold", "value", "bracket width"],
    )
    return True, reporting.to_json(payload)


def cmd_se(config: RunConfig) -> CommandResult:
    """SE trace from E^(0) = v."""
    model = ScalarModel(config.build_prior(), _single_delta(config))
    trace = run_se(model, t_max=config.tmax or SE_MAX_ITERATIONS, tol=config.tol or SE_TOL)
    frame = pd.DataFrame({"t": np.arange(trace.values.size), "E": trace.values})
    good = e_good(model)
    reporting.status(
        trace.converged,
        f"SE fixed point {trace.fixed_point:.9g} after {trace.iterations} iterations (E_good={good:.9g})",
    )
    return trace.converged, reporting.to_csv(frame) if config.format == "csv" else reporting.to_json(frame)


def cmd_coupled_se(config: RunConfig) -> CommandResult:
    """Coupled SE with the triangle kernel and the default seed."""
    model = ScalarModel(config.build_prior(), _single_delta(config))
    coupling = triangle_coupling(config.L, config.w)
    trace = run_coupled_se(
        model, coupling, t_max=config.tmax or COUPLED_MAX_SWEEPS, tol=config.tol or COUPLED_TOL,
    )
    history = trace.history
    steps, blocks = history.shape
    frame = pd.DataFrame({
        "t": np.repeat(np.arange(steps), blocks),
        "mu": np.tile(np.arange(blocks), steps),
        "E": history.ravel(),
    })
    good = e_good(model)
    reporting.status(
        trace.converged,
        f"coupled SE: max E={trace.values.max():.6g} after {trace.sweeps} sweeps (E_good={good:.6g})",
    )
    return trace.converged, reporting.to_csv(frame) if config.format == "csv" else reporting.to_json(frame)


def cmd_amp(config: RunConfig) -> CommandResult:
    """AMP on `seeds` instances, per-seed rows plus the seed average."""
    prior = config.build_prior()
    delta = _single_delta(config)
    t_max = config.tmax or DEFAULT_T_MAX
    model = ScalarModel(prior, delta)
    seeds = _seeds(config)

    results = amp_experiment(
        prior, config.n, delta, seeds, t_max, config.se_driven,
        workers=worker_count(config.workers), progress=True,
    )
    e_se = se_prediction(model, t_max)
    mmse_se = matrix_se_prediction(model, t_max)

    frames = []
    for seed, result in zip(seeds, results):
        frame = result.to_frame()[["t", "Vmse", "Mmse"]]
        frame.insert(0, "seed", str(seed))
        frame["E_se"] = e_se
        frame["Mmse_se"] = mmse_se
        frames.append(frame)
    per_seed = pd.concat(frames, ignore_index=True)
    mean = per_seed.drop(columns="seed").groupby("t", as_index=False).mean()
    mean.insert(0, "seed", "mean")
    table = pd.concat([per_seed, mean], ignore_index=True)

    spectral = spectral_estimate(sample_instance(prior, config.n, delta, seeds[0]))
    worst = float(np.max(np.abs(mean["Vmse"] - mean["E_se"])))
    reporting.section(f"🔁 AMP  {prior.describe()}  Δ={delta:g}  n={config.n}")
    reporting.status(True, f"max |mean Vmse − E_se| = {worst:.3e} (1/√n = {1 / np.sqrt(config.n):.3e})")
    reporting.status(None, f"spectral overlap (seed {seeds[0]}): {spectral.overlap:.4g}")
    return True, reporting.to_csv(table) if config.format == "csv" else reporting.to_json(table)


def cmd_coupled_amp(config: RunConfig) -> CommandResult:
    """Coupled AMP per block against coupled SE, per seed plus the seed average."""
    prior = config.build_prior()
    delta = _single_delta(config)
    t_max = config.tmax or DEFAULT_T_MAX
    model = ScalarModel(prior, delta)
    coupling = triangle_coupling(config.L, config.w)
    seeds = _seeds(config)
    prediction = coupled_se_prediction(model, coupling, t_max)

    def one(seed: int) -> pd.DataFrame:
        instance = sample_coupled_instance(prior, config.n, coupling, delta, seed)
        frame = run_coupled_amp(instance, prior, t_max).to_frame()
        frame.insert(0, "seed", str(seed))
        frame["E_se"] = prediction.ravel()
        return frame

    per_seed = pd.concat(
        ordered_map(one, seeds, worker_count(config.workers), progress=True, desc="coupled AMP"),
        ignore_index=True,
    )
    mean = per_seed.drop(columns="seed").groupby(["t", "mu"], as_index=False).mean()
    mean.insert(0, "seed", "mean")
    table = pd.concat([per_seed, mean], ignore_index=True)

    worst = float(np.max(np.abs(mean["Vmse"] - mean["E_se"])))
    reporting.section(f"🌊 COUPLED AMP  L={config.L} w={config.w} n={config.n}/block")
    reporting.status(True, f"max |mean Vmse_μ − E_μ| = {worst:.3e} (1/√n = {1 / np.sqrt(config.n):.3e})")
    return True, reporting.to_csv(table) if config.format == "csv" else reporting.to_json(table)


def cmd_phase_diagram(config: RunConfig) -> CommandResult:
    """Δ_AMP, Δ_RS and Δ_spectral over the ρ grid of a prior family."""

    def one(rho: float) -> Dict[str, Any]:
        prior = family_prior(config.family, rho, config.bias)
        try:
            report = threshold_report(prior, rtol=PHASE_RTOL)
            return {"rho": rho, "delta_amp": report.delta_amp, "delta_rs": report.delta_rs,
                    "delta_spectral": report.delta_spectral}
        except NoBracket as exc:
            logger.warning("ρ=%g: %s", rho, exc)
            return {"rho": rho, "delta_amp": np.nan, "delta_rs": np.nan,
                    "delta_spectral": prior.second_moment**2}

    rows = ordered_map(one, config.rho, worker_count(config.workers), progress=True, desc="ρ grid")
    frame = pd.DataFrame(rows, columns=["rho", "delta_amp", "delta_rs", "delta_spectral"])
    missing = int(frame[["delta_amp", "delta_rs"]].isna().any(axis=1).sum())
    reporting.section(f"🗺️  PHASE DIAGRAM  family={config.family}")
    reporting.print_table(frame.itertuples(index=False), list(frame.columns))
    reporting.status(missing == 0, f"{len(frame) - missing}/{len(frame)} grid points bracketed")
    return missing == 0, reporting.to_csv(frame) if config.format == "csv" else reporting.to_json(frame)


def cmd_oracle(config: RunConfig) -> CommandResult:
    """Nishimori, I/n, I-MMSE, MMSE inequality and superadditivity on small systems."""
    prior = config.build_prior()
    delta = _single_delta(config)
    workers = worker_count(config.workers)
    n = config.sizes[-1]
    runs = oracle_sweep(prior, config.sizes, delta, config.samples, config.seed, workers)
    largest = runs[-1]

    nishimori = nishimori_check(prior, n, delta, config.samples, config.seed, average=largest)
    information = finite_n_mutual_information(prior, n, delta, config.samples, config.seed, average=largest)
    partition_form = finite_n_mutual_information(
        prior, n, delta, config.samples, config.seed, average=largest, form="partition",
    )
    immse = immse_check(prior, n, delta, config.h, config.samples, config.seed, workers)
    inequality = mmse_inequality_check(runs)
    half = max(n // 2, 2)
    superadditivity = superadditivity_check(prior, half, half, delta, config.samples, config.seed, workers)
    gap = guerra_gap(prior, n, delta, config.samples, config.seed, workers)

    payload = {
        "prior": prior.describe(),
        "delta": delta,
        "n": n,
        "samples": config.samples,
        "nishimori": {
            "first": nishimori.first.as_dict(),
            "second": nishimori.second.as_dict(),
            "power": nishimori.power.as_dict(),
            "passes": nishimori.passes(),
        },
        "mutual_information": information.as_dict(),
        "mutual_information_partition_form": partition_form.as_dict(),
        "immse": {
            "derivative": immse.derivative.as_dict(),
            "matrix_error": immse.matrix_error.as_dict(),
            "quarter_mmmse": immse.quarter_mmmse.as_dict(),
            "residual": immse.residual.as_dict(),
            "passes": immse.passes(),
        },
        "mmse_inequality": {
            "table": inequality.table,
            "fitted_c": inequality.fitted_c,
            "passes": inequality.passes(),
        },
        "superadditivity": {
            "n1": superadditivity.n1,
            "n2": superadditivity.n2,
            "difference": superadditivity.difference.as_dict(),
            "consistent": superadditivity.consistent,
        },
        "guerra_gap": gap.as_dict(),
    }

    reporting.section(f"🔬 ORACLE  {prior.describe()}  Δ={delta:g}  n={n}")
    reporting.status(nishimori.passes(), "Nishimori identities within 3 standard errors")
    reporting.status(immse.passes(), "I-MMSE finite difference within tolerance")
    reporting.status(inequality.passes(), f"matrix/vector MMSE inequality (C fitted {inequality.fitted_c:.4g})")
    reporting.status(None if not superadditivity.consistent else True, "superadditivity trend (soft)")
    ok = nishimori.passes() and immse.passes() and inequality.passes()
    return ok, reporting.to_json(payload)


COMMANDS = {
    "potential": cmd_potential,
    "thresholds": cmd_thresholds,
    "se": cmd_se,
    "coupled-se": cmd_coupled_se,
    "amp": cmd_amp,
    "coupled-amp": cmd_coupled_amp,
    "phase-diagram": cmd_phase_diagram,
    "oracle": cmd_oracle,
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value manifest; flags override its values")
    common.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging on stderr")
    common.add_argument("--workers", type=int, help="worker threads (capped by SPIKELAB_THREADS)")
    common.add_argument("--prior", help="bernoulli:<rho> | community:<rho> | rademacher | dirac:<a> | atoms:v@p,...")
    common.add_argument("--family", choices=["bernoulli", "community"], help="ρ-parametric family (phase-diagram)")
    common.add_argument("--rho", help="ρ grid: comma list or start:stop:count")
    common.add_argument("--delta", "--delta-grid", dest="delta", help="Δ or Δ grid")
    common.add_argument("--bias", type=float, help="bias ε of zero-mean priors (default 1e-4, 0 disables)")
    common.add_argument("--n", type=int, help="dimension (per block for coupled runs)")
    common.add_argument("--L", type=int, help="ring length L (L+1 blocks)")
    common.add_argument("--w", type=int, help="coupling window")
    common.add_argument("--seeds", type=int, help="number of seeds")
    common.add_argument("--seed", type=int, help="base seed (sub-seeds are seed XOR index)")
    common.add_argument("--tmax", type=int, help="iteration cap")
    common.add_argument("--tol", type=float, help="stopping tolerance")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    common.add_argument("--se-driven", action="store_const", const=True, help="AMP takes snr_t from SE")
    common.add_argument("--amp-interval", help="Δ_AMP bracket 'lo,hi'")
    common.add_argument("--rs-interval", help="Δ_RS bracket 'lo,hi'")
    common.add_argument("--samples", type=int, help="disorder samples (oracle)")
    common.add_argument("--sizes", help="oracle sizes, e.g. 4,6,8,10")
    common.add_argument("--h", type=float, help="finite-difference step in 1/Δ (oracle)")
    common.add_argument("--points", type=int, help="E grid size (potential)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikelab",
        description="Rank-one spiked Wigner estimation: potential, thresholds, SE, AMP and small-n checks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  spikelab thresholds --prior bernoulli:0.02
  spikelab potential --prior bernoulli:0.02 --delta 0.0012 --out potential.csv
  spikelab amp --prior bernoulli:0.02 --delta 0.0008 --n 4000 --seeds 10 --tmax 20
  spikelab phase-diagram --family community --rho 0.05:0.95:10
  spikelab oracle --prior bernoulli:0.3 --delta 0.5 --sizes 4,6,8,10 --samples 2000
        """,
    )
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__.strip().splitlines()[0])
    return parser


OPTION_FIELDS = (
    "workers", "prior", "family", "rho", "delta", "bias", "n", "L", "w", "seeds", "seed",
    "tmax", "tol", "out", "format", "se_driven", "amp_interval", "rs_interval",
    "samples", "sizes", "h", "points",
)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    reporting.banner("🧮 spikelab", f"{args.command}  (data on stdout or --out)")

    overrides = {name: getattr(args, name) for name in OPTION_FIELDS}
    try:
        config = build_config(args.config, overrides)
    except ConfigError as exc:
        reporting.status(False, f"config error: {exc}")
        return EXIT_CONFIG
    except ValidationError as exc:
        for error in exc.errors():
            field = ".".join(str(p) for p in error["loc"]) or "config"
            reporting.status(False, f"config error in '{field}': {error['msg']}")
        return EXIT_CONFIG

    try:
        ok, text = COMMANDS[args.command](config)
    except ConfigError as exc:
        reporting.status(False, f"config error: {exc}")
        return EXIT_CONFIG
    except AmpDiverged as exc:
        reporting.status(False, f"AMP diverged: {exc}")
        return EXIT_NUMERIC
    except SpikelabError as exc:
        reporting.status(False, f"{type(exc).__name__}: {exc}")
        return EXIT_NUMERIC

    reporting.emit(text, config.out)
    if config.out:
        reporting.status(True, f"written to {config.out}")
    return EXIT_OK if ok else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
