"""Command-line surface: config loading, experiment dispatch, result and
plot-data persistence.

Configs are strict JSON: unknown keys are rejected, defaults are applied
and echoed into the run manifest.  All numeric CSV output uses shortest
round-trip decimals, so identical config and seed reproduce byte-identical
tables regardless of --threads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .experiments import (
    ExperimentConfig,
    SweepResult,
    alpha_sweep,
    build_operator,
    build_second_moment_state,
    chebyshev_experiment,
    finite_qm_demo,
    higher_order_check,
    moments_check,
    nongaussian_experiment,
    pure_state_experiment,
)

OUT_DIR_ENV = "CQLAB_OUT_DIR"

DEFAULT_ALPHA_GRID = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]

SUBCOMMANDS = ("sweep", "pure-state", "higher-order", "nongaussian",
               "finite-qm", "moments-check", "chebyshev")

_TOP_KEYS = {"dim", "alpha_grid", "functional", "state", "mc_samples", "seed",
             "order", "slope_band"}
_FUNCTIONAL_KEYS = {"family", "operator", "quadratic", "quartic"}
_STATE_KEYS = {"shape", "weights", "psi", "seed", "sampler"}
_QUARTIC_KEYS = {"operator", "coeff"}


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def load_config(path) -> tuple[ExperimentConfig, dict]:
    """Parse and validate a config file; returns the config and the echoed
    dict with defaults filled in (this echo is what the manifest embeds)."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> tuple[ExperimentConfig, dict]:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    for key in ("dim", "functional", "mc_samples", "seed"):
        if key not in raw:
            raise ConfigError(f"missing required config key: {key!r}")
    functional = raw["functional"]
    if not isinstance(functional, dict):
        raise ConfigError("'functional' must be an object")
    _reject_unknown(functional, _FUNCTIONAL_KEYS, "functional")
    if isinstance(functional.get("quartic"), dict):
        _reject_unknown(functional["quartic"], _QUARTIC_KEYS, "functional.quartic")
    state = raw.get("state", {"shape": "isotropic"})
    if not isinstance(state, dict):
        raise ConfigError("'state' must be an object")
    _reject_unknown(state, _STATE_KEYS, "state")
    slope_band = raw.get("slope_band")
    if slope_band is not None:
        if (not isinstance(slope_band, (list, tuple)) or len(slope_band) != 2
                or slope_band[0] > slope_band[1]):
            raise ConfigError("'slope_band' must be [lo, hi] with lo <= hi")
    echoed = {
        "dim": int(raw["dim"]),
        "alpha_grid": [float(a) for a in raw.get("alpha_grid", DEFAULT_ALPHA_GRID)],
        "functional": functional,
        "state": state,
        "mc_samples": int(raw["mc_samples"]),
        "seed": int(raw["seed"]),
        "order": int(raw.get("order", 1)),
        "slope_band": list(slope_band) if slope_band is not None else None,
    }
    cfg = ExperimentConfig(
        dim=echoed["dim"],
        alpha_grid=tuple(echoed["alpha_grid"]),
        functional_spec=functional,
        state_spec=state,
        mc_samples=echoed["mc_samples"],
        seed=echoed["seed"],
        order=echoed["order"],
    )
    return cfg, echoed


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) if not isinstance(x, str) else x for x in row) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def emit_plot_data(result: SweepResult, out_dir: Path) -> list[Path]:
    """Log-log data file for the remainder plus a fitted-line overlay.

    Numbers carry 17 significant digits.  A noise-limited sweep gets a
    noise-floor marker column instead of a fit file.
    """
    if not result.rows:
        raise ValueError("sweep result has no rows")
    files = []
    data = out_dir / "sweep_loglog.dat"
    with open(data, "w", encoding="utf-8", newline="") as fh:
        if result.noise_limited:
            fh.write("# alpha abs_remainder below_noise\n")
            for r in result.rows:
                fh.write(f"{r.alpha:.17g} {abs(r.remainder):.17g} {int(r.below_noise)}\n")
        else:
            fh.write("# alpha abs_remainder\n")
            for r in result.rows:
                fh.write(f"{r.alpha:.17g} {abs(r.remainder):.17g}\n")
    files.append(data)
    if result.fitted_slope is not None:
        fit = out_dir / "sweep_fit.dat"
        alphas = [r.alpha for r in result.rows]
        with open(fit, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# slope={result.fitted_slope!r} intercept={result.fitted_intercept!r}\n")
            for a in (min(alphas), max(alphas)):
                y = float(np.exp(result.fitted_intercept + result.fitted_slope * np.log(a)))
                fh.write(f"{a:.17g} {y:.17g}\n")
        files.append(fit)
    return files


def _sweep_to_rows(result: SweepResult) -> list[list]:
    return [[r.alpha, r.classical_mc, r.classical_analytic, r.quantum_term,
             r.remainder, r.stderr] for r in result.rows]


def _run_sweep(cfg: ExperimentConfig, echoed: dict, out_dir: Path, workers: int):
    result = alpha_sweep(cfg, workers=workers)
    csv_path = out_dir / "sweep.csv"
    write_csv(csv_path, ["alpha", "classical_mc", "classical_analytic", "quantum_term",
                         "remainder", "stderr"], _sweep_to_rows(result))
    files = [csv_path] + emit_plot_data(result, out_dir)
    band = echoed.get("slope_band")
    passed = result.passed(*band) if band else True
    doc = {
        "fitted_slope": result.fitted_slope,
        "fitted_intercept": result.fitted_intercept,
        "noise_limited": result.noise_limited,
        "excluded_rows": result.excluded,
        "slope_band": band,
        "passed": passed,
        "rows": [{"alpha": r.alpha, "classical_mc": r.classical_mc,
                  "classical_analytic": r.classical_analytic,
                  "quantum_term": r.quantum_term, "remainder": r.remainder,
                  "stderr": r.stderr, "below_noise": r.below_noise}
                 for r in result.rows],
    }
    return doc, files


def _run_pure_state(cfg: ExperimentConfig, echoed: dict, out_dir: Path, workers: int):
    psi = cfg.state_spec.get("psi")
    if psi is None:
        raise ConfigError("pure-state runs need state.psi")
    a = build_operator(cfg.functional_spec.get("operator"), cfg.dim)
    report = pure_state_experiment(np.asarray(psi, dtype=np.float64), cfg.alpha_grid[0],
                                   a, cfg.mc_samples, cfg.seed, workers=workers)
    csv_path = out_dir / "pure_state.csv"
    write_csv(csv_path, ["metric", "value"], [
        ["amplified_mc", report["amplified_average"]["mc"]],
        ["amplified_stderr", report["amplified_average"]["stderr"]],
        ["amplified_expected", report["amplified_average"]["expected"]],
        ["span_exact_fraction", report["span"]["exact_fraction"]],
        ["covariance_max_error", report["covariance_shape"]["max_error"]],
    ])
    return report, [csv_path]


def _run_higher_order(cfg: ExperimentConfig, echoed: dict, out_dir: Path, workers: int):
    report = higher_order_check(cfg, workers=workers)
    csv_path = out_dir / "higher_order.csv"
    write_csv(csv_path, ["metric", "value"], [
        ["alpha", report["alpha"]],
        ["classical_analytic", report["classical_analytic"]],
        ["generalized_times_alpha", report["generalized_times_alpha"]],
        ["relative_error", report["relative_error"]],
        ["mc", report["mc"]],
        ["stderr", report["stderr"]],
    ])
    return report, [csv_path]


def _run_nongaussian(cfg: ExperimentConfig, echoed: dict, out_dir: Path, workers: int):
    state = build_second_moment_state(cfg.state_spec, cfg.dim, cfg.alpha_grid[0])
    a = build_operator(cfg.functional_spec.get("operator"), cfg.dim)
    report = nongaussian_experiment(state, a, cfg.mc_samples, cfg.seed, workers=workers)
    csv_path = out_dir / "nongaussian.csv"
    write_csv(csv_path, ["statistic", "mc", "stderr", "reference"], [
        ["quadratic", report["quadratic"]["mc"], report["quadratic"]["stderr"],
         report["quadratic"]["expected"]],
        ["quartic", report["quartic"]["mc"], report["quartic"]["stderr"],
         report["quartic"]["gaussian_prediction"]],
    ])
    return report, [csv_path]


def _run_finite_qm(cfg: ExperimentConfig, echoed: dict, out_dir: Path, workers: int):
    report = finite_qm_demo(cfg, workers=workers)
    csv_path = out_dir / "finite_qm.csv"
    write_csv(csv_path, ["check", "value", "reference"], [
        ["pure_amplified_mc", report["pure_state"]["amplified_average"]["mc"],
         report["pure_state"]["amplified_average"]["expected"]],
        ["mixed_amplified_mc", report["mixed_quadratic"]["mc"],
         report["mixed_quadratic"]["expected"]],
        ["higher_order_classical", report["higher_order"]["classical"],
         report["higher_order"]["generalized_times_alpha"]],
    ])
    return report, [csv_path]


def _run_moments_check(cfg: ExperimentConfig, echoed: dict, out_dir: Path, workers: int):
    report = moments_check(cfg, workers=workers)
    csv_path = out_dir / "moments.csv"
    write_csv(csv_path, ["order", "analytic", "mc", "stderr"], [
        [str(report["order"]), report["analytic"], report["mc"], report["stderr"]],
    ])
    return report, [csv_path]


def _run_chebyshev(cfg: ExperimentConfig, echoed: dict, out_dir: Path, workers: int):
    report = chebyshev_experiment(cfg, workers=workers)
    csv_path = out_dir / "chebyshev.csv"
    write_csv(csv_path, ["alpha", "C", "bound", "empirical", "noise"], [
        [r["alpha"], r["C"], r["bound"], r["empirical"], r["noise"]] for r in report["rows"]
    ])
    return report, [csv_path]


_RUNNERS = {
    "sweep": _run_sweep,
    "pure-state": _run_pure_state,
    "higher-order": _run_higher_order,
    "nongaussian": _run_nongaussian,
    "finite-qm": _run_finite_qm,
    "moments-check": _run_moments_check,
    "chebyshev": _run_chebyshev,
}


def run(subcommand: str, cfg: ExperimentConfig, echoed: dict, out_dir,
        workers: int = 1) -> int:
    """Execute a subcommand; write manifest, CSV tables and the result doc.

    Exit status 0 on success, 2 when an acceptance band fails.
    """
    if subcommand not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc, files = _RUNNERS[subcommand](cfg, echoed, out, workers)

    result_path = out / "result.json"
    result_doc = {"subcommand": subcommand, "version": __version__,
                  "passed": bool(doc.get("passed", True)), "report": doc}
    result_path.write_text(json.dumps(result_doc, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")

    manifest = {
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "subcommand": subcommand,
        "config": echoed,
        "seed": cfg.seed,
        "results": {
            "result_doc": result_path.name,
            "files": {f.name: _sha256(f) for f in files},
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return 0 if result_doc["passed"] else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cqlab",
        description="Classical-to-quantum correspondence experiments on Gaussian "
                    "field ensembles.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--out", default=None, help=f"output directory "
                        f"(default ${OUT_DIR_ENV} or ./cqlab-out)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="sampling workers; must not change any result")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # keep exit 2 reserved for acceptance-band failures
        return 1 if exc.code else 0

    out_dir = args.out or os.environ.get(OUT_DIR_ENV, "cqlab-out")
    try:
        cfg, echoed = load_config(args.config)
        if args.seed is not None:
            echoed["seed"] = int(args.seed)
            cfg = ExperimentConfig(
                dim=cfg.dim, alpha_grid=cfg.alpha_grid, functional_spec=cfg.functional_spec,
                state_spec=cfg.state_spec, mc_samples=cfg.mc_samples,
                seed=int(args.seed), order=cfg.order)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return run(args.subcommand, cfg, echoed, out_dir, workers=args.threads)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
