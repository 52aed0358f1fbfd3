"""Command-line front end.

Subcommands write CSV curves or sweep tables plus a JSON manifest holding
the fully resolved configuration; re-running a manifest reproduces the CSV
byte for byte.  Exit codes: 0 success, 1 usage error, 2 numerical or
capacity failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, bayes_filter, montecarlo, signal_model, verify
from .bayes_filter import Outcome
from .errors import InvalidParameterError, TmsvPhaseError
from .montecarlo import FixedPhase, RandomPhase, TrialConfig
from .policy import AdaptivePolicy, StaticPolicy
from .signal_model import TERM_COUNT_PRESETS, TmsvSpec

M_LADDER = [64, 128, 256, 512, 1024, 2048, 3096]

SWEEP_PRESETS = {
    "fig4": {"n_bar": [1.0, 2.0, 3.0, 5.0, 8.0], "eta": [1.0], "M": M_LADDER, "table_terms": "published"},
    "fig5": {"n_bar": [1.0, 2.0, 3.0, 5.0, 8.0], "eta": [1.0], "M": M_LADDER, "table_terms": "published"},
    "fig6": {"n_bar": [1.0], "eta": [1.0, 0.99, 0.95, 0.90], "M": M_LADDER, "table_terms": "published"},
    "fig7": {"n_bar": [3.0], "eta": [1.0, 0.99, 0.95, 0.90], "M": M_LADDER, "table_terms": "published"},
}

POSTERIOR_PRESETS = {
    "fig2": {"mode": "static", "n_bar": 3.0, "eta": 1.0, "phi": 0.15, "theta0": 0.0, "M": 512, "table_terms": 15},
    "fig3": {"mode": "adaptive", "n_bar": 3.0, "eta": 1.0, "phi": 0.15, "M": 512, "table_terms": 15},
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Resolved run description sufficient to reproduce an output file."""

    command: str
    config: dict
    master_seed: int | None
    table_params: dict | None
    created_utc: str
    version: str
    outputs: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        return RunManifest(**json.loads(text))


def manifest_path_for(out_csv: Path) -> Path:
    return out_csv.with_suffix(".manifest.json")


def _write_manifest(command: str, config: dict, out_csv: Path, sha256: str, result: dict) -> Path:
    manifest = RunManifest(
        command=command,
        config=config,
        master_seed=config.get("seed"),
        table_params=config.get("table"),
        created_utc=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        version=__version__,
        outputs={"csv": out_csv.name, "sha256": sha256, "result": result},
    )
    path = manifest_path_for(out_csv)
    path.write_text(manifest.to_json())
    return path


def _table_config(n_bar, eta, tail_epsilon, coeff_epsilon, table_terms, grid_size=None) -> dict:
    return {
        "n_bar": n_bar,
        "eta": eta,
        "tail_epsilon": tail_epsilon,
        "coeff_epsilon": coeff_epsilon,
        "n_terms": table_terms,
        "grid_size": grid_size,
    }


# ----------------------------------------------------------------------
# command cores: config dict -> CSV + result dict (shared by CLI and rerun)
# ----------------------------------------------------------------------

def _run_signal(config: dict, out_csv: Path) -> dict:
    table = signal_model.table_from_params(config["table"])
    deltas = np.linspace(-np.pi / 2, np.pi / 2, config["grid"])
    g = table.signal(deltas)
    rows = [[d, gv, min(1.0, max(0.0, 0.5 * (1.0 + gv)))] for d, gv in zip(deltas, g)]
    sha = _write_csv(out_csv, ["delta", "parity_or_G", "P_even"], rows)
    result = {"max_harmonic": table.max_harmonic, "fock_cutoff": table.fock_cutoff}
    _write_manifest("signal", config, out_csv, sha, result)
    return result


def _run_fisher(config: dict, out_csv: Path) -> dict:
    n_bar, m = config["n_bar"], config["M"]
    deltas = np.linspace(-np.pi / 2, np.pi / 2, config["grid"])
    fisher = signal_model.fisher_information(n_bar, deltas)
    rows = [[d, f] for d, f in zip(deltas, fisher)]
    sha = _write_csv(out_csv, ["delta", "fisher"], rows)
    limits = signal_model.reference_limits(n_bar, m)
    result = {
        "heisenberg": limits.heisenberg,
        "cramer_rao": limits.cramer_rao,
        "shot_noise": limits.shot_noise,
        "peak_fisher": n_bar * (n_bar + 2.0),
    }
    _write_manifest("fisher", config, out_csv, sha, result)
    return result


def _trial_config_from(config: dict) -> TrialConfig:
    if config["mode"] == "static":
        policy = StaticPolicy(theta0=config["theta0"])
    else:
        policy = AdaptivePolicy(
            grid_points=config["grid_points"], refine_tolerance=config["refine_tolerance"]
        )
    phase = RandomPhase() if config["phi"] == "random" else FixedPhase(phi=config["phi"])
    table = config["table"]
    return TrialConfig(
        n_bar=table["n_bar"],
        eta=table["eta"],
        M=config["M"],
        policy=policy,
        phase_mode=phase,
        master_seed=config["seed"],
        tail_epsilon=table["tail_epsilon"],
        coeff_epsilon=table["coeff_epsilon"],
        table_terms=table["n_terms"],
    )


def _run_posterior(config: dict, out_csv: Path) -> dict:
    if config["M"] == 0:
        post = bayes_filter.flat_prior()
        result = {"ell": 0, "estimate": None, "error": None, "thetas": [], "outcomes": ""}
    else:
        outcome = montecarlo.simulate_record(_trial_config_from(config), 0)
        post = outcome.posterior
        record = outcome.record
        result = {
            "ell": record.ell,
            "estimate": record.estimate,
            "error": record.error,
            "true_phi": record.true_phi,
            "thetas": [float(t) for t in record.thetas],
            "outcomes": "".join("e" if o is Outcome.EVEN else "o" for o in record.outcomes),
        }
    points = max(config["curve_points"], 2 * post.order + 1)
    curve = bayes_filter.density_curve(post, points)
    sha = _write_csv(out_csv, ["phi", "density"], [list(r) for r in curve])
    _write_manifest("posterior", config, out_csv, sha, result)
    return result


def _run_sweep(config: dict, out_csv: Path) -> dict:
    if config["mode"] == "static":
        policy = StaticPolicy(theta0=config["theta0"])
    else:
        policy = AdaptivePolicy(
            grid_points=config["grid_points"], refine_tolerance=config["refine_tolerance"]
        )
    phase = RandomPhase() if config["phi"] == "random" else FixedPhase(phi=config["phi"])
    terms = config["table_terms"]
    if terms == "published":
        terms = {float(k): v for k, v in TERM_COUNT_PRESETS.items()}
    elif isinstance(terms, dict):
        terms = {float(k): int(v) for k, v in terms.items()}
    configs = montecarlo.grid_configs(
        n_bars=config["n_bar"],
        etas=config["eta"],
        Ms=config["M"],
        policy=policy,
        phase_mode=phase,
        master_seed=config["seed"],
        table_terms=terms,
        tail_epsilon=config["tail_epsilon"],
        coeff_epsilon=config["coeff_epsilon"],
    )
    results = montecarlo.sweep(
        configs,
        J=config.get("J"),
        target_precision=config.get("precision"),
        workers=config.get("workers", 1),
    )
    rows = []
    failures = 0
    for res in results:
        c, s = res.config, res.stats
        if s is None:
            rows.append([c.n_bar, c.eta, c.M, 0, "nan", "nan", "nan", "nan", "nan", res.error])
            failures += 1
        else:
            rows.append([c.n_bar, c.eta, c.M, s.J, s.mse, s.mse_se, s.bias, s.hl_ratio, s.crb_ratio, res.error])
        print(f"  n_bar={c.n_bar} eta={c.eta} M={c.M}: "
              + (f"mse={s.mse:.6e} hl_ratio={s.hl_ratio:.4f}" if s else f"FAILED ({res.error})"))
    header = ["n_bar", "eta", "M", "J", "mse", "mse_se", "bias", "hl_ratio", "crb_ratio", "error"]
    sha = _write_csv(out_csv, header, rows)
    result = {"points": len(rows), "failures": failures}
    _write_manifest("sweep", config, out_csv, sha, result)
    return result


_COMMAND_CORES = {
    "signal": _run_signal,
    "fisher": _run_fisher,
    "posterior": _run_posterior,
    "sweep": _run_sweep,
}


def rerun(manifest_file: str | Path, out_csv: str | Path) -> dict:
    """Re-execute the run described by a manifest, writing to a new path."""
    manifest = RunManifest.from_json(Path(manifest_file).read_text())
    return _COMMAND_CORES[manifest.command](manifest.config, Path(out_csv))


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def _add_table_args(sub, with_eta=True):
    sub.add_argument("--nbar", type=float, default=1.0, help="mean photon number of the source")
    if with_eta:
        sub.add_argument("--eta", type=float, default=1.0, help="detection efficiency in [0, 1]")
    sub.add_argument("--tail-eps", type=float, default=signal_model.DEFAULT_TAIL_EPSILON,
                     help="cumulative-weight cutoff for the twin-Fock sum")
    sub.add_argument("--coeff-eps", type=float, default=signal_model.DEFAULT_COEFF_EPSILON,
                     help="floor below which trailing Fourier coefficients are dropped")
    sub.add_argument("--table-terms", type=int, default=None,
                     help="override: number of twin-Fock terms (published values: "
                          + ", ".join(f"nbar {k}: {v}" for k, v in TERM_COUNT_PRESETS.items()) + ")")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tmsvphase", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("signal", help="detection signal G(delta) and P_even curve")
    _add_table_args(p)
    p.add_argument("--grid", type=int, default=201, help="number of delta samples")
    p.add_argument("--out", required=True, help="output CSV path")

    p = subs.add_parser("fisher", help="Fisher-information curve and benchmark limits")
    p.add_argument("--nbar", type=float, default=1.0)
    p.add_argument("--M", type=int, default=1, help="detections, for the benchmark limits")
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--out", required=True)

    p = subs.add_parser("posterior", help="single-record posterior density dump")
    p.add_argument("--preset", choices=sorted(POSTERIOR_PRESETS), default=None)
    p.add_argument("--mode", "--policy", dest="mode", choices=["static", "adaptive"], default=None)
    _add_table_args(p)
    p.add_argument("--phi", type=float, default=0.5, help="true phase")
    p.add_argument("--theta0", type=float, default=0.0, help="controlled phase (static mode)")
    p.add_argument("--M", type=int, default=None, help="number of detections")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=256, help="adaptive-policy search grid points")
    p.add_argument("--refine-tol", type=float, default=1e-6)
    p.add_argument("--curve-points", type=int, default=512, help="minimum density-curve samples")
    p.add_argument("--out", required=True)

    p = subs.add_parser("sweep", help="MSE ensembles over an (nbar, eta, M) grid")
    p.add_argument("--preset", choices=sorted(SWEEP_PRESETS), default=None)
    p.add_argument("--spec-file", default=None, help="JSON sweep description")
    p.add_argument("--J", type=int, default=None, help="records per point")
    p.add_argument("--precision", type=float, default=None,
                   help="target relative standard error of the MSE")
    p.add_argument("--phi", type=float, default=None, help="fixed true phase (default 0.5)")
    p.add_argument("--random-phi", action="store_true", help="draw the true phase per record")
    p.add_argument("--policy", choices=["adaptive", "static"], default="adaptive")
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--refine-tol", type=float, default=1e-6)
    p.add_argument("--tail-eps", type=float, default=None,
                   help="override the spec file's twin-Fock tail cutoff")
    p.add_argument("--table-terms", type=int, default=None,
                   help="override: fixed number of twin-Fock terms for every point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = subs.add_parser("verify", help="run the oracle-equivalence self checks")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    return parser


def _cmd_signal(args) -> int:
    spec = TmsvSpec(n_bar=args.nbar, tail_epsilon=args.tail_eps)  # validates early
    if args.grid < 2:
        raise _UsageError(f"--grid must be >= 2, got {args.grid}")
    config = {
        "table": _table_config(spec.n_bar, args.eta, args.tail_eps, args.coeff_eps, args.table_terms),
        "grid": args.grid,
    }
    result = _run_signal(config, Path(args.out))
    print(f"wrote {args.out} ({args.grid} rows, {result['max_harmonic']} harmonics)")
    return 0


def _cmd_fisher(args) -> int:
    if args.grid < 2:
        raise _UsageError(f"--grid must be >= 2, got {args.grid}")
    config = {"n_bar": args.nbar, "M": args.M, "grid": args.grid}
    result = _run_fisher(config, Path(args.out))
    print(f"wrote {args.out}")
    print(f"peak fisher = {_fmt(result['peak_fisher'])}")
    for name in ("heisenberg", "cramer_rao", "shot_noise"):
        print(f"{name} = {_fmt(result[name])}")
    return 0


def _cmd_posterior(args) -> int:
    preset = dict(POSTERIOR_PRESETS[args.preset]) if args.preset else {}
    mode = args.mode or preset.get("mode", "adaptive")
    n_bar = preset.get("n_bar", args.nbar)
    eta = preset.get("eta", args.eta)
    phi = preset.get("phi", args.phi)
    m = args.M if args.M is not None else preset.get("M", 512)
    table_terms = args.table_terms if args.table_terms is not None else preset.get("table_terms")
    if m < 0:
        raise _UsageError(f"--M must be >= 0, got {m}")
    config = {
        "mode": mode,
        "table": _table_config(n_bar, eta, args.tail_eps, args.coeff_eps, table_terms),
        "phi": phi,
        "theta0": preset.get("theta0", args.theta0),
        "M": m,
        "seed": args.seed,
        "grid_points": args.grid,
        "refine_tolerance": args.refine_tol,
        "curve_points": args.curve_points,
    }
    result = _run_posterior(config, Path(args.out))
    if m > 0:
        print(f"wrote {args.out}: ell={result['ell']} of M={m} even, "
              f"estimate={_fmt(result['estimate'])}")
    else:
        print(f"wrote {args.out}: flat prior")
    return 0


def _cmd_sweep(args) -> int:
    if args.preset and args.spec_file:
        raise _UsageError("give either --preset or --spec-file, not both")
    if args.preset:
        spec = dict(SWEEP_PRESETS[args.preset])
    elif args.spec_file:
        spec = json.loads(Path(args.spec_file).read_text())
    else:
        raise _UsageError("sweep needs --preset or --spec-file")

    j = args.J if args.J is not None else spec.get("J")
    precision = args.precision if args.precision is not None else spec.get("precision")
    if j is None and precision is None:
        j = 1000
    if j is not None and precision is not None:
        raise _UsageError("give either J or precision, not both")

    phi = "random" if args.random_phi else (args.phi if args.phi is not None else spec.get("phi", 0.5))
    table_terms = args.table_terms if args.table_terms is not None else spec.get("table_terms", "published")
    tail_eps = args.tail_eps if args.tail_eps is not None else spec.get(
        "tail_epsilon", signal_model.DEFAULT_TAIL_EPSILON
    )
    config = {
        "mode": spec.get("policy", args.policy),
        "n_bar": [float(v) for v in spec["n_bar"]],
        "eta": [float(v) for v in spec["eta"]],
        "M": [int(v) for v in spec["M"]],
        "J": j,
        "precision": precision,
        "phi": phi,
        "theta0": spec.get("theta0", args.theta0),
        "grid_points": spec.get("grid_points", args.grid),
        "refine_tolerance": spec.get("refine_tolerance", args.refine_tol),
        "table_terms": table_terms,
        "tail_epsilon": tail_eps,
        "coeff_epsilon": spec.get("coeff_epsilon", signal_model.DEFAULT_COEFF_EPSILON),
        "seed": args.seed if args.seed != 0 else spec.get("seed", 0),
        "workers": args.workers,
    }
    if not config["M"]:
        raise _UsageError("sweep M list is empty")
    if not config["n_bar"] or not config["eta"]:
        raise _UsageError("sweep n_bar/eta lists must be non-empty")
    result = _run_sweep(config, Path(args.out))
    print(f"wrote {args.out}: {result['points']} points, {result['failures']} failures")
    return 2 if result["failures"] else 0


def _cmd_verify(args) -> int:
    checks = verify.run_checks(corrupt_table=args.inject_fault)
    failed = 0
    for check in checks:
        status = "ok  " if check.passed else "FAIL"
        print(f"{status}  {check.name}: max deviation {check.deviation:.3e} (tolerance {check.tolerance:.0e})")
        failed += not check.passed
    if failed:
        print(f"{failed} of {len(checks)} checks failed")
        return 3
    print(f"all {len(checks)} checks passed")
    return 0


_COMMANDS = {
    "signal": _cmd_signal,
    "fisher": _cmd_fisher,
    "posterior": _cmd_posterior,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except InvalidParameterError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except TmsvPhaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
