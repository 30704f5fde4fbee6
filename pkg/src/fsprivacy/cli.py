"""Command-line harness: ``fsprivacy {optimize,privacy-audit,graph-report,selftest}``.

Exit codes: 0 success, 2 configuration or validation error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, _backend
from .adversary import (
    NO_GUARANTEE, CorruptedSet, ScenarioPair, corollary_epsilon, corollary_table, empirical_kl,
    honest_algebraic_connectivity, sampled_corollary_epsilon, theoretical_epsilon,
)
from .config import ConfigError, ExperimentConfig, load_config
from .costs import PolynomialCost
from .errors import DivergenceError, DomainError, ScenarioError
from .graph import ENUMERATION_CAP, is_connected, is_vertex_cut, vertex_connectivity
from .obfuscation import mask_all_degrees, noise_trace, run_phase_one
from .optimizer import dgd_run, write_trace_csv
from .rng import CounterRNG, fresh_seed
from .selftest import run_selftest
from .spectral import algebraic_connectivity, laplacian

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_CONNECTIVITY_LIMIT = 62


def _jsonable(x):
    if x is NO_GUARANTEE:
        return str(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    return format(float(v), ".17g")


class _Run:
    """Resolved seed, output directory and the list of files written."""

    def __init__(self, command: str, cfg: Optional[ExperimentConfig], seed: Optional[int], out: Path):
        self.command = command
        self.cfg = cfg
        self.seed_generated = seed is None
        self.seed = fresh_seed() if seed is None else int(seed)
        self.out = out
        self.outputs: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def manifest(self) -> None:
        manifest = {
            "command": self.command,
            "seed": self.seed,
            "seed_generated": self.seed_generated,
            "versions": {"fsprivacy": __version__, "numpy": np.__version__, "backend": _backend.BACKEND},
            "outputs": sorted(self.outputs),
        }
        if self.cfg is not None:
            self.cfg.seed = self.seed
            manifest["config_hash"] = self.cfg.digest()
        write_json(self.out / f"manifest-{self.command}.json", manifest)


def _prepare(args, command: str) -> tuple[ExperimentConfig, _Run]:
    cfg = load_config(args.config)
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be positive", source="command line")
        cfg.trials = args.trials
    if args.out is not None:
        cfg.out = args.out
    seed = args.seed if args.seed is not None else cfg.seed
    return cfg, _Run(command, cfg, seed, Path(cfg.out))


def _run_summary(trace) -> dict:
    return {
        "rounds": trace.rounds,
        "stopped_early": trace.stopped_early,
        "final_estimates": trace.final,
        "final_mean": trace.final_mean,
        "final_disagreement": float(trace.disagreements[-1]),
        "final_max_error": None if trace.errors is None else trace.max_error(),
        "final_mean_error": None if trace.oracle is None else trace.mean_error(),
    }


def cmd_optimize(args) -> int:
    cfg, run = _prepare(args, "optimize")
    dgd = cfg.dgd_config()
    rng = CounterRNG(run.seed)
    baseline = dgd_run(cfg.costs, cfg.topology, dgd)
    if any(isinstance(c, PolynomialCost) and c.degree > 1 for c in cfg.costs):
        effective = mask_all_degrees(cfg.costs, cfg.topology, cfg.sigma, rng)
        mask_record = {"effective": [c.to_dict() for c in effective]}
    else:
        record = run_phase_one(cfg.costs, cfg.topology, cfg.sigma, rng)
        effective = list(record.effective)
        mask_record = noise_trace(cfg.topology, record.noise, record.masks)
    masked = dgd_run(effective, cfg.topology, dgd, oracle=baseline.oracle)

    write_trace_csv(baseline, run.path("trace_baseline.csv"), run.path("trace_baseline_rounds.csv"))
    write_trace_csv(masked, run.path("trace_masked.csv"), run.path("trace_masked_rounds.csv"))
    write_json(run.path("masks.json"), mask_record)
    summary = {
        "oracle_minimizer": baseline.oracle,
        "sigma": cfg.sigma,
        "seed": run.seed,
        "baseline": _run_summary(baseline),
        "masked": _run_summary(masked),
        "final_mean_gap": float(np.linalg.norm(masked.final_mean - baseline.final_mean)),
    }
    write_json(run.path("summary.json"), summary)
    run.manifest()
    for label, trace in (("baseline", baseline), ("masked", masked)):
        err = "n/a" if trace.errors is None else f"{trace.max_error():.3e}"
        print(f"{label}: {trace.rounds} rounds, final max error {err}")
    return EXIT_OK


def _write_moments(path: Path, report) -> None:
    honest = report.honest
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["branch", "coordinate", "agent", "mean"] + [f"cov_{j}" for j in honest])
        for label, mean, cov in (("A", report.mean_A, report.cov_A), ("B", report.mean_B, report.cov_B)):
            for k in range(mean.shape[0]):
                for a, agent in enumerate(honest):
                    out.writerow([label, k + 1, agent, _fmt(mean[k, a])] + [_fmt(v) for v in cov[k, a]])


def _write_histograms(path: Path, histograms) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["branch", "agent", "coordinate", "bin_lo", "bin_hi", "count"])
        for h in histograms:
            e = h["edges"]
            for b, count in enumerate(h["counts"]):
                out.writerow([h["branch"], h["agent"], h["coordinate"], _fmt(e[b]), _fmt(e[b + 1]), int(count)])


def cmd_privacy_audit(args) -> int:
    cfg, run = _prepare(args, "privacy-audit")
    if not cfg.corrupted:
        raise ConfigError("privacy-audit needs a nonempty 'corrupted' set", "corrupted", source=str(args.config))
    if cfg.scenario_b is None:
        raise ConfigError("privacy-audit needs 'scenario_b'", "scenario_b", source=str(args.config))
    scenario = ScenarioPair(cfg.private_coefficients(), cfg.scenario_b, cfg.corrupted)
    report = empirical_kl(scenario, cfg.topology, cfg.sigma, cfg.trials, CounterRNG(run.seed),
                          histogram_bins=cfg.histogram_bins)
    write_json(run.path("privacy_report.json"), report.to_dict())
    _write_moments(run.path("moments.csv"), report)
    if report.histograms:
        _write_histograms(run.path("histograms.csv"), report.histograms)
    run.manifest()
    kl = "n/a" if report.kl_empirical is None else f"{report.kl_empirical:.4f} +- {report.kl_stderr:.4f}"
    bound = "none (no guarantee)" if report.kl_bound is None else f"{report.kl_bound:.4f}"
    print(f"empirical KL {kl}; theoretical bound {bound}; trials {report.trials}")
    return EXIT_OK


def graph_report(cfg: ExperimentConfig, seed: int) -> dict:
    topo = cfg.topology
    t = cfg.t if cfg.t is not None else max(len(cfg.corrupted), 1)
    report: dict = {"n": topo.n, "edges": topo.num_edges, "sigma": cfg.sigma, "t": t, "flags": []}
    report["connected"] = is_connected(topo)
    report["algebraic_connectivity"] = algebraic_connectivity(laplacian(topo)) if topo.n > 1 else None
    if topo.n <= _CONNECTIVITY_LIMIT:
        report["vertex_connectivity"] = vertex_connectivity(topo)
    else:
        report["vertex_connectivity"] = None
        report["flags"].append(f"vertex connectivity skipped above {_CONNECTIVITY_LIMIT} agents")
    if topo.n <= ENUMERATION_CAP:
        report["corollary_table"] = corollary_table(topo, t, cfg.sigma)
        report["worst_case_epsilon"] = corollary_epsilon(topo, t, cfg.sigma)
        report["worst_case_is_lower_bound"] = False
    else:
        report["flags"].append(
            f"enumeration cap exceeded: {topo.n} agents > {ENUMERATION_CAP}; "
            "worst-case epsilon is a sampled lower bound")
        sampled = sampled_corollary_epsilon(topo, t, cfg.sigma, 2000, np.random.default_rng(seed))
        report["corollary_table"] = None
        report["worst_case_epsilon"] = sampled.value
        report["worst_case_is_lower_bound"] = True
    if cfg.corrupted:
        c = CorruptedSet(cfg.corrupted, topo.n)
        if is_vertex_cut(topo, c.c):
            verdict = "C is a vertex cut: no privacy guarantee"
            mu2 = None
        else:
            verdict = "C is not a vertex cut"
            mu2 = honest_algebraic_connectivity(topo, c) if len(c.honest) > 1 else None
        report["corrupted"] = sorted(c.c)
        report["verdict"] = verdict
        report["mu2_honest"] = mu2
        report["epsilon"] = theoretical_epsilon(topo, c, cfg.sigma)
    return report


def cmd_graph_report(args) -> int:
    cfg, run = _prepare(args, "graph-report")
    report = graph_report(cfg, run.seed)
    write_json(run.path("graph_report.json"), report)
    run.manifest()
    print(f"vertex connectivity: {report['vertex_connectivity']}")
    print(f"algebraic connectivity: {report['algebraic_connectivity']}")
    print(f"worst-case epsilon (t={report['t']}): {report['worst_case_epsilon']}")
    if "verdict" in report:
        print(f"{report['verdict']}; epsilon = {report['epsilon']}")
    for flag in report["flags"]:
        print(f"note: {flag}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    seed = 0 if args.seed is None else args.seed
    results = run_selftest(seed, corrupt_mask=args.corrupt_mask)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    if args.out is not None:
        run = _Run("selftest", None, seed, Path(args.out))
        write_json(run.path("selftest.json"), {"seed": seed, "checks": [r.to_dict() for r in results]})
        run.manifest()
    return EXIT_OK if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsprivacy", description="Simulate zero-sum cost masking and audit its privacy."
    )
    parser.add_argument("--version", action="version", version=f"fsprivacy {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "optimize": (cmd_optimize, "mask the costs, run masked and unmasked DGD, write traces"),
        "privacy-audit": (cmd_privacy_audit, "Monte Carlo KL between two coefficient scenarios"),
        "graph-report": (cmd_graph_report, "connectivity, spectral and worst-case epsilon report"),
        "selftest": (cmd_selftest, "run the quick invariant suite"),
    }
    for name, (handler, help_text) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=name != "selftest", help="experiment JSON file")
        p.add_argument("--trials", type=int, help="override the configured trial count")
        p.add_argument("--seed", type=int, help="override the configured master seed")
        p.add_argument("--out", help="output directory (default: config 'out' or ./results)")
        if name == "selftest":
            p.add_argument("--corrupt-mask", action="store_true", help=argparse.SUPPRESS)
        p.set_defaults(handler=handler)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
