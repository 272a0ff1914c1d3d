"""Command-line harness: seeded scenarios, sweeps, structured output.

Subcommands map onto the library runners:

    sweep          standard demon over a list of ell/L, empirical vs
                   closed-form mean net work per cycle (csv or json-lines)
    cycle          one short traced run, JSON-lines transition trace
    livelock       undo-first demon with the particle forced onto the
                   unprofitable side
    extract-first  selective demon that frees unprofitable compartments
    delayed        delayed-erasure demon over several seeds
    quantum        measurement entropy audits (commuting vs not)
    policy-search  exhaustive bounded policy enumeration

Every run is reproducible bit for bit from its seeds; output files are
written atomically (temp file + rename).  Exit status: 0 all checks pass,
1 a statistical check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .demon import (
    Termination,
    _two_value_stats,
    enumerate_policies,
    find_seeds_forcing_side,
    run_delayed_erasure_demon,
    run_demon_of_choice_extract_first,
    run_demon_of_choice_undo_first,
    run_policy,
    run_standard_demon,
    standard_policy,
)
from .engine import EngineGeometry, Side, expected_cycle_work, net_cycle_work
from .errors import ValidationError
from .infotheory import (
    DensityMatrix,
    ProjectorSet,
    build_measurement_unitary,
    measurement_entropy_audit,
)

SWEEP_SCHEMA = "demonlab-sweep-v1"
SWEEP_COLUMNS = ("ell_over_L", "empirical", "stderr", "analytic", "gap", "pass")

_DEFAULTS = {
    "ell_over_l": (0.5,),
    "cycles": 100_000,
    "n": 10_000,
    "seed": 0,
    "seeds": None,  # falls back to (seed,)
    "out": None,
    "format": "csv",
    "max_steps": 12,
    "trials": 1,
    "states": 2,
    "horizon": 50,
    "crn_seeds": 1000,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated scenario configuration."""

    scenario: str
    ell_over_l: tuple = (0.5,)
    cycles: int = 100_000
    n: int = 10_000
    seed: int = 0
    seeds: tuple = (0,)
    out: str | None = None
    format: str = "csv"
    max_steps: int = 12
    trials: int = 1
    states: int = 2
    horizon: int = 50
    crn_seeds: int = 1000

    def __post_init__(self):
        for r in self.ell_over_l:
            if not 0.0 < r < 1.0:
                raise ValidationError(f"ell/L must lie in (0,1), got {r}")
        if self.cycles < 1 or self.n < 1:
            raise ValidationError("cycle counts must be >= 1")
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        if self.format not in ("csv", "json-lines"):
            raise ValidationError(f"unknown format {self.format!r}")


def _workers() -> int:
    raw = os.environ.get("DEMON_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise ValidationError(f"DEMON_THREADS must be an integer, got {raw!r}")


def _map_trials(fn, items):
    """Run trials possibly in a thread pool; results keep input order."""
    workers = _workers()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def write_atomic(path: str | Path, data: str) -> None:
    """Write via a sibling temp file and rename; readers never see a tail."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


@dataclass(frozen=True)
class SweepPoint:
    """Empirical vs analytic mean net work at one geometry."""

    ell_over_l: float
    empirical: float
    stderr: float
    analytic: float
    gap: float
    passed: bool


def run_sweep(ratios, cycles: int, seeds, runner=run_standard_demon) -> list:
    """Standard-demon sweep over ell/L with a 3-standard-error gate.

    Per point, all seeds' cycles are pooled; the standard error is the
    pooled per-cycle standard deviation over sqrt(total cycles), so
    merging ten seeds shrinks it by about sqrt(10).
    """
    points = []
    for ratio in ratios:
        geometry = EngineGeometry.from_ratio(ratio)
        reports = _map_trials(
            lambda s, g=geometry: runner(g, cycles, seed=s), list(seeds))
        n_left = sum(r.profitable_count for r in reports)
        total = cycles * len(reports)
        mean, stderr = _two_value_stats(
            n_left, total - n_left,
            net_cycle_work(geometry, Side.LEFT),
            net_cycle_work(geometry, Side.RIGHT))
        analytic = expected_cycle_work(geometry)
        gap = abs(mean - analytic)
        points.append(SweepPoint(
            ell_over_l=ratio, empirical=mean + 0.0,
            stderr=0.0 if stderr is None else stderr,
            analytic=analytic + 0.0, gap=gap,
            passed=gap <= 3.0 * (stderr or 0.0)))
    return points


def _sweep_csv(points) -> str:
    lines = [f"# {SWEEP_SCHEMA}", ",".join(SWEEP_COLUMNS)]
    for p in points:
        lines.append(
            f"{p.ell_over_l:.6f},{p.empirical:.6f},{p.stderr:.6f},"
            f"{p.analytic:.6f},{p.gap:.6f},{str(p.passed).lower()}")
    return "\n".join(lines) + "\n"


def _sweep_jsonl(points) -> str:
    rows = []
    for p in points:
        rows.append(json.dumps({
            "schema": SWEEP_SCHEMA, "ell_over_L": p.ell_over_l,
            "empirical": p.empirical, "stderr": p.stderr,
            "analytic": p.analytic, "gap": p.gap, "pass": p.passed,
        }, sort_keys=True))
    return "\n".join(rows) + "\n"


def _report_json(scenario: str, config: RunConfig, body: dict) -> str:
    doc = {
        "schema": f"demonlab-{scenario}-v1",
        "scenario": scenario,
        "config": {k: v for k, v in dataclasses.asdict(config).items()
                   if k != "out"},
        **body,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _scenario_sweep(config: RunConfig):
    points = run_sweep(config.ell_over_l, config.cycles, config.seeds)
    text = _sweep_csv(points) if config.format == "csv" else _sweep_jsonl(points)
    if config.out:
        write_atomic(config.out, text)
    for p in points:
        print(f"ell/L={p.ell_over_l:.6f}  empirical={p.empirical:.6f}  "
              f"stderr={p.stderr:.6f}  analytic={p.analytic:.6f}  "
              f"gap={p.gap:.6f}  pass={p.passed}")
    return (0 if all(p.passed for p in points) else 1), {"points": points}


def _scenario_cycle(config: RunConfig):
    geometry = EngineGeometry.from_ratio(config.ell_over_l[0])
    trace: list = []
    report = run_policy(geometry, standard_policy(),
                        max_steps=4 * config.cycles, seed=config.seed,
                        trace=trace)
    lines = [json.dumps(rec, sort_keys=True) for rec in trace]
    text = "\n".join(lines) + "\n"
    if config.out:
        write_atomic(config.out, text)
    print(f"cycles={report.ledger.cycles}  extracted={report.ledger.extracted:.6f}  "
          f"erased={report.ledger.erasure_paid:.6f}  net={report.ledger.net():.6f}")
    return 0, {"report": report, "trace": trace}


def _scenario_livelock(config: RunConfig):
    geometry = EngineGeometry.from_ratio(config.ell_over_l[0])
    # force the branch the undo-first flowchart unwinds: a Right record
    seeds = find_seeds_forcing_side(geometry, Side.RIGHT, config.trials,
                                    start_seed=config.seed)
    rows = []
    ok = True
    for s in seeds:
        rep = run_demon_of_choice_undo_first(geometry, config.max_steps, seed=s)
        w = rep.livelock_witness
        livelocked = rep.termination is Termination.LIVELOCK
        ok = ok and livelocked and w is not None and w.period == 2
        rows.append({
            "seed": s,
            "termination": rep.termination.value,
            "steps": rep.steps,
            "period": None if w is None else w.period,
            "first_seen_step": None if w is None else w.first_seen_step,
            "detected_step": None if w is None else w.detected_step,
            "net": rep.ledger.net(),
        })
    body = {"trials": rows, "all_period_two_livelocks": ok}
    if config.out:
        write_atomic(config.out, _report_json("livelock", config, body))
    print(f"livelock trials={len(rows)}  all period-2: {ok}")
    return (0 if ok else 1), body


def _scenario_extract_first(config: RunConfig):
    geometry = EngineGeometry.from_ratio(config.ell_over_l[0])
    reports = _map_trials(
        lambda s: run_demon_of_choice_extract_first(geometry, config.cycles, seed=s),
        list(config.seeds))
    n_left = sum(r.profitable_count for r in reports)
    total = config.cycles * len(reports)
    mean, stderr = _two_value_stats(
        n_left, total - n_left,
        net_cycle_work(geometry, Side.LEFT), -1.0)
    p = geometry.p_left
    analytic = p * net_cycle_work(geometry, Side.LEFT) - (1.0 - p)
    gap = abs(mean - analytic)
    passed = gap <= 3.0 * (stderr or 0.0)
    body = {
        "empirical": mean, "stderr": stderr, "analytic": analytic,
        "gap": gap, "pass": passed,
        "gas_entropy_per_unprofitable_cycle":
            geometry.expansion_work(Side.RIGHT),
        "total_gas_entropy": float(sum(r.gas_entropy for r in reports)),
    }
    if config.out:
        write_atomic(config.out, _report_json("extract-first", config, body))
    print(f"extract-first  empirical={mean:.6f}  analytic={analytic:.6f}  "
          f"gap={gap:.6f}  pass={passed}")
    return (0 if passed else 1), body


def _scenario_delayed(config: RunConfig):
    geometry = EngineGeometry.from_ratio(config.ell_over_l[0])
    n = config.n
    reports = _map_trials(
        lambda s: run_delayed_erasure_demon(geometry, n, seed=s),
        list(config.seeds))
    slack = (math.log2(n + 1) + 2.0) / n
    rows = []
    ok = True
    for s, rep in zip(config.seeds, reports):
        k = rep.profitable_count
        h_realized = 0.0
        if 0 < k < n:
            kk = k / n
            h_realized = -(kk * math.log2(kk) + (1 - kk) * math.log2(1 - kk))
        rate_gap = abs(rep.code_length / n - h_realized)
        ok = ok and rate_gap <= slack
        rows.append({
            "seed": s, "net_per_cycle": rep.mean_net_per_cycle,
            "profitable": k, "code_length": rep.code_length,
            "code_rate_minus_entropy": rep.code_length / n - h_realized,
        })
    mean_net = sum(r["net_per_cycle"] for r in rows) / len(rows)
    ok = ok and mean_net <= 0.0
    body = {"per_seed": rows, "mean_net_per_cycle": mean_net,
            "code_rate_slack": slack, "pass": ok}
    if config.out:
        write_atomic(config.out, _report_json("delayed", config, body))
    print(f"delayed-erasure N={n}  mean net/cycle={mean_net:.6f}  pass={ok}")
    return (0 if ok else 1), body


def run_quantum_demo(config: RunConfig):
    """Print and return the measurement audits: commuting vs not.

    The commuting case (diagonal state, matching projectors) shows the
    joint entropy unchanged and the demon's record entropy equal to the
    mutual information it purchased.  The non-commuting case (|+> state,
    z-basis projectors) shows the extra Holevo-quantity cost of the
    reduction.  Also checks that the record-writing unitary squares to
    the identity at rounding level.
    """
    commuting = measurement_entropy_audit(
        DensityMatrix.diagonal([0.25, 0.75]), ProjectorSet.computational(2), 3)
    plus = DensityMatrix.pure([1.0, 1.0])
    noncommuting = measurement_entropy_audit(
        plus, ProjectorSet.computational(2), 3)
    u = build_measurement_unitary(ProjectorSet.computational(2), 0, [1, 2], 3)

    def audit_dict(a):
        return {
            "h_system_before": a.h_system_before,
            "h_joint_before": a.h_joint_before,
            "h_joint_after": a.h_joint_after,
            "joint_entropy_change": a.joint_entropy_change,
            "delta_h_demon": a.delta_h_demon,
            "delta_mutual_information": a.delta_mutual_information,
            "commuting": a.commuting,
            "chi": a.chi,
            "outcome_probabilities": list(a.outcome_probabilities),
        }

    checks = {
        "involution_defect": u.involution_defect(),
        "unitarity_defect": u.unitarity_defect(),
        "commuting_joint_change": abs(commuting.joint_entropy_change),
        "audit_identity_commuting": abs(
            commuting.delta_h_demon - commuting.delta_mutual_information),
        "audit_identity_noncommuting": abs(
            noncommuting.delta_h_demon - noncommuting.delta_mutual_information),
        "chi_plus_state": noncommuting.chi,
    }
    ok = (checks["involution_defect"] < 1e-12
          and checks["unitarity_defect"] < 1e-12
          and checks["commuting_joint_change"] < 1e-10
          and checks["audit_identity_commuting"] < 1e-10
          and checks["audit_identity_noncommuting"] < 1e-10
          and abs(checks["chi_plus_state"] - 1.0) < 1e-12)
    body = {"commuting": audit_dict(commuting),
            "noncommuting": audit_dict(noncommuting),
            "checks": checks, "pass": ok}
    if config.out:
        write_atomic(config.out, _report_json("quantum", config, body))
    print(f"commuting audit: dH_D={commuting.delta_h_demon:.6f}  "
          f"dI_SD={commuting.delta_mutual_information:.6f}  "
          f"joint change={commuting.joint_entropy_change:.2e}")
    print(f"non-commuting audit: chi={noncommuting.chi:.6f}  "
          f"commuting flag={noncommuting.commuting}")
    print(f"U involution defect={checks['involution_defect']:.2e}  pass={ok}")
    return (0 if ok else 1), body


def _scenario_policy_search(config: RunConfig):
    geometry = EngineGeometry.from_ratio(config.ell_over_l[0])
    report = enumerate_policies(geometry, config.states, config.horizon,
                                config.crn_seeds, seed=config.seed)
    body = {
        "behaviours_explored": report.behaviours_explored,
        "invalid_designs": report.invalid_designs,
        "full_table_count": report.full_table_count,
        "best_dp_value": report.best_dp_value,
        "max_crn_mean": report.max_crn_mean,
        "max_crn_stderr": report.max_crn_stderr,
        "crn_policies_evaluated": report.crn_policies_evaluated,
        "second_law_ok": report.second_law_ok,
        "best_policy": report.best_policy.to_json_dict(),
    }
    if config.out:
        write_atomic(config.out, _report_json("policy-search", config, body))
    print(f"policy search: {report.behaviours_explored} behaviours "
          f"({report.invalid_designs} invalid designs)  "
          f"best={report.max_crn_mean:.6f} +- {report.max_crn_stderr:.6f}  "
          f"second law ok: {report.second_law_ok}")
    return (0 if report.second_law_ok else 1), body


_SCENARIOS = {
    "sweep": _scenario_sweep,
    "cycle": _scenario_cycle,
    "livelock": _scenario_livelock,
    "extract-first": _scenario_extract_first,
    "delayed": _scenario_delayed,
    "quantum": run_quantum_demo,
    "policy-search": _scenario_policy_search,
}


def run_scenario(config: RunConfig):
    """Dispatch a validated config; returns (exit_status, artifacts)."""
    if config.scenario not in _SCENARIOS:
        raise ValidationError(f"unknown scenario {config.scenario!r}")
    return _SCENARIOS[config.scenario](config)


def _parse_ratio_list(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _parse_seed_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demonlab",
        description="Szilard/Gabor engine and demon-policy simulator")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in _SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", type=str, default=None,
                       help="JSON file with defaults for any flag")
        p.add_argument("--ell-over-l", type=str, default=None,
                       help="comma-separated ell/L values in (0,1)")
        p.add_argument("--cycles", type=int, default=None)
        p.add_argument("--n", type=int, default=None,
                       help="delayed-erasure tape length")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--seeds", type=str, default=None,
                       help="comma-separated seed list (overrides --seed)")
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", type=str, default=None,
                       choices=("csv", "json-lines"))
        p.add_argument("--max-steps", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--states", type=int, default=None)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument("--crn-seeds", type=int, default=None)
    return parser


def _effective(args: argparse.Namespace) -> RunConfig:
    """CLI flags override config-file values override defaults."""
    file_conf = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config file: {exc}")
        unknown = set(file_conf) - set(_DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")

    def pick(key, cli_value, convert=None):
        if cli_value is not None:
            return cli_value
        if key in file_conf and file_conf[key] is not None:
            value = file_conf[key]
            return convert(value) if convert else value
        return _DEFAULTS[key]

    ratios = pick("ell_over_l", _parse_ratio_list(args.ell_over_l)
                  if args.ell_over_l else None,
                  convert=lambda v: tuple(float(x) for x in v))
    seed = pick("seed", args.seed)
    seeds = pick("seeds", _parse_seed_list(args.seeds) if args.seeds else None,
                 convert=lambda v: tuple(int(x) for x in v))
    if seeds is None:
        seeds = (seed,)
    return RunConfig(
        scenario=args.scenario,
        ell_over_l=tuple(ratios),
        cycles=pick("cycles", args.cycles),
        n=pick("n", args.n),
        seed=seed,
        seeds=tuple(seeds),
        out=pick("out", args.out),
        format=pick("format", args.format),
        max_steps=pick("max_steps", args.max_steps),
        trials=pick("trials", args.trials),
        states=pick("states", args.states),
        horizon=pick("horizon", args.horizon),
        crn_seeds=pick("crn_seeds", args.crn_seeds),
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _effective(args)
        status, _ = run_scenario(config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return status


if __name__ == "__main__":
    sys.exit(main())
