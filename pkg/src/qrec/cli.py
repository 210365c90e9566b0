"""Command-line experiment runner.

Every option can also come from an INI file (``--config``); flags win over the
file.  Output files start with a ``# key=value`` block recording the full
configuration, and ``--config`` accepts such an output file as well, so any
run can be replayed from its own output.

Exit codes: 0 success, 1 a checked inequality or condition failed,
2 configuration error, 3 ambiguity budget exceeded, 4 precision exhausted.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .conditions import ConditionsSettings, run_conditions
from .cylinders import CYLINDER_COLUMNS, cylinder_rows, enumerate_cylinders
from .errors import PrecisionExhausted
from .measures import measure_for
from .rates import parse_rate
from .recurrence import (AMBIGUOUS, HIT, EngineConfig, ZStats, classify_orbits, dichotomy_experiment,
                         estimate_many, pair_from_codes, paley_zygmund_check, quasi_independence_ratio)
from .recurrence import _estimate_column
from .systems import GaussSystem, parse_system

COMMANDS = ("verify-conditions", "estimate", "pair", "zn", "dichotomy", "cylinders")
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_AMBIGUOUS, EXIT_PRECISION = 0, 1, 2, 3, 4
# fields that never change output bytes stay out of the embedded header
NOT_RECORDED = ("workers", "output")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    system: str = "beta:2"
    psi: str = "constant:c=0.01"
    n: str = "10"
    m: str = "5"
    samples: int = 10000
    N: int = 100
    lam: float = 0.5
    window: str = "100:200"
    split: bool = True
    independent: bool = False
    seed: int | None = None
    prec: int | None = None
    guard: int | None = None
    digits: int | None = None
    digit_cap: int | None = None
    n_max: int = 10
    mixing_samples: int = 200000
    ambiguity_cap: float = 1e-3
    format: str = "csv"
    workers: int = 1
    output: str = "."

    def engine(self) -> EngineConfig:
        return EngineConfig(workers=self.workers, guard=self.guard, prec=self.prec,
                            digits=self.digits, ambiguity_cap=self.ambiguity_cap)

    def recorded(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in NOT_RECORDED}


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _convert(key: str, value):
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    if value is None or isinstance(value, (bool, int, float)) and not isinstance(value, str):
        return value
    text = str(value).strip()
    kind = FIELD_TYPES[key]
    if "None" in kind and text in ("", "None"):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        if kind.startswith("bool"):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind}") from None
    return text


def int_list(text: str) -> list[int]:
    """``"5,10,20"`` or ``"1:30"`` (inclusive) or a mix of both."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            a, b = part.split(":", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def window_of(text: str) -> tuple[int, int]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"window must look like N0:N1, got {text!r}")
    return int(parts[0]), int(parts[1])


# ---------------------------------------------------------------- config sources

def read_config_file(path: str, command: str) -> dict:
    """Settings from an INI file or from the header of a previous output."""
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return dict(json.loads(text)["config"])
    if stripped.startswith("#"):
        return parse_header(text)
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = dict(parser.defaults())
    for section in ("experiment", command):
        if parser.has_section(section):
            values.update({k: v for k, v in parser.items(section)})
    return values


def parse_header(text: str) -> dict:
    values = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if "=" in body:
            k, v = body.split("=", 1)
            values[k.strip()] = v
    values.pop("qrec_version", None)
    return values


def build_config(command: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    merged = {}
    for source in (file_values, flag_values):
        for k, v in source.items():
            k = k.replace("-", "_")
            if k == "command":
                continue
            merged[k] = _convert(k, v)
    config = ExperimentConfig(command=command, **merged)
    validate(config)
    return config


def validate(config: ExperimentConfig) -> None:
    if config.seed is None:
        raise ConfigError("a seed is required (--seed); entropy-seeded runs are not supported")
    for key in ("samples", "N", "n_max", "mixing_samples", "workers"):
        if getattr(config, key) < 1:
            raise ConfigError(f"{key} must be positive")
    for key in ("prec", "guard", "digits", "digit_cap"):
        value = getattr(config, key)
        if value is not None and value < 1:
            raise ConfigError(f"{key} must be positive")
    if not 0 < config.lam < 1:
        raise ConfigError("lam must lie in (0, 1)")
    if config.format not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    try:
        parse_system(config.system)
        parse_rate(config.psi)
        ns, ms = int_list(config.n), int_list(config.m)
        window_of(config.window)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if config.command in ("estimate", "pair") and (not ns or min(ns) < 1):
        raise ConfigError("n must list positive integers")
    if config.command == "pair" and (not ms or not any(m < n for m in ms for n in ns)):
        raise ConfigError("pair needs at least one m < n")


# ---------------------------------------------------------------- output

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def render(config: ExperimentConfig, columns, rows) -> str:
    if config.format == "json":
        payload = {
            "qrec_version": __version__,
            "config": config.recorded(),
            "columns": list(columns),
            "rows": [dict(zip(columns, (_jsonable(v) for v in row))) for row in rows],
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# qrec_version={__version__}\n")
    for k, v in config.recorded().items():
        buf.write(f"# {k}={'' if v is None else _fmt(v)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_output(config: ExperimentConfig, stem: str, columns, rows) -> str:
    os.makedirs(config.output, exist_ok=True)
    path = os.path.join(config.output, f"{stem}.{config.format}")
    with open(path, "w", newline="") as fh:
        fh.write(render(config, columns, rows))
    return path


# ---------------------------------------------------------------- subcommands

@dataclass
class RunResult:
    stem: str
    columns: tuple
    rows: list
    status: int = EXIT_OK
    message: str = ""


def run_estimate(config: ExperimentConfig) -> RunResult:
    system, psi = parse_system(config.system), parse_rate(config.psi)
    ns = int_list(config.n)
    estimates = estimate_many(system, measure_for(system), psi, ns, config.samples, config.seed,
                              config.engine(), independent=config.independent)
    delta = system.ahlfors_dim
    rows = []
    for n, est in zip(ns, estimates):
        p = float(psi(n))
        rows.append((n, p, p ** delta, est.value, est.std_error, est.hits, est.ambiguous))
    worst = max(e.ambiguous_rate for e in estimates)
    result = RunResult("an", ("n", "psi", "psi_delta", "estimate", "stderr", "hits", "ambiguous"), rows)
    return _ambiguity_gate(result, worst, config)


def run_pair(config: ExperimentConfig) -> RunResult:
    system, psi = parse_system(config.system), parse_rate(config.psi)
    pairs = sorted({(m, n) for m in int_list(config.m) for n in int_list(config.n) if 1 <= m < n})
    index = sorted({k for p in pairs for k in p})
    cfg = config.engine()
    v = classify_orbits(system, psi, index, config.samples, config.seed, cfg)
    col = {k: j for j, k in enumerate(index)}
    singles = {k: _estimate_column(v, col[k], config.seed, cfg) for k in index}
    rows, worst = [], 0.0
    for m, n in pairs:
        pair = pair_from_codes(v.codes[:, col[m]], v.codes[:, col[n]], config.seed, v.resampled,
                               cfg.ambiguity_cap)
        ratio = quasi_independence_ratio(singles[m], singles[n], pair)
        worst = max(worst, pair.ambiguous_rate)
        rows.append((m, n, pair.value, pair.std_error, ratio.value, ratio.std_error,
                     singles[m].value, singles[n].value, pair.ambiguous))
    result = RunResult("pair", ("m", "n", "estimate", "stderr", "ratio", "ratio_stderr",
                                "estimate_m", "estimate_n", "ambiguous"), rows)
    return _ambiguity_gate(result, worst, config)


def zn_checkpoints(N: int) -> list[int]:
    return sorted({max(1, N // 4), max(1, N // 2), N})


def run_zn(config: ExperimentConfig) -> RunResult:
    system, psi = parse_system(config.system), parse_rate(config.psi)
    N = config.N
    v = classify_orbits(system, psi, range(1, N + 1), config.samples, config.seed, config.engine())
    hits = np.cumsum(v.codes == HIT, axis=1)
    amb = np.cumsum(v.codes == AMBIGUOUS, axis=1)
    rows, failed = [], []
    for k in zn_checkpoints(N):
        stats = ZStats(k, hits[:, k - 1], amb[:, k - 1], config.seed)
        if stats.mean > 0:
            pz = paley_zygmund_check(stats, config.lam)
            lhs, rhs, se = pz.lhs, pz.rhs, pz.stderr
            if not pz.holds:
                failed.append(k)
        else:
            lhs = rhs = se = float("nan")
        rows.append((k, stats.mean, stats.second_moment, lhs, rhs, se, config.lam, stats.ambiguous_rate))
    result = RunResult("zn", ("N", "mean", "second_moment", "pz_lhs", "pz_rhs", "pz_stderr", "lam",
                              "ambiguous_rate"), rows)
    if failed:
        result.status = EXIT_CHECK_FAILED
        result.message = f"Paley-Zygmund inequality violated beyond 3 standard errors at N={failed}"
    return _ambiguity_gate(result, v.ambiguous_rate, config)


def run_dichotomy(config: ExperimentConfig) -> RunResult:
    system, psi = parse_system(config.system), parse_rate(config.psi)
    report = dichotomy_experiment(system, measure_for(system), psi, window_of(config.window),
                                  config.samples, config.seed, config.engine(), split=config.split)
    verdict = report.verdict.classification.value
    rows = [(r.start, r.end, r.hit_fraction, r.series_partial_sum, verdict, r.std_error, r.an_sum,
             r.ambiguous, r.samples) for r in report.rows]
    result = RunResult("dichotomy", ("window_start", "window_end", "hit_fraction", "series_partial_sum",
                                     "verdict", "stderr", "an_sum", "ambiguous", "samples"), rows,
                       message=report.interpretation)
    return _ambiguity_gate(result, report.ambiguous_rate, config)


def run_verify_conditions(config: ExperimentConfig) -> RunResult:
    system = parse_system(config.system)
    settings = ConditionsSettings(seed=config.seed, mixing_samples=config.mixing_samples,
                                  n_max=config.n_max, gauss_cap=config.digit_cap or 50)
    report = run_conditions(system, settings)
    rows = [(r.name, r.status, r.statistic, r.bound, json.dumps(r.details, sort_keys=True, default=str),
             r.error or "") for r in report.results]
    result = RunResult("conditions", ("condition", "status", "statistic", "bound", "details", "error"), rows)
    if not report.all_passed:
        result.status = EXIT_CHECK_FAILED
        result.message = "conditions FAILED: " + ", ".join(r.name for r in report.results if not r.passed)
    return result


def run_cylinders(config: ExperimentConfig) -> RunResult:
    system = parse_system(config.system)
    cap = config.digit_cap if isinstance(system, GaussSystem) else None
    records = enumerate_cylinders(system, config.n_max, cap)
    return RunResult("cylinders", CYLINDER_COLUMNS, list(cylinder_rows(records)))


def _ambiguity_gate(result: RunResult, rate: float, config: ExperimentConfig) -> RunResult:
    if rate >= config.ambiguity_cap and result.status == EXIT_OK:
        result.status = EXIT_AMBIGUOUS
        result.message = f"ambiguous rate {rate:.3g} exceeds the budget {config.ambiguity_cap:g}"
    return result


RUNNERS = {
    "verify-conditions": run_verify_conditions,
    "estimate": run_estimate,
    "pair": run_pair,
    "zn": run_zn,
    "dichotomy": run_dichotomy,
    "cylinders": run_cylinders,
}


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrec", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qrec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS
    for name in COMMANDS:
        p = sub.add_parser(name, argument_default=S)
        p.add_argument("--config", help="INI file, or an earlier output file to replay")
        p.add_argument("--system", help="beta:<value> | gauss | cantor3")
        p.add_argument("--seed", help="master seed (required)")
        p.add_argument("--output", help="output directory")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--workers", help="worker processes; does not change results")
        if name in ("estimate", "pair", "zn", "dichotomy"):
            p.add_argument("--psi", help="power:c=,a= | logpower:c=,a=,b= | constant:c= | table:v;v;...")
            p.add_argument("--samples", help="Monte Carlo sample count M")
            p.add_argument("--prec", help="working precision in bits")
            p.add_argument("--guard", help="guard digits")
            p.add_argument("--digits", help="override the digit budget")
            p.add_argument("--ambiguity-cap", help="largest tolerated ambiguous fraction")
        if name in ("estimate", "pair"):
            p.add_argument("--n", help="list such as 5,10,20 or 1:30")
        if name == "estimate":
            p.add_argument("--independent", help="fresh draws per n (true/false)")
        if name == "pair":
            p.add_argument("--m", help="list of first indices; every m < n is paired")
        if name == "zn":
            p.add_argument("--N", help="horizon N")
            p.add_argument("--lam", help="Paley-Zygmund lambda in (0, 1)")
        if name == "dichotomy":
            p.add_argument("--window", help="N0:N1")
            p.add_argument("--split", help="add dyadic sub-windows (true/false)")
        if name in ("verify-conditions", "cylinders"):
            p.add_argument("--n-max", help="largest order checked / order enumerated")
            p.add_argument("--digit-cap", help="largest Gauss digit enumerated")
        if name == "verify-conditions":
            p.add_argument("--mixing-samples", help="orbit samples for the mixing fit")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        file_values = read_config_file(config_path, command) if config_path else {}
        config = build_config(command, file_values, args)
    except (ConfigError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = RUNNERS[command](config)
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    path = write_output(config, result.stem, result.columns, result.rows)
    print(path)
    if result.message:
        print(result.message, file=sys.stderr if result.status else sys.stdout)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
