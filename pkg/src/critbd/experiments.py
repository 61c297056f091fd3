"""Reproducible experiment runner.

Configs are flat `key = value` text files (one key per line, `#` comments,
unknown keys rejected).  Every run echoes its full config into the result;
identical (config, seed) pairs reproduce the payload bit-exactly for any
worker count, because each replicate owns a stream keyed by
(seed, replicate_index) and rows are assembled in replicate order.

Output tables render floats with 17 significant digits (round-half-even),
which round-trips binary64 exactly; volatile metadata such as wall-clock
time stays out of the output files.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, replace

import numpy as np

from . import chain, laplace, population, renewal

__all__ = [
    "ExperimentConfig",
    "ResultRecord",
    "ConfigError",
    "EXPERIMENTS",
    "default_config",
    "parse_config",
    "serialize_config",
    "run",
    "report",
    "format_number",
]

ARTIFACT_VERSION = "0.1.0"

EXPERIMENTS = (
    "hitting-cdf",
    "renewal-solve",
    "ode-oracle",
    "tauberian",
    "persistence",
    "tn-scaling",
    "gf-identity",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; lists the offending keys."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    variant: str = "A"
    lam: float = 1.0
    alpha: float = 0.5
    t: float = 50.0
    n: int = 1000
    start: int = 2
    target: int = 1
    replicates: int = 1000
    engine: str = "reduced"
    step: float = 0.01
    horizon: float = 50.0
    refine_levels: int = 1
    n_max: int = 400
    ode_step: float = 0.00125
    output_step: float = 0.01
    weight: int = 1
    tail: str = "reciprocal"
    s_values: tuple = (0.1, 1.0)
    h_values: tuple = (100.0, 200.0, 400.0)
    t_values: tuple = (1.0, 5.0, 10.0)
    time_cap: float = chain.DEFAULT_TIME_CAP
    event_cap: int = chain.DEFAULT_EVENT_CAP
    seed: int = 1
    out: str = ""
    format: str = "csv"


# experiment-specific defaults layered over the dataclass defaults
_OVERRIDES = {
    "tauberian": {"step": 0.0125, "horizon": 400.0, "refine_levels": 3},
    # the truncated power series needs s in [0, 1)
    "gf-identity": {"step": 0.001, "horizon": 10.0, "s_values": (0.0, 0.5)},
    # the excursion sampler tallies event counts instead of simulating each
    # jump, so the caps can sit far beyond any Gillespie-feasible budget
    "tn-scaling": {"replicates": 100, "time_cap": 1e18, "event_cap": 10**18},
    "persistence": {"replicates": 10000, "t": 50.0},
    "hitting-cdf": {"replicates": 100000},
}

_TYPES = {"str": str, "float": float, "int": int, "tuple": tuple}
_FIELD_TYPES = {f: _TYPES[t] for f, t in ExperimentConfig.__annotations__.items()}


def default_config(experiment: str) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    return ExperimentConfig(experiment=experiment, **_OVERRIDES.get(experiment, {}))


def _coerce(key: str, raw: str):
    target = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if target is float:
            return float(raw)
        if target is int:
            return int(float(raw)) if ("e" in raw or "E" in raw) else int(raw)
        if target is tuple:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError as e:
        raise ConfigError(f"cannot parse {key} = {raw!r}: {e}") from None


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    """Parse a flat key=value config; unknown keys are an error."""
    values: dict = {}
    bad = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            bad.append(f"line {lineno}: {line!r}")
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "lambda":  # config alias for the birth-rate multiplier
            key = "lam"
        if key not in _FIELD_TYPES:
            bad.append(key)
            continue
        values[key] = _coerce(key, raw)
    if bad:
        raise ConfigError(f"unknown or malformed config keys: {', '.join(map(str, bad))}")
    exp = values.pop("experiment", experiment)
    if exp is None:
        raise ConfigError("no experiment given (config key or CLI subcommand)")
    if experiment is not None and exp != experiment:
        raise ConfigError(f"config experiment {exp!r} does not match subcommand {experiment!r}")
    cfg = replace(default_config(exp), **values)
    validate_config(cfg)
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in asdict(cfg).items():
        name = "lambda" if key == "lam" else key
        if isinstance(value, tuple):
            value = ", ".join(format_number(v) for v in value)
        elif isinstance(value, float):
            value = format_number(value)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def validate_config(cfg: ExperimentConfig) -> None:
    bad = []
    if cfg.experiment not in EXPERIMENTS:
        bad.append(f"experiment={cfg.experiment!r}")
    if cfg.variant not in ("A", "B"):
        bad.append(f"variant={cfg.variant!r}")
    if cfg.lam <= 0:
        bad.append(f"lambda={cfg.lam}")
    if not (0 < cfg.alpha <= 1):
        bad.append(f"alpha={cfg.alpha}")
    if cfg.t <= 0:
        bad.append(f"t={cfg.t}")
    if cfg.n < 1:
        bad.append(f"n={cfg.n}")
    if cfg.replicates < 1:
        bad.append(f"replicates={cfg.replicates}")
    if cfg.engine not in ("reduced", "full"):
        bad.append(f"engine={cfg.engine!r}")
    if cfg.step <= 0 or cfg.horizon < cfg.step:
        bad.append(f"step={cfg.step}, horizon={cfg.horizon}")
    if cfg.refine_levels not in (1, 2, 3):
        bad.append(f"refine_levels={cfg.refine_levels}")
    if cfg.n_max < 3:
        bad.append(f"n_max={cfg.n_max}")
    if cfg.weight not in (0, 1, 2):
        bad.append(f"weight={cfg.weight}")
    if cfg.tail not in ("none", "reciprocal"):
        bad.append(f"tail={cfg.tail!r}")
    if cfg.format not in ("csv", "json"):
        bad.append(f"format={cfg.format!r}")
    if bad:
        raise ConfigError("invalid config values: " + ", ".join(bad))


@dataclass
class ResultRecord:
    config: ExperimentConfig
    version: str
    wall_clock: float
    payload: dict  # table name -> {"header": [...], "rows": [[...], ...]}
    counters: dict
    seed_override_applied: bool = False

    @property
    def partial(self) -> bool:
        return any(
            self.counters.get(k, 0) > 0 for k in ("censored", "aborted")
        )


def format_number(x) -> str:
    """17-significant-digit decimal rendering; exact binary64 round-trip."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _effective_seed(cfg: ExperimentConfig) -> tuple[int, bool]:
    override = os.environ.get("SEED_OVERRIDE")
    if override is not None:
        return int(override), True
    return cfg.seed, False


def _split_ranges(n: int, workers: int) -> list[range]:
    workers = max(1, min(workers, n))
    sizes = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]
    ranges, lo = [], 0
    for size in sizes:
        ranges.append(range(lo, lo + size))
        lo += size
    return ranges


def _map_replicates(worker, args: tuple, n: int, workers: int) -> list[np.ndarray]:
    """Run `worker(args, rng_range)` over contiguous replicate ranges.

    Chunks are concatenated in index order, so the result is identical for
    any worker count.
    """
    ranges = _split_ranges(n, workers)
    if len(ranges) == 1 or workers <= 1:
        return [worker(args, r) for r in ranges]
    with ProcessPoolExecutor(max_workers=len(ranges)) as pool:
        futures = [pool.submit(worker, args, r) for r in ranges]
        return [f.result() for f in futures]


# module-level workers (picklable for the process pool)

def _hitting_worker(args, idx_range):
    variant, lam, start, target, seed, time_cap, event_cap = args
    model = chain.ModelSpec(variant=variant, lam=lam)
    return chain.sample_hitting_batch(
        model, start, target, seed, idx_range, time_cap, event_cap
    )


def _tn_worker(args, idx_range):
    lam, n, seed, time_cap, event_cap = args
    model = chain.ModelSpec(variant="A", lam=lam)
    return chain.sample_tn_batch(model, n, seed, idx_range, time_cap, event_cap)


def _persistence_worker(args, idx_range):
    lam, alpha, t, seed, event_cap, engine = args
    return population.persistence_outcomes(
        lam, alpha, t, len(idx_range), seed, idx_range, event_cap, engine
    )


def _solve_refined(cfg: ExperimentConfig):
    return renewal.solve_renewal_refined(cfg.step, cfg.horizon, cfg.refine_levels)


def _run_hitting_cdf(cfg, seed, workers):
    args = (cfg.variant, cfg.lam, cfg.start, cfg.target, seed, cfg.time_cap, cfg.event_cap)
    parts = _map_replicates(_hitting_worker, args, cfg.replicates, workers)
    rows = []
    censored = 0
    idx = 0
    for part in parts:
        for t, cen, ev in part:
            rows.append([idx, float(t), int(cen), int(ev)])
            censored += int(cen)
            idx += 1
    payload = {
        "samples": {"header": ["replicate", "time", "censored", "events"], "rows": rows}
    }
    return payload, {"censored": censored, "completed": cfg.replicates - censored}


def _run_renewal_solve(cfg, seed, workers):
    F = _solve_refined(cfg)
    fp = renewal.f_prime(F)
    rows = [
        [float(t), float(v), float(d)]
        for t, v, d in zip(F.grid, F.values, fp.values)
    ]
    payload = {"solution": {"header": ["t", "F", "Fprime"], "rows": rows}}
    return payload, {}


def _run_ode_oracle(cfg, seed, workers):
    ode = renewal.solve_ode_truncation(cfg.n_max, cfg.ode_step, cfg.horizon, cfg.output_step)
    deficit = ode.mass_deficit
    rows = [
        [float(t), float(p1), float(d)]
        for t, p1, d in zip(ode.grid, ode.p1, deficit)
    ]
    payload = {"oracle": {"header": ["t", "P1", "mass_deficit"], "rows": rows}}
    return payload, {}


def _run_tauberian(cfg, seed, workers):
    F = _solve_refined(cfg)
    moment_rows = []
    for h in cfg.h_values:
        mi = laplace.moment_integrals(F, h)
        moment_rows.append([h, mi.m, mi.s2, laplace.tail_product(F, h)])
    transform_rows = []
    flagged = 0
    for s in cfg.s_values:
        ev = laplace.laplace_of_increments(F, s, cfg.weight, cfg.tail)
        flagged += int(ev.unreliable)
        transform_rows.append([ev.s, ev.value, ev.tail_share])
    payload = {
        "moments": {"header": ["h", "m", "s2", "tail_product"], "rows": moment_rows},
        "transforms": {"header": ["s", "value", "tail_share"], "rows": transform_rows},
    }
    return payload, {"unreliable": flagged}


def _run_persistence(cfg, seed, workers):
    args = (cfg.lam, cfg.alpha, cfg.t, seed, cfg.event_cap, cfg.engine)
    parts = _map_replicates(_persistence_worker, args, cfg.replicates, workers)
    rows_all = np.vstack(parts)
    completed = int(rows_all[:, 1].sum())
    same = int((rows_all[:, 0] & rows_all[:, 1]).sum())
    est = same / completed if completed else float("nan")
    stderr = math.sqrt(est * (1 - est) / completed) if completed else float("nan")
    payload = {
        "estimate": {
            "header": [
                "lambda", "alpha", "t", "replicates",
                "completed", "same_count", "estimate", "stderr",
            ],
            "rows": [[cfg.lam, cfg.alpha, cfg.t, cfg.replicates, completed, same, est, stderr]],
        }
    }
    return payload, {"aborted": cfg.replicates - completed, "completed": completed}


def _run_tn_scaling(cfg, seed, workers):
    args = (cfg.lam, cfg.n, seed, cfg.time_cap, cfg.event_cap)
    parts = _map_replicates(_tn_worker, args, cfg.replicates, workers)
    scale = cfg.n * math.log(cfg.n)
    rows = []
    censored = 0
    idx = 0
    for part in parts:
        for total, cen, ev in part:
            rows.append([cfg.n, idx, float(total), float(total) / scale])
            censored += int(cen)
            idx += 1
    payload = {
        "samples": {"header": ["n", "replicate", "total_time", "ratio"], "rows": rows}
    }
    return payload, {"censored": censored, "completed": cfg.replicates - censored}


def _run_gf_identity(cfg, seed, workers):
    F = _solve_refined(cfg)
    ode = renewal.solve_ode_truncation(cfg.n_max, cfg.ode_step, cfg.horizon, cfg.output_step)
    rows = []
    for s in cfg.s_values:
        for t in cfg.t_values:
            rows.append([s, t, renewal.gf_identity_residual(s, t, F, ode)])
    payload = {"residuals": {"header": ["s", "t", "residual"], "rows": rows}}
    return payload, {}


_RUNNERS = {
    "hitting-cdf": _run_hitting_cdf,
    "renewal-solve": _run_renewal_solve,
    "ode-oracle": _run_ode_oracle,
    "tauberian": _run_tauberian,
    "persistence": _run_persistence,
    "tn-scaling": _run_tn_scaling,
    "gf-identity": _run_gf_identity,
}


def run(cfg: ExperimentConfig, workers: int = 1, write: bool = True) -> ResultRecord:
    """Execute the experiment, optionally write its output files."""
    validate_config(cfg)
    seed, overridden = _effective_seed(cfg)
    t0 = time.perf_counter()
    payload, counters = _RUNNERS[cfg.experiment](cfg, seed, workers)
    record = ResultRecord(
        config=cfg,
        version=ARTIFACT_VERSION,
        wall_clock=time.perf_counter() - t0,
        payload=payload,
        counters=counters,
        seed_override_applied=overridden,
    )
    if write:
        write_record(record)
    return record


def _table_to_csv(table: dict) -> str:
    lines = [",".join(table["header"])]
    for row in table["rows"]:
        lines.append(",".join(format_number(x) for x in row))
    return "\n".join(lines) + "\n"


def output_paths(cfg: ExperimentConfig) -> list[str]:
    base = cfg.out or f"{cfg.experiment}.{cfg.format}"
    if cfg.format == "json":
        return [base]
    if cfg.experiment == "tauberian":
        stem = base[:-4] if base.endswith(".csv") else base
        return [f"{stem}_moments.csv", f"{stem}_transforms.csv"]
    return [base]


def write_record(record: ResultRecord) -> list[str]:
    """Write the record's payload; returns the written paths.

    Volatile fields (wall clock) are excluded so reruns with the same
    config and seed produce byte-identical files.
    """
    cfg = record.config
    paths = output_paths(cfg)
    if cfg.format == "json":
        doc = {
            "config": {("lambda" if k == "lam" else k): v for k, v in asdict(cfg).items()},
            "version": record.version,
            "experiment": cfg.experiment,
            "counters": record.counters,
            "seed_override_applied": record.seed_override_applied,
            "payload": record.payload,
        }
        with open(paths[0], "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return paths
    tables = list(record.payload.values())
    for path, table in zip(paths, tables):
        with open(path, "w") as fh:
            fh.write(_table_to_csv(table))
    return paths


def load_record(path: str) -> ResultRecord:
    with open(path) as fh:
        doc = json.load(fh)
    cfg_raw = dict(doc["config"])
    cfg_raw["lam"] = cfg_raw.pop("lambda")
    for key in ("s_values", "h_values", "t_values"):
        cfg_raw[key] = tuple(cfg_raw[key])
    cfg = ExperimentConfig(**cfg_raw)
    return ResultRecord(
        config=cfg,
        version=doc["version"],
        wall_clock=0.0,
        payload=doc["payload"],
        counters=doc["counters"],
        seed_override_applied=doc["seed_override_applied"],
    )


def report(records: list[ResultRecord]) -> dict:
    """Merge records of one experiment kind into a summary table."""
    if not records:
        raise ValueError("no records to report")
    kinds = {r.config.experiment for r in records}
    if len(kinds) > 1:
        raise ValueError(f"mixed experiment kinds: {sorted(kinds)}")
    kind = kinds.pop()
    if kind == "persistence":
        rows = []
        for r in records:
            rows.extend(r.payload["estimate"]["rows"])
        rows.sort(key=lambda row: (row[0], row[2]))  # by lambda then t
        return {"header": records[0].payload["estimate"]["header"], "rows": rows}
    if kind == "tn-scaling":
        rows = []
        for r in sorted(records, key=lambda r: r.config.n):
            ratios = np.array([row[3] for row in r.payload["samples"]["rows"]])
            q1, med, q3 = np.percentile(ratios, [25, 50, 75])
            rows.append([r.config.n, len(ratios), float(med), float(q3 - q1)])
        return {"header": ["n", "replicates", "median_ratio", "iqr_ratio"], "rows": rows}
    # generic merge: concatenate the first table of each record
    name = next(iter(records[0].payload))
    rows = []
    for r in records:
        rows.extend(r.payload[name]["rows"])
    return {"header": records[0].payload[name]["header"], "rows": rows}
