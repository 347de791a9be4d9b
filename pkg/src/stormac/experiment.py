"""Multi-seed experiment orchestration and CSV output."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .baseline import train_baseline
from .diagnostics import NUMERIC_FIELDS, aggregate
from .errors import DivergenceError, ParameterError
from .mdp import TabularMdp, load_mdp, random_mdp
from .storm import StepSchedules, train

ALGOS = ("storm", "baseline")
RESULT_COLUMNS = ("algo", "seed", "k", "J", "a", "z", "y", "w", "x", "gdl_ok", "bounds_ok", "diverged_at")


@dataclass(frozen=True)
class ExperimentConfig:
    S: int = 10
    A: int = 5
    gamma: float = 0.9
    mdp_seed: int = 0
    algo: str = "both"
    iterations: int = 20000
    seeds: int = 20
    seed_base: int = 0
    c_b: float = 0.1
    eta_scale: float = 1.0
    beta_scale: float = 1.0
    nu_rate: float = 0.001
    log_every: int = 100
    output_path: str = "results.csv"
    reward_range: str = "unit"
    mdp_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.S < 1 or self.A < 1:
            raise ParameterError("S and A must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ParameterError("gamma must lie in [0, 1)")
        if self.algo not in ("storm", "baseline", "both"):
            raise ParameterError(f"algo must be storm, baseline or both, got {self.algo!r}")
        if self.iterations < 1 or self.seeds < 1 or self.log_every < 1 or self.workers < 1:
            raise ParameterError("iterations, seeds, log_every and workers must be >= 1")
        if not 0.0 < self.c_b <= 1.0:
            raise ParameterError("c_b must lie in (0, 1]")
        if self.eta_scale <= 0 or self.beta_scale <= 0 or self.nu_rate <= 0:
            raise ParameterError("step-size scales and nu_rate must be positive")
        if self.reward_range not in ("unit", "symmetric"):
            raise ParameterError("reward_range must be unit or symmetric")

    @property
    def algos(self):
        return ALGOS if self.algo == "both" else (self.algo,)

    @property
    def schedules(self) -> StepSchedules:
        return StepSchedules(self.eta_scale, self.beta_scale, self.nu_rate)

    def build_mdp(self) -> TabularMdp:
        if self.mdp_path:
            return load_mdp(self.mdp_path)
        return random_mdp(self.S, self.A, self.gamma, self.mdp_seed, self.reward_range)

    @property
    def aggregate_path(self) -> Path:
        out = Path(self.output_path)
        return out.with_name(out.stem + "_aggregate" + (out.suffix or ".csv"))


# key = value config files; flag spellings and field names both accepted
CONFIG_ALIASES = {"cb": "c_b", "out": "output_path", "mdp": "mdp_path"}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        key = CONFIG_ALIASES.get(key, key)
        if key not in _FIELD_TYPES:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        values[key] = coerce(key, value)
    return values


def coerce(key: str, value):
    typ = _FIELD_TYPES[key]
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
    except ValueError as exc:
        raise ParameterError(f"bad value for {key}: {value!r}") from exc
    return value


@dataclass
class SeedResult:
    algo: str
    seed: int
    records: list
    diverged_at: Optional[int] = None


def run_one(config: ExperimentConfig, algo: str, seed: int, mdp: TabularMdp | None = None) -> SeedResult:
    if mdp is None:
        mdp = config.build_mdp()
    try:
        if algo == "storm":
            records = train(mdp, config.schedules, config.c_b, config.iterations, seed, config.log_every)
        else:
            records = train_baseline(mdp, config.eta_scale, config.beta_scale, config.iterations, seed, config.log_every)
    except DivergenceError as exc:
        return SeedResult(algo, seed, exc.records, exc.iteration)
    return SeedResult(algo, seed, records)


def _run_task(args):
    config, algo, seed = args
    return run_one(config, algo, seed)


def run_experiment(config: ExperimentConfig) -> list[SeedResult]:
    """All (algo, seed) runs, ordered by algo then seed regardless of worker count."""
    tasks = [(config, algo, config.seed_base + i) for algo in config.algos for i in range(config.seeds)]
    if config.workers == 1:
        mdp = config.build_mdp()
        return [run_one(config, algo, seed, mdp) for _, algo, seed in tasks]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_run_task, tasks))


def _num(v) -> str:
    return format(float(v), ".12g")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def results_csv_text(results: list[SeedResult]) -> str:
    fh = io.StringIO()
    w = _writer(fh)
    w.writerow(RESULT_COLUMNS)
    for res in results:
        div = "" if res.diverged_at is None else str(res.diverged_at)
        for r in res.records:
            w.writerow([res.algo, res.seed, r.k, *(_num(getattr(r, f)) for f in NUMERIC_FIELDS),
                        int(r.gdl_ok), int(r.bounds_ok), div])
    return fh.getvalue()


def aggregate_rows(results: list[SeedResult]) -> list[dict]:
    """Per-(algo, k) mean/std over non-diverged seeds."""
    rows = []
    for algo in dict.fromkeys(r.algo for r in results):
        runs = [r for r in results if r.algo == algo]
        ok = [r.records for r in runs if r.diverged_at is None]
        n_div = len(runs) - len(ok)
        if not ok:
            continue
        agg = aggregate(ok)
        for i, k in enumerate(agg.ks):
            row = {"algo": algo, "k": int(k), "n_seeds": len(ok), "n_diverged": n_div}
            for f in NUMERIC_FIELDS:
                row[f + "_mean"] = agg.mean[f][i]
                row[f + "_std"] = agg.std[f][i]
            rows.append(row)
    return rows


AGGREGATE_COLUMNS = ("algo", "k", "n_seeds", "n_diverged") + tuple(
    f"{f}_{s}" for f in NUMERIC_FIELDS for s in ("mean", "std")
)


def aggregate_csv_text(rows: list[dict]) -> str:
    fh = io.StringIO()
    w = _writer(fh)
    w.writerow(AGGREGATE_COLUMNS)
    for row in rows:
        w.writerow([row[c] if c in ("algo", "k", "n_seeds", "n_diverged") else _num(row[c]) for c in AGGREGATE_COLUMNS])
    return fh.getvalue()


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def mean_curve(rows: list[dict], field: str, algo: str | None = None):
    """Cross-seed mean of ``field`` per k from a results (or aggregate) CSV.

    Returns ``{algo: (ks, means)}``. Diverged seeds are skipped.
    """
    if not rows:
        raise ParameterError("empty CSV")
    cols = rows[0].keys()
    if field in cols:
        col = field
    elif f"{field}_mean" in cols:
        col = f"{field}_mean"
    else:
        raise ParameterError(f"CSV has no column {field!r}")
    if "k" not in cols:
        raise ParameterError("CSV has no column 'k'")
    groups: dict = {}
    for row in rows:
        name = row.get("algo", "")
        if algo is not None and name != algo:
            continue
        if row.get("diverged_at"):
            continue
        groups.setdefault(name, {}).setdefault(int(row["k"]), []).append(float(row[col]))
    out = {}
    for name, by_k in groups.items():
        ks = np.array(sorted(by_k))
        out[name] = (ks, np.array([np.mean(by_k[k]) for k in ks]))
    return out


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})

