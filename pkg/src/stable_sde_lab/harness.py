"""Experiment orchestration: configs, replicate seeding, CSV artifacts.

Five canonical experiments, each probing one structural claim about the
equation dX = phi(X-) dZ:

  strong-construct   event-driven construction plus the monotone ladder
  ladder-monotone    finer-dominates-coarser comparison, exact, many replicates
  weak-agree         truncation solve vs time-change solve, agreement in law
  uniqueness-couple  shared-noise coupling: sup-distances shrink as the cutoff drops
  counterexample     degenerate coefficient x**beta: scaling law, recovered-noise
                     law, and the coexisting zero solution

Every replicate draws its own generator from (master seed, replicate index,
stream tag), so results are byte-reproducible and replicates are mutually
independent.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .counterexample import (
    driver_law_check,
    nonuniqueness_demo,
    scaling_law_check,
    write_report_csv,
)
from .driver import (
    StableParams,
    extend_truncated_path,
    sample_truncated_path,
    thin_path,
)
from .phi import MonotonePhi, parse_phi
from .seeding import derive_seed, replicate_rng
from .stats import SampleSet, ks_two_sample
from .timechange import solve_time_change
from .truncation import (
    Ladder,
    build_ladder,
    ladder_violations,
    monotone_limit_estimate,
    solve_truncated,
    sup_gap,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SummaryRow",
    "ExperimentResult",
    "parse_config_text",
    "load_config",
    "run_experiment",
]

EXPERIMENTS = (
    "strong-construct",
    "ladder-monotone",
    "weak-agree",
    "uniqueness-couple",
    "counterexample",
)

EXIT_PASS = 0
EXIT_STATISTICAL = 1
EXIT_INVARIANT = 2
EXIT_CONFIG = 3


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    alpha: float = 0.5
    beta: float | None = None
    phi: str = "constant(1)"
    x0: float = 0.0
    horizon: float = 1.0
    cutoffs: tuple[float, ...] = (0.1, 0.01, 0.001)
    grid_m: int = 10_000
    replicates: int = 1000
    seed: int = 0
    out: str = "out"
    threads: int = 1
    ks_p_threshold: float = 0.01
    couple_decay_max: float = 0.1
    min_coverage: float = 0.8

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.beta is not None and not (0.0 < self.beta < 1.0):
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if self.horizon <= 0.0:
            raise ConfigError(f"T must be positive, got {self.horizon}")
        if not self.cutoffs or any(e <= 0.0 for e in self.cutoffs):
            raise ConfigError("cutoffs must be positive")
        if any(b >= a for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise ConfigError("cutoffs must be strictly decreasing")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.grid_m < 100:
            raise ConfigError("grid_m must be >= 100")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def phi_object(self) -> MonotonePhi:
        return parse_phi(self.phi)


# Experiment-specific defaults, applied under explicit config keys.
_EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "strong-construct": {
        "alpha": 0.7,
        "phi": "shifted-arctan(2,0.6366)",
        "cutoffs": (0.1, 0.03, 0.01, 0.003, 0.001),
        "replicates": 8,
    },
    "ladder-monotone": {
        "alpha": 0.7,
        "phi": "shifted-arctan(2,0.6366)",
        "cutoffs": (0.1, 0.03, 0.01, 0.003, 0.001),
        "replicates": 1000,
    },
    "weak-agree": {
        "alpha": 0.4,
        "phi": "shifted-arctan(2,0.6366)",
        "cutoffs": (0.001,),
        "replicates": 5000,
    },
    "uniqueness-couple": {
        "alpha": 0.1,
        "phi": "shifted-arctan(2,0.6366)",
        "horizon": 30.0,
        "cutoffs": (0.1, 0.05, 0.025, 0.0125, 0.00625),
        "replicates": 500,
    },
    "counterexample": {
        "alpha": 0.5,
        "beta": 0.5,
        "phi": "power(0.5)",
        "horizon": 4.0,
        "replicates": 2000,
    },
}

_KEY_TO_FIELD = {
    "experiment": "experiment",
    "alpha": "alpha",
    "beta": "beta",
    "phi": "phi",
    "x0": "x0",
    "T": "horizon",
    "cutoffs": "cutoffs",
    "grid_m": "grid_m",
    "replicates": "replicates",
    "seed": "seed",
    "out": "out",
    "threads": "threads",
    "ks_p_threshold": "ks_p_threshold",
    "couple_decay_max": "couple_decay_max",
    "min_coverage": "min_coverage",
}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse a flat key=value config; unknown keys are rejected outright."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        raw[key] = value.strip()
    if "experiment" not in raw:
        raise ConfigError("config must set 'experiment'")
    experiment = raw.pop("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    merged: dict = dict(_EXPERIMENT_DEFAULTS.get(experiment, {}))
    for key, value in raw.items():
        field_name = _KEY_TO_FIELD[key]
        merged[field_name] = _convert(field_name, value, key)
    try:
        return ExperimentConfig(experiment=experiment, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _convert(field_name: str, value: str, key: str):
    try:
        if field_name in ("phi", "out"):
            return value.strip().strip('"')
        if field_name == "cutoffs":
            return tuple(float(v) for v in value.split(",") if v.strip())
        if field_name in ("grid_m", "replicates", "seed", "threads"):
            return int(value)
        if field_name == "beta":
            return float(value)
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key} = {value!r}") from exc


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SummaryRow:
    """One line of summary.csv plus classification for the exit code."""

    name: str
    value: float
    threshold: float
    passed: bool
    kind: str = "statistical"  # or "invariant" / "diagnostic"
    detail: str = ""


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple[SummaryRow, ...]
    exit_code: int
    artifacts: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_PASS


def _exit_code(rows: tuple[SummaryRow, ...]) -> int:
    if any(r.kind == "invariant" and not r.passed for r in rows):
        return EXIT_INVARIANT
    if any(r.kind == "statistical" and not r.passed for r in rows):
        return EXIT_STATISTICAL
    return EXIT_PASS


def _write_summary(out_dir: Path, rows: tuple[SummaryRow, ...]) -> str:
    path = out_dir / "summary.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("name,value,threshold,pass\n")
        for r in rows:
            fh.write(f"{r.name},{r.value:.17g},{r.threshold:.17g},{str(r.passed).lower()}\n")
    return str(path)


def _parallel_map(fn, indices, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> ExperimentResult:
    """Run one experiment, write its artifacts, and classify the outcome."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    runner = {
        "strong-construct": _run_strong_construct,
        "ladder-monotone": _run_ladder_monotone,
        "weak-agree": _run_weak_agree,
        "uniqueness-couple": _run_uniqueness_couple,
        "counterexample": _run_counterexample_experiment,
    }[cfg.experiment]
    rows, artifacts = runner(cfg, out)
    rows = tuple(rows)
    artifacts = artifacts + (_write_summary(out, rows),)
    return ExperimentResult(
        config=cfg, rows=rows, exit_code=_exit_code(rows), artifacts=tuple(artifacts)
    )


# --------------------------------------------------------------------------
# strong-construct / ladder-monotone
# --------------------------------------------------------------------------


def _build_replicate_ladder(cfg: ExperimentConfig, replicate: int) -> Ladder:
    phi = cfg.phi_object()
    params = StableParams.default(cfg.alpha)
    rng = replicate_rng(cfg.seed, replicate, "ladder-driver")
    return build_ladder(phi, cfg.x0, params, cfg.horizon, cfg.cutoffs, rng)


def _write_ladder_csv(path: Path, ladder: Ladder) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("eps,t,x\n")
        for eps, sol in zip(ladder.cutoffs, ladder.solutions):
            fh.write(f"{eps:.17g},0,{sol.x0:.17g}\n")
            for t, x in zip(sol.times, sol.post_values):
                fh.write(f"{eps:.17g},{t:.17g},{x:.17g}\n")


def _run_strong_construct(cfg: ExperimentConfig, out: Path):
    ladders = _parallel_map(
        lambda r: _build_replicate_ladder(cfg, r), range(cfg.replicates), cfg.threads
    )
    violations = 0
    first_bad = -1
    tail_gaps = []
    guard_hits = 0
    for r, ladder in enumerate(ladders):
        v = ladder_violations(ladder)
        if v and first_bad < 0:
            first_bad = r
        violations += v
        _, diffs = monotone_limit_estimate(ladder, cfg.horizon)
        tail_gaps.append(float(diffs[-1]) if diffs.size else 0.0)
        guard_hits += sum(sol.guard_hits for sol in ladder.solutions)
    # Replay determinism: rebuilding replicate 0 from its seed must agree bit
    # for bit with the first pass.
    replay = _build_replicate_ladder(cfg, 0)
    replay_ok = all(
        np.array_equal(a.post_values, b.post_values)
        for a, b in zip(ladders[0].solutions, replay.solutions)
    )
    detail = ""
    if first_bad >= 0:
        detail = (
            f"first violation at replicate {first_bad} "
            f"(seed {derive_seed(cfg.seed, first_bad, 'ladder-driver')})"
        )
    rows = [
        SummaryRow(
            "ladder-monotone-violations",
            float(violations),
            0.0,
            violations == 0,
            "invariant",
            detail,
        ),
        SummaryRow("replay-determinism", float(replay_ok), 1.0, replay_ok, "invariant"),
        SummaryRow(
            "monotone-tail-gap-mean",
            float(np.mean(tail_gaps)),
            math.inf,
            True,
            "diagnostic",
        ),
        SummaryRow("overflow-guard-hits", float(guard_hits), 0.0, True, "diagnostic"),
    ]
    ladder_csv = out / "ladder.csv"
    _write_ladder_csv(ladder_csv, ladders[0])
    solution_csv = out / "solution.csv"
    ladders[0].solutions[-1].write_csv(solution_csv)
    return rows, (str(ladder_csv), str(solution_csv))


def _run_ladder_monotone(cfg: ExperimentConfig, out: Path):
    def one(r: int) -> int:
        return ladder_violations(_build_replicate_ladder(cfg, r))

    counts = _parallel_map(one, range(cfg.replicates), cfg.threads)
    violations = int(sum(counts))
    first_bad = next((r for r, c in enumerate(counts) if c), -1)
    detail = ""
    if first_bad >= 0:
        detail = (
            f"first violation at replicate {first_bad} "
            f"(seed {derive_seed(cfg.seed, first_bad, 'ladder-driver')})"
        )
    rows = [
        SummaryRow(
            "ladder-monotone-violations",
            float(violations),
            0.0,
            violations == 0,
            "invariant",
            detail,
        ),
        SummaryRow(
            "replicates-checked", float(cfg.replicates), 1.0, True, "diagnostic"
        ),
    ]
    return rows, ()


# --------------------------------------------------------------------------
# weak-agree
# --------------------------------------------------------------------------


def _timechange_marginal(
    phi: MonotonePhi,
    x0: float,
    params: StableParams,
    eps: float,
    t_eval: float,
    rng: np.random.Generator,
    initial_horizon: float,
) -> float:
    """X at t_eval from the time-change construction.

    The driver is extended (never resampled) until its clock covers t_eval,
    which keeps the marginal law untouched: the extension is a stopping rule
    on one infinite jump stream.
    """
    horizon = initial_horizon
    path = sample_truncated_path(params, horizon, eps, rng)
    for _ in range(64):
        solution, clock = solve_time_change(phi, x0, path, params.alpha)
        if clock.total > t_eval:
            return solution.value_at(t_eval)
        horizon *= 2.0
        path = extend_truncated_path(params, path, horizon, rng)
    raise RuntimeError(
        "time-change clock failed to cover the evaluation time after 64 extensions"
    )


def _run_weak_agree(cfg: ExperimentConfig, out: Path):
    phi = cfg.phi_object()
    params = StableParams.default(cfg.alpha)
    eps = cfg.cutoffs[-1]

    def one(r: int) -> tuple[float, float]:
        rng_a = replicate_rng(cfg.seed, r, "weak-agree-truncation")
        path = sample_truncated_path(params, cfg.horizon, eps, rng_a)
        a = solve_truncated(phi, cfg.x0, path).value_at(cfg.horizon)
        rng_b = replicate_rng(cfg.seed, r, "weak-agree-timechange")
        b = _timechange_marginal(
            phi, cfg.x0, params, eps, cfg.horizon, rng_b, 2.0 * cfg.horizon
        )
        return a, b

    pairs = _parallel_map(one, range(cfg.replicates), cfg.threads)
    xs_trunc = np.array([p[0] for p in pairs])
    xs_time = np.array([p[1] for p in pairs])
    ks = ks_two_sample(
        SampleSet(xs_trunc, "truncation"), SampleSet(xs_time, "timechange")
    )
    samples_csv = out / "weak_agree_samples.csv"
    with open(samples_csv, "w", encoding="utf-8") as fh:
        fh.write("replicate,x_truncation,x_timechange\n")
        for r, (a, b) in enumerate(pairs):
            fh.write(f"{r},{a:.17g},{b:.17g}\n")
    rows = [
        SummaryRow(
            "weak-agree-ks-p",
            ks.p_value,
            cfg.ks_p_threshold,
            ks.p_value > cfg.ks_p_threshold,
            "statistical",
            f"D={ks.statistic:.6g} at n=m={cfg.replicates}",
        ),
        SummaryRow("weak-agree-ks-d", ks.statistic, 1.0, True, "diagnostic"),
    ]
    return rows, (str(samples_csv),)


# --------------------------------------------------------------------------
# uniqueness-couple
# --------------------------------------------------------------------------


def _run_uniqueness_couple(cfg: ExperimentConfig, out: Path):
    phi = cfg.phi_object()
    params = StableParams.default(cfg.alpha)
    ladder = cfg.cutoffs
    base_cutoff = min(ladder) / 2.0

    def one(r: int) -> list[float]:
        rng = replicate_rng(cfg.seed, r, "couple-driver")
        base = sample_truncated_path(params, cfg.horizon, base_cutoff, rng)
        gaps = []
        for eps in ladder:
            fine = solve_truncated(phi, cfg.x0, thin_path(base, eps / 2.0))
            coarse = solve_truncated(phi, cfg.x0, thin_path(base, eps))
            gaps.append(sup_gap(fine, coarse))
        return gaps

    all_gaps = np.array(
        _parallel_map(one, range(cfg.replicates), cfg.threads)
    )  # (replicates, levels)
    medians = [float(statistics.median(all_gaps[:, j])) for j in range(len(ladder))]
    non_increasing = all(b <= a for a, b in zip(medians, medians[1:]))
    decay = medians[-1] / medians[0] if medians[0] > 0.0 else math.inf
    couple_csv = out / "couple_medians.csv"
    with open(couple_csv, "w", encoding="utf-8") as fh:
        fh.write("eps,median_sup_distance\n")
        for eps, med in zip(ladder, medians):
            fh.write(f"{eps:.17g},{med:.17g}\n")
    rows = [
        SummaryRow(
            "couple-medians-non-increasing",
            float(non_increasing),
            1.0,
            non_increasing,
            "statistical",
            "medians: " + ", ".join(f"{m:.6g}" for m in medians),
        ),
        SummaryRow(
            "couple-final-over-first",
            decay,
            cfg.couple_decay_max,
            decay < cfg.couple_decay_max,
            "statistical",
        ),
    ]
    return rows, (str(couple_csv),)


# --------------------------------------------------------------------------
# counterexample
# --------------------------------------------------------------------------


def _run_counterexample_experiment(cfg: ExperimentConfig, out: Path):
    if cfg.beta is None:
        raise ConfigError("counterexample experiment requires beta")
    if cfg.replicates < 1000:
        raise ConfigError(
            "counterexample experiment needs replicates >= 1000 for the KS regime"
        )
    scaling = scaling_law_check(
        cfg.alpha,
        cfg.beta,
        1.0,
        2.0,
        cfg.replicates,
        replicate_rng(cfg.seed, 0, "counterexample-scaling"),
        m_per_unit=cfg.grid_m,
        seed=cfg.seed,
    )
    law = driver_law_check(
        cfg.alpha,
        cfg.beta,
        cfg.horizon,
        cfg.replicates,
        replicate_rng(cfg.seed, 0, "counterexample-driver-law"),
        m_per_unit=cfg.grid_m,
        seed=cfg.seed,
    )
    demo = nonuniqueness_demo(
        cfg.alpha,
        cfg.beta,
        cfg.horizon,
        cfg.replicates,
        replicate_rng(cfg.seed, 0, "counterexample-nonuniqueness"),
        m_per_unit=cfg.grid_m,
    )
    report_csv = out / "counterexample_report.csv"
    write_report_csv(report_csv, [scaling, law])
    rows = [
        SummaryRow(
            "scaling-law-ks-p",
            scaling.p_value,
            cfg.ks_p_threshold,
            scaling.p_value > cfg.ks_p_threshold,
            "statistical",
            f"D={scaling.statistic:.6g}",
        ),
        SummaryRow(
            "driver-law-ks-p",
            law.p_value,
            cfg.ks_p_threshold,
            law.inconclusive or law.p_value > cfg.ks_p_threshold,
            "statistical",
            "inconclusive: coverage < 0.5" if law.inconclusive else f"D={law.statistic:.6g}",
        ),
        SummaryRow(
            "driver-law-coverage",
            law.coverage,
            cfg.min_coverage,
            law.coverage >= cfg.min_coverage,
            "statistical",
        ),
        SummaryRow(
            "zero-solution-residual",
            demo.zero_solution_residual,
            0.0,
            demo.zero_solution_residual == 0.0,
            "invariant",
        ),
        SummaryRow(
            "nonzero-solution-positive-fraction",
            demo.positive_fraction,
            0.99,
            demo.positive_fraction >= 0.99,
            "statistical",
            f"coverage {demo.coverage:.4g}",
        ),
        SummaryRow(
            "sde-replay-relative-residual",
            demo.replay_residual,
            1e-9,
            demo.replay_residual <= 1e-9,
            "invariant",
        ),
    ]
    return rows, (str(report_csv),)
