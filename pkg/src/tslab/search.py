"""Grid search over the TanhSoft family, leaderboards and win/tie/loss tables."""

from __future__ import annotations

import dataclasses
import io
import itertools
import logging
import math
import os
import tempfile
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .activations import ActivationSpec, Hyperparams, Kind, format_activation_spec, parse_activation_spec
from .datasets import Dataset
from .training import TrainConfig, TrialResult, train

logger = logging.getLogger(__name__)

__all__ = [
    "GridSpec",
    "LeaderboardRow",
    "Leaderboard",
    "WinTieLoss",
    "IncompleteDataError",
    "TIE_TOLERANCE",
    "LEADERBOARD_HEADER",
    "enumerate_grid",
    "run_trials",
    "run_search",
    "build_leaderboard",
    "compare_baselines",
    "experiment_means",
    "read_trial_log",
    "search_configs",
    "write_text",
]

TIE_TOLERANCE = 0.005  # percentage points
LEADERBOARD_HEADER = ("alpha", "beta", "gamma", "delta", "seeds", "mean_top1", "std_top1", "mean_top3")
DEFAULT_SEEDS = (0, 1, 2)


class IncompleteDataError(ValueError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        listed = ", ".join(f"{exp}/{spec}" for exp, spec in self.missing[:20])
        more = f" (+{len(self.missing) - 20} more)" if len(self.missing) > 20 else ""
        super().__init__(f"no successful runs for {len(self.missing)} cell(s): {listed}{more}")


# ---------------------------------------------------------------- grid


@dataclass(frozen=True)
class GridSpec:
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    gammas: tuple[float, ...]
    deltas: tuple[float, ...] = (0.0, 1.0)
    template: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    seeds: tuple[int, ...] = DEFAULT_SEEDS

    def __post_init__(self):
        for name in ("alphas", "betas", "gammas", "deltas"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("at least one seed is required")


def enumerate_grid(g: GridSpec) -> list[Hyperparams]:
    """Cartesian product in lexicographic (alpha, beta, gamma, delta) order, deduplicated."""
    axes = (g.alphas, g.betas, g.gammas, g.deltas)
    if any(len(a) == 0 for a in axes):
        raise ValueError("every grid axis needs at least one value")
    points = {tuple(p) for p in itertools.product(*axes)}
    return [Hyperparams.search_point(*p) for p in sorted(points)]


# ---------------------------------------------------------------- running trials

_WORKER_DATA: tuple[Dataset, Dataset | None] | None = None


def _init_worker(train_data, test_data):
    global _WORKER_DATA
    _WORKER_DATA = (train_data, test_data)


def _run_in_worker(cfg: TrainConfig, experiment: str) -> TrialResult:
    train_data, test_data = _WORKER_DATA
    return train(cfg, train_data, test_data, experiment=experiment)


def run_trials(
    configs: list[TrainConfig],
    train_data: Dataset,
    test_data: Dataset | None,
    log_path=None,
    jobs: int = 1,
    experiment: str = "",
) -> list[TrialResult]:
    """Train every config; results come back in input order.

    With ``log_path`` each finished trial is appended as one JSON line.
    """
    log = open(log_path, "a", encoding="utf-8", newline="\n") if log_path else None

    def record(result: TrialResult):
        if not result.ok:
            logger.warning("trial %s seed %d failed: %s", result.activation, result.seed, result.failure)
        if log:
            log.write(result.to_json() + "\n")
            log.flush()
        return result

    try:
        if jobs <= 1 or len(configs) <= 1:
            return [record(train(cfg, train_data, test_data, experiment=experiment)) for cfg in configs]
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(train_data, test_data)) as pool:
            futures = [pool.submit(_run_in_worker, cfg, experiment) for cfg in configs]
            return [record(f.result()) for f in futures]
    finally:
        if log:
            log.close()


def search_configs(g: GridSpec) -> list[TrainConfig]:
    return [
        dataclasses.replace(g.template, activation=ActivationSpec.family(h), seed=seed)
        for h in enumerate_grid(g)
        for seed in g.seeds
    ]


def run_search(g: GridSpec, train_data: Dataset, test_data: Dataset, log_path=None, jobs: int = 1) -> "Leaderboard":
    trials = run_trials(search_configs(g), train_data, test_data, log_path=log_path, jobs=jobs)
    return build_leaderboard(trials)


def read_trial_log(path) -> list[TrialResult]:
    with open(path, encoding="utf-8") as fh:
        return [TrialResult.from_json(line) for line in fh if line.strip()]


# ---------------------------------------------------------------- leaderboard


@dataclass(frozen=True)
class LeaderboardRow:
    spec: ActivationSpec
    seeds: int  # successful trials
    failed: int
    mean_top1: float
    std_top1: float
    mean_topk: float

    @property
    def hyperparams(self) -> Hyperparams:
        return self.spec.hyperparams

    def sort_key(self):
        family = self.spec.kind in (Kind.TANHSOFT, Kind.TANHSOFT1, Kind.TANHSOFT2)
        coords = self.spec.hyperparams.as_tuple() if family else ()
        missing = math.isnan(self.mean_top1)
        return (missing, 0.0 if missing else -self.mean_top1, not family, coords, format_activation_spec(self.spec))


def _csv_float(v: float) -> str:
    return repr(float(v))


@dataclass
class Leaderboard:
    rows: list[LeaderboardRow]

    def __len__(self):
        return len(self.rows)

    @property
    def failed(self) -> int:
        return sum(r.failed for r in self.rows)

    def to_csv(self) -> str:
        """Family leaderboard: one row per (alpha, beta, gamma, delta)."""
        buf = io.StringIO(newline="")
        buf.write(",".join(LEADERBOARD_HEADER) + "\n")
        for r in self.rows:
            h = r.hyperparams
            cells = [*map(_csv_float, h.as_tuple()), str(r.seeds), *map(_csv_float, (r.mean_top1, r.std_top1, r.mean_topk))]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def to_activation_csv(self) -> str:
        """Mixed leaderboard keyed by activation spec text."""
        buf = io.StringIO(newline="")
        buf.write("activation,seeds,failed,mean_top1,std_top1,mean_top3\n")
        for r in self.rows:
            cells = [
                '"' + format_activation_spec(r.spec) + '"',
                str(r.seeds),
                str(r.failed),
                *map(_csv_float, (r.mean_top1, r.std_top1, r.mean_topk)),
            ]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def build_leaderboard(trials) -> Leaderboard:
    """Aggregate trials per activation; failed trials are counted but excluded from means."""
    groups: dict[str, list[TrialResult]] = defaultdict(list)
    for t in trials:
        groups[t.activation].append(t)
    rows = []
    for text, group in groups.items():
        ok = [t for t in group if t.ok]
        top1 = [t.top1 for t in ok]
        topk = [next(iter(t.topk.values())) for t in ok if t.topk]
        rows.append(
            LeaderboardRow(
                spec=parse_activation_spec(text),
                seeds=len(ok),
                failed=len(group) - len(ok),
                mean_top1=float(np.mean(top1)) if top1 else math.nan,
                std_top1=float(np.std(top1)) if top1 else math.nan,
                mean_topk=float(np.mean(topk)) if topk else math.nan,
            )
        )
    rows.sort(key=LeaderboardRow.sort_key)
    return Leaderboard(rows)


# ---------------------------------------------------------------- win / tie / loss


def experiment_means(results) -> dict[tuple[str, str], float]:
    """Mean top-1 per (experiment, activation) over successful trials.

    ``results`` is an iterable of TrialResult or a ready mapping
    ``{(experiment, spec_text): top1}``.
    """
    if isinstance(results, dict):
        return {(exp, _canon(spec)): float(v) for (exp, spec), v in results.items()}
    acc: dict[tuple[str, str], list[float]] = defaultdict(list)
    for t in results:
        if t.ok:
            acc[(t.experiment, _canon(t.activation))].append(t.top1)
    return {key: float(np.mean(v)) for key, v in acc.items()}


def _canon(spec) -> str:
    if isinstance(spec, str):
        spec = parse_activation_spec(spec)
    return format_activation_spec(spec)


@dataclass
class WinTieLoss:
    candidates: list[str]
    baselines: list[str]
    experiments: list[str]
    counts: dict[tuple[str, str], tuple[int, int, int]]

    def get(self, candidate, baseline) -> tuple[int, int, int]:
        return self.counts[(_canon(candidate), _canon(baseline))]

    def to_csv(self) -> str:
        """One block of ``>``, ``=``, ``<`` rows per candidate; one column per baseline."""
        buf = io.StringIO(newline="")
        buf.write(",".join(["candidate", "relation", *(f'"{b}"' for b in self.baselines)]) + "\n")
        for c in self.candidates:
            for i, rel in enumerate((">", "=", "<")):
                row = [f'"{c}"', rel, *(str(self.counts[(c, b)][i]) for b in self.baselines)]
                buf.write(",".join(row) + "\n")
        return buf.getvalue()


def compare_baselines(candidates, baselines, results, experiments=None, tolerance: float = TIE_TOLERANCE) -> WinTieLoss:
    """Count experiments where each candidate's mean top-1 beats, ties or trails each baseline.

    A tie is a difference within ``tolerance`` percentage points.
    """
    means = experiment_means(results)
    cands = [_canon(c) for c in candidates]
    bases = [_canon(b) for b in baselines]
    exps = sorted({e for e, _ in means}) if experiments is None else list(experiments)
    if not exps:
        raise IncompleteDataError([])
    missing = {(e, s) for e in exps for s in dict.fromkeys(cands + bases) if (e, s) not in means}
    if missing:
        raise IncompleteDataError(missing)
    # absorb rounding noise from values that were stored at two decimals
    slack = tolerance + 1e-9
    counts = {}
    for c in cands:
        for b in bases:
            w = t = l = 0
            for e in exps:
                diff = means[(e, c)] - means[(e, b)]
                if abs(diff) <= slack:
                    t += 1
                elif diff > 0:
                    w += 1
                else:
                    l += 1
            counts[(c, b)] = (w, t, l)
    return WinTieLoss(cands, bases, exps, counts)


def write_text(path, text: str) -> None:
    """Atomic write with LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
