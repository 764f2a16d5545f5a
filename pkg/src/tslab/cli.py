"""``tslab`` command line: table, train, cv, search, compare.

Exit codes: 0 success, 1 unexpected error, 2 usage/config error,
3 missing or unreadable data, 4 training diverged.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend_name
from .activations import (
    SpecParseError,
    deriv_map,
    eval_map,
    format_activation_spec,
    grammar_help,
    parse_activation_spec,
)
from .config import ConfigError, RunConfig, load_config
from .datasets import (
    CIFAR10_FILES,
    CIFAR100_FILES,
    MNIST_FILES,
    ChecksumError,
    DatasetConsistencyError,
    DatasetFormatError,
    DatasetIOError,
    load_cifar,
    load_mnist,
    make_folds,
    sha256_file,
    subset,
    verify_manifest,
)
from .search import (
    GridSpec,
    IncompleteDataError,
    build_leaderboard,
    compare_baselines,
    read_trial_log,
    run_trials,
    search_configs,
    write_text,
)
from .training import TrialFailedError, cross_validate, format_cv

logger = logging.getLogger("tslab")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3, 4
DATA_ENV = "TSLAB_DATA_DIR"


class Diverged(RuntimeError):
    pass


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- helpers


def _fmt(v) -> str:
    return repr(float(v))


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def _quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Run:
    """Collects outputs of one command and writes its manifest last."""

    def __init__(self, args, cfg: RunConfig | None, command: str):
        self.args = args
        self.cfg = cfg
        self.command = command
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.started = _now()
        self.outputs: dict[str, str] = {}
        self.inputs: dict[str, str] = {}
        self.extra: dict = {}

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write(self, name: str, text: str) -> Path:
        path = self.path(name)
        write_text(path, text)
        self.outputs[name] = sha256_file(path)
        return path

    def track(self, name: str) -> Path:
        """Register a file written by someone else (e.g. a trial log)."""
        path = self.path(name)
        if path.exists():
            self.outputs[name] = sha256_file(path)
        return path

    def finish(self, seeds) -> Path:
        manifest = {
            "command": self.command,
            "argv": list(self.args.argv),
            "config_digest": self.cfg.digest() if self.cfg else None,
            "config": self.cfg.text() if self.cfg else None,
            "library_version": __version__,
            "backend": backend_name(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "seeds": list(seeds),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "started": self.started,
            "finished": _now(),
            **self.extra,
        }
        path = self.path(f"{self.command}_manifest.json")
        write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides[("run", "seed")] = str(args.seed)
        overrides[("run", "seeds")] = str(args.seed)
    if args.jobs is not None:
        overrides[("run", "jobs")] = str(args.jobs)
    data_dir = args.data_dir or cfg.get("data", "dir") or os.environ.get(DATA_ENV, "")
    overrides[("data", "dir")] = str(data_dir)
    for item in args.set or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.split(".", 1)
        if section not in cfg.values or key not in cfg.values[section]:
            raise ConfigError(f"--set: unknown key {lhs!r}")
        overrides[(section, key)] = value
    return cfg.with_overrides(overrides)


def _expected_files(dataset: str) -> list[str]:
    if dataset == "mnist":
        return list(MNIST_FILES.values())
    files = CIFAR10_FILES if dataset == "cifar10" else CIFAR100_FILES
    return files["train"] + files["test"]


def _load_data(cfg: RunConfig, run: Run):
    dataset = cfg.dataset
    directory = cfg.get("data", "dir")
    if not directory:
        raise DatasetIOError(
            f"no data directory: pass --data-dir, set [data] dir, or export {DATA_ENV}; "
            f"{dataset} expects {', '.join(_expected_files(dataset))}"
        )
    directory = Path(directory)
    manifest = cfg.get("data", "manifest")
    if manifest:
        verify_manifest(directory, manifest)
    try:
        if dataset == "mnist":
            train_data, test_data = load_mnist(directory)
        else:
            train_data, test_data = load_cifar(directory, "c10" if dataset == "cifar10" else "c100")
    except DatasetIOError as exc:
        raise DatasetIOError(f"{exc}. {dataset} expects {', '.join(_expected_files(dataset))} in {directory}") from exc
    for f in sorted(p for p in directory.rglob("*") if p.is_file()):
        if any(f.name.startswith(name) for name in _expected_files(dataset)):
            run.inputs[str(f)] = sha256_file(f)
    seed = int(cfg.get("data", "subset_seed"))
    n_train = int(cfg.get("data", "train_per_class"))
    n_test = int(cfg.get("data", "test_per_class"))
    if n_train:
        train_data = subset(train_data, n_train, seed)
    if n_test:
        test_data = subset(test_data, n_test, seed)
    run.extra["data"] = {
        "dataset": dataset,
        "train_size": len(train_data),
        "test_size": len(test_data),
        "normalization": "pixels / 255, no mean/std",
    }
    return train_data, test_data


def _experiment(cfg: RunConfig) -> str:
    return cfg.get("run", "experiment") or f"{cfg.get('model', 'topology')}:{cfg.dataset}"


def _summary_rows(trials):
    rows = []
    for t in trials:
        topk = next(iter(t.topk.values())) if t.topk else float("nan")
        rows.append(
            [
                _quote(t.activation),
                t.seed,
                t.status,
                _fmt(t.top1),
                _fmt(topk),
                _fmt(t.initial_train_loss),
                _fmt(t.final_train_loss),
                _fmt(t.final_test_loss),
            ]
        )
    return rows


SUMMARY_HEADER = ("activation", "seed", "status", "top1", "topk", "initial_train_loss", "final_train_loss", "final_test_loss")


def _fresh_log(run: Run, name: str) -> Path:
    path = run.path(name)
    path.unlink(missing_ok=True)
    return path


# ---------------------------------------------------------------- commands


def cmd_table(args) -> int:
    try:
        spec = parse_activation_spec(args.spec)
    except SpecParseError as exc:
        raise UsageError(str(exc)) from exc
    if not args.xmin < args.xmax:
        raise UsageError("--xmin must be < --xmax")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    i = np.arange(args.steps, dtype=np.float64)
    xs = args.xmin + (args.xmax - args.xmin) * i / (args.steps - 1)
    values, derivs = eval_map(spec, xs), deriv_map(spec, xs)
    run = Run(args, None, "table")
    name = args.name or "table.csv"
    run.write(name, _csv(("x", "value", "derivative"), zip(map(_fmt, xs), map(_fmt, values), map(_fmt, derivs))))
    run.extra["table"] = {"spec": format_activation_spec(spec), "xmin": args.xmin, "xmax": args.xmax, "steps": args.steps}
    run.finish([])
    print(run.path(name))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    run = Run(args, cfg, "train")
    train_data, test_data = _load_data(cfg, run)
    tc = cfg.train_config()
    log = _fresh_log(run, "train_trials.jsonl")
    (result,) = run_trials([tc], train_data, test_data, log_path=log, experiment=_experiment(cfg))
    run.track(log.name)
    curves = [
        [e + 1, _fmt(tr), _fmt(te), _fmt(acc)]
        for e, (tr, te, acc) in enumerate(zip(result.train_loss, result.test_loss, result.test_top1))
    ]
    run.write("train_curves.csv", _csv(("epoch", "train_loss", "test_loss", "test_top1"), curves))
    run.write("train_summary.csv", _csv(SUMMARY_HEADER, _summary_rows([result])))
    run.finish([tc.seed])
    if not result.ok:
        raise Diverged(result.failure)
    print(f"{result.activation}: top1 {result.top1:.2f}%  top{tc.topk} {next(iter(result.topk.values())):.2f}%")
    return EXIT_OK


def cmd_cv(args) -> int:
    cfg = _config(args)
    run = Run(args, cfg, "cv")
    train_data, _ = _load_data(cfg, run)
    tc = cfg.train_config()
    plan = make_folds(len(train_data), cfg.folds, cfg.fold_seed)
    try:
        cv = cross_validate(tc, train_data, plan)
    except TrialFailedError as exc:
        run.write("cv_trials.jsonl", exc.trial.to_json() + "\n")
        run.finish([tc.seed])
        raise Diverged(str(exc)) from exc
    run.write("cv_trials.jsonl", "".join(t.to_json() + "\n" for t in cv.trials))
    rows = [[f, _fmt(t.top1), _fmt(next(iter(t.topk.values()))), _fmt(t.final_train_loss)] for f, t in enumerate(cv.trials)]
    run.write("cv_folds.csv", _csv(("fold", "top1", "topk", "final_train_loss"), rows))
    spec_text = format_activation_spec(tc.activation)
    line = f"{spec_text}: {format_cv(cv.mean, cv.std)}"
    row = [_quote(spec_text), plan.k, _fmt(cv.mean), _fmt(cv.std), _quote(format_cv(cv.mean, cv.std))]
    run.write("cv_summary.csv", _csv(("activation", "folds", "mean_top1", "std_top1", "formatted"), [row]))
    run.finish([tc.seed])
    print(line)
    return EXIT_OK


def cmd_search(args) -> int:
    cfg = _config(args)
    run = Run(args, cfg, "search")
    alphas, betas, gammas, deltas = cfg.grid_axes()
    grid = GridSpec(alphas, betas, gammas, deltas, template=cfg.train_config(), seeds=cfg.seeds)
    try:
        configs = search_configs(grid)  # validates ranges before touching data
    except ValueError as exc:
        raise UsageError(f"[search] {exc}") from exc
    train_data, test_data = _load_data(cfg, run)
    log = _fresh_log(run, "search_trials.jsonl")
    trials = run_trials(configs, train_data, test_data, log_path=log, jobs=cfg.jobs, experiment=_experiment(cfg))
    run.track(log.name)
    board = build_leaderboard(trials)
    run.write("leaderboard.csv", board.to_csv())
    failed = [t for t in trials if not t.ok]
    run.extra["failed_trials"] = [{"activation": t.activation, "seed": t.seed, "failure": t.failure} for t in failed]
    run.finish(cfg.seeds)
    for t in failed:
        print(f"warning: {t.activation} seed {t.seed} failed ({t.failure}); excluded from means", file=sys.stderr)
    if failed and len(failed) == len(trials):
        raise Diverged("every search trial diverged")
    print(f"{len(board)} grid points, {len(trials) - len(failed)} trials ok, {len(failed)} failed -> {run.path('leaderboard.csv')}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    run = Run(args, cfg, "compare")
    specs = list(dict.fromkeys(format_activation_spec(s) for s in cfg.candidates + cfg.baselines))
    if cfg.result_logs:
        trials = []
        for path in cfg.result_logs:
            run.inputs[path] = sha256_file(path)
            trials += read_trial_log(path)
    else:
        train_data, test_data = _load_data(cfg, run)
        template = cfg.train_config()
        configs = [
            dataclasses.replace(template, activation=parse_activation_spec(s), seed=seed) for s in specs for seed in cfg.seeds
        ]
        log = _fresh_log(run, "compare_trials.jsonl")
        trials = run_trials(configs, train_data, test_data, log_path=log, jobs=cfg.jobs, experiment=_experiment(cfg))
        run.track(log.name)
    wanted = set(specs)
    board = build_leaderboard([t for t in trials if format_activation_spec(parse_activation_spec(t.activation)) in wanted])
    run.write("compare_leaderboard.csv", board.to_activation_csv())
    try:
        table = compare_baselines(cfg.candidates, cfg.baselines, trials)
    except IncompleteDataError:
        run.finish(cfg.seeds)
        raise
    run.write("win_tie_loss.csv", table.to_csv())
    run.finish(cfg.seeds)
    print(table.to_csv(), end="")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default="tslab-out", help="directory for artifacts (default: %(default)s)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--config", metavar="PATH", help="INI config file")
    run_opts.add_argument("--data-dir", metavar="PATH", help=f"dataset directory (fallback: ${DATA_ENV})")
    run_opts.add_argument("--seed", type=int, metavar="N", help="override [run] seed and seeds")
    run_opts.add_argument("--jobs", type=int, metavar="N", help="parallel trials for search/compare")
    run_opts.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")
    run_opts.add_argument(
        "--print-effective-config", action="store_true", help="print every setting in force and exit"
    )

    parser = argparse.ArgumentParser(prog="tslab", description="TanhSoft activation experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", parents=[common], help="tabulate an activation and its derivative")
    p.add_argument("spec", help="activation, e.g. tanhsoft2(0.6,1)")
    p.add_argument("--xmin", type=float, default=-6.0)
    p.add_argument("--xmax", type=float, default=6.0)
    p.add_argument("--steps", type=int, default=121)
    p.add_argument("--name", help="output file name (default: table.csv)")
    p.set_defaults(func=cmd_table)

    for name, func, text in (
        ("train", cmd_train, "train one model"),
        ("cv", cmd_cv, "k-fold cross-validation on the training split"),
        ("search", cmd_search, "grid search over the family"),
        ("compare", cmd_compare, "win/tie/loss of candidates against baselines"),
    ):
        p = sub.add_parser(name, parents=[common, run_opts], help=text)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = ["tslab", *argv]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        if getattr(args, "print_effective_config", False):
            sys.stdout.write(_config(args).text())
            return EXIT_OK
        return args.func(args)
    except (UsageError, ConfigError, SpecParseError) as exc:
        msg = str(exc)
        if isinstance(exc.__cause__, SpecParseError) and grammar_help() not in msg:
            msg += "\n\n" + grammar_help()
        print(f"tslab {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetIOError, DatasetFormatError, DatasetConsistencyError, ChecksumError, IncompleteDataError, OSError) as exc:
        print(f"tslab {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Diverged as exc:
        print(f"tslab {args.command}: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
