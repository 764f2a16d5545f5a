"""Run configuration files: INI sections of flat ``key = value`` lines.

Every key the runner reads is listed in ``SCHEMA`` with its default, so
``--print-effective-config`` shows the complete set of settings in force.
Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io

from .activations import format_activation_spec, parse_activation_spec
from .training import TrainConfig

__all__ = ["ConfigError", "SCHEMA", "RunConfig", "load_config", "default_text"]


class ConfigError(ValueError):
    pass


# section -> key -> default text
SCHEMA: dict[str, dict[str, str]] = {
    "run": {
        "seed": "0",
        "seeds": "0,1,2",
        "jobs": "1",
        "experiment": "",
    },
    "data": {
        "dataset": "mnist",
        "dir": "",
        "manifest": "",
        "train_per_class": "0",
        "test_per_class": "0",
        "subset_seed": "0",
        "normalization": "divide_by_255",
    },
    "activation": {
        "spec": "tanhsoft2(0.6,1)",
    },
    "model": {
        "topology": "cnn5",
        "conv_channels": "32,64",
        "kernel_size": "3",
        "dense_units": "128",
        "dropout": "0.25",
    },
    "optimizer": {
        "name": "adam",
        "lr": "0.001",
        "beta1": "0.9",
        "beta2": "0.999",
        "eps": "1e-08",
        "momentum": "0.9",
        "weight_decay": "0",
        "weight_decay_mode": "decoupled",
    },
    "training": {
        "epochs": "10",
        "batch_size": "128",
        "eval_batch_size": "1000",
        "topk": "3",
    },
    "cv": {
        "folds": "5",
        "fold_seed": "0",
    },
    "search": {
        "alphas": "0,0.87,1",
        "betas": "0,0.6,1",
        "gammas": "1,2",
        "deltas": "0,1",
    },
    "compare": {
        "candidates": "tanhsoft1(0.87); tanhsoft2(0.6,1)",
        "baselines": "relu; lrelu(0.01); elu(1); swish; softplus",
        "results": "",
    },
}

DATASETS = ("mnist", "cifar10", "cifar100")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _specs(text: str):
    return tuple(parse_activation_spec(s.strip()) for s in text.split(";") if s.strip())


@dataclasses.dataclass(frozen=True)
class RunConfig:
    values: dict[str, dict[str, str]]

    def get(self, section: str, key: str) -> str:
        return self.values[section][key]

    def text(self) -> str:
        """Canonical INI text of every effective setting."""
        parser = configparser.ConfigParser(interpolation=None)
        for section, keys in self.values.items():
            parser[section] = keys
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue().replace("\r\n", "\n").rstrip("\n") + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()

    # typed views

    @property
    def seed(self) -> int:
        return int(self.get("run", "seed"))

    @property
    def seeds(self) -> tuple[int, ...]:
        return _ints(self.get("run", "seeds"))

    @property
    def jobs(self) -> int:
        return int(self.get("run", "jobs"))

    @property
    def dataset(self) -> str:
        return self.get("data", "dataset")

    @property
    def folds(self) -> int:
        return int(self.get("cv", "folds"))

    @property
    def fold_seed(self) -> int:
        return int(self.get("cv", "fold_seed"))

    def train_config(self, **overrides) -> TrainConfig:
        m, o, t = self.values["model"], self.values["optimizer"], self.values["training"]
        cfg = TrainConfig(
            activation=parse_activation_spec(self.get("activation", "spec")),
            topology=m["topology"],
            conv_channels=_ints(m["conv_channels"]),
            kernel_size=int(m["kernel_size"]),
            dense_units=int(m["dense_units"]),
            dropout=float(m["dropout"]),
            optimizer=o["name"],
            lr=float(o["lr"]),
            beta1=float(o["beta1"]),
            beta2=float(o["beta2"]),
            eps=float(o["eps"]),
            momentum=float(o["momentum"]),
            weight_decay=float(o["weight_decay"]),
            epochs=int(t["epochs"]),
            batch_size=int(t["batch_size"]),
            eval_batch_size=int(t["eval_batch_size"]),
            seed=self.seed,
            dataset=self.dataset,
            topk=int(t["topk"]),
        )
        return dataclasses.replace(cfg, **overrides) if overrides else cfg

    def grid_axes(self):
        s = self.values["search"]
        return _floats(s["alphas"]), _floats(s["betas"]), _floats(s["gammas"]), _floats(s["deltas"])

    @property
    def candidates(self):
        return _specs(self.get("compare", "candidates"))

    @property
    def baselines(self):
        return _specs(self.get("compare", "baselines"))

    @property
    def result_logs(self) -> tuple[str, ...]:
        return tuple(p.strip() for p in self.get("compare", "results").split(",") if p.strip())

    def with_overrides(self, overrides: dict[tuple[str, str], str]) -> "RunConfig":
        values = {s: dict(k) for s, k in self.values.items()}
        for (section, key), v in overrides.items():
            values[section][key] = v
        return _validated(values)


def _validated(values) -> RunConfig:
    cfg = RunConfig(values)
    try:
        if cfg.dataset not in DATASETS:
            raise ConfigError(f"[data] dataset must be one of {', '.join(DATASETS)}")
        if cfg.get("data", "normalization") != "divide_by_255":
            raise ConfigError("[data] normalization supports only divide_by_255")
        if cfg.get("optimizer", "weight_decay_mode") != "decoupled":
            raise ConfigError("[optimizer] weight_decay_mode supports only decoupled")
        for key in ("train_per_class", "test_per_class", "subset_seed"):
            if int(cfg.get("data", key)) < 0:
                raise ConfigError(f"[data] {key} must be >= 0")
        if cfg.jobs < 1:
            raise ConfigError("[run] jobs must be >= 1")
        if not cfg.seeds:
            raise ConfigError("[run] seeds must list at least one seed")
        if cfg.folds < 2:
            raise ConfigError("[cv] folds must be >= 2")
        cfg.train_config()
        cfg.grid_axes()
        cfg.candidates
        cfg.baselines
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def default_text() -> str:
    return RunConfig({s: dict(k) for s, k in SCHEMA.items()}).text()


def load_config(path=None, text: str | None = None) -> RunConfig:
    """Merge a config file (or text) over the schema defaults."""
    values = {s: dict(k) for s, k in SCHEMA.items()}
    if path is not None or text is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            if path is not None:
                with open(path, encoding="utf-8") as fh:
                    parser.read_file(fh, source=str(path))
            else:
                parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]; expected one of {', '.join(SCHEMA)}")
            for key, value in parser[section].items():
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]; expected one of {', '.join(SCHEMA[section])}")
                values[section][key] = value.strip()
    cfg = _validated(values)
    # normalise the spec text so equivalent spellings share a digest
    cfg.values["activation"]["spec"] = format_activation_spec(parse_activation_spec(cfg.get("activation", "spec")))
    return cfg
