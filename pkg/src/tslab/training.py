"""Loss, optimizers, metrics, the training loop and k-fold cross-validation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .activations import ActivationSpec, DomainError, format_activation_spec, parse_activation_spec
from .datasets import Dataset, FoldPlan
from .nn import Network, Topology, backward, build_network, forward, init_params

logger = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "TrialResult",
    "CVResult",
    "TrialFailedError",
    "cross_entropy_with_grad",
    "adam_step",
    "sgd_step",
    "top_k_accuracy",
    "evaluate",
    "train",
    "cross_validate",
    "format_cv",
]


# ---------------------------------------------------------------- loss & metrics


def cross_entropy_with_grad(logits, labels):
    """Mean softmax cross-entropy and its gradient ``(softmax - onehot) / B``.

    The log-sum-exp is evaluated in float64; the gradient keeps the logits' dtype.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    B, C = logits.shape
    if labels.shape != (B,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {B}")
    if B and (labels.min() < 0 or labels.max() >= C):
        raise ValueError(f"labels must lie in [0, {C})")
    z = logits.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(B)
    loss = float(np.mean(lse - z[rows, labels]))
    probs = np.exp(z - lse[:, None])
    probs[rows, labels] -= 1.0
    return loss, (probs / B).astype(logits.dtype if np.issubdtype(logits.dtype, np.floating) else np.float64)


def top_k_accuracy(logits, labels, k: int) -> float:
    """Percentage of rows whose label is among the k largest logits.

    Ties rank the lower class index first.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    B, C = logits.shape
    if not 1 <= k <= C:
        raise ValueError(f"k must lie in [1, {C}], got {k}")
    if B == 0:
        return 0.0
    true = logits[np.arange(B), labels][:, None]
    cls = np.arange(C)[None, :]
    rank = (logits > true).sum(axis=1) + ((logits == true) & (cls < labels[:, None])).sum(axis=1)
    return 100.0 * float(np.mean(rank < k))


# ---------------------------------------------------------------- optimizers


def adam_step(params, grads, state, t, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
    """One bias-corrected Adam update, in place, with decoupled weight decay.

    ``params``/``grads`` map names to arrays; ``state`` maps names to
    ``(m, v)`` pairs and is filled on first use. Returns ``(params, state)``.
    """
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name, p in params.items():
        g = grads[name]
        if name not in state:
            state[name] = (np.zeros_like(p), np.zeros_like(p))
        m, v = state[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        if weight_decay:
            p *= p.dtype.type(1.0 - lr * weight_decay)
        p -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(p.dtype, copy=False)
    return params, state


def sgd_step(params, grads, state, t, lr=1e-2, momentum=0.9, weight_decay=0.0):
    for name, p in params.items():
        buf = state.get(name)
        if buf is None:
            buf = state[name] = np.zeros_like(p)
        buf *= momentum
        buf += grads[name]
        if weight_decay:
            p *= p.dtype.type(1.0 - lr * weight_decay)
        p -= (lr * buf).astype(p.dtype, copy=False)
    return params, state


# ---------------------------------------------------------------- config & results


@dataclass(frozen=True)
class TrainConfig:
    activation: ActivationSpec = dataclasses.field(default_factory=lambda: ActivationSpec.tanhsoft2(0.6, 1.0))
    topology: str = "cnn5"
    conv_channels: tuple[int, ...] = (32, 64)
    kernel_size: int = 3
    dense_units: int = 128
    dropout: float = 0.25
    optimizer: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.9
    weight_decay: float = 0.0
    epochs: int = 10
    batch_size: int = 128
    eval_batch_size: int = 1000
    seed: int = 0
    dataset: str = "mnist"
    topk: int = 3

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1 or self.eval_batch_size < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))

    @property
    def topology_spec(self) -> Topology:
        return Topology(self.topology, self.conv_channels, self.kernel_size, self.dense_units, self.dropout)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["activation"] = format_activation_spec(self.activation)
        d["conv_channels"] = ",".join(str(c) for c in self.conv_channels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if isinstance(d.get("activation"), str):
            d["activation"] = parse_activation_spec(d["activation"])
        if isinstance(d.get("conv_channels"), str):
            d["conv_channels"] = tuple(int(c) for c in d["conv_channels"].split(",") if c.strip())
        return cls(**d)

    def canonical_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in sorted(self.as_dict().items()))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


@dataclass
class TrialResult:
    config_digest: str
    config: dict
    status: str  # "ok" or "failed"
    top1: float
    topk: dict[int, float]
    initial_train_loss: float
    final_train_loss: float
    final_test_loss: float
    train_loss: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)
    test_top1: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0
    seed: int = 0
    failure: str | None = None
    experiment: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def activation(self) -> str:
        return self.config["activation"]

    def to_dict(self, with_timing: bool = True) -> dict:
        d = dataclasses.asdict(self)
        d["topk"] = {str(k): v for k, v in self.topk.items()}
        if not with_timing:
            d.pop("wall_seconds")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, line: str) -> "TrialResult":
        d = json.loads(line)
        d["topk"] = {int(k): v for k, v in d["topk"].items()}
        return cls(**d)

    def digest(self) -> str:
        """Content hash excluding wall-clock time."""
        text = json.dumps(self.to_dict(with_timing=False), sort_keys=True, allow_nan=True)
        return hashlib.sha256(text.encode()).hexdigest()


class TrialFailedError(RuntimeError):
    def __init__(self, fold: int, trial: TrialResult):
        super().__init__(f"fold {fold} failed: {trial.failure}")
        self.fold = fold
        self.trial = trial


# ---------------------------------------------------------------- loop


def _streams(seed: int):
    base = int(seed) & 0xFFFFFFFFFFFFFFFF
    # independent of the activation so every variant sees the same batches and masks
    return np.random.default_rng([base, 1]), np.random.default_rng([base, 2])


def evaluate(net: Network, data: Dataset, batch_size: int = 1000):
    """Eval-mode (loss, logits) over a whole dataset."""
    chunks = []
    for start in range(0, len(data), batch_size):
        logits, _ = forward(net, data.images[start : start + batch_size], train_mode=False)
        chunks.append(logits)
    logits = np.concatenate(chunks) if chunks else np.zeros((0, net.num_classes), net.dtype)
    loss, _ = cross_entropy_with_grad(logits, data.labels) if len(data) else (math.nan, None)
    return loss, logits


def make_network(cfg: TrainConfig, data: Dataset) -> Network:
    net = build_network(cfg.topology_spec, cfg.activation, data.images.shape[1:], data.classes)
    return init_params(net, cfg.seed)


def train(cfg: TrainConfig, train_data: Dataset, test_data: Dataset | None = None, experiment: str = "") -> TrialResult:
    """Train one model; deterministic in ``cfg.seed``.

    A non-finite loss ends the run early and returns a result with
    ``status == "failed"`` instead of raising.
    """
    started = time.perf_counter()
    net = make_network(cfg, train_data)
    shuffle_rng, dropout_rng = _streams(cfg.seed)
    if cfg.optimizer == "adam":
        hyper = dict(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps, weight_decay=cfg.weight_decay)
        step_fn = adam_step
    else:
        hyper = dict(lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
        step_fn = sgd_step
    params = net.named_params()
    state: dict = {}
    t = 0
    n = len(train_data)
    initial_loss = math.nan
    train_curve, test_curve, top1_curve = [], [], []
    failure = None
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            try:
                logits, cache = forward(net, train_data.images[idx], train_mode=True, rng=dropout_rng)
                loss, grad = cross_entropy_with_grad(logits, train_data.labels[idx])
            except DomainError:
                # NaN reached an activation before the loss
                loss = math.nan
            if not math.isfinite(loss):
                failure = f"non-finite loss at epoch {epoch + 1}, step {t + 1}"
                break
            if t == 0:
                # loss of the untrained network on the first batch
                initial_loss = loss
            grads = backward(net, cache, grad)
            t += 1
            step_fn(params, grads, state, t, **hyper)
            total += loss * len(idx)
        if failure:
            break
        train_curve.append(total / n)
        if test_data is not None and len(test_data):
            try:
                test_loss, logits = evaluate(net, test_data, cfg.eval_batch_size)
            except DomainError:
                test_loss = math.nan
            if not math.isfinite(test_loss):
                failure = f"non-finite test loss after epoch {epoch + 1}"
                break
            test_curve.append(test_loss)
            top1_curve.append(top_k_accuracy(logits, test_data.labels, 1))
        logger.info(
            "%s epoch %d/%d train_loss=%.4f%s",
            format_activation_spec(cfg.activation),
            epoch + 1,
            cfg.epochs,
            train_curve[-1],
            f" test_top1={top1_curve[-1]:.2f}" if top1_curve else "",
        )
    top1 = math.nan
    topk: dict[int, float] = {}
    if failure is None and test_data is not None and len(test_data):
        _, logits = evaluate(net, test_data, cfg.eval_batch_size)
        top1 = top_k_accuracy(logits, test_data.labels, 1)
        k = min(cfg.topk, test_data.classes)
        topk = {k: top_k_accuracy(logits, test_data.labels, k)}
    return TrialResult(
        config_digest=cfg.digest(),
        config=cfg.as_dict(),
        status="failed" if failure else "ok",
        top1=top1,
        topk=topk,
        initial_train_loss=initial_loss,
        final_train_loss=train_curve[-1] if train_curve else math.nan,
        final_test_loss=test_curve[-1] if test_curve else math.nan,
        train_loss=train_curve,
        test_loss=test_curve,
        test_top1=top1_curve,
        wall_seconds=time.perf_counter() - started,
        seed=cfg.seed,
        failure=failure,
        experiment=experiment or f"{cfg.topology}:{cfg.dataset}",
    )


# ---------------------------------------------------------------- cross-validation


@dataclass
class CVResult:
    mean: float
    std: float
    per_fold: list[float]
    trials: list[TrialResult]


def cross_validate(cfg: TrainConfig, data: Dataset, plan: FoldPlan) -> CVResult:
    """Train k models, each holding out one fold; population std of held-out top-1."""
    if len(plan.assignments) != len(data):
        raise ValueError(f"fold plan covers {len(plan.assignments)} samples, dataset has {len(data)}")
    trials = []
    for fold in range(plan.k):
        held = plan.assignments == fold
        trial = train(cfg, data.take(np.flatnonzero(~held)), data.take(np.flatnonzero(held)))
        if not trial.ok:
            raise TrialFailedError(fold, trial)
        trials.append(trial)
    per_fold = [t.top1 for t in trials]
    return CVResult(float(np.mean(per_fold)), float(np.std(per_fold)), per_fold, trials)


def format_cv(mean: float, std: float) -> str:
    """``99.1 (± 0.05)`` style."""
    return f"{mean:.1f} (± {std:.2f})"
