"""Configured training runs with full instrumentation.

A run is fully determined by (config, seed): dataset construction, weight
initialization, per-epoch shuffles and the optimizer trajectory all draw
from counter-based streams keyed on those values. Results are serialized
as JSONL whose bytes are reproducible; wall-clock timing goes to a sidecar
file so it never perturbs the log itself.
"""

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import datasets as data
from .infoplane import BinningSpec, MISnapshot, layer_mi_snapshot
from .nn import Activation, accuracy, build_network, cross_entropy
from .numerics import RngStream
from .optim import Adam

SCHEMA_VERSION = 1

_STREAM_INIT = 1
_STREAM_SHUFFLE_BASE = 1 << 32


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class SchemaError(ValueError):
    """Run log file does not match the expected schema."""


_DATASET_KEYS = {
    "synthetic": {"name", "label_seed", "split_seed"},
    "mnist": {"name", "train_images", "train_labels", "test_images", "test_labels"},
    "tictactoe": {"name", "split_seed"},
    "cache": {"name", "path"},
}

_CONFIG_FIELDS = (
    "dataset", "widths", "activation", "beta", "binarize", "batchnorm",
    "batch_size", "learning_rate", "epochs", "seeds", "bins", "mi_epochs",
    "label_shuffle", "label_shuffle_seed", "subset_train", "subset_val",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that defines an experiment, minus the seed of each run."""

    dataset: dict
    widths: tuple
    activation: str = "ste_sign"
    beta: float = 5.0
    binarize: bool = True
    batchnorm: bool = None  # None follows the binarize flag
    batch_size: int = 64
    learning_rate: float = 1e-4
    epochs: int = 1
    seeds: tuple = (0,)
    bins: int = 30
    mi_epochs: tuple = None  # None selects the default schedule
    label_shuffle: bool = False
    label_shuffle_seed: int = 0
    subset_train: int = None
    subset_val: int = None

    def validate(self):
        name = self.dataset.get("name") if isinstance(self.dataset, dict) else None
        if name not in _DATASET_KEYS:
            raise ConfigError(f"unknown dataset {name!r}")
        unknown = set(self.dataset) - _DATASET_KEYS[name]
        if unknown:
            raise ConfigError(f"unknown dataset keys {sorted(unknown)}")
        if len(self.widths) < 2 or any(int(w) < 1 for w in self.widths):
            raise ConfigError(f"bad widths {self.widths}")
        try:
            Activation(self.activation, self.beta)
        except ValueError as e:
            raise ConfigError(str(e))
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if len(self.seeds) < 1:
            raise ConfigError("need at least one seed")
        if self.bins < 2:
            raise ConfigError("bins must be at least 2")
        if self.mi_epochs is not None:
            if any(e < 0 or e > self.epochs for e in self.mi_epochs):
                raise ConfigError("mi_epochs must lie within [0, epochs]")
        for key in ("subset_train", "subset_val"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise ConfigError(f"{key} must be positive when given")

    def mi_schedule(self):
        if self.mi_epochs is not None:
            return tuple(sorted(set(int(e) for e in self.mi_epochs)))
        return default_mi_schedule(self.epochs)

    def to_dict(self):
        d = {}
        for key in _CONFIG_FIELDS:
            v = getattr(self, key)
            if isinstance(v, tuple):
                v = list(v)
            d[key] = v
        return d

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(_CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "dataset" not in d or "widths" not in d:
            raise ConfigError("config needs at least 'dataset' and 'widths'")
        kwargs = dict(d)
        kwargs["widths"] = tuple(kwargs["widths"])
        if kwargs.get("seeds") is not None:
            kwargs["seeds"] = tuple(kwargs["seeds"])
        if kwargs.get("mi_epochs") is not None:
            kwargs["mi_epochs"] = tuple(kwargs["mi_epochs"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})")
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw)


def default_mi_schedule(epochs, target=120):
    """Every epoch through 100 epochs; ~`target` log-spaced points beyond."""
    if epochs <= 100:
        return tuple(range(epochs + 1))
    pts = {0, epochs}
    for t in np.linspace(0.0, math.log10(epochs), target - 1):
        pts.add(int(round(10.0 ** t)))
    return tuple(sorted(p for p in pts if p <= epochs))


# ---------------------------------------------------------------------------
# gradient statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientStats:
    """Norm statistics of the per-batch gradient vectors of one epoch.

    mean_norm is the l2 norm of the mean batch-gradient vector; std_norm is
    the root mean squared l2 deviation from that mean.
    """

    mean_norm: float
    std_norm: float
    per_layer: tuple = None


class _GradAccum:
    """Streaming accumulator; shifted by the first batch for exactness."""

    def __init__(self):
        self.count = 0
        self.ref = None
        self.sum_d = None
        self.sum_dsq = None
        self._buf = None

    def add(self, layer_grads):
        flats = [np.asarray(g, dtype=np.float64).ravel() for g in layer_grads]
        if self.ref is None:
            self.ref = [g.copy() for g in flats]
            self.sum_d = [np.zeros_like(g) for g in flats]
            self.sum_dsq = [0.0] * len(flats)
            self._buf = [np.empty_like(g) for g in flats]
        else:
            for i, g in enumerate(flats):
                d = np.subtract(g, self.ref[i], out=self._buf[i])
                self.sum_d[i] += d
                self.sum_dsq[i] += float(d @ d)
        self.count += 1

    def finish(self):
        if self.count == 0:
            raise ValueError("gradient statistics need at least one batch")
        per_layer = []
        total_mean_sq = 0.0
        total_var = 0.0
        for ref, sd, sdsq in zip(self.ref, self.sum_d, self.sum_dsq):
            mean_dev = sd / self.count
            mean = ref + mean_dev
            mean_sq = float(mean @ mean)
            var = max(0.0, sdsq / self.count - float(mean_dev @ mean_dev))
            per_layer.append((math.sqrt(mean_sq), math.sqrt(var)))
            total_mean_sq += mean_sq
            total_var += var
        return GradientStats(math.sqrt(total_mean_sq), math.sqrt(total_var),
                             tuple(per_layer))


def gradient_stats(batch_grads):
    """Stats for a list of flattened whole-network gradient vectors."""
    acc = _GradAccum()
    for g in batch_grads:
        acc.add([g])
    stats = acc.finish()
    return GradientStats(stats.mean_norm, stats.std_norm)


# ---------------------------------------------------------------------------
# run records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochRecord:
    """Scalar metrics after one epoch; record 0 is the untrained baseline."""

    epoch: int
    train_loss: float
    val_loss: float
    train_acc: float
    val_acc: float
    n_updates: int
    grad: GradientStats = None


@dataclass
class RunLog:
    config: dict
    config_hash: str
    seed: int
    dataset_meta: dict
    records: list
    snapshots: list
    wall_clock: dict = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def build_dataset(config):
    """Materialize the dataset a config describes, subset/shuffle included."""
    spec = config.dataset
    name = spec["name"]
    if name == "synthetic":
        ds = data.gen_synthetic(spec.get("label_seed", 0), spec.get("split_seed"))
    elif name == "mnist":
        ds = data.load_mnist(spec["train_images"], spec["train_labels"],
                             spec["test_images"], spec["test_labels"])
    elif name == "tictactoe":
        ds = data.gen_tictactoe(spec.get("split_seed", 0))
    elif name == "cache":
        ds = data.load_cache(spec["path"])
    else:
        raise ConfigError(f"unknown dataset {name!r}")
    if config.subset_train is not None:
        ds = data.subsample(ds, config.subset_train,
                            config.subset_val or 0, seed=0)
    if config.label_shuffle:
        ds = data.shuffle_labels(ds, config.label_shuffle_seed)
    return ds


def _evaluate(net, x, y):
    probs = net.forward(x, train=False)
    return cross_entropy(probs, y), accuracy(probs, y)


def run_training(config, seed, dataset=None):
    """Train one seed of a config and return the fully populated RunLog."""
    config.validate()
    ds = dataset if dataset is not None else build_dataset(config)
    if ds.n_features != config.widths[0]:
        raise ConfigError(
            f"widths[0]={config.widths[0]} but dataset has {ds.n_features} features")
    if ds.n_classes != config.widths[-1]:
        raise ConfigError(
            f"widths[-1]={config.widths[-1]} but dataset has {ds.n_classes} classes")
    if len(ds.val_idx) == 0:
        raise ConfigError("dataset has an empty validation split")

    act = Activation(config.activation, config.beta)
    net = build_network(config.widths, act, RngStream(seed, _STREAM_INIT),
                        binarize=config.binarize, batchnorm=config.batchnorm)
    opt = Adam(net, config.learning_rate)
    spec = BinningSpec(config.bins)
    schedule = set(config.mi_schedule())

    xtr, ytr, _ = ds.split("train")
    xva, yva, _ = ds.split("val")
    n_train = len(ytr)
    batch = config.batch_size

    started = time.time()
    records = []
    snapshots = []

    def snap(epoch):
        for split in ("train", "test"):
            snapshots.extend(layer_mi_snapshot(net, ds, split, spec, epoch))

    tr_loss, tr_acc = _evaluate(net, xtr, ytr)
    va_loss, va_acc = _evaluate(net, xva, yva)
    records.append(EpochRecord(0, tr_loss, va_loss, tr_acc, va_acc, 0, None))
    if 0 in schedule:
        snap(0)

    for epoch in range(1, config.epochs + 1):
        order = RngStream(seed, _STREAM_SHUFFLE_BASE + epoch).permutation(n_train)
        accum = _GradAccum()
        n_updates = 0
        # train metrics accumulate over the epoch's own forward passes;
        # only validation gets a dedicated eval-mode sweep
        loss_sum = 0.0
        hits = 0
        for start in range(0, n_train, batch):
            rows = order[start:start + batch]
            yb = ytr[rows]
            probs = net.forward(xtr[rows], train=True)
            grads = net.backward(probs, yb)
            opt.step(net, grads)
            accum.add(grads)
            n_updates += 1
            loss_sum += cross_entropy(probs, yb) * len(yb)
            hits += int((probs.argmax(axis=1) == yb).sum())
        va_loss, va_acc = _evaluate(net, xva, yva)
        records.append(EpochRecord(epoch, loss_sum / n_train, va_loss,
                                   hits / n_train, va_acc, n_updates,
                                   accum.finish()))
        if epoch in schedule:
            snap(epoch)

    meta = {"name": ds.name, "n_train": int(len(ds.train_idx)),
            "n_val": int(len(ds.val_idx)), "n_features": int(ds.n_features),
            "n_classes": int(ds.n_classes)}
    wall = {"started_unix": started, "duration_s": time.time() - started}
    return RunLog(config.to_dict(), config.config_hash(), int(seed), meta,
                  records, snapshots, wall)


def run_experiment(config, out_dir=None, dataset=None):
    """Train every seed of a config; persist per-seed logs when out_dir given."""
    config.validate()
    if dataset is None:
        dataset = build_dataset(config)
    logs = []
    for seed in config.seeds:
        log = run_training(config, seed, dataset=dataset)
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            persist(log, os.path.join(out_dir, f"run_seed{seed}.jsonl"))
        logs.append(log)
    return logs


# ---------------------------------------------------------------------------
# persistence (JSONL, deterministic bytes)
# ---------------------------------------------------------------------------

_EPOCH_KEYS = {"kind", "epoch", "train_loss", "val_loss", "train_acc",
               "val_acc", "n_updates", "grad"}
_MI_KEYS = {"kind", "epoch", "layer", "tap", "split", "i_tx_bits", "i_ty_bits"}
_HEADER_KEYS = {"kind", "schema_version", "config", "config_hash", "seed",
                "dataset_meta"}


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def persist(log, path):
    """Write the run as JSONL; wall-clock metadata goes to a .meta.json sidecar.

    Floats are encoded with Python's shortest round-trip repr, so loading
    restores the exact bit patterns and rewriting reproduces the bytes.
    """
    lines = [_dumps({"kind": "header", "schema_version": SCHEMA_VERSION,
                     "config": log.config, "config_hash": log.config_hash,
                     "seed": log.seed, "dataset_meta": log.dataset_meta})]
    for r in log.records:
        grad = None
        if r.grad is not None:
            grad = {"mean_norm": r.grad.mean_norm, "std_norm": r.grad.std_norm,
                    "per_layer": [list(p) for p in (r.grad.per_layer or ())]}
        lines.append(_dumps({"kind": "epoch", "epoch": r.epoch,
                             "train_loss": r.train_loss, "val_loss": r.val_loss,
                             "train_acc": r.train_acc, "val_acc": r.val_acc,
                             "n_updates": r.n_updates, "grad": grad}))
    for s in log.snapshots:
        lines.append(_dumps({"kind": "mi", "epoch": s.epoch, "layer": s.layer,
                             "tap": s.tap, "split": s.split,
                             "i_tx_bits": s.i_tx_bits, "i_ty_bits": s.i_ty_bits}))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    if log.wall_clock is not None:
        with open(str(path) + ".meta.json", "w", encoding="utf-8") as f:
            json.dump(log.wall_clock, f, indent=2, sort_keys=True)
            f.write("\n")


def load(path):
    """Read a JSONL run log, strictly validating schema and field names."""
    header = None
    records = []
    snapshots = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{lineno}: bad JSON ({e.msg})")
            kind = obj.get("kind")
            if kind == "header":
                if set(obj) != _HEADER_KEYS:
                    raise SchemaError(f"{path}:{lineno}: unexpected header fields "
                                      f"{sorted(set(obj) ^ _HEADER_KEYS)}")
                if obj["schema_version"] != SCHEMA_VERSION:
                    raise SchemaError(f"{path}:{lineno}: schema_version "
                                      f"{obj['schema_version']} (supported: {SCHEMA_VERSION})")
                header = obj
            elif kind == "epoch":
                if set(obj) != _EPOCH_KEYS:
                    raise SchemaError(f"{path}:{lineno}: unexpected epoch fields "
                                      f"{sorted(set(obj) ^ _EPOCH_KEYS)}")
                g = obj["grad"]
                grad = None
                if g is not None:
                    grad = GradientStats(g["mean_norm"], g["std_norm"],
                                         tuple(tuple(p) for p in g["per_layer"]))
                records.append(EpochRecord(obj["epoch"], obj["train_loss"],
                                           obj["val_loss"], obj["train_acc"],
                                           obj["val_acc"], obj["n_updates"], grad))
            elif kind == "mi":
                if set(obj) != _MI_KEYS:
                    raise SchemaError(f"{path}:{lineno}: unexpected mi fields "
                                      f"{sorted(set(obj) ^ _MI_KEYS)}")
                snapshots.append(MISnapshot(obj["epoch"], obj["layer"], obj["tap"],
                                            obj["split"], obj["i_tx_bits"],
                                            obj["i_ty_bits"]))
            else:
                raise SchemaError(f"{path}:{lineno}: unknown record kind {kind!r}")
    if header is None:
        raise SchemaError(f"{path}: missing header record")
    return RunLog(header["config"], header["config_hash"], header["seed"],
                  header["dataset_meta"], records, snapshots, None)


def load_runs(run_dir):
    """All run logs in a directory, in sorted filename order."""
    names = sorted(n for n in os.listdir(run_dir) if n.endswith(".jsonl"))
    if not names:
        raise FileNotFoundError(f"no .jsonl run logs under {run_dir}")
    return [load(os.path.join(run_dir, n)) for n in names]


# ---------------------------------------------------------------------------
# aggregation across seeds
# ---------------------------------------------------------------------------

_SCALARS = ("train_loss", "val_loss", "train_acc", "val_acc")


@dataclass
class AveragedLog:
    """Across-seed mean and population variance of every logged quantity."""

    config: dict
    config_hash: str
    dataset_meta: dict
    n_runs: int
    seeds: tuple
    epochs: list  # dicts: epoch, <metric>_mean, <metric>_var, ...
    snapshots: list  # dicts keyed by (epoch, layer, tap, split)


def _mean_var(values):
    a = np.asarray(values, dtype=np.float64)
    return float(a.mean()), float(a.var())


def aggregate_runs(logs):
    """Combine per-seed logs of one experiment into mean/variance series."""
    if not logs:
        raise ValueError("need at least one run log")
    ref = logs[0]
    for log in logs[1:]:
        if log.config_hash != ref.config_hash:
            raise ValueError(f"config hash mismatch: {log.config_hash} vs "
                             f"{ref.config_hash}")
    logs = sorted(logs, key=lambda l: l.seed)
    epoch_ids = [r.epoch for r in ref.records]
    for log in logs:
        if [r.epoch for r in log.records] != epoch_ids:
            raise ValueError("runs disagree on the recorded epochs")
    epochs = []
    for i, epoch in enumerate(epoch_ids):
        row = {"epoch": epoch, "n_updates": ref.records[i].n_updates}
        for metric in _SCALARS:
            m, v = _mean_var([getattr(log.records[i], metric) for log in logs])
            row[metric + "_mean"] = m
            row[metric + "_var"] = v
        grads = [log.records[i].grad for log in logs]
        if all(g is not None for g in grads):
            m, v = _mean_var([g.mean_norm for g in grads])
            row["grad_mean_norm_mean"], row["grad_mean_norm_var"] = m, v
            m, v = _mean_var([g.std_norm for g in grads])
            row["grad_std_norm_mean"], row["grad_std_norm_var"] = m, v
        epochs.append(row)

    keys = [(s.epoch, s.layer, s.tap, s.split) for s in ref.snapshots]
    by_key = []
    for log in logs:
        index = {(s.epoch, s.layer, s.tap, s.split): s for s in log.snapshots}
        if sorted(index) != sorted(keys):
            raise ValueError("runs disagree on the snapshot schedule")
        by_key.append(index)
    snapshots = []
    for key in keys:
        txm, txv = _mean_var([idx[key].i_tx_bits for idx in by_key])
        tym, tyv = _mean_var([idx[key].i_ty_bits for idx in by_key])
        epoch, layer, tap, split = key
        snapshots.append({"epoch": epoch, "layer": layer, "tap": tap,
                          "split": split, "i_tx_mean": txm, "i_tx_var": txv,
                          "i_ty_mean": tym, "i_ty_var": tyv})
    return AveragedLog(ref.config, ref.config_hash, ref.dataset_meta, len(logs),
                       tuple(log.seed for log in logs), epochs, snapshots)
