"""Dataset generators, loaders, transforms and a binary cache container.

Three datasets are supported: the exhaustive 12-bit synthetic task, MNIST
from IDX files, and the enumerated Tic-Tac-Toe endgame boards. All
constructions are deterministic given their seeds.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np

from .numerics import RngStream

# internal stream ids; flat constants so draws never share entropy
_STREAM_SYNTH_W = 101
_STREAM_SPLIT = 102
_STREAM_LABEL_SHUFFLE = 103
_STREAM_SUBSET = 104

_IDX_IMAGE_MAGIC = 0x00000803
_IDX_LABEL_MAGIC = 0x00000801

_CACHE_MAGIC = b"BPDS"
_CACHE_VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent input file."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix, integer labels, stable sample ids and a fixed split."""

    name: str
    features: np.ndarray  # N x D float64
    labels: np.ndarray  # N int64 in [0, n_classes)
    n_classes: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    sample_ids: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "features",
                           np.ascontiguousarray(self.features, dtype=np.float64))
        object.__setattr__(self, "labels",
                           np.ascontiguousarray(self.labels, dtype=np.int64))
        n = self.features.shape[0]
        if self.sample_ids is None:
            object.__setattr__(self, "sample_ids", np.arange(n, dtype=np.int64))
        else:
            object.__setattr__(self, "sample_ids",
                               np.ascontiguousarray(self.sample_ids, dtype=np.int64))
        object.__setattr__(self, "train_idx",
                           np.ascontiguousarray(self.train_idx, dtype=np.int64))
        object.__setattr__(self, "val_idx",
                           np.ascontiguousarray(self.val_idx, dtype=np.int64))
        if self.labels.shape != (n,) or self.sample_ids.shape != (n,):
            raise ValueError("labels and sample ids must be one per row")
        if len(np.unique(self.sample_ids)) != n:
            raise ValueError("sample ids must be unique")
        both = np.concatenate([self.train_idx, self.val_idx])
        if not np.array_equal(np.sort(both), np.arange(n)):
            raise ValueError("train and validation indices must partition the rows")
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.n_classes:
            raise ValueError("labels out of class range")

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def split(self, which):
        """(features, labels, sample ids) of 'train' or the held-out split."""
        idx = self.train_idx if which == "train" else self.val_idx
        return self.features[idx], self.labels[idx], self.sample_ids[idx]


def _seeded_split(n, n_train, seed):
    perm = RngStream(seed, _STREAM_SPLIT).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# ---------------------------------------------------------------------------
# synthetic 12-bit task
# ---------------------------------------------------------------------------

def gen_synthetic(label_seed=0, split_seed=None):
    """All 4096 binary 12-tuples, labeled by a median-thresholded linear score.

    The score weights are drawn once from the seeded stream; y = 1 iff
    w.x exceeds the median score over all inputs (ties fall to class 0),
    which keeps the classes balanced. Inputs stay raw 0/1 values. The split
    is 3276 train / 820 validation (floor of the 0.8 fraction).
    """
    if split_seed is None:
        split_seed = label_seed
    n, d = 4096, 12
    ints = np.arange(n, dtype=np.int64)
    feats = ((ints[:, None] >> np.arange(d - 1, -1, -1)) & 1).astype(np.float64)
    w = RngStream(label_seed, _STREAM_SYNTH_W).uniform(-1.0, 1.0, d)
    scores = feats @ w
    labels = (scores > np.median(scores)).astype(np.int64)
    train_idx, val_idx = _seeded_split(n, (n * 8) // 10, split_seed)
    return Dataset("synthetic", feats, labels, 2, train_idx, val_idx)


# ---------------------------------------------------------------------------
# MNIST (IDX format, big endian)
# ---------------------------------------------------------------------------

def _read_exact(f, n, path):
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"{path}: truncated file (wanted {n} bytes, got {len(data)})")
    return data


def _read_idx_images(path):
    with open(path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, path))
        if magic != _IDX_IMAGE_MAGIC:
            raise FormatError(f"{path}: bad image magic 0x{magic:08x}")
        raw = _read_exact(f, count * rows * cols, path)
    return np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)


def _read_idx_labels(path):
    with open(path, "rb") as f:
        magic, count = struct.unpack(">II", _read_exact(f, 8, path))
        if magic != _IDX_LABEL_MAGIC:
            raise FormatError(f"{path}: bad label magic 0x{magic:08x}")
        raw = _read_exact(f, count, path)
    return np.frombuffer(raw, dtype=np.uint8)


def load_mnist_idx(image_path, label_path, name="mnist"):
    """One images/labels IDX pair as a Dataset (all rows in the train split).

    Pixels are rescaled from [0, 255] to [-1, +1] via v / 127.5 - 1.
    """
    images = _read_idx_images(image_path)
    labels = _read_idx_labels(label_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"image/label count mismatch: {images.shape[0]} vs {labels.shape[0]}")
    if labels.max(initial=0) > 9:
        raise FormatError("labels outside the digit range 0-9")
    feats = images.astype(np.float64) / 127.5 - 1.0
    n = feats.shape[0]
    return Dataset(name, feats, labels.astype(np.int64), 10,
                   np.arange(n), np.arange(0))


def load_mnist(train_images, train_labels, test_images, test_labels):
    """Full MNIST with the standard train/validation file split."""
    tr = load_mnist_idx(train_images, train_labels)
    te = load_mnist_idx(test_images, test_labels)
    if tr.n_features != te.n_features:
        raise FormatError("train and test image sizes differ")
    feats = np.vstack([tr.features, te.features])
    labels = np.concatenate([tr.labels, te.labels])
    n_train = tr.n_samples
    return Dataset("mnist", feats, labels, 10,
                   np.arange(n_train), np.arange(n_train, n_train + te.n_samples))


# ---------------------------------------------------------------------------
# Tic-Tac-Toe endgame boards
# ---------------------------------------------------------------------------

_TTT_LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8),
              (0, 3, 6), (1, 4, 7), (2, 5, 8),
              (0, 4, 8), (2, 4, 6))
_TTT_CELL = {"x": 1, "o": -1, "b": 0}
_ENDGAMES = None


def _made_line(board, player, pos):
    for line in _TTT_LINES:
        if pos in line and all(board[c] == player for c in line):
            return True
    return False


def _enumerate_endgames():
    """Every unique completed-game board, with the winning mark (or 0).

    x moves first; a game stops the moment a player completes a line, or
    when the board fills up. Distinct games can end on the same board, so
    results are deduplicated.
    """
    global _ENDGAMES
    if _ENDGAMES is not None:
        return _ENDGAMES
    boards = {}

    def play(board, player, filled):
        for pos in range(9):
            if board[pos] != 0:
                continue
            board[pos] = player
            if _made_line(board, player, pos):
                boards[tuple(board)] = player
            elif filled == 8:
                boards[tuple(board)] = 0
            else:
                play(board, -player, filled + 1)
            board[pos] = 0

    play([0] * 9, 1, 0)
    _ENDGAMES = boards
    return boards


def gen_tictactoe(split_seed=0):
    """Unique completed-game boards; x -> +1, o -> -1, blank -> 0.

    The label is 1 exactly when x holds a three-in-a-row. The 766/192 split
    is drawn from the seeded stream.
    """
    games = sorted(_enumerate_endgames().items())
    feats = np.array([b for b, _ in games], dtype=np.float64)
    labels = np.array([1 if w == 1 else 0 for _, w in games], dtype=np.int64)
    train_idx, val_idx = _seeded_split(len(games), 766, split_seed)
    return Dataset("tictactoe", feats, labels, 2, train_idx, val_idx)


def load_tictactoe_csv(path, split_seed=0):
    """Endgame boards from a CSV of 9 cells in {x,o,b} plus positive/negative."""
    feats = []
    labels = []
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 10:
                raise FormatError(f"{path}:{lineno}: expected 10 fields, got {len(cells)}")
            try:
                feats.append([_TTT_CELL[c] for c in cells[:9]])
            except KeyError as e:
                raise FormatError(f"{path}:{lineno}: unknown cell token {e.args[0]!r}")
            if cells[9] == "positive":
                labels.append(1)
            elif cells[9] == "negative":
                labels.append(0)
            else:
                raise FormatError(f"{path}:{lineno}: unknown outcome {cells[9]!r}")
    if not feats:
        raise FormatError(f"{path}: no rows")
    n = len(feats)
    train_idx, val_idx = _seeded_split(n, min(766, n), split_seed)
    return Dataset("tictactoe", np.array(feats, dtype=np.float64),
                   np.array(labels, dtype=np.int64), 2, train_idx, val_idx)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def shuffle_labels(ds, seed):
    """Permute all labels uniformly at random (train and validation jointly)."""
    perm = RngStream(seed, _STREAM_LABEL_SHUFFLE).permutation(ds.n_samples)
    return replace(ds, name=ds.name + "+shuffled", labels=ds.labels[perm])


def subsample(ds, n_train, n_val, seed=0):
    """Seeded subset of each split, re-indexed into a compact Dataset."""
    if n_train > len(ds.train_idx) or n_val > len(ds.val_idx):
        raise ValueError("subset larger than the split")
    rng = RngStream(seed, _STREAM_SUBSET)
    tr = np.sort(ds.train_idx[rng.permutation(len(ds.train_idx))[:n_train]])
    va = np.sort(ds.val_idx[rng.permutation(len(ds.val_idx))[:n_val]])
    keep = np.concatenate([tr, va])
    return Dataset(f"{ds.name}+sub{n_train}", ds.features[keep], ds.labels[keep],
                   ds.n_classes, np.arange(n_train),
                   np.arange(n_train, n_train + n_val))


# ---------------------------------------------------------------------------
# binary cache container (layout documented in the README)
# ---------------------------------------------------------------------------

def save_cache(ds, path):
    """Write the documented little-endian binary container."""
    name = ds.name.encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CACHE_MAGIC)
        f.write(struct.pack("<II", _CACHE_VERSION, len(name)))
        f.write(name)
        f.write(struct.pack("<QQQQQ", ds.n_samples, ds.n_features, ds.n_classes,
                            len(ds.train_idx), len(ds.val_idx)))
        f.write(np.ascontiguousarray(ds.features, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(ds.labels, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(ds.sample_ids, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(ds.train_idx, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(ds.val_idx, dtype="<i8").tobytes())


def load_cache(path):
    """Read a container written by save_cache; round-trips exactly."""
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path)
        if magic != _CACHE_MAGIC:
            raise FormatError(f"{path}: bad cache magic {magic!r}")
        version, name_len = struct.unpack("<II", _read_exact(f, 8, path))
        if version != _CACHE_VERSION:
            raise FormatError(f"{path}: unsupported cache version {version}")
        name = _read_exact(f, name_len, path).decode("utf-8")
        n, d, c, n_tr, n_va = struct.unpack("<QQQQQ", _read_exact(f, 40, path))
        if n_tr + n_va != n:
            raise FormatError(f"{path}: split sizes do not sum to the row count")
        feats = np.frombuffer(_read_exact(f, n * d * 8, path), dtype="<f8")
        labels = np.frombuffer(_read_exact(f, n * 8, path), dtype="<i8")
        ids = np.frombuffer(_read_exact(f, n * 8, path), dtype="<i8")
        tr = np.frombuffer(_read_exact(f, n_tr * 8, path), dtype="<i8")
        va = np.frombuffer(_read_exact(f, n_va * 8, path), dtype="<i8")
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes after payload")
    return Dataset(name, feats.reshape(n, d), labels, int(c), tr, va, sample_ids=ids)
