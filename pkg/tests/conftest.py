import struct

import numpy as np
import pytest


def _manifold_images(rng, n, rank=24):
    # image-like statistics: samples hug a low-dimensional manifold, the way
    # digit photos do; uniform random pixels would be far easier to memorize
    basis = rng.normal(size=(rank, 784))
    basis /= np.linalg.norm(basis, axis=1, keepdims=True)
    z = rng.normal(size=(n, rank)) * 16.0
    pix = z @ basis * 8.0 + 127.5 + rng.normal(size=(n, 784)) * 8.0
    return np.clip(np.round(pix), 0, 255).astype(np.uint8)


def write_idx_files(dirpath, n_train, n_test, seed=0):
    """Write a 4-file MNIST-format fixture of synthetic digit-like images.

    The files follow the IDX layout exactly (big-endian magics 0x803/0x801),
    so they exercise the same loader path as the real dataset.
    """
    dirpath.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = {"train-images-idx3-ubyte": ("train-labels-idx1-ubyte", n_train),
             "t10k-images-idx3-ubyte": ("t10k-labels-idx1-ubyte", n_test)}
    for img_name, (lbl_name, n) in names.items():
        images = _manifold_images(rng, n)
        labels = rng.integers(0, 10, n, dtype=np.uint8)
        with open(dirpath / img_name, "wb") as f:
            f.write(struct.pack(">IIII", 0x803, n, 28, 28))
            f.write(images.tobytes())
        with open(dirpath / lbl_name, "wb") as f:
            f.write(struct.pack(">II", 0x801, n))
            f.write(labels.tobytes())
    return dirpath


@pytest.fixture(scope="session")
def mnist_fixture_dir(tmp_path_factory):
    """Full-size (60000/10000) IDX fixture; ~47 MB of deterministic bytes."""
    return write_idx_files(tmp_path_factory.mktemp("mnist"), 60000, 10000)


@pytest.fixture(scope="session")
def small_mnist_dir(tmp_path_factory):
    """A light 800/200 IDX fixture for quick loader and pipeline tests."""
    return write_idx_files(tmp_path_factory.mktemp("mnist_small"), 800, 200)
