"""File formats: the big-endian IDX image format and the dataset cache.

No image files ship with the repository, so this demo writes a tiny pair
of IDX files from scratch (the same byte layout MNIST uses), loads them
back, and round-trips a dataset through the binary cache container.
"""

import os
import struct
import tempfile

import numpy as np

from binplane.datasets import (gen_tictactoe, load_cache, load_mnist_idx,
                               save_cache)

workdir = tempfile.mkdtemp()
img_path = os.path.join(workdir, "digits-images-idx3-ubyte")
lbl_path = os.path.join(workdir, "digits-labels-idx1-ubyte")

rng = np.random.default_rng(7)
images = rng.integers(0, 256, (32, 28, 28), dtype=np.uint8)
labels = rng.integers(0, 10, 32, dtype=np.uint8)

# IDX layout: >IIII magic/count/rows/cols then raw pixels; >II then labels
with open(img_path, "wb") as f:
    f.write(struct.pack(">IIII", 0x00000803, 32, 28, 28))
    f.write(images.tobytes())
with open(lbl_path, "wb") as f:
    f.write(struct.pack(">II", 0x00000801, 32))
    f.write(labels.tobytes())

ds = load_mnist_idx(img_path, lbl_path)
print(f"loaded {ds.n_samples} images x {ds.n_features} pixels")
print(f"pixel range after rescale: [{ds.features.min():.3f}, "
      f"{ds.features.max():.3f}]  (0 -> -1, 255 -> +1)")
assert np.array_equal(ds.labels, labels)

# a wrong magic number is rejected, not misread
bad = os.path.join(workdir, "bad-idx")
with open(bad, "wb") as f:
    f.write(struct.pack(">IIII", 0x12345678, 1, 28, 28))
    f.write(bytes(784))
try:
    load_mnist_idx(bad, lbl_path)
except ValueError as e:
    print("bad magic rejected:", e)

# the cache container round-trips any dataset bit-for-bit
ttt = gen_tictactoe()
cache_path = os.path.join(workdir, "ttt.bpds")
save_cache(ttt, cache_path)
back = load_cache(cache_path)
assert np.array_equal(back.features, ttt.features)
assert np.array_equal(back.train_idx, ttt.train_idx)
print(f"cache round trip: {back.name}, {back.n_samples} rows, "
      f"{os.path.getsize(cache_path)} bytes on disk")
