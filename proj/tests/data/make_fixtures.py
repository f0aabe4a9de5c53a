"""Regenerates the small dataset fixtures used by test_data.cpp.

Pixel (i, r, c) of split offset o holds ((o + i) * 16 + r * 4 + c) * 5 % 256,
label i is i % 2; train has 6 images (o = 0), val has 2 (o = 100).
"""
import struct

import numpy as np


def images(n, offset):
    i, r, c = np.meshgrid(np.arange(n), np.arange(4), np.arange(4), indexing="ij")
    return ((((offset + i) * 16 + r * 4 + c) * 5) % 256).astype(np.uint8)


def labels(n):
    return (np.arange(n) % 2).astype(np.uint8)


def idx(path, array, magic):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in array.shape:
            f.write(struct.pack(">I", d))
        f.write(array.tobytes())


tr_x, tr_y = images(6, 0), labels(6)
va_x, va_y = images(2, 100), labels(2).reshape(2, 1)
good = dict(train_images=tr_x, train_labels=tr_y, val_images=va_x, val_labels=va_y)

np.savez("stored.npz", **good)
np.savez_compressed("deflate.npz", **good)
np.savez("rgb.npz", **{**good, "train_images": np.stack([tr_x] * 3, axis=-1)})
np.savez("float.npz", **{**good, "train_images": tr_x.astype(np.float32)})
np.savez("badlabel.npz", **{**good, "train_labels": np.array([0, 1, 2, 0, 1, 0], np.uint8)})
np.savez("fortran.npz", **{**good, "train_images": np.asfortranarray(tr_x.transpose(0, 2, 1))})
np.savez("nolabels.npz", train_images=tr_x, train_labels=tr_y, val_images=va_x)

idx("train-images.idx", tr_x, 0x803)
idx("train-labels.idx", tr_y, 0x801)
idx("val-images.idx", va_x, 0x803)
idx("val-labels.idx", va_y.reshape(2), 0x801)

for name, x, y in (("train.csv", tr_x, tr_y), ("val.csv", va_x, va_y.reshape(2))):
    with open(name, "w") as f:
        f.write("label," + ",".join(f"p{k}" for k in range(16)) + "\n")
        for img, lab in zip(x, y):
            f.write(f"{lab}," + ",".join(str(v) for v in img.reshape(-1)) + "\n")
