"""Build the 64-image desk corpus from the sample photos bundled with scikit-image.

Each image is a seeded 128x128 crop of a source photo, box-downsampled 2x to 64x64
RGB and written as PNG. Re-running with the same seed reproduces the corpus exactly.
"""
import argparse
import os

import numpy as np
from PIL import Image
from skimage import data

SOURCES = [
    "astronaut.png", "chelsea.png", "coffee.png", "rocket.jpg", "motorcycle_left.png",
    "hubble_deep_field.jpg", "retina.jpg", "ihc.png", "camera.png", "moon.png", "grass.png",
    "brick.png", "gravel.png", "coins.png", "color.png", "text.png",
]
DATA_DIR = os.path.dirname(data.__file__)


def load(name):
    img = np.asarray(Image.open(os.path.join(DATA_DIR, name)))
    if img.dtype == bool:
        img = img.astype(np.uint8) * 255
    if img.dtype != np.uint8:
        img = (255 * (img.astype(np.float64) / img.max())).astype(np.uint8)
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    return img[..., :3]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "tests", "data", "desk"))
    ap.add_argument("--count", type=int, default=64)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--seed", type=int, default=20241014)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out, exist_ok=True)
    images = [load(s) for s in SOURCES]
    crop = 2 * args.size
    written = 0
    while written < args.count:
        src = images[written % len(images)]
        h, w, _ = src.shape
        y = int(rng.integers(0, h - crop + 1))
        x = int(rng.integers(0, w - crop + 1))
        patch = src[y:y + crop, x:x + crop].astype(np.float64)
        if patch.std() < 8.0:  # skip nearly flat crops
            continue
        small = patch.reshape(args.size, 2, args.size, 2, 3).mean(axis=(1, 3))
        out = np.clip(np.rint(small), 0, 255).astype(np.uint8)
        Image.fromarray(out, "RGB").save(os.path.join(args.out, f"desk_{written:03d}.png"))
        written += 1


if __name__ == "__main__":
    main()
