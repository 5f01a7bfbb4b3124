# Copyright 2026 The texpand Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes data/cells_256.png, the stationary exemplar used by the smoke run.

Randomly placed soft cells on a fine-grained background, wrapped toroidally so
the statistics are the same everywhere in the image.
"""

import argparse

import numpy as np
from PIL import Image


def make(size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.zeros((size, size, 3))
    img += np.array([0.35, 0.27, 0.20])
    for _ in range(160):
        cy, cx = rng.uniform(0, size, 2)
        r = rng.uniform(6, 13)
        dy = np.minimum(np.abs(yy - cy), size - np.abs(yy - cy))
        dx = np.minimum(np.abs(xx - cx), size - np.abs(xx - cx))
        d = np.sqrt(dy**2 + dx**2)
        mask = 1.0 / (1.0 + np.exp((d - r) * 1.5))
        colour = np.array([0.75, 0.55, 0.35]) + rng.normal(0, 0.08, 3)
        img = img * (1 - mask[..., None]) + colour * mask[..., None]
    img += rng.normal(0, 0.03, img.shape)
    return np.clip(img, 0, 1)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--output", default="data/cells_256.png")
    args = ap.parse_args()
    img = make(args.size, args.seed)
    Image.fromarray((img * 255 + 0.5).astype(np.uint8), "RGB").save(args.output)


if __name__ == "__main__":
    main()
