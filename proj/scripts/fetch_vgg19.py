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

"""Converts torchvision's ImageNet VGG-19 into a texpand extractor archive.

Only conv1_1 .. conv5_1 are kept, which is all the style loss reads. Needs
torch and torchvision plus network access to the torchvision weight host.

    python scripts/fetch_vgg19.py --output models/vgg19.bin

Then set `extractor = models/vgg19.bin` in the training config.
"""

import argparse
import hashlib
import pathlib

import numpy as np

# Indices of the conv layers inside torchvision's vgg19().features.
CONV_INDICES = [0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28]
CONV_NAMES = [
    "conv1_1", "conv1_2",
    "conv2_1", "conv2_2",
    "conv3_1", "conv3_2", "conv3_3", "conv3_4",
    "conv4_1", "conv4_2", "conv4_3", "conv4_4",
    "conv5_1",
]
MEAN = (0.485, 0.456, 0.406)
STD = (0.229, 0.224, 0.225)

MAGIC = b"TEXPAND-WEIGHTS 1\n"
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a(data: bytes, h: int = FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\n", "\\n")


def trimmed_dims(shape) -> str:
    dims = list(shape) + [1] * (4 - len(shape))
    while len(dims) > 1 and dims[-1] == 1:
        dims.pop()
    return ",".join(str(d) for d in dims)


def write_archive(path: pathlib.Path, tensors: dict, metadata: dict) -> None:
    header = b""
    for key in sorted(metadata):
        header += f"meta {key} {escape(metadata[key])}\n".encode()
    payload = b""
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        header += f"tensor {name} f32 {trimmed_dims(arr.shape)} {len(payload)} {arr.nbytes}\n".encode()
        payload += arr.tobytes()
    digest = fnv1a(payload, fnv1a(header))
    data = MAGIC + header + f"checksum {digest:016x}\nend\n".encode() + payload
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--output", type=pathlib.Path, required=True)
    args = parser.parse_args()

    import torchvision  # deferred so --help works without torch

    model = torchvision.models.vgg19(weights=torchvision.models.VGG19_Weights.IMAGENET1K_V1)
    features = model.features
    tensors = {}
    for index, name in zip(CONV_INDICES, CONV_NAMES):
        conv = features[index]
        tensors[f"{name}.weight"] = conv.weight.detach().cpu().numpy()
        tensors[f"{name}.bias"] = conv.bias.detach().cpu().numpy()

    h = hashlib.sha256()
    for name in sorted(tensors):
        h.update(tensors[name].astype("<f4").tobytes())
    metadata = {
        "kind": "extractor",
        "extractor.source": "torchvision.vgg19.IMAGENET1K_V1",
        "extractor.mean": ",".join(repr(v) for v in MEAN),
        "extractor.std": ",".join(repr(v) for v in STD),
        "extractor.sha256": h.hexdigest(),
    }
    args.output.parent.mkdir(parents=True, exist_ok=True)
    write_archive(args.output, tensors, metadata)
    print(args.output)


if __name__ == "__main__":
    main()
