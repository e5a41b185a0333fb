"""Weight checkpoints: binary weights plus a JSON sidecar holding the spec.

Binary layout: ``b"RFIW"``, format version (uint32 LE), manifest length
(uint32 LE), UTF-8 JSON manifest (parameter names and shapes), then every
parameter as row-major little-endian float64 in manifest order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ContractViolation
from .network import Network, build_network

MAGIC = b"RFIW"
VERSION = 1


def save_weights(nets: dict, path, extra: dict | None = None):
    """Save named networks to ``path`` and ``path.json``."""
    path = Path(path)
    manifest = []
    blobs = []
    for name, net in nets.items():
        for pname, p in zip(net.param_names(), net.params()):
            manifest.append({"net": name, "param": pname, "shape": list(p.shape)})
            blobs.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    head = json.dumps(manifest, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(head)))
        fh.write(head)
        for b in blobs:
            fh.write(b)
    sidecar = {"format": "rfibench-weights", "version": VERSION,
               "networks": {name: net.spec() for name, net in nets.items()},
               "extra": extra or {}}
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_weights(path) -> tuple[dict, dict]:
    """Returns ``(networks, extra)``."""
    path = Path(path)
    with open(str(path) + ".json") as fh:
        sidecar = json.load(fh)
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ContractViolation(f"{path}: not a weight file")
        version, n = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ContractViolation(f"{path}: unsupported version {version}")
        manifest = json.loads(fh.read(n).decode())
        payload = fh.read()
    nets: dict[str, Network] = {name: build_network(spec)
                                for name, spec in sidecar["networks"].items()}
    offset = 0
    params = {name: dict(zip(net.param_names(), net.params())) for name, net in nets.items()}
    for entry in manifest:
        target = params[entry["net"]][entry["param"]]
        if list(target.shape) != entry["shape"]:
            raise ContractViolation(f"{path}: shape mismatch for {entry}")
        count = int(np.prod(entry["shape"]))
        target[...] = np.frombuffer(payload, "<f8", count, offset).reshape(target.shape)
        offset += 8 * count
    if offset != len(payload):
        raise ContractViolation(f"{path}: trailing bytes in weight file")
    return nets, sidecar.get("extra", {})
