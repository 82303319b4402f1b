"""Network checkpoints in the shared binary container."""

from __future__ import annotations

from .. import _binio
from ..errors import FormatError
from .network import NetTopology, SurrogateNet

MAGIC = b"PMSMNN\x00\x01"
SCHEMA_VERSION = 1


def to_bytes(net: SurrogateNet, kind: str = "hybrid", config: dict | None = None, seed: int = 0,
             epoch: int = 0) -> bytes:
    meta = {
        "kind": kind,
        "topology": net.topology.to_dict(),
        "config": dict(config or {}),
        "seed": int(seed),
        "epoch": int(epoch),
        "n_params": net.n_params,
    }
    arrays = {f"p{k:03d}": p for k, p in enumerate(net.params)}
    arrays["x_lo"] = net.x_lo
    arrays["x_span"] = net.x_span
    for b in net.topology.branches:
        arrays[f"y_mean/{b.name}"] = net.y_mean[b.name]
        arrays[f"y_std/{b.name}"] = net.y_std[b.name]
    return _binio.dumps(MAGIC, SCHEMA_VERSION, meta, arrays)


def from_bytes(blob: bytes) -> tuple[SurrogateNet, dict]:
    """Network and header metadata (kind, config, seed, epoch)."""
    header, arrays = _binio.loads(blob, MAGIC, SCHEMA_VERSION)
    try:
        topology = NetTopology.from_dict(header["topology"])
        n = 2 * len(topology.layer_shapes())
        net = SurrogateNet(
            topology,
            [arrays[f"p{k:03d}"] for k in range(n)],
            arrays["x_lo"],
            arrays["x_span"],
            {b.name: arrays[f"y_mean/{b.name}"] for b in topology.branches},
            {b.name: arrays[f"y_std/{b.name}"] for b in topology.branches},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"inconsistent checkpoint: {exc}") from None
    meta = {k: header[k] for k in ("kind", "config", "seed", "epoch")}
    return net, meta


def save(path, net: SurrogateNet, **meta) -> None:
    _binio.write(path, to_bytes(net, **meta))


def load(path) -> tuple[SurrogateNet, dict]:
    return from_bytes(_binio.read(path))
