"""Binary checkpoint format for receiver models.

File layout::

    8 bytes   magic "NRXCKPT1"
    8 bytes   header length, unsigned little-endian
    8 bytes   payload length, unsigned little-endian
    header    UTF-8 "key=value" lines
    payload   raw little-endian float32 arrays, row-major

The header carries a fingerprint (architecture plus domain identifiers)
and one record per primitive layer: name, kind, channel counts, trainable
flag, and the byte extent of its slice of the payload.  A conv layer's
slice is its weights ``[out, in, kh, kw]`` followed by its bias; a norm
layer's slice is gamma followed by beta.  Offsets must tile the payload
exactly; anything else is rejected.

Writes are atomic (temp file in the same directory, then ``os.replace``).
Optimiser state is never stored; adaptation always restarts Adam fresh.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError
from .numerics.layers import Conv2D, LayerNorm
from .receiver import ModelSpec, ReceiverModel

MAGIC = b"NRXCKPT1"

# Fingerprint keys that must agree for a strict-policy load.  Seeds are
# deliberately excluded: two runs over the same domain are compatible.
STRICT_KEYS = (
    "modulation",
    "profile",
    "n_rx",
    "num_symbols",
    "num_subcarriers",
    "guard_lo",
    "guard_hi",
    "scs_khz",
    "in_channels",
    "width_in",
    "width_res",
    "num_blocks",
    "out_bits",
)

SPEC_KEYS = ("in_channels", "width_in", "width_res", "num_blocks", "out_bits")


@dataclass
class CheckpointLayer:
    name: str
    kind: str                      # conv2d | layer_norm
    shape_meta: dict
    trainable: bool
    arrays: list = field(default_factory=list)

    @property
    def nbytes(self) -> int:
        return sum(a.nbytes for a in self.arrays)


@dataclass
class Checkpoint:
    fingerprint: dict
    layers: list

    @property
    def fingerprint_id(self) -> str:
        text = ";".join(f"{k}={self.fingerprint[k]}" for k in sorted(self.fingerprint))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def layer(self, name: str) -> CheckpointLayer:
        for rec in self.layers:
            if rec.name == name:
                return rec
        raise KeyError(name)

    def spec(self) -> ModelSpec:
        try:
            return ModelSpec(**{k: int(self.fingerprint[k]) for k in SPEC_KEYS})
        except KeyError as missing:
            raise CheckpointError(f"fingerprint lacks {missing}") from None


def checkpoint_from_model(model: ReceiverModel, fingerprint: dict | None = None) -> Checkpoint:
    fp = {k: str(getattr(model.spec, k)) for k in SPEC_KEYS}
    if fingerprint:
        fp.update({k: str(v) for k, v in fingerprint.items()})
    layers = []
    coarse_of = {qual: qual.split(".")[0] for qual, _ in model.primitive_layers()}
    for qual, layer in model.primitive_layers():
        trainable = model.trainable[coarse_of[qual]]
        if isinstance(layer, Conv2D):
            meta = {
                "in": layer.in_channels,
                "out": layer.out_channels,
                "kernel": f"{layer.kernel[0]}x{layer.kernel[1]}",
            }
            arrays = [layer.weights, layer.bias]
            kind = "conv2d"
        elif isinstance(layer, LayerNorm):
            meta = {"channels": layer.num_channels}
            arrays = [layer.gamma, layer.beta]
            kind = "layer_norm"
        else:
            raise CheckpointError(f"cannot serialise layer kind {type(layer).__name__}")
        arrays = [np.ascontiguousarray(a, dtype=np.float32) for a in arrays]
        layers.append(CheckpointLayer(qual, kind, meta, trainable, arrays))
    return Checkpoint(fp, layers)


def checkpoint_bytes(ck: Checkpoint) -> bytes:
    lines = ["format=1"]
    for key in sorted(ck.fingerprint):
        lines.append(f"fingerprint.{key}={ck.fingerprint[key]}")
    lines.append(f"num_layers={len(ck.layers)}")
    offset = 0
    payload_parts = []
    for i, rec in enumerate(ck.layers):
        lines.append(f"layer.{i}.name={rec.name}")
        lines.append(f"layer.{i}.kind={rec.kind}")
        for mk, mv in rec.shape_meta.items():
            lines.append(f"layer.{i}.{mk}={mv}")
        lines.append(f"layer.{i}.trainable={int(rec.trainable)}")
        lines.append(f"layer.{i}.offset={offset}")
        lines.append(f"layer.{i}.nbytes={rec.nbytes}")
        for a in rec.arrays:
            payload_parts.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
        offset += rec.nbytes
    header = ("\n".join(lines) + "\n").encode("utf-8")
    payload = b"".join(payload_parts)
    head = MAGIC + len(header).to_bytes(8, "little") + len(payload).to_bytes(8, "little")
    return head + header + payload


def save_checkpoint(model_or_ck, path, fingerprint: dict | None = None) -> None:
    """Serialise a model or in-memory checkpoint to ``path`` atomically."""
    ck = model_or_ck
    if isinstance(model_or_ck, ReceiverModel):
        ck = checkpoint_from_model(model_or_ck, fingerprint)
    blob = checkpoint_bytes(ck)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".ckpt-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_header(text: str) -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        if "=" not in line:
            raise CheckpointError(f"header line {lineno} is not key=value: {line!r}")
        key, value = line.split("=", 1)
        pairs[key] = value
    return pairs


_EXPECTED_META = {"conv2d": ("in", "out", "kernel"), "layer_norm": ("channels",)}


def read_checkpoint(path) -> Checkpoint:
    """Parse and fully validate a checkpoint file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 24 or blob[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    header_len = int.from_bytes(blob[8:16], "little")
    payload_len = int.from_bytes(blob[16:24], "little")
    if len(blob) != 24 + header_len + payload_len:
        raise CheckpointError(
            f"{path}: truncated or oversized (expected {24 + header_len + payload_len} "
            f"bytes, file has {len(blob)})"
        )
    try:
        pairs = _parse_header(blob[24 : 24 + header_len].decode("utf-8"))
    except UnicodeDecodeError:
        raise CheckpointError(f"{path}: header is not UTF-8") from None
    if pairs.get("format") != "1":
        raise CheckpointError(f"{path}: unsupported format {pairs.get('format')!r}")
    payload = blob[24 + header_len :]

    fp = {k[len("fingerprint.") :]: v for k, v in pairs.items() if k.startswith("fingerprint.")}
    try:
        num_layers = int(pairs["num_layers"])
    except (KeyError, ValueError):
        raise CheckpointError(f"{path}: missing or bad num_layers") from None

    layers = []
    extents = []
    for i in range(num_layers):
        def get(suffix, i=i):
            key = f"layer.{i}.{suffix}"
            if key not in pairs:
                raise CheckpointError(f"{path}: missing {key}")
            return pairs[key]

        kind = get("kind")
        if kind not in _EXPECTED_META:
            raise CheckpointError(f"{path}: unknown layer kind {kind!r}")
        meta = {mk: get(mk) for mk in _EXPECTED_META[kind]}
        try:
            offset, nbytes = int(get("offset")), int(get("nbytes"))
        except ValueError:
            raise CheckpointError(f"{path}: non-integer extent for layer {i}") from None
        if offset < 0 or nbytes < 0 or offset + nbytes > payload_len:
            raise CheckpointError(f"{path}: layer {i} extent outside the payload")
        extents.append((offset, nbytes, i))

        if kind == "conv2d":
            c_in, c_out = int(meta["in"]), int(meta["out"])
            kh, kw = (int(v) for v in meta["kernel"].split("x"))
            wbytes = c_out * c_in * kh * kw * 4
            if nbytes != wbytes + c_out * 4:
                raise CheckpointError(f"{path}: layer {i} size disagrees with its shape")
            raw = payload[offset : offset + nbytes]
            weights = np.frombuffer(raw[:wbytes], dtype="<f4").reshape(c_out, c_in, kh, kw)
            bias = np.frombuffer(raw[wbytes:], dtype="<f4")
            arrays = [weights.copy(), bias.copy()]
            shape_meta = {"in": c_in, "out": c_out, "kernel": f"{kh}x{kw}"}
        else:
            c = int(meta["channels"])
            if nbytes != 2 * c * 4:
                raise CheckpointError(f"{path}: layer {i} size disagrees with its shape")
            raw = payload[offset : offset + nbytes]
            arrays = [
                np.frombuffer(raw[: c * 4], dtype="<f4").copy(),
                np.frombuffer(raw[c * 4 :], dtype="<f4").copy(),
            ]
            shape_meta = {"channels": c}
        layers.append(
            CheckpointLayer(get("name"), kind, shape_meta, get("trainable") == "1", arrays)
        )

    extents.sort()
    cursor = 0
    for offset, nbytes, i in extents:
        if offset != cursor:
            raise CheckpointError(
                f"{path}: payload offsets must tile exactly; layer {i} starts at "
                f"{offset}, expected {cursor}"
            )
        cursor += nbytes
    if cursor != payload_len:
        raise CheckpointError(f"{path}: {payload_len - cursor} unaccounted payload bytes")
    return Checkpoint(fp, layers)


def _apply_layer(target, rec: CheckpointLayer) -> bool:
    if isinstance(target, Conv2D) and rec.kind == "conv2d":
        w, b = rec.arrays
        if w.shape != target.weights.shape:
            return False
        target.weights = w.astype(target.dtype).copy()
        target.bias = b.astype(target.dtype).copy()
        return True
    if isinstance(target, LayerNorm) and rec.kind == "layer_norm":
        g, be = rec.arrays
        if g.shape != target.gamma.shape:
            return False
        target.gamma = g.astype(target.dtype).copy()
        target.beta = be.astype(target.dtype).copy()
        return True
    return False


@dataclass
class LoadResult:
    model: ReceiverModel
    checkpoint: Checkpoint
    transplanted: list
    reinitialized: list

    @property
    def delta(self) -> list:
        return [f"reinitialized {name}: {why}" for name, why in self.reinitialized]


def load_checkpoint(path_or_ck, policy: str = "strict", target_spec: ModelSpec | None = None, init_seed: int = 0) -> LoadResult:
    """Rebuild a model from a checkpoint.

    With no ``target_spec`` the architecture comes from the fingerprint and
    every tensor must apply.  With one, ``strict`` additionally requires
    the domain fingerprint keys to agree; ``permissive`` transplants every
    shape-compatible tensor into a freshly initialised target model
    (seeded by ``init_seed``) and reports the rest in ``reinitialized``.
    """
    ck = path_or_ck if isinstance(path_or_ck, Checkpoint) else read_checkpoint(path_or_ck)
    if policy not in ("strict", "permissive"):
        raise CheckpointError(f"unknown load policy {policy!r}")

    if target_spec is None:
        spec = ck.spec()
        strict = True
    else:
        spec = target_spec
        strict = policy == "strict"
        if strict:
            ours = {k: str(getattr(spec, k, "")) for k in SPEC_KEYS}
            for key in STRICT_KEYS:
                if key in ck.fingerprint and key in ours and ck.fingerprint[key] != ours[key]:
                    raise CheckpointError(
                        f"fingerprint mismatch on {key}: checkpoint "
                        f"{ck.fingerprint[key]!r}, target {ours[key]!r} "
                        f"(use policy='permissive' to transplant)"
                    )

    seed = init_seed if target_spec is not None else int(ck.fingerprint.get("seed", 0))
    model = ReceiverModel(spec, seed=seed)
    by_name = {qual: layer for qual, layer in model.primitive_layers()}
    transplanted, reinitialized = [], []
    for rec in ck.layers:
        target = by_name.get(rec.name)
        if target is None:
            reinitialized.append((rec.name, "absent from the target architecture"))
            continue
        if _apply_layer(target, rec):
            transplanted.append(rec.name)
            coarse = rec.name.split(".")[0]
            if coarse in model.trainable:
                model.trainable[coarse] = rec.trainable
        else:
            reinitialized.append((rec.name, "shape mismatch"))
    missing = [q for q in by_name if q not in {r.name for r in ck.layers}]
    for name in missing:
        reinitialized.append((name, "not present in the checkpoint"))
    if strict and reinitialized:
        detail = "; ".join(f"{n} ({w})" for n, w in reinitialized)
        raise CheckpointError(f"strict load could not apply every tensor: {detail}")
    return LoadResult(model, ck, transplanted, reinitialized)
