"""Policy/value network and its checkpoint format, on plain numpy.

Topology: 23 inputs -> 512 shared ReLU trunk, then a policy branch
(512 -> 256 ReLU -> 8 categorical heads with cardinalities 5,5,5,5,3,2,2,2)
and a value branch (512 -> 256 ReLU -> 1). Weights are orthogonally
initialized: gain sqrt(2) for hidden layers, 0.01 for the policy heads (so a
fresh policy is near-uniform), 1.0 for the value output; biases start at zero.

Checkpoints are a single file: one JSON manifest line (tensor names, shapes,
dtypes, plus an arbitrary JSON `meta` payload for schedules and RNG states)
followed by the raw little-endian float32 blob, tensors concatenated in
manifest order. Save and load round-trip bit-identically.
"""

from __future__ import annotations

import json
from collections import OrderedDict

import numpy as np

from .env import ACTION_CARDINALITIES, OBSERVATION_SIZE

TRUNK_WIDTH = 512
BRANCH_WIDTH = 256

# orthogonal-init gains
GAIN_HIDDEN = float(np.sqrt(2.0))
GAIN_POLICY_HEAD = 0.01
GAIN_VALUE_OUT = 1.0

CHECKPOINT_FORMAT = 1


def orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    """Gain-scaled orthogonal (rows, cols) matrix with a fixed sign convention."""
    a = rng.standard_normal((rows, cols) if rows >= cols else (cols, rows))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # pin the QR sign ambiguity
    if rows < cols:
        q = q.T
    # C-contiguous, so freshly initialized and checkpoint-loaded weights take
    # the same BLAS paths and training continues bit-identically after a load
    return np.ascontiguousarray(gain * q[:rows, :cols])


class PolicyValueNet:
    """Shared-trunk multi-head policy with a scalar value branch."""

    def __init__(self, seed: int = 0, dtype: np.dtype = np.float32):
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        p: "OrderedDict[str, np.ndarray]" = OrderedDict()
        d = self.dtype

        def linear(name: str, rows: int, cols: int, gain: float) -> None:
            p[f"{name}.w"] = orthogonal(rng, rows, cols, gain).astype(d)
            p[f"{name}.b"] = np.zeros(rows, dtype=d)

        linear("trunk", TRUNK_WIDTH, OBSERVATION_SIZE, GAIN_HIDDEN)
        linear("policy", BRANCH_WIDTH, TRUNK_WIDTH, GAIN_HIDDEN)
        for i, card in enumerate(ACTION_CARDINALITIES):
            linear(f"head{i}", card, BRANCH_WIDTH, GAIN_POLICY_HEAD)
        linear("value", BRANCH_WIDTH, TRUNK_WIDTH, GAIN_HIDDEN)
        linear("value_out", 1, BRANCH_WIDTH, GAIN_VALUE_OUT)
        self.params = p

    # --- forward ------------------------------------------------------------

    def forward(self, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray, dict]:
        """Head logits, values, and the activation cache for backward().

        `x` is (batch, 23); logits come back as 8 arrays (batch, card_i) and
        values as (batch,).
        """
        p = self.params
        x = np.ascontiguousarray(x, dtype=self.dtype)
        h0 = np.maximum(x @ p["trunk.w"].T + p["trunk.b"], 0.0)
        hp = np.maximum(h0 @ p["policy.w"].T + p["policy.b"], 0.0)
        logits = [hp @ p[f"head{i}.w"].T + p[f"head{i}.b"] for i in range(len(ACTION_CARDINALITIES))]
        hv = np.maximum(h0 @ p["value.w"].T + p["value.b"], 0.0)
        values = (hv @ p["value_out.w"].T + p["value_out.b"])[:, 0]
        cache = {"x": x, "h0": h0, "hp": hp, "hv": hv}
        return logits, values, cache

    def backward(
        self,
        cache: dict,
        dlogits: list[np.ndarray],
        dvalues: np.ndarray,
    ) -> "OrderedDict[str, np.ndarray]":
        """Parameter gradients for upstream dlogits/dvalues (same shapes as forward output)."""
        p = self.params
        x, h0, hp, hv = cache["x"], cache["h0"], cache["hp"], cache["hv"]
        g: "OrderedDict[str, np.ndarray]" = OrderedDict()

        dhp = np.zeros_like(hp)
        for i in range(len(ACTION_CARDINALITIES)):
            dl = np.ascontiguousarray(dlogits[i], dtype=self.dtype)
            g[f"head{i}.w"] = dl.T @ hp
            g[f"head{i}.b"] = dl.sum(axis=0)
            dhp += dl @ p[f"head{i}.w"]
        dhp *= hp > 0.0
        g["policy.w"] = dhp.T @ h0
        g["policy.b"] = dhp.sum(axis=0)
        dh0 = dhp @ p["policy.w"]

        dv = np.ascontiguousarray(dvalues, dtype=self.dtype)[:, None]
        g["value_out.w"] = dv.T @ hv
        g["value_out.b"] = dv.sum(axis=0)
        dhv = dv @ p["value_out.w"]
        dhv *= hv > 0.0
        g["value.w"] = dhv.T @ h0
        g["value.b"] = dhv.sum(axis=0)
        dh0 += dhv @ p["value.w"]

        dh0 *= h0 > 0.0
        g["trunk.w"] = dh0.T @ x
        g["trunk.b"] = dh0.sum(axis=0)
        return OrderedDict((name, g[name]) for name in p)  # parameter order

    # --- dtype and state ----------------------------------------------------

    def astype(self, dtype: np.dtype) -> "PolicyValueNet":
        """Copy of the net with parameters cast (e.g. float64 for gradient checks)."""
        other = PolicyValueNet.__new__(PolicyValueNet)
        other.dtype = np.dtype(dtype)
        other.params = OrderedDict(
            (k, np.ascontiguousarray(v, dtype=dtype)) for k, v in self.params.items()
        )
        return other

    def state_tensors(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict(self.params)

    def load_state(self, tensors: dict) -> None:
        for name in self.params:
            src = tensors[name]
            if src.shape != self.params[name].shape:
                raise ValueError(f"tensor {name}: shape {src.shape} != {self.params[name].shape}")
            self.params[name] = np.ascontiguousarray(src, dtype=self.dtype)


# --- checkpoint file ----------------------------------------------------------


def save_checkpoint(path: str, tensors: "OrderedDict[str, np.ndarray]", meta: dict) -> None:
    """JSON manifest line + little-endian float32 blob, tensors in manifest order."""
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "tensors": [
            {"name": name, "shape": list(arr.shape), "dtype": "float32"}
            for name, arr in tensors.items()
        ],
        "meta": meta,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path: str) -> tuple["OrderedDict[str, np.ndarray]", dict]:
    with open(path, "rb") as fh:
        header = fh.readline()
        blob = fh.read()
    manifest = json.loads(header.decode("utf-8"))
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: unknown checkpoint format {manifest.get('format')!r}")
    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    offset = 0
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        size = 4 * count
        if offset + size > len(blob):
            raise ValueError(f"{path}: blob truncated at tensor {entry['name']}")
        arr = np.frombuffer(blob[offset : offset + size], dtype="<f4").reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float32)
        offset += size
    if offset != len(blob):
        raise ValueError(f"{path}: {len(blob) - offset} trailing bytes after tensors")
    return tensors, manifest.get("meta", {})
