"""Minimal dense Q-network: forward, backprop, Adam, checkpoints.

The topology is fixed in shape but not in size: affine layers with batch
normalization and rectified-linear activation after every hidden layer,
and a plain affine output layer. Everything is numpy; no autograd.

Checkpoint format (little-endian throughout):

    bytes 0..7   magic ``PSRLNET1``
    bytes 8..11  uint32 length of the JSON header
    header       UTF-8 JSON: layer sizes, dtype, ordered tensor names/shapes
    data         raw float32 tensor buffers, concatenated in header order
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "NetworkParams",
    "OptimizerState",
    "CheckpointError",
    "DivergenceError",
    "init_params",
    "forward",
    "train_step",
    "clone_params",
    "copy_into",
    "save_params",
    "load_params",
]

BN_EPS = 1e-5
BN_MOMENTUM = 0.99

_MAGIC = b"PSRLNET1"


class CheckpointError(Exception):
    """A checkpoint file is malformed or does not fit the architecture."""


class DivergenceError(Exception):
    """Training produced a non-finite loss."""


@dataclass
class NetworkParams:
    """All learnable tensors plus batch-norm running statistics.

    ``weights``/``biases`` have one entry per affine layer;
    the ``bn_*`` lists have one entry per hidden layer.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_gamma: list[np.ndarray]
    bn_beta: list[np.ndarray]
    bn_mean: list[np.ndarray]
    bn_var: list[np.ndarray]

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    def trainable(self) -> list[np.ndarray]:
        """Tensors touched by the optimizer, in a fixed order."""
        out: list[np.ndarray] = []
        n_hidden = len(self.layer_sizes) - 2
        for l in range(len(self.weights)):
            out.append(self.weights[l])
            out.append(self.biases[l])
            if l < n_hidden:
                out.append(self.bn_gamma[l])
                out.append(self.bn_beta[l])
        return out


def init_params(
    layer_sizes: tuple[int, ...] | list[int],
    rng: np.random.Generator,
    dtype=np.float32,
) -> NetworkParams:
    """Seeded He-style uniform init: W ~ U(+-sqrt(6/fan_in)), zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ValueError(f"bad layer sizes {sizes}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    n_hidden = len(sizes) - 2
    return NetworkParams(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        bn_gamma=[np.ones(sizes[l + 1], dtype=dtype) for l in range(n_hidden)],
        bn_beta=[np.zeros(sizes[l + 1], dtype=dtype) for l in range(n_hidden)],
        bn_mean=[np.zeros(sizes[l + 1], dtype=dtype) for l in range(n_hidden)],
        bn_var=[np.ones(sizes[l + 1], dtype=dtype) for l in range(n_hidden)],
    )


def _check_inputs(params: NetworkParams, inputs: np.ndarray, train: bool) -> np.ndarray:
    x = np.asarray(inputs, dtype=params.dtype)
    if x.ndim != 2:
        raise ValueError(f"inputs must be 2-D (batch, features), got shape {x.shape}")
    if x.shape[1] != params.layer_sizes[0]:
        raise ValueError(
            f"input width {x.shape[1]} != network input size {params.layer_sizes[0]}"
        )
    if x.shape[0] < 1:
        raise ValueError("empty batch")
    if train and x.shape[0] < 2:
        raise ValueError("train mode needs a batch of at least 2 (batch statistics)")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in inputs")
    return x


def _forward_pass(params: NetworkParams, x: np.ndarray, train: bool):
    """Run the network, returning outputs and per-layer caches.

    Train mode normalizes with batch statistics and advances the running
    mean/variance in place; eval mode reads the running statistics only.
    """
    n_hidden = len(params.layer_sizes) - 2
    caches = []
    h = x
    for l in range(n_hidden):
        z = h @ params.weights[l] + params.biases[l]
        if train:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            params.bn_mean[l] *= BN_MOMENTUM
            params.bn_mean[l] += (1.0 - BN_MOMENTUM) * mu
            params.bn_var[l] *= BN_MOMENTUM
            params.bn_var[l] += (1.0 - BN_MOMENTUM) * var
        else:
            mu = params.bn_mean[l]
            var = params.bn_var[l]
        inv_std = 1.0 / np.sqrt(var + np.asarray(BN_EPS, dtype=params.dtype))
        zhat = (z - mu) * inv_std
        a = params.bn_gamma[l] * zhat + params.bn_beta[l]
        h_next = np.maximum(a, 0.0)
        caches.append((h, z, mu, inv_std, zhat, a))
        h = h_next
    out = h @ params.weights[-1] + params.biases[-1]
    caches.append((h,))
    return out, caches


def forward(params: NetworkParams, inputs, train: bool = False) -> np.ndarray:
    """Q-values for a batch of observations, one row per input row."""
    x = _check_inputs(params, inputs, train)
    out, _ = _forward_pass(params, x, train)
    return out


def _backward_pass(params: NetworkParams, caches, d_out: np.ndarray):
    """Gradients for every trainable tensor, in trainable() order."""
    n_hidden = len(params.layer_sizes) - 2
    n = d_out.shape[0]
    grads: dict[int, list[np.ndarray]] = {}

    (h_last,) = caches[-1]
    d_w = h_last.T @ d_out
    d_b = d_out.sum(axis=0)
    d_h = d_out @ params.weights[-1].T
    grads[n_hidden] = [d_w, d_b]

    for l in range(n_hidden - 1, -1, -1):
        h_in, z, mu, inv_std, zhat, a = caches[l]
        d_a = d_h * (a > 0)
        d_gamma = (d_a * zhat).sum(axis=0)
        d_beta = d_a.sum(axis=0)
        d_zhat = d_a * params.bn_gamma[l]
        # batch-norm backward through the batch statistics
        z_centered = z - mu
        d_var = (d_zhat * z_centered).sum(axis=0) * (-0.5) * inv_std**3
        d_mu = -(d_zhat.sum(axis=0)) * inv_std + d_var * (-2.0 / n) * z_centered.sum(axis=0)
        d_z = d_zhat * inv_std + d_var * (2.0 / n) * z_centered + d_mu / n
        d_w = h_in.T @ d_z
        d_b = d_z.sum(axis=0)
        d_h = d_z @ params.weights[l].T
        grads[l] = [d_w, d_b, d_gamma, d_beta]

    flat: list[np.ndarray] = []
    for l in range(n_hidden + 1):
        flat.extend(grads[l])
    return flat


@dataclass
class OptimizerState:
    """Adam accumulators shaped like the trainable tensors."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: NetworkParams, learning_rate: float = 1e-3) -> "OptimizerState":
        state = cls(learning_rate=learning_rate)
        for t in params.trainable():
            state.m.append(np.zeros_like(t))
            state.v.append(np.zeros_like(t))
        return state


def selected_q_loss(outputs: np.ndarray, actions: np.ndarray, targets: np.ndarray):
    """Mean squared error over the per-row selected outputs.

    Returns (loss, d_outputs); gradient flows only through the selected
    column of each row.
    """
    n = outputs.shape[0]
    rows = np.arange(n)
    selected = outputs[rows, actions]
    residual = selected - targets
    loss = float(np.mean(residual**2))
    d_out = np.zeros_like(outputs)
    d_out[rows, actions] = (2.0 / n) * residual
    return loss, d_out


def train_step(
    params: NetworkParams,
    optimizer: OptimizerState,
    inputs,
    actions,
    targets,
) -> float:
    """One gradient step on the selected-output MSE; returns pre-update loss."""
    x = _check_inputs(params, inputs, train=True)
    actions = np.asarray(actions, dtype=np.intp)
    targets = np.asarray(targets, dtype=params.dtype)
    if actions.shape != (x.shape[0],) or targets.shape != (x.shape[0],):
        raise ValueError("need one action index and one target per input row")
    if actions.min() < 0 or actions.max() >= params.layer_sizes[-1]:
        raise ValueError("action index out of range")

    out, caches = _forward_pass(params, x, train=True)
    loss, d_out = selected_q_loss(out, actions, targets)
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite training loss {loss}")
    grads = _backward_pass(params, caches, d_out)

    optimizer.step += 1
    t = optimizer.step
    b1, b2 = optimizer.beta1, optimizer.beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for tensor, grad, m, v in zip(params.trainable(), grads, optimizer.m, optimizer.v):
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad**2
        m_hat = m / bias1
        v_hat = v / bias2
        tensor -= optimizer.learning_rate * m_hat / (np.sqrt(v_hat) + optimizer.eps)
    return loss


def clone_params(params: NetworkParams) -> NetworkParams:
    """Independent deep copy."""
    return NetworkParams(
        layer_sizes=params.layer_sizes,
        weights=[w.copy() for w in params.weights],
        biases=[b.copy() for b in params.biases],
        bn_gamma=[g.copy() for g in params.bn_gamma],
        bn_beta=[b.copy() for b in params.bn_beta],
        bn_mean=[m.copy() for m in params.bn_mean],
        bn_var=[v.copy() for v in params.bn_var],
    )


def copy_into(src: NetworkParams, dst: NetworkParams) -> None:
    """Overwrite dst's tensors with src's values (shapes must match)."""
    if src.layer_sizes != dst.layer_sizes:
        raise ValueError(f"layer sizes differ: {src.layer_sizes} vs {dst.layer_sizes}")
    for a, b in zip(_all_tensors(src), _all_tensors(dst)):
        np.copyto(b, a)


def _all_tensors(params: NetworkParams) -> list[np.ndarray]:
    out = []
    n_hidden = len(params.layer_sizes) - 2
    for l in range(len(params.weights)):
        out.append(params.weights[l])
        out.append(params.biases[l])
        if l < n_hidden:
            out.append(params.bn_gamma[l])
            out.append(params.bn_beta[l])
            out.append(params.bn_mean[l])
            out.append(params.bn_var[l])
    return out


def _tensor_names(layer_sizes: tuple[int, ...]) -> list[str]:
    names = []
    n_hidden = len(layer_sizes) - 2
    for l in range(len(layer_sizes) - 1):
        names.append(f"w{l}")
        names.append(f"b{l}")
        if l < n_hidden:
            names.extend(
                [f"bn{l}.gamma", f"bn{l}.beta", f"bn{l}.mean", f"bn{l}.var"]
            )
    return names


def _expected_shape(name: str, sizes: tuple[int, ...]) -> tuple[int, ...]:
    if name.startswith("w"):
        l = int(name[1:])
        return (sizes[l], sizes[l + 1])
    if name.startswith("b") and "." not in name:
        l = int(name[1:])
        return (sizes[l + 1],)
    l = int(name[2 : name.index(".")])
    return (sizes[l + 1],)


def save_params(params: NetworkParams, path: str | Path) -> None:
    """Write a checkpoint; tensors are stored as little-endian float32."""
    names = _tensor_names(params.layer_sizes)
    tensors = _all_tensors(params)
    header = {
        "layer_sizes": list(params.layer_sizes),
        "dtype": "float32",
        "tensors": [
            {"name": n, "shape": list(t.shape)} for n, t in zip(names, tensors)
        ],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for t in tensors:
            fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def load_params(path: str | Path) -> NetworkParams:
    """Read a checkpoint written by save_params; everything is verified."""
    raw = Path(path).read_bytes()
    if len(raw) < len(_MAGIC) + 4 or raw[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a network checkpoint (bad magic)")
    (header_len,) = struct.unpack_from("<I", raw, len(_MAGIC))
    header_start = len(_MAGIC) + 4
    if len(raw) < header_start + header_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[header_start : header_start + header_len])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc
    if header.get("dtype") != "float32":
        raise CheckpointError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    sizes = tuple(int(s) for s in header.get("layer_sizes", ()))
    if len(sizes) < 2:
        raise CheckpointError(f"{path}: bad layer sizes {sizes}")
    expected_names = _tensor_names(sizes)
    entries = header.get("tensors", [])
    if [e.get("name") for e in entries] != expected_names:
        raise CheckpointError(f"{path}: tensor list does not match layer sizes")

    arrays = []
    offset = header_start + header_len
    for entry in entries:
        shape = tuple(int(s) for s in entry["shape"])
        expected = _expected_shape(entry["name"], sizes)
        if shape != expected:
            raise CheckpointError(
                f"{path}: tensor {entry['name']!r} has shape {shape}, expected {expected}"
            )
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated data at tensor {entry['name']!r}")
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
        arrays.append(arr.reshape(shape).astype(np.float32))
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")

    n_hidden = len(sizes) - 2
    params = init_params(sizes, np.random.default_rng(0))
    it = iter(arrays)
    for l in range(len(sizes) - 1):
        params.weights[l] = next(it)
        params.biases[l] = next(it)
        if l < n_hidden:
            params.bn_gamma[l] = next(it)
            params.bn_beta[l] = next(it)
            params.bn_mean[l] = next(it)
            params.bn_var[l] = next(it)
    return params
