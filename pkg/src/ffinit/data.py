"""Dataset ingestion, synthetic generators, and model persistence."""

from __future__ import annotations

import enum
import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    CheckpointError,
    ConstructionError,
    DatasetError,
    IdxFormatError,
    IdxLengthError,
)
from .network import (
    Activation,
    LayerSpec,
    NetworkParams,
    feedforward_init,
    mutual_prediction_residual,
)

IDX_IMAGE_MAGIC = 0x00000803
MNIST_DIR_ENV = "FFINIT_MNIST_DIR"
MODEL_FORMAT = "ffinit-model"
MODEL_FORMAT_VERSION = 1


class DataSource(enum.Enum):
    IDX_FILE = "idx-file"
    SYNTHETIC_BLOBS = "synthetic-blobs"
    SYNTHETIC_AUTOENCODABLE = "synthetic-autoencodable"


@dataclass(frozen=True)
class DatasetHandle:
    """Immutable collection of vectors with entries in ``[0, 1]``."""

    items: np.ndarray
    name: str
    source: DataSource

    def __post_init__(self):
        items = np.array(self.items, dtype=float)
        if items.ndim != 2:
            raise DatasetError(f"items must be a 2-d array, got shape {items.shape}")
        if items.size and (not np.all(np.isfinite(items))
                           or items.min() < 0.0 or items.max() > 1.0):
            raise DatasetError("dataset values must be finite and within [0, 1]")
        items.setflags(write=False)
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return self.items.shape[0]

    @property
    def dim(self) -> int:
        return self.items.shape[1]


def subset(data: DatasetHandle, n_items: int) -> DatasetHandle:
    """First ``n_items`` of a dataset, preserving order."""
    if not 0 < n_items <= len(data):
        raise DatasetError(f"cannot take {n_items} items from a dataset of {len(data)}")
    return DatasetHandle(items=data.items[:n_items], name=f"{data.name}[:{n_items}]",
                         source=data.source)


def load_idx_images(path: str | Path) -> DatasetHandle:
    """Load an IDX image file (unsigned bytes), scaled into ``[0, 1]``.

    The format is a big-endian header ``magic(0x00000803), count, rows,
    cols`` followed by ``count * rows * cols`` raw pixel bytes; each
    image becomes one flat vector of dimension ``rows * cols`` scaled by
    ``1 / 255``.

    Raises:
        IdxFormatError: Wrong magic number or malformed header.
        IdxLengthError: The payload is shorter or longer than the header
            declares.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 16:
        raise IdxFormatError(f"{path}: too short to hold an IDX image header")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError(
            f"{path}: magic 0x{magic:08x} is not an IDX image file "
            f"(expected 0x{IDX_IMAGE_MAGIC:08x})")
    expected = count * rows * cols
    payload = raw[16:]
    if len(payload) != expected:
        raise IdxLengthError(
            f"{path}: header declares {expected} pixel bytes, file holds {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)
    return DatasetHandle(items=pixels.astype(float) / 255.0, name=path.name,
                         source=DataSource.IDX_FILE)


def default_mnist_images_path(filename: str = "train-images-idx3-ubyte") -> Path:
    """Resolve an MNIST IDX file from the ``FFINIT_MNIST_DIR`` directory.

    This package never downloads data; point the environment variable at
    a directory holding the standard IDX files (or pass an explicit path
    where one is accepted).
    """
    directory = os.environ.get(MNIST_DIR_ENV)
    if not directory:
        raise DatasetError(
            f"no dataset path given and {MNIST_DIR_ENV} is not set; set it to a "
            "directory containing the MNIST IDX files or configure an explicit path")
    for candidate in (filename, filename.replace("-idx", ".idx")):
        path = Path(directory) / candidate
        if path.exists():
            return path
    raise DatasetError(
        f"{MNIST_DIR_ENV}={directory} does not contain {filename}; download the "
        "standard MNIST IDX files into that directory")


def synth_blobs(n_items: int, d: int, n_clusters: int = 8, spread: float = 0.05,
                seed: int = 0) -> DatasetHandle:
    """Gaussian clusters clipped to the unit cube.

    Cluster centers are uniform in ``[0.1, 0.9]^d``; each item is its
    cluster center plus isotropic Gaussian noise of standard deviation
    ``spread``, clipped to ``[0, 1]``. Deterministic under ``seed``.
    """
    if d < 1 or n_items < 1 or n_clusters < 1:
        raise DatasetError("n_items, d, and n_clusters must all be >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.1, 0.9, size=(n_clusters, d))
    assignment = rng.integers(0, n_clusters, size=n_items)
    items = centers[assignment]
    if spread > 0.0:
        items = items + spread * rng.standard_normal((n_items, d))
    return DatasetHandle(items=np.clip(items, 0.0, 1.0), name="synthetic-blobs",
                         source=DataSource.SYNTHETIC_BLOBS)


def synth_autoencodable(n_items: int, spec: LayerSpec, seed: int = 0,
                        margin: float = 0.35) -> tuple[DatasetHandle, NetworkParams]:
    """Ground-truth instance on which every layer pair reconstructs exactly.

    All layer codes are placed on a shared low-dimensional affine
    manifold centered at 0.5: layer ``k`` holds ``0.5 + U_k z`` with
    orthonormal ``U_k`` and a latent ``z`` of norm at most ``margin``.
    The weights map the manifolds onto each other exactly
    (``W_k = U_k U_{k-1}^T``, feedback tied to the transpose), so every
    pre-activation stays inside the linear region of the hard sigmoid
    and both branch predictions coincide with the state on every item.

    Returns:
        The dataset of visible vectors and the exact parameters,
        suitable as an oracle for fast-inference tests.

    Raises:
        ConstructionError: The built instance failed its own residual
            check even after retries (reported with the worst residual).
    """
    sizes = spec.sizes
    if n_items < 1:
        raise DatasetError("n_items must be >= 1")
    if not 0.0 < margin < 0.5:
        raise ConstructionError(f"margin must lie in (0, 0.5), got {margin}")
    m = min(sizes)
    rng = np.random.default_rng(seed)
    last_residual = np.inf
    for _ in range(3):
        bases = []
        for size in sizes:
            q, _ = np.linalg.qr(rng.standard_normal((size, m)))
            bases.append(q)
        ws, vs, bs, cs = [], [], [], []
        for k in range(1, len(sizes)):
            w = bases[k] @ bases[k - 1].T
            ws.append(w)
            vs.append(w.T.copy())
            bs.append(0.5 * np.ones(sizes[k]) - 0.5 * (w @ np.ones(sizes[k - 1])))
            cs.append(0.5 * np.ones(sizes[k - 1]) - 0.5 * (w.T @ np.ones(sizes[k])))
        params = NetworkParams(spec=spec, ff_weights=tuple(ws), fb_weights=tuple(vs),
                               ff_offsets=tuple(bs), fb_offsets=tuple(cs),
                               branch_gains=(1.0, 1.0),
                               activation=Activation.HARD_SIGMOID)
        z = rng.uniform(-margin / np.sqrt(m), margin / np.sqrt(m), size=(n_items, m))
        items = 0.5 + z @ bases[0].T
        worst = max(
            float(mutual_prediction_residual(params, feedforward_init(params, x)).max())
            for x in items)
        if worst <= 1e-9:
            data = DatasetHandle(items=items, name="synthetic-autoencodable",
                                 source=DataSource.SYNTHETIC_AUTOENCODABLE)
            return data, params
        last_residual = worst
    raise ConstructionError(
        f"could not build an exactly reconstructing instance for sizes {sizes}: "
        f"worst feedforward residual {last_residual:.3e} exceeds 1e-9")


def save_params(params: NetworkParams, path: str | Path) -> None:
    """Write a model checkpoint as a self-describing JSON document.

    Floats are encoded with Python's shortest round-trip decimal
    representation, so :func:`load_params` reproduces every value to
    full binary precision.
    """
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "sizes": list(params.spec.sizes),
        "activation": params.activation.value,
        "branch_gains": [params.branch_gains[0], params.branch_gains[1]],
        "ff_weights": [w.tolist() for w in params.ff_weights],
        "fb_weights": [v.tolist() for v in params.fb_weights],
        "ff_offsets": [b.tolist() for b in params.ff_offsets],
        "fb_offsets": [c.tolist() for c in params.fb_offsets],
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="ascii")


def load_params(path: str | Path) -> NetworkParams:
    """Load a model checkpoint written by :func:`save_params`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="ascii"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise CheckpointError(f"{path}: not a {MODEL_FORMAT} checkpoint")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format version {doc.get('format_version')}")
    try:
        spec = LayerSpec(sizes=tuple(doc["sizes"]))
        activation = Activation(doc["activation"])
        gains = (float(doc["branch_gains"][0]), float(doc["branch_gains"][1]))
        return NetworkParams(
            spec=spec,
            ff_weights=tuple(np.array(w, dtype=float) for w in doc["ff_weights"]),
            fb_weights=tuple(np.array(v, dtype=float) for v in doc["fb_weights"]),
            ff_offsets=tuple(np.array(b, dtype=float) for b in doc["ff_offsets"]),
            fb_offsets=tuple(np.array(c, dtype=float) for c in doc["fb_offsets"]),
            branch_gains=gains,
            activation=activation,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint: {exc}") from exc
