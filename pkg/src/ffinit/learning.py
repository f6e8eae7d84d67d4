"""Weight regimes: random transpose-tied networks and trained stacks.

Two training rules are provided for the greedy layerwise auto-encoder
stack. ``ae-gradient`` does exact gradient descent on each pair's
reconstruction loss, backpropagating through the pair's decoder into its
encoder (and no further: training is local to the pair). ``local-branch``
freezes the encoders at their random-tied initialization and fits only
the top-down branch of each pair with the error-correcting delta rule,
i.e. a linear regression of the branch's voltage-scale prediction onto
the feedforward activation it should predict.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import DatasetHandle
from .exceptions import ConfigurationError, DatasetError, DivergenceError, InvalidInputError
from .network import (
    Activation,
    LayerSpec,
    NetworkParams,
    activation_subderivative,
    apply_activation,
)

logger = logging.getLogger(__name__)

ProgressFn = Callable[[int, int, float], None]


class TrainRule(enum.Enum):
    AE_GRADIENT = "ae-gradient"
    LOCAL_BRANCH = "local-branch"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for :func:`train_stacked_ae`.

    ``tie_decoder`` constrains each pair's decoder to the transpose of
    its encoder during ae-gradient training; it is incompatible with the
    local-branch rule, which by definition moves only the decoder.
    """

    learning_rate: float = 0.05
    epochs: int = 20
    batch_size: int = 32
    rule: TrainRule = TrainRule.AE_GRADIENT
    tie_decoder: bool = False
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0.0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.init_scale < 0.0:
            raise ConfigurationError(f"init_scale must be >= 0, got {self.init_scale}")
        if self.tie_decoder and self.rule is TrainRule.LOCAL_BRANCH:
            raise ConfigurationError("tie_decoder is incompatible with the local-branch rule")


def _random_tied_arrays(spec: LayerSpec, init_scale: float, rng: np.random.Generator):
    sizes = spec.sizes
    ws, vs, bs, cs = [], [], [], []
    for k in range(spec.n_hidden_layers):
        bound = init_scale / np.sqrt(sizes[k])
        w = rng.uniform(-bound, bound, size=(sizes[k + 1], sizes[k]))
        ws.append(w)
        vs.append(w.T.copy())
        bs.append(np.zeros(sizes[k + 1]))
        cs.append(np.zeros(sizes[k]))
    return ws, vs, bs, cs


def init_random_tied(spec: LayerSpec, activation: Activation,
                     init_scale: float = 1.0, seed: int = 0) -> NetworkParams:
    """Random network with feedback weights exactly tied to the transpose.

    Feedforward entries are i.i.d. uniform on
    ``[-init_scale / sqrt(n_in), +init_scale / sqrt(n_in)]`` per layer,
    feedback matrices are element-exact transposes, and all offsets are
    zero. Deterministic under ``seed``.
    """
    if init_scale < 0.0:
        raise ConfigurationError(f"init_scale must be >= 0, got {init_scale}")
    ws, vs, bs, cs = _random_tied_arrays(spec, init_scale, np.random.default_rng(seed))
    return NetworkParams(spec=spec, ff_weights=tuple(ws), fb_weights=tuple(vs),
                         ff_offsets=tuple(bs), fb_offsets=tuple(cs),
                         branch_gains=(1.0, 1.0), activation=activation)


def local_branch_update(W_row: np.ndarray, offset: float, soma: float,
                        presyn_rates: np.ndarray, lr: float) -> tuple[np.ndarray, float]:
    """One error-correcting step for a single dendritic branch.

    The branch predicts the somatic value as
    ``d = offset + W_row @ presyn_rates``; the update moves the weights
    and offset along ``lr * (soma - d)``, which is exactly the negative
    gradient step on the half squared prediction error
    ``(soma - d)^2 / 2``. Repeated application on a fixed
    (soma, presyn) pair contracts ``|soma - d|`` monotonically whenever
    ``lr < 2 / (1 + ||presyn_rates||^2)``.

    Returns:
        The updated ``(W_row, offset)`` pair; the inputs are not modified.
    """
    W_row = np.asarray(W_row, dtype=float)
    presyn_rates = np.asarray(presyn_rates, dtype=float)
    if W_row.shape != presyn_rates.shape:
        raise InvalidInputError(
            f"weight row and presynaptic rates differ in length: "
            f"{W_row.shape} vs {presyn_rates.shape}")
    if np.any(presyn_rates < 0.0) or np.any(presyn_rates > 1.0):
        raise InvalidInputError("presynaptic rates must lie in [0, 1]")
    d = float(offset) + float(W_row @ presyn_rates)
    step = lr * (float(soma) - d)
    return W_row + step * presyn_rates, float(offset) + step


def _pair_reconstruction(x: np.ndarray, w, b, v, c, act: Activation) -> np.ndarray:
    hid = apply_activation(act, apply_activation(act, x) @ w.T + b)
    return apply_activation(act, hid @ v.T + c)


def _pair_error(x: np.ndarray, w, b, v, c, act: Activation) -> float:
    rec = _pair_reconstruction(x, w, b, v, c, act)
    return float(np.mean(np.sum((x - rec) ** 2, axis=1)))


def train_stacked_ae(data: DatasetHandle, spec: LayerSpec, cfg: TrainConfig,
                     progress: ProgressFn | None = None,
                     activation: Activation = Activation.HARD_SIGMOID) -> NetworkParams:
    """Greedy bottom-up training of the layer pairs as auto-encoders.

    Pair ``k`` is trained to reconstruct its input codes (the raw data
    for ``k = 1``, else the frozen encoding produced by the already
    trained lower pairs) through encoder
    ``enc(x) = rho(W_k x + b_k)`` and decoder
    ``dec(h) = rho(V_k h + c_k)``. The rule is taken from
    ``cfg.rule``; see the module docstring. Fully deterministic under
    ``cfg.seed``.

    Args:
        data: Training items; dimension must equal the visible size.
        spec: Layer sizes of the network to produce.
        cfg: Hyperparameters and rule selection.
        progress: Optional callback ``(pair_index, epoch, error)``
            invoked after every epoch with the pair's current full-data
            reconstruction error (the error is only computed when a
            callback is supplied).
        activation: Rate non-linearity used for coding and training.

    Returns:
        The trained parameters (untied unless ``cfg.tie_decoder``).

    Raises:
        DatasetError: Empty dataset or dimension mismatch.
        ConfigurationError: ``batch_size`` exceeds the dataset size.
        DivergenceError: A non-finite loss or parameter appeared; the
            exception reports the pair and epoch.
    """
    items = data.items
    n = len(items)
    if n == 0:
        raise DatasetError("cannot train on an empty dataset")
    if items.shape[1] != spec.visible_size:
        raise DatasetError(
            f"dataset dimension {items.shape[1]} does not match visible size "
            f"{spec.visible_size}")
    if cfg.batch_size > n:
        raise ConfigurationError(
            f"batch_size {cfg.batch_size} exceeds dataset size {n}")

    rng = np.random.default_rng(cfg.seed)
    ws, vs, bs, cs = _random_tied_arrays(spec, cfg.init_scale, rng)
    lr = cfg.learning_rate

    codes = np.array(items, dtype=float)
    for k in range(1, spec.n_hidden_layers + 1):
        w, v, b, c = ws[k - 1], vs[k - 1], bs[k - 1], cs[k - 1]
        for epoch in range(1, cfg.epochs + 1):
            perm = rng.permutation(n)
            gradient_seen = np.zeros(w.shape[0], dtype=bool)
            for start in range(0, n, cfg.batch_size):
                xb = codes[perm[start:start + cfg.batch_size]]
                batch = len(xb)
                pre_h = xb @ w.T + b
                hid = apply_activation(activation, pre_h)
                gradient_seen |= np.any(
                    activation_subderivative(activation, pre_h) > 0.0, axis=0)
                if cfg.rule is TrainRule.LOCAL_BRANCH:
                    err = xb - (hid @ v.T + c)
                    v += (lr / batch) * (err.T @ hid)
                    c += (lr / batch) * err.sum(axis=0)
                else:
                    pre_y = hid @ v.T + c
                    rec = apply_activation(activation, pre_y)
                    d_rec = (2.0 / batch) * (rec - xb) \
                        * activation_subderivative(activation, pre_y)
                    g_v = d_rec.T @ hid
                    g_c = d_rec.sum(axis=0)
                    d_hid = (d_rec @ v) * activation_subderivative(activation, pre_h)
                    g_w = d_hid.T @ xb
                    g_b = d_hid.sum(axis=0)
                    if cfg.tie_decoder:
                        w -= lr * (g_w + g_v.T)
                        v[...] = w.T
                    else:
                        w -= lr * g_w
                        v -= lr * g_v
                    b -= lr * g_b
                    c -= lr * g_c
            if not all(np.all(np.isfinite(a)) for a in (w, v, b, c)):
                raise DivergenceError(
                    f"non-finite parameters in pair {k} at epoch {epoch}", k, epoch)
            n_dead = int(np.count_nonzero(~gradient_seen))
            if n_dead:
                logger.info("pair %d epoch %d: %d/%d encoder units saturated for "
                            "the entire epoch", k, epoch, n_dead, w.shape[0])
            if progress is not None:
                err = _pair_error(codes, w, b, v, c, activation)
                if not np.isfinite(err):
                    raise DivergenceError(
                        f"non-finite reconstruction error in pair {k} at epoch {epoch}",
                        k, epoch)
                progress(k, epoch, err)
        codes = apply_activation(activation, codes @ w.T + b)

    return NetworkParams(spec=spec, ff_weights=tuple(ws), fb_weights=tuple(vs),
                         ff_offsets=tuple(bs), fb_offsets=tuple(cs),
                         branch_gains=(1.0, 1.0), activation=activation)


def reconstruction_error(params: NetworkParams, data: DatasetHandle, k: int) -> float:
    """Mean squared reconstruction error of layer pair ``(k, k + 1)``.

    Encodes the dataset up to layer ``k`` (``k = 0`` uses the raw
    visible data), passes those codes through pair ``k + 1``'s encoder
    and decoder, and returns the mean over items of the squared error
    norm. Zero exactly when the pair reconstructs every code perfectly.
    """
    if not 0 <= k <= params.n_layers - 1:
        raise InvalidInputError(
            f"pair index {k} out of range 0..{params.n_layers - 1}")
    items = data.items
    if len(items) == 0:
        raise DatasetError("cannot evaluate reconstruction on an empty dataset")
    if items.shape[1] != params.spec.visible_size:
        raise DatasetError(
            f"dataset dimension {items.shape[1]} does not match visible size "
            f"{params.spec.visible_size}")
    act = params.activation
    codes = np.array(items, dtype=float)
    for j in range(1, k + 1):
        codes = apply_activation(act, codes @ params.ff_weights[j - 1].T
                                 + params.ff_offsets[j - 1])
    return _pair_error(codes, params.ff_weights[k], params.ff_offsets[k],
                       params.fb_weights[k], params.fb_offsets[k], act)
