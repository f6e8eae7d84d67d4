"""Layered recurrent network: parameters, state, and branch predictions.

A network is a chain of layers ``0..L`` where layer 0 is the clamped
visible layer and layers ``1..L`` are hidden. Each hidden layer receives
two groups of connections, modeled as separate dendritic branches: a
bottom-up branch from the layer below and a top-down branch from the
layer above (the top layer has no layer above and therefore only a
bottom-up branch). Each branch produces an affine prediction of the
layer's state on the voltage scale, i.e. before the rate non-linearity
is applied; combining the branch predictions and applying the
non-linearity is the job of the relaxation schemes in
:mod:`ffinit.inference`.

Layer indexing convention: ``bottom_up(..., k)`` predicts *into* hidden
layer ``k`` (``1 <= k <= L``) and ``top_down(..., k)`` predicts *into*
layer ``k`` from the layer above (``0 <= k <= L - 1``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, DimensionError, InvalidInputError


class Activation(enum.Enum):
    """Element-wise rate non-linearity applied to unit voltages."""

    HARD_SIGMOID = "hard-sigmoid"
    LOGISTIC_SIGMOID = "logistic-sigmoid"


def apply_activation(activation: Activation, x: np.ndarray) -> np.ndarray:
    """Apply the rate non-linearity element-wise.

    The hard sigmoid is the bounded rectification ``max(0, min(1, x))``;
    it is exactly the identity on ``[0, 1]`` and saturates outside. The
    logistic sigmoid maps into the open interval ``(0, 1)``.

    Args:
        activation: Which non-linearity to apply.
        x: Voltage array, all entries finite.

    Returns:
        Array of the same shape with rates in ``[0, 1]``.

    Raises:
        InvalidInputError: If ``x`` contains non-finite entries.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("activation input must be finite")
    if activation is Activation.HARD_SIGMOID:
        return np.clip(x, 0.0, 1.0)
    return 1.0 / (1.0 + np.exp(-x))


def activation_subderivative(activation: Activation, x: np.ndarray) -> np.ndarray:
    """Element-wise (sub)derivative of the rate non-linearity.

    For the hard sigmoid the subderivative is 1 on the closed interval
    ``[0, 1]`` and 0 outside; the value at the two kinks is fixed to 1 so
    that downstream computations are deterministic.
    """
    x = np.asarray(x, dtype=float)
    if activation is Activation.HARD_SIGMOID:
        return ((x >= 0.0) & (x <= 1.0)).astype(float)
    s = 1.0 / (1.0 + np.exp(-x))
    return s * (1.0 - s)


def _frozen_vector(x, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LayerSpec:
    """Layer sizes ``(n_0, n_1, ..., n_L)``; ``n_0`` is the visible size."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if len(sizes) < 2:
            raise ConfigurationError("a network needs a visible and at least one hidden layer")
        if any(n < 1 for n in sizes):
            raise ConfigurationError(f"all layer sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n_hidden_layers(self) -> int:
        return len(self.sizes) - 1

    @property
    def visible_size(self) -> int:
        return self.sizes[0]


@dataclass(frozen=True)
class NetworkParams:
    """Immutable parameters of a layered two-branch network.

    Attributes:
        spec: Layer sizes.
        ff_weights: ``L`` bottom-up matrices; entry ``k`` has shape
            ``(n_{k+1}, n_k)`` and feeds hidden layer ``k + 1``.
        fb_weights: ``L`` top-down matrices; entry ``k`` has shape
            ``(n_k, n_{k+1})`` and feeds layer ``k`` from layer ``k + 1``.
        ff_offsets: ``L`` bottom-up branch offsets, entry ``k`` of length
            ``n_{k+1}``.
        fb_offsets: ``L`` top-down branch offsets, entry ``k`` of length
            ``n_k``.
        branch_gains: Non-negative ``(bottom_up, top_down)`` gains used
            when combining branch predictions; they may not both be zero.
        activation: Rate non-linearity shared by all layers.

    All arrays are copied on construction and marked read-only, so one
    instance can safely be shared across concurrent inference runs.
    """

    spec: LayerSpec
    ff_weights: tuple[np.ndarray, ...]
    fb_weights: tuple[np.ndarray, ...]
    ff_offsets: tuple[np.ndarray, ...]
    fb_offsets: tuple[np.ndarray, ...]
    branch_gains: tuple[float, float] = (1.0, 1.0)
    activation: Activation = Activation.HARD_SIGMOID

    def __post_init__(self):
        sizes = self.spec.sizes
        L = self.spec.n_hidden_layers
        for name, seq, want in (
            ("ff_weights", self.ff_weights, [(sizes[k + 1], sizes[k]) for k in range(L)]),
            ("fb_weights", self.fb_weights, [(sizes[k], sizes[k + 1]) for k in range(L)]),
            ("ff_offsets", self.ff_offsets, [(sizes[k + 1],) for k in range(L)]),
            ("fb_offsets", self.fb_offsets, [(sizes[k],) for k in range(L)]),
        ):
            if len(seq) != L:
                raise DimensionError(f"{name} must have {L} entries, got {len(seq)}")
            frozen = []
            for k, (arr, shape) in enumerate(zip(seq, want)):
                a = np.array(arr, dtype=float)
                if a.shape != shape:
                    raise DimensionError(f"{name}[{k}] must have shape {shape}, got {a.shape}")
                if not np.all(np.isfinite(a)):
                    raise InvalidInputError(f"{name}[{k}] contains non-finite entries")
                a.setflags(write=False)
                frozen.append(a)
            object.__setattr__(self, name, tuple(frozen))
        gains = (float(self.branch_gains[0]), float(self.branch_gains[1]))
        if gains[0] < 0 or gains[1] < 0:
            raise ConfigurationError(f"branch gains must be non-negative, got {gains}")
        if gains[0] == 0 and gains[1] == 0:
            raise ConfigurationError("branch gains must not both be zero")
        object.__setattr__(self, "branch_gains", gains)

    @property
    def n_layers(self) -> int:
        """Number of hidden layers ``L``."""
        return self.spec.n_hidden_layers

    @property
    def is_tied(self) -> bool:
        """True iff every feedback matrix equals the transpose of its feedforward one."""
        return all(np.array_equal(v, w.T) for w, v in zip(self.ff_weights, self.fb_weights))


@dataclass(frozen=True)
class NetworkState:
    """A clamped visible vector plus one activation vector per hidden layer.

    The visible vector is clamped: no inference operation ever modifies
    it, and the backing arrays are read-only to enforce that.
    """

    visible: np.ndarray
    hidden: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "visible", _frozen_vector(self.visible, "visible"))
        object.__setattr__(
            self, "hidden",
            tuple(_frozen_vector(h, f"hidden[{k}]") for k, h in enumerate(self.hidden)),
        )


def check_state(params: NetworkParams, state: NetworkState) -> None:
    """Raise DimensionError unless the state's shapes match the parameters."""
    sizes = params.spec.sizes
    if state.visible.shape != (sizes[0],):
        raise DimensionError(
            f"visible has length {state.visible.shape[0]}, expected {sizes[0]}")
    if len(state.hidden) != params.n_layers:
        raise DimensionError(
            f"state has {len(state.hidden)} hidden layers, expected {params.n_layers}")
    for k, h in enumerate(state.hidden, start=1):
        if h.shape != (sizes[k],):
            raise DimensionError(
                f"hidden layer {k} has length {h.shape[0]}, expected {sizes[k]}")


def bottom_up(params: NetworkParams, h_below: np.ndarray, k: int) -> np.ndarray:
    """Bottom-up branch prediction into hidden layer ``k``.

    Computes ``b_k + W_k @ rho(h_below)`` where ``h_below`` is the state
    of layer ``k - 1``. The result is on the voltage scale: the rate
    non-linearity is *not* applied to it here.

    Args:
        params: Network parameters.
        h_below: State of layer ``k - 1``, length ``n_{k-1}``.
        k: Target hidden layer, ``1 <= k <= L``.

    Returns:
        Prediction vector of length ``n_k``.
    """
    if not 1 <= k <= params.n_layers:
        raise DimensionError(f"bottom_up layer index {k} out of range 1..{params.n_layers}")
    h_below = np.asarray(h_below, dtype=float)
    if h_below.shape != (params.spec.sizes[k - 1],):
        raise DimensionError(
            f"bottom_up into layer {k} expects input of length "
            f"{params.spec.sizes[k - 1]}, got {h_below.shape}")
    rates = apply_activation(params.activation, h_below)
    return params.ff_offsets[k - 1] + params.ff_weights[k - 1] @ rates


def top_down(params: NetworkParams, h_above: np.ndarray, k: int) -> np.ndarray:
    """Top-down branch prediction into layer ``k`` from layer ``k + 1``.

    Computes ``c_{k+1} + V_{k+1} @ rho(h_above)``, again on the voltage
    scale. ``k = 0`` predicts the visible layer, which is useful for
    reconstruction diagnostics even though the visible layer is clamped.

    Args:
        params: Network parameters.
        h_above: State of layer ``k + 1``, length ``n_{k+1}``.
        k: Receiving layer, ``0 <= k <= L - 1``.

    Returns:
        Prediction vector of length ``n_k``.
    """
    if not 0 <= k <= params.n_layers - 1:
        raise DimensionError(f"top_down layer index {k} out of range 0..{params.n_layers - 1}")
    h_above = np.asarray(h_above, dtype=float)
    if h_above.shape != (params.spec.sizes[k + 1],):
        raise DimensionError(
            f"top_down into layer {k} expects input of length "
            f"{params.spec.sizes[k + 1]}, got {h_above.shape}")
    rates = apply_activation(params.activation, h_above)
    return params.fb_offsets[k] + params.fb_weights[k] @ rates


def branch_combine(params: NetworkParams, d_bu: np.ndarray,
                   d_td: np.ndarray | None = None) -> np.ndarray:
    """Gain-weighted convex combination of the branch predictions.

    With equal gains this is the plain mean of the two predictions; for
    the top layer, which has no top-down branch, callers pass only
    ``d_bu`` and the combination reduces to it. Written over a list of
    (gain, prediction) pairs so further branch types could be added
    without changing the combination rule.

    Raises:
        ConfigurationError: If the gains of the supplied branches sum to
            zero, which would leave the combination undefined.
    """
    branches = [(params.branch_gains[0], np.asarray(d_bu, dtype=float))]
    if d_td is not None:
        branches.append((params.branch_gains[1], np.asarray(d_td, dtype=float)))
    if any(d.shape != branches[0][1].shape for _, d in branches):
        raise DimensionError("branch predictions must all have the same length")
    total_gain = sum(g for g, _ in branches)
    if total_gain == 0.0:
        raise ConfigurationError("the gains of the supplied branches sum to zero")
    combined = sum(g * d for g, d in branches)
    return combined / total_gain


def feedforward_init(params: NetworkParams, visible: np.ndarray) -> NetworkState:
    """Initialize a state by a single bottom-up sweep.

    Sets ``h_k = rho(bottom_up(h_{k-1}))`` for ``k = 1..L`` starting from
    the clamped visible vector. Applying the non-linearity at every step
    makes the result a fixed point of the direct relaxation update
    whenever both branches of every layer agree on their predictions.
    The function is pure: two calls with equal inputs agree exactly.
    """
    visible = np.asarray(visible, dtype=float)
    if visible.shape != (params.spec.visible_size,):
        raise DimensionError(
            f"visible must have length {params.spec.visible_size}, got {visible.shape}")
    hidden = []
    below = visible
    for k in range(1, params.n_layers + 1):
        below = apply_activation(params.activation, bottom_up(params, below, k))
        hidden.append(below)
    return NetworkState(visible=visible, hidden=tuple(hidden))


def mutual_prediction_residual(params: NetworkParams, state: NetworkState) -> np.ndarray:
    """Worst-case branch prediction error for each hidden layer.

    For hidden layer ``k`` this is the maximum over units and branches of
    ``|d - h_k|`` where ``d`` runs over the branch predictions into the
    layer (bottom-up always; top-down except at the top layer). It is
    zero exactly when every branch predicts the layer's state exactly,
    i.e. when consecutive layers reconstruct each other perfectly.

    Returns:
        Array of length ``L`` with one residual per hidden layer.
    """
    check_state(params, state)
    L = params.n_layers
    out = np.empty(L)
    for k in range(1, L + 1):
        below = state.visible if k == 1 else state.hidden[k - 2]
        d_bu = bottom_up(params, below, k)
        worst = np.max(np.abs(d_bu - state.hidden[k - 1])) if d_bu.size else 0.0
        if k < L:
            d_td = top_down(params, state.hidden[k], k)
            worst = max(worst, np.max(np.abs(d_td - state.hidden[k - 1])))
        out[k - 1] = worst
    return out
