"""Relaxation engines for clamped-input inference.

All schemes share one sweep structure: within an iteration, every
odd-indexed hidden layer is updated simultaneously from the current even
layers, then every even layer from the new odd layers. Layers of equal
parity are never adjacent, so the simultaneous update within a parity
class is exact. One iteration means one full odd+even sweep, and the
recorded step magnitude is the L2 norm of the change of the
concatenation of all hidden layers over that full sweep.

Per-layer update target: ``rho(branch_combine(bottom_up, top_down))``
(top layer: bottom-up branch only). The ``direct-alternating`` scheme
jumps each layer straight to its target; ``leaky`` mixes the old state
with the target with weight ``1 / tau``; ``langevin`` is the leaky
update with i.i.d. Gaussian noise added to each target.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, DimensionError
from .network import (
    NetworkParams,
    NetworkState,
    apply_activation,
    branch_combine,
    bottom_up,
    check_state,
    feedforward_init,
    mutual_prediction_residual,
    top_down,
)
from .energy import EnergyModel, energy


class Scheme(enum.Enum):
    DIRECT_ALTERNATING = "direct-alternating"
    LEAKY = "leaky"
    LANGEVIN = "langevin"


@dataclass(frozen=True)
class RelaxationConfig:
    """Settings for one relaxation run.

    Attributes:
        scheme: Update rule; ``direct-alternating`` always performs full
            jumps (``tau`` is ignored and treated as 1).
        tau: Time constant of the leaky/Langevin mixing, ``>= 1``.
        noise_scale: Standard deviation of the per-unit Gaussian noise;
            must be positive for ``langevin`` and zero for the
            deterministic schemes.
        max_iters: Iteration budget.
        tol: Stop once the full-sweep step magnitude drops below this.
        seed: Seed for the noise stream; fixed seed gives bit-identical
            trajectories.
    """

    scheme: Scheme = Scheme.DIRECT_ALTERNATING
    tau: float = 1.0
    noise_scale: float = 0.0
    max_iters: int = 100
    tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.tau < 1.0:
            raise ConfigurationError(f"tau must be >= 1, got {self.tau}")
        if self.noise_scale < 0.0:
            raise ConfigurationError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.scheme is Scheme.LANGEVIN and self.noise_scale == 0.0:
            raise ConfigurationError("langevin requires noise_scale > 0")
        if self.scheme is not Scheme.LANGEVIN and self.noise_scale != 0.0:
            raise ConfigurationError(
                f"scheme {self.scheme.value} is deterministic; noise_scale must be 0")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0.0:
            raise ConfigurationError(f"tol must be > 0, got {self.tol}")


@dataclass(frozen=True)
class ConvergenceTrace:
    """Per-iteration record of a relaxation run.

    ``step_magnitudes[i]`` is the step of iteration ``i`` (one entry per
    iteration run). When recorded, ``energies`` and ``residuals`` carry
    one extra leading entry for the initial state, so ``energies[i + 1]``
    is the energy after iteration ``i`` and ``residuals[i + 1]`` the
    per-layer mutual-prediction residual maxima after iteration ``i``.
    """

    step_magnitudes: np.ndarray
    iters_run: int
    converged: bool
    energies: np.ndarray | None = None
    residuals: np.ndarray | None = None

    def __post_init__(self):
        steps = np.asarray(self.step_magnitudes, dtype=float)
        object.__setattr__(self, "step_magnitudes", steps)
        if steps.shape != (self.iters_run,):
            raise DimensionError(
                f"trace has {steps.shape[0]} step magnitudes for {self.iters_run} iterations")


def direct_update_layer(params: NetworkParams, state: NetworkState, k: int) -> np.ndarray:
    """Direct update target for hidden layer ``k`` given the current state.

    Interior layers combine the bottom-up and top-down branch
    predictions; the top layer has only its bottom-up branch. The state
    is not modified.
    """
    check_state(params, state)
    if not 1 <= k <= params.n_layers:
        raise DimensionError(f"layer index {k} out of range 1..{params.n_layers}")
    below = state.visible if k == 1 else state.hidden[k - 2]
    d_bu = bottom_up(params, below, k)
    d_td = top_down(params, state.hidden[k], k) if k < params.n_layers else None
    return apply_activation(params.activation, branch_combine(params, d_bu, d_td))


def relax(params: NetworkParams, state: NetworkState, cfg: RelaxationConfig,
          energy_model: EnergyModel | None = None,
          record_residuals: bool = False) -> tuple[NetworkState, ConvergenceTrace]:
    """Run the configured relaxation scheme from a given state.

    Iterates until the full-sweep step magnitude drops below ``cfg.tol``
    or ``cfg.max_iters`` is reached. Langevin runs have no deterministic
    fixed point, so they never set ``converged`` and always run the full
    budget. The input state is left untouched; the visible vector of the
    returned state is the clamped input, bit for bit.

    Args:
        params: Network parameters (shared, read-only).
        state: Starting state; exclusively owned by this run.
        cfg: Scheme, time constant, noise, budget, and tolerance.
        energy_model: When given, the trace records the energy of the
            initial state and after every iteration. Construct it via
            :class:`ffinit.energy.EnergyModel`, which rejects untied
            parameters.
        record_residuals: When true, the trace records the per-layer
            mutual-prediction residual maxima alongside the energies.

    Returns:
        The relaxed state and its convergence trace.
    """
    check_state(params, state)
    act = params.activation
    L = params.n_layers
    visible = state.visible
    hidden = [np.array(h) for h in state.hidden]
    eff_tau = 1.0 if cfg.scheme is Scheme.DIRECT_ALTERNATING else cfg.tau
    rng = np.random.default_rng(cfg.seed) if cfg.scheme is Scheme.LANGEVIN else None

    energies = [] if energy_model is not None else None
    residuals = [] if record_residuals else None

    def snapshot(hs):
        if energies is not None or residuals is not None:
            st = NetworkState(visible=visible, hidden=tuple(hs))
            if energies is not None:
                energies.append(energy(energy_model, st))
            if residuals is not None:
                residuals.append(mutual_prediction_residual(params, st))

    snapshot(hidden)
    steps: list[float] = []
    converged = False
    rho_v = apply_activation(act, visible)

    for _ in range(cfg.max_iters):
        before = np.concatenate(hidden)
        for parity in (1, 0):
            rates = [rho_v] + [apply_activation(act, h) for h in hidden]
            targets = {}
            for k in range(1, L + 1):
                if k % 2 != parity:
                    continue
                d_bu = params.ff_offsets[k - 1] + params.ff_weights[k - 1] @ rates[k - 1]
                d_td = None
                if k < L:
                    d_td = params.fb_offsets[k] + params.fb_weights[k] @ rates[k + 1]
                t = apply_activation(act, branch_combine(params, d_bu, d_td))
                if rng is not None:
                    t = t + rng.normal(0.0, cfg.noise_scale, size=t.shape)
                targets[k] = t
            for k, t in targets.items():
                if eff_tau == 1.0:
                    hidden[k - 1] = t
                else:
                    hidden[k - 1] = (1.0 - 1.0 / eff_tau) * hidden[k - 1] + (1.0 / eff_tau) * t
        steps.append(float(np.linalg.norm(np.concatenate(hidden) - before)))
        snapshot(hidden)
        if cfg.scheme is not Scheme.LANGEVIN and steps[-1] < cfg.tol:
            converged = True
            break

    trace = ConvergenceTrace(
        step_magnitudes=np.asarray(steps),
        iters_run=len(steps),
        converged=converged,
        energies=np.asarray(energies) if energies is not None else None,
        residuals=np.asarray(residuals) if residuals is not None else None,
    )
    return NetworkState(visible=visible, hidden=tuple(hidden)), trace


def infer_from_feedforward(params: NetworkParams, visible: np.ndarray,
                           cfg: RelaxationConfig,
                           energy_model: EnergyModel | None = None,
                           record_residuals: bool = False
                           ) -> tuple[NetworkState, ConvergenceTrace]:
    """Feedforward-initialize on a clamped input, then relax.

    Equivalent to ``relax(params, feedforward_init(params, visible), cfg)``.
    When consecutive layers reconstruct each other well, the feedforward
    pass already lands near the relaxation fixed point and the run
    converges after very few sweeps.
    """
    state = feedforward_init(params, visible)
    return relax(params, state, cfg, energy_model=energy_model,
                 record_residuals=record_residuals)
