"""Experiment orchestration: weight regimes, convergence traces, CSV output.

The core experiment relaxes a set of clamped inputs from feedforward
initialization under two weight regimes (random transpose-tied vs. a
trained auto-encoder stack) and records how the update-step magnitudes
decay. Outputs are plot-ready CSV files plus a summary table; identical
spec and seed produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import (
    DataSource,
    DatasetHandle,
    default_mnist_images_path,
    load_idx_images,
    subset,
    synth_autoencodable,
    synth_blobs,
)
from .energy import EnergyModel
from .exceptions import ConfigurationError, DatasetError, NotAnEnergyModelError
from .inference import RelaxationConfig, Scheme, infer_from_feedforward
from .learning import TrainConfig, TrainRule, init_random_tied, train_stacked_ae
from .network import Activation, LayerSpec, NetworkParams, mutual_prediction_residual

REGIME_RANDOM_TIED = "random-tied"
REGIME_TRAINED_AE = "trained-ae"
KNOWN_REGIMES = (REGIME_RANDOM_TIED, REGIME_TRAINED_AE)


@dataclass(frozen=True)
class DatasetSpec:
    """Where the experiment's data comes from.

    ``path`` only applies to ``idx-file`` (when omitted the loader falls
    back to the ``FFINIT_MNIST_DIR`` directory); the remaining fields
    parameterize the synthetic generators. ``n_items`` truncates a
    loaded IDX dataset or sizes a synthetic one. ``d`` defaults to the
    network's visible size when left at 0.
    """

    source: DataSource = DataSource.SYNTHETIC_BLOBS
    path: str | None = None
    n_items: int = 2000
    d: int = 0
    n_clusters: int = 8
    spread: float = 0.02


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one convergence-comparison experiment."""

    dataset: DatasetSpec
    sizes: LayerSpec
    regimes: tuple[str, ...]
    relaxation: RelaxationConfig
    train: TrainConfig
    n_inputs_evaluated: int
    output_dir: str
    seed: int = 0

    def __post_init__(self):
        if not self.regimes:
            raise ConfigurationError("regimes must not be empty")
        for regime in self.regimes:
            if regime not in KNOWN_REGIMES:
                raise ConfigurationError(
                    f"unknown regime {regime!r}; known regimes: {KNOWN_REGIMES}")
        if len(set(self.regimes)) != len(self.regimes):
            raise ConfigurationError("regimes must not repeat")
        if self.n_inputs_evaluated < 0:
            raise ConfigurationError("n_inputs_evaluated must be >= 0")


@dataclass(frozen=True)
class RegimeResult:
    """Per-regime convergence measurements over the evaluated inputs."""

    regime: str
    initial_steps: np.ndarray
    iters_to_tol: np.ndarray
    converged: np.ndarray
    final_residuals: np.ndarray
    step_stats: np.ndarray
    energy_means: np.ndarray | None


@dataclass(frozen=True)
class ExperimentReport:
    regimes: tuple[RegimeResult, ...]
    training_curve: tuple[tuple[int, int, float], ...] | None
    dataset_name: str
    seed: int


def _build_dataset(dspec: DatasetSpec, sizes: LayerSpec, seed: int) -> DatasetHandle:
    if dspec.source is DataSource.IDX_FILE:
        path = Path(dspec.path) if dspec.path else default_mnist_images_path()
        try:
            data = load_idx_images(path)
        except FileNotFoundError as exc:
            raise DatasetError(
                f"dataset file {path} does not exist; point dataset.path (or "
                f"FFINIT_MNIST_DIR) at the MNIST IDX files") from exc
        if data.dim != sizes.visible_size:
            raise DatasetError(
                f"dataset dimension {data.dim} does not match visible size "
                f"{sizes.visible_size}")
        if 0 < dspec.n_items < len(data):
            data = subset(data, dspec.n_items)
        return data
    if dspec.source is DataSource.SYNTHETIC_BLOBS:
        d = dspec.d if dspec.d > 0 else sizes.visible_size
        if d != sizes.visible_size:
            raise DatasetError(
                f"blob dimension {d} does not match visible size {sizes.visible_size}")
        return synth_blobs(dspec.n_items, d, dspec.n_clusters, dspec.spread, seed)
    data, _ = synth_autoencodable(dspec.n_items, sizes, seed)
    return data


def _norm_matched_random(spec: ExperimentSpec, target: NetworkParams) -> NetworkParams:
    """Random tied params rescaled per layer to the target's weight norms."""
    base = init_random_tied(spec.sizes, Activation.HARD_SIGMOID,
                            spec.train.init_scale, spec.train.seed)
    ws = []
    for w, w_target in zip(base.ff_weights, target.ff_weights):
        norm = np.linalg.norm(w)
        scale = np.linalg.norm(w_target) / norm if norm > 0 else 1.0
        ws.append(w * scale)
    return NetworkParams(spec=base.spec,
                         ff_weights=tuple(ws),
                         fb_weights=tuple(w.T.copy() for w in ws),
                         ff_offsets=base.ff_offsets,
                         fb_offsets=base.fb_offsets,
                         branch_gains=base.branch_gains,
                         activation=base.activation)


def _evaluate_regime(regime: str, params: NetworkParams, items: np.ndarray,
                     cfg: RelaxationConfig) -> RegimeResult:
    try:
        energy_model = EnergyModel(params)
    except NotAnEnergyModelError:
        energy_model = None
    traces = []
    initial, iters, conv, resid = [], [], [], []
    for x in items:
        state, trace = infer_from_feedforward(params, x, cfg, energy_model=energy_model)
        traces.append(trace)
        initial.append(trace.step_magnitudes[0])
        iters.append(trace.iters_run)
        conv.append(trace.converged)
        resid.append(float(mutual_prediction_residual(params, state).max()))
    n_iters = max((t.iters_run for t in traces), default=0)
    stats = np.empty((n_iters, 3))
    energy_means = [] if energy_model is not None else None
    for i in range(n_iters):
        vals = np.array([t.step_magnitudes[i] for t in traces if t.iters_run > i])
        stats[i] = (vals.mean(), vals.min(), vals.max())
        if energy_means is not None:
            evals = [t.energies[i + 1] for t in traces if t.iters_run > i]
            energy_means.append(float(np.mean(evals)))
    return RegimeResult(
        regime=regime,
        initial_steps=np.asarray(initial),
        iters_to_tol=np.asarray(iters, dtype=int),
        converged=np.asarray(conv, dtype=bool),
        final_residuals=np.asarray(resid),
        step_stats=stats,
        energy_means=np.asarray(energy_means) if energy_means is not None else None,
    )


def run_experiment(spec: ExperimentSpec,
                   regime_params: dict[str, NetworkParams] | None = None
                   ) -> ExperimentReport:
    """Run the regime comparison and write its CSV outputs.

    Builds the dataset, constructs the parameters of every requested
    regime, relaxes each evaluated input from feedforward initialization,
    and writes per-regime per-iteration step-magnitude statistics (linear
    and log10), the training curve when training happened, and a summary
    table into ``spec.output_dir``.

    When both regimes are requested, the random-tied weights are rescaled
    per layer to match the Frobenius norm of the trained weights so that
    the comparison is not confounded by weight scale.

    Args:
        spec: The experiment description.
        regime_params: Optional per-regime parameter injection, mainly a
            testing seam (e.g. evaluating the trained-ae regime with
            ground-truth parameters instead of training).

    Returns:
        The in-memory report that was also written to disk.
    """
    regime_params = dict(regime_params or {})
    data = _build_dataset(spec.dataset, spec.sizes, spec.seed)
    if spec.n_inputs_evaluated > len(data):
        raise DatasetError(
            f"n_inputs_evaluated={spec.n_inputs_evaluated} exceeds dataset size {len(data)}")
    items = data.items[:spec.n_inputs_evaluated]

    curve: list[tuple[int, int, float]] = []
    params_by_regime: dict[str, NetworkParams] = {}
    if REGIME_TRAINED_AE in spec.regimes:
        if REGIME_TRAINED_AE in regime_params:
            params_by_regime[REGIME_TRAINED_AE] = regime_params[REGIME_TRAINED_AE]
        else:
            params_by_regime[REGIME_TRAINED_AE] = train_stacked_ae(
                data, spec.sizes, spec.train,
                progress=lambda pair, epoch, err: curve.append((pair, epoch, err)))
    if REGIME_RANDOM_TIED in spec.regimes:
        if REGIME_RANDOM_TIED in regime_params:
            params_by_regime[REGIME_RANDOM_TIED] = regime_params[REGIME_RANDOM_TIED]
        elif REGIME_TRAINED_AE in params_by_regime:
            params_by_regime[REGIME_RANDOM_TIED] = _norm_matched_random(
                spec, params_by_regime[REGIME_TRAINED_AE])
        else:
            params_by_regime[REGIME_RANDOM_TIED] = init_random_tied(
                spec.sizes, Activation.HARD_SIGMOID, spec.train.init_scale,
                spec.train.seed)

    results = tuple(
        _evaluate_regime(regime, params_by_regime[regime], items, spec.relaxation)
        for regime in spec.regimes)
    report = ExperimentReport(
        regimes=results,
        training_curve=tuple(curve) if curve else None,
        dataset_name=data.name,
        seed=spec.seed,
    )
    emit_csv(report, spec.output_dir)
    return report


def _fmt(x: float) -> str:
    return repr(float(x))


def _log10(x: float) -> float:
    return math.log10(x) if x > 0.0 else float("-inf")


def emit_csv(report: ExperimentReport, out_dir: str | Path) -> None:
    """Write the report as CSV files under ``out_dir``.

    Per regime: ``<regime>.csv`` with columns
    ``iter,step_mag_mean,step_mag_min,step_mag_max,energy_mean`` (the
    energy column is populated only for regimes whose parameters admit
    an energy, i.e. tied weights) and ``<regime>_log10.csv`` with the
    same step statistics in log10. ``summary.csv`` holds one
    ``regime,metric,value`` row per summary statistic, and
    ``training_curve.csv`` the per-epoch reconstruction errors when
    training took place. Floats use shortest round-trip decimals, so
    re-parsing reproduces them exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rr in report.regimes:
        lines = ["iter,step_mag_mean,step_mag_min,step_mag_max,energy_mean"]
        log_lines = ["iter,log10_step_mag_mean,log10_step_mag_min,log10_step_mag_max"]
        for i, (mean_, min_, max_) in enumerate(rr.step_stats):
            e = _fmt(rr.energy_means[i]) if rr.energy_means is not None else ""
            lines.append(f"{i},{_fmt(mean_)},{_fmt(min_)},{_fmt(max_)},{e}")
            log_lines.append(
                f"{i},{_fmt(_log10(mean_))},{_fmt(_log10(min_))},{_fmt(_log10(max_))}")
        (out / f"{rr.regime}.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
        (out / f"{rr.regime}_log10.csv").write_text(
            "\n".join(log_lines) + "\n", encoding="ascii")

    lines = ["regime,metric,value"]
    for rr in report.regimes:
        if len(rr.initial_steps) == 0:
            continue
        metrics = (
            ("initial_step_mag_mean", rr.initial_steps.mean()),
            ("initial_step_mag_min", rr.initial_steps.min()),
            ("initial_step_mag_max", rr.initial_steps.max()),
            ("iters_to_tol_mean", rr.iters_to_tol.mean()),
            ("iters_to_tol_min", rr.iters_to_tol.min()),
            ("iters_to_tol_max", rr.iters_to_tol.max()),
            ("final_residual_mean", rr.final_residuals.mean()),
            ("final_residual_max", rr.final_residuals.max()),
            ("frac_converged", rr.converged.mean()),
        )
        for name, value in metrics:
            lines.append(f"{rr.regime},{name},{_fmt(value)}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n", encoding="ascii")

    if report.training_curve is not None:
        lines = ["epoch,pair_index,reconstruction_error"]
        for pair, epoch, err in report.training_curve:
            lines.append(f"{epoch},{pair},{_fmt(err)}")
        (out / "training_curve.csv").write_text("\n".join(lines) + "\n", encoding="ascii")


def experiment_spec_from_config(doc: dict) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from a parsed JSON config document.

    Keys mirror the spec's field names; ``relaxation`` and ``train``
    accept partial sub-documents and fall back to the dataclass
    defaults. Unknown keys are rejected to catch typos early.
    """
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")

    def take(sub: dict, allowed: set[str], where: str) -> dict:
        unknown = set(sub) - allowed
        if unknown:
            raise ConfigurationError(f"unknown {where} keys: {sorted(unknown)}")
        return sub

    take(doc, {"dataset", "sizes", "regimes", "relaxation", "train",
               "n_inputs_evaluated", "output_dir", "seed"}, "config")
    try:
        sizes = LayerSpec(sizes=tuple(doc["sizes"]))
        regimes = tuple(doc["regimes"])
    except KeyError as exc:
        raise ConfigurationError(f"config is missing required key {exc}") from exc

    dsub = dict(doc.get("dataset", {}))
    take(dsub, {"source", "path", "n_items", "d", "n_clusters", "spread"}, "dataset")
    try:
        if "source" in dsub:
            dsub["source"] = DataSource(dsub["source"])
        dataset = DatasetSpec(**dsub)
        rsub = dict(doc.get("relaxation", {}))
        take(rsub, {"scheme", "tau", "noise_scale", "max_iters", "tol", "seed"},
             "relaxation")
        if "scheme" in rsub:
            rsub["scheme"] = Scheme(rsub["scheme"])
        relaxation = RelaxationConfig(**rsub)
        tsub = dict(doc.get("train", {}))
        take(tsub, {"learning_rate", "epochs", "batch_size", "rule", "tie_decoder",
                    "init_scale", "seed"}, "train")
        if "rule" in tsub:
            tsub["rule"] = TrainRule(tsub["rule"])
        train = TrainConfig(**tsub)
    except ValueError as exc:
        raise ConfigurationError(f"invalid config value: {exc}") from exc
    return ExperimentSpec(
        dataset=dataset,
        sizes=sizes,
        regimes=regimes,
        relaxation=relaxation,
        train=train,
        n_inputs_evaluated=int(doc.get("n_inputs_evaluated", 100)),
        output_dir=str(doc.get("output_dir", "out")),
        seed=int(doc.get("seed", 0)),
    )


def override_seed(spec: ExperimentSpec, seed: int) -> ExperimentSpec:
    """Replace every seed in the spec (top-level, training, relaxation)."""
    return replace(
        spec,
        seed=seed,
        train=replace(spec.train, seed=seed),
        relaxation=replace(spec.relaxation, seed=seed),
    )
