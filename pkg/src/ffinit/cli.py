"""Command line interface.

Subcommands:
    experiment     run a regime-comparison experiment from a JSON config
    train          train a stacked auto-encoder and save a checkpoint
    infer          relax one dataset item with a saved model
    make-fixtures  write small fixture files (IDX samples, exact model)

Exit codes: 0 success, 2 configuration/input error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import struct
import sys
from pathlib import Path

import numpy as np

from .data import save_params, load_params, synth_autoencodable, synth_blobs
from .energy import EnergyModel
from .exceptions import FfinitError, NotAnEnergyModelError
from .harness import (
    _build_dataset,
    experiment_spec_from_config,
    override_seed,
    run_experiment,
)
from .inference import infer_from_feedforward
from .learning import train_stacked_ae
from .network import LayerSpec, mutual_prediction_residual


def _load_config(path: str):
    doc = json.loads(Path(path).read_text())
    return experiment_spec_from_config(doc)


def _cmd_experiment(args) -> int:
    spec = _load_config(args.config)
    if args.seed is not None:
        spec = override_seed(spec, args.seed)
    if args.out is not None:
        spec = type(spec)(**{**spec.__dict__, "output_dir": args.out})
    report = run_experiment(spec)
    for rr in report.regimes:
        if len(rr.initial_steps):
            print(f"{rr.regime}: initial step mean {rr.initial_steps.mean():.6g}, "
                  f"iterations-to-tol mean {rr.iters_to_tol.mean():.3g}, "
                  f"converged {int(rr.converged.sum())}/{len(rr.converged)}")
    print(f"wrote CSV outputs to {spec.output_dir}")
    return 0


def _cmd_train(args) -> int:
    spec = _load_config(args.config)
    if args.seed is not None:
        spec = override_seed(spec, args.seed)
    data = _build_dataset(spec.dataset, spec.sizes, spec.seed)
    curve = []
    params = train_stacked_ae(
        data, spec.sizes, spec.train,
        progress=lambda pair, epoch, err: curve.append((pair, epoch, err)))
    save_params(params, args.out)
    print(f"saved model to {args.out}")
    if args.curve:
        lines = ["epoch,pair_index,reconstruction_error"]
        lines += [f"{epoch},{pair},{err!r}" for pair, epoch, err in curve]
        Path(args.curve).write_text("\n".join(lines) + "\n")
        print(f"saved training curve to {args.curve}")
    for pair in range(1, spec.sizes.n_hidden_layers + 1):
        errs = [err for p, _, err in curve if p == pair]
        if errs:
            print(f"pair {pair}: final reconstruction error {errs[-1]:.6g}")
    return 0


def _cmd_infer(args) -> int:
    spec = _load_config(args.config)
    if args.seed is not None:
        spec = override_seed(spec, args.seed)
    params = load_params(args.model)
    data = _build_dataset(spec.dataset, params.spec, spec.seed)
    x = data.items[args.index]
    try:
        energy_model = EnergyModel(params)
    except NotAnEnergyModelError:
        energy_model = None
    state, trace = infer_from_feedforward(params, x, spec.relaxation,
                                          energy_model=energy_model)
    residual = float(mutual_prediction_residual(params, state).max())
    if args.out:
        lines = ["iter,step_magnitude" + (",energy" if energy_model else "")]
        for i, step in enumerate(trace.step_magnitudes):
            row = f"{i},{float(step)!r}"
            if energy_model:
                row += f",{float(trace.energies[i + 1])!r}"
            lines.append(row)
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote trace to {args.out}")
    print(f"item {args.index}: converged={trace.converged} after {trace.iters_run} "
          f"iterations, initial step {trace.step_magnitudes[0]:.6g}, "
          f"final residual {residual:.6g}")
    return 0


def _cmd_make_fixtures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    header = struct.pack(">IIII", 0x00000803, 2, 2, 2)
    (out / "fixture_2x2.idx").write_bytes(header + bytes([0, 255, 128, 0, 255, 255, 0, 0]))

    blobs = synth_blobs(64, 16, n_clusters=4, spread=0.05, seed=args.seed)
    pixels = np.round(blobs.items * 255.0).astype(np.uint8)
    header = struct.pack(">IIII", 0x00000803, pixels.shape[0], 4, 4)
    (out / "blobs_16d.idx").write_bytes(header + pixels.tobytes())

    _, params = synth_autoencodable(50, LayerSpec(sizes=(8, 6, 5, 4)), seed=args.seed)
    save_params(params, out / "exact_ae_model.json")

    print(f"wrote fixtures to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffinit",
        description="Relaxation experiments on layered recurrent networks")
    parser.add_argument("--verbose", action="store_true",
                        help="log training diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("experiment", help="run a regime-comparison experiment")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override every seed in the config")
    p.add_argument("--out", help="override the config's output directory")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("train", help="train a stacked auto-encoder")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override every seed in the config")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--curve", help="optional CSV path for the training curve")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="relax one dataset item with a saved model")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--model", required=True, help="checkpoint file to load")
    p.add_argument("--index", type=int, default=0, help="dataset item to clamp")
    p.add_argument("--seed", type=int, help="override every seed in the config")
    p.add_argument("--out", help="optional CSV path for the per-iteration trace")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("make-fixtures", help="write small fixture files")
    p.add_argument("--out", required=True, help="directory to write fixtures into")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_make_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (FfinitError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
