"""Command-line entry point.

Subcommands: gen-data, decompose, attack, train, curves.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import attacker as attacker_mod
from . import data as data_mod
from . import gate as gate_mod
from . import imageio, spectral, svgplot, trainer
from .model import save_model

MODE_NAMES = {"baseline": "baseline", "faa-s": "faa_s",
              "faa-t": "faa_t", "faa": "faa_full"}


def _parse_band(text, parser):
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        parser.error(f"band must be lo:hi, got {text!r}")
    if not (0.0 <= lo < hi <= 1.0):
        parser.error(f"band must satisfy 0 <= lo < hi <= 1, got {text!r}")
    return lo, hi


def cmd_gen_data(args, parser):
    src_band = _parse_band(args.src_band, parser)
    tgt_band = _parse_band(args.tgt_band, parser)
    try:
        src_spec, tgt_spec = data_mod.default_specs(
            amplitude=args.amplitude, tgt_offset=args.tgt_offset,
            src_band=src_band, tgt_band=tgt_band)
    except data_mod.ConfigError as e:
        parser.error(str(e))
    bundle = data_mod.generate(args.seed, args.per_class, args.classes,
                               src_spec, tgt_spec, size=args.size,
                               test_per_class=args.test_per_class)
    data_mod.save_bundle(args.out, bundle)
    n = args.classes * args.per_class
    print(f"wrote {n} source-train and {n} target-train images to {args.out}")
    return 0


def cmd_decompose(args, parser):
    img = imageio.read_image(args.input)
    os.makedirs(args.out, exist_ok=True)
    report = []
    max_err = 0.0
    for c in range(img.shape[0]):
        chan, dims = spectral.resize_to_square(img[c])
        z = spectral.dft2(chan)
        bands = spectral.decompose(z, args.bands)
        err = float(np.max(np.abs(spectral.compose(bands) - z)))
        max_err = max(max_err, err)
        for n, band in enumerate(bands):
            recon = spectral.idft2(band)
            recon = spectral.restore_size(recon, dims)
            name = f"band_{n:03d}.pgm" if img.shape[0] == 1 \
                else f"c{c}_band_{n:03d}.pgm"
            imageio.write_pnm(os.path.join(args.out, name), recon[None])
        report.append(f"channel {c}: max recomposition error {err:.3e}")
    report.append(f"max recomposition error {max_err:.3e}")
    report.append(f"bands {args.bands}")
    with open(os.path.join(args.out, "report.txt"), "w") as f:
        f.write("\n".join(report) + "\n")
    print("\n".join(report))
    return 0


def _load_gate_file(path, n_bands, parser):
    hard = np.zeros(n_bands)
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            idx, val = line.split()
            hard[int(idx)] = float(int(val))
    return hard


def cmd_attack(args, parser):
    if (args.gate_file is None) == (args.gate_random is None):
        parser.error("exactly one of --gate-file / --gate-random is required")
    x = imageio.read_image(args.input)
    ref = imageio.read_image(args.ref)
    if x.shape != ref.shape:
        parser.error(f"input shape {x.shape} != reference shape {ref.shape}")
    rng = np.random.default_rng(args.seed)
    if args.gate_file is not None:
        hard = _load_gate_file(args.gate_file, args.bands, parser)
    else:
        hard = (rng.random(args.bands) < args.gate_random).astype(np.float64)
    raw, clamped, _ = attacker_mod.blend_batch(x[None], ref[None],
                                               hard[None], args.bands)
    os.makedirs(args.out, exist_ok=True)
    ext = ".pgm" if x.shape[0] == 1 else ".ppm"
    imageio.write_pnm(os.path.join(args.out, "x" + ext), x)
    imageio.write_pnm(os.path.join(args.out, "x_ref" + ext), ref)
    imageio.write_pnm(os.path.join(args.out, "x_faa" + ext), clamped[0])
    with open(os.path.join(args.out, "gate.txt"), "w") as f:
        for n in range(args.bands):
            f.write(f"{n} {int(hard[n])}\n")
    print(f"perturbed {int(hard.sum())} of {args.bands} bands -> {args.out}")
    return 0


def cmd_train(args, parser):
    bundle = data_mod.load_bundle(args.data)
    config = trainer.RunConfig(
        mode=MODE_NAMES[args.mode], iters=args.iters, batch=args.batch,
        lr=args.lr, momentum=args.momentum, weight_decay=args.wd,
        poly_power=args.poly_power, n_bands=args.bands, budget=args.budget_p,
        tau=args.tau, rec_band=(args.rec_lo, args.rec_hi),
        unsup={"self": "self_train", "entropy": "entropy"}[args.unsup],
        lam=args.lam, pseudo_threshold=args.pseudo_thresh, seed=args.seed,
        model_kind=args.model, hidden=args.hidden,
        attacker_lr=args.attacker_lr)
    if args.rec_lo >= args.rec_hi:
        parser.error("--rec-lo must be < --rec-hi")
    result = trainer.train(config, bundle)
    os.makedirs(args.out, exist_ok=True)
    result.metrics.to_csv(os.path.join(args.out, "metrics.csv"))
    save_model(os.path.join(args.out, "model.ckpt"), result.model)
    if config.mode != "baseline":
        gate_mod.save_gate(os.path.join(args.out, "gate.ckpt"),
                           result.attacker.gate)
    from . import figures
    figures.save_loss_curves_png(os.path.join(args.out, "curves.png"),
                                 [(args.mode, result.metrics)])
    final = result.metrics.rows[-1]
    print(f"finished {args.iters} iters; final train_loss {final[1]:.4f}, "
          f"tgt_acc {final[4]:.4f}; outputs in {args.out}")
    return 0


def cmd_curves(args, parser):
    series = []
    labeled = []
    for path in args.metrics:
        try:
            m = trainer.RunMetrics.from_csv(path)
        except (OSError, ValueError, StopIteration) as e:
            parser.error(f"cannot read metrics file {path}: {e}")
        if not m.rows:
            parser.error(f"metrics file {path} has no data rows")
        stem = os.path.splitext(os.path.basename(path))[0]
        iters = list(m.column("iter"))
        series.append((f"{stem}:train", iters, list(m.column("train_loss"))))
        series.append((f"{stem}:tgt_test", iters,
                       list(m.column("tgt_test_loss"))))
        labeled.append((stem, m))
    svgplot.write_line_chart(args.out, series, x_label="iteration",
                             y_label="loss")
    from . import figures
    png = os.path.splitext(args.out)[0] + ".png"
    figures.save_loss_curves_png(png, labeled)
    print(f"wrote {args.out} and {png}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="freqadv",
        description="Frequency-band adversarial domain adaptation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic two-domain dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--per-class", type=int, default=125)
    p.add_argument("--size", type=int, default=28)
    p.add_argument("--src-band", default="0.625:0.6875")
    p.add_argument("--tgt-band", default="0.6875:0.9375")
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--tgt-offset", type=float, default=0.05)
    p.add_argument("--test-per-class", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("decompose", help="split an image into annular frequency bands")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--bands", type=int, default=16)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("attack", help="band-swap one image against a reference")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--bands", type=int, default=16)
    p.add_argument("--gate-file")
    p.add_argument("--gate-random", type=float,
                   help="Bernoulli perturb probability per band")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("train", help="run the defend/attack training loop")
    p.add_argument("--mode", choices=sorted(MODE_NAMES), default="baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--wd", type=float, default=1e-4)
    p.add_argument("--poly-power", type=float, default=0.9)
    p.add_argument("--bands", type=int, default=16)
    p.add_argument("--budget-p", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--rec-lo", type=float, default=1.0 / 6.0)
    p.add_argument("--rec-hi", type=float, default=0.5)
    p.add_argument("--unsup", choices=["self", "entropy"], default="self")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--pseudo-thresh", type=float, default=0.99)
    p.add_argument("--model", choices=["linear", "mlp"], default="mlp")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--attacker-lr", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("curves", help="plot metrics CSVs as an SVG line chart")
    p.add_argument("--metrics", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curves)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except SystemExit:
        raise
    except Exception as e:  # runtime failure -> exit 1
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
