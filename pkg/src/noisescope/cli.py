"""Command-line entry point.

One binary with subcommands for every stage of the workflow: corpus
generation, range analysis, schedule inspection, training, sampling, editing,
evaluation, and the end-to-end schedule comparison.  Every run writes a
run-manifest (resolved configuration, seed, version) beside its outputs.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgumentError, NoiseScopeError
from .schedule import (
    CHURN_EDM,
    CHURN_LIGHT,
    CHURN_NONE,
    EDM_TRAINING_DENSITY,
    NoiseRange,
    density_to_kv,
    kv_loads,
    make_schedule,
    prioritization_density,
    range_to_kv,
    sampling_bounds_from_range,
    schedule_to_csv,
    schedule_to_kv,
    training_density_from_range,
)

_CHURN_PRESETS = {"none": CHURN_NONE, "light": CHURN_LIGHT, "edm": CHURN_EDM}


def _parse_range(text: str) -> NoiseRange:
    try:
        end_s, start_s = text.split(":")
        return NoiseRange(sigma_end=float(end_s), sigma_start=float(start_s))
    except ValueError as exc:
        raise InvalidArgumentError(f"range must be 'sigma_end:sigma_start', got {text!r}") from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _write_manifest(out: Path, args: argparse.Namespace) -> None:
    lines = [f"tool=noisescope {__version__}", f"subcommand={args.command}"]
    for key in sorted(vars(args)):
        if key in ("command", "func", "config"):
            continue
        lines.append(f"{key}={getattr(args, key)}")
    _write(out / "run-manifest.txt", "\n".join(lines) + "\n")


def _resolve_bounds(args) -> tuple[float, float, NoiseRange | None]:
    noise_range = _parse_range(args.range) if args.range else None
    if args.sigma_min is not None and args.sigma_max is not None:
        return args.sigma_min, args.sigma_max, noise_range
    if noise_range is not None:
        lo, hi = sampling_bounds_from_range(noise_range)
        return lo, hi, noise_range
    raise InvalidArgumentError("provide --sigma-min/--sigma-max or --range")


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_gen_data(args) -> int:
    from .dataset import GeneratorConfig, generate_structure, save_image
    from .seeding import STREAM_DATASET, child_rng

    out = Path(args.out)
    # Masks live in a subdirectory so the corpus root holds only images.
    (out / "masks").mkdir(parents=True, exist_ok=True)
    cfg = GeneratorConfig(resolution=args.resolution)
    rows = ["index,image,mask,wheel1,wheel2,thickness"]
    for i in range(args.count):
        img, mask, spec = generate_structure(child_rng(args.seed, STREAM_DATASET, i), cfg)
        name, mask_name = f"img_{i:04d}.{args.format}", f"masks/mask_{i:04d}.{args.format}"
        save_image(img, out / name)
        save_image(np.where(mask, -1.0, 1.0), out / mask_name)
        w1, w2 = spec.wheels
        rows.append(f"{i},{name},{mask_name},"
                    f"({w1[0]:.2f};{w1[1]:.2f};{w1[2]:.2f}),"
                    f"({w2[0]:.2f};{w2[1]:.2f};{w2[2]:.2f}),{spec.thickness:.3f}")
    _write(out / "manifest.csv", "\n".join(rows) + "\n")
    _write_manifest(out, args)
    print(f"wrote {args.count} images to {out}")
    return 0


def _cmd_analyze(args) -> int:
    from .dataset import load_corpus
    from .rangefinder import (
        RangeFinderConfig,
        find_range,
        run_sweep,
        segment_object,
        trace_to_csv,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = load_corpus(args.data)
    masks = [segment_object(img, args.threshold) for img in images]
    n = int(round(args.grid_max / args.grid_step))
    grid = np.linspace(0.0, n * args.grid_step, n + 1)
    cfg = RangeFinderConfig(sigma_grid=grid, subsample_n=args.subsample,
                            significance=args.significance,
                            kl_threshold=args.kl_threshold, seed=args.seed)
    trace = run_sweep(images, masks, cfg.sigma_grid, cfg.subsample_n, cfg.seed)
    _write(out / "sweep.csv", trace_to_csv(trace))
    report = find_range(images, masks, cfg)
    _write(out / "range.txt", report.to_text())
    _write(out / "range.kv", range_to_kv(report.range))
    _write_manifest(out, args)
    print(report.to_text(), end="")
    return 0


def _cmd_schedule(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lo, hi, noise_range = _resolve_bounds(args)
    schedule = make_schedule(lo, hi, args.rho, args.n)
    _write(out / "schedule.csv", schedule_to_csv(schedule))
    _write(out / "schedule.txt", schedule_to_kv(schedule))
    if noise_range is not None:
        density = training_density_from_range(noise_range)
        _write(out / "density.txt", density_to_kv(density))
        print(f"r_p={prioritization_density(schedule, noise_range):.6g}")
    _write_manifest(out, args)
    print(f"wrote schedule ({args.n} steps, rho={args.rho}) to {out}")
    return 0


def _cmd_train(args) -> int:
    from .dataset import load_corpus
    from .schedule import TrainingNoiseDensity
    from .training import TrainableDenoiser, TrainConfig, save_checkpoint, train

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = load_corpus(args.data)
    data = np.stack(images)
    side = data.shape[1]
    if args.density == "edm":
        density = EDM_TRAINING_DENSITY
    elif args.density == "range":
        if not args.range:
            raise InvalidArgumentError("--density range requires --range")
        density = training_density_from_range(_parse_range(args.range))
    else:
        pairs = kv_loads(Path(args.density).read_text())
        density = TrainingNoiseDensity(mu=float(pairs["mu"]), zeta=float(pairs["zeta"]))

    denoiser = TrainableDenoiser.conv(side, channels=args.channels, init_seed=args.seed)
    denoiser, curve = train(denoiser, data, TrainConfig(
        density=density, sigma_data=args.sigma_data, batch_size=args.batch,
        n_steps=args.steps, lr=args.lr, seed=args.seed))
    save_checkpoint(denoiser, out / "denoiser.ckpt")
    _write(out / "loss.csv", "step,loss\n" + "\n".join(
        f"{i},{v:.17g}" for i, v in enumerate(curve)) + "\n")
    _write(out / "density.txt", density_to_kv(density))
    _write_manifest(out, args)
    print(f"trained {denoiser.n_params}-parameter denoiser for {args.steps} steps -> {out}")
    return 0


def _cmd_sample(args) -> int:
    from .dataset import save_image
    from .diffusion import SamplerConfig, sample
    from .training import load_checkpoint

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    denoiser = load_checkpoint(args.ckpt)
    lo, hi, _ = _resolve_bounds(args)
    config = SamplerConfig(schedule=make_schedule(lo, hi, args.rho, args.n),
                           churn=_CHURN_PRESETS[args.churn], seed=args.seed,
                           heun=not args.no_heun)
    images = np.clip(sample(denoiser, config, args.count), -1.0, 1.0)
    for i, img in enumerate(images):
        save_image(img, out / f"sample_{i:04d}.{args.format}")
    _write_manifest(out, args)
    print(f"wrote {args.count} samples to {out}")
    return 0


def _cmd_interp(args) -> int:
    from .dataset import load_image, save_image
    from .diffusion import SamplerConfig
    from .editing import interpolate
    from .training import load_checkpoint

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    denoiser = load_checkpoint(args.ckpt)
    noise_range = _parse_range(args.range)
    a, b = load_image(args.a), load_image(args.b)
    config = SamplerConfig(schedule=make_schedule(args.sigma_min, noise_range.sigma_start,
                                                  args.rho, args.n), seed=args.seed)
    for t_str in args.t.split(","):
        t = float(t_str)
        img = interpolate(a, b, t, noise_range, denoiser, config,
                          mode=args.mode, combine=args.combine)
        save_image(np.clip(img, -1.0, 1.0), out / f"interp_{t:.3f}.{args.format}")
    _write_manifest(out, args)
    print(f"wrote interpolations to {out}")
    return 0


def _cmd_inpaint(args) -> int:
    from .dataset import load_image, save_image
    from .diffusion import SamplerConfig
    from .editing import InpaintTask, inpaint
    from .training import load_checkpoint

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    denoiser = load_checkpoint(args.ckpt)
    source = load_image(args.image)
    known = load_image(args.mask) > 0.0
    lo, hi, _ = _resolve_bounds(args)
    config = SamplerConfig(schedule=make_schedule(lo, hi, args.rho, args.n),
                           churn=_CHURN_PRESETS[args.churn], seed=args.seed)
    task = InpaintTask(source=source, known=known, config=config, resamples=args.resamples)
    result = inpaint(task, denoiser)
    save_image(np.clip(result, -1.0, 1.0), out / f"inpainted.{args.format}")
    _write_manifest(out, args)
    print(f"wrote inpainted image to {out}")
    return 0


def _cmd_eval(args) -> int:
    from .dataset import load_corpus
    from .metrics import EvalReport, evaluate

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = load_corpus(args.images)
    reference = load_corpus(args.reference)
    lo, hi, noise_range = _resolve_bounds(args)
    if noise_range is None:
        raise InvalidArgumentError("eval requires --range for the prioritization density")
    schedule = make_schedule(lo, hi, args.rho, args.n)
    report = evaluate(images, reference, schedule, noise_range, downscale=args.downscale)
    _write(out / "eval.txt", report.to_text())
    csv_path = out / "eval.csv"
    if not csv_path.exists():
        _write(csv_path, EvalReport.csv_header() + "\n")
    with open(csv_path, "a") as fh:
        fh.write(report.to_csv_row() + "\n")
    _write_manifest(out, args)
    print(report.to_text(), end="")
    return 0


def _cmd_compare(args) -> int:
    from .experiments import ComparisonConfig, run_schedule_comparison

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = None
    for seed in (int(s) for s in args.seeds.split(",")):
        cfg = ComparisonConfig(seed=seed, resolution=args.resolution,
                               train_count=args.train_count, train_steps=args.train_steps,
                               batch_size=args.batch, lr=args.lr, channels=args.channels,
                               sample_count=args.sample_count, n_steps=args.n)
        result = run_schedule_comparison(cfg, progress=lambda m: print(f"[seed {seed}] {m}"))
        _write(out / f"compare_seed{seed}.txt", result.to_text())
        if rows is None:
            rows = ["seed,setting,r_p,pdr,pixel_frechet,ssim_mean"]
        for name, rep in result.reports.items():
            rows.append(f"{seed},{name},{rep.r_p:.6g},{rep.pdr:.6g},"
                        f"{rep.pixel_frechet:.6g},{rep.ssim_mean:.6g}")
        print(result.to_text(), end="")
    _write(out / "compare.csv", "\n".join(rows) + "\n")
    _write_manifest(out, args)
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="noisescope",
        description="Plausibility-oriented noise-range analysis and scheduling "
                    "for small diffusion models.")
    parser.add_argument("--version", action="version", version=f"noisescope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def register(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        registry[name] = p
        return p

    def common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None, help="key=value config file; flags override")

    def schedule_flags(p):
        p.add_argument("--rho", type=float, default=7.0)
        p.add_argument("--n", type=int, default=18, help="number of sampler steps")
        p.add_argument("--sigma-min", type=float, default=None)
        p.add_argument("--sigma-max", type=float, default=None)
        p.add_argument("--range", default=None,
                       help="noise range 'sigma_end:sigma_start'; derives bounds when "
                            "--sigma-min/--sigma-max are absent")

    p = register("gen-data", help="generate a synthetic structure corpus")
    common(p)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--format", choices=("png", "pgm"), default="png")
    p.set_defaults(func=_cmd_gen_data)

    p = register("analyze", help="measure the plausibility-relevant noise range")
    common(p)
    p.add_argument("--data", required=True, help="directory of grayscale PNG/PGM images")
    p.add_argument("--threshold", type=float, default=0.0, help="object segmentation threshold")
    p.add_argument("--grid-max", type=float, default=10.0)
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--subsample", type=int, default=500)
    p.add_argument("--significance", type=float, default=0.01)
    p.add_argument("--kl-threshold", type=float, default=0.02)
    p.set_defaults(func=_cmd_analyze)

    p = register("schedule", help="emit a sampling schedule as CSV")
    common(p)
    schedule_flags(p)
    p.set_defaults(func=_cmd_schedule)

    p = register("train", help="train a compact denoiser")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--density", default="edm",
                   help="'edm', 'range' (with --range), or a density key-value file")
    p.add_argument("--range", default=None)
    p.add_argument("--sigma-data", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=4000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--channels", type=int, default=24)
    p.set_defaults(func=_cmd_train)

    p = register("sample", help="sample images from a trained denoiser")
    common(p)
    schedule_flags(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--churn", choices=tuple(_CHURN_PRESETS), default="light")
    p.add_argument("--no-heun", action="store_true")
    p.add_argument("--format", choices=("png", "pgm"), default="png")
    p.set_defaults(func=_cmd_sample)

    p = register("interp", help="latent-space interpolation between two images")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--t", default="0,0.25,0.5,0.75,1")
    p.add_argument("--range", required=True)
    p.add_argument("--sigma-min", type=float, default=0.002)
    p.add_argument("--rho", type=float, default=7.0)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--mode", choices=("ode", "stochastic"), default="ode")
    p.add_argument("--combine", choices=("slerp", "linear"), default="slerp")
    p.add_argument("--format", choices=("png", "pgm"), default="png")
    p.set_defaults(func=_cmd_interp)

    p = register("inpaint", help="regenerate the unknown region of an image")
    common(p)
    schedule_flags(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True, help="image marking the known region (light = keep)")
    p.add_argument("--resamples", type=int, default=4)
    p.add_argument("--churn", choices=tuple(_CHURN_PRESETS), default="light")
    p.add_argument("--format", choices=("png", "pgm"), default="png")
    p.set_defaults(func=_cmd_inpaint)

    p = register("eval", help="evaluate a sample directory against a reference")
    common(p)
    schedule_flags(p)
    p.add_argument("--images", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--downscale", type=int, default=8)
    p.set_defaults(func=_cmd_eval)

    p = register("compare", help="train and evaluate both schedules end to end")
    common(p)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--train-count", type=int, default=600)
    p.add_argument("--sample-count", type=int, default=500)
    p.add_argument("--train-steps", type=int, default=4000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--channels", type=int, default=24)
    p.add_argument("--n", type=int, default=18)
    p.set_defaults(func=_cmd_compare)

    return parser, registry


def _apply_config_file(registry: dict[str, argparse.ArgumentParser],
                       argv: list[str]) -> None:
    """Load --config key=value pairs as subcommand defaults; flags override.

    Defaults go onto the invoked subparser: subparsers parse into a fresh
    namespace, so top-level defaults would be shadowed.
    """
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, rest = probe.parse_known_args(argv)
    if known.config is None:
        return
    command = next((tok for tok in rest if not tok.startswith("-")), None)
    if command not in registry:
        return
    pairs = kv_loads(Path(known.config).read_text())
    subparser = registry[command]
    valid = {a.dest for a in subparser._actions}
    defaults = {}
    for key, value in pairs.items():
        dest = key.replace("-", "_")
        if dest not in valid:
            raise InvalidArgumentError(f"unknown configuration key {key!r} for {command!r}")
        defaults[dest] = value
    subparser.set_defaults(**defaults)


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = _build_parser()
    try:
        _apply_config_file(registry, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            # argparse exits 0 for --help, 2 for usage errors.
            return 0 if exc.code == 0 else 1
        # Values sourced from a config file arrive as strings; coerce them
        # through each argument's declared type.
        for action in registry[args.command]._actions:
            value = getattr(args, action.dest, None)
            if isinstance(value, str) and action.type is not None:
                setattr(args, action.dest, action.type(value))
        return args.func(args)
    except NoiseScopeError as exc:
        print(f"noisescope: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"noisescope: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run())
