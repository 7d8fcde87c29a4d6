"""Command-line interface.

Exit codes: 0 success, 1 other library error, 2 configuration or usage
error, 3 I/O error, 4 numerical-domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config_file, resolve
from .diffusion import BatchOracleScore, ZeroScore, batch_loss, make_training_batch, save_batch
from .errors import ConfigError, IdmError
from .metrics import evaluate, ie_report, write_metric_csv
from .pipeline import analyze_pair, enhance_oracle, forward_path, forward_states
from .sampler import save_trajectory, write_trajectory_csv
from .schedule import schedule_table
from .signal import Waveform, load_wav, save_wav
from .synth import noisy_pair

log = logging.getLogger("idmse")

EXIT_IO = 3


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (flags > --config file > defaults)")
    g.add_argument("--config", type=Path, help="INI file with key = value settings")
    g.add_argument("--schedule", choices=["vp", "ve", "idm"])
    g.add_argument("--beta-min", type=float, dest="beta_min")
    g.add_argument("--beta-max", type=float, dest="beta_max")
    g.add_argument("--lambda", type=float, dest="lambda_rate", help="interpolation rate in exp(-lambda t)")
    g.add_argument("--sigma-min", type=float, dest="sigma_min")
    g.add_argument("--sigma-max", type=float, dest="sigma_max")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--steps", type=int, help="reverse steps K (default: derived from epsilon)")
    g.add_argument("--seed", type=int)
    g.add_argument("--a", type=float, help="scaling gain")
    g.add_argument("--c", type=float, help="scaling exponent")
    g.add_argument("--frame", type=int)
    g.add_argument("--hop", type=int)
    g.add_argument("--window", choices=["sqrthann", "hann", "boxcar"])
    g.add_argument("--discretization", choices=["literal", "standard"])
    g.add_argument("--jobs", type=int)


_RUN_KEYS = (
    "schedule", "beta_min", "beta_max", "lambda_rate", "sigma_min", "sigma_max", "epsilon",
    "steps", "seed", "a", "c", "frame", "hop", "window", "discretization", "jobs",
)


def _run_config(args) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    return resolve(file_values, {k: getattr(args, k) for k in _RUN_KEYS})


def _pairs(clean: Path, noisy: Path) -> list[tuple[str, Path, Path]]:
    """Match clean/noisy files; directories pair up by file name."""
    if clean.is_dir() != noisy.is_dir():
        raise ConfigError("--clean and --noisy must both be files or both be directories")
    if not clean.is_dir():
        return [(clean.stem, clean, noisy)]
    out = []
    for c in sorted(clean.glob("*.wav")):
        n = noisy / c.name
        if not n.exists():
            raise FileNotFoundError(f"no noisy counterpart for {c.name} in {noisy}")
        out.append((c.stem, c, n))
    if not out:
        raise FileNotFoundError(f"no .wav files in {clean}")
    return out


# --- commands ---------------------------------------------------------------


def cmd_schedule_dump(args) -> None:
    cfg = _run_config(args)
    table = schedule_table(cfg.build_schedule(), args.points)
    cols = list(table)
    out = Path(args.out)
    if out.suffix == ".json":
        rows = [
            {c: (None if math.isnan(v) else v) for c, v in zip(cols, map(float, vals))}
            for vals in zip(*table.values())
        ]
        out.write_text(json.dumps(rows, indent=1))
    else:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for vals in zip(*table.values()):
                w.writerow(["" if math.isnan(v) else repr(float(v)) for v in vals])
    log.info("wrote %d rows to %s", args.points, out)


def cmd_simulate_forward(args) -> None:
    cfg = _run_config(args)
    clean, noisy = load_wav(args.clean), load_wav(args.noisy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    times = [float(t) for t in args.times.split(",")]
    summary = {"config": cfg.to_dict(), "states": []}
    for t, rec in forward_states(clean, noisy, cfg, times, rng).items():
        name = f"state_t{t:.6f}.npy"
        np.save(out / name, rec["state"])
        summary["states"].append({
            "t": t, "file": name,
            "mean_l2": float(np.linalg.norm(rec["mean"])),
            "deviation_rms": float(np.sqrt(np.mean((rec["state"] - rec["mean"]) ** 2))),
        })
    if args.euler_steps:
        path = forward_path(clean, noisy, cfg, args.euler_steps, rng)
        save_trajectory(out / "euler_path.npy", path)
        summary["euler_path"] = {"file": "euler_path.npy", "steps": args.euler_steps}
    (out / "forward.json").write_text(json.dumps(summary, indent=1))


def _enhance_one(job):
    uid, clean_path, noisy_path, out_wav, cfg, seed_seq, traj_prefix = job
    clean, noisy = load_wav(clean_path), load_wav(noisy_path)
    rng = np.random.default_rng(seed_seq)
    res = enhance_oracle(clean, noisy, cfg, rng, record=traj_prefix is not None)
    save_wav(out_wav, res.waveform)
    if traj_prefix is not None:
        write_trajectory_csv(f"{traj_prefix}.csv", res.grid, res.path)
        save_trajectory(f"{traj_prefix}.npy", res.path)
    interference = Waveform(noisy.samples - clean.samples, noisy.sample_rate)
    return (
        evaluate(uid, res.waveform, clean, interference),
        evaluate(uid, noisy, clean, interference),
    )


def cmd_enhance_oracle(args) -> None:
    cfg = _run_config(args)
    pairs = _pairs(Path(args.clean), Path(args.noisy))
    out = Path(args.out)
    if len(pairs) > 1 or Path(args.clean).is_dir():
        out.mkdir(parents=True, exist_ok=True)
        targets = [out / f"{uid}.wav" for uid, _, _ in pairs]
    else:
        targets = [out]
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(pairs))
    jobs = []
    for (uid, c, n), target, seed in zip(pairs, targets, seeds):
        prefix = None
        if args.trajectory:
            prefix = str(Path(args.trajectory) / f"{uid}_trajectory")
            Path(args.trajectory).mkdir(parents=True, exist_ok=True)
        jobs.append((uid, c, n, target, cfg, seed, prefix))
    log.warning("oracle enhancement uses the clean reference: validation output only")
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_enhance_one, jobs))
    else:
        results = [_enhance_one(j) for j in jobs]
    rows = [enhanced for enhanced, _ in results]
    if args.metrics:
        metrics_path = Path(args.metrics)
    elif len(targets) > 1 or Path(args.clean).is_dir():
        metrics_path = out / "metrics.csv"
    else:
        metrics_path = out.with_suffix(".metrics.csv")
    write_metric_csv(metrics_path, rows)
    for enhanced, baseline in results:
        print(
            f"{enhanced.utterance_id}: SI-SDR {baseline.si_sdr:.2f} dB -> {enhanced.si_sdr:.2f} dB "
            "[oracle score, validation only]"
        )


def cmd_ie_report(args) -> None:
    cfg = _run_config(args)
    x0, y = analyze_pair(load_wav(args.clean), load_wav(args.noisy), cfg)
    rows = ie_report(x0, y, [("ve", cfg.build_schedule("ve")), ("vp", cfg.build_schedule("vp"))])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["schedule", "ie_norm", "ratio_to_ve"])
        for row in rows:
            w.writerow([row["schedule"], repr(row["ie_norm"]), repr(row["ratio_to_first"])])
    finally:
        if args.out:
            fh.close()


def cmd_training_batch(args) -> None:
    cfg = _run_config(args)
    x0, y = analyze_pair(load_wav(args.clean), load_wav(args.noisy), cfg)
    s = cfg.build_schedule()
    batch = make_training_batch([(x0, y)] * args.batch_size, s, cfg.epsilon, cfg.seed)
    save_batch(args.out, batch)
    print(f"oracle loss {batch_loss(batch, BatchOracleScore(s, batch), s):.3e}")
    print(f"zero-model loss {batch_loss(batch, ZeroScore(), s):.6g} (entries per example: {x0.size})")


def cmd_synth(args) -> None:
    out = Path(args.out)
    (out / "clean").mkdir(parents=True, exist_ok=True)
    (out / "noisy").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        clean, noisy = noisy_pair(rng, args.snr, args.seconds)
        save_wav(out / "clean" / f"utt{i:03d}.wav", clean)
        save_wav(out / "noisy" / f"utt{i:03d}.wav", noisy)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idmse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule-dump", help="tabulate t, beta, alpha, lambda, G, g")
    _add_run_flags(p)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--out", required=True, help=".csv or .json")
    p.set_defaults(func=cmd_schedule_dump)

    p = sub.add_parser("simulate-forward", help="closed-form states x(t) and optional SDE path")
    _add_run_flags(p)
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--noisy", type=Path, required=True)
    p.add_argument("--times", default="0,0.25,0.5,0.75,1")
    p.add_argument("--euler-steps", type=int, default=0, help="also simulate the SDE with this many steps")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_simulate_forward)

    p = sub.add_parser(
        "enhance-oracle",
        help="reverse sampling with the exact score (needs the clean reference; validation only)",
    )
    _add_run_flags(p)
    p.add_argument("--clean", type=Path, required=True, help="file or directory")
    p.add_argument("--noisy", type=Path, required=True, help="file or directory")
    p.add_argument("--out", type=Path, required=True, help="output .wav, or directory")
    p.add_argument("--metrics", type=Path, help="metrics CSV (default next to the output)")
    p.add_argument("--trajectory", type=Path, help="directory for per-step CSV and .npy paths")
    p.set_defaults(func=cmd_enhance_oracle)

    p = sub.add_parser("ie-report", help="initial error of VE vs VP reverse starts")
    _add_run_flags(p)
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--noisy", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_ie_report)

    p = sub.add_parser("training-batch", help="build and serialize a batch of training tuples")
    _add_run_flags(p)
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--noisy", type=Path, required=True)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_training_batch)

    p = sub.add_parser("synth", help="write synthetic clean/noisy WAV pairs")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--snr", type=float, default=0.0)
    p.add_argument("--seconds", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except IdmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
