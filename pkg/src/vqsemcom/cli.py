"""Command-line entry point: ``vqsemcom <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import grid, pipeline
from .importance import ranking_csv
from .pgm import read_pgm, write_pgm

log = logging.getLogger("vqsemcom")


def _on_off(text: str) -> str:
    if text.lower() not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text.lower()


def _config(args) -> pipeline.SimConfig:
    overrides: dict[str, str] = {}
    for item in args.set or []:
        if "=" not in item:
            raise pipeline.ConfigError(f"--set expects section.key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.config:
        if args.profile:
            overrides.setdefault("profile", args.profile)
        cfg = pipeline.SimConfig.load(args.config, overrides)
    else:
        cfg = pipeline.SimConfig.from_profile(args.profile or "desk")
        cfg.apply(overrides)
    if getattr(args, "codebook", None):
        cfg.codec.codebook = args.codebook
    return cfg


def _load_image(path: str | None, cfg: pipeline.SimConfig) -> np.ndarray:
    path = path or cfg.paths.image
    if not path:
        raise pipeline.ConfigError("no input image given (--image or paths.image)")
    return read_pgm(path)


def cmd_train(args) -> int:
    cb = pipeline.train_codebook_cmd(args.images, args.patch, args.entries, args.seed, args.out,
                                     max_iters=args.max_iters)
    print(f"wrote {args.out}: J={cb.size} D={cb.dim} range=[{cb.value_range[0]:.4f}, {cb.value_range[1]:.4f}]")
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.fit:
        cfg.scheme.fit = args.fit == "on"
    if args.rematch:
        cfg.scheme.rematch = args.rematch == "on"
    img = _load_image(args.image, cfg)
    trace: dict = {}
    report = pipeline.run_once(cfg, img, args.snr_db, args.seed, trace=trace)
    if args.emit_image:
        write_pgm(args.emit_image, trace["recon"])
    row = report.csv_row()
    row["ranking"] = ranking_csv(trace["weights"])
    print(json.dumps(row, default=str))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    img = _load_image(args.image, cfg)
    snrs = pipeline.parse_snr_range(args.snr_db) if args.snr_db else None
    seeds = list(range(args.seeds)) if args.seeds is not None else None
    schemes = [s.strip() for s in args.schemes.split(",")] if args.schemes else None
    csv_path = args.csv or cfg.paths.csv
    if not csv_path:
        raise pipeline.ConfigError("no CSV output given (--csv or paths.csv)")
    reports = pipeline.sweep(cfg, img, schemes=schemes, snr_db=snrs, seeds=seeds, csv_path=csv_path)
    print(f"wrote {len(reports)} rows to {csv_path}")
    return 0


def cmd_grid_info(args) -> int:
    cfg = pipeline.SimConfig.from_profile(args.profile)
    lay = cfg.layout()
    D = args.channels
    print(f"profile    {args.profile}")
    print(f"grid       {lay.n_t} symbols x {lay.n_f} subcarriers, pilots every {lay.dt} x {lay.df}")
    print(f"N_CPI      {lay.n_cpi}")
    print(f"N_ref      {lay.n_ref}")
    print(f"N_green    {lay.n_green}")
    print(f"N_regular  {lay.n_regular}")
    print(f"D_imp      {grid.important_feature_count(lay, D)} (D={D})")
    if lay.n_cpi <= 80 * 80 or args.map:
        print(grid.role_map_ascii(lay))
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(pipeline.synthetic_corpus(args.count, args.seed, args.size)):
        write_pgm(out / f"synth_{i:04d}.pgm", img)
    print(f"wrote {args.count} images to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vqsemcom", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train-codebook", help="train a shared codebook from a directory of PGM images")
    t.add_argument("--images", required=True)
    t.add_argument("--patch", type=int, default=4)
    t.add_argument("--entries", type=int, default=1024)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--max-iters", type=int, default=50)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    def common(sp):
        sp.add_argument("--config", help="flat section.key = value file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--profile", choices=["desk", "paper"])
        sp.add_argument("--image")
        sp.add_argument("--codebook")

    r = sub.add_parser("run", help="one link realization")
    common(r)
    r.add_argument("--snr-db", type=float, required=True)
    r.add_argument("--fit", type=_on_off)
    r.add_argument("--rematch", type=_on_off)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--emit-image")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="scheme x SNR x seed sweep written to CSV")
    common(s)
    s.add_argument("--snr-db", help="start:stop:step or comma list")
    s.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    s.add_argument("--schemes", help=f"comma list from {','.join(pipeline.SCHEMES)}")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("grid-info", help="resource grid counts and role map")
    g.add_argument("--profile", choices=["desk", "paper"], default="desk")
    g.add_argument("--channels", type=int, default=16)
    g.add_argument("--map", action="store_true", help="print the role map even for large grids")
    g.set_defaults(func=cmd_grid_info)

    y = sub.add_parser("synth-images", help="write a synthetic grayscale corpus")
    y.add_argument("--out", required=True)
    y.add_argument("--count", type=int, default=12)
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--size", type=int, default=128)
    y.set_defaults(func=cmd_synth)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"vqsemcom: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
