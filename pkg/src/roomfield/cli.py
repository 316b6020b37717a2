"""Command-line entry point wiring the toolkit into reproducible workflows.

Every subcommand writes a ``provenance.json`` next to its outputs holding
the fully resolved parameters, a hash of the config file, and package
versions, so runs can be replayed exactly. Exit codes: 0 ok, 1 usage,
2 data error, 3 numerical failure.
"""

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np
import scipy

from . import __version__, metrics, sparse, tensorio, zones
from .core import GridSpec, build_frequency_set, draw_mask
from .modal import (LISTENING_ROOM, RoomSamplerConfig, generate_dataset)
from .tensorio import MeasurementError, TensorFormatError

ENV_PREFIX = "ROOMFIELD_"


def _load_config(path):
    if path is None:
        return {}, None
    with open(path) as fh:
        raw = fh.read()
    return json.loads(raw), hashlib.sha256(raw.encode()).hexdigest()


def _env_override(args, names):
    for name in names:
        env = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
        if env is not None and getattr(args, name.replace("-", "_")) is None:
            setattr(args, name.replace("-", "_"), env)


def _write_provenance(out_dir, command, params, config_hash):
    os.makedirs(out_dir, exist_ok=True)
    record = {
        "command": command,
        "params": params,
        "config_sha256": config_hash,
        "versions": {
            "roomfield": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
    }
    with open(os.path.join(out_dir, "provenance.json"), "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)


def _grid_from(cfg):
    g = cfg.get("grid", {})
    return GridSpec(g.get("I", 8), g.get("J", 8), g.get("up_x", 4),
                    g.get("up_y", 4), g.get("z_o", 1.0))


def _freqs_from(cfg):
    f = cfg.get("freqs", {})
    return build_frequency_set(f.get("f_lo", 30.0), f.get("f_hi", 300.0),
                               f.get("fraction", 12))


def _parse_split(text):
    out = {}
    for part in text.split(","):
        name, _, num = part.partition("=")
        out[name.strip()] = int(num)
    return out


def _cmd_simulate(args, cfg, cfg_hash):
    sampler_cfg = dict(cfg.get("sampler", {}))
    family = args.family or sampler_cfg.pop("family", "extended")
    config = RoomSamplerConfig(family=family, seed=int(args.seed),
                               **sampler_cfg)
    spec = _grid_from(cfg)
    freqs = _freqs_from(cfg)
    split = _parse_split(args.split) if args.split else None
    generate_dataset(config, args.count, spec, freqs, args.out, split=split,
                     f_max=cfg.get("f_max_hz", 400.0))
    _write_provenance(args.out, "simulate",
                      {"family": family, "count": args.count,
                       "seed": int(args.seed), "split": split,
                       "sampler": sampler_cfg}, cfg_hash)
    return 0


def _cmd_mask(args, cfg, cfg_hash):
    spec = _grid_from(cfg)
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        mask = draw_mask(spec, args.n_mic, [int(args.seed), i])
        tensorio.write_mask(os.path.join(args.out, f"mask_{i:04d}"), spec,
                            mask)
    _write_provenance(args.out, "mask",
                      {"count": args.count, "n_mic": args.n_mic,
                       "seed": int(args.seed)}, cfg_hash)
    return 0


def _cmd_evaluate(args, cfg, cfg_hash):
    truth, _ = tensorio.read_tensor(args.truth)
    estimate, _ = tensorio.read_tensor(args.estimate)
    curve = metrics.nmse_per_frequency(truth, estimate)
    os.makedirs(args.out, exist_ok=True)
    metrics.write_nmse_csv(os.path.join(args.out, "nmse.csv"), curve)
    overall = metrics.mnmse([curve])
    if overall == 0.0:
        print("MNMSE: exact (0, -inf dB)")
    else:
        print(f"MNMSE: {overall:.6e} ({metrics.db(overall):.2f} dB)")
    _write_provenance(args.out, "evaluate",
                      {"truth": args.truth, "estimate": args.estimate,
                       "mnmse_linear": overall}, cfg_hash)
    return 0


def _cmd_sparse(args, cfg, cfg_hash):
    truth, mask = tensorio.read_tensor(args.input)
    if args.mask:
        _, mask = tensorio.read_mask(args.mask)
    if mask is None:
        raise MeasurementError("no mask stored in tensor; pass --mask")
    opts = cfg.get("sparse", {})
    recon, solutions = sparse.reconstruct_tensor(
        truth, mask,
        k_max=opts.get("k_max"),
        n_per_axis=opts.get("n_per_axis", 12),
        lam=opts.get("lambda"),
        lambdas=opts.get("lambda_sweep"),
        tol=opts.get("tol", 1e-10),
        max_iter=opts.get("max_iter", 1000))
    tensorio.write_tensor(args.out, recon, mask)
    bad = [i for i, s in enumerate(solutions) if not s.converged]
    if bad:
        print(f"warning: solver did not converge at {len(bad)} frequencies "
              f"(indices {bad[:5]}{'...' if len(bad) > 5 else ''})")
    _write_provenance(args.out, "sparse",
                      {"input": args.input, "mask": args.mask,
                       "options": opts,
                       "unconverged": bad}, cfg_hash)
    return 0


def _cmd_zones(args, cfg, cfg_hash):
    room = LISTENING_ROOM
    if "room" in cfg:
        from .core import Room
        r = cfg["room"]
        room = Room(r["lx"], r["ly"], r["lz"], r.get("t60", 0.6),
                    r.get("c", 343.0))
    spec = _grid_from(cfg)
    freqs = _freqs_from(cfg)
    result = zones.zone_experiment(
        room, spec, freqs,
        rtf_source=args.rtf_source,
        n_mic=args.n_mic,
        trials=args.trials,
        seed=int(args.seed),
        estimate_paths=args.estimates,
        sparse_opts=cfg.get("sparse"))
    os.makedirs(args.out, exist_ok=True)
    zones.write_contrast_csv(os.path.join(args.out, "contrast.csv"), result)
    _write_provenance(args.out, "zones",
                      {"rtf_source": args.rtf_source, "n_mic": args.n_mic,
                       "trials": args.trials, "seed": int(args.seed)},
                      cfg_hash)
    return 0


def _cmd_import(args, cfg, cfg_hash):
    records, manifest = tensorio.import_measurements(args.manifest,
                                                     args.data_root)
    freqs = _freqs_from(cfg)
    tensor, available = tensorio.assemble_field_tensor(
        records, manifest, freqs, args.height, args.source)
    tensorio.write_tensor(args.out, tensor, available)
    _write_provenance(args.out, "import",
                      {"manifest": args.manifest, "height": args.height,
                       "source": args.source,
                       "n_available": available.n_mic}, cfg_hash)
    return 0


def _cmd_export_train(args, cfg, cfg_hash):
    args.split = args.split or "train=824,val=165,test=11"
    return _cmd_simulate(args, cfg, cfg_hash)


def _cmd_plot_data(args, cfg, cfg_hash):
    rows, header = [], None
    for path in args.inputs:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            file_header = next(reader)
            if header is None:
                header = file_header + ["input"]
            elif file_header + ["input"] != header:
                raise MeasurementError(
                    f"{path}: column mismatch with previous inputs")
            label = os.path.splitext(os.path.basename(path))[0]
            rows.extend(line + [label] for line in reader)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "plot_data.csv")
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    if args.svg:
        _render_svg(header, rows, os.path.join(args.out, args.svg))
    _write_provenance(args.out, "plot-data", {"inputs": args.inputs},
                      cfg_hash)
    return 0


def _render_svg(header, rows, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x_col, y_col = 0, 2 if "nmse_db" in header else 1
    fig, ax = plt.subplots()
    labels = sorted({row[-1] for row in rows})
    for label in labels:
        pts = [(float(r[x_col]), float(r[y_col])) for r in rows
               if r[-1] == label]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=label)
    ax.set_xlabel(header[x_col])
    ax.set_ylabel(header[y_col])
    ax.legend()
    fig.savefig(path, format="svg")
    plt.close(fig)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="roomfield",
        description="Sound field simulation, reconstruction, and sound zones")

    def common(sub, seed=True):
        sub.add_argument("--config", help="JSON config file")
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--threads", type=int, default=0,
                         help="worker threads (0 = auto; never affects results)")
        if seed:
            sub.add_argument("--seed", default=None,
                             help="master RNG seed (mandatory unless set via "
                                  f"{ENV_PREFIX}SEED)")

    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="generate a simulated dataset")
    common(p)
    p.add_argument("--family", choices=["extended", "original", "perturbed"])
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--split", help="e.g. train=824,val=165,test=11")
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("mask", help="draw sampling mask batches")
    common(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--n-mic", type=int, required=True)
    p.set_defaults(func=_cmd_mask)

    p = subs.add_parser("evaluate", help="NMSE between truth and estimate")
    common(p, seed=False)
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = subs.add_parser("sparse", help="sparse plane-wave reconstruction")
    common(p, seed=False)
    p.add_argument("--input", required=True, help="truth tensor directory")
    p.add_argument("--mask", help="standalone mask directory")
    p.set_defaults(func=_cmd_sparse)

    p = subs.add_parser("zones", help="bright/dark zone contrast experiment")
    common(p)
    p.add_argument("--rtf-source", choices=["true", "sparse", "tensor"],
                   default="true")
    p.add_argument("--n-mic", type=int, default=5)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--estimates", nargs="*",
                   help="estimate tensor dirs, one per loudspeaker")
    p.set_defaults(func=_cmd_zones)

    p = subs.add_parser("import", help="ingest measured impulse responses")
    common(p, seed=False)
    p.add_argument("--manifest", required=True)
    p.add_argument("--data-root")
    p.add_argument("--height", required=True)
    p.add_argument("--source", required=True)
    p.set_defaults(func=_cmd_import)

    p = subs.add_parser("export-train",
                        help="simulate dataset with train/val/test split")
    common(p)
    p.add_argument("--family", choices=["extended", "original", "perturbed"],
                   default="perturbed")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--split")
    p.set_defaults(func=_cmd_export_train)

    p = subs.add_parser("plot-data", help="merge result CSVs into tidy form")
    common(p, seed=False)
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--svg", help="also render a static SVG line chart")
    p.set_defaults(func=_cmd_plot_data)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    if hasattr(args, "seed"):
        _env_override(args, ["seed"])
        if args.seed is None:
            print("error: --seed is mandatory", file=sys.stderr)
            return 1

    if args.threads and args.threads > 0:
        try:
            import numba
            numba.set_num_threads(args.threads)
        except (ImportError, ValueError):
            pass

    try:
        cfg, cfg_hash = _load_config(args.config)
        return args.func(args, cfg, cfg_hash)
    except (TensorFormatError, MeasurementError, FileNotFoundError,
            ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
