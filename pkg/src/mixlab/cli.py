"""The ``mixlab`` command line; :func:`build_parser` lists the subcommands.

Exit codes: 0 success (all assertions pass), 1 an assertion failed,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import constructions as cons
from .chain import build_chain
from .distances import ALL, continuous_profiles, distance_profiles
from .experiments import DEFAULTS, RUNNERS, UnknownExperiment, config_hash, run_experiment
from .network import NetworkError, load_network, save_network

log = logging.getLogger("mixlab")

# family -> (builder, {param: type})
FAMILIES = {
    "example33": (cons.biased_double_path, {"n": int}),
    "theorem1": (cons.bottleneck_branches, {"n": int, "delta": float, "s": int}),
    "theorem2a": (cons.decorated_tree, {"k": int, "C": int, "torus": int, "depth": int, "threshold_scale": float,
                                        "degree": int, "seed": int, "gap": float}),
    "theorem2b1": (cons.decorated_tree, {"k": int, "C": int, "torus": int, "depth": int, "threshold_scale": float,
                                         "degree": int, "seed": int, "gap": float}),
    "theorem2b2": (cons.decorated_tree_blocks, {"block": int, "m": float, "r": int, "torus": int, "K": float,
                                                "exclude_descendants": int, "degree": int, "seed": int,
                                                "gap": float}),
    "theorem2c": (cons.lumped_stretched_pair, {"k": int, "C": int, "torus": int, "depth": int,
                                               "threshold_scale": float, "degree": int, "seed": int,
                                               "gap": float}),
    "theorem3": (cons.escape_tree, {"s": int, "m": int, "b": float, "depth_budget": int, "degree": int,
                                    "seed": int, "gap": float}),
    "torus3d": (cons.torus3d, {"side": int}),
    "expander": (cons.random_regular_expander, {"n": int, "d": int, "seed": int, "gap": float}),
}
# command-line names that differ from the builder's keyword
RENAMES = {"torus": "torus_side", "depth": "depth_override", "gap": "gap_threshold"}
DEFAULT_PARAMS = {"theorem2a": {"k": 2}, "theorem2b1": {"k": 2}, "theorem2c": {"k": 2},
                  "expander": {"seed": 0, "gap": 0.01}, "theorem3": {"degree": 5}}


class UsageError(Exception):
    pass


def _read_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# build ---------------------------------------------------------------------------------

def cmd_build(args) -> int:
    builder, types = FAMILIES[args.family]
    params = dict(DEFAULT_PARAMS.get(args.family, {}))
    params.update(_read_config(args.config).get("params", {}))
    params.update(_parse_set(args.set))
    for key in list(params):
        if key not in types:
            raise UsageError(f"family {args.family} has no parameter {key!r}; known: {', '.join(types)}")
        try:
            params[key] = types[key](params[key])
        except (TypeError, ValueError):
            raise UsageError(f"parameter {key!r} must be {types[key].__name__}") from None
    kwargs = {RENAMES.get(k, k): v for k, v in params.items()}
    if args.family == "theorem2b2" and "exclude_descendants" in kwargs:
        kwargs["exclude_descendants"] = bool(kwargs["exclude_descendants"])
    if args.family == "theorem3":
        kwargs.setdefault("expander", None)
    if args.family in ("theorem2a", "theorem2b1", "theorem2c") and "depth_override" not in kwargs:
        kwargs["depth_override"] = 4 * kwargs["k"]
    config = {"command": "build", "family": args.family, "params": params}
    h = config_hash(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    result = builder(**kwargs)
    nets = ({"stretched": result[0], "lumped": result[1]} if isinstance(result, tuple) else {"": result})
    for tag, net in nets.items():
        if args.family == "theorem2b1":
            net = net.with_metadata(family="theorem2b1")
        net = net.with_metadata(config_hash=h)
        path = out if not tag else out.with_name(f"{out.stem}.{tag}{out.suffix or '.json'}")
        save_network(net, path)
        meta = {"config": config, "config_hash": h, "metadata": net.metadata,
                "vertices": net.n_vertices, "edges": net.n_edges}
        path.with_name(path.stem + ".meta.json").write_text(_dump(meta))
        log.info("build %s config_hash=%s wrote %s", args.family, h, path)
        print(f"wrote {path} ({net.n_vertices} vertices, {net.n_edges} edges)")
    return 0


# profile ---------------------------------------------------------------------------------

def _id_list(text: str | None):
    if text is None or text == ALL:
        return ALL
    return [s for s in text.split(",") if s]


def cmd_profile(args) -> int:
    file_cfg = _read_config(args.config)
    opts = {"kind": "tv", "holding": 0.5, "starts": ALL, "targets": ALL, "t_max": 100, "grid": None}
    opts.update(file_cfg)
    for key in opts:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if opts["kind"] not in ("tv", "sep", "l2"):
        raise UsageError(f"unknown profile kind {opts['kind']!r}")
    net = load_network(args.network)
    chain = build_chain(net, float(opts["holding"]))
    starts, targets = _id_list(opts["starts"]), _id_list(opts["targets"])
    config = {"command": "profile", "network": Path(args.network).name,
              "network_hash": net.metadata.get("config_hash"), **opts}
    if opts["grid"] is not None:
        grid = [float(x) for x in str(opts["grid"]).split(",")] if isinstance(opts["grid"], str) else opts["grid"]
        if opts["kind"] == "l2":
            raise UsageError("continuous profiles support kinds tv and sep")
        prof = continuous_profiles(chain, grid, starts=starts, targets=targets)[opts["kind"]]
    else:
        prof = distance_profiles(chain, int(opts["t_max"]), starts, targets, kinds=(opts["kind"],))[opts["kind"]]
    h = config_hash(config)
    log.info("profile %s kind=%s config_hash=%s", args.network, opts["kind"], h)
    text = f"# config_hash={h}\n" + prof.to_csv()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# experiment --------------------------------------------------------------------------------

def _table_csv(h: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def cmd_experiment(args) -> int:
    if args.name == "list":
        for name in sorted(RUNNERS):
            print(name)
        return 0
    overrides = _read_config(args.config)
    overrides.update(_parse_set(args.set))
    try:
        rep = run_experiment(args.name, overrides)
    except UnknownExperiment as exc:
        raise UsageError(str(exc)) from None
    out = rep.to_dict()
    log.info("experiment %s config_hash=%s status=%s", rep.name, out["config_hash"], out["status"])
    for a in out["assertions"]:
        print(f"{a['status']} {a['name']}")
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{rep.name}.json").write_text(_dump(out))
        for tname, (header, rows) in rep.tables.items():
            (d / f"{rep.name}-{tname}.csv").write_text(_table_csv(out["config_hash"], header, rows))
    print(f"{out['status']} {rep.name}")
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixlab", description="Mixing-time experiments on weighted networks.")
    p.add_argument("--log", help="append timestamped log lines to this file")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="generate a network family")
    b.add_argument("family", choices=sorted(FAMILIES))
    b.add_argument("--out", required=True, help="network JSON path")
    b.add_argument("--config", help='JSON file with {"params": {...}}')
    b.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override (repeatable)")
    for name in sorted({k for _, t in FAMILIES.values() for k in t}):
        b.add_argument(f"--{name.replace('_', '-')}", dest=f"flag_{name}", metavar="V")
    b.set_defaults(func=cmd_build)

    pr = sub.add_parser("profile", help="distance-to-stationarity profile of a network's walk")
    pr.add_argument("network")
    pr.add_argument("--kind", choices=["tv", "sep", "l2"])
    pr.add_argument("--holding", type=float, help="holding probability (default 0.5)")
    pr.add_argument("--grid", help="comma-separated continuous times (switches to continuous time)")
    pr.add_argument("--starts", help="comma-separated start vertices or ALL")
    pr.add_argument("--targets", help="comma-separated target vertices for separation, or ALL")
    pr.add_argument("--t-max", dest="t_max", type=int)
    pr.add_argument("--config")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_profile)

    e = sub.add_parser("experiment", help="run a named experiment suite ('list' shows names)")
    e.add_argument("name")
    e.add_argument("--config", help="JSON file of parameter overrides")
    e.add_argument("--set", action="append", metavar="KEY=VALUE")
    e.add_argument("--out", help="directory for the report JSON and CSV tables")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log:
        logging.basicConfig(filename=args.log, level=logging.INFO,
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.command == "build":
        args.set = list(args.set or []) + [f"{k[5:]}={v}" for k, v in sorted(vars(args).items())
                                           if k.startswith("flag_") and v is not None]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mixlab: error: {exc}", file=sys.stderr)
        return 2
    except (cons.ConstructionError, NetworkError, ValueError) as exc:
        print(f"mixlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
