"""Batch experiment runner.

Every subcommand reads flags (plus an optional JSON config file; flags
override the file), runs the corresponding library operation, and writes
machine-readable output named by a content hash of the resolved config, so
identical configs always map to identical files.  Exit codes: 0 success,
1 verify failure, 2 usage error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import multiprocessing
import sys
from pathlib import Path

import numpy as np

from . import balls, haar, percolation, quotient, renorm, rng
from .errors import ResourceCap
from .groups import builtin_spec

SCHEMA_VERSION = "1"


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Merge the JSON config file (if any) under explicit flags."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config.update(json.load(fh))
    for key, value in vars(args).items():
        if key in ("config", "func") or value is None:
            continue
        config[key] = value
    return config


def _out_path(config: dict, stem: str, suffix: str) -> Path:
    out_dir = Path(config.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.get("out"):
        return out_dir / config["out"]
    return out_dir / f"{stem}-{_config_hash(config)}{suffix}"


def _ints(csv_text: str) -> list[int]:
    return [int(tok) for tok in str(csv_text).split(",") if tok != ""]


def _floats(csv_text: str) -> list[float]:
    return [float(tok) for tok in str(csv_text).split(",") if tok != ""]


def _window_from(config: dict, spec) -> percolation.WindowSpec:
    text = config.get("window", "torus:64")
    kind, _, rest = str(text).partition(":")
    if kind == "torus":
        return percolation.WindowSpec.torus(int(rest))
    if kind == "ball":
        return percolation.WindowSpec.word_ball(int(rest))
    if kind == "box":
        lo_text, _, hi_text = rest.partition(":")
        return percolation.WindowSpec.box(_ints(lo_text), _ints(hi_text))
    raise ValueError(f"unknown window {text!r}")


# -- subcommands -------------------------------------------------------------


def cmd_ball(config: dict) -> int:
    spec = builtin_spec(config["group"])
    table = balls.enumerate_ball(spec, int(config["rmax"]))
    path = _out_path(config, "ball", ".csv")
    table.to_csv(path)
    print(f"ball: wrote {len(table.radii)} rows to {path}")
    return 0


def cmd_growth(config: dict) -> int:
    spec = builtin_spec(config["group"])
    table = balls.enumerate_ball(spec, int(config["rmax"]))
    fit = balls.fit_growth(table)
    path = _out_path(config, "growth", ".json")
    record = {"schema_version": SCHEMA_VERSION, **fit.to_json_dict()}
    path.write_text(json.dumps(record, sort_keys=True) + "\n")
    print(
        f"growth: degree {fit.fitted_degree}, c_S {fit.c_S:.6g} -> {path}"
    )
    return 0


def _region_from(config: dict) -> haar.Region:
    text = str(config.get("region", "unitcube"))
    if text == "unitcube":
        dim = int(config["dim"])
        return haar.Region.box([0.0] * dim, [1.0] * dim)
    if text == "unitcube-graded":
        dim = int(config["dim"])
        return haar.Region.box(
            [0.0] * dim, [1.0] * dim, coordinate_system="second_kind_graded"
        )
    if text.startswith("centered:"):
        return haar.Region.centered(float(text.split(":")[1]))
    raise ValueError(f"unknown region {text!r}")


def cmd_haar(config: dict) -> int:
    spec = builtin_spec(config["group"])
    config.setdefault("dim", spec.dim)
    region = _region_from(config)
    c_s = float(config.get("c_s", 1.0))
    rs = _floats(config["r"])
    est, counts = haar.measure_scan(spec, c_s, region, rs)
    path = _out_path(config, "haar", ".csv")
    est.to_csv(path, counts=counts)
    for (r, ratio), count in zip(est.ratios, counts):
        print(f"haar: r={r:g} count={count} ratio={ratio:.6f}")
    print(f"haar: wrote {path}")
    return 0


def cmd_lattice_count(config: dict) -> int:
    weights = _ints(config["weights"])
    region = haar.Region.box(_floats(config["lo"]), _floats(config["hi"]))
    d_prime = sum(weights)
    path = _out_path(config, "lattice-count", ".csv")
    with open(path, "w") as fh:
        fh.write("r,count,ratio\n")
        for r in _floats(config["r"]):
            count = haar.lattice_count_anisotropic(weights, region, r)
            ratio = count / r**d_prime
            fh.write(f"{r:g},{count},{ratio!r}\n")
            print(f"lattice-count: r={r:g} count={count} ratio={ratio:.6f}")
    print(f"lattice-count: wrote {path}")
    return 0


def _percolate_one(job):
    spec_doc, r, lam, window, seed, kind, c_s = job
    from .groups import GroupSpec

    spec = GroupSpec.from_json_dict(spec_doc)
    table = balls.enumerate_ball(spec, r, materialize=True)
    model = percolation.Model(kind=kind, r=r, lam=lam, c_S=c_s)
    sample = percolation.sample_spread_out(spec, table, model, window, seed)
    report = percolation.cluster_stats(sample)
    return {
        "schema_version": SCHEMA_VERSION,
        "model": kind,
        "r": r,
        "lambda": lam,
        "seed": seed,
        **report.to_json_dict(),
    }


def cmd_percolate(config: dict) -> int:
    spec = builtin_spec(config["group"])
    window = _window_from(config, spec)
    r = int(config["r"])
    lam = float(config["lam"])
    kind = config.get("model", "word_metric")
    c_s = config.get("c_s")
    master = int(config.get("seed", 0))
    n_seeds = int(config.get("seeds", 1))
    jobs = int(config.get("jobs", 1))
    work = [
        (spec.to_json_dict(), r, lam, window, rng.derive_seed(master, i), kind, c_s)
        for i in range(n_seeds)
    ]
    if jobs > 1:
        with multiprocessing.Pool(jobs) as pool:
            records = pool.map(_percolate_one, work)
    else:
        records = [_percolate_one(w) for w in work]
    path = _out_path(config, "percolate", ".jsonl")
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    giants = [rec["giant_fraction"] for rec in records]
    print(
        f"percolate: {n_seeds} seeds, giant fraction "
        f"mean {np.mean(giants):.4f} -> {path}"
    )
    return 0


def cmd_pc_scan(config: dict) -> int:
    spec = builtin_spec(config["group"])
    window = _window_from(config, spec)
    r = int(config["r"])
    master = int(config.get("seed", 0))
    seeds = [rng.derive_seed(master, i) for i in range(int(config.get("seeds", 15)))]
    table = balls.enumerate_ball(spec, r, materialize=True)
    lam_c = percolation.estimate_lambda_c(
        spec,
        table,
        config.get("model", "word_metric"),
        r,
        window,
        seeds,
        theta=float(config.get("theta", 0.1)),
        tol=float(config.get("tol", 0.05)),
        c_S=config.get("c_s"),
    )
    path = _out_path(config, "pc-scan", ".json")
    record = {
        "schema_version": SCHEMA_VERSION,
        "group": config["group"],
        "r": r,
        "lambda_c": lam_c,
    }
    path.write_text(json.dumps(record, sort_keys=True) + "\n")
    print(f"pc-scan: lambda_c ~= {lam_c:.4f} -> {path}")
    return 0


def cmd_renorm(config: dict) -> int:
    spec = builtin_spec(config["group"])
    cfg = renorm.RenormConfig.for_spec(
        spec,
        N=int(config["n"]),
        alpha=float(config.get("alpha", 0.5)),
        lattice_extent=int(config.get("extent", 8)),
        samples_per_edge=int(config.get("samples", 200)),
    )
    report = renorm.renormalize(
        spec,
        cfg,
        int(config["r"]),
        float(config["lam"]),
        int(config.get("seed", 0)),
    )
    grid_path = _out_path(config, "renorm", ".grid")
    renorm.write_grid(grid_path, report)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "p_open_mean": report.p_open_mean,
        "correlation": report.correlation,
        "overlap": report.overlap,
        "header": report.header,
    }
    json_path = grid_path.with_suffix(".json")
    json_path.write_text(json.dumps(summary, sort_keys=True) + "\n")
    print(
        f"renorm: P(X(e)) mean {report.p_open_mean:.4f}, "
        f"chi2 p={report.correlation['chi2_pvalue']:.4f} -> {grid_path}"
    )
    return 0


def cmd_couple(config: dict) -> int:
    length = int(config.get("length", 64))
    q = quotient.ladder_quotient(length)
    p = float(config["p"])
    r = int(config.get("r", 1))
    master = int(config.get("seed", 0))
    trials = int(config.get("trials", 100))
    root = (length // 2, 0)
    path = _out_path(config, "couple", ".jsonl")
    opened = 0
    steps = 0
    with open(path, "w") as fh:
        for i in range(trials):
            trace = quotient.coupled_quotient_exploration(
                q, r, p, root, rng.derive_seed(master, i)
            )
            for step in trace.steps:
                steps += 1
                opened += bool(step["open"])
                record = {
                    "schema_version": SCHEMA_VERSION,
                    "trial": i,
                    "edge": list(step["edge"]),
                    "open": bool(step["open"]),
                    "n_trials": len(step["trials"]),
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    rate = opened / steps if steps else 0.0
    expected = 1 - (1 - p) ** q.k
    print(
        f"couple: open rate {rate:.4f} over {steps} steps "
        f"(law {expected:.4f}) -> {path}"
    )
    return 0


def cmd_verify(config: dict) -> int:
    """Curated deterministic suite; writes byte-stable data files and exits
    nonzero on any failed check."""
    out_dir = Path(config.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = []

    def check(name, ok):
        print(f"verify: {'PASS' if ok else 'FAIL'} {name}")
        if not ok:
            failures.append(name)

    heis = builtin_spec("heisenberg3")
    z2 = builtin_spec("z2")

    table = balls.enumerate_ball(heis, 8)
    table.to_csv(out_dir / "verify-ball.csv")
    check("heisenberg ball table rows", len(table.radii) == 9)
    check("heisenberg beta(1) = 5", table.beta(1) == 5)

    region = haar.Region.box([0, 0], [1, 1])
    counts = [haar.lattice_count_anisotropic((1, 2), region, r) for r in (10, 100)]
    with open(out_dir / "verify-lattice-count.csv", "w") as fh:
        fh.write("r,count\n")
        for r, c in zip((10, 100), counts):
            fh.write(f"{r},{c}\n")
    check("anisotropic counts closed form",
          counts == [11 * 101, 101 * 10001])

    graded_box = haar.Region.box(
        [0, 0, 0], [1, 1, 1], coordinate_system="second_kind_graded"
    )
    est, haar_counts = haar.measure_scan(heis, 1.0, graded_box, [5, 10])
    est.to_csv(out_dir / "verify-haar.csv", counts=haar_counts)
    check("haar ratio moves toward 1",
          abs(est.ratios[1][1] - 1) < abs(est.ratios[0][1] - 1))

    z2_table = balls.enumerate_ball(z2, 1, materialize=True)
    model = percolation.Model(kind="word_metric", r=1, lam=2.0)
    window = percolation.WindowSpec.torus(32)
    records = []
    for i in range(3):
        sample = percolation.sample_spread_out(
            z2, z2_table, model, window, rng.derive_seed(7, i)
        )
        records.append(percolation.cluster_stats(sample).to_json_dict())
    with open(out_dir / "verify-percolate.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(
                {"schema_version": SCHEMA_VERSION, **rec}, sort_keys=True
            ) + "\n")
    check("percolation reproducible seeds",
          all(rec["n_vertices"] == 1024 for rec in records))

    q = quotient.ladder_quotient(32)
    trace = quotient.coupled_quotient_exploration(q, 1, 0.5, (16, 0), 11)
    trace.to_json_lines(out_dir / "verify-couple.jsonl")
    check("coupling witness soundness",
          quotient.trace_witness_sound(q, trace))

    cfg = renorm.RenormConfig.for_spec(z2, N=4, alpha=0.5,
                                       lattice_extent=4, samples_per_edge=20)
    report = renorm.renormalize(z2, cfg, 2, 1.5, 3)
    renorm.write_grid(out_dir / "verify-renorm.grid", report)
    check("renorm translates all disjoint",
          report.overlap["certified_disjoint"] == report.overlap["offsets_checked"])
    check("renorm states shape",
          report.states.shape == (20, len(report.edges)))

    if failures:
        print(f"verify: {len(failures)} check(s) failed")
        return 1
    print("verify: all checks passed")
    return 0


# -- entry point -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nilperc",
        description="Spread-out percolation on nilpotent Cayley graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **flags):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (flags override)")
        p.add_argument("--out", help="explicit output filename")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")
        for flag, kwargs in flags.items():
            p.add_argument(flag, **kwargs)
        p.set_defaults(func=func)
        return p

    add("ball", cmd_ball,
        **{"--group": {}, "--rmax": {"type": int}})
    add("growth", cmd_growth,
        **{"--group": {}, "--rmax": {"type": int}})
    add("haar", cmd_haar,
        **{"--group": {}, "--region": {}, "--r": {},
           "--c-s": {"dest": "c_s", "type": float}})
    add("lattice-count", cmd_lattice_count,
        **{"--weights": {}, "--lo": {}, "--hi": {}, "--r": {}})
    add("percolate", cmd_percolate,
        **{"--group": {}, "--r": {"type": int}, "--lam": {"type": float},
           "--window": {}, "--seeds": {"type": int}, "--seed": {"type": int},
           "--model": {}, "--c-s": {"dest": "c_s", "type": float},
           "--jobs": {"type": int}})
    add("pc-scan", cmd_pc_scan,
        **{"--group": {}, "--r": {"type": int}, "--window": {},
           "--seeds": {"type": int}, "--seed": {"type": int},
           "--theta": {"type": float}, "--tol": {"type": float},
           "--model": {}, "--c-s": {"dest": "c_s", "type": float}})
    add("renorm", cmd_renorm,
        **{"--group": {}, "--n": {"type": int}, "--alpha": {"type": float},
           "--extent": {"type": int}, "--samples": {"type": int},
           "--r": {"type": int}, "--lam": {"type": float},
           "--seed": {"type": int}})
    add("couple", cmd_couple,
        **{"--length": {"type": int}, "--p": {"type": float},
           "--r": {"type": int}, "--trials": {"type": int},
           "--seed": {"type": int}})
    add("verify", cmd_verify)
    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    config = _resolve(args, parser)
    try:
        return args.func(config)
    except ResourceCap as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
