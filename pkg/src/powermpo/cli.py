"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 resource guard.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import instances
from .baselines import brute_force, frontier_solve, simulated_annealing
from .errors import NumericalError, ResourceGuardError, ValidationError
from .sampler import summary as sample_summary
from .solver import solve

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_RESOURCE = 0, 2, 3, 4
THREADS_ENV = "POWERMPO_THREADS"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _emit(obj, path: str | None) -> None:
    text = _dump(obj) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str) -> instances.ProblemInstance:
    if not Path(path).is_file():
        raise ValidationError(f"instance file not found: {path}")
    return instances.load(path)


def _config_str(z) -> str:
    return "".join(str(int(v)) for v in z)


def cmd_generate(args) -> int:
    out = Path(args.out)
    if out.exists() and not args.force:
        raise ValidationError(f"{out} exists; pass --force to overwrite")
    if args.family == "hypercubic":
        inst = instances.gen_hypercubic(args.dim, args.size, args.seed, args.boundary)
    else:
        inst = instances.gen_heavyhex(args.size, args.seed)
    instances.save(inst, out)
    print(f"wrote {inst.family} instance with {inst.num_sites} sites to {out}", file=sys.stderr)
    return EXIT_OK


def _parse_lambda(text: str) -> float | None:
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"--lambda must be 'auto' or a number, got {text!r}") from None
    if value < 0:
        raise ValidationError("--lambda must be non-negative")
    return value


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    result = solve(
        inst,
        chi=args.chi,
        eps=args.eps,
        schedule=args.schedule,
        steps=args.steps,
        samples=args.samples,
        seed=args.seed,
        lam=_parse_lambda(args.lam),
        optimum=args.optimum,
        exact=not args.no_exact,
        mode=args.mode,
        checkpoint_samples=not args.final_only,
    )
    if args.samples_out:
        result.samples.write_jsonl(args.samples_out)
    if args.trace:
        result.trace.write_csv(args.trace)
    _emit(result.summary, args.summary)
    return EXIT_OK


def cmd_exact(args) -> int:
    inst = _load(args.instance)
    if args.method == "brute":
        try:
            res = brute_force(inst.cost)
        except ResourceGuardError as exc:
            raise ResourceGuardError(f"{exc}; retry with --method frontier") from None
    else:
        res = frontier_solve(inst.cost)
    example = res.example()
    _emit(
        {
            "instance": inst.digest(),
            "method": args.method,
            "optimum": res.optimum,
            "degeneracy": res.degeneracy,
            "example": None if example is None else _config_str(example),
        },
        args.summary,
    )
    return EXIT_OK


def cmd_sa(args) -> int:
    inst = _load(args.instance)
    samples = simulated_annealing(
        inst.cost, args.sweeps, args.beta_min, args.beta_max, args.restarts, args.seed
    )
    if args.samples_out:
        samples.write_jsonl(args.samples_out)
    out = sample_summary(samples, args.optimum)
    out.update(
        instance=inst.digest(), sweeps=args.sweeps, beta_min=args.beta_min,
        beta_max=args.beta_max, restarts=args.restarts, seed=args.seed,
    )
    _emit(out, args.summary)
    return EXIT_OK


MANIFEST_KEYS = {"cells", "seeds", "chi", "schedules", "steps", "samples", "eps", "sample_seed"}


def read_manifest(path: str) -> dict:
    """Validate a bench manifest.

    ``{"cells": [{"family": "hypercubic", "dim": 2, "size": 10}, ...],
       "seeds": [0, 1, 2, 3, 4], "chi": [16], "schedules": ["linear"],
       "steps": 11, "samples": 1000, "eps": 1e-15, "sample_seed": 0}``
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read manifest {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("manifest must be a JSON object")
    unknown = set(data) - MANIFEST_KEYS
    if unknown:
        raise ValidationError(f"unknown manifest keys: {sorted(unknown)}")
    for key in ("cells", "seeds", "chi", "schedules"):
        if not isinstance(data.get(key), list) or not data[key]:
            raise ValidationError(f"manifest field {key!r} must be a non-empty list")
    for cell in data["cells"]:
        if not isinstance(cell, dict) or cell.get("family") not in ("hypercubic", "heavyhex"):
            raise ValidationError(f"bad cell {cell!r}")
        if "size" not in cell or (cell["family"] == "hypercubic" and "dim" not in cell):
            raise ValidationError(f"cell {cell!r} lacks size/dim")
    for s in data["schedules"]:
        if s not in ("linear", "doubling"):
            raise ValidationError(f"unknown schedule {s!r}")
    for c in data["chi"]:
        if not isinstance(c, int) or c < 1:
            raise ValidationError(f"chi values must be positive integers, got {c!r}")
    data.setdefault("steps", 11)
    data.setdefault("samples", 1000)
    data.setdefault("eps", 1e-15)
    data.setdefault("sample_seed", 0)
    return data


def run_bench(manifest: dict, threads: int = 1) -> tuple[list[dict], list[dict]]:
    """Run the grid; return per-cell rows (mean/std of max-AR) and per-instance rows."""
    jobs = []
    for cell in manifest["cells"]:
        for schedule in manifest["schedules"]:
            for chi in manifest["chi"]:
                for seed in manifest["seeds"]:
                    jobs.append((cell, schedule, chi, seed))

    def work(job):
        cell, schedule, chi, seed = job
        params = {k: v for k, v in cell.items() if k != "family"}
        inst = instances.generate(cell["family"], seed, **params)
        res = solve(
            inst, chi=chi, eps=manifest["eps"], schedule=schedule, steps=manifest["steps"],
            samples=manifest["samples"], seed=manifest["sample_seed"],
        )
        ars = [c["ar"] for c in res.summary["checkpoints"] if c["m"] and c["ar"] is not None]
        return {
            "family": cell["family"], "dim": cell.get("dim", ""), "size": cell["size"],
            "schedule": schedule, "chi": chi, "seed": seed,
            "optimum": res.summary["optimum"], "max_ar": max(ars) if ars else None,
            "peak_entropy": res.summary["peak_entropy"],
        }

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            per_instance = list(pool.map(work, jobs))
    else:
        per_instance = [work(j) for j in jobs]

    cells: dict[tuple, list[float]] = {}
    for row in per_instance:
        key = (row["family"], row["dim"], row["size"], row["schedule"], row["chi"])
        cells.setdefault(key, []).append(row["max_ar"])
    summary_rows = []
    for (family, dim, size, schedule, chi), ars in cells.items():
        vals = np.array([a for a in ars if a is not None], dtype=float)
        summary_rows.append({
            "family": family, "dim": dim, "size": size, "schedule": schedule, "chi": chi,
            "n_instances": len(vals),
            "ar_mean": float(vals.mean()) if vals.size else "",
            "ar_std": float(vals.std()) if vals.size else "",
        })
    return summary_rows, per_instance


def _write_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def cmd_bench(args) -> int:
    manifest = read_manifest(args.manifest)
    threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    rows, per_instance = run_bench(manifest, threads)
    _write_csv(rows, args.out)
    if args.per_instance:
        _write_csv(per_instance, args.per_instance)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powermpo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a benchmark instance as JSON")
    gen.add_argument("family", choices=["hypercubic", "heavyhex"])
    gen.add_argument("--dim", type=int, default=2)
    gen.add_argument("--size", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--boundary", choices=["open", "periodic"], default="open")
    gen.add_argument("-o", "--out", default=None)
    gen.add_argument("--force", action="store_true")
    gen.set_defaults(func=cmd_generate)

    sol = sub.add_parser("solve", help="powered-MPO solve of an instance")
    sol.add_argument("instance")
    sol.add_argument("--chi", type=int, default=16)
    sol.add_argument("--eps", type=float, default=1e-15)
    sol.add_argument("--schedule", choices=["linear", "doubling"], default="linear")
    sol.add_argument("--steps", type=int, default=11, help="final power is K = 2**steps")
    sol.add_argument("--samples", type=int, default=1000)
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--lambda", dest="lam", default="auto")
    sol.add_argument("--mode", choices=["minimize", "maximize"], default="minimize")
    sol.add_argument("--optimum", type=float, default=None)
    sol.add_argument("--no-exact", action="store_true", help="skip the exact reference solve")
    sol.add_argument("--final-only", action="store_true", help="sample only the final power")
    sol.add_argument("--trace", default=None, help="CSV of per-checkpoint diagnostics")
    sol.add_argument("--samples-out", default=None, help="JSON-lines of final samples")
    sol.add_argument("--summary", default=None, help="summary JSON path (default stdout)")
    sol.set_defaults(func=cmd_solve)

    ex = sub.add_parser("exact", help="exact ground state of an instance")
    ex.add_argument("instance")
    ex.add_argument("--method", choices=["brute", "frontier"], default="brute")
    ex.add_argument("--summary", default=None)
    ex.set_defaults(func=cmd_exact)

    sa = sub.add_parser("sa", help="simulated annealing baseline")
    sa.add_argument("instance")
    sa.add_argument("--sweeps", type=int, default=1000)
    sa.add_argument("--beta-min", type=float, default=0.1)
    sa.add_argument("--beta-max", type=float, default=10.0)
    sa.add_argument("--restarts", type=int, default=100)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--optimum", type=float, default=None)
    sa.add_argument("--samples-out", default=None)
    sa.add_argument("--summary", default=None)
    sa.set_defaults(func=cmd_sa)

    bench = sub.add_parser("bench", help="run a manifest grid and write per-cell AR mean and std as CSV")
    bench.add_argument("manifest")
    bench.add_argument("-o", "--out", required=True)
    bench.add_argument("--per-instance", default=None)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "generate" and args.out is None:
        tag = f"d{args.dim}_" if args.family == "hypercubic" else ""
        args.out = f"{args.family}_{tag}L{args.size}_s{args.seed}.json"
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
