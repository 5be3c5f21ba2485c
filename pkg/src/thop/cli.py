"""Command-line surface: single runs, sweeps, oracle, verification, exports.

Subcommands: solve, sweep, oracle, verify, export-model, aggregate, plot-data.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .aco import LOCAL_SEARCH_KINDS, PARAM_DOMAINS, AcoParams
from .bounds import BruteForceGuardError, NoFeasibleRouteError, brute_force_solve
from .evaluation import PackingPlan, evaluate, format_solution, parse_solution
from .instance import Instance, load_instance, to_op_instance
from .minlp import export_model, lift_solution, verify
from .packing import PackingParams
from .solver import STATUS_OK, SolverConfig, solve

RESULT_FIELDS = ["key", "instance", "seed", "profit", "travel_time", "elapsed", "iterations", "status", "params"]


@dataclass(frozen=True)
class RunResult:
    instance: str
    seed: int
    profit: float
    travel_time: float
    elapsed: float
    iterations: int
    status: str
    params: dict
    key: str

    def row(self) -> dict:
        return {
            "key": self.key,
            "instance": self.instance,
            "seed": self.seed,
            "profit": self.profit,
            "travel_time": self.travel_time,
            "elapsed": round(self.elapsed, 3),
            "iterations": self.iterations,
            "status": self.status,
            "params": json.dumps(self.params, sort_keys=True),
        }


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("THOP_THREADS", "1")))
    except ValueError:
        return 1


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--budget", type=float, default=None, help="seconds; default ceil(0.1*m)")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--threads", type=int, default=None, help="default $THOP_THREADS or 1")
    p.add_argument("--ants", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--localsearch", choices=LOCAL_SEARCH_KINDS, default=None)
    p.add_argument("--ptries", type=int, default=None)
    p.add_argument("--pack-exponents", type=str, default=None, metavar="A,B,C")
    p.add_argument("--pack-width", type=float, default=None)
    p.add_argument("--params-file", type=Path, default=None, help="key=value defaults, overridden by flags")
    p.add_argument("--op-mode", action="store_true", help="apply the constant-speed/unbounded-knapsack transform")


def _parse_params_file(path: Path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: malformed line {line!r} (expected key=value)")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _warn_domains(aco: AcoParams, packing: PackingParams) -> None:
    if aco.ants not in PARAM_DOMAINS["ants"]:
        print(f"warning: ants={aco.ants} outside the tuned domain {PARAM_DOMAINS['ants']}", file=sys.stderr)
    for name, value in (("alpha", aco.alpha), ("beta", aco.beta)):
        lo, hi = PARAM_DOMAINS[name]
        if not (lo <= value <= hi):
            print(f"warning: {name}={value} outside [{lo}, {hi}]", file=sys.stderr)
    lo, hi = PARAM_DOMAINS["ptries"]
    if not (lo <= packing.ptries <= hi):
        print(f"warning: ptries={packing.ptries} outside [{lo}, {hi}]", file=sys.stderr)


def _build_config(args, file_params: Optional[Dict[str, str]] = None) -> SolverConfig:
    merged: Dict[str, str] = dict(file_params or {})
    for key in ("ants", "alpha", "beta", "rho", "localsearch", "ptries", "pack_width"):
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = str(flag)
    if args.pack_exponents is not None:
        merged["pack_exponents"] = args.pack_exponents

    aco_kwargs = {}
    if "ants" in merged:
        aco_kwargs["ants"] = int(merged["ants"])
    if "alpha" in merged:
        aco_kwargs["alpha"] = float(merged["alpha"])
    if "beta" in merged:
        aco_kwargs["beta"] = float(merged["beta"])
    if "rho" in merged:
        aco_kwargs["rho"] = float(merged["rho"])
    if "localsearch" in merged:
        aco_kwargs["localsearch"] = merged["localsearch"]
    pack_kwargs = {}
    if "ptries" in merged:
        pack_kwargs["ptries"] = int(merged["ptries"])
    if "pack_width" in merged:
        pack_kwargs["perturbation_width"] = float(merged["pack_width"])
    if "pack_exponents" in merged:
        parts = [float(tok) for tok in merged["pack_exponents"].split(",")]
        if len(parts) != 3:
            raise ValueError(f"pack_exponents needs exactly A,B,C, got {merged['pack_exponents']!r}")
        pack_kwargs["base_exponents"] = tuple(parts)

    aco = AcoParams(**aco_kwargs)
    packing = PackingParams(**pack_kwargs)
    _warn_domains(aco, packing)
    threads = args.threads if args.threads is not None else _default_threads()
    return SolverConfig(
        aco=aco,
        packing=packing,
        time_budget=args.budget,
        seed=args.seed,
        threads=threads,
        max_iterations=args.max_iterations,
    )


def _load_for_run(path: Path, op_mode: bool) -> Instance:
    inst = load_instance(path)
    return to_op_instance(inst) if op_mode else inst


def _run_key(instance_path: Path, seed: int, cfg: SolverConfig) -> str:
    h = hashlib.sha256()
    h.update(instance_path.read_bytes())
    h.update(str(seed).encode())
    h.update(json.dumps(cfg.params_dict(), sort_keys=True).encode())
    h.update(str(cfg.time_budget or "").encode())
    h.update(str(cfg.max_iterations or "").encode())
    return h.hexdigest()[:16]


def _execute_run(instance_path: Path, cfg: SolverConfig, op_mode: bool, out_dir: Optional[Path]) -> RunResult:
    inst = _load_for_run(instance_path, op_mode)
    sol, log = solve(inst, cfg)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"{instance_path.stem}_seed{cfg.seed}"
        if sol is not None:
            (out_dir / f"{stem}.sol").write_text(format_solution(sol.route, sol.plan))
        (out_dir / f"{stem}.log.jsonl").write_text(log.to_json_lines())
    return RunResult(
        instance=instance_path.stem,
        seed=cfg.seed,
        profit=float(sol.profit) if sol else 0.0,
        travel_time=float(sol.travel_time) if sol else 0.0,
        elapsed=log.elapsed,
        iterations=log.iterations,
        status=log.status,
        params=cfg.params_dict(),
        key=_run_key(instance_path, cfg.seed, cfg),
    )


# ---- subcommands ---------------------------------------------------------------


def cmd_solve(args) -> int:
    file_params = _parse_params_file(args.params_file) if args.params_file else None
    cfg = _build_config(args, file_params)
    result = _execute_run(args.instance, cfg, args.op_mode, args.out)
    if result.status != STATUS_OK:
        print(f"{result.instance} seed={result.seed} no feasible route")
        return 1
    print(
        f"{result.instance} seed={result.seed} profit={result.profit:g} "
        f"time={result.travel_time:.3f} elapsed={result.elapsed:.2f}s"
    )
    return 0


def _group_profile(profiles_dir: Optional[Path], instance_path: Path) -> Optional[Dict[str, str]]:
    if profiles_dir is None:
        return None
    from .instance import InstanceId

    try:
        group = InstanceId.from_name(instance_path.stem).group
    except ValueError:
        group = instance_path.stem
    candidate = profiles_dir / f"{group}.params"
    return _parse_params_file(candidate) if candidate.exists() else None


def cmd_sweep(args) -> int:
    instances = [Path(p) for p in args.instances]
    seeds = list(range(1, args.seeds + 1))
    out_csv: Path = args.out
    out_csv.parent.mkdir(parents=True, exist_ok=True)

    done_keys = set()
    if out_csv.exists():
        with out_csv.open() as fh:
            done_keys = {row["key"] for row in csv.DictReader(fh)}

    jobs = []
    for path in instances:
        profile = _group_profile(args.profiles, path)
        for seed in seeds:
            ns = argparse.Namespace(**vars(args))
            ns.seed = seed
            cfg = _build_config(ns, profile)
            key = _run_key(path, seed, cfg)
            if key in done_keys:
                continue
            jobs.append((path, cfg))

    new_file = not out_csv.exists()
    mode = "a" if out_csv.exists() else "w"
    written = 0
    with out_csv.open(mode, newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        if new_file:
            writer.writeheader()
        sol_dir = args.solutions
        if args.workers > 1:
            with ThreadPoolExecutor(max_workers=args.workers) as pool:
                futures = [pool.submit(_execute_run, path, cfg, args.op_mode, sol_dir) for path, cfg in jobs]
                for fut in as_completed(futures):
                    writer.writerow(fut.result().row())
                    fh.flush()
                    written += 1
        else:
            for path, cfg in jobs:
                writer.writerow(_execute_run(path, cfg, args.op_mode, sol_dir).row())
                fh.flush()
                written += 1
    print(f"sweep: {written} new runs, {len(done_keys)} already present -> {out_csv}")
    return 0


def cmd_oracle(args) -> int:
    inst = _load_for_run(args.instance, args.op_mode)
    try:
        sol = brute_force_solve(inst, guard_n=args.guard_n, guard_m=args.guard_m)
    except BruteForceGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoFeasibleRouteError:
        print(f"{args.instance.stem} no feasible route")
        return 1
    if args.out is not None:
        args.out.write_text(format_solution(sol.route, sol.plan))
    print(f"{args.instance.stem} optimum profit={sol.profit:g} time={sol.travel_time:.3f}")
    return 0


def cmd_verify(args) -> int:
    inst = _load_for_run(args.instance, args.op_mode)
    route, picks = parse_solution(args.solution.read_text())
    plan = PackingPlan.from_picks(inst, picks)
    ev = evaluate(inst, route, plan, strict=False)
    if not ev.feasible:
        print(f"infeasible: {ev.infeasibility}")
        return 1
    report = verify(inst, lift_solution(inst, route, plan), eps=args.eps)
    print(report.summary())
    print(f"profit={ev.profit:g} time={ev.travel_time:.6f} (raw t<=T: {ev.travel_time <= inst.T})")
    return 0 if report.ok else 1


def cmd_export_model(args) -> int:
    inst = _load_for_run(args.instance, args.op_mode)
    text = export_model(inst)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_aggregate(args) -> int:
    with args.results.open() as fh:
        rows = list(csv.DictReader(fh))
    reference: Dict[str, float] = {}
    if args.reference is not None:
        with args.reference.open() as fh:
            for row in csv.DictReader(fh):
                value = row.get("best_profit") or row.get("profit")
                reference[row["instance"]] = float(value)

    by_instance: Dict[str, List[float]] = {}
    for row in rows:
        by_instance.setdefault(row["instance"], []).append(float(row["profit"]))

    out_rows = []
    for name in sorted(by_instance):
        profits = by_instance[name]
        mean = sum(profits) / len(profits)
        best = max(profits)
        ref = reference.get(name)
        if args.reference is not None and ref is None:
            print(f"warning: no reference entry for {name}; ratio omitted", file=sys.stderr)
        out_rows.append(
            {
                "instance": name,
                "runs": len(profits),
                "mean_profit": f"{mean:.6g}",
                "best_profit": f"{best:g}",
                "reference": f"{ref:g}" if ref is not None else "",
                "ratio": f"{mean / ref:.6f}" if ref else "",
            }
        )

    out_fh = args.out.open("w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out_fh, fieldnames=["instance", "runs", "mean_profit", "best_profit", "reference", "ratio"])
        writer.writeheader()
        writer.writerows(out_rows)
    finally:
        if args.out:
            out_fh.close()
    return 0


def cmd_plot_data(args) -> int:
    inst = _load_for_run(args.instance, args.op_mode)
    route, picks = parse_solution(args.solution.read_text())
    plan = PackingPlan.from_picks(inst, picks)
    ev = evaluate(inst, route, plan, strict=True)  # infeasible input is an error here

    rows = []
    coords = inst.coords
    x1, y1 = coords[route[0] - 1]
    rows.append({"kind": "start", "index": 0, "from_city": route[0], "to_city": route[0],
                 "x1": x1, "y1": y1, "x2": x1, "y2": y1, "weight": 0.0})
    for idx in range(len(route) - 1):
        a, b = route[idx], route[idx + 1]
        _, _, q_depart = ev.per_leg[idx]
        rows.append({
            "kind": "seg", "index": idx + 1, "from_city": a, "to_city": b,
            "x1": coords[a - 1][0], "y1": coords[a - 1][1],
            "x2": coords[b - 1][0], "y2": coords[b - 1][1],
            "weight": float(q_depart),
        })
    xe, ye = coords[route[-1] - 1]
    rows.append({"kind": "end", "index": len(route), "from_city": route[-1], "to_city": route[-1],
                 "x1": xe, "y1": ye, "x2": xe, "y2": ye, "weight": float(ev.final_weight)})

    out_fh = args.out.open("w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out_fh, fieldnames=["kind", "index", "from_city", "to_city", "x1", "y1", "x2", "y2", "weight"])
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out_fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the solver on one instance")
    p.add_argument("instance", type=Path)
    p.add_argument("--out", type=Path, default=None, help="directory for solution + run log")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="multi-seed benchmark sweep (resumable)")
    p.add_argument("instances", nargs="+")
    p.add_argument("--seeds", type=int, default=30, help="runs seeds 1..N")
    p.add_argument("--out", type=Path, required=True, help="results CSV (appended)")
    p.add_argument("--solutions", type=Path, default=None, help="optional directory for per-run files")
    p.add_argument("--profiles", type=Path, default=None, help="directory of <group>.params files")
    p.add_argument("--workers", type=int, default=1)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exhaustive optimum for tiny instances")
    p.add_argument("instance", type=Path)
    p.add_argument("--guard-n", type=int, default=8)
    p.add_argument("--guard-m", type=int, default=8)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--op-mode", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="check a solution file against the constraint model")
    p.add_argument("instance", type=Path)
    p.add_argument("solution", type=Path)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--op-mode", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-model", help="write the constraint model in LP-style text")
    p.add_argument("instance", type=Path)
    p.add_argument("-o", "--out", type=Path, default=None)
    p.add_argument("--op-mode", action="store_true")
    p.set_defaults(func=cmd_export_model)

    p = sub.add_parser("aggregate", help="per-instance means and approximation ratios")
    p.add_argument("results", type=Path)
    p.add_argument("--reference", type=Path, default=None, help="CSV with instance,best_profit")
    p.add_argument("-o", "--out", type=Path, default=None)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("plot-data", help="route-segment geometry CSV for rendering")
    p.add_argument("instance", type=Path)
    p.add_argument("solution", type=Path)
    p.add_argument("-o", "--out", type=Path, default=None)
    p.add_argument("--op-mode", action="store_true")
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
