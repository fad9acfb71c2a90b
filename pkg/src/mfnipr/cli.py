"""Command-line entry points: generate, solve, experiment and verify.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from . import instance as instance_io
from .ccg import MODES, CcgConfig, CcgResult, evaluate_after_plan, solve, solve_mfnip
from .instance import Instance
from .lemmas import analyze_plan
from .milp import BACKENDS
from .netgen import VARIANTS, GenParams, generate
from .network import ValidationError, split_nodes
from .restructure import InterdictionPlan

__all__ = [
    "ResultRow",
    "COLUMNS",
    "COMPARE_COLUMNS",
    "parse_budgets",
    "format_number",
    "run_experiment",
    "write_rows",
    "compare_rows",
    "load_plan",
    "main",
]

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


def format_number(x: float) -> str:
    """Nine significant digits, so output files are stable across runs."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    variant: str
    mode: str
    budget: float
    mfnip_flow: float
    mfnip_after_restructure: float
    mfnipr_lower: float
    mfnipr_upper: float
    iterations: int
    plans_visited: int
    wall_seconds: float | None
    status: str

    @property
    def gap(self) -> float:
        """Relative bound gap ``(U - L) / U``."""
        if self.mfnipr_upper == 0:
            return 0.0
        return (self.mfnipr_upper - self.mfnipr_lower) / abs(self.mfnipr_upper)

    @property
    def restructure_gain(self) -> float:
        """Flow the defender wins back against the MFNIP plan."""
        return self.mfnip_after_restructure - self.mfnip_flow

    def ordered(self, tol: float = 1e-9) -> bool:
        """``mfnip <= L <= U <= after`` (what every Optimal row must satisfy)."""
        return (self.mfnip_flow <= self.mfnipr_lower + tol
                and self.mfnipr_lower <= self.mfnipr_upper + tol
                and self.mfnipr_upper <= self.mfnip_after_restructure + tol)

    def cells(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "wall_seconds":
                out.append("NA" if v is None else f"{v:.3f}")
            elif isinstance(v, float):
                out.append(format_number(v))
            else:
                out.append(str(v))
        out.append(format_number(self.gap))
        return out


COLUMNS = [f.name for f in fields(ResultRow)] + ["gap"]
COMPARE_COLUMNS = ["dataset", "variant", "budget", "partial_seconds", "partial_plans",
                   "partial_status", "baseline_seconds", "baseline_plans", "baseline_status",
                   "objective_difference"]


def parse_budgets(text: str) -> list[float]:
    """``"50:140:10"`` (inclusive range), ``"5,10,20"`` or ``""`` (no budgets)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"--budgets: expected start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ValidationError(f"--budgets: {text!r} is not numeric") from None
        if step <= 0:
            raise ValidationError("--budgets: step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 9) for i in range(max(count, 0))]
    try:
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise ValidationError(f"--budgets: {text!r} is not a comma-separated list") from None


def dataset_id(inst: Instance, fallback: str = "instance") -> str:
    meta = inst.meta
    if "seed" in meta and "users" in meta:
        return f"s{meta['seed']}-u{meta['users']}"
    return fallback


def run_experiment(inst: Instance, budgets: Iterable[float], modes: Sequence[str] = ("partial",),
                   config: CcgConfig = CcgConfig(), timing: bool = True,
                   dataset: str | None = None) -> Iterable[ResultRow]:
    """Yield one row per (budget, mode), in budget order.

    MFNIP and its restructured evaluation are computed once per budget and
    shared by the mode rows.
    """
    net = inst.network
    snet = split_nodes(net)
    lead = inst.leadership if config.leadership else None
    name = dataset or dataset_id(inst)
    variant = str(inst.meta.get("variant", "base"))
    for b in budgets:
        flow, y, _ = solve_mfnip(net, b, lead, snet, config.backend, config.time_limit)
        after = evaluate_after_plan(net, inst.rules, y, snet, config.backend)
        for mode in modes:
            t0 = time.perf_counter()
            cfg = CcgConfig(**{**asdict(config), "mode": mode})
            res = solve(net, inst.rules, b, cfg, inst.leadership, snet)
            seconds = time.perf_counter() - t0
            yield ResultRow(name, variant, mode, float(b), flow, after, res.lower, res.upper,
                            len(res.iterations), res.plans_visited,
                            seconds if timing else None, res.status)


def write_rows(rows: Iterable[ResultRow], out: TextIO) -> list[ResultRow]:
    """Write the header, then each row as soon as it arrives."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    out.flush()
    done = []
    for row in rows:
        writer.writerow(row.cells())
        out.flush()
        done.append(row)
    return done


def compare_rows(rows: Sequence[ResultRow]) -> list[list[str]]:
    """Partial against baseline per budget, in the layout of a run-time comparison table."""
    by_key: dict[tuple, dict[str, ResultRow]] = {}
    for r in rows:
        by_key.setdefault((r.dataset, r.variant, r.budget), {})[r.mode] = r
    table = []
    for (ds, variant, b), modes in by_key.items():
        p, q = modes.get("partial"), modes.get("baseline")
        if p is None or q is None:
            continue
        secs = (lambda r: "NA" if r.wall_seconds is None else f"{r.wall_seconds:.3f}")
        table.append([ds, variant, format_number(b), secs(p), str(p.plans_visited), p.status,
                      secs(q), str(q.plans_visited), q.status,
                      format_number(abs(p.mfnipr_upper - q.mfnipr_upper))])
    return table


def load_plan(path: str | Path, n: int) -> InterdictionPlan:
    """Plan file: ``{"interdicted": [node ids]}``."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or "interdicted" not in data:
        raise ValidationError("plan: missing field 'interdicted'")
    ids = data["interdicted"]
    if not isinstance(ids, list):
        raise ValidationError("plan.interdicted: expected a list of node ids")
    for pos, i in enumerate(ids):
        if isinstance(i, bool) or not isinstance(i, int) or not 0 <= i < n:
            raise ValidationError(f"plan.interdicted[{pos}]: {i!r} is not a node id")
    return InterdictionPlan(frozenset(ids))


def result_record(inst: Instance, budget: float, res: CcgResult) -> dict:
    return {
        "budget": budget,
        "mode": res.mode,
        "status": res.status,
        "lower": res.lower,
        "upper": res.upper,
        "gap": res.gap,
        "seconds": res.seconds,
        "plans_visited": res.plans_visited,
        "interdicted": sorted(res.y.nodes) if res.y else None,
        "z_in": sorted(res.z.z_in) if res.z else None,
        "z_out": sorted(res.z.z_out) if res.z else None,
        "iterations": [asdict(r) for r in res.iterations],
        "meta": inst.meta,
    }


# command handlers


def cmd_generate(args) -> int:
    params = GenParams(seed=args.seed, num_users=args.users, variant=args.variant)
    inst = generate(params)
    instance_io.save(inst, args.out)
    net = inst.network
    print(f"wrote {args.out}: {net.n} nodes, {len(net.arcs)} arcs, "
          f"{len(net.restructurable_arcs)} restructurable arcs")
    return EXIT_OK


def _config(args, mode: str | None = None) -> CcgConfig:
    return CcgConfig(mode=mode or args.mode, epsilon=args.epsilon, time_limit=args.time_limit,
                     leadership=args.leadership, backend=args.backend)


def cmd_solve(args) -> int:
    inst = instance_io.load(args.instance)
    res = solve(inst.network, inst.rules, args.budget, _config(args), inst.leadership)
    record = result_record(inst, args.budget, res)
    if args.out:
        Path(args.out).write_text(json.dumps(record, indent=1) + "\n")
    y = sorted(res.y.nodes) if res.y else []
    print(f"{res.status}: L={format_number(res.lower)} U={format_number(res.upper)} "
          f"iterations={len(res.iterations)} plans={res.plans_visited} "
          f"seconds={res.seconds:.2f} y*={y}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    inst = instance_io.load(args.instance)
    budgets = parse_budgets(args.budgets)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for m in modes:
        if m not in MODES:
            raise ValidationError(f"--modes: unknown mode {m!r}; choose from {MODES}")
    rows = run_experiment(inst, budgets, modes, _config(args, modes[0] if modes else None),
                          timing=not args.no_timing, dataset=Path(args.instance).stem)
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        done = write_rows(rows, fh)
    table = compare_rows(done)
    if table:
        with out.with_name(out.stem + "_compare.csv").open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COMPARE_COLUMNS)
            writer.writerows(table)
    if args.figures and done:
        from .plotting import plot_sweep

        for path in plot_sweep(done, out.with_suffix("")):
            print(f"figure {path}")
    bad = [r for r in done if r.status == "Optimal" and not r.ordered()]
    print(f"wrote {out}: {len(done)} rows, {len(bad)} ordering violations")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = instance_io.load(args.instance)
    net = inst.network
    y = load_plan(args.plan, net.n) if args.plan else InterdictionPlan()
    snet = split_nodes(net)
    report = analyze_plan(net, inst.rules, y, snet)
    print(f"max flow {format_number(report.flow)} with {len(y.nodes)} interdicted nodes")
    layers: dict[int, int] = {}
    for a in report.cut.cut_arcs:
        arc = snet.all_arcs[a]
        # an original or restructurable arc is placed at its tail's layer
        node = arc.origin if isinstance(arc.origin, int) else arc.origin[0]
        key = f"{arc.kind}@L{net.nodes[node].layer}"
        layers[key] = layers.get(key, 0) + 1
    print("min-cut arcs: " + (", ".join(f"{k}:{layers[k]}" for k in sorted(layers)) or "none"))
    print(f"permitted restructurable arcs: {len(report.permitted)}")
    for e in report.permitted:
        i, j, _ = net.restructurable_arcs[e]
        print(f"  arc {e} ({i}->{j}, layers {net.nodes[i].layer}->{net.nodes[j].layer}): "
              f"{report.classes[e].value}")
    cert = report.certificate
    verdict = "no increase possible" if cert.holds else "flow may increase"
    print(f"certificate: {verdict} ({cert.rule})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfnipr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded instance file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--users", type=int, default=200)
    g.add_argument("--variant", choices=VARIANTS, default="base")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    def solver_flags(q, mode_flag: bool):
        if mode_flag:
            q.add_argument("--mode", choices=MODES, default="partial")
        q.add_argument("--epsilon", type=float, default=1e-4)
        q.add_argument("--time-limit", type=float, default=600.0)
        q.add_argument("--leadership", action="store_true")
        q.add_argument("--backend", choices=BACKENDS, default="highs")

    s = sub.add_parser("solve", help="solve one instance at one budget")
    s.add_argument("--instance", required=True)
    s.add_argument("--budget", type=float, required=True)
    s.add_argument("--out")
    solver_flags(s, True)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="budget sweep to CSV (plus figures)")
    e.add_argument("--instance", required=True)
    e.add_argument("--budgets", default="50:140:10")
    e.add_argument("--modes", default="partial")
    e.add_argument("--out", required=True)
    e.add_argument("--no-timing", action="store_true",
                   help="write NA for wall time so repeated runs are byte-identical")
    e.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    solver_flags(e, False)
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", help="min-cut location and restructuring certificate")
    v.add_argument("--instance", required=True)
    v.add_argument("--plan")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
