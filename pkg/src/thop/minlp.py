"""Constraint model: verification of candidate solutions and model export.

The model maximizes total picked profit subject to: knapsack capacity (1);
pick-implies-visit (2); every visited middle city picks something (3); fixed
start/end visits (4); out/in degree matching visits (5)/(6); the weight and
time recurrences along used arcs (7)/(8); and variable domains (9)-(13). The
weight recurrence linearizes with Big-M constants (14); the time recurrence
(15) stays nonlinear (division by a decision variable) and is exported as an
annotation.

Note (3) deliberately forbids pass-through cities, so only pruned routes
verify cleanly; the solver always emits pruned solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .evaluation import PackingPlan, evaluate
from .instance import Instance

EPS = 1e-6  # tolerance on real-valued inequalities, shared with evaluation


@dataclass
class ModelVariables:
    """A full variable assignment. x is sparse: missing arcs mean x_ij = 0."""

    n: int
    m: int
    x: Dict[Tuple[int, int], int]
    y: List[int]  # index i-1 -> y_i
    z: List[int]  # index k-1 -> z_k
    q: List[float]  # index i-1 -> weight after leaving city i
    t: List[float]  # index i-1 -> arrival time at city i


@dataclass(frozen=True)
class BigM:
    """Big-M constants: Mprime per city, Mdoubleprime per arc."""

    mprime: Tuple[float, ...]
    T: float
    vmin: float
    dist: object

    @classmethod
    def for_instance(cls, inst: Instance) -> "BigM":
        _, weight, _ = inst.item_columns()
        mp = []
        for j in range(1, inst.n + 1):
            mp.append(float(inst.W + sum(weight[k - 1] for k in inst.items_at(j))))
        return cls(tuple(mp), float(inst.T), float(inst.vmin), inst.dist_matrix)

    def mprime_j(self, j: int) -> float:
        return self.mprime[j - 1]

    def mdoubleprime_ij(self, i: int, j: int) -> float:
        return self.T + float(self.dist[i - 1, j - 1]) / self.vmin


def arcs(n: int):
    """The arc set A: i in C\\{n}, j in C\\{1, i}."""
    for i in range(1, n):
        for j in range(2, n + 1):
            if j != i:
                yield (i, j)


def lift_solution(inst: Instance, route: Sequence[int], plan: PackingPlan) -> ModelVariables:
    """Map a feasible (route, plan) onto the model's variable space."""
    ev = evaluate(inst, route, plan, strict=True)
    n, m = inst.n, inst.m
    y = [0] * n
    q = [0.0] * n
    t = [0.0] * n
    for city, arrival, weight_after in ev.per_leg:
        y[city - 1] = 1
        t[city - 1] = float(arrival)
        q[city - 1] = float(weight_after)
    x = {(a, b): 1 for a, b in zip(route[:-1], route[1:])}
    return ModelVariables(n=n, m=m, x=x, y=y, z=plan.z_vector(m), q=q, t=t)


@dataclass(frozen=True)
class FamilyResult:
    family: str
    description: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    families: List[FamilyResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(f.passed for f in self.families)

    def failed(self) -> List[FamilyResult]:
        return [f for f in self.families if not f.passed]

    def summary(self) -> str:
        lines = []
        for f in self.families:
            status = "pass" if f.passed else "FAIL"
            suffix = f" ({f.detail})" if f.detail else ""
            lines.append(f"({f.family}) {f.description}: {status}{suffix}")
        return "\n".join(lines)


def verify(inst: Instance, mv: ModelVariables, eps: float = EPS) -> VerificationReport:
    """Check every constraint family; report per-family pass/fail.

    Families (7) and (8) bind only where x_ij = 1 (the product form makes
    them vacuous elsewhere given the domain checks), so they are evaluated
    over the used arcs directly, the time recurrence in its nonlinear form.
    """
    profit_col, weight_col, _ = inst.item_columns()
    n, m = inst.n, inst.m
    report = VerificationReport()

    def add(family: str, description: str, passed: bool, detail: str = "") -> None:
        report.families.append(FamilyResult(family, description, passed, detail))

    total_w = sum(weight_col[k - 1] for k in range(1, m + 1) if mv.z[k - 1])
    add("1", "knapsack capacity", total_w <= inst.W + eps, f"weight {total_w} vs W {inst.W}" if total_w > inst.W + eps else "")

    bad = next((k for k in range(1, m + 1) if mv.z[k - 1] and not mv.y[inst.items[k - 1].city - 1]), None)
    add("2", "picked item implies visited city", bad is None, f"first violation at item {bad}" if bad else "")

    bad = next(
        (i for i in range(2, n) if mv.y[i - 1] and not any(mv.z[k - 1] for k in inst.items_at(i))),
        None,
    )
    add("3", "visited middle city picks something", bad is None, f"first violation at city {bad}" if bad else "")

    add("4", "start and end are visited", mv.y[0] == 1 and mv.y[n - 1] == 1)

    out_deg = [0] * (n + 1)
    in_deg = [0] * (n + 1)
    arc_domain_bad: Optional[str] = None
    for (i, j), v in mv.x.items():
        if v not in (0, 1):
            arc_domain_bad = arc_domain_bad or f"x[{i},{j}] = {v}"
        elif not (1 <= i < n and 2 <= j <= n and i != j):
            if v != 0:
                arc_domain_bad = arc_domain_bad or f"arc ({i},{j}) outside A"
        elif v:
            out_deg[i] += 1
            in_deg[j] += 1

    bad = next((i for i in range(1, n) if out_deg[i] != mv.y[i - 1]), None)
    add("5", "out-degree equals visit indicator", bad is None, f"first violation at city {bad}" if bad else "")
    bad = next((j for j in range(2, n + 1) if in_deg[j] != mv.y[j - 1]), None)
    add("6", "in-degree equals visit indicator", bad is None, f"first violation at city {bad}" if bad else "")

    used = [(i, j) for (i, j), v in mv.x.items() if v == 1 and 1 <= i < n and 2 <= j <= n and i != j]
    bad_detail = ""
    for i, j in used:
        picked_w = sum(weight_col[k - 1] for k in inst.items_at(j) if mv.z[k - 1])
        if mv.q[j - 1] < mv.q[i - 1] + picked_w - eps:
            bad_detail = f"first violation on arc ({i},{j})"
            break
    add("7", "weight recurrence along used arcs", not bad_detail, bad_detail)

    bad_detail = ""
    for i, j in used:
        v = inst.vmax - inst.nu * mv.q[i - 1]
        if v <= 0:
            bad_detail = f"non-positive speed leaving city {i}"
            break
        if mv.t[j - 1] < mv.t[i - 1] + float(inst.dist_matrix[i - 1, j - 1]) / v - eps:
            bad_detail = f"first violation on arc ({i},{j})"
            break
    add("8", "time recurrence along used arcs (nonlinear)", not bad_detail, bad_detail)

    add("9", "arc variables binary over A", arc_domain_bad is None, arc_domain_bad or "")
    bad = next((i for i in range(1, n + 1) if mv.y[i - 1] not in (0, 1)), None)
    add("10", "visit variables binary", bad is None, f"y[{bad}]" if bad else "")
    bad = next((k for k in range(1, m + 1) if mv.z[k - 1] not in (0, 1)), None)
    add("11", "pick variables binary", bad is None, f"z[{bad}]" if bad else "")
    bad = next((i for i in range(1, n + 1) if not (-eps <= mv.q[i - 1] <= inst.W + eps)), None)
    add("12", "knapsack weight within [0, W]", bad is None, f"q[{bad}] = {mv.q[bad - 1]}" if bad else "")
    bad = next((i for i in range(1, n + 1) if not (-eps <= mv.t[i - 1] <= inst.T + eps)), None)
    add("13", "arrival times within [0, T]", bad is None, f"t[{bad}] = {mv.t[bad - 1]}" if bad else "")
    return report


# ---- model export ------------------------------------------------------------


def export_model(inst: Instance) -> str:
    """Emit the model in an LP-style text format.

    Linear rows: capacity (1), visit/pick logic (2)-(4), degrees (5)-(6), and
    the Big-M weight recurrence (14). Domains (9)-(13) become bounds and
    binary declarations. The time recurrence (15) cannot be linearized
    (division by q), so it is emitted as a comment template with its Big-M
    definition.
    """
    profit_col, weight_col, _ = inst.item_columns()
    n, m = inst.n, inst.m
    bigm = BigM.for_instance(inst)
    fmt = _format_coeff

    lines: List[str] = []
    lines.append(f"\\ thief-orienteering model: {inst.name or 'unnamed'} (n={n}, m={m})")
    lines.append("MAXIMIZE")
    obj = " + ".join(f"{fmt(profit_col[k - 1])} z_{k}" for k in range(1, m + 1)) or "0"
    lines.append(f"  obj: {obj}")
    lines.append("SUBJECT TO")

    terms = " + ".join(f"{fmt(weight_col[k - 1])} z_{k}" for k in range(1, m + 1)) or "0"
    lines.append(f"  c1_capacity: {terms} <= {fmt(inst.W)}")

    for k in range(1, m + 1):
        city = inst.items[k - 1].city
        lines.append(f"  c2_pick_visit_{k}: z_{k} - y_{city} <= 0")

    for i in range(2, n):
        ids = inst.items_at(i)
        if ids.size:
            terms = " - ".join(f"z_{k}" for k in ids)
            lines.append(f"  c3_visit_pick_{i}: y_{i} - {terms} <= 0")
        else:
            lines.append(f"  c3_visit_pick_{i}: y_{i} <= 0")

    lines.append("  c4_start: y_1 = 1")
    lines.append(f"  c4_end: y_{n} = 1")

    for i in range(1, n):
        terms = " + ".join(f"x_{i}_{j}" for j in range(2, n + 1) if j != i)
        lines.append(f"  c5_outdeg_{i}: {terms} - y_{i} = 0")
    for j in range(2, n + 1):
        terms = " + ".join(f"x_{i}_{j}" for i in range(1, n) if i != j)
        lines.append(f"  c6_indeg_{j}: {terms} - y_{j} = 0")

    for i, j in arcs(n):
        mp = bigm.mprime_j(j)
        picked = "".join(f" - {fmt(weight_col[k - 1])} z_{k}" for k in inst.items_at(j))
        lines.append(f"  c14_weight_{i}_{j}: q_{j} - q_{i}{picked} - {fmt(mp)} x_{i}_{j} >= -{fmt(mp)}")

    lines.append("BOUNDS")
    for i in range(1, n + 1):
        lines.append(f"  0 <= q_{i} <= {fmt(inst.W)}")
    for i in range(1, n + 1):
        lines.append(f"  0 <= t_{i} <= {fmt(inst.T)}")
    lines.append("BINARIES")
    lines.append("  " + " ".join(f"x_{i}_{j}" for i, j in arcs(n)))
    lines.append("  " + " ".join(f"y_{i}" for i in range(1, n + 1)))
    if m:
        lines.append("  " + " ".join(f"z_{k}" for k in range(1, m + 1)))
    lines.append("END")
    lines.append("\\ nonlinear time recurrence, one row per arc (i,j) in A; kept as a")
    lines.append("\\ comment because LP text cannot carry the reciprocal-speed term:")
    lines.append("\\   t_j >= t_i + d_ij / (vmax - nu * q_i) - Mpp_ij * (1 - x_i_j)")
    lines.append(f"\\   with vmax = {fmt(inst.vmax)}, nu = {inst.nu!r}, Mpp_ij = T + d_ij / vmin,")
    lines.append(f"\\   T = {fmt(inst.T)}, vmin = {fmt(inst.vmin)}")
    return "\n".join(lines) + "\n"


def _format_coeff(x: float) -> str:
    xf = float(x)
    if xf.is_integer() and abs(xf) < 1e15:
        return str(int(xf))
    return repr(xf)


@dataclass(frozen=True)
class ModelSummary:
    n_objective_terms: int
    n_constraints: int
    n_bounds: int
    n_binaries: int


def read_model(text: str) -> ModelSummary:
    """Re-parse an exported model; used for round-trip structure checks."""
    section = None
    n_obj = n_rows = n_bounds = n_bin = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        if line in ("MAXIMIZE", "SUBJECT TO", "BOUNDS", "BINARIES", "END"):
            section = line
            continue
        if section == "MAXIMIZE":
            n_obj = line.split(":", 1)[1].count("z_") if ":" in line else 0
        elif section == "SUBJECT TO":
            if ":" not in line or not any(op in line for op in ("<=", ">=", "=")):
                raise ValueError(f"malformed constraint row: {line!r}")
            n_rows += 1
        elif section == "BOUNDS":
            n_bounds += 1
        elif section == "BINARIES":
            n_bin += len(line.split())
    return ModelSummary(n_obj, n_rows, n_bounds, n_bin)
