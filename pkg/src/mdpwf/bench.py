"""Scaling studies over seeded random instances and the discount-grid
sweep, emitting CSV for downstream plotting.

Absolute runtimes are machine-dependent; rows record them for trend
inspection only.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .errors import MdpwfError
from .generators import RandomMdpConfig, random_mdp
from .model import AsymMdp
from .numeric import FLOAT, NumericMode, as_fraction
from .welfare import optimize


def worker_count() -> int:
    """Worker cap from MDPWF_THREADS, defaulting to the logical cores."""
    raw = os.environ.get("MDPWF_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return os.cpu_count() or 1


# default study sizes: 100 instances per research question
DEFAULT_RQ1_STATES = list(range(2, 2001, 20))
DEFAULT_RQ2_PRINCIPALS = list(range(2, 102))
DEFAULT_RQ3_RATIOS = [1.32 * (16 / 1.32) ** (i / 99) for i in range(100)]


@dataclass
class BenchRow:
    states: int
    actions: int
    principals: int
    discount_ratio: float | None
    seed: int
    kappa: int | None = None
    social_welfare: float | None = None
    wall_time_total: float | None = None
    wall_time_longterm: float | None = None
    wall_time_unroll: float | None = None
    error: str | None = None


def _run_spec(spec) -> BenchRow:
    cfg, mode = spec
    row = BenchRow(
        states=cfg.num_states,
        actions=cfg.actions_per_state,
        principals=cfg.num_principals,
        discount_ratio=None,
        seed=cfg.seed,
    )
    try:
        lams = cfg.resolved_discounts()
        if len(lams) >= 2:
            row.discount_ratio = float(lams[0] / lams[1])
        asym = random_mdp(cfg)
        optimize(asym, mode=mode)  # warm-up run, timing discarded
        result = optimize(asym, mode=mode)
    except MdpwfError as e:
        row.error = str(e)
        return row
    row.kappa = result.kappa
    row.social_welfare = float(result.reports[asym.mdp.states[0]].social_welfare)
    row.wall_time_total = result.timings["total"]
    row.wall_time_longterm = result.timings["long_term"]
    row.wall_time_unroll = result.timings["unroll"]
    return row


def _run_all(specs, workers=None):
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(specs) <= 1:
        return [_run_spec(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_spec, specs))


def run_rq1(
    states=None,
    actions: int = 2,
    principals: int = 2,
    discounts=(Fraction(9, 10), Fraction(3, 10)),
    seeds=(0,),
    mode: NumericMode = FLOAT,
    workers=None,
):
    """Scaling in the number of states on two-principal random instances."""
    if states is None:
        states = DEFAULT_RQ1_STATES
    specs = [
        (
            RandomMdpConfig(
                num_states=n,
                actions_per_state=actions,
                num_principals=principals,
                discounts=list(discounts),
                seed=seed,
            ),
            mode,
        )
        for n in states
        for seed in seeds
    ]
    rows = _run_all(specs, workers)
    rows.sort(key=lambda r: (r.states, r.seed))
    return rows


def run_rq2(
    principals=None,
    states: int = 30,
    actions: int = 2,
    seeds=(0,),
    mode: NumericMode = FLOAT,
    workers=None,
):
    """Scaling in the number of principals; discounts follow the arithmetic
    progression from 0.99 down to 0.05."""
    if principals is None:
        principals = DEFAULT_RQ2_PRINCIPALS
    specs = [
        (
            RandomMdpConfig(
                num_states=states,
                actions_per_state=actions,
                num_principals=p,
                discounts=None,
                seed=seed,
            ),
            mode,
        )
        for p in principals
        for seed in seeds
    ]
    rows = _run_all(specs, workers)
    rows.sort(key=lambda r: (r.principals, r.seed))
    return rows


def run_rq3(
    ratios=None,
    states: int = 30,
    actions: int = 2,
    lam0=Fraction(9, 10),
    seeds=(0,),
    mode: NumericMode = FLOAT,
    workers=None,
):
    """Scaling in the discount-factor ratio lam0/lam1, lam0 held fixed."""
    if ratios is None:
        ratios = DEFAULT_RQ3_RATIOS
    lam0 = as_fraction(lam0)
    rows = []
    specs = []
    rejected = []
    for ratio in ratios:
        for seed in seeds:
            r = as_fraction(ratio)
            lam1 = lam0 / r
            if r <= 1 or not (0 < lam1 < 1):
                rejected.append(
                    BenchRow(
                        states=states,
                        actions=actions,
                        principals=2,
                        discount_ratio=float(r),
                        seed=seed,
                        error=f"ratio {float(r)} does not give a discount in (0, 1)",
                    )
                )
                continue
            specs.append(
                (
                    RandomMdpConfig(
                        num_states=states,
                        actions_per_state=actions,
                        num_principals=2,
                        discounts=[lam0, lam1],
                        seed=seed,
                    ),
                    mode,
                )
            )
    rows = _run_all(specs, workers) + rejected
    rows.sort(key=lambda r: (r.discount_ratio, r.seed))
    return rows


_BENCH_FIELDS = [
    "states",
    "actions",
    "principals",
    "discount_ratio",
    "seed",
    "kappa",
    "social_welfare",
    "wall_time_total",
    "wall_time_longterm",
    "wall_time_unroll",
    "error",
]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def rows_to_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(_BENCH_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, fld)) for fld in _BENCH_FIELDS])


# -- discount-grid sweep -----------------------------------------------------


@dataclass
class SweepCell:
    alpha: Fraction
    beta: Fraction
    status: str  # ok | empty | error
    kappa: int | None = None
    prefix_signature: str = ""
    tail_action: str = ""
    social_welfare: float | None = None
    error: str | None = None
    strategy: object = None


def sweep_discounts(
    template: AsymMdp,
    alphas,
    betas,
    start: int = 0,
    mode: NumericMode = FLOAT,
    slack=None,
    max_kappa: int = 10**5,
):
    """Optimize the template under every (alpha, beta) grid cell with
    alpha > beta; cells on or below the diagonal stay empty."""
    if template.n_principals != 2:
        raise ValueError("sweep_discounts needs a two-principal template")
    cells = []
    for alpha in alphas:
        a = as_fraction(alpha)
        for beta in betas:
            b = as_fraction(beta)
            if a <= b:
                cells.append(SweepCell(alpha=a, beta=b, status="empty"))
                continue
            asym = template.with_discounts([a, b])
            try:
                res = optimize(asym, mode=mode, slack=slack, max_kappa=max_kappa)
            except MdpwfError as e:
                cells.append(SweepCell(alpha=a, beta=b, status="error", error=str(e)))
                continue
            cs = res.strategy
            sig = ";".join(
                asym.mdp.actions[start][cs.prefix[j][start]] for j in range(cs.kappa)
            )
            cells.append(
                SweepCell(
                    alpha=a,
                    beta=b,
                    status="ok",
                    kappa=res.kappa,
                    prefix_signature=sig,
                    tail_action=asym.mdp.actions[start][cs.tail[start]],
                    social_welfare=float(
                        res.reports[asym.mdp.states[start]].social_welfare
                    ),
                    strategy=cs,
                )
            )
    return cells


def steps_until_action(cell: SweepCell, action: str):
    """First step at which the swept strategy plays `action` at the start
    state; None when it never does (the waiting time of a cell)."""
    if cell.status != "ok":
        return None
    names = cell.prefix_signature.split(";") if cell.prefix_signature else []
    for j, name in enumerate(names):
        if name == action:
            return j
    if cell.tail_action == action:
        return cell.kappa
    return None


_SWEEP_FIELDS = [
    "alpha",
    "beta",
    "status",
    "kappa",
    "prefix_signature",
    "tail_action",
    "social_welfare",
    "error",
]


def sweep_to_csv(cells, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(_SWEEP_FIELDS)
        for c in cells:
            w.writerow(
                [
                    _fmt(float(c.alpha)),
                    _fmt(float(c.beta)),
                    c.status,
                    _fmt(c.kappa),
                    c.prefix_signature,
                    c.tail_action,
                    _fmt(c.social_welfare),
                    c.error or "",
                ]
            )
