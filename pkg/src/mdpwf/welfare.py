"""Welfare-optimal strategy synthesis.

Pipeline: a lexicographic cascade of per-principal optimality
restrictions fixes the long-term positional tail; one-step advantage
tables quantify deviations from it; a forward scan finds the horizon
after which no aggregate deviation can help; backward induction over the
unrolled step-indexed DAG extracts the optimal counting prefix.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CertificationError, HorizonExceededError
from .evaluate import eval_counting
from .model import AsymMdp
from .numeric import DEFAULT_TIE_TOLERANCE, FLOAT, NumericMode
from .solve import full_restriction, optimal_action_set, solve_discounted
from .strategies import CountingStrategy


@dataclass
class LongTermResult:
    """Output of the cascade: surviving actions, V_0..V_{n-1}, and the
    deterministic tail (lowest surviving action index per state)."""

    restricted: list  # per-state surviving action indices
    values: list  # list[ValueVector], one per principal on its level
    tail: list  # positional strategy inside the final restriction


def long_term(
    asym: AsymMdp,
    mode: NumericMode = FLOAT,
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
    method: str = "pi",
) -> LongTermResult:
    """Restrict the model level by level: solve for principal j, keep only
    its optimal actions, and hand the rest to principal j+1."""
    restriction = full_restriction(asym)
    values = []
    for j in range(asym.n_principals):
        result = solve_discounted(
            asym, j, mode=mode, method=method, restriction=restriction
        )
        values.append(result.values)
        restriction = optimal_action_set(
            asym, result.q, result.values, tie_tolerance=tie_tolerance, mode=mode
        )
    tail = [allowed[0] for allowed in restriction]
    return LongTermResult(restricted=restriction, values=values, tail=tail)


@dataclass
class AdvantageTable:
    """delta0[(s, a)][i]: principal i's one-step payoff difference for
    playing a at s instead of its optimal continuation.  Rows of retained
    actions are certified zero and clamped."""

    delta0: dict
    retained: set
    minimal_nonzero: dict  # (s, a) -> least i with delta0 != 0, or None
    zero_tolerance: float


def advantages(
    asym: AsymMdp,
    lt: LongTermResult,
    mode: NumericMode = FLOAT,
    zero_tolerance: float | None = None,
) -> AdvantageTable:
    """Advantage table for every enabled (state, action) pair."""
    exact = mode.is_exact
    if zero_tolerance is None:
        if exact:
            zero_tolerance = 0.0
        else:
            scale = max(
                (float(np.max(np.abs(np.asarray(v.values, dtype=float)))))
                for v in lt.values
            )
            zero_tolerance = 1e-7 * max(1.0, scale)
    delta0 = {}
    retained = set()
    minimal = {}
    trans = asym.mdp.transitions
    for s, a in asym.rows():
        row = []
        for i in range(asym.n_principals):
            v = lt.values[i].values
            lam = asym.discounts[i] if exact else float(asym.discounts[i])
            r = asym.rewards[s][a][i]
            if exact:
                d = r + lam * sum(p * v[t] for t, p in trans[s][a]) - v[s]
            else:
                d = (
                    float(r)
                    + lam * sum(float(p) * v[t] for t, p in trans[s][a])
                    - v[s]
                )
                if abs(d) <= zero_tolerance:
                    d = 0.0
            row.append(d)
        is_retained = a in lt.restricted[s]
        if is_retained:
            retained.add((s, a))
            bad = [i for i, d in enumerate(row) if d != 0]
            if bad:
                raise CertificationError(
                    f"retained action ({asym.mdp.states[s]!r}, "
                    f"{asym.mdp.actions[s][a]!r}) has nonzero advantage "
                    f"for principal {bad[0]}: {row[bad[0]]}"
                )
            row = [Fraction(0) if exact else 0.0] * asym.n_principals
        first = next((i for i, d in enumerate(row) if d != 0), None)
        if not is_retained and first is not None and row[first] > 0:
            raise CertificationError(
                f"removed action ({asym.mdp.states[s]!r}, "
                f"{asym.mdp.actions[s][a]!r}) has positive leading advantage "
                f"{row[first]} for principal {first}"
            )
        delta0[(s, a)] = row
        minimal[(s, a)] = first
    return AdvantageTable(
        delta0=delta0,
        retained=retained,
        minimal_nonzero=minimal,
        zero_tolerance=zero_tolerance,
    )


def find_kappa(
    asym: AsymMdp,
    adv: AdvantageTable,
    slack=None,
    max_kappa: int = 10**7,
    mode: NumericMode = FLOAT,
) -> int:
    """Least j at which every advantage prefix sum is below `slack`,
    simultaneously for all (s, a); the condition is absorbing, so the
    forward scan stops at the first satisfying depth.

    Each row is rescaled by its leading discount power so the test stays
    meaningful at depths where lam^j underflows binary64.
    """
    if slack is None:
        slack = mode.default_slack
    rows = [
        (key, i)
        for key, i in adv.minimal_nonzero.items()
        if i is not None
    ]
    if not rows:
        return 0
    lams = asym.discounts
    n = asym.n_principals
    if mode.is_exact:
        cur = []
        ratios = []
        for (key, imin) in rows:
            cur.append(list(adv.delta0[key]))
            ratios.append([lams[p] / lams[imin] for p in range(n)])
        j = 0
        while True:
            ok = True
            for terms in cur:
                acc = Fraction(0)
                for t in terms:
                    acc += t
                    if acc > slack:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return j
            if j >= max_kappa:
                raise HorizonExceededError(max_kappa, _worst_pair(asym, rows, cur))
            for terms, rats in zip(cur, ratios):
                for p in range(n):
                    terms[p] *= rats[p]
            j += 1
    u = np.array(
        [[float(d) for d in adv.delta0[key]] for key, _ in rows], dtype=np.float64
    )
    ratios = np.array(
        [[float(lams[p] / lams[imin]) for p in range(n)] for _, imin in rows]
    )
    slack_f = float(slack)
    j = 0
    while True:
        if np.all(np.cumsum(u, axis=1) <= slack_f):
            return j
        if j >= max_kappa:
            raise HorizonExceededError(max_kappa, _worst_pair(asym, rows, u))
        u *= ratios
        j += 1


def _worst_pair(asym, rows, cur):
    worst, worst_val = None, None
    for (key, _), terms in zip(rows, cur):
        val = max(np.cumsum([float(t) for t in terms]))
        if worst_val is None or val > worst_val:
            s, a = key
            worst = (asym.mdp.states[s], asym.mdp.actions[s][a])
            worst_val = val
    return worst


@dataclass
class KappaActionEstimate:
    minimal_index: int | None
    kappa_prime: object  # sum of positive later advantages over |leading|
    kappa: int


@dataclass
class KappaEstimate:
    per_action: dict  # (s, a) -> KappaActionEstimate
    bound: int


def kappa_estimate(asym: AsymMdp, adv: AdvantageTable, mode: NumericMode = FLOAT) -> KappaEstimate:
    """Closed-form per-action horizon bound and its maximum.

    For a removed action with leading nonzero index i < n-1:
    kappa' = sum_{p>i} max(0, delta0_p) / |delta0_i| and
    kappa = ceil(log kappa' / log(lam_i / lam_{i+1})); retained actions
    and i = n-1 contribute 0.
    """
    n = asym.n_principals
    lams = asym.discounts
    per_action = {}
    bound = 0
    for key, row in adv.delta0.items():
        imin = adv.minimal_nonzero[key]
        if imin is None or imin == n - 1:
            per_action[key] = KappaActionEstimate(imin, None, 0)
            continue
        lead = row[imin]
        pos = [row[p] for p in range(imin + 1, n) if row[p] > 0]
        if not pos:
            per_action[key] = KappaActionEstimate(imin, None, 0)
            continue
        kp = sum(pos, Fraction(0) if mode.is_exact else 0.0) / abs(lead)
        if kp <= 1:
            k = 0
        else:
            base = lams[imin] / lams[imin + 1]
            k = max(0, math.ceil(math.log(float(kp)) / math.log(float(base))))
            if mode.is_exact:
                # float log can be off by one at the boundary; fix exactly
                while k > 0 and base ** (k - 1) >= kp:
                    k -= 1
                while base**k < kp:
                    k += 1
        per_action[key] = KappaActionEstimate(imin, kp, k)
        bound = max(bound, k)
    return KappaEstimate(per_action=per_action, bound=bound)


@dataclass
class WelfareReport:
    """Per-start-state summary of the synthesized strategy."""

    state: str
    per_principal: list
    social_welfare: object
    baseline: object
    deviation_gain: object
    kappa: int


@dataclass
class OptimizeResult:
    strategy: CountingStrategy
    reports: dict  # state name -> WelfareReport
    long_term: LongTermResult
    advantage: AdvantageTable
    kappa: int
    kappa_bound: KappaEstimate
    timings: dict


def _backward_induction_exact(asym, adv, kappa):
    n = asym.n_principals
    lams = asym.discounts
    trans = asym.mdp.transitions
    pows = [[lam**j for lam in lams] for j in range(kappa)]
    e = [Fraction(0)] * asym.n_states
    prefix = [None] * kappa
    for j in range(kappa - 1, -1, -1):
        new_e = []
        row_actions = []
        for s in range(asym.n_states):
            best_val = None
            best_a = None
            for a in range(len(asym.mdp.actions[s])):
                d = adv.delta0[(s, a)]
                val = sum(
                    (pows[j][i] * d[i] for i in range(n) if d[i] != 0), Fraction(0)
                )
                val += sum(p * e[t] for t, p in trans[s][a])
                if best_val is None or val > best_val:
                    best_val, best_a = val, a
            new_e.append(best_val)
            row_actions.append(best_a)
        e = new_e
        prefix[j] = row_actions
    return prefix, e


def _backward_induction_float(asym, adv, kappa):
    view = asym.float_view()
    n = asym.n_principals
    delta = np.zeros((view.n_rows, n))
    for (s, a), row in adv.delta0.items():
        delta[view.row_index(s, a)] = [float(d) for d in row]
    lams = view.discounts
    e = np.zeros(view.n_states)
    prefix = [None] * kappa
    with np.errstate(under="ignore"):
        for j in range(kappa - 1, -1, -1):
            layer_r = delta @ (lams**j)
            glue = np.add.reduceat(
                view.succ_prob * e[view.succ_idx], view.succ_ptr[:-1]
            )
            vals = layer_r + glue
            new_e = np.empty(view.n_states)
            row_actions = []
            for s in range(view.n_states):
                lo, hi = int(view.row_ptr[s]), int(view.row_ptr[s + 1])
                a = int(np.argmax(vals[lo:hi]))  # first max: lowest index wins ties
                row_actions.append(a)
                new_e[s] = vals[lo + a]
            e = new_e
            prefix[j] = row_actions
    return prefix, e.tolist()


def optimize(
    asym: AsymMdp,
    mode: NumericMode = FLOAT,
    slack=None,
    max_kappa: int = 10**7,
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
    method: str = "pi",
) -> OptimizeResult:
    """Synthesize the welfare-optimal counting strategy and its report."""
    t0 = time.perf_counter()
    lt = long_term(asym, mode=mode, tie_tolerance=tie_tolerance, method=method)
    t1 = time.perf_counter()
    adv = advantages(asym, lt, mode=mode)
    kappa = find_kappa(asym, adv, slack=slack, max_kappa=max_kappa, mode=mode)
    est = kappa_estimate(asym, adv, mode=mode)
    if kappa == 0:
        prefix, gain = [], _zero_gain(asym, mode)
    elif mode.is_exact:
        prefix, gain = _backward_induction_exact(asym, adv, kappa)
    else:
        prefix, gain = _backward_induction_float(asym, adv, kappa)
    cs = CountingStrategy(kappa=kappa, prefix=prefix, tail=lt.tail)
    payoffs = eval_counting(asym, cs, mode)
    t2 = time.perf_counter()
    reports = {}
    for s, name in enumerate(asym.mdp.states):
        baseline = sum(v.values[s] for v in lt.values)
        sw = payoffs.social_welfare[s]
        _check_decomposition(mode, sw, baseline, gain[s], name)
        reports[name] = WelfareReport(
            state=name,
            per_principal=[v[s] for v in payoffs.per_principal],
            social_welfare=sw,
            baseline=baseline,
            deviation_gain=gain[s],
            kappa=kappa,
        )
    return OptimizeResult(
        strategy=cs,
        reports=reports,
        long_term=lt,
        advantage=adv,
        kappa=kappa,
        kappa_bound=est,
        timings={
            "long_term": t1 - t0,
            "unroll": t2 - t1,
            "total": t2 - t0,
        },
    )


def _zero_gain(asym, mode):
    zero = Fraction(0) if mode.is_exact else 0.0
    return [zero] * asym.n_states


def _check_decomposition(mode, sw, baseline, gain, state):
    if mode.is_exact:
        if sw != baseline + gain:
            raise CertificationError(
                f"welfare decomposition failed at state {state!r}: "
                f"{sw} != {baseline} + {gain}"
            )
    else:
        scale = max(1.0, abs(float(sw)))
        if abs(float(sw) - float(baseline) - float(gain)) > 1e-6 * scale:
            raise CertificationError(
                f"welfare decomposition failed at state {state!r}: "
                f"{float(sw)} vs {float(baseline)} + {float(gain)}"
            )
