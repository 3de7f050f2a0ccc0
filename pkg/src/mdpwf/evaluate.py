"""Exact evaluation of positional, mixed-stationary, and counting
strategies: per-principal discounted payoffs and social welfare."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import (
    markov_values_exact,
    markov_values_float,
    policy_topo_order,
    policy_values_exact,
    policy_values_float,
)
from .model import AsymMdp
from .numeric import FLOAT, NumericMode
from .strategies import CountingStrategy, MixedStationaryStrategy, check_positional


@dataclass
class EvalResult:
    """Per-principal value vectors plus their per-state sum."""

    per_principal: list  # one vector per principal
    social_welfare: list

    def at(self, s):
        return [v[s] for v in self.per_principal], self.social_welfare[s]


def _bundle(vectors):
    n = len(vectors[0])
    sw = [sum(v[s] for v in vectors) for s in range(n)]
    return EvalResult(per_principal=vectors, social_welfare=sw)


def eval_positional(asym: AsymMdp, sigma, mode: NumericMode = FLOAT) -> EvalResult:
    """Discounted payoff of a pure positional strategy, for every state."""
    check_positional(asym, sigma)
    if mode.is_exact:
        order = policy_topo_order(asym.mdp.transitions, sigma)
        vectors = [
            policy_values_exact(asym, sigma, i, order=order)
            for i in range(asym.n_principals)
        ]
    else:
        view = asym.float_view()
        vectors = [
            policy_values_float(view, sigma, i) for i in range(asym.n_principals)
        ]
    return _bundle(vectors)


def eval_stationary_mixed(
    asym: AsymMdp, strategy: MixedStationaryStrategy, mode: NumericMode = FLOAT
) -> EvalResult:
    """Payoffs of a per-state action distribution via the averaged chain."""
    strategy.check(asym, tolerance=0.0 if mode.is_exact else 1e-12)
    n = asym.n_states
    avg_trans = []
    for s in range(n):
        acc = {}
        for a, w in enumerate(strategy.probs[s]):
            if w == 0:
                continue
            for t, p in asym.mdp.transitions[s][a]:
                acc[t] = acc.get(t, Fraction(0)) + w * p
        avg_trans.append(list(acc.items()))
    vectors = []
    for i in range(asym.n_principals):
        rewards = [
            sum(
                (w * asym.rewards[s][a][i] for a, w in enumerate(strategy.probs[s]) if w),
                Fraction(0),
            )
            for s in range(n)
        ]
        lam = asym.discounts[i]
        if mode.is_exact:
            vectors.append(markov_values_exact(avg_trans, rewards, lam))
        else:
            vectors.append(markov_values_float(avg_trans, rewards, lam))
    return _bundle(vectors)


def eval_counting(asym: AsymMdp, cs: CountingStrategy, mode: NumericMode = FLOAT) -> EvalResult:
    """Payoffs of a counting strategy, for every start state.

    Computed by per-principal backward recursion over the prefix steps on
    top of the tail's positional values; equals the forward expectation
    sum_j lam^j E[R] plus the lam^kappa-weighted tail value.
    """
    cs.check(asym)
    tail_vals = eval_positional(asym, cs.tail, mode)
    trans = asym.mdp.transitions
    exact = mode.is_exact
    vectors = []
    for i in range(asym.n_principals):
        lam = asym.discounts[i] if exact else float(asym.discounts[i])
        u = list(tail_vals.per_principal[i])
        for j in range(cs.kappa - 1, -1, -1):
            row = cs.prefix[j]
            nu = []
            for s in range(asym.n_states):
                a = row[s]
                r = asym.rewards[s][a][i]
                if exact:
                    nu.append(r + lam * sum(p * u[t] for t, p in trans[s][a]))
                else:
                    nu.append(
                        float(r) + lam * sum(float(p) * u[t] for t, p in trans[s][a])
                    )
            u = nu
        vectors.append(u)
    return _bundle(vectors)


def counting_value_from(
    asym: AsymMdp,
    cs: CountingStrategy,
    start: int,
    mode: NumericMode = FLOAT,
    tail_vals: EvalResult | None = None,
):
    """Social welfare of a counting strategy from one start state, by
    forward occupancy propagation (oracle fast path)."""
    if tail_vals is None:
        tail_vals = eval_positional(asym, cs.tail, mode)
    n_p = asym.n_principals
    exact = mode.is_exact
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    lams = [d if exact else float(d) for d in asym.discounts]
    totals = [zero] * n_p
    pows = [one] * n_p
    dist = {start: one}
    trans = asym.mdp.transitions
    for j in range(cs.kappa):
        row = cs.prefix[j]
        nxt = {}
        for s, mass in dist.items():
            a = row[s]
            for i in range(n_p):
                r = asym.rewards[s][a][i]
                totals[i] += pows[i] * mass * (r if exact else float(r))
            for t, p in trans[s][a]:
                w = mass * (p if exact else float(p))
                nxt[t] = nxt.get(t, zero) + w
        dist = nxt
        for i in range(n_p):
            pows[i] *= lams[i]
    for i in range(n_p):
        tv = tail_vals.per_principal[i]
        totals[i] += pows[i] * sum(mass * tv[s] for s, mass in dist.items())
    return totals, sum(totals)


def value_iteration_fixed_policy(asym, sigma, principal, sweeps, mode=FLOAT):
    """Iterative evaluation of a fixed policy (test oracle)."""
    view = asym.float_view()
    lam = float(view.discounts[principal])
    rows = view.row_ptr[:-1] + np.asarray(sigma, dtype=np.int64)
    v = np.zeros(view.n_states)
    for _ in range(sweeps):
        nv = np.empty_like(v)
        for s in range(view.n_states):
            row = rows[s]
            lo, hi = view.succ_ptr[row], view.succ_ptr[row + 1]
            nv[s] = view.rewards[row, principal] + lam * float(
                np.dot(view.succ_prob[lo:hi], v[view.succ_idx[lo:hi]])
            )
        v = nv
    return v
