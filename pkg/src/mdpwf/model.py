"""Core data model: MDPs with per-principal rewards and discount factors.

Model values are immutable after construction and hold exact rationals;
see `numeric` for how computation modes consume them.  The on-disk format
is a small JSON record documented in the README.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import FormatError, LoadError
from .numeric import FLOAT, ROW_SUM_TOL, NumericMode, as_fraction, format_fraction


@dataclass(frozen=True)
class Principal:
    name: str
    discount: Fraction


@dataclass
class Mdp:
    """Finite MDP with dense state indices and per-state action lists.

    transitions[s][a] is a list of (successor index, probability) pairs.
    """

    states: list[str]
    actions: list[list[str]]
    transitions: list[list[list[tuple[int, Fraction]]]]

    @property
    def n_states(self):
        return len(self.states)

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None


@dataclass
class AsymMdp:
    """An MDP shared by several principals with descending discount factors.

    rewards[s][a][i] is principal i's immediate reward for taking action a
    in state s.  Treat instances as immutable; solvers cache derived views.
    """

    mdp: Mdp
    principals: list[Principal]
    rewards: list[list[list[Fraction]]]
    metadata: dict = field(default_factory=dict, compare=False)
    _float_view: object = field(default=None, repr=False, compare=False)

    # -- construction -------------------------------------------------

    @classmethod
    def build(cls, states, principals, actions, metadata=None):
        """Assemble a model from name-based action specs.

        `actions` is an iterable of (state, action, transitions, reward)
        where transitions is a list of (successor name, prob) and reward
        is a scalar (shared by all principals), a per-principal list, or
        None for all-zero.  Missing rewards materialize as 0.
        """
        states = list(states)
        principal_objs = [
            Principal(str(n), as_fraction(d)) for n, d in principals
        ]
        index = {}
        for i, s in enumerate(states):
            if s in index:
                raise FormatError(f"duplicate state name {s!r}")
            index[s] = i
        n_p = len(principal_objs)
        act_names = [[] for _ in states]
        act_trans = [[] for _ in states]
        act_rewards = [[] for _ in states]
        for spec in actions:
            state, action, transitions, reward = spec
            if state not in index:
                raise FormatError(f"action {action!r} refers to unknown state {state!r}")
            s = index[state]
            if action in act_names[s]:
                raise FormatError(f"duplicate action {action!r} in state {state!r}")
            succ = []
            for to, prob in transitions:
                if to not in index:
                    raise FormatError(
                        f"transition of ({state!r}, {action!r}) targets unknown state {to!r}"
                    )
                succ.append((index[to], as_fraction(prob)))
            if reward is None:
                rew = [Fraction(0)] * n_p
            elif isinstance(reward, (list, tuple)):
                if len(reward) > n_p:
                    raise FormatError(
                        f"reward list of ({state!r}, {action!r}) longer than principal list"
                    )
                rew = [as_fraction(r) for r in reward]
                rew += [Fraction(0)] * (n_p - len(rew))
            else:
                rew = [as_fraction(reward)] * n_p
            act_names[s].append(str(action))
            act_trans[s].append(succ)
            act_rewards[s].append(rew)
        mdp = Mdp(states=states, actions=act_names, transitions=act_trans)
        return cls(
            mdp=mdp,
            principals=principal_objs,
            rewards=act_rewards,
            metadata=dict(metadata or {}),
        )

    # -- derived views -------------------------------------------------

    @property
    def n_states(self):
        return self.mdp.n_states

    @property
    def n_principals(self):
        return len(self.principals)

    @property
    def discounts(self) -> list[Fraction]:
        return [p.discount for p in self.principals]

    def state_index(self, name):
        return self.mdp.state_index(name)

    def action_index(self, s: int, name: str) -> int:
        try:
            return self.mdp.actions[s].index(name)
        except ValueError:
            raise KeyError(
                f"state {self.mdp.states[s]!r} has no action {name!r}"
            ) from None

    def rows(self):
        """Iterate (state, local action index) over all enabled pairs."""
        for s in range(self.n_states):
            for a in range(len(self.mdp.actions[s])):
                yield s, a

    def with_discounts(self, discounts) -> "AsymMdp":
        """Copy of the model with replaced discount factors."""
        if len(discounts) != self.n_principals:
            raise ValueError("discount count must match principal count")
        principals = [
            Principal(p.name, as_fraction(d))
            for p, d in zip(self.principals, discounts)
        ]
        return AsymMdp(
            mdp=self.mdp,
            principals=principals,
            rewards=self.rewards,
            metadata=dict(self.metadata),
        )

    def float_view(self) -> "FloatView":
        if self._float_view is None:
            self._float_view = FloatView(self)
        return self._float_view


class FloatView:
    """Flattened binary64 arrays over the enabled (state, action) rows."""

    def __init__(self, asym: AsymMdp):
        mdp = asym.mdp
        n_states = mdp.n_states
        row_ptr = np.zeros(n_states + 1, dtype=np.int64)
        for s in range(n_states):
            row_ptr[s + 1] = row_ptr[s] + len(mdp.actions[s])
        n_rows = int(row_ptr[-1])
        row_state = np.zeros(n_rows, dtype=np.int64)
        row_action = np.zeros(n_rows, dtype=np.int64)
        succ_counts = []
        succ_idx = []
        succ_prob = []
        rewards = np.zeros((n_rows, asym.n_principals), dtype=np.float64)
        r = 0
        for s in range(n_states):
            for a in range(len(mdp.actions[s])):
                row_state[r] = s
                row_action[r] = a
                pairs = mdp.transitions[s][a]
                succ_counts.append(len(pairs))
                for t, p in pairs:
                    succ_idx.append(t)
                    succ_prob.append(float(p))
                rewards[r] = [float(x) for x in asym.rewards[s][a]]
                r += 1
        self.n_states = n_states
        self.n_rows = n_rows
        self.n_principals = asym.n_principals
        self.discounts = np.array([float(d) for d in asym.discounts])
        self.row_ptr = row_ptr
        self.row_state = row_state
        self.row_action = row_action
        self.succ_ptr = np.concatenate(
            [[0], np.cumsum(np.asarray(succ_counts, dtype=np.int64))]
        )
        self.succ_idx = np.asarray(succ_idx, dtype=np.int64)
        self.succ_prob = np.asarray(succ_prob, dtype=np.float64)
        self.rewards = rewards

    def row_index(self, s: int, a: int) -> int:
        return int(self.row_ptr[s]) + a


# -- validation ---------------------------------------------------------


@dataclass
class ValidationResult:
    violations: list[str]

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(asym: AsymMdp, mode: NumericMode = FLOAT) -> ValidationResult:
    """Check every model invariant; violations are data, not exceptions."""
    v = []
    mdp = asym.mdp
    if not asym.principals:
        v.append("model has no principals")
    for p in asym.principals:
        if not (0 < p.discount < 1):
            v.append(f"discount of principal {p.name!r} = {format_fraction(p.discount)} "
                     "is outside (0, 1)")
    for a, b in zip(asym.principals, asym.principals[1:]):
        if a.discount <= b.discount:
            v.append(
                "discounts not strictly descending: "
                f"{a.name!r} ({format_fraction(a.discount)}) vs "
                f"{b.name!r} ({format_fraction(b.discount)})"
            )
    seen_states = set()
    for name in mdp.states:
        if name in seen_states:
            v.append(f"duplicate state name {name!r}")
        seen_states.add(name)
    for s, name in enumerate(mdp.states):
        if not mdp.actions[s]:
            v.append(f"state {name!r} has no enabled action")
        seen = set()
        for a, act in enumerate(mdp.actions[s]):
            if act in seen:
                v.append(f"duplicate action {act!r} in state {name!r}")
            seen.add(act)
            pairs = mdp.transitions[s][a]
            if not pairs:
                v.append(f"({name!r}, {act!r}) has no successors")
                continue
            total = Fraction(0)
            for t, p in pairs:
                if not (0 <= t < mdp.n_states):
                    v.append(f"({name!r}, {act!r}) targets invalid state index {t}")
                if not (0 < p <= 1):
                    v.append(
                        f"({name!r}, {act!r}) has probability "
                        f"{format_fraction(p)} outside (0, 1]"
                    )
                total += p
            if mode.is_exact:
                if total != 1:
                    v.append(
                        f"({name!r}, {act!r}) probabilities sum to "
                        f"{format_fraction(total)}, not 1"
                    )
            elif abs(float(total) - 1.0) > ROW_SUM_TOL:
                v.append(
                    f"({name!r}, {act!r}) probabilities sum to {float(total)!r}, not 1"
                )
            if len(asym.rewards[s][a]) != asym.n_principals:
                v.append(f"({name!r}, {act!r}) reward list has wrong length")
    return ValidationResult(v)


def merge_equal_discounts(asym: AsymMdp) -> AsymMdp:
    """Merge principals sharing a discount factor, summing their rewards.

    Social welfare of every strategy is preserved; the output has strictly
    descending discounts.
    """
    order = sorted(
        range(asym.n_principals),
        key=lambda i: (-asym.principals[i].discount, i),
    )
    groups: list[list[int]] = []
    for i in order:
        if groups and asym.principals[groups[-1][0]].discount == asym.principals[i].discount:
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) == asym.n_principals and order == list(range(asym.n_principals)):
        return asym
    principals = [
        Principal(
            "+".join(asym.principals[i].name for i in g),
            asym.principals[g[0]].discount,
        )
        for g in groups
    ]
    rewards = [
        [
            [sum((asym.rewards[s][a][i] for i in g), Fraction(0)) for g in groups]
            for a in range(len(asym.mdp.actions[s]))
        ]
        for s in range(asym.n_states)
    ]
    return AsymMdp(
        mdp=asym.mdp,
        principals=principals,
        rewards=rewards,
        metadata=dict(asym.metadata),
    )


# -- discount spacing ----------------------------------------------------


@dataclass
class SpacingPair:
    index: int  # pair (index, index + 1)
    spacing: Fraction  # 1 / (lam_i / lam_{i+1} - 1)
    reasonably_spaced: bool


@dataclass
class SpacingReport:
    bound: Fraction
    pairs: list[SpacingPair]

    @property
    def all_spaced(self):
        return all(p.reasonably_spaced for p in self.pairs)


def spacing_report(asym: AsymMdp, bound) -> SpacingReport:
    """Report 1/(lam_i/lam_{i+1} - 1) for each consecutive discount pair.

    A pair is flagged reasonably spaced when the value is <= bound.
    """
    bound = as_fraction(bound)
    if bound <= 0:
        raise ValueError("bound must be positive")
    pairs = []
    lams = asym.discounts
    for i in range(len(lams) - 1):
        if lams[i] <= lams[i + 1]:
            raise ValueError("spacing_report requires strictly descending discounts")
        spacing = 1 / (lams[i] / lams[i + 1] - 1)
        pairs.append(SpacingPair(i, spacing, spacing <= bound))
    return SpacingReport(bound=bound, pairs=pairs)


# -- file format ----------------------------------------------------------

_TOP_FIELDS = {"states", "principals", "actions", "metadata"}
_PRINCIPAL_FIELDS = {"name", "discount"}
_ACTION_FIELDS = {"state", "action", "reward", "transitions"}
_TRANSITION_FIELDS = {"to", "prob"}


def _check_fields(record, allowed, where):
    if not isinstance(record, dict):
        raise FormatError("expected an object", location=where)
    for key in record:
        if key not in allowed:
            raise FormatError(f"unknown field {key!r}", location=where)


def _parse_number(value, where):
    try:
        return as_fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise FormatError(f"bad number {value!r}: {e}", location=where) from None


def loads(text: str, validate_mode: NumericMode = FLOAT) -> AsymMdp:
    """Parse the JSON model format; validation failures raise LoadError."""
    try:
        # parse_float keeps the literal text so decimals stay exact
        raw = json.loads(text, parse_float=str)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", location=f"line {e.lineno}") from None
    if not isinstance(raw, dict):
        raise FormatError("top-level value must be an object")
    _check_fields(raw, _TOP_FIELDS, "top level")
    for fld in ("states", "principals", "actions"):
        if fld not in raw:
            raise FormatError(f"missing field {fld!r}", location="top level")
        if not isinstance(raw[fld], list):
            raise FormatError(f"field {fld!r} must be a list", location="top level")
    principals = []
    for k, p in enumerate(raw["principals"]):
        where = f"principals[{k}]"
        _check_fields(p, _PRINCIPAL_FIELDS, where)
        if "name" not in p or "discount" not in p:
            raise FormatError("principal needs name and discount", location=where)
        principals.append((p["name"], _parse_number(p["discount"], where)))
    actions = []
    for k, rec in enumerate(raw["actions"]):
        where = f"actions[{k}]"
        _check_fields(rec, _ACTION_FIELDS, where)
        for fld in ("state", "action", "transitions"):
            if fld not in rec:
                raise FormatError(f"missing field {fld!r}", location=where)
        reward = rec.get("reward")
        if reward is not None:
            if not isinstance(reward, list):
                raise FormatError("reward must be a list", location=where)
            reward = [_parse_number(x, where) for x in reward]
        if not isinstance(rec["transitions"], list):
            raise FormatError("transitions must be a list", location=where)
        transitions = []
        for j, tr in enumerate(rec["transitions"]):
            twhere = f"{where}.transitions[{j}]"
            _check_fields(tr, _TRANSITION_FIELDS, twhere)
            if "to" not in tr or "prob" not in tr:
                raise FormatError("transition needs to and prob", location=twhere)
            transitions.append((tr["to"], _parse_number(tr["prob"], twhere)))
        actions.append((rec["state"], rec["action"], transitions, reward))
    asym = AsymMdp.build(
        states=raw["states"],
        principals=principals,
        actions=actions,
        metadata=raw.get("metadata"),
    )
    result = validate(asym, validate_mode)
    if not result.ok:
        raise LoadError(result.violations)
    return asym


def load(path, validate_mode: NumericMode = FLOAT) -> AsymMdp:
    with open(path, "r", encoding="utf-8") as f:
        return loads(f.read(), validate_mode)


def _json_number(q: Fraction):
    return q.numerator if q.denominator == 1 else format_fraction(q)


def dumps(asym: AsymMdp) -> str:
    """Canonical serialization: declaration-ordered states, lexicographic
    actions within each state, exact 'p/q' literals.  Stable byte-for-byte."""
    mdp = asym.mdp
    actions = []
    for s in range(asym.n_states):
        for a in sorted(range(len(mdp.actions[s])), key=lambda a: mdp.actions[s][a]):
            actions.append(
                {
                    "state": mdp.states[s],
                    "action": mdp.actions[s][a],
                    "reward": [_json_number(r) for r in asym.rewards[s][a]],
                    "transitions": [
                        {"to": mdp.states[t], "prob": _json_number(p)}
                        for t, p in mdp.transitions[s][a]
                    ],
                }
            )
    doc = {
        "states": list(mdp.states),
        "principals": [
            {"name": p.name, "discount": _json_number(p.discount)}
            for p in asym.principals
        ],
        "actions": actions,
    }
    if asym.metadata:
        doc["metadata"] = asym.metadata
    return json.dumps(doc, indent=2) + "\n"


def save(asym: AsymMdp, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(asym))
