"""Direct recurrence purification of GHZ-diagonal states.

A GHZ-diagonal state is the probability tensor ``p[l, m, n]`` over the
GHZ basis.  Two copies go in per round and at most one comes out:

* P1 (phase round) keeps a pair iff ``l + l' = 0 (mod d)`` and leaves
  ``(l, m - m', n - n')``.
* P2 (level round) keeps a pair iff ``m = m'`` and ``n = n'`` and leaves
  ``(l + l', m, n)``.

Cost accounting: every round consumes two survivors of the previous round
and keeps one with the round's success probability, so the expected number
of input copies per output copy grows by ``2 / success`` per round.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from .exceptions import BracketError, DegeneratePostselectionError, NonConvergenceError

log = logging.getLogger(__name__)

TOKENS = ("P1", "P2")
DEGENERATE_CUTOFF = 1e-15
CONVERGENCE_GAP = 1e-6
MAX_ROUNDS = 500


def _normalized_tensor(p, ndim, sum_tol):
    p = np.array(p, dtype=float)
    if p.ndim != ndim or len(set(p.shape)) != 1 or p.shape[0] < 2:
        raise ValueError(f"expected a d^{ndim} tensor with d >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be finite")
    if p.min() < -1e-12:
        raise ValueError(f"negative probability {p.min():.3g}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > sum_tol:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    p /= total
    p.setflags(write=False)
    return p


@dataclass(frozen=True)
class GhzDiagonal:
    """Mixture sum p[l, m, n] |psi_lmn><psi_lmn| of GHZ states."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _normalized_tensor(self.p, 3, 1e-9))

    @property
    def d(self):
        return self.p.shape[0]

    @property
    def fidelity(self):
        return float(self.p[0, 0, 0])

    @classmethod
    def point_mass(cls, d, label=(0, 0, 0)):
        p = np.zeros((d, d, d))
        p[tuple(k % d for k in label)] = 1.0
        return cls(p)

    @classmethod
    def isotropic(cls, d, x):
        return IsotropicFamily(d, x).state()

    @classmethod
    def from_flat(cls, d, values):
        values = np.asarray(values, dtype=float)
        if values.size != d ** 3:
            raise ValueError(f"need {d ** 3} probabilities for d={d}, got {values.size}")
        return cls(values.reshape(d, d, d))

    def distance(self, other):
        return float(np.max(np.abs(self.p - other.p)))


@dataclass(frozen=True)
class IsotropicFamily:
    """x |psi_000><psi_000| + (1 - x) 1 / d^3."""

    d: int
    x: float

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"x must lie in [0, 1], got {self.x}")

    @property
    def fidelity(self):
        return fidelity_from_x(self.d, self.x)

    def state(self):
        d = self.d
        p = np.full((d, d, d), (1.0 - self.x) / d ** 3)
        p[0, 0, 0] += self.x
        return GhzDiagonal(p)


def fidelity_from_x(d, x, parties=3):
    return x + (1.0 - x) / d ** parties


def x_from_fidelity(d, fidelity, parties=3):
    floor = 1.0 / d ** parties
    x = (fidelity - floor) / (1.0 - floor)
    if not -1e-12 <= x <= 1.0 + 1e-12:
        raise ValueError(f"fidelity {fidelity} is outside the isotropic range [{floor:.6g}, 1]")
    return min(max(x, 0.0), 1.0)


@dataclass(frozen=True)
class Schedule:
    tokens: tuple = ("P1", "P2")

    def __post_init__(self):
        tokens = tuple(str(t).strip().upper() for t in self.tokens)
        if not tokens:
            raise ValueError("a schedule needs at least one round")
        bad = [t for t in tokens if t not in TOKENS]
        if bad:
            raise ValueError(f"unknown round token(s) {bad}; use P1 or P2")
        object.__setattr__(self, "tokens", tokens)

    @classmethod
    def parse(cls, text):
        return cls(tuple(t for t in text.split(",") if t.strip()))

    def __len__(self):
        return len(self.tokens)

    def token(self, round_index):
        return self.tokens[round_index % len(self.tokens)]

    def __str__(self):
        return ",".join(self.tokens)


ALTERNATING = Schedule(("P1", "P2"))


@dataclass
class RoundRecord:
    token: str
    fidelity_after: float
    success_probability: float
    copies_per_survivor: float


@dataclass
class PurificationTrace:
    initial_fidelity: float
    rounds: list = field(default_factory=list)
    converged: bool = None
    final_state: object = field(default=None, repr=False)

    @property
    def final_fidelity(self):
        return self.rounds[-1].fidelity_after if self.rounds else self.initial_fidelity

    @property
    def copies_per_survivor(self):
        return self.rounds[-1].copies_per_survivor if self.rounds else 1.0

    def fidelities(self):
        return [self.initial_fidelity] + [r.fidelity_after for r in self.rounds]

    def to_dict(self):
        return {
            "initial_fidelity": round(self.initial_fidelity, 6),
            "converged": self.converged,
            "final_fidelity": round(self.final_fidelity, 6),
            "copies_per_survivor": _number(self.copies_per_survivor),
            "rounds": [
                {
                    "round": i + 1,
                    "token": r.token,
                    "fidelity_after": round(r.fidelity_after, 6),
                    "success_probability": round(r.success_probability, 6),
                    "copies_per_survivor": _number(r.copies_per_survivor),
                }
                for i, r in enumerate(self.rounds)
            ],
        }


def _number(value):
    return round(value, 6) if np.isfinite(value) else None


def _finish(out, token):
    success = float(out.sum())
    if success < DEGENERATE_CUTOFF:
        raise DegeneratePostselectionError(f"{token} keeps no copies (success probability {success:.3g})")
    return out / success, success


def p1_tensor(p):
    """Unnormalized P1 output for a probability tensor; returns (tensor, success)."""
    d = p.shape[0]
    partner = p[(-np.arange(d)) % d]  # partner[l] = p[d - l]
    out = np.zeros_like(p)
    # out[l, mu, nu] = sum_{m', n'} p[l, mu + m', nu + n'] * p[-l, m', n']
    for m2 in range(d):
        for n2 in range(d):
            out += np.roll(p, (-m2, -n2), axis=(1, 2)) * partner[:, m2, n2][:, None, None]
    return _finish(out, "P1")


def p2_tensor(p):
    """Unnormalized P2 output; the convolution runs over the first axis only."""
    d = p.shape[0]
    out = np.zeros_like(p)
    # out[lam] = sum_l p[l] * p[lam - l], elementwise in the remaining axes
    for l in range(d):
        out += p[l][None] * np.roll(p, l, axis=0)
    return _finish(out, "P2")


def p1_map(state):
    """Phase round; returns ``(new_state, success_probability)``."""
    out, success = p1_tensor(state.p)
    return GhzDiagonal(out), success


def p2_map(state):
    """Level round; returns ``(new_state, success_probability)``."""
    out, success = p2_tensor(state.p)
    return GhzDiagonal(out), success


ROUND_MAPS = {"P1": p1_map, "P2": p2_map}


def run_schedule(state, schedule=ALTERNATING, repetitions=None, target_fidelity=None,
                 max_rounds=MAX_ROUNDS):
    """Apply the schedule's rounds cyclically.

    Exactly one stopping rule: a fixed number of ``repetitions`` (rounds),
    or ``target_fidelity``, checked after every round.  Missing the target
    within ``max_rounds`` raises :class:`NonConvergenceError` with the
    trace attached.
    """
    if (repetitions is None) == (target_fidelity is None):
        raise ValueError("give exactly one of repetitions or target_fidelity")
    if isinstance(schedule, str):
        schedule = Schedule.parse(schedule)
    n_rounds = repetitions if repetitions is not None else max_rounds
    trace = PurificationTrace(initial_fidelity=state.fidelity)
    copies = 1.0
    cycle_start = state
    for r in range(n_rounds):
        token = schedule.token(r)
        state, success = ROUND_MAPS[token](state)
        copies *= 2.0 / success
        trace.rounds.append(RoundRecord(token, state.fidelity, success, copies))
        if target_fidelity is not None and state.fidelity >= target_fidelity:
            trace.converged = True
            break
        if (r + 1) % len(schedule) == 0:
            if target_fidelity is not None and np.array_equal(state.p, cycle_start.p):
                break  # exact fixed cycle below the target: it can never be reached
            cycle_start = state
    trace.final_state = state
    if target_fidelity is not None and not trace.converged:
        trace.converged = False
        raise NonConvergenceError(
            f"fidelity {state.fidelity:.6f} after {len(trace.rounds)} rounds is below target {target_fidelity}",
            trace,
        )
    return trace


def converges(state, schedule=ALTERNATING, max_rounds=MAX_ROUNDS, gap=CONVERGENCE_GAP):
    """Whether iterating the schedule reaches fidelity >= 1 - gap within the cap."""
    p = state.p
    tensor_maps = {"P1": p1_tensor, "P2": p2_tensor}
    for r in range(max_rounds):
        p, _ = tensor_maps[schedule.token(r)](p)
        if p[0, 0, 0] >= 1.0 - gap:
            return True
    return False


def bisect_isotropic_threshold(d, converges_at_x, tolerance):
    """Smallest isotropic fidelity whose iteration converges, to within ``tolerance``.

    ``converges_at_x`` classifies a mixing parameter.  The bracket is
    ``[0, 1]`` in x; the returned value is the bracket midpoint in fidelity.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if not converges_at_x(1.0):
        raise BracketError(f"the pure state does not converge at d={d}")
    lo, hi = 0.0, 1.0
    if converges_at_x(lo):
        return fidelity_from_x(d, lo)
    while fidelity_from_x(d, hi) - fidelity_from_x(d, lo) > tolerance:
        mid = 0.5 * (lo + hi)
        if converges_at_x(mid):
            hi = mid
        else:
            lo = mid
    log.debug("d=%d threshold bracket x in [%.8f, %.8f]", d, lo, hi)
    return 0.5 * (fidelity_from_x(d, lo) + fidelity_from_x(d, hi))


def threshold_fidelity_direct(d, schedule=ALTERNATING, tolerance=1e-4):
    """Threshold fidelity of the direct protocol on the isotropic family."""
    return bisect_isotropic_threshold(
        d, lambda x: converges(IsotropicFamily(d, x).state(), schedule), tolerance
    )


def expected_copies_for_state(state, target_fidelity, schedule=ALTERNATING, max_rounds=MAX_ROUNDS):
    """Input copies consumed per output copy to first reach ``target_fidelity``.

    An input already at the target costs one copy and no rounds.
    """
    if not target_fidelity < 1.0:
        raise ValueError("target fidelity must be below 1")
    if state.fidelity >= target_fidelity:
        return 1.0
    return run_schedule(state, schedule, target_fidelity=target_fidelity,
                        max_rounds=max_rounds).copies_per_survivor


def expected_copies(d, x, target_fidelity, schedule=ALTERNATING):
    return expected_copies_for_state(IsotropicFamily(d, x).state(), target_fidelity, schedule)
