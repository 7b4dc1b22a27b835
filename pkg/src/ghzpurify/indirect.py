"""Indirect purification: GHZ -> two Bell ensembles -> bipartite purification -> GHZ.

Half of the GHZ copies lose Charlie's qudit to an x-basis measurement
(leaving A-B pairs), the other half lose Bob's (leaving A-C pairs).  Each
Bell ensemble is purified by two-party recurrence rounds, and one pair of
each kind is fused back into a GHZ state by Alice's GXOR plus Charlie's
correction, which is deterministic.

Bell rounds:

* ``P1``: keep iff ``l + l' = 0``, leaving ``(l, m - m')``.
* ``P2``: keep iff ``m = m'``, leaving ``(l + l', m)``.
* ``QPA`` (qubits only): a bilateral pi/2 rotation about x, which
  swaps the Bell labels (1, 0) and (1, 1), followed by a ``P2`` round.

The ``auto`` protocol uses QPA rounds for d = 2 and alternates P1, P2
otherwise.
"""
from dataclasses import dataclass, field

import numpy as np

from .direct import (
    CONVERGENCE_GAP,
    MAX_ROUNDS,
    GhzDiagonal,
    IsotropicFamily,
    _finish,
    _number,
    _normalized_tensor,
    bisect_isotropic_threshold,
)
from .exceptions import NonConvergenceError

BELL_PROTOCOLS = ("auto", "alternating", "qpa")


@dataclass(frozen=True)
class BellDiagonal:
    """Mixture sum q[l, m] |phi_lm><phi_lm| of Bell states."""

    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _normalized_tensor(self.q, 2, 1e-9))

    @property
    def d(self):
        return self.q.shape[0]

    @property
    def fidelity(self):
        return float(self.q[0, 0])

    @classmethod
    def point_mass(cls, d, label=(0, 0)):
        q = np.zeros((d, d))
        q[tuple(k % d for k in label)] = 1.0
        return cls(q)

    def distance(self, other):
        return float(np.max(np.abs(self.q - other.q)))


def reduce_to_bell(state, measured_party):
    """Bell-diagonal state left after the x-measurement of B (A-C pair) or C (A-B pair)."""
    if measured_party == "B":
        return BellDiagonal(state.p.sum(axis=1))
    if measured_party == "C":
        return BellDiagonal(state.p.sum(axis=2))
    raise ValueError(f"measured party must be 'B' or 'C', got {measured_party!r}")


def bell_p1_tensor(q):
    d = q.shape[0]
    partner = q[(-np.arange(d)) % d]
    out = np.zeros_like(q)
    for m2 in range(d):
        out += np.roll(q, -m2, axis=1) * partner[:, m2][:, None]
    return _finish(out, "Bell P1")


def bell_p2_tensor(q):
    d = q.shape[0]
    out = np.zeros_like(q)
    for l in range(d):
        out += q[l][None] * np.roll(q, l, axis=0)
    return _finish(out, "Bell P2")


def qpa_rotation_tensor(q):
    """Bell-label action (l, m) -> (l, m + l) of the qubit QPA rotation."""
    if q.shape[0] != 2:
        raise ValueError("the QPA rotation is defined for qubits (d = 2) only")
    return np.array([[q[0, 0], q[0, 1]], [q[1, 1], q[1, 0]]])


def bell_qpa_tensor(q):
    return bell_p2_tensor(qpa_rotation_tensor(q))


_BELL_TENSOR_MAPS = {"P1": bell_p1_tensor, "P2": bell_p2_tensor, "QPA": bell_qpa_tensor}


def bell_p1_map(state):
    out, success = bell_p1_tensor(state.q)
    return BellDiagonal(out), success


def bell_p2_map(state):
    out, success = bell_p2_tensor(state.q)
    return BellDiagonal(out), success


def bell_qpa_map(state):
    out, success = bell_qpa_tensor(state.q)
    return BellDiagonal(out), success


def bell_schedule(d, protocol="auto"):
    """Round tokens used to purify the Bell ensembles."""
    if protocol not in BELL_PROTOCOLS:
        raise ValueError(f"unknown Bell protocol {protocol!r}; use one of {BELL_PROTOCOLS}")
    if protocol == "qpa" or (protocol == "auto" and d == 2):
        if d != 2:
            raise ValueError("the QPA Bell protocol is defined for d = 2 only")
        return ("QPA",)
    return ("P1", "P2")


def recombine_tensor(ab, ac):
    d = ab.shape[0]
    out = np.zeros((d, d, d))
    # p[l1 + l2, m, n] += ab[l1, m] * ac[l2, n]
    for l1 in range(d):
        for l2 in range(d):
            out[(l1 + l2) % d] += np.outer(ab[l1], ac[l2])
    return out


def recombine(ab, ac):
    """Fuse an A-B and an A-C Bell ensemble into a GHZ-diagonal state.

    Bell labels (l1, m) and (l2, n) become the GHZ label (l1 + l2, m, n).
    """
    if ab.d != ac.d:
        raise ValueError(f"dimension mismatch: {ab.d} vs {ac.d}")
    return GhzDiagonal(recombine_tensor(ab.q, ac.q))


def recombined_fidelity(ab, ac):
    d = ab.shape[0]
    return float(sum(ab[l, 0] * ac[(-l) % d, 0] for l in range(d)))


@dataclass
class IndirectRound:
    token: str
    fidelity_after: float
    bell_fidelity_ab: float
    bell_fidelity_ac: float
    success_ab: float
    success_ac: float
    copies_per_survivor: float


@dataclass
class IndirectTrace:
    initial_fidelity: float
    recombined_initial_fidelity: float
    rounds: list = field(default_factory=list)
    converged: bool = None
    final_state: object = field(default=None, repr=False)

    @property
    def final_fidelity(self):
        return self.rounds[-1].fidelity_after if self.rounds else self.recombined_initial_fidelity

    @property
    def copies_per_survivor(self):
        return self.rounds[-1].copies_per_survivor if self.rounds else 2.0

    def to_dict(self):
        return {
            "initial_fidelity": round(self.initial_fidelity, 6),
            "recombined_initial_fidelity": round(self.recombined_initial_fidelity, 6),
            "converged": self.converged,
            "final_fidelity": round(self.final_fidelity, 6),
            "copies_per_survivor": _number(self.copies_per_survivor),
            "rounds": [
                {
                    "round": i + 1,
                    "token": r.token,
                    "fidelity_after": round(r.fidelity_after, 6),
                    "bell_fidelity_ab": round(r.bell_fidelity_ab, 6),
                    "bell_fidelity_ac": round(r.bell_fidelity_ac, 6),
                    "success_ab": round(r.success_ab, 6),
                    "success_ac": round(r.success_ac, 6),
                    "copies_per_survivor": _number(r.copies_per_survivor),
                }
                for i, r in enumerate(self.rounds)
            ],
        }


def run_indirect(state, repetitions=None, target_fidelity=None, protocol="auto",
                 max_rounds=MAX_ROUNDS):
    """Run the indirect protocol, purifying both Bell ensembles in lockstep.

    Copies per output start at 2 (one GHZ copy per Bell pair, one pair of
    each kind per output) and each Bell round multiplies that ensemble's
    share by ``2 / success``.  Fidelities in the trace are those of the
    recombined GHZ state.
    """
    if (repetitions is None) == (target_fidelity is None):
        raise ValueError("give exactly one of repetitions or target_fidelity")
    tokens = bell_schedule(state.d, protocol)
    ab = reduce_to_bell(state, "C").q
    ac = reduce_to_bell(state, "B").q
    trace = IndirectTrace(state.fidelity, recombined_fidelity(ab, ac))
    cost_ab = cost_ac = 1.0
    n_rounds = repetitions if repetitions is not None else max_rounds
    cycle_start = (ab, ac)
    for r in range(n_rounds):
        token = tokens[r % len(tokens)]
        ab, s_ab = _BELL_TENSOR_MAPS[token](ab)
        ac, s_ac = _BELL_TENSOR_MAPS[token](ac)
        cost_ab *= 2.0 / s_ab
        cost_ac *= 2.0 / s_ac
        fid = recombined_fidelity(ab, ac)
        trace.rounds.append(IndirectRound(token, fid, float(ab[0, 0]), float(ac[0, 0]),
                                          s_ab, s_ac, cost_ab + cost_ac))
        if target_fidelity is not None and fid >= target_fidelity:
            trace.converged = True
            break
        if (r + 1) % len(tokens) == 0:
            if (target_fidelity is not None and np.array_equal(ab, cycle_start[0])
                    and np.array_equal(ac, cycle_start[1])):
                break  # exact fixed cycle below the target
            cycle_start = (ab, ac)
    trace.final_state = GhzDiagonal(recombine_tensor(ab, ac))
    if target_fidelity is not None and not trace.converged:
        trace.converged = False
        raise NonConvergenceError(
            f"recombined fidelity {trace.final_fidelity:.6f} after {len(trace.rounds)} rounds "
            f"is below target {target_fidelity}",
            trace,
        )
    return trace


def converges_indirect(state, protocol="auto", max_rounds=MAX_ROUNDS, gap=CONVERGENCE_GAP):
    tokens = bell_schedule(state.d, protocol)
    ab = reduce_to_bell(state, "C").q
    ac = reduce_to_bell(state, "B").q
    for r in range(max_rounds):
        token = tokens[r % len(tokens)]
        ab, _ = _BELL_TENSOR_MAPS[token](ab)
        ac, _ = _BELL_TENSOR_MAPS[token](ac)
        if recombined_fidelity(ab, ac) >= 1.0 - gap:
            return True
    return False


def threshold_fidelity_indirect(d, tolerance=1e-4, protocol="auto"):
    """Threshold fidelity (of the GHZ input) of the indirect protocol."""
    return bisect_isotropic_threshold(
        d, lambda x: converges_indirect(IsotropicFamily(d, x).state(), protocol), tolerance
    )


def expected_copies_indirect_for_state(state, target_fidelity, protocol="auto",
                                       max_rounds=MAX_ROUNDS):
    if not target_fidelity < 1.0:
        raise ValueError("target fidelity must be below 1")
    ab = reduce_to_bell(state, "C").q
    ac = reduce_to_bell(state, "B").q
    if recombined_fidelity(ab, ac) >= target_fidelity:
        return 2.0
    return run_indirect(state, target_fidelity=target_fidelity, protocol=protocol,
                        max_rounds=max_rounds).copies_per_survivor


def expected_copies_indirect(d, x, target_fidelity, protocol="auto"):
    return expected_copies_indirect_for_state(IsotropicFamily(d, x).state(), target_fidelity, protocol)
