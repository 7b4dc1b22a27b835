"""Circuit-level reference simulation of every protocol step.

Everything here runs the actual gates on dense state vectors (via
:mod:`ghzpurify.linalg`) and reads the result back in the GHZ or Bell
basis.  Mixed GHZ-diagonal inputs are handled as ensembles of basis
states; the per-label-pair outcome tables are cached per dimension.

Wire layout for two GHZ copies: ``A1, B1, C1, A2, B2, C2`` (copy 1 holds
the controls).  For two Bell copies: ``A1, B1, A2, B2``.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import itertools

import numpy as np

from .direct import GhzDiagonal
from .ghz import (
    BellLabel,
    GhzLabel,
    all_bell_labels,
    all_ghz_labels,
    bell_amplitudes,
    bell_vector,
    ghz_amplitudes,
    ghz_vector,
)
from .exceptions import ResourceGuardError
from .indirect import BellDiagonal
from .linalg import PureState, apply_local, condition, fourier, gxor, phase_z, shift_x

MAX_PAIR_D = 4
MAX_REDUCTION_D = 6
MAX_OFFDIAGONAL_D = 3
AGREEMENT_TOL = 1e-10


def _guard(d, limit, what):
    if d > limit:
        raise ResourceGuardError(f"{what} is limited to d <= {limit} (got d={d})")


def _measure_targets(state, n_controls, keep):
    """Measure every wire after the first ``n_controls`` in the standard basis.

    Returns ``[(outcomes, probability, control_state)]`` for the outcome
    tuples accepted by ``keep``.
    """
    branches = [((), 1.0, state)]
    while branches and branches[0][2].n_wires > n_controls:
        nxt = []
        for outs, p, s in branches:
            for k in range(s.dims[n_controls]):
                pk, rest = condition(s, n_controls, k)
                if rest is not None:
                    nxt.append((outs + (k,), p * pk, rest))
        branches = nxt
    return [b for b in branches if keep(b[0])]


def p1_premeasurement_state(d, pair_state):
    """Two-copy state just before the P1 target measurements."""
    f = fourier(d)
    s = pair_state
    for w in range(3):
        s = apply_local(f.conj().T, [w], s)
        s = apply_local(f, [w + 3], s)
    for w in range(3):
        s = apply_local(gxor(d), [w, w + 3], s)
    return s


def p1_circuit(d, pair_state):
    """Surviving control states of a P1 round: keep iff p + q + r = 0 (mod d)."""
    s = p1_premeasurement_state(d, pair_state)
    kept = _measure_targets(s, 3, lambda o: sum(o) % d == 0)
    f = fourier(d)
    out = []
    for outs, p, ctrl in kept:
        for w in range(3):
            ctrl = apply_local(f, [w], ctrl)
        out.append((outs, p, ctrl))
    return out


def p2_circuit(d, pair_state):
    """Surviving control states of a P2 round: keep iff p = q = r."""
    s = pair_state
    for w in range(3):
        s = apply_local(gxor(d), [w, w + 3], s)
    return _measure_targets(s, 3, lambda o: len(set(o)) == 1)


def qpa_rotation_2(d=2):
    """Local unitaries (Alice, Bob) of the qubit QPA rotation."""
    if d != 2:
        raise ValueError("the QPA rotation is defined for d = 2 only")
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    plus = (np.eye(2) + 1j * sx) / np.sqrt(2)
    return plus.conj().T, plus


def bell_circuit(d, pair_state, token):
    """Surviving control pairs of a two-party round on ``A1, B1, A2, B2``."""
    s = pair_state
    if token == "P1":
        f = fourier(d)
        for w in range(2):
            s = apply_local(f.conj().T, [w], s)
            s = apply_local(f, [w + 2], s)
    elif token == "QPA":
        ua, ub = qpa_rotation_2(d)
        for w, u in ((0, ua), (1, ub), (2, ua), (3, ub)):
            s = apply_local(u, [w], s)
    elif token != "P2":
        raise ValueError(f"unknown Bell round {token!r}")
    for w in range(2):
        s = apply_local(gxor(d), [w, w + 2], s)
    if token == "P1":
        kept = _measure_targets(s, 2, lambda o: sum(o) % d == 0)
        f = fourier(d)
        return [(o, p, apply_local(f, [1], apply_local(f, [0], c))) for o, p, c in kept]
    return _measure_targets(s, 2, lambda o: len(set(o)) == 1)


@dataclass
class RoundTable:
    """Outcome of one round for every basis-label pair.

    ``kept[i, j]`` is the survival probability of pair (label i, label j);
    ``diag[i, j]`` the (unnormalized) diagonal contribution of the
    survivors; ``offdiag`` the largest off-diagonal magnitude seen in any
    survivor's density matrix.
    """

    kept: np.ndarray
    diag: np.ndarray
    offdiag: float = 0.0
    labels: list = field(default_factory=list)


def _accumulate_survivors(survivors, amplitudes):
    diag = 0.0
    off = 0.0
    total = 0.0
    for _, prob, ctrl in survivors:
        a = amplitudes(ctrl).reshape(-1)
        w = np.abs(a) ** 2
        diag = diag + prob * w
        total += prob
        rho = np.outer(a, a.conj())
        np.fill_diagonal(rho, 0.0)
        off = max(off, float(np.max(np.abs(rho))) if rho.size else 0.0)
    return total, diag, off


@lru_cache(maxsize=None)
def ghz_round_table(d, token):
    _guard(d, MAX_PAIR_D, "two-copy GHZ simulation")
    circuit = {"P1": p1_circuit, "P2": p2_circuit}[token]
    labels = all_ghz_labels(d)
    vecs = [ghz_vector(d, lab) for lab in labels]
    n = len(labels)
    kept = np.zeros((n, n))
    diag = np.zeros((n, n, n))
    worst = 0.0
    for i, j in itertools.product(range(n), repeat=2):
        total, dg, off = _accumulate_survivors(circuit(d, vecs[i].kron(vecs[j])), ghz_amplitudes)
        kept[i, j] = total
        diag[i, j] = dg
        worst = max(worst, off)
    return RoundTable(kept, diag, worst, labels)


@lru_cache(maxsize=None)
def bell_round_table(d, token):
    _guard(d, MAX_PAIR_D, "two-copy Bell simulation")
    labels = all_bell_labels(d)
    vecs = [bell_vector(d, lab) for lab in labels]
    n = len(labels)
    kept = np.zeros((n, n))
    diag = np.zeros((n, n, n))
    worst = 0.0
    for i, j in itertools.product(range(n), repeat=2):
        survivors = bell_circuit(d, vecs[i].kron(vecs[j]), token)
        total, dg, off = _accumulate_survivors(survivors, bell_amplitudes)
        kept[i, j] = total
        diag[i, j] = dg
        worst = max(worst, off)
    return RoundTable(kept, diag, worst, labels)


def _apply_table(table, weights):
    w = weights.reshape(-1)
    joint = np.outer(w, w)
    success = float(np.sum(joint * table.kept))
    out = np.einsum("ij,ijk->k", joint, table.diag)
    return out, success


def simulate_p1_round(d, state):
    """Circuit-level P1 round on a GHZ-diagonal input: ``(output, success)``."""
    out, success = _apply_table(ghz_round_table(d, "P1"), state.p)
    return GhzDiagonal(out.reshape(d, d, d) / success), success


def simulate_p2_round(d, state):
    out, success = _apply_table(ghz_round_table(d, "P2"), state.p)
    return GhzDiagonal(out.reshape(d, d, d) / success), success


def simulate_bell_round(d, state, token):
    out, success = _apply_table(bell_round_table(d, token), state.q)
    return BellDiagonal(out.reshape(d, d) / success), success


def simulate_ghz_round_raw(d, state, token):
    """Unnormalized survivor diagonal and success probability (for sum checks)."""
    out, success = _apply_table(ghz_round_table(d, token), state.p)
    return out.reshape(d, d, d), success


def simulate_reduction_step(d, label, measured_party="B"):
    """Per-outcome Bell decomposition after the x-measurement and Alice's Z^k.

    Returns ``{k: {BellLabel: probability}}``, with the outcome probability
    folded in (so all values sum to 1).
    """
    _guard(d, MAX_REDUCTION_D, "reduction simulation")
    wire = {"B": 1, "C": 2}[measured_party]
    label = label if isinstance(label, GhzLabel) else GhzLabel(*label, d=d)
    s = apply_local(fourier(d).conj().T, [wire], ghz_vector(d, label))
    z = phase_z(d)
    result = {}
    for k in range(d):
        pk, rest = condition(s, wire, k)
        if rest is None:
            continue
        rest = apply_local(np.linalg.matrix_power(z, k), [0], rest)
        amps = np.abs(bell_amplitudes(rest)) ** 2
        result[k] = {
            BellLabel(l, m, d): pk * float(amps[l, m])
            for l, m in itertools.product(range(d), repeat=2)
            if amps[l, m] > 1e-14
        }
    return result


def simulate_reduce_to_bell(d, state, measured_party):
    q = np.zeros((d, d))
    for lab in all_ghz_labels(d):
        weight = state.p[lab.as_tuple()]
        if weight == 0:
            continue
        for dist in simulate_reduction_step(d, lab, measured_party).values():
            for bl, pr in dist.items():
                q[bl.as_tuple()] += weight * pr
    return BellDiagonal(q)


def simulate_recombination(d, ab, ac):
    """Per-outcome GHZ decomposition of Alice's fusion of an A-B and an A-C Bell pair.

    Wires ``A1, B, A2, C``; Alice's GXOR has A1 as control, she measures A2
    and Charlie applies X^(d - k).  Returns ``{k: {GhzLabel: probability}}``.
    """
    _guard(d, MAX_PAIR_D, "recombination simulation")
    ab = ab if isinstance(ab, BellLabel) else BellLabel(*ab, d=d)
    ac = ac if isinstance(ac, BellLabel) else BellLabel(*ac, d=d)
    s = bell_vector(d, ab).kron(bell_vector(d, ac))
    s = apply_local(gxor(d), [0, 2], s)
    x = shift_x(d)
    result = {}
    for k in range(d):
        pk, rest = condition(s, 2, k)
        if rest is None:
            continue
        rest = apply_local(np.linalg.matrix_power(x, (d - k) % d), [2], rest)
        amps = np.abs(ghz_amplitudes(rest)) ** 2
        result[k] = {
            GhzLabel(*idx, d=d): pk * float(amps[idx])
            for idx in itertools.product(range(d), repeat=3)
            if amps[idx] > 1e-14
        }
    return result


@lru_cache(maxsize=None)
def _recombination_table(d):
    n = d * d
    table = np.zeros((n, n, d ** 3))
    for (i, ab), (j, ac) in itertools.product(enumerate(all_bell_labels(d)), repeat=2):
        for dist in simulate_recombination(d, ab, ac).values():
            for gl, pr in dist.items():
                table[i, j, gl.l * d * d + gl.m * d + gl.n] += pr
    return table


def simulate_recombine(d, ab, ac):
    out = np.einsum("i,j,ijk->k", ab.q.reshape(-1), ac.q.reshape(-1), _recombination_table(d))
    return GhzDiagonal(out.reshape(d, d, d))


@dataclass
class OffDiagonalReport:
    d: int
    trials: int
    max_deviation: float
    deviations: list
    passed: bool


def _dressed_ensemble(d, diag, rng, size):
    """Random pure states sharing the GHZ diagonal ``diag``, with random coherences."""
    basis = np.array([ghz_vector(d, lab).amplitudes for lab in all_ghz_labels(d)])
    amp = np.sqrt(diag.reshape(-1))
    states = []
    for _ in range(size):
        phases = np.exp(2j * np.pi * rng.random(amp.size))
        states.append(PureState((d, d, d), (amp * phases) @ basis))
    return [(1.0 / size, s) for s in states]


def _ensemble_round(d, ensemble, circuit):
    out = np.zeros(d ** 3)
    total = 0.0
    for (w1, s1), (w2, s2) in itertools.product(ensemble, repeat=2):
        t, dg, _ = _accumulate_survivors(circuit(d, s1.kron(s2)), ghz_amplitudes)
        out = out + w1 * w2 * dg
        total += w1 * w2 * t
    return out / total


def off_diagonal_independence_check(d, trials=10, seed=0, ensemble_size=3):
    """Check that post-selected diagonals ignore the input's GHZ coherences.

    Each trial draws a random GHZ diagonal, dresses it with random
    coherences (an ensemble of pure states with that diagonal), runs one
    P1 and one P2 round at circuit level, and compares with the
    undressed diagonal input.
    """
    _guard(d, MAX_OFFDIAGONAL_D, "off-diagonal independence check")
    rng = np.random.default_rng(seed)
    deviations = []
    for _ in range(trials):
        diag = rng.dirichlet(np.ones(d ** 3)).reshape(d, d, d)
        ref = GhzDiagonal(diag)
        dressed = _dressed_ensemble(d, diag, rng, ensemble_size)
        dev = 0.0
        for circuit, simulate in ((p1_circuit, simulate_p1_round), (p2_circuit, simulate_p2_round)):
            expected, _ = simulate(d, ref)
            got = _ensemble_round(d, dressed, circuit)
            dev = max(dev, float(np.max(np.abs(got - expected.p.reshape(-1)))))
        deviations.append(dev)
    worst = max(deviations) if deviations else 0.0
    return OffDiagonalReport(d, trials, worst, deviations, worst <= AGREEMENT_TOL)
