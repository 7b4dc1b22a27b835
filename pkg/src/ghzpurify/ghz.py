"""GHZ and Bell bases of qudits, error actions, and perfect correlations.

GHZ states on parties (A, B, C)::

    |psi_lmn> = d^(-1/2) sum_k w^(lk) |k, k-m, k-n>

Bell states on two parties use the same convention with one label dropped::

    |phi_lm> = d^(-1/2) sum_k w^(lk) |k, k-m>
"""
from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np

from .linalg import (
    PureState,
    _check_dim,
    apply_local,
    fourier,
    measure_standard,
    omega,
    phase_z,
    shift_x,
)

PARTIES = ("A", "B", "C")
CORRELATION_OPERATORS = ("XXX", "ZZdag_AB", "ZZdag_AC")
COMPOSITE_MEASUREMENTS = ("xAxBxC", "zAzB", "zAzC")

_OPERATOR_ALIASES = {
    "XXX": "XXX",
    "ZZdag_AB": "ZZdag_AB",
    "ZZ†_AB": "ZZdag_AB",
    "ZZdag_AC": "ZZdag_AC",
    "ZZ†_AC": "ZZdag_AC",
}


@dataclass(frozen=True)
class GhzLabel:
    l: int
    m: int
    n: int
    d: int

    def __post_init__(self):
        d = _check_dim(self.d)
        object.__setattr__(self, "d", d)
        for name in ("l", "m", "n"):
            object.__setattr__(self, name, int(getattr(self, name)) % d)

    def as_tuple(self):
        return (self.l, self.m, self.n)

    def __str__(self):
        return f"({self.l},{self.m},{self.n})"


@dataclass(frozen=True)
class BellLabel:
    l: int
    m: int
    d: int

    def __post_init__(self):
        d = _check_dim(self.d)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "l", int(self.l) % d)
        object.__setattr__(self, "m", int(self.m) % d)

    def as_tuple(self):
        return (self.l, self.m)

    def __str__(self):
        return f"({self.l},{self.m})"


@dataclass(frozen=True)
class ErrorSpec:
    """The single-qudit error Z^i X^j acting on one party."""

    party: str
    i: int
    j: int

    def __post_init__(self):
        if self.party not in PARTIES:
            raise ValueError(f"party must be one of {PARTIES}, got {self.party!r}")

    def is_identity(self, d):
        return self.i % d == 0 and self.j % d == 0


def _ghz_label(d, label):
    if isinstance(label, GhzLabel):
        if label.d != d:
            raise ValueError(f"label for d={label.d} used with d={d}")
        return label
    return GhzLabel(*label, d=d)


def _bell_label(d, label):
    if isinstance(label, BellLabel):
        if label.d != d:
            raise ValueError(f"label for d={label.d} used with d={d}")
        return label
    return BellLabel(*label, d=d)


def all_ghz_labels(d):
    return [GhzLabel(l, m, n, d) for l, m, n in itertools.product(range(d), repeat=3)]


def all_bell_labels(d):
    return [BellLabel(l, m, d) for l, m in itertools.product(range(d), repeat=2)]


def ghz_vector(d, label):
    d = _check_dim(d)
    lab = _ghz_label(d, label)
    amps = np.zeros((d, d, d), dtype=complex)
    w = omega(d)
    for k in range(d):
        amps[k, (k - lab.m) % d, (k - lab.n) % d] = w ** (lab.l * k)
    return PureState((d, d, d), amps.reshape(-1) / np.sqrt(d))


def bell_vector(d, label):
    d = _check_dim(d)
    lab = _bell_label(d, label)
    amps = np.zeros((d, d), dtype=complex)
    w = omega(d)
    for k in range(d):
        amps[k, (k - lab.m) % d] = w ** (lab.l * k)
    return PureState((d, d), amps.reshape(-1) / np.sqrt(d))


@lru_cache(maxsize=None)
def _ghz_basis(d):
    # row index = flat label index l*d^2 + m*d + n
    basis = np.array([ghz_vector(d, lab).amplitudes for lab in all_ghz_labels(d)])
    basis.setflags(write=False)
    return basis


@lru_cache(maxsize=None)
def _bell_basis(d):
    basis = np.array([bell_vector(d, lab).amplitudes for lab in all_bell_labels(d)])
    basis.setflags(write=False)
    return basis


def ghz_amplitudes(state):
    """Overlaps <psi_lmn|state> as a (d, d, d) array indexed by (l, m, n)."""
    if state.n_wires != 3 or len(set(state.dims)) != 1:
        raise ValueError(f"expected three qudits of equal dimension, got dims {state.dims}")
    d = state.dims[0]
    return (_ghz_basis(d).conj() @ state.amplitudes).reshape(d, d, d)


def bell_amplitudes(state):
    """Overlaps <phi_lm|state> as a (d, d) array indexed by (l, m)."""
    if state.n_wires != 2 or state.dims[0] != state.dims[1]:
        raise ValueError(f"expected two qudits of equal dimension, got dims {state.dims}")
    d = state.dims[0]
    return (_bell_basis(d).conj() @ state.amplitudes).reshape(d, d)


def ghz_overlap_decompose(state):
    """Map every GhzLabel to its amplitude <psi_label|state>."""
    amps = ghz_amplitudes(state)
    d = state.dims[0]
    return {lab: complex(amps[lab.as_tuple()]) for lab in all_ghz_labels(d)}


def bell_overlap_decompose(state):
    amps = bell_amplitudes(state)
    d = state.dims[0]
    return {lab: complex(amps[lab.as_tuple()]) for lab in all_bell_labels(d)}


def error_operator(d, i, j):
    """The error-basis element Z^i X^j."""
    return np.linalg.matrix_power(phase_z(d), i % d) @ np.linalg.matrix_power(shift_x(d), j % d)


def error_label_map(spec, label):
    """Label and phase ``(label', c)`` with ``eps |psi_label> = c |psi_label'>``.

    Computed by applying the dense Z^i X^j to the party's wire and
    decomposing the result in the GHZ basis.
    """
    d = label.d
    state = apply_local(error_operator(d, spec.i, spec.j), [PARTIES.index(spec.party)],
                        ghz_vector(d, label))
    amps = ghz_amplitudes(state)
    flat = int(np.argmax(np.abs(amps)))
    phase = complex(amps.reshape(-1)[flat])
    if abs(abs(phase) - 1.0) > 1e-10:
        raise ArithmeticError(f"error {spec} does not map {label} onto a single GHZ state")
    return GhzLabel(*np.unravel_index(flat, (d, d, d)), d=d), phase


def correlation_operator(d, operator_id):
    """Dense 3-qudit matrix of X⊗X⊗X, Z⊗Z†⊗1 or Z⊗1⊗Z†."""
    op = _OPERATOR_ALIASES.get(operator_id)
    x, z, one = shift_x(d), phase_z(d), np.eye(d)
    if op == "XXX":
        return np.kron(np.kron(x, x), x)
    if op == "ZZdag_AB":
        return np.kron(np.kron(z, z.conj().T), one)
    if op == "ZZdag_AC":
        return np.kron(np.kron(z, one), z.conj().T)
    raise ValueError(f"unknown correlation operator {operator_id!r}")


def correlation_eigenvalue(operator_id, label):
    """Exponent e with O |psi_lmn> = w^e |psi_lmn>."""
    op = _OPERATOR_ALIASES.get(operator_id)
    if op is None:
        raise ValueError(f"unknown correlation operator {operator_id!r}")
    return {"XXX": label.l, "ZZdag_AB": label.m, "ZZdag_AC": label.n}[op]


def correlation_eigenvalues(label):
    return tuple(correlation_eigenvalue(op, label) for op in CORRELATION_OPERATORS)


def conditional_probability(measurement, label, outcomes):
    """Perfect-correlation conditional probabilities.

    ``xAxBxC`` takes ``(p, q, r)`` and returns P(p | q, r);
    ``zAzB`` / ``zAzC`` take ``(p, q)`` / ``(p, r)`` and return P(p | q)
    / P(p | r).  Values are exactly 0 or 1.
    """
    d = label.d
    try:
        outcomes = tuple(int(o) for o in outcomes)
    except TypeError:
        raise ValueError(f"outcomes must be a tuple of integers, got {outcomes!r}") from None
    expected_len = 3 if measurement == "xAxBxC" else 2
    if measurement not in COMPOSITE_MEASUREMENTS:
        raise ValueError(f"unknown composite measurement {measurement!r}")
    if len(outcomes) != expected_len or any(not 0 <= o < d for o in outcomes):
        raise ValueError(f"{measurement} needs {expected_len} outcomes in [0, {d - 1}], got {outcomes}")
    if measurement == "xAxBxC":
        p, q, r = outcomes
        return float((p + q + r - label.l) % d == 0)
    p, q = outcomes
    target = label.m if measurement == "zAzB" else label.n
    return float((p - q - target) % d == 0)


def conditioned_outcome(measurement, label, conditioning):
    """The unique outcome p singled out by the conditioning outcomes."""
    d = label.d
    if measurement == "xAxBxC":
        q, r = conditioning
        return (label.l - q - r) % d
    (q,) = conditioning
    return (q + (label.m if measurement == "zAzB" else label.n)) % d


def measured_distribution(state, bases):
    """Joint outcome probabilities of local measurements read off the state vector.

    ``bases`` gives one entry per wire: ``"x"``, ``"z"`` or ``None`` (not
    measured).  Returns an array with one axis per measured wire.
    """
    if len(bases) != state.n_wires:
        raise ValueError("one basis entry per wire is required")
    d = state.dims
    for w, b in enumerate(bases):
        if b == "x":
            # <k|_x psi = <k| F^dag psi
            state = apply_local(fourier(d[w]).conj().T, [w], state)
        elif b not in ("z", None):
            raise ValueError(f"unknown basis {b!r}")
    measured = [w for w, b in enumerate(bases) if b is not None]
    probs = np.zeros([d[w] for w in measured])
    branches = [((), 1.0, state)]
    for w in measured:
        branches = [
            (outs + (k,), p * pk, st)
            for outs, p, s in branches
            for k, pk, st in measure_standard(s, w)
        ]
    for outs, p, _ in branches:
        probs[outs] += p
    return probs


def reduce_label_to_bell(label, measured_party):
    """Bell label left after an x-basis measurement of B (or C) and Alice's Z^k fix.

    Measuring B leaves (l, n) on A-C; measuring C leaves (l, m) on A-B.
    """
    if measured_party == "B":
        return BellLabel(label.l, label.n, label.d)
    if measured_party == "C":
        return BellLabel(label.l, label.m, label.d)
    raise ValueError(f"measured party must be 'B' or 'C', got {measured_party!r}")
