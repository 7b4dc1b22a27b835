"""Dense linear algebra for small qudit registers.

Operators are plain complex numpy arrays. States are :class:`PureState`
values holding an amplitude vector together with the per-wire dimensions.

Wire ordering: wire 0 is the leftmost tensor factor, i.e. it varies
*slowest* in the flat amplitude vector (C order).  ``|a, b, c>`` on three
qutrits sits at flat index ``9 a + 3 b + c``.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

#: probabilities below this are treated as impossible outcomes
OUTCOME_CUTOFF = 1e-14


def _check_dim(d):
    if int(d) != d or d < 2:
        raise ValueError(f"qudit dimension must be an integer >= 2, got {d!r}")
    return int(d)


def omega(d):
    """Primitive d-th root of unity exp(2 pi i / d)."""
    return np.exp(2j * np.pi / _check_dim(d))


def phase_z(d):
    """Phase operator diag(1, w, ..., w^(d-1))."""
    d = _check_dim(d)
    return np.diag(omega(d) ** np.arange(d))


def shift_x(d):
    """Level-shift operator sum_k |k><k+1 mod d|, so that X|k> = |k-1 mod d>."""
    d = _check_dim(d)
    x = np.zeros((d, d), dtype=complex)
    for k in range(d):
        x[k, (k + 1) % d] = 1.0
    return x


def fourier(d):
    """Quantum Fourier transform with F[j, k] = w^(jk) / sqrt(d).

    Column k is the X-eigenvector |k>_x with eigenvalue w^k.
    """
    d = _check_dim(d)
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return omega(d) ** (j * k) / np.sqrt(d)


def gxor(d):
    """Two-qudit GXOR: |i>_c |j>_t -> |i>_c |i - j mod d>_t (control on the first wire)."""
    d = _check_dim(d)
    g = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            g[i * d + (i - j) % d, i * d + j] = 1.0
    return g


def is_unitary(op, atol=1e-12):
    op = np.asarray(op)
    return op.shape[0] == op.shape[1] and np.allclose(
        op.conj().T @ op, np.eye(op.shape[0]), atol=atol, rtol=0
    )


@dataclass(frozen=True)
class PureState:
    """Amplitude vector over the tensor product of ``dims``."""

    dims: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(_check_dim(d) for d in self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise ValueError(
                f"{amps.size} amplitudes do not match dims {dims} (need {int(np.prod(dims))})"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_wires(self):
        return len(self.dims)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        return PureState(self.dims, self.amplitudes / self.norm())

    def tensor(self):
        """Amplitudes reshaped to one axis per wire."""
        return self.amplitudes.reshape(self.dims)

    def inner(self, other):
        """<self|other>."""
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch: {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def kron(self, other):
        return PureState(self.dims + other.dims, np.kron(self.amplitudes, other.amplitudes))


def basis_state(dims, digits):
    """Computational basis vector |digits[0], digits[1], ...>."""
    dims = tuple(dims)
    if len(digits) != len(dims):
        raise ValueError("one digit per wire is required")
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    amps[np.ravel_multi_index(tuple(int(k) % d for k, d in zip(digits, dims)), dims)] = 1.0
    return PureState(dims, amps)


def tensor_product(*states):
    return reduce(PureState.kron, states)


def _check_wires(state, wires):
    wires = [int(w) for w in wires]
    for w in wires:
        if not 0 <= w < state.n_wires:
            raise ValueError(f"wire {w} out of range for a {state.n_wires}-wire state")
    if len(set(wires)) != len(wires):
        raise ValueError(f"repeated wire in {wires}")
    return wires


def apply_local(op, wires, state):
    """Apply ``op`` to the listed wires (in that order) and identity elsewhere."""
    if isinstance(wires, (int, np.integer)):
        wires = [wires]
    wires = _check_wires(state, wires)
    op = np.asarray(op, dtype=complex)
    block = int(np.prod([state.dims[w] for w in wires]))
    if op.shape != (block, block):
        raise ValueError(f"operator of shape {op.shape} does not act on wires {wires} (dim {block})")
    t = np.moveaxis(state.tensor(), wires, range(len(wires)))
    moved_shape = t.shape
    t = (op @ t.reshape(block, -1)).reshape(moved_shape)
    t = np.moveaxis(t, range(len(wires)), wires)
    return PureState(state.dims, t.reshape(-1))


def condition(state, wire, outcome):
    """Project ``wire`` onto |outcome> and drop it.

    Returns ``(probability, remaining_state)``; the remaining state is
    normalized, or ``None`` when the probability is below the cutoff.
    """
    (wire,) = _check_wires(state, [wire])
    sub = np.take(state.tensor(), outcome, axis=wire)
    prob = float(np.vdot(sub, sub).real)
    dims = state.dims[:wire] + state.dims[wire + 1:]
    if prob < OUTCOME_CUTOFF:
        return prob, None
    return prob, PureState(dims, sub.reshape(-1) / np.sqrt(prob))


def measure_standard(state, wire):
    """Standard-basis measurement of one wire.

    Returns a list of ``(outcome, probability, collapsed_state)``; outcomes
    with probability below 1e-14 are omitted and the collapsed states keep
    the measured wire (now in ``|outcome>``).
    """
    (wire,) = _check_wires(state, [wire])
    t = state.tensor()
    results = []
    for k in range(state.dims[wire]):
        sub = np.take(t, k, axis=wire)
        prob = float(np.vdot(sub, sub).real)
        if prob < OUTCOME_CUTOFF:
            continue
        collapsed = np.zeros_like(t)
        index = [slice(None)] * state.n_wires
        index[wire] = k
        collapsed[tuple(index)] = sub / np.sqrt(prob)
        results.append((k, prob, PureState(state.dims, collapsed.reshape(-1))))
    return results
