"""Self-check suite: recurrence maps vs circuit simulation, plus the GHZ identities.

Used by ``ghzpurify verify`` and by the test suite.  Every check yields a
:class:`CheckResult` with its residual and tolerance; nothing raises on a
failed comparison.
"""
from dataclasses import dataclass
import itertools

import numpy as np

from . import direct, indirect, oracle
from .exceptions import ResourceGuardError
from .ghz import (
    CORRELATION_OPERATORS,
    PARTIES,
    ErrorSpec,
    all_ghz_labels,
    conditional_probability,
    correlation_eigenvalue,
    correlation_eigenvalues,
    correlation_operator,
    error_label_map,
    ghz_vector,
    measured_distribution,
    reduce_label_to_bell,
)
from .linalg import omega

MAP_TOL = 1e-10
FORMULA_TOL = 1e-12
IDENTITY_TOL = 1e-10


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.residual <= self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44} residual={self.residual:.3e}  tol={self.tolerance:.0e}"


def p1_fidelity_formula(p):
    """(0,0,0) output of a phase round by explicit summation over label pairs."""
    d = p.shape[0]
    num = sum(p[0, m, n] * p[0, m, n] for m in range(d) for n in range(d))
    den = 0.0
    for l, m, n, m2, n2 in itertools.product(range(d), repeat=5):
        den += p[l, m, n] * p[(d - l) % d, m2, n2]
    return num / den


def p2_fidelity_formula(p):
    """(0,0,0) output of a level round by explicit summation over label pairs."""
    d = p.shape[0]
    num = sum(p[l, 0, 0] * p[(d - l) % d, 0, 0] for l in range(d))
    den = 0.0
    for l, l2, m, n in itertools.product(range(d), repeat=4):
        den += p[l, m, n] * p[l2, m, n]
    return num / den


DEFAULT_MAPS = {
    "p1": direct.p1_map,
    "p2": direct.p2_map,
    "bell_p1": indirect.bell_p1_map,
    "bell_p2": indirect.bell_p2_map,
    "bell_qpa": indirect.bell_qpa_map,
    "reduce": indirect.reduce_to_bell,
    "recombine": indirect.recombine,
}


def random_ghz_diagonal(d, rng):
    return direct.GhzDiagonal(rng.dirichlet(np.ones(d ** 3)).reshape(d, d, d))


def random_bell_diagonal(d, rng):
    return indirect.BellDiagonal(rng.dirichlet(np.ones(d * d)).reshape(d, d))


def map_equivalence_checks(d, trials=10, seed=0, maps=None):
    maps = {**DEFAULT_MAPS, **(maps or {})}
    rng = np.random.default_rng(seed)
    worst = {}

    def record(name, value):
        worst[name] = max(worst.get(name, 0.0), float(value))

    for _ in range(trials):
        st = random_ghz_diagonal(d, rng)
        for key, simulate in (("p1", oracle.simulate_p1_round), ("p2", oracle.simulate_p2_round)):
            got, s_got = maps[key](st)
            ref, s_ref = simulate(d, st)
            record(f"{key}_map vs circuit", max(got.distance(ref), abs(s_got - s_ref)))
        record("p1_map (0,0,0) vs summation formula",
               abs(maps["p1"](st)[0].fidelity - p1_fidelity_formula(st.p)))
        record("p2_map (0,0,0) vs summation formula",
               abs(maps["p2"](st)[0].fidelity - p2_fidelity_formula(st.p)))
        for party in "BC":
            record(f"reduce_to_bell({party}) vs circuit",
                   maps["reduce"](st, party).distance(oracle.simulate_reduce_to_bell(d, st, party)))
        bell_keys = [("bell_p1", "P1"), ("bell_p2", "P2")] + ([("bell_qpa", "QPA")] if d == 2 else [])
        for key, token in bell_keys:
            q = random_bell_diagonal(d, rng)
            got, s_got = maps[key](q)
            ref, s_ref = oracle.simulate_bell_round(d, q, token)
            record(f"{key}_map vs circuit", max(got.distance(ref), abs(s_got - s_ref)))
        ab, ac = random_bell_diagonal(d, rng), random_bell_diagonal(d, rng)
        record("recombine vs circuit", maps["recombine"](ab, ac).distance(oracle.simulate_recombine(d, ab, ac)))
    tol = {n: (FORMULA_TOL if "formula" in n else MAP_TOL) for n in worst}
    return [CheckResult(f"d={d} {n}", v, tol[n]) for n, v in worst.items()]


def correlation_checks(d):
    """Eigenvalue relations and delta-form conditionals against dense computation."""
    w = omega(d)
    eig_res = 0.0
    cond_res = 0.0
    joint_res = 0.0
    ops = {op: correlation_operator(d, op) for op in CORRELATION_OPERATORS}
    for lab in all_ghz_labels(d):
        v = ghz_vector(d, lab).amplitudes
        for op, mat in ops.items():
            e = correlation_eigenvalue(op, lab)
            eig_res = max(eig_res, float(np.max(np.abs(mat @ v - w ** e * v))))
        state = ghz_vector(d, lab)
        joint = measured_distribution(state, ("x", "x", "x"))
        for p, q, r in itertools.product(range(d), repeat=3):
            expected_joint = conditional_probability("xAxBxC", lab, (p, q, r)) / d ** 2
            joint_res = max(joint_res, abs(joint[p, q, r] - expected_joint))
        marg = joint.sum(axis=0)
        cond = joint / marg[None]
        for p, q, r in itertools.product(range(d), repeat=3):
            cond_res = max(cond_res, abs(cond[p, q, r] - conditional_probability("xAxBxC", lab, (p, q, r))))
        for meas, bases in (("zAzB", ("z", "z", None)), ("zAzC", ("z", None, "z"))):
            jz = measured_distribution(state, bases)
            cz = jz / jz.sum(axis=0)[None]
            for p, q in itertools.product(range(d), repeat=2):
                cond_res = max(cond_res, abs(cz[p, q] - conditional_probability(meas, lab, (p, q))))
    return [
        CheckResult(f"d={d} eigenvalue relations vs dense matrices", eig_res, IDENTITY_TOL),
        CheckResult(f"d={d} conditional probabilities vs state vector", cond_res, IDENTITY_TOL),
        CheckResult(f"d={d} xAxBxC joint = delta/d^2", joint_res, IDENTITY_TOL),
    ]


def error_detection_checks(d):
    """Every non-identity single-qudit error moves (0,0,0) off the all-zero eigenvalues."""
    origin = all_ghz_labels(d)[0]
    undetected = 0
    for party in PARTIES:
        for i, j in itertools.product(range(d), repeat=2):
            spec = ErrorSpec(party, i, j)
            if spec.is_identity(d):
                continue
            lab, _ = error_label_map(spec, origin)
            if correlation_eigenvalues(lab) == (0, 0, 0):
                undetected += 1
    return [CheckResult(f"d={d} undetectable single-qudit errors", float(undetected), 0.0)]


def reduction_label_checks(d):
    """The closed-form Bell label against simulation, for every label and every outcome."""
    mismatches = 0
    for lab in all_ghz_labels(d):
        for party in "BC":
            expected = reduce_label_to_bell(lab, party)
            for dist in oracle.simulate_reduction_step(d, lab, party).values():
                total = sum(dist.values())
                if abs(dist.get(expected, 0.0) - total) > 1e-12:
                    mismatches += 1
    return [CheckResult(f"d={d} reduce_label_to_bell vs circuit", float(mismatches), 0.0)]


def fixed_point_checks(d, maps=None):
    maps = {**DEFAULT_MAPS, **(maps or {})}
    ghz = direct.GhzDiagonal.point_mass(d)
    bell = indirect.BellDiagonal.point_mass(d)
    res = 0.0
    for key in ("p1", "p2"):
        out, s = maps[key](ghz)
        res = max(res, out.distance(ghz), abs(1.0 - s))
    for key in ("bell_p1", "bell_p2") + (("bell_qpa",) if d == 2 else ()):
        out, s = maps[key](bell)
        res = max(res, out.distance(bell), abs(1.0 - s))
    res = max(res, maps["recombine"](bell, bell).distance(ghz))
    return [CheckResult(f"d={d} point mass is a fixed point", res, MAP_TOL)]


def run_checks(d_max=3, trials=10, seed=0, maps=None):
    """All checks for d = 2 .. d_max.  ``maps`` overrides individual maps (negative controls)."""
    if d_max > oracle.MAX_PAIR_D:
        raise ResourceGuardError(f"verification is limited to d_max <= {oracle.MAX_PAIR_D}")
    if d_max < 2:
        raise ValueError("d_max must be at least 2")
    results = []
    for d in range(2, d_max + 1):
        results += map_equivalence_checks(d, trials, seed + d, maps)
        results += fixed_point_checks(d, maps)
        results += correlation_checks(d)
        results += error_detection_checks(d)
        results += reduction_label_checks(d)
        if d <= oracle.MAX_OFFDIAGONAL_D:
            rep = oracle.off_diagonal_independence_check(d, trials, seed + d)
            results.append(CheckResult(f"d={d} off-diagonal independence", rep.max_deviation,
                                       oracle.AGREEMENT_TOL))
    return results
