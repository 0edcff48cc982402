"""Copy protection of point functions on top of the authentication scheme.

A point ``p`` doubles as the authentication key: the protected program is
the pure state ``Auth_p |0^m>``.  Evaluating at ``x`` runs verification
with ``x`` as the claimed key and outputs 1 exactly on acceptance, so the
encoded point always evaluates to 1 and other inputs reject at the
wrong-key rate of the underlying scheme.

Two evaluation modes exist.  :func:`evaluate` is the destructive one: it
consumes the program.  :func:`evaluate_preserving` implements the
copy-out-the-answer circuit (purified verify, CNOT the accept bit onto a
fresh qubit, uncompute) and hands the program back; on the encoded point
the program is returned exactly intact.

:func:`mix_protect` wraps a program with a pairwise independent
permutation: the point is first pushed through a uniformly random
``h_r``, and evaluation permutes its input the same way.  The permutation
parameter rides along as classical metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .designs import PairwisePermFamily
from .qas import QasScheme, acceptance_by_index, accept_probability, scheme_params
from .qmath import (
    DensityOperator,
    DimensionMismatchError,
    PureState,
    matrix_from_jsonable,
    matrix_to_jsonable,
    measure_projective,
    partial_trace,
    zero_state,
)


class ConsumedProgramError(RuntimeError):
    """The program was already destroyed by a destructive evaluation."""


@dataclass(frozen=True)
class PointFunction:
    """P_p on ell-bit strings: 1 exactly at the point, 0 elsewhere."""

    point: int
    bits: int

    def __post_init__(self):
        if self.bits < 1 or not 0 <= self.point < (1 << self.bits):
            raise ValueError("point outside {0,1}^bits")

    @classmethod
    def from_string(cls, bits: str) -> "PointFunction":
        return cls(int(bits, 2), len(bits))

    def to_string(self) -> str:
        return format(self.point, f"0{self.bits}b")

    def __call__(self, x: int) -> int:
        return 1 if x == self.point else 0


# ---------------------------------------------------------------------------
# Challenge distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChallengeDistribution:
    """A finite distribution on {0,1}^bits with an explicit table.

    Structured kinds remember their shape so that sampling is constant
    time and downstream baselines can use exact rational weights:

    - ``uniform``: every string 1/2^l,
    - ``dhalf``: the point with mass 1/2, the rest uniform,
    - ``biased``: the point with mass r, the rest uniform (r=1 is the
      point mass).
    """

    bits: int
    probs: np.ndarray
    kind: Literal["table", "uniform", "dhalf", "biased"] = "table"
    point: int | None = None
    r: float | None = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        if probs.size != (1 << self.bits):
            raise DimensionMismatchError("table size must be 2^bits")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return 1 << self.bits

    def prob(self, x: int) -> float:
        return float(self.probs[x])

    def prob_fraction(self, x: int) -> Fraction | None:
        """Exact weight for structured kinds; None for raw tables."""
        n = self.size
        if self.kind == "uniform":
            return Fraction(1, n)
        if self.kind == "dhalf":
            return Fraction(1, 2) if x == self.point else Fraction(1, 2 * (n - 1))
        if self.kind == "biased":
            fr = Fraction(self.r).limit_denominator(10**12)
            if float(fr) != self.r:
                return None
            return fr if x == self.point else (1 - fr) / (n - 1)
        return None

    def sample(self, rng: np.random.Generator) -> int:
        if self.kind == "uniform":
            return int(rng.integers(self.size))
        if self.kind in ("dhalf", "biased"):
            r = 0.5 if self.kind == "dhalf" else self.r
            if rng.random() < r:
                return self.point
            other = int(rng.integers(self.size - 1))
            return other + (other >= self.point)
        return int(rng.choice(self.size, p=self.probs))


def uniform_points(bits: int) -> ChallengeDistribution:
    """The uniform distribution on {0,1}^bits (used both for challenge
    inputs and for drawing the encoded point itself)."""
    n = 1 << bits
    return ChallengeDistribution(bits, np.full(n, 1.0 / n), kind="uniform")


def dhalf(point: int, bits: int) -> ChallengeDistribution:
    """Mass 1/2 on the point, uniform elsewhere, so the function value is
    a fair coin."""
    n = 1 << bits
    probs = np.full(n, 0.5 / (n - 1))
    probs[point] = 0.5
    return ChallengeDistribution(bits, probs, kind="dhalf", point=point)


def biased_point(point: int, bits: int, r: float) -> ChallengeDistribution:
    """Mass ``r`` on the point, uniform elsewhere."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    n = 1 << bits
    if n == 1:
        return ChallengeDistribution(bits, np.array([1.0]), kind="biased", point=point, r=1.0)
    probs = np.full(n, (1.0 - r) / (n - 1))
    probs[point] = r
    return ChallengeDistribution(bits, probs, kind="biased", point=point, r=r)


def point_mass(point: int, bits: int) -> ChallengeDistribution:
    return biased_point(point, bits, 1.0)


def sample_pair(
    first: ChallengeDistribution,
    second: ChallengeDistribution,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Independent draw from the product of two distributions."""
    return first.sample(rng), second.sample(rng)


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


@dataclass
class ProtectedProgram:
    """A program state on Y plus bookkeeping.

    Programs are single-owner: destructive evaluation flips ``consumed``
    and any further use raises.  ``perm_param`` carries the classical
    permutation parameter of mixed programs.
    """

    state: PureState | DensityOperator
    scheme: QasScheme
    kind: Literal["plain", "mixed"] = "plain"
    perm_param: tuple[int, int] | None = None
    family: PairwisePermFamily | None = None
    consumed: bool = False

    def _claim(self) -> None:
        if self.consumed:
            raise ConsumedProgramError("program was already consumed")


def protect(scheme: QasScheme, point: int) -> ProtectedProgram:
    """Encode a point: the pure state Auth_p |0^m>."""
    if not 0 <= point < (1 << scheme.key_bits):
        raise ValueError("point does not fit the scheme's key length")
    from .qas import auth

    state = auth(scheme, point, zero_state(scheme.message_qubits))
    return ProtectedProgram(state=state, scheme=scheme)


def accept_projector(scheme: QasScheme, x: int) -> np.ndarray:
    """Projector onto valid encodings under key ``x`` (``A_x A_x†``)."""
    from .qas import auth_isometry

    a = auth_isometry(scheme, x).matrix
    return a @ a.conj().T


def evaluate(program: ProtectedProgram, x: int, rng: np.random.Generator) -> int:
    """Destructive evaluation: verify with key ``x``, output 1 on accept.

    The program is consumed; the encoded point always evaluates to 1.
    """
    program._claim()
    if program.kind == "mixed":
        raise ValueError("mixed programs evaluate through mix_evaluate")
    p = accept_probability(program.scheme, x, program.state)
    program.consumed = True
    if p >= 1 - 1e-12:
        return 1
    if p < 1e-12:
        return 0
    return int(rng.random() < p)


def _preserving_circuit(scheme: QasScheme, x: int) -> np.ndarray:
    """The reuse circuit on Y (x) O (x) O': purified verify writes the
    trap check into O, a CNOT copies it to O', then everything uncomputes.
    (The purification needs no extra workspace, so the Z register of the
    construction is empty here.)
    """
    u = scheme.design.element(scheme.key_index(x))
    dim_y = scheme.total_dim
    t = scheme.trap_qubits
    dim = dim_y * 4
    # MCX: flip O when every trap bit (the 2^t least significant block of
    # the Y index) is zero.
    perm = np.arange(dim)
    for y in range(dim_y):
        if y % (1 << t) == 0:
            base = y * 4
            perm[base + 0], perm[base + 2] = perm[base + 2], perm[base + 0]  # |o=0,o'=0> <-> |o=1,o'=0>
            perm[base + 1], perm[base + 3] = perm[base + 3], perm[base + 1]  # |o=0,o'=1> <-> |o=1,o'=1>
    mcx = np.zeros((dim, dim))
    mcx[perm, np.arange(dim)] = 1.0
    # CNOT O -> O'
    perm2 = np.arange(dim)
    for y in range(dim_y):
        base = y * 4
        perm2[base + 2], perm2[base + 3] = perm2[base + 3], perm2[base + 2]
    cnot = np.zeros((dim, dim))
    cnot[perm2, np.arange(dim)] = 1.0
    eye4 = np.eye(4)
    u_full = np.kron(u, eye4)
    return u_full @ mcx @ cnot @ mcx @ u_full.conj().T


def evaluate_preserving(
    program: ProtectedProgram, x: int, rng: np.random.Generator
) -> tuple[int, ProtectedProgram]:
    """Program-preserving evaluation via the copy-and-uncompute circuit.

    Measures only the copied answer qubit O'; returns the bit and a fresh
    program holding the post-evaluation Y state.  On the encoded point the
    state comes back exactly unchanged.
    """
    program._claim()
    scheme = program.scheme
    circuit = _preserving_circuit(scheme, x)
    dim_y = scheme.total_dim
    q_total = scheme.total_qubits + 2
    proj1 = np.kron(np.eye(dim_y * 2), np.diag([0.0, 1.0]))
    proj0 = np.eye(dim_y * 4) - proj1
    if isinstance(program.state, PureState):
        full = np.zeros(dim_y * 4, dtype=complex)
        full[::4] = program.state.amplitudes
        full = circuit @ full
        outcome, post = measure_projective(
            PureState(full), [proj0, proj1], rng
        )
        # O is uncomputed to |0> exactly; O' holds the measured bit.
        amps = post.amplitudes.reshape(dim_y, 4)[:, outcome]
        new_state: PureState | DensityOperator = PureState(amps)
    else:
        rho = np.zeros((dim_y * 4, dim_y * 4), dtype=complex)
        rho[::4, ::4] = program.state.matrix
        rho = circuit @ rho @ circuit.conj().T
        outcome, post = measure_projective(DensityOperator(rho), [proj0, proj1], rng)
        new_state = partial_trace(post, range(scheme.total_qubits))
    program.consumed = True
    return outcome, ProtectedProgram(
        state=new_state,
        scheme=scheme,
        kind=program.kind,
        perm_param=program.perm_param,
        family=program.family,
    )


def post_evaluation_state(
    scheme: QasScheme, state: PureState | DensityOperator, x: int
) -> DensityOperator:
    """The unselected output of the preserving evaluation on Y: the input
    dephased across the accept/reject split of key ``x``.  This is what
    one round of evaluation does to the program when nobody looks at the
    answer bit."""
    proj = accept_projector(scheme, x)
    rho = state.density().matrix if isinstance(state, PureState) else state.matrix
    comp = np.eye(scheme.total_dim) - proj
    return DensityOperator(proj @ rho @ proj + comp @ rho @ comp)


# ---------------------------------------------------------------------------
# Exact correctness
# ---------------------------------------------------------------------------


def acceptance_per_input(scheme: QasScheme, program_state) -> np.ndarray:
    """Acceptance probability of the program state for every possible
    challenge input x in {0,1}^k (exact, via the design)."""
    by_index = acceptance_by_index(scheme, program_state)
    idx = np.arange(1 << scheme.key_bits) % scheme.design.cardinality
    return by_index[idx]


def correctness_exact(
    scheme: QasScheme, point: int, dist: ChallengeDistribution
) -> float:
    """E_{x<-dist} Pr[evaluate outputs P_p(x)], computed analytically."""
    if dist.bits != scheme.key_bits:
        raise DimensionMismatchError("distribution bit-length mismatch")
    program = protect(scheme, point)
    acc = acceptance_per_input(scheme, program.state)
    correct = 1.0 - acc
    correct[point] = acc[point]
    return float(dist.probs @ correct)


def wrong_key_average_excluding(scheme: QasScheme, point: int) -> float:
    """Mean acceptance of the program over uniformly random x != p."""
    program = protect(scheme, point)
    acc = acceptance_per_input(scheme, program.state)
    n = acc.size
    return float((acc.sum() - acc[point]) / (n - 1))


def per_input_error(scheme: QasScheme, point: int) -> np.ndarray:
    """Probability of the wrong answer at every input, exactly.

    Correctness guarantees here are average-case; worst-case per-input
    numbers are reported for inspection (the maximum of this array) but
    nothing asserts a bound on them for the plain scheme.
    """
    program = protect(scheme, point)
    acc = acceptance_per_input(scheme, program.state)
    err = acc.copy()
    err[point] = 1.0 - acc[point]
    return err


# ---------------------------------------------------------------------------
# MIX wrapper
# ---------------------------------------------------------------------------


def mix_protect(
    scheme: QasScheme,
    family: PairwisePermFamily,
    point: int,
    rng: np.random.Generator,
    r: tuple[int, int] | None = None,
) -> ProtectedProgram:
    """Protect ``h_r(p)`` for a uniformly random permutation parameter
    (or a forced one), recording ``r`` as classical metadata."""
    if family.bits != scheme.key_bits:
        raise DimensionMismatchError("family bit-length must match the scheme")
    if r is None:
        r = family.sample_param(rng)
    inner = protect(scheme, family.apply(r, point))
    return ProtectedProgram(
        state=inner.state,
        scheme=scheme,
        kind="mixed",
        perm_param=r,
        family=family,
    )


def mix_evaluate(program: ProtectedProgram, x: int, rng: np.random.Generator) -> int:
    """Evaluate a mixed program: destructive evaluation at ``h_r(x)``."""
    if program.kind != "mixed":
        raise ValueError("mix_evaluate needs a mixed program")
    program._claim()
    hx = program.family.apply(program.perm_param, x)
    p = accept_probability(program.scheme, hx, program.state)
    program.consumed = True
    if p >= 1 - 1e-12:
        return 1
    if p < 1e-12:
        return 0
    return int(rng.random() < p)


def mix_error_exact(
    scheme: QasScheme, family: PairwisePermFamily, point: int, x: int
) -> float:
    """Exact per-input error of the mixed scheme at (p, x): the chance,
    over the permutation parameter and the evaluation, that mix_evaluate
    disagrees with P_p(x).  Needs an enumerable family."""
    by_index_cache: dict[int, np.ndarray] = {}
    total = 0.0
    for r in family.params():
        hp = family.apply(r, point)
        hx = family.apply(r, x)
        acc = by_index_cache.get(hp)
        if acc is None:
            acc = acceptance_per_input(scheme, protect(scheme, hp).state)
            by_index_cache[hp] = acc
        prob_one = acc[hx]
        total += (1.0 - prob_one) if x == point else prob_one
    return total / family.size


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def program_to_json(program: ProtectedProgram) -> str:
    state = program.state
    payload = {
        "scheme": scheme_params(program.scheme),
        "kind": program.kind,
        "perm_param": list(program.perm_param) if program.perm_param else None,
        "pure": isinstance(state, PureState),
        "state": matrix_to_jsonable(
            state.amplitudes if isinstance(state, PureState) else state.matrix
        ),
        "consumed": program.consumed,
    }
    return json.dumps(payload)


def program_from_json(data: str) -> ProtectedProgram:
    from .qas import build_scheme

    payload = json.loads(data)
    params = payload["scheme"]
    scheme = build_scheme(params["m"], params["t"], params["k"])
    arr = matrix_from_jsonable(payload["state"])
    state = PureState(arr) if payload["pure"] else DensityOperator(arr)
    perm = tuple(payload["perm_param"]) if payload["perm_param"] else None
    family = PairwisePermFamily(params["k"]) if payload["kind"] == "mixed" else None
    return ProtectedProgram(
        state=state,
        scheme=scheme,
        kind=payload["kind"],
        perm_param=perm,
        family=family,
        consumed=payload["consumed"],
    )
