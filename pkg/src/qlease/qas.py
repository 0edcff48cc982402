"""Trap-augmented total quantum authentication.

A scheme on ``m`` message qubits appends ``t`` trap qubits in |0...0> and
applies a unitary drawn from a 2-design on ``m + t`` qubits, selected by
an almost-uniform map from the ``k``-bit key space into design indices:

    Auth_key |psi>  =  U_{f(key)} (|psi> (x) |0^t>)

Verification undoes the unitary for the claimed key and checks that every
trap qubit reads zero; on acceptance the decoded message register is
returned, on rejection the maximally mixed state.

The recorded ``epsilon`` is the total-authentication parameter this
construction is entitled to claim: the 2-design term ``2^((6-t)/3)`` plus
the key-remapping penalty ``epsilon_prime`` of the mod map.  At desk scale
(small ``t``) this honestly exceeds 1/2; downstream results that assume
``epsilon <= 1/2`` gate themselves on the recorded value rather than
pretending it is small.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .designs import (
    EnumeratedDesign,
    EpsUniformMap,
    UnitaryDesign,
    clifford_design,
    eps_uniform_build,
    irreducible_poly,
)
from .qmath import (
    ATOL,
    DensityOperator,
    DimensionMismatchError,
    Isometry,
    PureState,
    QubitCapError,
    SubnormalizedOperator,
    maximally_mixed,
    qubit_cap,
)

#: Exact key-space averaging is allowed up to this many keys.
MAX_EXACT_KEYS = 1 << 20


@dataclass(frozen=True)
class QasScheme:
    """Immutable bundle of parameters plus the design and key map."""

    message_qubits: int
    trap_qubits: int
    key_bits: int
    design: UnitaryDesign
    key_map: EpsUniformMap
    epsilon: float

    @property
    def total_qubits(self) -> int:
        return self.message_qubits + self.trap_qubits

    @property
    def message_dim(self) -> int:
        return 1 << self.message_qubits

    @property
    def total_dim(self) -> int:
        return 1 << self.total_qubits

    @property
    def scheme_id(self) -> str:
        return (
            f"qas-m{self.message_qubits}-t{self.trap_qubits}"
            f"-k{self.key_bits}-{self.design.design_id}"
        )

    def key_index(self, key: int) -> int:
        """Design index selected by a key (the almost-uniform map)."""
        return self.key_map.apply(key)


def design_epsilon(trap_qubits: int) -> float:
    """Total-authentication parameter granted by a 2-design with t traps."""
    return 2.0 ** ((6 - trap_qubits) / 3)


def t_opt(message_qubits: int, key_bits: int) -> float:
    """Trap count minimizing the combined epsilon bound, as a real number.

    Bookkeeping only: for honest parameters the optimum far exceeds the
    desk-scale qubit cap, so schemes take (m, t, k) directly.
    """
    return (12 - 3 * math.log2(15) + 3 * key_bits - 15 * message_qubits) / 16


def existence_epsilon(message_qubits: int, key_bits: int) -> float:
    """The closed-form bound 5 * 2^((5m - k)/16) achieved at t = floor(t_opt)."""
    return 5.0 * 2.0 ** ((5 * message_qubits - key_bits) / 16)


def build_scheme(
    message_qubits: int,
    trap_qubits: int,
    key_bits: int,
    design: UnitaryDesign | None = None,
) -> QasScheme:
    """Assemble a scheme; the design defaults to the Clifford group on
    ``message_qubits + trap_qubits`` qubits."""
    if message_qubits < 1:
        raise ValueError("need at least one message qubit")
    if trap_qubits < 1:
        raise ValueError("need at least one trap qubit")
    if key_bits < 1:
        raise ValueError("need at least one key bit")
    total = message_qubits + trap_qubits
    if total > qubit_cap():
        raise QubitCapError(f"{total} qubits exceeds the cap of {qubit_cap()}")
    if design is None:
        design = clifford_design(total)
    key_map = eps_uniform_build(key_bits, design.cardinality)
    epsilon = design_epsilon(trap_qubits) + float(key_map.epsilon_prime)
    return QasScheme(message_qubits, trap_qubits, key_bits, design, key_map, epsilon)


# ---------------------------------------------------------------------------
# Encoding isometries
# ---------------------------------------------------------------------------


def _auth_matrix(scheme: QasScheme, key: int) -> np.ndarray:
    u = scheme.design.element(scheme.key_index(key))
    # Columns of U (x) embedding |v> -> |v>|0^t>: message is the leftmost
    # (most significant) register, so |v>|0^t> sits at index v * 2^t.
    return u[:, :: 1 << scheme.trap_qubits]


def auth_isometry(scheme: QasScheme, key: int) -> Isometry:
    """The encoding isometry for one key, message space into Y."""
    if not 0 <= key < (1 << scheme.key_bits):
        raise ValueError("key outside the key space")
    return Isometry(_auth_matrix(scheme, key))


def auth(scheme: QasScheme, key: int, state):
    """Authenticate a message state; pure in, pure out."""
    a = auth_isometry(scheme, key).matrix
    if isinstance(state, PureState):
        if state.dim != scheme.message_dim:
            raise DimensionMismatchError("message state has the wrong dimension")
        return PureState(a @ state.amplitudes)
    if isinstance(state, DensityOperator):
        if state.dim != scheme.message_dim:
            raise DimensionMismatchError("message state has the wrong dimension")
        return DensityOperator(a @ state.matrix @ a.conj().T)
    raise TypeError("expected PureState or DensityOperator")


# ---------------------------------------------------------------------------
# Verification channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyOutcome:
    """Result of running the verification channel.

    ``accepted`` is a sampled flag (None when the channel was evaluated
    analytically rather than sampled).  ``message_state`` is the decoded
    state on the accept branch, or the maximally mixed state on reject.
    ``accept_probability`` is exact in either mode.
    """

    accepted: bool | None
    message_state: DensityOperator
    accept_probability: float


def _as_density_on_y(scheme: QasScheme, state) -> np.ndarray:
    if isinstance(state, PureState):
        if state.dim != scheme.total_dim:
            raise DimensionMismatchError("state is not on the authenticated space")
        return np.outer(state.amplitudes, state.amplitudes.conj())
    if isinstance(state, DensityOperator):
        if state.dim != scheme.total_dim:
            raise DimensionMismatchError("state is not on the authenticated space")
        return state.matrix
    raise TypeError("expected PureState or DensityOperator")


def accept_probability(scheme: QasScheme, key: int, state) -> float:
    """Probability that verification with this key accepts the state."""
    a = _auth_matrix(scheme, key)
    if isinstance(state, PureState):
        if state.dim != scheme.total_dim:
            raise DimensionMismatchError("state is not on the authenticated space")
        v = a.conj().T @ state.amplitudes
        return float(np.vdot(v, v).real)
    rho = _as_density_on_y(scheme, state)
    return float(np.trace(a.conj().T @ rho @ a).real)


def verify_accept_branch(scheme: QasScheme, key: int, state) -> SubnormalizedOperator:
    """The subnormalized accept branch ``A† rho A``; its trace is the
    acceptance probability."""
    rho = _as_density_on_y(scheme, state)
    a = _auth_matrix(scheme, key)
    return SubnormalizedOperator(a.conj().T @ rho @ a)


def verify(
    scheme: QasScheme,
    key: int,
    state,
    rng: np.random.Generator | None = None,
) -> VerifyOutcome:
    """The verification channel.

    Implements ``rho -> A† rho A (x) |Acc><Acc|
    + Tr[(I - A A†) rho] (I / 2^m) (x) |Rej><Rej|``.  With an ``rng`` the
    accept/reject branch is sampled at its analytic probability and the
    corresponding normalized branch returned; without one the outcome
    stays unsampled (``accepted=None``) and the accept-branch decode is
    reported alongside the exact probability.
    """
    branch = verify_accept_branch(scheme, key, state)
    p = min(max(branch.weight, 0.0), 1.0)
    mixed = maximally_mixed(scheme.message_qubits)
    if rng is not None:
        accepted = bool(rng.random() < p) if 1e-12 < p < 1 - 1e-12 else p >= 0.5
        if accepted:
            return VerifyOutcome(True, DensityOperator(branch.matrix / p), p)
        return VerifyOutcome(False, mixed, p)
    if p > 1e-12:
        return VerifyOutcome(None, DensityOperator(branch.matrix / p), p)
    return VerifyOutcome(None, mixed, p)


# ---------------------------------------------------------------------------
# Wrong-key averages
# ---------------------------------------------------------------------------


def acceptance_by_index(scheme: QasScheme, state) -> np.ndarray:
    """Acceptance probability of ``state`` for every design index.

    Needs an enumerated design; this is the workhorse behind exact
    wrong-key averages and exact correctness numbers.
    """
    design = scheme.design
    if not isinstance(design, EnumeratedDesign):
        raise ValueError("exact per-index acceptance needs an enumerated design")
    step = 1 << scheme.trap_qubits
    arr = design.elements()
    if isinstance(state, PureState):
        amps = state.amplitudes
        v = np.einsum("nji,j->ni", arr.conj(), amps)[:, ::step]
        return np.einsum("ni,ni->n", v.conj(), v).real
    rho = _as_density_on_y(scheme, state)
    a = arr[:, :, ::step]
    return np.einsum("nji,jk,nki->n", a.conj(), rho, a).real


def avg_wrong_key_accept(
    scheme: QasScheme,
    state,
    mode: Literal["keys", "design"] | int = "keys",
    rng: np.random.Generator | None = None,
) -> float:
    """Average acceptance of a fixed state over random keys.

    ``mode="keys"`` averages exactly over the whole key space (via
    preimage counts of the key map; key space capped at 2^20).
    ``mode="design"`` averages uniformly over design indices instead,
    which for any trap scheme equals ``2^-t`` exactly.  An integer mode
    estimates the key average from that many sampled keys.
    """
    if isinstance(mode, int) and not isinstance(mode, bool):
        if rng is None:
            raise ValueError("sampled averaging needs an rng")
        keys = rng.integers(1 << scheme.key_bits, size=mode)
        return float(
            np.mean([accept_probability(scheme, int(k), state) for k in keys])
        )
    if mode == "design":
        probs = acceptance_by_index(scheme, state)
        return float(np.mean(probs))
    if mode == "keys":
        if (1 << scheme.key_bits) > MAX_EXACT_KEYS:
            raise ValueError("key space too large for exact averaging")
        probs = acceptance_by_index(scheme, state)
        weights = scheme.key_map.preimage_counts()
        return float(weights @ probs / (1 << scheme.key_bits))
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def scheme_params(scheme: QasScheme) -> dict:
    """JSON-ready parameter record.

    ``irreducible_poly`` is the field modulus a pairwise-permutation
    wrapper at this key length would use (the scheme itself involves no
    field arithmetic).
    """
    return {
        "m": scheme.message_qubits,
        "t": scheme.trap_qubits,
        "k": scheme.key_bits,
        "design_id": scheme.design.design_id,
        "irreducible_poly": irreducible_poly(scheme.key_bits),
        "epsilon": scheme.epsilon,
        "epsilon_prime": float(scheme.key_map.epsilon_prime),
    }


def scheme_to_json(scheme: QasScheme) -> str:
    return json.dumps(scheme_params(scheme))


def scheme_from_params(params: dict) -> QasScheme:
    scheme = build_scheme(params["m"], params["t"], params["k"])
    if abs(scheme.epsilon - params["epsilon"]) > ATOL:
        raise ValueError("serialized epsilon does not match the rebuilt scheme")
    return scheme
