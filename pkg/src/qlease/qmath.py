"""Dense complex linear algebra over explicit multi-qubit registers.

States, operators, channels, measurement and trace distance, all as plain
numpy arrays wrapped in lightly validated containers.  Everything is dense
and capped at a configurable total qubit count (default 12), which keeps
the whole library inside comfortable double-precision territory.

Register ordering convention
----------------------------
Qubit 0 is the *leftmost* register factor and the *most significant* bit
of a basis-state index.  Concretely, the basis state ``|b0 b1 ... b_{q-1}>``
sits at index ``sum(b_i * 2**(q-1-i))``, and ``tensor(a, b)`` places ``a``'s
register in front (``numpy.kron(a, b)``).

Concurrency
-----------
All container types are immutable after construction and safe to share.
Operations are pure functions.  The only stateful object is a
``numpy.random.Generator``; never share one between threads.  Derive
per-worker generators with :func:`spawn_rng`, which maps ``(seed, *key)``
to an independent stream deterministically (so parallel and serial
schedules see identical randomness).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Structural identities (norms, traces, unitarity) hold to this tolerance.
ATOL = 1e-9
#: Composed identities (sums of several exact pieces) get one digit of slack.
ATOL_COMPOSED = 1e-8
#: Hard cap on total qubits of any constructed object.  Configurable by the
#: caller, but everything in this library fits comfortably below it.
DEFAULT_QUBIT_CAP = 12

_QUBIT_CAP = DEFAULT_QUBIT_CAP


class DimensionMismatchError(ValueError):
    """Operands have incompatible Hilbert-space dimensions."""


class QubitCapError(ValueError):
    """An operation would exceed the configured total-qubit cap."""


def qubit_cap() -> int:
    """Current total-qubit cap."""
    return _QUBIT_CAP


def set_qubit_cap(cap: int) -> None:
    """Reconfigure the total-qubit cap (affects subsequent constructions)."""
    global _QUBIT_CAP
    if cap < 1:
        raise ValueError("qubit cap must be positive")
    _QUBIT_CAP = cap


def _check_cap(qubits: int) -> None:
    if qubits > _QUBIT_CAP:
        raise QubitCapError(f"{qubits} qubits exceeds the cap of {_QUBIT_CAP}")


def _qubits_for_dim(dim: int) -> int:
    q = int(dim).bit_length() - 1
    if dim <= 0 or (1 << q) != dim:
        raise DimensionMismatchError(f"dimension {dim} is not a power of two")
    return q


def _frozen(a: np.ndarray, dtype=complex) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Derive an independent generator from ``(seed, *key)``.

    The split function: the child is seeded by
    ``SeedSequence(entropy=seed, spawn_key=key)``.  Children with distinct
    keys are statistically independent, and the derivation depends only on
    the pair ``(seed, key)``, not on call order.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


# ---------------------------------------------------------------------------
# Container types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PureState:
    """A unit vector over ``qubits`` qubits (length ``2**qubits``)."""

    amplitudes: np.ndarray
    qubits: int = field(default=-1)

    def __post_init__(self):
        amps = _frozen(np.asarray(self.amplitudes).reshape(-1))
        q = _qubits_for_dim(amps.size)
        if self.qubits == -1:
            object.__setattr__(self, "qubits", q)
        elif self.qubits != q:
            raise DimensionMismatchError(
                f"{amps.size} amplitudes do not describe {self.qubits} qubits"
            )
        _check_cap(q)
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > ATOL:
            raise ValueError(f"state norm {nrm} is not 1 within {ATOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """A density matrix: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray
    qubits: int = field(default=-1)

    def __post_init__(self):
        mat = _frozen(np.asarray(self.matrix))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError("density operator must be square")
        q = _qubits_for_dim(mat.shape[0])
        if self.qubits == -1:
            object.__setattr__(self, "qubits", q)
        elif self.qubits != q:
            raise DimensionMismatchError("qubit count does not match matrix size")
        _check_cap(q)
        if np.max(np.abs(mat - mat.conj().T)) > ATOL:
            raise ValueError("density operator is not Hermitian within tolerance")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > ATOL:
            raise ValueError(f"trace {tr} is not 1 within {ATOL}")
        if np.min(np.linalg.eigvalsh(mat)) < -ATOL:
            raise ValueError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SubnormalizedOperator:
    """A positive semidefinite operator with trace in [0, 1].

    Carries the conditional output of a trace non-increasing map; its
    ``weight`` (the trace) is the probability of the branch it represents.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(np.asarray(self.matrix))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError("operator must be square")
        if np.max(np.abs(mat - mat.conj().T)) > ATOL:
            raise ValueError("operator is not Hermitian within tolerance")
        if np.min(np.linalg.eigvalsh(mat)) < -ATOL:
            raise ValueError("operator is not positive semidefinite")
        tr = np.trace(mat).real
        if tr < -ATOL or tr > 1.0 + ATOL:
            raise ValueError(f"trace {tr} outside [0, 1]")
        object.__setattr__(self, "matrix", mat)

    @property
    def weight(self) -> float:
        return float(np.trace(self.matrix).real)


@dataclass(frozen=True)
class Isometry:
    """A matrix ``V`` with ``V† V = I`` (possibly into a larger space)."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(np.asarray(self.matrix))
        if mat.ndim != 2 or mat.shape[0] < mat.shape[1]:
            raise DimensionMismatchError("isometry needs q_out >= q_in")
        _qubits_for_dim(mat.shape[0])
        _qubits_for_dim(mat.shape[1])
        gram = mat.conj().T @ mat
        if np.max(np.abs(gram - np.eye(mat.shape[1]))) > ATOL:
            raise ValueError("matrix is not an isometry within tolerance")
        object.__setattr__(self, "matrix", mat)

    @property
    def qubits_in(self) -> int:
        return _qubits_for_dim(self.matrix.shape[1])

    @property
    def qubits_out(self) -> int:
        return _qubits_for_dim(self.matrix.shape[0])


@dataclass(frozen=True)
class KrausChannel:
    """A channel ``rho -> sum_i K_i rho K_i†`` given by its Kraus operators.

    Trace preserving channels satisfy ``sum K†K = I``; trace non-increasing
    ones satisfy ``sum K†K <= I`` and must be flagged at construction.
    """

    kraus_ops: tuple
    trace_preserving: bool = True

    def __post_init__(self):
        ops = tuple(_frozen(np.asarray(k)) for k in self.kraus_ops)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise DimensionMismatchError("Kraus operators must share one shape")
        gram = sum(k.conj().T @ k for k in ops)
        eye = np.eye(shape[1])
        if self.trace_preserving:
            if np.max(np.abs(gram - eye)) > ATOL:
                raise ValueError("Kraus operators do not sum to identity")
        else:
            if np.max(np.linalg.eigvalsh(gram - eye)) > ATOL:
                raise ValueError("channel increases trace")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops[0].shape[0]


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def ket(bits: str) -> PureState:
    """Computational basis state, e.g. ``ket('01')`` for ``|01>``."""
    q = len(bits)
    idx = int(bits, 2) if q else 0
    amps = np.zeros(1 << q, dtype=complex)
    amps[idx] = 1.0
    return PureState(amps)


def zero_state(qubits: int) -> PureState:
    return ket("0" * qubits)


def maximally_mixed(qubits: int) -> DensityOperator:
    d = 1 << qubits
    return DensityOperator(np.eye(d) / d)


def random_pure_state(qubits: int, rng: np.random.Generator) -> PureState:
    d = 1 << qubits
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(v / np.linalg.norm(v))


def random_density(qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    d = 1 << qubits
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def tensor(a, b):
    """Kronecker product with ``a``'s register first (most significant).

    Accepts pairs of :class:`PureState`, :class:`DensityOperator` or raw
    matrices; mixed state/operator pairs are promoted to density operators.
    """
    if isinstance(a, PureState) and isinstance(b, PureState):
        _check_cap(a.qubits + b.qubits)
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, (PureState, DensityOperator)) and isinstance(b, (PureState, DensityOperator)):
        da = a.density() if isinstance(a, PureState) else a
        db = b.density() if isinstance(b, PureState) else b
        _check_cap(da.qubits + db.qubits)
        return DensityOperator(np.kron(da.matrix, db.matrix))
    ma = a.matrix if hasattr(a, "matrix") else np.asarray(a)
    mb = b.matrix if hasattr(b, "matrix") else np.asarray(b)
    if ma.ndim == 2 and mb.ndim == 2:
        _check_cap(_qubits_for_dim(ma.shape[0]) + _qubits_for_dim(mb.shape[0]))
    return np.kron(ma, mb)


def partial_trace(op: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Reduced state on the kept qubits (ascending order), trace preserved.

    An empty ``keep`` set yields the 1x1 operator holding the full trace.
    """
    keep = sorted(set(keep))
    q = op.qubits
    if any(i < 0 or i >= q for i in keep):
        raise DimensionMismatchError(f"keep indices must lie in [0, {q})")
    traced = [i for i in range(q) if i not in keep]
    t = op.matrix.reshape((2,) * (2 * q))
    # Contract each traced qubit's row index with its column index.
    for i in reversed(traced):
        t = np.trace(t, axis1=i, axis2=i + (t.ndim // 2))
    d = 1 << len(keep)
    return DensityOperator(t.reshape(d, d))


def trace_norm(x: np.ndarray) -> float:
    """Schatten-1 norm: the sum of singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(x), compute_uv=False)))


def trace_distance(x, y) -> float:
    """Half the trace norm of the difference, for arbitrary linear operators.

    Symmetric, satisfies the triangle inequality, and lies in [0, 1] for
    pairs of density operators.
    """
    mx = x.matrix if hasattr(x, "matrix") else np.asarray(x)
    my = y.matrix if hasattr(y, "matrix") else np.asarray(y)
    if mx.shape != my.shape or mx.ndim != 2 or mx.shape[0] != mx.shape[1]:
        raise DimensionMismatchError("trace distance needs equal square shapes")
    return 0.5 * trace_norm(mx - my)


def state_distance(a, b) -> float:
    """Trace distance between two states given in any representation."""
    da = a.density() if isinstance(a, PureState) else a
    db = b.density() if isinstance(b, PureState) else b
    return trace_distance(da, db)


def _validate_projectors(projectors: Sequence[np.ndarray], dim: int) -> list[np.ndarray]:
    mats = [p.matrix if hasattr(p, "matrix") else np.asarray(p, dtype=complex) for p in projectors]
    total = np.zeros((dim, dim), dtype=complex)
    for p in mats:
        if p.shape != (dim, dim):
            raise DimensionMismatchError("projector shape mismatch")
        if np.max(np.abs(p - p.conj().T)) > ATOL or np.max(np.abs(p @ p - p)) > ATOL:
            raise ValueError("measurement operator is not an orthogonal projector")
        total += p
    if np.max(np.abs(total - np.eye(dim))) > ATOL:
        raise ValueError("projectors do not sum to identity")
    return mats


def measure_projective(state, projectors: Sequence, rng: np.random.Generator):
    """Projective measurement: sample an outcome, return (index, post-state).

    Outcome ``i`` occurs with the Born probability ``Tr(P_i rho)``; the
    post-state is the renormalized projection.  Outcomes with probability
    below 1e-12 are never sampled.  Pure states stay pure.
    """
    pure = isinstance(state, PureState)
    dim = state.dim
    mats = _validate_projectors(projectors, dim)
    if pure:
        branches = [p @ state.amplitudes for p in mats]
        probs = np.array([float(np.vdot(b, b).real) for b in branches])
    else:
        probs = np.array([float(np.trace(p @ state.matrix).real) for p in mats])
    probs = np.clip(probs, 0.0, None)
    probs[probs < 1e-12] = 0.0
    probs /= probs.sum()
    outcome = int(rng.choice(len(mats), p=probs))
    if pure:
        post = PureState(branches[outcome] / np.sqrt(probs[outcome]))
    else:
        m = mats[outcome] @ state.matrix @ mats[outcome]
        post = DensityOperator(m / np.trace(m).real)
    return outcome, post


def apply_isometry(v: Isometry, state):
    """``V |psi>`` for pure input, ``V rho V†`` for density input."""
    mat = v.matrix
    if isinstance(state, PureState):
        if state.dim != mat.shape[1]:
            raise DimensionMismatchError("state does not match isometry domain")
        return PureState(mat @ state.amplitudes)
    if isinstance(state, DensityOperator):
        if state.dim != mat.shape[1]:
            raise DimensionMismatchError("state does not match isometry domain")
        return DensityOperator(mat @ state.matrix @ mat.conj().T)
    raise TypeError("expected PureState or DensityOperator")


def apply_channel(ch: KrausChannel, state: DensityOperator):
    """``sum_i K_i rho K_i†``; subnormalized output for non-TP channels."""
    rho = state.density() if isinstance(state, PureState) else state
    if rho.dim != ch.dim_in:
        raise DimensionMismatchError("state does not match channel input")
    out = sum(k @ rho.matrix @ k.conj().T for k in ch.kraus_ops)
    if ch.trace_preserving:
        return DensityOperator(out)
    return SubnormalizedOperator(out)


def embed_operator(op: np.ndarray, positions: Sequence[int], total_qubits: int) -> np.ndarray:
    """Lift an operator on the given qubit positions to the full register.

    ``positions`` lists which global qubits the operator's own qubits map
    to, in order.  The remaining qubits get identity.
    """
    op = op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=complex)
    k = _qubits_for_dim(op.shape[0])
    if len(positions) != k:
        raise DimensionMismatchError("operator size does not match positions")
    if len(set(positions)) != k or any(p < 0 or p >= total_qubits for p in positions):
        raise ValueError("positions must be distinct and in range")
    rest = [i for i in range(total_qubits) if i not in positions]
    full = np.kron(op, np.eye(1 << len(rest), dtype=complex))
    # Current qubit order is positions + rest; permute into 0..n-1.
    order = list(positions) + rest
    perm = [order.index(i) for i in range(total_qubits)]
    t = full.reshape((2,) * (2 * total_qubits))
    t = t.transpose(perm + [total_qubits + p for p in perm])
    d = 1 << total_qubits
    return t.reshape(d, d)


# ---------------------------------------------------------------------------
# JSON debug format: row-major nested lists of [re, im] pairs
# ---------------------------------------------------------------------------


def matrix_to_jsonable(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in m]
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_jsonable(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_to_json(m: np.ndarray) -> str:
    return json.dumps(matrix_to_jsonable(m))


def matrix_from_json(s: str) -> np.ndarray:
    return matrix_from_jsonable(json.loads(s))
