"""Combinatorial ingredients: Clifford 2-designs, pairwise independent
permutations over GF(2^l), and almost-uniform key maps.

The unitary 2-design is instantiated as the qubit Clifford group.  At one
and two qubits the whole group is enumerated explicitly (24 and 11520
elements modulo global phase); from three to six qubits elements are
addressed through a canonical index built from the Koenig-Smolin
symplectic enumeration, which also gives exactly uniform sampling:

    R. Koenig and J. A. Smolin, "How to efficiently select an arbitrary
    Clifford group element", J. Math. Phys. 55, 122202 (2014).

Being a 2-design is not taken on faith: :func:`frame_potential` computes
the pair-averaged fourth overlap moment, which equals 2 exactly for any
exact 2-design and exceeds it for anything else.

Global phases are fixed throughout by making the first nonzero entry of
the first column real and positive; deduplication and determinism rely on
this canonical form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np

from .qmath import matrix_from_jsonable, matrix_to_jsonable

GENERATOR_SET_VERSION = "v1"

#: Fixed field representations.  Other bit lengths get the lexicographically
#: smallest irreducible polynomial, computed on demand.
IRREDUCIBLE_POLYS = {
    2: 0b111,        # x^2 + x + 1
    3: 0b1011,       # x^3 + x + 1
    4: 0b10011,      # x^4 + x + 1
    8: 0b100011011,  # x^8 + x^4 + x^3 + x + 1
}


# ---------------------------------------------------------------------------
# GF(2)[x] and GF(2^l)
# ---------------------------------------------------------------------------


def _poly_degree(p: int) -> int:
    return p.bit_length() - 1


def _poly_mod(a: int, mod: int) -> int:
    deg = _poly_degree(mod)
    while a.bit_length() - 1 >= deg and a:
        a ^= mod << (a.bit_length() - mod.bit_length())
    return a


def _poly_mul(a: int, b: int) -> int:
    out = 0
    shift = 0
    while b:
        if b & 1:
            out ^= a << shift
        b >>= 1
        shift += 1
    return out


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def _poly_powmod_x(exp: int, mod: int) -> int:
    """x**exp modulo the polynomial ``mod`` over GF(2)."""
    result = 1
    base = _poly_mod(0b10, mod)
    while exp:
        if exp & 1:
            result = _poly_mod(_poly_mul(result, base), mod)
        base = _poly_mod(_poly_mul(base, base), mod)
        exp >>= 1
    return result


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(poly: int, bits: int) -> bool:
    """Rabin's irreducibility test for a degree-``bits`` polynomial over GF(2)."""
    if _poly_degree(poly) != bits:
        return False
    # x^(2^bits) == x (mod poly)
    if _poly_powmod_x(1 << bits, poly) != _poly_mod(0b10, poly):
        return False
    for q in _prime_factors(bits):
        h = _poly_powmod_x(1 << (bits // q), poly) ^ 0b10
        if _poly_gcd(poly, h) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible_poly(bits: int) -> int:
    """The field-defining polynomial used for GF(2^bits)."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if bits in IRREDUCIBLE_POLYS:
        return IRREDUCIBLE_POLYS[bits]
    for candidate in range((1 << bits) + 1, 1 << (bits + 1)):
        if is_irreducible(candidate, bits):
            return candidate
    raise RuntimeError(f"no irreducible polynomial of degree {bits} found")


def gf_mul(a: int, b: int, bits: int, poly: int | None = None) -> int:
    """Product in GF(2^bits) under the fixed irreducible polynomial."""
    mod = irreducible_poly(bits) if poly is None else poly
    return _poly_mod(_poly_mul(a, b), mod)


# ---------------------------------------------------------------------------
# Pairwise independent permutations x -> m*x + b over GF(2^l)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairwisePermFamily:
    """All maps ``h_(m,b)(x) = m*x + b`` over GF(2^bits) with ``m != 0``.

    Every member is a permutation of {0,1}^bits, and a uniformly random
    parameter sends any fixed pair of distinct inputs to any fixed pair of
    distinct outputs with probability exactly 1/(2^l (2^l - 1)).
    """

    bits: int
    poly: int = -1

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.poly == -1:
            object.__setattr__(self, "poly", irreducible_poly(self.bits))
        elif not is_irreducible(self.poly, self.bits):
            raise ValueError("poly is not irreducible of the right degree")

    @property
    def size(self) -> int:
        n = 1 << self.bits
        return (n - 1) * n

    def params(self) -> Iterator[tuple[int, int]]:
        n = 1 << self.bits
        for m in range(1, n):
            for b in range(n):
                yield (m, b)

    def sample_param(self, rng: np.random.Generator) -> tuple[int, int]:
        n = 1 << self.bits
        return int(rng.integers(1, n)), int(rng.integers(0, n))

    def apply(self, r: tuple[int, int], x: int) -> int:
        m, b = r
        n = 1 << self.bits
        if not (1 <= m < n and 0 <= b < n):
            raise ValueError("parameter out of range (m must be nonzero)")
        if not 0 <= x < n:
            raise ValueError("input out of range")
        return gf_mul(m, x, self.bits, self.poly) ^ b


def pairwise_apply(family: PairwisePermFamily, r: tuple[int, int], x: int) -> int:
    """Apply the permutation with parameter ``r`` to ``x``."""
    return family.apply(r, x)


# ---------------------------------------------------------------------------
# Almost-uniform key maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpsUniformMap:
    """The map ``x -> x mod range_size`` from ``{0,1}^domain_bits``.

    ``epsilon_prime`` is the exact statistical distance between the image
    of the uniform distribution and the uniform distribution on the range,
    computed from preimage counts.  It never exceeds
    ``range_size / (4 * 2**domain_bits)``.
    """

    domain_bits: int
    range_size: int
    epsilon_prime: Fraction = Fraction(0)

    def __post_init__(self):
        if self.domain_bits < 1 or self.range_size < 1:
            raise ValueError("need domain_bits >= 1 and range_size >= 1")
        a = 1 << self.domain_bits
        b = self.range_size
        q, rem = divmod(a, b)
        # rem residues have q+1 preimages, the rest have q.
        eps = (
            rem * abs(Fraction(q + 1, a) - Fraction(1, b))
            + (b - rem) * abs(Fraction(q, a) - Fraction(1, b))
        ) / 2
        object.__setattr__(self, "epsilon_prime", eps)

    @property
    def bound(self) -> Fraction:
        return Fraction(self.range_size, 4 * (1 << self.domain_bits))

    def apply(self, x: int) -> int:
        if not 0 <= x < (1 << self.domain_bits):
            raise ValueError("input outside the domain")
        return x % self.range_size

    def preimage_count(self, b: int) -> int:
        if not 0 <= b < self.range_size:
            raise ValueError("value outside the range")
        a = 1 << self.domain_bits
        q, rem = divmod(a, self.range_size)
        return q + 1 if b < rem else q

    def preimage_counts(self) -> np.ndarray:
        a = 1 << self.domain_bits
        q, rem = divmod(a, self.range_size)
        out = np.full(self.range_size, q, dtype=np.int64)
        out[:rem] += 1
        return out


def eps_uniform_build(domain_bits: int, range_size: int) -> EpsUniformMap:
    """Build the mod map together with its exact statistical distance."""
    return EpsUniformMap(domain_bits, range_size)


# ---------------------------------------------------------------------------
# Clifford groups
# ---------------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_PAULI_1Q = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Rescale by a global phase so the first nonzero entry of the first
    column is real and positive."""
    col = u[:, 0]
    idx = int(np.argmax(np.abs(col) > 1e-12))
    z = col[idx]
    return u * (abs(z) / z)


def _dedup_key(u: np.ndarray) -> bytes:
    # Clifford entries live on the grid {0, ±2^{-j/2}} x 8th roots of unity,
    # far from any rounding boundary at 6 decimals.
    r = np.round(u, 6) + 0.0  # normalize -0.0
    return r.tobytes()


def _generators(qubits: int) -> list[np.ndarray]:
    if qubits == 1:
        return [_H, _S]
    if qubits == 2:
        eye = np.eye(2, dtype=complex)
        return [
            np.kron(_H, eye),
            np.kron(eye, _H),
            np.kron(_S, eye),
            np.kron(eye, _S),
            _CNOT,
        ]
    raise ValueError("explicit enumeration supports 1 or 2 qubits only")


class UnitaryDesign:
    """Finite set of unitaries addressable by a canonical index.

    ``element(i)`` is deterministic; ``sample(rng)`` draws an index
    uniformly, so sampling is exactly uniform over the set.
    """

    qubits: int
    cardinality: int
    design_id: str

    def element(self, i: int) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.element(int(rng.integers(self.cardinality)))


class EnumeratedDesign(UnitaryDesign):
    """A design held as an explicit list of canonical-phase unitaries."""

    def __init__(self, qubits: int, elements: np.ndarray, design_id: str):
        self.qubits = qubits
        self._elements = np.ascontiguousarray(elements)
        self._elements.setflags(write=False)
        self.cardinality = len(elements)
        self.design_id = design_id

    def element(self, i: int) -> np.ndarray:
        return self._elements[i]

    def elements(self) -> np.ndarray:
        """All elements stacked as an (N, d, d) array."""
        return self._elements


@lru_cache(maxsize=4)
def clifford_enumerate(qubits: int) -> EnumeratedDesign:
    """The full Clifford group modulo phase, by closure under generators.

    Cardinality is 24 at one qubit and 11520 at two; anything larger is
    out of enumeration range.
    """
    if qubits not in (1, 2):
        raise ValueError("clifford_enumerate supports qubits in {1, 2}")
    gens = _generators(qubits)
    dim = 1 << qubits
    start = canonical_phase(np.eye(dim, dtype=complex))
    seen = {_dedup_key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = canonical_phase(g @ u)
                key = _dedup_key(v)
                if key not in seen:
                    seen[key] = v
                    nxt.append(v)
        frontier = nxt
    elements = np.stack(list(seen.values()))
    return EnumeratedDesign(
        qubits, elements, f"clifford-enum-q{qubits}-{GENERATOR_SET_VERSION}"
    )


# --- Koenig-Smolin symplectic enumeration (interleaved x,z convention) -----


def _sympl_inner(v: np.ndarray, w: np.ndarray) -> int:
    t = 0
    for i in range(v.size >> 1):
        t += int(v[2 * i]) * int(w[2 * i + 1])
        t += int(w[2 * i]) * int(v[2 * i + 1])
    return t % 2


def _transvection(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v + _sympl_inner(k, v) * k) % 2


def _int_to_bits(i: int, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.int8)
    for j in range(n):
        out[j] = i & 1
        i >>= 1
    return out


def _find_transvection(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectors h0, h1 with ``y = Z_h0 Z_h1 x`` (Z the transvection map)."""
    out = np.zeros((2, x.size), dtype=np.int8)
    if np.array_equal(x, y):
        return out
    if _sympl_inner(x, y) == 1:
        out[0] = (x + y) % 2
        return out
    z = np.zeros(x.size, dtype=np.int8)
    for i in range(x.size >> 1):
        ii = 2 * i
        if (x[ii] + x[ii + 1]) != 0 and (y[ii] + y[ii + 1]) != 0:
            z[ii] = (x[ii] + y[ii]) % 2
            z[ii + 1] = (x[ii + 1] + y[ii + 1]) % 2
            if (z[ii] + z[ii + 1]) == 0:
                z[ii + 1] = 1
                if x[ii] != x[ii + 1]:
                    z[ii] = 1
            out[0] = (x + z) % 2
            out[1] = (y + z) % 2
            return out
    for i in range(x.size >> 1):
        ii = 2 * i
        if (x[ii] + x[ii + 1]) != 0 and (y[ii] + y[ii + 1]) == 0:
            if x[ii] == x[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = x[ii]
                z[ii] = x[ii + 1]
            break
    for i in range(x.size >> 1):
        ii = 2 * i
        if (x[ii] + x[ii + 1]) == 0 and (y[ii] + y[ii + 1]) != 0:
            if y[ii] == y[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = y[ii]
                z[ii] = y[ii + 1]
            break
    out[0] = (x + z) % 2
    out[1] = (y + z) % 2
    return out


def num_symplectics(n: int) -> int:
    """|Sp(2n, 2)| = prod_{j<=n} 2^(2j-1) (4^j - 1)."""
    x = 1
    for j in range(1, n + 1):
        x *= (1 << (2 * j - 1)) * ((1 << (2 * j)) - 1)
    return x


def _symplectic_matrix(i: int, n: int) -> np.ndarray:
    """The i-th 2n x 2n binary symplectic matrix (rows are basis images)."""
    nn = 2 * n
    s = (1 << nn) - 1
    k = (i % s) + 1
    i //= s
    f1 = _int_to_bits(k, nn)
    e1 = np.zeros(nn, dtype=np.int8)
    e1[0] = 1
    tv = _find_transvection(e1, f1)
    bits = _int_to_bits(i % (1 << (nn - 1)), nn - 1)
    i //= 1 << (nn - 1)
    eprime = e1.copy()
    for j in range(2, nn):
        eprime[j] = bits[j - 1]
    h0 = _transvection(tv[0], eprime)
    h0 = _transvection(tv[1], h0)
    if bits[0] == 1:
        f1 = f1 * 0
    id2 = np.eye(2, dtype=np.int8)
    if n != 1:
        rest = _symplectic_matrix(i, n - 1)
        g = np.zeros((nn, nn), dtype=np.int8)
        g[:2, :2] = id2
        g[2:, 2:] = rest
    else:
        g = id2.copy()
    for j in range(nn):
        g[j] = _transvection(tv[0], g[j])
        g[j] = _transvection(tv[1], g[j])
        g[j] = _transvection(h0, g[j])
        g[j] = _transvection(f1, g[j])
    return g


def _pauli_matrix(vec: np.ndarray) -> np.ndarray:
    """Hermitian Pauli for an interleaved (x, z) symplectic vector."""
    n = vec.size // 2
    out = np.array([[1.0 + 0j]])
    for j in range(n):
        out = np.kron(out, _PAULI_1Q[(int(vec[2 * j]), int(vec[2 * j + 1]))])
    return out


def _clifford_from_tableau(g: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Dense unitary mapping X_j, Z_j to the signed Paulis encoded by
    the symplectic rows (row 2j for X_j, row 2j+1 for Z_j).

    The unitary is pinned down column by column: the image of |0...0> is
    the joint +1 eigenvector of the Z images, and the remaining columns
    follow by applying X images.
    """
    n = g.shape[0] // 2
    dim = 1 << n
    x_imgs = []
    z_imgs = []
    for j in range(n):
        x_imgs.append(((-1) ** int(signs[2 * j])) * _pauli_matrix(g[2 * j]))
        z_imgs.append(((-1) ** int(signs[2 * j + 1])) * _pauli_matrix(g[2 * j + 1]))
    proj = np.eye(dim, dtype=complex)
    for zi in z_imgs:
        proj = proj @ (np.eye(dim) + zi) / 2
    col = int(np.argmax(np.linalg.norm(proj, axis=0) > 1e-9))
    u0 = proj[:, col]
    u0 = u0 / np.linalg.norm(u0)
    u = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        v = u0
        for j in range(n):
            if (b >> (n - 1 - j)) & 1:  # qubit 0 is the most significant bit
                v = x_imgs[j] @ v
        u[:, b] = v
    return canonical_phase(u)


class IndexedCliffordDesign(UnitaryDesign):
    """Clifford group accessed through the canonical (symplectic, sign)
    index without enumeration; supports 1..6 qubits."""

    _CACHE_LIMIT = 1 << 16

    def __init__(self, qubits: int):
        if not 1 <= qubits <= 6:
            raise ValueError("indexed Clifford access supports 1..6 qubits")
        self.qubits = qubits
        self._num_sympl = num_symplectics(qubits)
        self.cardinality = self._num_sympl * (1 << (2 * qubits))
        self.design_id = f"clifford-ks-q{qubits}-{GENERATOR_SET_VERSION}"
        self._cache: dict[int, np.ndarray] = {}

    def element(self, i: int) -> np.ndarray:
        if not 0 <= i < self.cardinality:
            raise IndexError("design index out of range")
        cached = self._cache.get(i)
        if cached is not None:
            return cached
        sympl_idx, sign_idx = i % self._num_sympl, i // self._num_sympl
        g = _symplectic_matrix(sympl_idx, self.qubits)
        signs = _int_to_bits(sign_idx, 2 * self.qubits)
        u = _clifford_from_tableau(g, signs)
        u.setflags(write=False)
        if len(self._cache) < self._CACHE_LIMIT:
            self._cache[i] = u
        return u


def clifford_design(qubits: int) -> UnitaryDesign:
    """Enumerated group at <= 2 qubits, indexed access at 3..6."""
    if qubits <= 2:
        return clifford_enumerate(qubits)
    return IndexedCliffordDesign(qubits)


def clifford_sample(qubits: int, rng: np.random.Generator) -> np.ndarray:
    """A uniformly random Clifford element in canonical phase (<= 6 qubits)."""
    if qubits > 6:
        raise ValueError("dense Clifford sampling supports at most 6 qubits")
    return clifford_design(qubits).sample(rng)


def random_unitary_set(
    qubits: int, size: int, rng: np.random.Generator
) -> EnumeratedDesign:
    """Haar-random unitaries as a (non-design) set; the negative control
    for the frame-potential certificate."""
    from .qmath import haar_unitary

    dim = 1 << qubits
    elements = np.stack(
        [canonical_phase(haar_unitary(dim, rng)) for _ in range(size)]
    )
    return EnumeratedDesign(qubits, elements, f"haar-set-q{qubits}-n{size}")


# ---------------------------------------------------------------------------
# Frame potential
# ---------------------------------------------------------------------------


def frame_potential(
    design: UnitaryDesign,
    samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Pair-averaged fourth overlap moment (1/N^2) sum |Tr(U†V)|^4.

    Exhaustive over all N^2 ordered pairs when ``samples`` is None (needs
    an enumerated design); otherwise a Monte Carlo estimate over uniformly
    sampled index pairs.  Exact 2-designs give exactly 2 in any dimension.
    """
    if samples is None:
        if not isinstance(design, EnumeratedDesign):
            raise ValueError("exhaustive frame potential needs an enumerated design")
        flat = design.elements().reshape(design.cardinality, -1)
        total = 0.0
        block = 2048
        for lo in range(0, design.cardinality, block):
            overlaps = flat[lo : lo + block].conj() @ flat.T
            total += float(np.sum(np.abs(overlaps) ** 4))
        return total / design.cardinality**2
    if rng is None:
        raise ValueError("sampled frame potential needs an rng")
    ii = rng.integers(design.cardinality, size=samples)
    jj = rng.integers(design.cardinality, size=samples)
    if isinstance(design, EnumeratedDesign):
        flat = design.elements().reshape(design.cardinality, -1)
        overlaps = np.einsum("ni,ni->n", flat[ii].conj(), flat[jj])
    else:
        overlaps = np.array(
            [
                np.vdot(design.element(int(a)), design.element(int(b)))
                for a, b in zip(ii, jj)
            ]
        )
    return float(np.mean(np.abs(overlaps) ** 4))


# ---------------------------------------------------------------------------
# Disk cache (JSON matrix format)
# ---------------------------------------------------------------------------


def save_design(design: EnumeratedDesign, path: str | Path) -> None:
    payload = {
        "design_id": design.design_id,
        "qubits": design.qubits,
        "cardinality": design.cardinality,
        "elements": [matrix_to_jsonable(u) for u in design.elements()],
    }
    Path(path).write_text(json.dumps(payload))


def load_design(path: str | Path) -> EnumeratedDesign:
    payload = json.loads(Path(path).read_text())
    elements = np.stack([matrix_from_jsonable(m) for m in payload["elements"]])
    design = EnumeratedDesign(payload["qubits"], elements, payload["design_id"])
    if design.cardinality != payload["cardinality"]:
        raise ValueError("cached design is inconsistent")
    return design
