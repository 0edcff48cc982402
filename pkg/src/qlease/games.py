"""Security-game harnesses, trivial-guess baselines and an adversary zoo.

Two games are playable.  In the pirating game a pirate splits one
protected program into a register for Bob, who evaluates honestly, and a
register for Charlie, who measures however he likes; they win by both
answering their independent challenges correctly.  In the leasing game an
adversary returns a register to the lessor, survives verification, and
then has to answer a challenge from what he kept.

Every Monte Carlo estimate here is reproducible: trial ``i`` of a run
with master seed ``s`` uses the generator ``spawn_rng(s, i)``, so serial
and parallel schedules produce identical reports.  For the simple
adversaries the module also provides closed-form winning probabilities
(``oracle_*``), computed purely from exact design averages — an
independent route against which the harness is checked.

Baselines ``p_marg`` and ``p_ind`` are the best challenge-only guessing
probabilities; they are computed by exhaustive enumeration, in exact
rational arithmetic whenever the distributions carry exact weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np

from .copyprotect import (
    ChallengeDistribution,
    PointFunction,
    accept_projector,
    correctness_exact,
    dhalf,
    biased_point,
    protect,
    uniform_points,
)
from .leasing import SslScheme, verify_distribution
from .qas import QasScheme
from .qmath import (
    KrausChannel,
    PureState,
    apply_channel,
    embed_operator,
    measure_projective,
    spawn_rng,
    tensor,
    zero_state,
)

CSV_SCHEMA_VERSION = 1
CSV_HEADER = [
    "schema_version",
    "game",
    "scheme",
    "adversary",
    "trials",
    "wins",
    "estimate",
    "ci_lo",
    "ci_hi",
    "baseline",
    "bound",
    "seed",
]


def wilson_interval(wins: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= wins <= trials:
        raise ValueError("need 0 <= wins <= trials and trials >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = wins / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * float(np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials**2))) / denom
    lo = 0.0 if wins == 0 else max(0.0, float(center - half))
    hi = 1.0 if wins == trials else min(1.0, float(center + half))
    return lo, hi


# ---------------------------------------------------------------------------
# Adversary building blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PirateMap:
    """A CPTP splitter from the program space into named registers.

    Either a Kraus channel or a unitary acting on the program plus
    ``ancilla_qubits`` fresh zero qubits.  ``bob_qubits`` and
    ``charlie_qubits`` say which output qubits go to which party (in the
    leasing game they are the returned and kept registers).  Qubits in
    neither list are environment: nobody measures them.
    """

    bob_qubits: tuple[int, ...]
    charlie_qubits: tuple[int, ...]
    channel: KrausChannel | None = None
    unitary: np.ndarray | None = None
    ancilla_qubits: int = 0
    name: str = "pirate"

    def __post_init__(self):
        if (self.channel is None) == (self.unitary is None):
            raise ValueError("specify exactly one of channel or unitary")
        if set(self.bob_qubits) & set(self.charlie_qubits):
            raise ValueError("register split must be disjoint")

    def split(self, program_state: PureState, point: int, rng: np.random.Generator):
        """Apply the map; returns (joint state, bob, charlie, side info).

        ``point`` is the encoded point.  A real pirate never reads it; it
        is threaded through for modeling adversaries (see
        :class:`KeysearchPirate` and :func:`cheat_double_program`) which
        say so explicitly.
        """
        if self.unitary is not None:
            full = program_state
            if self.ancilla_qubits:
                full = tensor(program_state, zero_state(self.ancilla_qubits))
            joint = PureState(self.unitary @ full.amplitudes)
        else:
            joint = apply_channel(self.channel, program_state.density())
        return joint, self.bob_qubits, self.charlie_qubits, None


class MeasurementStrategy:
    """Charlie's side: one two-outcome projective measurement per
    challenge, with the projector meaning "answer 1"."""

    name = "strategy"

    def projector(self, x: int) -> np.ndarray | None:
        raise NotImplementedError

    def answer(self, state, qubits, x, side, rng) -> int:
        proj = self.projector(x)
        if proj is None:
            raise NotImplementedError
        total = state.qubits
        lifted = embed_operator(proj, qubits, total)
        eye = np.eye(1 << total)
        outcome, _ = measure_projective(state, [eye - lifted, lifted], rng)
        return outcome


class FixedAnswer(MeasurementStrategy):
    """Always answers the same bit (the projector is I or 0)."""

    def __init__(self, bit: int):
        self.bit = int(bit)
        self.name = f"fixed-{self.bit}"

    def projector(self, x: int) -> np.ndarray | None:
        return None

    def answer(self, state, qubits, x, side, rng) -> int:
        return self.bit


class ProjectorTable(MeasurementStrategy):
    """Arbitrary projectors supplied as a mapping or callable."""

    def __init__(self, projectors: Callable[[int], np.ndarray], name: str = "table"):
        self._projectors = projectors
        self.name = name

    def projector(self, x: int) -> np.ndarray:
        p = self._projectors(x)
        return p.matrix if hasattr(p, "matrix") else np.asarray(p)


class HonestEvalStrategy(MeasurementStrategy):
    """Runs the honest evaluation measurement on a program-shaped register."""

    def __init__(self, scheme: QasScheme):
        self.scheme = scheme
        self.name = "honest-eval"
        self._cache: dict[int, np.ndarray] = {}

    def projector(self, x: int) -> np.ndarray:
        proj = self._cache.get(x)
        if proj is None:
            proj = accept_projector(self.scheme, x)
            self._cache[x] = proj
        return proj


class PointGuessStrategy(MeasurementStrategy):
    """Classical guess from a key the pirate recovered: answer 1 iff the
    challenge equals it (0 when the search came up empty)."""

    name = "point-guess"

    def projector(self, x: int) -> np.ndarray | None:
        return None

    def answer(self, state, qubits, x, side, rng) -> int:
        return int(side is not None and x == side)


class KeysearchPirate:
    """Brute-force key search: try candidate keys one by one, coherently,
    stopping at the first acceptance.

    Each trial draws a fresh candidate list.  With ``include_point`` (the
    default) the true point is planted at a uniformly random position
    among ``budget_size`` slots — modeling the brute-forcer who would
    eventually reach the right key — so a budget of 1 is the lucky guess
    and a full budget is the whole key space in random order.  An explicit
    ``budget`` list is used verbatim instead (and an empty one degenerates
    to the trivial forwarder).

    Every candidate test is the projective accept-check for that key;
    wrong-key tests damage the program and may stop the search at a false
    acceptance, which is the error-accumulation mechanism this adversary
    exists to demonstrate.
    """

    def __init__(
        self,
        scheme: QasScheme,
        budget_size: int | None = None,
        budget: Sequence[int] | None = None,
        include_point: bool = True,
    ):
        if (budget_size is None) == (budget is None):
            raise ValueError("specify exactly one of budget_size or budget")
        space = 1 << scheme.key_bits
        if budget_size is not None and not 1 <= budget_size <= space:
            raise ValueError("budget_size outside the key space")
        if budget is not None and any(not 0 <= k < space for k in budget):
            raise ValueError("budget keys outside the key space")
        self.scheme = scheme
        self.budget_size = budget_size
        self.budget = None if budget is None else list(budget)
        self.include_point = include_point
        self.name = (
            f"keysearch-{budget_size if budget_size is not None else len(self.budget)}"
        )
        self._projs: dict[int, list[np.ndarray]] = {}

    def _measurement(self, key: int) -> list[np.ndarray]:
        pair = self._projs.get(key)
        if pair is None:
            proj = accept_projector(self.scheme, key)
            pair = [np.eye(proj.shape[0]) - proj, proj]
            self._projs[key] = pair
        return pair

    def _candidates(self, point: int, rng: np.random.Generator) -> list[int]:
        if self.budget is not None:
            return list(self.budget)
        space = 1 << self.scheme.key_bits
        if not self.include_point:
            return [int(k) for k in rng.permutation(space)[: self.budget_size]]
        others = np.delete(np.arange(space), point)
        rng.shuffle(others)
        keys = [int(k) for k in others[: self.budget_size - 1]]
        keys.insert(int(rng.integers(self.budget_size)), point)
        return keys

    def split(self, program_state: PureState, point: int, rng: np.random.Generator):
        state = program_state
        found = None
        for key in self._candidates(point, rng):
            outcome, state = measure_projective(state, self._measurement(key), rng)
            if outcome == 1:
                found = key
                break
        bob = tuple(range(self.scheme.total_qubits))
        return state, bob, (), found


# ---------------------------------------------------------------------------
# Game specification and baselines
# ---------------------------------------------------------------------------

Family = Callable[[int], ChallengeDistribution]


@dataclass(frozen=True)
class GameSpec:
    """Distributions of the game: the circuit (point) distribution, Bob's
    and Charlie's challenge families for the pirating game (Charlie's
    alone is the challenge in the leasing game), and whether Bob is the
    honest evaluator."""

    scheme: QasScheme
    circuit_dist: ChallengeDistribution
    bob_family: Family
    charlie_family: Family
    honest_bob: bool = True


def default_cp_spec(scheme: QasScheme, bob_r: float = 0.5) -> GameSpec:
    """Uniform points; Charlie challenged from the half-point
    distribution; Bob's marginal generalized to mass ``bob_r`` at the
    point (0.5 recovers the product of two half-point draws)."""
    bits = scheme.key_bits
    bob: Family = (
        (lambda p: dhalf(p, bits)) if bob_r == 0.5 else (lambda p: biased_point(p, bits, bob_r))
    )
    return GameSpec(
        scheme=scheme,
        circuit_dist=uniform_points(bits),
        bob_family=bob,
        charlie_family=lambda p: dhalf(p, bits),
    )


def _best_guess_rate(
    circuit_dist: ChallengeDistribution, family: Family
) -> Fraction | float:
    """E over the challenge marginal of the best fixed guess of C(x).

    Exhaustive over (point, challenge) pairs; exact rational arithmetic
    when every weight is exact, floats otherwise.
    """
    size = circuit_dist.size
    tables = [family(p) for p in range(size)]
    exact = circuit_dist.prob_fraction(0) is not None and all(
        t.prob_fraction(0) is not None for t in tables
    )
    if exact:
        total = Fraction(0)
        for x in range(size):
            w1 = Fraction(0)
            w0 = Fraction(0)
            for p in range(size):
                w = circuit_dist.prob_fraction(p) * tables[p].prob_fraction(x)
                if p == x:
                    w1 += w
                else:
                    w0 += w
            total += max(w1, w0)  # ties broken toward b=0; value unaffected
        return total
    weights = np.array([t.probs for t in tables]) * circuit_dist.probs[:, None]
    diag = np.diag(weights)
    col = weights.sum(axis=0) - diag
    return float(np.maximum(diag, col).sum())


def p_marg(
    circuit_dist: ChallengeDistribution, charlie_family: Family
) -> Fraction | float:
    """Charlie's best challenge-only guessing probability in the pirating
    game, from his challenge marginal."""
    return _best_guess_rate(circuit_dist, charlie_family)


def p_ind(
    circuit_dist: ChallengeDistribution, challenge_family: Family
) -> Fraction | float:
    """The lessee's best challenge-only guessing probability in the
    leasing game."""
    return _best_guess_rate(circuit_dist, challenge_family)


def cp_security_bound(baseline: float, epsilon: float) -> float:
    """Theorem bound for the pirating game: baseline + 3eps/2 + sqrt(2eps)."""
    return baseline + 1.5 * epsilon + float(np.sqrt(2 * epsilon))


def ssl_security_bound(baseline: float, epsilon: float) -> float:
    """Theorem bound for the leasing game: baseline + eps (inherited)."""
    return baseline + epsilon


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameReport:
    game: str
    scheme: str
    adversary: str
    trials: int
    wins: int
    estimate: float
    ci_lo: float
    ci_hi: float
    baseline: float
    bound: float
    seed: int
    params: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": CSV_SCHEMA_VERSION,
            "game": self.game,
            "scheme": self.scheme,
            "adversary": self.adversary,
            "trials": self.trials,
            "wins": self.wins,
            "estimate": self.estimate,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "baseline": self.baseline,
            "bound": self.bound,
            "seed": self.seed,
            "params": self.params,
        }

    def csv_row(self) -> list:
        return [
            CSV_SCHEMA_VERSION,
            self.game,
            self.scheme,
            self.adversary,
            self.trials,
            self.wins,
            repr(self.estimate),
            repr(self.ci_lo),
            repr(self.ci_hi),
            repr(self.baseline),
            repr(self.bound),
            self.seed,
        ]


def append_csv(report: GameReport, path: str | Path) -> None:
    """Append one result row, writing the header on first use."""
    path = Path(path)
    fresh = not path.exists()
    with path.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(CSV_HEADER)
        writer.writerow(report.csv_row())


# ---------------------------------------------------------------------------
# Harnesses
# ---------------------------------------------------------------------------


def _measure_bit(state, projector: np.ndarray, qubits, rng):
    """Two-outcome measurement of an embedded projector; outcome 1 means
    the projector fired."""
    lifted = embed_operator(projector, qubits, state.qubits)
    eye = np.eye(1 << state.qubits)
    return measure_projective(state, [eye - lifted, lifted], rng)


def run_experiment_free(
    spec: GameSpec,
    pirate,
    charlie: MeasurementStrategy,
    trials: int,
    seed: int,
    bob_strategy: MeasurementStrategy | None = None,
) -> GameReport:
    """Monte Carlo run of the pirating game.

    Per trial: sample a point, protect it, let the pirate split, sample
    the challenge pair, let Bob evaluate honestly on his register (or,
    when ``spec.honest_bob`` is off, measure ``bob_strategy``), let
    Charlie measure, and score a win iff both answers match the point
    function.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if spec.honest_bob and bob_strategy is not None:
        raise ValueError("bob_strategy needs a GameSpec with honest_bob=False")
    if not spec.honest_bob and bob_strategy is None:
        raise ValueError("malicious Bob needs a bob_strategy")
    scheme = spec.scheme
    programs: dict[int, PureState] = {}
    bob_projs: dict[int, np.ndarray] = {}
    wins = 0
    for i in range(trials):
        rng = spawn_rng(seed, i)
        p = spec.circuit_dist.sample(rng)
        psi = programs.get(p)
        if psi is None:
            psi = protect(scheme, p).state
            programs[p] = psi
        joint, bob_q, charlie_q, side = pirate.split(psi, p, rng)
        x1, x2 = spec.bob_family(p).sample(rng), spec.charlie_family(p).sample(rng)
        if spec.honest_bob:
            if len(bob_q) != scheme.total_qubits:
                raise ValueError("honest Bob needs a program-shaped register")
            proj = bob_projs.get(x1)
            if proj is None:
                proj = accept_projector(scheme, x1)
                bob_projs[x1] = proj
            b1, post = _measure_bit(joint, proj, bob_q, rng)
        else:
            b1, post = _measure_bit(joint, bob_strategy.projector(x1), bob_q, rng)
        b2 = charlie.answer(post, charlie_q, x2, side, rng)
        pf = PointFunction(p, scheme.key_bits)
        if b1 == pf(x1) and b2 == pf(x2):
            wins += 1
    estimate = wins / trials
    lo, hi = wilson_interval(wins, trials)
    baseline = float(p_marg(spec.circuit_dist, spec.charlie_family))
    return GameReport(
        game="free",
        scheme=scheme.scheme_id,
        adversary=getattr(pirate, "name", "pirate") + "/" + charlie.name,
        trials=trials,
        wins=wins,
        estimate=estimate,
        ci_lo=lo,
        ci_hi=hi,
        baseline=baseline,
        bound=cp_security_bound(baseline, scheme.epsilon),
        seed=seed,
        params={"m": scheme.message_qubits, "t": scheme.trap_qubits, "k": scheme.key_bits},
    )


def run_experiment_ssl(
    ssl_scheme: SslScheme,
    circuit_dist: ChallengeDistribution,
    challenge_family: Family,
    adversary,
    strategy: MeasurementStrategy,
    trials: int,
    seed: int,
) -> GameReport:
    """Monte Carlo run of the leasing game.

    Per trial: lease a point program, let the adversary split into a
    returned register and a kept one, verify the returned register
    (failed verification is a loss), then challenge the adversary, who
    measures his kept register.  A win needs verification to pass and
    the answer to be correct.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    scheme = ssl_scheme.base
    programs: dict[int, PureState] = {}
    verify_projs: dict[int, np.ndarray] = {}
    wins = 0
    for i in range(trials):
        rng = spawn_rng(seed, i)
        p = circuit_dist.sample(rng)
        psi = programs.get(p)
        if psi is None:
            psi = protect(scheme, p).state
            programs[p] = psi
        joint, returned_q, kept_q, side = adversary.split(psi, p, rng)
        if len(returned_q) != scheme.total_qubits:
            raise ValueError("the returned register must be program-shaped")
        pf = PointFunction(p, scheme.key_bits)
        xv = verify_distribution(ssl_scheme, pf).sample(rng)
        proj = verify_projs.get(xv)
        if proj is None:
            proj = accept_projector(scheme, xv)
            verify_projs[xv] = proj
        outcome, post = _measure_bit(joint, proj, returned_q, rng)
        if outcome != pf(xv):  # verification rejected: adversary loses
            continue
        x = challenge_family(p).sample(rng)
        b = strategy.answer(post, kept_q, x, side, rng)
        if b == pf(x):
            wins += 1
    estimate = wins / trials
    lo, hi = wilson_interval(wins, trials)
    baseline = float(p_ind(circuit_dist, challenge_family))
    return GameReport(
        game="ssl",
        scheme=scheme.scheme_id,
        adversary=getattr(adversary, "name", "adversary") + "/" + strategy.name,
        trials=trials,
        wins=wins,
        estimate=estimate,
        ci_lo=lo,
        ci_hi=hi,
        baseline=baseline,
        bound=ssl_security_bound(baseline, scheme.epsilon),
        seed=seed,
        params={
            "m": scheme.message_qubits,
            "t": scheme.trap_qubits,
            "k": scheme.key_bits,
            "verify_r": ssl_scheme.verify_r,
        },
    )


# ---------------------------------------------------------------------------
# The zoo
# ---------------------------------------------------------------------------


def trivial_forward(scheme: QasScheme) -> tuple[PirateMap, MeasurementStrategy]:
    """Program straight to Bob; Charlie gets a fresh qubit and always
    answers 0."""
    n = scheme.total_qubits
    pirate = PirateMap(
        bob_qubits=tuple(range(n)),
        charlie_qubits=(n,),
        unitary=np.eye(1 << (n + 1)),
        ancilla_qubits=1,
        name="trivial-forward",
    )
    return pirate, FixedAnswer(0)


def _mix_and_keep_channel(scheme: QasScheme) -> KrausChannel:
    """rho -> (I/d) (x) rho: the first register is scrambled to maximally
    mixed, the second keeps the program."""
    d = scheme.total_dim
    ops = [np.kron(np.eye(d)[:, [i]], np.eye(d)) / np.sqrt(d) for i in range(d)]
    return KrausChannel(tuple(ops))


def give_to_charlie(scheme: QasScheme) -> tuple[PirateMap, MeasurementStrategy]:
    """Charlie gets the intact program and evaluates honestly; Bob gets a
    maximally mixed dummy."""
    n = scheme.total_qubits
    pirate = PirateMap(
        bob_qubits=tuple(range(n)),
        charlie_qubits=tuple(range(n, 2 * n)),
        channel=_mix_and_keep_channel(scheme),
        name="give-to-charlie",
    )
    return pirate, HonestEvalStrategy(scheme)


def keysearch_adversary(
    scheme: QasScheme,
    budget_size: int | None = None,
    budget: Sequence[int] | None = None,
    include_point: bool = True,
) -> tuple[KeysearchPirate, MeasurementStrategy]:
    pirate = KeysearchPirate(scheme, budget_size, budget, include_point)
    if budget is not None and len(budget) == 0:
        return pirate, FixedAnswer(0)
    return pirate, PointGuessStrategy()


def cheat_double_program(scheme: QasScheme) -> tuple[object, MeasurementStrategy]:
    """Harness-validation fixture only: hands BOTH parties an honest
    program, which no physical pirate can do.  With an identity pirate
    this makes the win rate the product of two exact correctness values,
    validating the plumbing independently of any security claim."""

    class _Cloner:
        name = "cheat-double-program"

        def __init__(self, scheme: QasScheme):
            self.scheme = scheme

        def split(self, program_state: PureState, point: int, rng):
            n = self.scheme.total_qubits
            joint = tensor(program_state, protect(self.scheme, point).state)
            return joint, tuple(range(n)), tuple(range(n, 2 * n)), None

    return _Cloner(scheme), HonestEvalStrategy(scheme)


def honest_return(ssl_scheme: SslScheme) -> tuple[PirateMap, MeasurementStrategy]:
    """Return the program untouched, keep a fresh qubit, always answer 0."""
    n = ssl_scheme.base.total_qubits
    adv = PirateMap(
        bob_qubits=tuple(range(n)),
        charlie_qubits=(n,),
        unitary=np.eye(1 << (n + 1)),
        ancilla_qubits=1,
        name="honest-return",
    )
    return adv, FixedAnswer(0)


def keep_program(ssl_scheme: SslScheme) -> tuple[PirateMap, MeasurementStrategy]:
    """Return a maximally mixed dummy, keep the program, answer by honest
    evaluation on the kept copy."""
    scheme = ssl_scheme.base
    n = scheme.total_qubits
    adv = PirateMap(
        bob_qubits=tuple(range(n)),
        charlie_qubits=tuple(range(n, 2 * n)),
        channel=_mix_and_keep_channel(scheme),
        name="keep-program",
    )
    return adv, HonestEvalStrategy(scheme)


# ---------------------------------------------------------------------------
# Analytic oracles (independent closed forms for the simple adversaries)
# ---------------------------------------------------------------------------


def mean_correctness(
    scheme: QasScheme, circuit_dist: ChallengeDistribution, family: Family
) -> float:
    """E over the circuit distribution of the exact per-point correctness."""
    return float(
        sum(
            circuit_dist.prob(p) * correctness_exact(scheme, p, family(p))
            for p in range(circuit_dist.size)
        )
    )


def _mixed_state_honest_correct(scheme: QasScheme, dist: ChallengeDistribution, p: int) -> float:
    """Honest evaluation on a maximally mixed register accepts any key
    with probability exactly 2^-t, so correctness depends only on how
    often the challenge hits the point."""
    hit = dist.prob(p)
    acc = 2.0 ** (-scheme.trap_qubits)
    return hit * acc + (1.0 - hit) * (1.0 - acc)


def oracle_trivial_forward(spec: GameSpec) -> float:
    """Bob correct (exact correctness) times Charlie's fixed 0 being
    right (challenge misses the point); independent challenges make the
    product exact."""
    scheme = spec.scheme
    total = 0.0
    for p in range(spec.circuit_dist.size):
        bob = correctness_exact(scheme, p, spec.bob_family(p))
        charlie = 1.0 - spec.charlie_family(p).prob(p)
        total += spec.circuit_dist.prob(p) * bob * charlie
    return total


def oracle_give_to_charlie(spec: GameSpec) -> float:
    """Bob evaluates a maximally mixed register; Charlie evaluates the
    intact program honestly."""
    scheme = spec.scheme
    total = 0.0
    for p in range(spec.circuit_dist.size):
        bob = _mixed_state_honest_correct(scheme, spec.bob_family(p), p)
        charlie = correctness_exact(scheme, p, spec.charlie_family(p))
        total += spec.circuit_dist.prob(p) * bob * charlie
    return total


def oracle_cheat_double_program(spec: GameSpec) -> float:
    """Both parties honest on intact programs: product of two exact
    correctness values."""
    scheme = spec.scheme
    total = 0.0
    for p in range(spec.circuit_dist.size):
        total += (
            spec.circuit_dist.prob(p)
            * correctness_exact(scheme, p, spec.bob_family(p))
            * correctness_exact(scheme, p, spec.charlie_family(p))
        )
    return total


def oracle_honest_return(
    ssl_scheme: SslScheme, circuit_dist: ChallengeDistribution, challenge_family: Family
) -> float:
    """Verification accepts the intact program at its exact correctness
    under the verification distribution; the fixed 0 answer is right when
    the challenge misses the point."""
    scheme = ssl_scheme.base
    total = 0.0
    for p in range(circuit_dist.size):
        vd = verify_distribution(ssl_scheme, PointFunction(p, scheme.key_bits))
        v = correctness_exact(scheme, p, vd)
        total += circuit_dist.prob(p) * v * (1.0 - challenge_family(p).prob(p))
    return total


def oracle_keep_program(
    ssl_scheme: SslScheme, circuit_dist: ChallengeDistribution, challenge_family: Family
) -> float:
    """Verification sees a maximally mixed register; the kept program
    answers at its exact correctness."""
    scheme = ssl_scheme.base
    total = 0.0
    for p in range(circuit_dist.size):
        vd = verify_distribution(ssl_scheme, PointFunction(p, scheme.key_bits))
        v = _mixed_state_honest_correct(scheme, vd, p)
        total += circuit_dist.prob(p) * v * correctness_exact(
            scheme, p, challenge_family(p)
        )
    return total
