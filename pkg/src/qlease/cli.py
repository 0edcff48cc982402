"""Command-line harness.

Subcommands configure schemes and games, run them, and emit both a human
table on stdout and machine-readable artifacts on request (JSON via
--out, CSV appends via --csv).  Exit codes: 0 success, 1 a criterion or
invariant failed, 2 usage or configuration error.

All randomness flows from --seed; reports carry no timestamps, so two
runs with the same arguments produce byte-identical files.  Options may
also come from a JSON file through --config; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import copyprotect as cp
from . import designs, games, qas, suite
from .leasing import SslScheme
from .qmath import QubitCapError, random_density, spawn_rng, state_distance

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class ConfigError(Exception):
    pass


def _parse_scheme(text: str) -> tuple[int, int, int]:
    try:
        m, t, k = (int(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--scheme expects m,t,k (got {text!r})") from exc
    return m, t, k


def _build_scheme(text: str) -> qas.QasScheme:
    m, t, k = _parse_scheme(text)
    if not (1 <= m and 1 <= t):
        raise ConfigError("scheme needs m >= 1 and t >= 1")
    if m + t > 6:
        raise ConfigError("m + t above 6 qubits is outside dense design range")
    if not 1 <= k <= 20:
        raise ConfigError("key bits must lie in 1..20 for exact enumeration")
    try:
        return qas.build_scheme(m, t, k)
    except (QubitCapError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill unset options from the JSON file given by --config."""
    path = getattr(args, "config", None)
    if not path:
        return
    try:
        loaded = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError("config file must hold a JSON object")
    sub = args._command_parser
    for key, value in loaded.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr.startswith("_"):
            raise ConfigError(f"unknown config key {key!r}")
        # flags given on the command line override the file
        if sub.get_default(attr) == getattr(args, attr):
            setattr(args, attr, value)


def _emit(args, payload: dict | list) -> None:
    text = json.dumps(payload, indent=2)
    if getattr(args, "json", False):
        print(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# design-check
# ---------------------------------------------------------------------------


def cmd_design_check(args) -> int:
    q = args.qubits
    if q <= 2:
        design = designs.clifford_enumerate(q)
        fp = designs.frame_potential(design, samples=args.pairs, rng=spawn_rng(args.seed, 0) if args.pairs else None)
    else:
        design = designs.clifford_design(q)
        if not args.pairs:
            raise ConfigError("qubits > 2 needs --pairs for a sampled estimate")
        fp = designs.frame_potential(design, samples=args.pairs, rng=spawn_rng(args.seed, 0))
    print(f"design        {design.design_id}")
    print(f"cardinality   {design.cardinality}")
    print(f"frame_potential {fp:.6f}  (exact 2-design value: 2)")
    _emit(
        args,
        {
            "design_id": design.design_id,
            "qubits": q,
            "cardinality": design.cardinality,
            "frame_potential": fp,
            "pairs": args.pairs,
            "seed": args.seed,
        },
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# qas-verify
# ---------------------------------------------------------------------------


def cmd_qas_verify(args) -> int:
    scheme = _build_scheme(args.scheme)
    rng = spawn_rng(args.seed, 1)
    checks: list[tuple[str, float, float, bool]] = []

    # correctness: verify(auth(.)) round trips; the corruption switch
    # desynchronizes the verification key to prove the check has teeth
    shift = 1 if args.inject_keymap_corruption else 0
    worst = 0.0
    for _ in range(50):
        key = int(rng.integers(1 << scheme.key_bits))
        state = random_density(scheme.message_qubits, rng)
        vkey = (key + shift) % (1 << scheme.key_bits)
        out = qas.verify(scheme, vkey, qas.auth(scheme, key, state))
        worst = max(worst, abs(out.accept_probability - 1.0))
        worst = max(worst, state_distance(out.message_state, state))
    checks.append(("correctness", worst, 1e-9, worst < 1e-9))

    # wrong-key averages
    state = random_density(scheme.total_qubits, rng)
    expected = 2.0 ** (-scheme.trap_qubits)
    if scheme.total_qubits <= 2:
        avg = qas.avg_wrong_key_accept(scheme, state, mode="design")
        checks.append(("wrong-key-design-avg", avg, expected, abs(avg - expected) < 1e-9))
        key_avg = qas.avg_wrong_key_accept(scheme, state, mode="keys")
    else:
        key_avg = qas.avg_wrong_key_accept(scheme, state, mode=500, rng=rng)
    checks.append(
        ("wrong-key-2eps-cap", key_avg, 2 * scheme.epsilon, key_avg <= 2 * scheme.epsilon)
    )

    # key-map consistency: key k selects design index k mod |design|
    key = int(rng.integers(1 << scheme.key_bits))
    consistent = scheme.key_index(key) == key % scheme.design.cardinality
    checks.append(("key-map-consistency", float(consistent), 1.0, consistent))

    # determinism of sampled verification
    probe = qas.auth(scheme, 0, random_density(scheme.message_qubits, rng))
    a = qas.verify(scheme, 1, probe, spawn_rng(args.seed, 2))
    b = qas.verify(scheme, 1, probe, spawn_rng(args.seed, 2))
    det = a.accepted == b.accepted and a.accept_probability == b.accept_probability
    checks.append(("verify-determinism", float(det), 1.0, det))

    all_ok = all(ok for _, _, _, ok in checks)
    print(f"scheme {scheme.scheme_id}  epsilon={scheme.epsilon:.4f}")
    for name, measured, bound, ok in checks:
        print(f"  {'PASS' if ok else 'FAIL'}  {name:24s} measured={measured:.6g} bound={bound:.6g}")
    _emit(
        args,
        {
            "scheme": qas.scheme_params(scheme),
            "checks": [
                {"name": n, "measured": m, "bound": b, "pass": ok}
                for n, m, b, ok in checks
            ],
            "seed": args.seed,
        },
    )
    return EXIT_OK if all_ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# cp / ssl games
# ---------------------------------------------------------------------------

CP_ADVERSARIES = ("trivial-forward", "give-to-charlie", "keysearch")
SSL_ADVERSARIES = ("honest-return", "keep-program")


def _cp_adversary(name: str, scheme: qas.QasScheme, args):
    if name == "trivial-forward":
        return games.trivial_forward(scheme)
    if name == "give-to-charlie":
        return games.give_to_charlie(scheme)
    if name == "keysearch":
        return games.keysearch_adversary(scheme, budget_size=args.budget)
    raise ConfigError(f"unknown cp adversary {name!r}")


def _print_report(rep: games.GameReport) -> None:
    print(f"game      {rep.game}   adversary {rep.adversary}")
    print(f"scheme    {rep.scheme}")
    print(f"trials    {rep.trials}   wins {rep.wins}")
    print(f"estimate  {rep.estimate:.4f}   wilson99 [{rep.ci_lo:.4f}, {rep.ci_hi:.4f}]")
    print(f"baseline  {rep.baseline:.4f}   theorem bound {rep.bound:.4f}")


def cmd_cp(args) -> int:
    scheme = _build_scheme(args.scheme)
    if not 0.5 <= args.r <= 1.0:
        raise ConfigError("--r (Bob's point mass) must lie in [0.5, 1]")
    spec = games.default_cp_spec(scheme, bob_r=args.r)
    pirate, strategy = _cp_adversary(args.adversary, scheme, args)
    rep = games.run_experiment_free(spec, pirate, strategy, args.trials, args.seed)
    _print_report(rep)
    _emit(args, rep.to_json_dict())
    if args.csv:
        games.append_csv(rep, args.csv)
    return EXIT_OK


def cmd_ssl(args) -> int:
    scheme = _build_scheme(args.scheme)
    if not 0.0 <= args.r <= 1.0:
        raise ConfigError("--r (verification point mass) must lie in [0, 1]")
    ssl_scheme = SslScheme(scheme, verify_r=args.r)
    circuit = cp.uniform_points(scheme.key_bits)
    challenge = lambda p: cp.dhalf(p, scheme.key_bits)
    if args.adversary == "honest-return":
        adv, strategy = games.honest_return(ssl_scheme)
    elif args.adversary == "keep-program":
        adv, strategy = games.keep_program(ssl_scheme)
    else:
        raise ConfigError(f"unknown ssl adversary {args.adversary!r}")
    rep = games.run_experiment_ssl(
        ssl_scheme, circuit, challenge, adv, strategy, args.trials, args.seed
    )
    _print_report(rep)
    _emit(args, rep.to_json_dict())
    if args.csv:
        games.append_csv(rep, args.csv)
    return EXIT_OK


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def cmd_suite(args) -> int:
    results = suite.run_suite(seed=args.seed, trials=args.trials)
    width = max(len(r.name) for r in results)
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag}  {r.name:{width}s}  measured={r.measured:.6g}  bound={r.bound:.6g}  {r.note}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        print("failed:", ", ".join(failed))
    _emit(args, [r.to_json_dict() for r in results])
    return EXIT_OK if not failed else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlease",
        description="Desk-scale copy-protection and leasing experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, scheme_default="1,1,14") -> None:
        p.add_argument("--seed", type=int, default=0, help="master seed (all randomness)")
        p.add_argument("--out", type=str, default=None, help="write the JSON report here")
        p.add_argument("--json", action="store_true", help="print the JSON report to stdout")
        p.add_argument("--config", type=str, default=None, help="JSON file with option defaults")
        if scheme_default is not None:
            p.add_argument("--scheme", type=str, default=scheme_default, help="m,t,k")
        p.set_defaults(_command_parser=p)

    p = sub.add_parser("design-check", help="cardinality and frame potential of the Clifford design")
    p.add_argument("--qubits", type=int, required=True, choices=range(1, 7))
    p.add_argument("--pairs", type=int, default=None, help="sample this many pairs instead of exhausting")
    common(p, scheme_default=None)
    p.set_defaults(func=cmd_design_check)

    p = sub.add_parser("qas-verify", help="authentication invariants for one scheme")
    common(p)
    p.add_argument(
        "--inject-keymap-corruption",
        action="store_true",
        help="testing aid: desynchronize the verification key so the correctness check fails",
    )
    p.set_defaults(func=cmd_qas_verify)

    p = sub.add_parser("cp", help="run the pirating game")
    common(p, scheme_default="1,1,6")
    p.add_argument("--adversary", type=str, default="trivial-forward", choices=CP_ADVERSARIES)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--r", type=float, default=0.5, help="mass of Bob's challenge on the point")
    p.add_argument("--budget", type=int, default=4, help="keysearch budget size")
    p.add_argument("--csv", type=str, default=None, help="append a result row to this CSV")
    p.set_defaults(func=cmd_cp)

    p = sub.add_parser("ssl", help="run the leasing game")
    common(p, scheme_default="1,1,6")
    p.add_argument("--adversary", type=str, default="honest-return", choices=SSL_ADVERSARIES)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--r", type=float, default=1.0, help="mass of the verification challenge on the point")
    p.add_argument("--csv", type=str, default=None, help="append a result row to this CSV")
    p.set_defaults(func=cmd_ssl)

    p = sub.add_parser("suite", help="run the acceptance battery")
    common(p, scheme_default=None)
    p.add_argument("--trials", type=int, default=10000, help="Monte Carlo trials per game")
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config(args, parser)
        if getattr(args, "trials", None) is not None and args.trials < 1:
            raise ConfigError("--trials must be positive")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
