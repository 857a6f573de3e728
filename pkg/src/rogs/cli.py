"""``rogs`` command line: group, allocate, estimate, bench, toy-model.

Exit status is 0 on success, 1 when a computation fails, and 2 for bad
usage or unreadable input.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from pathlib import Path

from .allocation import AllocationError, BoundKind
from .bench import METHODS, ExperimentSpec, MethodOptions, Problem, rogs_allocation, run_bench, run_method, toy_model
from .estimation import MOM_RULES, MoMConfig
from .grouping import maxmin_grouping
from .pauli import HamiltonianParseError, load_hamiltonian, serialize_hamiltonian

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

# config key -> argparse dest
CONFIG_KEYS = {
    "hamiltonian": "hamiltonian",
    "shots": "shots",
    "seed": "seed",
    "method": "method",
    "repeats": "repeats",
    "format": "format",
    "bound.kind": "bound",
    "bound.epsilon": "epsilon",
    "bound.m0": "m0",
    "solver.tol": "tol",
    "solver.max_iters": "max_iters",
    "mom.rule": "mom_rule",
    "mom.k": "mom_k",
    "bench.workers": "workers",
    "adaptive.rounds": "rounds",
}


class UsageError(Exception):
    pass


def _list_or_scalar(value: str):
    parts = [p.strip() for p in value.split(",") if p.strip()]
    return parts if len(parts) > 1 else value.strip()


def read_config(path) -> dict:
    """Flat ``key = value`` file; a section header is optional and ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string("[rogs]\n" + text if not text.lstrip().startswith("[") else text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    out = {}
    for section in parser.sections():
        for key, value in parser[section].items():
            if key not in CONFIG_KEYS:
                raise UsageError(f"unknown config key {key!r}")
            out[CONFIG_KEYS[key]] = _list_or_scalar(value)
    return out


def _common(p: argparse.ArgumentParser, stochastic: bool = False, bound: bool = False) -> None:
    p.add_argument("--hamiltonian", metavar="PATH", action="append", help="Hamiltonian text file")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--config", metavar="PATH", help="flat key = value defaults; flags win")
    if bound or stochastic:
        p.add_argument("--shots", metavar="M", type=int, action="append")
        p.add_argument("--bound", choices=[k.value for k in BoundKind])
        p.add_argument("--epsilon", type=float)
        p.add_argument("--m0", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iters", dest="max_iters", type=int)
    if stochastic:
        p.add_argument("--seed", metavar="U64", type=int)
        p.add_argument("--method", action="append", choices=METHODS)
        p.add_argument("--mom-rule", dest="mom_rule", choices=MOM_RULES)
        p.add_argument("--mom-k", dest="mom_k", type=int)
        p.add_argument("--rounds", type=int, help="rounds for rogs_adaptive")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rogs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("group", help="Max-Min grouping of a Hamiltonian"))
    _common(sub.add_parser("allocate", help="optimal shot split across groups"), bound=True)
    _common(sub.add_parser("estimate", help="one simulated estimate of the ground energy"), stochastic=True)
    b = sub.add_parser("bench", help="RMSE table over repeats, methods and budgets")
    _common(b, stochastic=True)
    b.add_argument("--repeats", type=int)
    b.add_argument("--workers", type=int)
    b.add_argument("--json-out", metavar="PATH", help="also write per-repeat estimates as JSON")
    b.add_argument("--timing", action="store_true", help="fill wall_ms (makes output non-reproducible)")
    t = sub.add_parser("toy-model", help="write the n-qubit toy Hamiltonian")
    t.add_argument("n", type=int)
    t.add_argument("--out", metavar="PATH")
    return parser


def _settings(args: argparse.Namespace) -> dict:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    merged = dict(cfg)
    for key, value in vars(args).items():
        if value is not None and value is not False:
            merged[key] = value
    for key in ("hamiltonian", "shots", "method"):
        if key in merged and not isinstance(merged[key], list):
            merged[key] = [merged[key]]
    return merged


def _get(s: dict, key: str, cast, default=None):
    if key not in s:
        return default
    try:
        return cast(s[key])
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key}: {s[key]!r}") from None


def _need(s: dict, key: str, flag: str):
    if not s.get(key):
        raise UsageError(f"{flag} is required")
    return s[key]


def _one_hamiltonian(s: dict):
    paths = _need(s, "hamiltonian", "--hamiltonian")
    if len(paths) != 1:
        raise UsageError("this command takes exactly one --hamiltonian")
    return paths[0]


def _options(s: dict) -> MethodOptions:
    mom = None
    if "mom_rule" in s or "mom_k" in s:
        mom = MoMConfig(
            rule=_get(s, "mom_rule", str, "variance_ratio"),
            epsilon=_get(s, "epsilon", float),
            k=_get(s, "mom_k", int, 1),
        )
    m0 = _get(s, "m0", float, 1.0)
    eps = _get(s, "epsilon", float)
    if m0 <= 0 or (eps is not None and eps <= 0):
        raise UsageError("--m0 and --epsilon must be positive")
    return MethodOptions(
        bound=BoundKind(_get(s, "bound", str, "per-op")),
        epsilon=eps,
        m0=m0,
        adaptive_rounds=_get(s, "rounds", int, 3),
        tol=_get(s, "tol", float, 1e-8),
        max_iters=_get(s, "max_iters", int, 100_000),
        mom=mom,
    )


def _shots(s: dict) -> list[int]:
    shots = [_get({"shots": m}, "shots", int) for m in _need(s, "shots", "--shots")]
    if any(m < 1 for m in shots):
        raise UsageError("--shots must be positive")
    return shots


def _seed(s: dict) -> int:
    seed = _get(s, "seed", int)
    if seed is None:
        raise UsageError("--seed is required for stochastic commands")
    if not 0 <= seed < 2**64:
        raise UsageError("--seed must fit in an unsigned 64-bit integer")
    return seed


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_group(s: dict) -> str:
    h = load_hamiltonian(_one_hamiltonian(s))
    groups = maxmin_grouping(h)
    if s.get("format") == "csv":
        return _csv(
            ("group", "basis", "size", "members"),
            [(a, g.basis.label, len(g.members), " ".join(map(str, g.members))) for a, g in enumerate(groups)],
        )
    out = groups.to_json()
    out["sizes"] = [len(g.members) for g in groups]
    return _json(out)


def cmd_allocate(s: dict) -> str:
    path = _one_hamiltonian(s)
    M = _shots(s)[0]
    h = load_hamiltonian(path)
    groups = maxmin_grouping(h)
    alloc = rogs_allocation(h, groups, M, _options(s))
    if s.get("format") == "csv":
        return _csv(
            ("group", "basis", "weight", "shots"),
            [(a, g.basis.label, repr(float(alloc.weights[a])), int(alloc.shots[a])) for a, g in enumerate(groups)],
        )
    out = alloc.to_json()
    out["n_circuit"] = alloc.n_circuit
    out["n_groups"] = len(groups)
    out["bases"] = [b.label for b in groups.bases]
    return _json(out)


def cmd_estimate(s: dict) -> str:
    path = _one_hamiltonian(s)
    M = _shots(s)[0]
    seed = _seed(s)
    methods = s.get("method") or ["rogs_naive"]
    if len(methods) != 1:
        raise UsageError("estimate takes exactly one --method")
    prob = Problem.load(path)
    res = run_method(methods[0], prob, M, seed, _options(s))
    row = {
        "method": methods[0],
        "hamiltonian": prob.name,
        "M": M,
        "seed": seed,
        "estimate": res.estimate,
        "ground_energy": prob.energy,
        "abs_error": abs(res.estimate - prob.energy),
        "n_circuit": res.n_circuit,
        "n_groups": len(prob.groups),
        "shots": res.shots,
    }
    if s.get("format") == "csv":
        keys = [k for k in row if k != "shots"]
        return _csv(keys, [[repr(row[k]) if isinstance(row[k], float) else row[k] for k in keys]])
    return _json(row)


def cmd_bench(s: dict) -> tuple[str, dict]:
    spec = ExperimentSpec(
        hamiltonians=tuple(_need(s, "hamiltonian", "--hamiltonian")),
        budgets=tuple(_shots(s)),
        repeats=_get(s, "repeats", int, 10),
        seed=_seed(s),
        methods=tuple(s.get("method") or ("rogs_naive", "even_distribution")),
        options=_options(s),
        workers=_get(s, "workers", int, 1),
        timing=bool(s.get("timing")),
    )
    result = run_bench(spec)
    text = _json(result.to_json()) if s.get("format") == "json" else result.to_csv()
    return text, result.to_json()


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "toy-model":
            try:
                h = toy_model(args.n)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            _emit(serialize_hamiltonian(h), args.out)
            return EXIT_OK
        s = _settings(args)
        if args.command == "group":
            _emit(cmd_group(s), s.get("out"))
        elif args.command == "allocate":
            _emit(cmd_allocate(s), s.get("out"))
        elif args.command == "estimate":
            _emit(cmd_estimate(s), s.get("out"))
        else:
            text, data = cmd_bench(s)
            _emit(text, s.get("out"))
            if s.get("json_out"):
                Path(s["json_out"]).write_text(_json(data), encoding="utf-8")
    except (UsageError, HamiltonianParseError, OSError) as exc:
        print(f"rogs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AllocationError as exc:
        print(f"rogs: allocation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"rogs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
