"""Command-line front end: ``qmoments <subcommand> --seed N [options]``.

Every subcommand writes a CSV table plus a JSON sidecar (config, seed,
package versions) into ``--out``. Exit codes: 0 ok, 2 configuration or
capacity error, 3 copy-budget guard, 4 numerical failure; failures print one
``error code=... reason=...`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import BudgetError, CapacityError, NumericalError, QMomentsError
from .simcore.states import MixedState

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERICAL = 0, 2, 3, 4
DEFAULT_MAX_COPIES = 10**10
FLOAT_FMT = "%.10g"


class ConfigError(QMomentsError, ValueError):
    """Malformed command-line configuration."""


# -- parsing helpers -----------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated number list, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _preset_from_mapping(spec: dict) -> MixedState:
    if "matrix" in spec:
        mat = np.array([[complex(re, im) for re, im in row] for row in spec["matrix"]])
        state = MixedState.from_matrix(mat)
        if "m" in spec and int(spec["m"]) != state.num_qubits:
            raise ConfigError(f"state file says m={spec['m']} but matrix has {state.num_qubits} qubits")
        return state
    name = spec.get("preset")
    args = {
        "pure-zero": lambda: str(spec["m"]),
        "max-mixed": lambda: str(spec["m"]),
        "gibbs-z": lambda: str(spec["beta"]),
        "heisenberg-gibbs": lambda: ",".join(
            str(spec[key]) for key in ("n", "beta", "J", "h") if key in spec
        ),
        "dirichlet": lambda: f"{spec['rank']},{spec['seed']}",
    }
    if name not in args:
        raise ConfigError(f"unknown preset {name!r} in state file")
    try:
        return parse_state_preset(f"{name}:{args[name]()}")
    except KeyError as exc:
        raise ConfigError(f"state file preset {name!r} is missing field {exc}") from exc


def parse_state_preset(text: str) -> MixedState:
    """Build a state from ``name:args`` (see ``--state`` help for the list)."""
    from .apps.physics import HeisenbergSpec, gibbs_state, heisenberg_hamiltonian
    from .apps.renyi import gibbs_z_state

    name, _, arg = text.partition(":")
    name = name.strip()
    try:
        if name == "pure-zero":
            m = int(arg)
            amps = np.zeros(2**m)
            amps[0] = 1.0
            return MixedState.pure(amps)
        if name == "max-mixed":
            return MixedState.maximally_mixed(int(arg))
        if name == "gibbs-z":
            return gibbs_z_state(float(arg))
        if name == "heisenberg-gibbs":
            vals = _floats(arg)
            if len(vals) not in (2, 4):
                raise ConfigError("heisenberg-gibbs expects n,beta or n,beta,J,h")
            n, beta = int(vals[0]), vals[1]
            J, h = (vals[2], vals[3]) if len(vals) == 4 else (1.0, 1.0)
            return gibbs_state(heisenberg_hamiltonian(HeisenbergSpec(n, J, h)), beta)
        if name == "dirichlet":
            rank, seed = _ints(arg)
            if rank < 1:
                raise ConfigError("dirichlet rank must be >= 1")
            m = max(1, math.ceil(math.log2(rank)))
            lam = np.zeros(2**m)
            lam[:rank] = np.random.default_rng(seed).dirichlet(np.ones(rank))
            return MixedState.from_spectrum(lam)
        if name == "file":
            spec = json.loads(Path(arg).read_text())
            return _preset_from_mapping(spec)
    except ConfigError:
        raise
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed state spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown state preset {name!r}")


def parse_observable(text: str):
    """``heisenberg:n[,J,h]``, ``terms:1 XX;-0.5 ZI`` or a path to a term file."""
    from .apps.physics import HeisenbergSpec, heisenberg_hamiltonian
    from .observables import PauliObservable

    try:
        if text.startswith("heisenberg:"):
            vals = _floats(text.split(":", 1)[1])
            n = int(vals[0])
            J, h = (vals[1], vals[2]) if len(vals) == 3 else (1.0, 1.0)
            return heisenberg_hamiltonian(HeisenbergSpec(n, J, h))
        if text.startswith("terms:"):
            return PauliObservable.from_text(text.split(":", 1)[1].replace(";", "\n"))
        return PauliObservable.from_text(Path(text).read_text())
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(f"malformed observable {text!r}: {exc}") from exc


# -- output --------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else FLOAT_FMT % value
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _versions() -> dict:
    return {"qmoments": __version__, "numpy": np.__version__, "python": platform.python_version()}


def write_sidecar(path: Path, args: argparse.Namespace, extra: dict | None = None) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads", "out")}
    doc = {"command": args.command, "seed": args.seed, "config": config, "versions": _versions()}
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def guard_budget(copies: int, args: argparse.Namespace) -> None:
    print(f"copies={copies}", file=sys.stderr)
    if copies > args.max_copies:
        raise BudgetError(f"experiment needs {copies} prepared copies, guard is {args.max_copies}")


# -- subcommands ---------------------------------------------------------------


def cmd_moments(args) -> None:
    from .moments import MomentPlan, estimate_moments, required_shots

    rho = parse_state_preset(args.state)
    if args.shots is None and args.eps is None:
        raise ConfigError("give --eps (automatic shots) or --shots")
    shots = args.shots if args.shots is not None else required_shots(args.k, args.eps)
    guard_budget(shots * args.k, args)
    est = estimate_moments(rho, MomentPlan(args.k, shots, args.seed, args.eps), backend=args.backend, threads=args.threads)
    rows = [(j, est.order(j), float(est.stderr[j - 2]), float(est.exact[j - 2])) for j in range(2, args.k + 1)]
    write_csv(args.out / "moments.csv", ["order", "estimate", "stderr", "exact"], rows)
    write_sidecar(args.out / "moments.json", args, {"result": est.to_dict()})


def cmd_qsf(args) -> None:
    from .qsf import PolynomialFunctional, estimate_functional

    rho = parse_state_preset(args.state)
    f = PolynomialFunctional(tuple(_floats(args.coeffs)))
    guard_budget(args.shots * f.k, args)
    est = estimate_functional(rho, f, args.shots, args.seed, threads=args.threads)
    rows = [(est.value, est.stderr, est.exact, f.l1_norm, f.majority_negative, args.shots)]
    write_csv(args.out / "qsf.csv", ["estimate", "stderr", "exact", "l1_norm", "majority_negative", "shots"], rows)
    write_sidecar(args.out / "qsf.json", args)


def cmd_multi(args) -> None:
    from .qsf import PolynomialFunctional, estimate_multiple_functionals

    rho = parse_state_preset(args.state)
    fs = [PolynomialFunctional(tuple(_floats(text))) for text in args.functional]
    k = max(f.k for f in fs)
    guard_budget(args.shots * k, args)
    ests = estimate_multiple_functionals(
        rho, fs, args.shots, args.seed, strategy=args.strategy, threads=args.threads, backend=args.backend
    )
    rows = [(i, " ".join(_fmt(a) for a in f.coeffs), e.value, e.stderr, e.exact) for i, (f, e) in enumerate(zip(fs, ests))]
    write_csv(args.out / "multi.csv", ["index", "coeffs", "estimate", "stderr", "exact"], rows)
    write_sidecar(args.out / "multi.json", args)


def cmd_weighted(args) -> None:
    from .observables import estimate_weighted_functionals, estimate_weighted_moments
    from .qsf import PolynomialFunctional

    rho = parse_state_preset(args.state)
    obs = parse_observable(args.observable)
    guard_budget(args.shots * max(args.k, 2), args)
    common = dict(scheme=args.scheme, backend=args.backend, threads=args.threads)
    est = estimate_weighted_moments(rho, obs, args.k, args.shots, args.seed, **common)
    exact = est.exact if est.exact is not None else [None] * args.k
    rows = [(j, est.scheme, float(est.estimates[j - 1]), float(est.stderr[j - 1]), exact[j - 1]) for j in range(1, args.k + 1)]
    write_csv(args.out / "weighted.csv", ["order", "scheme", "estimate", "stderr", "exact"], rows)
    if args.functional:
        fs = [PolynomialFunctional(tuple(_floats(text))) for text in args.functional]
        ests = estimate_weighted_functionals(rho, obs, fs, args.shots, args.seed, k=args.k, **common)
        frows = [(i, " ".join(_fmt(a) for a in f.coeffs), e.value, e.stderr, e.exact) for i, (f, e) in enumerate(zip(fs, ests))]
        write_csv(args.out / "weighted_functionals.csv", ["index", "coeffs", "estimate", "stderr", "exact"], frows)
    write_sidecar(args.out / "weighted.json", args)


def cmd_eig_interval(args) -> None:
    from .apps.intervals import interval_study

    ranks, grid = _ints(args.ranks), _floats(args.eps_grid)
    rows = interval_study(ranks, grid, args.trials, args.k, args.seed, threads=args.threads)
    write_csv(
        args.out / "interval_study.csv",
        ["rank", "eps", "mean_width", "sd_width", "containment", "inconsistent", "trials"],
        [(r.rank, r.eps, r.mean_width, r.sd_width, r.containment, r.inconsistent, r.trials) for r in rows],
    )
    write_sidecar(args.out / "interval_study.json", args)


def cmd_qvc(args) -> None:
    from .apps.physics import HeisenbergSpec, gibbs_state, heisenberg_hamiltonian
    from .apps.qvc import baseline_shots, virtual_cooling_estimate

    ham = heisenberg_hamiltonian(HeisenbergSpec(args.n, args.J, args.h))
    rho = gibbs_state(ham, args.beta)
    copies = args.runs * args.shots * max(args.k, 2)
    if args.baseline:
        copies += args.runs * baseline_shots(args.shots, args.k) * args.k * (args.k + 1) // 2
    guard_budget(copies, args)
    schemes = ["chain"] + (["swap-baseline"] if args.baseline else [])
    rows = []
    for scheme in schemes:
        res = virtual_cooling_estimate(
            rho, ham, args.k, args.shots, args.runs, args.seed, scheme=scheme, backend=args.backend, threads=args.threads
        )
        for i in range(args.k):
            rows.append(
                (args.n, scheme, i + 1, res.mean_energy[i], res.sigma_energy[i], res.mad[i], res.exact_energy[i], int(res.invalid[i]))
            )
    write_csv(args.out / "qvc.csv", ["n", "scheme", "k", "mean_E", "sigma_E", "mad", "exact_E", "invalid_runs"], rows)
    write_sidecar(args.out / "qvc.json", args)


def cmd_scaling(args) -> None:
    from .apps.qvc import error_scaling_study

    ns, ks, grid = _ints(args.n), _ints(args.k), _ints(args.shots_grid)
    guard_budget(len(ns) * args.runs * sum(grid) * max(max(ks), 2), args)
    points, fits = error_scaling_study(
        ns, args.beta, ks, grid, args.runs, args.seed, J=args.J, h=args.h, backend=args.backend, threads=args.threads
    )
    slope = {(f.n, f.k): f.slope for f in fits}
    rows = [(p.n, p.k, p.shots, p.mean_abs_err, slope[(p.n, p.k)], p.invalid) for p in points]
    write_csv(args.out / "scaling.csv", ["n", "k", "shots", "mean_abs_err", "slope", "invalid_runs"], rows)
    write_sidecar(args.out / "scaling.json", args)


def cmd_renyi(args) -> None:
    from .apps.renyi import renyi_experiment

    alphas = _ints(args.alpha)
    base = math.e if args.log_base == "e" else 2.0
    guard_budget(args.shots * max(alphas), args)
    rows = renyi_experiment(args.beta, alphas, args.shots, args.seed, base=base, threads=args.threads)
    write_csv(
        args.out / "renyi.csv",
        ["alpha", "estimate", "exact", "moment", "moment_stderr", "moment_exact"],
        [(r.alpha, r.entropy, r.exact_entropy, r.moment, r.moment_stderr, r.exact_moment) for r in rows],
    )
    write_sidecar(args.out / "renyi.json", args)


# -- argument parser -----------------------------------------------------------

STATE_HELP = (
    "state preset: pure-zero:m, max-mixed:m, gibbs-z:beta, heisenberg-gibbs:n,beta[,J,h], "
    "dirichlet:rank,seed or file:path.json"
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmoments", description="Reset-based moment estimation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--max-copies", type=int, default=DEFAULT_MAX_COPIES, help="prepared-copy budget guard")
        return p

    p = add("moments", cmd_moments, "estimate Tr(rho^2..k) with the chain")
    p.add_argument("--state", required=True, help=STATE_HELP)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, help="target error; sets shots automatically")
    p.add_argument("--shots", type=int)
    p.add_argument("--backend", choices=["statevector", "distribution"], default="statevector")

    p = add("qsf", cmd_qsf, "estimate one polynomial functional directly")
    p.add_argument("--state", required=True, help=STATE_HELP)
    p.add_argument("--coeffs", required=True, help="a1,a2,...,ak")
    p.add_argument("--shots", type=int, required=True)

    p = add("multi", cmd_multi, "estimate several functionals from one shot stream")
    p.add_argument("--state", required=True, help=STATE_HELP)
    p.add_argument("--functional", action="append", required=True, help="a1,a2,...; repeat for each functional")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--strategy", choices=["moment-reuse", "parallel-circuit"], default="moment-reuse")
    p.add_argument("--backend", choices=["statevector", "distribution"], default="statevector")

    p = add("weighted", cmd_weighted, "estimate Tr(O rho^j) and weighted functionals")
    p.add_argument("--state", required=True, help=STATE_HELP)
    p.add_argument("--observable", required=True, help="term file, heisenberg:n[,J,h] or 'terms:1 XX;-0.5 ZI'")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--scheme", choices=["pauli", "lcu"], default="pauli")
    p.add_argument("--functional", action="append", default=[], help="b1,b2,...; optional, repeatable")
    p.add_argument("--backend", choices=["statevector", "distribution"], default="statevector")

    p = add("eig-interval", cmd_eig_interval, "largest-eigenvalue interval Monte Carlo study")
    p.add_argument("--ranks", default="2,4,8,16,32")
    p.add_argument("--eps-grid", default="1e-3,1e-4,1e-5,1e-6")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--k", type=int, default=4)

    p = add("qvc", cmd_qvc, "virtual cooling of the Heisenberg chain")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--baseline", action="store_true", help="also run the equal-budget SWAP-test baseline")
    p.add_argument("--backend", choices=["statevector", "distribution"], default="distribution")

    p = add("scaling", cmd_scaling, "error vs shots scaling study")
    p.add_argument("--n", default="3,4")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--k", default="1,2,3")
    p.add_argument("--shots-grid", default="1000,10000,100000,1000000")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--backend", choices=["statevector", "distribution"], default="distribution")

    p = add("renyi", cmd_renyi, "Renyi entropies of the Gibbs state of H = Z")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--alpha", default="2,3,4")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--log-base", choices=["e", "2"], default="e")
    return parser


def _fail(code: int, kind: str, exc: BaseException) -> int:
    reason = " ".join(str(exc).split())
    print(f"error code={code} kind={kind} reason={reason}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        args.out.mkdir(parents=True, exist_ok=True)
        args.func(args)
    except BudgetError as exc:
        return _fail(EXIT_BUDGET, "budget", exc)
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, "numerical", exc)
    except CapacityError as exc:
        return _fail(EXIT_CONFIG, "capacity", exc)
    except (ValueError, OSError) as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
