"""Command-line entry point: run experiments, sweeps, comparisons, QUBO dumps.

Configuration comes from a TOML file (flat keys plus one section per
component) and can be overridden by flags. Every run embeds its fully
resolved configuration in the summary JSON so results are reproducible
from the artifacts alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

import numpy as np

from .anneal import AnnealConfig, BRUTE_FORCE_LIMIT
from .attacks import ATTACK_NAMES, AttackKind, AttackSpec
from .distance import BlendConfig, cosine_matrix, dual_blend, euclidean_matrix, normalize_euclidean
from .ensemble import RoutingConfig, VoteConfig
from .harness import AGGREGATORS, ExperimentConfig, run_experiment
from .projection import ProjectionConfig, importance_project
from .qubo import SuspicionConfig, build_selection_qubo, build_suspicion_qubo, dump_qubo
from .synthetic import SyntheticSourceConfig, synthetic_honest_gradients
from .trainer import TrainerConfig
from .verify import cut_identity_suite, solver_suite

OUTPUT_DIR_ENV = "FEDANNEAL_OUT"

_SECTION_TYPES = {
    "attack": AttackSpec,
    "routing": RoutingConfig,
    "vote": VoteConfig,
    "anneal": AnnealConfig,
    "suspicion": SuspicionConfig,
    "blend": BlendConfig,
    "synthetic": SyntheticSourceConfig,
    "trainer": TrainerConfig,
}


class ConfigError(Exception):
    pass


def _build_section(cls, data: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")
    kwargs = dict(data)
    for f in dataclasses.fields(cls):
        if f.name in kwargs and isinstance(kwargs[f.name], list):
            kwargs[f.name] = tuple(kwargs[f.name])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def _parse_attack_kind(name: str) -> AttackKind:
    try:
        return AttackKind(name)
    except ValueError:
        raise ConfigError(
            f"unknown attack {name!r}; valid attacks: {', '.join(ATTACK_NAMES)}"
        ) from None


def load_config(path: str | None, overrides: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if path:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)

    kwargs: dict = {}
    sections: dict = {}
    top_fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"section [{key}] must be a table")
            sections[key] = dict(value)
        elif key == "sweep":
            continue  # handled by the sweep command
        elif key in top_fields:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")

    attack_data = sections.get("attack", {})
    if overrides.attack is not None:
        attack_data["kind"] = overrides.attack
    if "kind" in attack_data:
        attack_data["kind"] = _parse_attack_kind(attack_data["kind"])
        kwargs["attack"] = _build_section(AttackSpec, attack_data, "attack")
    elif attack_data:
        raise ConfigError("[attack] section needs a 'kind'")

    for name, cls in _SECTION_TYPES.items():
        if name == "attack":
            continue
        if name in sections:
            kwargs[name] = _build_section(cls, sections[name], name)

    flag_map = {
        "aggregator": overrides.aggregator,
        "n": overrides.n,
        "f": overrides.f,
        "m": overrides.m,
        "rounds": overrides.rounds,
        "seed": overrides.seed,
        "projection_k": overrides.k,
        "output_path": overrides.out,
    }
    for key, value in flag_map.items():
        if value is not None:
            kwargs[key] = value

    try:
        cfg = ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    if overrides.reads is not None:
        cfg = dataclasses.replace(cfg, anneal=dataclasses.replace(cfg.anneal, seed=cfg.anneal.seed, reads=overrides.reads))
    if overrides.tau_e is not None or overrides.tau_c is not None:
        routing = dataclasses.replace(
            cfg.routing,
            tau_e=overrides.tau_e if overrides.tau_e is not None else cfg.routing.tau_e,
            tau_c=overrides.tau_c if overrides.tau_c is not None else cfg.routing.tau_c,
        )
        cfg = dataclasses.replace(cfg, routing=routing)
    if overrides.alpha is not None:
        cfg = dataclasses.replace(cfg, blend=dataclasses.replace(cfg.blend, alpha=overrides.alpha))

    if cfg.output_path is None and os.environ.get(OUTPUT_DIR_ENV):
        name = f"{cfg.attack.kind.value}_{cfg.aggregator}_seed{cfg.seed}"
        cfg = dataclasses.replace(cfg, output_path=os.path.join(os.environ[OUTPUT_DIR_ENV], name))

    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML experiment configuration")
    p.add_argument("--attack", help="attack kind override")
    p.add_argument("--aggregator", choices=AGGREGATORS, help="aggregator override")
    p.add_argument("--n", type=int, help="total client count")
    p.add_argument("--f", type=int, help="Byzantine client count")
    p.add_argument("--m", type=int, help="selection size (default n - f)")
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, help="projection dimension")
    p.add_argument("--out", help="output basename for CSV/JSON")
    p.add_argument("--reads", type=int, help="annealer reads")
    p.add_argument("--tau-e", dest="tau_e", type=float, help="Euclidean gap threshold")
    p.add_argument("--tau-c", dest="tau_c", type=float, help="cosine gap threshold")
    p.add_argument("--alpha", type=float, help="dual-distance blend weight")


def _print_aggregate(tag: str, agg) -> None:
    print(
        f"{tag:>28}  acc={agg.detection_accuracy:.4f}  f1={agg.f1:.4f}  "
        f"rej={agg.byzantine_rejection_rate:.4f}  ret={agg.honest_retention_rate:.4f}"
    )


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    result = run_experiment(cfg)
    _print_aggregate(f"{cfg.attack.kind.value}/{cfg.aggregator}", result.aggregate)
    if result.csv_path:
        print(f"wrote {result.csv_path}")
        print(f"wrote {result.json_path}")
    return 0


def _sweep_grid(args: argparse.Namespace) -> tuple[list[str], list[str]]:
    attacks: list[str] = []
    aggregators: list[str] = []
    if args.config:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        sweep = data.get("sweep", {})
        attacks = list(sweep.get("attacks", []))
        aggregators = list(sweep.get("aggregators", []))
    if args.attacks:
        attacks = args.attacks.split(",")
    if args.aggregators:
        aggregators = args.aggregators.split(",")
    return attacks, aggregators


def cmd_sweep(args: argparse.Namespace) -> int:
    attacks, aggregators = _sweep_grid(args)
    if not attacks or not aggregators:
        print("error: empty sweep grid (need attacks and aggregators)", file=sys.stderr)
        return 2
    for name in attacks:
        _parse_attack_kind(name)
    for agg in aggregators:
        if agg not in AGGREGATORS:
            print(f"error: unknown aggregator {agg!r}", file=sys.stderr)
            return 2

    out_dir = args.out or os.environ.get(OUTPUT_DIR_ENV) or "sweep_results"
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for attack in attacks:
        for agg in aggregators:
            cell_args = argparse.Namespace(**vars(args))
            cell_args.attack = attack
            cell_args.aggregator = agg
            cell_args.out = os.path.join(out_dir, f"{attack}_{agg}")
            try:
                cfg = load_config(args.config, cell_args)
                result = run_experiment(cfg)
                agg_m = result.aggregate
                rows.append((attack, agg, agg_m, None))
                _print_aggregate(f"{attack}/{agg}", agg_m)
            except Exception as exc:  # keep sweeping, record the failure
                rows.append((attack, agg, None, str(exc)))
                print(f"{attack}/{agg}: FAILED: {exc}", file=sys.stderr)

    combined = os.path.join(out_dir, "sweep_summary.csv")
    lines = ["attack,aggregator,detection_accuracy,f1,byz_rejection,honest_retention,error"]
    for attack, agg, m, err in rows:
        if m is None:
            lines.append(f"{attack},{agg},,,,,{err}")
        else:
            lines.append(
                f"{attack},{agg},{m.detection_accuracy:.6f},{m.f1:.6f},"
                f"{m.byzantine_rejection_rate:.6f},{m.honest_retention_rate:.6f},"
            )
    with open(combined, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {combined}")
    return 0 if any(m is not None for _, _, m, _ in rows) else 1


def cmd_compare(args: argparse.Namespace) -> int:
    aggregators = (args.aggregators or ",".join(AGGREGATORS)).split(",")
    print(f"{'aggregator':>28}  {'accuracy':>8}  {'f1':>8}")
    worst = 0
    for agg in aggregators:
        cell_args = argparse.Namespace(**vars(args))
        cell_args.aggregator = agg
        cell_args.out = args.out and os.path.join(args.out, agg)
        try:
            cfg = load_config(args.config, cell_args)
            result = run_experiment(cfg)
            print(f"{agg:>28}  {result.aggregate.detection_accuracy:8.4f}  "
                  f"{result.aggregate.f1:8.4f}")
        except Exception as exc:
            print(f"{agg:>28}  FAILED: {exc}", file=sys.stderr)
            worst = 1
    return worst


def cmd_dump_qubo(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    if cfg.gradient_source != "synthetic":
        print("error: dump-qubo supports the synthetic source only", file=sys.stderr)
        return 2
    from .attacks import generate
    from .core import ClientUpdate, compute_honest_stats
    from .harness import derive_seed, _TAG_ATTACK

    n_honest = cfg.n - cfg.f
    honest = synthetic_honest_gradients(cfg.synthetic, n_honest, args.round, cfg.seed)
    vectors = list(honest)
    if cfg.f > 0:
        updates = [ClientUpdate(i, g, False) for i, g in enumerate(honest)]
        stats = compute_honest_stats(updates)
        spec = cfg.attack.with_seed(derive_seed(cfg.seed, _TAG_ATTACK, args.round))
        vectors += generate(spec, stats, cfg.f, honest)
    projected = importance_project(vectors, ProjectionConfig(k=cfg.projection_k))
    cos = cosine_matrix(projected, cfg.blend.epsilon)
    if args.metric == "dual":
        dist = dual_blend(normalize_euclidean(euclidean_matrix(projected)), cos, cfg.blend.alpha)
    else:
        dist = cos
    if args.suspicion:
        model = build_suspicion_qubo(dist, cfg.selection_size, cfg.suspicion)
    else:
        model = build_selection_qubo(dist, cfg.selection_size)
    text = dump_qubo(model)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.n is not None and args.n > BRUTE_FORCE_LIMIT:
        print(
            f"error: --n {args.n} exceeds the exact-solver guard ({BRUTE_FORCE_LIMIT})",
            file=sys.stderr,
        )
        return 2
    cut = cut_identity_suite(matrices=args.matrices, seed=args.seed or 7)
    print(
        f"cut identity: {cut['matrices'] - cut['failures']}/{cut['matrices']} matrices ok "
        f"(max error {cut['max_error']:.2e})"
    )
    sol = solver_suite(
        instances=args.instances,
        reads=args.reads,
        seed=args.seed or 11,
        fixed_n=args.n,
        sweeps=args.sweeps,
    )
    print(
        f"solver: {sol['sa_never_below']}/{sol['instances']} instances >= exact min, "
        f"{sol['exact_matches']} exact (>= {int(0.95 * sol['instances'])} required), "
        f"{sol['repaired_ok']} repairs at |S|=m, "
        f"{sol['feasible_optima']} exact optima feasible"
    )
    ok = cut["ok"] and sol["ok"]
    print("verify: PASS" if ok else "verify: FAIL")
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fedanneal")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_common_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run an attack x aggregator grid")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--attacks", help="comma-separated attack kinds")
    p_sweep.add_argument("--aggregators", help="comma-separated aggregators")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="same config across aggregators")
    _add_common_flags(p_cmp)
    p_cmp.add_argument("--aggregators", help="comma-separated aggregators")
    p_cmp.set_defaults(func=cmd_compare)

    p_dump = sub.add_parser("dump-qubo", help="serialize one round's selection QUBO")
    _add_common_flags(p_dump)
    p_dump.add_argument("--round", type=int, default=0)
    p_dump.add_argument("--metric", choices=("cosine", "dual"), default="cosine")
    p_dump.add_argument("--suspicion", action="store_true",
                        help="build the suspicion-penalized variant")
    p_dump.set_defaults(func=cmd_dump_qubo)

    p_ver = sub.add_parser("verify", help="run the solver/identity self-checks")
    p_ver.add_argument("--instances", type=int, default=100)
    p_ver.add_argument("--matrices", type=int, default=200)
    p_ver.add_argument("--reads", type=int, default=1000)
    p_ver.add_argument("--sweeps", type=int, default=1000)
    p_ver.add_argument("--n", type=int, help="fixed instance size")
    p_ver.add_argument("--seed", type=int)
    p_ver.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
