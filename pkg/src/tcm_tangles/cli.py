"""Command-line entry point.

Subcommands: ``scenario`` (tangle time series), ``compare-approx`` (exact
vs large-field approximation), ``sweep`` (residual-tangle positivity
search), ``scaling`` (peak atom-atom tangle vs photon number).

Settings resolve in order: preset < config file (--config, flat
key=value) < explicit flags.  Exit codes: 0 success, 1 configuration
error, 2 photon-truncation guard abort.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .dynamics import TruncationError
from .random_states import SWEEP_DIMS, positivity_sweep
from .scenarios import (
    PRESETS,
    ConfigError,
    ScenarioConfig,
    compare_exact_vs_approx,
    load_config,
    run_scenario,
    scaling_study,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad usage as ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def _add_scenario_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--preset", choices=sorted(PRESETS), help="named scenario preset")
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--atomic", help="ee, gg, sym_plus, cat_plus, singlet")
    sub.add_argument("--field", choices=["fock", "coherent"], help="field kind")
    sub.add_argument("--n", type=int, help="photon number for a fock field")
    sub.add_argument("--mean-n", type=float, help="mean photon number for a coherent field")
    sub.add_argument("--t-max", type=float, help="grid end in units of 1/g (gt)")
    sub.add_argument("--steps", type=int, help="number of grid points")
    sub.add_argument("--tail-tol", type=float, help="coherent-state truncation tail mass")
    sub.add_argument("--rank-tol", type=float, help="effective-dimension eigenvalue cutoff")
    sub.add_argument("--out", required=True, help="output CSV path")


def build_parser() -> _Parser:
    parser = _Parser(prog="tcm-tangles", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scenario = commands.add_parser("scenario", help="tangle time series as CSV")
    _add_scenario_flags(scenario)

    compare = commands.add_parser(
        "compare-approx", help="exact vs approximate field-ensemble tangle"
    )
    _add_scenario_flags(compare)

    sweep = commands.add_parser("sweep", help="residual-tangle positivity sweep")
    sweep.add_argument("--dims", required=True, help="factor dims, e.g. 2x2x3")
    sweep.add_argument("--samples", type=int, required=True, help="number of random states")
    sweep.add_argument("--seed", type=int, default=0, help="RNG seed")
    sweep.add_argument("--config", help="flat key=value config file (e.g. measure=product)")
    sweep.add_argument("--rank-tol", type=float, help="effective-dimension eigenvalue cutoff")
    sweep.add_argument("--out", required=True, help="summary file path")

    scaling = commands.add_parser("scaling", help="peak atom-atom tangle vs photon number")
    scaling.add_argument("--n", default="5,10,20,40", help="comma-separated photon numbers")
    scaling.add_argument("--steps", type=int, default=400, help="grid points per beat period")
    scaling.add_argument("--out", required=True, help="output CSV path")
    return parser


_SCENARIO_KEYS = (
    "atomic",
    "field",
    "n",
    "mean_n",
    "g",
    "omega",
    "t_max",
    "steps",
    "tail_tol",
    "rank_tol",
    "approx_compare",
)


def _scenario_config(args: argparse.Namespace) -> ScenarioConfig:
    merged: dict = {}
    if args.preset:
        merged.update(PRESETS[args.preset])
    if args.config:
        file_values = load_config(args.config)
        file_values.pop("preset", None)
        file_values.pop("out", None)
        unknown = set(file_values) - set(_SCENARIO_KEYS)
        if unknown:
            raise ConfigError(f"config keys {sorted(unknown)} do not apply to scenarios")
        merged.update(file_values)
    for key in ("atomic", "field", "n", "mean_n", "t_max", "steps", "tail_tol", "rank_tol"):
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    # choosing a field kind explicitly drops the other kind's inherited value
    if (args.field == "fock" or args.n is not None) and args.mean_n is None:
        merged.pop("mean_n", None)
    if (args.field == "coherent" or args.mean_n is not None) and args.n is None:
        merged.pop("n", None)
    for key in ("atomic", "field"):
        if merged.get(key) is None:
            raise ConfigError(f"missing required setting {key!r}")
    merged["out"] = args.out
    return ScenarioConfig(**merged)


def _parse_dims(text: str) -> tuple[int, ...]:
    for sep in ("x", ","):
        if sep in text:
            try:
                dims = tuple(int(p) for p in text.split(sep))
            except ValueError:
                raise ConfigError(f"cannot parse dims {text!r}") from None
            if dims in SWEEP_DIMS:
                return dims
            raise ConfigError(f"unsupported dims {text!r}; choose from 2x2x3, 2x2x4")
    raise ConfigError(f"cannot parse dims {text!r} (expected e.g. 2x2x3)")


def _run_sweep(args: argparse.Namespace) -> None:
    dims = _parse_dims(args.dims)
    if args.samples < 1:
        raise ConfigError("samples must be >= 1")
    measure = "haar"
    rank_tol = args.rank_tol if args.rank_tol is not None else 1e-10
    if args.config:
        file_values = load_config(args.config)
        measure = file_values.get("measure", measure)
        rank_tol = file_values.get("rank_tol", rank_tol)
    if measure not in ("haar", "product"):
        raise ConfigError(f"unknown measure {measure!r}")
    result = positivity_sweep(
        dims,
        args.samples,
        seed=args.seed,
        measure=measure,
        rank_tol=rank_tol,
        dump_path=args.out + ".counterexamples",
    )
    with open(args.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write("# tcm-tangles sweep\n")
        fh.write(f"# dims = {' '.join(str(d) for d in dims)}\n")
        fh.write(f"# seed = {args.seed}\n")
        fh.write(f"# measure = {measure}\n")
        fh.write(f"# rank_tol = {rank_tol:g}\n")
        fh.write("samples,min_value,negative_count\n")
        fh.write(f"{result.samples},{result.min_value:.17g},{result.negative_count}\n")
        amps = result.argmin_state.amplitudes
        fh.write(
            "# argmin_state: "
            + " ".join(f"({a.real:.17g},{a.imag:.17g})" for a in amps)
            + "\n"
        )
    print(
        f"sweep {dims}: {result.samples} samples, min {result.min_value:.3e}, "
        f"{result.negative_count} below -1e-9 -> {args.out}"
    )


def _run_scaling(args: argparse.Namespace) -> None:
    try:
        ns = tuple(int(p) for p in str(args.n).split(","))
    except ValueError:
        raise ConfigError(f"cannot parse photon numbers {args.n!r}") from None
    result = scaling_study(ns, steps=args.steps, out=args.out)
    print(f"scaling {ns}: log-log slope {result.slope:.4f} -> {args.out}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "scenario":
            config = _scenario_config(args)
            result = run_scenario(config)
            print(f"scenario: {len(result.reports)} points -> {config.out}")
        elif args.command == "compare-approx":
            config = _scenario_config(args)
            result = compare_exact_vs_approx(config)
            print(
                f"compare-approx: window sup-norm {result.window_sup_norm:.4f} "
                f"-> {config.out}"
            )
        elif args.command == "sweep":
            _run_sweep(args)
        elif args.command == "scaling":
            _run_scaling(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TruncationError as exc:
        print(f"truncation guard: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
