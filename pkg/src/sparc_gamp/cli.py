"""Command line entry point.

Subcommands ``trace``, ``sweep``, ``ru-search``, ``ru-inf`` and ``potential``
write a CSV to ``--out`` (standard output by default). Options may also come
from a flat ``key=value`` file passed via ``--config``; flags given on the
command line take precedence.
"""

import argparse
import logging
import math
import sys

from . import gamp
from .channels import AWGN, BSC, Z
from .harness import (POTENTIAL_COLUMNS, RU_COLUMNS, RU_INF_COLUMNS, SWEEP_COLUMNS,
                      TRACE_COLUMNS, BracketViolation, ExperimentConfig, MemoryBudgetExceeded,
                      find_ru, ru_infinity, ru_rows, run_iteration_trace, run_potential_scan,
                      run_rate_sweep, write_csv)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

COMMANDS = ("trace", "sweep", "ru-search", "ru-inf", "potential")
_BOOL_KEYS = {"literal_z1"}


class ConfigError(ValueError):
    pass


def _float_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_common(p):
    p.add_argument("--config", help="flat key=value file; command line flags win")
    p.add_argument("--B", type=int, default=2, help="section size, a power of two")
    p.add_argument("--L", type=int, default=None,
                   help="number of sections (default 1000, or 4000 for awgn)")
    p.add_argument("--R", type=float, default=None, help="target rate")
    p.add_argument("--channel", choices=(AWGN, BSC, Z), default=BSC)
    p.add_argument("--epsilon", type=float, default=0.1, help="flip probability")
    p.add_argument("--snr", type=float, default=15.0, help="linear SNR for awgn")
    p.add_argument("--trials", type=_positive_int, default=None)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-8, help="decoder stopping tolerance")
    p.add_argument("--damping", type=float, default=1.0)
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--E0", type=float, default=1.0, help="state evolution start")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--memory-budget-gb", type=float, default=4.0)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="sparc-gamp",
                                     description="GAMP decoding experiments for sparse superposition codes")
    sub = parser.add_subparsers(dest="command", required=True)
    trace = sub.add_parser("trace", help="decoder and state evolution SER/MSE per iteration")
    sweep = sub.add_parser("sweep", help="final SER over a list of rates")
    ru = sub.add_parser("ru-search", help="bisection for the decoder threshold rate")
    ruinf = sub.add_parser("ru-inf", help="closed-form large-B threshold")
    pot = sub.add_parser("potential", help="potential function scan (awgn)")
    for p in (trace, sweep, ru, ruinf, pot):
        _add_common(p)
    sweep.add_argument("--rates", type=_float_list, default=(),
                       help="comma separated rates; --R is appended when given")
    ru.add_argument("--r-min", type=float, default=None)
    ru.add_argument("--r-max", type=float, default=None)
    ru.add_argument("--threshold", type=float, default=0.01, help="bracket width T")
    ruinf.add_argument("--epsilons", type=_float_list, default=(),
                       help="comma separated list, defaults to --epsilon")
    pot.add_argument("--grid-points", type=int, default=200)
    pot.add_argument("--e-min", type=float, default=1e-4)
    pot.add_argument("--e-max", type=float, default=1.0)
    pot.add_argument("--window", type=int, default=1, help="moving-average width before the scan")
    pot.add_argument("--literal-z1", action="store_true",
                     help="use z_1 in every wrong-candidate term")
    return parser, {"trace": trace, "sweep": sweep, "ru-search": ru, "ru-inf": ruinf,
                    "potential": pot}


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config_file(subparser, path):
    values = read_config_file(path)
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in values.items():
        if key not in known or key in ("config", "help"):
            raise ConfigError(f"unknown config key {key!r}")
        action = known[key]
        if key in _BOOL_KEYS:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{key} must be a boolean, got {value!r}")
            defaults[key] = value.lower() in ("true", "1", "yes")
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
            if action.choices and defaults[key] not in action.choices:
                raise ConfigError(f"{key} must be one of {action.choices}")
        else:
            if action.choices and value not in action.choices:
                raise ConfigError(f"{key} must be one of {action.choices}")
            defaults[key] = value
    subparser.set_defaults(**defaults)


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    # a first pass finds the subcommand and the config path; the file then
    # becomes the defaults of the second pass so explicit flags override it
    ns, _ = parser.parse_known_args(argv)
    if getattr(ns, "config", None):
        _apply_config_file(subs[ns.command], ns.config)
    return parser.parse_args(argv)


def config_from_args(ns):
    kind = ns.command
    trials = ns.trials if ns.trials is not None else (11 if kind == "ru-search" else 10)
    rates = tuple(getattr(ns, "rates", ()))
    if kind == "sweep" and ns.R is not None:
        rates = rates + (ns.R,)
    return ExperimentConfig(
        kind=kind, B=ns.B, L=ns.L, R=ns.R, rates=rates, channel=ns.channel,
        epsilon=None if ns.channel == AWGN else ns.epsilon,
        snr=ns.snr if ns.channel == AWGN else None,
        trials=trials, max_iters=ns.max_iters, tol=ns.tol, damping=ns.damping,
        mc_samples=ns.mc_samples, E0=ns.E0, seed=ns.seed, workers=ns.workers,
        memory_budget_gb=ns.memory_budget_gb,
        r_min=getattr(ns, "r_min", None), r_max=getattr(ns, "r_max", None),
        threshold=getattr(ns, "threshold", 0.01),
        grid_points=getattr(ns, "grid_points", 200), e_min=getattr(ns, "e_min", 1e-4),
        e_max=getattr(ns, "e_max", 1.0), window=getattr(ns, "window", 1),
        literal_z1=getattr(ns, "literal_z1", False))


def _validate(config):
    """Surface invalid settings as configuration errors before any work starts."""
    config.channel_model
    if config.kind in ("trace", "potential", "ru-search", "sweep"):
        from ._validation import check_section_size
        check_section_size(config.B)
    if config.kind in ("trace", "potential") and config.R is None:
        raise ConfigError(f"{config.kind} needs --R")
    if config.kind == "ru-search" and (config.r_min is None or config.r_max is None):
        raise ConfigError("ru-search needs --r-min and --r-max")
    if config.kind == "trace":
        config.check_memory(config.params())
    if config.kind == "sweep":
        for R in config.rates:
            config.check_memory(config.params(R))


def execute(config, stream, epsilons=()):
    """Run one command and write its CSV. Returns the exit code."""
    status = EXIT_OK
    if config.kind == "trace":
        result = run_iteration_trace(config)
        notes = [f"trial {t.key[-1]} failed: {t.error}" for t in result.failures]
        write_csv(stream, TRACE_COLUMNS, result.rows, "trace", config, notes)
        if result.failures:
            for note in notes:
                print(note, file=sys.stderr)
            status = EXIT_NUMERICAL
    elif config.kind == "sweep":
        rows, points = run_rate_sweep(config)
        notes = []
        for p in points:
            for t in p.trials:
                if t.error is not None:
                    notes.append(f"R={p.R:.17g} trial {t.key[-1]} failed: {t.error}")
        write_csv(stream, SWEEP_COLUMNS, rows, "sweep", config, notes)
        if notes:
            for note in notes:
                print(note, file=sys.stderr)
            status = EXIT_NUMERICAL
    elif config.kind == "ru-search":
        result = find_ru(config)
        notes = [f"R_u={result.R_u:.17g}"]
        notes += [f"probe R={p.R:.17g} successes={p.successes} trials_run={p.trials_run}"
                  for p in result.probes[:len(result.probes) - len(result.brackets) + 1]]
        write_csv(stream, RU_COLUMNS, ru_rows(result), "ru-search", config, notes)
    elif config.kind == "ru-inf":
        eps = tuple(epsilons) or (config.epsilon,)
        rows = [(config.channel, e, ru_infinity(config.channel, e)) for e in eps]
        write_csv(stream, RU_INF_COLUMNS, rows, "ru-inf", config)
    elif config.kind == "potential":
        rows, maxima, _ = run_potential_scan(config)
        notes = [f"maximum E={m.E:.17g} phi={m.phi:.17g} boundary={str(m.boundary).lower()}"
                 for m in maxima]
        if any(not math.isfinite(v) for _, v in rows):
            status = EXIT_NUMERICAL
            print("potential evaluation produced non-finite values", file=sys.stderr)
        write_csv(stream, POTENTIAL_COLUMNS, rows, "potential", config, notes)
    else:
        raise ConfigError(f"unknown command {config.kind!r}")
    return status


def main(argv=None):
    try:
        ns = parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; those are configuration errors here
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = config_from_args(ns)
        if ns.command == "ru-inf":
            if config.channel == AWGN:
                raise ConfigError("ru-inf has no closed form for the awgn channel")
            for e in ns.epsilons:
                ru_infinity(config.channel, e)
        else:
            _validate(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if ns.out == "-":
            return execute(config, sys.stdout, getattr(ns, "epsilons", ()))
        with open(ns.out, "w", encoding="utf-8", newline="\n") as fh:
            return execute(config, fh, getattr(ns, "epsilons", ()))
    except BracketViolation as exc:
        print(f"error: bracket violation at R={exc.R:.6g} "
              f"({exc.successes}/{exc.trials_run} successes): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MemoryBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (gamp.NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
