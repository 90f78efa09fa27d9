"""``cdklab`` command line: config file plus flag overrides, then run and emit.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure in a
mandatory check (rows with an error status, or a failed identity check).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .config import COMMANDS, ConfigError, build, load_toml
from .output import emit
from .runner import EXIT_VALIDATION, run

# Flag name -> config key.  Every flag takes exactly one value.
_FLAGS = {
    "--measure": "measure",
    "--x0": "x0",
    "--n": "n",
    "--grid": "grid",
    "--beta1": "beta1",
    "--betas": "betas",
    "--amplitude": "amplitude",
    "--exponent": "exponent",
    "--dist": "dist",
    "--seed": "seeds",
    "--horizon": "horizon",
    "--mode": "mode",
    "--out": "out",
    "--format": "format",
    "--threads": "threads",
    "--quad-tol": "quad_tol",
    "--rho": "rho",
    "--a": "a",
    "--b": "b",
    "--bracket": "bracket",
    "--tol": "tol",
    "--l2-n": "l2_N",
    "--experiment-id": "experiment_id",
    "--config": "config",
}


def _normalize(argv: Sequence[str]) -> list[str]:
    # Join "--flag value" so values such as "-0.3-0.8i" are never read as options.
    out, it = [], iter(argv)
    for tok in it:
        if tok in _FLAGS:
            try:
                out.append(f"{tok}={next(it)}")
            except StopIteration:
                out.append(tok)
        else:
            out.append(tok)
    return out


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdklab",
        description="Christoffel-Darboux kernel experiments for Jacobi-parameter measures.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    helps = {
        "universality": "scaled kernel against the sine kernel",
        "second-kind": "second-kind and symmetrized mixed kernels against their limits",
        "perturb": "scaled kernel of a rank-one or diagonal perturbation",
        "random-perturb": "scaled kernel under random diagonal perturbations, per seed",
        "stieltjes": "boundary values of the Stieltjes transform and weights",
        "eigenvalue": "rank-one eigenvalue, its mass and the diagonal kernel at it",
        "identity-check": "quadrature check of the sinc integral identity",
        "varpar": "variation-of-parameters coefficients under a perturbation",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        for flag, key in _FLAGS.items():
            p.add_argument(flag, dest=key, default=None, metavar=key.upper())
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = _parser().parse_args(_normalize(argv))
    raw = {}
    try:
        if args.config is not None:
            raw.update(load_toml(args.config))
        flags = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config") and v is not None}
        raw.update(flags)
        cfg = build(args.command, raw)
    except ConfigError as exc:
        print(f"cdklab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    result = run(cfg)
    try:
        texts = emit(result.rows, result.summary, cfg.format, cfg.out)
    except OSError as exc:
        print(f"cdklab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if cfg.out is None:
        sys.stdout.write(texts["body"])
        if "summary" in texts:
            sys.stderr.write(texts["summary"])
    for failure in result.failures:
        print(f"cdklab: {failure}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
