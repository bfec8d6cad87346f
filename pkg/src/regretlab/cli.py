"""Command-line entry point: ``regretlab {regret,capacity,theory,sweep}``.

Exit codes: 0 success, 1 usage or parse error, 2 certificate failure,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

from . import __version__
from .capacity import (kemperman_capacity, load_instance, misspec_capacity, saddle_certificate,
                       sandwich_certificate)
from .config import U64_MAX, ExperimentConfig, generator_from_dict
from .errors import ContractViolation, NumericFailure
from .predictors import shtarkov_log_normalizer
from .regret import pac_regret, realized_regret
from .theory import (entropy_robustness_bound, gamma_n_interval, hilbert_brick_upper, i_n,
                     jeffreys_shtarkov_kl)

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_NUMERIC = 0, 1, 2, 3

REGRET_COLUMNS = ("n", "d", "predictor", "generator", "variant", "regret_mean", "regret_stderr",
                  "reps", "i_n", "gamma_n", "seed")
THEORY_COLUMNS = ("grid_kind", "grid", "i_n", "gamma_n", "hilbert_brick_upper",
                  "jeffreys_shtarkov_kl", "entropy_robustness_bound", "units")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    s = str(x)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def render_csv(columns, rows, cfg: ExperimentConfig) -> str:
    buf = io.StringIO(newline="")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r.get(c)) for c in columns) + "\n")
    buf.write(f"# regretlab {__version__} seed={cfg.seed} config_sha256={cfg.config_hash()}\n")
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _gamma_n(box, n):
    # exact individual-sequence regret of the box at v = 1, tau = 0
    if box.dim == 1:
        return gamma_n_interval(float(box.lengths[0]), n)
    return shtarkov_log_normalizer(box, 1.0, 0.0, n, method="closed")


def run_regret(cfg: ExperimentConfig) -> list[dict]:
    box = cfg.box
    rows = []
    for n in cfg.horizons:
        for p in cfg.predictors:
            for gdoc in cfg.generator_docs:
                gen = generator_from_dict(gdoc, n, box)
                for variant in cfg.variants:
                    fn = pac_regret if variant == "pac" else realized_regret
                    est = fn(gen, p, n, cfg.reps, cfg.seed, box=box, workers=cfg.workers)
                    rows.append({
                        "n": n, "d": box.dim, "predictor": p.display_name(), "generator": gen.label(),
                        "variant": variant, "regret_mean": est.mean, "regret_stderr": est.stderr,
                        "reps": est.reps, "i_n": i_n(box.dim, n, box.volume()),
                        "gamma_n": _gamma_n(box, n), "seed": cfg.seed,
                    })
    rows.sort(key=lambda r: (r["n"], r["predictor"], r["generator"], r["variant"]))
    return rows


def run_theory(cfg: ExperimentConfig) -> list[dict]:
    t = cfg.theory
    scale = 1.0 / math.log(2.0) if t["units"] == "bits" else 1.0
    sc = lambda x: None if x is None else x * scale
    rows = []
    for n in t["n_grid"]:
        kl = jeffreys_shtarkov_kl(n, t["b"]) if n >= 2 else None
        rows.append({
            "grid_kind": "n", "grid": n,
            "i_n": sc(i_n(int(t["d"]), n, float(t["leb"]))),
            "gamma_n": sc(gamma_n_interval(float(t["a"]), n)),
            "hilbert_brick_upper": sc(hilbert_brick_upper(n)),
            "jeffreys_shtarkov_kl": sc(kl),
            "units": t["units"],
        })
    for eps in t["eps_grid"]:
        rows.append({"grid_kind": "eps", "grid": float(eps),
                     "entropy_robustness_bound": sc(entropy_robustness_bound(float(t["b"]), float(eps))),
                     "units": t["units"]})
    return rows


def run_capacity(cfg: ExperimentConfig) -> tuple[dict, bool]:
    """Solve the instance and run the requested certificates; returns ``(report, all_passed)``."""
    raw = cfg.raw
    if "instance" not in raw:
        raise ContractViolation("capacity needs an instance file (--instance or 'instance' in the config)")
    inst = load_instance(raw["instance"])
    tol = cfg.tolerances
    solve_tol = float(tol.get("solver", 1e-12))
    cert_tol = float(tol.get("certificate", 1e-6))
    max_iters = int(tol.get("max_iters", 1_000_000))
    sol = misspec_capacity(inst, solve_tol, max_iters)
    cap = kemperman_capacity(inst.theta, solve_tol, max_iters)
    saddle = saddle_certificate(inst, sol.qstar, sol.value, cert_tol)
    report = {
        "F": sol.value,
        "C_theta": cap.value,
        "prior": sol.prior.tolist(),
        "qstar": sol.qstar.tolist(),
        "costs": inst.costs.tolist(),
        "iterations": sol.iterations,
        "duality_gap": sol.gap,
        "saddle": {
            "max_expected_log_ratio": saddle.max_value,
            "value_gap": saddle.value_gap,
            "divergence_slacks": saddle.slacks.tolist(),
            "value_ok": saddle.value_ok,
            "divergence_ok": saddle.divergence_ok,
        },
    }
    ok = saddle.passed
    if raw.get("epsilon") is not None:
        sw = sandwich_certificate(inst, float(raw["epsilon"]))
        report["sandwich"] = {
            "epsilon": float(raw["epsilon"]), "lambda0": sw.lambda0, "C_phi": sw.capacity_phi,
            "C_theta": sw.capacity_theta, "F": sw.misspec, "F_enlarged": sw.misspec_enlarged,
            "slack_term": sw.slack_term, "upper": sw.upper, "passed": sw.passed,
        }
        ok = ok and sw.passed
    report["passed"] = ok
    report["meta"] = {"version": __version__, "config_sha256": cfg.config_hash()}
    return report, ok


def _int_list(s: str) -> list[int]:
    try:
        vals = [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {s!r}") from None
    if not vals or any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {s!r}")
    return [int(v) for v in vals]


def _u64(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {s!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _pos_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regretlab", description="Regret experiments for the Gaussian location model.")
    parser.add_argument("--version", action="version", version=f"regretlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (("regret", "one predictor against one generator"),
                       ("sweep", "predictor x generator x horizon grid (default: heavy-tail headline)"),
                       ("theory", "closed-form and quadrature tables"),
                       ("capacity", "finite-alphabet misspecified capacity with certificates")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--workers", type=_pos_int)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--reps", type=_pos_int)
        p.add_argument("--n", type=_int_list, metavar="LIST", help="comma-separated horizons")
        if name == "capacity":
            p.add_argument("--instance", metavar="PATH")
            p.add_argument("--epsilon", type=float, help="also run the sandwich certificate")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        overrides = {"seed": args.seed, "workers": args.workers, "out": args.out,
                     "reps": args.reps, "horizons": args.n}
        if args.command == "capacity":
            overrides.update(instance=args.instance, epsilon=args.epsilon)
        cfg = ExperimentConfig.load(args.command, args.config, overrides)
        if args.command in ("regret", "sweep"):
            _emit(render_csv(REGRET_COLUMNS, run_regret(cfg), cfg), cfg.out)
        elif args.command == "theory":
            _emit(render_csv(THEORY_COLUMNS, run_theory(cfg), cfg), cfg.out)
        else:
            report, ok = run_capacity(cfg)
            _emit(json.dumps(report, indent=2) + "\n", cfg.out)
            if not ok:
                print("regretlab: certificate check failed", file=sys.stderr)
                return EXIT_CERT
        return EXIT_OK
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, ContractViolation, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"regretlab: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        msg = " ".join(str(exc).split())
        print(f"regretlab: numeric failure: {msg}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
