"""Command-line interface.

Results are written as JSON (to ``--out`` or stdout). A short human summary
goes to stderr. Exit codes: 0 success, 1 reproduction cells out of
tolerance, 2 unreadable or malformed input data, 3 invalid parameters.
"""

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, datasets
from ._rng import DEFAULT_SEED
from .aux_tests import median_test_exact, sharp_permutation_test
from .calibrate import CalibrationSpec, calibrate_alpha
from .iu_test import run_iu_test
from .perm_engine import EnumerationCapError, PermutationPlan
from .power_design import DesignError, PowerQuery, estimate_power, find_design, inverse_square_design, power_curve
from .reproduce import TARGETS, reproduce
from .transform import MarginPair, TransformDomainError, TransformKind, TwoSampleData

SEED_ENV = "IUNPC_SEED"
EXIT_DATA = 2
EXIT_PARAMS = 3


class DataError(Exception):
    """Input file missing, unreadable or malformed."""


class ParameterError(Exception):
    """Invalid flag value or combination."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAMS, f"{self.prog}: error: {message}\n")


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------- data input

def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _parse_float(text, where):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{where}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{where}: non-finite value {text!r}")
    return value


def read_group_csv(path):
    """Parse a ``group,value`` CSV (header optional, groups 1 and 2)."""
    rows = [r for r in csv.reader(_read_text(path).splitlines()) if any(c.strip() for c in r)]
    if rows and rows[0] and rows[0][0].strip().lower() == "group":
        rows = rows[1:]
    groups = {1: [], 2: []}
    for i, row in enumerate(rows, start=1):
        where = f"{path}: data row {i}"
        if len(row) != 2:
            raise DataError(f"{where}: expected 2 columns (group,value), got {len(row)}")
        label = row[0].strip()
        if label not in ("1", "2"):
            raise DataError(f"{where}: group must be 1 or 2, got {label!r}")
        groups[int(label)].append(_parse_float(row[1].strip(), where))
    return _two_sample(groups[1], groups[2], path)


def read_column_csv(path):
    """Parse a one-column file of values (header optional)."""
    rows = [r for r in csv.reader(_read_text(path).splitlines()) if any(c.strip() for c in r)]
    values = []
    for i, row in enumerate(rows, start=1):
        if len(row) != 1:
            raise DataError(f"{path}: row {i}: expected 1 column, got {len(row)}")
        if i == 1:
            try:
                float(row[0])
            except ValueError:
                continue
        values.append(_parse_float(row[0].strip(), f"{path}: row {i}"))
    return values


def _two_sample(a, b, where):
    try:
        return TwoSampleData(a, b)
    except ValueError as exc:
        raise DataError(f"{where}: {exc}") from None


def dump_group_csv(data):
    lines = ["group,value"]
    lines += [f"1,{float(v)!r}" for v in data.sample_a]
    lines += [f"2,{float(v)!r}" for v in data.sample_b]
    return "\n".join(lines) + "\n"


def _load_data(args):
    sources = [s for s in (args.data, args.builtin, args.data1 or args.data2) if s]
    if len(sources) != 1:
        raise ParameterError("give exactly one of --data, --builtin or --data1/--data2")
    if args.builtin:
        return datasets.load(args.builtin), {"builtin": args.builtin}
    if args.data:
        return read_group_csv(args.data), {"file": str(args.data), "sha256": _sha256(args.data)}
    if not (args.data1 and args.data2):
        raise ParameterError("--data1 and --data2 must be given together")
    data = _two_sample(read_column_csv(args.data1), read_column_csv(args.data2), args.data1)
    prov = {"file1": str(args.data1), "sha256_1": _sha256(args.data1),
            "file2": str(args.data2), "sha256_2": _sha256(args.data2)}
    return data, prov


# ---------------------------------------------------------------- output

def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(obj, "value"):
        return obj.value
    return obj


def _manifest(subcommand, parameters, dataset=None):
    return {
        "tool": "iunpc",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": parameters,
        "dataset": dataset,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }


def dumps(document):
    return json.dumps(_sanitize(document), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(args, subcommand, parameters, result, dataset=None):
    text = dumps({"manifest": _manifest(subcommand, parameters, dataset), "result": result})
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _say(message):
    print(message, file=sys.stderr)


# ---------------------------------------------------------------- flag helpers

def _float_flag(value, flag, lo=None, hi=None, lo_open=True, hi_open=True, allow_inf=False):
    if value is None:
        raise ParameterError(f"{flag} is required")
    ok = not math.isnan(value) and (allow_inf or math.isfinite(value))
    if ok and lo is not None:
        ok = value > lo if lo_open else value >= lo
    if ok and hi is not None:
        ok = value < hi if hi_open else value <= hi
    if not ok:
        raise ParameterError(f"{flag}: invalid value {value!r}")
    return value


def _int_flag(value, flag, minimum=1):
    if value is None or value < minimum:
        raise ParameterError(f"{flag} must be an integer >= {minimum}, got {value!r}")
    return value


def _margins(args):
    lo = _float_flag(args.eps_lower, "--eps-lower", lo=0.0, lo_open=False, allow_inf=True)
    up = _float_flag(args.eps_upper, "--eps-upper", lo=0.0, lo_open=False, allow_inf=True)
    if math.isinf(lo) and math.isinf(up):
        raise ParameterError("--eps-lower and --eps-upper cannot both be infinite")
    return MarginPair(lo, up)


def _alpha(args):
    return _float_flag(args.alpha, "--alpha", lo=0.0, hi=0.5)


def _calibrate_mode(text):
    if text in ("auto", "naive"):
        return text
    if text.startswith("fixed="):
        try:
            value = float(text[len("fixed="):])
        except ValueError:
            value = float("nan")
        return _float_flag(value, "--calibrate fixed=<v>", lo=0.0, hi=1.0)
    raise ParameterError(f"--calibrate must be auto, naive or fixed=<v>, got {text!r}")


def _power_mode(text):
    if text in ("auto", "auto_calibrate"):
        return "auto_calibrate"
    return _calibrate_mode(text)


def _delta_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ParameterError(f"--delta-grid must be a:b:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise ParameterError(f"--delta-grid must be numeric a:b:step, got {text!r}") from None
    if not step > 0 or b < a:
        raise ParameterError("--delta-grid needs step > 0 and b >= a")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def _set_threads(args):
    if getattr(args, "threads", None) is None:
        return
    import numba

    n = _int_flag(args.threads, "--threads")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------- subcommands

def cmd_iutest(args):
    margins = _margins(args)
    alpha = _alpha(args)
    mode = _calibrate_mode(args.calibrate)
    _int_flag(args.permutations, "--permutations")
    _int_flag(args.mc, "--mc")
    _int_flag(args.mc_permutations, "--mc-permutations")
    data, provenance = _load_data(args)
    plan = PermutationPlan(args.permutations, exhaustive=args.exhaustive, seed=args.seed)
    result = run_iu_test(
        data, margins, alpha, args.transform, plan, alpha_c=mode,
        calibration_kwargs={"mc_replicates": args.mc, "permutations_per_replicate": args.mc_permutations},
    )
    params = {
        "eps_lower": margins.eps_lower, "eps_upper": margins.eps_upper, "alpha": alpha,
        "transform": args.transform, "permutations": args.permutations, "exhaustive": args.exhaustive,
        "seed": args.seed, "calibrate": args.calibrate, "mc": args.mc,
        "mc_permutations": args.mc_permutations,
    }
    _emit(args, "iutest", params, result.to_dict(), provenance)
    _say(f"lambda_G = {result.t_global:.6g}, alpha_c = {result.alpha_c:.6g}: {result.decision.value}")
    return 0


def cmd_sharp(args):
    _int_flag(args.permutations, "--permutations")
    data, provenance = _load_data(args)
    if args.method == "median":
        res = median_test_exact(data, args.sidedness, args.ties)
    else:
        plan = PermutationPlan(args.permutations, exhaustive=args.exhaustive, seed=args.seed)
        res = sharp_permutation_test(data, args.sidedness, plan)
    params = {"sidedness": args.sidedness, "method": args.method, "ties": args.ties,
              "permutations": args.permutations, "exhaustive": args.exhaustive, "seed": args.seed}
    _emit(args, "sharp", params, res.to_dict(), provenance)
    _say(f"{res.method} {res.sidedness.value}: p = {res.pvalue:.6g}")
    return 0


def _sim_flags(args):
    n1 = _int_flag(args.n1, "--n1", 2)
    n2 = _int_flag(args.n2, "--n2", 2)
    sigma = _float_flag(args.sigma, "--sigma", lo=0.0)
    return n1, n2, sigma, _int_flag(args.mc, "--mc"), _int_flag(args.permutations, "--permutations")


def cmd_calibrate(args):
    margins = _margins(args)
    alpha = _alpha(args)
    n1, n2, sigma, mc, R = _sim_flags(args)
    spec = CalibrationSpec(n1, n2, margins, alpha, sigma, mc, R, args.seed, args.transform, args.boundaries)
    res = calibrate_alpha(spec)
    _emit(args, "calibrate", spec.to_dict(), res.to_dict())
    _say(f"alpha_c = {res.alpha_c:.6g} (boundary {res.boundary_used}, MC error {res.quantile_mc_error:.3g})")
    return 0


def cmd_power(args):
    margins = _margins(args)
    alpha = _alpha(args)
    n1, n2, sigma, mc, R = _sim_flags(args)
    mode = _power_mode(args.mode)
    if (args.delta is None) == (args.delta_grid is None):
        raise ParameterError("give exactly one of --delta or --delta-grid")
    delta = args.delta if args.delta is not None else 0.0
    _float_flag(delta, "--delta")
    query = PowerQuery(delta, n1, n2, margins, alpha, mode, sigma, mc, R, args.seed, args.transform)
    if args.delta_grid is None:
        est = estimate_power(query)
        _emit(args, "power", query.to_dict(), est.to_dict())
        _say(f"rejection rate {est.rejection_rate:.4f} (se {est.mc_standard_error:.4f}), alpha_c = {est.alpha_c:.6g}")
        return 0
    grid = _delta_grid(args.delta_grid)
    curve = power_curve(query, grid)
    lines = ["delta,rejection_rate,mc_se"] + [
        f"{e.query.delta!r},{e.rejection_rate!r},{e.mc_standard_error!r}" for e in curve
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    _say(f"{len(curve)} grid points, alpha_c = {curve[0].alpha_c:.6g}")
    return 0


def cmd_design(args):
    eps = _float_flag(args.eps, "--eps", lo=0.0)
    if args.rule == "inverse-square":
        n_unit = _float_flag(args.n_at_unit, "--n-at-unit", lo=0.0)
        res = inverse_square_design(eps, n_unit)
        params = {"eps": eps, "rule": args.rule, "n_at_unit": n_unit}
    else:
        alpha = _alpha(args)
        target = _float_flag(args.power, "--power", lo=0.0, hi=1.0)
        sigma = _float_flag(args.sigma, "--sigma", lo=0.0)
        mc = _int_flag(args.mc, "--mc")
        R = _int_flag(args.permutations, "--permutations")
        max_n = _int_flag(args.max_n, "--max-n", 2)
        margin = eps * sigma
        res = find_design(target, (margin, margin), alpha, sigma, mc, R, args.seed, max_n, 2, args.transform)
        params = {"eps": eps, "rule": args.rule, "alpha": alpha, "power": target, "sigma": sigma,
                  "mc": mc, "permutations": R, "seed": args.seed, "max_n": max_n, "transform": args.transform}
    _emit(args, "design", params, res.to_dict())
    _say(f"n per group = {res.n_per_group} ({res.method})")
    return 0


def cmd_reproduce(args):
    if args.target not in TARGETS:
        raise ParameterError(f"target must be one of {', '.join(TARGETS)}, got {args.target!r}")
    rep = reproduce(args.target, fast=args.fast, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"reproduce_{args.target}{'_fast' if args.fast else ''}"
    (out_dir / f"{stem}.csv").write_text(rep.to_csv(), encoding="utf-8")
    md = rep.to_markdown()
    (out_dir / f"{stem}.md").write_text(md, encoding="utf-8")
    sys.stdout.write(md)
    n_fail = sum(not r.ok for r in rep.rows)
    _say(f"{len(rep.rows) - n_fail}/{len(rep.rows)} cells within tolerance; report in {out_dir / stem}.{{csv,md}}")
    return 0 if n_fail == 0 else 1


def cmd_dataset(args):
    if args.list or not args.name:
        sys.stdout.write("\n".join(datasets.NAMES) + "\n")
        return 0
    data = datasets.load(args.name)
    if args.dump:
        text = dump_group_csv(data)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    summary = {
        "name": args.name, "n1": data.n1, "n2": data.n2,
        "mean_a": float(np.mean(data.sample_a)), "mean_b": float(np.mean(data.sample_b)),
        "sd_a": float(np.std(data.sample_a, ddof=1)), "sd_b": float(np.std(data.sample_b, ddof=1)),
    }
    _emit(args, "dataset", {"name": args.name}, summary, {"builtin": args.name})
    return 0


# ---------------------------------------------------------------- parser

def _add_data_flags(p):
    p.add_argument("--data", help="CSV with columns group,value (groups 1 and 2; header optional)")
    p.add_argument("--data1", help="one-column file for sample a")
    p.add_argument("--data2", help="one-column file for sample b")
    p.add_argument("--builtin", choices=datasets.NAMES, help="built-in dataset")


def _add_margin_flags(p):
    p.add_argument("--eps-lower", type=float, help="lower margin (observation units); 'inf' disables")
    p.add_argument("--eps-upper", type=float, help="upper margin (observation units); 'inf' disables")
    p.add_argument("--alpha", type=float, default=0.05, help="nominal global level (default 0.05)")


def _add_common(p, seed):
    p.add_argument("--seed", type=int, default=seed, help=f"master seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--threads", type=int, help="cap numba worker threads (results do not change)")


def _add_transform(p):
    p.add_argument("--transform", choices=[k.value for k in TransformKind], default="identity")


def build_parser(seed=DEFAULT_SEED):
    parser = _Parser(prog="iunpc", description="Permutation tests for two-sample equivalence.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("iutest", help="intersection-union test for equivalence")
    _add_data_flags(p)
    _add_margin_flags(p)
    _add_transform(p)
    p.add_argument("--permutations", type=int, default=100_000, help="random permutations R")
    p.add_argument("--exhaustive", action="store_true", help="enumerate all group splits")
    p.add_argument("--calibrate", default="auto", help="auto | naive | fixed=<alpha_c>")
    p.add_argument("--mc", type=int, default=5000, help="calibration Monte Carlo replicates")
    p.add_argument("--mc-permutations", type=int, default=2500, help="permutations per calibration replicate")
    _add_common(p, seed)
    p.set_defaults(func=cmd_iutest)

    p = sub.add_parser("sharp", help="sharp-null permutation or median test")
    _add_data_flags(p)
    p.add_argument("--sidedness", choices=["two_sided", "greater", "less"], default="two_sided")
    p.add_argument("--method", choices=["permutation", "median"], default="permutation")
    p.add_argument("--ties", choices=["below", "above", "mid"], default="below", help="median-test tie rule")
    p.add_argument("--permutations", type=int, default=100_000)
    p.add_argument("--exhaustive", action="store_true")
    _add_common(p, seed)
    p.set_defaults(func=cmd_sharp)

    for name, func, help_ in (("calibrate", cmd_calibrate, "calibrate the partial level alpha_c"),
                              ("power", cmd_power, "simulated rejection rate")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--n1", type=int, required=True)
        p.add_argument("--n2", type=int, required=True)
        _add_margin_flags(p)
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--mc", type=int, default=5000, help="Monte Carlo replicates")
        p.add_argument("--permutations", type=int, default=2500, help="permutations per replicate")
        _add_transform(p)
        _add_common(p, seed)
        p.set_defaults(func=func)
        if name == "calibrate":
            p.add_argument("--boundaries", choices=["auto", "both", "lower", "upper"], default="auto")
        else:
            p.add_argument("--delta", type=float, help="true mean difference (b minus a)")
            p.add_argument("--delta-grid", help="a:b:step; writes a CSV power profile (use --delta-grid=-a:b:step for negative a)")
            p.add_argument("--mode", default="auto", help="auto | naive | fixed=<alpha_c>")

    p = sub.add_parser("design", help="per-group sample size for a target maximal power")
    p.add_argument("--eps", type=float, required=True, help="symmetric margin in units of sigma")
    p.add_argument("--power", type=float, default=0.8)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mc", type=int, default=5000)
    p.add_argument("--permutations", type=int, default=2500)
    p.add_argument("--max-n", type=int, default=10_000)
    p.add_argument("--rule", choices=["simulation", "inverse-square"], default="simulation")
    p.add_argument("--n-at-unit", type=float, default=17.38, help="n at eps=1 for the inverse-square rule")
    _add_transform(p)
    _add_common(p, seed)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("reproduce", help="compare against the published tables")
    p.add_argument("target", help=" | ".join(TARGETS))
    p.add_argument("--fast", action="store_true", help="reduced sizes, widened tolerances")
    p.add_argument("--out-dir", default=".", help="directory for the CSV and markdown report")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("dataset", help="list, describe or dump built-in datasets")
    p.add_argument("--name", choices=datasets.NAMES)
    p.add_argument("--dump", action="store_true", help="write the group,value CSV")
    p.add_argument("--list", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dataset)
    return parser


def main(argv=None):
    try:
        seed = _default_seed()
    except ParameterError as exc:
        print(f"iunpc: error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    parser = build_parser(seed)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        _set_threads(args)
        return args.func(args)
    except DataError as exc:
        print(f"iunpc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TransformDomainError as exc:
        print(f"iunpc: data error: --transform: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ParameterError, EnumerationCapError, DesignError, ValueError) as exc:
        print(f"iunpc: error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
