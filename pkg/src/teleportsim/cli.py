"""Command-line front end.

Examples:
  teleportsim fidelity --eta-c-sq 1/10
  teleportsim scan --sweep cascade_n=1,2,3,4 --eta-c-sq 1 --y-policy no-click
  teleportsim pdc-stats --p 1/100 --n-max 4
  teleportsim verify --filter cascade-ratio
  teleportsim matrix --order 3 --cos 3/5 --sin 4/5

Exit codes: 0 success, 1 failed verification, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .detection import NO_CLICK, TRACE_OUT, CascadeSpec
from .experiment import (
    ConfigError,
    ExperimentConfig,
    IdealState,
    build_output_state,
    f2_threshold,
    fidelity,
    innsbruck_threshold,
    vacuum_signal_ratio,
)
from .pdc import distinguishability_trials, expected_trials, p_poisson, p_pdc_small, statistical_distance_sq
from .scalar import Scalar
from .verification import Perturbation, criterion_status, format_result, run_checks

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

CONFIG_KEYS = ("p1", "p2", "cos_theta", "sin_theta", "eta_u_sq", "eta_v_sq", "eta_c_sq",
               "cascade_n", "y_policy", "order", "mode")
RATIONAL_KEYS = ("p1", "p2", "cos_theta", "sin_theta", "eta_u_sq", "eta_v_sq", "eta_c_sq")
OUTPUT_KEYS = ("fidelity", "vacuum_signal_ratio", "threshold_eta_c_sq", "trace")
DEFAULTS: dict[str, Any] = {
    "p1": Fraction(1, 100), "p2": Fraction(1, 100), "cos_theta": Fraction(1), "sin_theta": Fraction(0),
    "eta_u_sq": Fraction(1), "eta_v_sq": Fraction(1), "eta_c_sq": Fraction(1, 10),
    "cascade_n": 1, "y_policy": TRACE_OUT, "order": 2, "mode": "exact",
}


# -- value parsing -------------------------------------------------------------

def _parse_number(key: str, value: Any, mode: str):
    """Config value to Fraction (exact) or float; floats are refused in exact mode."""
    try:
        if isinstance(value, bool):
            raise TypeError
        if isinstance(value, (list, tuple)):
            num, den = value
            if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool):
                raise TypeError
            q = Fraction(num, den)
            return q if mode == "exact" else float(q)
        if isinstance(value, Fraction):
            return value if mode == "exact" else float(value)
        if isinstance(value, int):
            return Fraction(value) if mode == "exact" else float(value)
        if isinstance(value, float):
            if mode == "exact":
                raise ConfigError(key, f"float {value!r} not allowed in exact mode; give [num, den]")
            return value
        if isinstance(value, str):
            q = Fraction(value.strip())
            return q if mode == "exact" else float(q)
    except ConfigError:
        raise
    except (TypeError, ValueError, ZeroDivisionError):
        pass
    raise ConfigError(key, f"cannot read {value!r} as a number")


def _parse_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got {value!r}") from None
    if isinstance(value, float) and value != out:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return out


def _theta_from_file(raw: dict) -> dict:
    out = {}
    theta = raw.get("theta")
    if "degrees" in raw:
        out["degrees"] = raw["degrees"]
    if isinstance(theta, dict):
        if "degrees" in theta:
            out["degrees"] = theta["degrees"]
        else:
            for part in ("cos", "sin"):
                num, den = theta.get(f"{part}_num"), theta.get(f"{part}_den", 1)
                if num is None:
                    raise ConfigError("theta", f"missing {part}_num")
                out[f"{part}_theta"] = [num, den]
    elif theta is not None:
        raise ConfigError("theta", "expected an object with cos_num/cos_den/sin_num/sin_den or degrees")
    return out


def load_config_file(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    known = set(CONFIG_KEYS) | {"theta", "degrees"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    out = {k: v for k, v in raw.items() if k not in ("theta", "degrees")}
    out.update(_theta_from_file(raw))
    return out


def resolve_settings(file_values: dict, overrides: dict) -> dict:
    """Merge defaults, file and command line (later wins) and type every value."""
    raw = dict(DEFAULTS)
    raw.update(file_values)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    degrees = raw.pop("degrees", None)
    if degrees is not None:
        if "mode" in overrides and overrides["mode"] == "exact":
            raise ConfigError("degrees", "angle in degrees needs float mode")
        raw["mode"] = "float"
    mode = raw["mode"]
    if mode not in ("exact", "float"):
        raise ConfigError("mode", f"must be 'exact' or 'float', got {mode!r}")
    out: dict[str, Any] = {"mode": mode}
    for key in RATIONAL_KEYS:
        out[key] = _parse_number(key, raw[key], mode)
    if degrees is not None:
        try:
            rad = math.radians(float(degrees))
        except (TypeError, ValueError):
            raise ConfigError("degrees", f"cannot read {degrees!r} as an angle") from None
        out["cos_theta"], out["sin_theta"] = math.cos(rad), math.sin(rad)
    out["cascade_n"] = _parse_int("cascade_n", raw["cascade_n"])
    if out["cascade_n"] < 1:
        raise ConfigError("cascade_n", f"need at least one detector, got {out['cascade_n']}")
    out["order"] = _parse_int("order", raw["order"])
    if raw["y_policy"] not in (NO_CLICK, TRACE_OUT):
        raise ConfigError("y_policy", f"must be '{NO_CLICK}' or '{TRACE_OUT}', got {raw['y_policy']!r}")
    out["y_policy"] = raw["y_policy"]
    if not 0 <= out["eta_c_sq"] <= 1:
        raise ConfigError("eta_c_sq", f"efficiency must lie in [0, 1], got {out['eta_c_sq']}")
    return out


def build_config(settings: dict) -> ExperimentConfig:
    cascade = CascadeSpec(settings["cascade_n"], settings["eta_c_sq"], settings["y_policy"])
    return ExperimentConfig(
        p1=settings["p1"], p2=settings["p2"],
        cos_theta=settings["cos_theta"], sin_theta=settings["sin_theta"],
        eta_u_sq=settings["eta_u_sq"], eta_v_sq=settings["eta_v_sq"],
        cascade=cascade, truncation_order=settings["order"], mode=settings["mode"])


# -- rendering ---------------------------------------------------------------------

def exact_text(x) -> str:
    if isinstance(x, float):
        return f"{x:.15g}"
    if isinstance(x, Scalar) and x.is_rational:
        x = x.rational_part
    return str(x)


def decimal_text(x) -> str:
    return f"{float(x):.15g}"


def _row_columns() -> list[str]:
    cols = list(CONFIG_KEYS)
    for key in OUTPUT_KEYS:
        cols += [key, f"{key}_decimal"]
    return cols


def evaluate(settings: dict) -> dict:
    """One result row: the configuration echo followed by the figures of merit."""
    config = build_config(settings)
    od = build_output_state(config, with_cross=False)
    ideal = IdealState.from_config(config)
    if settings["y_policy"] == NO_CLICK:
        threshold = f2_threshold(settings["cascade_n"], config.p1, config.p2)
    else:
        threshold = innsbruck_threshold(config.p1, config.p2)
    values = {
        "fidelity": fidelity(od, ideal),
        "vacuum_signal_ratio": vacuum_signal_ratio(od, ideal),
        "threshold_eta_c_sq": threshold,
        "trace": od.trace(),
    }
    row = {k: exact_text(settings[k]) for k in CONFIG_KEYS}
    for key, value in values.items():
        row[key] = exact_text(value)
        row[f"{key}_decimal"] = decimal_text(value)
    return row


def _safe_evaluate(settings: dict) -> dict:
    try:
        return evaluate(settings)
    except ZeroDivisionError as exc:
        raise ConfigError("p1", f"conditional state is empty: {exc}") from None


def write_rows(rows: Sequence[dict], fmt: str, out) -> None:
    cols = _row_columns()
    if fmt == "json":
        out.write(json.dumps([{c: r[c] for c in cols} for r in rows], indent=2) + "\n")
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r)
    out.write(buf.getvalue())


# -- subcommands ---------------------------------------------------------------

def _settings_from_args(args) -> dict:
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {
        "p1": args.p1, "p2": args.p2, "cos_theta": args.cos, "sin_theta": args.sin,
        "degrees": args.degrees, "eta_u_sq": args.eta_u_sq, "eta_v_sq": args.eta_v_sq,
        "eta_c_sq": args.eta_c_sq, "cascade_n": args.cascade_n, "y_policy": args.y_policy,
        "order": args.order, "mode": args.mode,
    }
    if (args.cos is None) != (args.sin is None):
        raise ConfigError("theta", "give both --cos and --sin")
    if args.degrees is not None and args.cos is not None:
        raise ConfigError("theta", "give either --cos/--sin or --degrees")
    if args.degrees is not None:
        file_values.pop("cos_theta", None)
        file_values.pop("sin_theta", None)
    elif args.cos is not None:
        file_values.pop("degrees", None)
    return resolve_settings(file_values, overrides)


def cmd_fidelity(args, out) -> int:
    settings = _settings_from_args(args)
    write_rows([_safe_evaluate(settings)], args.format, out)
    return EXIT_OK


def _parse_sweep(text: str) -> tuple[str, list[str]]:
    key, sep, values = text.partition("=")
    key = key.strip().replace("-", "_")
    if not sep:
        raise ConfigError("sweep", f"expected KEY=v1,v2,..., got {text!r}")
    aliases = {"theta_degrees": "degrees", "n": "cascade_n"}
    key = aliases.get(key, key)
    if key not in CONFIG_KEYS and key != "degrees":
        raise ConfigError(key, "not a sweepable configuration key")
    items = [v.strip() for v in values.split(",") if v.strip()]
    return key, items


def cmd_scan(args, out) -> int:
    base = _settings_from_args(args)
    key, values = _parse_sweep(args.sweep)
    file_values = load_config_file(args.config) if args.config else {}
    runs = []
    for v in values:
        overrides = {k: base[k] for k in CONFIG_KEYS}
        if key == "degrees":
            overrides.pop("cos_theta")
            overrides.pop("sin_theta")
            overrides["mode"] = "float"
        overrides[key] = v
        merged = {k: val for k, val in file_values.items() if k not in overrides and k != "degrees"}
        runs.append(resolve_settings(merged, overrides))
    if args.jobs > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_safe_evaluate, runs))
    else:
        rows = [_safe_evaluate(s) for s in runs]
    write_rows(rows, args.format, out)
    return EXIT_OK


PDC_COLUMNS = ("n", "p_pdc", "p_poisson", "difference", "ds2", "ds2_times_8_over_p2",
               "distinguishability_trials", "expected_trials")


def cmd_pdc_stats(args, out) -> int:
    try:
        p = Fraction(args.p)
    except (ValueError, ZeroDivisionError):
        raise ConfigError("p", f"cannot read {args.p!r} as a number") from None
    if not 0 < p < 1:
        raise ConfigError("p", f"pair probability must lie in (0, 1), got {p}")
    if args.n_max < 0:
        raise ConfigError("n_max", "must be non-negative")
    pf = float(p)
    ds2 = statistical_distance_sq(p, max(args.n_max, 1))
    summary = {
        "ds2": decimal_text(ds2),
        "ds2_times_8_over_p2": decimal_text(ds2 * 8 / (pf * pf)),
        "distinguishability_trials": exact_text(distinguishability_trials(p)),
        "expected_trials": exact_text(expected_trials(p)),
    }
    rows = []
    for n in range(args.n_max + 1):
        a, b = p_pdc_small(n, pf), p_poisson(n, pf)
        rows.append({"n": str(n), "p_pdc": decimal_text(a), "p_poisson": decimal_text(b),
                     "difference": decimal_text(a - b), **summary})
    if args.format == "json":
        out.write(json.dumps(rows, indent=2) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=PDC_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        out.write(buf.getvalue())
    return EXIT_OK


def _parse_perturbations(items: Sequence[str]) -> Perturbation:
    kwargs = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or key not in Perturbation.__dataclass_fields__:
            raise ConfigError("perturb", f"unknown perturbation {item!r}")
        kwargs[key] = _parse_int(key, value)
    return Perturbation(**kwargs)


def cmd_verify(args, out) -> int:
    pert = _parse_perturbations(args.perturb)
    results = run_checks(args.filter, pert, jobs=args.jobs)
    if not results:
        raise ConfigError("filter", f"no checks match {args.filter!r}")
    for r in results:
        out.write(format_result(r) + "\n")
    status = criterion_status(results)
    passed = sum(status.values())
    out.write(f"{passed}/{len(status)} criteria passed; "
              f"{sum(r.passed for r in results)}/{len(results)} checks passed\n")
    return EXIT_OK if all(status.values()) else EXIT_FAIL


def _occupations(b) -> list[int]:
    occ = dict(b)
    return [occ.get("d_x", 0), occ.get("d_y", 0)]


def _parts(x) -> list[str]:
    if isinstance(x, float):
        return [f"{x:.17g}", "0"]
    if isinstance(x, Scalar):
        return [str(x.rational_part), str(x.radical_part)]
    return [str(Fraction(x)), "0"]


def matrix_document(settings: dict) -> dict:
    config = build_config(settings)
    od = build_output_state(config, with_cross=False)
    blocks = {}
    for (i, j), block in sorted(od.blocks.items()):
        entries = []
        for (k, b) in sorted(block.entries, key=lambda kb: (_occupations(kb[0]), _occupations(kb[1]))):
            entries.append([_occupations(k), _occupations(b), *_parts(block.normalized_entry(k, b))])
        blocks[f"({i},{j})"] = entries
    return {
        "config": {k: exact_text(settings[k]) for k in CONFIG_KEYS},
        "basis": "normalized Fock states on (d_x, d_y)",
        "blocks": blocks,
    }


def cmd_matrix(args, out) -> int:
    doc = matrix_document(_settings_from_args(args))
    out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment configuration")
    g.add_argument("--config", metavar="FILE", help="JSON configuration file; flags override it")
    g.add_argument("--p1", help="state-preparation pair probability, e.g. 1/100")
    g.add_argument("--p2", help="entanglement-source pair probability")
    g.add_argument("--cos", help="cosine of the polarisation angle (with --sin)")
    g.add_argument("--sin", help="sine of the polarisation angle (with --cos)")
    g.add_argument("--degrees", help="polarisation angle in degrees (forces float mode)")
    g.add_argument("--eta-u-sq", dest="eta_u_sq", help="efficiency of the u detector")
    g.add_argument("--eta-v-sq", dest="eta_v_sq", help="efficiency of the v detector")
    g.add_argument("--eta-c-sq", dest="eta_c_sq", help="efficiency of each cascade detector")
    g.add_argument("--cascade-n", dest="cascade_n", help="detectors in the cascade")
    g.add_argument("--y-policy", dest="y_policy", choices=(NO_CLICK, TRACE_OUT))
    g.add_argument("--order", help="truncation order (2 or 3)")
    g.add_argument("--mode", choices=("exact", "float"))
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teleportsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", help="evaluate one configuration")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("scan", help="sweep one configuration key")
    _add_config_flags(p)
    p.add_argument("--sweep", required=True, metavar="KEY=V1,V2,...")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("pdc-stats", help="pair-number statistics against Poisson")
    p.add_argument("--p", default="1/100", help="pair probability")
    p.add_argument("--n-max", dest="n_max", type=int, default=4)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_pdc_stats)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--filter", help="only criteria whose tag, description or id (e.g. c1) matches")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--perturb", action="append", metavar="KEY=VALUE", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("matrix", help="dump the order-tagged density matrix as JSON")
    _add_config_flags(p)
    p.set_defaults(func=cmd_matrix)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
