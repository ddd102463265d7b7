"""Command-line interface.

Exit codes: 0 success, 1 fatal error (or a failed invariance check),
2 simulation finished with missing estimator cells.  Diagnostics go to
stderr, data to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import ridge_cv, ridge_path
from .errors import FVSError, InputError, RegimeError
from .linalg import DesignMatrix
from .probability import RngStream
from .shrinkage import fit_fvs
from .simhub import (SimulationScenario, generate, random_rotation, recode_categorical,
                     reference_dummies, risk_curve, run_replications)
from .tuning import (Method, TuningResult, alpha_schedule, cv_gamma, gamma_bar,
                     select_f_ratio)

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
METHODS = ("auto", "f-ratio", "f-ratio-q90", "f-ratio-q95", "cv", "bar", "bar-corrected")
INVARIANCE_TOL = 1e-7


# --- dataset loading ---------------------------------------------------------

@dataclass
class DatasetSpec:
    csv_path: str
    response: str
    categorical: dict = field(default_factory=dict)  # name -> reference level
    interactions: list = field(default_factory=list)  # (a, b) pairs


@dataclass
class Dataset:
    x: DesignMatrix
    y: np.ndarray
    names: list[str]


def parse_categorical(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--categorical {item!r}: a reference level is required "
                             f"(NAME=REF); coding without a reference level is not "
                             f"supported because it is collinear with the intercept")
        name, ref = item.split("=", 1)
        out[name.strip()] = ref.strip()
    return out


def parse_interactions(items) -> list:
    out = []
    for item in items or []:
        parts = item.split(":")
        if len(parts) != 2 or not all(parts):
            raise InputError(f"--interaction {item!r}: expected A:B")
        out.append((parts[0].strip(), parts[1].strip()))
    return out


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file (a header row is required)")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names in header")
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise InputError(f"{path}: row {i + 2} has {len(r)} fields, expected {len(header)}")
    return header, body


def _numeric(path, header, body, j) -> np.ndarray:
    out = np.empty(len(body))
    for i, r in enumerate(body):
        try:
            out[i] = float(r[j])
        except ValueError:
            raise InputError(f"{path}: cannot parse {r[j]!r} as a number at row {i + 2}, "
                             f"column {header[j]!r}") from None
        if not math.isfinite(out[i]):
            raise InputError(f"{path}: non-finite value at row {i + 2}, column {header[j]!r}")
    return out


def _level_key(level: str):
    try:
        return (0, float(level), level)
    except ValueError:
        return (1, 0.0, level)


def load_dataset(spec: DatasetSpec) -> Dataset:
    """Build ``[1 | numeric | reference-coded dummies | interactions]``."""
    header, body = _read_csv(spec.csv_path)
    if spec.response not in header:
        raise InputError(f"response column {spec.response!r} not found in header")
    for name in list(spec.categorical) + [c for pair in spec.interactions for c in pair]:
        if name not in header:
            raise InputError(f"column {name!r} not found in header")
        if name == spec.response:
            raise InputError(f"response column {name!r} cannot be used as a predictor")
    if len(body) < 2:
        raise InputError("need at least two data rows")
    y = _numeric(spec.csv_path, header, body, header.index(spec.response))

    blocks: dict[str, tuple[np.ndarray, list[str]]] = {}
    for j, name in enumerate(header):
        if name == spec.response:
            continue
        if name in spec.categorical:
            codes = np.array([r[j].strip() for r in body])
            levels = sorted(set(codes), key=_level_key)
            ref = spec.categorical[name]
            if ref not in levels:
                raise InputError(f"reference level {ref!r} of {name!r} is not observed; "
                                 f"levels are {levels}")
            if len(levels) < 2:
                raise InputError(f"categorical column {name!r} has a single level")
            cols = reference_dummies(codes, levels, ref)
            blocks[name] = (cols, [f"{name}={lev}" for lev in levels if lev != ref])
        else:
            blocks[name] = (_numeric(spec.csv_path, header, body, j)[:, None], [name])

    mats = [np.ones((len(body), 1))]
    names = ["(Intercept)"]
    for cols, labels in blocks.values():
        mats.append(cols)
        names.extend(labels)
    for a, b in spec.interactions:
        ca, la = blocks[a]
        cb, lb = blocks[b]
        for i in range(ca.shape[1]):
            for k in range(cb.shape[1]):
                mats.append((ca[:, i] * cb[:, k])[:, None])
                names.append(f"{la[i]}:{lb[k]}")
    return Dataset(DesignMatrix(np.hstack(mats)), y, names)


# --- helpers ------------------------------------------------------------------

def resolve_seed(seed: Optional[int], default: int = 0) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("FVS_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise InputError(f"FVS_SEED must be an integer, got {env!r}") from None
    return default


def _is_constant(y: np.ndarray) -> bool:
    return float(np.ptp(y)) <= 1e-13 * max(1.0, float(np.max(np.abs(y))))


def tune(x: DesignMatrix, y: np.ndarray, method: str, alpha_t: Optional[float],
         folds: int, seed: int) -> TuningResult:
    """Dispatch a CLI method name onto the tuning library."""
    if method == "auto":
        method = "f-ratio" if x.n > x.rank else "bar-corrected"
    if method.startswith("f-ratio"):
        if x.n <= x.rank:
            raise RegimeError(f"{method} needs n > rank(X) (n={x.n}, rank={x.rank}); the "
                              f"error variance cannot be estimated from residuals here. "
                              f"Use --method bar or --method bar-corrected")
        level = {"f-ratio": None, "f-ratio-q90": "q90", "f-ratio-q95": "q95"}[method]
        return select_f_ratio(x, y, level)
    if method == "cv":
        return cv_gamma(x, y, folds=folds, rng=RngStream(seed))
    if method in ("bar", "bar-corrected"):
        corrected = method == "bar-corrected"
        t = alpha_t if alpha_t is not None else (1.5 if corrected else 1.0)
        kind = Method.HIGHDIM_BAR_CORRECTED if corrected else Method.HIGHDIM_BAR
        if _is_constant(y):
            return TuningResult(0.0, kind, extras={"constant_response": True, "alpha_t": t})
        res = gamma_bar(x, y, alpha_schedule(t, y), corrected=corrected)
        return TuningResult(res.gamma, res.method, res.f_stat, res.sigma2_estimate,
                            res.alpha, res.clamped, {**res.extras, "alpha_t": t})
    raise InputError(f"unknown method {method!r}")


def _dump(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        return str(o)
    return json.dumps(obj, indent=2, default=default)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _dataset_from_args(args) -> Dataset:
    return load_dataset(DatasetSpec(args.csv, args.response,
                                    parse_categorical(args.categorical),
                                    parse_interactions(args.interaction)))


# --- subcommands -----------------------------------------------------------------

def cmd_fit(args) -> int:
    data = _dataset_from_args(args)
    seed = resolve_seed(args.seed)
    if args.gamma == "auto":
        result = tune(data.x, data.y, args.method, args.alpha_t, args.folds, seed)
        gamma = result.gamma
        info = result.to_dict()
    else:
        try:
            gamma = float(args.gamma)
        except ValueError:
            raise InputError(f"--gamma must be a number in [0, 1] or 'auto', "
                             f"got {args.gamma!r}") from None
        info = {"gamma": gamma, "method": "fixed"}
    fit = fit_fvs(data.x, data.y, gamma)
    summary = {**info, "gamma": fit.gamma, "rank": fit.rank, "n": data.x.n, "p": data.x.p,
               "sigma_hat2": fit.sigma_hat2}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "coefficients.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term", "coefficient"])
            for name, b in zip(data.names, fit.coefficients):
                w.writerow([name, _fmt(b)])
        with open(out / "fitted.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "y", "fitted"])
            for i, (yi, fi) in enumerate(zip(data.y, fit.fitted)):
                w.writerow([i, _fmt(yi), _fmt(fi)])
        (out / "summary.json").write_text(_dump(summary) + "\n", encoding="utf-8")
    print(_dump(summary))
    return EXIT_OK


def cmd_tune(args) -> int:
    data = _dataset_from_args(args)
    result = tune(data.x, data.y, args.method, args.alpha_t, args.folds,
                  resolve_seed(args.seed))
    print(_dump(result.to_dict()))
    return EXIT_OK


def _load_scenario(path: str) -> SimulationScenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc}") from exc
    return SimulationScenario.from_json(text)


def _write(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args.config)
    flagged = scenario.extrapolated()
    if flagged:
        print(f"note: extrapolated scenario parameters: {', '.join(flagged)}",
              file=sys.stderr)
    seed = resolve_seed(args.seed, scenario.seed)
    report = run_replications(scenario, seed=seed, workers=args.workers)
    _write(report.to_csv(), args.out)
    if args.per_replication:
        Path(args.per_replication).write_text(report.per_replication_csv(), encoding="utf-8")
    if report.failures:
        for r, name, msg in report.failures:
            print(f"replication {r}, estimator {name}: {msg}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_curve(args) -> int:
    scenario = _load_scenario(args.config)
    curve = risk_curve(scenario, seed=resolve_seed(args.seed, scenario.seed))
    _write(curve.to_csv(), args.out)
    return EXIT_OK


def _ridge_fit(x, y, lam: float) -> np.ndarray:
    return ridge_path(x, y, [lam], standardize=True).fitted[0]


def invariance_report(x1: DesignMatrix, x2: DesignMatrix, y: np.ndarray, seed: int,
                      folds: int = 10) -> dict:
    """FVS and ridge fitted-value discrepancies between two codings of one design.

    Ridge uses the standardized fit at the ``lambda`` selected by
    cross-validation on the first coding, so only the coding differs.
    """
    scale = float(np.max(np.abs(y)))
    fvs = max(float(np.max(np.abs(fit_fvs(x1, y, g).fitted - fit_fvs(x2, y, g).fitted)))
              for g in (0.0, 0.25, 0.5, 0.75, 1.0))
    lam, _, _ = ridge_cv(x1, y, folds=folds, rng=RngStream(seed))
    r1, r2 = _ridge_fit(x1, y, lam), _ridge_fit(x2, y, lam)
    ridge = float(np.max(np.abs(r1 - r2)))
    return {"fvs_max_abs_diff": fvs, "ridge_max_abs_diff": ridge,
            "ridge_relative_diff": ridge / max(float(np.max(np.abs(r1))), 1e-300),
            "ridge_lambda": lam, "scale": scale,
            "fvs_invariant": fvs <= INVARIANCE_TOL * max(scale, 1.0)}


def _recode_dataset(spec: DatasetSpec) -> DatasetSpec:
    """Move every categorical reference to the next observed level."""
    header, body = _read_csv(spec.csv_path)
    new = {}
    for name, ref in spec.categorical.items():
        j = header.index(name)
        levels = sorted({r[j].strip() for r in body}, key=_level_key)
        new[name] = levels[(levels.index(ref) + 1) % len(levels)] if ref in levels else ref
    return DatasetSpec(spec.csv_path, spec.response, new, spec.interactions)


def cmd_invariance_check(args) -> int:
    seed = resolve_seed(args.seed)
    if (args.config is None) == (args.csv is None):
        raise InputError("give exactly one of --config or a CSV dataset")
    if args.config:
        scenario = _load_scenario(args.config)
        inst = generate(scenario, RngStream(seed).child(0))
        x1, y = inst.x, inst.y
        if args.transform == "recoding":
            if scenario.family != "categorical":
                raise InputError("recoding applies to the categorical family; use "
                                 "--transform gram-schmidt-rotation")
            x2 = recode_categorical(inst, 2 if inst.meta["coding"] == 1 else 1).x
        elif args.transform == "identity":
            x2 = x1
        else:
            x2 = x1.transform(random_rotation(x1.p, RngStream(seed).child(1)),
                              require_intercept=True)
    else:
        if args.response is None:
            raise InputError("--response is required with a CSV dataset")
        spec = DatasetSpec(args.csv, args.response, parse_categorical(args.categorical),
                           parse_interactions(args.interaction))
        data = load_dataset(spec)
        x1, y = data.x, data.y
        if args.transform == "recoding":
            if not spec.categorical:
                raise InputError("recoding needs at least one --categorical column")
            x2 = load_dataset(_recode_dataset(spec)).x
        elif args.transform == "identity":
            x2 = x1
        else:
            x2 = x1.transform(random_rotation(x1.p, RngStream(seed).child(1)),
                              require_intercept=True)
    report = invariance_report(x1, x2, y, seed, folds=args.folds)
    report["transform"] = args.transform
    print(_dump(report))
    return EXIT_OK if report["fvs_invariant"] else EXIT_FATAL


# --- argument parsing ----------------------------------------------------------

def _add_dataset_args(p, required=True):
    p.add_argument("csv", nargs=None if required else "?", help="input CSV with a header row")
    p.add_argument("--response", required=required, help="response column name")
    p.add_argument("--categorical", action="append", metavar="NAME=REF",
                   help="reference-coded categorical column (repeatable)")
    p.add_argument("--interaction", action="append", metavar="A:B",
                   help="product of two columns (repeatable)")


def _add_tuning_args(p, default_method):
    p.add_argument("--method", choices=METHODS, default=default_method)
    p.add_argument("--alpha-t", type=float, default=None,
                   help="exponent t in alpha = n^t / (2 ||y - ybar||^2); "
                        "default 1 for bar, 1.5 for bar-corrected")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (falls back to $FVS_SEED, then 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fvshrink",
                                     description="Fitted-value shrinkage regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit FVS on a CSV dataset")
    _add_dataset_args(p)
    p.add_argument("--gamma", default="auto", help="weight in [0, 1] or 'auto'")
    _add_tuning_args(p, "auto")
    p.add_argument("--out", help="directory for coefficients.csv, fitted.csv, summary.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tune", help="select gamma and print diagnostics as JSON")
    _add_dataset_args(p)
    _add_tuning_args(p, "auto")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", help="run a simulation scenario from JSON")
    p.add_argument("config")
    p.add_argument("--out", help="summary CSV path (default stdout)")
    p.add_argument("--per-replication", help="optional per-replication CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("curve", help="FVS and ridge loss as functions of lambda")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("invariance-check",
                       help="compare fitted values across two codings of a design")
    _add_dataset_args(p, required=False)
    p.add_argument("--config", help="scenario JSON (instead of a CSV dataset)")
    p.add_argument("--transform", choices=("recoding", "gram-schmidt-rotation", "identity"),
                   default="gram-schmidt-rotation")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_invariance_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FVSError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
