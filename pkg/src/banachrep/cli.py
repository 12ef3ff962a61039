"""Command-line front-end for the solvers.

Verbs: fit-kernel, fit-multikernel, fit-dict, fit-spline, fit-mixed,
dual, verify.  Configuration comes from an optional TOML file plus flag
overrides (flags win).  Data files are CSV with a header row for
regression tasks (columns x1..xd, y) and plain numeric CSV for matrices.
Results are written as a JSON document with a fixed field layout and all
floats rendered at 17 significant digits, which round-trips float64
exactly.

Exit codes: 0 success, 2 configuration/input error, 3 solver
non-convergence (outputs still written with diagnostics), 4 verification
suite failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .dictionary import (
    DictionaryProblem,
    solve_dictionary_problem,
    solve_mixed_two_component,
)
from .kernels import (
    Gaussian,
    KernelModel,
    Laplacian,
    Linear,
    Polynomial,
    predict_components,
    predict_many,
)
from .multikernel import (
    L1Outer,
    MultiKernelProblem,
    WeightedL2Outer,
    component_norms,
    fit_l1_multikernel,
    fit_weighted_l2,
    multikernel_objective,
)
from .norms import (
    Composite,
    Lp,
    Transformed,
    WeightedEuclidean,
    dual_norm_eval,
    duality_map,
    is_conjugate_pair,
    norm_eval,
)
from .splines import fit_gtv_spline
from .suites import run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_VERIFY = 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """A resolved task invocation: verb plus merged parameters (flags win)."""

    task: str
    params: dict = field(default_factory=dict)

    @property
    def input_path(self):
        return self.params.get("input")

    @property
    def output_path(self):
        return self.params.get("output")


# ----------------------------------------------------------------------
# deterministic output rendering


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


def render_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {render_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rendered = [render_json(v, indent + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(rendered) + "]"
        items = [f"{pad}  {r}" for r in rendered]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if obj is None:
        return "null"
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_output(path: str, doc: dict) -> None:
    text = render_json(doc) + "\n"
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_csv_columns(path: str, header, columns) -> None:
    columns = [np.asarray(c) for c in columns]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(columns[0].size):
            fh.write(",".join(format_float(c[i]) for c in columns) + "\n")


# ----------------------------------------------------------------------
# input parsing


def _parse_row(path: str, line_no: int, row, expected: int):
    if len(row) != expected:
        raise ConfigError(f"{path} line {line_no}: expected {expected} fields, "
                          f"got {len(row)}")
    try:
        return [float(v) for v in row]
    except ValueError as exc:
        raise ConfigError(f"{path} line {line_no}: {exc}") from None


def read_regression_csv(path: str):
    """Header row required; all but the last column are features."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    with fh:
        reader = csv.reader(fh)
        rows = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(reader)
                if any(c.strip() for c in row)]
    if len(rows) < 2:
        raise ConfigError(f"{path}: need a header row and at least one data row")
    header = rows[0][1]
    if len(header) < 2:
        raise ConfigError(f"{path}: need at least one feature column and one target")
    data = [_parse_row(path, line_no, row, len(header)) for line_no, row in rows[1:]]
    arr = np.asarray(data, dtype=float)
    return arr[:, :-1], arr[:, -1]


def read_matrix_csv(path: str) -> np.ndarray:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    with fh:
        reader = csv.reader(fh)
        rows = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(reader)
                if any(c.strip() for c in row)]
    if not rows:
        raise ConfigError(f"{path}: empty matrix file")
    width = len(rows[0][1])
    data = [_parse_row(path, line_no, row, width) for line_no, row in rows]
    return np.asarray(data, dtype=float)


def parse_number_list(text: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in str(text).split(",") if v.strip() != ""])
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}: {exc}") from None


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def named_transform(spec, n: int, index: int) -> np.ndarray:
    """Resolve a transform given as a name, a CSV path, or an inline matrix."""
    if isinstance(spec, str):
        if spec == "identity":
            return np.eye(n)
        if spec in ("diff", "difference"):
            return np.eye(n) - np.eye(n, k=-1)
        if spec == "diff2":
            d = np.eye(n) - np.eye(n, k=-1)
            return d @ d
        L = read_matrix_csv(spec)
    else:
        L = np.asarray(spec, dtype=float)
    if L.shape != (n, n):
        raise ConfigError(f"transform {index} must be {n} x {n}, got {L.shape}")
    if np.linalg.cond(L) > 1e12:
        raise ConfigError(f"transform {index} singular")
    return L


def kernel_from_dict(d: dict):
    family = str(d.get("family", "gaussian")).lower()
    if family == "gaussian":
        return Gaussian(float(d.get("width", 1.0)))
    if family == "laplacian":
        return Laplacian(float(d.get("scale", 1.0)))
    if family == "polynomial":
        return Polynomial(int(d.get("degree", 2)), float(d.get("offset", 0.0)))
    if family == "linear":
        return Linear()
    raise ConfigError(f"unknown kernel family {family!r}")


def norm_spec_from_dict(d: dict):
    kind = str(d.get("kind", "lp")).lower()
    if kind == "lp":
        p = d.get("p", 2)
        p = float("inf") if str(p) in ("inf", "Infinity") else float(p)
        dim = d.get("dim")
        return Lp(p, None if dim is None else int(dim))
    if kind in ("weighted", "weighted_euclidean"):
        return WeightedEuclidean(np.asarray(d["weights"], dtype=float))
    if kind == "transformed":
        base = norm_spec_from_dict(d.get("base", {"kind": "lp", "p": 2}))
        t = d["transform"]
        L = read_matrix_csv(t) if isinstance(t, str) else np.asarray(t, dtype=float)
        return Transformed(base, L)
    if kind == "composite":
        comps = tuple(norm_spec_from_dict(c) for c in d["components"])
        return Composite(comps, norm_spec_from_dict(d["outer"]))
    raise ConfigError(f"unknown norm kind {kind!r}")


# ----------------------------------------------------------------------
# output document assembly


def output_doc(task: str, config_echo: dict, coefficients, support, objective,
               kkt_residual, conjugacy_gaps, extras: dict, started: float) -> dict:
    return {
        "task": task,
        "config_echo": config_echo,
        "coefficients": np.asarray(coefficients, dtype=float),
        "support": [int(i) for i in support],
        "objective": float(objective),
        "certificates": {
            "kkt_residual": None if kkt_residual is None else float(kkt_residual),
            "conjugacy_gaps": conjugacy_gaps,
        },
        "extras": extras,
        "timing_ms": float((time.perf_counter() - started) * 1000.0),
    }


def _require(params: dict, key: str, task: str):
    value = params.get(key)
    if value is None:
        raise ConfigError(f"{task}: missing required parameter '{key}'")
    return value


def _positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def emit_kernel_grid(model: KernelModel, grid_spec, path: str) -> None:
    """CSV with x, f(x) and per-kernel contribution columns on a 1-d grid."""
    if model.centers.shape[1] != 1:
        raise ConfigError("prediction grids are only emitted for 1-d inputs")
    start, stop, num = grid_spec
    xs = np.linspace(start, stop, num)
    grid = xs[:, None]
    total = predict_many(model, grid)
    parts = predict_components(model, grid)
    header = ["x", "f"] + [f"f_{n + 1}" for n in range(parts.shape[1])]
    write_csv_columns(path, header, [xs, total] + [parts[:, n] for n in range(parts.shape[1])])


# ----------------------------------------------------------------------
# task handlers (each returns an exit code)


def run_fit_kernel(params: dict, started: float) -> int:
    X, y = read_regression_csv(_require(params, "input", "fit-kernel"))
    lam = _positive(_require(params, "lambda", "fit-kernel"), "lambda")
    kernel = kernel_from_dict(params)
    problem = MultiKernelProblem(X, y, [kernel], WeightedL2Outer([lam]))
    model = fit_weighted_l2(problem)
    doc = output_doc(
        "fit-kernel", _echo(params), model.coefficients,
        np.flatnonzero(model.coefficients), multikernel_objective(model, problem),
        model.diagnostics.grad_norm, None,
        {"combo_weights": model.combo_weights,
         "predictions": predict_many(model, X)},
        started,
    )
    write_output(_require(params, "output", "fit-kernel"), doc)
    _maybe_emit_grid(params, model, X)
    return EXIT_OK


def run_fit_multikernel(params: dict, started: float) -> int:
    X, y = read_regression_csv(_require(params, "input", "fit-multikernel"))
    kernel_dicts = params.get("kernels") or []
    if not kernel_dicts:
        raise ConfigError("fit-multikernel: provide [[kernels]] in the config file")
    kernels = [kernel_from_dict(d) for d in kernel_dicts]
    outer_kind = str(params.get("outer", "weighted_l2")).lower()
    if outer_kind == "l1":
        lam = _positive(_require(params, "lambda", "fit-multikernel"), "lambda")
        problem = MultiKernelProblem(X, y, kernels, L1Outer(lam))
        model = fit_l1_multikernel(problem,
                                   max_iter=int(params.get("max_iter", 5000)),
                                   tol=float(params.get("tol", 1e-8)),
                                   seed=int(params.get("seed", 0)))
        gaps = None
    elif outer_kind == "weighted_l2":
        lambdas = params.get("lambdas")
        if lambdas is None:
            raise ConfigError("fit-multikernel: weighted_l2 needs 'lambdas'")
        lambdas = np.asarray(lambdas, dtype=float)
        problem = MultiKernelProblem(X, y, kernels, WeightedL2Outer(lambdas))
        model = fit_weighted_l2(problem)
        norms = component_norms(model, problem)
        ystar = duality_map(norms, WeightedEuclidean(lambdas)) if norms.any() else norms
        gaps = {"alpha_ratio": float(np.max(np.abs(
            model.combo_weights * ystar - norms))) if norms.any() else 0.0}
    else:
        raise ConfigError(f"unknown outer penalty {outer_kind!r}")
    diag = model.diagnostics
    doc = output_doc(
        "fit-multikernel", _echo(params), model.coefficients,
        np.flatnonzero(model.coefficients), multikernel_objective(model, problem),
        diag.grad_norm if outer_kind == "weighted_l2" else None, gaps,
        {"combo_weights": model.combo_weights,
         "component_norms": component_norms(model, problem),
         "converged": diag.converged,
         "iterations": diag.n_iter},
        started,
    )
    write_output(_require(params, "output", "fit-multikernel"), doc)
    _maybe_emit_grid(params, model, X)
    return EXIT_OK if diag.converged else EXIT_NONCONVERGED


def run_fit_dict(params: dict, started: float) -> int:
    H = read_matrix_csv(_require(params, "matrix", "fit-dict"))
    y = _read_targets(_require(params, "input", "fit-dict"), H.shape[0])
    names = params.get("transforms")
    if not names:
        raise ConfigError("fit-dict: provide 'transforms' (names or CSV paths)")
    if isinstance(names, str):
        names = [v.strip() for v in names.split(",") if v.strip()]
    transforms = [named_transform(t, H.shape[1], i + 1) for i, t in enumerate(names)]
    lam = _positive(_require(params, "lambda", "fit-dict"), "lambda")
    problem = DictionaryProblem(H, y, transforms, lam)
    sol = solve_dictionary_problem(problem,
                                   max_iter=int(params.get("max_iter", 20000)),
                                   tol=float(params.get("tol", 1e-6)))
    doc = output_doc(
        "fit-dict", _echo(params), sol.coefficients, sol.support, sol.objective,
        sol.kkt_residual, None,
        {"components": [np.asarray(x) for x in sol.components],
         "converged": sol.converged,
         "iterations": sol.n_iter},
        started,
    )
    write_output(_require(params, "output", "fit-dict"), doc)
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def run_fit_mixed(params: dict, started: float) -> int:
    H = read_matrix_csv(_require(params, "matrix", "fit-mixed"))
    y = _read_targets(_require(params, "input", "fit-mixed"), H.shape[0])
    n = H.shape[1]
    L1 = named_transform(params.get("transform1", "identity"), n, 1)
    L2 = named_transform(params.get("transform2", "identity"), n, 2)
    lam1 = _positive(_require(params, "lambda1", "fit-mixed"), "lambda1")
    lam2 = _positive(_require(params, "lambda2", "fit-mixed"), "lambda2")
    fit = solve_mixed_two_component(H, L1, L2, y, lam1, lam2,
                                    max_iter=int(params.get("max_iter", 20000)),
                                    tol=float(params.get("tol", 1e-6)))
    doc = output_doc(
        "fit-mixed", _echo(params), fit.c1, np.flatnonzero(fit.c1), fit.objective,
        fit.kkt_residual, None,
        {"x1": fit.x1, "x2": fit.x2, "converged": fit.converged,
         "iterations": fit.n_iter},
        started,
    )
    write_output(_require(params, "output", "fit-mixed"), doc)
    return EXIT_OK if fit.converged else EXIT_NONCONVERGED


def run_fit_spline(params: dict, started: float) -> int:
    X, y = read_regression_csv(_require(params, "input", "fit-spline"))
    if X.shape[1] != 1:
        raise ConfigError("fit-spline expects a single feature column x")
    x = X[:, 0]
    grid_size = int(params.get("grid", 200))
    if grid_size < 4:
        raise ConfigError("grid must have at least 4 points")
    lam = _positive(_require(params, "lambda", "fit-spline"), "lambda")
    operator = str(params.get("operator", "D"))
    lo, hi = float(np.min(x)), float(np.max(x))
    span = hi - lo if hi > lo else 1.0
    idx = np.rint((x - lo) / span * (grid_size - 1)).astype(int)
    fit = fit_gtv_spline(grid_size, idx, y, operator, lam,
                         max_iter=int(params.get("max_iter", 20000)),
                         tol=float(params.get("tol", 1e-6)))
    positions = np.linspace(lo, lo + span, grid_size)
    doc = output_doc(
        "fit-spline", _echo(params), fit.innovation, fit.knots, fit.objective,
        fit.kkt_residual, None,
        {"knots": [int(k) for k in fit.knots],
         "null_coeffs": fit.null_coeffs,
         "innovation": fit.innovation,
         "values": fit.values,
         "knot_positions": positions[np.minimum(fit.knots + 1, grid_size - 1)],
         "converged": fit.converged,
         "iterations": fit.n_iter},
        started,
    )
    write_output(_require(params, "output", "fit-spline"), doc)
    grid_out = params.get("grid_out")
    if grid_out:
        write_csv_columns(grid_out, ["x", "f"], [positions, fit.values])
    return EXIT_OK if fit.converged else EXIT_NONCONVERGED


def run_dual(params: dict, started: float) -> int:
    vec = params.get("vector")
    if vec is None:
        raise ConfigError("dual: missing required parameter 'vector'")
    x = parse_number_list(vec) if isinstance(vec, str) else np.asarray(vec, dtype=float)
    if params.get("norm") is not None:
        spec = norm_spec_from_dict(params["norm"])
    elif params.get("weights") is not None:
        w = params["weights"]
        spec = WeightedEuclidean(parse_number_list(w) if isinstance(w, str)
                                 else np.asarray(w, dtype=float))
    else:
        p = params.get("p", 2)
        spec = Lp(float("inf") if str(p) == "inf" else float(p))
    try:
        primal = norm_eval(x, spec)
        dual = dual_norm_eval(x, spec)
        conj = duality_map(x, spec)
        report = is_conjugate_pair(x, conj, spec, tol=float(params.get("tol", 1e-10)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    doc = output_doc(
        "dual", _echo(params), conj, np.flatnonzero(conj), primal,
        None,
        {"norm_gap": report.norm_gap, "pairing_gap": report.pairing_gap,
         "is_conjugate": report.is_conjugate},
        {"norm": primal, "dual_norm": dual, "pairing": report.pairing},
        started,
    )
    write_output(_require(params, "output", "dual"), doc)
    return EXIT_OK


def run_verify(params: dict, started: float) -> int:
    suite = str(params.get("suite", "all"))
    trials = int(params.get("trials", 200))
    seed = int(params.get("seed", 0))
    try:
        results = run_suite(suite, trials, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    all_ok = True
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{r.name}: {r.passed}/{r.total} {status}")
        all_ok = all_ok and r.ok
    out = params.get("output")
    if out:
        doc = output_doc(
            "verify", _echo(params), [], [], float(sum(r.passed for r in results)),
            None, None,
            {"results": [{"name": r.name, "passed": r.passed, "total": r.total,
                          "ok": r.ok} for r in results]},
            started,
        )
        write_output(out, doc)
    return EXIT_OK if all_ok else EXIT_VERIFY


def _read_targets(path: str, expected: int) -> np.ndarray:
    """Single-column CSV (header row) of observations."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    with fh:
        reader = csv.reader(fh)
        rows = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(reader)
                if any(c.strip() for c in row)]
    if len(rows) < 2:
        raise ConfigError(f"{path}: need a header row and at least one data row")
    data = [_parse_row(path, line_no, row, 1) for line_no, row in rows[1:]]
    y = np.asarray(data, dtype=float).reshape(-1)
    if y.size != expected:
        raise ConfigError(f"{path}: expected {expected} observations, got {y.size}")
    return y


def _maybe_emit_grid(params: dict, model: KernelModel, X: np.ndarray) -> None:
    grid_out = params.get("grid_out")
    if not grid_out:
        return
    if X.shape[1] != 1:
        raise ConfigError("prediction grids are only emitted for 1-d inputs")
    num = int(params.get("grid_points", 200))
    emit_kernel_grid(model, (float(np.min(X)), float(np.max(X)), num), grid_out)


_ECHO_KEYS = ["input", "output", "matrix", "lambda", "lambda1", "lambda2",
              "lambdas", "operator", "grid", "grid_out", "grid_points",
              "kernel", "family", "width", "scale", "degree", "offset",
              "outer", "transforms", "transform1", "transform2", "p",
              "weights", "vector", "suite", "trials", "seed", "tol",
              "max_iter"]


def _echo(params: dict) -> dict:
    out = {}
    for key in _ECHO_KEYS:
        if params.get(key) is not None:
            value = params[key]
            if isinstance(value, np.ndarray):
                value = value.tolist()
            out[key] = value
    return out


HANDLERS = {
    "fit-kernel": run_fit_kernel,
    "fit-multikernel": run_fit_multikernel,
    "fit-dict": run_fit_dict,
    "fit-mixed": run_fit_mixed,
    "fit-spline": run_fit_spline,
    "dual": run_dual,
    "verify": run_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banachrep",
        description="Solvers and certificates for composite-norm regularized "
                    "inverse problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_io=True):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
        if with_io:
            p.add_argument("input", nargs="?", help="input data CSV")
            p.add_argument("output", nargs="?", help="output JSON path (or -)")

    p = sub.add_parser("fit-kernel", help="single-kernel ridge fit")
    add_common(p)
    p.add_argument("--kernel", dest="family", default=None,
                   choices=["gaussian", "laplacian", "polynomial", "linear"])
    p.add_argument("--width", type=float, default=None)
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--offset", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--grid-out", dest="grid_out", default=None)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=None)

    p = sub.add_parser("fit-multikernel", help="multi-kernel fit (config lists kernels)")
    add_common(p)
    p.add_argument("--outer", choices=["weighted_l2", "l1"], default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--grid-out", dest="grid_out", default=None)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=None)

    p = sub.add_parser("fit-dict", help="union-dictionary sparse recovery")
    add_common(p)
    p.add_argument("--matrix", default=None, help="measurement matrix CSV")
    p.add_argument("--transforms", default=None,
                   help="comma list of names (identity,diff,diff2) or CSV paths")
    p.add_argument("--lambda", dest="lam", type=float, default=None)

    p = sub.add_parser("fit-mixed", help="two-component l1 + squared-l2 fit")
    add_common(p)
    p.add_argument("--matrix", default=None)
    p.add_argument("--transform1", default=None)
    p.add_argument("--transform2", default=None)
    p.add_argument("--lambda1", dest="lam1", type=float, default=None)
    p.add_argument("--lambda2", dest="lam2", type=float, default=None)

    p = sub.add_parser("fit-spline", help="1-d l1 semi-norm spline fit")
    add_common(p)
    p.add_argument("--operator", choices=["D", "D2"], default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--grid-out", dest="grid_out", default=None)

    p = sub.add_parser("dual", help="norm, dual norm, and conjugate of a vector")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--p", default=None, help="lp exponent (number or 'inf')")
    p.add_argument("--weights", default=None, help="weighted Euclidean weights")
    p.add_argument("--vector", default=None, help="comma-separated vector")
    p.add_argument("output", nargs="?", help="output JSON path (or -)")

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--suite", default=None,
                   help="duality, composite, multikernel, dictionary, spline, all")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=None, help="optional JSON report path")

    return parser


_FLAG_RENAMES = {"lam": "lambda", "lam1": "lambda1", "lam2": "lambda2"}


def merge_params(args: argparse.Namespace) -> dict:
    """Config-file values overridden by any flag that was actually given."""
    config = load_config(getattr(args, "config", None))
    params = {}
    section = config.get("problem", {})
    if not isinstance(section, dict):
        raise ConfigError("[problem] must be a table")
    params.update(section)
    for key in ("kernels", "norm", "vector"):
        if key in config:
            params[key] = config[key]
    if isinstance(params.get("vector"), dict):
        params["vector"] = params["vector"].get("values")
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        params[_FLAG_RENAMES.get(key, key)] = value
    return params


def run(config: RunConfig) -> int:
    """Execute a resolved task; returns the process exit code."""
    started = time.perf_counter()
    try:
        if config.task not in HANDLERS:
            raise ConfigError(f"unknown task {config.task!r}")
        return HANDLERS[config.task](config.params, started)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = merge_params(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(RunConfig(task=args.command, params=params))


if __name__ == "__main__":
    sys.exit(main())
