"""Independent ground-truth solvers and membership certifiers.

These routines deliberately avoid the specialized solvers in the rest of
the package so they can serve as oracles when certifying them:

* ``solve_generic``       subgradient method (Polyak steps with an
                          adaptively halved level estimate, running best,
                          and iterate averaging) for any convex objective;
* ``brute_force_dual_norm``  sampled lower bound on a dual norm;
* ``verify_representer_membership``  checks that the conjugate of a
                          candidate solution lies in the row space of the
                          measurement matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .norms import NormSpec, dual_spec, duality_map, is_strictly_convex, norm_eval


@dataclass
class GenericConvexProblem:
    """Convex problem described by evaluation callbacks.

    ``objective`` maps a vector to a float, ``subgradient`` returns any
    subgradient at the point.  Convexity is the caller's contract and is
    not checked.  ``box`` optionally constrains iterates to |x_i| <= box.
    """

    objective: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]
    dim: int
    box: float | None = None


def solve_generic(problem: GenericConvexProblem, iterations: int = 100_000,
                  seed: int = 0):
    """Minimize a convex objective with a restarted subgradient method.

    Normalized subgradient steps with diminishing lengths s/sqrt(j) are
    run in stages; each stage restarts from the incumbent with a halved
    exploration scale s, and running averages of the iterates are also
    probed as candidates.  The running best is returned, so the answer can
    only improve with the iteration budget; the usual O(1/sqrt(k))
    guarantee holds inside every stage.  Deterministic for a fixed seed.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    x = 1e-12 * rng.standard_normal(problem.dim)  # deterministic tie-break
    if problem.box is not None:
        np.clip(x, -problem.box, problem.box, out=x)
    f = float(problem.objective(x))
    x_best, f_best = x.copy(), f
    g0 = np.asarray(problem.subgradient(x), dtype=float)
    g0_norm = float(np.linalg.norm(g0))
    if g0_norm == 0.0:
        return x_best, f_best
    # initial exploration scale: an objective-over-slope distance guess
    scale = max(1.0, abs(f) / g0_norm)
    n_stages = 40
    per_stage = max(1, iterations // n_stages)
    for _ in range(n_stages):
        x = x_best.copy()
        avg = x.copy()
        n_avg = 1
        for j in range(1, per_stage + 1):
            g = np.asarray(problem.subgradient(x), dtype=float)
            g_norm = float(np.linalg.norm(g))
            if g_norm == 0.0:
                return x.copy(), float(problem.objective(x))
            x = x - (scale / np.sqrt(j)) * (g / g_norm)
            if problem.box is not None:
                np.clip(x, -problem.box, problem.box, out=x)
            f = float(problem.objective(x))
            if f < f_best:
                f_best, x_best = f, x.copy()
            avg += x
            n_avg += 1
            if j % 50 == 0 or j == per_stage:
                f_avg = float(problem.objective(avg / n_avg))
                if f_avg < f_best:
                    f_best, x_best = f_avg, avg / n_avg
        scale *= 0.5
    return x_best, f_best


def brute_force_dual_norm(x, spec: NormSpec, samples: int = 10_000,
                          seed: int = 0) -> float:
    """Sampled lower bound on the dual norm of ``x`` under ``spec``.

    Maximizes <x,u>/||u|| over random directions and over the duality-map
    direction, which attains the supremum; the returned value therefore
    sits within float error of the true dual norm whenever the map
    direction is computable, and is a valid lower bound always.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size > 8:
        raise ValueError("brute-force dual norm is limited to dimension <= 8")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        u = rng.standard_normal(x.size)
        nu = norm_eval(u, spec)
        if nu > 0.0:
            best = max(best, abs(float(x @ u)) / nu)
    if np.any(x != 0.0):
        u = duality_map(x, dual_spec(spec))
        nu = norm_eval(u, spec)
        if nu > 0.0:
            best = max(best, float(x @ u) / nu)
    return best


def verify_representer_membership(f0, H, spec: NormSpec, tol: float = 1e-8):
    """Check the first-order solution geometry of norm-regularized fitting.

    Any minimizer of a strictly convex data-fit plus a strictly convex
    norm penalty must be the conjugate of some element of the row space of
    the measurement matrix.  This maps ``f0`` to its conjugate, projects
    onto the row space of ``H`` by least squares, and reports the relative
    residual; membership holds when the residual is at most ``tol``.  For
    the Euclidean norm the conjugate is ``f0`` itself, so the test reduces
    to ``f0`` lying in the row space directly.
    """
    if not is_strictly_convex(spec):
        raise ValueError(
            "membership check needs a strictly convex norm; non-strictly "
            "convex regularizers are covered by the extremal-point branch "
            "(see reduce_to_extreme)"
        )
    f0 = np.asarray(f0, dtype=float).reshape(-1)
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[1] != f0.size:
        raise ValueError(f"H must be M x {f0.size}")
    nu0 = duality_map(f0, spec)
    scale = float(np.linalg.norm(nu0))
    if scale == 0.0:
        return True, 0.0
    coef, *_ = np.linalg.lstsq(H.T, nu0, rcond=None)
    residual = float(np.linalg.norm(nu0 - H.T @ coef)) / scale
    return bool(residual <= tol), residual
