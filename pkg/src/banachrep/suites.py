"""Named invariant suites for the command-line verification runner.

Every suite runs a number of independent, individually seeded trials per
invariant and reports pass counts.  Trial seeds are derived from the base
seed and the trial index, so counts are deterministic and independent of
any parallel scheduling; BANACH_REP_THREADS caps the worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import dictionary as dict_mod
from . import multikernel as mk
from . import splines
from .kernels import Gaussian, Laplacian, Polynomial
from .norms import (
    Composite,
    Lp,
    Transformed,
    WeightedEuclidean,
    composite_conjugate,
    dual_norm_eval,
    dual_spec,
    duality_map,
    extremal_atoms,
    is_conjugate_pair,
    norm_eval,
)
from .oracle import brute_force_dual_norm


@dataclass
class InvariantResult:
    name: str
    passed: int
    total: int

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def _worker_cap() -> int:
    try:
        return max(1, int(os.environ.get("BANACH_REP_THREADS", "1")))
    except ValueError:
        return 1


def _run_trials(fn: Callable[[np.random.Generator], bool], trials: int,
                seed: int) -> int:
    seeds = [seed + 7919 * i for i in range(trials)]
    workers = min(_worker_cap(), trials) if trials else 1
    if workers <= 1:
        return sum(bool(fn(np.random.default_rng(s))) for s in seeds)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        flags = list(pool.map(lambda s: bool(fn(np.random.default_rng(s))), seeds))
    return sum(flags)


def _random_spec(rng: np.random.Generator, dim: int):
    kind = rng.integers(0, 5)
    if kind == 0:
        return Lp(1.2)
    if kind == 1:
        return Lp(2)
    if kind == 2:
        return Lp(3.7)
    if kind == 3:
        return WeightedEuclidean(rng.uniform(0.2, 4.0, dim))
    return Transformed(Lp(2), rng.standard_normal((dim, dim)) + 3 * np.eye(dim))


def duality_suite(trials: int, seed: int) -> List[InvariantResult]:
    def conjugacy(rng):
        dim = int(rng.integers(2, 11))
        spec = _random_spec(rng, dim)
        x = rng.standard_normal(dim)
        return is_conjugate_pair(x, duality_map(x, spec), spec, tol=1e-9).is_conjugate

    def sup_bound(rng):
        dim = int(rng.integers(2, 6))
        spec = _random_spec(rng, dim)
        x = rng.standard_normal(dim)
        dn = dual_norm_eval(x, spec)
        for _ in range(100):
            u = rng.standard_normal(dim)
            if float(x @ u) / norm_eval(u, spec) > dn + 1e-10:
                return False
        u = duality_map(x, dual_spec(spec))
        return dn - float(x @ u) / norm_eval(u, spec) <= 1e-6 * (1 + dn)

    def homogeneity(rng):
        dim = int(rng.integers(2, 8))
        spec = _random_spec(rng, dim)
        x = rng.standard_normal(dim)
        a = float(rng.uniform(0.1, 10.0))
        lhs = duality_map(a * x, spec)
        rhs = a * duality_map(x, spec)
        return float(np.max(np.abs(lhs - rhs))) <= 1e-10 * (1 + np.max(np.abs(rhs)))

    def unit_atoms(rng):
        dim = int(rng.integers(2, 7))
        L = rng.standard_normal((dim, dim)) + 3 * np.eye(dim)
        atoms = extremal_atoms(L)
        spec = Transformed(Lp(1), L)
        return all(abs(norm_eval(atoms[:, k], spec) - 1.0) <= 1e-9
                   for k in range(dim))

    def composite_vs_brute(rng):
        spec = Composite((Lp(2, dim=2), Lp(2, dim=2)),
                         WeightedEuclidean(rng.uniform(0.5, 3.0, 2)))
        x = rng.standard_normal(4)
        bound = brute_force_dual_norm(x, spec, samples=2000, seed=int(rng.integers(1 << 30)))
        formula = dual_norm_eval(x, spec)
        return bound <= formula + 1e-10 and formula - bound <= 1e-4 * (1 + formula)

    return [
        InvariantResult("conjugacy-1e-9", _run_trials(conjugacy, trials, seed), trials),
        InvariantResult("dual-norm-sup-bound", _run_trials(sup_bound, trials, seed + 1), trials),
        InvariantResult("map-homogeneity", _run_trials(homogeneity, trials, seed + 2), trials),
        InvariantResult("atoms-unit-norm", _run_trials(unit_atoms, trials, seed + 3), trials),
        InvariantResult("composite-vs-brute-force",
                        _run_trials(composite_vs_brute, max(1, trials // 10), seed + 4),
                        max(1, trials // 10)),
    ]


def composite_suite(trials: int, seed: int) -> List[InvariantResult]:
    outers = [Lp(1), Lp(2), "weighted"]

    def conjugate_pair(rng):
        outer = outers[int(rng.integers(0, 3))]
        if outer == "weighted":
            outer = WeightedEuclidean(rng.uniform(0.5, 3.0, 2))
        inner = (Lp(2, dim=2), Lp(2, dim=2))
        spec = Composite(inner, outer)
        x = rng.standard_normal(4)
        parts = list(zip([x[:2], x[2:]], inner))
        y = np.concatenate(composite_conjugate(parts, outer))
        return is_conjugate_pair(x, y, spec, tol=1e-9).is_conjugate

    def brute_bound(rng):
        outer = WeightedEuclidean(rng.uniform(0.5, 3.0, 2))
        spec = Composite((Lp(2, dim=2), Lp(2, dim=2)), outer)
        x = rng.standard_normal(4)
        bound = brute_force_dual_norm(x, spec, samples=3000, seed=int(rng.integers(1 << 30)))
        return dual_norm_eval(x, spec) >= bound - 1e-10

    return [
        InvariantResult("composite-conjugate-1e-9",
                        _run_trials(conjugate_pair, trials, seed), trials),
        InvariantResult("composite-dual-lower-bound",
                        _run_trials(brute_bound, max(1, trials // 5), seed + 1),
                        max(1, trials // 5)),
    ]


def multikernel_suite(trials: int, seed: int) -> List[InvariantResult]:
    def kernels_for(rng):
        return [Gaussian(float(rng.uniform(0.5, 2.0))),
                Laplacian(float(rng.uniform(0.5, 2.0))),
                Polynomial(2, 1.0)]

    def representer_span(rng):
        M = int(rng.integers(3, 9))
        X = rng.standard_normal((M, 2))
        y = rng.standard_normal(M)
        lambdas = rng.uniform(0.5, 3.0, 3)
        prob = mk.MultiKernelProblem(X, y, kernels_for(rng), mk.WeightedL2Outer(lambdas))
        model = mk.fit_weighted_l2(prob)
        grams = prob.grams()
        B = np.hstack(grams)
        Lam = np.zeros((3 * M, 3 * M))
        for n, G in enumerate(grams):
            Lam[n * M:(n + 1) * M, n * M:(n + 1) * M] = lambdas[n] * G
        c = np.linalg.lstsq(B.T @ B + Lam, B.T @ y, rcond=None)[0]
        r = y - B @ c
        ref = float(r @ r + c @ Lam @ c)
        obj = mk.multikernel_objective(model, prob)
        return abs(obj - ref) <= 1e-6 * (1 + abs(ref))

    def alpha_ratio(rng):
        M = int(rng.integers(3, 9))
        X = rng.standard_normal((M, 2))
        y = rng.standard_normal(M)
        lambdas = rng.uniform(0.5, 3.0, 3)
        prob = mk.MultiKernelProblem(X, y, kernels_for(rng), mk.WeightedL2Outer(lambdas))
        model = mk.fit_weighted_l2(prob)
        norms = mk.component_norms(model, prob)
        ystar = duality_map(norms, WeightedEuclidean(lambdas))
        for n in range(3):
            if norms[n] > 1e-12:
                if abs(model.combo_weights[n] * ystar[n] - norms[n]) > 1e-8 * (1 + norms[n]):
                    return False
        return True

    def monotone(rng):
        M = int(rng.integers(3, 8))
        X = rng.standard_normal((M, 2))
        y = rng.standard_normal(M)
        prob = mk.MultiKernelProblem(X, y, kernels_for(rng),
                                     mk.L1Outer(float(rng.uniform(0.2, 1.0))))
        model = mk.fit_l1_multikernel(prob)
        hist = np.asarray(model.diagnostics.smoothed_history)
        return bool(np.all(np.diff(hist) <= 1e-10 * (1 + np.abs(hist[:-1]))))

    return [
        InvariantResult("weighted-l2-vs-span-oracle",
                        _run_trials(representer_span, trials, seed), trials),
        InvariantResult("alpha-conjugate-ratio",
                        _run_trials(alpha_ratio, trials, seed + 1), trials),
        InvariantResult("l1-objective-monotone",
                        _run_trials(monotone, max(1, trials // 5), seed + 2),
                        max(1, trials // 5)),
    ]


def dictionary_suite(trials: int, seed: int) -> List[InvariantResult]:
    def soft_threshold_fixed_point(rng):
        y = rng.standard_normal(6)
        lam = float(rng.uniform(0.2, 2.0))
        sol = dict_mod.solve_synthesis_lasso(np.eye(6), y, lam, tol=1e-12)
        expected = np.sign(y) * np.maximum(np.abs(y) - lam / 2.0, 0.0)
        return float(np.max(np.abs(sol.coefficients - expected))) <= 1e-10

    def analysis_synthesis(rng):
        M, N = 5, 6
        H = rng.standard_normal((M, N))
        y = rng.standard_normal(M)
        Ls = [np.eye(N), np.eye(N) - np.eye(N, k=-1)]
        prob = dict_mod.DictionaryProblem(H, y, Ls, float(rng.uniform(0.2, 1.0)))
        sol = dict_mod.solve_dictionary_problem(prob, tol=1e-9)
        gap = abs(dict_mod.analysis_objective(prob, sol.components) - sol.objective)
        return gap <= 1e-6 * (1 + abs(sol.objective))

    def kkt_certificate(rng):
        A = rng.standard_normal((5, 9))
        y = rng.standard_normal(5)
        lam = float(rng.uniform(0.2, 1.5))
        sol = dict_mod.solve_synthesis_lasso(A, y, lam)
        return sol.converged and sol.kkt_residual <= 1e-6 * (1 + lam)

    def extreme_reduction(rng):
        M, n = 3, 20
        A = rng.standard_normal((M, n))
        c = rng.standard_normal(n)
        out = dict_mod.reduce_to_extreme(A, c)
        drift = float(np.linalg.norm(A @ out - A @ c))
        return (int(np.sum(out != 0)) <= M
                and drift <= 1e-9 * (1 + float(np.linalg.norm(A @ c)))
                and float(np.sum(np.abs(out))) <= float(np.sum(np.abs(c))) + 1e-12)

    return [
        InvariantResult("soft-threshold-fixed-point",
                        _run_trials(soft_threshold_fixed_point, trials, seed), trials),
        InvariantResult("analysis-synthesis-equivalence",
                        _run_trials(analysis_synthesis, max(1, trials // 5), seed + 1),
                        max(1, trials // 5)),
        InvariantResult("lasso-kkt-certificate",
                        _run_trials(kkt_certificate, trials, seed + 2), trials),
        InvariantResult("extreme-point-reduction",
                        _run_trials(extreme_reduction, trials, seed + 3), trials),
    ]


def spline_suite(trials: int, seed: int) -> List[InvariantResult]:
    def biortho_identity(rng):
        V = rng.standard_normal((6, 2))
        system = splines.build_biortho(V)
        return (system.identity_error() <= 1e-12
                and float(np.max(np.abs(system.Utilde.T @ V))) <= 1e-12)

    def null_blind(rng):
        G, M = 25, 6
        nu = rng.standard_normal((M, G))
        P = splines.nullspace_basis(G, 2)
        system = splines.build_biortho(nu @ P)
        nu_t, _ = splines.reduce_measurements(nu, system)
        p = P @ rng.standard_normal(2)
        return float(np.max(np.abs(nu_t @ p))) <= 1e-10 * (1 + np.max(np.abs(p)))

    def knot_bound(rng):
        G, M = 60, 8
        idx = np.sort(rng.choice(G, size=M, replace=False))
        y = rng.standard_normal(M)
        lam = float(10.0 ** rng.uniform(-3, 1))
        fit = splines.fit_gtv_spline(G, idx, y, "D", lam=lam)
        return fit.knots.size <= M - 1

    def hilbert_optimality(rng):
        G, M = 30, 7
        nu = rng.standard_normal((M, G))
        L = splines.difference_operator(G, 2)
        P = splines.nullspace_basis(G, 2)
        y = rng.standard_normal(M)
        fit = splines.fit_hilbert_seminorm(nu, y, P, lam=float(rng.uniform(0.1, 2.0)),
                                           operator=L)
        return fit.kkt_residual <= 1e-10 * (1 + float(np.linalg.norm(y)))

    return [
        InvariantResult("biortho-identity-1e-12",
                        _run_trials(biortho_identity, trials, seed), trials),
        InvariantResult("reduced-rows-null-blind",
                        _run_trials(null_blind, trials, seed + 1), trials),
        InvariantResult("gtv-knot-bound",
                        _run_trials(knot_bound, max(1, trials // 5), seed + 2),
                        max(1, trials // 5)),
        InvariantResult("hilbert-normal-residual",
                        _run_trials(hilbert_optimality, max(1, trials // 2), seed + 3),
                        max(1, trials // 2)),
    ]


SUITES: Dict[str, Callable[[int, int], List[InvariantResult]]] = {
    "duality": duality_suite,
    "composite": composite_suite,
    "multikernel": multikernel_suite,
    "dictionary": dictionary_suite,
    "spline": spline_suite,
}


def run_suite(name: str, trials: int, seed: int) -> List[InvariantResult]:
    if name == "all":
        out: List[InvariantResult] = []
        for key in SUITES:
            out.extend(run_suite(key, trials, seed))
        return out
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from "
                         f"{', '.join(list(SUITES) + ['all'])}")
    return SUITES[name](trials, seed)
