"""Finite-dimensional norms, dual norms, duality mappings, and extremal points.

Four norm families are supported and compose freely:

* ``Lp(p)``                  the classical lp norm, 1 <= p <= inf;
* ``WeightedEuclidean(w)``   sqrt(sum_n w_n x_n^2) with w_n > 0;
* ``Transformed(base, L)``   x -> base(L x) for an invertible matrix L;
* ``Composite(parts, outer)`` an outer norm on R^N applied to the vector of
  per-component norms of a direct product of spaces.

A pair (x, x*) with x in the primal space and x* in its dual is called a
*conjugate pair* when both

    norm preservation:    ||x*||_dual == ||x||
    sharp duality bound:  <x, x*>    == ||x|| * ||x*||

hold.  ``duality_map`` returns the conjugate of a vector; for strictly
convex norms it is the unique one, while for p in {1, inf} a deterministic
canonical representative of the conjugate set is returned (see
``duality_map`` notes).  ``is_conjugate_pair`` certifies both conditions
numerically and is the ground truth the rest of the package leans on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

# Transforms with condition number beyond this are rejected as singular.
MAX_TRANSFORM_CONDITION = 1e12

# Randomized sign-flip probes used to certify that an outer norm is
# absolute (equivalently monotone): ||(z_n)|| == ||(|z_n|)||.
_ABSOLUTE_PROBES = 64
_ABSOLUTE_TOL = 1e-12


@dataclass(eq=False)
class Lp:
    """lp norm with exponent ``p``; ``dim`` is only needed inside composites."""

    p: float
    dim: int | None = None

    def __post_init__(self):
        p = float(self.p)
        if np.isnan(p) or p < 1.0:
            raise ValueError(f"lp exponent must satisfy p >= 1 (or inf), got {self.p!r}")
        self.p = p
        if self.dim is not None:
            self.dim = int(self.dim)
            if self.dim < 1:
                raise ValueError("dim must be a positive integer")


@dataclass(eq=False)
class WeightedEuclidean:
    """Weighted Euclidean norm sqrt(sum_n w_n x_n^2), all w_n > 0."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        self.weights = w


@dataclass(eq=False)
class Transformed:
    """Norm x -> base(L x) for an invertible square matrix L.

    The transported space is isometrically isomorphic to the base space:
    norms, conjugates and extremal points all carry over through L.
    """

    base: "NormSpec"
    transform: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.transform, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError("transform must be a square matrix")
        cond = np.linalg.cond(L)
        if not np.isfinite(cond) or cond > MAX_TRANSFORM_CONDITION:
            raise ValueError(
                f"transform is numerically singular (condition number {cond:.3e})"
            )
        base_dim = spec_dim(self.base)
        if base_dim is not None and base_dim != L.shape[0]:
            raise ValueError(
                f"base norm dimension {base_dim} does not match transform size {L.shape[0]}"
            )
        self.transform = L


@dataclass(eq=False)
class Composite:
    """Outer norm applied to the vector of component norms.

    ``components`` are the inner norm specs (each with a concrete
    dimension); the concatenated vector is split accordingly.  The outer
    norm must be absolute, which is verified at construction with
    randomized sign flips.
    """

    components: Sequence["NormSpec"]
    outer: "NormSpec"
    dims: tuple = field(init=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("composite norm needs at least one component")
        dims = []
        for i, comp in enumerate(comps):
            d = spec_dim(comp)
            if d is None:
                raise ValueError(
                    f"component {i} needs an explicit dimension inside a composite"
                )
            dims.append(d)
        self.components = comps
        self.dims = tuple(dims)
        outer_dim = spec_dim(self.outer)
        if outer_dim is not None and outer_dim != len(comps):
            raise ValueError(
                f"outer norm dimension {outer_dim} does not match {len(comps)} components"
            )
        _require_absolute(self.outer, len(comps))


NormSpec = Union[Lp, WeightedEuclidean, Transformed, Composite]


@dataclass
class ConjugateReport:
    """Numerical certificate for the two conjugate-pair conditions."""

    norm_primal: float
    norm_dual: float
    pairing: float
    norm_gap: float
    pairing_gap: float
    is_conjugate: bool


@dataclass
class ExtremalProductReport:
    """Outcome of the product-space extremal-point test.

    ``inner_status`` holds one entry per component: "extremal",
    "not_extremal", "zero" (component skipped), or "not_checkable" when
    the inner norm has no implemented atom test.  Truthiness follows
    ``is_extremal``.
    """

    is_extremal: bool
    outer_extremal: bool
    inner_status: tuple

    def __bool__(self) -> bool:
        return self.is_extremal


def spec_dim(spec: NormSpec) -> int | None:
    """Dimension a spec applies to, or None when any dimension is accepted."""
    if isinstance(spec, Lp):
        return spec.dim
    if isinstance(spec, WeightedEuclidean):
        return spec.weights.size
    if isinstance(spec, Transformed):
        return spec.transform.shape[0]
    if isinstance(spec, Composite):
        return int(sum(spec.dims))
    raise TypeError(f"not a norm spec: {spec!r}")


def split_components(x: np.ndarray, spec: Composite) -> list:
    """Split a concatenated vector into the composite's component blocks."""
    x = np.asarray(x, dtype=float)
    offsets = np.cumsum((0,) + spec.dims)
    return [x[offsets[i]:offsets[i + 1]] for i in range(len(spec.dims))]


def _as_vector(x, spec: NormSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        x = x.reshape(-1)
    if x.size == 0:
        raise ValueError("empty vector")
    d = spec_dim(spec)
    if d is not None and x.size != d:
        raise ValueError(f"vector has dimension {x.size}, spec expects {d}")
    return x


def _require_absolute(outer: NormSpec, n: int) -> None:
    rng = np.random.default_rng(1861)  # fixed seed: the check is deterministic
    for _ in range(_ABSOLUTE_PROBES):
        z = rng.standard_normal(n)
        s = rng.choice([-1.0, 1.0], size=n)
        a = norm_eval(z, outer)
        b = norm_eval(s * z, outer)
        if abs(a - b) > _ABSOLUTE_TOL * (1.0 + a):
            raise ValueError(
                "outer norm is not absolute: sign flips change its value "
                f"({a!r} vs {b!r})"
            )


def norm_eval(x, spec: NormSpec) -> float:
    """Evaluate ``||x||`` under ``spec``."""
    x = _as_vector(x, spec)
    if isinstance(spec, Lp):
        p = spec.p
        if np.isinf(p):
            return float(np.max(np.abs(x)))
        if p == 1.0:
            return float(np.sum(np.abs(x)))
        if p == 2.0:
            return float(np.linalg.norm(x))
        return float(np.sum(np.abs(x) ** p) ** (1.0 / p))
    if isinstance(spec, WeightedEuclidean):
        return float(np.sqrt(np.sum(spec.weights * x * x)))
    if isinstance(spec, Transformed):
        return norm_eval(spec.transform @ x, spec.base)
    if isinstance(spec, Composite):
        z = np.array(
            [norm_eval(part, comp)
             for part, comp in zip(split_components(x, spec), spec.components)]
        )
        return norm_eval(z, spec.outer)
    raise TypeError(f"not a norm spec: {spec!r}")


def dual_exponent(p: float) -> float:
    """Hoelder conjugate exponent: 1/p + 1/q = 1."""
    if np.isinf(p):
        return 1.0
    if p == 1.0:
        return np.inf
    return p / (p - 1.0)


def dual_spec(spec: NormSpec) -> NormSpec:
    """Spec of the dual norm.

    lp dualizes to lq with 1/p + 1/q = 1; weights invert; a transported
    norm base(L .) dualizes to base'(L^{-T} .); a composite dualizes
    componentwise with the dual outer norm.
    """
    if isinstance(spec, Lp):
        return Lp(dual_exponent(spec.p), spec.dim)
    if isinstance(spec, WeightedEuclidean):
        return WeightedEuclidean(1.0 / spec.weights)
    if isinstance(spec, Transformed):
        inv = np.linalg.inv(spec.transform)
        return Transformed(dual_spec(spec.base), inv.T)
    if isinstance(spec, Composite):
        return Composite(
            tuple(dual_spec(c) for c in spec.components), dual_spec(spec.outer)
        )
    raise TypeError(f"not a norm spec: {spec!r}")


def dual_norm_eval(x, spec: NormSpec) -> float:
    """Evaluate the dual norm of ``x``, i.e. sup <x,u>/||u|| over u != 0."""
    return norm_eval(x, dual_spec(spec))


def is_strictly_convex(spec: NormSpec) -> bool:
    """Whether the unit ball of ``spec`` is strictly convex (unique conjugates)."""
    if isinstance(spec, Lp):
        return 1.0 < spec.p < np.inf
    if isinstance(spec, WeightedEuclidean):
        return True
    if isinstance(spec, Transformed):
        return is_strictly_convex(spec.base)
    if isinstance(spec, Composite):
        return is_strictly_convex(spec.outer) and all(
            is_strictly_convex(c) for c in spec.components
        )
    raise TypeError(f"not a norm spec: {spec!r}")


def duality_map(x, spec: NormSpec) -> np.ndarray:
    """Map ``x`` to a conjugate vector x* on the dual side.

    The result satisfies norm preservation and the sharp duality bound
    (see module docstring).  The map is positively homogeneous and sends
    zero to zero.  For strictly convex specs the conjugate is unique; for
    the set-valued endpoints a canonical representative is chosen:

    * p = inf: ||x||_inf * sign(x_i) * e_i at the first maximizing index;
    * p = 1:   ||x||_1 * sign(x), with sign(0) = 0.

    Both representatives satisfy the two conditions exactly.
    """
    x = _as_vector(x, spec)
    nx = norm_eval(x, spec)
    if nx == 0.0:
        return np.zeros_like(x)
    if isinstance(spec, Lp):
        p = spec.p
        if p == 2.0:
            return x.copy()
        if p == 1.0:
            return nx * np.sign(x)
        if np.isinf(p):
            i = int(np.argmax(np.abs(x)))
            out = np.zeros_like(x)
            out[i] = nx * np.sign(x[i])
            return out
        return np.sign(x) * np.abs(x) ** (p - 1.0) * nx ** (2.0 - p)
    if isinstance(spec, WeightedEuclidean):
        return spec.weights * x
    if isinstance(spec, Transformed):
        L = spec.transform
        return L.T @ duality_map(L @ x, spec.base)
    if isinstance(spec, Composite):
        pairs = list(zip(split_components(x, spec), spec.components))
        return np.concatenate(composite_conjugate(pairs, spec.outer))
    raise TypeError(f"not a norm spec: {spec!r}")


def is_conjugate_pair(x, xstar, spec: NormSpec, tol: float = 1e-10) -> ConjugateReport:
    """Certify the two conjugate-pair conditions at relative tolerance ``tol``."""
    x = _as_vector(x, spec)
    xs = np.asarray(xstar, dtype=float).reshape(-1)
    if xs.size != x.size:
        raise ValueError(f"dimension mismatch: x has {x.size}, x* has {xs.size}")
    norm_primal = norm_eval(x, spec)
    norm_dual = norm_eval(xs, dual_spec(spec))
    pairing = float(x @ xs)
    norm_gap = abs(norm_primal - norm_dual)
    pairing_gap = abs(pairing - norm_primal * norm_dual)
    ok = (norm_gap <= tol * (1.0 + norm_primal)
          and pairing_gap <= tol * (1.0 + abs(pairing)))
    return ConjugateReport(
        norm_primal=norm_primal,
        norm_dual=norm_dual,
        pairing=pairing,
        norm_gap=norm_gap,
        pairing_gap=pairing_gap,
        is_conjugate=bool(ok),
    )


def composite_conjugate(components, outer: NormSpec) -> list:
    """Conjugate of a direct-product vector under a composite norm.

    ``components`` is a sequence of (vector, inner spec) pairs.  With
    z = (||x_1||, ..., ||x_N||) and z* its conjugate under the outer norm,
    the product conjugate is (alpha_1 x*_1, ..., alpha_N x*_N) where
    alpha_n = z*_n / ||x_n|| for nonzero components and 0 otherwise.
    """
    pairs = [(np.asarray(v, dtype=float).reshape(-1), s) for v, s in components]
    z = np.array([norm_eval(v, s) for v, s in pairs])
    zstar = duality_map(z, outer)
    out = []
    for (v, s), zn, zsn in zip(pairs, z, zstar):
        if zn == 0.0:
            out.append(np.zeros_like(v))
        else:
            out.append((zsn / zn) * duality_map(v, s))
    return out


def extremal_atoms(transform) -> np.ndarray:
    """Atoms of the transported l1 ball: the columns of L^{-1}.

    The signed columns +-L^{-1} e_n are exactly the extremal points of the
    unit ball of x -> ||L x||_1; each has transported norm 1.
    """
    L = np.asarray(transform, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("transform must be a square matrix")
    cond = np.linalg.cond(L)
    if not np.isfinite(cond) or cond > MAX_TRANSFORM_CONDITION:
        raise ValueError(f"transform is numerically singular (condition number {cond:.3e})")
    return np.linalg.inv(L)


def _is_l1_type(spec: NormSpec) -> bool:
    if isinstance(spec, Lp):
        return spec.p == 1.0
    if isinstance(spec, Transformed):
        return isinstance(spec.base, Lp) and spec.base.p == 1.0
    return False


def _l1_atoms(spec: NormSpec, dim: int) -> np.ndarray:
    if isinstance(spec, Transformed):
        return extremal_atoms(spec.transform)
    return np.eye(dim)


def _matches_signed_atom(u: np.ndarray, atoms: np.ndarray, tol: float) -> bool:
    scale = max(1.0, float(np.max(np.abs(atoms))))
    for k in range(atoms.shape[1]):
        a = atoms[:, k]
        if np.max(np.abs(u - a)) <= tol * scale or np.max(np.abs(u + a)) <= tol * scale:
            return True
    return False


def _outer_extremal(z: np.ndarray, outer: NormSpec, tol: float) -> bool:
    # z is a vector of component norms (entrywise >= 0).
    if isinstance(outer, Lp):
        if outer.p == 1.0:
            order = np.sort(z)[::-1]
            return abs(order[0] - 1.0) <= tol and (order.size == 1 or order[1] <= tol)
        if np.isinf(outer.p):
            return bool(np.all(np.abs(z - 1.0) <= tol))
        return abs(norm_eval(z, outer) - 1.0) <= tol
    if isinstance(outer, WeightedEuclidean):
        return abs(norm_eval(z, outer) - 1.0) <= tol
    if isinstance(outer, Transformed):
        if _is_l1_type(outer):
            return _matches_signed_atom(z, _l1_atoms(outer, z.size), tol)
        if is_strictly_convex(outer):
            return abs(norm_eval(z, outer) - 1.0) <= tol
    raise ValueError("extremality test not implemented for this outer norm")


def check_extremal_product(e_components, inner_specs, outer: NormSpec,
                           tol: float = 1e-9) -> ExtremalProductReport:
    """Test whether a direct-product vector is extremal for the composite ball.

    The vector is extremal iff the vector of component norms is extremal
    for the outer ball and every nonzero component, normalized, is
    extremal for its inner ball.  Inner extremality is decided by atom
    matching for l1-type inner norms and is trivially true for strictly
    convex ones; anything else is reported "not_checkable" and does not
    fail the test.
    """
    vectors = [np.asarray(v, dtype=float).reshape(-1) for v in e_components]
    specs = list(inner_specs)
    if len(vectors) != len(specs):
        raise ValueError("one inner spec per component is required")
    z = np.array([norm_eval(v, s) for v, s in zip(vectors, specs)])
    outer_ok = _outer_extremal(z, outer, tol)
    inner_status = []
    ok = outer_ok
    for v, s, zn in zip(vectors, specs, z):
        if zn <= tol:
            inner_status.append("zero")
            continue
        u = v / zn
        if _is_l1_type(s):
            hit = _matches_signed_atom(u, _l1_atoms(s, u.size), tol)
            inner_status.append("extremal" if hit else "not_extremal")
            ok = ok and hit
        elif is_strictly_convex(s):
            # every point of a strictly convex unit sphere is extremal
            inner_status.append("extremal")
        else:
            inner_status.append("not_checkable")
    return ExtremalProductReport(
        is_extremal=bool(ok),
        outer_extremal=bool(outer_ok),
        inner_status=tuple(inner_status),
    )
