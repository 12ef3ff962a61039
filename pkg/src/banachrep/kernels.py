"""Kernel evaluation, Gram assembly, and kernel-expansion prediction.

Four classical positive-semidefinite families are provided (Gaussian,
Laplacian, polynomial, linear) together with nonnegative weighted sums of
them.  A fitted predictor is a ``KernelModel``: an expansion
f(x) = sum_m a_m sum_n alpha_n r_n(x, x_m) over stored centers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

# Gram eigenvalues below -PSD_SLACK * ||G|| indicate a real failure, not
# floating-point noise; the families here are PSD in exact arithmetic.
PSD_SLACK = 1e-9


@dataclass(eq=False)
class Gaussian:
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("Gaussian width must be positive")


@dataclass(eq=False)
class Laplacian:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("Laplacian scale must be positive")


@dataclass(eq=False)
class Polynomial:
    degree: int
    offset: float = 0.0

    def __post_init__(self):
        if int(self.degree) < 1:
            raise ValueError("polynomial degree must be >= 1")
        self.degree = int(self.degree)
        if self.offset < 0:
            raise ValueError("polynomial offset must be >= 0")


@dataclass(eq=False)
class Linear:
    pass


@dataclass(eq=False)
class WeightedSum:
    """Nonnegative combination sum_n alpha_n r_n; PSD since each r_n is."""

    kernels: Sequence["KernelSpec"]
    weights: np.ndarray

    def __post_init__(self):
        self.kernels = tuple(self.kernels)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.kernels):
            raise ValueError("one weight per kernel is required")
        if np.any(w < 0):
            raise ValueError("combination weights must be nonnegative")
        self.weights = w


KernelSpec = Union[Gaussian, Laplacian, Polynomial, Linear, WeightedSum]


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty (n, d) array")
    return pts


def kernel_matrix(spec: KernelSpec, x, y) -> np.ndarray:
    """Cross-kernel matrix r(x_i, y_j) for two point sets."""
    X = _as_points(x)
    Y = _as_points(y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"point dimensions differ: {X.shape[1]} vs {Y.shape[1]}")
    if isinstance(spec, Gaussian):
        d2 = np.sum((X[:, None, :] - Y[None, :, :]) ** 2, axis=-1)
        return np.exp(-d2 / (2.0 * spec.width ** 2))
    if isinstance(spec, Laplacian):
        d = np.sqrt(np.sum((X[:, None, :] - Y[None, :, :]) ** 2, axis=-1))
        return np.exp(-d / spec.scale)
    if isinstance(spec, Polynomial):
        return (X @ Y.T + spec.offset) ** spec.degree
    if isinstance(spec, Linear):
        return X @ Y.T
    if isinstance(spec, WeightedSum):
        out = np.zeros((X.shape[0], Y.shape[0]))
        for k, a in zip(spec.kernels, spec.weights):
            if a != 0.0:
                out += a * kernel_matrix(k, X, Y)
        return out
    raise TypeError(f"not a kernel spec: {spec!r}")


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Gram matrix on a point set; symmetric and PSD up to roundoff.

    Eigenvalues slightly below zero (within PSD_SLACK * ||G||) are
    accepted as numerical error; anything worse raises.
    """
    pts = _as_points(points)
    G = kernel_matrix(spec, pts, pts)
    G = 0.5 * (G + G.T)
    w = np.linalg.eigvalsh(G)
    floor = -PSD_SLACK * max(np.abs(w).max(), 1e-300)
    if w.min() < floor:
        raise ValueError(
            f"Gram matrix is not positive semidefinite: min eigenvalue {w.min():.3e}"
        )
    return G


def multi_kernel(kernels: Sequence[KernelSpec], weights) -> WeightedSum:
    """Weighted sum of kernels; its Gram is the same combination of Grams."""
    return WeightedSum(tuple(kernels), np.asarray(weights, dtype=float))


@dataclass(eq=False)
class KernelModel:
    """Fitted kernel expansion with per-kernel combination weights.

    ``diagnostics`` carries solver convergence information when the model
    comes out of an iterative fit; it is not part of the prediction.
    """

    kernels: Sequence[KernelSpec]
    combo_weights: np.ndarray
    centers: np.ndarray
    coefficients: np.ndarray
    diagnostics: object = None

    def __post_init__(self):
        self.kernels = tuple(self.kernels)
        self.combo_weights = np.asarray(self.combo_weights, dtype=float)
        if self.combo_weights.size != len(self.kernels):
            raise ValueError("one combination weight per kernel is required")
        if np.any(self.combo_weights < 0):
            raise ValueError("combination weights must be nonnegative")
        self.centers = _as_points(self.centers)
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.size != self.centers.shape[0]:
            raise ValueError("one coefficient per center is required")

    @property
    def combined_kernel(self) -> WeightedSum:
        return WeightedSum(self.kernels, self.combo_weights)


def predict(model: KernelModel, x) -> float:
    """Evaluate the expansion at a single point."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(predict_many(model, x)[0])


def predict_many(model: KernelModel, x) -> np.ndarray:
    """Evaluate the expansion at each row of ``x``."""
    K = kernel_matrix(model.combined_kernel, x, model.centers)
    return K @ model.coefficients


def predict_components(model: KernelModel, x) -> np.ndarray:
    """Per-kernel contributions, shape (n_points, n_kernels); rows sum to
    the full prediction."""
    X = _as_points(x)
    out = np.zeros((X.shape[0], len(model.kernels)))
    for n, (k, a) in enumerate(zip(model.kernels, model.combo_weights)):
        if a != 0.0:
            out[:, n] = a * (kernel_matrix(k, X, model.centers) @ model.coefficients)
    return out
