"""Semi-norm regularized fitting with an unpenalized null space.

The measurement space R^M is split by a biorthogonal system: with
V = nu(P) the cross-correlation of the measurements with a null-space
basis P, matrices U, Vtilde, Utilde are built so that
[Utilde | Vtilde]^T [U | V] = I.  The reduced functionals
nu_tilde = Utilde^T nu annihilate the null space by construction, which
decouples the penalized component of a solution from the free null-space
component.

Two fitting routines use the decomposition on a 1-d grid:

* ``fit_hilbert_seminorm``  squared semi-norm |L f|_2^2: closed form
  through the reduced Gram of the representer basis;
* ``fit_gtv_spline``        l1 semi-norm |L f|_1 for L in {D, D2}: a
  LASSO on the innovation u = L f in the synthesis parametrization
  f = P b + Q u (Q = discrete Green operator, cumulative sums), with the
  null-space block eliminated by least squares and the innovation support
  reduced to at most M - N0 knots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dictionary import reduce_to_extreme, solve_synthesis_lasso

RANK_TOL = 1e-10
KNOT_THRESHOLD = 1e-8


@dataclass(eq=False)
class BiorthoSystem:
    """Matrices V, U, Vtilde, Utilde with [Utilde|Vtilde]^T [U|V] = I_M."""

    V: np.ndarray
    U: np.ndarray
    Vtilde: np.ndarray
    Utilde: np.ndarray

    def identity_error(self) -> float:
        M = self.V.shape[0]
        left = np.hstack([self.Utilde, self.Vtilde]).T
        right = np.hstack([self.U, self.V])
        return float(np.max(np.abs(left @ right - np.eye(M))))


@dataclass(eq=False)
class NullSpaceSystem:
    """Null-space basis (grid columns) and biorthonormal dual functionals."""

    basis: np.ndarray
    dual: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.basis, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        D = np.asarray(self.dual, dtype=float)
        if D.ndim == 1:
            D = D[None, :]
        if D.shape != (P.shape[1], P.shape[0]):
            raise ValueError("dual must be N0 x G for a G x N0 basis")
        err = np.max(np.abs(D @ P - np.eye(P.shape[1])))
        if err > 1e-10:
            raise ValueError(f"dual functionals are not biorthonormal (error {err:.3e})")
        self.basis = P
        self.dual = D


@dataclass(eq=False)
class SplineFit:
    """Grid-function fit split into null-space and innovation parts."""

    values: Optional[np.ndarray]
    null_coeffs: np.ndarray
    innovation: Optional[np.ndarray]
    knots: np.ndarray
    lam: float
    objective: float
    dual_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = True
    kkt_residual: float = 0.0
    n_iter: int = 0


def _rank_check(V: np.ndarray) -> None:
    if V.shape[1] == 0:
        return
    s = np.linalg.svd(V, compute_uv=False)
    if V.shape[1] > V.shape[0] or s[V.shape[1] - 1] <= RANK_TOL * max(s[0], 1e-300):
        raise ValueError(
            "null-space well-posedness fails: nu(P) is rank-deficient, so no "
            "constant B > 0 bounds B*|p| <= |nu(p)| over the null space "
            f"(rank {int(np.sum(s > RANK_TOL * max(s[0], 1e-300)))} < {V.shape[1]})"
        )


def build_biortho(V, pinned_Vtilde=None) -> BiorthoSystem:
    """Complete V = nu(P) to a biorthogonal basis pair of R^M.

    Without pinning, U is an orthonormal basis of the orthogonal
    complement of col(V) (best conditioning), so Utilde = U and
    Vtilde = V (V^T V)^{-1}.  With ``pinned_Vtilde`` given, that matrix is
    kept as the dual block (it must already satisfy Vtilde^T V = I) and U
    spans the null space of its transpose.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    M, N0 = V.shape
    _rank_check(V)
    if N0 == 0:
        eye = np.eye(M)
        return BiorthoSystem(V=V, U=eye, Vtilde=V.copy(), Utilde=eye.copy())
    if pinned_Vtilde is None:
        u_svd, _, _ = np.linalg.svd(V, full_matrices=True)
        U = u_svd[:, N0:]
        Vtilde = V @ np.linalg.inv(V.T @ V)
        return BiorthoSystem(V=V, U=U, Vtilde=Vtilde, Utilde=U.copy())
    Vt = np.asarray(pinned_Vtilde, dtype=float)
    if Vt.ndim == 1:
        Vt = Vt[:, None]
    if Vt.shape != (M, N0):
        raise ValueError(f"pinned Vtilde must be {M} x {N0}")
    err = np.max(np.abs(Vt.T @ V - np.eye(N0)))
    if err > 1e-8:
        raise ValueError(
            f"pinned Vtilde does not biorthonormalize V (Vtilde^T V - I error {err:.3e})"
        )
    u_svd, _, _ = np.linalg.svd(Vt, full_matrices=True)
    U = u_svd[:, N0:]  # orthonormal basis of null(Vtilde^T)
    B = np.hstack([U, V])
    Binv = np.linalg.inv(B)
    Utilde = Binv[:M - N0, :].T
    Vtilde = Binv[M - N0:, :].T
    return BiorthoSystem(V=V, U=U, Vtilde=Vtilde, Utilde=Utilde)


def reduce_measurements(nu, system: BiorthoSystem):
    """Split measurements into null-space-blind and null-space-determining parts.

    Returns (nu_tilde, pstar_tilde) with nu = U nu_tilde + V pstar_tilde;
    nu_tilde = Utilde^T nu annihilates the null space whenever the system
    was built from V = nu P.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.ndim != 2 or nu.shape[0] != system.V.shape[0]:
        raise ValueError(f"nu must have {system.V.shape[0]} rows")
    return system.Utilde.T @ nu, system.Vtilde.T @ nu


def difference_operator(grid_size: int, order: int) -> np.ndarray:
    """Forward difference matrix: (G-order) x G rows of the order-th difference."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if grid_size <= order:
        raise ValueError("grid too small for the requested order")
    D = np.eye(grid_size, k=1)[: grid_size - 1] - np.eye(grid_size)[: grid_size - 1]
    if order == 1:
        return D
    D2 = D[: grid_size - 2, : grid_size - 1] @ D
    return D2


def nullspace_basis(grid_size: int, order: int) -> np.ndarray:
    """Polynomial null space of the difference operator: constants, then a ramp."""
    if order == 1:
        return np.ones((grid_size, 1))
    if order == 2:
        return np.column_stack([np.ones(grid_size), np.arange(grid_size, dtype=float)])
    raise ValueError("order must be 1 or 2")


def green_operator(grid_size: int, order: int) -> np.ndarray:
    """Discrete Green operator Q with L Q = I and Q anchored at the grid start.

    Order 1: running sum (column k is a unit step opening after index k).
    Order 2: double running sum (column k is a ramp hinged at index k+1).
    """
    if order == 1:
        j = np.arange(grid_size)[:, None]
        k = np.arange(grid_size - 1)[None, :]
        return (j > k).astype(float)
    if order == 2:
        j = np.arange(grid_size)[:, None]
        k = np.arange(grid_size - 2)[None, :]
        return np.maximum(j - k - 1, 0).astype(float)
    raise ValueError("order must be 1 or 2")


def grid_null_system(grid_size: int, order: int) -> NullSpaceSystem:
    P = nullspace_basis(grid_size, order)
    return NullSpaceSystem(basis=P, dual=np.linalg.pinv(P))


def projector_coeffs(f, nullsys: NullSpaceSystem) -> np.ndarray:
    """Null-space expansion coefficients b_n = <p*_n, f>."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != nullsys.basis.shape[0]:
        raise ValueError(f"grid function must have length {nullsys.basis.shape[0]}")
    return nullsys.dual @ f


def _detect_knots(u: np.ndarray) -> np.ndarray:
    if u.size == 0:
        return np.zeros(0, dtype=int)
    thresh = KNOT_THRESHOLD * max(1.0, float(np.max(np.abs(u))))
    return np.flatnonzero(np.abs(u) > thresh)


def fit_hilbert_seminorm(nu, y, nullspace, lam: float, operator=None,
                         gram_of_phi=None) -> SplineFit:
    """Fit min |y - nu(f)|^2 + lam |L f|_2^2 with the null space of L free.

    The penalized part is expanded over the representers of the reduced
    measurements, whose Gram is nu_tilde (L^T L)^+ nu_tilde^T; it can be
    passed precomputed as ``gram_of_phi``.  Grid values are synthesized
    when ``operator`` (the matrix of L) is available, otherwise only the
    expansion coefficients are returned.  ``kkt_residual`` is the gradient
    norm of the solved normal equations in the solver's equilibrated
    coordinates (unit-diagonal Gram), the scale on which the certificate
    is meaningful.
    """
    nu = np.asarray(nu, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if nu.ndim != 2 or nu.shape[0] != y.size:
        raise ValueError("nu must be M x G with M matching y")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    P = nullspace.basis if isinstance(nullspace, NullSpaceSystem) else \
        np.asarray(nullspace, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    V = nu @ P
    system = build_biortho(V)
    nu_t = system.Utilde.T @ nu
    Phi = None
    if gram_of_phi is None:
        if operator is None:
            raise ValueError("either operator or gram_of_phi is required")
        L = np.asarray(operator, dtype=float)
        Phi = np.linalg.pinv(L.T @ L) @ nu_t.T
        Gt = nu_t @ Phi
    else:
        Gt = np.asarray(gram_of_phi, dtype=float)
        if Gt.shape != (nu_t.shape[0], nu_t.shape[0]):
            raise ValueError(f"gram_of_phi must be {nu_t.shape[0]} square")
        if operator is not None:
            L = np.asarray(operator, dtype=float)
            Phi = np.linalg.pinv(L.T @ L) @ nu_t.T
    Gt = 0.5 * (Gt + Gt.T)
    # Jacobi equilibration: the representer Gram carries the (huge) scale
    # of (L^T L)^+, which would otherwise square into the normal equations
    # and push the attainable gradient residual above the certificate.
    d = np.sqrt(np.maximum(np.diag(Gt), 1e-300))
    d = np.maximum(d, 1e-8 * np.max(d))
    # measurement responses of the representers live off the null block:
    # nu(phi_m) = U Gt once the representers are shifted into ker(pstar)
    E = np.hstack([system.U @ (Gt / d[None, :]), V])
    n_a = Gt.shape[0]
    penalty = np.zeros((E.shape[1], E.shape[1]))
    penalty[:n_a, :n_a] = Gt / np.outer(d, d)
    lhs = E.T @ E + lam * penalty
    rhs = E.T @ y
    try:
        z = np.linalg.solve(lhs, rhs)
        for _ in range(3):  # iterative refinement toward the certificate
            resid = rhs - lhs @ z
            if np.linalg.norm(resid) <= 1e-12 * (1.0 + np.linalg.norm(y)):
                break
            z = z + np.linalg.solve(lhs, resid)
    except np.linalg.LinAlgError:
        z = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    a, b = z[:n_a] / d, z[n_a:]
    grad_norm = float(2.0 * np.linalg.norm(lhs @ z - rhs))
    objective = float((y - E @ z) @ (y - E @ z) + lam * (a @ Gt @ a))
    values = None
    innovation = None
    knots = np.zeros(0, dtype=int)
    if Phi is not None:
        # shift representers into the kernel of the dual null functionals
        Phi_shifted = Phi - P @ (system.Vtilde.T @ (nu @ Phi))
        values = Phi_shifted @ a + P @ b
        innovation = np.asarray(operator, dtype=float) @ values
        knots = _detect_knots(innovation)
    return SplineFit(
        values=values, null_coeffs=b, innovation=innovation, knots=knots,
        lam=lam, objective=objective, dual_coeffs=a,
        converged=bool(grad_norm <= 1e-10 * (1.0 + np.linalg.norm(y))),
        kkt_residual=grad_norm, n_iter=1,
    )


def _sampling_matrix(sample_indices, grid_size: int) -> np.ndarray:
    idx = np.asarray(sample_indices)
    if idx.ndim == 2:
        if idx.shape[1] != grid_size:
            raise ValueError(f"measurement matrix must have {grid_size} columns")
        return np.asarray(idx, dtype=float)
    idx = idx.astype(int)
    if np.any(idx < 0) or np.any(idx >= grid_size):
        raise ValueError("sample indices must lie inside the grid")
    H = np.zeros((idx.size, grid_size))
    H[np.arange(idx.size), idx] = 1.0
    return H


def fit_gtv_spline(grid_size: int, samples, y, operator: str, lam: float,
                   max_iter: int = 20000, tol: float = 1e-6) -> SplineFit:
    """Fit min |y - H f|^2 + lam |L f|_1 over grid functions, L in {D, D2}.

    ``samples`` is either an index vector (point sampling) or a full
    measurement matrix with one column per grid point.  The free
    null-space block is eliminated by least squares against the residual,
    leaving a LASSO in the innovation u = L f; the solved innovation is
    then reduced to an extreme-point representation with at most M - N0
    active knots.
    """
    order = {"D": 1, "D2": 2}.get(str(operator).upper().replace("^", ""))
    if order is None:
        raise ValueError("operator must be 'D' or 'D2'")
    y = np.asarray(y, dtype=float).reshape(-1)
    H = _sampling_matrix(samples, grid_size)
    if H.shape[0] != y.size:
        raise ValueError("one measurement row per observation is required")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    L = difference_operator(grid_size, order)
    P = nullspace_basis(grid_size, order)
    Q = green_operator(grid_size, order)
    V = H @ P
    _rank_check(V)
    if y.size <= P.shape[1]:
        raise ValueError("more measurements than null-space dimensions are required")
    HQ = H @ Q
    pinv_V = np.linalg.pinv(V)
    proj_perp = np.eye(y.size) - V @ pinv_V
    A = proj_perp @ HQ
    lasso = solve_synthesis_lasso(A, proj_perp @ y, lam, max_iter=max_iter, tol=tol)
    u = reduce_to_extreme(A, lasso.coefficients)
    b = pinv_V @ (y - HQ @ u)
    values = P @ b + Q @ u
    residual = y - H @ values
    objective = float(residual @ residual) + lam * float(np.sum(np.abs(L @ values)))
    return SplineFit(
        values=values, null_coeffs=b, innovation=u, knots=_detect_knots(u),
        lam=lam, objective=objective, dual_coeffs=lasso.coefficients,
        converged=lasso.converged, kkt_residual=lasso.kkt_residual,
        n_iter=lasso.n_iter,
    )
