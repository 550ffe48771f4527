"""Galerkin assembly of the Koopman matrix and spectral time propagation.

Along a trajectory of dx/dt = f(x), each basis function evolves as
dL_i/dt = grad(L_i) . f, which projects back onto the basis:

    K[i, k] = <dL_i/dt, L_k>        so that        dL/dt = K L

(exactly when f is linear, in the Galerkin-optimal sense otherwise).  With
right eigenvectors K V = V diag(lambda), observables g = H L propagate
analytically:

    g(t_k) = Re[ H V diag(exp(lambda t_k)) phi0 ],    phi0 = Vinv L(x0)

No time stepping is involved; each output time costs one set of scalar
exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, basis_as_polynomial
from .dynamics import MAX_POLY_DEGREE, ObservableSet, VectorField
from .errors import NearDefectiveError, NonFiniteError, ValidationError
from .polyalg import (
    Polynomial,
    box_inner_product,
    canonicalize,
    partial_derivative,
    poly_add,
    poly_mul,
)

__all__ = [
    "NEAR_DEFECTIVE_CONDITION",
    "EXP_OVERFLOW_LIMIT",
    "EigenDiagnostics",
    "ModelDiagnostics",
    "KoopmanModel",
    "Trajectory",
    "total_derivative",
    "assemble_koopman",
    "observable_matrix",
    "eigendecompose",
    "build_model",
    "initial_eigenfunctions",
    "propagate",
    "propagate_observables",
    "skewness_diagnostic",
]

NEAR_DEFECTIVE_CONDITION = 1e12
EXP_OVERFLOW_LIMIT = 700.0


def total_derivative(basis: BasisSet, i: int, vf: VectorField) -> Polynomial:
    """d/dt of basis function i along the flow: sum_j dL_i/dx_j * f_j."""
    if vf.m != basis.m:
        raise ValueError(f"vector field dimension {vf.m} != basis dimension {basis.m}")
    li = basis_as_polynomial(basis, i)
    total = canonicalize([], basis.m)
    for j, fj in enumerate(vf.components):
        total = poly_add(total, poly_mul(partial_derivative(li, j), fj))
    return total


def assemble_koopman(basis: BasisSet, vf: VectorField) -> np.ndarray:
    """Galerkin projection of the flow derivative onto the basis.

    Row i holds the expansion of dL_i/dt, so K acts from the left:
    dL/dt = K L.
    """
    if vf.m != basis.m:
        raise ValueError(f"vector field dimension {vf.m} != basis dimension {basis.m}")
    if vf.max_degree > MAX_POLY_DEGREE:
        raise ValueError(f"vector field degree {vf.max_degree} exceeds {MAX_POLY_DEGREE}")
    funcs = [basis_as_polynomial(basis, k) for k in range(basis.n)]
    K = np.empty((basis.n, basis.n))
    for i in range(basis.n):
        flow_derivative = total_derivative(basis, i, vf)
        for k in range(basis.n):
            K[i, k] = box_inner_product(flow_derivative, funcs[k])
    K.flags.writeable = False
    return K


def observable_matrix(basis: BasisSet, observables: ObservableSet) -> np.ndarray:
    """Project each observable onto the basis: H[i, k] = <g_i, L_k>.

    The projection reproduces g_i exactly only when deg g_i <= c, so higher
    degrees are rejected instead of silently truncated.
    """
    for name, poly in zip(observables.names, observables.polys):
        if poly.m != basis.m:
            raise ValidationError(
                f"observable '{name}' has dimension {poly.m}, expected {basis.m}"
            )
        if poly.total_degree > basis.c:
            raise ValidationError(
                f"observable '{name}' has degree {poly.total_degree} > order {basis.c}"
            )
    funcs = [basis_as_polynomial(basis, k) for k in range(basis.n)]
    H = np.empty((len(observables), basis.n))
    for i, g in enumerate(observables.polys):
        for k in range(basis.n):
            H[i, k] = box_inner_product(g, funcs[k])
    H.flags.writeable = False
    return H


@dataclass(frozen=True)
class EigenDiagnostics:
    """Quality measures of one eigendecomposition."""

    eigenresidual: float  # max entry of |K V - V diag(lambda)|
    eigencondition: float  # 2-norm condition number of V


def eigendecompose(
    K: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, EigenDiagnostics]:
    """Eigenvalues and right eigenvectors of K, deterministically normalized.

    Eigenvalues sort by descending real part, then descending imaginary
    part.  Each eigenvector column is scaled to unit norm and rotated so its
    first nonzero entry is positive real, which pins the output regardless
    of eigensolver backend conventions.  K itself is handed to the solver
    untouched -- no pre-scaling of columns.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"K must be square, got shape {K.shape}")
    if not np.isfinite(K).all():
        raise ValueError("K contains non-finite entries")
    try:
        eigenvalues, vectors = np.linalg.eig(K)
    except np.linalg.LinAlgError as exc:
        raise NonFiniteError(f"eigendecomposition failed: {exc}") from None
    eigenvalues = eigenvalues.astype(complex)
    vectors = vectors.astype(complex)
    if not (np.isfinite(eigenvalues).all() and np.isfinite(vectors).all()):
        raise NonFiniteError("eigendecomposition produced non-finite values")

    order = np.lexsort((-eigenvalues.imag, -eigenvalues.real))
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        column = vectors[:, j] / np.linalg.norm(vectors[:, j])
        pivot = column[np.argmax(np.abs(column) > 1e-12)]
        vectors[:, j] = column * (pivot.conjugate() / abs(pivot))

    condition = float(np.linalg.cond(vectors))
    if not math.isfinite(condition) or condition > NEAR_DEFECTIVE_CONDITION:
        raise NearDefectiveError(
            f"eigenvector condition {condition:.3e} exceeds "
            f"{NEAR_DEFECTIVE_CONDITION:.0e}; K is too close to defective"
        )
    inverse = np.linalg.inv(vectors)
    residual = float(np.abs(K @ vectors - vectors * eigenvalues[None, :]).max())
    for arr in (eigenvalues, vectors, inverse):
        arr.flags.writeable = False
    return eigenvalues, vectors, inverse, EigenDiagnostics(residual, condition)


def skewness_diagnostic(K: np.ndarray) -> float:
    """How far K is from skew-symmetric: ||K + K^T||_F / max(1, ||K||_F).

    A perfectly skew-symmetric K would preserve basis orthonormality along
    the flow; truncation and boundary flux make some deviation normal, so
    this is reported, never asserted against a bound.
    """
    K = np.asarray(K, dtype=float)
    return float(np.linalg.norm(K + K.T) / max(1.0, np.linalg.norm(K)))


@dataclass(frozen=True)
class ModelDiagnostics:
    eigenresidual: float
    eigencondition: float
    skewness: float


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    """Assembled and eigendecomposed spectral model of one system."""

    basis: BasisSet
    K: np.ndarray
    H: np.ndarray
    observable_names: tuple[str, ...]
    eigenvalues: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray
    diagnostics: ModelDiagnostics


def build_model(basis: BasisSet, vf: VectorField, observables: ObservableSet) -> KoopmanModel:
    """Assemble K and H for `vf` on `basis` and eigendecompose."""
    K = assemble_koopman(basis, vf)
    H = observable_matrix(basis, observables)
    eigenvalues, V, Vinv, eig = eigendecompose(K)
    diagnostics = ModelDiagnostics(
        eigenresidual=eig.eigenresidual,
        eigencondition=eig.eigencondition,
        skewness=skewness_diagnostic(K),
    )
    return KoopmanModel(
        basis=basis,
        K=K,
        H=H,
        observable_names=tuple(observables.names),
        eigenvalues=eigenvalues,
        V=V,
        Vinv=Vinv,
        diagnostics=diagnostics,
    )


def initial_eigenfunctions(Vinv: np.ndarray, h0: np.ndarray) -> np.ndarray:
    """Eigenfunction values at the initial state: phi0 = Vinv h0."""
    Vinv = np.asarray(Vinv)
    h0 = np.asarray(h0, dtype=float)
    if h0.shape != (Vinv.shape[1],):
        raise ValueError(f"h0 has shape {h0.shape}, expected ({Vinv.shape[1]},)")
    return Vinv @ h0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Observable values on a time grid, one row per observable.

    `max_imag` is the largest imaginary magnitude discarded when taking the
    real part; for a real initial state it should sit at roundoff level.
    """

    times: np.ndarray
    values: np.ndarray
    max_imag: float


def propagate(model: KoopmanModel, phi0: np.ndarray, times) -> Trajectory:
    """Evaluate the model's observables at each requested time."""
    return propagate_observables(model.H, model.eigenvalues, model.V, phi0, times)


def propagate_observables(
    H: np.ndarray, eigenvalues: np.ndarray, V: np.ndarray, phi0: np.ndarray, times
) -> Trajectory:
    """values[:, k] = Re[H V diag(exp(lambda t_k)) phi0], per-mode exponentials."""
    times = np.array(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-D array")
    if not np.isfinite(times).all():
        raise ValueError("times must be finite")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    phi0 = np.asarray(phi0)

    growth = np.multiply.outer(np.asarray(eigenvalues).real, times)
    if growth.max() > EXP_OVERFLOW_LIMIT:
        raise OverflowError(
            f"Re(lambda)*t reaches {growth.max():.1f} > {EXP_OVERFLOW_LIMIT}; "
            "exp would overflow"
        )
    modes = np.exp(np.multiply.outer(np.asarray(eigenvalues), times)) * phi0[:, None]
    full = (np.asarray(H) @ np.asarray(V)) @ modes
    max_imag = float(np.abs(full.imag).max()) if np.iscomplexobj(full) else 0.0
    values = np.ascontiguousarray(full.real)
    if not np.isfinite(values).all():
        raise NonFiniteError("propagation produced non-finite values")
    times.flags.writeable = False
    values.flags.writeable = False
    return Trajectory(times=times, values=values, max_imag=max_imag)
