"""Small dense complex linear algebra.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``. Everything
here is sized for antenna counts (tens) or stream counts (a handful), so the
heavy lifting is delegated to LAPACK through ``numpy.linalg`` and this module
only pins down the contracts the rest of the package relies on: shape checks,
a deterministic phase convention for singular vectors, and positive-definite
checks with readable errors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericalFailure

MAX_SVD_DIM = 64
HERMITIAN_TOL = 1e-10
COND_TOL = 1e-12


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class SvdFactors:
    """``a = u @ diag(singular_values) @ v.conj().T`` with descending values."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self):
        return (self.u * self.singular_values) @ self.v.conj().T


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def svd(a):
    """Thin SVD with a fixed phase convention.

    The largest-magnitude entry of every right-singular vector is rotated to
    be real and nonnegative (first such entry on ties); the matching left
    vector gets the same rotation so the product is unchanged.
    """
    a = as_matrix(a)
    if a.shape[0] > MAX_SVD_DIM or a.shape[1] > MAX_SVD_DIM:
        raise ContractViolation(f"svd supports up to {MAX_SVD_DIM}x{MAX_SVD_DIM}, got {a.shape}")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge for a {a.shape} matrix: {exc}") from exc
    v = vh.conj().T
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    mags = np.abs(pivots)
    phase = np.where(mags > 0, pivots.conj() / np.where(mags > 0, mags, 1.0), 1.0)
    return SvdFactors(u=u * phase, singular_values=s, v=v * phase)


def _checked_eigh(a, what):
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ContractViolation(f"{what} needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > HERMITIAN_TOL * scale:
        raise ContractViolation(f"{what}: matrix is not Hermitian (asymmetry {asym:.3e})")
    herm = 0.5 * (a + a.conj().T)
    evals, evecs = np.linalg.eigh(herm)
    return evals, evecs


def hermitian_inv_sqrt(a):
    """Hermitian ``B`` with ``B @ a @ B^H = I`` for Hermitian positive definite ``a``."""
    evals, evecs = _checked_eigh(a, "hermitian_inv_sqrt")
    lmax = evals[-1]
    if lmax <= 0 or evals[0] <= COND_TOL * lmax:
        raise ContractViolation(
            f"hermitian_inv_sqrt: matrix is not safely positive definite "
            f"(min eigenvalue {evals[0]:.3e}, max {lmax:.3e})"
        )
    return (evecs / np.sqrt(evals)) @ evecs.conj().T


def logdet_hermitian(a):
    """Natural log of det(a) for Hermitian positive definite ``a``."""
    evals, _ = _checked_eigh(a, "logdet_hermitian")
    if evals[0] <= 0:
        raise ContractViolation(
            f"logdet_hermitian: matrix is not positive definite (min eigenvalue {evals[0]:.3e})"
        )
    return float(np.sum(np.log(evals)))
