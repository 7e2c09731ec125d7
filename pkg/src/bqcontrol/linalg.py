"""Skew-Hermitian/unitary kernels shared by every other module.

All matrices are plain complex numpy arrays.  Construction helpers validate and
return arrays rather than wrapping them in classes; downstream code relies on
the exact algebraic identities enforced here (entrywise skew symmetry, unitary
propagators from a Hermitian eigendecomposition).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "EigendecompositionError",
    "skew_hermitian",
    "is_skew_hermitian",
    "assert_unitary",
    "unitarity_defect",
    "skew_eigensystem",
    "expm_skew",
    "commutator",
    "real_span_dimension",
]

# Validation thresholds from the interface contract.
SKEW_ATOL = 1e-8
UNITARY_ATOL = 1e-12


class EigendecompositionError(RuntimeError):
    """Raised when the Hermitian eigensolver fails; carries matrix diagnostics."""

    def __init__(self, dim, norm):
        self.dim = int(dim)
        self.norm = float(norm)
        super().__init__(
            f"eigendecomposition failed for matrix of dimension {self.dim}, "
            f"max-abs norm {self.norm:.6e}"
        )


def _as_square(X, name="matrix"):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"{name} must be square, got shape {X.shape}")
    return X.astype(complex, copy=False)


def skew_hermitian(X, atol=SKEW_ATOL):
    """Project X onto its skew-Hermitian part (X - X^H)/2.

    The projection makes M[j, k] == -conj(M[k, j]) hold exactly (same floating
    point operations on both triangles) and the diagonal purely imaginary.
    Inputs whose Hermitian part exceeds `atol` in max-abs norm are rejected as
    likely bugs rather than silently repaired.
    """
    X = _as_square(X)
    M = (X - X.conj().T) / 2.0
    defect = np.max(np.abs(X - M)) if X.size else 0.0
    if defect > atol:
        raise ValueError(
            f"input is not skew-Hermitian within {atol:g} (defect {defect:.3e})"
        )
    return M


def is_skew_hermitian(M, atol=SKEW_ATOL):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return bool(np.max(np.abs(M + M.conj().T)) <= 2 * atol) if M.size else True


def unitarity_defect(U):
    """max-abs norm of U^H U - I."""
    U = _as_square(U, "U")
    n = U.shape[0]
    return float(np.max(np.abs(U.conj().T @ U - np.eye(n)))) if n else 0.0


def assert_unitary(U, atol=UNITARY_ATOL):
    d = unitarity_defect(U)
    if d > atol:
        raise ValueError(f"matrix is not unitary within {atol:g} (defect {d:.3e})")
    return np.asarray(U, dtype=complex)


def skew_eigensystem(M, validate=True):
    """Eigendecomposition of a skew-Hermitian M as M = V diag(-i w) V^H.

    Returns (w, V) with w real (the spectrum of the Hermitian matrix i M) and
    V unitary, so expm(t M) = V diag(exp(-i t w)) V^H.
    """
    if validate:
        M = skew_hermitian(M)
    else:
        M = _as_square(M)
    H = 1j * M
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError:
        norm = np.max(np.abs(M)) if M.size else 0.0
        raise EigendecompositionError(M.shape[0], norm) from None
    return w, V


def expm_skew(M, t=1.0, validate=True):
    """Unitary propagator expm(t M) for skew-Hermitian M.

    Computed through the Hermitian eigendecomposition of i M, which keeps the
    result unitary to machine precision regardless of ||t M||.
    """
    w, V = skew_eigensystem(M, validate=validate)
    phases = np.exp(-1j * float(t) * w)
    return (V * phases) @ V.conj().T


def commutator(X, Y):
    """[X, Y] = XY - YX.  Skew-Hermitian inputs give a skew-Hermitian result."""
    X = _as_square(X, "X")
    Y = _as_square(Y, "Y")
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {Y.shape}")
    return X @ Y - Y @ X


def _real_vec(M):
    M = np.asarray(M, dtype=complex).ravel()
    return np.concatenate([M.real, M.imag])


def real_span_dimension(mats, rtol=1e-10):
    """Dimension of the real linear span of a family of matrices.

    Rank of the Gram matrix G[i, j] = Re tr(X_i^H X_j), counting eigenvalues
    above rtol times the largest one.  Empty family has dimension 0.
    """
    mats = list(mats)
    if not mats:
        return 0
    V = np.stack([_real_vec(M) for M in mats])
    G = V @ V.T
    sigma = np.linalg.eigvalsh(G)
    top = sigma[-1]
    if top <= 0.0:
        return 0
    return int(np.sum(sigma > rtol * top))
