"""
Small dense matrix kernels: determinant, adjugate, symmetric spectrum,
singular values and the mininorm min_{|v|=1} |Av|.
"""
import numpy as np

from .exceptions import InvalidInputError

SYMMETRY_TOL = 1e-10
PSD_CLAMP = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 50
EPS = np.finfo(float).eps


def as_matrix(A) -> np.ndarray:
    matrix = np.asarray(A, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, np.newaxis]
    if matrix.ndim != 2:
        raise InvalidInputError(f'Expected a matrix, got an array of shape {matrix.shape}')
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError('Matrix entries must be finite')
    return matrix


def _square(A) -> np.ndarray:
    matrix = as_matrix(A)
    rows, cols = matrix.shape
    if rows != cols:
        raise InvalidInputError(f'Expected a square matrix, got {rows}x{cols}')
    return matrix


def determinant(A) -> float:
    """
    Determinant by LU factorisation with partial pivoting.
    """
    return float(np.linalg.det(_square(A)))


def adjugate(A) -> np.ndarray:
    """
    Transposed cofactor matrix; defined for singular matrices too.
    """
    matrix = _square(A)
    size = matrix.shape[0]
    if size == 1:
        return np.ones((1, 1))

    cofactors = np.empty_like(matrix)
    for i in range(size):
        for j in range(size):
            minor = np.delete(np.delete(matrix, i, axis=0), j, axis=1)
            cofactors[i, j] = (-1) ** (i + j) * determinant(minor)
    return cofactors.T


def sym_eigenvalues(B, psd: bool = False) -> np.ndarray:
    """
    Ascending spectrum of a symmetric matrix by cyclic Jacobi rotations.

    With ``psd`` set, eigenvalues in [-1e-12*||B||, 0) are clamped to zero.
    """
    matrix = _square(B)
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    if np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOL * scale:
        raise InvalidInputError('Matrix is not symmetric')

    a = 0.5 * (matrix + matrix.T)
    size = a.shape[0]
    norm = np.linalg.norm(a)

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(0.0, np.sum(a * a) - np.sum(np.diag(a) ** 2)))
        if off <= JACOBI_TOL * norm:
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                if abs(a[p, q]) <= EPS * (abs(a[p, p]) + abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                rotation = np.eye(size)
                rotation[p, p] = rotation[q, q] = c
                rotation[p, q] = s
                rotation[q, p] = -s
                a = rotation.T @ a @ rotation
                a[p, q] = a[q, p] = 0.0

    eigenvalues = np.sort(np.diag(a).copy())
    if psd:
        eigenvalues[(eigenvalues < 0) & (eigenvalues >= -PSD_CLAMP * max(norm, 1.0))] = 0.0
    return eigenvalues


def singular_values(A) -> np.ndarray:
    """
    Ascending singular values, min(rows, cols) of them.
    """
    matrix = as_matrix(A)
    return np.sort(np.linalg.svd(matrix, compute_uv=False))


def mininorm(A) -> float:
    matrix = as_matrix(A)
    rows, cols = matrix.shape
    if cols > rows:
        return 0.0
    return float(singular_values(matrix)[0])


def spectral_norm(A) -> float:
    return float(singular_values(A)[-1])
