"""Small dense complex linear algebra for qubit / two-qubit / three-qubit states.

Tensor convention used everywhere in the package: in ``tensor(a, b)`` the
first factor is the slow index and the second the fast one, so for a
system-environment pair the basis is ordered ``|s e>`` = ``|00>, |01>, |10>, |11>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
# eigenvalues in [-EIG_CLIP, 0) are numerical jitter and get clipped to 0
EIG_CLIP = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
# number operator |1><1|
N1 = np.array([[0, 0], [0, 1]], dtype=complex)


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class InvalidStateError(ValueError):
    """A matrix or vector fails the density-matrix / pure-state invariants."""


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError("matrix has non-finite entries")
    return arr


def dagger(m) -> np.ndarray:
    return as_matrix(m).conj().T


def tensor(*factors) -> np.ndarray:
    """Kronecker product of the factors, first factor slowest."""
    if not factors:
        raise DimensionError("tensor needs at least one factor")
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = np.kron(out, as_matrix(f))
    return out


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_unitary(m, tol: float = 1e-12) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"unitarity needs a square matrix, got {m.shape}")
    eye = np.eye(m.shape[0])
    return bool(np.max(np.abs(m @ m.conj().T - eye)) <= tol and np.max(np.abs(m.conj().T @ m - eye)) <= tol)


def eigvals_hermitian(m) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix in ascending order."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"eigenvalues need a square matrix, got {m.shape}")
    if not is_hermitian(m, tol=1e-10):
        raise InvalidStateError("matrix is not Hermitian")
    # symmetrize so LAPACK sees exactly Hermitian input
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b - b @ a


def partial_trace_env(m, dim_env: int = 2) -> np.ndarray:
    """Trace out the fast (environment) factor of a system-environment operator.

    >>> partial_trace_env(tensor(np.diag([0.3, 0.7]), np.diag([0.5, 0.5]))).real
    array([[0.3, 0. ],
           [0. , 0.7]])
    """
    m = as_matrix(m)
    n = m.shape[0]
    if m.shape != (n, n) or n % dim_env:
        raise DimensionError(f"cannot trace a {dim_env}-dim environment out of shape {m.shape}")
    d_s = n // dim_env
    return np.einsum("iaja->ij", m.reshape(d_s, dim_env, d_s, dim_env))


def partial_trace_sys(m, dim_sys: int = 2) -> np.ndarray:
    """Trace out the slow (system) factor, keeping the environment."""
    m = as_matrix(m)
    n = m.shape[0]
    if m.shape != (n, n) or n % dim_sys:
        raise DimensionError(f"cannot trace a {dim_sys}-dim system out of shape {m.shape}")
    d_e = n // dim_sys
    return np.einsum("aiaj->ij", m.reshape(dim_sys, d_e, dim_sys, d_e))


def validate_density_matrix(rho, tol: float = TRACE_TOL) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return the matrix as an array."""
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise InvalidStateError(f"density matrix trace is {tr.real:.15g}, not 1")
    if eigvals_hermitian(rho)[0] < -EIG_CLIP:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def diag_state(*populations: float) -> np.ndarray:
    """Diagonal density matrix with the given populations."""
    return validate_density_matrix(np.diag(np.asarray(populations, dtype=complex)))


def von_neumann_entropy(rho) -> float:
    """S(rho) = -tr(rho ln rho) in nats, with 0 ln 0 = 0."""
    rho = validate_density_matrix(rho)
    lam = eigvals_hermitian(rho)
    if lam[0] < -EIG_CLIP:
        raise InvalidStateError("negative eigenvalue beyond clipping tolerance")
    lam = lam[lam > 0.0]
    return float(max(-np.sum(lam * np.log(lam)), 0.0))


def shannon_entropy(probs) -> float:
    """Entropy in nats of a discrete distribution, 0 ln 0 = 0."""
    q = np.asarray(probs, dtype=float)
    q = q[q > 0.0]
    return float(-np.sum(q * np.log(q)))


@dataclass(frozen=True)
class PureState:
    """State vector ``sum_i amplitudes[i] |i>``.

    Sub-normalized vectors are only accepted with ``subnormalized=True``; they
    appear when a path of the interferometer is blocked.
    """

    amplitudes: np.ndarray
    subnormalized: bool = False

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(amp)):
            raise InvalidStateError("amplitudes must be finite")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        n2 = self.norm2
        if self.subnormalized:
            if n2 > 1.0 + 1e-12:
                raise InvalidStateError(f"sub-normalized state has squared norm {n2:.15g} > 1")
        elif abs(n2 - 1.0) > 1e-12:
            raise InvalidStateError(f"state squared norm is {n2:.15g}, not 1")

    @classmethod
    def qubit(cls, a: complex, b: complex, subnormalized: bool = False) -> "PureState":
        """``a|0> + b|1>``."""
        return cls(np.array([a, b], dtype=complex), subnormalized=subnormalized)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def density_matrix(self) -> np.ndarray:
        v = self.amplitudes
        return np.outer(v, v.conj())


def random_pure_state(rng: np.random.Generator, dim: int = 2) -> PureState:
    """Haar-random pure state."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(v / np.linalg.norm(v))


def random_density_matrix(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Random full-rank density matrix (Ginibre ensemble)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def equal_up_to_phase(a, b, tol: float = 1e-12) -> bool:
    """True when ``a = e^{i chi} b`` entrywise within ``tol``.

    The phase is read off the largest-magnitude entry of ``b``.
    """
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False
    k = np.argmax(np.abs(b))
    if abs(b.flat[k]) <= tol:
        return bool(np.max(np.abs(a), initial=0.0) <= tol)
    phase = a.flat[k] / b.flat[k]
    if abs(abs(phase) - 1.0) > 1e-9:
        return False
    return bool(np.max(np.abs(a - phase / abs(phase) * b)) <= tol)
