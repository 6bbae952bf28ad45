"""Dense state vectors and density matrices on qubit registers.

Conventions used throughout the package:

* qubit ``0`` is the most significant bit of a computational-basis index;
* qubit indices passed to :func:`partial_trace` are 0-based;
* composite registers list logical qubits before ancilla qubits, and the
  physical register before any reference register.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

# Structural invariants (hermiticity, normalization, PSD) are checked at
# STRUCT_TOL; derived equalities in tests use DERIVED_TOL.
STRUCT_TOL = 1e-10
DERIVED_TOL = 1e-9


class StateError(ValueError):
    """Raised when an array does not satisfy a state invariant."""


def _num_qubits(dim: int) -> int:
    m = int(dim).bit_length() - 1
    if dim < 1 or (1 << m) != dim:
        raise StateError(f"dimension {dim} is not a power of two")
    return m


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on ``num_qubits`` qubits."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << self.num_qubits:
            raise StateError(
                f"{amps.size} amplitudes do not match {self.num_qubits} qubits")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > STRUCT_TOL:
            raise StateError(f"state norm^2 is {norm}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(amps, _num_qubits(amps.size))

    @classmethod
    def basis(cls, bits: str) -> "PureState":
        """Computational basis state ``|bits>``; ``bits`` like ``"0110"``."""
        m = len(bits)
        amps = np.zeros(1 << m, dtype=complex)
        amps[int(bits, 2) if m else 0] = 1.0
        return cls(amps, m)

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()),
                               self.num_qubits)

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(np.kron(self.amplitudes, other.amplitudes),
                         self.num_qubits + other.num_qubits)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian PSD matrix on ``num_qubits`` qubits.

    With ``subnormalized=True`` the trace may be anything in ``[0, 1]``.
    """

    matrix: np.ndarray
    num_qubits: int
    subnormalized: bool = False

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dim = 1 << self.num_qubits
        if mat.shape != (dim, dim):
            raise StateError(
                f"matrix shape {mat.shape} does not match {self.num_qubits} qubits")
        if not np.allclose(mat, mat.conj().T, rtol=0, atol=STRUCT_TOL):
            raise StateError("matrix is not Hermitian")
        if np.linalg.eigvalsh(mat).min(initial=0.0) < -STRUCT_TOL:
            raise StateError("matrix has a negative eigenvalue")
        tr = np.trace(mat).real
        if self.subnormalized:
            if tr > 1.0 + STRUCT_TOL:
                raise StateError(f"trace {tr} exceeds 1")
        elif abs(tr - 1.0) > STRUCT_TOL:
            raise StateError(f"trace is {tr}, expected 1")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix, subnormalized: bool = False) -> "DensityOperator":
        mat = np.asarray(matrix, dtype=complex)
        return cls(mat, _num_qubits(mat.shape[0]), subnormalized)


StateLike = Union[PureState, DensityOperator, np.ndarray]


def as_matrix(state: StateLike) -> np.ndarray:
    """Return the density matrix of ``state`` as a complex array."""
    if isinstance(state, DensityOperator):
        return state.matrix
    if isinstance(state, PureState):
        return np.outer(state.amplitudes, state.amplitudes.conj())
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    return arr


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian, numerically PSD matrix.

    Eigenvalues in ``[-STRUCT_TOL, 0)`` are clipped to zero; anything more
    negative is rejected.
    """
    w, v = np.linalg.eigh(mat)
    if w.size and w[0] < -STRUCT_TOL:
        raise StateError(f"matrix is not PSD (min eigenvalue {w[0]:.3g})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _check_pair(rho: np.ndarray, sigma: np.ndarray):
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise StateError(f"shape mismatch: {rho.shape} vs {sigma.shape}")


def fidelity(rho: StateLike, sigma: StateLike) -> float:
    """Root fidelity ``F = ||sqrt(rho) sqrt(sigma)||_1``.

    This is the square-root convention (``F(rho, rho) = 1``, orthogonal
    pure states give 0), not its square.
    """
    a, b = as_matrix(rho), as_matrix(sigma)
    _check_pair(a, b)
    m = psd_sqrt(a) @ psd_sqrt(b)
    val = np.linalg.svd(m, compute_uv=False).sum()
    return float(min(max(val, 0.0), 1.0))


def purified_distance(rho: StateLike, sigma: StateLike) -> float:
    f = fidelity(rho, sigma)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def trace_norm(mat: np.ndarray) -> float:
    """Sum of singular values of a square matrix."""
    mat = as_matrix(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise StateError(f"expected a square matrix, got shape {mat.shape}")
    return float(np.linalg.svd(mat, compute_uv=False).sum())


def outer_trace_norm(left: np.ndarray, right: np.ndarray) -> float:
    """Trace norm of ``left @ right^dagger`` for tall ``(D, r)`` factors.

    Costs O(D r^2) instead of forming the ``D x D`` product.
    """
    _, ra = np.linalg.qr(np.asarray(left, dtype=complex))
    _, rb = np.linalg.qr(np.asarray(right, dtype=complex))
    return float(np.linalg.svd(ra @ rb.conj().T, compute_uv=False).sum())


def _normalize_keep(keep: Iterable[int], m: int) -> list[int]:
    keep = sorted(set(int(q) for q in keep))
    for q in keep:
        if not 0 <= q < m:
            raise StateError(f"qubit index {q} out of range for {m} qubits")
    return keep


def partial_trace(state: StateLike, keep: Iterable[int],
                  num_qubits: int | None = None) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep``.

    Kept qubits appear in increasing index order in the result. Pure
    inputs (``PureState`` or a 1-D array) never form the full density
    matrix: the result is the Gram matrix of amplitude slices.
    """
    if isinstance(state, PureState):
        vec, m = state.amplitudes, state.num_qubits
    elif isinstance(state, DensityOperator):
        vec, m = None, state.num_qubits
        mat = state.matrix
    else:
        arr = np.asarray(state, dtype=complex)
        m = num_qubits if num_qubits is not None else _num_qubits(arr.shape[0])
        if arr.ndim == 1:
            vec = arr
        else:
            vec, mat = None, arr
    keep = _normalize_keep(keep, m)
    rest = [q for q in range(m) if q not in keep]
    dk = 1 << len(keep)
    if vec is not None:
        psi = vec.reshape((2,) * m).transpose(keep + rest).reshape(dk, -1)
        return psi @ psi.conj().T
    t = mat.reshape((2,) * (2 * m))
    t = t.transpose(keep + rest + [m + q for q in keep] + [m + q for q in rest])
    dr = 1 << len(rest)
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("arbr->ab", t)


def reduce_diagonal(diag: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a diagonal operator given by its diagonal vector."""
    diag = np.asarray(diag)
    m = _num_qubits(diag.size)
    keep = _normalize_keep(keep, m)
    rest = tuple(q for q in range(m) if q not in keep)
    t = diag.reshape((2,) * m).sum(axis=rest) if rest else diag.reshape((2,) * m)
    # Summing over axes keeps the remaining ones in increasing order.
    return t.reshape(-1)
