"""Hamming-weight sectors and charge-conserving Haar unitaries."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence, Union

import numpy as np

from .qstate import PureState, StateError

MAX_QUBITS = 20

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


class ConfigError(ValueError):
    """Invalid experiment or code parameters."""


def popcounts(m: int) -> np.ndarray:
    """Hamming weight of every basis index ``0 .. 2**m - 1``."""
    idx = np.arange(1 << m, dtype=np.int64)
    w = np.zeros_like(idx)
    for b in range(m):
        w += (idx >> b) & 1
    return w


@dataclass(frozen=True)
class SectorDecomposition:
    """Basis indices of ``n`` qubits grouped by Hamming weight.

    ``sectors[j]`` lists the indices of weight ``j`` in increasing order,
    ``position[b]`` is the position of index ``b`` inside its sector.
    """

    n: int
    sectors: tuple
    dims: tuple
    weights: np.ndarray
    position: np.ndarray

    @property
    def dim(self) -> int:
        return 1 << self.n


def hamming_sectors(n: int) -> SectorDecomposition:
    if not 1 <= n <= MAX_QUBITS:
        raise ConfigError(f"n={n} outside the supported range 1..{MAX_QUBITS}")
    w = popcounts(n)
    sectors = tuple(np.flatnonzero(w == j) for j in range(n + 1))
    position = np.empty(1 << n, dtype=np.int64)
    for idx in sectors:
        idx.setflags(write=False)
        position[idx] = np.arange(idx.size)
    w.setflags(write=False)
    position.setflags(write=False)
    return SectorDecomposition(n, sectors, tuple(comb(n, j) for j in range(n + 1)),
                               w, position)


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_seed(master_seed: int, *counter: int) -> np.random.SeedSequence:
    """Independent seed for trial ``counter`` of a run seeded by ``master_seed``.

    ``counter`` may be several integers (e.g. ``n`` and a trial number). The
    result depends only on its arguments, so trials can be generated in any
    order or concurrently.
    """
    return np.random.SeedSequence(entropy=int(master_seed),
                                  spawn_key=tuple(int(c) for c in counter))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``d x d`` unitary (Ginibre + QR with phase fix)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    # Without this phase correction the QR output is not Haar distributed.
    return q * (diag / np.abs(diag))


@dataclass(frozen=True)
class BlockUnitary:
    """Charge-conserving unitary stored as one dense block per weight sector."""

    decomposition: SectorDecomposition
    blocks: tuple

    @property
    def n(self) -> int:
        return self.decomposition.n

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        """Apply to vectors stacked along axis 0 (shape ``(2**n,)`` or ``(2**n, r)``)."""
        vecs = np.asarray(vecs, dtype=complex)
        out = np.empty_like(vecs)
        for idx, block in zip(self.decomposition.sectors, self.blocks):
            out[idx] = block @ vecs[idx]
        return out

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.decomposition.dim,) * 2, dtype=complex)
        for idx, block in zip(self.decomposition.sectors, self.blocks):
            dense[np.ix_(idx, idx)] = block
        return dense

    def left_permute(self, perm: Sequence[int]) -> "BlockUnitary":
        """Return ``P U`` where ``P`` moves qubit ``q`` to position ``perm[q]``.

        ``P`` preserves Hamming weight, so the result is again block
        diagonal, and ``P U`` has the same distribution as ``U``.
        """
        dec = self.decomposition
        target = permute_indices(np.arange(dec.dim), perm, dec.n)
        blocks = []
        for idx, block in zip(dec.sectors, self.blocks):
            rows = dec.position[target[idx]]
            new = np.empty_like(block)
            new[rows] = block
            blocks.append(new)
        return BlockUnitary(dec, tuple(blocks))


def permute_indices(indices: np.ndarray, perm: Sequence[int], n: int) -> np.ndarray:
    """Basis indices after moving qubit ``q`` to position ``perm[q]``."""
    if sorted(perm) != list(range(n)):
        raise StateError(f"{perm} is not a permutation of {n} qubits")
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros_like(indices)
    for q, p in enumerate(perm):
        bit = (indices >> (n - 1 - q)) & 1
        out |= bit << (n - 1 - p)
    return out


def identity_blocks(decomposition: SectorDecomposition) -> BlockUnitary:
    return BlockUnitary(decomposition,
                        tuple(np.eye(d, dtype=complex) for d in decomposition.dims))


def sample_block_haar(decomposition: SectorDecomposition, seed: SeedLike) -> BlockUnitary:
    """Draw ``U = (+)_j U_j`` with independent Haar blocks ``U_j``."""
    rng = make_rng(seed)
    return BlockUnitary(decomposition,
                        tuple(haar_unitary(d, rng) for d in decomposition.dims))


def weight_projector(decomposition: SectorDecomposition, j: int) -> np.ndarray:
    if not 0 <= j <= decomposition.n:
        raise StateError(f"weight {j} out of range 0..{decomposition.n}")
    return np.diag((decomposition.weights == j).astype(float))


def weight_operator(m: int) -> np.ndarray:
    """Diagonal of the Hamming weight operator on ``m`` qubits."""
    return popcounts(m).astype(float)


def dicke_entangled_state(m: int, i: int) -> PureState:
    """``C(m,i)^(-1/2) sum_{|v|=i} |v>|v>`` on ``2m`` qubits."""
    if not 0 <= i <= m:
        raise StateError(f"weight {i} out of range 0..{m}")
    idx = np.flatnonzero(popcounts(m) == i)
    amps = np.zeros(1 << (2 * m), dtype=complex)
    amps[(idx << m) | idx] = 1.0 / np.sqrt(idx.size)
    return PureState(amps, 2 * m)


def max_entangled_state(m: int) -> PureState:
    """``m`` EPR pairs, first register then second."""
    idx = np.arange(1 << m)
    amps = np.zeros(1 << (2 * m), dtype=complex)
    amps[(idx << m) | idx] = 2.0 ** (-m / 2)
    return PureState(amps, 2 * m)


def ancilla_state(m: int, alpha: int, kind: str = "basis") -> PureState:
    """Weight-``alpha`` ancilla on ``m`` qubits.

    ``kind="basis"`` gives ``|1^alpha 0^(m-alpha)>``; ``kind="dicke"`` the
    uniform superposition of all weight-``alpha`` strings.
    """
    if not 0 <= alpha <= m:
        raise StateError(f"ancilla weight {alpha} out of range 0..{m}")
    if kind == "basis":
        return PureState.basis("1" * alpha + "0" * (m - alpha))
    if kind == "dicke":
        amps = (popcounts(m) == alpha).astype(complex)
        return PureState(amps / np.sqrt(amps.sum().real), m)
    raise ConfigError(f"unknown ancilla kind {kind!r}")
