"""Encoding with charge-conserving unitaries and erasure complementary channels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .qstate import PureState, StateError, outer_trace_norm
from .sectors import (BlockUnitary, ConfigError, ancilla_state, max_entangled_state,
                      popcounts)

UnitaryLike = Union[BlockUnitary, np.ndarray]


@dataclass(frozen=True)
class CodeParams:
    """Parameters of an (n, k, alpha)-code under erasure of ``t`` qubits.

    ``erased`` defaults to the last ``t`` physical qubits (0-based).
    """

    n: int
    k: int
    alpha: int
    t: int
    erased: tuple = field(default=None)
    ancilla_kind: str = "basis"

    def __post_init__(self):
        n, k, alpha, t = self.n, self.k, self.alpha, self.t
        if not 1 <= k < n:
            raise ConfigError(f"need 1 <= k < n, got k={k}, n={n}")
        if not 0 <= alpha <= n - k:
            raise ConfigError(f"alpha={alpha} outside 0..{n - k}")
        if not 0 <= t <= n:
            raise ConfigError(f"t={t} outside 0..{n}")
        erased = self.erased
        if erased is None:
            erased = tuple(range(n - t, n))
        erased = tuple(sorted(int(q) for q in erased))
        if len(set(erased)) != t or any(not 0 <= q < n for q in erased):
            raise ConfigError(f"erased set {erased} is not {t} distinct qubits of {n}")
        object.__setattr__(self, "erased", erased)
        if self.ancilla_kind not in ("basis", "dicke"):
            raise ConfigError(f"unknown ancilla kind {self.ancilla_kind!r}")

    @property
    def a(self) -> float:
        return self.alpha / self.n

    def ancilla(self) -> PureState:
        return ancilla_state(self.n - self.k, self.alpha, self.ancilla_kind)


@dataclass(frozen=True)
class EncodedState:
    """Encoded pure state on ``n`` physical qubits followed by ``r`` reference qubits."""

    params: CodeParams
    unitary: UnitaryLike
    state: PureState
    r: int


def apply_unitary(U: UnitaryLike, vecs: np.ndarray) -> np.ndarray:
    if isinstance(U, BlockUnitary):
        return U.apply(vecs)
    return np.asarray(U) @ vecs


def _unitary_qubits(U: UnitaryLike) -> int:
    if isinstance(U, BlockUnitary):
        return U.n
    return int(np.asarray(U).shape[0]).bit_length() - 1


def encode(U: UnitaryLike, logical: PureState, params: CodeParams) -> EncodedState:
    """Return ``(U x I_R)(|logical> x |psi_alpha>)`` with the ancilla after L.

    ``logical`` lives on ``k + r`` qubits, L first.
    """
    n, k = params.n, params.k
    if _unitary_qubits(U) != n:
        raise StateError(f"unitary acts on {_unitary_qubits(U)} qubits, expected {n}")
    r = logical.num_qubits - k
    if r < 0:
        raise StateError(f"logical state has {logical.num_qubits} < k={k} qubits")
    lr = logical.amplitudes.reshape(1 << k, 1, 1 << r)
    anc = params.ancilla().amplitudes.reshape(1, -1, 1)
    psi = (lr * anc).reshape(1 << n, 1 << r)
    out = apply_unitary(U, psi)
    return EncodedState(params, U, PureState(out.reshape(-1), n + r), r)


def encode_choi(U: UnitaryLike, params: CodeParams) -> EncodedState:
    """Encode the ``k``-pair maximally entangled state (reference size ``k``)."""
    return encode(U, max_entangled_state(params.k), params)


def unencoded_choi_input(params: CodeParams) -> PureState:
    """``|phi_hat>^{A1 R} x |psi_alpha>^{A2}`` laid out as A (n qubits) then R."""
    U = np.eye(1 << params.n)
    return encode(U, max_entangled_state(params.k), params).state


def complementary_output(enc: EncodedState) -> np.ndarray:
    """State left on the erased qubits and the reference, E first then R."""
    p = enc.params
    keep = list(p.erased) + [p.n + q for q in range(enc.r)]
    n_tot = p.n + enc.r
    amps = enc.state.amplitudes
    rest = [q for q in range(n_tot) if q not in keep]
    psi = amps.reshape((2,) * n_tot).transpose(keep + rest).reshape(1 << len(keep), -1)
    return psi @ psi.conj().T


def _bits_index(x, k: int) -> int:
    if isinstance(x, str):
        if len(x) != k or set(x) - {"0", "1"}:
            raise StateError(f"{x!r} is not a {k}-bit string")
        return int(x, 2) if k else 0
    x = int(x)
    if not 0 <= x < 1 << k:
        raise StateError(f"logical index {x} out of range for k={k}")
    return x


def _encoded_basis_vectors(U: UnitaryLike, xs: Sequence[int],
                           params: CodeParams) -> np.ndarray:
    """Columns ``U |x>|psi_alpha>`` for each logical index in ``xs``."""
    n, k = params.n, params.k
    anc = params.ancilla().amplitudes
    cols = np.zeros((1 << n, len(xs)), dtype=complex)
    span = 1 << (n - k)
    for c, x in enumerate(xs):
        cols[x * span:(x + 1) * span, c] = anc
    return apply_unitary(U, cols)


def _split_erased(vecs: np.ndarray, params: CodeParams) -> np.ndarray:
    """Reshape ``(2**n, c)`` columns into ``(c, 2**t, 2**(n-t))`` slices."""
    n = params.n
    erased = list(params.erased)
    rest = [q for q in range(n) if q not in erased]
    c = vecs.shape[1]
    t = vecs.T.reshape((c,) + (2,) * n)
    t = t.transpose([0] + [1 + q for q in erased] + [1 + q for q in rest])
    return t.reshape(c, 1 << len(erased), -1)


def rho_xxp(U: UnitaryLike, x, xp, params: CodeParams) -> np.ndarray:
    """``Tr_{n-t}[U(|x><x'| x psi_alpha)U^dagger]`` on the erased qubits.

    Trace 1 for ``x == xp`` and 0 otherwise.
    """
    k = params.k
    ix, ixp = _bits_index(x, k), _bits_index(xp, k)
    if ix == ixp:
        s = _split_erased(_encoded_basis_vectors(U, [ix], params), params)
        return s[0] @ s[0].conj().T
    s = _split_erased(_encoded_basis_vectors(U, [ix, ixp], params), params)
    return s[0] @ s[1].conj().T


def all_rho_xxp(U: UnitaryLike, params: CodeParams) -> np.ndarray:
    """Array ``R[x, x']`` of all ``rho^{x,x'}`` operators."""
    xs = list(range(1 << params.k))
    s = _split_erased(_encoded_basis_vectors(U, xs, params), params)
    return np.einsum("xea,yfa->xyef", s, s.conj())


def mu_nu_states(x, xp, k: int) -> dict:
    """The four logical states ``mu^+-``, ``nu^+-`` built from ``|x>`` and ``|x'>``."""
    ix, ixp = _bits_index(x, k), _bits_index(xp, k)
    ex = np.zeros(1 << k, dtype=complex)
    ex[ix] = 1.0
    exp_ = np.zeros(1 << k, dtype=complex)
    exp_[ixp] = 1.0
    s = 1 / np.sqrt(2)
    return {
        "mu+": PureState(s * (ex + exp_), k),
        "mu-": PureState(s * (ex - exp_), k),
        "nu+": PureState(s * (ex + 1j * exp_), k),
        "nu-": PureState(s * (ex - 1j * exp_), k),
    }


def rho_from_mu_nu(U: UnitaryLike, x, xp, params: CodeParams) -> np.ndarray:
    """Rebuild ``rho^{x,x'}`` from the four pure-state complementary outputs."""
    out = {}
    for name, st in mu_nu_states(x, xp, params.k).items():
        enc = encode(U, st, params)
        out[name] = complementary_output(enc)
    return 0.5 * (out["mu+"] - out["mu-"]) + 0.5j * (out["nu+"] - out["nu-"])


def covariance_defect(U: UnitaryLike, params: CodeParams,
                      thetas: Iterable[float]) -> float:
    """Largest trace-norm violation of encoder covariance.

    Checked on the operator basis ``|x><x'|`` of the logical space: compares
    ``e^{i Q_n theta} E(|x><x'|) e^{-i Q_n theta}`` with
    ``E(e^{i Q_k theta}|x><x'| e^{-i Q_k theta})``.
    """
    thetas = list(thetas)
    if not thetas:
        raise ConfigError("need at least one angle")
    k = params.k
    xs = list(range(1 << k))
    cols = _encoded_basis_vectors(U, xs, params)
    wn = popcounts(params.n)
    wk = popcounts(k)
    worst = 0.0
    for theta in thetas:
        phase = np.exp(1j * theta * wn)[:, None]
        rotated = phase * cols
        for x in xs:
            for xp in xs:
                logical_phase = np.exp(1j * theta * (wk[x] - wk[xp]))
                left = np.stack([rotated[:, x], -logical_phase * cols[:, x]], axis=1)
                right = np.stack([rotated[:, xp], cols[:, xp]], axis=1)
                worst = max(worst, outer_trace_norm(left, right))
    return worst


def physical_weight_support(enc: EncodedState, tol: float = 1e-12) -> set:
    """Hamming weights of the physical register carrying amplitude."""
    p = enc.params
    amps = enc.state.amplitudes.reshape(1 << p.n, 1 << enc.r)
    mass = np.sum(np.abs(amps) ** 2, axis=1)
    w = popcounts(p.n)
    return set(int(v) for v in np.unique(w[mass > tol]))
