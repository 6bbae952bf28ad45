"""Certified error bounds for sampled codes.

Errors are bounded through the complementary channel (the state left on the
erased qubits). For the Choi error the triangle inequality splits the bound
into a sample-dependent deviation from the block-Haar average and a fixed
average-state term::

    eps_Choi <= sqrt(2 ||rho_U - rho_avg||_1) + P(rho_avg, I/2^k x zeta)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import stats

from . import analytics
from .encoder import (CodeParams, EncodedState, all_rho_xxp, apply_unitary,
                      complementary_output, encode_choi)
from .qstate import (PureState, StateError, as_matrix, fidelity, purified_distance,
                     reduce_diagonal, trace_norm)
from .sectors import (BlockUnitary, ConfigError, SeedLike, haar_unitary, make_rng,
                      popcounts, trial_seed)

MAX_WORST_K = 4


@dataclass(frozen=True)
class ChoiErrorReport:
    deviation_term: float
    avg_state_term: float
    total_upper: float
    zeta_used: str
    deviation_norm: float = 0.0


@dataclass(frozen=True)
class WorstCaseReport:
    eps_diag: float
    eps_offdiag: float
    upper: float
    k: int

    @classmethod
    def from_terms(cls, eps_diag: float, eps_offdiag: float, k: int) -> "WorstCaseReport":
        return cls(eps_diag, eps_offdiag, eps_diag + 2 ** k * math.sqrt(eps_offdiag), k)


def optimal_diagonal_zeta(spectrum: analytics.SpectrumTable,
                          reference_dim: int) -> tuple:
    """Best diagonal ``zeta`` against a classical spectrum with uniform reference.

    Maximizes ``sum_{e,m} sqrt(r_{e,m} zeta_e tau_m)``: the optimum is
    ``zeta_e ∝ c_e^2`` with ``c_e = sum_m sqrt(r_{e,m} tau_m)`` and value
    ``sqrt(sum_e c_e^2)``. Returns ``(zeta_weights, F_opt)`` with weights per
    erased-weight class (value on each basis state of that weight).
    """
    k, t = spectrum.k, spectrum.t
    if reference_dim != 2 ** k:
        raise ConfigError(f"reference dimension {reference_dim} != 2^{k}")
    tau = 1.0 / reference_dim
    ref = spectrum.reference_marginal()
    if not np.allclose(ref, tau, rtol=0, atol=1e-12):
        raise ConfigError("reference marginal is not uniform")
    ck = np.array([math.comb(k, j) for j in range(k + 1)], dtype=float)
    ct = np.array([math.comb(t, i) for i in range(t + 1)], dtype=float)
    c = ck @ np.sqrt(spectrum.eigen * tau)
    norm = float(np.sum(ct * c ** 2))
    return c ** 2 / norm, math.sqrt(norm)


def _zeta_weights(params: CodeParams, table: analytics.SpectrumTable, zeta) -> tuple:
    if isinstance(zeta, str):
        if zeta == "marginal":
            return analytics.betas(params.n, params.k, params.t, params.alpha), "marginal"
        if zeta == "optimal_diagonal":
            return optimal_diagonal_zeta(table, 2 ** params.k)[0], "optimal_diagonal"
        raise ConfigError(f"unknown zeta choice {zeta!r}")
    return None, "user"


def average_state_reduced(input_state: PureState, params: CodeParams) -> np.ndarray:
    """``Tr_{n-t}`` of the block-Haar average of a pure input on A x R.

    Built directly from the direct-sum formula: the average is
    ``sum_j Pi_j/C(n,j) x Tr_A[Pi_j Psi Pi_j]``, and ``Tr_{n-t} Pi_j`` is
    reduced numerically from its diagonal. Output is ordered E then R.
    """
    n = params.n
    r = input_state.num_qubits - n
    psi = input_state.amplitudes.reshape(1 << n, 1 << r)
    w = popcounts(n)
    out = np.zeros((1 << (params.t + r),) * 2, dtype=complex)
    for j in range(n + 1):
        rows = psi[w == j]
        if not np.any(rows):
            continue
        ref = rows.T @ rows.conj()
        proj_e = reduce_diagonal((w == j).astype(float), params.erased)
        out += np.kron(np.diag(proj_e / math.comb(n, j)), ref)
    return out


def decoupling_deviation(U, params: CodeParams, input_state: PureState) -> float:
    """``|| Tr_{n-t}[U Psi U^dag] - Tr_{n-t} Psi_avg ||_1`` for a pure input on A x R."""
    n = params.n
    r = input_state.num_qubits - n
    psi = input_state.amplitudes.reshape(1 << n, 1 << r)
    out = PureState(apply_unitary(U, psi).reshape(-1), n + r)
    enc = EncodedState(params, U, out, r)
    return trace_norm(complementary_output(enc) - average_state_reduced(input_state, params))


def choi_error_upper(U, params: CodeParams, zeta="marginal") -> ChoiErrorReport:
    """Upper bound on the Choi error of the code defined by ``U``.

    ``zeta`` is ``"marginal"`` (erased marginal of the averaged state),
    ``"optimal_diagonal"`` (the exact diagonal minimizer) or a density
    matrix on the ``t`` erased qubits.
    """
    n, k, t, alpha = params.n, params.k, params.t, params.alpha
    table = analytics.phi_avg_reduced(n, k, t, alpha)
    rho_avg = table.to_matrix()
    rho_u = complementary_output(encode_choi(U, params))
    dev_norm = trace_norm(rho_u - rho_avg)
    deviation = math.sqrt(2 * dev_norm)

    weights, label = _zeta_weights(params, table, zeta)
    if weights is not None:
        F = min(1.0, analytics.diagonal_fidelity(table, weights))
        avg_term = math.sqrt(max(0.0, 1.0 - F * F))
    else:
        zmat = as_matrix(zeta)
        if zmat.shape != (2 ** t, 2 ** t):
            raise StateError(f"zeta must act on {t} qubits")
        avg_term = purified_distance(rho_avg, np.kron(zmat, np.eye(2 ** k) / 2 ** k))
    return ChoiErrorReport(deviation, avg_term, deviation + avg_term, label, dev_norm)


def appendix_zeta(params: CodeParams) -> np.ndarray:
    """The fixed comparison state ``sum_i beta_i Pi_i`` on the erased qubits."""
    b = analytics.betas(params.n, params.k, params.t, params.alpha)
    return np.diag(b[popcounts(params.t)]).astype(complex)


def worst_case_error_upper(U, params: CodeParams, zeta=None) -> WorstCaseReport:
    """Worst-case error bound ``eps + 2^k sqrt(eps')`` for the code of ``U``.

    ``eps = max_x P(rho^{x,x}, zeta)`` and ``eps' = max_{x != x'} ||rho^{x,x'}||_1``.
    ``zeta`` defaults to :func:`appendix_zeta`.
    """
    k, t = params.k, params.t
    if k > MAX_WORST_K:
        raise ConfigError(f"k={k} > {MAX_WORST_K}: 4^k operator pairs is too many")
    zmat = appendix_zeta(params) if zeta is None else as_matrix(zeta)
    if zmat.shape != (2 ** t, 2 ** t):
        raise StateError(f"zeta must act on {t} qubits")
    rhos = all_rho_xxp(U, params)
    dim = 1 << k
    eps_diag = max(purified_distance(rhos[x, x], zmat) for x in range(dim))
    eps_off = max((trace_norm(rhos[x, y]) for x in range(dim) for y in range(dim) if x != y),
                  default=0.0)
    return WorstCaseReport.from_terms(eps_diag, eps_off, k)


# ---------------------------------------------------------------------------
# Monte Carlo summaries


@dataclass
class SampleSummary:
    count: int
    mean: float
    std: float
    sem: float
    median: float
    q05: float
    q95: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "SampleSummary":
        v = np.asarray(values, dtype=float)
        std = float(v.std(ddof=1)) if v.size > 1 else 0.0
        return cls(int(v.size), float(v.mean()), std, std / math.sqrt(max(v.size, 1)),
                   float(np.median(v)), float(np.quantile(v, 0.05)),
                   float(np.quantile(v, 0.95)))


@dataclass
class Fraction95:
    successes: int
    trials: int
    low: float
    high: float

    @property
    def value(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @classmethod
    def of(cls, flags: Sequence[bool]) -> "Fraction95":
        flags = np.asarray(flags, dtype=bool)
        s, n = int(flags.sum()), int(flags.size)
        if n == 0:
            return cls(0, 0, 0.0, 1.0)
        ci = stats.binomtest(s, n).proportion_ci(confidence_level=0.95, method="wilson")
        return cls(s, n, float(ci.low), float(ci.high))


# ---------------------------------------------------------------------------
# fully Haar baseline


@dataclass
class BaselineResult:
    n: int
    k: int
    t: int
    delta: int
    errors: list = field(default_factory=list)

    @property
    def summary(self) -> SampleSummary:
        return SampleSummary.of(self.errors)


def full_haar_choi_upper(U: np.ndarray, params: CodeParams) -> float:
    """Choi error bound for a dense (non-symmetric) encoding unitary.

    The fully Haar average output is maximally mixed, so the average-state
    term vanishes and only ``sqrt(2 ||rho_U - I/2^(t+k)||_1)`` remains.
    """
    rho = complementary_output(encode_choi(U, params))
    d = rho.shape[0]
    return math.sqrt(2 * trace_norm(rho - np.eye(d) / d))


def no_symmetry_baseline(n: int, k: int, t: int, seeds: int,
                         master_seed: int = 0, alpha: int | None = None) -> BaselineResult:
    """Choi error bounds of codes built from fully Haar unitaries on ``2^n``."""
    if n > 12:
        raise ConfigError(f"n={n} > 12: dense 2^n Haar sampling is too large")
    alpha = (n - k) // 2 if alpha is None else alpha
    params = CodeParams(n, k, alpha, t)
    res = BaselineResult(n, k, t, n - k - 4 * t)
    for s in range(seeds):
        if t == 0:
            res.errors.append(0.0)
            continue
        U = haar_unitary(1 << n, make_rng(trial_seed(master_seed, s)))
        res.errors.append(full_haar_choi_upper(U, params))
    return res
