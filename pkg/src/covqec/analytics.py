"""Closed-form quantities for random (n, k, alpha)-codes.

Averaged complementary states are diagonal in the weight basis, so they are
represented by a :class:`SpectrumTable` over (reference weight ``j``, erased
weight ``i``). Binomial ratios are evaluated in log space; ``n`` in the
hundreds is routine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .qstate import StateError
from .sectors import ConfigError, popcounts


def log_binom(n: int, k: int) -> float:
    """Natural log of ``C(n, k)``; ``-inf`` outside ``0 <= k <= n``."""
    if k < 0 or k > n or n < 0:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log2_binom(n: int, k: int) -> float:
    return log_binom(n, k) / math.log(2)


def binom_ratio(n: int, t: int, m: int, i: int) -> float:
    """``C(n-t, m-i) / C(n, m)``, zero when the numerator vanishes.

    Uses ``m^(i) (n-m)^(t-i) / n^(t)`` (falling factorials) summed in log
    space, which stays accurate for large ``n`` and small ``t``.
    """
    if not 0 <= m <= n:
        raise ConfigError(f"C({n},{m}) is zero")
    if m - i < 0 or m - i > n - t or i < 0 or i > t:
        return 0.0
    logs = [math.log(m - l) for l in range(i)]
    logs += [math.log(n - m - l) for l in range(t - i)]
    logs += [-math.log(n - l) for l in range(t)]
    return math.exp(math.fsum(logs))


def binary_entropy(x: float) -> float:
    """``-x log2 x - (1-x) log2 (1-x)`` with ``H(0) = H(1) = 0``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs 0 <= x <= 1, got {x}")
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def falling_factorial(x, m: int):
    """``x (x-1) ... (x-m+1)``; exact for ints and Fractions."""
    if m < 0:
        raise ValueError("m must be a non-negative integer")
    out = 1
    for l in range(m):
        out *= x - l
    return out


def rising_factorial(x, m: int):
    """``x (x+1) ... (x+m-1)``."""
    if m < 0:
        raise ValueError("m must be a non-negative integer")
    out = 1
    for l in range(m):
        out *= x + l
    return out


# ---------------------------------------------------------------------------
# averaged states


@dataclass(frozen=True)
class SpectrumTable:
    """Diagonal operator on E (``t`` qubits) x R (``k`` qubits).

    ``eigen[j, i]`` is the eigenvalue on every basis state with reference
    weight ``j`` and erased weight ``i``; it occurs ``C(k,j) C(t,i)`` times.
    """

    k: int
    t: int
    eigen: np.ndarray

    def __post_init__(self):
        eig = np.array(self.eigen, dtype=float)
        if eig.shape != (self.k + 1, self.t + 1):
            raise StateError(f"eigen table shape {eig.shape} != {(self.k + 1, self.t + 1)}")
        if eig.min() < 0:
            raise StateError("negative eigenvalue in spectrum table")
        eig.setflags(write=False)
        object.__setattr__(self, "eigen", eig)

    @property
    def multiplicity(self) -> np.ndarray:
        return np.outer([math.comb(self.k, j) for j in range(self.k + 1)],
                        [math.comb(self.t, i) for i in range(self.t + 1)]).astype(float)

    @property
    def entries(self) -> list:
        mult = self.multiplicity
        return [(j, i, float(self.eigen[j, i]), int(mult[j, i]))
                for j in range(self.k + 1) for i in range(self.t + 1)]

    def trace(self) -> float:
        return float(np.sum(self.eigen * self.multiplicity))

    def reference_marginal(self) -> np.ndarray:
        """Per-basis-state weight of the R marginal, indexed by ``j``."""
        return self.eigen @ np.array([math.comb(self.t, i) for i in range(self.t + 1)],
                                     dtype=float)

    def erased_marginal(self) -> np.ndarray:
        """Per-basis-state weight of the E marginal, indexed by ``i``."""
        return np.array([math.comb(self.k, j) for j in range(self.k + 1)],
                        dtype=float) @ self.eigen

    def diagonal(self) -> np.ndarray:
        """Diagonal of the ``2**(t+k)`` matrix, E qubits first."""
        we = popcounts(self.t)
        wr = popcounts(self.k)
        return self.eigen[wr[None, :], we[:, None]].reshape(-1)

    def to_matrix(self) -> np.ndarray:
        return np.diag(self.diagonal()).astype(complex)


def phi_avg_reduced(n: int, k: int, t: int, alpha: int) -> SpectrumTable:
    """Averaged Choi complementary state ``Tr_{n-t} Phi_avg`` as a spectrum table.

    ``eigen[j, i] = 2^-k C(n-t, j+alpha-i) / C(n, j+alpha)``.
    """
    _check_params(n, k, t, alpha)
    eig = np.array([[2.0 ** -k * binom_ratio(n, t, j + alpha, i) for i in range(t + 1)]
                    for j in range(k + 1)])
    return SpectrumTable(k, t, eig)


def phi_avg_reduced_exact(n: int, k: int, t: int, alpha: int) -> list:
    """Rational eigenvalue table ``[[Fraction]]``; slow, for verification."""
    _check_params(n, k, t, alpha)
    return [[Fraction(math.comb(n - t, j + alpha - i) if 0 <= j + alpha - i <= n - t else 0,
                      2 ** k * math.comb(n, j + alpha))
             for i in range(t + 1)] for j in range(k + 1)]


def _check_params(n: int, k: int, t: int, alpha: int):
    if n < 1 or k < 0 or alpha < 0 or k + alpha > n:
        raise ConfigError(f"need 0 <= k, 0 <= alpha, k + alpha <= n (n={n}, k={k}, alpha={alpha})")
    if not 0 <= t <= n:
        raise ConfigError(f"t={t} outside 0..{n}")


def beta(n: int, k: int, t: int, alpha: int, i: int) -> float:
    """Eigenvalue of the erased-register marginal on a weight-``i`` basis state."""
    _check_params(n, k, t, alpha)
    if not 0 <= i <= t:
        raise ConfigError(f"i={i} outside 0..{t}")
    return 2.0 ** -k * math.fsum(math.comb(k, j) * binom_ratio(n, t, j + alpha, i)
                                 for j in range(k + 1))


def betas(n: int, k: int, t: int, alpha: int) -> np.ndarray:
    return np.array([beta(n, k, t, alpha, i) for i in range(t + 1)])


def diagonal_fidelity(table: SpectrumTable, zeta: np.ndarray) -> float:
    """``F(table, I/2^k x zeta)`` for ``zeta`` diagonal with weights ``zeta[i]``."""
    ref = 2.0 ** -table.k
    terms = table.multiplicity * np.sqrt(table.eigen * ref * np.asarray(zeta)[None, :])
    return float(math.fsum(terms.ravel()))


def diagonal_one_norm(table: SpectrumTable, zeta: np.ndarray) -> float:
    """``|| table - I/2^k x zeta ||_1`` for diagonal ``zeta``."""
    ref = 2.0 ** -table.k
    terms = table.multiplicity * np.abs(table.eigen - ref * np.asarray(zeta)[None, :])
    return float(math.fsum(terms.ravel()))


def choi_fidelity_closed(n: int, k: int, t: int, alpha: int) -> tuple:
    """Fidelity and purified distance between the averaged Choi output and
    ``I/2^k x zeta0`` with ``zeta0`` its erased-register marginal."""
    table = phi_avg_reduced(n, k, t, alpha)
    F = diagonal_fidelity(table, betas(n, k, t, alpha))
    F = min(F, 1.0)
    return F, math.sqrt(max(0.0, 1.0 - F * F))


def choi_one_norm_closed(n: int, k: int, t: int, alpha: int) -> float:
    table = phi_avg_reduced(n, k, t, alpha)
    return diagonal_one_norm(table, betas(n, k, t, alpha))


def worst_zeta_fidelity(n: int, k: int, t: int, alpha: int, wx: int) -> float:
    """``F(rho^{x,x}_avg, zeta0)`` for a logical string of weight ``wx``."""
    _check_params(n, k, t, alpha)
    if not 0 <= wx <= k:
        raise ConfigError(f"wx={wx} outside 0..{k}")
    b = betas(n, k, t, alpha)
    return math.fsum(math.comb(t, i) * math.sqrt(b[i] * binom_ratio(n, t, wx + alpha, i))
                     for i in range(t + 1))


def worst_zeta_distance(n: int, k: int, t: int, alpha: int) -> float:
    """``max_x P(rho^{x,x}_avg, zeta0)``."""
    return max(math.sqrt(max(0.0, 1.0 - min(1.0, worst_zeta_fidelity(n, k, t, alpha, w)) ** 2))
               for w in range(k + 1))


def rho_xx_avg_weights(n: int, t: int, alpha: int, wx: int) -> np.ndarray:
    """Per-basis-state eigenvalues (by erased weight) of ``rho^{x,x}_avg``."""
    return np.array([binom_ratio(n, t, wx + alpha, i) for i in range(t + 1)])


def leading_order(n: int, k: int, t: int, a: float, which: str = "choi") -> float:
    """Leading-order error of the random code at charge density ``a``."""
    if not 0 < a < 1:
        raise ConfigError(f"a={a} must lie strictly between 0 and 1")
    scale = 4 * n * math.sqrt(a * (1 - a))
    if which == "choi":
        return math.sqrt(t * k) / scale
    if which == "worst":
        return k * math.sqrt(t) / scale
    raise ConfigError(f"unknown error kind {which!r}")


def choi_kt1_coefficient(alpha: int) -> float:
    """First-order coefficient ``c`` in ``F = 1 + c/n + O(n^-2)`` for k = t = 1."""
    r2 = math.sqrt(2)
    return (-r2 - 2 * r2 * alpha + math.sqrt(alpha * (2 * alpha + 1))
            + math.sqrt((alpha + 1) * (2 * alpha + 1))) / (2 * r2)


# ---------------------------------------------------------------------------
# conditional min-entropy


@dataclass
class MinEntropyCertificate:
    """Feasible primal and dual points for the min-entropy SDP of a pure state.

    ``sigma`` is normalized; the primal point is ``primal_value * sigma``.
    """

    sigma: np.ndarray
    y: np.ndarray
    primal_value: float
    dual_value: float
    primal_residual: float
    dual_residual: float

    def verify(self, tol: float = 1e-9) -> bool:
        return (self.primal_residual >= -tol and self.dual_residual <= tol
                and abs(self.primal_value - self.dual_value) <= tol)


@dataclass
class MinEntropyBounds:
    lower: float
    upper: float
    kappa_or_chi: float
    certificate: Optional[object] = None


def _schmidt(psi: np.ndarray, dims: tuple):
    dp, dq = dims
    mat = np.asarray(psi, dtype=complex).reshape(dp, dq)
    return np.linalg.svd(mat, full_matrices=False)


def _psi_vector(psi) -> np.ndarray:
    amps = getattr(psi, "amplitudes", psi)
    return np.asarray(amps, dtype=complex).reshape(-1)


def min_entropy_pure(psi, dims: tuple) -> tuple:
    """``H_min(P|Q)`` of a pure state on ``P x Q`` with a certificate pair.

    ``dims = (d_P, d_Q)``. The value is ``-2 log2`` of the Schmidt
    coefficient sum. The primal witness ``sigma`` satisfies
    ``2^-H I x sigma >= psi``; the dual witness ``y = |phi><phi|`` aligns the
    Schmidt bases and satisfies ``Tr_P y <= I``.
    """
    vec = _psi_vector(psi)
    dp, dq = dims
    if vec.size != dp * dq:
        raise StateError(f"state of size {vec.size} does not split as {dims}")
    u, s, vh = _schmidt(vec, dims)
    total = float(s.sum())
    value = -2.0 * math.log2(total)

    sigma = (vh.T * (s / total)) @ vh.conj()
    phi = (u @ vh).reshape(-1)
    y = np.outer(phi, phi.conj())

    rho = np.outer(vec, vec.conj())
    primal_value = total ** 2
    slack = np.kron(np.eye(dp), primal_value * sigma) - rho
    primal_residual = float(np.linalg.eigvalsh(slack).min())
    tr_p_y = np.einsum("pqpr->qr", y.reshape(dp, dq, dp, dq))
    dual_residual = float(np.linalg.eigvalsh(tr_p_y - np.eye(dq)).max())
    dual_value = float(np.real(np.vdot(vec, y @ vec)))
    cert = MinEntropyCertificate(sigma, y, primal_value, dual_value,
                                 primal_residual, dual_residual)
    return value, cert


@dataclass
class BlockSandwich:
    """Feasible points for ``rho = sum_i Pi_i x rho_i`` built from block optima.

    ``upper`` is the primal value ``sum_i s_i``; ``lower`` the dual value
    ``(1/m) sum_i s_i``; residuals measure feasibility.
    """

    block_values: list
    lower: float
    upper: float
    primal_residual: float
    dual_psd_residual: float
    dual_trace_residual: float
    rho: np.ndarray
    sigma: np.ndarray
    y: np.ndarray
    dims: tuple

    def verify(self, tol: float = 1e-9) -> bool:
        return (self.primal_residual >= -tol and self.dual_psd_residual >= -tol
                and self.dual_trace_residual <= tol and self.lower <= self.upper + tol)


def block_sandwich(blocks: list, ranks: list, dims: tuple) -> BlockSandwich:
    """Certify ``(1/m) sum s_i <= s <= sum s_i`` for a block state.

    ``blocks[i]`` is an (unnormalized) pure vector on ``P2 x Q`` with
    ``dims = (d_P2, d_Q)``; ``Pi_i`` are disjoint diagonal projectors of the
    given ranks on ``P1``.
    """
    dp2, dq = dims
    m = len(blocks)
    d1 = int(sum(ranks))
    offsets = np.cumsum([0] + list(ranks))
    projs = []
    for i in range(m):
        p = np.zeros((d1, d1))
        p[offsets[i]:offsets[i + 1], offsets[i]:offsets[i + 1]] = np.eye(ranks[i])
        projs.append(p)

    values, sigmas, ys = [], [], []
    rho = np.zeros((d1 * dp2 * dq,) * 2, dtype=complex)
    for p, v in zip(projs, blocks):
        v = np.asarray(v, dtype=complex).reshape(-1)
        u, s, vh = _schmidt(v, dims)
        total = float(s.sum())
        values.append(total ** 2)
        sigmas.append(total * ((vh.T * s) @ vh.conj()))
        phi = (u @ vh).reshape(-1)
        ys.append(np.outer(phi, phi.conj()))
        rho += np.kron(p, np.outer(v, v.conj()))

    sigma = sum(sigmas)
    y = sum(np.kron(p / np.trace(p), yi) for p, yi in zip(projs, ys)) / m
    primal_residual = float(np.linalg.eigvalsh(
        np.kron(np.eye(d1 * dp2), sigma) - rho).min())
    dual_psd = float(np.linalg.eigvalsh(y).min())
    dp = d1 * dp2
    tr_p_y = np.einsum("pqpr->qr", y.reshape(dp, dq, dp, dq))
    dual_trace = float(np.linalg.eigvalsh(tr_p_y - np.eye(dq)).max())
    upper = float(np.trace(sigma).real)
    lower = float(np.real(np.trace(rho @ y)))
    return BlockSandwich(values, lower, upper, primal_residual, dual_psd, dual_trace,
                         rho, sigma, y, (d1, dp2, dq))


def kappa(n: int, k: int, t: int, alpha: int) -> MinEntropyBounds:
    """Min-entropy sandwich for the Choi-input decoupling bound.

    ``kappa = sum_i (sum_j C(t,j-i) C(k,j-alpha) / sqrt(2^k C(n,j)))^2``,
    ``-log2 kappa <= H_min <= -log2(kappa / (k+t+1))``.
    """
    _check_params(n, k, t, alpha)
    total = []
    for i in range(max(0, alpha - t), min(n - t, alpha + k) + 1):
        inner = []
        for j in range(alpha, alpha + k + 1):
            if 0 <= j - i <= t:
                inner.append(math.exp(log_binom(t, j - i) + log_binom(k, j - alpha)
                                      - 0.5 * (k * math.log(2) + log_binom(n, j))))
        total.append(math.fsum(inner) ** 2)
    kap = math.fsum(total)
    lower = -math.log2(kap)
    return MinEntropyBounds(lower, lower + math.log2(k + t + 1), kap)


def entropy_floor(n: int, k: int, t: int, alpha: int) -> float:
    """``n min{H(alpha/n), H((alpha+k)/n)} - 2t - k`` (no log-n correction)."""
    return n * min(binary_entropy(alpha / n), binary_entropy((alpha + k) / n)) - 2 * t - k


def hmin_x(n: int, t: int, alpha: int, wx: int) -> MinEntropyBounds:
    """Sandwich for a basis input of weight ``wx``:
    ``-log2[C(2t,t)/C(n,wx+alpha)]`` up to ``+log2(t+1)``."""
    m = wx + alpha
    if not 0 <= m <= n or not 0 <= t <= n:
        raise ConfigError(f"invalid weights n={n}, t={t}, wx+alpha={m}")
    lg = log2_binom(2 * t, t) - log2_binom(n, m)
    return MinEntropyBounds(-lg, -lg + math.log2(t + 1), 2.0 ** lg)


def chi(n: int, t: int, alpha: int, wx: int, wxp: int) -> float:
    ma, mb = wx + alpha, wxp + alpha
    if not (0 <= ma <= n and 0 <= mb <= n):
        raise ConfigError(f"weights {ma}, {mb} outside 0..{n}")
    c = log_binom(2 * t, t)
    la, lb = log_binom(n, ma), log_binom(n, mb)
    cross = log_binom(2 * t, t + wx - wxp)
    terms = [math.exp(c - la), math.exp(c - lb)]
    if cross > -math.inf:
        terms.append(2 * math.exp(cross - 0.5 * (la + lb)))
    return math.fsum(terms)


def hmin_xxp(n: int, t: int, alpha: int, wx: int, wxp: int) -> MinEntropyBounds:
    """Sandwich ``-log2(chi/2) <= H <= -log2(chi/(2(t+1)))`` for the
    superposition inputs built from ``|x>`` and ``|x'>``."""
    c = chi(n, t, alpha, wx, wxp)
    lower = -math.log2(c / 2)
    return MinEntropyBounds(lower, lower + math.log2(t + 1), c)


# ---------------------------------------------------------------------------
# fundamental lower bounds


def lower_bounds(n: int, k: int) -> tuple:
    """Single-erasure lower bounds ``(choi_lb, worst_lb)`` for U(1) codes."""
    if k < 1 or n < 1:
        raise ConfigError("need n >= 1 and k >= 1")
    h = (k + 1) // 2
    return math.comb(k, h) * h / (2 ** k * n), k / (2 * n)


def charge_spread_ratio(n: int, t: int, scheme: str) -> Fraction:
    """``max_a (Delta T_a / q_a)`` for the two ways of grouping ``t`` erasures.

    ``grouped``: ``n/t`` disjoint blocks of size ``t`` each erased with
    probability ``t/n``; ``uniform``: every ``t``-subset, each weighted so the
    pieces sum to the total charge.
    """
    if not 1 <= t <= n:
        raise ConfigError(f"t={t} outside 1..{n}")
    if scheme == "grouped":
        if n % t:
            raise ConfigError(f"grouped scheme needs t | n (n={n}, t={t})")
        spread, prob = Fraction(t), Fraction(t, n)
    elif scheme == "uniform":
        subsets = math.comb(n, t)
        coeff = Fraction(n, t * subsets)
        spread, prob = coeff * t, Fraction(1, subsets)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    return spread / prob


def logical_charge_median(k: int) -> int:
    """Lower median of the ``2^k`` eigenvalues of the ``k``-qubit weight operator."""
    eig = np.sort(popcounts(k))
    return int(eig[(eig.size - 1) // 2])


def general_t_lower(n: int, k: int, t: int, scheme: str) -> tuple:
    """Lower bounds ``(choi_lb, worst_lb)`` for erasure of ``t`` qubits."""
    denom = charge_spread_ratio(n, t, scheme)
    eig = popcounts(k)
    mu = logical_charge_median(k)
    choi = Fraction(int(np.abs(eig - mu).sum()), 2 ** k) / denom
    worst = Fraction(k, 2) / denom
    return float(choi), float(worst)
