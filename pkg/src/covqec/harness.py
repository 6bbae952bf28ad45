"""Experiment drivers: scaling fits, Monte Carlo studies, bound tables.

Every driver takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` whose rows are plain dicts, ready for CSV/JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from . import __version__, analytics
from .encoder import CodeParams
from .metrics import (ChoiErrorReport, Fraction95, SampleSummary, WorstCaseReport,
                      choi_error_upper, no_symmetry_baseline, optimal_diagonal_zeta,
                      worst_case_error_upper)
from .sectors import ConfigError, hamming_sectors, sample_block_haar, trial_seed

MODES = ("scaling", "montecarlo", "compare", "minentropy", "bounds", "mixed")
MAX_SAMPLED_N = 12
MAX_SAMPLED_QUBITS = 16
OUTPUT_DIR_ENV = "COVQEC_OUTPUT_DIR"


class InvariantViolation(RuntimeError):
    """A numerical invariant failed during a run."""


@dataclass(frozen=True)
class AlphaRule:
    """Ancilla weight as a fixed integer or a floored fraction of ``n``.

    Fractions are clamped to ``[0, n - k]``; fixed values are not.
    """

    kind: str
    value: Fraction

    @classmethod
    def parse(cls, text) -> "AlphaRule":
        if isinstance(text, AlphaRule):
            return text
        if isinstance(text, int):
            return cls("fixed", Fraction(text))
        s = str(text).strip().replace(" ", "")
        if s.startswith("n/"):
            return cls("fraction", Fraction(1, int(s[2:])))
        if s.endswith("n"):
            coeff = s[:-1].rstrip("*") or "1"
            return cls("fraction", Fraction(coeff))
        if s.isdigit():
            return cls("fixed", Fraction(int(s)))
        raise ConfigError(f"cannot parse alpha rule {text!r}")

    def resolve(self, n: int, k: int) -> int:
        if self.kind == "fixed":
            return int(self.value)
        return max(0, min(n - k, math.floor(self.value * n)))

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return str(int(self.value))
        if self.value.numerator == 1:
            return f"n/{self.value.denominator}"
        return f"{self.value}n"


def parse_n_range(text) -> list:
    """``"6,8,10"``, ``"20:400"`` (inclusive) or ``"20:400:20"`` (log spaced)."""
    if isinstance(text, (list, tuple)):
        return sorted(set(int(v) for v in text))
    s = str(text).strip()
    if ":" in s:
        parts = [int(p) for p in s.split(":")]
        if len(parts) == 2:
            return list(range(parts[0], parts[1] + 1))
        lo, hi, num = parts
        return sorted(set(int(v) for v in np.round(np.geomspace(lo, hi, num))))
    return sorted(set(int(p) for p in s.split(",") if p))


@dataclass
class ExperimentConfig:
    mode: str
    n_range: list
    k: int = 1
    t: int = 1
    alpha_rule: AlphaRule = field(default_factory=lambda: AlphaRule("fraction", Fraction(1, 2)))
    seeds: int = 100
    master_seed: int = 0
    output_path: Optional[str] = None
    output_format: str = "csv"
    p: float = 0.0
    workers: int = 1
    fit_window: Optional[tuple] = None

    def __post_init__(self):
        self.alpha_rule = AlphaRule.parse(self.alpha_rule)
        self.n_range = parse_n_range(self.n_range)
        if self.fit_window is not None:
            self.fit_window = tuple(int(v) for v in self.fit_window)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if not self.n_range:
            raise ConfigError("empty n range")
        if self.k < 1 or self.t < 0:
            raise ConfigError(f"need k >= 1 and t >= 0 (k={self.k}, t={self.t})")
        bad = [n for n in self.n_range
               if not 0 <= self.alpha_rule.resolve(n, self.k) <= n - self.k
               or self.t > n]
        if bad:
            raise ConfigError(f"alpha={self.alpha_rule.label} or t={self.t} invalid for n in {bad}")
        if self.seeds < 0:
            raise ConfigError("seeds must be non-negative")

    def alpha(self, n: int) -> int:
        return self.alpha_rule.resolve(n, self.k)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha_rule"] = self.alpha_rule.label
        return d


@dataclass
class SlopeFit:
    """Least-squares line through ``(log10 n, log10 error)``."""

    slope: float
    intercept: float
    r_squared: float
    n_window: tuple


def fit_slope(ns, errors, window: Optional[tuple] = None) -> SlopeFit:
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if window is not None:
        keep = (ns >= window[0]) & (ns <= window[1])
        ns, errors = ns[keep], errors[keep]
    if ns.size < 2:
        raise ConfigError("need at least two points to fit a slope")
    res = stats.linregress(np.log10(ns), np.log10(errors))
    return SlopeFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2),
                    (int(ns.min()), int(ns.max())))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    fits: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    trials: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        meta = {"timestamp": datetime.now(timezone.utc).isoformat(),
                "seed": self.config.master_seed, "version": __version__}
        meta.update(self.metadata)
        return {"config": self.config.to_dict(), "rows": self.rows,
                "fits": {k: asdict(v) for k, v in self.fits.items()}, "metadata": meta}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, default=_json_default)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if not self.rows:
            return ""
        fields = list(self.rows[0])
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _csv_cell(row.get(k)) for k in fields})
        return buf.getvalue()

    def render(self, fmt: Optional[str] = None) -> str:
        fmt = fmt or self.config.output_format
        return self.to_json() if fmt == "json" else self.to_csv()

    def write(self, path=None, fmt: Optional[str] = None) -> Optional[Path]:
        fmt = fmt or self.config.output_format
        path = path or self.config.output_path
        if path is None and os.environ.get(OUTPUT_DIR_ENV):
            path = Path(os.environ[OUTPUT_DIR_ENV]) / f"{self.config.mode}.{fmt}"
        if path is None:
            return None
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(fmt), encoding="utf-8")
        return path


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return v


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# ---------------------------------------------------------------------------
# scaling


def run_scaling(config: ExperimentConfig) -> ExperimentResult:
    """Average-state Choi error versus ``n`` in purified and 1-norm distance."""
    config.validate()
    k, t = config.k, config.t
    rows = []
    for n in config.n_range:
        alpha = config.alpha(n)
        table = analytics.phi_avg_reduced(n, k, t, alpha)
        if abs(table.trace() - 1.0) > 1e-9:
            raise InvariantViolation(f"averaged state trace {table.trace()} at n={n}")
        b = analytics.betas(n, k, t, alpha)
        F = min(1.0, analytics.diagonal_fidelity(table, b))
        _, F_opt = optimal_diagonal_zeta(table, 2 ** k)
        rows.append({
            "n": n, "alpha": alpha,
            "error_1norm": analytics.diagonal_one_norm(table, b),
            "error_purified": math.sqrt(max(0.0, 1 - F * F)),
            "error_purified_opt": math.sqrt(max(0.0, 1 - min(1.0, F_opt) ** 2)),
        })
    ns = [r["n"] for r in rows]
    fits = {}
    if len(rows) >= 2:
        for metric in ("error_1norm", "error_purified"):
            fits[metric] = fit_slope(ns, [r[metric] for r in rows], config.fit_window)
    meta = {"quantity": "avg-state Choi term P(Tr Phi_avg, I/2^k x zeta0); "
                        "error_purified_opt uses the optimal diagonal zeta",
            "alpha_rule": config.alpha_rule.label,
            "n_window": [min(ns), max(ns)]}
    return ExperimentResult(config, rows, fits, meta)


# ---------------------------------------------------------------------------
# Monte Carlo


def _check_sampled_size(n: int, k: int):
    if n > MAX_SAMPLED_N or n + k > MAX_SAMPLED_QUBITS:
        block = math.comb(n, n // 2)
        mib = (16 * (2 ** (n + k)) + 16 * block * block) / 2 ** 20
        raise ConfigError(
            f"sampled path limited to n <= {MAX_SAMPLED_N}, n+k <= {MAX_SAMPLED_QUBITS}; "
            f"n={n}, k={k} needs roughly {mib:.1f} MiB per trial")


@dataclass
class TrialRecord:
    n: int
    seed_index: int
    choi: ChoiErrorReport
    worst: Optional[WorstCaseReport]


def _run_trial(config: ExperimentConfig, n: int, s: int) -> TrialRecord:
    params = CodeParams(n, config.k, config.alpha(n), config.t)
    U = sample_block_haar(hamming_sectors(n), trial_seed(config.master_seed, n, s))
    choi = choi_error_upper(U, params)
    worst = worst_case_error_upper(U, params) if config.k <= 4 else None
    if not 0.0 <= choi.total_upper <= 2.0 + 1e-9:
        raise InvariantViolation(f"Choi bound {choi.total_upper} outside [0, 2]")
    return TrialRecord(n, s, choi, worst)


def run_trials(config: ExperimentConfig) -> dict:
    """All trials keyed by ``n``, sorted by seed index regardless of scheduling."""
    items = [(n, s) for n in config.n_range for s in range(config.seeds)]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(lambda it: _run_trial(config, *it), items))
    else:
        records = [_run_trial(config, *it) for it in items]
    out = {n: [] for n in config.n_range}
    for rec in sorted(records, key=lambda r: (r.n, r.seed_index)):
        out[rec.n].append(rec)
    return out


def summarize_trials(config: ExperimentConfig, n: int, records: list) -> dict:
    k, t = config.k, config.t
    alpha = config.alpha(n)
    a = alpha / n
    kap = analytics.kappa(n, k, t, alpha).kappa_or_chi if t > 0 else 0.0
    dev_bound = math.sqrt(2) * kap ** 0.25
    dev = SampleSummary.of([r.choi.deviation_term for r in records])
    dev_norm = SampleSummary.of([r.choi.deviation_norm for r in records])
    total = SampleSummary.of([r.choi.total_upper for r in records])
    avg_term = records[0].choi.avg_state_term if records else float("nan")
    lo = analytics.leading_order(n, k, t, a, "choi") if 0 < a < 1 else float("nan")
    lo_w = analytics.leading_order(n, k, t, a, "worst") if 0 < a < 1 else float("nan")
    markov = Fraction95.of([r.choi.total_upper > 2 * (avg_term + dev_bound) for r in records])
    over_lo = Fraction95.of([r.choi.total_upper > lo for r in records]) if 0 < a < 1 else None
    row = {
        "n": n, "k": k, "t": t, "alpha": alpha, "seeds": len(records),
        "avg_state_term": avg_term,
        "deviation_mean": dev.mean, "deviation_sem": dev.sem, "deviation_median": dev.median,
        "deviation_q05": dev.q05, "deviation_q95": dev.q95,
        "deviation_norm_mean": dev_norm.mean, "deviation_norm_sem": dev_norm.sem,
        "total_mean": total.mean, "total_median": total.median,
        "total_q05": total.q05, "total_q95": total.q95,
        "sqrt_kappa": math.sqrt(kap), "deviation_bound": dev_bound,
        "leading_order_choi": lo, "leading_order_worst": lo_w,
        "frac_total_gt_2x_bound": markov.value,
        "frac_total_gt_2x_bound_lo": markov.low, "frac_total_gt_2x_bound_hi": markov.high,
        "frac_total_gt_leading": over_lo.value if over_lo else float("nan"),
        "frac_total_gt_leading_lo": over_lo.low if over_lo else float("nan"),
        "frac_total_gt_leading_hi": over_lo.high if over_lo else float("nan"),
    }
    worst = [r.worst for r in records if r.worst is not None]
    if worst:
        up = SampleSummary.of([w.upper for w in worst])
        off = SampleSummary.of([w.eps_offdiag for w in worst])
        row.update({
            "worst_upper_mean": up.mean, "worst_upper_median": up.median,
            "worst_eps_diag_median": float(np.median([w.eps_diag for w in worst])),
            "worst_offdiag_mean": off.mean, "worst_offdiag_sem": off.sem,
            "worst_lower_bound": k / (2 * n),
        })
    return row


def run_montecarlo(config: ExperimentConfig) -> ExperimentResult:
    """Sampled Choi and worst-case bounds with decoupling comparisons."""
    config.validate()
    for n in config.n_range:
        _check_sampled_size(n, config.k)
    trials = run_trials(config)
    rows = [summarize_trials(config, n, trials[n]) for n in config.n_range]
    meta = {"zeta": "marginal", "alpha_rule": config.alpha_rule.label}
    return ExperimentResult(config, rows, {}, meta, trials)


# ---------------------------------------------------------------------------
# comparisons with lower bounds


def run_compare(config: ExperimentConfig) -> ExperimentResult:
    """Upper bounds of the random code against the covariant-code lower bounds.

    The single-erasure lower bounds only match for ``t == 1``; rows with
    ``t > 1`` carry ``exact_match_claim = False`` and the general-``t``
    bounds for both erasure groupings.
    """
    config.validate()
    k, t = config.k, config.t
    rows = []
    for n in config.n_range:
        alpha = config.alpha(n)
        a = alpha / n
        choi_lb, worst_lb = analytics.lower_bounds(n, k)
        lo_c = analytics.leading_order(n, k, t, a, "choi")
        lo_w = analytics.leading_order(n, k, t, a, "worst")
        _, closed_c = analytics.choi_fidelity_closed(n, k, t, alpha)
        closed_w = analytics.worst_zeta_distance(n, k, t, alpha)
        row = {
            "n": n, "k": k, "t": t, "alpha": alpha, "a": a,
            "exact_match_claim": t == 1,
            "choi_leading": lo_c, "choi_closed": closed_c, "choi_lb": choi_lb,
            "choi_ratio": lo_c / choi_lb, "choi_ratio_closed": closed_c / choi_lb,
            "worst_leading": lo_w, "worst_closed": closed_w, "worst_lb": worst_lb,
            "worst_ratio": lo_w / worst_lb, "worst_ratio_closed": closed_w / worst_lb,
        }
        for scheme in ("grouped", "uniform"):
            if t >= 1 and (scheme == "uniform" or n % t == 0):
                c_lb, w_lb = analytics.general_t_lower(n, k, t, scheme)
            else:
                c_lb = w_lb = float("nan")
            row[f"choi_lb_{scheme}"] = c_lb
            row[f"worst_lb_{scheme}"] = w_lb
            row[f"choi_ratio_{scheme}"] = lo_c / c_lb if c_lb == c_lb else float("nan")
            row[f"worst_ratio_{scheme}"] = lo_w / w_lb if w_lb == w_lb else float("nan")
        rows.append(row)
    return ExperimentResult(config, rows, {}, {"alpha_rule": config.alpha_rule.label})


# ---------------------------------------------------------------------------
# tabulations


def run_minentropy(config: ExperimentConfig) -> ExperimentResult:
    config.validate()
    k, t = config.k, config.t
    rows = []
    for n in config.n_range:
        alpha = config.alpha(n)
        kb = analytics.kappa(n, k, t, alpha)
        entries = [("kappa", None, None, kb)]
        entries += [("hmin_x", w, None, analytics.hmin_x(n, t, alpha, w)) for w in range(k + 1)]
        entries += [("hmin_xxp", w, wp, analytics.hmin_xxp(n, t, alpha, w, wp))
                    for w in range(k + 1) for wp in range(k + 1) if w != wp]
        floor = analytics.entropy_floor(n, k, t, alpha)
        for name, w, wp, b in entries:
            if b.lower > b.upper:
                raise InvariantViolation(f"{name} lower {b.lower} > upper {b.upper} at n={n}")
            rows.append({"n": n, "alpha": alpha, "quantity": name,
                         "wx": "" if w is None else w, "wxp": "" if wp is None else wp,
                         "lower": b.lower, "upper": b.upper, "value": b.kappa_or_chi,
                         "lower_per_n": b.lower / n, "entropy_floor": floor})
    return ExperimentResult(config, rows, {}, {"alpha_rule": config.alpha_rule.label})


def run_bounds(config: ExperimentConfig) -> ExperimentResult:
    config.validate()
    k, t = config.k, config.t
    rows = []
    for n in config.n_range:
        choi_lb, worst_lb = analytics.lower_bounds(n, k)
        row = {"n": n, "k": k, "t": t, "choi_lb": choi_lb, "worst_lb": worst_lb}
        for scheme in ("grouped", "uniform"):
            ok = t >= 1 and (scheme == "uniform" or n % t == 0)
            c, w = analytics.general_t_lower(n, k, t, scheme) if ok else (float("nan"),) * 2
            row[f"choi_lb_{scheme}"] = c
            row[f"worst_lb_{scheme}"] = w
        rows.append(row)
    return ExperimentResult(config, rows)


def mixed_erasure_error(config: ExperimentConfig, tail: float = 1e-9) -> ExperimentResult:
    """Average-state Choi error when each qubit is erased independently with prob ``p``.

    Mixes the closed-form fixed-``t`` errors over ``t ~ Binomial(n, p)`` and
    stops once the remaining probability mass is below ``tail``; since errors
    are at most 1 that mass bounds the truncation error.
    """
    config.validate()
    p, k = config.p, config.k
    if not 0.0 <= p <= 0.5:
        raise ConfigError(f"p={p} outside [0, 1/2]")
    rows = []
    for n in config.n_range:
        alpha = config.alpha(n)
        dist = stats.binom(n, p)
        total, mass, t = 0.0, 0.0, 0
        while t <= n:
            w = float(dist.pmf(t))
            if t > 0 and w > 0:
                total += w * analytics.choi_fidelity_closed(n, k, t, alpha)[1]
            mass += w
            if 1.0 - mass < tail:
                break
            t += 1
        rows.append({"n": n, "k": k, "alpha": alpha, "p": p, "expected_error": total,
                     "t_max": min(t, n), "truncation_bound": max(0.0, 1.0 - mass)})
    return ExperimentResult(config, rows, {}, {"alpha_rule": config.alpha_rule.label})


RUNNERS = {
    "scaling": run_scaling,
    "montecarlo": run_montecarlo,
    "compare": run_compare,
    "minentropy": run_minentropy,
    "bounds": run_bounds,
    "mixed": mixed_erasure_error,
}


def run(config: ExperimentConfig) -> ExperimentResult:
    config.validate()
    return RUNNERS[config.mode](config)
