"""Growth-increment laws Z_n = w_n * Bernoulli(p_n).

A law supplies, for step n >= 1, the growth probability p_n and the burst
size w_n (a positive integer, 1 unless stated).  Three families:

  ber:gamma=G,scale=S,shift=H      p_n = S * (n + H)^(-G), w == 1
  weighted:gamma=G,...,w=table@F   same p_n, w_n read from a table
  custom@F                         explicit table n, p_n [, w_n]

gamma = 0 gives the constant law p == scale.  p_1 = 1 is permitted (the
scale-1 power laws start with a sure growth); openness of p_n is only
required by the operations that mathematically need it, which check it
themselves.

Cumulative sums P_n = sum_{k<=n} p_k are exact to ~1e-12 relative: direct
summation up to a cutoff, Euler-Maclaurin beyond it (the bisection in
time_for_size probes n ~ 1e8 and the transience diagnostics probe n ~ 1e30,
where direct summation is impossible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class LawError(ValueError):
    pass


class BoundInapplicable(LawError):
    """Chebyshev tail bound requires P_j > i - 1."""


_DIRECT_CUTOFF = 200_000
_EM_HEAD = 100_000


def _power_cumulative(gamma: float, scale: float, shift: int, n) -> float:
    """sum_{k=1..n} scale * (k + shift)^(-gamma); n may exceed int range."""
    if n < 1:
        return 0.0
    if gamma == 0.0:
        return scale * float(n)
    a = 1 + shift
    if n <= _DIRECT_CUTOFF:
        k = np.arange(a, n + shift + 1, dtype=np.float64)
        return scale * float(np.sum(k ** (-gamma)))
    k = np.arange(a, a + _EM_HEAD, dtype=np.float64)
    head = float(np.sum(k ** (-gamma)))
    lo = float(a + _EM_HEAD)
    hi = float(n) + float(shift)

    def f(x):
        return x ** (-gamma)

    def fp(x):
        return -gamma * x ** (-gamma - 1.0)

    def fppp(x):
        return -gamma * (gamma + 1.0) * (gamma + 2.0) * x ** (-gamma - 3.0)

    if gamma == 1.0:
        integral = math.log(hi / lo)
    else:
        integral = (hi ** (1.0 - gamma) - lo ** (1.0 - gamma)) / (1.0 - gamma)
    tail = integral + 0.5 * (f(lo) + f(hi)) + (fp(hi) - fp(lo)) / 12.0 \
        - (fppp(hi) - fppp(lo)) / 720.0
    return scale * (head + tail)


class GrowthLaw:
    """Base interface; concrete laws override the table hooks."""

    kind = "base"

    def prob(self, n: int) -> float:
        raise NotImplementedError

    def weight(self, n: int) -> int:
        return 1

    def cumulative(self, n) -> float:
        raise NotImplementedError

    def expected_vertices(self, n, seed_size: int = 1) -> float:
        """Seed size plus sum of p_k w_k over k <= n."""
        raise NotImplementedError

    def validate_horizon(self, n: int) -> None:
        """Raise LawError if the law cannot serve steps 1..n."""

    def max_weight_through(self, n: int) -> int:
        return 1

    def gap_tail(self, n0: int, m: int) -> float:
        """P(next growth gap > m) after a growth at step n0: prod (1 - p_{n0+j})."""
        if m <= 0:
            return 1.0
        acc = 0.0
        j = n0 + 1
        end = n0 + m
        while j <= end:
            stop = min(end, j + 1_000_000 - 1)
            p = self._prob_block(j, stop)
            if np.any(p >= 1.0):
                return 0.0
            acc += float(np.sum(np.log1p(-p)))
            j = stop + 1
        return math.exp(acc)

    def gap_pmf(self, n0: int, m: int) -> float:
        """P(next growth gap == m) after a growth at step n0."""
        if m <= 0:
            return 0.0
        return self.gap_tail(n0, m - 1) * self.prob(n0 + m)

    def _prob_block(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.prob(n) for n in range(lo, hi + 1)])

    def sample_increment(self, n: int, rng) -> int:
        """Reference-path draw of Z_n; one uniform consumed."""
        if rng.random() < self.prob(n):
            return self.weight(n)
        return 0

    def kernel_params(self):
        """(kind_code, gamma, scale, shift, p_table, w_table) for _kernels."""
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError


_EMPTY_F = np.empty(0, dtype=np.float64)
_EMPTY_I = np.empty(0, dtype=np.int64)


class BernoulliPower(GrowthLaw):
    """p_n = scale * (n + shift)^(-gamma), w == 1."""

    kind = "ber"

    def __init__(self, gamma: float, scale: float = 1.0, shift: int = 0):
        if not 0.0 <= gamma <= 1.0:
            raise LawError(f"gamma must be in [0, 1], got {gamma}")
        if not 0.0 < scale <= 1.0:
            raise LawError(f"scale must be in (0, 1], got {scale}")
        if shift < 0 or shift != int(shift):
            raise LawError(f"shift must be a nonnegative integer, got {shift}")
        self.gamma = float(gamma)
        self.scale = float(scale)
        self.shift = int(shift)

    def prob(self, n: int) -> float:
        if n < 1:
            raise LawError("steps are 1-based")
        return self.scale * float(n + self.shift) ** (-self.gamma)

    def _prob_block(self, lo, hi):
        k = np.arange(lo + self.shift, hi + self.shift + 1, dtype=np.float64)
        return self.scale * k ** (-self.gamma)

    def cumulative(self, n) -> float:
        return _power_cumulative(self.gamma, self.scale, self.shift, n)

    def expected_vertices(self, n, seed_size: int = 1) -> float:
        return seed_size + self.cumulative(n)

    def kernel_params(self):
        return 0, self.gamma, self.scale, self.shift, _EMPTY_F, _EMPTY_I

    def spec_string(self) -> str:
        return f"ber:gamma={self.gamma!r},scale={self.scale!r},shift={self.shift}"

    def __repr__(self):
        return f"BernoulliPower(gamma={self.gamma}, scale={self.scale}, shift={self.shift})"


def _validate_weights(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.int64)
    if len(w) == 0:
        raise LawError("empty weight table")
    if w[0] < 1 or np.any(np.diff(w) < 0):
        raise LawError("weights must be nondecreasing positive integers")
    if w[-1] > 1 << 40:
        raise LawError("weights above 2^40 are not simulable; use the analysis "
                       "functions with an explicit float weight sequence")
    return w


class WeightedPower(GrowthLaw):
    """Power-law p_n with tabulated burst sizes w_n."""

    kind = "weighted"

    def __init__(self, gamma: float, weights, scale: float = 1.0, shift: int = 0,
                 weights_path: str | None = None):
        self._base = BernoulliPower(gamma, scale, shift)
        self.gamma, self.scale, self.shift = \
            self._base.gamma, self._base.scale, self._base.shift
        self.weights = _validate_weights(weights)
        self.weights_path = weights_path
        pw = self._base._prob_block(1, len(self.weights)) * self.weights
        self._pw_cumsum = np.cumsum(pw)

    def prob(self, n: int) -> float:
        return self._base.prob(n)

    def _prob_block(self, lo, hi):
        return self._base._prob_block(lo, hi)

    def weight(self, n: int) -> int:
        if n > len(self.weights):
            raise LawError(f"weight table has {len(self.weights)} entries, "
                           f"step {n} requested")
        return int(self.weights[n - 1])

    def cumulative(self, n) -> float:
        return self._base.cumulative(n)

    def expected_vertices(self, n, seed_size: int = 1) -> float:
        if n > len(self.weights):
            raise LawError("horizon exceeds weight table")
        return seed_size + (float(self._pw_cumsum[n - 1]) if n >= 1 else 0.0)

    def validate_horizon(self, n: int) -> None:
        if n > len(self.weights):
            raise LawError(f"weight table covers {len(self.weights)} steps, "
                           f"horizon {n} requested")

    def max_weight_through(self, n: int) -> int:
        self.validate_horizon(n)
        return int(self.weights[min(n, len(self.weights)) - 1])

    def kernel_params(self):
        return 1, self.gamma, self.scale, self.shift, _EMPTY_F, self.weights

    def spec_string(self) -> str:
        w = f"table@{self.weights_path}" if self.weights_path else "table@<inline>"
        return (f"weighted:gamma={self.gamma!r},scale={self.scale!r},"
                f"shift={self.shift},w={w}")


class CustomLaw(GrowthLaw):
    """Explicit tables p_n (and optionally w_n) for n = 1..N."""

    kind = "custom"

    def __init__(self, p, w=None, path: str | None = None):
        p = np.asarray(p, dtype=np.float64)
        if len(p) == 0:
            raise LawError("empty probability table")
        if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise LawError("probabilities must lie in [0, 1]")
        self.p = p
        self.w = _validate_weights(w) if w is not None else None
        if self.w is not None and len(self.w) != len(self.p):
            raise LawError("p and w tables must have equal length")
        self.path = path
        self._p_cumsum = np.cumsum(p)
        pw = p * self.w if self.w is not None else p
        self._pw_cumsum = np.cumsum(pw)

    def prob(self, n: int) -> float:
        if not 1 <= n <= len(self.p):
            raise LawError(f"custom table covers steps 1..{len(self.p)}, "
                           f"step {n} requested")
        return float(self.p[n - 1])

    def _prob_block(self, lo, hi):
        if hi > len(self.p):
            raise LawError("custom table exhausted")
        return self.p[lo - 1:hi]

    def weight(self, n: int) -> int:
        if self.w is None:
            return 1
        return int(self.w[n - 1])

    def cumulative(self, n) -> float:
        if n < 1:
            return 0.0
        if n > len(self.p):
            raise LawError("custom table exhausted")
        return float(self._p_cumsum[int(n) - 1])

    def expected_vertices(self, n, seed_size: int = 1) -> float:
        if n > len(self.p):
            raise LawError("horizon exceeds custom table")
        return seed_size + (float(self._pw_cumsum[n - 1]) if n >= 1 else 0.0)

    def validate_horizon(self, n: int) -> None:
        if n > len(self.p):
            raise LawError(f"custom table covers {len(self.p)} steps, "
                           f"horizon {n} requested")

    def max_weight_through(self, n: int) -> int:
        self.validate_horizon(n)
        return 1 if self.w is None else int(self.w[:n].max())

    def kernel_params(self):
        if self.w is None:
            return 2, 0.0, 0.0, 0, self.p, _EMPTY_I
        return 3, 0.0, 0.0, 0, self.p, self.w

    def spec_string(self) -> str:
        return f"custom@{self.path}" if self.path else "custom@<inline>"


# -- law spec strings ----------------------------------------------------

def _read_columns(path):
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append(line.replace(",", " ").split())
    return rows


def _load_weight_table(path) -> np.ndarray:
    rows = _read_columns(path)
    if not rows:
        raise LawError(f"empty weight table: {path}")
    ncol = len(rows[0])
    if any(len(r) != ncol for r in rows):
        raise LawError(f"ragged weight table: {path}")
    if ncol == 1:
        return np.array([int(r[0]) for r in rows], dtype=np.int64)
    if ncol == 2:
        idx = [int(r[0]) for r in rows]
        if idx != list(range(1, len(rows) + 1)):
            raise LawError("weight table indices must be 1..N in order")
        return np.array([int(r[1]) for r in rows], dtype=np.int64)
    raise LawError("weight table must have 1 or 2 columns")


def load_custom_law(path) -> CustomLaw:
    rows = _read_columns(path)
    if not rows:
        raise LawError(f"empty law table: {path}")
    ncol = len(rows[0])
    if ncol not in (2, 3) or any(len(r) != ncol for r in rows):
        raise LawError("custom law table must have columns n, p [, w]")
    idx = [int(r[0]) for r in rows]
    if idx != list(range(1, len(rows) + 1)):
        raise LawError("custom law indices must be 1..N in order")
    p = [float(r[1]) for r in rows]
    w = [int(r[2]) for r in rows] if ncol == 3 else None
    return CustomLaw(p, w, path=str(path))


def parse_law_spec(spec: str, base_dir=None) -> GrowthLaw:
    """Build a law from its command-line spec string."""
    import os

    def resolve(p):
        if base_dir is not None and not os.path.isabs(p):
            return os.path.join(base_dir, p)
        return p

    spec = spec.strip()
    if spec.startswith("custom@"):
        return load_custom_law(resolve(spec[len("custom@"):]))
    if ":" not in spec:
        raise LawError(f"malformed law spec: {spec!r}")
    family, _, body = spec.partition(":")
    kv = {}
    for item in body.split(","):
        if not item:
            continue
        if "=" not in item:
            raise LawError(f"malformed law option: {item!r}")
        k, _, v = item.partition("=")
        kv[k.strip()] = v.strip()
    if family == "ber":
        allowed = {"gamma", "scale", "shift"}
        unknown = set(kv) - allowed
        if unknown:
            raise LawError(f"unknown ber law keys: {sorted(unknown)}")
        if "gamma" not in kv:
            raise LawError("ber law requires gamma")
        return BernoulliPower(float(kv["gamma"]),
                              float(kv.get("scale", "1.0")),
                              int(kv.get("shift", "0")))
    if family == "weighted":
        allowed = {"gamma", "scale", "shift", "w"}
        unknown = set(kv) - allowed
        if unknown:
            raise LawError(f"unknown weighted law keys: {sorted(unknown)}")
        if "gamma" not in kv or "w" not in kv:
            raise LawError("weighted law requires gamma and w=table@FILE")
        wspec = kv["w"]
        if not wspec.startswith("table@"):
            raise LawError(f"weighted law w must be table@FILE, got {wspec!r}")
        path = resolve(wspec[len("table@"):])
        return WeightedPower(float(kv["gamma"]), _load_weight_table(path),
                             float(kv.get("scale", "1.0")),
                             int(kv.get("shift", "0")),
                             weights_path=str(path))
    raise LawError(f"unknown law family: {family!r}")


# -- growth-count tail bounds ---------------------------------------------

def tau_tail_chebyshev(law: GrowthLaw, i: int, j: int, sharp: bool = False) -> float:
    """Upper bound on P(tau_i > j), the chance of fewer than i growths by step j.

    Applicable only when P_j > i - 1; raises BoundInapplicable otherwise.
    sharp=True uses sum p_k(1-p_k) in the numerator instead of P_j and
    requires j small enough for direct summation.
    """
    if i < 1 or j < 1:
        raise LawError("need i >= 1, j >= 1")
    Pj = law.cumulative(j)
    slack = Pj - (i - 1)
    if slack <= 0.0:
        raise BoundInapplicable(
            f"P_j = {Pj:.6g} must exceed i - 1 = {i - 1}")
    if sharp:
        if j > 50_000_000:
            raise LawError("sharp numerator needs direct summation; j too large")
        acc = 0.0
        lo = 1
        while lo <= j:
            hi = min(j, lo + 1_000_000 - 1)
            p = law._prob_block(lo, hi)
            acc += float(np.sum(p * (1.0 - p)))
            lo = hi + 1
        num = acc
    else:
        num = Pj
    return min(1.0, num / (slack * slack))


def tau_tail_monte_carlo(law: GrowthLaw, i: int, j: int, replicas: int,
                         seed: int) -> float:
    """Monte Carlo estimate of P(tau_i > j) = P(at most i-1 growths by j)."""
    if j > 10_000_000:
        raise LawError("Monte Carlo tail estimation capped at j = 1e7")
    from . import _kernels
    p = np.ascontiguousarray(law._prob_block(1, j), dtype=np.float64)
    state = _kernels.rng_state_from_seed(seed)
    hits = _kernels.poisson_binomial_tail(p, i - 1, replicas, state)
    return hits / replicas


# -- transience diagnostics (delayed growth with heavy bursts) -------------

@dataclass
class TransienceReport:
    """Partial sums of the three transience conditions.

    Condition sums: r_terms[i] bounds P(tau_{i+1} > a_{i+1}) (Chebyshev,
    clipped at 1 and flagged when inapplicable); gap_terms[i] =
    (a_{i+1}-a_i)/(w_i+1); min_increments[b] = sum of min(p_n, p_{n+1}) over
    the b-th dyadic block.  Trend flags come from log-log slope fits over
    the last half of the terms: a slope below -1 indicates a summable tail,
    and min_divergent is set when the dyadic increments of condition 3 do
    not decay geometrically.  These are diagnostics, not proofs.
    """
    a: np.ndarray
    r_terms: np.ndarray
    r_partial: np.ndarray
    r_inapplicable: int
    gap_terms: np.ndarray
    gap_partial: np.ndarray
    min_blocks: np.ndarray
    min_partial: np.ndarray
    r_slope: float
    gap_slope: float
    r_summable: bool
    gap_summable: bool
    min_divergent: bool
    not_recurrent_indicated: bool = field(init=False)
    transient_indicated: bool = field(init=False)

    def __post_init__(self):
        self.not_recurrent_indicated = bool(self.r_summable and self.gap_summable)
        self.transient_indicated = bool(self.not_recurrent_indicated
                                        and self.min_divergent)


def _loglog_slope(terms: np.ndarray) -> float:
    idx = np.arange(1, len(terms) + 1, dtype=np.float64)
    keep = terms > 0.0
    idx, terms = idx[keep], terms[keep]
    if len(terms) < 4:
        return math.nan
    half = len(terms) // 2
    x = np.log(idx[half:])
    y = np.log(terms[half:])
    A = np.vstack([x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(sol[0])


def transience_report(law: GrowthLaw, a, w=None, min_sum_blocks: int = 20) -> TransienceReport:
    """Evaluate the three delayed-growth transience conditions numerically.

    a: increasing thresholds a_1 < a_2 < ... (floats allowed, they enter
    only through cumulative sums).  w: burst sizes per growth index as
    floats; defaults to the law's weight table.  The third condition is
    summed over dyadic blocks [2^b, 2^{b+1}).
    """
    a = np.asarray(a, dtype=np.float64)
    if len(a) < 2 or np.any(np.diff(a) <= 0) or a[0] <= 0:
        raise LawError("need strictly increasing positive thresholds a")
    n_idx = len(a)
    if w is None:
        w = np.array([float(law.weight(i)) for i in range(1, n_idx + 1)])
    else:
        w = np.asarray(w, dtype=np.float64)
        if len(w) < n_idx:
            raise LawError("weight sequence shorter than threshold sequence")
    r_terms = np.empty(n_idx)
    inapplicable = 0
    for i in range(1, n_idx + 1):
        try:
            r_terms[i - 1] = tau_tail_chebyshev(law, i, a[i - 1])
        except BoundInapplicable:
            r_terms[i - 1] = 1.0
            inapplicable += 1
    gap_terms = np.empty(n_idx)
    prev = 0.0
    for i in range(1, n_idx + 1):
        w_prev = w[i - 2] if i >= 2 else w[0]
        gap_terms[i - 1] = (a[i - 1] - prev) / (w_prev + 1.0)
        prev = a[i - 1]
    min_blocks = np.empty(min_sum_blocks)
    for b in range(min_sum_blocks):
        lo, hi = 1 << b, (1 << (b + 1)) - 1
        p0 = law._prob_block(lo, hi)
        p1 = law._prob_block(lo + 1, hi + 1)
        min_blocks[b] = float(np.sum(np.minimum(p0, p1)))
    r_slope = _loglog_slope(r_terms)
    gap_slope = _loglog_slope(gap_terms)
    tail = min_blocks[min_sum_blocks // 2:]
    min_divergent = bool(np.min(tail) > 0.5 * np.max(tail) and np.max(tail) > 0)
    return TransienceReport(
        a=a, r_terms=r_terms, r_partial=np.cumsum(r_terms),
        r_inapplicable=inapplicable,
        gap_terms=gap_terms, gap_partial=np.cumsum(gap_terms),
        min_blocks=min_blocks, min_partial=np.cumsum(min_blocks),
        r_slope=r_slope, gap_slope=gap_slope,
        r_summable=bool(r_slope < -1.0),
        gap_summable=bool(gap_slope < -1.0),
        min_divergent=min_divergent,
    )


def escape_lower_bound(law: GrowthLaw, a, w, k: int) -> float:
    """Lower bound on the chance the distance never returns below level k.

    (1 - sum_{i>=k} r_{i,a_i}) * prod_{i>=k} (w_{i-1}/(w_{i-1}+1))^{da_i},
    with r bounded by Chebyshev; nonpositive values clamp to 0.
    """
    a = np.asarray(a, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if not 1 <= k <= len(a):
        raise LawError("k out of range")
    r_sum = 0.0
    for i in range(k, len(a) + 1):
        try:
            r_sum += tau_tail_chebyshev(law, i, a[i - 1])
        except BoundInapplicable:
            return 0.0
    log_prod = 0.0
    prev = a[k - 2] if k >= 2 else 0.0
    for i in range(k, len(a) + 1):
        w_prev = w[i - 2] if i >= 2 else w[0]
        log_prod += (a[i - 1] - prev) * math.log(w_prev / (w_prev + 1.0))
        prev = a[i - 1]
    return max(0.0, (1.0 - r_sum) * math.exp(log_prod))


# -- worked example laws ----------------------------------------------------

def harmonic_shift_law() -> BernoulliPower:
    """p_n = 1/(n+1); non-summable, so growth never stops."""
    return BernoulliPower(gamma=1.0, scale=1.0, shift=1)


def doubling_thresholds(i_max: int, eps: float = 0.1) -> np.ndarray:
    """a_i = 2^(i^(1+eps)), the schedule that certifies transience for
    p_n = 1/(n+1) with fast-growing bursts."""
    i = np.arange(1, i_max + 1, dtype=np.float64)
    return np.exp2(i ** (1.0 + eps))


def interleaved_stuck_law(n_pairs: int) -> CustomLaw:
    """Harmonic and geometric sequences combed together:
    1/2, 1/2, 1/3, 1/4, 1/4, 1/8, 1/5, 1/16, ...

    sum p_n diverges but sum min(p_n, p_{n+1}) converges, so the third
    transience condition fails; the walker can stay pinned between two
    levels forever.
    """
    p = np.empty(2 * n_pairs)
    for k in range(1, n_pairs + 1):
        p[2 * k - 2] = 1.0 / (k + 1)
        p[2 * k - 1] = 2.0 ** (-k)
    return CustomLaw(p)


# -- sizing helpers ---------------------------------------------------------

def time_for_size(law: GrowthLaw, target_size: int, seed_size: int = 1) -> int:
    """Smallest horizon n with expected vertex count >= target_size."""
    if target_size <= seed_size:
        return 0
    lo, hi = 0, 1
    while law.expected_vertices(hi, seed_size) < target_size:
        lo = hi
        hi *= 2
        if hi > 1 << 62:
            raise LawError("target size unreachable")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if law.expected_vertices(mid, seed_size) >= target_size:
            hi = mid
        else:
            lo = mid
    return hi
