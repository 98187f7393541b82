"""Exact analysis of simple random walk on a fixed tree with a root loop.

The chain's state space is the vertex set; from v the walker moves to a
uniform neighbor slot, where the root's self-loop occupies two slots (so
P(root, root) = 2/deg(root)).  The chain is irreducible, aperiodic (thanks
to the loop) and reversible with stationary law pi(v) = deg(v)/(2|E|),
|E| counting the loop as one edge.

Everything here is deterministic linear algebra on one frozen tree:
t-step laws, separation and total-variation profiles, mixing time,
spectrum and relaxation time, hitting times (by tree-structured crossing
sums, with a dense-solve cross-check), the eigentime identity, visit
counts against the fixed-tree bound, optimal strong stationary times via
mixture peeling, and the probability that such a stopping time loses the
race against the next growth epoch.

Dense computations (spectrum, profiles, mixing time) are capped at
DENSE_CAP states; larger chains still expose the geometric bounds, which
need only degrees and distances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _kernels as K
from .rng import Xoshiro256StarStar

DENSE_CAP = 2000


class ChainTooLarge(Exception):
    """Dense analysis requested beyond DENSE_CAP states.

    The geometric bounds (relaxation_time_bound, lambda_min_bound,
    mixing_time_bound) remain available at any size.
    """


def _as_parents(parents) -> np.ndarray:
    parents = np.asarray(parents, dtype=np.int64)
    n = len(parents)
    if n == 0 or parents[0] != -1:
        raise ValueError("parents[0] must be -1 (root)")
    if n > 1 and (np.any(parents[1:] < 0) or np.any(parents[1:] >= np.arange(1, n))):
        raise ValueError("every parent must precede its child")
    return parents


class ChainAnalysis:
    """Immutable snapshot of the walk chain on one tree."""

    def __init__(self, parents):
        self.parent = _as_parents(parents)
        n = len(self.parent)
        self.n = n
        self.deg = np.ones(n, dtype=np.int64)
        self.deg[0] = 2  # loop
        np.add.at(self.deg, self.parent[1:], 1)
        self.total_degree = 2 * n
        self.edges = n  # n-1 tree edges plus the loop
        self.children = [[] for _ in range(n)]
        for v in range(1, n):
            self.children[self.parent[v]].append(v)
        self.children = [np.array(c, dtype=np.int64) for c in self.children]
        self.depth = np.zeros(n, dtype=np.int64)
        for v in range(1, n):
            self.depth[v] = self.depth[self.parent[v]] + 1
        self.pi = self.deg / float(self.total_degree)
        self.P = self._build_p()
        self.PT = self.P.T.tocsr()
        self.diam = self._diameter()
        self._dense_p = None
        self._eigs = None

    @classmethod
    def from_tree(cls, tree) -> "ChainAnalysis":
        if not getattr(tree, "root_loop", True):
            raise ValueError("chain analysis requires the root loop")
        return cls(tree.parent[:tree.n].copy())

    @classmethod
    def from_parents(cls, parents) -> "ChainAnalysis":
        return cls(parents)

    def _build_p(self):
        rows, cols, vals = [], [], []
        for v in range(self.n):
            d = float(self.deg[v])
            if v == 0:
                rows.append(0)
                cols.append(0)
                vals.append(2.0 / d)
            else:
                rows.append(v)
                cols.append(self.parent[v])
                vals.append(1.0 / d)
            for c in self.children[v]:
                rows.append(v)
                cols.append(int(c))
                vals.append(1.0 / d)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def _neighbors(self, v: int) -> np.ndarray:
        if v == 0:
            return self.children[0]
        return np.concatenate(([self.parent[v]], self.children[v]))

    def _bfs_dist(self, src: int) -> np.ndarray:
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[src] = 0
        queue = [src]
        for v in queue:
            for u in self._neighbors(v):
                u = int(u)
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist

    def _diameter(self) -> int:
        if self.n == 1:
            return 0
        a = int(np.argmax(self.depth))
        return int(self._bfs_dist(a).max())

    # -- exact structure ----------------------------------------------------

    def detailed_balance_exact(self) -> bool:
        """pi(x) P(x,y) == pi(y) P(y,x) as exact rationals.

        pi(v) = deg(v)/2|E| and P(v,u) = slots(v,u)/deg(v), all integers,
        so the flux over each edge reduces to slots(v,u)/2|E|.
        """
        D = self.total_degree

        def flux(v: int, u: int, slots: int) -> Fraction:
            return Fraction(int(self.deg[v]), D) * Fraction(slots, int(self.deg[v]))

        for v in range(1, self.n):
            p = int(self.parent[v])
            if flux(v, p, 1) != flux(p, v, 1):
                return False
        return flux(0, 0, 2) == flux(0, 0, 2)

    def detailed_balance_residual(self) -> float:
        """max |pi(x)P(x,y) - pi(y)P(y,x)| over the float matrices."""
        F = sp.diags(self.pi) @ self.P
        return float(np.abs((F - F.T).toarray()).max())

    def stationary_check(self) -> float:
        return float(np.abs(self.PT @ self.pi - self.pi).max())

    # -- t-step laws ----------------------------------------------------------

    def evolve(self, dist, t: int):
        """dist P^t (one sparse product per step)."""
        if t < 0:
            raise ValueError("t must be >= 0")
        d = np.asarray(dist, dtype=np.float64).copy()
        for _ in range(t):
            d = self.PT @ d
        return d

    def t_step_row(self, x: int, t: int) -> np.ndarray:
        d = np.zeros(self.n)
        d[x] = 1.0
        return self.evolve(d, t)

    def separation(self, x: int, t: int) -> float:
        row = self.t_step_row(x, t)
        return float(np.max(1.0 - row / self.pi))

    def separation_profile(self, x: int, t_max: int) -> np.ndarray:
        d = np.zeros(self.n)
        d[x] = 1.0
        out = np.empty(t_max + 1)
        for t in range(t_max + 1):
            out[t] = np.max(1.0 - d / self.pi)
            if t < t_max:
                d = self.PT @ d
        return out

    def tv_from(self, x: int, t: int) -> float:
        row = self.t_step_row(x, t)
        return 0.5 * float(np.abs(row - self.pi).sum())

    def _dense(self) -> np.ndarray:
        if self.n > DENSE_CAP:
            raise ChainTooLarge(
                f"{self.n} states exceeds the dense cap {DENSE_CAP}; "
                "use the geometric bounds instead")
        if self._dense_p is None:
            self._dense_p = self.P.toarray()
        return self._dense_p

    def _tv_of_matrix(self, M: np.ndarray) -> float:
        return 0.5 * float(np.abs(M - self.pi[None, :]).sum(axis=1).max())

    def _sep_of_matrix(self, M: np.ndarray) -> float:
        return float(np.max(1.0 - M / self.pi[None, :]))

    def distance_profiles(self, t_max: int):
        """(sep, tv) worst-case-over-start profiles for t = 0..t_max."""
        P = self._dense()
        M = np.eye(self.n)
        sep = np.empty(t_max + 1)
        tv = np.empty(t_max + 1)
        for t in range(t_max + 1):
            sep[t] = self._sep_of_matrix(M)
            tv[t] = self._tv_of_matrix(M)
            if t < t_max:
                M = M @ P
        return sep, tv

    def mixing_time(self, eps: float = 0.25, t_cap: int | None = None):
        """Smallest t with max_x TV(P^t(x,.), pi) <= eps.

        Returns (t, exact); exact is False when t_cap stopped the search,
        in which case t is a lower bound.  Uses repeated squaring plus a
        bisection over cached powers, so only O(log^2 t) dense products.
        """
        if self.n == 1:
            return 0, True
        P = self._dense()
        if self._tv_of_matrix(np.eye(self.n)) <= eps:
            return 0, True
        sq = [P]  # sq[i] = P^(2^i)
        t = 1
        M = P
        while self._tv_of_matrix(M) > eps:
            if t_cap is not None and 2 * t > t_cap:
                return t, False
            M = M @ M
            t *= 2
            sq.append(M)
        if t == 1:
            return 1, True

        def power(k: int) -> np.ndarray:
            M = np.eye(self.n)
            i = 0
            while k:
                if k & 1:
                    M = M @ sq[i]
                k >>= 1
                i += 1
            return M

        lo, hi = t // 2, t  # d(lo) > eps >= d(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._tv_of_matrix(power(mid)) <= eps:
                hi = mid
            else:
                lo = mid
        return hi, True

    # -- spectrum ---------------------------------------------------------------

    def spectrum(self) -> np.ndarray:
        """All eigenvalues of P, descending.  Real by reversibility."""
        if self._eigs is None:
            if self.n > DENSE_CAP:
                raise ChainTooLarge(
                    f"{self.n} states exceeds the dense cap {DENSE_CAP}")
            root_pi = np.sqrt(self.pi)
            S = self._dense() * (root_pi[:, None] / root_pi[None, :])
            S = 0.5 * (S + S.T)
            self._eigs = scipy.linalg.eigh(S, eigvals_only=True)[::-1].copy()
        return self._eigs

    @property
    def gamma_star(self) -> float:
        lam = self.spectrum()
        if self.n == 1:
            return 1.0
        return 1.0 - float(np.max(np.abs(lam[1:])))

    @property
    def t_rel(self) -> float:
        return 1.0 / self.gamma_star

    @property
    def lambda_min(self) -> float:
        return float(self.spectrum()[-1])

    def second_eigenvalue_power(self, tol: float = 1e-13,
                                max_iter: int = 200000) -> float:
        """max_{i>=2} |lambda_i| by shifted power iteration (independent
        route used to cross-check the dense solve)."""
        if self.n == 1:
            return 0.0
        root_pi = np.sqrt(self.pi)
        u1 = root_pi / np.linalg.norm(root_pi)
        S = self._dense() * (root_pi[:, None] / root_pi[None, :])
        S = 0.5 * (S + S.T)

        def extremal(shift: float) -> float:
            rng = np.random.default_rng(12345)
            v = rng.standard_normal(self.n)
            v -= (v @ u1) * u1
            v /= np.linalg.norm(v)
            prev = np.inf
            val = 0.0
            for _ in range(max_iter):
                w = S @ v + shift * v
                w -= (w @ u1) * u1
                nw = np.linalg.norm(w)
                if nw == 0.0:
                    return 0.0
                v = w / nw
                val = v @ (S @ v)
                if abs(val - prev) < tol:
                    break
                prev = val
            return val

        lam2 = extremal(1.0)       # top of the deflated spectrum
        lam_min = extremal(-1.0)   # bottom
        return max(abs(lam2), abs(lam_min))

    # -- geometric bounds ---------------------------------------------------------

    def i_sigma(self) -> int:
        """sum_x (2 dist(x, root) + 1) deg(x), from the odd closed paths
        through the root loop."""
        return int(np.sum((2 * self.depth + 1) * self.deg))

    def lambda_min_bound(self) -> float:
        """lambda_min >= -1 + 2/i_sigma."""
        return -1.0 + 2.0 / self.i_sigma()

    def lambda_min_bound_diam(self) -> float:
        """Weaker form -1 + 1/((2 diam + 1)|E|)."""
        return -1.0 + 1.0 / ((2 * self.diam + 1) * self.edges)

    def relaxation_time_bound(self) -> int:
        """t_rel <= (2 diam + 1)|E|."""
        return (2 * self.diam + 1) * self.edges

    def mixing_time_bound(self, eps: float = 0.25) -> float:
        """t_mix(eps) <= (2 diam + 1)|E| log(2|E|/eps)."""
        return self.relaxation_time_bound() * np.log(2.0 * self.edges / eps)

    # -- hitting and return times ------------------------------------------------

    def hitting_times(self) -> np.ndarray:
        """H[x, y] = E_x[time to first reach y], by crossing sums.

        Rooting the tree at the target y, the expected time to cross from
        z to its parent is 2(|T'(z)| - 1 + loop_in(z)) + 1 where T'(z) is
        z's subtree in that orientation and loop_in says whether the
        degree-2 loop sits inside it; hitting times accumulate crossings
        along the path.  O(n) per target.
        """
        n = self.n
        H = np.zeros((n, n))
        for y in range(n):
            order = [y]
            par = np.full(n, -1, dtype=np.int64)
            par[y] = y
            for v in order:
                for u in self._neighbors(v):
                    u = int(u)
                    if par[u] < 0 and u != y:
                        par[u] = v
                        order.append(u)
            sub = np.ones(n, dtype=np.int64)
            for v in reversed(order[1:]):
                sub[par[v]] += sub[v]
            loop_in = np.zeros(n, dtype=bool)
            z = 0
            while z != y:
                loop_in[z] = True
                z = int(par[z])
            for v in order[1:]:
                cross = 2.0 * (sub[v] - 1 + (1 if loop_in[v] else 0)) + 1.0
                H[v, y] = H[int(par[v]), y] + cross
        return H

    def hitting_time_solve(self, y: int) -> np.ndarray:
        """Dense-solve route: (I - Q) h = 1 with the target removed."""
        n = self.n
        keep = [v for v in range(n) if v != y]
        Q = self._dense()[np.ix_(keep, keep)]
        h = np.linalg.solve(np.eye(n - 1) - Q, np.ones(n - 1))
        out = np.zeros(n)
        out[keep] = h
        return out

    def return_time(self, v: int) -> Fraction:
        """E_v[first return to v] = total_degree/deg(v), exactly."""
        return Fraction(self.total_degree, int(self.deg[v]))

    def return_time_first_step(self, v: int) -> float:
        """1 + sum_u P(v,u) E_u[H_v]: the same quantity via hitting times."""
        H = self.hitting_times()
        acc = 1.0
        d = float(self.deg[v])
        if v == 0:
            acc += 0.0  # the loop returns immediately
        for u in self._neighbors(v):
            acc += H[int(u), v] / d
        return acc

    def eigentime(self, x: int = 0):
        """(lhs, rhs) of sum_y pi(y) E_x[H_y] = sum_{i>=2} 1/(1 - lambda_i)."""
        H = self.hitting_times()
        lhs = float(self.pi @ H[x])
        lam = self.spectrum()
        rhs = float(np.sum(1.0 / (1.0 - lam[1:]))) if self.n > 1 else 0.0
        return lhs, rhs

    # -- visit counts ------------------------------------------------------------

    def subtree(self, v: int) -> np.ndarray:
        """Descendants of v (inclusive) in the root-at-0 orientation."""
        out = [v]
        for w in out:
            out.extend(int(c) for c in self.children[w])
        return np.array(sorted(out), dtype=np.int64)

    def expected_visits(self, start: int, v: int, t: int) -> float:
        """sum_{j=0..t} P^j(start, v)."""
        d = np.zeros(self.n)
        d[start] = 1.0
        acc = d[v]
        for _ in range(t):
            d = self.PT @ d
            acc += d[v]
        return float(acc)

    def expected_subtree_visits(self, start: int, v: int, t: int) -> float:
        """sum_{j=0..t} P^j(start, T(v)) over the descendants of v."""
        idx = self.subtree(v)
        d = np.zeros(self.n)
        d[start] = 1.0
        acc = float(d[idx].sum())
        for _ in range(t):
            d = self.PT @ d
            acc += float(d[idx].sum())
        return acc

    def subtree_visit_bound(self, v: int, t: int) -> float:
        """|T(v)| [ (t+3)/(|T|-1) + 48 |T| ], the fixed-tree bound for a
        walk started at v (degenerate for |T| = 1)."""
        if self.n == 1:
            raise ValueError("bound needs at least two vertices")
        tv = len(self.subtree(v))
        return tv * ((t + 3.0) / (self.n - 1.0) + 48.0 * self.n)

    # -- strong stationary times ----------------------------------------------

    def sst_table(self, x: int, t0: int = 1, residual_tol: float = 1e-12,
                  t_cap: int | None = None) -> "SstTable":
        """Mixture-peeling stopping rule started from x.

        Maintains m_t(y) = P(X_t = y, not yet stopped); at each multiple
        of t0 peels a_t = min_y m_t(y)/pi(y), so the rule stops at (t, y)
        with probability a_t pi(y)/m_t(y).  With t0 = 1 the tail
        P(eta > t) equals the separation profile s_x(t), which is optimal.
        """
        if t0 < 1:
            raise ValueError("block length must be >= 1")
        if t_cap is None:
            t_cap = 400 * (self.relaxation_time_bound() + 1)
        m = np.zeros(self.n)
        m[x] = 1.0
        rows = []
        a = []
        t = 0
        residual = 1.0
        while True:
            if t % t0 == 0:
                at = max(float(np.min(m / self.pi)), 0.0)
                sigma = np.zeros(self.n)
                np.divide(at * self.pi, m, out=sigma, where=m > 1e-300)
                np.clip(sigma, 0.0, 1.0, out=sigma)
                rows.append(sigma)
                a.append(at)
                m = m - at * self.pi
                np.clip(m, 0.0, None, out=m)
                residual = float(m.sum())
            else:
                rows.append(np.zeros(self.n))
                a.append(0.0)
            if residual <= residual_tol or t >= t_cap:
                break
            m = self.PT @ m
            t += 1
        return SstTable(np.array(rows), np.array(a), residual, t0,
                        hit_cap=residual > residual_tol)

    def sst_tail(self, x: int, t_max: int, t0: int = 1) -> np.ndarray:
        """P(eta > t) for t = 0..t_max under the peeling rule."""
        table = self.sst_table(x, t0=t0, residual_tol=-1.0, t_cap=t_max)
        return 1.0 - np.cumsum(table.a)

    def sample_sst(self, x: int, rng: Xoshiro256StarStar,
                   table: "SstTable | None" = None, t0: int = 1):
        """One (eta, stop state) draw; the walk consumes one uniform per
        move and one per peel opportunity with positive stop mass."""
        if table is None:
            table = self.sst_table(x, t0=t0)
        pos = x
        t = 0
        t_end = len(table.stop_prob) - 1
        while True:
            if t <= t_end:
                sig = table.stop_prob[t, pos]
                if sig > 0.0 and rng.random() < sig:
                    return t, pos
            if t >= t_end:
                # residual below tolerance; truncate here (bias <= residual)
                return t, pos
            pos = self.step(pos, rng.random())
            t += 1

    def step(self, v: int, u: float) -> int:
        """Uniform-slot neighbor move, matching the simulation engine."""
        d = int(self.deg[v])
        j = int(u * d)
        if j >= d:
            j = d - 1
        if v == 0:
            if j < 2:
                return 0
            return int(self.children[0][j - 2])
        if j == 0:
            return int(self.parent[v])
        return int(self.children[v][j - 1])

    # -- growth race ---------------------------------------------------------

    def coupling_failure_prob(self, x: int, law, n0: int,
                              s_tol: float = 1e-12, tail_tol: float = 1e-12,
                              m_cap: int = 50_000_000) -> "CouplingResult":
        """q = sum_m P(gap = m) s_x(m-1): the chance the optimal stopping
        rule started at x is still running when the next growth lands.

        The gap law starts at base step n0; independence of the stopping
        time and the growth clock makes the sum exact.  Truncation keeps
        remainder <= tail(M) s(M).
        """
        kind, gamma, scale, shift, p_tab, _ = law.kernel_params()
        out = np.zeros(6)
        K.coupling_q(self.PT.indptr, self.PT.indices, self.PT.data,
                     self.pi, x, kind, gamma, scale, shift,
                     p_tab if len(p_tab) else np.zeros(1),
                     n0, s_tol, tail_tol, m_cap, out)
        return CouplingResult(q=float(out[0]), remainder=float(out[1]),
                              m_truncated=int(out[2]), s_final=float(out[3]),
                              tail_final=float(out[4]),
                              hit_cap=bool(out[5] > 0.0))

    # -- reports ---------------------------------------------------------------

    def report(self, eps: float = 0.25) -> dict:
        tmix, exact = self.mixing_time(eps)
        lhs, rhs = self.eigentime(0)
        return {
            "size": self.n,
            "edges": self.edges,
            "diam": self.diam,
            "tmix": tmix,
            "tmix_exact": exact,
            "trel": self.t_rel,
            "gamma_star": self.gamma_star,
            "lambda_min": self.lambda_min,
            "eigentime_lhs": lhs,
            "eigentime_rhs": rhs,
        }


@dataclass
class SstTable:
    stop_prob: np.ndarray  # (T+1, n) stop probabilities
    a: np.ndarray          # peeled mass per time
    residual: float
    t0: int
    hit_cap: bool

    def tail(self) -> np.ndarray:
        return 1.0 - np.cumsum(self.a)


@dataclass
class CouplingResult:
    q: float
    remainder: float
    m_truncated: int
    s_final: float
    tail_final: float
    hit_cap: bool

    @property
    def widened(self) -> bool:
        return self.remainder > 1e-9 or self.hit_cap

    @property
    def q_upper(self) -> float:
        return self.q + self.remainder


# -- stationarity at growth ----------------------------------------------------


@dataclass
class RightbiasResult:
    replicas: int
    conditioned: int
    cond_counts: np.ndarray
    uncond_counts: np.ndarray
    eta_counts: np.ndarray
    chi2_cond: float
    p_cond: float
    chi2_uncond: float
    p_uncond: float

    @property
    def conditioning_rate(self) -> float:
        return self.conditioned / self.replicas if self.replicas else 0.0


def _chi2_vs_pi(counts: np.ndarray, pi: np.ndarray):
    from scipy.stats import chisquare
    total = counts.sum()
    if total == 0:
        return float("nan"), float("nan")
    res = chisquare(counts, f_exp=total * pi)
    return float(res.statistic), float(res.pvalue)


def constant_rate(law, n0: int, probe: int = 64) -> float | None:
    """The constant p when the law is flat beyond step n0, else None."""
    g = getattr(law, "gamma", None)
    if g is not None:
        return law.prob(n0 + 1) if g == 0.0 else None
    tab = getattr(law, "p", None)
    if tab is not None and n0 < len(tab):
        seg = tab[n0:n0 + probe]
        if np.all(seg == seg[0]):
            return float(seg[0])
    return None


def rightbias_experiment(tree, x0: int, law, n0: int, replicas: int,
                         seed: int, t0: int = 1) -> RightbiasResult:
    """Race the optimal stopping rule against the first growth epoch.

    Per replica: walk from x0 on the frozen tree; growth coins use the
    law's rates p(n0+1), p(n0+2), ... and the pre-move position at the
    winning coin is X_{tau-1}.  Conditioned on the stopping rule having
    fired first, that position should be stationary; the unconditioned
    law is the negative control.  Constant laws run in the compiled
    kernel, others in plain python.
    """
    chain = ChainAnalysis.from_tree(tree)
    table = chain.sst_table(x0, t0=t0)
    cond = np.zeros(chain.n, dtype=np.int64)
    uncond = np.zeros(chain.n, dtype=np.int64)
    eta_counts = np.zeros(chain.n, dtype=np.int64)
    meta = np.zeros(2, dtype=np.int64)
    p_const = constant_rate(law, n0)
    if p_const is not None:
        rs = K.rng_state_from_seed(seed)
        K.rightbias_replicas(tree.parent, tree.deg, tree.child_off,
                             tree.child_pool, rs, x0, p_const,
                             table.stop_prob, replicas,
                             cond, uncond, eta_counts, meta)
    else:
        rng = Xoshiro256StarStar(seed)
        t_end = len(table.stop_prob) - 1
        for _ in range(replicas):
            x = x0
            t = 0
            eta_seen = False
            x_eta = -1
            if rng.random() < table.stop_prob[0, x]:
                eta_seen = True
                x_eta = x
            while True:
                if rng.random() < law.prob(n0 + t + 1):
                    uncond[x] += 1
                    if eta_seen:
                        cond[x] += 1
                        eta_counts[x_eta] += 1
                        meta[0] += 1
                    break
                x = chain.step(x, rng.random())
                t += 1
                if not eta_seen and t <= t_end:
                    if rng.random() < table.stop_prob[t, x]:
                        eta_seen = True
                        x_eta = x
    chi2_c, p_c = _chi2_vs_pi(cond, chain.pi)
    chi2_u, p_u = _chi2_vs_pi(uncond, chain.pi)
    return RightbiasResult(replicas=replicas, conditioned=int(meta[0]),
                           cond_counts=cond, uncond_counts=uncond,
                           eta_counts=eta_counts,
                           chi2_cond=chi2_c, p_cond=p_c,
                           chi2_uncond=chi2_u, p_uncond=p_u)
