"""The tree-builder walk engine.

Step n >= 1, on tree T_{n-1} at position X_{n-1}: first, with probability
p_n, a burst of Z_n = w_n leaves is attached at the walker's vertex; then
the walker moves to a uniform neighbor of the possibly enlarged tree.  The
root loop occupies two neighbor slots, so the walker stays at the root
with probability 2/deg(root).  Each step consumes exactly two uniforms
(growth coin, move), whether or not growth fires.

The hot path runs in _kernels.walk_segment; WalkEngine owns the arrays,
grows them when a kernel reports a capacity status, and computes the
expensive structural statistics (diameter, height) only at checkpoints.
_python_segment is a step-for-step reference used by the tests to pin the
kernel's semantics, including the draw order and the shared rng stream.

Always-on instrumentation (all O(1) per step):
  root_visits   number of times X_n = root for n >= 1
  L             sum of Z_{j+1} Z_j 1{deg_{T_{j-1}}(X_{j-1}) >= 2}, the
                lower-bound mass that forces escape when bursts collide
  eta histogram gaps between successive times with deg_{T_n}(X_n) >= 2,
                bucketed by the dyadic index of the event count
  red visits    steps spent at vertices with id >= a caller-set threshold
                (vertices born inside an observation window)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .laws import GrowthLaw
from .rng import Xoshiro256StarStar, derive_replica_seed
from .tree import GrowthTree

WSTATE_LEN = 12
COLOR_STREAM_INDEX = 1 << 33  # replica indices stay below 2^32


@dataclass
class GrowthLog:
    """Growth epochs: tau[j], attach[j], z[j] for j = 0..K-1 (epoch j+1)."""

    tau: np.ndarray
    attach: np.ndarray
    z: np.ndarray

    def __len__(self):
        return len(self.tau)

    @property
    def delta_tau(self) -> np.ndarray:
        """tau_k - tau_{k-1} with tau_0 = 0."""
        return np.diff(self.tau, prepend=0)

    def good_flags(self, delta: float) -> np.ndarray:
        """Epoch k is good when delta tau_k >= (k+1)^(2+delta) + 1.

        The index is shifted by one because the seed edge counts as the
        first colored edge, so epoch k builds edge k+1.
        """
        k = np.arange(1, len(self.tau) + 1, dtype=np.float64)
        return self.delta_tau >= (k + 1.0) ** (2.0 + delta) + 1.0

    def write_csv(self, path, delta: float) -> None:
        good = self.good_flags(delta)
        with open(path, "w", encoding="ascii") as fh:
            fh.write("k,tau,delta_tau,attach_vertex,good\n")
            dt = self.delta_tau
            for j in range(len(self.tau)):
                fh.write(f"{j + 1},{self.tau[j]},{dt[j]},{self.attach[j]},"
                         f"{int(good[j])}\n")


class ColorLedger:
    """Half-edge coloring replayed over a growth log.

    The seed edge is colored edge 1, both half-edges blue (B_1 = 2).
    Growth epoch j (one leaf per epoch) creates colored edge k = j + 1:
    on a bad epoch both new half-edges are red; on a good epoch the leaf
    half-edge is blue and the attach half-edge is blue with probability
    B_{k-1}/(2(k-1)), by a coin independent of the walk.  B_k + R_k = 2k.

    force="good"/"bad" overrides the epoch classification (negative
    controls).  Runs must use burst size 1 and the single-edge tree seed.
    """

    def __init__(self, delta: float = 0.05, force: str | None = None):
        if force not in (None, "good", "bad"):
            raise ValueError("force must be None, 'good' or 'bad'")
        self.delta = float(delta)
        self.force = force
        self.blue = None
        self.red = None
        self.B_series = None
        self.R_series = None

    def replay(self, glog: GrowthLog, n_vertices: int, seed_size: int,
               coin_rng: Xoshiro256StarStar) -> None:
        if seed_size != 2:
            raise ValueError("coloring needs the single-edge seed")
        if len(glog) and int(glog.z.max(initial=1)) != 1:
            raise ValueError("coloring is defined for burst size 1")
        kmax = len(glog) + 1
        blue = np.zeros(n_vertices, dtype=np.int64)
        red = np.zeros(n_vertices, dtype=np.int64)
        B = np.zeros(kmax + 1, dtype=np.int64)
        R = np.zeros(kmax + 1, dtype=np.int64)
        blue[0] += 1
        blue[1] += 1
        B[1] = 2
        if self.force == "good":
            good = np.ones(len(glog), dtype=bool)
        elif self.force == "bad":
            good = np.zeros(len(glog), dtype=bool)
        else:
            good = glog.good_flags(self.delta)
        for j in range(len(glog)):
            k = j + 2
            leaf = seed_size + j
            attach = int(glog.attach[j])
            if good[j]:
                blue[leaf] += 1
                add_blue = 1
                if coin_rng.random() < B[k - 1] / (2.0 * (k - 1)):
                    blue[attach] += 1
                    add_blue += 1
                else:
                    red[attach] += 1
            else:
                red[leaf] += 1
                red[attach] += 1
                add_blue = 0
            B[k] = B[k - 1] + add_blue
            R[k] = 2 * k - B[k]
        self.blue = blue
        self.red = red
        self.B_series = B
        self.R_series = R

    def blue_degree_histogram(self) -> np.ndarray:
        """counts[d] = vertices with exactly d blue half-edges."""
        return np.bincount(self.blue)

    def totals_after_epoch(self, j: int) -> tuple[int, int]:
        """(B, R) once growth epoch j (1-based; 0 = seed only) is colored."""
        return int(self.B_series[j + 1]), int(self.R_series[j + 1])


def checkpoint_schedule(horizon: int, spec: str = "dyadic") -> np.ndarray:
    """Checkpoint steps: 'dyadic' (1, 2, 4, ..., horizon), 'count:N'
    (N log-spaced), or an explicit comma list."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if spec == "dyadic":
        pts = []
        v = 1
        while v < horizon:
            pts.append(v)
            v *= 2
        pts.append(horizon)
        return np.array(sorted(set(pts)), dtype=np.int64)
    if spec.startswith("count:"):
        k = int(spec[len("count:"):])
        if k < 1:
            raise ValueError("checkpoint count must be >= 1")
        pts = np.unique(np.round(np.logspace(0, np.log10(horizon), k)).astype(np.int64))
        return pts[pts >= 1]
    pts = np.array(sorted({int(float(tok)) for tok in spec.split(",") if tok}),
                   dtype=np.int64)
    if len(pts) == 0 or pts[0] < 1 or pts[-1] > horizon:
        raise ValueError(f"bad checkpoint list {spec!r} for horizon {horizon}")
    if pts[-1] != horizon:
        pts = np.append(pts, horizon)
    return pts


@dataclass
class RunResult:
    law_spec: str
    seed: int
    horizon: int
    final_step: int
    size_capped: bool
    checkpoints: dict
    growth_log: GrowthLog
    root_visits: int
    L: int
    eta_event_count: int
    eta_histogram: np.ndarray
    tree: GrowthTree
    color: ColorLedger | None = None
    final_position: int = 0
    red_visits: int = 0

    def write_checkpoints_csv(self, path) -> None:
        cols = ["n", "size", "diam", "height", "maxdeg", "dist_root",
                "root_visits"]
        if "Bk" in self.checkpoints:
            cols += ["Bk", "Rk"]
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(cols) + "\n")
            m = len(self.checkpoints["n"])
            for i in range(m):
                fh.write(",".join(str(int(self.checkpoints[c][i]))
                                  for c in cols) + "\n")


class WalkEngine:
    """Resumable walk with kernel-backed segments."""

    def __init__(self, law: GrowthLaw, seed: int, tree_seed: str = "vertex",
                 growth_capacity: int = 1 << 12):
        self.law = law
        self.seed = int(seed)
        if tree_seed == "vertex":
            self.tree = GrowthTree.single_vertex()
            self.seed_size = 1
        elif tree_seed == "edge":
            self.tree = GrowthTree.single_edge()
            self.seed_size = 2
        elif isinstance(tree_seed, GrowthTree):
            if not tree_seed.root_loop:
                raise ValueError("the walk requires the root loop")
            self.tree = tree_seed
            self.seed_size = tree_seed.n
        else:
            raise ValueError(f"unknown tree seed {tree_seed!r}")
        self.tree_seed_kind = tree_seed if isinstance(tree_seed, str) else "custom"
        self.rs = K.rng_state_from_seed(self.seed)
        self.wstate = np.zeros(WSTATE_LEN, dtype=np.int64)
        self.wstate[11] = 2
        self.g_tau = np.zeros(growth_capacity, dtype=np.int64)
        self.g_attach = np.zeros(growth_capacity, dtype=np.int64)
        self.g_z = np.zeros(growth_capacity, dtype=np.int64)
        self.g_cursor = np.zeros(1, dtype=np.int64)
        self.eta_hist = np.zeros(K.ETA_HIST_BUCKETS * K.ETA_HIST_GAPS,
                                 dtype=np.int64)
        self._endp_stub = np.zeros(1, dtype=np.int64)
        self._scratch = None

    # state views ---------------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.wstate[0])

    @property
    def x(self) -> int:
        return int(self.wstate[1])

    @property
    def root_visits(self) -> int:
        return int(self.wstate[2])

    @property
    def red_visits(self) -> int:
        return int(self.wstate[9])

    def growth_log(self) -> GrowthLog:
        k = int(self.g_cursor[0])
        return GrowthLog(self.g_tau[:k].copy(), self.g_attach[:k].copy(),
                         self.g_z[:k].copy())

    def _tstate(self) -> np.ndarray:
        return np.array([self.tree.n, self.tree.pool_used, self.tree.endp_used,
                         -1], dtype=np.int64)

    def _sync_tstate(self, tstate) -> None:
        self.tree.n = int(tstate[0])
        self.tree.pool_used = int(tstate[1])
        self.tree.endp_used = int(tstate[2])

    def _grow_growth_log(self) -> None:
        cap = 2 * len(self.g_tau)
        for name in ("g_tau", "g_attach", "g_z"):
            old = getattr(self, name)
            new = np.zeros(cap, dtype=np.int64)
            new[:len(old)] = old
            setattr(self, name, new)

    # advancing -----------------------------------------------------------

    def advance(self, n_end: int, max_vertices: int = 0,
                red_threshold: int | None = None) -> bool:
        """Run kernel segments until step n_end (or the vertex target).

        Returns True if the vertex target stopped the run early.
        """
        if n_end < self.n:
            raise ValueError("cannot run backwards")
        self.law.validate_horizon(n_end)
        kind, gamma, scale, shift, p_tab, w_tab = self.law.kernel_params()
        thresh = (1 << 62) if red_threshold is None else int(red_threshold)
        t = self.tree
        while True:
            tstate = self._tstate()
            status = K.walk_segment(
                t.parent, t.depth, t.birth, t.deg, t.child_off, t.child_cap,
                t.child_cnt, t.child_pool,
                t.endpoints if t.track_endpoints else self._endp_stub,
                tstate, t.track_endpoints, self.rs, self.wstate,
                kind, gamma, scale, shift, p_tab, w_tab,
                n_end, max_vertices, thresh,
                self.g_tau, self.g_attach, self.g_z, self.g_cursor,
                self.eta_hist)
            self._sync_tstate(tstate)
            if status == K.OK:
                return False
            if status == K.SIZE_CAP:
                return True
            if status == K.NEED_VERTEX:
                t._grow_vertex_arrays(t.n + max(2, t.n))
            elif status == K.NEED_POOL:
                t._grow_pool(2 * len(t.child_pool))
            elif status == K.NEED_ENDPOINTS:
                t._grow_endpoints(2 * len(t.endpoints))
            elif status == K.GROWTH_LOG_FULL:
                self._grow_growth_log()
            else:
                raise RuntimeError(f"unexpected kernel status {status}")

    # python reference (bit-identical to the kernel; tests rely on it) ------

    def _python_segment(self, n_end: int) -> None:
        t = self.tree
        g = Xoshiro256StarStar.from_state(self.rs)
        w = self.wstate
        n = int(w[0])
        x = int(w[1])
        while n < n_end:
            n += 1
            p = self.law.prob(n)
            flag_cur = 1 if t.deg[x] >= 2 else 0
            z = 0
            if g.random() < p:
                z = self.law.weight(n)
                for _ in range(z):
                    t.add_leaf(x, n)
                gi = int(self.g_cursor[0])
                if gi >= len(self.g_tau):
                    self._grow_growth_log()
                self.g_tau[gi] = n
                self.g_attach[gi] = x
                self.g_z[gi] = z
                self.g_cursor[0] = gi + 1
                w[8] += 1
            w[3] += z * w[4] * w[5]
            w[4] = z
            w[5] = flag_cur
            x = t.uniform_neighbor(x, g.random())
            if x == 0:
                w[2] += 1
            if t.deg[x] >= 2:
                gap = n - w[6]
                w[6] = n
                w[7] += 1
                if w[7] >= w[11] and w[10] < K.ETA_HIST_BUCKETS - 1:
                    w[10] += 1
                    w[11] *= 2
                g2 = min(gap, K.ETA_HIST_GAPS - 1)
                self.eta_hist[w[10] * K.ETA_HIST_GAPS + g2] += 1
        w[0] = n
        w[1] = x
        self.rs[:] = np.array(g.s, dtype=np.uint64)

    # structural rows -------------------------------------------------------

    def _scratch_arrays(self):
        n = len(self.tree.parent)
        if self._scratch is None or len(self._scratch[0]) < n:
            self._scratch = (np.empty(n, dtype=np.int64),
                             np.empty(n, dtype=np.int64))
        return self._scratch

    def diameter(self) -> int:
        t = self.tree
        if t.n == 1:
            return 0
        dist, queue = self._scratch_arrays()
        out = np.zeros(2, dtype=np.int64)
        K.farthest(t.parent, t.child_off, t.child_cnt, t.child_pool, t.n, 0,
                   dist, queue, out)
        K.farthest(t.parent, t.child_off, t.child_cnt, t.child_pool, t.n,
                   out[0], dist, queue, out)
        return int(out[1])

    def checkpoint_row(self) -> dict:
        t = self.tree
        return {
            "n": self.n,
            "size": t.n,
            "diam": self.diameter(),
            "height": t.height(),
            "maxdeg": t.max_degree(),
            "dist_root": int(t.depth[self.x]),
            "root_visits": self.root_visits,
        }

    # orchestrated runs ------------------------------------------------------

    def run(self, horizon: int, checkpoints: str = "dyadic",
            max_vertices: int = 0, color_delta: float | None = None) -> RunResult:
        schedule = checkpoint_schedule(horizon, checkpoints)
        rows = []
        capped = False
        for n_end in schedule:
            capped = self.advance(int(n_end), max_vertices=max_vertices)
            rows.append(self.checkpoint_row())
            if capped:
                break
        cols = {k: np.array([r[k] for r in rows], dtype=np.int64)
                for k in rows[0]}
        glog = self.growth_log()
        color = None
        if color_delta is not None:
            color = ColorLedger(delta=color_delta)
            coin = Xoshiro256StarStar(
                derive_replica_seed(self.seed, COLOR_STREAM_INDEX))
            color.replay(glog, self.tree.n, self.seed_size, coin)
            bk = np.empty(len(rows), dtype=np.int64)
            rk = np.empty(len(rows), dtype=np.int64)
            for i, r in enumerate(rows):
                j = int(np.searchsorted(glog.tau, r["n"], side="right"))
                bk[i], rk[i] = color.totals_after_epoch(j)
            cols["Bk"] = bk
            cols["Rk"] = rk
        return RunResult(
            law_spec=self.law.spec_string(), seed=self.seed, horizon=horizon,
            final_step=self.n, size_capped=capped, checkpoints=cols,
            growth_log=glog, root_visits=self.root_visits,
            L=int(self.wstate[3]), eta_event_count=int(self.wstate[7]),
            eta_histogram=self.eta_hist.reshape(K.ETA_HIST_BUCKETS,
                                                K.ETA_HIST_GAPS).copy(),
            tree=self.tree, color=color, final_position=self.x,
            red_visits=self.red_visits)


def delta_eta_bound_table(eta_histogram: np.ndarray, gamma: float,
                          m_values=(2, 3, 4)) -> list[dict]:
    """Empirical P(gap >= m) per dyadic event bucket next to the theory
    bound k^(-(m-1) gamma) evaluated at the bucket's smallest k (the loosest
    point of the bucket).  Diagnostic rows for the transience experiment."""
    rows = []
    for b in range(eta_histogram.shape[0]):
        total = int(eta_histogram[b].sum())
        if total == 0:
            continue
        k_lo = 1 << b
        for m in m_values:
            tail = int(eta_histogram[b, m:].sum())
            rows.append({
                "bucket": b, "k_lo": k_lo, "m": m,
                "events": total,
                "empirical": tail / total,
                "bound": float(k_lo) ** (-(m - 1) * gamma),
            })
    return rows
