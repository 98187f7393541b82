"""Preferential-attachment tree generators and their limit-law targets.

Attachment is degree-proportional (the root loop counts 2 slots), done by
drawing a uniform entry of the edge-endpoint pool, where every edge
contributes both ends and the loop contributes the root twice.  Two
generators share the rule: the classical one-leaf-per-step model, and the
burst variant where step n adds Z_n leaves to a single target chosen by
the pre-burst degrees.

Closed-form targets: degree fractions 4/(d(d+1)(d+2)), within-level
degree fractions 1/(d(d+1)), and height/ln n -> 1/(2c) with c the root of
c e^(c+1) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .rng import Xoshiro256StarStar
from .tree import GrowthTree
from .walk import GrowthLog


def degree_law(d):
    """Limit fraction of degree-d vertices."""
    d = np.asarray(d, dtype=np.float64)
    return 4.0 / (d * (d + 1.0) * (d + 2.0))


def level_law(d):
    """Limit fraction of degree-d vertices within a fixed level."""
    d = np.asarray(d, dtype=np.float64)
    return 1.0 / (d * (d + 1.0))


def height_constant():
    """(c, 1/(2c)) with c the unique root of c e^(c+1) = 1 in (0, 1)."""
    import math
    lo, hi = 0.01, 1.0
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid + 1.0) > 1.0:
            hi = mid
        else:
            lo = mid
    c = 0.5 * (lo + hi)
    return c, 1.0 / (2.0 * c)


def targets_table(d_max: int) -> dict:
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    d = np.arange(1, d_max + 1)
    deg = degree_law(d)
    lev = level_law(d)
    c, ratio = height_constant()
    return {
        "d": d,
        "degree_law": deg,
        "degree_law_cum": np.cumsum(deg),
        "level_law": lev,
        "level_law_cum": np.cumsum(lev),
        "height_c": c,
        "height_ratio": ratio,
    }


# -- single steps (python reference; the generators below use the kernels) --


def sample_degree_proportional(tree: GrowthTree, u: float) -> int:
    """Vertex drawn with probability deg/total_degree via the endpoint pool."""
    if not tree.track_endpoints:
        raise ValueError("tree must track edge endpoints")
    j = int(u * tree.endp_used)
    if j >= tree.endp_used:
        j = tree.endp_used - 1
    return int(tree.endpoints[j])


def ba_step(tree: GrowthTree, rng: Xoshiro256StarStar) -> int:
    """One attachment step; returns the chosen target."""
    target = sample_degree_proportional(tree, rng.random())
    tree.add_leaf(target, tree.n)
    return target


def rpat_step(tree: GrowthTree, z: int, rng: Xoshiro256StarStar) -> int:
    """Burst step: one target by pre-burst degrees, then z leaves.

    z = 0 is a flagged no-op: returns -1 without consuming a draw.
    """
    if z < 0:
        raise ValueError("burst size must be >= 0")
    if z == 0:
        return -1
    target = sample_degree_proportional(tree, rng.random())
    birth = tree.n
    for _ in range(z):
        tree.add_leaf(target, birth)
    return target


# -- bulk generators ---------------------------------------------------------


def _seed_tree(seed_kind: str) -> GrowthTree:
    if seed_kind == "loop":
        return GrowthTree.single_vertex(track_endpoints=True)
    if seed_kind == "edge":
        return GrowthTree.bare_edge(track_endpoints=True)
    raise ValueError(f"unknown seed kind {seed_kind!r}")


def ba_generate(n_vertices: int, seed: int, seed_kind: str = "loop") -> GrowthTree:
    """Attachment tree grown to n_vertices, deterministic in seed."""
    tree = _seed_tree(seed_kind)
    if n_vertices < tree.n:
        raise ValueError("target size smaller than the seed")
    tree._grow_vertex_arrays(n_vertices)
    tree._grow_pool(8 * n_vertices + 16)
    tree._grow_endpoints(2 * n_vertices + 4)
    rs = K.rng_state_from_seed(seed)
    pending = -1  # target drawn before a capacity stop, not yet attached
    while True:
        tstate = np.array([tree.n, tree.pool_used, tree.endp_used, pending],
                          dtype=np.int64)
        status = K.ba_segment(tree.parent, tree.depth, tree.birth, tree.deg,
                              tree.child_off, tree.child_cap, tree.child_cnt,
                              tree.child_pool, tree.endpoints, tstate, rs,
                              n_vertices)
        tree.n = int(tstate[0])
        tree.pool_used = int(tstate[1])
        tree.endp_used = int(tstate[2])
        pending = int(tstate[3])
        if status == K.OK:
            return tree
        if status == K.NEED_VERTEX:
            tree._grow_vertex_arrays(2 * len(tree.parent))
        elif status == K.NEED_POOL:
            tree._grow_pool(2 * len(tree.child_pool))
        elif status == K.NEED_ENDPOINTS:
            tree._grow_endpoints(2 * len(tree.endpoints))
        else:
            raise RuntimeError(f"unexpected generator status {status}")


@dataclass
class RpatResult:
    tree: GrowthTree
    growth_log: GrowthLog
    steps: int
    max_degree: int

    @property
    def size(self) -> int:
        return self.tree.n


def rpat_run(law, steps: int, seed: int, seed_kind: str = "loop") -> RpatResult:
    """Burst-attachment run for `steps` draws of the growth law."""
    law.validate_horizon(steps)
    tree = _seed_tree(seed_kind)
    expect = law.expected_vertices(steps, seed_size=tree.n)
    cap = max(int(3 * expect) + 64, 256)
    tree._grow_vertex_arrays(cap)
    tree._grow_pool(8 * cap + 16)
    tree._grow_endpoints(2 * cap + 4)
    rs = K.rng_state_from_seed(seed)
    rstate = np.array([0, tree.deg[:tree.n].max()], dtype=np.int64)
    kind, gamma, scale, shift, p_tab, w_tab = law.kernel_params()
    gcap = 1 << 12
    g_tau = np.zeros(gcap, dtype=np.int64)
    g_attach = np.zeros(gcap, dtype=np.int64)
    g_z = np.zeros(gcap, dtype=np.int64)
    g_cursor = np.zeros(1, dtype=np.int64)
    while True:
        tstate = np.array([tree.n, tree.pool_used, tree.endp_used, -1],
                          dtype=np.int64)
        status = K.rpat_segment(tree.parent, tree.depth, tree.birth, tree.deg,
                                tree.child_off, tree.child_cap, tree.child_cnt,
                                tree.child_pool, tree.endpoints, tstate, rs,
                                rstate, kind, gamma, scale, shift, p_tab,
                                w_tab, steps, g_tau, g_attach, g_z, g_cursor)
        tree.n = int(tstate[0])
        tree.pool_used = int(tstate[1])
        tree.endp_used = int(tstate[2])
        if status == K.OK:
            break
        if status == K.NEED_VERTEX:
            tree._grow_vertex_arrays(2 * len(tree.parent))
        elif status == K.NEED_POOL:
            tree._grow_pool(2 * len(tree.child_pool))
        elif status == K.NEED_ENDPOINTS:
            tree._grow_endpoints(2 * len(tree.endpoints))
        elif status == K.GROWTH_LOG_FULL:
            g_tau = np.concatenate([g_tau, np.zeros(len(g_tau), dtype=np.int64)])
            g_attach = np.concatenate([g_attach,
                                       np.zeros(len(g_attach), dtype=np.int64)])
            g_z = np.concatenate([g_z, np.zeros(len(g_z), dtype=np.int64)])
        else:
            raise RuntimeError(f"unexpected generator status {status}")
    k = int(g_cursor[0])
    glog = GrowthLog(g_tau[:k].copy(), g_attach[:k].copy(), g_z[:k].copy())
    return RpatResult(tree=tree, growth_log=glog, steps=steps,
                      max_degree=int(rstate[1]))


def uniform_random_tree(n: int, seed: int) -> GrowthTree:
    """Recursive tree: each new vertex picks a uniform existing parent.

    Test fixture; not one of the attachment models.
    """
    rng = Xoshiro256StarStar(seed)
    t = GrowthTree.single_vertex()
    for v in range(1, n):
        t.add_leaf(rng.randbelow(v), v)
    return t


# -- histograms ---------------------------------------------------------------


def degree_fractions(tree: GrowthTree, d_max: int) -> np.ndarray:
    """fractions[d-1] = fraction of vertices with degree d, d = 1..d_max."""
    counts = tree.degree_counts()
    out = np.zeros(d_max)
    top = min(d_max + 1, len(counts))
    out[:top - 1] = counts[1:top] / tree.n
    return out


def level_degree_fractions(tree: GrowthTree, level: int, d_max: int) -> np.ndarray:
    """Degree fractions among the vertices at the given depth."""
    mask = tree.depth[:tree.n] == level
    total = int(mask.sum())
    out = np.zeros(d_max)
    if total == 0:
        return out
    counts = np.bincount(tree.deg[:tree.n][mask], minlength=d_max + 1)
    out[:] = counts[1:d_max + 1] / total
    return out


# -- mean-field recursions (diagnostics, not asserted limits) ------------------


def ba_mean_field_degree1(n: int) -> float:
    """E N_n(1)/n from the loop seed: the degree-1 count satisfies
    E N_{t+1} = E N_t (1 - 1/(2t)) + 1."""
    en = 0.0
    t = 1
    while t < n:
        en = en * (1.0 - 1.0 / (2.0 * t)) + 1.0
        t += 1
    return en / n


def rpat_degree1_recursion(law, n: int, seed_size: int = 1,
                           checkpoints=None) -> dict:
    """Integrate the burst-model mean-field recursion for the degree-1
    count, with M_n = seed + sum p_k standing in for the vertex count:

        E N_n = p_n (1 + E N_{n-1}(1 - 1/(2 M_{n-1}))) + (1-p_n) E N_{n-1}

    Only defined for unit bursts.  Returns both E N and M at the
    checkpoints plus their ratio; the ratio's relation to E(N/m) is left
    open, so callers may report but never assert it.
    """
    if law.max_weight_through(n) != 1:
        raise ValueError("recursion is defined for unit bursts")
    if checkpoints is None:
        checkpoints = [n]
    marks = sorted(set(int(c) for c in checkpoints))
    en = 0.0
    m = float(seed_size)
    out = {"n": [], "EN1": [], "M": [], "ratio": []}
    k = 1
    for step in range(1, n + 1):
        p = law.prob(step)
        en = p * (1.0 + en * (1.0 - 1.0 / (2.0 * m))) + (1.0 - p) * en
        m += p
        if marks and step == marks[0]:
            marks.pop(0)
            out["n"].append(step)
            out["EN1"].append(en)
            out["M"].append(m)
            out["ratio"].append(en / m)
    return out
