"""Rooted growing trees with a root self-loop, stored as flat arrays.

Vertex ids are dense, 0..n-1 in creation order, root is 0.  The root
carries a permanent self-loop that adds 2 to its degree and counts as one
edge, so num_edges == n and total_degree == 2n at all times.  The loop
never enters distances, heights or diameters.

Storage is structure-of-arrays (int64) so the hot loops in _kernels.py can
operate on the same buffers without conversion.  Children of a vertex live
in one shared pool, contiguous per vertex, with capacity doubling.  Child
order is creation order, which fixes the meaning of a uniform neighbor
draw: for the root, slots 0 and 1 are the loop (stay put), slot 2+j is
child j; for any other vertex slot 0 is the parent and slot 1+j is child j.
"""

from __future__ import annotations

import numpy as np

SNAPSHOT_HEADER = "#tbrw-tree v1"


class GrowthTree:
    def __init__(self, vertex_capacity: int = 1024, track_endpoints: bool = False):
        cap = max(int(vertex_capacity), 2)
        self.root_loop = True
        self.parent = np.full(cap, -1, dtype=np.int64)
        self.depth = np.zeros(cap, dtype=np.int64)
        self.birth = np.zeros(cap, dtype=np.int64)
        self.deg = np.zeros(cap, dtype=np.int64)
        self.child_off = np.zeros(cap, dtype=np.int64)
        self.child_cap = np.zeros(cap, dtype=np.int64)
        self.child_cnt = np.zeros(cap, dtype=np.int64)
        self.child_pool = np.zeros(4 * cap, dtype=np.int64)
        self.pool_used = 0
        self.track_endpoints = track_endpoints
        self.endpoints = np.zeros(4 * cap, dtype=np.int64) if track_endpoints else None
        self.endp_used = 0
        self.n = 0

    # -- seeds ---------------------------------------------------------

    @classmethod
    def single_vertex(cls, track_endpoints: bool = False) -> "GrowthTree":
        """Root alone; its loop gives it degree 2."""
        t = cls(track_endpoints=track_endpoints)
        t.parent[0] = -1
        t.deg[0] = 2
        t.n = 1
        if track_endpoints:
            t.endpoints[0] = 0
            t.endpoints[1] = 0
            t.endp_used = 2
        return t

    @classmethod
    def single_edge(cls, track_endpoints: bool = False) -> "GrowthTree":
        """Root plus one child, both born at time 0."""
        t = cls.single_vertex(track_endpoints=track_endpoints)
        t.add_leaf(0, 0)
        return t

    @classmethod
    def bare_edge(cls, track_endpoints: bool = False) -> "GrowthTree":
        """Two vertices joined by one edge and no root loop.

        Only the attachment generators accept this seed; the walk engine
        and the chain analysis require the loop.
        """
        t = cls(track_endpoints=track_endpoints)
        t.root_loop = False
        t.parent[0] = -1
        t.deg[0] = 0
        t.n = 1
        t.add_leaf(0, 0)
        return t

    # -- invariant accessors -------------------------------------------

    @property
    def size(self) -> int:
        return self.n

    @property
    def root(self) -> int:
        return 0

    @property
    def num_edges(self) -> int:
        """Tree edges plus the root loop (when present)."""
        return self.n if self.root_loop else self.n - 1

    @property
    def total_degree(self) -> int:
        return 2 * self.num_edges

    def degree(self, v: int) -> int:
        return int(self.deg[v])

    def children(self, v: int) -> np.ndarray:
        off = self.child_off[v]
        return self.child_pool[off:off + self.child_cnt[v]].copy()

    # -- growth --------------------------------------------------------

    def _grow_vertex_arrays(self, need: int) -> None:
        cap = len(self.parent)
        while cap < need:
            cap *= 2
        for name in ("parent", "depth", "birth", "deg", "child_off",
                     "child_cap", "child_cnt"):
            old = getattr(self, name)
            new = np.full(cap, -1, dtype=np.int64) if name == "parent" \
                else np.zeros(cap, dtype=np.int64)
            new[:self.n] = old[:self.n]
            setattr(self, name, new)

    def _grow_pool(self, need: int) -> None:
        cap = len(self.child_pool)
        while cap < need:
            cap *= 2
        new = np.zeros(cap, dtype=np.int64)
        new[:self.pool_used] = self.child_pool[:self.pool_used]
        self.child_pool = new

    def _grow_endpoints(self, need: int) -> None:
        cap = len(self.endpoints)
        while cap < need:
            cap *= 2
        new = np.zeros(cap, dtype=np.int64)
        new[:self.endp_used] = self.endpoints[:self.endp_used]
        self.endpoints = new

    def _append_child(self, v: int, c: int) -> None:
        # Capacity policy must match _kernels.add_leaf exactly.
        if self.child_cnt[v] == self.child_cap[v]:
            need = 2 if self.child_cap[v] == 0 else 2 * int(self.child_cap[v])
            if self.pool_used + need > len(self.child_pool):
                self._grow_pool(self.pool_used + need)
            newoff = self.pool_used
            cnt = int(self.child_cnt[v])
            if cnt > 0:
                off = int(self.child_off[v])
                self.child_pool[newoff:newoff + cnt] = \
                    self.child_pool[off:off + cnt]
            self.child_off[v] = newoff
            self.child_cap[v] = need
            self.pool_used += need
        self.child_pool[self.child_off[v] + self.child_cnt[v]] = c
        self.child_cnt[v] += 1

    def add_leaf(self, attach: int, birth_time: int) -> int:
        if not 0 <= attach < self.n:
            raise ValueError(f"attach vertex {attach} not in tree of size {self.n}")
        if self.n + 1 > len(self.parent):
            self._grow_vertex_arrays(self.n + 1)
        v = self.n
        self.parent[v] = attach
        self.depth[v] = self.depth[attach] + 1
        self.birth[v] = birth_time
        self.deg[v] = 1
        self.child_off[v] = 0
        self.child_cap[v] = 0
        self.child_cnt[v] = 0
        self._append_child(attach, v)
        self.deg[attach] += 1
        self.n += 1
        if self.track_endpoints:
            if self.endp_used + 2 > len(self.endpoints):
                self._grow_endpoints(self.endp_used + 2)
            self.endpoints[self.endp_used] = attach
            self.endpoints[self.endp_used + 1] = v
            self.endp_used += 2
        return v

    # -- walk support ----------------------------------------------------

    def uniform_neighbor(self, v: int, u: float) -> int:
        """Neighbor of v selected by uniform u in [0,1).

        The root's loop occupies two slots, so the walker stays with
        probability 2/deg(root).
        """
        d = int(self.deg[v])
        j = int(u * d)
        if v == 0:
            if self.root_loop:
                if j < 2:
                    return 0
                return int(self.child_pool[self.child_off[v] + (j - 2)])
            return int(self.child_pool[self.child_off[v] + j])
        if j == 0:
            return int(self.parent[v])
        return int(self.child_pool[self.child_off[v] + (j - 1)])

    # -- metrics ---------------------------------------------------------

    def height(self) -> int:
        return int(self.depth[:self.n].max())

    def max_degree(self) -> int:
        return int(self.deg[:self.n].max())

    def depths_from(self, source: int) -> np.ndarray:
        """Graph distances from source over the tree edges (loop ignored)."""
        n = self.n
        dist = np.full(n, -1, dtype=np.int64)
        dist[source] = 0
        queue = np.empty(n, dtype=np.int64)
        queue[0] = source
        head, tail = 0, 1
        while head < tail:
            v = queue[head]
            head += 1
            p = self.parent[v]
            if p >= 0 and dist[p] < 0:
                dist[p] = dist[v] + 1
                queue[tail] = p
                tail += 1
            off = self.child_off[v]
            for i in range(self.child_cnt[v]):
                c = self.child_pool[off + i]
                if dist[c] < 0:
                    dist[c] = dist[v] + 1
                    queue[tail] = c
                    tail += 1
        return dist

    def diameter(self) -> int:
        """Double sweep; exact on trees."""
        if self.n == 1:
            return 0
        d0 = self.depths_from(0)
        u = int(d0.argmax())
        return int(self.depths_from(u).max())

    def subtree_order(self, v: int) -> int:
        """Number of vertices in the subtree of descendants of v, v included."""
        count = 0
        stack = [v]
        while stack:
            w = stack.pop()
            count += 1
            off = self.child_off[w]
            for i in range(self.child_cnt[w]):
                stack.append(int(self.child_pool[off + i]))
        return count

    def degree_counts(self) -> np.ndarray:
        """counts[d] = number of vertices with degree d (loop included for root)."""
        return np.bincount(self.deg[:self.n])

    def level_counts(self) -> np.ndarray:
        """counts[l] = number of vertices at depth l."""
        return np.bincount(self.depth[:self.n])

    # -- snapshots -------------------------------------------------------

    def write_snapshot(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{SNAPSHOT_HEADER} root=0 loop={1 if self.root_loop else 0}\n")
            for v in range(self.n):
                fh.write(f"{v} {int(self.parent[v])} {int(self.birth[v])}\n")

    @classmethod
    def read_snapshot(cls, path, track_endpoints: bool = False) -> "GrowthTree":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if not header.startswith(SNAPSHOT_HEADER):
                raise ValueError(f"not a tree snapshot: {header!r}")
            fields = dict(tok.split("=", 1) for tok in header.split()[2:])
            if fields.get("loop") not in ("0", "1"):
                raise ValueError("snapshot must declare loop=0 or loop=1")
            has_loop = fields["loop"] == "1"
            root = int(fields.get("root", "0"))
            if root != 0:
                raise ValueError("root must be vertex 0")
            rows = []
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                a, b, c = line.split()
                rows.append((int(a), int(b), int(c)))
        rows.sort()
        if [r[0] for r in rows] != list(range(len(rows))):
            raise ValueError("vertex ids must be dense 0..n-1")
        if rows[0][1] != -1:
            raise ValueError("root must have parent -1")
        t = cls(vertex_capacity=max(len(rows), 2), track_endpoints=track_endpoints)
        t.root_loop = has_loop
        t.parent[0] = -1
        t.deg[0] = 2 if has_loop else 0
        t.n = 1
        t.birth[0] = rows[0][2]
        if track_endpoints and has_loop:
            t.endpoints[0] = 0
            t.endpoints[1] = 0
            t.endp_used = 2
        for v, p, b in rows[1:]:
            if not 0 <= p < v:
                raise ValueError(f"vertex {v} has parent {p}, not an earlier vertex")
            t.add_leaf(p, b)
        return t

    def __repr__(self) -> str:
        return f"GrowthTree(n={self.n}, height={self.height() if self.n else 0})"
