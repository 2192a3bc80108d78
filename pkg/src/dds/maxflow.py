"""Dinic max-flow on real-valued capacities.

Small, dependency-free kernel sized for latency graphs of a few hundred arcs.
Residual capacities at or below ``tol`` are treated as saturated, which keeps
float round-off from leaking phantom augmenting paths.
"""

from collections import deque


class FlowNetwork:
    def __init__(self, n_nodes):
        self.n = n_nodes
        self.adj = [[] for _ in range(n_nodes)]
        self.head = []  # arc k -> head node; arc k ^ 1 is its reverse
        self.cap = []

    def add_arc(self, u, v, capacity):
        """Add arc u->v and its zero-capacity reverse; returns the forward arc index."""
        k = len(self.head)
        self.head.extend((v, u))
        self.cap.extend((float(capacity), 0.0))
        self.adj[u].append(k)
        self.adj[v].append(k + 1)
        return k

    def _levels(self, res, s, t, tol):
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        head, adj = self.head, self.adj
        while q:
            u = q.popleft()
            for k in adj[u]:
                v = head[k]
                if level[v] < 0 and res[k] > tol:
                    level[v] = level[u] + 1
                    q.append(v)
        return level

    def max_flow(self, s, t, tol=0.0):
        """Run Dinic from ``s`` to ``t``; returns (flow value, residual capacities)."""
        res = list(self.cap)
        flow = self._saturate_two_hop(res, s, t)
        while True:
            level = self._levels(res, s, t, tol)
            if level[t] < 0:
                return flow, res
            it = [0] * self.n
            while True:
                pushed = self._augment(res, level, it, s, t, tol)
                if pushed <= tol:
                    break
                flow += pushed

    def _saturate_two_hop(self, res, s, t):
        # Greedy warm start: push along every s->v->t path before Dinic runs.
        head, adj = self.head, self.adj
        to_t = {}
        for k in adj[t]:
            if k & 1:  # reverse of an arc v->t
                to_t[head[k]] = k ^ 1
        flow = 0.0
        for k in adj[s]:
            if k & 1:
                continue
            j = to_t.get(head[k])
            if j is None:
                continue
            d = min(res[k], res[j])
            if d > 0:
                res[k] -= d
                res[k ^ 1] += d
                res[j] -= d
                res[j ^ 1] += d
                flow += d
        return flow

    def _augment(self, res, level, it, s, t, tol):
        # Iterative DFS over the level graph; finds one blocking path.
        head, adj = self.head, self.adj
        path = []
        u = s
        while True:
            if u == t:
                bottleneck = min(res[k] for k in path)
                for k in path:
                    res[k] -= bottleneck
                    res[k ^ 1] += bottleneck
                return bottleneck
            arcs = adj[u]
            advanced = False
            while it[u] < len(arcs):
                k = arcs[it[u]]
                v = head[k]
                if res[k] > tol and level[v] == level[u] + 1:
                    path.append(k)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if u == s:
                    return 0.0
                level[u] = -1  # dead end
                k = path.pop()
                u = head[k ^ 1]
                it[u] += 1

    def reachable(self, res, s, tol=0.0):
        """Nodes reachable from ``s`` in the residual network."""
        seen = [False] * self.n
        seen[s] = True
        stack = [s]
        head, adj = self.head, self.adj
        while stack:
            u = stack.pop()
            for k in adj[u]:
                v = head[k]
                if not seen[v] and res[k] > tol:
                    seen[v] = True
                    stack.append(v)
        return seen
