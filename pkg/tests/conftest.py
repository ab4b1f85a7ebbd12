import numpy as np
import pytest


def orthonormal(rng, n, r):
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return q[:, :r]


def planted(rng, m, n, xs):
    """Matrix following the unit noise model with planted singular values `xs`."""
    xs = np.asarray(xs, dtype=float)
    u = orthonormal(rng, m, len(xs))
    v = orthonormal(rng, n, len(xs))
    noise = rng.standard_normal((m, n)) / np.sqrt(max(m, n))
    return (u * xs) @ v.T + noise, u, v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_view_graphs(rng, max_views=5, max_factors=6, max_edges=8):
    """Random connected layout with random view-specific factor match graphs.

    Each view groups a random subset of the factors of its matrices into
    disjoint hyperedges.
    """
    from lscmf.datamodel import EdgeKey
    from lscmf.fmgraph import FactorMatchGraph, FactorNode

    n_views = int(rng.integers(2, max_views + 1))
    views = [str(v) for v in range(n_views)]
    pairs = [(views[k], views[int(rng.integers(0, k))]) for k in range(1, n_views)]
    candidates = [(a, b) for i, a in enumerate(views) for b in views[i + 1:]]
    extra = int(rng.integers(0, max_edges - len(pairs) + 1))
    for k in rng.permutation(len(candidates))[:extra]:
        pairs.append(candidates[k])
    edges = sorted({EdgeKey(min(a, b), max(a, b)) for a, b in pairs})
    ranks = {e: int(rng.integers(1, max_factors + 1)) for e in edges}
    graphs = []
    for view in views:
        nodes = [FactorNode(e, k, view) for e in edges if e.involves(view) for k in range(ranks[e])]
        nodes = [n for n in nodes if rng.random() < 0.8]
        n_groups = max(1, len(nodes) // 2)
        labels = rng.integers(0, n_groups, len(nodes))
        groups = [[n for n, g in zip(nodes, labels) if g == lab] for lab in range(n_groups)]
        graphs.append(FactorMatchGraph([g for g in groups if g], owner=view))
    return edges, graphs


def union_find_partition(graphs):
    """Connected components of nodes linked by any hyperedge of any graph."""
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in graphs:
        for he in g.hyperedges:
            keys = [n.key for n in he]
            for k in keys:
                parent.setdefault(k, k)
            for k in keys[1:]:
                parent[find(k)] = find(keys[0])
    comps = {}
    for k in parent:
        comps.setdefault(find(k), set()).add(k)
    return frozenset(frozenset(c) for c in comps.values())


def star_fit(seed, p, partners, xs):
    """Fit a star layout around view "0" with one common factor of strength `xs[k]` per block."""
    from lscmf.datamodel import EdgeKey, ObservedMatrix, ViewLayout
    from lscmf.pipeline import fit

    rng = np.random.default_rng(seed)
    layout = ViewLayout({"0": p, **{str(k + 1): q for k, q in enumerate(partners)}},
                        tuple(EdgeKey("0", str(k + 1)) for k in range(len(partners))))
    u = orthonormal(rng, p, 1)
    mats = []
    for k, e in enumerate(layout.edges):
        q = partners[k]
        v = orthonormal(rng, q, 1)
        data = xs[k] * u @ v.T + rng.standard_normal((p, q)) / np.sqrt(max(p, q))
        mats.append(ObservedMatrix(e, data))
    return layout, fit(layout, mats)
