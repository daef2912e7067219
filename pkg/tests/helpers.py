"""Shared builders and independent oracles for the test suite."""

import numpy as np

from gmrf_fmp import GaussianInfoModel, normalize


def unit_model(n, edges, h=None):
    """Model with an exactly unit diagonal."""
    if h is None:
        h = np.ones(n)
    return GaussianInfoModel(n=n, diag=np.ones(n), edges=tuple(edges), h=np.asarray(h, dtype=float))


def model_from_dense(j, h):
    j = np.asarray(j, dtype=float)
    n = j.shape[0]
    edges = []
    for i in range(n):
        for k in range(i + 1, n):
            if j[i, k] != 0.0:
                edges.append((i, k, float(j[i, k])))
    return GaussianInfoModel(n=n, diag=np.diag(j).copy(), edges=tuple(edges), h=np.asarray(h, dtype=float))


def numpy_solution(model):
    """Independent dense oracle: (means, variances, covariance) via numpy."""
    j = model.to_dense()
    cov = np.linalg.inv(j)
    return cov @ model.h, np.diag(cov).copy(), cov


def grid_edge_list(l):
    """Undirected 4-neighbor edges of an l x l grid, row-major node ids."""
    edges = []
    for r in range(l):
        for c in range(l):
            i = r * l + c
            if c + 1 < l:
                edges.append((i, i + 1))
            if r + 1 < l:
                edges.append((i, i + l))
    return edges


def pd_model_from_structure(rng, n, pairs, scale=1.0, delta=0.2, h_scale=1.0):
    """Random PD normalized model on the given edge structure.

    Weights are uniform in [-scale, scale]; the diagonal is lifted to
    |lambda_min| + delta before normalizing, which keeps the result PD for
    any draw.
    """
    edges = [(i, j, float(rng.uniform(-scale, scale))) for i, j in pairs]
    j0 = np.zeros((n, n))
    for i, j, w in edges:
        j0[i, j] = w
        j0[j, i] = w
    lam = abs(min(np.linalg.eigvalsh(j0).min(), 0.0)) + delta
    model = GaussianInfoModel(
        n=n,
        diag=np.full(n, lam),
        edges=tuple(edges),
        h=rng.uniform(-h_scale, h_scale, size=n),
    )
    normalized, _ = normalize(model)
    return normalized


def random_pairs(rng, n, p):
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                pairs.append((i, j))
    return pairs


def random_forest_pairs(rng, n, break_prob=0.2):
    """Random forest edges: each node links to an earlier node unless cut."""
    pairs = []
    for v in range(1, n):
        if rng.random() < break_prob:
            continue
        pairs.append((int(rng.integers(0, v)), v))
    return pairs


def attractive_copy(model):
    """Same structure and |weights|, all partial correlations nonnegative."""
    edges = tuple((i, j, -abs(w)) for i, j, w in model.edges)
    return GaussianInfoModel(n=model.n, diag=model.diag, edges=edges, h=model.h)


def cycle_model(n, r, signs=None, h=None):
    """Unit-diagonal cycle with J_{i,i+1} = r (or signed per `signs`)."""
    edges = []
    for i in range(n):
        j = (i + 1) % n
        a, b = min(i, j), max(i, j)
        w = r if signs is None else r * signs[i]
        edges.append((a, b, float(w)))
    return unit_model(n, edges, h)
