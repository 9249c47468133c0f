"""Seeded synthetic temporal networks used by tests, benchmarks and the CLI."""

import numpy as np

from .ingest import from_events


def _sample_slice(rng, prob, t, directed):
    n = prob.shape[0]
    if directed:
        i, j = np.nonzero(~np.eye(n, dtype=bool))
    else:
        i, j = np.triu_indices(n, k=1)
    hit = rng.random(len(i)) < prob[i, j]
    return [(a, b, 1.0, float(t)) for a, b in zip(i[hit].tolist(), j[hit].tolist())]


def periodic_communities(n=60, T=8, period=2, p_in=0.3, p_out=0.02, seed=0):
    """Two communities whose membership alternates every ``period`` slices.

    Nodes fall into four equal quarters ``q0..q3``. In even phases the
    communities are ``q0+q1`` and ``q2+q3``; in odd phases ``q0+q2`` and
    ``q1+q3``. Slice ``t`` draws each pair independently with ``p_in`` inside a
    community and ``p_out`` across; its events carry timestamp ``t``.
    """
    rng = np.random.default_rng(seed)
    quarter = np.arange(n) * 4 // n
    layouts = (quarter // 2, quarter % 2)
    events = []
    for t in range(T):
        comm = layouts[(t // period) % 2]
        same = comm[:, None] == comm[None, :]
        events += _sample_slice(rng, np.where(same, p_in, p_out), t, False)
    return from_events(events, labels=[f"v{i}" for i in range(n)])


def erdos_renyi_temporal(n=100, T=8, p=0.05, seed=0, directed=False):
    """Independent G(n, p) snapshots with timestamps ``0..T-1``."""
    rng = np.random.default_rng(seed)
    prob = np.full((n, n), p)
    events = []
    for t in range(T):
        events += _sample_slice(rng, prob, t, directed)
    return from_events(events, labels=[f"v{i}" for i in range(n)], directed=directed)


def random_adjacency(n, T, density=0.1, seed=0):
    """Symmetric binary ``n x n x T`` tensor for timing runs."""
    rng = np.random.default_rng(seed)
    x = (rng.random((n, n, T)) < density).astype(np.float64)
    return np.maximum(x, np.transpose(x, (1, 0, 2)))
