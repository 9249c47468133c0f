"""Temporal link-prediction protocol.

Embeddings are learned on the earliest 75% of events. Node pairs linked in
the remaining 25% are positives; an equal number of pairs never linked at
any time are negatives. Each edge is featurized with a node2vec operator, a
logistic classifier is trained on a stratified half of the labelled pairs and
Micro-F1 is scored on the other half. Everything is replicated over seeds.
"""

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .embed import OPERATORS, edge_feature, embeddings
from .errors import DegenerateLabels, EmptySplit, Exhausted, LengthMismatch
from .factorize import fit
from .ingest import bin_timestamps

log = logging.getLogger(__name__)

LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass(frozen=True, eq=False)
class SplitResult:
    train_graph: object
    test_positives: np.ndarray
    split_fraction: float


def temporal_split(g, fraction=0.75):
    """Split events by time: the first ``ceil(fraction * m)`` train the embeddings.

    Test positives are the distinct node pairs of the remaining events, in
    order of first appearance. Self-loops are not link-prediction targets and
    are dropped from the positives.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    m = g.n_events
    n_train = math.ceil(fraction * m)
    if n_train == 0 or n_train >= m:
        raise EmptySplit(f"{m} events cannot be split at fraction {fraction}")
    train = g.take(np.arange(n_train))
    test = g.take(np.arange(n_train, m))
    keys = test.pair_keys()
    _, first = np.unique(keys, return_index=True)
    first = np.sort(first)
    pairs = np.stack([keys[first] // g.n_nodes, keys[first] % g.n_nodes], axis=1)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if len(pairs) == 0:
        raise EmptySplit("test window holds no node pairs")
    return SplitResult(train, pairs, fraction)


def sample_negatives(g, count, seed):
    """Uniformly draw ``count`` distinct pairs ``i != j`` never linked in ``g``.

    Pairs are unordered (stored ``i < j``) when ``g`` is undirected.
    """
    n = g.n_nodes
    existing = np.unique(g.pair_keys())
    existing = existing[existing // n != existing % n]
    total = n * (n - 1) if g.directed else n * (n - 1) // 2
    available = total - len(existing)
    if count > available:
        raise Exhausted(f"asked for {count} negatives but only {available} absent pairs exist")
    rng = np.random.default_rng(seed)
    taken = set(existing.tolist())
    chosen = []
    while len(chosen) < count:
        batch = max(64, 2 * (count - len(chosen)))
        i = rng.integers(0, n, size=batch)
        j = rng.integers(0, n, size=batch)
        if not g.directed:
            i, j = np.minimum(i, j), np.maximum(i, j)
        for a, b in zip(i.tolist(), j.tolist()):
            if a == b:
                continue
            key = a * n + b
            if key in taken:
                continue
            taken.add(key)
            chosen.append((a, b))
            if len(chosen) == count:
                break
    return np.array(chosen, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True, eq=False)
class LabeledEdgeSet:
    pairs: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    operator: str
    seed: int

    def __post_init__(self):
        if np.sum(self.labels == 1) != np.sum(self.labels == 0):
            raise ValueError("labelled edge set must be balanced")


def labeled_edges(emb, positives, negatives, operator, seed):
    pairs = np.concatenate([positives, negatives])
    labels = np.concatenate([np.ones(len(positives), int), np.zeros(len(negatives), int)])
    feats = edge_feature(emb[pairs[:, 0]], emb[pairs[:, 1]], operator)
    return LabeledEdgeSet(pairs, feats, labels, operator, seed)


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    loss: float
    grad_norm: float
    n_iter: int

    @property
    def coef(self):
        """Weights followed by the bias, ``r + 1`` values."""
        return np.append(self.weights, self.bias)

    def decision(self, X):
        return ((np.asarray(X) - self.mean) / self.scale) @ self.weights + self.bias

    def predict_proba(self, X):
        return expit(self.decision(X))

    def predict(self, X):
        return (self.decision(X) >= 0).astype(int)


def _logistic_loss(params, Z, y, l2):
    w, b = params[:-1], params[-1]
    s = Z @ w + b
    # log(1 + exp(-s)) for y=1 and log(1 + exp(s)) for y=0, overflow-safe
    sign = np.where(y == 1, -s, s)
    loss = np.mean(np.logaddexp(0.0, sign)) + 0.5 * l2 * (w @ w)
    resid = expit(s) - y
    grad = np.append(Z.T @ resid / len(y) + l2 * w, resid.mean())
    return loss, grad


def train_logistic(features, labels, l2=1e-4, max_iter=10_000, gtol=1e-6):
    """L2-regularized logistic regression on standardized features.

    Minimizes ``mean log-loss + l2/2 ||w||^2`` (bias unpenalized) with
    L-BFGS from the zero vector, stopping at gradient norm ``gtol``.
    Standardization statistics come from ``features`` only.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if len(X) != len(y):
        raise LengthMismatch("features and labels differ in length")
    if len(y) < 2 or np.all(y == y[0]):
        raise DegenerateLabels("both classes must be present")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    res = minimize(
        _logistic_loss,
        np.zeros(Z.shape[1] + 1),
        args=(Z, y, l2),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": gtol, "ftol": 0.0, "maxcor": 20},
    )
    _, grad = _logistic_loss(res.x, Z, y, l2)
    return LogisticModel(
        res.x[:-1].copy(),
        float(res.x[-1]),
        mean,
        scale,
        float(res.fun),
        float(np.linalg.norm(grad)),
        int(res.nit),
    )


def micro_f1(predictions, truth):
    """Micro-averaged F1 over both classes, from pooled TP/FP/FN counts."""
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions for {t.shape} labels")
    if p.size == 0:
        raise LengthMismatch("no labels")
    tp = fp = fn = 0
    for c in (0, 1):
        tp += int(np.sum((p == c) & (t == c)))
        fp += int(np.sum((p == c) & (t != c)))
        fn += int(np.sum((p != c) & (t == c)))
    return 2 * tp / (2 * tp + fp + fn)


def stratified_halves(labels, seed):
    """Random 50/50 split of each class; returns (train index, test index)."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in (0, 1):
        idx = rng.permutation(np.flatnonzero(labels == c))
        half = len(idx) // 2
        train.append(idx[:half])
        test.append(idx[half:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass(frozen=True)
class EvalRecord:
    seed: int
    operator: str
    micro_f1: float
    seconds: float


@dataclass(frozen=True, eq=False)
class EvalReport:
    method: str
    operators: tuple
    seeds: tuple
    mean: dict
    std: dict
    records: tuple
    seconds: float
    config: dict = field(default_factory=dict)

    @property
    def best_operator(self):
        return max(self.operators, key=lambda op: (self.mean[op], -self.operators.index(op)))

    @property
    def best_mean(self):
        return self.mean[self.best_operator]

    def summary(self):
        """One record per operator: name, mean, std, n_seeds, wall-clock seconds."""
        out = []
        for op in self.operators:
            secs = sum(r.seconds for r in self.records if r.operator == op)
            out.append(
                {
                    "operator": op,
                    "mean": self.mean[op],
                    "std": self.std[op],
                    "n_seeds": len(self.seeds),
                    "seconds": secs,
                }
            )
        return out

    def to_jsonl(self, per_seed=False):
        if per_seed:
            rows = [r.__dict__ for r in self.records]
        else:
            rows = self.summary()
        return "".join(json.dumps(row, sort_keys=True) + "\n" for row in rows)

    def table(self):
        lines = [
            f"method: {self.method}   seeds: {', '.join(map(str, self.seeds))}",
            f"{'operator':<12} {'mean':>8} {'std':>8}",
        ]
        for op in self.operators:
            mark = "  *" if op == self.best_operator else ""
            lines.append(f"{op:<12} {self.mean[op]:8.4f} {self.std[op]:8.4f}{mark}")
        lines.append(f"best operator: {self.best_operator}  ({self.seconds:.2f} s)")
        return "\n".join(lines) + "\n"


def _note(exc, text):
    if hasattr(exc, "add_note"):
        exc.add_note(text)
    else:
        exc.__notes__ = getattr(exc, "__notes__", []) + [text]


def _node_embeddings(X, method, cfg, seed):
    if method == "random":
        rng = np.random.default_rng([seed, 3])
        return rng.standard_normal((X.shape[0], cfg.rank))
    f = fit(X, method, replace(cfg, seed=seed))
    return embeddings(f).vectors


def _replicate(g, split, X, method, cfg, operators, seed, l2):
    records = []
    t0 = time.perf_counter()
    try:
        emb = _node_embeddings(X, method, cfg, seed)
        pos = split.test_positives
        neg = sample_negatives(g, len(pos), [seed, 1])
    except Exception as exc:
        _note(exc, f"while embedding / sampling for seed {seed}")
        raise
    shared = time.perf_counter() - t0
    labels = np.concatenate([np.ones(len(pos), int), np.zeros(len(neg), int)])
    train_idx, test_idx = stratified_halves(labels, [seed, 2])
    for op in operators:
        t1 = time.perf_counter()
        try:
            data = labeled_edges(emb, pos, neg, op, seed)
            model = train_logistic(data.features[train_idx], data.labels[train_idx], l2)
            score = micro_f1(model.predict(data.features[test_idx]), data.labels[test_idx])
        except Exception as exc:
            _note(exc, f"while scoring seed {seed}, operator {op}")
            raise
        elapsed = time.perf_counter() - t1 + shared / len(operators)
        records.append(EvalRecord(seed, op, float(score), elapsed))
    return records


def run_link_prediction(
    g,
    spec,
    method,
    cfg,
    operators=OPERATORS,
    seeds=range(10),
    split_fraction=0.75,
    l2=1e-4,
    threads=None,
):
    """Run the full protocol and aggregate Micro-F1 per operator.

    ``method`` is ``toffee``, ``rescal``, ``tsvd`` or ``random`` (iid normal
    embeddings, a null control). Seed order does not affect the report.
    """
    operators = tuple(operators)
    seeds = tuple(sorted(set(int(s) for s in seeds)))
    if not seeds:
        raise ValueError("at least one seed is required")
    t0 = time.perf_counter()
    split = temporal_split(g, split_fraction)
    X = bin_timestamps(split.train_graph, spec)
    jobs = [(g, split, X, method, cfg, operators, s, l2) for s in seeds]
    if threads == 1 or len(seeds) == 1:
        results = [_replicate(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _replicate(*job), jobs))
    records = tuple(r for batch in results for r in batch)
    mean, std = {}, {}
    for op in operators:
        scores = np.array([r.micro_f1 for r in records if r.operator == op])
        mean[op] = float(np.mean(scores))
        std[op] = float(np.std(scores))
    report = EvalReport(
        method,
        operators,
        seeds,
        mean,
        std,
        records,
        time.perf_counter() - t0,
        {"rank": cfg.rank, "lambda_A": cfg.lambda_A, "lambda_R": cfg.lambda_R},
    )
    log.info("%s: best operator %s, mean %.4f", method, report.best_operator, report.best_mean)
    return report


def grid_search(g, spec, cfg, operators=OPERATORS, validation_seed=10_000, grid=LAMBDA_GRID, **kw):
    """Pick ``(lambda_A, lambda_R)`` from ``grid x grid`` on one validation replication.

    Returns the selected config and a dict of best-operator means per pair.
    """
    scores = {}
    for la in grid:
        for lr in grid:
            trial = replace(cfg, lambda_A=la, lambda_R=lr)
            rep = run_link_prediction(g, spec, "toffee", trial, operators, [validation_seed], **kw)
            scores[(la, lr)] = rep.best_mean
    best = max(scores, key=lambda k: (scores[k], -k[0], -k[1]))
    return replace(cfg, lambda_A=best[0], lambda_R=best[1]), scores


def default_rank(n_nodes):
    """128-dimensional embeddings, or 64 for graphs with fewer than 128 nodes."""
    return 64 if n_nodes < 128 else 128
