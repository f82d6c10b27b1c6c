"""Context-group utility estimation: linear logistic and boosted-tree models
mapping internal measures to success probability, plus normalized importance
weights and AUC evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import OutcomeRecord
from .measures import MeasureSet


class UtilityError(ValueError):
    pass


def sigmoid(t):
    return 1.0 / (1.0 + np.exp(-np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class UtilityModel:
    """Per-group utility estimator.

    kind 'linear_logistic' uses sigma(alpha + beta.x); kind 'tree_ensemble'
    uses sigma(base + lr * sum of tree outputs). normalized_weights always
    lives on the simplex. With linear_index set, utility_value() scores with
    the normalized linear index beta_hat.x instead of the probability, which
    keeps pure-capability scores on the [0,1] measure scale.
    """

    kind: str
    normalized_weights: np.ndarray
    intercept: float = 0.0
    coefficients: np.ndarray | None = None
    trees: tuple | None = None
    learning_rate: float = 0.1
    linear_index: bool = False
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("linear_logistic", "tree_ensemble"):
            raise UtilityError(f"unknown utility kind {self.kind!r}")
        w = np.asarray(self.normalized_weights, dtype=float)
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
            raise UtilityError("normalized_weights must lie on the simplex")

    @property
    def dim(self) -> int:
        return self.normalized_weights.size


def predict(model: UtilityModel, x) -> float:
    return float(predict_many(model, np.asarray(x, dtype=float)[None, :])[0])


def predict_many(model: UtilityModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise UtilityError(f"dimension mismatch: expected {model.dim} features")
    if model.kind == "linear_logistic":
        index = model.intercept + X @ model.coefficients
    elif not model.trees:
        index = np.full(X.shape[0], model.intercept)
    else:
        stacked = getattr(model, "_stacked_trees", None)
        if stacked is None:
            stacked = _stack_ensemble(model.trees)
            object.__setattr__(model, "_stacked_trees", stacked)
        index = model.intercept + model.learning_rate * _ensemble_predict(stacked, X)
    return np.clip(sigmoid(index), 1e-12, 1.0 - 1e-12)


def utility_value(model: UtilityModel, x) -> float:
    return float(utility_values(model, np.asarray(x, dtype=float)[None, :])[0])


def utility_values(model: UtilityModel, X) -> np.ndarray:
    if model.linear_index:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != model.dim:
            raise UtilityError(f"dimension mismatch: expected {model.dim} features")
        return X @ model.normalized_weights
    return predict_many(model, X)


def binarize_within_user(records: list[OutcomeRecord], user_key: str):
    """Label each scored record 1 iff its score strictly exceeds that user's
    mean score. Users with constant scores get all-zero labels and a flag."""
    by_user: dict[str, list[OutcomeRecord]] = {}
    for rec in records:
        if rec.score is None:
            raise UtilityError(f"interaction {rec.interaction_id!r} has no score")
        if user_key not in rec.context:
            raise UtilityError(f"interaction {rec.interaction_id!r} missing {user_key!r}")
        by_user.setdefault(rec.context[user_key], []).append(rec)
    labeled = []
    constant_users = []
    for user, recs in by_user.items():
        scores = np.array([r.score for r in recs])
        mean = scores.mean()
        if scores.max() == scores.min():
            constant_users.append(user)
        for r, s in zip(recs, scores):
            labeled.append(
                OutcomeRecord(
                    interaction_id=r.interaction_id,
                    model_id=r.model_id,
                    context=r.context,
                    score=r.score,
                    label=int(s > mean),
                )
            )
    return labeled, sorted(constant_users)


@dataclass(frozen=True)
class GroupedOutcomes:
    groups: dict[str, tuple[np.ndarray, np.ndarray]]  # group -> (X, y)
    grouping_rule: str

    def __post_init__(self):
        for g, (X, y) in self.groups.items():
            if len(y) == 0:
                raise UtilityError(f"group {g!r} is empty")
            if not np.all((y == 0) | (y == 1)):
                raise UtilityError(f"group {g!r} has non-binary labels")


def group_contexts(
    records: list[OutcomeRecord], measures: MeasureSet, grouping: str
) -> GroupedOutcomes:
    """Join records with their model's measure vector and partition by context key."""
    index = {m: i for i, m in enumerate(measures.model_ids)}
    buckets: dict[str, list[tuple[np.ndarray, int]]] = {}
    for rec in records:
        if rec.model_id not in index:
            raise UtilityError(
                f"interaction {rec.interaction_id!r}: unresolved model_id {rec.model_id!r}"
            )
        if grouping not in rec.context:
            raise UtilityError(
                f"interaction {rec.interaction_id!r}: missing grouping key {grouping!r}"
            )
        if rec.label is None:
            raise UtilityError(
                f"interaction {rec.interaction_id!r}: no label (binarize scores first)"
            )
        buckets.setdefault(rec.context[grouping], []).append(
            (measures.measures[index[rec.model_id]], rec.label)
        )
    groups = {
        g: (np.array([x for x, _ in rows]), np.array([y for _, y in rows], dtype=float))
        for g, rows in buckets.items()
    }
    return GroupedOutcomes(groups=groups, grouping_rule=grouping)


def _normalized_abs(beta: np.ndarray) -> np.ndarray:
    mag = np.abs(beta)
    total = mag.sum()
    if total < 1e-12:
        return np.full(beta.size, 1.0 / beta.size)
    return mag / total


def fit_logistic(X, y, l2_penalty: float = 1e-4, max_iter: int = 200) -> UtilityModel:
    """Penalized logistic regression by damped Newton (IRLS). The intercept is
    unpenalized; converged when the penalized gradient norm is <= 1e-8."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    classes = np.unique(y)
    if classes.size < 2:
        raise UtilityError("logistic fit needs both classes present")
    n, k = X.shape
    design = np.hstack([np.ones((n, 1)), X])
    penalty = np.concatenate([[0.0], np.full(k, l2_penalty)])
    w = np.zeros(k + 1)

    def negloglik(w):
        t = design @ w
        # log(1 + exp(-|t|)) form avoids overflow
        ll = np.sum(np.log1p(np.exp(-np.abs(t))) + np.maximum(t, 0.0) - y * t)
        return ll + 0.5 * float(penalty @ (w * w))

    flags = []
    current = negloglik(w)
    for _ in range(max_iter):
        p = sigmoid(design @ w)
        grad = design.T @ (p - y) + penalty * w
        if np.linalg.norm(grad) <= 1e-8:
            break
        h = p * (1.0 - p)
        hess = design.T @ (design * h[:, None]) + np.diag(penalty + 1e-12)
        delta = np.linalg.solve(hess, grad)
        step = 1.0
        for _ in range(60):
            cand = w - step * delta
            new = negloglik(cand)
            if new <= current:
                w, current = cand, new
                break
            step *= 0.5
        else:
            flags.append("line_search_stalled")
            break
    else:
        flags.append("not_converged")
    beta = w[1:]
    return UtilityModel(
        kind="linear_logistic",
        intercept=float(w[0]),
        coefficients=beta,
        normalized_weights=_normalized_abs(beta),
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class BoostConfig:
    n_trees: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 20


def _fit_tree(X, grad, hess, max_depth, min_leaf, gains):
    """Depth-limited regression tree on the gradients; leaves carry the
    Newton step sum(grad)/sum(hess). Split gains accumulate into `gains`."""
    n, k = X.shape

    def leaf(idx):
        return {"value": float(grad[idx].sum() / (hess[idx].sum() + 1e-12))}

    def build(idx, depth):
        if depth >= max_depth or idx.size < 2 * min_leaf:
            return leaf(idx)
        g = grad[idx]
        best = None
        for f in range(k):
            order = np.argsort(X[idx, f], kind="mergesort")
            xs = X[idx[order], f]
            gs = g[order]
            csum = np.cumsum(gs)
            total = csum[-1]
            counts = np.arange(1, idx.size + 1)
            valid = (
                (counts >= min_leaf)
                & (counts <= idx.size - min_leaf)
                & (xs < np.append(xs[1:], np.inf))
            )[:-1]
            if not np.any(valid):
                continue
            left = csum[:-1]
            nl = counts[:-1].astype(float)
            nr = idx.size - nl
            reduction = left**2 / nl + (total - left) ** 2 / nr - total**2 / idx.size
            reduction = np.where(valid, reduction, -np.inf)
            j = int(np.argmax(reduction))
            if reduction[j] <= 1e-12:
                continue
            if best is None or reduction[j] > best[0]:
                thr = 0.5 * (xs[j] + xs[j + 1])
                best = (float(reduction[j]), f, thr, order, j)
        if best is None:
            return leaf(idx)
        gain, f, thr, order, j = best
        gains[f] += gain
        left_idx = idx[order[: j + 1]]
        right_idx = idx[order[j + 1 :]]
        return {
            "feature": int(f),
            "threshold": float(thr),
            "left": build(left_idx, depth + 1),
            "right": build(right_idx, depth + 1),
        }

    return build(np.arange(n), 0)


def _compile_tree(tree):
    """Flatten the nested split dicts into parallel arrays for vector walks."""
    feats, thrs, lefts, rights, values = [], [], [], [], []

    def add(node):
        idx = len(feats)
        if "value" in node:
            feats.append(-1)
            thrs.append(0.0)
            lefts.append(-1)
            rights.append(-1)
            values.append(node["value"])
        else:
            feats.append(node["feature"])
            thrs.append(node["threshold"])
            lefts.append(-1)
            rights.append(-1)
            values.append(0.0)
            lefts[idx] = add(node["left"])
            rights[idx] = add(node["right"])
        return idx

    add(tree)
    return (
        np.array(feats, dtype=np.int64),
        np.array(thrs, dtype=float),
        np.array(lefts, dtype=np.int64),
        np.array(rights, dtype=np.int64),
        np.array(values, dtype=float),
    )


def _tree_predict(tree, X):
    feats, thrs, lefts, rights, values = (
        tree if isinstance(tree, tuple) else _compile_tree(tree)
    )
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        f = feats[node]
        active = f >= 0
        if not active.any():
            break
        go_left = X[rows, np.maximum(f, 0)] <= thrs[node]
        nxt = np.where(go_left, lefts[node], rights[node])
        node = np.where(active, nxt, node)
    return values[node]


def _stack_ensemble(trees):
    """Concatenate compiled trees with per-tree node offsets so the whole
    ensemble walks through flat takes instead of per-tree python loops."""
    compiled = [_compile_tree(t) for t in trees]
    offsets = np.cumsum([0] + [c[0].size for c in compiled[:-1]])
    feats = np.concatenate([c[0] for c in compiled]).astype(np.int32)
    thrs = np.concatenate([c[1] for c in compiled])
    lefts = np.concatenate(
        [c[2] + off for c, off in zip(compiled, offsets)]
    ).astype(np.int32)
    rights = np.concatenate(
        [c[3] + off for c, off in zip(compiled, offsets)]
    ).astype(np.int32)
    values = np.concatenate([c[4] for c in compiled])
    roots = offsets.astype(np.int32)
    return feats, thrs, lefts, rights, values, roots


def _ensemble_predict(stacked, X):
    feats, thrs, lefts, rights, values, roots = stacked
    n = X.shape[0]
    Xc = np.ascontiguousarray(X.T)  # feature-major for row gathers
    node = np.repeat(roots[:, None], n, axis=1)  # (T, n) flat node ids
    cols = np.arange(n, dtype=np.int32)[None, :]
    while True:
        f = feats.take(node)
        active = f >= 0
        if not active.any():
            break
        xv = Xc[np.maximum(f, 0), cols]
        go_left = xv <= thrs.take(node)
        nxt = np.where(go_left, lefts.take(node), rights.take(node))
        node = np.where(active, nxt, node)
    return values.take(node).sum(axis=0)


def _logloss(y, index):
    return float(np.sum(np.log1p(np.exp(-np.abs(index))) + np.maximum(index, 0.0) - y * index))


def fit_boosted_trees(X, y, config: BoostConfig = BoostConfig()) -> UtilityModel:
    """Gradient boosting on logistic loss with depth-limited regression trees.
    Normalized weights are per-feature split-gain totals on the simplex."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(y).size < 2:
        raise UtilityError("boosted fit needs both classes present")
    n, k = X.shape
    pbar = float(np.clip(y.mean(), 1e-12, 1.0 - 1e-12))
    base = float(np.log(pbar / (1.0 - pbar)))
    index = np.full(n, base)
    gains = np.zeros(k)
    trees = []
    flags = []
    prev_loss = _logloss(y, index)
    for _ in range(config.n_trees):
        p = sigmoid(index)
        tree = _fit_tree(X, y - p, p * (1.0 - p), config.max_depth, config.min_leaf, gains)
        if "value" in tree and len(trees) == 0 and abs(tree["value"]) < 1e-15:
            flags.append("no_splits")
            break
        step = config.learning_rate * _tree_predict(tree, X)
        loss = _logloss(y, index + step)
        if loss > prev_loss + 1e-9:
            flags.append("loss_increase_stop")
            break
        trees.append(tree)
        index = index + step
        prev_loss = loss
    if gains.sum() < 1e-12:
        weights = np.full(k, 1.0 / k)
        if "no_splits" not in flags:
            flags.append("no_splits")
    else:
        weights = gains / gains.sum()
    return UtilityModel(
        kind="tree_ensemble",
        intercept=base,
        trees=tuple(trees),
        learning_rate=config.learning_rate,
        normalized_weights=weights,
        flags=tuple(flags),
    )


def auc(labels, scores) -> float:
    """Mann-Whitney statistic: share of (positive, negative) pairs ranked
    correctly, ties counting one half."""
    y = np.asarray(labels, dtype=float)
    s = np.asarray(scores, dtype=float)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UtilityError("AUC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(y.size)
    sorted_s = s[order]
    i = 0
    while i < y.size:
        j = i
        while j + 1 < y.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = ranks[pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def stratified_split(X, y, test_fraction: float = 0.2, seed: int = 0):
    """Seeded stratified train/test split."""
    rng = np.random.default_rng(seed)
    y = np.asarray(y)
    train_idx, test_idx = [], []
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        idx = idx[rng.permutation(idx.size)]
        cut = max(1, int(round(idx.size * (1.0 - test_fraction))))
        cut = min(cut, idx.size - 1) if idx.size > 1 else cut
        train_idx.append(idx[:cut])
        test_idx.append(idx[cut:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return train, test
