"""NumPy fallback lane for the hot kernels.

Same call signatures and semantics as the compiled ``_core`` extension. Trees
arrive flattened: parallel node arrays (``feature`` is -1 at leaves, child
indices are absolute) plus the root index of every tree. Routing rule is
``x[feature] < threshold -> left child``.
"""

import numpy as np

NAME = "pure"


def sigmoid(raw):
    raw = np.asarray(raw, dtype=np.float64)
    out = np.empty_like(raw)
    pos = raw >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-raw[pos]))
    ez = np.exp(raw[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_raw(feature, threshold, left, right, value, roots, base_score, X):
    """Raw ensemble score (base_score + leaf sum) for every row of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    out = np.full(n, base_score, dtype=np.float64)
    rows = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            idx = rows[active]
            nd = node[idx]
            ft = feature[nd]
            go_left = X[idx, ft] < threshold[nd]
            node[idx] = np.where(go_left, left[nd], right[nd])
            active[idx] = feature[node[idx]] >= 0
        out += value[node]
    return out


def coalition_values(feature, threshold, left, right, value, roots, base_score,
                     x, background, masks, proba):
    """Mean model output per coalition mask.

    For mask row k the hybrid instances take ``x`` where the bit is 1 and the
    background row elsewhere; the result is the mean output over background
    rows (sigmoid first when ``proba``).
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    masks = np.asarray(masks, dtype=np.uint8)
    n_masks = masks.shape[0]
    m, d = background.shape
    out = np.empty(n_masks, dtype=np.float64)
    # chunk so the hybrid block stays a few MB
    chunk = max(1, 2_000_000 // max(m * d, 1))
    for a in range(0, n_masks, chunk):
        mk = masks[a:a + chunk].astype(bool)
        hybrid = np.where(mk[:, None, :], x[None, None, :], background[None, :, :])
        raw = predict_raw(feature, threshold, left, right, value, roots,
                          base_score, hybrid.reshape(-1, d))
        vals = sigmoid(raw) if proba else raw
        out[a:a + chunk] = vals.reshape(-1, m).mean(axis=1)
    return out


def permutation_contributions(feature, threshold, left, right, value, roots,
                              base_score, x, background, perms, proba):
    """Per-feature marginal contributions over random feature orderings.

    Walks every permutation from the all-background instance to the full
    instance, averaging each step's output change over background rows.
    Returns ``(sum, sumsq)`` of per-permutation contributions per feature, so
    the caller can form means and standard errors.
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    perms = np.asarray(perms, dtype=np.int32)
    n_perm, d = perms.shape
    m = background.shape[0]

    raw0 = predict_raw(feature, threshold, left, right, value, roots,
                       base_score, background)
    base_vals = sigmoid(raw0) if proba else raw0

    contrib_sum = np.zeros(d, dtype=np.float64)
    contrib_sumsq = np.zeros(d, dtype=np.float64)
    chunk = max(1, 200_000 // max(m * d, 1))
    for a in range(0, n_perm, chunk):
        pe = perms[a:a + chunk]
        c = pe.shape[0]
        z = np.broadcast_to(background, (c, m, d)).copy()
        prev = np.broadcast_to(base_vals, (c, m)).copy()
        contrib = np.zeros((c, d), dtype=np.float64)
        rows = np.arange(c)
        for t in range(d):
            j = pe[:, t]
            z[rows, :, j] = x[j][:, None]
            raw = predict_raw(feature, threshold, left, right, value, roots,
                              base_score, z.reshape(-1, d))
            cur = (sigmoid(raw) if proba else raw).reshape(c, m)
            # (rows, j) pairs are unique within a step, plain fancy indexing is safe
            contrib[rows, j] += (cur - prev).mean(axis=1)
            prev = cur
        contrib_sum += contrib.sum(axis=0)
        contrib_sumsq += (contrib * contrib).sum(axis=0)
    return contrib_sum, contrib_sumsq
