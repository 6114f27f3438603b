"""Hot loops: all-pairs NHSM / Pearson matrices and neighbourhood prediction.

Every kernel exists twice: a numba ``@njit`` loop over sparse rows and a
vectorised numpy version built on dense matrix products.  They agree to
floating-point summation order; ``tests/test_kernels.py`` pins that.
"""

import numpy as np

from ._accel import njit, resolve_backend


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def pair_factor_tables(scale_min, scale_max, r_med):
    """Proximity and significance for every pair of integer ratings.

    Indexed by raw rating value, so entries below ``scale_min`` are unused.
    """
    r = np.arange(scale_max + 1, dtype=np.float64)
    ru, rv = r[:, None], r[None, :]
    proximity = 1.0 - _sigmoid(np.abs(ru - rv))
    significance = _sigmoid(np.abs(ru - r_med) * np.abs(rv - r_med))
    proximity[:scale_min, :] = 0.0
    proximity[:, :scale_min] = 0.0
    return proximity, significance


def urp(mean_u, mean_v, std_u, std_v):
    return 1.0 - _sigmoid(np.abs(mean_u - mean_v) * np.abs(std_u - std_v))


# -- NHSM ---------------------------------------------------------------------


def _nhsm_loop(indptr, indices, data, means, stds, item_means, prox, sig):
    n = len(indptr) - 1
    out = np.zeros((n, n))
    for u in range(n):
        lo_u, hi_u = indptr[u], indptr[u + 1]
        for v in range(u + 1, n):
            lo_v, hi_v = indptr[v], indptr[v + 1]
            a, b = lo_u, lo_v
            pss = 0.0
            common = 0
            while a < hi_u and b < hi_v:
                ia, ib = indices[a], indices[b]
                if ia < ib:
                    a += 1
                elif ia > ib:
                    b += 1
                else:
                    ru, rv = data[a], data[b]
                    sing = 1.0 - 1.0 / (1.0 + np.exp(-abs((ru + rv) / 2.0 - item_means[ia])))
                    pss += prox[ru, rv] * sig[ru, rv] * sing
                    common += 1
                    a += 1
                    b += 1
            if common:
                jac = common / ((hi_u - lo_u) * (hi_v - lo_v))
                x = abs(means[u] - means[v]) * abs(stds[u] - stds[v])
                s = pss * jac * (1.0 - 1.0 / (1.0 + np.exp(-x)))
                out[u, v] = s
                out[v, u] = s
    return out


_nhsm_jit = njit(_nhsm_loop)


def _nhsm_numpy(matrix, prox, sig):
    grid = matrix.grid.astype(np.intp)
    mask = matrix.mask.astype(np.float64)
    lo, hi = matrix.scale_min, matrix.scale_max
    values = np.arange(lo, hi + 1)
    # singularity[a, b, p] for every rating pair on every item
    half = (values[:, None] + values[None, :]) / 2.0
    item_means = np.nan_to_num(matrix.item_means)  # unrated items never co-occur
    sing = 1.0 - _sigmoid(np.abs(half[:, :, None] - item_means[None, None, :]))
    cols = np.arange(matrix.n_items)

    pss = np.zeros((matrix.n_users, matrix.n_users))
    for ai, a in enumerate(values):
        onehot = (grid == a).astype(np.float64)
        if not onehot.any():
            continue
        # weight[b, p]: PSS contribution when the partner rated p with b; row 0 = unrated
        weight = np.zeros((hi + 1, matrix.n_items))
        weight[lo:] = (prox[a, lo:] * sig[a, lo:])[:, None] * sing[ai]
        partner = weight[grid, cols[None, :]]
        pss += onehot @ partner.T

    common = mask @ mask.T
    counts = matrix.user_counts.astype(np.float64)
    jac = common / np.outer(counts, counts)
    means, stds = matrix.user_means, matrix.user_stds
    pref = urp(means[:, None], means[None, :], stds[:, None], stds[None, :])
    out = np.where(common > 0, pss * jac * pref, 0.0)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 0.0)
    return out


def nhsm_matrix(matrix, backend=None):
    backend = resolve_backend(backend, matrix.n_users * matrix.n_items)
    n = matrix.n_users
    if n == 0:
        return np.zeros((0, 0))
    if matrix.n_ratings and np.isnan(matrix.user_means).any():
        raise ValueError("every user in the matrix needs at least one rating")
    prox, sig = pair_factor_tables(matrix.scale_min, matrix.scale_max, matrix.r_med)
    if backend == "numba":
        return _nhsm_jit(
            matrix.indptr, matrix.indices, matrix.data, matrix.user_means,
            matrix.user_stds, matrix.item_means, prox, sig,
        )
    return _nhsm_numpy(matrix, prox, sig)


# -- Pearson ------------------------------------------------------------------


def _pearson_loop(indptr, indices, data, means):
    n = len(indptr) - 1
    out = np.zeros((n, n))
    for u in range(n):
        lo_u, hi_u = indptr[u], indptr[u + 1]
        mu = means[u]
        for v in range(u + 1, n):
            lo_v, hi_v = indptr[v], indptr[v + 1]
            mv = means[v]
            a, b = lo_u, lo_v
            num = 0.0
            su = 0.0
            sv = 0.0
            while a < hi_u and b < hi_v:
                ia, ib = indices[a], indices[b]
                if ia < ib:
                    a += 1
                elif ia > ib:
                    b += 1
                else:
                    du = data[a] - mu
                    dv = data[b] - mv
                    num += du * dv
                    su += du * du
                    sv += dv * dv
                    a += 1
                    b += 1
            if su > 0.0 and sv > 0.0:
                s = num / (np.sqrt(su) * np.sqrt(sv))
                s = min(1.0, max(-1.0, s))
                out[u, v] = s
                out[v, u] = s
    return out


_pearson_jit = njit(_pearson_loop)


def _pearson_numpy(matrix):
    mask = matrix.mask.astype(np.float64)
    dev = (matrix.grid - matrix.user_means[:, None]) * mask
    num = dev @ dev.T
    sq = (dev * dev) @ mask.T  # sq[u, v] = sum over co-rated items of u's squared deviation
    den = np.sqrt(sq) * np.sqrt(sq.T)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where((sq > 0) & (sq.T > 0), num / den, 0.0)
    out = np.clip(0.5 * (out + out.T), -1.0, 1.0)
    np.fill_diagonal(out, 0.0)
    return out


def pearson_matrix(matrix, backend=None):
    backend = resolve_backend(backend, matrix.n_users * matrix.n_items)
    if matrix.n_users == 0:
        return np.zeros((0, 0))
    if backend == "numba":
        return _pearson_jit(matrix.indptr, matrix.indices, matrix.data, matrix.user_means)
    return _pearson_numpy(matrix)


# -- prediction ---------------------------------------------------------------


def neighbor_table(sim, k):
    """Top-k neighbour positions per row, by raw similarity descending.

    Self is excluded and ties go to the lower position (stable sort).
    """
    n = sim.shape[0]
    k = max(0, min(int(k), n - 1))
    keyed = np.array(sim, dtype=np.float64, copy=True)
    np.fill_diagonal(keyed, -np.inf)
    order = np.argsort(-keyed, axis=1, kind="stable")
    return np.ascontiguousarray(order[:, :k])


def _predict_loop(grid, means, sim, nbrs, users, items):
    q = len(users)
    values = np.empty(q)
    fellback = np.zeros(q, dtype=np.bool_)
    for t in range(q):
        u = users[t]
        p = items[t]
        num = 0.0
        den = 0.0
        if p >= 0:
            for j in range(nbrs.shape[1]):
                v = nbrs[u, j]
                s = sim[u, v]
                r = grid[v, p]
                if s != 0.0 and r != 0:
                    num += (r - means[v]) * s
                    den += abs(s)
        if den > 0.0:
            values[t] = means[u] + num / den
        else:
            values[t] = means[u]
            fellback[t] = True
    return values, fellback


_predict_jit = njit(_predict_loop)


def _predict_numpy(grid, means, sim, nbrs, users, items):
    q = len(users)
    values = np.empty(q)
    fellback = np.zeros(q, dtype=bool)
    order = np.argsort(users, kind="stable")
    bounds = np.flatnonzero(np.diff(users[order])) + 1
    for group in np.split(order, bounds):
        if not len(group):
            continue
        u = users[group[0]]
        nb = nbrs[u]
        s = sim[u, nb]
        known = items[group] >= 0
        cols = np.where(known, items[group], 0)
        sub = grid[nb][:, cols].astype(np.float64)
        rated = (sub != 0) & known[None, :] & (s != 0)[:, None]
        dev = np.where(rated, sub - means[nb][:, None], 0.0)
        num = s @ dev
        den = np.abs(s) @ rated
        ok = den > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            values[group] = np.where(ok, means[u] + num / den, means[u])
        fellback[group] = ~ok
    return values, fellback


def predict_pairs(grid, means, sim, nbrs, users, items, backend=None):
    """Weighted deviation-from-mean predictions for (user, item) positions.

    ``items`` may hold -1 for items missing from training; those fall back to
    the user's mean.  Returns ``(values, fellback)``.
    """
    backend = resolve_backend(backend)
    users = np.ascontiguousarray(users, dtype=np.int64)
    items = np.ascontiguousarray(items, dtype=np.int64)
    if backend == "numba":
        return _predict_jit(grid, means, sim, nbrs, users, items)
    return _predict_numpy(grid, means, sim, nbrs, users, items)
