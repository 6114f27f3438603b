"""k-nearest-neighbour rating prediction and the two-measure (CUP) combination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ColdUserError, ConfigError, ContractError
from .similarity import build_similarity_matrix

COMBINATIONS = ("cup", "nhsm", "pearson")


@dataclass(frozen=True)
class PredictConfig:
    k_neighbors: int = 300
    clamp: bool = True

    def __post_init__(self):
        if int(self.k_neighbors) < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


@dataclass(frozen=True)
class Prediction:
    user: int
    item: int
    value: float
    nhsm_component: float
    pearson_component: float
    nhsm_fellback: bool
    pearson_fellback: bool

    @property
    def raw_value(self):
        """Combined value before clamping."""
        return (self.nhsm_component + self.pearson_component) / 2.0


def _check_aligned(matrix, *sims):
    for sim in sims:
        if not np.array_equal(sim.users, matrix.users):
            raise ContractError(f"{sim.measure} similarity was not built from this rating matrix")


def _active_pos(matrix, user):
    if not matrix.has_user(user):
        raise ColdUserError(f"user {user} has no ratings in the training matrix")
    pos = matrix.user_pos(user)
    if matrix.user_counts[pos] == 0:
        raise ColdUserError(f"user {user} has no ratings in the training matrix")
    return pos


def _row_neighbors(values, u, k):
    row = np.array(values[u], dtype=np.float64, copy=True)
    row[u] = -np.inf
    order = np.argsort(-row, kind="stable")
    return order[: max(0, min(int(k), len(row) - 1))]


def select_neighbors(sim, user, k):
    """The ``k`` most similar other users as ``(user_id, similarity)``, best first.

    Ranking is on the raw similarity, so strongly negative Pearson neighbours
    come last.  Equal similarities are ordered by ascending user id.
    """
    if int(k) < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    u = sim.pos(user)
    return [(int(sim.users[v]), float(sim.values[u, v])) for v in _row_neighbors(sim.values, u, k)]


def predict_with_measure(matrix, sim, user, item, config=PredictConfig()):
    """Mean-centred neighbourhood prediction under a single similarity matrix.

    Only neighbours (among the top ``k``) who rated ``item`` and have nonzero
    similarity contribute.  With none left the user's mean is returned and the
    second element of the result is True.
    """
    _check_aligned(matrix, sim)
    u = _active_pos(matrix, user)
    p = matrix.item_pos(item) if matrix.has_item(item) else -1
    nbrs = _row_neighbors(sim.values, u, config.k_neighbors)
    table = np.zeros((matrix.n_users, len(nbrs)), dtype=np.int64)
    table[u] = nbrs
    values, fellback = _kernels.predict_pairs(
        matrix.grid, matrix.user_means, sim.values, table,
        np.array([u]), np.array([p]), backend="numpy",
    )
    return float(values[0]), bool(fellback[0])


def _combine(nhsm_value, pearson_value, clamp, lo, hi):
    value = (nhsm_value + pearson_value) / 2.0
    if clamp:
        value = np.clip(value, lo, hi)
    return value


def cup_predict(matrix, nhsm_sim, pearson_sim, user, item, config=PredictConfig()):
    a, fa = predict_with_measure(matrix, nhsm_sim, user, item, config)
    b, fb = predict_with_measure(matrix, pearson_sim, user, item, config)
    value = float(_combine(a, b, config.clamp, matrix.scale_min, matrix.scale_max))
    return Prediction(int(user), int(item), value, a, b, fa, fb)


def predict_all_unrated(matrix, nhsm_sim, pearson_sim, user, config=PredictConfig()):
    """CUP predictions for every training item the user has not rated, by item id."""
    _check_aligned(matrix, nhsm_sim, pearson_sim)
    u = _active_pos(matrix, user)
    unrated = np.flatnonzero(matrix.grid[u] == 0)
    if not len(unrated):
        return []
    model = CupModel(matrix, nhsm_sim, pearson_sim, config, backend="numpy")
    batch = model.predict(np.full(len(unrated), matrix.users[u]), matrix.items[unrated])
    return batch.to_predictions()


@dataclass(frozen=True)
class BatchPrediction:
    """Column-oriented predictions for many (user, item) pairs."""

    users: np.ndarray
    items: np.ndarray
    value: np.ndarray
    nhsm_component: np.ndarray
    pearson_component: np.ndarray
    nhsm_fellback: np.ndarray
    pearson_fellback: np.ndarray
    cold_user: np.ndarray

    def __len__(self):
        return len(self.users)

    def to_predictions(self):
        return [
            Prediction(int(u), int(i), float(v), float(a), float(b), bool(fa), bool(fb))
            for u, i, v, a, b, fa, fb in zip(
                self.users, self.items, self.value, self.nhsm_component,
                self.pearson_component, self.nhsm_fellback, self.pearson_fellback,
            )
        ]


class CupModel:
    """Both similarity matrices plus neighbour tables for one training matrix.

    Users absent from training are predicted with the training global mean
    (flagged in ``cold_user``).
    """

    def __init__(self, matrix, nhsm_sim, pearson_sim, config=PredictConfig(), backend=None):
        _check_aligned(matrix, nhsm_sim, pearson_sim)
        self.matrix = matrix
        self.config = config
        self.backend = backend
        self.sims = {"nhsm": nhsm_sim, "pearson": pearson_sim}
        self._tables = {}

    @classmethod
    def fit(cls, matrix, config=PredictConfig(), backend=None):
        return cls(
            matrix,
            build_similarity_matrix(matrix, "nhsm", backend),
            build_similarity_matrix(matrix, "pearson", backend),
            config,
            backend,
        )

    def neighbor_table(self, measure):
        if measure not in self._tables:
            self._tables[measure] = _kernels.neighbor_table(
                self.sims[measure].values, self.config.k_neighbors
            )
        return self._tables[measure]

    def _component(self, measure, upos, ipos):
        m = self.matrix
        return _kernels.predict_pairs(
            m.grid, m.user_means, self.sims[measure].values, self.neighbor_table(measure),
            upos, ipos, backend=self.backend,
        )

    def predict(self, users, items):
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        m = self.matrix
        upos = m.user_pos_array(users)
        ipos = m.item_pos_array(items)
        cold = upos < 0
        if m.n_users:
            cold |= m.user_counts[np.maximum(upos, 0)] == 0
        warm = ~cold

        q = len(users)
        comps, flags = {}, {}
        fallback = m.global_mean if cold.any() else 0.0
        for measure in ("nhsm", "pearson"):
            vals = np.full(q, fallback)
            fb = np.ones(q, dtype=bool)
            if warm.any():
                vals[warm], fb[warm] = self._component(measure, upos[warm], ipos[warm])
            comps[measure], flags[measure] = vals, fb

        value = _combine(comps["nhsm"], comps["pearson"], self.config.clamp, m.scale_min, m.scale_max)
        return BatchPrediction(
            users, items, value, comps["nhsm"], comps["pearson"],
            flags["nhsm"], flags["pearson"], cold,
        )

    def predict_single(self, measure, users, items):
        """Predictions from one measure alone (the NHSM-only / Pearson-only baselines)."""
        batch = self.predict(users, items)
        return select_combination(batch, measure, self.config.clamp,
                                  self.matrix.scale_min, self.matrix.scale_max)


def select_combination(batch, combination, clamp=True, lo=1, hi=5):
    """Final predicted values of ``batch`` under a combination mode.

    ``cup`` averages the two components; ``nhsm`` / ``pearson`` use one alone.
    """
    if combination == "cup":
        return batch.value
    if combination == "nhsm":
        v = batch.nhsm_component
    elif combination == "pearson":
        v = batch.pearson_component
    else:
        raise ValueError(f"unknown combination {combination!r}; expected one of {COMBINATIONS}")
    return np.clip(v, lo, hi) if clamp else v
