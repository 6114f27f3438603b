"""User-user similarity: NHSM (heuristic, in [0, 1]) and Pearson (in [-1, 1]).

Pairwise functions work on :class:`~cupcf.dataset.UserStats` and are meant
for inspection and small data.  :func:`build_similarity_matrix` computes all
pairs at once through the kernels in :mod:`cupcf._kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import item_mean

MEASURES = ("nhsm", "pearson")


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


@dataclass(frozen=True)
class PssFactors:
    proximity: float
    significance: float
    singularity: float

    @property
    def product(self):
        return self.proximity * self.significance * self.singularity


def jaccard_mod(stats_u, stats_v):
    """Co-rated count over the product of both users' rating counts."""
    common = len(stats_u.rated & stats_v.rated)
    if not common:
        return 0.0
    return common / (stats_u.count * stats_v.count)


def pss_factors(r_up, r_vp, r_med, mu_p):
    proximity = 1.0 - _sigmoid(abs(r_up - r_vp))
    significance = _sigmoid(abs(r_up - r_med) * abs(r_vp - r_med))
    singularity = 1.0 - _sigmoid(abs((r_up + r_vp) / 2.0 - mu_p))
    return PssFactors(proximity, significance, singularity)


def user_preference(stats_u, stats_v):
    """URP factor: penalises users whose rating mean and spread both differ."""
    return 1.0 - _sigmoid(abs(stats_u.mean - stats_v.mean) * abs(stats_u.std - stats_v.std))


def nhsm_similarity(matrix, stats_u, stats_v):
    common = sorted(stats_u.rated & stats_v.rated)
    if not common:
        return 0.0
    pss = 0.0
    for item in common:
        f = pss_factors(
            matrix.rating(stats_u.user, item),
            matrix.rating(stats_v.user, item),
            matrix.r_med,
            item_mean(matrix, item),
        )
        pss += f.product
    return pss * jaccard_mod(stats_u, stats_v) * user_preference(stats_u, stats_v)


def pearson_similarity(matrix, stats_u, stats_v):
    """Pearson correlation over co-rated items, centred on each user's overall mean.

    Returns 0 when there are no co-rated items or either user's deviations
    over them are all zero.
    """
    num = su = sv = 0.0
    for item in sorted(stats_u.rated & stats_v.rated):
        du = matrix.rating(stats_u.user, item) - stats_u.mean
        dv = matrix.rating(stats_v.user, item) - stats_v.mean
        num += du * dv
        su += du * du
        sv += dv * dv
    if su == 0.0 or sv == 0.0:
        return 0.0
    return max(-1.0, min(1.0, num / (math.sqrt(su) * math.sqrt(sv))))


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric user x user similarities for one measure.

    Rows follow ``users`` (ascending ids).  The diagonal is stored as 0: a
    user is never their own neighbour.
    """

    measure: str
    users: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def pos(self, user):
        i = int(np.searchsorted(self.users, int(user)))
        if i == len(self.users) or self.users[i] != int(user):
            raise KeyError(f"unknown user {user}")
        return i

    def __getitem__(self, pair):
        u, v = pair
        return float(self.values[self.pos(u), self.pos(v)])

    def scaled(self, factor):
        return SimilarityMatrix(self.measure, self.users, self.values * float(factor))

    def ranking(self, user):
        """Other users ordered by similarity (highest first) with 1-based ranks.

        Debugging view only; prediction uses
        :func:`cupcf.prediction.select_neighbors`.
        """
        u = self.pos(user)
        order = _kernels.neighbor_table(self.values, len(self.users))[u]
        return [(int(self.users[v]), float(self.values[u, v]), rank)
                for rank, v in enumerate(order, 1)]

    def to_csv(self, path_or_file):
        """Write the upper triangle as ``user_a,user_b,value`` rows."""
        iu, iv = np.triu_indices(len(self.users), k=1)
        lines = ["user_a,user_b,value"]
        lines += [
            f"{int(self.users[a])},{int(self.users[b])},{float(self.values[a, b])!r}"
            for a, b in zip(iu, iv)
        ]
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)


def build_similarity_matrix(matrix, measure, backend=None):
    """All-pairs similarity for ``measure`` ("nhsm" or "pearson").

    ``backend`` selects the numba or numpy kernel; the default follows
    ``CUPCF_DISABLE_NUMBA``.
    """
    if measure == "nhsm":
        values = _kernels.nhsm_matrix(matrix, backend)
    elif measure == "pearson":
        values = _kernels.pearson_matrix(matrix, backend)
    else:
        raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    return SimilarityMatrix(measure, matrix.users, np.ascontiguousarray(values))
