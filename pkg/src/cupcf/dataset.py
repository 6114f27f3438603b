"""Rating ingestion, the sparse user x item matrix, and k-fold splitting."""

from __future__ import annotations

import csv
import hashlib
import logging
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError, DuplicateRatingError, NoDataError, ParseError, RatingRangeError

log = logging.getLogger(__name__)

FORMATS = ("movielens_tab", "csv")
CSV_HEADER = ("user", "item", "rating")


def _readonly(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


class RatingsMatrix:
    """Immutable sparse matrix of integer ratings.

    Users and items are integer identifiers kept in ascending order; row and
    column positions in every derived array follow that order.  Ratings are
    stored CSR-style (per user, item positions ascending).
    """

    def __init__(self, users, items, indptr, indices, data, scale_min=1, scale_max=5):
        self.users = _readonly(np.asarray(users, dtype=np.int64))
        self.items = _readonly(np.asarray(items, dtype=np.int64))
        self.indptr = _readonly(np.asarray(indptr, dtype=np.int64))
        self.indices = _readonly(np.asarray(indices, dtype=np.int64))
        self.data = _readonly(np.asarray(data, dtype=np.int64))
        self.scale_min = int(scale_min)
        self.scale_max = int(scale_max)
        if len(self.indptr) != len(self.users) + 1:
            raise ValueError("indptr length must be n_users + 1")
        self._user_pos = {int(u): i for i, u in enumerate(self.users)}
        self._item_pos = {int(p): j for j, p in enumerate(self.items)}

    @classmethod
    def from_triples(cls, users, items, ratings, scale_min=1, scale_max=5, lines=None, path=None):
        """Build a matrix from parallel (user, item, rating) sequences.

        ``lines`` optionally carries the source line number of each triple so
        range and duplicate errors can point at the offending record.
        """
        u = np.asarray(users, dtype=np.int64).reshape(-1)
        p = np.asarray(items, dtype=np.int64).reshape(-1)
        r = np.asarray(ratings, dtype=np.int64).reshape(-1)
        if not (len(u) == len(p) == len(r)):
            raise ValueError("users, items and ratings must have equal length")

        bad = np.flatnonzero((r < scale_min) | (r > scale_max))
        if len(bad):
            i = int(bad[0])
            raise RatingRangeError(
                f"rating {int(r[i])} outside [{scale_min}, {scale_max}]",
                lineno=None if lines is None else lines[i],
                path=path,
            )

        user_ids, uidx = np.unique(u, return_inverse=True)
        item_ids, iidx = np.unique(p, return_inverse=True)
        order = np.lexsort((iidx, uidx))
        uidx, iidx, r = uidx[order], iidx[order], r[order]

        if len(r) > 1:
            dup = np.flatnonzero((uidx[1:] == uidx[:-1]) & (iidx[1:] == iidx[:-1]))
            if len(dup):
                j = int(order[dup[0] + 1])
                raise DuplicateRatingError(
                    f"duplicate rating for user {int(u[j])}, item {int(p[j])}",
                    lineno=None if lines is None else lines[j],
                    path=path,
                )

        indptr = np.zeros(len(user_ids) + 1, dtype=np.int64)
        np.cumsum(np.bincount(uidx, minlength=len(user_ids)), out=indptr[1:])
        return cls(user_ids, item_ids, indptr, iidx, r, scale_min, scale_max)

    @classmethod
    def empty(cls, scale_min=1, scale_max=5):
        return cls.from_triples([], [], [], scale_min, scale_max)

    # -- shape ---------------------------------------------------------------
    @property
    def n_users(self):
        return len(self.users)

    @property
    def n_items(self):
        return len(self.items)

    @property
    def n_ratings(self):
        return len(self.data)

    def __len__(self):
        return self.n_ratings

    @property
    def r_med(self):
        return (self.scale_min + self.scale_max) / 2.0

    @property
    def density(self):
        cells = self.n_users * self.n_items
        return self.n_ratings / cells if cells else 0.0

    def __repr__(self):
        return (
            f"RatingsMatrix({self.n_users} users, {self.n_items} items, "
            f"{self.n_ratings} ratings, scale {self.scale_min}..{self.scale_max})"
        )

    # -- lookup --------------------------------------------------------------
    def has_user(self, user):
        return int(user) in self._user_pos

    def has_item(self, item):
        return int(item) in self._item_pos

    def user_pos(self, user):
        try:
            return self._user_pos[int(user)]
        except KeyError:
            raise NoDataError(f"unknown user {user}") from None

    def item_pos(self, item):
        try:
            return self._item_pos[int(item)]
        except KeyError:
            raise NoDataError(f"unknown item {item}") from None

    def user_pos_array(self, users):
        """Map user ids to row positions, -1 for ids not in the matrix."""
        return _lookup(self.users, users)

    def item_pos_array(self, items):
        return _lookup(self.items, items)

    def user_row(self, pos):
        """Item positions and ratings of the user at row ``pos``."""
        lo, hi = self.indptr[pos], self.indptr[pos + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def rating(self, user, item):
        """Rating of ``item`` by ``user``, or None when unrated."""
        if not (self.has_user(user) and self.has_item(item)):
            return None
        v = int(self.grid[self.user_pos(user), self.item_pos(item)])
        return v or None

    def triples(self):
        """(n, 3) array of (user, item, rating) rows in (user, item) order."""
        uidx = np.repeat(np.arange(self.n_users), np.diff(self.indptr))
        return np.column_stack([self.users[uidx], self.items[self.indices], self.data])

    # -- derived arrays ------------------------------------------------------
    @cached_property
    def row_index(self):
        """User position of every stored rating."""
        return _readonly(np.repeat(np.arange(self.n_users, dtype=np.int64), np.diff(self.indptr)))

    @cached_property
    def grid(self):
        """Dense int8 rating grid, 0 where unrated."""
        g = np.zeros((self.n_users, self.n_items), dtype=np.int8)
        g[self.row_index, self.indices] = self.data
        return _readonly(g)

    @cached_property
    def mask(self):
        return _readonly(self.grid != 0)

    @cached_property
    def user_counts(self):
        return _readonly(np.diff(self.indptr))

    @cached_property
    def user_means(self):
        sums = np.bincount(self.row_index, weights=self.data, minlength=self.n_users)
        with np.errstate(invalid="ignore", divide="ignore"):
            return _readonly(sums / self.user_counts)

    @cached_property
    def user_stds(self):
        """Population standard deviation of each user's ratings (two-pass)."""
        dev = self.data - self.user_means[self.row_index]
        ss = np.bincount(self.row_index, weights=dev * dev, minlength=self.n_users)
        with np.errstate(invalid="ignore", divide="ignore"):
            return _readonly(np.sqrt(ss / self.user_counts))

    @cached_property
    def item_counts(self):
        return _readonly(np.bincount(self.indices, minlength=self.n_items))

    @cached_property
    def item_means(self):
        sums = np.bincount(self.indices, weights=self.data, minlength=self.n_items)
        with np.errstate(invalid="ignore", divide="ignore"):
            return _readonly(sums / self.item_counts)

    @property
    def global_mean(self):
        if not self.n_ratings:
            raise NoDataError("matrix has no ratings")
        return float(self.data.mean())

    def checksum(self):
        """SHA-256 over the canonical (user, item, rating) triples."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.triples(), dtype="<i8").tobytes())
        h.update(f"{self.scale_min},{self.scale_max}".encode())
        return h.hexdigest()


def _lookup(sorted_ids, query):
    query = np.asarray(query, dtype=np.int64)
    if not len(sorted_ids):
        return np.full(query.shape, -1, dtype=np.int64)
    pos = np.searchsorted(sorted_ids, query)
    pos = np.minimum(pos, len(sorted_ids) - 1)
    return np.where(sorted_ids[pos] == query, pos, -1).astype(np.int64)


@dataclass(frozen=True)
class UserStats:
    user: int
    mean: float
    std: float
    rated: frozenset
    count: int


def user_stats(matrix, user):
    pos = matrix.user_pos(user)
    count = int(matrix.user_counts[pos])
    if count == 0:
        raise NoDataError(f"user {user} has no ratings")
    items, _ = matrix.user_row(pos)
    return UserStats(
        user=int(user),
        mean=float(matrix.user_means[pos]),
        std=float(matrix.user_stds[pos]),
        rated=frozenset(int(i) for i in matrix.items[items]),
        count=count,
    )


def item_mean(matrix, item):
    pos = matrix.item_pos(item)
    if matrix.item_counts[pos] == 0:
        raise NoDataError(f"item {item} has no ratings")
    return float(matrix.item_means[pos])


# -- file formats -------------------------------------------------------------


def _parse_int(field, lineno, path, what):
    try:
        return int(field)
    except ValueError:
        raise ParseError(f"{what} {field!r} is not an integer", lineno=lineno, path=path) from None


def _read_records(path, fmt):
    users, items, ratings, lines = [], [], [], []
    with open(path, newline="") as fh:
        if fmt == "movielens_tab":
            rows = ((n, line.rstrip("\r\n").split("\t")) for n, line in enumerate(fh, 1))
        elif fmt == "csv":
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return users, items, ratings, lines
            if tuple(h.strip().lower() for h in header[:3]) != CSV_HEADER:
                raise ParseError(f"expected header {','.join(CSV_HEADER)}", lineno=1, path=path)
            rows = ((reader.line_num, row) for row in reader)
        else:
            raise ConfigError(f"unknown format {fmt!r}; expected one of {FORMATS}")

        for lineno, fields in rows:
            if fields == [""] or not fields:
                continue
            if len(fields) not in (3, 4):
                raise ParseError(f"expected 3 or 4 fields, got {len(fields)}", lineno=lineno, path=path)
            users.append(_parse_int(fields[0], lineno, path, "user id"))
            items.append(_parse_int(fields[1], lineno, path, "item id"))
            ratings.append(_parse_int(fields[2], lineno, path, "rating"))
            if len(fields) == 4 and fields[3].strip():
                _parse_int(fields[3], lineno, path, "timestamp")
            lines.append(lineno)
    return users, items, ratings, lines


def load_ratings(path, format="movielens_tab", scale_min=1, scale_max=5):
    """Read a ratings file into a :class:`RatingsMatrix`.

    ``movielens_tab`` is the ``u.data`` layout (user, item, rating, timestamp
    separated by tabs).  ``csv`` expects a ``user,item,rating`` header.  An
    optional trailing timestamp column is accepted and ignored in both.
    """
    path = os.fspath(path)
    users, items, ratings, lines = _read_records(path, format)
    matrix = RatingsMatrix.from_triples(
        users, items, ratings, scale_min, scale_max, lines=lines, path=path
    )
    log.debug("loaded %r from %s", matrix, path)
    return matrix


def write_ratings(matrix, path, format="movielens_tab"):
    rows = matrix.triples()
    with open(path, "w", newline="") as fh:
        if format == "movielens_tab":
            for u, i, r in rows:
                fh.write(f"{u}\t{i}\t{r}\n")
        elif format == "csv":
            fh.write(",".join(CSV_HEADER) + "\n")
            for u, i, r in rows:
                fh.write(f"{u},{i},{r}\n")
        else:
            raise ConfigError(f"unknown format {format!r}; expected one of {FORMATS}")


# -- cross-validation ---------------------------------------------------------


@dataclass(frozen=True)
class FoldSplit:
    """One cross-validation fold.

    ``test`` is an (n, 3) int64 array of (user, item, actual rating) rows in
    (user, item) order.
    """

    fold_index: int
    train: RatingsMatrix
    test: np.ndarray


def kfold_split(matrix, k=5, seed=0):
    """Shuffle ratings with a seeded generator and cut them into k folds.

    Group sizes differ by at most one.  Identical (matrix, k, seed) always
    produce identical folds.
    """
    k = int(k)
    n = matrix.n_ratings
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    if n == 0:
        raise ConfigError("cannot split an empty matrix")
    if k > n:
        raise ConfigError(f"k={k} exceeds the number of ratings ({n})")

    triples = matrix.triples()
    perm = np.random.default_rng(seed).permutation(n)
    groups = np.array_split(perm, k)
    folds = []
    for i, group in enumerate(groups):
        in_test = np.zeros(n, dtype=bool)
        in_test[group] = True
        train = triples[~in_test]
        folds.append(
            FoldSplit(
                fold_index=i,
                train=RatingsMatrix.from_triples(
                    train[:, 0], train[:, 1], train[:, 2], matrix.scale_min, matrix.scale_max
                ),
                test=_readonly(triples[in_test]),
            )
        )
    return folds


def load_fold_files(directory, k=5, format="movielens_tab", pattern="u{i}.{part}",
                    scale_min=1, scale_max=5):
    """Load pre-built train/test pairs such as ML-100K's ``u1.base``/``u1.test``.

    ``pattern`` is formatted with ``i`` (1-based fold number) and ``part``
    (``base`` or ``test``).
    """
    directory = Path(directory)
    folds = []
    for i in range(1, int(k) + 1):
        base = directory / pattern.format(i=i, part="base")
        test = directory / pattern.format(i=i, part="test")
        for p in (base, test):
            if not p.exists():
                raise ConfigError(f"missing fold file {p}")
        train = load_ratings(base, format, scale_min, scale_max)
        test_m = load_ratings(test, format, scale_min, scale_max)
        folds.append(FoldSplit(fold_index=i - 1, train=train, test=_readonly(test_m.triples())))
    return folds
