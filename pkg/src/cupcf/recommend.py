"""Top-N recommendation lists and list merging."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, ContractError


def _order_key(entry):
    item, score = entry
    return (-score, item)


@dataclass(frozen=True)
class RecommendationList:
    user: int
    entries: tuple  # ((item, score), ...) best first, ties by ascending item id
    n_requested: int

    @property
    def items(self):
        return [item for item, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def csv_rows(self):
        return [f"{self.user},{rank},{item},{score!r}" for rank, (item, score) in enumerate(self.entries, 1)]

    def to_csv(self, header=True):
        rows = (["user,rank,item,score"] if header else []) + self.csv_rows()
        return "\n".join(rows) + "\n"


def _check_n(n):
    if int(n) < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    return int(n)


def top_n(predictions, n, user=None):
    """The ``n`` highest-valued predictions as a :class:`RecommendationList`.

    ``predictions`` holds :class:`~cupcf.prediction.Prediction` objects or
    plain ``(item, score)`` pairs (then ``user`` must be given).
    """
    n = _check_n(n)
    entries = []
    for p in predictions:
        if isinstance(p, tuple):
            entries.append((int(p[0]), float(p[1])))
        else:
            if user is None:
                user = p.user
            elif p.user != user:
                raise ContractError(f"predictions mix users {user} and {p.user}")
            entries.append((int(p.item), float(p.value)))
    if user is None:
        raise ContractError("cannot infer the user of an empty prediction list")
    entries.sort(key=_order_key)
    return RecommendationList(int(user), tuple(entries[:n]), n)


def merge_lists(list_a, list_b, n):
    """Union of two lists for the same user, keeping each item's higher score."""
    n = _check_n(n)
    if list_a.user != list_b.user:
        raise ContractError(f"cannot merge lists for users {list_a.user} and {list_b.user}")
    best = {}
    for item, score in list_a.entries + list_b.entries:
        if item not in best or score > best[item]:
            best[item] = score
    entries = sorted(best.items(), key=_order_key)
    return RecommendationList(list_a.user, tuple(entries[:n]), n)
