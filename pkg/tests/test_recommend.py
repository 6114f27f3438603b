import pytest
from hypothesis import given
from hypothesis import strategies as st

from cupcf import ConfigError, ContractError, Prediction, RecommendationList, merge_lists, top_n


def pred(item, value, user=1):
    return Prediction(user, item, value, value, value, False, False)


def rec(entries, user=1, n=None):
    return top_n(list(entries), n or max(len(entries), 1), user=user)


class TestTopN:
    def test_order(self):
        got = top_n([pred(1, 4.5), pred(2, 3.9), pred(3, 4.1)], 2)
        assert got.items == [1, 3]
        assert got.user == 1 and got.n_requested == 2

    def test_short(self):
        assert len(top_n([pred(1, 4.5), pred(2, 3.9), pred(3, 4.1)], 5)) == 3

    def test_tie_to_lower_id(self):
        assert top_n([pred(9, 4.0), pred(2, 4.0)], 2).items == [2, 9]

    def test_bad_n(self):
        with pytest.raises(ConfigError):
            top_n([pred(1, 4.0)], 0)

    def test_mixed_users(self):
        with pytest.raises(ContractError):
            top_n([pred(1, 4.0, user=1), pred(2, 4.0, user=2)], 2)

    def test_csv(self):
        text = top_n([pred(7, 4.25), pred(3, 3.5)], 2).to_csv()
        assert text.splitlines() == ["user,rank,item,score", "1,1,7,4.25", "1,2,3,3.5"]


class TestMerge:
    def test_union(self):
        a = rec([(1, 4.8), (2, 4.6), (3, 4.1)])
        b = rec([(3, 4.4), (4, 4.5)])
        got = merge_lists(a, b, 5)
        brute = {}
        for item, s in a.entries + b.entries:
            brute[item] = max(s, brute.get(item, s))
        assert got.items == sorted(brute, key=lambda i: (-brute[i], i)) == [1, 2, 4, 3]
        assert dict(got.entries)[3] == 4.4

    def test_empty_b(self):
        a = rec([(1, 4.8), (2, 4.6), (3, 4.1)])
        empty = RecommendationList(1, (), 5)
        assert merge_lists(a, empty, 2).entries == a.entries[:2]

    def test_idempotent(self):
        a = rec([(1, 4.8), (2, 4.6)])
        assert merge_lists(a, a, 2).entries == a.entries

    def test_user_mismatch(self):
        with pytest.raises(ContractError):
            merge_lists(rec([(1, 4.0)], user=1), rec([(1, 4.0)], user=2), 3)


scored = st.lists(
    st.tuples(st.integers(1, 30), st.sampled_from([1.0, 2.5, 3.0, 3.75, 4.0, 5.0])),
    max_size=12, unique_by=lambda t: t[0],
)


@given(scored, scored, st.integers(1, 15))
def test_merge_properties(ea, eb, n):
    a = RecommendationList(1, tuple(sorted(ea, key=lambda t: (-t[1], t[0]))), max(len(ea), 1))
    b = RecommendationList(1, tuple(sorted(eb, key=lambda t: (-t[1], t[0]))), max(len(eb), 1))
    ab, ba = merge_lists(a, b, n), merge_lists(b, a, n)
    assert ab.entries == ba.entries
    assert merge_lists(ab, ab, n).entries == ab.entries
    assert len(ab) >= min(n, max(len(a), len(b)))
    assert len(ab) <= min(n, len(a) + len(b))
    assert set(ab.items) <= set(a.items) | set(b.items)
    assert len(set(ab.items)) == len(ab)
    keys = [(-s, i) for i, s in ab.entries]
    assert keys == sorted(keys)
