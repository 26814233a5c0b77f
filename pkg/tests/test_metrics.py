import itertools
from collections import deque

import pytest
from hypothesis import given, strategies as st

from timingdp.errors import ShapeMismatch
from timingdp.metrics import INF, MetricKind, adjacent_pairs, datasets, distance

H, ID, ABS = MetricKind.HAMMING, MetricKind.INSERT_DELETE, MetricKind.ABS_DIFF
small = st.lists(st.integers(0, 2), max_size=4).map(tuple)


def edit_bfs(x, y):
    """Fewest single-row insertions or deletions turning x into y, by search."""
    alphabet = set(x) | set(y)
    seen = {x: 0}
    todo = deque([x])
    while todo:
        cur = todo.popleft()
        if cur == y:
            return seen[cur]
        nxt = [cur[:i] + cur[i + 1:] for i in range(len(cur))]
        nxt += [cur[:i] + (a,) + cur[i:] for i in range(len(cur) + 1) for a in alphabet]
        for n in nxt:
            if n not in seen and len(n) <= len(x) + len(y):
                seen[n] = seen[cur] + 1
                todo.append(n)
    raise AssertionError("unreachable")


def test_examples():
    assert distance(H, (1, 2, 3), (1, 0, 3)) == 1
    assert distance(H, (1, 2), (1, 2, 3)) == INF
    assert distance(ID, (1, 2, 3), (1, 3)) == 1
    assert distance(ID, (1, 2), (2, 1)) == 2
    assert distance(ABS, 3, 7) == 4 and distance(ABS, (3,), (7,)) == 4


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        distance(H, 3, (3,))
    with pytest.raises(ShapeMismatch):
        distance(ABS, (1, 2), (1,))


def test_parse_aliases():
    assert MetricKind.parse("insert-delete") is ID
    assert MetricKind.parse("hd") is H
    assert MetricKind.parse("abs") is ABS


def test_datasets_count():
    assert len(list(datasets(range(3), 3))) == 1 + 3 + 9 + 27
    assert len(list(datasets(range(3), 3, 3))) == 27


@pytest.mark.parametrize("metric", [H, ID])
def test_adjacent_pairs_match_double_loop(metric):
    pts = list(datasets(range(2), 3))
    want = {(x, y) for x, y in itertools.product(pts, pts) if distance(metric, x, y) <= 1}
    assert set(adjacent_pairs(metric, range(2), 3, 1)) == want


def test_abs_pairs_are_points():
    assert set(adjacent_pairs(ABS, range(3), 0, 1)) == {
        ((0,), (0,)), ((0,), (1,)), ((1,), (0,)), ((1,), (1,)), ((1,), (2,)), ((2,), (1,)),
        ((2,), (2,))}


@given(small, small)
def test_insert_delete_matches_search(x, y):
    assert distance(ID, x, y) == edit_bfs(x, y)


@given(small, small, small)
def test_triangle_and_symmetry(x, y, z):
    for m in (H, ID):
        assert distance(m, x, y) == distance(m, y, x)
        assert distance(m, x, z) <= distance(m, x, y) + distance(m, y, z)
        assert (distance(m, x, y) == 0) == (x == y)
