import numpy as np
from hypothesis import given, settings, strategies as st

from pimtree.oracle import Oracle
from pimtree.pim_tree import SENTINEL, PimTree, TreeConfig
from pimtree.pim_tree.integrity import _walk_level, corrupt_shadow
from pimtree.pim_tree.layout import entry_words


def nodes(tree, level):
    return [list(n.keys) for _, _, n in _walk_level(tree.machine, tree.sentinels[level])]


def build(pairs_heights, **cfg):
    t = PimTree(TreeConfig(**cfg))
    pairs = [(k, k * 10) for k, _ in pairs_heights]
    t.insert_batch(pairs, [h for _, h in pairs_heights])
    return t


def rounds_of(tree, fn, *args):
    r0 = tree.machine.rounds
    out = fn(*args)
    return out, tree.machine.rounds - r0


def test_fresh_tree_is_consistent():
    t = PimTree(P=8)
    assert t.verify_shadow_integrity() == []
    assert t.check_structure() == []
    assert t.scan_batch([(0, (1 << 64) - 1)]) == [[]]
    assert t.predecessor_batch([123]) == [None]


def test_get_one_round_and_absent_keys():
    t = PimTree(P=8)
    t.insert_batch([(5, 50)])
    got, r = rounds_of(t, t.get_batch, [5, 6])
    assert got == [50, None] and r == 1


def test_empty_batches_cost_nothing():
    t = PimTree(P=8)
    before = t.machine.snapshot_stats()
    assert t.get_batch([]) == []
    assert t.update_batch([]) == []
    assert t.predecessor_batch([]) == []
    t.insert_batch([])
    t.delete_batch([])
    assert t.machine.snapshot_stats() == before


def test_update_in_place():
    t = PimTree(P=8)
    t.insert_batch([(1, 1), (2, 2)])
    assert t.update_batch([(1, 9), (3, 3), (1, 11)]) == [True, False, True]
    assert t.get_batch([1, 2, 3]) == [11, 2, None]


def test_predecessor_is_non_strict():
    t = build([(10, 1), (20, 2), (30, 1)], P=4)
    assert t.predecessor_batch([20, 25, 9, 10, 1 << 63]) == [(20, 200), (20, 200), None, (10, 100), (30, 300)]


def test_query_routing_through_l3():
    # Two top-level L2 nodes [-inf, 3] and [5]; L3 holds -inf and 5.
    t = build([(1, 2), (3, 3), (4, 1), (5, 4), (7, 2)], P=4)
    assert t.l3_keys() == [5]
    assert nodes(t, 3) == [[SENTINEL, 3], [5]]
    assert nodes(t, 2) == [[SENTINEL, 1], [3], [5, 7]]
    qs = [1, 3, 4, 7]
    res = t._search(qs, traced=[True] * 4)
    top = [res.trace[i][3][0] for i in range(4)]
    assert top[0] == top[1] == top[2] != top[3]
    assert t.machine.debug_load(top[0]).keys == [SENTINEL, 3]
    assert t.machine.debug_load(top[3]).keys == [5]
    assert res.keys == [1, 3, 4, 7]


def test_split_of_a_leaf_chunk():
    t = build([(1, 2), (2, 1), (5, 1), (7, 1), (9, 1)], P=4)
    assert nodes(t, 1) == [[SENTINEL], [1, 2, 5, 7, 9]]
    t.insert_batch([(3, 30), (6, 60), (8, 80)], [1, 2, 2])
    assert nodes(t, 1) == [[SENTINEL], [1, 2, 3, 5], [6, 7], [8, 9]]
    assert nodes(t, 2) == [[SENTINEL, 1, 6, 8]]
    assert t.check_structure() == [] and t.verify_shadow_integrity() == []


def test_push_pull_threshold_two():
    # B=2 gives K_L1 = 2; every key sits in one leaf chunk
    t = build([(10, 1), (20, 1), (30, 1), (40, 1)], P=4, B=2)
    assert t.config.K_L1 == 2
    t.predecessor_batch([11, 21, 31])
    assert len(t.last_search.l1_pulls[0]) == 1
    leaf = t.last_search.l1_pulls[0][0]
    assert leaf[1] == entry_words(5)
    t.predecessor_batch([11, 21])
    assert t.last_search.l1_pulls[0] == []


def test_hot_node_traffic_is_one_node_transfer():
    t = build([(10, 1), (20, 1), (30, 1), (40, 1)], P=4, B=2)
    qs = list(range(100, 400))
    s0 = t.machine.snapshot_stats()
    t.predecessor_batch(qs)
    log = t.machine.snapshot_stats().delta(s0).per_round_log
    leaf_round = log[-2]
    assert leaf_round.host_in == entry_words(5)
    assert leaf_round.host_out == 2  # one fetch task


def test_round_bounds_at_default_shape():
    rng = np.random.default_rng(3)
    t = PimTree(P=64, seed=3)
    keys = rng.integers(0, 1 << 64, 20_000, dtype=np.uint64).tolist()
    t.insert_batch([(k, 1) for k in keys])
    cfg = t.config
    bound = 1 + cfg.H_L2 + 1 + 2 * cfg.H_L1 + 1
    for alpha in (0.0, 1.2):
        qs = rng.integers(0, 1 << 64, 3000, dtype=np.uint64).tolist()
        if alpha:
            qs = [q >> 12 for q in qs]
        _, r = rounds_of(t, t.predecessor_batch, qs)
        assert r <= bound
    _, r = rounds_of(t, t.get_batch, keys[:500])
    assert r == 1


def test_pull_cap_on_l2():
    rng = np.random.default_rng(4)
    t = PimTree(P=16, B=4, seed=4)
    t.insert_batch([(k, 0) for k in rng.integers(0, 1 << 64, 5000, dtype=np.uint64).tolist()])
    qs = rng.integers(0, 1 << 20, 4000).tolist()
    t.predecessor_batch(qs)
    for rnd in t.last_search.l2_pulls:
        assert len(rnd) <= len(set(qs)) // t.config.K_L2
    for rnd in t.last_search.l1_pulls:
        assert len(rnd) <= len(set(qs)) // t.config.K_L1


def test_corrupted_shadow_is_reported_once():
    rng = np.random.default_rng(5)
    t = PimTree(P=8, B=4, seed=5)
    t.insert_batch([(k, 0) for k in rng.integers(0, 1 << 64, 3000, dtype=np.uint64).tolist()])
    assert t.verify_shadow_integrity() == []
    assert corrupt_shadow(t)
    assert len(t.verify_shadow_integrity()) == 1


def test_deleting_a_pivot_merges_into_left_neighbour():
    t = build([(1, 2), (2, 1), (5, 2), (7, 1)], P=4)
    assert nodes(t, 1) == [[SENTINEL], [1, 2], [5, 7]]
    t.delete_batch([5])
    assert nodes(t, 1) == [[SENTINEL], [1, 2, 7]]
    assert nodes(t, 2) == [[SENTINEL, 1]]
    assert t.predecessor_batch([6]) == [(2, 20)]
    assert t.check_structure() == [] and t.verify_shadow_integrity() == []


def test_delete_everything_restores_the_skeleton():
    rng = np.random.default_rng(6)
    keys = rng.integers(0, 1 << 64, 4000, dtype=np.uint64).tolist()
    t = PimTree(P=8, B=4, seed=6)
    t.insert_batch([(k, 1) for k in keys])
    t.delete_batch(keys + [12345])
    for lv in range(1, t.config.lower_height + 1):
        assert nodes(t, lv) == [[SENTINEL]]
    assert t.l3_keys() == []
    assert t.scan_batch([(0, (1 << 64) - 1)]) == [[]]
    assert t.check_structure() == [] and t.verify_shadow_integrity() == []


def test_insert_then_delete_restores_level_sets():
    rng = np.random.default_rng(7)
    base = rng.integers(0, 1 << 64, 10_000, dtype=np.uint64).tolist()
    t = PimTree(P=16, seed=7)
    t.insert_batch([(k, 0) for k in base])
    top = t.config.lower_height
    before = [t.level_keys(lv) for lv in range(1, top + 1)] + [t.l3_keys()]
    extra = [k for k in rng.integers(0, 1 << 64, 3000, dtype=np.uint64).tolist() if k not in set(base)]
    t.insert_batch([(k, 1) for k in extra], [int(h) for h in rng.geometric(0.5, len(extra))])
    t.delete_batch(extra)
    after = [t.level_keys(lv) for lv in range(1, top + 1)] + [t.l3_keys()]
    assert after == before
    assert t.verify_shadow_integrity() == []


def test_random_inserts_enumerate_like_the_oracle():
    rng = np.random.default_rng(8)
    t, o = PimTree(P=16, seed=8), Oracle()
    pairs = [(k, i) for i, k in enumerate(rng.integers(0, 1 << 64, 10_000, dtype=np.uint64).tolist())]
    t.insert_batch(pairs)
    o.insert(pairs)
    assert t.scan_batch([(0, (1 << 64) - 1)]) == o.scan([(0, (1 << 64) - 1)])


def test_existing_key_insert_updates_value_and_keeps_height():
    t = build([(10, 2), (20, 1)], P=4)
    t.insert_batch([(10, 7), (10, 8)], [1, 1])
    assert t.get_batch([10]) == [8]
    assert t.level_keys(2) == [10]


def test_results_do_not_depend_on_batch_order():
    rng = np.random.default_rng(9)
    t = PimTree(P=8, seed=9)
    t.insert_batch([(k, k % 97) for k in rng.integers(0, 1 << 40, 3000).tolist()])
    qs = rng.integers(0, 1 << 40, 2000).tolist()
    a = t.predecessor_batch(qs)
    perm = rng.permutation(len(qs)).tolist()
    b = t.predecessor_batch([qs[i] for i in perm])
    assert [a[i] for i in perm] == b


key = st.integers(0, 400)
op = st.one_of(
    st.tuples(st.just("insert"), st.lists(st.tuples(key, st.integers(0, 99), st.integers(1, 5)), max_size=40)),
    st.tuples(st.just("delete"), st.lists(key, max_size=40)),
    st.tuples(st.just("get"), st.lists(key, max_size=20)),
    st.tuples(st.just("pred"), st.lists(key, max_size=20)),
    st.tuples(st.just("update"), st.lists(st.tuples(key, st.integers(0, 99)), max_size=20)),
    st.tuples(st.just("scan"), st.lists(st.tuples(key, key), max_size=6)),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(op, max_size=12), st.sampled_from([(4, 2), (8, 3), (3, 4)]))
def test_matches_oracle_on_random_op_sequences(ops, shape):
    P, B = shape
    t, o = PimTree(P=P, B=B), Oracle()
    for kind, arg in ops:
        if kind == "insert":
            pairs = [(k, v) for k, v, _ in arg]
            hs = [h for _, _, h in arg]
            t.insert_batch(pairs, hs)
            o.insert(pairs, hs)
        elif kind == "delete":
            t.delete_batch(arg)
            o.delete(arg)
        elif kind == "get":
            assert t.get_batch(arg) == o.get(arg)
        elif kind == "pred":
            assert t.predecessor_batch(arg) == o.predecessor(arg)
        elif kind == "update":
            assert t.update_batch(arg) == o.update(arg)
        else:
            assert t.scan_batch(arg) == o.scan(arg)
        assert t.verify_shadow_integrity() == []
        assert t.check_structure() == []
    top = t.config.lower_height
    for lv in range(1, top + 1):
        assert t.level_keys(lv) == o.level_keys(lv)
    assert t.l3_keys() == o.level_keys(top + 1)


def test_duplicate_keys_in_one_batch_take_the_last_height():
    t = PimTree(P=4, B=2)
    t.insert_batch([(0, 0), (0, 5)], [1, 2])
    assert t.level_keys(2) == [0] and t.get_batch([0]) == [5]
