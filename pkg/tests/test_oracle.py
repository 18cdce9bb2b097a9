from pimtree.oracle import Oracle
from pimtree.workloads import OpBatch


def test_point_ops():
    o = Oracle()
    o.insert([(5, 50), (1, 10)])
    assert o.get([5, 2]) == [50, None]
    assert o.update([(1, 11), (3, 0)]) == [True, False]
    assert o.predecessor([0, 1, 4, 100]) == [None, (1, 11), (1, 11), (5, 50)]
    o.delete([5, 7])
    assert len(o) == 1


def test_scan_and_invalid_ranges():
    o = Oracle()
    o.insert([(k, k) for k in range(10)])
    assert o.scan([(3, 5), (5, 3), (0, 1 << 64)]) == [[(3, 3), (4, 4), (5, 5)], None, None]


def test_existing_key_keeps_its_height():
    o = Oracle()
    o.insert([(1, 1)], [3])
    o.insert([(1, 2)], [1])
    assert o.level_keys(3) == [1]
    assert o.get([1]) == [2]


def test_replay_dispatch():
    o = Oracle()
    o.replay(OpBatch("insert", [4, 8], [40, 80]))
    assert o.replay(OpBatch("predecessor", [5])) == [(4, 40)]
    assert o.replay(OpBatch("scan", [0], [9])) == [[(4, 40), (8, 80)]]
    o.replay(OpBatch("delete", [4]))
    assert o.replay(OpBatch("get", [4, 8])) == [None, 80]


def test_duplicate_keys_in_one_batch_take_the_last_height():
    o = Oracle()
    o.insert([(1, 1), (1, 2)], [1, 3])
    assert o.get([1]) == [2] and o.level_keys(3) == [1]
