import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pimtree.workloads import (
    KEY_SPACE, YCSB_MIXES, OpBatch, PartSampler, SkewSpec, WorkloadScript, distinct_uniform_keys,
    encode_wiki_key, gen_micro, gen_mixed, gen_modified_zipfian, gen_wiki, gen_ycsb, wiki_pairs,
    zipf_pmf,
)


def expected_duplicate_fraction(n, S, parts, alpha):
    """Poisson approximation of 1 - distinct/S for part-then-uniform draws."""
    p = zipf_pmf(parts, alpha)
    m = n / parts
    return 1 - float((m * (1 - np.exp(-S * p / m))).sum()) / S


def test_alpha_zero_is_uniform_over_parts():
    rng = np.random.default_rng(0)
    parts, n = 64, 64_000
    counts = np.bincount(PartSampler(SkewSpec(0.0, parts), rng).draw(n), minlength=parts)
    sigma = math.sqrt(n / parts * (1 - 1 / parts))
    assert np.all(np.abs(counts - n / parts) <= 4 * sigma)


def test_top_part_matches_zipf_head_mass():
    rng = np.random.default_rng(1)
    s = PartSampler(SkewSpec(1.2, 2048, shuffle_period=10**9), rng)
    n = 200_000
    draws = s.draw(n)
    p = zipf_pmf(2048, 1.2)[0]
    hits = int((draws == s.perm[0]).sum())
    assert abs(hits - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def test_zipf_frequencies_converge():
    rng = np.random.default_rng(2)
    s = PartSampler(SkewSpec(0.9, 32, shuffle_period=10**9), rng)
    n = 100_000
    counts = np.bincount(s.draw(n), minlength=32)[s.perm]
    expected = n * zipf_pmf(32, 0.9)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 70  # 31 degrees of freedom, far above the 0.999 quantile (61.1)


def test_shuffle_period_in_operations():
    rng = np.random.default_rng(3)
    s = PartSampler(SkewSpec(1.0, 16, shuffle_period=10), rng)
    first = s.perm.copy()
    s.draw(10)
    assert np.array_equal(first, s.perm)
    s.draw(1)
    assert s.since_shuffle == 1


def test_keys_land_in_chosen_part():
    spec = SkewSpec(1.2, 8, shuffle_period=10**9)
    rng = np.random.default_rng(4)
    sampler = PartSampler(spec, rng)
    keys = gen_modified_zipfian(spec, 5000, rng, sampler=sampler)
    width = KEY_SPACE // 8
    top = np.bincount([k // width for k in keys], minlength=8).argmax()
    assert top == sampler.perm[0]


def test_existing_key_universe_needs_keys():
    with pytest.raises(ValueError):
        gen_modified_zipfian(SkewSpec(1.0, universe="existing"), 5, np.random.default_rng(0), [])


def test_duplicate_fraction_follows_part_occupancy():
    # Batch-to-key ratio of 1:500 (10^6 operations over 5*10^8 keys in the
    # reference setting), scaled to 2000 gets over 10^6 keys.
    live = sorted(distinct_uniform_keys(np.random.default_rng(5), 10**6))
    spec = SkewSpec(1.2, 2048, universe="existing")
    fracs = []
    for seed in range(5):
        ks = gen_modified_zipfian(spec, 2000, np.random.default_rng(seed), live)
        fracs.append(1 - len(set(ks)) / len(ks))
    want = expected_duplicate_fraction(10**6, 2000, 2048, 1.2)
    assert abs(np.mean(fracs) - want) < 0.01
    # the "under 10%" regime holds at the YCSB default skew
    assert expected_duplicate_fraction(5 * 10**8, 10**6, 2048, 0.99) < 0.10


def test_ycsb_mixes():
    rng = np.random.default_rng(6)
    s = gen_ycsb("C", 100, SkewSpec(0.5), rng, init=10, batch_unit=30)
    assert {b.op for b in s.batches} == {"predecessor"} and s.op_count() == 100
    s = gen_ycsb("A", 4000, SkewSpec(0.5), rng, init=10, batch_unit=500)
    n_pred = sum(len(b) for b in s.batches if b.op == "predecessor")
    assert abs(n_pred - 2000) < 4 * math.sqrt(1000)
    s = gen_ycsb("E", 2000, SkewSpec(0.5), rng, init=100, batch_unit=1000)
    scans = [b for b in s.batches if b.op == "scan"]
    assert all(len(b) <= 10 for b in scans)
    assert set(YCSB_MIXES) == set("ABCDE")
    with pytest.raises(ValueError):
        gen_ycsb("Z", 1, SkewSpec(), rng)


def test_micro_batches_and_key_universes():
    s = gen_micro("delete", 1000, 250, 100, 1.0, seed=7)
    assert [len(b) for b in s.batches] == [100, 100, 50]
    warm = {k for k, _ in s.warmup}
    assert all(k in warm for b in s.batches for k in b.keys)
    s = gen_micro("scan", 1000, 10, 10, 0.0, seed=7)
    w = 100 * KEY_SPACE // 1000
    # widths are fixed except where the range is clamped at the top of the key space
    assert all(r - l + 1 == w or r == KEY_SPACE - 1 for l, r in zip(s.batches[0].keys, s.batches[0].values))


def test_mixed_script_shape():
    s = gen_mixed(1000, 5000, 40, 1000, 0.6, seed=8, scan_batch=10)
    assert sum(len(b) for b in s.batches if b.op != "scan") == 5000
    assert sum(len(b) for b in s.batches if b.op == "scan") == 40


def test_generation_is_deterministic():
    a = gen_mixed(500, 2000, 20, 500, 1.2, seed=9)
    b = gen_mixed(500, 2000, 20, 500, 1.2, seed=9)
    assert a == b
    assert a != gen_mixed(500, 2000, 20, 500, 1.2, seed=10)


def test_script_round_trip(tmp_path):
    s = gen_mixed(50, 300, 5, 50, 1.0, seed=11, scan_batch=5)
    path = tmp_path / "w.txt"
    s.save(path)
    assert WorkloadScript.load(path) == s
    assert WorkloadScript.loads(WorkloadScript().dumps()) == WorkloadScript()


def test_malformed_scripts():
    with pytest.raises(ValueError):
        WorkloadScript.loads("warmup 2\nI 1 1\n")
    with pytest.raises(ValueError):
        WorkloadScript.loads("batch frobnicate 0\n")
    with pytest.raises(ValueError):
        OpBatch("insert", [1], None)


def test_wiki_key_encoding():
    k = encode_wiki_key("Ordered", 1_000_000)
    assert k & ((1 << 23) - 1) == 1_000_000
    letters = [(k >> (38 + 5 * (4 - i))) & 31 for i in range(5)]
    assert letters == [15, 18, 4, 5, 18]  # o r d e r
    assert encode_wiki_key("ordered", 0) == encode_wiki_key("ORDERED", 0)
    # words sharing five letters share the prefix field
    assert encode_wiki_key("orderly", 0) >> 38 == encode_wiki_key("ordered", 0) >> 38
    assert encode_wiki_key("a", 3) < encode_wiki_key("b", 0)


@settings(max_examples=200)
@given(st.from_regex(r"[a-z]{1,12}", fullmatch=True), st.from_regex(r"[a-z]{1,12}", fullmatch=True),
       st.integers(0, (1 << 23) - 1))
def test_wiki_collisions_need_same_prefix_and_hash(a, b, doc):
    ka, kb = encode_wiki_key(a, doc), encode_wiki_key(b, doc)
    if ka == kb:
        assert a[:5] == b[:5]
    if a[:5] != b[:5]:
        assert ka != kb


def test_wiki_pairs_and_script(tmp_path):
    assert [d for _, d in wiki_pairs(["one two", "", "three"])] == [0, 0, 2]
    path = tmp_path / "corpus.txt"
    path.write_text("alpha beta\ngamma alpha\n")
    s = gen_wiki(path, 5, 2, seed=0)
    assert len(s.warmup) == 4
    assert [len(b) for b in s.batches] == [2, 2, 1]
    assert all(b.op == "predecessor" for b in s.batches)
