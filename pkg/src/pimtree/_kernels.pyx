# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled batch kernels; must agree bit-for-bit with _kernels_py."""

from libc.stdint cimport uint64_t, int64_t

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL


cdef inline uint64_t _mix(uint64_t x) noexcept nogil:
    cdef uint64_t z = x + 0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def splitmix64(uint64_t x):
    return _mix(x)


def hash_modules(keys, int P):
    cdef Py_ssize_t i, n = len(keys)
    cdef uint64_t p = P
    out = [0] * n
    for i in range(n):
        out[i] = <long>(_mix(<uint64_t>keys[i]) % p)
    return out


def tally(mods, weights, int P):
    cdef Py_ssize_t i, n = len(mods)
    cdef int64_t[:] acc
    import array
    arr = array.array("q", bytes(8 * P))
    acc = arr
    cdef long m
    if weights is None:
        for i in range(n):
            m = mods[i]
            acc[m] += 1
    else:
        for i in range(n):
            m = mods[i]
            acc[m] += <int64_t>weights[i]
    return arr.tolist()


def merge_intervals(lefts, rights):
    cdef Py_ssize_t n = len(lefts), k
    cdef long j
    cdef uint64_t lo, hi, reach = 0
    cdef bint have = False
    order = sorted(range(n), key=lambda t: (lefts[t], rights[t]))
    starts = []
    ends = []
    group = [0] * n
    cdef long g = -1
    for k in range(n):
        j = order[k]
        lo = lefts[j]
        hi = rights[j]
        if not have or lo > reach:
            starts.append(lo)
            ends.append(hi)
            reach = hi
            have = True
            g += 1
        elif hi > reach:
            reach = hi
            ends[g] = hi
        group[j] = g
    return starts, ends, group


def fnv1a(bytes data):
    cdef uint64_t h = FNV_OFFSET
    cdef const unsigned char[:] v = data
    cdef Py_ssize_t i
    for i in range(len(data)):
        h = (h ^ v[i]) * FNV_PRIME
    return h


def wiki_key(str word, long long doc_id):
    if doc_id < 0 or doc_id >= (1 << 23):
        raise ValueError(f"doc id {doc_id} does not fit in 23 bits")
    w = word.lower()
    cdef uint64_t key = 0, code
    cdef Py_ssize_t i, n = len(w)
    cdef long c
    for i in range(5):
        code = 0
        if i < n:
            c = ord(w[i])
            if 97 <= c <= 122:
                code = <uint64_t>(c - 96)
        key = (key << 5) | code
    cdef uint64_t h = fnv1a(w.encode("utf-8")) & 0x7FFF
    return (((key << 15) | h) << 23) | <uint64_t>doc_id
