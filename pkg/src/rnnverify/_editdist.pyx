# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled edit-distance kernels.

Same contract as _editdist_py: levenshtein, levenshtein_bounded and
min_distance_bounded, agreeing exactly with the pure Python versions.
Strings are decoded to fixed-width code points so any unicode input works.
"""

from libc.stdlib cimport free, malloc


cdef inline const unsigned int* _as_u32(bytes raw):
    return <const unsigned int*> (<const char*> raw)


cdef int _lev(const unsigned int* a, Py_ssize_t la,
              const unsigned int* b, Py_ssize_t lb) except -1:
    cdef Py_ssize_t i, j
    cdef int cost, best, tmp
    cdef int* prev
    cdef int* cur
    cdef int* swap
    cdef const unsigned int* pswap
    if la < lb:
        pswap = a; a = b; b = pswap
        i = la; la = lb; lb = i
    if lb == 0:
        return <int> la
    prev = <int*> malloc((lb + 1) * sizeof(int))
    cur = <int*> malloc((lb + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        free(prev); free(cur)
        raise MemoryError()
    for j in range(lb + 1):
        prev[j] = <int> j
    for i in range(1, la + 1):
        cur[0] = <int> i
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = prev[j - 1] + cost
            tmp = cur[j - 1] + 1
            if tmp < best:
                best = tmp
            tmp = prev[j] + 1
            if tmp < best:
                best = tmp
            cur[j] = best
        swap = prev; prev = cur; cur = swap
    best = prev[lb]
    free(prev); free(cur)
    return best


cdef int _lev_bounded(const unsigned int* a, Py_ssize_t la,
                      const unsigned int* b, Py_ssize_t lb,
                      int bound) except -1:
    cdef Py_ssize_t i, j, lo, hi
    cdef int cost, best, tmp, big, row_min
    cdef int* prev
    cdef int* cur
    cdef int* swp
    cdef const unsigned int* pswap
    if la < lb:
        pswap = a; a = b; b = pswap
        i = la; la = lb; lb = i
    if la - lb > bound:
        return bound + 1
    big = bound + 1
    prev = <int*> malloc((lb + 1) * sizeof(int))
    cur = <int*> malloc((lb + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        free(prev); free(cur)
        raise MemoryError()
    for j in range(lb + 1):
        prev[j] = <int> j if j <= bound else big
    for i in range(1, la + 1):
        lo = i - bound
        if lo < 1:
            lo = 1
        hi = i + bound
        if hi > lb:
            hi = lb
        if lo == 1 and i <= bound:
            cur[0] = <int> i
        else:
            cur[lo - 1] = big
        row_min = cur[lo - 1]
        for j in range(lo, hi + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = prev[j - 1] + cost
            tmp = cur[j - 1] + 1
            if tmp < best:
                best = tmp
            if j <= i - 1 + bound:
                tmp = prev[j] + 1
                if tmp < best:
                    best = tmp
            if best > big:
                best = big
            cur[j] = best
            if best < row_min:
                row_min = best
        if hi < lb:
            cur[hi + 1] = big
        if row_min > bound:
            free(prev); free(cur)
            return big
        swp = prev; prev = cur; cur = swp
    best = prev[lb]
    free(prev); free(cur)
    return best if best <= bound else big


def levenshtein(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance (insertions, deletions, substitutions)."""
    if a == b:
        return 0
    ra = a.encode("utf-32-le")
    rb = b.encode("utf-32-le")
    return _lev(_as_u32(ra), len(a), _as_u32(rb), len(b))


def levenshtein_bounded(a: str, b: str, bound: int) -> int:
    """Levenshtein distance capped at bound: returns min(d, bound + 1)."""
    if bound < 0:
        return 0 if a == b else 1
    if a == b:
        return 0
    ra = a.encode("utf-32-le")
    rb = b.encode("utf-32-le")
    return _lev_bounded(_as_u32(ra), len(a), _as_u32(rb), len(b), bound)


def min_distance_bounded(x: str, candidates, upper: int, stop_at: int = 0) -> int:
    """Smallest Levenshtein distance from x to any candidate, capped at upper.

    Returns min(true minimum, upper).  Scans with a shrinking bound and
    stops early once the minimum cannot improve below stop_at.
    """
    cdef int best = upper
    cdef int d
    cdef Py_ssize_t lx = len(x)
    rx = x.encode("utf-32-le")
    cdef bytes rxb = rx
    for c in candidates:
        if best <= stop_at:
            break
        if x == c:
            best = 0
            break
        rc = (<str> c).encode("utf-32-le")
        d = _lev_bounded(_as_u32(rxb), lx, _as_u32(rc), len(<str> c), best - 1)
        if d < best:
            best = d
    return best
