# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop of the grouped beam search.

One call advances every group of one decode by one time step: candidate
scoring, bounded top-k selection with the documented tie-break, the
per-step hamming counts, and the stable re-sort by stored score all run
in C without touching the interpreter. Floating-point expressions mirror
the pure NumPy path exactly (same operand order, no contraction), so the
two backends produce bit-identical decodes.
"""

from libc.math cimport INFINITY


cdef inline bint _better(double s1, int p1, int t1,
                         double s2, int p2, int t2) noexcept nogil:
    # Candidate order: score desc, parent index asc, token id asc.
    if s1 != s2:
        return s1 > s2
    if p1 != p2:
        return p1 < p2
    return t1 < t2


cdef inline int _insert(double[::1] score, int[::1] parent, int[::1] token,
                        int count, int cap, double s, int p, int t) noexcept nogil:
    cdef int j
    if count == cap:
        if not _better(s, p, t, score[cap - 1], parent[cap - 1], token[cap - 1]):
            return count
        j = cap - 1
    else:
        j = count
        count += 1
    while j > 0 and _better(s, p, t, score[j - 1], parent[j - 1], token[j - 1]):
        score[j] = score[j - 1]
        parent[j] = parent[j - 1]
        token[j] = token[j - 1]
        j -= 1
    score[j] = s
    parent[j] = p
    token[j] = t
    return count


cdef inline void _stable_sort_desc(double[::1] theta, int[::1] parent,
                                   int[::1] token, unsigned char[::1] fin,
                                   int base, int m) noexcept nogil:
    # Insertion sort by theta descending; equal scores keep selection order.
    cdef int i, j
    cdef double tv
    cdef int pv, kv
    cdef unsigned char fv
    for i in range(1, m):
        tv = theta[base + i]
        pv = parent[base + i]
        kv = token[base + i]
        fv = fin[base + i]
        j = i - 1
        while j >= 0 and theta[base + j] < tv:
            theta[base + j + 1] = theta[base + j]
            parent[base + j + 1] = parent[base + j]
            token[base + j + 1] = token[base + j]
            fin[base + j + 1] = fin[base + j]
            j -= 1
        theta[base + j + 1] = tv
        parent[base + j + 1] = pv
        token[base + j + 1] = kv
        fin[base + j + 1] = fv


def grouped_step(double[::1] theta,
                 unsigned char[::1] fin,
                 int[::1] group_off,
                 double[:, ::1] rows,
                 int[::1] row_of_slot,
                 double lam,
                 int limit,
                 int eos_id,
                 double[::1] counts,
                 double[::1] sel_score,
                 int[::1] sel_parent,
                 int[::1] sel_token,
                 double[::1] out_theta,
                 int[::1] out_parent,
                 int[::1] out_token,
                 unsigned char[::1] out_fin,
                 int[::1] out_off):
    """Advance all groups by one step.

    Slots are laid out group-major per ``group_off``; ``rows`` holds one
    log-prob vector per live slot indexed by ``row_of_slot`` (-1 marks a
    finished slot, which carries over at its frozen score). Group 0 is
    never penalized; later groups subtract ``lam`` per earlier selection
    of a token this step. Outputs are written compactly with group
    boundaries in ``out_off``; ``out_token`` is -1 for carryovers and
    ``out_parent`` is local to the group. ``counts`` must arrive zeroed;
    ``sel_*`` are scratch of length ``limit``.
    """
    cdef int n_groups = group_off.shape[0] - 1
    with nogil:
        _run(theta, fin, group_off, rows, row_of_slot, lam, limit, eos_id,
             counts, sel_score, sel_parent, sel_token,
             out_theta, out_parent, out_token, out_fin, out_off, n_groups)


cdef void _run(double[::1] theta, unsigned char[::1] fin, int[::1] group_off,
               double[:, ::1] rows, int[::1] row_of_slot, double lam, int limit,
               int eos_id, double[::1] counts,
               double[::1] sel_score, int[::1] sel_parent, int[::1] sel_token,
               double[::1] out_theta, int[::1] out_parent, int[::1] out_token,
               unsigned char[::1] out_fin, int[::1] out_off,
               int n_groups) noexcept nogil:
    cdef int vocab = rows.shape[1]
    cdef int g, lo, hi, slot, local, v, count, i, out0, ridx, tok, par
    cdef double s, base, rv
    out_off[0] = 0
    out0 = 0
    for g in range(n_groups):
        lo = group_off[g]
        hi = group_off[g + 1]
        count = 0
        for slot in range(lo, hi):
            local = slot - lo
            if fin[slot]:
                count = _insert(sel_score, sel_parent, sel_token,
                                count, limit, theta[slot], local, -1)
            else:
                ridx = row_of_slot[slot]
                base = theta[slot]
                for v in range(vocab):
                    rv = rows[ridx, v]
                    if rv == -INFINITY:
                        continue
                    s = base + rv
                    if g > 0:
                        s = s + lam * (-counts[v])
                    count = _insert(sel_score, sel_parent, sel_token,
                                    count, limit, s, local, v)
        for i in range(count):
            par = sel_parent[i]
            tok = sel_token[i]
            out_parent[out0 + i] = par
            out_token[out0 + i] = tok
            if tok < 0:
                out_theta[out0 + i] = sel_score[i]
                out_fin[out0 + i] = 1
            else:
                ridx = row_of_slot[lo + par]
                out_theta[out0 + i] = theta[lo + par] + rows[ridx, tok]
                out_fin[out0 + i] = 1 if tok == eos_id else 0
                counts[tok] += 1.0
        _stable_sort_desc(out_theta, out_parent, out_token, out_fin, out0, count)
        out0 += count
        out_off[g + 1] = out0
