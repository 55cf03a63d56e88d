# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate ascent; mirrors ``mpego._ascent`` step for step."""

from libc.math cimport log, INFINITY, fabs
from libc.stdlib cimport malloc, free

cdef double TOL = 1e-12
cdef int MAX_SWEEPS = 100


cdef inline double _score(long long n, long long y, double e, bint over,
                          double q_min, double q_max) noexcept nogil:
    cdef double q, s
    if n <= 0:
        return 0.0
    if y == n:
        q = INFINITY
    else:
        q = (y * (1.0 - e)) / ((n - y) * e)
    if over:
        if q < 1.0:
            q = 1.0
        if q > q_max:
            q = q_max
    else:
        if q < q_min:
            q = q_min
        if q > 1.0:
            q = 1.0
    s = log(q) * <double>y - <double>n * log(1.0 - e + q * e)
    return s if s > 0.0 else 0.0


cdef inline bint _better(double s, double best) noexcept nogil:
    return s > best + TOL * (1.0 + fabs(best))


cdef inline bint _before(int a, int b, double ra, double rb, bint over) noexcept nogil:
    if ra == rb:
        return a < b
    if over:
        return ra > rb
    return ra < rb


def score_value(long long n_s, long long sum_y, double e_g, bint over,
                double q_min=1e-6, double q_max=1e6):
    return _score(n_s, sum_y, e_g, over, q_min, q_max)


def ascend(const int[:, ::1] codes, const long long[::1] cell_n, const long long[::1] cell_y,
           const int[::1] n_strata, unsigned char[:, ::1] allowed, double e_g, bint over,
           double q_min, double q_max, long long min_size, trace=None):
    """Coordinate ascent from ``allowed`` (updated in place); returns (score, sweeps)."""
    if trace is not None:
        raise ValueError("trace recording is only available in the pure-Python backend")
    cdef Py_ssize_t n_cells = codes.shape[0]
    cdef int n_feat = codes.shape[1]
    cdef int c_max = allowed.shape[1]
    cdef Py_ssize_t i
    cdef int f, u, k, C, n_order, best_k, sweeps = 0
    cdef long long N, Y, Nt, Yt
    cdef double s, best, current
    cdef bint improved

    cdef int *fail = <int *> malloc(n_cells * sizeof(int))
    cdef long long *n_u = <long long *> malloc(c_max * sizeof(long long))
    cdef long long *y_u = <long long *> malloc(c_max * sizeof(long long))
    cdef double *ratio = <double *> malloc(c_max * sizeof(double))
    cdef int *order = <int *> malloc(c_max * sizeof(int))
    if not fail or not n_u or not y_u or not ratio or not order:
        free(fail); free(n_u); free(y_u); free(ratio); free(order)
        raise MemoryError()

    with nogil:
        N = 0
        Y = 0
        for i in range(n_cells):
            fail[i] = 0
            for f in range(n_feat):
                if allowed[f, codes[i, f]] == 0:
                    fail[i] += 1
            if fail[i] == 0:
                N += cell_n[i]
                Y += cell_y[i]
        current = _score(N, Y, e_g, over, q_min, q_max)

        while sweeps < MAX_SWEEPS:
            sweeps += 1
            improved = False
            for f in range(n_feat):
                C = n_strata[f]
                if C < 2:
                    continue
                for u in range(C):
                    n_u[u] = 0
                    y_u[u] = 0
                for i in range(n_cells):
                    u = codes[i, f]
                    if fail[i] - (allowed[f, u] == 0) == 0:
                        n_u[u] += cell_n[i]
                        y_u[u] += cell_y[i]

                # priority order of non-empty strata (insertion sort, C is small)
                n_order = 0
                for u in range(C):
                    if n_u[u] > 0:
                        ratio[u] = (<double>y_u[u]) / (<double>n_u[u])
                        k = n_order
                        while k > 0 and _before(u, order[k - 1], ratio[u], ratio[order[k - 1]], over):
                            order[k] = order[k - 1]
                            k -= 1
                        order[k] = u
                        n_order += 1

                best = -1.0
                best_k = -1
                N = 0
                Y = 0
                for k in range(1, n_order + 1):
                    if k == n_order and n_order == C:
                        break
                    N += n_u[order[k - 1]]
                    Y += y_u[order[k - 1]]
                    if N < min_size:
                        continue
                    s = _score(N, Y, e_g, over, q_min, q_max)
                    if _better(s, best):
                        best = s
                        best_k = k
                Nt = 0
                Yt = 0
                for u in range(C):
                    Nt += n_u[u]
                    Yt += y_u[u]
                if Nt >= min_size:
                    s = _score(Nt, Yt, e_g, over, q_min, q_max)
                    if _better(s, best):
                        best = s
                        best_k = 0
                if best_k < 0:
                    continue

                # remove the feature's old contribution, apply the new choice, add it back
                for i in range(n_cells):
                    if allowed[f, codes[i, f]] == 0:
                        fail[i] -= 1
                if best_k == 0:
                    for u in range(C):
                        allowed[f, u] = 1
                else:
                    for u in range(C):
                        allowed[f, u] = 0
                    for k in range(best_k):
                        allowed[f, order[k]] = 1
                for i in range(n_cells):
                    if allowed[f, codes[i, f]] == 0:
                        fail[i] += 1

                if _better(best, current):
                    improved = True
                current = best
            if not improved:
                break

    free(fail); free(n_u); free(y_u); free(ratio); free(order)
    return current, sweeps
