# cython: language_level=3, boundscheck=False, wraparound=False
# cython: cdivision=True, initializedcheck=False
"""Compiled chunk drivers for the per-slot simulation loop.

These mirror the pure-Python slot loop in linksched.engine operation for
operation.  Floating-point reductions run over ascending link / row indices
and the build disables FMA contraction, so a run is bit-identical under
either backend.  All state arrays are owned by the caller and updated in
place; each call advances one environment chunk.
"""

from libc.math cimport sqrt


cdef inline long _argmax_rows(double[:, ::1] table, double[::1] wv,
                              long n_rows, long n_links,
                              double* best_val) nogil:
    # First row attaining the max: rows are sorted lexicographically, so this
    # is the lexicographically smallest maximizer.
    cdef long r, k, best = 0
    cdef double s, bv = 0.0
    for r in range(n_rows):
        s = 0.0
        for k in range(n_links):
            s += table[r, k] * wv[k]
        if r == 0 or s > bv:
            bv = s
            best = r
    best_val[0] = bv
    return best


cdef inline double _row_value(double[:, ::1] table, double[::1] wv,
                              long row, long n_links) nogil:
    cdef long k
    cdef double s = 0.0
    for k in range(n_links):
        s += table[row, k] * wv[k]
    return s


def advance_window(long t0, long n_slots, long horizon, long tau, long d,
                   double ucb_c,
                   double[:, ::1] theta, double[:, ::1] arrivals,
                   double[:, ::1] mu,
                   double[:, ::1] table, long[::1] masks,
                   double[::1] q, double[::1] w, double[::1] phi,
                   long[::1] nact,
                   double[:, ::1] ring_b, signed char[:, ::1] ring_x,
                   double[::1] b_prev, signed char[::1] x_prev,
                   double[::1] wbar, double[::1] wmu,
                   double[::1] backlog_out, long[::1] mask_out,
                   int log_regret, double[::1] regret_state,
                   long[::1] frame_out, double[::1] regval_out):
    """Advance a frame-based (sliding-window) policy over one chunk.

    Returns the number of completed frames whose regret was emitted into
    frame_out / regval_out (all zeros unless log_regret).
    """
    cdef long E = q.shape[0]
    cdef long n_rows = table.shape[0]
    cdef long i, t, e, k, pos, idx, best
    cdef double qmax, val, mu_hat, s, bb, mx, ch
    cdef long nf = 0
    cdef double racc = regret_state[0]

    for i in range(n_slots):
        t = t0 + i
        pos = t % tau
        if pos == 0:
            # Frame start: clear the window, freeze normalized queue weights.
            for e in range(E):
                phi[e] = 0.0
                nact[e] = 0
            for k in range(d):
                for e in range(E):
                    ring_b[k, e] = 0.0
                    ring_x[k, e] = 0
            qmax = 0.0
            for e in range(E):
                if q[e] > qmax:
                    qmax = q[e]
            if qmax > 0.0:
                for e in range(E):
                    w[e] = q[e] / qmax
            else:
                for e in range(E):
                    w[e] = 0.0
            for e in range(E):
                wbar[e] = 1.0
        else:
            # Slot t-1-d leaves the window; its entry shares the ring slot the
            # newest feedback is written into.
            idx = (t - 1) % d
            if pos >= d + 1:
                for e in range(E):
                    phi[e] -= ring_b[idx, e]
                    nact[e] -= ring_x[idx, e]
            for e in range(E):
                phi[e] += b_prev[e]
                nact[e] += x_prev[e]
            for e in range(E):
                ring_b[idx, e] = b_prev[e]
                ring_x[idx, e] = x_prev[e]
            for e in range(E):
                if nact[e] > 0:
                    mu_hat = phi[e] / nact[e]
                    val = w[e] * mu_hat + sqrt(ucb_c / nact[e])
                    wbar[e] = val if val < 1.0 else 1.0
                else:
                    wbar[e] = 1.0

        best = _argmax_rows(table, wbar, n_rows, E, &val)
        mask_out[i] = masks[best]

        if log_regret:
            for e in range(E):
                wmu[e] = w[e] * mu[i, e]
            _argmax_rows(table, wmu, n_rows, E, &mx)
            ch = _row_value(table, wmu, best, E)
            racc += mx - ch
            if pos == tau - 1 or t == horizon - 1:
                frame_out[nf] = t // tau
                regval_out[nf] = racc
                nf += 1
                racc = 0.0

        s = 0.0
        for e in range(E):
            bb = table[best, e] * theta[i, e]
            val = q[e] + arrivals[i, e] - bb
            q[e] = val if val > 0.0 else 0.0
            b_prev[e] = bb
            x_prev[e] = <signed char> table[best, e]
            s += q[e]
        backlog_out[i] = s

    regret_state[0] = racc
    return nf


def advance_idealized(long n_slots,
                      double[:, ::1] theta, double[:, ::1] arrivals,
                      double[:, ::1] mu,
                      double[:, ::1] table, long[::1] masks,
                      double[::1] q, double[::1] wq,
                      double[::1] backlog_out, long[::1] mask_out):
    """Advance the full-knowledge benchmark (weights q * mu) over one chunk."""
    cdef long E = q.shape[0]
    cdef long n_rows = table.shape[0]
    cdef long i, e, best
    cdef double val, s, bb

    for i in range(n_slots):
        for e in range(E):
            wq[e] = q[e] * mu[i, e]
        best = _argmax_rows(table, wq, n_rows, E, &val)
        mask_out[i] = masks[best]
        s = 0.0
        for e in range(E):
            bb = table[best, e] * theta[i, e]
            val = q[e] + arrivals[i, e] - bb
            q[e] = val if val > 0.0 else 0.0
            s += q[e]
        backlog_out[i] = s
    return 0
