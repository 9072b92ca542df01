# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in ``_kernels_py``.

Signatures and arithmetic order match the Python fallback exactly so both
backends produce identical floating-point results.
"""

BACKEND = "cython"


def erlang_b(Py_ssize_t n, double rho):
    cdef double e = 1.0
    cdef Py_ssize_t k
    for k in range(1, n + 1):
        e = rho * e / (k + rho * e)
    return e


def trap_resolvent(Py_ssize_t capacity, Py_ssize_t start, double rho):
    cdef Py_ssize_t c = capacity, i, n
    cdef double diag, sup, rhs, denom
    cdef double cp_prev = 0.0, dp_prev = 0.0, cp_i, dp_i
    for i in range(c):
        n = i + 1
        diag = 1.0 + rho + (n - 1)
        sup = -<double>n if i < c - 1 else 0.0
        rhs = 1.0 if n == start else 0.0
        if i == 0:
            denom = diag
            cp_i = sup / denom
            dp_i = rhs / denom
        else:
            denom = diag + rho * cp_prev
            cp_i = sup / denom
            dp_i = (rhs + rho * dp_prev) / denom
        cp_prev = cp_i
        dp_prev = dp_i
    return rho * dp_prev


def kalman_sweep(double[:] y, double[:] tau, double x0, double p0, double q, double r,
                 double[:] prior, double[:] prior_var, double[:] corrected,
                 double[:] var, double[:] gain):
    cdef double x = x0, p = p0, xm, pm, s, K
    cdef Py_ssize_t k, n = y.shape[0]
    for k in range(n):
        xm = x + tau[k]
        pm = p + q
        s = pm + r
        if s > 0.0:
            K = pm / s
        elif y[k] == xm:
            K = 0.0
        else:
            return k
        x = xm + K * (y[k] - xm)
        p = (1.0 - K) * pm
        prior[k] = xm
        prior_var[k] = pm
        corrected[k] = x
        var[k] = p
        gain[k] = K
    return -1


def mm1_fifo(double[:] inter, double[:] service, Py_ssize_t capacity, Py_ssize_t n_target,
             double[:] arrival, double[:] begin, double[:] end, double[:] idle,
             long long[:] accepted):
    cdef double t = 0.0, last_end = 0.0, b
    cdef Py_ssize_t m = 0, head = 0, lost = 0, i = 0, n = inter.shape[0]
    while i < n and m < n_target:
        if i == 0:
            t = inter[0]
        else:
            t = t + inter[i]
        while head < m and begin[head] <= t:
            head += 1
        if capacity >= 0 and t < last_end and m - head >= capacity:
            lost += 1
            i += 1
            continue
        b = t if t > last_end else last_end
        arrival[m] = t
        begin[m] = b
        end[m] = b + service[i]
        idle[m] = b - last_end if t > last_end else 0.0
        accepted[m] = i
        last_end = end[m]
        m += 1
        i += 1
    return m, i, lost


def trap_trials(double[:] u, Py_ssize_t start, Py_ssize_t capacity, double lam, double mu,
                Py_ssize_t max_trials):
    cdef Py_ssize_t completed = 0, hits = 0, pos = 0, n_u = u.shape[0]
    cdef Py_ssize_t trial_start, n, outcome
    cdef double x
    while completed < max_trials:
        trial_start = pos
        n = start
        outcome = -1
        while outcome < 0:
            if pos >= n_u:
                return completed, hits, trial_start
            x = u[pos] * (lam + n * mu)
            pos += 1
            if x < lam:
                if n == capacity:
                    outcome = 1
                else:
                    n += 1
            elif x < lam + mu:
                outcome = 0
            else:
                n -= 1
        hits += outcome
        completed += 1
    return completed, hits, pos
