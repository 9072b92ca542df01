"""Pure-Python implementations of the numerical inner loops.

Every function here has a byte-for-byte twin in ``_ckernels.pyx``; both take
the same arguments and return the same values so that results never depend
on which backend was importable.
"""


def erlang_b(n, rho):
    """Erlang loss E(n, rho) by the forward recurrence."""
    e = 1.0
    for k in range(1, n + 1):
        e = rho * e / (k + rho * e)
    return e


def trap_resolvent(capacity, start, rho):
    """Probability that the trapping state is hit before the tagged lightpath ends.

    Solves ``(I - A/mu) x = e_start`` for the tridiagonal birth-death
    generator ``A`` on states 1..capacity and returns ``rho * x[capacity]``.
    The matrix is column diagonally dominant, so the Thomas sweep needs no
    pivoting.
    """
    c = capacity
    # row i (state n = i + 1): sub = -rho, diag = 1 + rho + (n - 1), sup = -n
    cp = [0.0] * c
    dp = [0.0] * c
    for i in range(c):
        n = i + 1
        diag = 1.0 + rho + (n - 1)
        sup = -float(n) if i < c - 1 else 0.0
        rhs = 1.0 if n == start else 0.0
        if i == 0:
            denom = diag
            cp[i] = sup / denom
            dp[i] = rhs / denom
        else:
            denom = diag + rho * cp[i - 1]
            cp[i] = sup / denom
            dp[i] = (rhs + rho * dp[i - 1]) / denom
    # only x[c-1] is needed and back substitution never changes the last entry
    return rho * dp[c - 1]


def kalman_sweep(y, tau, x0, p0, q, r, prior, prior_var, corrected, var, gain):
    """Run the scalar predictor-corrector over a measurement series.

    Output arrays are filled in place. Returns -1 on success, or the index of
    the step whose innovation variance vanished while the innovation did not.
    """
    x = x0
    p = p0
    for k in range(len(y)):
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


def mm1_fifo(inter, service, capacity, n_target, arrival, begin, end, idle, accepted):
    """Single-server FIFO queue driven by pre-drawn gaps and service times.

    ``inter[0]`` is the first arrival epoch and ``inter[i]`` the gap from
    offered customer ``i`` to customer ``i + 1``. Customers arriving when
    the server is busy and ``capacity`` others are already waiting are lost (``capacity < 0`` means
    unbounded). Stops once ``n_target`` customers are accepted.

    Returns ``(n_accepted, n_offered, n_lost)``.
    """
    t = 0.0
    last_end = 0.0
    m = 0
    head = 0
    lost = 0
    i = 0
    n = len(inter)
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


def trap_trials(u, start, capacity, lam, mu, max_trials):
    """Monte-Carlo trials of the embedded jump chain of the trapping model.

    Each step consumes one uniform from ``u``. In state ``n`` the competing
    rates are birth ``lam`` (trap if ``n == capacity``), tagged departure
    ``mu`` and other departures ``(n - 1) * mu``.

    Returns ``(completed, hits, used)``; a trial cut short by the end of
    ``u`` is abandoned and ``used`` points at its first uniform.
    """
    completed = 0
    hits = 0
    pos = 0
    n_u = len(u)
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


BACKEND = "python"

__all__ = [
    "BACKEND",
    "erlang_b",
    "kalman_sweep",
    "mm1_fifo",
    "trap_resolvent",
    "trap_trials",
]
