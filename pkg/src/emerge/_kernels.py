"""Hot inner loops, JIT-compiled with numba unless EMERGE_NUMBA=0.

Every kernel here is plain Python over numpy arrays, so the fallback path
(no numba) runs the exact same code un-jitted. Kernels never own RNG state:
callers pass pre-drawn uniforms so that draw order is identical on both
paths and across protocol variants.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

import os

import numpy as np

_FLAG = os.environ.get("EMERGE_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _FLAG not in ("0", "off", "false", "no")

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def categorical_from_u(p, u):
    """Index i such that u falls in the i-th cumulative slot of p.

    Inverse-CDF draw from a probability vector given one uniform in [0,1).
    Clamps to the last index so float round-off in sum(p) cannot escape
    the support.
    """
    acc = 0.0
    n = p.shape[0]
    for i in range(n):
        acc += p[i]
        if u < acc:
            return i
    return n - 1


@njit(cache=True)
def categorical_from_logits(logp, u):
    """Inverse-CDF draw from unnormalized log-weights given one uniform."""
    n = logp.shape[0]
    m = logp[0]
    for i in range(1, n):
        if logp[i] > m:
            m = logp[i]
    if m == -np.inf:
        return 0
    total = 0.0
    for i in range(n):
        total += np.exp(logp[i] - m)
    acc = 0.0
    for i in range(n):
        acc += np.exp(logp[i] - m) / total
        if u < acc:
            return i
    return n - 1


@njit(cache=True)
def game_half_sweep(phi_li, logpi_li, loglik_li, z_li, w, proposals,
                    u_acc, u_z, mode, mutate_w):
    """One half-iteration of the naming game: every object gets one turn.

    The speaker's proposals are resolved before the call (they depend only
    on the speaker's state at the start of the half, plus the channel), so
    this kernel is shared by the plain, articulated and melodic variants.
    Per object: accept/reject the proposed sign against the listener's sign
    table, then Gibbs-update the listener's category for that object.

    mode: 0 = mh, 1 = always, 2 = none. With mode=none, or mutate_w=False,
    ``w`` is never written (callers pass the listener's private signs there).
    Mutates ``z_li`` (and ``w`` when accepting). Returns accepted count.
    """
    n_obj = w.shape[0]
    n_cat = phi_li.shape[0]
    accepted = 0
    logp = np.empty(n_cat)
    for i in range(n_obj):
        if mode != 2:
            wi = w[i]
            ws = proposals[i]
            if mode == 1:
                accept = True
            else:
                denom = phi_li[z_li[i], wi]
                if denom == 0.0:
                    accept = True
                else:
                    ratio = phi_li[z_li[i], ws] / denom
                    accept = u_acc[i] < ratio
            if accept:
                accepted += 1
                if mutate_w:
                    w[i] = ws
        for k in range(n_cat):
            ph = phi_li[k, w[i]]
            if ph > 0.0:
                logp[k] = logpi_li[k] + loglik_li[i, k] + np.log(ph)
            else:
                logp[k] = -np.inf
        z_li[i] = categorical_from_logits(logp, u_z[i])
    return accepted


@njit(cache=True)
def centralized_sweep(phi, logpi, loglik, z, w, u_w, u_z):
    """One systematic-scan sweep of the centralized ("combined brains") Gibbs.

    phi: (A, K, W); logpi: (A, K); loglik: (A, N, K); z: (A, N); w: (N,).
    For each object: draw w_i from the normalized product of the agents' phi
    columns at their current categories, then update every agent's z_i.
    Mutates z and w in place.
    """
    n_agents = phi.shape[0]
    n_cat = phi.shape[1]
    n_signs = phi.shape[2]
    n_obj = w.shape[0]
    pw = np.empty(n_signs)
    logp = np.empty(n_cat)
    for i in range(n_obj):
        total = 0.0
        for s in range(n_signs):
            v = 1.0
            for a in range(n_agents):
                v *= phi[a, z[a, i], s]
            pw[s] = v
            total += v
        if total > 0.0:
            for s in range(n_signs):
                pw[s] /= total
            w[i] = categorical_from_u(pw, u_w[i])
        for a in range(n_agents):
            for k in range(n_cat):
                ph = phi[a, k, w[i]]
                if ph > 0.0:
                    logp[k] = logpi[a, k] + loglik[a, i, k] + np.log(ph)
                else:
                    logp[k] = -np.inf
            z[a, i] = categorical_from_logits(logp, u_z[a, i])


@njit(cache=True)
def fixed_param_game_chain(phis, logpis, logliks, z, w, u, out, mode,
                           burn_in):
    """Whole fixed-parameter two-agent naming-game chain in one call.

    u: (sweeps+burn_in, 2, N, 3) uniforms laid out exactly as the per-half
    blocks the general runner draws, so both produce the same chain. Each
    sweep runs both role orders; the post-burn-in sign configuration after
    every sweep is written into out (sweeps, N).
    """
    total = u.shape[0]
    n_obj = w.shape[0]
    proposals = np.empty(n_obj, dtype=np.int64)
    for t in range(total):
        for h in range(2):
            sp = h
            li = 1 - h
            for i in range(n_obj):
                proposals[i] = categorical_from_u(phis[sp, z[sp, i]],
                                                  u[t, h, i, 0])
            game_half_sweep(phis[li], logpis[li], logliks[li], z[li], w,
                            proposals, u[t, h, :, 1], u[t, h, :, 2],
                            mode, mode != 2)
        if t >= burn_in:
            out[t - burn_in] = w


@njit(cache=True)
def centralized_chain(phis, logpis, logliks, z, w, u_w, u_z, out):
    """Fixed-parameter centralized Gibbs chain; records w after each sweep."""
    for t in range(u_w.shape[0]):
        centralized_sweep(phis, logpis, logliks, z, w, u_w[t], u_z[t])
        out[t] = w


@njit(cache=True)
def melody_gibbs_sweep(logprob_table, ctx_pow, n_sym, seq, mask, u):
    """One single-site Gibbs sweep over a note sequence under a hard mask.

    logprob_table: flat (n_contexts, V) table of log P(note | context) where
    a context is encoded base-(V+1) with the start symbol as digit V.
    ctx_pow: positional weights for the encoding, length n-1 (empty for n=1).
    seq: int array over [0, V); mask: (T, V) booleans, True = allowed.
    Resamples every position from the conditional restricted to the mask;
    mutates seq. Uses one uniform per position.
    """
    t_len = seq.shape[0]
    order_m1 = ctx_pow.shape[0]
    v = n_sym
    logp = np.empty(v)
    for t in range(t_len):
        for c in range(v):
            if not mask[t, c]:
                logp[c] = -np.inf
                continue
            old = seq[t]
            seq[t] = c
            s = 0.0
            # factors whose context window covers position t
            hi = t + order_m1
            if hi > t_len - 1:
                hi = t_len - 1
            for j in range(t, hi + 1):
                ctx = 0
                for d in range(order_m1):
                    pos = j - order_m1 + d
                    if pos < 0:
                        sym = v  # start symbol
                    else:
                        sym = seq[pos]
                    ctx += sym * ctx_pow[d]
                s += logprob_table[ctx, seq[j]]
            seq[t] = old
            logp[c] = s
        seq[t] = categorical_from_logits(logp, u[t])
