"""Hot loops of the experiment harness for binary Brier games.

The pair/triple loops behind RP-SWME dominate the efficiency and variance
sweeps, so they are written twice: as ``numba.njit`` kernels and as
vectorized numpy fallbacks with identical semantics.  Set the environment
variable ``WAGERING_NUMBA=0`` (before import) to force the numpy path; the
fallback is also used when numba is not installed.

Exact RP-SWME statistics use group marginals.  Agent ``i``'s payoff depends
only on its own group, and every admissible group has positive probability,
so ``i``'s worst case is the worst over all groups containing ``i``.  The
expected money exchanged is linear in the groups, so it is the sum over
groups of ``P(group) * E[exchanged within group]``.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .randomized import partition_count

try:  # pragma: no cover - import guard
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("WAGERING_NUMBA", "1") != "0"
_TOL = 1e-9


def _njit(fn):
    return numba.njit(cache=True)(fn) if USE_NUMBA else fn


def group_probabilities(N: int) -> tuple[float, float]:
    """``(P(a given pair is a group), P(a given triple is a group))`` of a uniform partition."""
    if N < 2:
        raise ValueError("need at least two agents")
    total = partition_count(N)
    if N % 2 == 0:
        return (partition_count(N - 2) if N > 2 else 1) / total, 0.0
    if N == 3:
        return 0.0, 1.0
    # A pair is a group in every partition of the rest into pairs plus one triple.
    return partition_count(N - 2) / total, 1.0 / math.comb(N, 3)


# ---------------------------------------------------------------------------
# scalar kernels (compiled when numba is available)


@_njit
def _group_rate(p, w):
    """Algorithm-2 common flip rate for one group (binary Brier)."""
    k = p.shape[0]
    W = 0.0
    live = 0
    for i in range(k):
        W += w[i]
        if w[i] > 0:
            live += 1
    if live < 2:
        return 0.0
    A = 0.0
    B = 0.0
    sw = np.empty(k)
    sb = np.empty(k)
    for i in range(k):
        s0 = 1.0 - p[i] * p[i]
        s1 = 1.0 - (p[i] - 1.0) * (p[i] - 1.0)
        sw[i] = min(s0, s1)
        sb[i] = max(s0, s1)
        a = w[i] / W
        A += a * (sw[i] - sb[i])
        B += a * (sw[i] + sb[i])
    rmin = 1.0
    for i in range(k):
        if w[i] <= 0:
            continue
        a = w[i] / W
        d = sw[i] - sb[i]
        r = 0.5 + ((1.0 - a) * d + (A - a * d)) / (2.0 * (2.0 + sw[i] + sb[i] - B))
        if r < rmin:
            rmin = r
    if rmin >= 0.5 - 1e-9:
        return 0.0
    return max(rmin, 0.0)


@_njit
def _flips(u, e, x):
    # Inverse-CDF draw from the row P(X~ | X = x): outcome 0 occupies [0, P(X~=0)).
    if x == 1:
        return u < e
    return u >= 1.0 - e


@_njit
def _group_payoffs(p, w, e, xt, out):
    """Surrogate-WSWM payoffs of one group for surrogate outcomes ``xt``."""
    k = p.shape[0]
    W = 0.0
    for i in range(k):
        W += w[i]
    if W <= 0:
        for i in range(k):
            out[i] = 0.0
        return
    mean = 0.0
    phi = np.empty(k)
    for i in range(k):
        s0 = 1.0 - p[i] * p[i]
        s1 = 1.0 - (p[i] - 1.0) * (p[i] - 1.0)
        if xt[i] == 1:
            phi[i] = ((1.0 - e) * s1 - e * s0) / (1.0 - 2.0 * e)
        else:
            phi[i] = ((1.0 - e) * s0 - e * s1) / (1.0 - 2.0 * e)
        mean += w[i] * phi[i]
    mean /= W
    for i in range(k):
        out[i] = w[i] * (phi[i] - mean)


@_njit
def _group_stats(p, w, q1, worst, exch):
    """Exact SWME on one group.

    Writes each member's worst payoff-to-wager ratio over both outcomes and
    all surrogate patterns into ``worst`` and returns nothing; ``exch[0]``
    receives the expected money exchanged (outcome weighted by ``q1``).
    """
    k = p.shape[0]
    e = _group_rate(p, w)
    xt = np.empty(k, dtype=np.int64)
    pay = np.empty(k)
    for i in range(k):
        worst[i] = 0.0
    total = 0.0
    for x in range(2):
        qx = q1 if x == 1 else 1.0 - q1
        for mask in range(1 << k):
            prob = 1.0
            for i in range(k):
                xt[i] = (mask >> i) & 1
                prob *= (1.0 - e) if xt[i] == x else e
            if prob <= 0.0:
                continue
            _group_payoffs(p, w, e, xt, pay)
            gained = 0.0
            for i in range(k):
                if pay[i] > 0:
                    gained += pay[i]
                if w[i] > 0:
                    ratio = pay[i] / w[i]
                    if ratio < worst[i]:
                        worst[i] = ratio
            total += qx * prob * gained
    exch[0] = total


@_njit
def _rp_swme_exact(p1, w, q1, pair_p, triple_p, risk):
    """Per-agent risk and expected exchange rate of RP-SWME from group marginals."""
    N = p1.shape[0]
    for i in range(N):
        risk[i] = 0.0
    expected = 0.0
    worst = np.empty(3)
    exch = np.empty(1)
    if pair_p > 0:
        gp = np.empty(2)
        gw = np.empty(2)
        for i in range(N):
            for j in range(i + 1, N):
                gp[0] = p1[i]
                gp[1] = p1[j]
                gw[0] = w[i]
                gw[1] = w[j]
                _group_stats(gp, gw, q1, worst, exch)
                risk[i] = max(risk[i], -worst[0])
                risk[j] = max(risk[j], -worst[1])
                expected += pair_p * exch[0]
    if triple_p > 0:
        tp = np.empty(3)
        tw = np.empty(3)
        for i in range(N):
            for j in range(i + 1, N):
                for l in range(j + 1, N):
                    tp[0] = p1[i]
                    tp[1] = p1[j]
                    tp[2] = p1[l]
                    tw[0] = w[i]
                    tw[1] = w[j]
                    tw[2] = w[l]
                    _group_stats(tp, tw, q1, worst, exch)
                    risk[i] = max(risk[i], -worst[0])
                    risk[j] = max(risk[j], -worst[1])
                    risk[l] = max(risk[l], -worst[2])
                    expected += triple_p * exch[0]
    W = 0.0
    for i in range(N):
        W += w[i]
        risk[i] = min(max(risk[i], 0.0), 1.0)
    return expected / W if W > 0 else 0.0


@_njit
def _rp_swme_sample_batch(p1, w, x, u, perm, out):
    """Sampled RP-SWME for ``K`` games given pre-drawn uniforms and permutations."""
    K, N = p1.shape
    n_pairs = N // 2 if N % 2 == 0 else (N - 3) // 2
    gp2 = np.empty(2)
    gw2 = np.empty(2)
    gp3 = np.empty(3)
    gw3 = np.empty(3)
    xt2 = np.empty(2, dtype=np.int64)
    xt3 = np.empty(3, dtype=np.int64)
    pay2 = np.empty(2)
    pay3 = np.empty(3)
    for g in range(K):
        for c in range(n_pairs):
            for m in range(2):
                a = perm[g, 2 * c + m]
                gp2[m] = p1[g, a]
                gw2[m] = w[g, a]
            e = _group_rate(gp2, gw2)
            for m in range(2):
                a = perm[g, 2 * c + m]
                flip = _flips(u[g, a], e, x[g])
                xt2[m] = 1 - x[g] if flip else x[g]
            _group_payoffs(gp2, gw2, e, xt2, pay2)
            for m in range(2):
                out[g, perm[g, 2 * c + m]] = pay2[m]
        if N % 2 == 1:
            for m in range(3):
                a = perm[g, N - 3 + m]
                gp3[m] = p1[g, a]
                gw3[m] = w[g, a]
            e = _group_rate(gp3, gw3)
            for m in range(3):
                a = perm[g, N - 3 + m]
                flip = _flips(u[g, a], e, x[g])
                xt3[m] = 1 - x[g] if flip else x[g]
            _group_payoffs(gp3, gw3, e, xt3, pay3)
            for m in range(3):
                out[g, perm[g, N - 3 + m]] = pay3[m]


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks


def _rates_np(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Algorithm-2 rate for a batch of groups; ``p``, ``w`` have shape ``(G, k)``."""
    s0 = 1.0 - p * p
    s1 = 1.0 - (p - 1.0) ** 2
    sw, sb = np.minimum(s0, s1), np.maximum(s0, s1)
    W = w.sum(axis=1, keepdims=True)
    a = np.divide(w, W, out=np.zeros_like(w), where=W > 0)
    d = sw - sb
    A = (a * d).sum(axis=1, keepdims=True)
    B = (a * (sw + sb)).sum(axis=1, keepdims=True)
    r = 0.5 + ((1.0 - a) * d + (A - a * d)) / (2.0 * (2.0 + sw + sb - B))
    r = np.where(w > 0, r, 1.0)
    rmin = r.min(axis=1)
    e = np.where(rmin >= 0.5 - 1e-9, 0.0, np.maximum(rmin, 0.0))
    return np.where((w > 0).sum(axis=1) < 2, 0.0, e)


def _payoffs_np(p: np.ndarray, w: np.ndarray, e: np.ndarray, xt: np.ndarray) -> np.ndarray:
    s0 = 1.0 - p * p
    s1 = 1.0 - (p - 1.0) ** 2
    e = e[:, None]
    phi1 = ((1.0 - e) * s1 - e * s0) / (1.0 - 2.0 * e)
    phi0 = ((1.0 - e) * s0 - e * s1) / (1.0 - 2.0 * e)
    phi = np.where(xt == 1, phi1, phi0)
    W = w.sum(axis=1, keepdims=True)
    mean = np.divide((w * phi).sum(axis=1, keepdims=True), W, out=np.zeros_like(W), where=W > 0)
    return w * (phi - mean)


def _groups_stats_np(p: np.ndarray, w: np.ndarray, q1: float) -> tuple[np.ndarray, np.ndarray]:
    """Worst ratio ``(G, k)`` and expected exchange ``(G,)`` for a batch of groups."""
    G, k = p.shape
    e = _rates_np(p, w)
    worst = np.zeros((G, k))
    exch = np.zeros(G)
    for x in (0, 1):
        qx = q1 if x == 1 else 1.0 - q1
        for mask in range(1 << k):
            xt = np.array([(mask >> i) & 1 for i in range(k)])
            prob = np.prod(np.where(xt == x, 1.0 - e[:, None], e[:, None]), axis=1)
            pay = _payoffs_np(p, w, e, np.broadcast_to(xt, (G, k)))
            live = prob > 0
            ratio = np.divide(pay, w, out=np.zeros_like(pay), where=w > 0)
            worst = np.where(live[:, None], np.minimum(worst, ratio), worst)
            exch += qx * prob * np.clip(pay, 0.0, None).sum(axis=1)
    return worst, exch


def _rp_swme_exact_np(p1, w, q1, pair_p, triple_p, risk):
    N = p1.shape[0]
    risk[:] = 0.0
    expected = 0.0
    for size, prob in ((2, pair_p), (3, triple_p)):
        if prob <= 0:
            continue
        idx = np.array(list(_combinations(N, size)), dtype=np.intp)
        worst, exch = _groups_stats_np(p1[idx], w[idx], q1)
        np.maximum.at(risk, idx.ravel(), -worst.ravel())
        expected += prob * math.fsum(exch)
    np.clip(risk, 0.0, 1.0, out=risk)
    W = w.sum()
    return expected / W if W > 0 else 0.0


def _combinations(N: int, k: int):
    import itertools

    return itertools.combinations(range(N), k)


def _rp_swme_sample_batch_np(p1, w, x, u, perm, out):
    K, N = p1.shape
    n_pairs = N // 2 if N % 2 == 0 else (N - 3) // 2
    rows = np.arange(K)[:, None]
    blocks = [perm[:, 2 * c: 2 * c + 2] for c in range(n_pairs)]
    if N % 2:
        blocks.append(perm[:, N - 3:])
    for idx in blocks:
        gp, gw = p1[rows, idx], w[rows, idx]
        e = _rates_np(gp, gw)
        ui = u[rows, idx]
        flip = np.where(x[:, None] == 1, ui < e[:, None], ui >= 1.0 - e[:, None])
        xt = np.where(flip, 1 - x[:, None], x[:, None])
        out[rows, idx] = _payoffs_np(gp, gw, e, xt)


# ---------------------------------------------------------------------------
# public dispatchers


def rp_swme_exact_stats(p1, w, q1: float, use_numba: bool | None = None) -> tuple[np.ndarray, float]:
    """Exact per-agent risk and expected money exchange rate of binary-Brier RP-SWME.

    ``p1`` holds each agent's reported probability of outcome 1 and ``q1``
    the happening probability of outcome 1.
    """
    p1 = np.ascontiguousarray(p1, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    N = p1.shape[0]
    pair_p, triple_p = group_probabilities(N)
    risk = np.zeros(N)
    fn = _rp_swme_exact if (USE_NUMBA if use_numba is None else use_numba and USE_NUMBA) else _rp_swme_exact_np
    rate = fn(p1, w, float(q1), pair_p, triple_p, risk)
    return risk, float(rate)


def rp_swme_sample_batch(p1, w, x, u, perm, use_numba: bool | None = None) -> np.ndarray:
    """Realized RP-SWME payoffs ``(K, N)`` from per-agent uniforms and partition permutations.

    Surrogate outcomes are inverse-CDF draws from ``u`` exactly as in
    :func:`wagering.randomized.sample_rp_swme`; consecutive entries of ``perm[k]`` form the pairs and
    the last three the triple when ``N`` is odd.
    """
    p1 = np.ascontiguousarray(p1, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    x = np.ascontiguousarray(x, dtype=np.int64)
    u = np.ascontiguousarray(u, dtype=float)
    perm = np.ascontiguousarray(perm, dtype=np.int64)
    out = np.zeros(p1.shape)
    fn = _rp_swme_sample_batch if (USE_NUMBA if use_numba is None else use_numba and USE_NUMBA) else _rp_swme_sample_batch_np
    fn(p1, w, x, u, perm, out)
    return out
