"""Independent reference implementations used only to check the package.

Everything here is written the slow, obvious way (plain loops, brute-force
enumeration) on purpose; none of it shares code with the paths under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def naive_plan_eval(beta, gamma, work, quanta, prices, allocation, support_epsilon=1e-6):
    """Loop-based evaluation of latencies, makespan, quanta and cost."""
    mu = len(beta)
    tau = len(beta[0])
    latencies = []
    for i in range(mu):
        total = 0.0
        for j in range(tau):
            share = allocation[i][j]
            if share < support_epsilon:
                continue
            total += beta[i][j] * work[j] * share + gamma[i][j]
        latencies.append(total)
    makespan = max(latencies)
    cost = 0.0
    billed = []
    for i in range(mu):
        if latencies[i] > 0:
            q = math.ceil(latencies[i] / quanta[i])
        else:
            q = 0
        billed.append(q)
        cost += q * prices[i]
    return latencies, makespan, billed, cost


def wls_line_fit(work_values, latencies):
    """Weighted normal equations for latency = beta*work + gamma, w = 1/L^2."""
    s_ww = s_w = s_wn = s_wnn = s_wl = s_wnl = 0.0
    for n, lat in zip(work_values, latencies):
        w = 1.0 / (lat * lat)
        s_w += w
        s_wn += w * n
        s_wnn += w * n * n
        s_wl += w * lat
        s_wnl += w * n * lat
    det = s_wnn * s_w - s_wn * s_wn
    beta = (s_wnl * s_w - s_wn * s_wl) / det
    gamma = (s_wnn * s_wl - s_wn * s_wnl) / det
    return beta, gamma


def black_scholes_call(spot, strike, rate, volatility, maturity):
    """Closed-form European call value."""
    d1 = (math.log(spot / strike) + (rate + 0.5 * volatility**2) * maturity) / (
        volatility * math.sqrt(maturity)
    )
    d2 = d1 - volatility * math.sqrt(maturity)
    phi = lambda x: 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
    return spot * phi(d1) - strike * math.exp(-rate * maturity) * phi(d2)


def enumerate_lp_vertices(c, a_ub, b_ub):
    """Brute-force optimum of min c@x, a_ub@x <= b_ub, x >= 0.

    Enumerates every basic solution of the slack-augmented system and keeps
    the best feasible one. Exponential; use on small instances only.
    """
    a_ub = np.asarray(a_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = a_ub.shape
    full = np.hstack([a_ub, np.eye(m)])
    cost_full = np.concatenate([c, np.zeros(m)])
    best = None
    for basis in itertools.combinations(range(n + m), m):
        cols = full[:, basis]
        try:
            solution = np.linalg.solve(cols, b_ub)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(solution)) or np.any(solution < -1e-9):
            continue
        x = np.zeros(n + m)
        x[list(basis)] = solution
        value = float(cost_full @ x)
        if best is None or value < best:
            best = value
    return best


def compositions(total, parts):
    """All length-``parts`` tuples of nonnegative ints summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for head in range(total + 1):
        for rest in compositions(total - head, parts - 1):
            rows.append([head, *rest])
    return np.array(rows, dtype=np.int64)


def grid_partition_oracle(
    scaled_beta, gamma, quanta, prices, cost_cap=None, resolution=200, chunk=200_000
):
    """Exhaustive grid search over allocations at the given share resolution.

    Support follows positivity: a platform pays setup for a task exactly when
    its gridded share is nonzero (flagging support on a zero share only adds
    latency and cost, so it can never beat the positivity choice). Quantum
    counts derive from latency; allocations whose derived cost busts the cap
    are excluded. Returns the best feasible makespan, or None.
    """
    scaled_beta = np.asarray(scaled_beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    quanta = np.asarray(quanta, dtype=float)
    prices = np.asarray(prices, dtype=float)
    mu, tau = scaled_beta.shape
    shares = compositions(resolution, mu).astype(float) / resolution  # (K, mu)
    positive = shares > 0

    contribs = []
    for j in range(tau):
        contribs.append(shares * scaled_beta[:, j][None, :] + positive * gamma[:, j][None, :])

    def best_of(latency_block):
        makespans = latency_block.max(axis=1)
        if cost_cap is not None:
            counts = np.ceil(latency_block / quanta[None, :])
            costs = counts @ prices
            feasible = costs <= cost_cap * (1 + 1e-9) + 1e-9
            if not feasible.any():
                return None
            return float(makespans[feasible].min())
        return float(makespans.min())

    best = None

    def consider(value):
        nonlocal best
        if value is not None and (best is None or value < best):
            best = value

    k = shares.shape[0]
    if tau == 1:
        consider(best_of(contribs[0]))
    elif tau == 2:
        step = max(1, chunk // k)
        for start in range(0, k, step):
            block = contribs[0][start : start + step, None, :] + contribs[1][None, :, :]
            consider(best_of(block.reshape(-1, mu)))
    elif tau == 3:
        pair_step = max(1, chunk // (k * k) + 1)
        for start in range(0, k, pair_step):
            pair = contribs[0][start : start + pair_step, None, :] + contribs[1][None, :, :]
            pair = pair.reshape(-1, mu)
            inner_step = max(1, chunk // k)
            for p_start in range(0, pair.shape[0], inner_step):
                block = pair[p_start : p_start + inner_step, None, :] + contribs[2][None, :, :]
                consider(best_of(block.reshape(-1, mu)))
    else:
        raise ValueError("grid oracle supports up to 3 tasks")
    return best


def dominance_filter_oracle(points):
    """O(n^2) weak-dominance filter over (cost, makespan) pairs.

    Keeps the first occurrence of duplicates, sorted by cost.
    """
    kept = []
    seen = set()
    for k, (cost, makespan) in enumerate(points):
        if (cost, makespan) in seen:
            continue
        dominated = False
        for q, (c2, m2) in enumerate(points):
            if q == k:
                continue
            if c2 <= cost and m2 <= makespan and (c2 < cost or m2 < makespan):
                dominated = True
                break
        if not dominated:
            kept.append((cost, makespan))
            seen.add((cost, makespan))
    kept.sort()
    return kept
