"""Compiled tick kernel.

The whole tick runs here so that a 200-producer world costs tens of
microseconds per tick.  All random numbers are drawn by the caller and passed
in; the kernel itself is deterministic.  Evaluation parameter rows use the
layout produced by :func:`pack_params`.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .evaluation import EvaluationParams

# accounts
LENDER, NURSERY, HOUSEHOLDS, FALLBACK = 0, 1, 2, 3
# evaluation roles, rows of the packed parameter table
R_PRODUCER, R_COOP, R_MARKET, R_LENDER = 0, 1, 2, 3
# packed parameter row
P_THRESHOLD = 12
N_SERIES = 13


def pack_params(p: EvaluationParams) -> np.ndarray:
    return np.array(
        [
            *p.top.as_tuple(),
            *p.trust.as_tuple(),
            *p.risk.as_tuple(),
            p.cost.gain_exponent,
            p.cost.loss_exponent,
            p.cost.loss_aversion,
            p.threshold,
        ]
    )


@njit(cache=True)
def volatility(n, m2):
    if n > 1:
        return math.sqrt(m2 / (n - 1))
    return 1.0


@njit(cache=True)
def welford(n, mean, m2, i, j, x):
    n[i, j] += 1.0
    d = x - mean[i, j]
    mean[i, j] += d / n[i, j]
    m2[i, j] += d * (x - mean[i, j])


@njit(cache=True)
def evaluate(prm, member, pa, pb, ga, gb, p_vol, p_scale, z, z_ref):
    """Scalar evaluation; returns (score, trust, risk)."""
    it = pa / (pa + pb)
    rt = ga / (ga + gb)
    e_t = prm[3] * member + prm[4] * it + prm[5] * rt
    s = pa + pb
    ir = pa * pb / (s * s * (s + 1.0))
    s = ga + gb
    rr = ga * gb / (s * s * (s + 1.0))
    e_r = prm[6] * ir + prm[7] * rr + prm[8] * min(p_vol / p_scale, 1.0)
    x = z / z_ref - 1.0
    if x > 0.0:
        c = x ** prm[9]
    elif x == 0.0:
        c = 0.0
    else:
        c = 1.0 - prm[11] * (-x) ** prm[10]
    c = min(max(c, 0.0), 1.0)
    return prm[0] * e_t + prm[1] * (1.0 - e_r) + prm[2] * c, e_t, e_r


@njit(cache=True)
def tick_kernel(tick, u, row, consts, state, outs):
    """Advance one tick.  ``u`` holds this tick's uniforms: N seek draws,
    N permutation keys, then one per random-priced product (buyer-major,
    GCB before fresh)."""
    (
        full, tpy_fresh, conv, ref_price, beh, pw, step, prm, lender_idx, lender_buyer,
        trees, need, potential_eq, member,
        is_coop, buys, price_lo, price_hi, random_price, cap, fallback_price,
    ) = consts
    (
        trust, risk, cash,
        has_loan, loan_principal, loan_repaid, loan_issued, last_default,
        lifetime_principal, lifetime_repaid, loan_counts,
        price, prev_headline, buyer_funds, accounts,
        pair_alpha, pair_beta, glob_alpha, glob_beta,
        pay_n, pay_mean, pay_m2, del_n, del_mean, del_m2, rep_n, rep_mean, rep_m2,
    ) = state
    offered, sold, residue, received, granted, funded, closing, written_off, flow_totals = outs
    N = trees.shape[0]
    B = cap.shape[0]
    L = lender_idx
    processing, penalty, expense, aversion = beh[0], beh[1], beh[2], beh[3]
    overdue_after, memory = beh[4], beh[5]
    raise_rate, cut_rate, vol_scale = beh[6], beh[7], beh[8]
    neg_inf = -np.inf
    seek_draw = u[:N]
    perm = np.argsort(u[N : 2 * N], kind="mergesort")

    # 1. defaults, loan requests and grants
    willing = np.zeros(N, np.bool_)
    loans_out = 0.0
    inputs_total = 0.0
    for i in range(N):
        written_off[i] = False
        if has_loan[i] and tick - loan_issued[i] > overdue_after:
            # default: the lender records it and writes the balance off
            pair_beta[L, i] += 1.0
            glob_beta[i] += 1.0
            last_default[i] = tick
            has_loan[i] = False
            written_off[i] = True
            loan_counts[1] += 1
        if full:
            rec = lifetime_repaid[i] / lifetime_principal[i] if lifetime_principal[i] > 0 else 1.0
            s, _, _ = evaluate(
                prm[R_LENDER], (1.0 if member[i] else 0.0), pair_alpha[L, i], pair_beta[L, i], glob_alpha[i], glob_beta[i],
                volatility(rep_n[0, i], rep_m2[0, i]), need[i], need[i] * rec, need[i],
            )
            willing[i] = s >= prm[R_LENDER, P_THRESHOLD]
        else:
            willing[i] = tick - last_default[i] > memory
        if lender_buyer >= 0:
            lt = trust[i, lender_buyer]
        else:
            lt = pair_alpha[i, L] / (pair_alpha[i, L] + pair_beta[i, L])
        shortfall = need[i] - cash[i]
        short = shortfall > 0
        seek = short and (not has_loan[i]) and seek_draw[i] < 1.0 - aversion * (1.0 - lt)
        granted[i] = seek and willing[i]
        if seek:
            if granted[i]:
                pair_alpha[i, L] += 1.0
                glob_alpha[L] += 1.0
            else:
                pair_beta[i, L] += 1.0
                glob_beta[L] += 1.0
        if granted[i]:
            has_loan[i] = True
            loan_principal[i] = shortfall
            loan_repaid[i] = 0.0
            loan_issued[i] = tick
            lifetime_principal[i] += shortfall
            loans_out += shortfall
            cash[i] = 0.0
            inputs_total += need[i]
            funded[i] = True
        elif short:
            funded[i] = False
        else:
            cash[i] -= need[i]
            inputs_total += need[i]
            funded[i] = True
    accounts[LENDER] -= loans_out
    accounts[NURSERY] += inputs_total

    # 2-3. production and processing
    for i in range(N):
        h = trees[i] * tpy_fresh * (1.0 if funded[i] else penalty)
        offered[0, i] = h * processing * conv
        offered[1, i] = h * (1.0 - processing)
        residue[0, i] = offered[0, i]
        residue[1, i] = offered[1, i]

    # 4. buyer scoring
    order = np.zeros((2, N, B), np.int64)
    accept = np.zeros((2, N, B), np.bool_)
    e_trust = np.zeros((N, B))
    e_risk = np.zeros((N, B))
    score = np.empty(B)
    ok = np.empty(B, np.bool_)
    top_t, top_r, top_c = prm[R_PRODUCER, 0], prm[R_PRODUCER, 1], prm[R_PRODUCER, 2]
    for p in range(2):
        pmax = 0.0
        for b in range(B):
            if buys[p, b] and price[p, b] > pmax:
                pmax = price[p, b]
        for i in range(N):
            for b in range(B):
                if not buys[p, b]:
                    score[b] = neg_inf
                    ok[b] = False
                    if full and p == 0:
                        _, e_trust[i, b], e_risk[i, b] = evaluate(
                            prm[R_PRODUCER], 0.0, pair_alpha[i, N + b], pair_beta[i, N + b],
                            glob_alpha[N + b], glob_beta[N + b], volatility(pay_n[i, b], pay_m2[i, b]),
                            ref_price[0], 1.0, ref_price[0],
                        )
                    continue
                if full:
                    s, et, er = evaluate(
                        prm[R_PRODUCER], 0.0, pair_alpha[i, N + b], pair_beta[i, N + b],
                        glob_alpha[N + b], glob_beta[N + b], volatility(pay_n[i, b], pay_m2[i, b]),
                        ref_price[0], price[p, b], ref_price[p],
                    )
                    if p == 0:
                        e_trust[i, b] = et
                        e_risk[i, b] = er
                    role = R_COOP if is_coop[b] else R_MARKET
                    sb, _, _ = evaluate(
                        prm[role], (1.0 if member[i] else 0.0), pair_alpha[N + b, i], pair_beta[N + b, i],
                        glob_alpha[i], glob_beta[i], volatility(del_n[i, b], del_m2[i, b]),
                        potential_eq[i], price_hi[p, b], price[p, b],
                    )
                    score[b] = s
                    ok[b] = s >= prm[R_PRODUCER, P_THRESHOLD] and sb >= prm[role, P_THRESHOLD]
                else:
                    rterm = 1.0 - risk[i] if is_coop[b] else risk[i]
                    score[b] = top_t * trust[i, b] + top_r * rterm + top_c * (price[p, b] / pmax)
                    ok[b] = True
            # stable descending insertion sort
            for b in range(B):
                order[p, i, b] = b
            for a in range(1, B):
                k = order[p, i, a]
                j = a - 1
                while j >= 0 and score[order[p, i, j]] < score[k]:
                    order[p, i, j + 1] = order[p, i, j]
                    j -= 1
                order[p, i, j + 1] = k
            for r in range(B):
                accept[p, i, r] = ok[order[p, i, r]]

    # 5. allocation under monthly caps, cascading down each producer's ranking
    for p in range(2):
        for i in range(N):
            for b in range(B):
                sold[p, i, b] = 0.0
    remaining = cap.copy()
    want = np.zeros((N, B))
    take = np.ones((N, B))
    for r in range(B):
        total = np.zeros(B)
        for i in range(N):
            for b in range(B):
                want[i, b] = 0.0
                take[i, b] = 1.0
            if accept[0, i, r]:
                want[i, order[0, i, r]] += residue[0, i]
            if accept[1, i, r]:
                want[i, order[1, i, r]] += residue[1, i] * conv
        for i in range(N):
            for b in range(B):
                total[b] += want[i, b]
        for b in range(B):
            if total[b] > remaining[b] and total[b] > 0:
                before = 0.0
                for k in range(N):
                    i = perm[k]
                    o = want[i, b]
                    if o > 0:
                        acc = min(max(remaining[b] - before, 0.0), o)
                        take[i, b] = acc / o
                    before += o
        any_left = False
        for i in range(N):
            for p in range(2):
                if accept[p, i, r]:
                    b = order[p, i, r]
                    got = residue[p, i] * take[i, b]
                    sold[p, i, b] += got
                    residue[p, i] = max(residue[p, i] - got, 0.0)
                if residue[p, i] > 0:
                    any_left = True
        for b in range(B):
            used = 0.0
            for i in range(N):
                used += want[i, b] * take[i, b]
            remaining[b] = max(remaining[b] - used, 0.0)
        if not any_left:
            break

    fallback_total = 0.0
    payouts = 0.0
    for b in range(B):
        received[b] = 0.0
    sold_eq = np.zeros((N, B))
    pay = np.zeros((N, B))
    # per-buyer subtotals, applied once so large balances round only once
    paid_out = np.zeros(B)
    for i in range(N):
        income = 0.0
        for b in range(B):
            sold_eq[i, b] = sold[0, i, b] + sold[1, i, b] * conv
            received[b] += sold_eq[i, b]
            v = 0.0
            if buys[0, b]:
                v += sold[0, i, b] * price[0, b]
            if buys[1, b]:
                v += sold[1, i, b] * price[1, b]
            pay[i, b] = v
            paid_out[b] += v
            income += v
        payouts += income
        fb = residue[0, i] * fallback_price[0] + residue[1, i] * fallback_price[1]
        fallback_total += fb
        cash[i] += income + fb
    for b in range(B):
        buyer_funds[b] -= paid_out[b]
    accounts[FALLBACK] -= fallback_total

    # 6. household expenses, then repayment above a risk-dependent reserve
    spent = 0.0
    repaid = 0.0
    for i in range(N):
        s = min(expense, cash[i])
        cash[i] -= s
        spent += s
        closing[i] = False
        if not has_loan[i]:
            continue
        outstanding = loan_principal[i] - loan_repaid[i]
        spare = max(cash[i] - (1.0 - risk[i]) * need[i], 0.0)
        rp = min(outstanding, spare)
        if rp >= outstanding:
            closing[i] = True
            loan_repaid[i] = loan_principal[i]
        else:
            loan_repaid[i] += rp
        cash[i] -= rp
        lifetime_repaid[i] += rp
        repaid += rp
        if rp > 0:
            pair_alpha[L, i] += 1.0
            glob_alpha[i] += 1.0
            welford(rep_n, rep_mean, rep_m2, 0, i, rp)
        if closing[i]:
            has_loan[i] = False
            loan_counts[0] += 1
    accounts[HOUSEHOLDS] += spent
    accounts[LENDER] += repaid

    # 7. evidence, payment histories, trust and risk attitude
    for b in range(B):
        nb = N + b
        unmet = received[b] < cap[b] * (1.0 - 1e-9)
        for i in range(N):
            if sold_eq[i, b] > 0:
                pair_alpha[i, nb] += 1.0
                glob_alpha[nb] += 1.0
                pair_alpha[nb, i] += 1.0
                glob_alpha[i] += 1.0
                welford(pay_n, pay_mean, pay_m2, i, b, pay[i, b] / sold_eq[i, b])
                welford(del_n, del_mean, del_m2, i, b, sold_eq[i, b])
            elif (member[i] if is_coop[b] else unmet):
                pair_beta[nb, i] += 1.0
                glob_beta[i] += 1.0

    headline = np.empty(B)
    best = 0.0
    moved = 0.0
    p_coop = neg_inf
    p_mkt = neg_inf
    met_coop = 0.0
    n_coop = 0
    for b in range(B):
        headline[b] = price[0, b] if buys[0, b] else price[1, b] / conv
        best = max(best, headline[b])
        moved += abs(headline[b] - prev_headline[b]) / prev_headline[b]
        if is_coop[b]:
            p_coop = max(p_coop, headline[b])
            met_coop += received[b] / cap[b] if cap[b] > 0 else 1.0
            n_coop += 1
        else:
            p_mkt = max(p_mkt, headline[b])
    if B == 1:
        best = max(best, ref_price[0])
    moved /= B
    if n_coop == 0:
        p_coop = ref_price[0]
    if p_mkt == neg_inf:
        p_mkt = ref_price[0]
    t4 = 1.0 - min(moved / vol_scale, 1.0)
    t7 = min(max(0.5 + (p_mkt - p_coop) / p_coop, 0.0), 1.0)
    t8 = met_coop / n_coop if n_coop > 0 else 0.5
    for i in range(N):
        mean_t = 0.0
        for b in range(B):
            t = trust[i, b]
            mean_t += t
            t1 = (1.0 if willing[i] else 0.0) if b == lender_buyer else 0.0
            t2 = headline[b] / best
            trust[i, b] = min(max(t + step * (pw[0] * (t1 - t) + pw[1] * (t2 - t)), 0.0), 1.0)
        t3 = 1.0 - mean_t / B
        t5 = min(cash[i] / need[i], 1.0)
        if has_loan[i]:
            t6 = 0.5
        else:
            t6 = 1.0
        x = risk[i]
        drift = (
            pw[2] * (t3 - x) + pw[3] * (t4 - x) + pw[4] * (t5 - x)
            + pw[5] * (t6 - x) + pw[6] * (t7 - x) + pw[7] * (t8 - x)
        )
        risk[i] = min(max(x + step * drift, 0.0), 1.0)

    # 8. prices for the next tick
    j_draw = 2 * N
    for b in range(B):
        prev_headline[b] = headline[b]
        met = min(max(received[b] / cap[b], 0.0), 1.0) if cap[b] > 0 else 1.0
        for p in range(2):
            if not buys[p, b]:
                continue
            if random_price[b]:
                price[p, b] = price_lo[p, b] + (price_hi[p, b] - price_lo[p, b]) * u[j_draw]
                j_draw += 1
            else:
                f = 1.0 + raise_rate * (1.0 - met) - (cut_rate if met >= 1.0 - 1e-9 else 0.0)
                price[p, b] = min(max(price[p, b] * f, price_lo[p, b]), price_hi[p, b])

    # 9. series row
    tr = e_trust if full else trust
    per_buyer = np.zeros(B)
    for i in range(N):
        for b in range(B):
            per_buyer[b] += tr[i, b]
    per_buyer /= N
    chosen = 0.0
    use_p = 0
    any_gcb = False
    for b in range(B):
        if buys[0, b]:
            any_gcb = True
    if not any_gcb:
        use_p = 1
    mean_r = 0.0
    loans = 0
    total_offer = 0.0
    for i in range(N):
        chosen += tr[i, order[use_p, i, 0]]
        if full:
            for b in range(B):
                mean_r += e_risk[i, b]
        else:
            mean_r += risk[i]
        if has_loan[i]:
            loans += 1
        total_offer += offered[0, i] + offered[1, i] * conv
    mean_r /= N * B if full else N
    n_members = 0
    for i in range(N):
        if member[i]:
            n_members += 1
    for k in range(N_SERIES):
        row[k] = np.nan
    sums = np.zeros(12)  # coop/market: producer trust, share, buyer trust, price, counts
    bt_all = 0.0
    for b in range(B):
        nb = N + b
        bt = 0.0
        cnt = 0
        for i in range(N):
            if is_coop[b] and n_members > 0 and not member[i]:
                continue
            bt += pair_alpha[nb, i] / (pair_alpha[nb, i] + pair_beta[nb, i])
            cnt += 1
        bt /= cnt
        bt_all += bt
        share = 100.0 * received[b] / total_offer if total_offer > 0 else 0.0
        k = 0 if is_coop[b] else 6
        sums[k] += per_buyer[b]
        sums[k + 1] += share
        sums[k + 2] += bt
        sums[k + 3] += headline[b]
        sums[k + 4] += 1.0
    row[2] = per_buyer.sum() / B
    row[3] = bt_all / B
    row[4] = loans
    row[5] = chosen / N
    row[6] = mean_r
    row[7] = sums[1]
    row[8] = sums[7]
    if sums[4] > 0:
        row[0] = sums[0] / sums[4]
        row[9] = sums[2] / sums[4]
        row[11] = sums[3] / sums[4]
    if sums[10] > 0:
        row[1] = sums[6] / sums[10]
        row[10] = sums[8] / sums[10]
        row[12] = sums[9] / sums[10]
    flow_totals[0] = loans_out
    flow_totals[1] = repaid
    flow_totals[2] = inputs_total
    flow_totals[3] = payouts
    flow_totals[4] = fallback_total
    flow_totals[5] = spent


@njit(cache=True)
def run_kernel(t0, U, rows, consts, state, outs):
    for k in range(U.shape[0]):
        tick_kernel(t0 + k, U[k], rows[t0 + k], consts, state, outs)
