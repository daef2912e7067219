"""Pure-Python reference implementation of the synchronous message sweep.

Must stay line-for-line parallel to _lbp_cy.pyx: same edge order, same
accumulation order, same expressions.  Every float operation is IEEE double
in both, so results are bit-identical.
"""


def run_sweep(
    in_ptr,
    in_edge,
    esrc,
    erev,
    w,
    diag,
    h,
    dj_prev,
    dh_prev,
    active,
    dj_next,
    dh_next,
    res_h_out,
):
    """One synchronous update of every directed message.

    Message (i -> j) at edge e: collect precision a = J_ii plus incoming
    precision messages to i from all neighbors except j (ascending source
    order), then emit dJ = -w^2 / a and, per active potential p, the mean
    message dh = -w * (h_p[i] + incoming h messages) / a.

    Returns (res_j, breakdown_edge): res_j is the max |change| over precision
    messages, res_h_out[p] gets the same for each active potential, and
    breakdown_edge is the first edge whose collected precision was <= 0
    (-1 when none; the sweep aborts there and dj_next/dh_next are invalid).
    """
    E = esrc.shape[0]
    P = h.shape[0]

    in_ptr_l = in_ptr.tolist()
    in_edge_l = in_edge.tolist()
    esrc_l = esrc.tolist()
    erev_l = erev.tolist()
    w_l = w.tolist()
    diag_l = diag.tolist()
    h_l = h.tolist()
    dj_prev_l = dj_prev.tolist()
    dh_prev_l = dh_prev.tolist()
    active_l = active.tolist()

    dj_next_l = dj_next.tolist()
    dh_next_l = dh_next.tolist()

    res_j = 0.0
    res_h = [0.0] * P

    for e in range(E):
        i = esrc_l[e]
        rev = erev_l[e]
        t0 = in_ptr_l[i]
        t1 = in_ptr_l[i + 1]
        a = diag_l[i]
        for t in range(t0, t1):
            fe = in_edge_l[t]
            if fe == rev:
                continue
            a = a + dj_prev_l[fe]
        if a <= 0.0:
            return res_j, e
        we = w_l[e]
        nj = -we * we / a
        d = nj - dj_prev_l[e]
        if d < 0.0:
            d = -d
        if d > res_j:
            res_j = d
        dj_next_l[e] = nj
        for p in range(P):
            if active_l[p] == 0:
                continue
            hp = h_l[p]
            dhp = dh_prev_l[p]
            b = hp[i]
            for t in range(t0, t1):
                fe = in_edge_l[t]
                if fe == rev:
                    continue
                b = b + dhp[fe]
            nh = -we * b / a
            d = nh - dhp[e]
            if d < 0.0:
                d = -d
            if d > res_h[p]:
                res_h[p] = d
            dh_next_l[p][e] = nh

    dj_next[:] = dj_next_l
    if P:
        dh_next[:, :] = dh_next_l
        res_h_out[:] = res_h
    return res_j, -1
