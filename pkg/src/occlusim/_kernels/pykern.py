"""Pure-numpy kernel implementations.

The Cython backend (``_core.pyx``) mirrors these functions. Floating-point
expressions are written identically in both (same operand order, same
float64 intermediates) so that outputs agree bit for bit; do not "simplify"
an expression here without changing the other side the same way.
"""

import numpy as np


def paint(ids, vals, cx, cy, radius, pvals):
    """Paint discs into an id map and a value map.

    ``ids`` must be prefilled with -1 and ``vals`` with the background
    values. Discs are painted in index order, so the last (highest draw
    rank) covering disc wins. A pixel (x, y) is covered when its center
    lies strictly within the radius: dx*dx + dy*dy < r*r.
    """
    h, w = ids.shape
    n = cx.shape[0]
    for i in range(n):
        r = radius[i]
        x0 = max(int(np.ceil(cx[i] - r)), 0)
        x1 = min(int(np.floor(cx[i] + r)), w - 1)
        y0 = max(int(np.ceil(cy[i] - r)), 0)
        y1 = min(int(np.floor(cy[i] + r)), h - 1)
        if x0 > x1 or y0 > y1:
            continue
        dx = np.arange(x0, x1 + 1, dtype=np.float64) - cx[i]
        dy = np.arange(y0, y1 + 1, dtype=np.float64) - cy[i]
        inside = dx[None, :] * dx[None, :] + dy[:, None] * dy[:, None] < r * r
        ids[y0 : y1 + 1, x0 : x1 + 1][inside] = i
        vals[y0 : y1 + 1, x0 : x1 + 1][inside] = pvals[i]


_EMPTY_SWEEP = (
    np.empty(0, np.int64),
    np.empty(0, np.int64),
    np.empty(0, np.int64),
    np.empty(0, np.int64),
)


def sweep_pair(v_prev, v_new, ref, last_emit, t_prev_us, t_next_us, contrast, refractory_us):
    """Emit threshold-crossing events for one rendered frame pair.

    Per pixel with a changed log value, k = floor(|v_new - ref| / C) events
    fire at the crossing levels ref + p*C*j (j = 1..k), timestamped by
    linear interpolation between the two frames. ``ref`` advances by p*C*k
    (sub-threshold residual is retained) and ``last_emit`` tracks the last
    emitted timestamp per pixel for monotonicity and refractory handling.

    Returns (t, x, y, p) as int64 arrays in column order (all first
    crossings, then all second crossings, ...); the caller canonicalizes
    the global order later.
    """
    ys, xs = np.nonzero(v_new != v_prev)
    if ys.size == 0:
        return _EMPTY_SWEEP
    l_new = v_new[ys, xs]
    rf = ref[ys, xs]
    delta = l_new - rf
    # the 1e-9 absorbs float rounding when a change lands exactly on the
    # threshold lattice; without it the strict |residual| < C bound can
    # degrade to equality
    k = np.floor(np.abs(delta) / contrast + 1e-9).astype(np.int64)
    act = k > 0
    if not act.any():
        return _EMPTY_SWEEP
    ys = ys[act]
    xs = xs[act]
    l_new = l_new[act]
    rf = rf[act]
    k = k[act]
    l_prev = v_prev[ys, xs]
    pol = np.where(l_new - rf > 0, 1, -1).astype(np.int64)
    step = pol.astype(np.float64) * contrast
    denom = l_new - l_prev
    last = last_emit[ys, xs].copy()

    dt_us = t_next_us - t_prev_us
    out_t, out_x, out_y, out_p = [], [], [], []
    order = np.arange(ys.size)
    j = 1
    while order.size:
        a = order[k[order] >= j]
        if a.size == 0:
            break
        lvl = rf[a] + step[a] * float(j)
        frac = (lvl - l_prev[a]) / denom[a]
        frac = np.minimum(np.maximum(frac, 0.0), 1.0)
        t = t_prev_us + np.floor(frac * float(dt_us)).astype(np.int64)
        t = np.maximum(t, last[a] + 1)
        emit = (last[a] < 0) | (t - last[a] >= refractory_us)
        if emit.any():
            out_t.append(t[emit])
            out_x.append(xs[a][emit])
            out_y.append(ys[a][emit])
            out_p.append(pol[a][emit])
            last[a[emit]] = t[emit]
        order = a
        j += 1

    ref[ys, xs] = rf + step * k.astype(np.float64)
    last_emit[ys, xs] = last
    if not out_t:
        return _EMPTY_SWEEP
    return (
        np.concatenate(out_t),
        np.concatenate(out_x),
        np.concatenate(out_y),
        np.concatenate(out_p),
    )


def dwell_select(
    ev_t,
    ev_p,
    starts,
    targets,
    l0_flat,
    occ_flat,
    contrast,
    eps,
    quiet_us,
    t_begin_us,
    t_end_us,
):
    """Pick a background log level per target pixel from its event timeline.

    ``ev_t``/``ev_p`` hold all events sorted by (flat pixel index, t) with
    ``starts`` as the per-pixel CSR offsets. The integrated level of a pixel
    walks the lattice l0 + k*C; total dwell time (us) is accumulated per
    lattice index k. The level with the longest total dwell that lasts at
    least ``quiet_us`` and sits farther than ``eps`` from the pixel's
    occluder log level wins (ties: lowest lattice index). Pixels with no
    qualifying level fall back to the final integrated level.

    Returns (levels, used_fallback) arrays over ``targets`` (flat indices).
    """
    counts = np.diff(starts)
    n_ev = ev_t.shape[0]
    npx = counts.shape[0]

    n_t = targets.shape[0]
    out_levels = np.empty(n_t, np.float64)
    out_fallback = np.zeros(n_t, bool)

    if n_ev == 0:
        # single segment at k=0 spanning the whole window
        span = t_end_us - t_begin_us
        l0 = l0_flat[targets]
        ok = (span >= quiet_us) & (np.abs(l0 - occ_flat[targets]) > eps)
        out_levels[:] = l0
        out_fallback[:] = ~ok
        return out_levels, out_fallback

    pix = np.repeat(np.arange(npx, dtype=np.int64), counts)
    cs = np.cumsum(ev_p, dtype=np.int64)
    base = np.where(starts[:-1] > 0, cs[starts[:-1] - 1], 0)
    k_after = cs - np.repeat(base, counts)

    is_last = np.zeros(n_ev, bool)
    is_last[starts[1:][counts > 0] - 1] = True
    seg_end = np.where(is_last, np.int64(t_end_us), np.roll(ev_t, -1))
    # segments: one per event (level held after it), plus one initial segment
    # per pixel at k=0 (running to its first event, or the window end)
    first_end = np.full(npx, np.int64(t_end_us))
    active = np.nonzero(counts > 0)[0]
    first_end[active] = ev_t[starts[active]]
    seg_pix = np.concatenate([pix, np.arange(npx, dtype=np.int64)])
    seg_k = np.concatenate([k_after, np.zeros(npx, np.int64)])
    seg_dw = np.concatenate([seg_end - ev_t, first_end - np.int64(t_begin_us)])

    # total dwell per (pixel, lattice index)
    k_lo = min(int(seg_k.min()), 0)
    k_span = int(seg_k.max()) - k_lo + 1
    key = seg_pix * np.int64(k_span) + (seg_k - k_lo)
    order = np.argsort(key, kind="stable")
    key_s = key[order]
    bounds = np.nonzero(np.diff(key_s))[0] + 1
    grp_start = np.concatenate([[0], bounds])
    tot = np.add.reduceat(seg_dw[order], grp_start)
    gpix = key_s[grp_start] // k_span
    gk = key_s[grp_start] % k_span + k_lo

    lvl = l0_flat[gpix] + contrast * gk.astype(np.float64)
    ok = (tot >= quiet_us) & (np.abs(lvl - occ_flat[gpix]) > eps)

    # per pixel: longest total dwell, ties to the lowest lattice index
    sel = np.lexsort((gk[ok], -tot[ok], gpix[ok]))
    spix = gpix[ok][sel]
    first = np.concatenate([[True], spix[1:] != spix[:-1]]) if spix.size else np.empty(0, bool)
    win_pix = spix[first]
    win_lvl = lvl[ok][sel][first]

    chosen = np.full(npx, np.nan)
    chosen[win_pix] = win_lvl

    k_final = np.zeros(npx, np.int64)
    k_final[active] = k_after[starts[1:][counts > 0] - 1]
    final_lvl = l0_flat + contrast * k_final.astype(np.float64)

    got = ~np.isnan(chosen[targets])
    out_levels[:] = np.where(got, chosen[targets], final_lvl[targets])
    out_fallback[:] = ~got
    return out_levels, out_fallback
