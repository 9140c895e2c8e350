"""Integrals of |f|^t over arcs, pseudo-balls, cubes and polar boxes.

Every routine returns, for each requested power t, the logarithm of the
integral of |f|^t over the region (reference measure) and a divergence flag
from the geometric tail test.  Working with logarithms keeps weights such as
e^{delta |x|^2} usable far from the origin.
"""
from __future__ import annotations

import math

import numpy as np

from .quadrature import (QuadratureGrid, gl_nodes, integrate_log, jacobi_left, geometric_tail,
                         check_budget)
from .symbols import Points, Symbol

TWO_PI = 2.0 * math.pi
CHAIN_DEPTH = 20


def interval_rule(lo: float, hi: float, chain_points=(), split_points=(), m: int = 10,
                  depth: int = CHAIN_DEPTH, pieces: int = 1):
    """1-D rule on [lo, hi] with geometric chains toward ``chain_points``.

    Returns (nodes, weights, panel ids, chains) in the layout used by
    :class:`QuadratureGrid`.
    """
    eps = 1e-14 * max(1.0, abs(hi - lo))
    cps = sorted({float(c) for c in chain_points if lo - eps <= c <= hi + eps})
    sps = sorted({float(c) for c in split_points if lo + eps < c < hi - eps})
    brk = sorted(set([lo, hi] + [min(max(c, lo), hi) for c in cps] + sps))
    X, W, P, chains = [], [], [], []
    pid = 0

    def plain(a, b):
        nonlocal pid
        for j in range(pieces):
            aa = a + (b - a) * j / pieces
            bb = a + (b - a) * (j + 1) / pieces
            x, w = gl_nodes(aa, bb, m)
            X.append(x); W.append(w); P.append(np.full(m, pid)); pid += 1

    def chain(end, d):
        nonlocal pid
        ids = []
        for k in range(depth):
            a, b = sorted((end + d * 0.5 ** (k + 1), end + d * 0.5 ** k))
            x, w = gl_nodes(a, b, m)
            X.append(x); W.append(w); P.append(np.full(m, pid)); ids.append(pid); pid += 1
        a, b = sorted((end, end + d * 0.5 ** depth))
        x, w = gl_nodes(a, b, m)
        X.append(x); W.append(w); P.append(np.full(m, pid))
        chains.append((tuple(ids), pid)); pid += 1

    for a, b in zip(brk[:-1], brk[1:]):
        if b - a <= eps:
            continue
        sa = any(abs(a - c) <= eps for c in cps)
        sb = any(abs(b - c) <= eps for c in cps)
        if sa and sb:
            mid = 0.5 * (a + b)
            chain(a, mid - a)
            chain(b, mid - b)
        elif sa:
            chain(a, b - a)
        elif sb:
            chain(b, a - b)
        else:
            plain(a, b)
    return np.concatenate(X), np.concatenate(W), np.concatenate(P), tuple(chains)


def _logs_from_grid(grid: QuadratureGrid, logf: np.ndarray, powers) -> tuple[np.ndarray, np.ndarray]:
    out = np.empty(len(powers))
    div = np.zeros(len(powers), dtype=bool)
    for i, t in enumerate(powers):
        lv = t * logf if t != 0 else np.zeros_like(logf)
        lv = np.where(np.isnan(lv), -np.inf, lv)
        val, res = integrate_log(grid, lv)
        out[i] = val
        div[i] = res.divergent or not math.isfinite(val)
    return out, div


# ---------------------------------------------------------------- arcs

def arc_moments(sym: Symbol, start: float, length: float, powers, m: int = 10):
    """log of (1/2pi) times the integral over the arc [start, start+length] of |f|^t."""
    sing = []
    for p in sym.singular_points():
        a = float(np.angle(p)) % TWO_PI
        for shift in (-TWO_PI, 0.0, TWO_PI):
            if start - 1e-12 <= a + shift <= start + length + 1e-12:
                sing.append(a + shift)
    x, w, pan, chains = interval_rule(start, start + length, sing, m=m)
    grid = QuadratureGrid("HardyCircle", 0, np.exp(1j * x), w / TWO_PI, panel=pan, chains=chains)
    pts = Points(grid.nodes, np.ones(x.shape), np.zeros(x.shape))
    with np.errstate(divide="ignore"):
        logf = sym.log_abs(pts)
    return _logs_from_grid(grid, logf, powers)


# ---------------------------------------------------------------- pseudo-balls on the disk

def _half_width(rho, rc, R):
    arg = np.clip((R - np.abs(rho - rc)) / 2.0, 0.0, 1.0)
    return 2.0 * np.arcsin(arg)


def pseudo_ball_moments(sym: Symbol, center: complex, R: float, gamma: float, powers,
                        m: int = 10, radial: bool | None = None):
    """Integrals of |f|^t over {u : d(u, center) < R} against dA_gamma (disk, n = 1).

    The first entry of the returned logs is always the log measure of the ball
    (power 0 is prepended internally).
    """
    powers = [0.0] + list(powers)
    rc = abs(center)
    tc = float(np.angle(center)) if rc > 0 else 0.0
    if rc == 0:
        # d(0, u) uses the direction e_1 for the origin
        tc = 0.0
    radial = sym.radial if radial is None else radial
    s_max = min(1.0, 1.0 - rc + R)
    sc = 1.0 - rc
    splits = [sc]
    if R > 2.0:
        # beyond |rho - rc| < R - 2 the angular section is the whole circle
        for rr in (rc - (R - 2.0), rc + (R - 2.0)):
            splits.append(1.0 - rr)
    s_lo = max(0.0, 1.0 - min(1.0, rc + R))
    chain_pts = [0.0] if s_lo == 0.0 else []
    x, w, pan, chains = interval_rule(s_lo, s_max, chain_pts, splits, m=m)
    rho = 1.0 - x
    phi = _half_width(rho, rc, R)
    dens = (gamma + 1.0) / math.pi * (x * (2.0 - x)) ** gamma * rho * w
    if radial:
        pts = Points.disk(rho.astype(complex), x * (2.0 - x))
        grid = QuadratureGrid("BergmanDisk", 0, rho.astype(complex), dens * 2.0 * phi, panel=pan, chains=chains)
        with np.errstate(divide="ignore"):
            logf = sym.log_abs(pts)
        return _logs_from_grid(grid, logf, powers)
    sing = [float(np.angle(p)) for p in sym.singular_points()]
    Z, Wt, P, OM = [], [], [], []
    for i in range(x.size):
        if phi[i] <= 0:
            continue
        a, b = tc - phi[i], tc + phi[i]
        foci = []
        for t0 in sing:
            for shift in (-TWO_PI, 0.0, TWO_PI):
                tt = t0 + shift
                if a < tt < b:
                    foci.append(tt)
        brk = [a, b]
        for tt in foci:
            brk.append(tt)
            k = 0
            while math.pi * 0.5 ** k > x[i] / 8.0 and k < 60:
                for sgn in (-1, 1):
                    v = tt + sgn * math.pi * 0.5 ** k
                    if a < v < b:
                        brk.append(v)
                k += 1
        brk = np.unique(np.asarray(brk))
        t, wt = gl_nodes(brk[:-1], brk[1:], m)
        t, wt = t.ravel(), wt.ravel()
        Z.append(rho[i] * np.exp(1j * t)); Wt.append(dens[i] * wt); P.append(np.full(t.size, pan[i]))
        OM.append(np.full(t.size, x[i] * (2.0 - x[i])))
    nodes = np.concatenate(Z)
    grid = QuadratureGrid("BergmanDisk", 0, nodes, np.concatenate(Wt), panel=np.concatenate(P), chains=chains)
    pts = Points.disk(nodes, np.concatenate(OM))
    with np.errstate(divide="ignore"):
        logf = sym.log_abs(pts)
    return _logs_from_grid(grid, logf, powers)


# ---------------------------------------------------------------- cubes in C^n

def _real_to_complex(X):
    return X[..., 0::2] + 1j * X[..., 1::2]


def cube_moments(sym: Symbol, centers, side: float, powers, m: int | None = None):
    """Integrals of |f|^t over axis-parallel cubes of the given side in R^{2n}.

    ``centers`` has shape (N, 2n).  Cubes whose first coordinate range contains
    a kink of the symbol are split there (with a geometric chain toward the kink);
    the others share a tensor Gauss-Legendre rule.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    N, dim = centers.shape
    n = dim // 2
    if m is None:
        m = 8 if dim == 2 else 4
    powers = list(powers)
    logs = np.empty((N, len(powers)))
    div = np.zeros((N, len(powers)), dtype=bool)
    kinks = sym.kinks_x1()
    half = 0.5 * side
    special = np.zeros(N, dtype=bool)
    for k0 in kinks:
        special |= (centers[:, 0] - half <= k0) & (k0 <= centers[:, 0] + half)
    x, w = gl_nodes(-half, half, m)
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    off = np.stack([g.ravel() for g in mesh], axis=-1)
    wm = np.meshgrid(*([w] * dim), indexing="ij")
    wts = np.prod(np.stack([g.ravel() for g in wm], axis=-1), axis=-1)
    logw = np.log(wts)
    idx = np.nonzero(~special)[0]
    per = off.shape[0]
    chunk = max(1, 2_000_000 // per)
    check_budget(int(idx.size) * per, "cube quadrature nodes")
    for c0 in range(0, idx.size, chunk):
        sel = idx[c0:c0 + chunk]
        X = centers[sel][:, None, :] + off[None, :, :]
        pts = Points.plane(_real_to_complex(X).reshape(-1, n))
        with np.errstate(divide="ignore"):
            lf = sym.log_abs(pts).reshape(sel.size, per)
        for i, t in enumerate(powers):
            lv = t * lf + logw[None, :] if t != 0 else np.broadcast_to(logw, lf.shape)
            mx = np.max(lv, axis=1, keepdims=True)
            with np.errstate(invalid="ignore"):
                s = np.sum(np.exp(lv - mx), axis=1)
                logs[sel, i] = mx[:, 0] + np.log(s)
            div[sel, i] = ~np.isfinite(logs[sel, i])
    for j in np.nonzero(special)[0]:
        c = centers[j]
        xr, wr, pan, chains = interval_rule(c[0] - half, c[0] + half, kinks, m=m)
        if dim > 1:
            rest = np.meshgrid(*([x] * (dim - 1)), indexing="ij")
            roff = np.stack([g.ravel() for g in rest], axis=-1)
            rw = np.meshgrid(*([w] * (dim - 1)), indexing="ij")
            rwt = np.prod(np.stack([g.ravel() for g in rw], axis=-1), axis=-1)
        else:
            roff = np.zeros((1, 0)); rwt = np.ones(1)
        X = np.concatenate([np.repeat(xr, roff.shape[0])[:, None], np.tile(roff + c[1:], (xr.size, 1))], axis=1)
        W = np.outer(wr, rwt).ravel()
        Pn = np.repeat(pan, roff.shape[0])
        grid = QuadratureGrid("Fock", 0, _real_to_complex(X), W, panel=Pn, chains=chains)
        with np.errstate(divide="ignore"):
            lf = sym.log_abs(Points.plane(grid.nodes))
        lo, dv = _logs_from_grid(grid, lf, powers)
        logs[j] = lo
        div[j] = dv
    return logs, div


# ---------------------------------------------------------------- polar boxes on the disk

def _box_tensor(s_lo, s_hi, t_lo, t_hi, gamma, m):
    """Tensor rule on a batch of polar boxes against dA_gamma; Gauss-Jacobi in s where s_lo = 0."""
    s_lo = np.asarray(s_lo, float); s_hi = np.asarray(s_hi, float)
    t_lo = np.asarray(t_lo, float); t_hi = np.asarray(t_hi, float)
    xg, wg = gl_nodes(0.0, 1.0, m)
    xj, wj = jacobi_left(m, float(gamma))
    L = (s_hi - s_lo)[:, None]
    touch = (s_lo == 0.0)[:, None]
    s = np.where(touch, L * xj[None, :], s_lo[:, None] + L * xg[None, :])
    # Jacobi weights already carry s^gamma = L^gamma x^gamma
    ws = np.where(touch, L ** (gamma + 1.0) * wj[None, :] * (2.0 - s) ** gamma,
                  L * wg[None, :] * (s * (2.0 - s)) ** gamma)
    ws = ws * (1.0 - s) * (gamma + 1.0) / math.pi
    T = (t_hi - t_lo)[:, None]
    t = t_lo[:, None] + T * xg[None, :]
    wt = T * wg[None, :]
    nodes = (1.0 - s)[:, :, None] * np.exp(1j * t)[:, None, :]
    weights = ws[:, :, None] * wt[:, None, :]
    omr2 = np.broadcast_to((s * (2.0 - s))[:, :, None], nodes.shape)
    B = s_lo.size
    return nodes.reshape(B, -1), weights.reshape(B, -1), np.ascontiguousarray(omr2).reshape(B, -1)


def _log_sums(logf, logw, powers):
    out = np.empty((logf.shape[0], len(powers)))
    for i, t in enumerate(powers):
        lv = (t * logf if t != 0 else 0.0) + logw
        lv = np.where(np.isnan(lv), -np.inf, lv)
        mx = np.max(lv, axis=1, keepdims=True)
        mx = np.where(np.isfinite(mx), mx, 0.0)
        with np.errstate(divide="ignore"):
            out[:, i] = mx[:, 0] + np.log(np.sum(np.exp(lv - mx), axis=1))
    return out


def box_moments(sym: Symbol, s_lo, s_hi, t_lo, t_hi, gamma: float, powers, m: int = 6,
                near_m: int = 14, corner_layers: int = 40):
    """log integrals of |f|^t over polar boxes {1-s_hi <= r < 1-s_lo, t_lo <= t < t_hi} against dA_gamma.

    Boxes far from the symbol's singular boundary points use an m x m rule,
    nearby boxes a finer one, and boxes with a singular point on their outer
    edge are split there and refined in L-shaped layers toward the corner with
    a geometric tail for the remainder.
    """
    s_lo = np.asarray(s_lo, float); s_hi = np.asarray(s_hi, float)
    t_lo = np.asarray(t_lo, float); t_hi = np.asarray(t_hi, float)
    powers = list(powers)
    B = s_lo.size
    out = np.empty((B, len(powers)))
    div = np.zeros((B, len(powers)), dtype=bool)
    sing = [float(np.angle(p)) % TWO_PI for p in sym.singular_points()]
    corner = np.zeros(B, dtype=bool)
    near = np.zeros(B, dtype=bool)
    for a in sing:
        inside = (s_lo == 0.0) & (t_lo - 1e-12 <= a) & (a <= t_hi + 1e-12)
        inside |= (s_lo == 0.0) & (t_hi >= TWO_PI - 1e-12) & (a <= 1e-12)
        corner |= inside
        # distance in the (s, t) chart from the singular point to the box, relative to its size
        dt = np.maximum(0.0, np.maximum(t_lo - a, a - t_hi))
        dt = np.minimum(dt, np.maximum(0.0, np.maximum(t_lo - a - TWO_PI, a + TWO_PI - t_hi)))
        size = np.maximum(s_hi - s_lo, (t_hi - t_lo) * (1.0 - s_lo))
        near |= np.hypot(s_lo, dt) < 3.0 * size
    near &= ~corner
    for mask, mm in ((~near & ~corner, m), (near, near_m)):
        idx = np.nonzero(mask)[0]
        chunk = max(1, 1_500_000 // (mm * mm))
        for c0 in range(0, idx.size, chunk):
            sel = idx[c0:c0 + chunk]
            nodes, w, om = _box_tensor(s_lo[sel], s_hi[sel], t_lo[sel], t_hi[sel], gamma, mm)
            with np.errstate(divide="ignore"):
                lf = sym.log_abs(Points.disk(nodes, om))
                lw = np.log(w)
            out[sel] = _log_sums(lf, lw, powers)
    for j in np.nonzero(corner)[0]:
        out[j], div[j] = _corner_box(sym, s_lo[j], s_hi[j], t_lo[j], t_hi[j], gamma, powers, sing,
                                     near_m, corner_layers)
    div |= ~np.isfinite(out)
    return out, div


def _corner_box(sym, s_lo, s_hi, t_lo, t_hi, gamma, powers, sing, m, layers):
    # split the box at every singular angle it contains, then refine each piece toward its corner
    cuts = [t_lo, t_hi]
    for a in sing:
        for shift in (0.0, TWO_PI):
            if t_lo + 1e-12 < a + shift < t_hi - 1e-12:
                cuts.append(a + shift)
    cuts = sorted(cuts)
    sing_ang = [a for a in sing] + [a + TWO_PI for a in sing]
    total = np.full(len(powers), -np.inf)
    divergent = np.zeros(len(powers), dtype=bool)
    for a, b in zip(cuts[:-1], cuts[1:]):
        at_a = any(abs(a - c) < 1e-12 for c in sing_ang)
        at_b = any(abs(b - c) < 1e-12 for c in sing_ang)
        pieces = []
        if at_a and at_b:
            mid = 0.5 * (a + b)
            pieces = [(a, mid, +1), (b, mid, -1)]
        elif at_a:
            pieces = [(a, b, +1)]
        elif at_b:
            pieces = [(b, a, -1)]
        else:
            nodes, w, om = _box_tensor(np.array([s_lo]), np.array([s_hi]), np.array([a]), np.array([b]), gamma, m)
            with np.errstate(divide="ignore"):
                lf = sym.log_abs(Points.disk(nodes, om))
            total = np.logaddexp(total, _log_sums(lf, np.log(w), powers)[0])
            continue
        for t0, t1, _ in pieces:
            lo, dv = _corner_piece(sym, s_hi, t0, t1, gamma, powers, m, layers)
            total = np.logaddexp(total, lo)
            divergent |= dv
    return total, divergent


def _corner_piece(sym, S, t0, t1, gamma, powers, m, layers):
    """Box [0, S] x [t0, t1] (t1 may be < t0) with the singular point at (s, t) = (0, t0)."""
    T = t1 - t0
    layer_logs = []
    for k in range(layers):
        f_out, f_in = 0.5 ** k, 0.5 ** (k + 1)
        # L-shaped layer: [0, S f_out] x [t0, t0 + T f_out] minus the inner box, as three boxes
        boxes = [
            (S * f_in, S * f_out, 0.0, f_in),
            (S * f_in, S * f_out, f_in, f_out),
            (0.0, S * f_in, f_in, f_out),
        ]
        sl = np.array([b[0] for b in boxes]); sh = np.array([b[1] for b in boxes])
        ta = np.array([t0 + T * b[2] for b in boxes]); tb = np.array([t0 + T * b[3] for b in boxes])
        lo_t = np.minimum(ta, tb); hi_t = np.maximum(ta, tb)
        nodes, w, om = _box_tensor(sl, sh, lo_t, hi_t, gamma, m)
        with np.errstate(divide="ignore"):
            lf = sym.log_abs(Points.disk(nodes, om))
        ls = _log_sums(lf, np.log(w), powers)
        layer_logs.append(np.logaddexp.reduce(ls, axis=0))
    L = np.array(layer_logs)  # (layers, powers)
    out = np.empty(len(powers))
    div = np.zeros(len(powers), dtype=bool)
    for i in range(len(powers)):
        col = L[:, i]
        mx = np.max(col)
        vals = np.exp(col - mx)
        tail, rho, d = geometric_tail(vals)
        if d:
            out[i] = math.inf
            div[i] = True
        else:
            out[i] = mx + math.log(np.sum(vals) + tail)
    return out, div
