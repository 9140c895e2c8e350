"""Quadrature grids for the disk, ball, circle and plane.

Boundary behaviour is handled by geometric panels: the radial variable
``s = 1 - r`` is split into panels ``[2^-(k+1), 2^-k]`` and each panel gets a
Gauss-Legendre rule.  Consecutive panels toward a singular end form a chain;
the part of the integral beyond the last panel is estimated from the ratio of
the last two panel sums (a geometric tail).  A ratio >= 1 means the tail is
not summable, and the integral is reported as divergent.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, gammaln

TWO_PI = 2.0 * math.pi


class BudgetExceeded(RuntimeError):
    pass


def node_budget() -> int:
    return int(os.environ.get("WEIGHTLAB_BUDGET", "20000000"))


def check_budget(count: int, what: str = "nodes") -> None:
    limit = node_budget()
    if count > limit:
        raise BudgetExceeded(f"{what}: {count} exceeds budget {limit} (WEIGHTLAB_BUDGET)")


@lru_cache(maxsize=64)
def gauss_legendre(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


def gl_nodes(a, b, m: int):
    """Gauss-Legendre nodes/weights on [a, b]; a, b may be arrays (broadcast on a new last axis)."""
    x, w = gauss_legendre(m)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim or b.ndim:
        a, b = a[..., None], b[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=64)
def jacobi_left(m: int, gamma: float):
    """Nodes and weights on [0, 1] for the weight s^gamma ds."""
    x, w = roots_jacobi(m, 0.0, gamma)
    return 0.5 * (x + 1.0), w * 0.5 ** (gamma + 1.0)


@dataclass(frozen=True)
class IntegralResult:
    value: complex | float
    raw: complex | float
    tail: complex | float
    ratio: float
    divergent: bool

    def __float__(self):
        return float(np.real(self.value))


def geometric_tail(panels: np.ndarray) -> tuple[complex | float, float, bool]:
    """Tail beyond a chain of geometric panels ordered toward the singular end."""
    if panels.size < 2:
        return 0.0, 0.0, False
    j0, j1 = panels[-2], panels[-1]
    a0, a1 = abs(j0), abs(j1)
    if a1 == 0.0:
        return 0.0, 0.0, False
    if a0 == 0.0:
        return j1, math.inf, False
    rho = a1 / a0
    if not math.isfinite(rho) or rho >= 1.0:
        return math.inf, rho, True
    return j1 * rho / (1.0 - rho), rho, False


@dataclass
class QuadratureGrid:
    """Nodes with positive weights for one domain.

    ``panel`` maps each node to a panel id, ``chains`` lists panel id sequences
    ordered toward a singular end together with the id of the terminal panel
    that the geometric tail replaces (-1 when there is none).
    """

    domain: str
    level: int
    nodes: np.ndarray
    weights: np.ndarray
    omr2: np.ndarray | None = None
    panel: np.ndarray | None = None
    chains: tuple = ()
    truncation_radius: float | None = None
    tail_bound: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values, extrapolate: bool = True) -> IntegralResult:
        values = np.asarray(values)
        prod = self.weights * values
        if self.panel is None or not self.chains or not extrapolate:
            s = np.sum(prod)
            return IntegralResult(s, s, 0.0, 0.0, bool(np.isinf(s)) if np.isrealobj(s) else False)
        npan = int(self.panel.max()) + 1
        if np.iscomplexobj(prod):
            sums = (np.bincount(self.panel, prod.real, npan)
                    + 1j * np.bincount(self.panel, prod.imag, npan))
        else:
            sums = np.bincount(self.panel, prod, npan)
        keep = np.ones(npan, dtype=bool)
        tail_total = 0.0
        worst = 0.0
        divergent = False
        for ids, terminal in self.chains:
            if terminal >= 0:
                keep[terminal] = False
            t, rho, div = geometric_tail(sums[list(ids)])
            worst = max(worst, rho)
            if div:
                divergent = True
            else:
                tail_total = tail_total + t
        raw = np.sum(sums[keep])
        if divergent:
            return IntegralResult(math.inf, raw, math.inf, worst, True)
        return IntegralResult(raw + tail_total, raw, tail_total, worst, False)


def level_params(level: int) -> dict:
    """Node counts per refinement level (shared by all grids)."""
    return {
        "m": 6 + 2 * level,
        "depth": 20 + 6 * level,
        "uniform": 32 * 2 ** level,
        "focus_extra": 5,
    }


def _angular_breaks(foci, finest: int) -> np.ndarray:
    """Angular breakpoints on [phi0, phi0 + 2 pi] geometrically graded toward each focus."""
    foci = np.mod(np.asarray(foci, dtype=float), TWO_PI)
    phi0 = float(foci.min())
    pts = [phi0, phi0 + TWO_PI]
    offs = math.pi * 0.5 ** np.arange(0, finest + 1)
    for f in foci:
        rel = (f - phi0) % TWO_PI
        pts.append(phi0 + rel)
        pts.extend(phi0 + np.mod(rel + offs, TWO_PI))
        pts.extend(phi0 + np.mod(rel - offs, TWO_PI))
    b = np.unique(np.asarray(pts))
    b = b[(b >= phi0) & (b <= phi0 + TWO_PI)]
    gaps = np.diff(b)
    keep = np.concatenate([[True], gaps > 1e-15])
    return b[keep]


def _merge_foci(foci, tol=1e-13):
    out = []
    for f in sorted(float(np.mod(x, TWO_PI)) for x in foci):
        if not out or min(abs(f - out[-1]), TWO_PI - abs(f - out[-1])) > tol:
            out.append(f)
    if len(out) > 1 and TWO_PI - (out[-1] - out[0]) <= tol:
        out.pop()
    return tuple(out)


def _angular_rule(foci, finest: int, m: int, uniform: int):
    if not foci:
        t = TWO_PI * np.arange(uniform) / uniform
        return t, np.full(uniform, 1.0 / uniform)
    b = _angular_breaks(foci, finest)
    t, w = gl_nodes(b[:-1], b[1:], m)
    return t.ravel(), w.ravel() / TWO_PI


def _radial_panels(depth: int):
    """Panels in s = 1 - r from the centre outward; the last entry is the terminal panel."""
    pans = [(0.75, 1.0), (0.5, 0.75)]
    pans += [(0.5 ** (k + 1), 0.5 ** k) for k in range(1, depth)]
    return pans


@lru_cache(maxsize=256)
def _disk_grid_cached(gamma: float, level: int, foci: tuple) -> QuadratureGrid:
    prm = level_params(level)
    m, depth = prm["m"], prm["depth"]
    pans = _radial_panels(depth)
    c = (gamma + 1.0) / math.pi
    S, T, W, P = [], [], [], []
    for pid, (lo, hi) in enumerate(pans):
        s, ws = gl_nodes(lo, hi, m)
        dens = c * (s * (2.0 - s)) ** gamma * (1.0 - s) * ws * TWO_PI
        k = max(0, int(round(-math.log2(hi))))
        t, wt = _angular_rule(foci, k + prm["focus_extra"], m, prm["uniform"])
        S.append(np.repeat(s, t.size)); T.append(np.tile(t, s.size))
        W.append(np.outer(dens, wt).ravel()); P.append(np.full(s.size * t.size, pid))
    # terminal panel [0, 2^-depth] with the s^gamma weight built in
    term = len(pans)
    h = 0.5 ** depth
    x, wx = jacobi_left(m, float(gamma))
    s = h * x
    dens = c * h ** (gamma + 1.0) * wx * (2.0 - s) ** gamma * (1.0 - s) * TWO_PI
    t, wt = _angular_rule(foci, depth + prm["focus_extra"], m, prm["uniform"])
    S.append(np.repeat(s, t.size)); T.append(np.tile(t, s.size))
    W.append(np.outer(dens, wt).ravel()); P.append(np.full(s.size * t.size, term))
    s = np.concatenate(S); t = np.concatenate(T)
    nodes = (1.0 - s) * np.exp(1j * t)
    grid = QuadratureGrid(
        domain="BergmanDisk", level=level, nodes=nodes, weights=np.concatenate(W),
        omr2=s * (2.0 - s), panel=np.concatenate(P),
        chains=((tuple(range(len(pans))), term),),
        meta={"gamma": gamma, "foci": list(foci), "depth": depth, "m": m},
    )
    check_budget(grid.size)
    grid.nodes.setflags(write=False)
    grid.weights.setflags(write=False)
    return grid


def disk_grid(gamma: float, level: int = 2, foci=()) -> QuadratureGrid:
    """Polar grid for the normalized measure dA_gamma on the unit disk."""
    if gamma <= -1:
        raise ValueError("gamma must exceed -1")
    return _disk_grid_cached(float(gamma), int(level), _merge_foci(foci))


def ball_constant(n: int, gamma: float) -> float:
    """c_gamma making c_gamma (1-|z|^2)^gamma dv a probability measure on B_n."""
    return math.exp(gammaln(n + gamma + 1.0) - gammaln(n + 1.0) - gammaln(gamma + 1.0))


@lru_cache(maxsize=16)
def ball_grid(n: int, gamma: float, level: int = 1) -> QuadratureGrid:
    """Product grid on B_n (n >= 2): radial panels times a sphere rule.

    The sphere rule writes |zeta_j|^2 through stick-breaking of a flat
    Dirichlet vector (Gauss-Jacobi in each break) and uses uniform angles.
    """
    if n < 2:
        raise ValueError("use disk_grid for n = 1")
    prm = level_params(level)
    m, depth = prm["m"], max(16, prm["depth"] - 8)
    ma = 8 + 4 * level
    # sphere rule
    comps = []
    rem = np.ones(1)
    wsph = np.ones(1)
    for j in range(n - 1):
        k = n - 1 - j  # Beta(1, k) density k (1-x)^(k-1)
        x, w = roots_jacobi(m, float(k - 1), 0.0)
        x = 0.5 * (x + 1.0)
        w = w * 0.5 ** k * k
        comps = [np.repeat(c, x.size) for c in comps]
        comps.append(np.outer(rem, x).ravel())
        rem = np.outer(rem, 1.0 - x).ravel()
        wsph = np.outer(wsph, w).ravel()
    comps.append(rem)
    moduli = np.sqrt(np.stack(comps, axis=-1))
    ang = TWO_PI * np.arange(ma) / ma
    grids = np.meshgrid(*([ang] * n), indexing="ij")
    ang = np.stack([g.ravel() for g in grids], axis=-1)
    zeta = (moduli[:, None, :] * np.exp(1j * ang[None, :, :])).reshape(-1, n)
    wz = np.repeat(wsph, ang.shape[0]) / ang.shape[0]
    c = ball_constant(n, gamma) * 2 * n
    pans = _radial_panels(depth)
    S, Z, W, P = [], [], [], []
    for pid, (lo, hi) in enumerate(pans):
        s, ws = gl_nodes(lo, hi, m)
        dens = c * (1 - s) ** (2 * n - 1) * (s * (2 - s)) ** gamma * ws
        S.append(np.repeat(s, wz.size)); Z.append(np.tile(zeta, (s.size, 1)))
        W.append(np.outer(dens, wz).ravel()); P.append(np.full(s.size * wz.size, pid))
    term = len(pans)
    h = 0.5 ** depth
    x, wx = jacobi_left(m, float(gamma))
    s = h * x
    dens = c * h ** (gamma + 1.0) * wx * (2 - s) ** gamma * (1 - s) ** (2 * n - 1)
    S.append(np.repeat(s, wz.size)); Z.append(np.tile(zeta, (s.size, 1)))
    W.append(np.outer(dens, wz).ravel()); P.append(np.full(s.size * wz.size, term))
    s = np.concatenate(S)
    nodes = (1 - s)[:, None] * np.concatenate(Z)
    grid = QuadratureGrid("BergmanBall", level, nodes, np.concatenate(W), s * (2 - s),
                          np.concatenate(P), ((tuple(range(len(pans))), term),),
                          meta={"gamma": gamma, "n": n})
    check_budget(grid.size)
    return grid


@lru_cache(maxsize=256)
def _circle_grid_cached(level: int, foci: tuple) -> QuadratureGrid:
    prm = level_params(level)
    # deeper panels would put nodes so close to a focus that 1 - e^{it} loses its digits
    m, depth = prm["m"], 18 + 2 * level
    if not foci:
        M = 2 * prm["uniform"]
        t = TWO_PI * np.arange(M) / M
        return QuadratureGrid("HardyCircle", level, np.exp(1j * t), np.full(M, 1.0 / M),
                              meta={"theta": t})
    T, W, P, chains = [], [], [], []
    pid = 0
    fs = list(foci)
    for i, a in enumerate(fs):
        b = fs[i + 1] if i + 1 < len(fs) else fs[0] + TWO_PI
        mid = 0.5 * (a + b)
        for end, d in ((a, mid - a), (b, -(b - mid))):
            ids = []
            for k in range(depth):
                lo, hi = end + d * 0.5 ** (k + 1), end + d * 0.5 ** k
                t, w = gl_nodes(min(lo, hi), max(lo, hi), m)
                T.append(t); W.append(w / TWO_PI); P.append(np.full(m, pid))
                ids.append(pid); pid += 1
            lo, hi = end, end + d * 0.5 ** depth
            t, w = gl_nodes(min(lo, hi), max(lo, hi), m)
            T.append(t); W.append(w / TWO_PI); P.append(np.full(m, pid))
            chains.append((tuple(ids), pid)); pid += 1
    t = np.concatenate(T)
    return QuadratureGrid("HardyCircle", level, np.exp(1j * t), np.concatenate(W),
                          panel=np.concatenate(P), chains=tuple(chains),
                          meta={"theta": t, "foci": list(foci)})


def circle_grid(level: int = 2, foci=()) -> QuadratureGrid:
    """Grid for normalized arc length d(theta)/(2 pi)."""
    return _circle_grid_cached(int(level), _merge_foci(foci))


def plane_grid(n: int, h: float, R: float, center=None) -> QuadratureGrid:
    """Lattice of spacing h in R^{2n} restricted to the ball of radius R about ``center``.

    Weights are h^{2n} (Lebesgue measure).  Nodes are complex with shape (N, n).
    """
    M = int(math.floor(R / h))
    count = (2 * M + 1) ** (2 * n)
    check_budget(count)
    ax = h * np.arange(-M, M + 1)
    mesh = np.meshgrid(*([ax] * (2 * n)), indexing="ij")
    X = np.stack([g.ravel() for g in mesh], axis=-1)
    X = X[np.sum(X * X, axis=1) <= R * R + 1e-12]
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    if center is not None:
        Z = Z + np.asarray(center, dtype=complex).reshape(1, n)
    return QuadratureGrid("Fock", 0, Z, np.full(Z.shape[0], h ** (2 * n)),
                          truncation_radius=R, meta={"h": h, "n": n})


def integrate_log(grid: QuadratureGrid, logvals, extrapolate: bool = True) -> tuple[float, IntegralResult]:
    """Integrate exp(logvals) without overflow; returns (log of the integral, scaled result)."""
    logvals = np.asarray(logvals, dtype=float)
    finite = logvals[np.isfinite(logvals)]
    if np.any(np.isposinf(logvals)) or np.any(np.isnan(logvals)):
        return math.inf, IntegralResult(math.inf, math.inf, math.inf, math.inf, True)
    if finite.size == 0:
        return -math.inf, IntegralResult(0.0, 0.0, 0.0, 0.0, False)
    shift = float(finite.max())
    res = grid.integrate(np.exp(logvals - shift), extrapolate=extrapolate)
    if res.divergent or not np.isfinite(res.value):
        return math.inf, res
    if res.value <= 0:
        return -math.inf, res
    return shift + math.log(float(res.value)), res
