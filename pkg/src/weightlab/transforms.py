"""Reproducing kernels and the Berezin, Poisson and heat transforms.

Integrals against powers of the normalized kernel are computed after the
change of variables u = phi_z(v).  Because |k_z(phi_z(v))| = 1 / |k_z(v)| and
the pulled-back measure is |k_z(v)|^2 times the reference measure, an
integral of h |k_z|^e becomes an integral of (h o phi_z) |k_z|^(2 - e), whose
kernel factor is bounded for fixed z.  The remaining singularities of
h o phi_z sit at phi_z of the symbol's singular boundary points, and the
grids are graded toward those angles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import SpaceParams, mobius_ball, mobius_disk
from .quadrature import (QuadratureGrid, ball_grid, circle_grid, disk_grid, integrate_log,
                         plane_grid, level_params, check_budget)
from .symbols import Points, Symbol, as_symbol, ExpQuadReal

CONVERGED_RTOL = 1e-6
DIVERGENCE_FACTOR = 1.5
KINDS = ("BergmanK", "BergmanNormalized", "HardyNormalized", "FockReproducing", "Heat")


class KernelSingular(ArithmeticError):
    """1 - <z, u> vanished (boundary contact)."""


class DivergentTransform(ArithmeticError):
    pass


@dataclass
class TransformResult:
    value: float
    error: float
    verdict: str  # Convergent, Divergent, Inconclusive
    levels: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return self.verdict != "Divergent"

    def to_dict(self) -> dict:
        v = self.value
        if np.iscomplexobj(v):
            v = [float(np.real(v)), float(np.imag(v))]
        elif not math.isfinite(v):
            v = "inf"
        return {"value": v, "error": self.error if math.isfinite(self.error) else "inf",
                "verdict": self.verdict, "levels": [x if math.isfinite(x) else "inf" for x in self.levels],
                "meta": self.meta}


def decide(values: list[float], divergent_flags: list[bool]) -> tuple[str, float]:
    """Two-level rule: factor > 1.5 means divergent, relative change < 1e-6 means convergent."""
    if any(divergent_flags) or not all(math.isfinite(v) for v in values):
        return "Divergent", math.inf
    if len(values) < 2:
        return "Inconclusive", math.nan
    a, b = abs(values[-2]), abs(values[-1])
    err = abs(values[-1] - values[-2])
    if a == 0.0 and b == 0.0:
        return "Convergent", 0.0
    lo, hi = min(a, b), max(a, b)
    if lo == 0.0 or hi / lo > DIVERGENCE_FACTOR:
        return "Divergent", err
    if err <= CONVERGED_RTOL * hi:
        return "Convergent", err
    return "Inconclusive", err


# ---------------------------------------------------------------- kernels

def _inner(z, u):
    z = np.asarray(z, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if z.ndim == 0 and u.ndim == 0:
        return z * np.conj(u)
    return np.sum(np.atleast_1d(z) * np.conj(np.atleast_1d(u)), axis=-1)


def _sqnorm(z):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return float(np.sum((z * z.conj()).real))


def kernel_eval(kind: str, z, u, params: SpaceParams | None = None, t: float | None = None):
    """Evaluate one of the reproducing kernels at a single pair of points.

    BergmanK(z, u) = (1 - <z, u>)^-(n+1+gamma); BergmanNormalized(z, u) = k_z(u);
    HardyNormalized(z, u) = (1-|z|^2)^(n/2) / (1 - <u, z>)^n; FockReproducing = e^{alpha <z, u>};
    Heat(z, u) is the heat kernel in R^{2n} at time t (default 1/(4 alpha)) evaluated at z - u.
    """
    params = params or SpaceParams()
    n = params.n
    if kind == "Heat":
        t = 1.0 / (4.0 * params.alpha) if t is None else t
        d = _sqnorm(np.atleast_1d(np.asarray(z, dtype=complex)) - np.atleast_1d(np.asarray(u, dtype=complex)))
        return complex((4.0 * math.pi * t) ** (-n) * math.exp(-d / (4.0 * t)))
    if kind == "FockReproducing":
        return complex(np.exp(params.alpha * _inner(z, u)))
    c = n + 1 + params.gamma
    if kind == "BergmanK":
        base = 1.0 - _inner(z, u)
        if base == 0:
            raise KernelSingular("1 - <z, u> = 0")
        return complex(np.exp(-c * np.log(base)))
    if kind in ("BergmanNormalized", "HardyNormalized"):
        expo = c if kind == "BergmanNormalized" else n
        base = 1.0 - _inner(u, z)
        if base == 0:
            raise KernelSingular("1 - <u, z> = 0")
        omr = 1.0 - _sqnorm(z)
        if omr <= 0:
            raise KernelSingular("z must lie inside the ball")
        return complex(omr ** (expo / 2.0) * np.exp(-expo * np.log(base)))
    raise ValueError(f"unknown kernel kind {kind!r}")


def log_abs_kernel(z, v, expo: float, n: int = 1):
    """log |k_z(v)| for the kernel (1-|z|^2)^(expo/2) / (1 - <v, z>)^expo, vectorized over v."""
    if n == 1 and np.ndim(z) == 0:
        base = 1.0 - v * np.conj(z)
        return 0.5 * expo * math.log1p(-abs(z) ** 2) - expo * np.log(np.abs(base))
    z = np.asarray(z, dtype=complex)
    base = 1.0 - np.asarray(v) @ z.conj()
    return 0.5 * expo * math.log1p(-_sqnorm(z)) - expo * np.log(np.abs(base))


# ---------------------------------------------------------------- pulled-back integrals

def _foci_disk(sym: Symbol | None, z: complex) -> tuple:
    foci = []
    if sym is not None:
        for s in sym.singular_points():
            foci.append(float(np.angle(mobius_disk(z, s))))
    if foci and abs(z) > 0:
        foci.append(float(np.angle(z)))
    return tuple(foci)


def _as_point(z, n: int):
    if n == 1:
        zz = np.asarray(z, dtype=complex)
        return complex(zz.reshape(-1)[0]) if zz.size == 1 else complex(zz)
    return np.asarray(z, dtype=complex).reshape(n)


def _pullback_points(space: str, z, grid: QuadratureGrid, n: int):
    v = grid.nodes
    if space == "HardyCircle":
        w = mobius_disk(z, v)
        return Points(w, np.ones(w.shape), np.zeros(w.shape), None)
    if n == 1:
        w = mobius_disk(z, v)
        omr2 = (1.0 - abs(z) ** 2) * grid.omr2 / np.abs(1.0 - np.conj(z) * v) ** 2
        return Points.disk(w, omr2)
    w = mobius_ball(z, v)
    omr2 = (1.0 - _sqnorm(z)) * grid.omr2 / np.abs(1.0 - v @ np.conj(z)) ** 2
    return Points.ball(w, omr2)


def _grid_for(space: str, z, sym, gamma: float, n: int, level: int) -> QuadratureGrid:
    if space == "HardyCircle":
        foci = _foci_disk(sym, z) if sym is not None else ()
        if not foci and abs(z) > 0.5:
            foci = (float(np.angle(z)),)
        return circle_grid(level, foci)
    if n == 1:
        foci = _foci_disk(sym, z) if sym is not None else ()
        return disk_grid(gamma, level, foci)
    return ball_grid(n, gamma, max(0, level - 1))


def kernel_moment_level(space: str, sym: Symbol | None, t: float, z, e: float, gamma: float = 0.0,
                        n: int = 1, level: int = 2, terms=None) -> tuple[float, bool]:
    """log of the integral of |sym|^t |k_z|^e against the reference measure, at one grid level.

    ``terms`` may replace (sym, t) by a list of (symbol, power) pairs whose
    log-moduli are summed.  Returns (log value, divergent flag).
    """
    z = _as_point(z, 1 if space in ("HardyCircle", "BergmanDisk") else n)
    if terms is None:
        terms = [] if sym is None or t == 0 else [(sym, t)]
    focus_sym = _CombinedSingular([s for s, _ in terms])
    grid = _grid_for(space, z, focus_sym, gamma, n, level)
    pts = _pullback_points(space, z, grid, n)
    expo = 1.0 if space == "HardyCircle" else (n + 1 + gamma)
    if space == "HardyCircle":
        expo = float(n)
    logv = np.zeros(grid.size)
    for s, p in terms:
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = logv + p * s.log_abs(pts)
    if e != 2.0:
        logv = logv + (2.0 - e) * log_abs_kernel(z, grid.nodes, expo, 1 if np.ndim(z) == 0 else n)
    logv = np.where(np.isnan(logv), -np.inf, logv)
    lv, res = integrate_log(grid, logv)
    return lv, bool(res.divergent or not math.isfinite(lv))


class _CombinedSingular(Symbol):
    def __init__(self, syms):
        self.syms = syms

    def singular_points(self):
        out = []
        for s in self.syms:
            for p in s.singular_points():
                if all(abs(p - q) > 1e-14 for q in out):
                    out.append(p)
        return out


def kernel_moment(space: str, sym: Symbol | None, t: float, z, e: float, gamma: float = 0.0, n: int = 1,
                  level: int = 2, terms=None) -> TransformResult:
    """Integral of |sym|^t |k_z|^e with the two-level convergence decision."""
    levels = [max(0, level - 1), level]
    logs, flags = [], []
    for L in levels:
        lv, div = kernel_moment_level(space, sym, t, z, e, gamma, n, L, terms)
        logs.append(lv)
        flags.append(div)
    vals = [math.exp(v) if math.isfinite(v) and v < 700 else (math.inf if v > 0 else 0.0) for v in logs]
    if all(math.isfinite(v) for v in logs) and not any(flags):
        # compare in the log domain so huge values still get a verdict
        diff = abs(logs[1] - logs[0])
        if diff > math.log(DIVERGENCE_FACTOR):
            verdict, err = "Divergent", math.inf
        elif diff <= CONVERGED_RTOL:
            verdict, err = "Convergent", abs(vals[1] - vals[0])
        else:
            verdict, err = "Inconclusive", abs(vals[1] - vals[0])
    else:
        verdict, err = "Divergent", math.inf
    value = vals[-1] if verdict != "Divergent" else math.inf
    return TransformResult(value, err, verdict, vals, {"log_value": logs[-1], "levels_used": levels})


# ---------------------------------------------------------------- transforms

def berezin(f, z, params: SpaceParams | None = None, level: int = 2) -> TransformResult:
    """B_gamma(f)(z) for a nonnegative symbol f on the disk or ball."""
    params = params or SpaceParams()
    f = as_symbol(f)
    space = "BergmanDisk" if params.n == 1 else "BergmanBall"
    return kernel_moment(space, f, 1.0, z, 2.0, params.gamma, params.n, level)


def twisted_berezin(f, z, s: float, t: float, params: SpaceParams | None = None,
                    level: int = 2) -> TransformResult:
    """B_gamma(|f k_z^s|^t)(z) = integral of |f|^t |k_z|^(s t + 2) dv_gamma."""
    params = params or SpaceParams()
    f = as_symbol(f)
    e = s * t + 2.0
    space = "BergmanDisk" if params.n == 1 else "BergmanBall"
    res = kernel_moment(space, f, t, z, e, params.gamma, params.n, level)
    res.meta["kernel_exponent"] = e
    if e <= 0:
        # for fixed z the kernel is bounded above and below, so this only matters uniformly in z
        res.meta["warning"] = "kernel exponent s*t + 2 <= 0"
        warnings.warn("twisted_berezin: kernel exponent s*t + 2 <= 0", RuntimeWarning, stacklevel=2)
    return res


def hardy_moment(f, z, t: float, e: float, level: int = 2) -> TransformResult:
    """Integral over the circle of |f|^t |k_z|^e with the Hardy normalized kernel."""
    return kernel_moment("HardyCircle", as_symbol(f) if f is not None else None, t, z, e, level=level)


def poisson_hat(f, z, level: int = 2) -> TransformResult:
    """Poisson extension of a circle function at z.

    ``f`` is a symbol (evaluated on the circle) or a callable taking unit-modulus
    complex points; complex values are allowed.
    """
    z = complex(z)
    sym = as_symbol(f) if isinstance(f, (str, Symbol)) else None
    vals = []
    div = []
    for L in (max(0, level - 1), level):
        grid = circle_grid(L, _foci_disk(sym, z) if sym is not None else ((float(np.angle(z)),) if abs(z) > 0.5 else ()))
        w = mobius_disk(z, grid.nodes)
        if sym is not None:
            fv = sym.value(Points(w, np.ones(w.shape), np.zeros(w.shape)))
        else:
            fv = np.asarray(f(w))
        r = grid.integrate(fv)
        vals.append(complex(r.value) if np.iscomplexobj(fv) else float(r.value))
        div.append(r.divergent)
    mags = [abs(v) for v in vals]
    verdict, err = decide(mags, div)
    if verdict != "Divergent":
        err = abs(vals[1] - vals[0])
        if err <= CONVERGED_RTOL * max(mags[1], 1e-300) or err < 1e-14:
            verdict = "Convergent"
    return TransformResult(vals[-1], err, verdict, mags, {"space": "HardyCircle"})


def heat_radius(alpha_eff: float, quad: float, lin: float, deg: int, zabs: float, n: int, tol: float) -> tuple[float, float]:
    """Truncation radius about z and the peak offset for exp(-alpha|v|^2) times the growth bound."""
    a = alpha_eff - quad
    b = 2.0 * quad * zabs + lin
    vstar = b / (2.0 * a)

    def g(rho):
        return -a * rho * rho + b * rho + deg * math.log1p(zabs + rho) + (2 * n - 1) * math.log1p(rho)

    target = g(vstar) - math.log(1.0 / tol)
    lo, hi = vstar, vstar + 1.0
    while g(hi) > target:
        hi = vstar + 2.0 * (hi - vstar)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi, vstar


def heat_spacing(alpha: float, level: int, tol: float = 1e-13) -> float:
    return math.pi / math.sqrt(alpha * math.log(1.0 / tol)) * 2.0 ** (-(level - 2) / 2.0)


def heat_grid(z, alpha: float, sym_list, n: int = 1, level: int = 2, tol: float = 1e-10) -> QuadratureGrid:
    """Lattice about z sized for the Gaussian exp(-alpha|z-u|^2) times the symbols' growth."""
    z = np.asarray(z, dtype=complex).reshape(n)
    quad = lin = 0.0
    deg = 0
    for s, p in sym_list:
        q_, l_, d_ = s.growth()
        quad += abs(p) * q_
        lin += abs(p) * l_
        deg += int(math.ceil(abs(p) * d_))
    if quad >= alpha:
        raise DivergentTransform(f"growth e^({quad}|x|^2) is not integrable against e^(-{alpha}|x|^2)")
    R, _ = heat_radius(alpha, quad, lin, deg, float(np.linalg.norm(z)), n, tol)
    h = heat_spacing(alpha - quad if quad else alpha, level)
    kinks = sorted({k for s, _ in sym_list for k in s.kinks_x1() if abs(k - z[0].real) < R})
    grid = _kinked_grid(z, h, R, n, kinks, level) if kinks else plane_grid(n, h, R, center=z)
    grid.tail_bound = tol
    grid.level = level
    return grid


def _kinked_grid(z, h: float, R: float, n: int, kinks, level: int) -> QuadratureGrid:
    """Box grid graded toward x_1 = kink in the first real axis, trapezoid elsewhere.

    Panels follow the x_1 rule so the geometric tail applies to the whole slab.
    """
    from .regions import interval_rule
    c = z[0].real
    pieces = max(1, int(math.ceil(R / (2.0 * h))))
    x1, w1, p1, chains = interval_rule(c - R, c + R, chain_points=kinks, m=8 + 2 * level,
                                       depth=24 + 4 * level, pieces=pieces)
    M = int(math.floor(R / h))
    ax = h * np.arange(-M, M + 1)
    rest = [ax] * (2 * n - 1)
    count = x1.size * ax.size ** (2 * n - 1)
    check_budget(count)
    mesh = np.meshgrid(np.arange(x1.size), *rest, indexing="ij")
    i1 = mesh[0].ravel()
    X = np.stack([x1[i1]] + [g.ravel() for g in mesh[1:]], axis=-1)
    off = np.column_stack([z.real, z.imag]).ravel()
    X[:, 1:] += off[1:]
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    W = w1[i1] * h ** (2 * n - 1)
    return QuadratureGrid("Fock", level, Z, W, panel=p1[i1], chains=chains, truncation_radius=R,
                          meta={"h": h, "n": n, "kinks": list(kinks)})


def heat_tilde_terms(terms, z, alpha: float, n: int = 1, level: int = 2) -> TransformResult:
    """Heat transform of prod |s|^p over (s, p) in terms, in the log domain."""
    logs = []
    meta = {}
    for L in (max(0, level - 1), level):
        grid = heat_grid(z, alpha, terms, n, L)
        pts = Points.plane(grid.nodes)
        zz = np.asarray(z, dtype=complex).reshape(1, n)
        d2 = np.sum(np.abs(grid.nodes - zz) ** 2, axis=-1)
        logv = -alpha * d2 + n * math.log(alpha / math.pi)
        for s, p in terms:
            with np.errstate(divide="ignore"):
                logv = logv + p * s.log_abs(pts)
        lv, res = integrate_log(grid, logv)
        logs.append(lv)
        meta = {"truncation_radius": grid.truncation_radius, "tail_bound": grid.tail_bound,
                "spacing": grid.meta["h"], "nodes": grid.size}
    diff = abs(logs[1] - logs[0])
    value = math.exp(logs[1]) if logs[1] < 700 else math.inf
    verdict = "Convergent" if diff <= CONVERGED_RTOL else "Inconclusive"
    meta["log_value"] = logs[1]
    return TransformResult(value, value * diff if math.isfinite(value) else math.inf, verdict,
                           [math.exp(min(v, 700)) for v in logs], meta)


def heat_tilde(f, z, alpha: float, n: int = 1, level: int = 2) -> TransformResult:
    """(alpha/pi)^n times the integral of exp(-alpha|z-u|^2) f(u) over C^n.

    Positive weight families are integrated in the log domain; signed families
    (``linear``, ``logabs``) are integrated directly.
    """
    f = as_symbol(f)
    if isinstance(f, ExpQuadReal) and f.delta >= alpha:
        raise DivergentTransform("expquad with delta >= alpha has a divergent heat transform")
    if f.positive:
        return heat_tilde_terms([(f, 1.0)], z, alpha, n, level)
    return _heat_signed(f, z, alpha, n, level)


def _heat_signed(f, z, alpha, n, level):
    vals = []
    for L in (max(0, level - 1), level):
        grid = heat_grid(z, alpha, [(f, 1.0)], n, L)
        zz = np.asarray(z, dtype=complex).reshape(1, n)
        d2 = np.sum(np.abs(grid.nodes - zz) ** 2, axis=-1)
        ker = (alpha / math.pi) ** n * np.exp(-alpha * d2)
        vals.append(grid.integrate(ker * f.value(Points.plane(grid.nodes)), extrapolate=False).value)
    err = abs(vals[1] - vals[0])
    scale = max(abs(vals[1]), 1e-300)
    verdict = "Convergent" if err <= CONVERGED_RTOL * scale or err < 1e-13 else "Inconclusive"
    v = vals[1]
    return TransformResult(v if np.iscomplexobj(v) and np.imag(v) != 0 else float(np.real(v)), err, verdict,
                           [abs(x) for x in vals], {})


def grid_build(params: SpaceParams, level: int = 2, **options) -> QuadratureGrid:
    """Reference grid for a space: normalized measures on disk, ball and circle, Lebesgue on the plane."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if params.space == "BergmanDisk":
        return disk_grid(params.gamma, level, options.get("foci", ()))
    if params.space == "BergmanBall":
        return ball_grid(params.n, params.gamma, level)
    if params.space == "HardyCircle":
        return circle_grid(level, options.get("foci", ()))
    h = options.get("h") or heat_spacing(params.alpha, level)
    R = options.get("R") or math.sqrt(math.log(1e10) / params.alpha) * 1.5
    g = plane_grid(params.n, h, R, options.get("center"))
    g.level = level
    g.tail_bound = math.exp(-params.alpha * R * R)
    return g


def grid_descriptor(grid: QuadratureGrid) -> dict:
    return {"domain": grid.domain, "level": grid.level, "nodes": grid.size,
            "total_weight": grid.total_weight(), "truncation_radius": grid.truncation_radius,
            "tail_bound": grid.tail_bound, "params": {k: v for k, v in grid.meta.items() if k != "theta"}}
