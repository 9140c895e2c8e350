"""Weight-class characteristics, the power-weight membership oracle, BMO diagnostics,
openness and reverse-Hölder estimation.

A characteristic is a supremum over a nested family of regions (or of sample
points, for the transform-based kinds).  The engine walks the family level
by level and keeps a running supremum; the verdict comes from two tests:

* any integral that fails the tail test makes the verdict ``Divergent``;
* the running supremum growing by more than a factor 2 between the last two
  levels makes it ``Divergent``, while growth below 1 + 1e-3 after
  ``min_levels`` levels makes it ``Finite``.

Anything else at the refinement budget is ``Inconclusive``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import Region, SpaceParams, discrete_path, region_budget, region_sampler, PolarBox
from .regions import arc_moments, box_moments, cube_moments, pseudo_ball_moments
from .symbols import Points, Symbol, as_symbol, LogAbs
from .transforms import (DivergentTransform, heat_tilde_terms, kernel_moment)

CLASS_KINDS = ("ApArcs", "BpGammaBalls", "AprCubes", "ApInvariant", "BpGammaInvariant",
               "BerezinBpGamma", "PoissonAp", "HeatChar")
_COMPAT = {
    "ApArcs": ("HardyCircle",), "PoissonAp": ("HardyCircle",), "ApInvariant": ("HardyCircle",),
    "BpGammaBalls": ("BergmanDisk", "BergmanBall"), "BerezinBpGamma": ("BergmanDisk", "BergmanBall"),
    "BpGammaInvariant": ("BergmanDisk", "BergmanBall"),
    "AprCubes": ("Fock",), "HeatChar": ("Fock",),
}
GROWTH_DIVERGENT = 2.0
GROWTH_FINITE = 1e-3


@dataclass(frozen=True)
class ClassSpec:
    kind: str
    params: SpaceParams = field(default_factory=SpaceParams)
    r: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in CLASS_KINDS:
            raise ValueError(f"unknown class kind {self.kind!r}")
        if self.params.space not in _COMPAT[self.kind]:
            raise ValueError(f"{self.kind} needs space in {_COMPAT[self.kind]}, got {self.params.space}")
        if self.kind == "BpGammaBalls" and self.params.n != 1:
            raise ValueError("pseudo-ball integration is implemented for the disk (n = 1)")
        if self.r <= 0 or self.alpha <= 0 or self.beta <= 0:
            raise ValueError("r, alpha and beta must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        return d


@dataclass
class CharacteristicReport:
    spec: ClassSpec
    weight: str
    estimate: float
    verdict: str
    refinement_trace: list = field(default_factory=list)
    argmax_region: dict | None = None
    meta: dict = field(default_factory=dict)

    @property
    def divergent(self) -> bool:
        return self.verdict == "Divergent"

    def to_dict(self) -> dict:
        est = self.estimate if math.isfinite(self.estimate) else "inf"
        return {"spec": self.spec.to_dict(), "weight": self.weight, "estimate": est, "verdict": self.verdict,
                "refinement_trace": [{"level": l, "regions_evaluated": c,
                                      "running_sup": s if math.isfinite(s) else "inf"}
                                     for l, c, s in self.refinement_trace],
                "argmax_region": self.argmax_region, "meta": self.meta}

    def trace_csv(self) -> str:
        rows = ["level,regions_evaluated,running_sup"]
        rows += [f"{l},{c},{float(s)!r}" for l, c, s in self.refinement_trace]
        return "\n".join(rows) + "\n"


def power_weight_oracle(zeta: float, p: float, gamma: float, n: int = 1, variant: str = "Plain") -> bool:
    """Closed-form membership of (1-|z|^2)^zeta in the plain or invariant Bekolle-Bonami class."""
    if p <= 1 or gamma <= -1:
        raise ValueError("need p > 1 and gamma > -1")
    plain = -1.0 - gamma < zeta < (1.0 + gamma) * (p - 1.0)
    if variant.lower() == "plain":
        return plain
    if variant.lower() == "invariant":
        return plain and -(p - 1.0) * (n + 1 + gamma) < zeta < n + 1 + gamma
    raise ValueError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------- local ratios

def _ratio_from_logs(l_meas, l_w, l_dual, p):
    """avg(w) avg(w^{-1/(p-1)})^{p-1} from log integrals."""
    return math.exp((l_w - l_meas) + (p - 1.0) * (l_dual - l_meas))


def region_logs(w: Symbol, region: Region, powers, params: SpaceParams):
    """(log measure, [log integrals of w^t]) and a divergence flag for one region."""
    k = region.kind
    if k == "Arc":
        logs, div = arc_moments(w, region.params["start"], region.params["length"], [0.0] + list(powers))
        return logs[0], logs[1:], bool(div.any())
    if k == "PseudoBall":
        c = complex(*region.params["center"])
        logs, div = pseudo_ball_moments(w, c, region.params["radius"], params.gamma, powers)
        return logs[0], logs[1:], bool(div.any())
    if k == "Cube":
        c = np.asarray(region.params["center"], float)[None, :]
        side = region.params["side"]
        logs, div = cube_moments(w, c, side, list(powers))
        return 2 * params.n * math.log(side), logs[0], bool(div.any())
    if k in ("CarlesonSquare", "DyadicRect", "PolarBox"):
        b = region.params["box"]
        logs, div = box_moments(w, [b[0]], [b[1]], [b[2]], [b[3]], params.gamma, [0.0] + list(powers))
        return logs[0, 0], logs[0, 1:], bool(div.any())
    raise ValueError(f"unsupported region kind {k!r}")


def local_ap_ratio(w, region: Region, p: float, params: SpaceParams | None = None) -> tuple[float, bool]:
    """avg(w) avg(w^{-1/(p-1)})^{p-1} over a region; returns (value, divergent)."""
    params = params or SpaceParams(p=p)
    w = as_symbol(w)
    lm, (lw, ld), div = region_logs(w, region, [1.0, -1.0 / (p - 1.0)], params)
    if div or not (math.isfinite(lw) and math.isfinite(ld)):
        return math.inf, True
    return _ratio_from_logs(lm, lw, ld, p), False


def box_region(s_lo, s_hi, t_lo, t_hi, gamma=0.0) -> Region:
    b = PolarBox(s_lo, s_hi, t_lo, t_hi)
    return Region("PolarBox", {"box": [s_lo, s_hi, t_lo, t_hi]}, b.measure(gamma))


# ---------------------------------------------------------------- the engine

def _ray_angles(w: Symbol, count: int = 16):
    if w.radial:
        return [0.0]
    base = [2 * math.pi * k / count for k in range(count)]
    extra = [float(np.angle(s)) % (2 * math.pi) for s in w.singular_points()]
    return sorted(set(base + extra))


def _sample_points(spec: ClassSpec, w: Symbol, level: int):
    """Sample points for the transform-based kinds at one level."""
    if spec.params.space == "Fock":
        n = spec.params.n
        if level == 0:
            return [np.zeros(n, complex)]
        rad = 2.0 ** (level - 1)
        out = []
        for th in _ray_angles(w, 8):
            for j in range(n):
                z = np.zeros(n, complex)
                z[j] = rad * complex(math.cos(th), math.sin(th))
                out.append(z)
        return out
    if level == 0:
        return [0j] if spec.params.n == 1 else [np.zeros(spec.params.n, complex)]
    rho = 1.0 - 0.5 ** level
    pts = [rho * complex(math.cos(t), math.sin(t)) for t in _ray_angles(w)]
    if spec.params.n > 1:
        pts = [np.array([z] + [0j] * (spec.params.n - 1)) for z in pts]
    return pts


def _point_value(spec: ClassSpec, w: Symbol, z, p: float, level: int) -> tuple[float, bool]:
    q = p / (p - 1.0)
    dual = -1.0 / (p - 1.0)
    prm = spec.params
    if spec.kind == "HeatChar":
        try:
            a = heat_tilde_terms([(w, 1.0)], z, spec.alpha, prm.n, level)
            b = heat_tilde_terms([(w, dual)], z, spec.beta, prm.n, level)
        except DivergentTransform:
            return math.inf, True
        la, lb = a.meta["log_value"], b.meta["log_value"]
        return math.exp(min(la + (p - 1.0) * lb, 700.0)), False
    if spec.kind in ("PoissonAp", "ApInvariant"):
        space, e1, e2 = "HardyCircle", (p if spec.kind == "PoissonAp" else 2.0), (q if spec.kind == "PoissonAp" else 2.0)
    else:
        space = "BergmanDisk" if prm.n == 1 else "BergmanBall"
        e1, e2 = (p, q) if spec.kind == "BerezinBpGamma" else (2.0, 2.0)
    r1 = kernel_moment(space, w, 1.0, z, e1, prm.gamma, prm.n, level)
    if r1.verdict == "Divergent":
        return math.inf, True
    r2 = kernel_moment(space, w, dual, z, e2, prm.gamma, prm.n, level)
    if r2.verdict == "Divergent":
        return math.inf, True
    val = r1.meta["log_value"] + (p - 1.0) * r2.meta["log_value"]
    return math.exp(min(val, 700.0)), False


def _regions_at_level(spec: ClassSpec, w: Symbol, level: int, seed=None) -> list[Region]:
    kind = spec.kind
    focus = [float(np.angle(s)) for s in w.singular_points()]
    regs = region_sampler(spec.params, kind, level, seed=seed, r=spec.r, focus_angles=focus,
                          radial_symmetry=w.radial)
    return [g for g in regs if g.depth == level]


def _cube_level(spec: ClassSpec, w: Symbol, regs: list[Region], p: float):
    centers = np.array([g.params["center"] for g in regs], float)
    logs, div = cube_moments(w, centers, spec.r, [1.0, -1.0 / (p - 1.0)])
    lm = 2 * spec.params.n * math.log(spec.r)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.exp(np.minimum((logs[:, 0] - lm) + (p - 1.0) * (logs[:, 1] - lm), 700.0))
    bad = div.any(axis=1) | ~np.isfinite(logs).all(axis=1)
    vals = np.where(bad, np.inf, vals)
    return vals, bad


def _default_refinement(spec: ClassSpec) -> int:
    if spec.kind == "AprCubes":
        # cubes must reach out to radius ~64 whatever r is, within the region budget
        want = 6 + max(0, int(math.ceil(math.log2(1.0 / spec.r))))
        dim = 2 * spec.params.n
        while want > 1 and (2 * 2 ** want + 1) ** dim > region_budget():
            want -= 1
        return want
    return {"ApArcs": 10, "BpGammaBalls": 12, "HeatChar": 7}.get(spec.kind, 24)


def characteristic(w, spec: ClassSpec, max_refinement: int | None = None, level: int = 2,
                   min_levels: int = 3, growth_divergent: float = GROWTH_DIVERGENT,
                   growth_finite: float = GROWTH_FINITE, seed=None) -> CharacteristicReport:
    """Running supremum of the class functional over a nested family, with a verdict."""
    w = as_symbol(w)
    p = spec.params.p
    if max_refinement is None:
        max_refinement = _default_refinement(spec)
    running = 0.0
    argmax = None
    trace = []
    total = 0
    verdict = "Inconclusive"
    prev = None
    extrapolated = 0.0
    for j in range(max_refinement + 1):
        if spec.kind in ("ApArcs", "BpGammaBalls", "AprCubes"):
            regs = _regions_at_level(spec, w, j, seed)
            if spec.kind == "AprCubes":
                vals, bad = _cube_level(spec, w, regs, p)
            else:
                out = [local_ap_ratio(w, g, p, spec.params) for g in regs]
                vals = np.array([v for v, _ in out])
                bad = np.array([d for _, d in out])
            items = regs
        else:
            items = _sample_points(spec, w, j)
            out = [_point_value(spec, w, z, p, level) for z in items]
            vals = np.array([v for v, _ in out])
            bad = np.array([d for _, d in out])
        total += len(items)
        if len(items):
            i = int(np.argmax(vals))
            if vals[i] > running:
                running = float(vals[i])
                it = items[i]
                argmax = it.to_dict() if isinstance(it, Region) else {"kind": "point", "z": _jsonable_point(it), "level": j}
        trace.append((j, total, running))
        if bad.any():
            verdict = "Divergent"
            running = math.inf
            trace[-1] = (j, total, running)
            break
        if prev is not None and prev > 0:
            growth = running / prev
            if j >= 2 and growth > growth_divergent:
                verdict = "Divergent"
                break
            if j + 1 >= min_levels and (growth <= 1.0 + growth_finite
                                        or _geometric_tail(trace) <= growth_finite * running):
                verdict = "Finite"
                break
            tail = _geometric_tail(trace, steady=True)
            if j + 1 >= min_levels + 3 and tail <= running:
                # slow but steady geometric approach: report the extrapolated limit
                verdict = "Finite"
                extrapolated = tail
                break
        prev = running
    est = running + extrapolated if verdict != "Divergent" else math.inf
    meta = {"max_refinement": max_refinement, "levels_run": len(trace)}
    if extrapolated:
        meta["extrapolated_tail"] = extrapolated
    if verdict == "Divergent" and math.isfinite(running):
        meta["last_finite_sup"] = running
    return CharacteristicReport(spec, w.dsl(), est, verdict, trace, argmax, meta)


def _geometric_tail(trace, steady: bool = False) -> float:
    """Projected further increase of the running sup if its last increments decay geometrically.

    With ``steady`` the last three increment ratios must agree to within 0.01 and stay below 0.9 so that
    the tail is a reliable extrapolation rather than a bound.
    """
    k = 5 if steady else 4
    if len(trace) < k:
        return math.inf
    s = [t[2] for t in trace[-k:]]
    d = np.diff(s)
    if steady:
        if np.any(d <= 0):
            return math.inf
        ratios = d[1:] / d[:-1]
        if ratios.max() >= 0.9 or ratios.max() - ratios.min() > 0.01:
            return math.inf
        r = float(ratios.max())
        return float(d[-1] * r / (1.0 - r))
    if d[0] <= 0 or d[1] <= 0:
        return 0.0 if d[2] == 0 else math.inf
    r1, r2 = d[1] / d[0], d[2] / d[1]
    r = max(r1, r2)
    if r >= 0.95:
        return math.inf
    return d[2] * r / (1.0 - r)


def _jsonable_point(z):
    z = np.atleast_1d(np.asarray(z, complex))
    return [[float(v.real), float(v.imag)] for v in z]


# ---------------------------------------------------------------- BMO diagnostics

def _ball_rule(n: int, r: float, m: int = 12):
    """Points and weights for the Euclidean ball of radius r in R^{2n}, normalized to total 1."""
    if n == 1:
        x, w = np.polynomial.legendre.leggauss(m)
        rho = 0.5 * (x + 1.0) * r
        wr = 0.5 * r * w * rho
        M = 4 * m
        th = 2 * math.pi * (np.arange(M) + 0.5) / M
        pts = (rho[:, None] * np.exp(1j * th)[None, :]).reshape(-1, 1)
        wt = np.repeat(wr, M) * (2 * math.pi / M)
        return pts, wt / wt.sum()
    k = 8
    ax = (np.arange(-k, k) + 0.5) / k * r
    mesh = np.meshgrid(*([ax] * (2 * n)), indexing="ij")
    X = np.stack([g.ravel() for g in mesh], axis=-1)
    X = X[np.sum(X * X, axis=1) <= r * r]
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    return Z, np.full(Z.shape[0], 1.0 / Z.shape[0])


def _sphere_points(n: int, r: float, count: int = 256):
    """Points on the sphere of radius r; the oscillation sup is usually attained there."""
    if n == 1:
        th = 2 * math.pi * np.arange(count) / count
        return (r * np.exp(1j * th)).reshape(-1, 1)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((count, 2 * n))
    X = np.vstack([X, np.eye(2 * n), -np.eye(2 * n)])
    X = r * X / np.linalg.norm(X, axis=1, keepdims=True)
    return X[:, 0::2] + 1j * X[:, 1::2]


def bmo_diagnostics(f, r: float = 1.0, p: float = 2.0, n: int = 1, max_level: int = 6,
                    growth_divergent: float = 1.5) -> dict:
    """Sup over ball centres of the oscillation (BO), the p-average of |f| (BA) and the p-oscillation about the mean (BMO)."""
    f = as_symbol(f)
    pts, wts = _ball_rule(n, r)
    edge = _sphere_points(n, r)
    traces = {"bo": [], "ba": [], "bmo": []}
    sups = {"bo": 0.0, "ba": 0.0, "bmo": 0.0}
    prev = None
    divergent = {"bo": False, "ba": False, "bmo": False}
    total = 0
    for j in range(max_level + 1):
        spec = ClassSpec("HeatChar", SpaceParams("Fock", n=n))
        centers = _sample_points(spec, f, j)
        for c in centers:
            c = np.asarray(c, complex).reshape(1, n)
            vals = np.real(f.value(Points.plane(pts + c)))
            v0 = float(np.real(f.value(Points.plane(c)))[0])
            mean = float(np.sum(wts * vals))
            ev = np.real(f.value(Points.plane(edge + c)))
            sups["bo"] = max(sups["bo"], float(np.max(np.abs(np.concatenate([vals, ev]) - v0))))
            sups["ba"] = max(sups["ba"], float(np.sum(wts * np.abs(vals) ** p)) ** (1.0 / p))
            sups["bmo"] = max(sups["bmo"], float(np.sum(wts * np.abs(vals - mean) ** p)) ** (1.0 / p))
        total += len(centers)
        for key in sups:
            traces[key].append((j, total, sups[key]))
        if prev is not None and j >= 2:
            for key in sups:
                if prev[key] > 0 and sups[key] / prev[key] > growth_divergent:
                    divergent[key] = True
        prev = dict(sups)
    out = {}
    for key, name in (("bo", "bo_seminorm"), ("ba", "ba_seminorm"), ("bmo", "bmo_seminorm")):
        out[name] = math.inf if divergent[key] else sups[key]
        out[name + "_verdict"] = "Divergent" if divergent[key] else "Finite"
        out[name + "_trace"] = traces[key]
    return out


# ---------------------------------------------------------------- openness and reverse Hölder

def openness_search(w, p: float, r: float = 1.0, n: int = 1, steps: int = 6, max_refinement: int = 5) -> dict:
    """Bisection for the smallest sampled q in (1, p) with a Finite restricted characteristic."""
    w = as_symbol(w)
    base = characteristic(w, ClassSpec("AprCubes", SpaceParams("Fock", n=n, p=p), r=r), max_refinement)
    if base.verdict != "Finite":
        return {"q": p, "verdict": "Inconclusive", "reason": f"characteristic at p is {base.verdict}", "trace": []}
    lo, hi = 1.0, p
    trace = []
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        rep = characteristic(w, ClassSpec("AprCubes", SpaceParams("Fock", n=n, p=mid), r=r), max_refinement)
        trace.append({"q": mid, "verdict": rep.verdict, "estimate": rep.estimate})
        if rep.verdict == "Finite":
            hi = mid
        else:
            lo = mid
    if hi >= p:
        return {"q": p, "verdict": "Inconclusive", "reason": "no q < p found", "trace": trace}
    return {"q": hi, "verdict": "Finite", "trace": trace}


def reverse_holder_estimate(w, r: float = 1.0, p: float = 2.0, n: int = 1, max_refinement: int = 5,
                            steps: int = 8) -> dict:
    """Largest eps in (0, 1] with a uniformly bounded reverse-Hölder constant on cubes of side r."""
    w = as_symbol(w)
    pre = characteristic(w, ClassSpec("AprCubes", SpaceParams("Fock", n=n, p=p), r=r), max_refinement)
    if pre.verdict != "Finite":
        return {"epsilon": 0.0, "C": math.inf, "accepted": False,
                "reason": f"restricted characteristic is {pre.verdict}"}
    spec = ClassSpec("AprCubes", SpaceParams("Fock", n=n, p=p), r=r)
    regs = region_sampler(spec.params, "AprCubes", max_refinement, r=r)
    centers = np.array([g.params["center"] for g in regs], float)
    depth = np.array([g.depth for g in regs])

    def constant(eps):
        logs, div = cube_moments(w, centers, r, [1.0, 1.0 + eps])
        if div.any():
            return math.inf, []
        lm = 2 * n * math.log(r)
        ratio = np.exp((logs[:, 1] - lm) / (1.0 + eps) - (logs[:, 0] - lm))
        per_level = [float(ratio[depth <= j].max()) for j in range(max_refinement + 1)]
        growth = per_level[-1] / per_level[-2] if len(per_level) > 1 else 1.0
        return (per_level[-1] if growth <= 1.0 + 1e-3 else math.inf), per_level

    c1, tr1 = constant(1.0)
    if math.isfinite(c1):
        return {"epsilon": 1.0, "C": c1, "accepted": True, "evidence": tr1}
    lo, hi = 0.0, 1.0
    best = (0.0, math.inf, [])
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        c, tr = constant(mid)
        if math.isfinite(c):
            lo = mid
            best = (mid, c, tr)
        else:
            hi = mid
    if best[0] == 0.0:
        return {"epsilon": 0.0, "C": math.inf, "accepted": False, "reason": "no positive epsilon passed"}
    return {"epsilon": best[0], "C": best[1], "accepted": True, "evidence": best[2]}


# ---------------------------------------------------------------- quantitative lemma checks

def _restricted_K(w, r, p, n, max_refinement=4) -> float:
    rep = characteristic(w, ClassSpec("AprCubes", SpaceParams("Fock", n=n, p=p), r=r), max_refinement)
    return rep.estimate


def cube_mass_check(w, r: float, p: float, n: int = 1, max_refinement: int = 3) -> dict:
    """w(3Q_r) <= 3^{2np} K w(Q_r) on every sampled cube, K the measured A_{p,3r} estimate."""
    w = as_symbol(w)
    K = _restricted_K(w, 3 * r, p, n, max_refinement)
    regs = region_sampler(SpaceParams("Fock", n=n, p=p), "AprCubes", max_refinement, r=r)
    centers = np.array([g.params["center"] for g in regs], float)
    small, _ = cube_moments(w, centers, r, [1.0])
    big, _ = cube_moments(w, centers, 3 * r, [1.0])
    log_bound = 2 * n * p * math.log(3.0) + math.log(K)
    worst = float(np.max(big[:, 0] - small[:, 0]))
    return {"K": K, "worst_log_ratio": worst, "log_bound": log_bound, "pass": worst <= log_bound + 1e-9,
            "cubes": int(centers.shape[0])}


def path_ratio_check(w, r: float, p: float, n: int = 1, pairs: int = 1000, radius: int = 6, seed: int = 0,
                     max_refinement: int = 3) -> dict:
    """w(Q_r(nu)) / w(Q_r(nu')) <= (3^{2np} K)^{|Gamma(nu, nu')|} on random lattice pairs."""
    w = as_symbol(w)
    K = _restricted_K(w, 3 * r, p, n, max_refinement)
    rng = np.random.default_rng(seed)
    A = rng.integers(-radius, radius + 1, size=(pairs, 2 * n)) * r
    B = rng.integers(-radius, radius + 1, size=(pairs, 2 * n)) * r
    la, _ = cube_moments(w, A.astype(float), r, [1.0])
    lb, _ = cube_moments(w, B.astype(float), r, [1.0])
    step = 2 * n * p * math.log(3.0) + math.log(K)
    worst = -math.inf
    ok = True
    for i in range(pairs):
        path = discrete_path(A[i], B[i], r)
        slack = path.length * step - (la[i, 0] - lb[i, 0])
        worst = max(worst, float(-slack))
        ok &= slack >= -1e-9
    return {"K": K, "pairs": pairs, "pass": bool(ok), "worst_excess_log": worst}


def subset_mass_check(w, r: float, p: float, n: int = 1, trials: int = 200, seed: int = 0,
                      max_refinement: int = 3) -> dict:
    """w(S) <= delta w(Q_r) with delta = 1 - 1/(2^p K) for random dyadic sub-boxes S, v(S) <= v(Q_r)/2."""
    w = as_symbol(w)
    K = _restricted_K(w, r, p, n, max_refinement)
    delta = 1.0 - 1.0 / (2.0 ** p * K)
    rng = np.random.default_rng(seed)
    dim = 2 * n
    worst = 0.0
    for _ in range(trials):
        c = rng.integers(-2 ** max_refinement, 2 ** max_refinement + 1, size=dim) * r
        d = int(rng.integers(1, 4))
        side = r * 0.5 ** d
        # pick 2^(dim d)/2 or fewer sub-cubes at depth d
        count = 2 ** (dim * d)
        k = int(rng.integers(1, count // 2 + 1))
        idx = rng.choice(count, size=k, replace=False)
        digits = np.array(np.unravel_index(idx, (2 ** d,) * dim)).T
        sub_centers = c - 0.5 * r + (digits + 0.5) * side
        ls, _ = cube_moments(w, sub_centers.astype(float), side, [1.0])
        lq, _ = cube_moments(w, c[None, :].astype(float), r, [1.0])
        mass = float(np.exp(np.logaddexp.reduce(ls[:, 0]) - lq[0, 0]))
        worst = max(worst, mass)
    return {"K": K, "delta": delta, "worst_fraction": worst, "pass": worst <= delta + 1e-9, "trials": trials}


def log_weight_bmo(w, r: float = 1.0, p: float = 1.0, n: int = 1, max_level: int = 6) -> dict:
    """BMO diagnostics of log w."""
    return bmo_diagnostics(LogAbs(as_symbol(w)), r, p, n, max_level)
