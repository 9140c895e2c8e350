"""Reverse-Hölder pipeline for w = |f|^p on the disk.

The chain is: measured characteristic C1 over the dyadic rectangles, the
constants delta and delta', the doubling constant of dA_gamma, an admissible
exponent, the exponent pair (eps1, eps2), and direct checks of the resulting
inequalities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DyadicRect, TreeNode, dyadic_subrects, enumerate_rects, mobius_disk, annular_measure
from .operators import _sup_verdict
from .regions import box_moments
from .symbols import Points, as_symbol
from .transforms import kernel_moment

DEFAULT_DEPTH = 8
EPSILON_FRACTION = 0.5


@dataclass
class RectFamily:
    """All dyadic rectangles with N <= depth and their log moments of |f|."""

    depth: int
    gamma: float
    rects: dict
    powers: list
    logs: np.ndarray
    divergent: np.ndarray

    @property
    def log_measure(self) -> np.ndarray:
        r = self.rects
        return np.log(annular_measure(r["s_lo"], r["s_hi"], r["t_hi"] - r["t_lo"], self.gamma))

    def column(self, power: float) -> np.ndarray:
        return self.logs[:, self.powers.index(power)]


def rect_family(f, gamma: float, depth: int, powers) -> RectFamily:
    f = as_symbol(f)
    rects = enumerate_rects(depth)
    powers = [float(t) for t in powers]
    logs, div = box_moments(f, rects["s_lo"], rects["s_hi"], rects["t_lo"], rects["t_hi"], gamma, powers)
    return RectFamily(depth, gamma, rects, powers, logs, div)


def _ap_products(fam: RectFamily, p: float, scale: float = 1.0) -> np.ndarray:
    """avg(w^s) avg(w^{-s/(p-1)})^{p-1} per rectangle, w = |f|^p, s = scale."""
    q = p / (p - 1.0)
    lm = fam.log_measure
    lw = fam.column(p * scale) - lm
    ld = fam.column(-q * scale) - lm
    return np.exp(lw + (p - 1.0) * ld)


def c1_characteristic(f, p: float, gamma: float = 0.0, depth: int = DEFAULT_DEPTH, family: RectFamily | None = None):
    """Sup over dyadic rectangles of avg(w) avg(w^{-1/(p-1)})^{p-1}, w = |f|^p; returns (C1, argmax dict)."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    q = p / (p - 1.0)
    fam = family or rect_family(f, gamma, depth, [p, -q])
    if fam.divergent[:, [fam.powers.index(p), fam.powers.index(-q)]].any():
        return math.inf, None
    prod = _ap_products(fam, p)
    i = int(np.argmax(prod))
    return float(prod[i]), _rect_info(fam, i, prod[i])


def _rect_info(fam: RectFamily, i: int, value) -> dict:
    r = fam.rects
    Q = DyadicRect(int(r["N"][i]), int(r["m"][i]), int(r["k"][i]))
    d = _owner_depth(Q)
    out = Q.to_dict(fam.gamma)
    out["beta"] = [d, (Q.k - 1) >> (Q.N - d)]
    out["value"] = float(value)
    return out


def _owner_depth(Q: DyadicRect) -> int:
    """Depth of the smallest Carleson square containing Q."""
    s_hi = 1.0 - (Q.m - 1) * 0.5 ** Q.N
    d = int(math.floor(-math.log2(s_hi) + 1e-12))
    return max(0, min(Q.N, d))


def constants_from_c1(C1: float, p: float) -> dict:
    if C1 < 1 or p <= 1:
        raise ValueError("need C1 >= 1 and p > 1")
    q = p / (p - 1.0)
    return {"delta": 1.0 - 1.0 / (2.0 ** p * C1), "delta_prime": 1.0 - 1.0 / (2.0 ** q * C1 ** (q - 1.0))}


def doubling_constant(gamma: float = 0.0, depth: int = DEFAULT_DEPTH, away_from_boundary: bool = False) -> float:
    """Max of A_gamma(2Q) / A_gamma(Q) over dyadic subrectangles of Carleson squares with d(beta) <= depth."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    r = enumerate_rects(depth)
    sel = r["N"] >= 1
    if away_from_boundary:
        sel &= r["m"] < 2 ** r["N"]
    N, m, k = r["N"][sel], r["m"][sel], r["k"][sel]
    h = 0.5 ** N
    mQ = annular_measure(np.maximum(1 - m * h, 0), 1 - (m - 1) * h, 2 * math.pi * h, gamma)
    N2, m2 = N - 1, (m + 1) // 2
    h2 = 0.5 ** N2
    m2Q = annular_measure(np.maximum(1 - m2 * h2, 0), 1 - (m2 - 1) * h2, 2 * math.pi * h2, gamma)
    return float(np.max(m2Q / mQ))


def rh_constant(C_tilde: float, delta: float, eps: float) -> float:
    a = (2.0 * C_tilde) ** eps
    if a * delta >= 1:
        return math.inf
    return (1.0 + a / (1.0 - a * delta)) ** (1.0 / (1.0 + eps))


def admissible_epsilon(C_tilde: float, delta: float) -> dict:
    """eps_max = log(1/delta) / log(2 C~) and the constant as a function of eps < eps_max."""
    if C_tilde < 1 or not 0 < delta < 1:
        raise ValueError("need C_tilde >= 1 and 0 < delta < 1")
    eps_max = math.log(1.0 / delta) / math.log(2.0 * C_tilde)

    def constant(eps: float) -> float:
        if not 0 < eps < eps_max:
            raise ValueError(f"epsilon must lie in (0, {eps_max})")
        return rh_constant(C_tilde, delta, eps)

    return {"epsilon_max": eps_max, "rh_constant": constant}


def epsilon_pair(eps2: float, p: float) -> float:
    """eps1 balancing eps2 / (q (q + eps2)) = eps1 / (p (p + eps1))."""
    q = p / (p - 1.0)
    den = q * q + eps2 * q - eps2 * p
    if den <= 0:
        raise ValueError("eps2 too large: non-positive denominator")
    return eps2 * p * p / den


@dataclass
class RHCertificate:
    f_spec: str
    p: float
    gamma: float
    C1: float
    delta: float
    delta_prime: float
    C_tilde: float
    epsilon: float
    epsilon1: float
    epsilon2: float
    rh_constant: float
    depth: int
    passed: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["pass"] = d.pop("passed")
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else "inf") for k, v in d.items()}


def rh_certificate(f, p: float = 2.0, gamma: float = 0.0, depth: int = DEFAULT_DEPTH,
                   squares_csv: str | None = None) -> RHCertificate:
    """Run the constants chain and check the reverse-Hölder inequality on every enumerated rectangle."""
    f = as_symbol(f)
    q = p / (p - 1.0)
    base = rect_family(f, gamma, depth, [0.0, p, -q])
    C1, arg = c1_characteristic(f, p, gamma, depth, base)
    if not math.isfinite(C1):
        return RHCertificate(f.dsl(), p, gamma, math.inf, math.nan, math.nan, math.nan, 0.0, 0.0, 0.0,
                             math.inf, depth, False, {"reason": "C1 divergent"})
    consts = constants_from_c1(C1, p)
    Ct = doubling_constant(gamma, depth)
    e1 = admissible_epsilon(Ct, consts["delta"])["epsilon_max"]
    e2 = admissible_epsilon(Ct, consts["delta_prime"])["epsilon_max"]
    eps = EPSILON_FRACTION * min(e1, e2)
    eps2 = eps
    eps1 = epsilon_pair(eps2, p)
    K = rh_constant(Ct, consts["delta"], eps)
    Kp = rh_constant(Ct, consts["delta_prime"], eps)
    # second pass with the exponents the inequalities need
    fam = rect_family(f, gamma, depth, [p, -q, p * (1 + eps), -q * (1 + eps)])
    lm = fam.log_measure
    lhs = (fam.column(p * (1 + eps)) - lm) / (1 + eps)
    rhs = fam.column(p) - lm
    ratio = np.exp(lhs - rhs)
    worst = int(np.argmax(ratio))
    lemma58 = bool(np.all(ratio <= K * (1 + 1e-9)))
    comp = _ap_products(fam, p, 1 + eps)
    bound59 = C1 ** (1 + eps) * (1 + (2 * Ct) ** eps / (1 - (2 * Ct) ** eps * consts["delta"])) * \
        (1 + (2 * Ct) ** eps / (1 - (2 * Ct) ** eps * consts["delta_prime"])) ** (p - 1)
    composite = bool(np.max(comp) <= bound59 * (1 + 1e-9))
    evidence = {"rectangles": int(ratio.size), "argmax_C1": arg, "epsilon_rule": f"{EPSILON_FRACTION} * min(eps_max(delta), eps_max(delta'))",
                "epsilon_max": [e1, e2], "rh_constant_prime": Kp,
                "worst_rh_ratio": float(ratio[worst]), "worst_rh_rect": _rect_info(fam, worst, ratio[worst]),
                "rh_inequality": lemma58, "composite_characteristic": float(np.max(comp)),
                "composite_bound": bound59, "composite_inequality": composite}
    if squares_csv:
        write_squares_csv(squares_csv, fam, p)
    return RHCertificate(f.dsl(), p, gamma, C1, consts["delta"], consts["delta_prime"], Ct, eps, eps1, eps2,
                         K, depth, lemma58 and composite, evidence)


def write_squares_csv(path: str, fam: RectFamily, p: float) -> None:
    q = p / (p - 1.0)
    lm = fam.log_measure
    aw = np.exp(fam.column(p) - lm)
    ad = np.exp(fam.column(-q) - lm)
    r = fam.rects
    with open(path, "w") as fh:
        fh.write("beta_depth,beta_k,N,m,k,avg_w,avg_dual,product\n")
        for i in range(aw.size):
            Q = DyadicRect(int(r["N"][i]), int(r["m"][i]), int(r["k"][i]))
            d = _owner_depth(Q)
            prod = float(aw[i] * ad[i] ** (p - 1))
            fh.write(f"{d},{(Q.k - 1) >> (Q.N - d)},{Q.N},{Q.m},{Q.k},{float(aw[i])!r},{float(ad[i])!r},{prod!r}\n")


# ---------------------------------------------------------------- end-to-end checks

def _boundary_samples(f, max_j: int):
    sing = [float(np.angle(s)) % (2 * math.pi) for s in f.singular_points()]
    angles = sorted(set([2 * math.pi * k / 16 for k in range(16)] + sing))
    yield 0, [0j]
    for j in range(1, max_j + 1):
        rho = 1.0 - 0.5 ** j
        yield j, [rho * complex(math.cos(t), math.sin(t)) for t in angles]


def _twisted_product(f, z, p, t1, t2, gamma, level):
    """{B(|f k^{1-2/p}|^{t1})(z)}^{1/t1} {B(|f^{-1} k^{1-2/q}|^{t2})(z)}^{1/t2}."""
    q = p / (p - 1.0)
    a = kernel_moment("BergmanDisk", f, t1, z, (1 - 2 / p) * t1 + 2, gamma, 1, level)
    b = kernel_moment("BergmanDisk", f, -t2, z, (1 - 2 / q) * t2 + 2, gamma, 1, level)
    if a.verdict == "Divergent" or b.verdict == "Divergent":
        return math.inf
    return math.exp(a.meta["log_value"] / t1 + b.meta["log_value"] / t2)


def verify_theorem51(f, p: float, gamma: float, epsilon1: float, epsilon2: float, max_j: int = 12,
                     level: int = 2) -> dict:
    """Running sup of the raised-exponent product over rays 1 - 2^-j, after checking the base product."""
    f = as_symbol(f)
    q = p / (p - 1.0)
    base, raised, trace = [], [], []
    b_run = r_run = 0.0
    for j, zs in _boundary_samples(f, max_j):
        for z in zs:
            b_run = max(b_run, _twisted_product(f, z, p, p, q, gamma, level))
            r_run = max(r_run, _twisted_product(f, z, p, p + epsilon1, q + epsilon2, gamma, level))
        base.append(b_run)
        raised.append(r_run)
        trace.append({"level": j, "points": len(zs), "sup_51": b_run if math.isfinite(b_run) else "inf",
                      "sup_52": r_run if math.isfinite(r_run) else "inf"})
        if not (math.isfinite(b_run) and math.isfinite(r_run)):
            break
    v51 = _bounded_trace(base)
    v52 = _bounded_trace(raised)
    return {"sup_51": base[-1], "verdict_51": v51, "sup_52": raised[-1], "verdict_52": v52,
            "epsilon1": epsilon1, "epsilon2": epsilon2, "trace": trace}


def _bounded_trace(vals) -> str:
    v = _sup_verdict(vals, 2.0)
    if v == "Inconclusive" and math.isfinite(vals[-1]) and vals[-1] <= 1.02 * vals[-3]:
        # slow convergence toward the boundary: still bounded over the sample
        return "Finite"
    return v


def lemma59_check(f, p: float, gamma: float, epsilon: float, betas=None, subset_trials: int = 200,
                  seed: int = 0, sub_depth: int = 4) -> dict:
    """Smallest C with w^{1+eps}(E) <= C w^{1+eps}(S) (A(E)/A(S))^{eps/(1+eps)} over random unions E."""
    f = as_symbol(f)
    if betas is None:
        betas = [TreeNode(0, 0), TreeNode(2, 0), TreeNode(4, 0), TreeNode(3, 5), TreeNode(6, 0), TreeNode(6, 63)]
    t = p * (1.0 + epsilon)
    worst = 1.0
    per_beta = []
    for b_idx, beta in enumerate(betas):
        S = beta.as_rect()
        subs = [Q for Q, _ in dyadic_subrects(beta, sub_depth) if Q.N == S.N + sub_depth]
        boxes = np.array([[Q.box.s_lo, Q.box.s_hi, Q.box.t_lo, Q.box.t_hi] for Q in subs])
        logs, _ = box_moments(f, boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3], gamma, [0.0, t])
        lS, _ = box_moments(f, [S.box.s_lo], [S.box.s_hi], [S.box.t_lo], [S.box.t_hi], gamma, [0.0, t])
        mass_S, meas_S = math.exp(lS[0, 1]), math.exp(lS[0, 0])
        mass, meas = np.exp(logs[:, 1]), np.exp(logs[:, 0])
        best = 1.0  # E = S gives exactly 1
        for trial in range(subset_trials):
            # counter-based stream per (seed, beta, trial): reproducible under any execution order
            rng = np.random.Generator(np.random.Philox(key=seed, counter=[trial, b_idx, 0, 0]))
            k = int(rng.integers(1, len(subs) + 1))
            pick = rng.choice(len(subs), size=k, replace=False)
            ratio_w = mass[pick].sum() / mass_S
            ratio_a = meas[pick].sum() / meas_S
            best = max(best, ratio_w / ratio_a ** (epsilon / (1 + epsilon)))
        per_beta.append({"beta": [beta.depth, beta.k], "C": best})
        worst = max(worst, best)
    return {"C": worst, "per_beta": per_beta, "trials": subset_trials, "seed": seed, "epsilon": epsilon}


def lemma52_check(f, R: float = 1.0, pair_samples: int = 400, seed: int = 0, directions: int = 64) -> dict:
    """Worst max(|f(z)/f(w)|, |f(w)/f(z)|) over sampled centres w and z on the Bergman circle of radius R.

    log|f| is harmonic for nonvanishing analytic f, so the extremes over the
    closed disk D(w, R) sit on its boundary circle.
    """
    f = as_symbol(f)
    rng = np.random.Generator(np.random.Philox(key=seed))
    js = rng.integers(0, 13, size=pair_samples)
    th = rng.uniform(0, 2 * math.pi, size=pair_samples)
    ws = (1.0 - 0.5 ** js) * np.exp(1j * th)
    ws[: min(13, pair_samples)] = 1.0 - 0.5 ** np.arange(min(13, pair_samples))   # radial approach to 1
    circ = math.tanh(R) * np.exp(2j * math.pi * np.arange(directions) / directions)
    worst = 1.0
    for w in ws:
        zs = mobius_disk(w, circ)
        lf = f.log_abs(Points.disk(zs))
        l0 = float(f.log_abs(Points.disk(np.array([w])))[0])
        worst = max(worst, float(np.exp(np.max(np.abs(lf - l0)))))
    return {"C_R": worst, "R": R, "pairs": int(pair_samples * directions)}
