"""Discretized projections, weighted operator norms, Toeplitz truncations and
the boundedness/invertibility criteria for products T_f T_{conj g}."""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .geometry import SpaceParams
from .quadrature import check_budget, geometric_tail, jacobi_left
from .regions import interval_rule
from .symbols import Points, Symbol, UnsupportedSymbol, as_symbol, Constant, ExpLinear, TaylorPoly
from .transforms import DivergentTransform, heat_tilde_terms, kernel_moment

TAIL_TOL = 1e-10
BOYD_ITERS = 200
BOYD_RTOL = 1e-8


class TailBudgetExceeded(ValueError):
    """The input does not decay enough inside the truncation radius."""


# ---------------------------------------------------------------- grids

@dataclass
class NodeGrid:
    """Quadrature nodes for a projection.

    ``reliable_radius`` bounds the nodes where an applied projection is
    trusted to the grid tolerance.
    """

    kind: str
    nodes: np.ndarray          # (N, n) complex for the plane, (N,) for the disk
    weights: np.ndarray
    alpha: float = 1.0
    gamma: float = 0.0
    n: int = 1
    R: float = 1.0
    h: float = 0.0
    reliable_radius: float = 0.0
    level: int = 0
    terms: int = 0             # Bergman grids: kernel truncated to monomials of degree < terms

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def radius(self) -> np.ndarray:
        if self.nodes.ndim == 2:
            return np.sqrt(np.sum(np.abs(self.nodes) ** 2, axis=1))
        return np.abs(self.nodes)

    def mask(self, radius: float | None = None) -> np.ndarray:
        r = self.reliable_radius if radius is None else radius
        return self.radius() <= r + 1e-12

    def z1(self) -> np.ndarray:
        return self.nodes[:, 0] if self.nodes.ndim == 2 else self.nodes

    def to_dict(self) -> dict:
        return {"kind": self.kind, "size": self.size, "alpha": self.alpha, "gamma": self.gamma, "n": self.n,
                "R": self.R, "h": self.h, "reliable_radius": self.reliable_radius, "level": self.level}


def gaussian_margin(alpha: float, tol: float = TAIL_TOL) -> float:
    """Distance beyond which exp(-alpha d^2 / 2) drops below tol."""
    return math.sqrt(2.0 * math.log(1.0 / tol) / alpha)


def fock_spacing(alpha: float, radius: float, tol: float = TAIL_TOL) -> float:
    """Lattice step resolving the kernel phase, frequency alpha |z|, at output points |z| <= radius.

    The Gaussian envelope widens the spectrum by 2 sqrt(alpha L), where L also
    pays for the cancellation factor exp(alpha |z|^2 / 4) of the reproducing integral.
    """
    L = math.log(1.0 / tol) + 0.25 * alpha * radius ** 2
    return 2.0 * math.pi / (alpha * radius + 2.0 * math.sqrt(alpha * L))


def fock_grid(alpha: float = 0.25, n: int = 1, level: int = 2, R: float | None = None,
              h: float | None = None, accurate_radius: float | None = None, offset: float = 0.0) -> NodeGrid:
    """Square lattice in the ball of radius R in C^n; R defaults to 4 2^{level/2}.

    The step resolves outputs out to ``accurate_radius`` (all nodes by default);
    ``offset`` shifts the lattice by offset * h in every real coordinate.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if R is None:
        R = 4.0 * 2.0 ** (level / 2.0)
    if h is None:
        h = fock_spacing(alpha, R if accurate_radius is None else accurate_radius)
    M = int(math.floor(R / h))
    check_budget((2 * M + 1) ** (2 * n), "Fock lattice nodes")
    ax = h * (np.arange(-M - 1, M + 1) + offset)
    mesh = np.meshgrid(*([ax] * (2 * n)), indexing="ij")
    X = np.stack([g.ravel() for g in mesh], axis=-1)
    X = X[np.sum(X * X, axis=1) <= R * R + 1e-12]
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    reliable = max(0.0, R - gaussian_margin(alpha))
    if accurate_radius is not None:
        reliable = min(reliable, accurate_radius)
    return NodeGrid("Fock", Z, np.full(Z.shape[0], h ** (2 * n)), alpha=alpha, n=n, R=R, h=h,
                    reliable_radius=reliable, level=level)


def bergman_grid(gamma: float = 0.0, level: int = 2) -> NodeGrid:
    """Polar product grid: Gauss-Jacobi in t = |z|^2 against (1-t)^gamma, uniform angles.

    The rule integrates z^j conj(z)^k exactly for j, k < m, so the projection
    kernel is truncated there and the discrete operator is an exact orthogonal
    projection onto polynomials of degree < m.
    """
    m = 4 * 2 ** level
    M = 2 * m
    t, wt = jacobi_left(m, gamma)     # nodes s in (0,1) with weight s^gamma, s = 1 - t
    s = t
    tt = 1.0 - s
    r = np.sqrt(tt)
    th = 2 * math.pi * np.arange(M) / M
    Z = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    # dA_gamma = (gamma+1)(1-|z|^2)^gamma dA/pi, dA = (1/2) dt dtheta
    W = np.repeat((gamma + 1.0) * wt / (2.0 * math.pi), M) * (2 * math.pi / M)
    return NodeGrid("Bergman", Z, W, gamma=gamma, n=1, R=1.0, reliable_radius=0.5, level=level, terms=m)


# ---------------------------------------------------------------- kernels

def _fock_kernel_block(kind: str, Zi, Zj, alpha: float, n: int):
    """Kernel in the unitary picture g = f exp(-alpha|.|^2/2)."""
    d2 = np.sum(np.abs(Zi[:, None, :] - Zj[None, :, :]) ** 2, axis=-1)
    if kind == "FockH":
        return np.exp(-0.5 * alpha * d2)
    phase = alpha * np.imag(Zi @ Zj.conj().T)
    return (alpha / math.pi) ** n * np.exp(-0.5 * alpha * d2 + 1j * phase)


def _bergman_kernel_block(Zi, Zj, gamma: float, terms: int):
    # sum_k c_k (z conj(u))^k with c_k the Taylor coefficients of (1 - x)^-(2 + gamma)
    k = np.arange(terms)
    c = np.exp(gammaln(k + 2.0 + gamma) - gammaln(k + 1.0) - gammaln(2.0 + gamma))
    Vi = Zi[:, None] ** k[None, :]
    Vj = Zj[:, None] ** k[None, :]
    return (Vi * c[None, :]) @ Vj.conj().T


def kernel_matrix(kind: str, grid: NodeGrid, rows=None) -> np.ndarray:
    """Dense matrix K(z_i, z_j) * weight_j for the chosen rows (all by default)."""
    rows = np.arange(grid.size) if rows is None else np.asarray(rows)
    check_budget(rows.size * grid.size, "kernel matrix entries")
    if kind in ("FockP", "FockH"):
        K = _fock_kernel_block(kind, grid.nodes[rows], grid.nodes, grid.alpha, grid.n)
    elif kind == "BergmanP":
        K = _bergman_kernel_block(grid.nodes[rows], grid.nodes, grid.gamma, grid.terms)
    else:
        raise ValueError(f"unknown projection {kind!r}")
    return K * grid.weights[None, :]


def apply_projection(kind: str, f, grid: NodeGrid, chunk: int = 512, check_tail: bool = True,
                     rows=None) -> np.ndarray:
    """Node-wise quadrature of P_alpha, H_alpha (plane) or P_gamma (disk) applied to f.

    ``f`` is an array of node values or a Symbol.  Fock outputs are in the
    original picture (not multiplied by the Gaussian).
    """
    if isinstance(f, (Symbol, str)):
        sym = as_symbol(f)
        pts = Points.plane(grid.nodes) if grid.kind == "Fock" else Points.disk(grid.nodes)
        vals = np.asarray(sym.value(pts), dtype=complex)
    else:
        vals = np.asarray(f, dtype=complex)
    if vals.shape[0] != grid.size:
        raise ValueError("f must have one value per node")
    if kind in ("FockP", "FockH"):
        if grid.kind != "Fock":
            raise ValueError(f"{kind} needs a Fock grid")
        # P acts in the picture g = f exp(-alpha|.|^2/2); H acts on f itself
        g = vals * np.exp(-0.5 * grid.alpha * grid.radius() ** 2) if kind == "FockP" else vals
        if check_tail and kind == "FockP":
            edge = grid.radius() >= grid.R - 1.5 * grid.h
            peak = np.max(np.abs(g)) if g.size else 0.0
            if peak > 0 and np.max(np.abs(g[edge]), initial=0.0) > TAIL_TOL ** 0.5 * peak:
                raise TailBudgetExceeded("f exp(-alpha|z|^2/2) has not decayed at the truncation radius")
    elif kind == "BergmanP":
        if grid.kind != "Bergman":
            raise ValueError("BergmanP needs a Bergman grid")
        g = vals
    else:
        raise ValueError(f"unknown projection {kind!r}")
    targets = np.arange(grid.size) if rows is None else np.asarray(rows)
    out = np.empty(targets.size, dtype=complex)
    for s in range(0, targets.size, chunk):
        sel = slice(s, min(s + chunk, targets.size))
        out[sel] = kernel_matrix(kind, grid, targets[sel]) @ g
    if kind == "FockP":
        out *= np.exp(0.5 * grid.alpha * grid.radius()[targets] ** 2)
    return out


# ---------------------------------------------------------------- operator norms

def _dual(v: np.ndarray, p: float) -> np.ndarray:
    """Duality map: |v|^{p-1} sign(v), normalized to unit q-norm."""
    a = np.abs(v)
    nrm = np.linalg.norm(a, ord=p)
    if nrm == 0:
        return np.zeros_like(v)
    with np.errstate(invalid="ignore", divide="ignore"):
        sgn = np.where(a > 0, v / np.where(a > 0, a, 1.0), 0.0)
    return sgn * (a / nrm) ** (p - 1.0)


def boyd_norm(A: np.ndarray, p: float, iters: int = BOYD_ITERS, rtol: float = BOYD_RTOL) -> tuple[float, bool, int]:
    """p -> p norm estimate of a matrix by the Boyd power method; returns (estimate, converged, iterations)."""
    q = p / (p - 1.0)
    x = np.ones(A.shape[1], dtype=complex)
    x /= np.linalg.norm(x, ord=p)
    est = 0.0
    for it in range(1, iters + 1):
        y = A @ x
        new = float(np.linalg.norm(y, ord=p))
        z = A.conj().T @ _dual(y, p)
        if abs(new - est) <= rtol * max(new, 1e-300):
            return new, True, it
        est = new
        x = _dual(z, q)
    return est, False, iters


@dataclass
class OpNormReport:
    kind: str
    weight: str
    p: float
    estimate: float
    verdict: str
    trace: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "weight": self.weight, "p": self.p,
                "estimate": self.estimate if math.isfinite(self.estimate) else "inf",
                "verdict": self.verdict, "trace": self.trace, "meta": self.meta}


def weighted_matrix(kind: str, w: Symbol, p: float, grid: NodeGrid) -> np.ndarray:
    """Discretized operator acting on the coordinates x_j = g_j (w_j omega_j)^{1/p}."""
    pts = Points.plane(grid.nodes) if grid.kind == "Fock" else Points.disk(grid.nodes)
    lw = np.asarray(w.log_abs(pts), dtype=float) + np.log(grid.weights)
    if not np.all(np.isfinite(lw)):
        raise ValueError("weight must be positive and finite on the nodes")
    A = kernel_matrix(kind, grid)
    scale = lw / p
    A *= np.exp(scale[:, None] - scale[None, :])
    return A


def weighted_opnorm(kind: str, w, p: float = 2.0, alpha: float = 0.25, gamma: float = 0.0, n: int = 1,
                    levels=None, iters: int = BOYD_ITERS, growth_divergent: float = 1.5,
                    growth_finite: float = 1.1) -> OpNormReport:
    """Norm of the discretized projection on L^p(w) across grid levels, with a verdict."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    w = as_symbol(w)
    if levels is None:
        levels = range(0, 4) if kind == "BergmanP" else range(0, 5)
    trace = []
    offset = 0.5 if w.kinks_x1() else 0.0
    ok = False
    for L in levels:
        grid = fock_grid(alpha, n, L, offset=offset) if kind in ("FockP", "FockH") else bergman_grid(gamma, L)
        A = weighted_matrix(kind, w, p, grid)
        est, ok, its = boyd_norm(A, p, iters)
        method = "boyd"
        if not ok and p == 2:
            # the power method stalls on clustered singular values; the 2-norm is exact by SVD
            est, ok, method = float(np.linalg.norm(A, 2)), True, "svd"
        trace.append({"level": L, "nodes": grid.size, "R": grid.R, "estimate": est, "converged": ok,
                      "iterations": its, "method": method})
    ests = [t["estimate"] for t in trace]
    verdict = "Inconclusive"
    if len(ests) >= 2:
        growth = ests[-1] / ests[-2]
        if growth > growth_divergent:
            verdict = "Divergent"
        elif growth <= growth_finite and ok:
            verdict = "Finite"
    est = ests[-1] if verdict != "Divergent" else math.inf
    return OpNormReport(kind, w.dsl(), p, est, verdict, trace,
                        {"alpha": alpha, "gamma": gamma, "n": n, "boyd_converged": ok, "lattice_offset": offset})


# ---------------------------------------------------------------- Toeplitz truncations

BASES = ("MonomialNormalized", "FourierModes", "GridNodes")


@dataclass
class OperatorMatrix:
    space: SpaceParams
    basis: str
    entries: np.ndarray
    label: str = ""

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def header(self) -> dict:
        return {"format": "weightlab.matrix/1", "space": self.space.to_dict(), "basis": self.basis,
                "rows": int(self.entries.shape[0]), "cols": int(self.entries.shape[1]),
                "dtype": "complex128", "order": "row-major", "byteorder": "little", "label": self.label}

    def to_bytes(self) -> bytes:
        head = json.dumps(self.header(), sort_keys=True).encode()
        data = np.ascontiguousarray(self.entries, dtype="<c16").tobytes()
        return struct.pack("<Q", len(head)) + head + data

    def write_binary(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, blob: bytes) -> "OperatorMatrix":
        (hl,) = struct.unpack("<Q", blob[:8])
        head = json.loads(blob[8:8 + hl].decode())
        data = np.frombuffer(blob[8 + hl:], dtype="<c16").reshape(head["rows"], head["cols"])
        return cls(SpaceParams(**head["space"]), head["basis"], data.copy(), head.get("label", ""))

    @classmethod
    def read_binary(cls, path) -> "OperatorMatrix":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def to_csv(self, path=None, max_dim: int = 512) -> str:
        if self.dim > max_dim:
            raise ValueError(f"CSV export is limited to N <= {max_dim}")
        lines = ["row,col,real,imag"]
        for i, j in zip(*np.nonzero(np.ones_like(self.entries, dtype=bool))):
            v = self.entries[i, j]
            lines.append(f"{i},{j},{v.real!r},{v.imag!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def monomial_log_norms(space: SpaceParams, N: int) -> np.ndarray:
    """log ||z^k|| for k < N in the space's norm."""
    k = np.arange(N, dtype=float)
    if space.space == "HardyCircle":
        return np.zeros(N)
    if space.space == "BergmanDisk":
        g = space.gamma
        return 0.5 * (gammaln(k + 1) + gammaln(g + 2) - gammaln(k + g + 2))
    if space.space == "Fock":
        if space.n != 1:
            raise UnsupportedSymbol("Fock Toeplitz truncations are implemented for n = 1")
        return 0.5 * (gammaln(k + 1) - k * math.log(space.alpha))
    raise UnsupportedSymbol(f"no monomial basis for {space.space}")


def fourier_coefficients(sym: Symbol, N: int, level: int = 2) -> np.ndarray:
    """Coefficients c_m, |m| < N, of the boundary values sym(e^{i theta}), indexed m + N - 1."""
    sing = sorted({float(np.angle(s)) % (2 * math.pi) for s in sym.singular_points()})
    lo = sing[0] if sing else 0.0
    pieces = max(2, 2 * N)
    x, w, panel, chains = interval_rule(lo, lo + 2 * math.pi, chain_points=[lo, lo + 2 * math.pi] if sing else (),
                                        split_points=[s + 2 * math.pi if s < lo else s for s in sing[1:]],
                                        m=10 + 2 * level, depth=30 + 4 * level, pieces=max(1, pieces // (1 + len(sing))))
    zeta = np.exp(1j * x)
    vals = np.asarray(sym.value(Points.disk(zeta, np.zeros_like(x))), dtype=complex)
    ms = np.arange(-(N - 1), N)
    E = np.exp(-1j * np.outer(ms, x)) * (w * vals / (2 * math.pi))[None, :]
    npan = int(panel.max()) + 1
    sums = np.zeros((ms.size, npan), dtype=complex)
    for col in range(npan):
        sel = panel == col
        sums[:, col] = E[:, sel].sum(axis=1)
    keep = np.ones(npan, dtype=bool)
    total = np.zeros(ms.size, dtype=complex)
    for ids, term in chains:
        if term >= 0:
            keep[term] = False
        for i in range(ms.size):
            t, _, div = geometric_tail(sums[i, list(ids)])
            if div:
                raise DivergentTransform("boundary symbol is not integrable")
            total[i] += t
    return total + sums[:, keep].sum(axis=1)


def toeplitz_matrix(space: SpaceParams, symbol, N: int, conjugate: bool = False) -> OperatorMatrix:
    """N x N truncation of T_symbol (or T_conj(symbol)) in the orthonormal monomial basis."""
    sym = as_symbol(symbol)
    if N < 1:
        raise ValueError("N must be positive")
    if sym.analytic:
        c = sym.taylor(N)
        idx = np.arange(N)
        D = idx[:, None] - idx[None, :]
        T = np.where(D >= 0, c[np.clip(D, 0, N - 1)], 0.0).astype(complex)
        ln = monomial_log_norms(space, N)
        T *= np.exp(ln[:, None] - ln[None, :])
        if conjugate:
            T = T.conj().T
    elif space.space == "HardyCircle":
        coef = fourier_coefficients(sym, N)
        idx = np.arange(N)
        T = coef[(idx[:, None] - idx[None, :]) + N - 1]
        if conjugate:
            T = T.conj().T
    else:
        raise UnsupportedSymbol(f"{sym.family} has no matrix elements in {space.space}")
    label = ("conj " if conjugate else "") + sym.dsl()
    basis = "FourierModes" if space.space == "HardyCircle" else "MonomialNormalized"
    return OperatorMatrix(space, basis, T, label)


def product_invertibility_evidence(space: SpaceParams, f, g, p: float = 2.0, Ns=(32, 64, 128)) -> list:
    """(N, smallest singular value of the truncated T_f T_conj(g)) for each N."""
    if p != 2:
        raise ValueError("matrix evidence is only meaningful for p = 2")
    out = []
    for N in Ns:
        F = toeplitz_matrix(space, f, N).entries
        G = toeplitz_matrix(space, g, N).entries
        s = np.linalg.svd(F @ G.conj().T, compute_uv=False)
        out.append((int(N), float(s[-1])))
    return out


def evidence_trend(evidence: list) -> str:
    """Stable when the last value keeps at least half of the first, decaying otherwise."""
    if len(evidence) < 2:
        return "insufficient"
    first, last = evidence[0][1], evidence[-1][1]
    return "stable" if last >= 0.5 * first and last > 1e-8 else "decaying"


# ---------------------------------------------------------------- criteria

@dataclass
class CriterionReport:
    space: SpaceParams
    f: str
    g: str
    inf_product: float
    sup_product: float
    sup_verdict: str
    verdict: str
    trace: list = field(default_factory=list)
    matrix_evidence: list | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        sup = self.sup_product if math.isfinite(self.sup_product) else "inf"
        return {"schema": "weightlab.report/1", "estimate": sup, "verdict": self.verdict,
                "refinement_trace": self.trace,
                "criterion": {"space": self.space.to_dict(), "f": self.f, "g": self.g,
                              "inf_product": self.inf_product, "sup_product": sup,
                              "sup_verdict": self.sup_verdict, "matrix_evidence": self.matrix_evidence},
                "meta": self.meta}


def _rays(syms, count: int = 16):
    base = [2 * math.pi * k / count for k in range(count)]
    extra = [float(np.angle(s)) % (2 * math.pi) for f in syms for s in f.singular_points()]
    return sorted(set(base + extra))


def _sup_verdict(levels: list, growth_divergent: float, min_levels: int = 3, finite_tol: float = 1e-3):
    """Verdict from a list of per-level running sups."""
    if not levels:
        return "Inconclusive"
    if not math.isfinite(levels[-1]):
        return "Divergent"
    for j in range(2, len(levels)):
        if levels[j - 1] > 0 and levels[j] / levels[j - 1] > growth_divergent:
            return "Divergent"
    if len(levels) >= min_levels:
        if levels[-1] <= levels[-2] * (1.0 + finite_tol):
            return "Finite"
        d = np.diff(levels[-4:]) if len(levels) >= 4 else np.array([])
        if d.size == 3 and d[0] > 0 and d[1] > 0:
            r = max(d[1] / d[0], d[2] / d[1])
            if r < 0.95 and d[2] * r / (1 - r) <= finite_tol * levels[-1]:
                return "Finite"
    return "Inconclusive"


def _decaying(mins: list) -> bool:
    if len(mins) < 4:
        return mins[-1] == 0.0 if mins else False
    return mins[-1] == 0.0 or (mins[-1] < 1e-2 and mins[-1] < 0.5 * mins[-4])


def invertibility_criterion(space: SpaceParams, f, g, p: float | None = None, level: int = 2,
                            max_j: int = 16, matrix_Ns=(32, 64, 128)) -> CriterionReport:
    """Inf of |f g| and sup of the twisted transform product over rays 1 - 2^-j, with a verdict."""
    f, g = as_symbol(f), as_symbol(g)
    p = space.p if p is None else p
    q = p / (p - 1.0)
    if space.space not in ("BergmanDisk", "HardyCircle"):
        raise ValueError("invertibility_criterion covers the disk and the circle")
    angles = _rays([f, g])
    inf_run, sup_run = math.inf, 0.0
    mins, sups, trace = [], [], []
    sup_div = False
    for j in range(max_j + 1):
        rho = 1.0 - 0.5 ** j if j else 0.0
        zs = [rho * complex(math.cos(t), math.sin(t)) for t in (angles if j else [0.0])]
        for z in zs:
            pts = Points.disk(np.array([z]))
            inf_run = min(inf_run, float(np.abs(f.value(pts) * g.value(pts))[0]))
            a = kernel_moment(space.space, f, p, z, p, space.gamma, 1, level)
            b = kernel_moment(space.space, g, q, z, q, space.gamma, 1, level)
            if a.verdict == "Divergent" or b.verdict == "Divergent":
                sup_div = True
                break
            val = math.exp(a.meta["log_value"] / p + b.meta["log_value"] / q)
            sup_run = max(sup_run, val)
        mins.append(inf_run)
        sups.append(math.inf if sup_div else sup_run)
        trace.append({"level": j, "points": len(zs), "inf_product": inf_run,
                      "sup_product": sups[-1] if math.isfinite(sups[-1]) else "inf"})
        if sup_div:
            break
        sv = _sup_verdict(sups, 2.0)
        if sv == "Divergent" or (sv == "Finite" and j >= 8 and not _decaying(mins)):
            break
    sup_verdict = _sup_verdict(sups, 2.0)
    if sup_verdict == "Divergent":
        verdict = "Unbounded"
    elif _decaying(mins):
        verdict = "NotInvertible"
    elif sup_verdict == "Finite" and inf_run > 0:
        verdict = "BoundedInvertible"
    else:
        verdict = "Inconclusive"
    evidence = None
    if p == 2 and f.analytic and g.analytic and matrix_Ns:
        evidence = product_invertibility_evidence(space, f, g, 2.0, matrix_Ns)
    return CriterionReport(space, f.dsl(), g.dsl(), inf_run, sups[-1], sup_verdict, verdict, trace, evidence,
                           {"sampling": "rays at 1 - 2^-j", "rays": len(angles), "max_j": max_j})


def _plane_samples(level: int, n: int, count: int = 8):
    if level == 0:
        return [np.zeros(n, complex)]
    rad = 2.0 ** (level - 1)
    out = []
    for k in range(count):
        th = 2 * math.pi * (k + 0.5) / count
        for j in range(n):
            z = np.zeros(n, complex)
            z[j] = rad * complex(math.cos(th), math.sin(th))
            out.append(z)
    return out


def fock_product_criterion(f, g, p: float = 2.0, alpha: float = 1.0, n: int = 1, level: int = 2,
                           max_level: int = 6, growth_divergent: float = 1.5) -> CriterionReport:
    """Sup over lattice shells of the heat-transform product at parameters alpha p / 2 and alpha q / 2."""
    f, g = as_symbol(f), as_symbol(g)
    q = p / (p - 1.0)
    sups, trace, values = [], [], []
    run = 0.0
    for j in range(max_level + 1):
        for z in _plane_samples(j, n):
            try:
                a = heat_tilde_terms([(f, p)], z, alpha * p / 2.0, n, level)
                b = heat_tilde_terms([(g, q)], z, alpha * q / 2.0, n, level)
            except DivergentTransform:
                run = math.inf
                break
            val = math.exp(min(a.meta["log_value"] / p + b.meta["log_value"] / q, 700.0))
            values.append(val)
            run = max(run, val)
        sups.append(run)
        trace.append({"level": j, "sup_product": run if math.isfinite(run) else "inf"})
        if not math.isfinite(run):
            break
    verdict = _sup_verdict(sups, growth_divergent)
    if verdict == "Inconclusive" and len(sups) >= 2 and sups[-1] <= sups[-2] * (1 + 1e-6):
        verdict = "Finite"
    space = SpaceParams("Fock", n=n, alpha=alpha, p=p)
    sup = sups[-1] if verdict != "Divergent" else math.inf
    meta = {"alpha": alpha, "heat_parameters": [alpha * p / 2.0, alpha * q / 2.0], "sampling": "lattice shells"}
    if values:
        meta["min_sampled"] = min(values)
    return CriterionReport(space, f.dsl(), g.dsl(), math.nan, sup, verdict, verdict, trace, None, meta)


def sarason_fock_classifier(f, g, tol: float = 1e-10, N: int = 24) -> dict:
    """Decide whether (f, g) has f g constant and f = e^P with P affine; returns P and the constant."""
    f, g = as_symbol(f), as_symbol(g)
    for s in (f, g):
        if not s.analytic:
            return {"is_pair": False, "reason": "symbol is not entire"}
    cf, cg = f.taylor(N), g.taylor(N)
    if np.all(np.abs(cf) <= tol) or np.all(np.abs(cg) <= tol):
        return {"is_pair": False, "reason": "degenerate symbol"}
    prod = np.convolve(cf, cg)[:N]
    scale = max(np.max(np.abs(prod)), 1.0)
    if np.any(np.abs(prod[1:]) > tol * scale) or abs(prod[0]) <= tol:
        return {"is_pair": False, "reason": "fg nonconstant or g not entire"}
    c = complex(prod[0])
    f0 = complex(cf[0])
    if abs(f0) <= tol:
        return {"is_pair": False, "reason": "f vanishes at the origin"}
    b = complex(cf[1] / f0)
    ref = np.empty(N, dtype=complex)
    ref[0] = f0
    for k in range(1, N):
        ref[k] = ref[k - 1] * b / k
    if np.any(np.abs(cf - ref) > tol * max(np.max(np.abs(ref)), 1.0)):
        return {"is_pair": False, "reason": "log f is not affine"}
    a = complex(np.log(f0))
    return {"is_pair": True, "P": {"constant": _cjson(a), "linear": _cjson(b)},
            "P_text": _affine_text(a, b), "c": _cjson(c)}


def _cjson(v: complex):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


def _affine_text(a: complex, b: complex) -> str:
    def fmt(v):
        v = complex(v)
        return f"{v.real:g}" if v.imag == 0 else f"({v.real:g}{v.imag:+g}j)"
    lin = "z" if b == 1 else f"{fmt(b)} z"
    return lin if a == 0 else f"{fmt(a)} + {lin}"
