"""Domains, metrics, region families, the Bergman tree of the disk and lattice paths."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, asdict
from typing import Iterable

import numpy as np

TWO_PI = 2.0 * math.pi
SPACES = ("BergmanDisk", "BergmanBall", "HardyCircle", "Fock")


@dataclass(frozen=True)
class SpaceParams:
    space: str = "BergmanDisk"
    n: int = 1
    gamma: float = 0.0
    alpha: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.p <= 1:
            raise ValueError("p must exceed 1")
        if self.space in ("BergmanDisk", "BergmanBall") and self.gamma <= -1:
            raise ValueError("gamma must exceed -1")
        if self.space == "Fock" and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.space == "HardyCircle" and self.n != 1:
            raise ValueError("HardyCircle forces n = 1")
        if self.space == "BergmanDisk" and self.n != 1:
            raise ValueError("BergmanDisk is n = 1; use BergmanBall")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Region:
    """A region of one of the supported kinds.

    ``params`` holds the geometric data (JSON friendly), ``measure`` the mass
    under the reference measure of the space.
    """

    kind: str
    params: dict
    measure: float
    depth: int = 0
    index: int = 0
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": _jsonable(self.params), "measure": self.measure,
               "depth": self.depth, "index": self.index}
        if self.flags:
            out["flags"] = dict(self.flags)
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


# ---------------------------------------------------------------- metrics

def _unit(z):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    nz = np.linalg.norm(z)
    if nz == 0:
        e = np.zeros_like(z)
        e[0] = 1.0
        return e
    return z / nz


def pseudo_metric(z, u) -> float:
    """d(z, u) = ||z| - |u|| + |1 - <z/|z|, u/|u|>| on the closed ball.

    The origin is given the direction e_1 so the function is total.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    radial = abs(np.linalg.norm(z) - np.linalg.norm(u))
    inner = np.vdot(_unit(u), _unit(z))  # sum z_j conj(u_j)
    return float(radial + abs(1.0 - inner))


def mobius_disk(u, w):
    """phi_u(w) = (u - w) / (1 - conj(u) w); an involution swapping 0 and u."""
    return (u - w) / (1.0 - np.conj(u) * w)


def mobius_ball(a, z):
    """The involutive automorphism of B_n swapping 0 and a (rows of z are points)."""
    a = np.asarray(a, dtype=complex)
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    aa = float(np.real(np.vdot(a, a)))
    if aa == 0.0:
        return -z
    inner = z @ a.conj()  # <z, a>
    Pz = np.outer(inner / aa, a)
    Qz = z - Pz
    sa = math.sqrt(1.0 - aa)
    return (a[None, :] - Pz - sa * Qz) / (1.0 - inner)[:, None]


def mobius_omr2(u, w, omr2_w):
    """1 - |phi_u(w)|^2 computed without cancellation."""
    return (1.0 - abs(u) ** 2) * omr2_w / np.abs(1.0 - np.conj(u) * w) ** 2


def bergman_distance(c, z) -> float:
    """Hyperbolic distance (1/2) log((1 + |phi_c(z)|) / (1 - |phi_c(z)|))."""
    t = abs(mobius_disk(c, z))
    if t >= 1.0:
        return math.inf
    return float(math.atanh(t))


def bergman_disk_contains(center, R: float, z, rtol: float = 1e-12) -> bool:
    """Closed Bergman disk membership, with a relative rounding allowance."""
    return bergman_distance(center, z) <= R * (1.0 + rtol) + rtol


# ---------------------------------------------------------------- polar boxes

def annular_measure(s_lo, s_hi, dtheta, gamma: float):
    """A_gamma of {1 - s_hi <= r < 1 - s_lo, angular width dtheta}, closed form.

    The radial antiderivative of (gamma+1)/pi (1-r^2)^gamma r is
    -(1-r^2)^(gamma+1) / (2 pi); 1 - r^2 = s (2 - s) is used for accuracy.
    """
    s_lo = np.asarray(s_lo, dtype=float)
    s_hi = np.asarray(s_hi, dtype=float)
    g1 = gamma + 1.0
    outer = np.where(s_lo > 0, (s_lo * (2.0 - s_lo)) ** g1, 0.0)
    inner = (s_hi * (2.0 - s_hi)) ** g1
    return np.asarray(dtheta) / TWO_PI * (inner - outer)


@dataclass(frozen=True)
class PolarBox:
    """{r e^{it}: 1 - s_hi <= r < 1 - s_lo, t_lo <= t < t_hi}."""

    s_lo: float
    s_hi: float
    t_lo: float
    t_hi: float

    def measure(self, gamma: float) -> float:
        return float(annular_measure(self.s_lo, self.s_hi, self.t_hi - self.t_lo, gamma))

    @property
    def center(self) -> complex:
        r = 1.0 - 0.5 * (self.s_lo + self.s_hi)
        return r * complex(math.cos(0.5 * (self.t_lo + self.t_hi)), math.sin(0.5 * (self.t_lo + self.t_hi)))

    def contains(self, z: complex) -> bool:
        s = 1.0 - abs(z)
        t = math.atan2(z.imag, z.real) % TWO_PI
        return self.s_lo < s <= self.s_hi and self.t_lo <= t < self.t_hi if self.s_lo > 0 else \
            0 <= s <= self.s_hi and self.t_lo <= t < self.t_hi

    def corners(self) -> list[complex]:
        out = []
        for s in (self.s_lo, self.s_hi):
            for t in (self.t_lo, self.t_hi):
                out.append((1.0 - s) * complex(math.cos(t), math.sin(t)))
        return out


# ---------------------------------------------------------------- Bergman tree

@dataclass(frozen=True)
class TreeNode:
    """Node beta = (depth, k) of the Bergman tree, 0 <= k < 2^depth.

    The Carleson square has radial extent h = 2^-depth and angular extent
    2 pi h starting at 2 pi k h; its bottom half T is the inner radial half.
    """

    depth: int
    k: int

    def __post_init__(self):
        if self.depth < 0 or not 0 <= self.k < 2 ** self.depth:
            raise ValueError(f"bad tree index {(self.depth, self.k)}")

    @property
    def h(self) -> float:
        return 0.5 ** self.depth

    @property
    def square(self) -> PolarBox:
        h = self.h
        return PolarBox(0.0, h, TWO_PI * self.k * h, TWO_PI * (self.k + 1) * h)

    @property
    def top(self) -> PolarBox:
        """The bottom half T_beta = {1 - h <= r < 1 - h/2}."""
        h = self.h
        return PolarBox(0.5 * h, h, TWO_PI * self.k * h, TWO_PI * (self.k + 1) * h)

    @property
    def center(self) -> complex:
        """Radial-angular centre of T_beta."""
        h = self.h
        r = 1.0 - 0.75 * h
        t = TWO_PI * (self.k + 0.5) * h
        return r * complex(math.cos(t), math.sin(t))

    def children(self) -> tuple["TreeNode", "TreeNode"]:
        return TreeNode(self.depth + 1, 2 * self.k), TreeNode(self.depth + 1, 2 * self.k + 1)

    def parent(self) -> "TreeNode | None":
        return None if self.depth == 0 else TreeNode(self.depth - 1, self.k // 2)

    def is_ancestor_of(self, other: "TreeNode") -> bool:
        """beta <= beta' iff S_beta' is contained in S_beta."""
        d = other.depth - self.depth
        return d >= 0 and other.k >> d == self.k

    def as_rect(self) -> "DyadicRect":
        N = self.depth
        return DyadicRect(N, 2 ** N, self.k + 1)

    def to_dict(self, gamma: float = 0.0) -> dict:
        c = self.center
        return {"kind": "CarlesonSquare", "params": {"beta": [self.depth, self.k], "center": [c.real, c.imag]},
                "measure": self.square.measure(gamma), "depth": self.depth, "index": self.k,
                "top_measure": self.top.measure(gamma)}


def tree_decompose(gamma: float, max_depth: int) -> list[dict]:
    """All nodes of depth <= max_depth with S, T, c and their A_gamma measures."""
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    out = []
    for d in range(max_depth + 1):
        for k in range(2 ** d):
            node = TreeNode(d, k)
            out.append({"node": node, "S": node.square, "T": node.top, "center": node.center,
                        "A_S": node.square.measure(gamma), "A_T": node.top.measure(gamma)})
    return out


@dataclass(frozen=True)
class DyadicRect:
    """Q_{N,m,k} = {(m-1) 2^-N <= r < m 2^-N, (k-1) 2^{1-N} pi <= t < k 2^{1-N} pi}, 1 <= m, k <= 2^N."""

    N: int
    m: int
    k: int

    @property
    def box(self) -> PolarBox:
        h = 0.5 ** self.N
        return PolarBox(1.0 - self.m * h, 1.0 - (self.m - 1) * h,
                        (self.k - 1) * TWO_PI * h, self.k * TWO_PI * h)

    @property
    def center(self) -> complex:
        h = 0.5 ** self.N
        t = (self.k - 0.5) * TWO_PI * h
        return (self.m - 0.5) * h * complex(math.cos(t), math.sin(t))

    def double(self) -> "DyadicRect":
        """2Q: the containing rectangle one quadrisection shallower."""
        if self.N == 0:
            raise ValueError("the disk has no double")
        return DyadicRect(self.N - 1, (self.m + 1) // 2, (self.k + 1) // 2)

    def measure(self, gamma: float) -> float:
        return self.box.measure(gamma)

    @property
    def touches_boundary(self) -> bool:
        return self.m == 2 ** self.N

    def to_dict(self, gamma: float = 0.0) -> dict:
        c = self.center
        return {"kind": "DyadicRect", "params": {"n": self.N, "m": self.m, "k": self.k, "center": [c.real, c.imag]},
                "measure": self.measure(gamma), "depth": self.N, "index": self.k}


def dyadic_subrects(S: TreeNode, depth: int) -> list[tuple[DyadicRect, DyadicRect]]:
    """All (Q, 2Q) obtained from up to ``depth`` quadrisections of S_beta."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    root = S.as_rect()
    out = []
    frontier = [root]
    for _ in range(depth):
        nxt = []
        for Q in frontier:
            for dm in (0, 1):
                for dk in (0, 1):
                    child = DyadicRect(Q.N + 1, 2 * Q.m - dm, 2 * Q.k - dk)
                    out.append((child, Q))
                    nxt.append(child)
        frontier = nxt
    return out


def enumerate_rects(depth: int):
    """All dyadic rectangles of the disk with N <= depth as arrays (N, m, k, s_lo, s_hi, t_lo, t_hi).

    Every dyadic subrectangle of any S_beta is a dyadic rectangle of the disk,
    so the union of the per-square families with d(beta) + quadrisections <= depth
    is exactly this list.
    """
    Ns, ms, ks = [], [], []
    for N in range(depth + 1):
        M = 2 ** N
        m, k = np.meshgrid(np.arange(1, M + 1), np.arange(1, M + 1), indexing="ij")
        Ns.append(np.full(M * M, N)); ms.append(m.ravel()); ks.append(k.ravel())
    N = np.concatenate(Ns); m = np.concatenate(ms); k = np.concatenate(ks)
    h = 0.5 ** N
    s_lo = np.maximum(1.0 - m * h, 0.0)
    s_hi = 1.0 - (m - 1) * h
    t_lo = (k - 1) * TWO_PI * h
    t_hi = k * TWO_PI * h
    return {"N": N, "m": m, "k": k, "s_lo": s_lo, "s_hi": s_hi, "t_lo": t_lo, "t_hi": t_hi}


def neighbor_union(beta: TreeNode, gamma: float = 0.0) -> Region:
    """S~_beta = S_(n,k-1) u S_(n,k) u S_(n,k+1), indices mod 2^n."""
    if beta.depth < 1:
        raise ValueError("neighbor_union needs depth >= 1")
    M = 2 ** beta.depth
    ks = sorted({(beta.k - 1) % M, beta.k, (beta.k + 1) % M})
    nodes = [TreeNode(beta.depth, k) for k in ks]
    return Region("NeighborUnion", {"beta": [beta.depth, beta.k], "members": [[n.depth, n.k] for n in nodes]},
                  float(sum(n.square.measure(gamma) for n in nodes)), depth=beta.depth, index=beta.k)


def rect_bergman_radius(Q: DyadicRect) -> float:
    """Largest Bergman distance from z_Q to a corner of Q."""
    c = Q.center
    return max(bergman_distance(c, w) for w in Q.box.corners())


# ---------------------------------------------------------------- lattice paths

@dataclass
class LatticePath:
    r: float
    start: np.ndarray
    end: np.ndarray
    segments: list
    points: np.ndarray

    @property
    def length(self) -> int:
        return int(self.points.shape[0] - 1)


def discrete_path(nu, nu2, r: float) -> LatticePath:
    """Axis-aligned lattice path from nu to nu2, correcting coordinates in ascending order."""
    a = np.asarray(nu, dtype=float)
    b = np.asarray(nu2, dtype=float)
    ia = np.rint(a / r).astype(np.int64)
    ib = np.rint(b / r).astype(np.int64)
    if not (np.allclose(ia * r, a, atol=1e-9 * max(1.0, r)) and np.allclose(ib * r, b, atol=1e-9 * max(1.0, r))):
        raise ValueError("endpoints must lie on the lattice r Z^{2n}")
    cur = ia.copy()
    pts = [cur.copy()]
    segments = []
    for j in range(ia.size):
        d = int(ib[j] - cur[j])
        if d == 0:
            continue
        step = 1 if d > 0 else -1
        seg_start = cur.copy()
        for _ in range(abs(d)):
            cur[j] += step
            pts.append(cur.copy())
        segments.append({"coord": j, "start": (seg_start * r).tolist(), "end": (cur * r).tolist(), "steps": abs(d)})
    return LatticePath(r, a, b, segments, np.asarray(pts, dtype=float) * r)


# ---------------------------------------------------------------- region families

def region_budget() -> int:
    return int(os.environ.get("WEIGHTLAB_BUDGET", "2000000"))


def region_sampler(params: SpaceParams, class_kind: str, refinement: int, seed=None,
                   r: float = 1.0, jitter: float = 0.0, focus_angles: Iterable[float] = (),
                   radial_symmetry: bool = False) -> list[Region]:
    """Deterministic region family at the given refinement.

    ApArcs: dyadic arcs of length 2 pi 2^-j, j <= refinement.
    BpGammaBalls: pseudo-balls of radius 2^-j meeting the boundary, centres on rays.
    AprCubes: cubes of side r centred on r Z^{2n} within radius 2^refinement r.
    Each region carries its level in ``depth``; the family at j is a prefix of the family at j+1.
    """
    if refinement < 0:
        raise ValueError("refinement must be >= 0")
    rng = np.random.default_rng(seed) if jitter else None
    out: list[Region] = []
    if class_kind == "ApArcs":
        total = 2 ** (refinement + 1) - 1
        if total > region_budget():
            raise ValueError(f"region count {total} exceeds budget")
        for j in range(refinement + 1):
            L = TWO_PI * 0.5 ** j
            for k in range(2 ** j):
                out.append(Region("Arc", {"start": k * L, "length": L}, 0.5 ** j, depth=j, index=k))
        return out
    if class_kind == "BpGammaBalls":
        for j in range(refinement + 1):
            out.extend(_ball_family_level(j, focus_angles, radial_symmetry, rng, jitter))
        if len(out) > region_budget():
            raise ValueError("region count exceeds budget")
        return out
    if class_kind == "AprCubes":
        dim = 2 * params.n
        M = 2 ** refinement
        count = (2 * M + 1) ** dim
        if count > region_budget():
            raise ValueError(f"region count {count} exceeds budget")
        ax = np.arange(-M, M + 1)
        mesh = np.meshgrid(*([ax] * dim), indexing="ij")
        I = np.stack([g.ravel() for g in mesh], axis=-1)
        rad = np.sqrt(np.sum(I * I, axis=1))
        keep = rad <= M + 1e-9
        I, rad = I[keep], rad[keep]
        lev = np.where(rad <= 1.0 + 1e-9, 0, np.ceil(np.log2(np.maximum(rad, 1.0)) - 1e-9)).astype(int)
        order = np.lexsort((np.arange(I.shape[0]), lev))
        for idx in order:
            c = I[idx] * r
            if rng is not None:
                c = c + jitter * r * rng.uniform(-0.5, 0.5, size=dim)
            out.append(Region("Cube", {"center": c.tolist(), "side": r}, r ** dim, depth=int(lev[idx]), index=int(idx)))
        return out
    raise ValueError(f"no region family for {class_kind!r}")


def _ball_family_level(j: int, focus_angles, radial_symmetry: bool, rng, jitter: float) -> list[Region]:
    R = 0.5 ** j
    if radial_symmetry:
        angles = [0.0]
    else:
        nray = min(4 * 2 ** j, 64)
        angles = sorted(set([TWO_PI * i / nray for i in range(nray)] + [float(a) % TWO_PI for a in focus_angles]))
    out = []
    idx = 0
    for frac in (0.5, 0.125):
        rho = 1.0 - frac * R
        for a in angles:
            if rng is not None:
                a = a + jitter * R * rng.uniform(-0.5, 0.5)
            c = rho * complex(math.cos(a), math.sin(a))
            out.append(Region("PseudoBall", {"center": [c.real, c.imag], "radius": R}, float("nan"),
                              depth=j, index=idx, flags={"boundary_intersecting": R >= 1.0 - rho}))
            idx += 1
    return out
