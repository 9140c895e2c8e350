"""Closed-form symbol and weight families, and the weight DSL.

Every weight or symbol used by the engines is one of the families below.
A family is evaluated on a :class:`Points` bundle, which carries the first
complex coordinate, the squared norm, and (on bounded domains) an accurately
computed ``1 - |z|^2`` so that boundary-hugging nodes do not lose digits.

DSL grammar (comma separated ``key=value`` parameters)::

    const:c=1
    power:zeta=0.5
    analytic:a=0.3                     (1 - z)^a
    abspow:base=analytic(1-z)^0.3,s=2  |base|^s, base may also be [nested spec]
    explinear:b=1                      e^{b z}, b may be complex (1-2j)
    expquad:delta=0.1                  e^{delta |x|^2}
    expabs:c=1                         e^{c |x_1|}
    expreal:c=1;0.5                    e^{c . x} on the real coordinates
    coordpow:a=0.5                     |x_1|^a
    linear:c=1                         c x_1 (real)
    logabs:base=[explinear:b=1]        log |base|
    poly:c=1;2;0.5                     Taylor polynomial
    scale:2,explinear:b=-1             constant multiple of another spec
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class UnsupportedSymbol(ValueError):
    """Raised when an operation needs data a family cannot provide."""


class DSLError(ValueError):
    pass


@dataclass
class Points:
    """Evaluation points.

    ``z1`` is the first complex coordinate, ``sq`` the squared Euclidean norm
    and ``omr2`` the quantity ``1 - |z|^2`` (``None`` on the plane).
    """

    z1: np.ndarray
    sq: np.ndarray
    omr2: np.ndarray | None = None
    full: np.ndarray | None = None

    @classmethod
    def disk(cls, z, omr2=None) -> "Points":
        z = np.asarray(z, dtype=complex)
        sq = (z * z.conj()).real
        if omr2 is None:
            omr2 = 1.0 - sq
        return cls(z, sq, np.asarray(omr2, dtype=float), None)

    @classmethod
    def ball(cls, z, omr2=None) -> "Points":
        z = np.asarray(z, dtype=complex)
        sq = np.sum((z * z.conj()).real, axis=-1)
        if omr2 is None:
            omr2 = 1.0 - sq
        return cls(z[..., 0], sq, np.asarray(omr2, dtype=float), z)

    @classmethod
    def plane(cls, z) -> "Points":
        """``z`` has shape ``(..., n)``; a 1-d complex array is read as n = 1."""
        z = np.asarray(z, dtype=complex)
        if z.ndim == 1:
            z = z[:, None]
        sq = np.sum((z * z.conj()).real, axis=-1)
        return cls(z[..., 0], sq, None, z)


class Symbol:
    """Base class of all families."""

    family = "abstract"
    analytic = False
    positive = False

    def value(self, pts: Points) -> np.ndarray:
        raise NotImplementedError

    def log_abs(self, pts: Points) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.value(pts)))

    def abs_pow(self, pts: Points, t: float) -> np.ndarray:
        return np.exp(t * self.log_abs(pts))

    def taylor(self, N: int) -> np.ndarray:
        raise UnsupportedSymbol(f"{self.family} has no Taylor data")

    def singular_points(self) -> list[complex]:
        """Boundary points of the disk where |f| vanishes or blows up."""
        return []

    def kinks_x1(self) -> list[float]:
        """Values of x_1 where the function is not smooth (plane only)."""
        return []

    def growth(self) -> tuple[float, float, int]:
        """(quadratic, linear, polynomial degree) bound on log|f| on the plane."""
        return (0.0, 0.0, 0)

    @property
    def radial(self) -> bool:
        return False

    def dsl(self) -> str:
        raise NotImplementedError

    def __call__(self, pts: Points) -> np.ndarray:
        return self.value(pts)

    def __repr__(self):
        return f"Symbol({self.dsl()})"


def _fmt(x) -> str:
    x = complex(x)
    if x.imag == 0:
        return repr(float(x.real))
    return repr(x).strip("()")


class Constant(Symbol):
    family = "const"
    analytic = True

    def __init__(self, c=1.0):
        self.c = complex(c) if complex(c).imag else float(np.real(c))
        self.positive = isinstance(self.c, float) and self.c > 0

    def value(self, pts):
        return np.full(np.shape(pts.z1), self.c, dtype=complex if isinstance(self.c, complex) else float)

    def log_abs(self, pts):
        with np.errstate(divide="ignore"):
            return np.full(np.shape(pts.z1), math.log(abs(self.c)) if self.c != 0 else -np.inf)

    def taylor(self, N):
        out = np.zeros(N, dtype=complex)
        out[0] = self.c
        return out

    @property
    def radial(self):
        return True

    def dsl(self):
        return f"const:c={_fmt(self.c)}"


class PowerWeight(Symbol):
    positive = True
    """(1 - |z|^2)^zeta on the disk or ball."""

    family = "power"

    def __init__(self, zeta: float):
        self.zeta = float(zeta)

    def log_abs(self, pts):
        with np.errstate(divide="ignore"):
            return self.zeta * np.log(pts.omr2)

    def value(self, pts):
        return np.exp(self.log_abs(pts))

    @property
    def radial(self):
        return True

    def dsl(self):
        return f"power:zeta={_fmt(self.zeta)}"


class AnalyticPower(Symbol):
    """(1 - z)^a with the principal branch."""

    family = "analytic"
    analytic = True

    def __init__(self, a: float):
        self.a = float(a)

    def value(self, pts):
        return np.exp(self.a * np.log(1.0 - pts.z1))

    def log_abs(self, pts):
        with np.errstate(divide="ignore"):
            return self.a * np.log(np.abs(1.0 - pts.z1))

    def taylor(self, N):
        # binom(a, j) (-1)^j by its ratio recurrence
        out = np.empty(N)
        out[0] = 1.0
        for j in range(1, N):
            out[j] = out[j - 1] * (j - 1 - self.a) / j
        return out.astype(complex)

    def singular_points(self):
        return [] if self.a == 0 else [1.0 + 0j]

    def dsl(self):
        return f"analytic:a={_fmt(self.a)}"


class ExpLinear(Symbol):
    """e^{b z_1}."""

    family = "explinear"
    analytic = True

    def __init__(self, b):
        self.b = complex(b)

    def value(self, pts):
        return np.exp(self.b * pts.z1)

    def log_abs(self, pts):
        return (self.b * pts.z1).real

    def taylor(self, N):
        out = np.empty(N, dtype=complex)
        out[0] = 1.0
        for j in range(1, N):
            out[j] = out[j - 1] * self.b / j
        return out

    def growth(self):
        return (0.0, abs(self.b), 0)

    def dsl(self):
        return f"explinear:b={_fmt(self.b)}"


class ExpQuadReal(Symbol):
    positive = True
    """e^{delta |x|^2}."""

    family = "expquad"

    def __init__(self, delta: float):
        self.delta = float(delta)

    def log_abs(self, pts):
        return self.delta * pts.sq

    def value(self, pts):
        return np.exp(self.log_abs(pts))

    def growth(self):
        return (self.delta, 0.0, 0)

    @property
    def radial(self):
        return True

    def dsl(self):
        return f"expquad:delta={_fmt(self.delta)}"


class ExpAbs(Symbol):
    positive = True
    """e^{c |x_1|}."""

    family = "expabs"

    def __init__(self, c: float):
        self.c = float(c)

    def log_abs(self, pts):
        return self.c * np.abs(pts.z1.real)

    def value(self, pts):
        return np.exp(self.log_abs(pts))

    def kinks_x1(self):
        return [0.0]

    def growth(self):
        return (0.0, abs(self.c), 0)

    def dsl(self):
        return f"expabs:c={_fmt(self.c)}"


class CoordPower(Symbol):
    positive = True
    """|x_1|^a."""

    family = "coordpow"

    def __init__(self, a: float):
        self.a = float(a)

    def log_abs(self, pts):
        with np.errstate(divide="ignore"):
            return self.a * np.log(np.abs(pts.z1.real))

    def value(self, pts):
        return np.exp(self.log_abs(pts))

    def kinks_x1(self):
        return [0.0]

    def growth(self):
        return (0.0, 0.0, int(math.ceil(max(self.a, 0.0))))

    def dsl(self):
        return f"coordpow:a={_fmt(self.a)}"


class Linear(Symbol):
    """The real function c x_1 (not a weight; used by the BMO diagnostics)."""

    family = "linear"

    def __init__(self, c: float):
        self.c = float(c)

    def value(self, pts):
        return self.c * pts.z1.real

    def growth(self):
        return (0.0, 0.0, 1)

    def dsl(self):
        return f"linear:c={_fmt(self.c)}"


class ExpReal(Symbol):
    """e^{c . x} for a real vector c acting on the real coordinates (x_1, y_1, x_2, ...)."""

    family = "expreal"
    positive = True

    def __init__(self, c):
        self.c = np.atleast_1d(np.asarray(c, dtype=float))

    def log_abs(self, pts):
        z = pts.full if pts.full is not None else pts.z1[..., None]
        x = np.stack([z.real, z.imag], axis=-1).reshape(z.shape[:-1] + (2 * z.shape[-1],))
        m = min(self.c.size, x.shape[-1])
        return x[..., :m] @ self.c[:m]

    def value(self, pts):
        return np.exp(self.log_abs(pts))

    def growth(self):
        return (0.0, float(np.linalg.norm(self.c)), 0)

    def dsl(self):
        return "expreal:c=" + ";".join(_fmt(v) for v in self.c)


class TaylorPoly(Symbol):
    family = "poly"
    analytic = True

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        self.coeffs = c if c.size else np.zeros(1, dtype=complex)

    def value(self, pts):
        z = pts.z1
        out = np.zeros(np.shape(z), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out

    def taylor(self, N):
        out = np.zeros(N, dtype=complex)
        m = min(N, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return out

    def growth(self):
        return (0.0, 0.0, int(self.coeffs.size - 1))

    def singular_points(self):
        # zeros on the unit circle, where |f|^t degenerates
        c = np.trim_zeros(self.coeffs, "b")
        if c.size < 2:
            return []
        roots = np.roots(c[::-1])
        return [complex(r / abs(r)) for r in roots if abs(abs(r) - 1.0) < 1e-8]

    def dsl(self):
        return "poly:c=" + ";".join(_fmt(c) for c in self.coeffs)


class AbsPower(Symbol):
    positive = True
    """|base|^s."""

    family = "abspow"

    def __init__(self, base: Symbol, s: float):
        self.base = base
        self.s = float(s)

    def log_abs(self, pts):
        return self.s * self.base.log_abs(pts)

    def value(self, pts):
        return np.exp(self.log_abs(pts))

    def singular_points(self):
        return self.base.singular_points()

    def kinks_x1(self):
        return self.base.kinks_x1()

    def growth(self):
        q, l, d = self.base.growth()
        return (abs(self.s) * q, abs(self.s) * l, int(math.ceil(abs(self.s) * d)))

    @property
    def radial(self):
        return self.base.radial

    def dsl(self):
        return f"abspow:base=[{self.base.dsl()}],s={_fmt(self.s)}"


class LogAbs(Symbol):
    """log |base| (a real function)."""

    family = "logabs"

    def __init__(self, base: Symbol):
        self.base = base

    def value(self, pts):
        return self.base.log_abs(pts)

    def kinks_x1(self):
        return self.base.kinks_x1()

    def growth(self):
        q, l, d = self.base.growth()
        return (0.0, 0.0, 2 if q else (1 if l else 1))

    def dsl(self):
        return f"logabs:base=[{self.base.dsl()}]"


class Scaled(Symbol):
    family = "scale"

    def __init__(self, c, base: Symbol):
        self.c = complex(c) if complex(c).imag else float(np.real(c))
        self.base = base
        self.analytic = base.analytic
        self.positive = base.positive and isinstance(self.c, float) and self.c > 0

    def value(self, pts):
        return self.c * self.base.value(pts)

    def log_abs(self, pts):
        return math.log(abs(self.c)) + self.base.log_abs(pts)

    def taylor(self, N):
        return self.c * self.base.taylor(N)

    def singular_points(self):
        return self.base.singular_points()

    def kinks_x1(self):
        return self.base.kinks_x1()

    def growth(self):
        return self.base.growth()

    @property
    def radial(self):
        return self.base.radial

    def dsl(self):
        return f"scale:{_fmt(self.c)},{self.base.dsl()}"


class Inverse(Symbol):
    """1/base, used for f^{-1} in the reverse-Hölder pipeline."""

    family = "inverse"

    def __init__(self, base: Symbol):
        self.base = base
        self.analytic = base.analytic

    def value(self, pts):
        return 1.0 / self.base.value(pts)

    def log_abs(self, pts):
        return -self.base.log_abs(pts)

    def singular_points(self):
        return self.base.singular_points()

    def dsl(self):
        return f"inverse:base=[{self.base.dsl()}]"


def inverse(f: Symbol) -> Symbol:
    if isinstance(f, AnalyticPower):
        return AnalyticPower(-f.a)
    if isinstance(f, ExpLinear):
        return ExpLinear(-f.b)
    if isinstance(f, Constant):
        return Constant(1.0 / f.c)
    return Inverse(f)


# ---------------------------------------------------------------- parsing

def _split_top(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _num(text: str):
    text = text.strip().replace(" ", "")
    try:
        v = complex(text)
    except ValueError as exc:
        raise DSLError(f"not a number: {text!r}") from exc
    return v.real if v.imag == 0 else v


def _base(text: str) -> Symbol:
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        return parse_symbol(text[1:-1])
    if text.startswith("analytic(1-z)^"):
        return AnalyticPower(_num(text[len("analytic(1-z)^"):]).real)
    return parse_symbol(text)


def _kv(params: list[str], allowed: set[str], family: str) -> dict[str, str]:
    out = {}
    for item in params:
        if not item:
            continue
        if "=" not in item:
            raise DSLError(f"{family}: expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k not in allowed:
            raise DSLError(f"{family}: unknown parameter {k!r}")
        out[k] = v.strip()
    return out


def parse_symbol(text: str) -> Symbol:
    """Parse a DSL string into a :class:`Symbol`."""
    text = text.strip()
    if ":" not in text:
        raise DSLError(f"missing family tag in {text!r}")
    family, rest = text.split(":", 1)
    family = family.strip().lower()
    if family == "scale":
        head = _split_top(rest)
        if len(head) < 2:
            raise DSLError("scale needs a factor and a spec")
        return Scaled(_num(head[0]), parse_symbol(",".join(head[1:])))
    params = _split_top(rest)
    if family == "const":
        kv = _kv(params, {"c"}, family)
        return Constant(_num(kv.get("c", "1")))
    if family == "power":
        kv = _kv(params, {"zeta"}, family)
        return PowerWeight(_num(kv["zeta"]).real)
    if family == "analytic":
        kv = _kv(params, {"a"}, family)
        return AnalyticPower(_num(kv["a"]).real)
    if family == "explinear":
        kv = _kv(params, {"b"}, family)
        return ExpLinear(_num(kv["b"]))
    if family == "expquad":
        kv = _kv(params, {"delta"}, family)
        return ExpQuadReal(_num(kv["delta"]).real)
    if family == "expabs":
        kv = _kv(params, {"c"}, family)
        return ExpAbs(_num(kv.get("c", "1")).real)
    if family == "coordpow":
        kv = _kv(params, {"a"}, family)
        return CoordPower(_num(kv["a"]).real)
    if family == "linear":
        kv = _kv(params, {"c"}, family)
        return Linear(_num(kv.get("c", "1")).real)
    if family == "expreal":
        kv = _kv(params, {"c"}, family)
        return ExpReal([_num(c).real for c in kv["c"].split(";")])
    if family == "poly":
        kv = _kv(params, {"c"}, family)
        return TaylorPoly([_num(c) for c in kv["c"].split(";")])
    if family == "abspow":
        kv = _kv(params, {"base", "s"}, family)
        return AbsPower(_base(kv["base"]), _num(kv.get("s", "1")).real)
    if family == "logabs":
        kv = _kv(params, {"base"}, family)
        return LogAbs(_base(kv["base"]))
    if family == "inverse":
        kv = _kv(params, {"base"}, family)
        return inverse(_base(kv["base"]))
    raise DSLError(f"unknown family {family!r}")


def as_symbol(obj) -> Symbol:
    if isinstance(obj, Symbol):
        return obj
    if isinstance(obj, str):
        return parse_symbol(obj)
    raise TypeError(f"cannot interpret {obj!r} as a symbol")


LogFunc = Callable[[Points], np.ndarray]
