"""Batch command line front end.

Every run writes a JSON report (schema ``weightlab.report/1``) that embeds the
full job configuration.  Exit codes: 0 Finite/pass, 2 Divergent/fail,
3 Inconclusive (including any numerical failure), 1 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .geometry import SpaceParams
from .symbols import DSLError, parse_symbol

SCHEMA = "weightlab.report/1"
COMMANDS = ("transform", "characteristic", "classify-power", "criterion", "fock-sarason", "opnorm",
            "rh-certificate", "verify-51", "bmo")
CLASS_ALIASES = {
    "ap-arcs": ("ApArcs", "HardyCircle"), "poisson": ("PoissonAp", "HardyCircle"),
    "ap-inv": ("ApInvariant", "HardyCircle"), "bpgamma": ("BpGammaBalls", "BergmanDisk"),
    "berezin": ("BerezinBpGamma", "BergmanDisk"), "bpgamma-inv": ("BpGammaInvariant", "BergmanDisk"),
    "apr-cubes": ("AprCubes", "Fock"), "heat": ("HeatChar", "Fock"),
}
EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class JobConfig:
    command: str = "characteristic"
    space: str = "BergmanDisk"
    n: int = 1
    gamma: float = 0.0
    alpha: float = 0.25
    beta: float = 1.0
    p: float = 2.0
    r: float = 1.0
    class_kind: str = "bpgamma"
    weight: str = "const:c=1"
    f: str = "const:c=1"
    g: str = "const:c=1"
    transform: str = "berezin"
    z: str = "0"
    s: float = 0.0
    t: float = 1.0
    zeta: float = 0.5
    variant: str = "plain"
    operator: str = "FockP"
    refinements: int = -1
    levels: int = -1
    level: int = 2
    depth: int = 8
    max_j: int = 12
    eps1: float = -1.0
    eps2: float = -1.0
    budget: int = -1
    seed: int = 0
    output: str = ""
    trace_csv: str = ""
    emit_squares: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "JobConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "JobConfig":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------- JSON

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if hasattr(obj, "to_dict"):
        return _clean(obj.to_dict())
    return obj


def render_report(cfg: JobConfig, result: dict, verdict: str, code: int, timestamp: str | None = None) -> str:
    report = {"schema": SCHEMA, "version": __version__, "command": cfg.command, "config": cfg.to_dict(),
              "result": result, "verdict": verdict, "exit_code": code,
              "timestamp": timestamp or datetime.now(timezone.utc).isoformat()}
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- dispatch

def _complex_point(text: str, n: int):
    try:
        vals = [complex(s.replace(" ", "")) for s in text.split(";")]
    except ValueError as exc:
        raise UsageError(f"z: cannot parse {text!r}") from exc
    if n == 1 and len(vals) == 1:
        return vals[0]
    if len(vals) != n:
        raise UsageError(f"z: expected {n} coordinates")
    return np.array(vals)


def _symbol(text: str, field_name: str):
    try:
        return parse_symbol(text)
    except DSLError as exc:
        raise UsageError(f"{field_name}: {exc}") from exc


def _params(cfg: JobConfig, space: str | None = None) -> SpaceParams:
    try:
        return SpaceParams(space or cfg.space, n=cfg.n, gamma=cfg.gamma, alpha=cfg.alpha, p=cfg.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _code(verdict: str) -> int:
    if verdict in ("Finite", "Convergent", "BoundedInvertible", "pass", "member"):
        return EXIT_OK
    if verdict in ("Divergent", "NotInvertible", "Unbounded", "fail", "non-member"):
        return EXIT_FAIL
    return EXIT_INCONCLUSIVE


def _run_transform(cfg):
    from .transforms import berezin, heat_tilde, hardy_moment, poisson_hat, twisted_berezin
    f = _symbol(cfg.f, "f")
    kind = cfg.transform
    if kind == "heat":
        z = _complex_point(cfg.z, cfg.n)
        res = heat_tilde(f, np.atleast_1d(z), cfg.alpha, cfg.n, cfg.level)
    elif kind in ("berezin", "twisted"):
        prm = _params(cfg)
        z = _complex_point(cfg.z, cfg.n)
        res = berezin(f, z, prm, cfg.level) if kind == "berezin" else twisted_berezin(f, z, cfg.s, cfg.t, prm, cfg.level)
    elif kind == "poisson":
        res = poisson_hat(f, _complex_point(cfg.z, 1), cfg.level)
    elif kind == "hardy-moment":
        res = hardy_moment(f, _complex_point(cfg.z, 1), cfg.t, cfg.s, cfg.level)
    else:
        raise UsageError(f"transform: unknown kind {kind!r}")
    return res.to_dict(), res.verdict


def _run_characteristic(cfg):
    from .weight_classes import ClassSpec, characteristic
    if cfg.class_kind not in CLASS_ALIASES:
        raise UsageError(f"class: expected one of {', '.join(CLASS_ALIASES)}")
    kind, space = CLASS_ALIASES[cfg.class_kind]
    w = _symbol(cfg.weight, "weight")
    try:
        spec = ClassSpec(kind, _params(cfg, space), r=cfg.r, alpha=cfg.alpha, beta=cfg.beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep = characteristic(w, spec, None if cfg.refinements < 0 else cfg.refinements, level=cfg.level,
                         seed=cfg.seed)
    if cfg.trace_csv:
        with open(cfg.trace_csv, "w") as fh:
            fh.write(rep.trace_csv())
    return rep.to_dict(), rep.verdict


def _run_classify(cfg):
    from .weight_classes import power_weight_oracle
    if cfg.variant.lower() not in ("plain", "invariant"):
        raise UsageError("variant: expected plain or invariant")
    if cfg.p <= 1 or cfg.gamma <= -1:
        raise UsageError("need p > 1 and gamma > -1")
    member = power_weight_oracle(cfg.zeta, cfg.p, cfg.gamma, cfg.n, cfg.variant)
    return {"member": member, "zeta": cfg.zeta, "p": cfg.p, "gamma": cfg.gamma, "n": cfg.n,
            "variant": cfg.variant}, ("member" if member else "non-member")


def _run_criterion(cfg):
    from .operators import invertibility_criterion
    space = cfg.space
    if space not in ("BergmanDisk", "HardyCircle"):
        raise UsageError("space: criterion supports bergman or hardy")
    rep = invertibility_criterion(_params(cfg, space), _symbol(cfg.f, "f"), _symbol(cfg.g, "g"), cfg.p,
                                  cfg.level, cfg.max_j)
    return rep.to_dict(), rep.verdict


def _run_sarason(cfg):
    from .operators import fock_product_criterion, sarason_fock_classifier
    f, g = _symbol(cfg.f, "f"), _symbol(cfg.g, "g")
    out = sarason_fock_classifier(f, g)
    try:
        crit = fock_product_criterion(f, g, cfg.p, cfg.alpha, cfg.n, cfg.level)
        out["criterion"] = crit.to_dict()
    except Exception as exc:  # the classifier answer stands on its own
        out["criterion"] = {"error": str(exc)}
    return out, ("pass" if out["is_pair"] else "fail")


def _run_opnorm(cfg):
    from .operators import weighted_opnorm
    if cfg.operator not in ("FockP", "FockH", "BergmanP"):
        raise UsageError("operator: expected FockP, FockH or BergmanP")
    rep = weighted_opnorm(cfg.operator, _symbol(cfg.weight, "weight"), cfg.p, cfg.alpha, cfg.gamma, cfg.n,
                          None if cfg.levels < 0 else range(0, cfg.levels + 1))
    if cfg.trace_csv:
        with open(cfg.trace_csv, "w") as fh:
            fh.write("level,nodes,estimate\n")
            for t in rep.trace:
                fh.write(f"{t['level']},{t['nodes']},{float(t['estimate'])!r}\n")
    return rep.to_dict(), rep.verdict


def _run_rh(cfg):
    from .reverse_holder import rh_certificate
    cert = rh_certificate(_symbol(cfg.f, "f"), cfg.p, cfg.gamma, cfg.depth, cfg.emit_squares or None)
    return cert.to_dict(), ("pass" if cert.passed else "fail")


def _run_verify(cfg):
    from .reverse_holder import rh_certificate, verify_theorem51
    f = _symbol(cfg.f, "f")
    e1, e2 = cfg.eps1, cfg.eps2
    out = {}
    if e1 <= 0 or e2 <= 0:
        cert = rh_certificate(f, cfg.p, cfg.gamma, cfg.depth)
        e1, e2 = cert.epsilon1, cert.epsilon2
        out["certificate"] = cert.to_dict()
        if e1 <= 0:
            return out, "Inconclusive"
    res = verify_theorem51(f, cfg.p, cfg.gamma, e1, e2, cfg.max_j, cfg.level)
    out.update(res)
    return out, res["verdict_52"]


def _run_bmo(cfg):
    from .weight_classes import bmo_diagnostics
    res = bmo_diagnostics(_symbol(cfg.f, "f"), cfg.r, cfg.p, cfg.n,
                          6 if cfg.refinements < 0 else cfg.refinements)
    return res, res["bmo_seminorm_verdict"]


RUNNERS = {"transform": _run_transform, "characteristic": _run_characteristic, "classify-power": _run_classify,
           "criterion": _run_criterion, "fock-sarason": _run_sarason, "opnorm": _run_opnorm,
           "rh-certificate": _run_rh, "verify-51": _run_verify, "bmo": _run_bmo}


def run(cfg: JobConfig, timestamp: str | None = None) -> tuple[int, str]:
    """Execute a job; returns (exit code, JSON report text).  Usage problems raise UsageError."""
    if cfg.command not in RUNNERS:
        raise UsageError(f"command: expected one of {', '.join(COMMANDS)}")
    old_budget = os.environ.get("WEIGHTLAB_BUDGET")
    if cfg.budget > 0:
        os.environ["WEIGHTLAB_BUDGET"] = str(cfg.budget)
    try:
        try:
            result, verdict = RUNNERS[cfg.command](cfg)
        except UsageError:
            raise
        except Exception as exc:  # numerical failures never escape as crashes
            result, verdict = {"error": f"{type(exc).__name__}: {exc}"}, "Inconclusive"
    finally:
        if cfg.budget > 0:
            if old_budget is None:
                os.environ.pop("WEIGHTLAB_BUDGET", None)
            else:
                os.environ["WEIGHTLAB_BUDGET"] = old_budget
    code = _code(verdict)
    text = render_report(cfg, result, verdict, code, timestamp)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    return code, text


# ---------------------------------------------------------------- argparse

def _add_common(sp):
    sp.add_argument("--config", help="JSON job config; explicit flags override it")
    sp.add_argument("--output", "-o", help="report path (default: stdout)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--budget", type=int, help="cap on region/node counts (also WEIGHTLAB_BUDGET)")
    sp.add_argument("--level", type=int, help="quadrature level")
    sp.add_argument("--p", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--n", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weightlab", description="Weighted Bergman/Hardy/Fock computations.")
    ap.add_argument("--version", action="version", version=f"weightlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("transform", help="Berezin, twisted Berezin, Poisson or heat transform at a point")
    _add_common(sp)
    sp.add_argument("--kind", dest="transform", choices=["berezin", "twisted", "poisson", "heat", "hardy-moment"])
    sp.add_argument("--f")
    sp.add_argument("--z", help="point, e.g. 0.3+0.4j (';' separates coordinates)")
    sp.add_argument("--s", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--space")

    sp = sub.add_parser("characteristic", help="weight-class characteristic with verdict")
    _add_common(sp)
    sp.add_argument("--class", dest="class_kind", choices=sorted(CLASS_ALIASES))
    sp.add_argument("--weight")
    sp.add_argument("--r", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--refinements", type=int)
    sp.add_argument("--trace-csv", dest="trace_csv")

    sp = sub.add_parser("classify-power", help="closed-form membership of (1-|z|^2)^zeta")
    _add_common(sp)
    sp.add_argument("--zeta", type=float)
    sp.add_argument("--variant", choices=["plain", "invariant"])

    sp = sub.add_parser("criterion", help="boundedness/invertibility criterion for T_f T_conj(g)")
    _add_common(sp)
    sp.add_argument("--space", choices=["bergman", "hardy"])
    sp.add_argument("--f")
    sp.add_argument("--g")
    sp.add_argument("--max-j", dest="max_j", type=int)

    sp = sub.add_parser("fock-sarason", help="Fock product classifier and heat criterion")
    _add_common(sp)
    sp.add_argument("--f")
    sp.add_argument("--g")

    sp = sub.add_parser("opnorm", help="weighted operator norm of a discretized projection")
    _add_common(sp)
    sp.add_argument("--operator", choices=["FockP", "FockH", "BergmanP"])
    sp.add_argument("--weight")
    sp.add_argument("--levels", type=int)
    sp.add_argument("--trace-csv", dest="trace_csv")

    sp = sub.add_parser("rh-certificate", help="reverse-Hölder constants chain for w = |f|^p")
    _add_common(sp)
    sp.add_argument("--f")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--emit-squares", dest="emit_squares", help="per-rectangle CSV path")

    sp = sub.add_parser("verify-51", help="raised-exponent product sup on boundary rays")
    _add_common(sp)
    sp.add_argument("--f")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--eps1", type=float)
    sp.add_argument("--eps2", type=float)
    sp.add_argument("--max-j", dest="max_j", type=int)

    sp = sub.add_parser("bmo", help="BO, BA^p and BMO^p diagnostics on the plane")
    _add_common(sp)
    sp.add_argument("--f")
    sp.add_argument("--r", type=float)
    sp.add_argument("--refinements", type=int)
    return ap


_DEFAULT_SPACE = {"criterion": "BergmanDisk", "opnorm": "Fock", "bmo": "Fock", "fock-sarason": "Fock",
                  "transform": "BergmanDisk"}
_SPACE_ALIASES = {"hardy": "HardyCircle", "bergman": "BergmanDisk", "ball": "BergmanBall", "fock": "Fock"}


def config_from_args(args: argparse.Namespace) -> JobConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config: {exc}") from exc
    names = {f.name for f in fields(JobConfig)}
    for k, v in vars(args).items():
        if k in names and v is not None:
            base[k] = v
    base["command"] = args.command
    space = str(base.get("space", _DEFAULT_SPACE.get(args.command, "BergmanDisk")))
    base["space"] = _SPACE_ALIASES.get(space.lower(), space)
    if args.command == "transform" and base.get("transform") == "heat":
        base["space"] = "Fock"
    return JobConfig.from_dict(base)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        cfg = config_from_args(args)
        code, text = run(cfg)
    except UsageError as exc:
        print(f"weightlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not cfg.output:
        sys.stdout.write(text)
    return code
