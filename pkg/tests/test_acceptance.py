"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line (run with -s to see them)."""
import json
import math
import time

import numpy as np
import pytest

from weightlab.cli import JobConfig, run
from weightlab.geometry import SpaceParams, discrete_path
from weightlab.operators import (
    apply_projection, fock_grid, fock_product_criterion, gaussian_margin, invertibility_criterion,
    product_invertibility_evidence, sarason_fock_classifier, weighted_opnorm,
)
from weightlab.reverse_holder import c1_characteristic, rh_certificate, verify_theorem51
from weightlab.transforms import berezin, heat_tilde
from weightlab.weight_classes import ClassSpec, characteristic, path_ratio_check, power_weight_oracle


def report(k, ok, detail):
    print(f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_acceptance_1_power_weight_classification():
    t0 = time.time()
    bad, checked = [], 0
    for gamma in (0.0, 1.0):
        for p in (1.5, 2.0, 4.0):
            lo, hi = -1.0 - gamma, (1.0 + gamma) * (p - 1.0)
            for zeta in (-1.5, -0.5, 0.0, 0.5, 1.5, 2.5):
                if min(abs(zeta - lo), abs(zeta - hi)) < 0.1:
                    continue
                checked += 1
                rep = characteristic(f"power:zeta={zeta}", ClassSpec("BpGammaBalls", SpaceParams(p=p, gamma=gamma)))
                if (rep.verdict == "Finite") != power_weight_oracle(zeta, p, gamma, 1, "Plain"):
                    bad.append((zeta, p, gamma, rep.verdict))
    elapsed = time.time() - t0
    report(1, not bad and elapsed <= 600, f"{checked} grid points, mismatches={bad}, {elapsed:.1f}s")


def test_acceptance_2_fock_sarason_constant():
    worst, classified = 0.0, True
    for b in (0.5, 1.0):
        for alpha in (0.5, 1.0):
            for p in (1.5, 2.0):
                rep = fock_product_criterion(f"explinear:b={b}", f"explinear:b={-b}", p=p, alpha=alpha)
                target = math.exp(b * b / alpha)
                # every sampled value lies between the min and the sup
                for v in (rep.sup_product, rep.meta["min_sampled"]):
                    worst = max(worst, abs(v - target) / target)
        res = sarason_fock_classifier(f"explinear:b={b}", f"explinear:b={-b}")
        classified &= (res["is_pair"] and res["P"]["linear"] == pytest.approx(b)
                       and res["P"]["constant"] == pytest.approx(0.0) and res["c"] == pytest.approx(1.0))
    report(2, worst <= 1e-5 and classified, f"worst relative error {worst:.2e}, classifier ok={classified}")


def test_acceptance_3_four_way_agreement():
    weights = {"1": "const:c=1", "exp(0.3x1)": "expreal:c=0.3;0", "exp|x1|": "expabs:c=1",
               "exp(0.1|x|^2)": "expquad:delta=0.1"}
    rows, ok = [], True
    for name, w in weights.items():
        verdicts, traces = [], []
        for r in (0.5, 1.0, 2.0):
            rep = characteristic(w, ClassSpec("AprCubes", SpaceParams("Fock"), r=r))
            verdicts.append(rep.verdict)
            traces.append([t[2] for t in rep.refinement_trace])
        for kind in ("FockH", "FockP"):
            rep = weighted_opnorm(kind, w)
            verdicts.append(rep.verdict)
            traces.append([t["estimate"] for t in rep.trace])
        agree = len(set(verdicts)) == 1 and verdicts[0] in ("Finite", "Divergent")
        ok &= agree
        if name == "exp(0.1|x|^2)":
            ok &= verdicts[0] == "Divergent"
            for tr in traces:
                finite = [v for v in tr if math.isfinite(v)]
                ok &= len(finite) >= 2 and finite[-1] >= 2 * finite[-2]
        rows.append(f"{name}:{verdicts[0] if agree else verdicts}")
    report(3, ok, "; ".join(rows))


def test_acceptance_4_lattice_paths():
    rng = np.random.default_rng(4)
    ok = True
    for n in (1, 2):
        r = 0.5
        A = rng.integers(-20, 21, size=(10_000, 2 * n)) * r
        B = rng.integers(-20, 21, size=(10_000, 2 * n)) * r
        for a, b in zip(A, B):
            L = discrete_path(a, b, r).length
            l1 = np.abs(a - b).sum() / r
            ok &= L == round(l1) and L <= math.sqrt(2 * n) * np.linalg.norm(a - b) / r + 1e-9
    pr = path_ratio_check("expreal:c=0.3;0", 1.0, 2.0, pairs=1000)
    report(4, bool(ok) and pr["pass"], f"path identities ok={bool(ok)}, ratio bound pass={pr['pass']} K={pr['K']:.4g}")


def test_acceptance_5_reverse_holder_pipeline():
    t0 = time.time()
    f = "analytic:a=0.1"
    c7, _ = c1_characteristic(f, 2.0, 0.0, 7)
    cert = rh_certificate(f, 2.0, 0.0, 8)
    stable = math.isfinite(cert.C1) and abs(cert.C1 - c7) <= 0.05 * cert.C1
    exact = cert.delta == 1 - 1 / (4 * cert.C1)
    res = verify_theorem51(f, 2.0, 0.0, cert.epsilon1, cert.epsilon2, max_j=12)
    elapsed = time.time() - t0
    ok = stable and exact and cert.passed and res["verdict_52"] == "Finite" and elapsed <= 1800
    report(5, ok, f"C1 depth7={c7:.5g} depth8={cert.C1:.5g}, delta exact={exact}, "
                  f"rectangle inequality={cert.evidence['rh_inequality']} on {cert.evidence['rectangles']}, "
                  f"raised sup={res['sup_52']:.5g} {res['verdict_52']}, {elapsed:.0f}s")


def test_acceptance_6_invertibility_corroboration():
    hardy = SpaceParams("HardyCircle", p=2.0)
    good = invertibility_criterion(hardy, "analytic:a=0.3", "analytic:a=-0.3", matrix_Ns=())
    ev_good = dict(product_invertibility_evidence(hardy, "analytic:a=0.3", "analytic:a=-0.3", Ns=(128, 256)))
    bad = invertibility_criterion(hardy, "analytic:a=0.6", "analytic:a=-0.6", matrix_Ns=())
    ev_bad = dict(product_invertibility_evidence(hardy, "analytic:a=0.6", "analytic:a=-0.6", Ns=(64, 256)))
    ok_good = good.verdict == "BoundedInvertible" and ev_good[256] > 0.9 * ev_good[128]
    ok_bad = bad.verdict != "BoundedInvertible" and ev_bad[256] < 0.5 * ev_bad[64]
    report(6, ok_good and ok_bad,
           f"a=0.3 {good.verdict} smin128={ev_good[128]:.4g} smin256={ev_good[256]:.4g}; "
           f"a=0.6 {bad.verdict} smin64={ev_bad[64]:.4g} smin256={ev_bad[256]:.4g} "
           f"(ratio {ev_bad[256] / ev_bad[64]:.3f}, need < 0.5)")


def test_acceptance_7_closed_forms():
    worst_b = 0.0
    for gamma in (0.0, 1.0):
        for zeta in (-0.5, 0.5, 1.0):
            v = berezin(f"power:zeta={zeta}", 0j, SpaceParams(gamma=gamma)).value
            worst_b = max(worst_b, abs(v - (gamma + 1) / (gamma + zeta + 1)))
    worst_h = 0.0
    alpha = 0.5
    for c, z in [((0.3, -0.2), 0.4 + 0.1j), ((1.0, 0.5), -1.0 + 0.7j), ((-0.7, 0.0), 0.0j)]:
        got = heat_tilde(f"expreal:c={c[0]};{c[1]}", z, alpha).value
        want = math.exp(c[0] * z.real + c[1] * z.imag + (c[0] ** 2 + c[1] ** 2) / (4 * alpha))
        worst_h = max(worst_h, abs(got - want) / want)
    worst_f = 0.0
    for n, alpha in ((1, 1.0), (2, 2.0)):
        g = fock_grid(alpha, n=n, R=gaussian_margin(alpha) + 0.5, accurate_radius=0.5)
        rows = np.nonzero(g.mask())[0]
        v = apply_projection("FockH", "const:c=1", g, rows=rows)
        worst_f = max(worst_f, float(np.max(np.abs(v - (2 * math.pi / alpha) ** n))))
    ok = worst_b <= 1e-7 and worst_h <= 1e-7 and worst_f <= 1e-7
    report(7, ok, f"berezin err={worst_b:.1e}, heat rel err={worst_h:.1e}, FockH(1) err={worst_f:.1e}")


def test_acceptance_8_arc_poisson_comparability():
    ok, rows = True, []
    for a in (0.1, 0.2, 0.3, 0.4):
        w = f"abspow:base=analytic(1-z)^{a},s=2"
        arc = characteristic(w, ClassSpec("ApArcs", SpaceParams("HardyCircle", p=2.0)))
        poi = characteristic(w, ClassSpec("PoissonAp", SpaceParams("HardyCircle", p=2.0)))
        good = (arc.verdict == poi.verdict == "Finite"
                and arc.estimate / 10 <= poi.estimate <= 10 * arc.estimate ** 3)
        ok &= good
        rows.append(f"a={a}: arc {arc.verdict} {arc.estimate:.4g}, poisson {poi.verdict} {poi.estimate:.4g}")
    report(8, ok, "; ".join(rows))


JOBS = [
    JobConfig(command="transform", transform="berezin", weight="power:zeta=0.5", z="0.3+0.2j"),
    JobConfig(command="characteristic", class_kind="bpgamma", weight="power:zeta=0.5", refinements=4),
    JobConfig(command="classify-power", zeta=2.5, p=4.0, variant="invariant"),
    JobConfig(command="criterion", space="HardyCircle", f="analytic:a=0.3", g="analytic:a=-0.3", max_j=6),
    JobConfig(command="fock-sarason", f="explinear:b=1", g="scale:2,explinear:b=-1"),
    JobConfig(command="opnorm", operator="FockP", weight="expreal:c=0.3;0", levels=2, seed=5),
    JobConfig(command="rh-certificate", f="analytic:a=0.1", depth=5),
    JobConfig(command="verify-51", f="analytic:a=0.1", max_j=4, eps1=0.05, eps2=0.05),
    JobConfig(command="bmo", f="linear:c=1", refinements=3),
]


def test_acceptance_9_determinism():
    diffs = []
    for cfg in JOBS:
        outs = []
        for _ in range(2):
            data = json.loads(run(cfg)[1])
            data.pop("timestamp")
            outs.append(json.dumps(data, sort_keys=True, indent=2))
        if outs[0] != outs[1]:
            diffs.append(cfg.command)
    report(9, not diffs, f"{len(JOBS)} commands, differing={diffs}")
