"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that is printed at the end of the pytest
session (and directly when this file is run as a script).
"""
import io
import math
import time

import numpy as np
import pytest

from punitive.greedy import find_pi_bar, partial_info_utility, verify_truth_revealing
from punitive.market import best_response_price, example_one, sbe_dynamic, supplier_utility
from punitive.misreport import identity_policy, validate
from punitive.presets import run_fig2_left, run_fig2_right
from punitive.sim import PunitiveSpec, SimConfig, run, trace_csv_text
from punitive.strategic import (asymptotic_utility, closed_form, find_pi_bar_strategic,
                                fixed_point, fixed_points, identity_check, n_index, ode_rhs)

from conftest import random_model, random_policy

VERDICTS = {}
TRUTH = 362.5


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[n] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def ex1():
    return example_one()


def test_c01_analytic_equilibrium(ex1):
    t0 = time.perf_counter()
    out = sbe_dynamic(ex1)
    elapsed = time.perf_counter() - t0
    # nested brute force per state: supplier grid outside, manufacturer best response inside
    brute = 0.0
    for phi, s in zip(ex1.support, ex1.probs):
        qs = np.arange(0.0, phi / ex1.alpha, 0.01)
        ps = np.array([best_response_price(phi, q, ex1) for q in qs])
        us = np.array([supplier_utility(p, q, phi, ex1) for p, q in zip(ps, qs)])
        k = int(np.argmax(us))
        brute += s * max(phi - ex1.alpha * ps[k], 0.0) * (ps[k] - qs[k] - ex1.cm)
    ok = (abs(out.expected_u_m - 362.5) < 1e-9 and abs(out.expected_u_s - 725.0) < 1e-9
          and elapsed < 1.0 and abs(brute - 362.5) < 1e-3)
    assert record(1, ok, f"u_m={out.expected_u_m!r} u_s={out.expected_u_s!r} "
                         f"brute={brute:.6f} t={elapsed * 1e3:.2f}ms")


def test_c02_truth_is_pi_invariant(ex1):
    vals = {pi: partial_info_utility(identity_policy(3), pi, ex1) for pi in (0, 1, 5, 10, 100)}
    worst = max(abs(v - TRUTH) for v in vals.values())
    assert record(2, worst < 1e-9, f"max |u - 362.5| = {worst:.2e} over pi in {list(vals)}")


def test_c03_figure_two(ex1):
    t0 = time.perf_counter()
    rows = run_fig2_left(seed=0, replications=10)
    elapsed = time.perf_counter() - t0
    curve = {pi: {r.r21: r.mean for r in rows if r.pi == pi} for pi in (1.0, 5.0, 10.0)}
    low = curve[1.0][1.0] > curve[1.0][0.0]
    margins = {}
    for pi in (5.0, 10.0):
        vals = sorted(curve[pi].values(), reverse=True)
        margins[pi] = (max(curve[pi], key=curve[pi].get) == 0.0, vals[0] - vals[1])
    high = all(at0 and m > 1.0 for at0, m in margins.values())
    right = {(c.pi, c.label): c.u_m_bar[-1] for c in run_fig2_right(seed=0, replications=10)}
    transient = all(right[(pi, "truthful")] > right[(pi, "misreport")] for pi in (5.0, 10.0))
    ok = low and high and transient and elapsed < 60
    assert record(3, ok, f"pi=1 u(1)-u(0)={curve[1.0][1.0] - curve[1.0][0.0]:.2f}; "
                         f"margins pi=5 {margins[5.0][1]:.2f}, pi=10 {margins[10.0][1]:.2f}; "
                         f"right-panel truthful wins={transient}; t={elapsed:.1f}s")


def test_c04_greedy_threshold(ex1):
    res = find_pi_bar(ex1, grid_step=0.25, pi_max=20.0, pi_step=0.5)
    ok = res.found and 1.0 < res.pi_bar <= 10.0
    margin = float("nan")
    if ok:
        check = verify_truth_revealing(res.pi_bar, ex1, 0.25)
        margin = check.margin
        ok = check.truth_revealing and margin > 1e-9
    assert record(4, ok, f"pi_bar={res.pi_bar} min margin over {res.checks[0].n_policies - 1} "
                         f"deviations={margin:.4f}")


def test_c05_truthful_attractor(ex1):
    ident = identity_policy(3)
    target = (ex1.phi - ex1.cost_floor) / 4
    d_err = max(abs(fixed_point(j, ident, pi, ex1).d_star - target[j])
                for j in range(3) for pi in (1.0, 10.0, 100.0))
    t = run(SimConfig(ex1, ident, PunitiveSpec("II", 5.0), 100_000, 0, 0.0))
    mc_err = float(np.max(np.abs(t.summary.d_bar / target - 1)))
    u_err = max(abs(asymptotic_utility(ident, pi, ex1) - TRUTH) for pi in (1.0, 10.0, 100.0))
    ok = d_err < 1e-10 and mc_err < 0.02 and u_err < 1e-9
    assert record(5, ok, f"|d*-target|={d_err:.1e} MC rel err={mc_err:.4f} |U-362.5|={u_err:.1e}")


def test_c06_simulation_matches_limit(ex1):
    rng = np.random.default_rng(2024)
    worst, parts = 0.0, []
    for k in range(5):
        r = random_policy(rng, 3)
        limit = asymptotic_utility(r, 5.0, ex1)
        sim = run(SimConfig(ex1, r, PunitiveSpec("II", 5.0), 100_000, 100 + k, 2.0)).summary.u_m_bar
        rel = abs(sim / limit - 1)
        worst = max(worst, rel)
        parts.append(f"{sim:.1f}/{limit:.1f}")
    assert record(6, worst < 0.05, f"sim/limit {' '.join(parts)} worst rel err={worst:.4f}")


def test_c07_strategic_threshold(ex1):
    rng = np.random.default_rng(7)
    bad = []
    for k in range(20):
        r = random_policy(rng, 3)
        res = find_pi_bar_strategic(r, ex1, pi_max=1e4)
        if not res.found:
            bad.append((k, res.scanned[-1], res.utilities[-1]))
            continue
        u2 = asymptotic_utility(r, 2 * res.pi_bar, ex1)
        if not u2 < TRUTH:
            bad.append((k, 2 * res.pi_bar, u2))
    detail = f"{20 - len(bad)}/20 policies with a threshold <= 1e4"
    if bad:
        detail += f"; e.g. policy {bad[0][0]} utility {bad[0][2]:.2f} at pi={bad[0][1]:g} vs 362.5"
    assert record(7, not bad, detail)


def test_c08_identity():
    rng = np.random.default_rng(8)
    worst = max(identity_check(random_model(rng)) for _ in range(1000))
    assert record(8, worst < 1e-9, f"max residual over 1000 models={worst:.2e}")


def test_c09_drift_structure():
    rng = np.random.default_rng(9)
    fails, worst_res, worst_gap = 0, 0.0, 0.0
    for _ in range(200):
        model = random_model(rng, int(rng.integers(2, 6)))
        r = random_policy(rng, model.n_states)
        pi = float(rng.uniform(0.01, 100))
        reported = np.nonzero(r.report_probs(model) > 0)[0]
        j = int(rng.choice(reported))
        grid = np.linspace(0.0, model.support[-1], 201)
        g = np.array([ode_rhs(d, j, r, pi, model) for d in grid])
        a = fixed_point(j, r, pi, model)
        gap = abs(closed_form(j, n_index(a.d_star, j, pi, model), r, pi, model) - a.d_star)
        worst_res, worst_gap = max(worst_res, a.residual), max(worst_gap, gap)
        if not (g[0] > 0 and g[-1] < 0 and np.all(np.diff(g) < 0)
                and a.residual < 1e-10 and gap < 1e-8):
            fails += 1
    assert record(9, fails == 0, f"{200 - fails}/200 cases; max residual={worst_res:.1e} "
                                 f"max self-consistency gap={worst_gap:.1e}")


def test_c10_determinism_and_recursions(ex1):
    greedy = validate([[1, 0, 0], [0.4, 0.6, 0], [0.3, 0.2, 0.5]], "greedy")
    general = validate([[0.5, 0.5, 0], [0.2, 0.6, 0.2], [0, 0.4, 0.6]])
    cfg1 = SimConfig(ex1, greedy, PunitiveSpec("I", 5.0), 10_000, 77)
    cfg2 = SimConfig(ex1, general, PunitiveSpec("II", 5.0), 10_000, 77, 2.0)
    same = all(trace_csv_text(run(c)) == trace_csv_text(run(c)) for c in (cfg1, cfg2))
    t1, t2 = run(cfg1), run(cfg2)
    T = 10_000
    errs = [
        abs(t1.phi_bar[-1] - ex1.phi[t1.reported_state].sum() / T),
        abs(t1.u_m_bar[-1] - math.fsum(t1.u_m) / T),
        abs(t1.u_s_bar[-1] - math.fsum(t1.u_s) / T),
        abs(t2.u_m_bar[-1] - math.fsum(t2.u_m) / T),
    ]
    for j in range(3):
        mask = t2.reported_state == j
        errs.append(abs(t2.d_bar[-1, j] - t2.demand[mask].sum() / mask.sum()))
    worst = max(errs)
    assert record(10, same and worst < 1e-9, f"byte-identical={same} max recursion gap={worst:.1e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
