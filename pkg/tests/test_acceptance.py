"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest -m acceptance -s tests/test_acceptance.py``.
Criteria 1 and 2 run the Monte Carlo at full stated size and take minutes.
"""
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from fgc.cli import main
from fgc.fda import (
    Curve,
    CurveSeries,
    Grid,
    SemiMetricSpec,
    kernel_eval,
    second_derivative,
    semi_metric,
)
from fgc.gcgmc import Decision, WindowPlan, gcgmc_value, run_expanding_window
from fgc.ingest import cpi_normalize, log_returns, read_curves, write_curves
from fgc.nw import BandwidthSearch, NwModel, bandwidth_search, nw_autopredict, nw_predict
from fgc.report import parse_report
from fgc.simulate import McPlan, psi_hilbert_schmidt_norm, run_monte_carlo

from . import oracles
from .test_gcgmc import random_pair, rotation_pair

pytestmark = pytest.mark.acceptance

MC_SEED = 20240601


@pytest.fixture
def verdict(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}")
        return passed
    return emit


@pytest.fixture(scope="module")
def mc_n250():
    start = time.perf_counter()
    res = run_monte_carlo(McPlan((250,), (50,), replications=30, master_seed=MC_SEED))
    return res.cell(250, 50), time.perf_counter() - start


def test_criterion_1_simulation_trend(mc_n250, verdict):
    cell, elapsed = mc_n250
    ok = (elapsed < 300 and cell.predictable_rate >= 0.75 and cell.causal_rate >= 0.40)
    verdict(1, ok,
            f"n=250 p=50 reps=30: predictable {cell.count_predictable}/30 (need >= 0.75), "
            f"causal {cell.count_causal}/30 (need >= 0.40), undefined {cell.undefined_count}, "
            f"{elapsed:.0f}s (need < 300s)")
    assert elapsed < 300
    assert cell.predictable_rate >= 0.75
    assert cell.causal_rate >= 0.40


def test_criterion_2_sample_size_trend(mc_n250, verdict):
    base = mc_n250[0].predictable_rate
    big = run_monte_carlo(McPlan((500,), (50,), replications=20, master_seed=MC_SEED)).cell(500, 50)
    ok = big.predictable_rate >= base - 0.10
    verdict(2, ok, f"predictable n=500: {big.predictable_rate:.3f} vs n=250: {base:.3f} - 0.10")
    assert ok


def test_criterion_3_constructed_causality(tmp_path, verdict, capsys):
    x, y = rotation_pair()
    write_curves(x, tmp_path / "x.csv")
    write_curves(y, tmp_path / "y.csv")
    reports = {}
    for name, a, b in (("fwd", "x", "y"), ("swap", "y", "x")):
        out = tmp_path / f"{name}.txt"
        assert main(["analyze", "--x", str(tmp_path / f"{a}.csv"), "--y", str(tmp_path / f"{b}.csv"),
                     "--out", str(out)]) == 0
        reports[name] = parse_report(out.read_text())
    fwd, swap = reports["fwd"], reports["swap"]
    ok = (fwd["decision"] == Decision.X_CAUSES_Y.value
          and float(fwd["gcgmc_y"]) > 0.5
          and swap["decision"] == Decision.Y_CAUSES_X.value
          and swap["gcgmc_x"] == fwd["gcgmc_y"] and swap["gcgmc_y"] == fwd["gcgmc_x"])
    verdict(3, ok, f"decision {fwd['decision']}, gcgmc_y={float(fwd['gcgmc_y']):.4f}, "
                   f"swapped decision {swap['decision']}")
    assert ok


def test_criterion_4_estimator_oracle(verdict):
    rng = np.random.default_rng(4)
    worst, mismatched_bw, instances = 0.0, 0, 60
    for k in range(instances):
        n = int(rng.integers(3, 7))
        p = int(rng.integers(3, 11))
        g = Grid.uniform(p) if k % 2 else Grid(np.sort(rng.uniform(0, 1, p)) + 1e-3 * np.arange(p))
        pred = rng.normal(size=(n, p)).cumsum(axis=1)
        resp = rng.normal(size=(n, p))
        x_new = rng.normal(size=p).cumsum()
        h = float(rng.choice([0.05, 0.5, 5.0, 50.0]))
        ser = lambda v: CurveSeries(g, v, min_length=1)
        got = nw_predict(NwModel(ser(pred), ser(resp), h), Curve(g, x_new)).values
        worst = max(worst, np.max(np.abs(got - oracles.nw(pred, resp, g.points, h, x_new, 2))))
        got = nw_autopredict(ser(resp), h, x_new=Curve(g, x_new)).values
        worst = max(worst, np.max(np.abs(got - oracles.autopredict(resp, g.points, h, x_new, 2))))
        search = BandwidthSearch()
        sel = bandwidth_search(ser(pred), ser(resp), search)
        cands, scores = oracles.loocv_scores(pred, resp, g.points, g.points, search.quantile_grid, 2)
        ours = int(np.flatnonzero(sel.candidates == sel.bandwidth)[0])
        best = min(scores)
        # same argmin candidate: ours scores minimal under the oracle, and no earlier
        # candidate reaches the oracle minimum
        same = (abs(scores[ours] - best) <= 1e-12 * abs(best)
                and all(s > best + 1e-12 * abs(best) for s in scores[:ours])
                and abs(sel.bandwidth - cands[ours]) <= 1e-12 * cands[ours])
        mismatched_bw += not same
    ok = worst <= 1e-10 and mismatched_bw == 0
    verdict(4, ok, f"{instances} instances: max |NW - oracle| = {worst:.2e} (need <= 1e-10), "
                   f"bandwidth argmin mismatches {mismatched_bw}")
    assert ok


def test_criterion_5_numerical_primitives(verdict):
    checks = {}
    kint, _ = integrate.quad(lambda t: kernel_eval(t), 0, 1)
    checks["kernel integral"] = abs(kint - 1) <= 1e-9

    rng = np.random.default_rng(5)
    sym = True
    for _ in range(1000):
        p = int(rng.integers(3, 30))
        g = Grid.uniform(p) if rng.random() < 0.5 else Grid(np.sort(rng.uniform(0, 1, p)) + 1e-3 * np.arange(p))
        a, b = Curve(g, rng.normal(size=p)), Curve(g, rng.normal(size=p))
        spec = SemiMetricSpec(int(rng.integers(0, 3)))
        d = semi_metric(a, b, spec)
        sym &= d >= 0 and d == semi_metric(b, a, spec) and semi_metric(a, a, spec) == 0.0
    checks["semi-metric axioms (1000 pairs)"] = sym

    g = Grid.uniform(60)
    base = np.sin(3 * g.points) + g.points**3
    checks["affine annihilation"] = semi_metric(
        Curve(g, base), Curve(g, base + 7.5 - 3.25 * g.points), SemiMetricSpec(2)
    ) == 0.0

    quad_err = np.max(np.abs(second_derivative(Curve(g, 4 * g.points**2 - g.points)).values - 8))
    checks["quadratic stencil"] = quad_err < 1e-8
    g200 = Grid.uniform(200)
    u = g200.points
    sine_dev = np.max(np.abs(second_derivative(Curve(g200, np.sin(2 * np.pi * u))).values
                             + 4 * np.pi**2 * np.sin(2 * np.pi * u)))
    checks["sin second derivative p=200"] = sine_dev <= 0.05

    v = np.linspace(0, 1, 4001)
    psi = 0.34 * np.exp((v[:, None] ** 2 + v[None, :] ** 2) / 2)
    hs = np.sqrt(np.trapezoid(np.trapezoid(psi**2, v, axis=1), v))
    checks["psi HS norm"] = abs(hs - 0.497) < 5e-4 and hs < 1 and \
        abs(hs - psi_hilbert_schmidt_norm(0.34)) < 1e-6

    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    verdict(5, ok, f"sin dev {sine_dev:.4f}, quadratic err {quad_err:.1e}, HS {hs:.6f}"
                   + (f"; failed: {failed}" if failed else ""))
    assert ok


def test_criterion_6_gcgmc_identities(verdict):
    ids = (gcgmc_value(2.5, 2.5) == 0.0 and gcgmc_value(0.0, 2.5) == 1.0
           and gcgmc_value(5.0, 2.5) == -1.0)
    x, y = random_pair(seed=6)
    plan = WindowPlan(30, 22)
    base = run_expanding_window(x, y, plan)
    dev = 0.0
    for c in (3.7, -0.5, 1e-3, 250.0):
        s = run_expanding_window(CurveSeries(x.grid, c * x.values), CurveSeries(y.grid, c * y.values), plan)
        dev = max(dev, abs(s.gcgmc_x - base.gcgmc_x), abs(s.gcgmc_y - base.gcgmc_y))
    ok = ids and dev <= 1e-10
    verdict(6, ok, f"identities {'hold' if ids else 'broken'}, max rescaling drift {dev:.1e}")
    assert ok


def test_criterion_7_climate_signs(verdict, capsys):
    slp, sst = os.environ.get("FGC_SLP_CURVES"), os.environ.get("FGC_SST_CURVES")
    if not (slp and sst):
        with capsys.disabled():
            print("\nCRITERION 7: SKIP - set FGC_SLP_CURVES and FGC_SST_CURVES to yearly "
                  "1951-2018 curve files (non-gating)")
        pytest.skip("climate curve files not provided")
    x, y = read_curves(Path(slp)), read_curves(Path(sst))
    rep = run_expanding_window(x, y, WindowPlan(len(x), 33))
    ok = rep.gcgmc_x is not None and rep.gcgmc_x > 0 and rep.gcgmc_y < 0
    verdict(7, ok, f"GcGMC(pressure)={rep.gcgmc_x}, GcGMC(temperature)={rep.gcgmc_y}")
    assert ok


def test_criterion_8_determinism_and_io(tmp_path, verdict, capsys):
    sim = ["simulate", "--n", "40", "--p", "10", "--reps", "2", "--seed", "11", "--workers", "1"]
    for name in ("a", "b"):
        assert main(sim + ["--out", str(tmp_path / f"{name}.csv")]) == 0
    sim_same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    x, y = random_pair(seed=8)
    write_curves(x, tmp_path / "x.csv")
    write_curves(y, tmp_path / "y.csv")
    for name in ("r1", "r2"):
        assert main(["analyze", "--x", str(tmp_path / "x.csv"), "--y", str(tmp_path / "y.csv"),
                     "--out", str(tmp_path / f"{name}.txt")]) == 0
    rep_same = (tmp_path / "r1.txt").read_bytes() == (tmp_path / "r2.txt").read_bytes()

    rng = np.random.default_rng(8)
    g = Grid(np.cumsum(rng.uniform(0.01, 1, 9)))
    vals = rng.normal(size=(12, 9)) * 10.0 ** rng.integers(-6, 6, size=(12, 1))
    write_curves(CurveSeries(g, vals), tmp_path / "rt.csv")
    back = read_curves(tmp_path / "rt.csv").values
    rt_err = float(np.max(np.abs(back - vals) / np.abs(vals)))

    prices = rng.uniform(5, 50, size=(10, 20))
    cpi = rng.uniform(80, 120, size=(10, 20))
    ps, cs = CurveSeries(Grid.uniform(20), prices), CurveSeries(Grid.uniform(20), cpi)
    lr_err = float(np.max(np.abs(log_returns(ps).values - np.diff(np.log(prices), axis=1))))
    norm = cpi_normalize(ps, cs).values
    cpi_err = float(np.max(np.abs(norm * cpi / 100 - prices) / prices))
    flat = CurveSeries(ps.grid, np.full_like(cpi, 100.0))
    cpi_err = max(cpi_err, float(np.max(np.abs(cpi_normalize(ps, flat).values - prices) / prices)))

    ok = sim_same and rep_same and rt_err <= 1e-12 and lr_err <= 1e-12 and cpi_err <= 1e-12
    verdict(8, ok, f"simulate identical={sim_same}, report identical={rep_same}, "
                   f"round-trip {rt_err:.1e}, log-return {lr_err:.1e}, CPI {cpi_err:.1e}")
    assert ok
