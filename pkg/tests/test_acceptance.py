"""Acceptance suite. Each criterion prints one PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or under pytest
(lines are shown even with output capture on).
"""
import contextlib
import io
import math
import statistics
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from cablecal import cli  # noqa: E402
from cablecal.data import MeasurementSet, SyntheticScenario, save, save_deviation, synthesize  # noqa: E402
from cablecal.error_model import random_deviation  # noqa: E402
from cablecal.kinematics import save_model  # noqa: E402
from cablecal.metrics import evaluate  # noqa: E402
from cablecal.solvers import SolverConfig, least_squares_step, lm_solve, lm_step, slm_solve  # noqa: E402
from cablecal.ukf import UkfConfig, UkfState, observe_fn, predict, sigma_points, ukf_slm_calibrate, update  # noqa: E402
from conftest import GENERIC, random_model  # noqa: E402

SEEDS = range(10)


def noiseless(seed):
    return synthesize(SyntheticScenario(GENERIC, seed=seed, n_points=120, noise_std=0.0))


def criterion_1():
    data, _ = noiseless(seed=0)
    t0 = time.perf_counter()
    rep = slm_solve(GENERIC, data)
    elapsed = time.perf_counter() - t0
    ok = (rep.rmse_history[0] > 0.1 and rep.final_rmse <= 1e-6 and rep.iterations <= 200 and elapsed <= 10.0)
    return ok, (f"RMSE {rep.rmse_history[0]:.4g} -> {rep.final_rmse:.3g} mm, "
                f"{rep.iterations} iterations, {elapsed:.2f} s")


def criterion_2():
    slm_its, lm_its = [], []
    for seed in SEEDS:
        data, _ = noiseless(seed)
        slm_its.append(slm_solve(GENERIC, data).iterations_to(1e-3))
        lm_its.append(lm_solve(GENERIC, data).iterations_to(1e-3))
    if None in slm_its or None in lm_its:
        return False, f"threshold not reached: slm {slm_its}, lm {lm_its}"
    a, b = statistics.median(slm_its), statistics.median(lm_its)
    return a <= b, f"median iterations to 1e-3 mm: slm {a}, lm {b}"


def criterion_3():
    finals = {"lm": [], "slm": [], "ukf-slm": []}
    for seed in SEEDS:
        data, _ = synthesize(SyntheticScenario(GENERIC, seed=seed, n_points=120, noise_std=0.1))
        finals["lm"].append(lm_solve(GENERIC, data).final_rmse)
        finals["slm"].append(slm_solve(GENERIC, data).final_rmse)
        finals["ukf-slm"].append(ukf_slm_calibrate(GENERIC, data).final_rmse)
    med = {k: statistics.median(v) for k, v in finals.items()}
    ok = med["ukf-slm"] <= med["slm"] <= med["lm"]
    return ok, ("median final RMSE: " + ", ".join(f"{k} {v:.12f}" for k, v in med.items())
                + f" (ukf-slm - lm = {med['ukf-slm'] - med['lm']:.2e} mm)")


def criterion_4():
    m = evaluate([3.0, -4.0])
    exact = m.rmse == math.sqrt(12.5) and m.std == 3.5 and m.max == 4.0
    rng = np.random.default_rng(4)
    bad = 0
    for _ in range(1000):
        e = rng.normal(0, rng.uniform(1e-3, 10), rng.integers(1, 300))
        t = evaluate(e)
        slack = 1e-12 * t.max
        bad += not (t.max + slack >= t.rmse >= t.std - slack)
    return exact and bad == 0, f"evaluate([3,-4]) = {m.as_tuple()}, chain violations {bad}/1000"


def _scalar_kf(x, p, q, r, ys):
    for y in ys:
        p = p + q
        k = p / (p + r)
        x = x + k * (y - x)
        p = (1 - k) * p
    return x, p


def criterion_5():
    rng = np.random.default_rng(5)
    q, r = 1e-3, 0.25
    ys = 1.5 + rng.normal(0, math.sqrt(r), 100)
    cfg = UkfConfig(q_process=q, r_meas=r)
    state = UkfState([0.0], [[2.0]])
    for y in ys:
        state = predict(state, cfg)
        state = update(state, y, observe_fn(state, lambda xs: xs[:, 0], cfg))
    x_kf, p_kf = _scalar_kf(0.0, 2.0, q, r, ys)
    kf_err = max(abs(state.x[0] - x_kf), abs(state.p[0, 0] - p_kf))
    recon = 0.0
    for _ in range(10):
        a = rng.normal(size=(24, 24))
        P = 1e-2 * (a @ a.T / 24 + 0.1 * np.eye(24))
        x = rng.normal(size=24)
        sig = sigma_points(UkfState(x, P), UkfConfig())
        mean = sig.points[0] + sig.wm[1:] @ (sig.points[1:] - sig.points[0])
        dev = sig.points - x
        cov = (dev.T * sig.wc) @ dev
        recon = max(recon, np.max(np.abs(mean - x)), np.max(np.abs(cov - P)))
    return kf_err <= 1e-8 and recon <= 1e-9, f"KF mismatch {kf_err:.2e}, sigma reconstruction {recon:.2e}"


def criterion_6():
    rng = np.random.default_rng(6)
    step_err = 0.0
    for _ in range(20):
        j = rng.normal(size=(120, 24))
        e = rng.normal(size=120)
        step_err = max(step_err, np.max(np.abs(lm_step(j, e, 0.0) - least_squares_step(j, e))))
    data, _ = synthesize(SyntheticScenario(GENERIC, seed=6, n_points=120, noise_std=0.1))
    lm = lm_solve(GENERIC, data)
    slm = slm_solve(GENERIC, data, SolverConfig(delta0=1.0, mu=1.0))
    same_len = len(lm.extras["iterates"]) == len(slm.extras["iterates"])
    it_err = max(np.max(np.abs(a - b)) for a, b in zip(lm.extras["iterates"], slm.extras["iterates"]))
    ok = step_err <= 1e-12 and same_len and it_err <= 1e-12
    return ok, f"lm(0) vs ls {step_err:.2e}, slm(1,1) vs lm iterates {it_err:.2e} over {len(lm.extras['iterates'])}"


def criterion_7():
    rng = np.random.default_rng(7)
    worst, codes = 0.0, []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for i in range(20):
            model = random_model(rng)
            x = random_deviation(rng)
            q = rng.uniform(-math.pi, math.pi, (int(rng.integers(10, 121)), 6))
            sc = SyntheticScenario(model, x_true=x, seed=i, n_points=len(q), noise_std=0.1)
            data, _ = synthesize(sc)
            data = MeasurementSet(data.q, np.abs(data.z) + 1e-3)
            save_model(model, tmp / "m.json")
            save(data, tmp / "d.csv")
            save_deviation(x, tmp / "x.json")
            argv = ["jacobian-check", "--model", str(tmp / "m.json"), "--data", str(tmp / "d.csv"),
                    "--x", str(tmp / "x.json")]
            with contextlib.redirect_stdout(io.StringIO()):
                codes.append(cli.main(argv))
            worst = max(worst, cli.jacobian_discrepancy(model, data, x))
    ok = worst <= 1e-8 and all(c == 0 for c in codes)
    return ok, f"max discrepancy {worst:.2e} over 20 scenarios, exit codes {sorted(set(codes))}"


CRITERIA = {
    1: ("noiseless recovery", criterion_1),
    2: ("SLM vs LM iteration economy", criterion_2),
    3: ("method ordering under noise", criterion_3),
    4: ("metric fidelity", criterion_4),
    5: ("UKF correctness", criterion_5),
    6: ("solver identities", criterion_6),
    7: ("Jacobian self-check", criterion_7),
}


def _line(n, ok, detail):
    return f"criterion {n} {'PASS' if ok else 'FAIL'}: {CRITERIA[n][0]}: {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, detail = CRITERIA[n][1]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


def test_criterion_8_advisory(capsys):
    with capsys.disabled():
        print("\ncriterion 8 N/A: published-number reproduction: advisory; no converted public dataset "
              "or trusted IRB120 nominal model is shipped")
    pytest.skip("advisory criterion; requires an external dataset and nominal model")


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n][1]()
        failed += not ok
        print(_line(n, ok, detail))
    print("criterion 8 N/A: advisory")
    sys.exit(1 if failed else 0)
