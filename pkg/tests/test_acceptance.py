"""Exit criteria, one test per criterion at its stated tolerance.

Each test records a PASS/FAIL line that the terminal summary prints.
"""
import pytest

from deltaconsensus import acceptance
from deltaconsensus.analysis import norm_sq_vec
from deltaconsensus.cli import main

from .conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

SEED = acceptance.DEFAULT_SEED
_TIMES = {}


@pytest.fixture(scope="module", autouse=True)
def _fresh_caches():
    acceptance.clear_caches()
    yield
    acceptance.clear_caches()


def _record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def _run(n):
    report, elapsed = acceptance.evaluate(n, SEED)
    _TIMES.setdefault(n, elapsed)
    return report, elapsed


def test_criterion_1_average_consensus():
    r, t = _run(1)
    ok = r["passed"] and t < 30
    _record(1, ok, f"max terminal error {r['max_terminal_error']:.2e} (tol 1e-6), "
                   f"{r['lyapunov_violations']} Lyapunov violations, {t:.1f}s (limit 30s)")
    assert r["max_terminal_error"] <= 1e-6
    assert r["lyapunov_violations"] == 0
    assert t < 30


def test_criterion_2_consensus_value():
    r, t = _run(2)
    ok = r["passed"] and t < 300
    _record(2, ok, f"{r['fraction_within']:.0%} of 100 ensembles within 4 SE (need 98%), {t:.1f}s (limit 300s)")
    assert r["fraction_within"] >= 0.98
    assert t < 300


def test_criterion_3_theorem4_soundness():
    r, _ = _run(3)
    _record(3, r["passed"], f"{len(r['violations'])} violations of bound_e >= measured_e - 1e-10 "
                            f"(instances {r['violations']}, worst measured/bound {r['max_ratio']:.4f}); "
                            f"{len(r['rigorous_violations'])} for the rigorous bound")
    assert r["rigorous_violations"] == []
    assert r["violations"] == []


def test_criterion_4_two_fault_soundness():
    r, _ = _run(4)
    _record(4, r["passed"], f"{len(r['violations'])} proof-variant violations over 200 instances, "
                            f"{len(r['twice_mismatch'])} send/receive factor-2 mismatches")
    assert r["violations"] == []
    assert r["twice_mismatch"] == []


def test_criterion_5_group_inverse_machinery():
    r, _ = _run(5)
    _record(5, r["passed"], f"identity error {r['max_identity_error']:.1e}, "
                            f"shift error {r['max_shift_error']:.1e} (tol 1e-9)")
    assert r["max_identity_error"] <= 1e-9
    assert r["max_shift_error"] <= 1e-9


def test_criterion_6_first_order_reduction():
    r, _ = _run(6)
    ratios = [q for g in r["graphs"] for q in g["ratios"]]
    _record(6, r["passed"], f"error ratios in [{min(ratios):.3f}, {max(ratios):.3f}] (need [1.5, 2.5])")
    assert all(1.5 <= q <= 2.5 for q in ratios)
    assert all(e[0] > e[1] > e[2] for e in (g["errors"] for g in r["graphs"]))


def test_criterion_7_published_numbers():
    r, _ = _run(7)
    value = 5 * 0.0716 * norm_sq_vec([0.2, 0.8, 0.4, -1.0, -2.0])
    _record(7, r["passed"], f"5 * 0.0716 * |x0|^2 = {value:.5f} (target 2.091 +- 0.002)")
    assert abs(value - 2.091) <= 0.002
    assert r["composed_state_bound"] == value


def test_criterion_8_gap_monotonicity():
    r, _ = _run(8)
    _record(8, r["passed"], f"{r['trajectory_exceptions']} + {r['monte_carlo_exceptions']} gap increases "
                            f"beyond {r['tolerance']:g}")
    assert r["trajectory_exceptions"] == 0
    assert r["monte_carlo_exceptions"] == 0


def test_criterion_9_determinism(tmp_path):
    outs = []
    for d in ("a", "b"):
        acceptance.clear_caches()
        main(["acceptance", "--seed", str(SEED), "--out", str(tmp_path / d)])
        outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / d).glob("criterion_*.json"))})
    same = outs[0] == outs[1] and len(outs[0]) == 8
    differing = sorted(k for k in outs[0] if outs[0][k] != outs[1].get(k))
    _record(9, same, f"{len(outs[0])} criterion reports from two fresh runs, {len(differing)} differ")
    assert len(outs[0]) == 8
    assert differing == []
