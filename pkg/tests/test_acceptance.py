"""Acceptance gate: one PASS/FAIL line per criterion, shown in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import io
import subprocess
import sys
import time
from pathlib import Path

import pytest

from cupcf import EvalConfig, build_similarity_matrix, cli, compare_measures, load_ratings
from cupcf.evaluate import MONOTONE_SLACK, PRECISION_BAND_TOP5_T3, RECALL_MIN_TOP5_T3

from helpers import ACCEPTANCE_LINES, TOY, matrix_from_grid

TESTS = Path(__file__).parent

NHSM_TOY = {
    (1, 2): 0.0122, (1, 3): 0.0066, (1, 4): 0.0213, (1, 5): 0.0035,
    (2, 3): 0.0025, (2, 4): 0.0150, (2, 5): 0.0010,
    (3, 4): 0.0125, (3, 5): 0.0018,
    (4, 5): 0.0067,
}
PEARSON_TOY = {
    (1, 2): 0.9487, (1, 3): -0.7071, (1, 4): -0.7921,
    (2, 3): -1.0, (2, 4): -0.1886, (2, 5): -1.0,
    (3, 4): 0.0, (3, 5): -1.0,
    (4, 5): -0.5547,
}  # (1, 5) is 0/0 and left out

PROPERTY_SUITES = [
    "test_similarity.py::TestMatrix::test_symmetry_and_range",
    "test_similarity.py::TestMatrix::test_oracle_equivalence",
    "test_prediction.py::TestProperties",
    "test_dataset.py::TestKFold",
    "test_recommend.py::test_merge_properties",
    "test_recommend.py::TestMerge::test_idempotent",
    "test_evaluate.py::test_perfect_predictor",
]


def record(number, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def ml100k_run(ml100k_path):
    data = load_ratings(ml100k_path)
    start = time.perf_counter()
    reports = compare_measures(data, EvalConfig(k_neighbors=300, seed=0))
    return reports, time.perf_counter() - start


def test_criterion_1_nhsm_toy():
    sim = build_similarity_matrix(matrix_from_grid(TOY), "nhsm")
    worst = max(abs(sim[u, v] - want) for (u, v), want in NHSM_TOY.items())
    record(1, worst <= 5e-4, f"NHSM toy table, 10 entries, max |err| {worst:.2e} (tol 5e-4)")


def test_criterion_2_pearson_toy():
    sim = build_similarity_matrix(matrix_from_grid(TOY), "pearson")
    worst = max(abs(sim[u, v] - want) for (u, v), want in PEARSON_TOY.items())
    record(2, worst <= 5e-4 and len(PEARSON_TOY) == 9,
           f"Pearson toy table, 9 entries, max |err| {worst:.2e} (tol 5e-4)")


@pytest.mark.slow
def test_criterion_3_mae_band(ml100k_run):
    reports, seconds = ml100k_run
    maes = reports["cup"].fold_maes()
    ok = all(0.70 <= m <= 0.78 for m in maes)
    record(3, ok, f"CUPCF fold MAE {', '.join(f'{m:.4f}' for m in maes)} in [0.70, 0.78] "
                  f"({seconds:.0f}s for all three measures)")


@pytest.mark.slow
def test_criterion_4_beats_baselines(ml100k_run):
    reports, _ = ml100k_run
    cup, nh, pe = (reports[k].fold_maes() for k in ("cup", "nhsm", "pearson"))
    mean = lambda xs: sum(xs) / len(xs)
    ok = mean(cup) < mean(nh) and mean(cup) < mean(pe)
    record(4, ok, f"mean MAE CUPCF {mean(cup):.4f} < NHSM-only {mean(nh):.4f} "
                  f"and < Pearson-only {mean(pe):.4f}; "
                  f"per fold {sum(c < min(a, b) for c, a, b in zip(cup, nh, pe))}/{len(cup)}")


@pytest.mark.slow
def test_criterion_5_classification_shape(ml100k_run):
    report = ml100k_run[0]["cup"]
    folds = range(len(report.folds))
    prec = [report.cell(f, 5, 3)["precision"] for f in folds]
    rec = [report.cell(f, 5, 3)["recall"] for f in folds]
    lo, hi = PRECISION_BAND_TOP5_T3
    prec_ok = all(lo <= p <= hi for p in prec)
    rec_ok = all(r >= RECALL_MIN_TOP5_T3 for r in rec)
    mono_ok = True
    for f in folds:
        for t in report.config["thresholds"]:
            seq = [report.cell(f, n, t)["precision"] for n in report.config["n_values"]]
            mono_ok &= all(b <= a + MONOTONE_SLACK for a, b in zip(seq, seq[1:]))
    parts = [
        f"Top-5/T=3 precision {min(prec):.4f}..{max(prec):.4f} in [{lo}, {hi}] {'ok' if prec_ok else 'NO'}",
        f"recall {min(rec):.4f}..{max(rec):.4f} >= {RECALL_MIN_TOP5_T3} {'ok' if rec_ok else 'NO'}",
        f"precision non-increasing in N {'ok' if mono_ok else 'NO'}",
    ]
    record(5, prec_ok and rec_ok and mono_ok, "; ".join(parts))


def test_criterion_6_property_suites():
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", "--no-header"]
    proc = subprocess.run(cmd + [str(TESTS / s) for s in PROPERTY_SUITES],
                          capture_output=True, text=True, cwd=TESTS.parent)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    record(6, proc.returncode == 0, f"property suites ({len(PROPERTY_SUITES)} groups): {summary}")


@pytest.mark.slow
def test_criterion_7_deterministic_report(ml100k_path, tmp_path):
    blobs = []
    for run in ("a", "b"):
        outdir = tmp_path / run
        code = cli.main(["evaluate", str(ml100k_path), "--seed", "0", "--output-dir", str(outdir)],
                        out=io.StringIO())
        assert code == 0
        blobs.append((outdir / "report.json").read_bytes())
    record(7, blobs[0] == blobs[1], f"two evaluate runs, report.json {len(blobs[0])} bytes, identical")
