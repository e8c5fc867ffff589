"""Acceptance suite: one PASS/FAIL line per criterion.

Under pytest the lines are repeated in the terminal summary. Run
``python3 tests/test_acceptance.py`` for just the summary lines.
Criterion 12 is a diagnostic and never fails the run.
"""

from __future__ import annotations

import json
import math
import sys
import tempfile
import time
import warnings
from itertools import product
from pathlib import Path

import numpy as np

from vaporqed.cli import main as cli_main
from vaporqed.core import CavityParams, Detunings, ModeShape
from vaporqed.dynamics import DriveSpec, integrate_absorption, integrate_retrieval, norm_balance, photon_input, retrieval_metrics
from vaporqed.error_models import design_pulse
from vaporqed.multiplexing import exactly_one_prob, optimal_count, plan
from vaporqed.presets import TABLE1_ROWS, TABLE2_ROWS, get_preset
from vaporqed.protocols import (
    BASIS_PHASES,
    FOCK_TRUTH,
    POLARIZATION_TRUTH,
    build_cluster_1d,
    build_ghz,
    chain_edges,
    ghz_target,
    graph_stabilizers,
    photon_labels,
    photon_photon_cz,
    qkd_run,
    qkd_truth_table,
)
from vaporqed.reproduce import FIG9_FITS, FIG9_TOLS, FIG10_FITS, FIG10_TOLS, fig7, fig9, fig10, table1, table2
from vaporqed.scattering import filter_pulse, gate_sequence_measured, gate_sequence_unmeasured, transmission
from vaporqed.synthesis import case2_optimize_x, case2_point, eta_max, synthesize_adiabatic, synthesize_exact, time_reverse

X0_REF, X0_TOL = 0.916, 0.001
XSTAR_REF, XSTAR_TOL = 0.894, 0.01
FIG7_REF, FIG7_TOL = 0.021, 0.005
TABLE2_TOLS = {"cavity5": 0.005, "cavity6": 0.01, "cavity7": 0.01}
TABLE1_REL_TOL = 0.30
DIAGNOSTIC_REL_TOL = 0.50
CZ = np.diag([1.0, 1.0, 1.0, -1.0])


# Collected here so the terminal summary hook in conftest can print them
# after pytest has released output capture.
ACCEPTANCE_LINES: list[str] = []


def _emit(number, ok: bool, detail: str, diagnostic: bool = False) -> str:
    tag = "PASS" if ok else ("WARN" if diagnostic else "FAIL")
    line = f"[{tag}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return line


def _rel(computed, reference):
    return abs(computed - reference) / abs(reference)


# ------------------------------------------------------------------ checks


def check_1():
    start = time.perf_counter()
    params = get_preset("cavity5").params
    x0 = case2_point(params).x0
    x_star = case2_optimize_x(params, 1.34 * params.g)
    elapsed = time.perf_counter() - start
    ok = abs(x0 - X0_REF) <= X0_TOL and abs(x_star - XSTAR_REF) <= XSTAR_TOL and elapsed < 1.0
    return ok, f"case-2 point x0 = {x0:.4f} (0.916 +- 0.001), x* = {x_star:.4f} (0.894 +- 0.01), {elapsed:.2f} s (< 1 s)"


def check_2():
    start = time.perf_counter()
    report = fig7()
    elapsed = time.perf_counter() - start
    loss = report.cell("cavity5", "1-eta_r").computed
    overlap = report.cell("cavity5", "normalised overlap").computed
    ok = abs(loss - FIG7_REF) <= FIG7_TOL and overlap >= 0.999 and elapsed < 10
    return ok, f"retrieval 1-eta_r = {loss:.4f} (0.021 +- 0.005), normalised overlap = {overlap:.6f} (>= 0.999), {elapsed:.1f} s"


def check_3():
    report = table2()
    parts, ok = [], True
    for name in TABLE2_ROWS:
        cell = report.cell(name, "1-eta_abs")
        good = abs(cell.computed - cell.reference) <= TABLE2_TOLS[name]
        ok &= good
        parts.append(f"{name} {cell.computed:.4f} ({cell.reference} +- {TABLE2_TOLS[name]})")
    return ok, "absorption 1-eta_abs " + ", ".join(parts)


def check_4():
    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp, warnings.catch_warnings():
        warnings.simplefilter("ignore")
        import contextlib
        import io

        with contextlib.redirect_stdout(io.StringIO()):
            cli_main(["reproduce", "table1", "--out", tmp, "--reproducible"])
        manifest = json.loads((Path(tmp) / "manifest.json").read_text())
        cells = json.loads((Path(tmp) / "table1.json").read_text())["cells"]
    elapsed = time.perf_counter() - start
    parts, ok = [], True
    for c in cells:
        if c["column"] != "1-F":
            continue
        good = _rel(c["computed"], c["reference"]) <= TABLE1_REL_TOL
        ok &= good
        parts.append(f"{c['row']} {c['computed']:.4f}/{c['reference']}")
    # 1-F is the retrieval target of the design rule, so the peak drive and
    # the absorption loss are the outputs that actually test the synthesis.
    independent = [c for c in cells if c["column"] in ("peak Omega0", "1-eta_abs")]
    ok &= all(c["status"] == "pass" for c in independent)
    ok &= len(parts) == len(TABLE1_ROWS) and bool(manifest["assumptions"]) and elapsed < 60
    return ok, (
        f"1-F within 30% on {len(parts)} rows [" + ", ".join(parts) + "], "
        f"{sum(c['status'] == 'pass' for c in independent)}/{len(independent)} peak Omega0 / 1-eta_abs cells pass, "
        f"assumptions in manifest, {elapsed:.1f} s"
    )


def check_5():
    worst_rms = 0.0
    base = get_preset("cavity1a").params
    for kappa_T in (100, 200, 400):
        mode = ModeShape.sine_squared(kappa_T / base.kappa)
        t = mode.grid(2048)
        numeric = filter_pulse(base, t, mode.h(t), True, method="ode")
        closed = filter_pulse(base, t, mode.h(t), True, method="fft")
        worst_rms = max(worst_rms, math.sqrt(np.mean(np.abs(numeric.a_out - closed.a_out) ** 2)))
    lossless = CavityParams(g=2.0, kappa_ex=3.0, kappa_i=0.0, gamma=0.1)
    empty = transmission(lossless, 0.0, 0.0, atom_coupled=False)
    rng = np.random.default_rng(5)
    worst_t = 0.0
    for _ in range(10_000):
        p = CavityParams(rng.uniform(0, 50), rng.uniform(0.01, 50), rng.uniform(0, 5), rng.uniform(1e-4, 1))
        w = rng.uniform(-200, 200, 8)
        worst_t = max(worst_t, float(np.max(np.abs(transmission(p, w, w + rng.normal(0, 2))))))
    ok = worst_rms < 1e-6 and empty == -1 and worst_t <= 1 + 1e-10
    return ok, f"filter vs closed-form t RMS = {worst_rms:.1e} (< 1e-6), empty lossless t = {empty.real:+.0f}, max |t| = {worst_t:.12f} over 1e4 draws"


def _fit_line(report, fits, tols, names):
    parts, ok = [], True
    for name in ("cavity1a", "cavity5"):
        lin = report.cell(name, "linear coefficient").computed
        quad = report.cell(name, "quadratic coefficient").computed
        (r1, r2), (t1, t2) = fits[name], tols[name]
        good = abs(quad - r2) <= t2 and abs(lin - r1) <= t1
        ok &= good
        parts.append(f"{name} ({lin:.4f}, {quad:.4f}) vs ({r1}, {r2}) +- ({t1}, {t2})")
    return ok, names + "; ".join(parts)


def check_6():
    start = time.perf_counter()
    ok, detail = _fit_line(fig9(), FIG9_FITS, FIG9_TOLS, "coupling-drift fits ")
    elapsed = time.perf_counter() - start
    return ok and elapsed < 300, detail + f", {elapsed:.0f} s"


def check_7():
    start = time.perf_counter()
    ok, detail = _fit_line(fig10(), FIG10_FITS, FIG10_TOLS, "Doppler fits ")
    elapsed = time.perf_counter() - start
    return ok and elapsed < 300, detail + f", {elapsed:.0f} s"


def check_8():
    rng = np.random.default_rng(8)
    ref_m, ref_u = gate_sequence_measured(0.0), gate_sequence_unmeasured(0.0)
    drift = 0.0
    for phi in rng.uniform(-np.pi, np.pi, 100):
        drift = max(drift, float(np.max(np.abs(gate_sequence_measured(phi).entries - ref_m.entries))))
        drift = max(drift, float(np.max(np.abs(gate_sequence_unmeasured(phi).entries - ref_u.entries))))
    measured = ref_m.restricted(["sL", "sR", "gL", "gR"]).round(12) + 0.0
    unmeasured = ref_u.restricted(["gR_v", "gR_h", "sR_v", "sR_h"])
    ok = drift < 1e-12 and np.array_equal(measured, -CZ) and np.array_equal(unmeasured, CZ)
    return ok, f"max phase dependence {drift:.1e} (< 1e-12), measured block = -CZ, unmeasured block = CZ"


def check_9():
    truth = {"fock": FOCK_TRUTH, "polarization": POLARIZATION_TRUTH}
    rows, ok, worst = 0, True, 0.0
    for encoding, basis in product(truth, ("x", "y")):
        observed = dict(qkd_truth_table(encoding, basis))
        ok &= observed == truth[encoding][basis]
        rows += len(observed)
        by_sum = {}
        for phi1, phi2 in product(BASIS_PHASES[basis], repeat=2):
            key = abs(math.remainder(phi1 + phi2 - math.pi, 2 * math.pi)) < 1e-9
            by_sum.setdefault(key, []).append(qkd_run(encoding, phi1, phi2).distribution())
        for dists in by_sum.values():
            for other in dists[1:]:
                ok &= set(other) == set(dists[0])
                worst = max(worst, max(abs(other[k] - dists[0][k]) for k in dists[0]))
    ok &= rows == 24 and worst <= 1e-10
    return ok, f"{rows}/24 truth-table rows reproduced, distribution gap between same-sum inputs {worst:.1e}"


def check_10():
    worst = 0.0
    for n, encoding in product(range(2, 7), ("single_rail", "dual_rail")):
        labels = photon_labels(n)
        for b in build_cluster_1d(n, encoding).branches:
            worst = max(worst, float(np.max(np.abs(np.array(graph_stabilizers(b.post_state, labels, chain_edges(labels))) - 1))))
        target = ghz_target(n, hadamard_frame=encoding == "dual_rail")
        for b in build_ghz(n, encoding).branches:
            worst = max(worst, abs(1 - b.post_state.fidelity(target)))
    cz = photon_photon_cz()
    cz_err = max(c.max_error for c in cz)
    ok = worst <= 1e-10 and cz_err < 1e-12 and len(cz) == 8
    return ok, f"cluster/GHZ deviation {worst:.1e} for n = 2..6 in both encodings, photon-photon CZ error {cz_err:.1e} on 8 inputs"


def check_11():
    mismatches = 0
    for p in np.geomspace(0.001, 0.5, 50):
        counts = np.arange(1, 2001)
        best = int(counts[np.argmax([exactly_one_prob(int(n), p) for n in counts])])
        mismatches += optimal_count(p)[1] != best
    series = max(abs(optimal_count(p)[0] - (1 / p - 0.5 - p / 12)) / p**2 for p in (0.01, 0.05))
    tilde = abs(plan(0.01).p_tilde - math.exp(-1) * 1.005) / 0.01**2
    ok = mismatches == 0 and series < 2 and tilde < 10
    return ok, f"{50 - mismatches}/50 optimal counts match exhaustive argmax, series residual {series:.2f} p^2, p~ residual {tilde:.2f} p^2"


def check_12():
    report = table1()
    parts, ok = [], True
    for name in TABLE1_ROWS:
        for column in ("1-F_en", "1-eta_d"):
            cell = report.cell(name, column)
            good = _rel(cell.computed, cell.reference) <= DIAGNOSTIC_REL_TOL
            ok &= good
            if not good:
                parts.append(f"{name} {column} {cell.computed:.3f} vs {cell.reference}")
    a = report.cell("cavity1a", "1-F_en").computed, report.cell("cavity1a", "1-eta_d").computed
    summary = f"(diagnostic) F_en/eta_d within 50% on all rows; cavity1a {a[0]:.3f}/{a[1]:.3f} vs 0.18/0.17"
    if parts:
        summary += "; deviations: " + ", ".join(parts)
    return ok, summary


def check_13():
    worst_norm, worst_dual = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in TABLE1_ROWS + TABLE2_ROWS:
            d = design_pulse(get_preset(name))
            fwd = integrate_retrieval(d.params, DriveSpec(d.pulse, d.detunings))
            back = integrate_absorption(
                d.params, DriveSpec(time_reverse(d.pulse), d.detunings, photon_input(d.mode, d.detunings.delta_p))
            )
            worst_norm = max(worst_norm, abs(norm_balance(d.params, fwd).residual), abs(norm_balance(d.params, back).residual))
            eta_r = retrieval_metrics(fwd, d.mode, d.detunings.delta_p).eta_r
            eta_abs = retrieval_metrics(back, d.mode, d.detunings.delta_p).eta_abs
            worst_dual = max(worst_dual, abs(eta_abs - eta_r))
        worst_adiabatic = 0.0
        for name, kex_T in product(TABLE2_ROWS, (50, 100, 200)):
            p = get_preset(name).params
            mode = ModeShape.sine_squared(kex_T / p.kappa_ex)
            eta = 0.9 * eta_max(p, 0.0)
            ex = synthesize_exact(p, mode, Detunings(), eta).pulse
            ad = synthesize_adiabatic(p, mode, Detunings(), eta).pulse
            keep = ex.grid < 0.95 * mode.duration_T
            rms = math.sqrt(np.mean((ad.omega0[keep] - ex.omega0[keep]) ** 2)) / np.max(ex.omega0)
            worst_adiabatic = max(worst_adiabatic, rms)
    ok = worst_norm < 1e-6 and worst_dual <= 0.01 and worst_adiabatic < 0.05
    return ok, (
        f"norm balance residual {worst_norm:.1e} (< 1e-6), |eta_abs - eta_r| <= {worst_dual:.1e} on all presets, "
        f"adiabatic vs exact RMS {worst_adiabatic:.3f} (< 0.05, cavities 5-7, kappa_ex T >= 50)"
    )


CHECKS = {
    1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6, 7: check_7,
    8: check_8, 9: check_9, 10: check_10, 11: check_11, 12: check_12, 13: check_13,
}


# ------------------------------------------------------------------ tests


def _gate(number):
    ok, detail = CHECKS[number]()
    _emit(number, ok, detail)
    assert ok, detail


def test_criterion_01_case2_operating_point():
    _gate(1)


def test_criterion_02_fig7_retrieval():
    _gate(2)


def test_criterion_03_table2_absorption():
    _gate(3)


def test_criterion_04_table1_infidelity():
    _gate(4)


def test_criterion_05_transmission_algebra():
    _gate(5)


def test_criterion_06_coupling_drift_fits():
    _gate(6)


def test_criterion_07_doppler_fits():
    _gate(7)


def test_criterion_08_gate_identities():
    _gate(8)


def test_criterion_09_protocol_truth_tables():
    _gate(9)


def test_criterion_10_cluster_and_ghz():
    _gate(10)


def test_criterion_11_multiplexing():
    _gate(11)


def test_criterion_12_filter_diagnostics():
    ok, detail = check_12()
    _emit(12, ok, detail, diagnostic=True)


def test_criterion_13_property_suite():
    _gate(13)


if __name__ == "__main__":
    failures = 0
    for number, check in CHECKS.items():
        ok, detail = check()
        _emit(number, ok, detail, diagnostic=number == 12)
        failures += (not ok) and number != 12
    sys.exit(1 if failures else 0)
