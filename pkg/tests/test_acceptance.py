"""Acceptance suite: one test per exit criterion, each at its stated
tolerance and time budget, printing one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import time

import numpy as np
import pytest

from ahxray._linalg import frobenius
from ahxray.bundle import (ConnectionField, GaugeField, GaussBump,
                           gauge_transform)
from ahxray.geometry import (AHModel, DiskGeodesic, PhasePoint,
                             integrate_geodesic)
from ahxray.reconstruct import (ReconstructionConfig, forward_map,
                                reconstruct_higgs)
from ahxray.spherebundle import (SectionField, SphereBundleGrid,
                                 commutator_residuals, inner,
                                 pestov_residual, vertical_derivative,
                                 vertical_divergence, vertical_laplacian,
                                 x_split)
from ahxray.transport import TransportConfig
from ahxray.xray import (FanSpec, compare_datasets, compute_scattering_data,
                         gauge_candidate, gauge_degree_zero_check)

from test_bundle import SU2
from test_reconstruct import su2_basis
from test_spherebundle import bump, bump_nsection, bump_section
from test_transport import phase_integral, scalar_higgs

DISK = AHModel()


def _verdict(num, name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num:2d} ({name}): "
          f"{detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def _pair(seed=20240817, conn_scale=0.5, higgs_scale=0.5):
    rng = np.random.default_rng(seed)
    from test_bundle import random_connection, random_higgs
    return (random_connection(rng, scale=conn_scale),
            random_higgs(rng, scale=higgs_scale), rng)


def acceptance_gauge(amplitude=0.5):
    s = amplitude * (SU2[0] + 0.7 * SU2[1] - 0.4 * SU2[2])
    return GaugeField(2, [(s, GaussBump(center=(0.1, -0.2), sigma=0.4))],
                      decay_M=4)


def test_criterion_01_geometry_oracle():
    t0 = time.perf_counter()
    path = integrate_geodesic(DISK, PhasePoint(DISK, (0.0, 0.0), (0.5, 0.0)))
    sel = np.abs(path.t) <= 6.0
    expected = np.stack([np.tanh(path.t[sel] / 2.0),
                         np.zeros(int(sel.sum()))], axis=-1)
    err = float(np.max(np.abs(path.x[sel] - expected)))
    elapsed = time.perf_counter() - t0
    _verdict(1, "geometry oracle", err < 1e-6 and elapsed < 1.0,
             f"sup|x - tanh arc| = {err:.3e}, {elapsed:.2f}s")


def test_criterion_02_curvature():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    r = np.sqrt(rng.uniform(0.0, 0.998, 1000))
    ang = rng.uniform(0.0, 2 * math.pi, 1000)
    pts = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
    err = float(np.max(np.abs(DISK.gauss_curvature(pts) + 1.0)))
    elapsed = time.perf_counter() - t0
    _verdict(2, "constant curvature", err < 1e-9 and elapsed < 1.0,
             f"max|K + 1| = {err:.3e} at 1000 points, {elapsed:.2f}s")


def test_criterion_03_scalar_reduction():
    t0 = time.perf_counter()
    higgs = scalar_higgs()
    conn = ConnectionField.zero(1)
    fan = FanSpec.uniform_pairs(100, n_openings=10)
    ds = compute_scattering_data(DISK, conn, higgs, fan)
    by_key = {r.entry.key(): r for r in ds.records}
    worst = 0.0
    for a, b in fan.pairs:
        geo = DiskGeodesic.between_boundary_angles(DISK, a, b)
        entry, _ = geo.boundary_data()
        expected = np.exp(-1j * phase_integral(higgs, geo))
        worst = max(worst, abs(by_key[entry.key()].matrix[0, 0] - expected))
    elapsed = time.perf_counter() - t0
    _verdict(3, "scalar reduction", worst < 1e-8 and elapsed < 10.0,
             f"max phase error = {worst:.3e} over 100 geodesics, "
             f"{elapsed:.1f}s")


def test_criterion_04_unitarity():
    t0 = time.perf_counter()
    conn, higgs, _ = _pair()
    fan = FanSpec.uniform_pairs(200, n_openings=10)
    ds = compute_scattering_data(DISK, conn, higgs, fan)
    worst = max(r.unitarity_defect for r in ds.records)
    elapsed = time.perf_counter() - t0
    _verdict(4, "unitarity", worst < 1e-7 and elapsed < 30.0,
             f"max defect = {worst:.3e} over {len(ds.records)} geodesics, "
             f"{elapsed:.1f}s")


def test_criterion_05_gauge_equivalence():
    t0 = time.perf_counter()
    conn, higgs, _ = _pair()
    gauge = acceptance_gauge()           # Q = exp(rho^(N+1) S), N = 3
    conn2, higgs2 = gauge_transform(conn, higgs, gauge)
    fan = FanSpec.uniform_pairs(200, n_openings=10)
    cfg = TransportConfig(rho_cut=1e-6)
    d1 = compute_scattering_data(DISK, conn, higgs, fan, cfg)
    d2 = compute_scattering_data(DISK, conn2, higgs2, fan, cfg)
    dist = compare_datasets(d1, d2).max_frobenius

    # decay-exponent slope, measured at coarse truncations (beyond the
    # production rho_cut window) where the power law beats solver noise
    from ahxray.transport import _transport_rhs_factory, batch_transport
    gaps = []
    slope_fan = FanSpec.uniform_pairs(40, n_openings=5)
    for rc in (1e-1, 5e-2):
        geos = [DiskGeodesic.between_boundary_angles(DISK, a, b, rho_cut=rc)
                for a, b in slope_fan.pairs]
        ua, _ = batch_transport(_transport_rhs_factory(conn, higgs),
                                geos, 2, cfg)
        ub, _ = batch_transport(_transport_rhs_factory(conn2, higgs2),
                                geos, 2, cfg)
        gaps.append(float(np.max(frobenius(ua - ub))))
    ratio = gaps[0] / gaps[1]
    slope_ok = 2**4 / 2.5 < ratio < 2**4 * 2.5
    elapsed = time.perf_counter() - t0
    _verdict(5, "gauge equivalence",
             dist < 1e-6 and slope_ok and elapsed < 120.0,
             f"dataset distance = {dist:.3e} at rho_cut 1e-6; halving "
             f"rho_cut ratio = {ratio:.1f} (expect ~16), {elapsed:.1f}s")


def test_criterion_06_gauge_recovery():
    t0 = time.perf_counter()
    conn, higgs, _ = _pair()
    gauge = acceptance_gauge()
    pair_a = (conn, higgs)
    pair_b = gauge_transform(conn, higgs, gauge)
    cfg = TransportConfig(rho_cut=1e-6, n_steps=1024)

    # pointwise recovery along one geodesic
    path = DiskGeodesic.between_boundary_angles(DISK, 1.2, 4.0).sample()
    times = np.linspace(-4.0, 4.0, 17)
    curve = gauge_candidate(DISK, pair_a, pair_b, path, times, cfg)
    rec_err = float(np.max(frobenius(curve.q - gauge.q(curve.x))))

    # crossing family for the degree-zero verdict and mode relations
    curves = []
    dense = np.linspace(-3.0, 3.0, 161)
    for cx, cy in [(-0.3, 0.0), (0.0, 0.2), (0.25, -0.15), (-0.1, -0.3),
                   (0.2, 0.25)]:
        for k in range(4):
            theta = math.pi * k / 4 + 0.05
            geo = DiskGeodesic.through(DISK, (cx, cy), theta)
            curves.append(gauge_candidate(DISK, pair_a, pair_b,
                                          geo.sample(), dense, cfg))
    report = gauge_degree_zero_check(curves, pair_a, pair_b)
    elapsed = time.perf_counter() - t0
    ok = (rec_err < 1e-5 and report.max_theta_variation < 1e-4
          and report.mode0_residual < 1e-4 and report.mode1_residual < 1e-4
          and elapsed < 120.0)
    _verdict(6, "gauge recovery", ok,
             f"|Q - Q*| = {rec_err:.3e}, theta variation = "
             f"{report.max_theta_variation:.3e}, mode residuals = "
             f"({report.mode0_residual:.3e}, {report.mode1_residual:.3e}) "
             f"over {report.cells_checked} cells, {elapsed:.1f}s")


def test_criterion_07_sphere_bundle_calculus():
    t0 = time.perf_counter()
    grid = SphereBundleGrid(DISK, nx=64, n_theta=64)

    u = bump_section(grid, m=2, d=2, vec=[1.0, 0.5j], radius=0.6)
    w = bump_nsection(grid, m=3, d=2, radius=0.6)
    adj = abs(inner(vertical_derivative(u), w)
              + inner(u, vertical_divergence(w)))

    eig_err = 0.0
    for m in range(0, 7):
        um = bump_section(grid, m=m, d=1, radius=0.6)
        lap = vertical_laplacian(um).values
        eig_err = max(eig_err, float(np.max(np.abs(lap - m * m * um.values))))

    orth = abs(inner(bump_section(grid, m=1), bump_section(grid, m=4)))

    from ahxray.spherebundle import curvature_term_sign_check
    rep = curvature_term_sign_check(bump_section(grid, m=2, radius=0.6), 2,
                                    DISK)
    d2_err = abs(rep.d_m - 1.0370370370370370)
    elapsed = time.perf_counter() - t0
    ok = (adj < 1e-10 and eig_err < 1e-9 and orth < 1e-12
          and d2_err < 1e-12 and elapsed < 30.0)
    _verdict(7, "sphere-bundle calculus", ok,
             f"adjointness = {adj:.2e}, eigen error = {eig_err:.2e}, "
             f"orthogonality = {orth:.2e}, d_2 error = {d2_err:.2e}, "
             f"{elapsed:.1f}s")


def test_criterion_08_commutators():
    t0 = time.perf_counter()
    _, _, rng = _pair()
    from test_bundle import random_connection
    conn = random_connection(np.random.default_rng(8))
    reports = []
    for nx in (64, 128):
        grid = SphereBundleGrid(DISK, nx=nx, n_theta=32)
        u = bump_section(grid, m=1, d=2, vec=[1.0, 0.4j], radius=0.7)
        w = bump_nsection(grid, m=2, d=2, radius=0.7)
        reports.append(commutator_residuals(conn, u, w).as_dict())
    fine = reports[1]
    ok_mag = all(v < 1e-4 for v in fine.values())
    ok_rate = all(
        fine[k] < reports[0][k] / 8.0 or reports[0][k] < 1e-12
        for k in fine)
    elapsed = time.perf_counter() - t0
    _verdict(8, "commutators", ok_mag and ok_rate and elapsed < 120.0,
             "residuals " + ", ".join(f"{k}={v:.2e}"
                                      for k, v in fine.items())
             + f"; all shrink >= 8x under halving, {elapsed:.1f}s")


def test_criterion_09_pestov_identity():
    t0 = time.perf_counter()
    from test_bundle import random_connection
    conn = random_connection(np.random.default_rng(9), scale=0.3)
    worst_fine = 0.0
    decreasing = True
    for deg in (0, 1, 2):
        for use_conn in (None, conn):
            residuals = []
            for nx in (64, 128):
                grid = SphereBundleGrid(DISK, nx=nx, n_theta=32)
                u = bump_section(grid, m=deg, d=2, vec=[0.8, 0.6j],
                                 radius=0.7)
                residuals.append(
                    pestov_residual(u, use_conn).relative_residual)
            worst_fine = max(worst_fine, residuals[1])
            # below ~1e-6 the residual sits on the quadrature rounding
            # floor, where refinement cannot reduce it further
            decreasing &= residuals[1] < residuals[0] or residuals[1] < 1e-6
    elapsed = time.perf_counter() - t0
    ok = worst_fine < 1e-2 and decreasing and elapsed < 300.0
    _verdict(9, "Pestov identity", ok,
             f"max relative residual = {worst_fine:.3e} (degrees 0..2, "
             f"trivial and random connections), decreasing under "
             f"refinement, {elapsed:.1f}s")


def test_criterion_10_x_split_leakage():
    t0 = time.perf_counter()
    from test_bundle import random_connection
    conn = random_connection(np.random.default_rng(10))
    grid = SphereBundleGrid(DISK, nx=48, n_theta=64)
    worst = 0.0
    for m in range(0, 7):
        u = bump_section(grid, m=m, d=2, vec=[0.7, -0.4j], radius=0.6)
        _, _, leak = x_split(u, m, conn)
        worst = max(worst, leak)
    elapsed = time.perf_counter() - t0
    _verdict(10, "mode-split leakage", worst < 1e-6 and elapsed < 60.0,
             f"max leak = {worst:.3e} for m <= 6, {elapsed:.1f}s")


def test_criterion_11_reconstruction_closed_loop():
    t0 = time.perf_counter()
    params = su2_basis(count=6)
    fan = FanSpec.uniform_pairs(120, n_openings=8)
    cfg = ReconstructionConfig(tikhonov=1e-10)
    rng = np.random.default_rng(11)
    truth = rng.normal(size=6)
    truth /= np.linalg.norm(truth)
    data = forward_map(DISK, ConnectionField.zero(2),
                       params.with_coeffs(truth), fan, cfg)
    report = reconstruct_higgs(data, DISK, ConnectionField.zero(2), params,
                               fan, cfg, ground_truth=truth)
    elapsed = time.perf_counter() - t0
    ok = (report.coeff_error < 0.05 and report.iterations <= 30
          and elapsed < 600.0)
    _verdict(11, "reconstruction closed loop", ok,
             f"relative coefficient error = {report.coeff_error:.3%} in "
             f"{report.iterations} Gauss-Newton iterations, {elapsed:.1f}s")


def test_criterion_12_determinism(tmp_path):
    from test_cli import BASE_CONFIG
    from ahxray.cli import main
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(BASE_CONFIG)
    outs = []
    for tag in ("1", "2"):
        data = tmp_path / f"d{tag}.jsonl"
        rep = tmp_path / f"r{tag}.json"
        assert main(["scatter", "--config", str(cfg), "--out",
                     str(data)]) == 0
        assert main(["pestov", "--config", str(cfg), "--grid", "32,32",
                     "--out", str(rep)]) == 0
        outs.append((data.read_bytes(), rep.read_bytes()))
    ok = outs[0] == outs[1]
    _verdict(12, "determinism", ok,
             "identical config + seed give byte-identical dataset and "
             "report files")
