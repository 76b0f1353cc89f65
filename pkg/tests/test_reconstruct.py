"""Reconstruction tests.

Oracles: the ground truth of every closed loop is known by construction;
the abelian linearization column is an independent quadrature of the
scalar transform of each basis field.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from ahxray.bundle import ConnectionField, GaussBump
from ahxray.errors import DomainError
from ahxray.geometry import AHModel, DiskGeodesic
from ahxray.reconstruct import (HiggsParameterization, ReconstructionConfig,
                                forward_map, jacobian_fd, reconstruct_higgs)
from ahxray.xray import FanSpec, add_matrix_noise, compare_datasets
from test_bundle import SU2, random_gauge


@pytest.fixture(scope="module")
def disk():
    return AHModel()


def su2_basis(count=6, decay_N1=4, seed=5):
    rng = np.random.default_rng(seed)
    basis = []
    centers = [(0.25, 0.0), (-0.2, 0.2), (0.0, -0.3), (-0.25, -0.15),
               (0.15, 0.3), (0.3, -0.25)]
    for k in range(count):
        gen = SU2[k % 3]
        basis.append((gen, GaussBump(center=centers[k % len(centers)],
                                     sigma=0.25 + 0.05 * (k % 3))))
    return HiggsParameterization(rank=2, basis=basis, decay_N1=decay_N1)


def scalar_basis(count=3, decay_N1=4):
    centers = [(0.2, 0.0), (-0.15, 0.2), (0.0, -0.25)]
    basis = [(1j * np.eye(1), GaussBump(center=c, sigma=0.3))
             for c in centers[:count]]
    return HiggsParameterization(rank=1, basis=basis, decay_N1=decay_N1)


class TestForwardMap:
    def test_zero_coeffs_give_identities(self, disk):
        params = su2_basis()
        fan = FanSpec.uniform_pairs(12, n_openings=3)
        ds = forward_map(disk, ConnectionField.zero(2), params, fan)
        for r in ds.records:
            assert np.max(np.abs(r.matrix - np.eye(2))) < 1e-9

    def test_nonlinearity(self, disk):
        # path ordering makes the map nonlinear: doubling coefficients does
        # not double the log-deviation exactly in the non-abelian case
        params = su2_basis(count=2)
        fan = FanSpec.uniform_pairs(4, n_openings=2)
        c = np.array([0.9, -1.1])
        d1 = forward_map(disk, ConnectionField.zero(2),
                         params.with_coeffs(c), fan)
        d2 = forward_map(disk, ConnectionField.zero(2),
                         params.with_coeffs(2 * c), fan)
        one = d1.records[0].matrix - np.eye(2)
        two = d2.records[0].matrix - np.eye(2)
        assert np.max(np.abs(two - 2 * one)) > 1e-4

    def test_curved_connection_refused(self, disk, rng):
        from test_bundle import random_connection
        params = su2_basis()
        fan = FanSpec.uniform_pairs(4, n_openings=2)
        with pytest.raises(DomainError):
            forward_map(disk, random_connection(rng), params, fan)

    def test_flat_gauge_connection_accepted(self, disk, rng):
        from ahxray.bundle import HiggsFieldData, gauge_transform
        conn, _ = gauge_transform(ConnectionField.zero(2),
                                  HiggsFieldData.zero(2), random_gauge(rng))
        params = su2_basis()
        fan = FanSpec.uniform_pairs(4, n_openings=2)
        ds = forward_map(disk, conn, params, fan)
        assert len(ds.records) == 4


class TestJacobian:
    def test_abelian_linearization_oracle(self, disk):
        # at c = 0 the scalar residual column k is (0, -I_k) per record
        # with I_k the scalar transform of the k-th basis field
        params = scalar_basis()
        fan = FanSpec.uniform_pairs(8, n_openings=2)
        jac = jacobian_fd(disk, ConnectionField.zero(1), params, fan,
                          np.zeros(params.size))
        geos = [DiskGeodesic.between_boundary_angles(disk, a, b)
                for a, b in fan.pairs]
        geos.sort(key=lambda g: g.boundary_data()[0].key())
        n = len(geos)
        for k in range(params.size):
            higgs_k = params.with_coeffs(np.eye(params.size)[k]).higgs()

            for i, geo in enumerate(geos):
                def integrand(t):
                    return float(higgs_k.phi(
                        geo.position(np.asarray(t))).imag[0, 0])
                i_k, _ = quad(integrand, geo.t_entry, geo.t_exit,
                              limit=200, epsabs=1e-12, epsrel=1e-12)
                # residual stacking: all real parts, then all imaginaries
                assert abs(jac[i, k] - 0.0) < 1e-5
                assert abs(jac[n + i, k] + i_k) < 1e-5

    def test_full_column_rank(self, disk):
        params = su2_basis()
        fan = FanSpec.uniform_pairs(48, n_openings=6)
        jac = jacobian_fd(disk, ConnectionField.zero(2), params, fan,
                          np.zeros(params.size))
        sv = np.linalg.svd(jac, compute_uv=False)
        assert sv[-1] > 1e-6 * sv[0]
        assert np.linalg.matrix_rank(jac, tol=1e-8 * sv[0]) == params.size

    def test_doubling_fan_keeps_rank(self, disk):
        params = su2_basis()
        big = FanSpec.uniform_pairs(96, n_openings=6)
        jac = jacobian_fd(disk, ConnectionField.zero(2), params, big,
                          np.zeros(params.size))
        assert np.linalg.matrix_rank(jac, tol=1e-10) == params.size


class TestClosedLoop:
    def test_zero_data_recovers_zero(self, disk):
        params = su2_basis()
        fan = FanSpec.uniform_pairs(24, n_openings=4)
        cfg = ReconstructionConfig(tikhonov=1e-8)
        data = forward_map(disk, ConnectionField.zero(2), params, fan, cfg)
        report = reconstruct_higgs(data, disk, ConnectionField.zero(2),
                                   params, fan, cfg)
        assert np.linalg.norm(report.coeffs) < 1e-6

    def test_noiseless_recovery(self, disk):
        params = su2_basis(count=6)
        fan = FanSpec.uniform_pairs(120, n_openings=8)
        cfg = ReconstructionConfig(tikhonov=1e-10)
        rng = np.random.default_rng(11)
        truth = rng.normal(size=6)
        truth /= np.linalg.norm(truth)
        data = forward_map(disk, ConnectionField.zero(2),
                           params.with_coeffs(truth), fan, cfg)
        report = reconstruct_higgs(data, disk, ConnectionField.zero(2),
                                   params, fan, cfg, ground_truth=truth)
        assert report.coeff_error < 0.05
        assert report.iterations <= 30
        assert all(b <= a + 1e-15 for a, b in
                   zip(report.residual_history, report.residual_history[1:]))

    def test_injectivity_probe(self, disk):
        params = su2_basis()
        fan = FanSpec.uniform_pairs(24, n_openings=4)
        rng = np.random.default_rng(3)
        c1 = rng.normal(size=6)
        c2 = rng.normal(size=6)
        delta = (c1 - c2) / np.linalg.norm(c1 - c2)
        c2 = c1 - delta          # now |c1 - c2| = 1
        d1 = forward_map(disk, ConnectionField.zero(2),
                         params.with_coeffs(c1), fan)
        d2 = forward_map(disk, ConnectionField.zero(2),
                         params.with_coeffs(c2), fan)
        assert compare_datasets(d1, d2).max_frobenius > 1e-4

    def test_noise_robustness_reported(self, disk):
        # with sigma noise the misfit at the optimum is near
        # sigma * sqrt(record count * 2 d^2); reported, not asserted tightly
        params = su2_basis(count=4)
        fan = FanSpec.uniform_pairs(40, n_openings=4)
        cfg = ReconstructionConfig(tikhonov=1e-8)
        rng = np.random.default_rng(23)
        truth = 0.7 * rng.normal(size=4)
        clean = forward_map(disk, ConnectionField.zero(2),
                            params.with_coeffs(truth), fan, cfg)
        sigma = 1e-3
        noisy = add_matrix_noise(clean, sigma, seed=99)
        report = reconstruct_higgs(noisy, disk, ConnectionField.zero(2),
                                   params, fan, cfg, ground_truth=truth)
        expected = sigma * math.sqrt(len(clean.records) * 2 * 4)
        assert report.data_misfit > 0.0
        # factor-5 sanity window around the nominal noise floor
        assert expected / 5 < report.data_misfit < 5 * expected


class TestValidation:
    def test_dependent_basis_rejected(self):
        gen = SU2[0]
        bump = GaussBump(center=(0.1, 0.1), sigma=0.3)
        with pytest.raises(DomainError):
            HiggsParameterization(rank=2, basis=[(gen, bump), (gen, bump)],
                                  decay_N1=4)

    def test_fd_step_window(self):
        with pytest.raises(DomainError):
            ReconstructionConfig(fd_step=1e-2)

    def test_negative_tikhonov_rejected(self):
        with pytest.raises(DomainError):
            ReconstructionConfig(tikhonov=-1.0)
