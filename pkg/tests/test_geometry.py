"""Geometry tests.

Oracles used here and nowhere in the library code:
- radial geodesics of the disk in closed form x(t) = (tanh(t/2), 0),
- a finite-difference Gauss curvature from metric samples alone,
- the orthogonal-circle construction checked directly against |c|^2 = 1 + R^2.
"""

import math

import numpy as np
import pytest

from ahxray.errors import (DegenerateGeodesicError, DomainError,
                           TrappedGeodesicError)
from ahxray.geometry import (AHModel, BoundaryDatum, ConformalBump,
                             DiskGeodesic, Direction, IntegratorConfig,
                             ModelKind, PhasePoint,
                             geodesic_between_boundary_angles,
                             integrate_geodesic, metric_at, rho_at,
                             sectional_curvature, shoot_from_boundary)


def fd_gauss_curvature(model, x, h=1e-4):
    """Independent curvature oracle: K = -exp(-2 Phi) * Lap(Phi) by central
    second differences of Phi = 0.5*log(g_11) read off metric samples."""
    def phi(p):
        return 0.5 * math.log(metric_at(model, p).g[0, 0])

    x = np.asarray(x, dtype=float)
    lap = 0.0
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        lap += (phi(x + e) - 2.0 * phi(x) + phi(x - e)) / h**2
    return -math.exp(-2.0 * phi(x)) * lap


class TestMetric:
    def test_center_values(self, disk):
        m = metric_at(disk, (0.0, 0.0))
        assert np.allclose(m.g, 4.0 * np.eye(2), atol=1e-14)
        assert np.allclose(m.christoffel, 0.0, atol=1e-14)

    def test_half_radius_value(self, disk):
        m = metric_at(disk, (0.5, 0.0))
        expected = 4.0 / 0.75**2
        assert np.allclose(m.g, expected * np.eye(2), rtol=1e-14)

    def test_inverse_and_symmetry(self, disk, perturbed, rng):
        for model in (disk, perturbed):
            for _ in range(20):
                x = rng.uniform(-0.7, 0.7, 2)
                m = metric_at(model, x)
                assert np.max(np.abs(m.g @ m.g_inv - np.eye(2))) < 1e-12
                assert np.allclose(m.christoffel,
                                   np.swapaxes(m.christoffel, 1, 2))

    def test_dg_matches_finite_differences(self, perturbed, rng):
        h = 1e-6
        for _ in range(10):
            x = rng.uniform(-0.6, 0.6, 2)
            m = metric_at(perturbed, x)
            for k in range(2):
                e = np.zeros(2)
                e[k] = h
                fd = (metric_at(perturbed, x + e).g
                      - metric_at(perturbed, x - e).g) / (2 * h)
                assert np.max(np.abs(fd - m.dg[k])) < 1e-4 * max(
                    1.0, np.max(np.abs(m.dg[k])))

    def test_perturbed_equals_disk_outside_bump(self, disk, perturbed):
        x = np.array([-0.6, -0.4])   # outside the bump support
        assert np.allclose(metric_at(perturbed, x).g, metric_at(disk, x).g,
                           rtol=1e-15)

    def test_domain_error(self, disk):
        with pytest.raises(DomainError):
            metric_at(disk, (1.0, 0.0))


class TestRho:
    def test_values(self, disk, perturbed):
        assert rho_at(disk, (0.0, 0.0)) == 1.0
        assert abs(rho_at(disk, (0.6, 0.8))) < 1e-15
        assert rho_at(disk, (0.5, 0.0)) == 0.75
        assert rho_at(perturbed, (0.5, 0.0)) == 0.75


class TestCurvature:
    def test_disk_is_minus_one(self, disk, rng):
        for _ in range(50):
            r = math.sqrt(rng.uniform(0.0, 0.98))
            a = rng.uniform(0.0, 2 * math.pi)
            x = r * np.array([math.cos(a), math.sin(a)])
            assert abs(sectional_curvature(disk, x) + 1.0) < 1e-9
        assert abs(sectional_curvature(disk, (0.9, 0.1)) + 1.0) < 1e-9

    def test_perturbed_against_fd_oracle(self, perturbed, rng):
        center = np.asarray(perturbed.bump.center)
        k_center = sectional_curvature(perturbed, center)
        assert k_center < 0.0
        assert abs(k_center - fd_gauss_curvature(perturbed, center)) < 1e-5
        for _ in range(10):
            x = center + rng.uniform(-0.2, 0.2, 2)
            ka = sectional_curvature(perturbed, x)
            assert abs(ka - fd_gauss_curvature(perturbed, x)) < 1e-5

    def test_negativity_on_grid(self, perturbed):
        axis = np.linspace(-0.95, 0.95, 64)
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        pts = np.stack([xx, yy], axis=-1)
        inside = np.sum(pts * pts, axis=-1) < 0.999
        assert np.all(perturbed.gauss_curvature(pts[inside]) < 0.0)

    def test_amplitude_cap_enforced(self):
        bump = ConformalBump(center=(0.3, 0.0), radius=0.3, amplitude=5.0)
        with pytest.raises(DomainError):
            AHModel(ModelKind.CONFORMAL_PERTURBED, bump=bump)

    def test_bump_near_boundary_rejected(self):
        bump = ConformalBump(center=(0.9, 0.0), radius=0.2, amplitude=0.01)
        with pytest.raises(DomainError):
            AHModel(ModelKind.CONFORMAL_PERTURBED, bump=bump)


class TestIntegration:
    def test_radial_tanh_oracle(self, disk):
        start = PhasePoint(disk, (0.0, 0.0), (0.5, 0.0))
        path = integrate_geodesic(disk, start)
        sel = np.abs(path.t) <= 6.0
        expected = np.stack([np.tanh(path.t[sel] / 2.0),
                             np.zeros(sel.sum())], axis=-1)
        assert np.max(np.abs(path.x[sel] - expected)) < 1e-6

    def test_unit_speed_conserved(self, disk, perturbed, rng):
        for model in (disk, perturbed):
            x = rng.uniform(-0.4, 0.4, 2)
            start = PhasePoint.from_angle(model, x, rng.uniform(0, 2 * math.pi))
            path = integrate_geodesic(model, start)
            assert path.unit_speed_defect() < 1e-8

    def test_exponential_escape_rate(self, disk):
        # rho along an escaping geodesic behaves like C exp(-t); the fitted
        # log-slope must match -1 within 5%.
        start = PhasePoint.from_angle(disk, (0.1, 0.2), 0.7)
        path = integrate_geodesic(disk, start)
        sel = path.t > 6.0
        rho = disk.rho(path.x[sel])
        slope = np.polyfit(path.t[sel], np.log(rho), 1)[0]
        assert abs(slope + 1.0) < 0.05

    def test_path_invariants(self, disk):
        start = PhasePoint.from_angle(disk, (0.2, -0.3), 1.2)
        path = integrate_geodesic(disk, start)
        assert np.all(np.diff(path.t) > 0)
        rho = disk.rho(path.x)
        assert np.all(rho[1:-1] >= path.rho_cut * (1 - 1e-9))
        assert rho[0] <= 2 * path.rho_cut and rho[-1] <= 2 * path.rho_cut

    def test_time_symmetry(self, disk):
        start = PhasePoint.from_angle(disk, (0.15, 0.05), 2.1)
        path = integrate_geodesic(disk, start)
        again = integrate_geodesic(disk, path.midpoint_phasepoint())
        assert abs(again.entry.alpha - path.entry.alpha) < 1e-6
        assert abs(again.entry.eta_tangential
                   - path.entry.eta_tangential) < 1e-6

    def test_trapped_budget_raises(self, disk):
        cfg = IntegratorConfig(max_span=2.0)
        start = PhasePoint.from_angle(disk, (0.0, 0.0), 0.3)
        with pytest.raises(TrappedGeodesicError) as err:
            integrate_geodesic(disk, start, cfg)
        assert err.value.partial is not None

    def test_convergence_order(self, disk):
        # pin the adaptive scheme to a fixed step and halve it: the error
        # against the tanh oracle must shrink by the nominal order-5
        # factor 2^5 = 32, within a factor of 2
        from scipy.integrate import solve_ivp

        def rhs(_t, y):
            x, v = y[:2], y[2:]
            return np.concatenate([v, disk.geodesic_rhs(x, v)])

        errs = []
        for h in (0.2, 0.1):
            sol = solve_ivp(rhs, (0.0, 6.0), np.array([0, 0, 0.5, 0.0]),
                            max_step=h, first_step=h, rtol=1e6, atol=1e6,
                            dense_output=True)
            ts = np.linspace(0.0, 6.0, 200)
            errs.append(np.max(np.abs(sol.sol(ts)[0] - np.tanh(ts / 2))))
        ratio = errs[0] / errs[1]
        assert 2**5 / 2 < ratio < 2**5 * 2


class TestBoundaryAngles:
    def test_diameter(self, disk):
        path = geodesic_between_boundary_angles(disk, math.pi, 0.0)
        assert np.max(np.abs(path.x[:, 1])) < 1e-12
        assert path.entry.alpha == pytest.approx(math.pi, abs=1e-12)
        assert path.exit.alpha == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_circle_oracle(self, disk):
        # alpha_in = pi/2, alpha_out = 0 must trace the Euclidean circle
        # centered (1,1) with radius 1; orthogonality |c|^2 = 1 + R^2 exact.
        geo = DiskGeodesic.between_boundary_angles(disk, math.pi / 2, 0.0)
        t = np.linspace(geo.t_entry, geo.t_exit, 200)
        x = geo.position(t)
        dist = np.hypot(x[:, 0] - 1.0, x[:, 1] - 1.0)
        assert np.max(np.abs(dist - 1.0)) < 1e-9
        c = np.array([1.0, 1.0])
        assert abs(np.dot(c, c) - 1.0 - 1.0**2) < 1e-12

    def test_round_trip_angles(self, disk, rng):
        for _ in range(15):
            a_in = rng.uniform(0, 2 * math.pi)
            a_out = (a_in + rng.uniform(0.3, 2 * math.pi - 0.3)) % (2 * math.pi)
            path = geodesic_between_boundary_angles(disk, a_in, a_out)
            assert abs((path.entry.alpha - a_in + math.pi) % (2 * math.pi)
                       - math.pi) < 1e-6
            assert abs((path.exit.alpha - a_out + math.pi) % (2 * math.pi)
                       - math.pi) < 1e-6

    def test_unit_speed_exact(self, disk):
        # conformal parametrization is exact; near rho_cut the measurement
        # itself is limited by rounding of 1 - |x|^2, still far below 1e-8
        path = geodesic_between_boundary_angles(disk, 2.0, 4.5)
        assert path.unit_speed_defect() < 1e-9
        inner = np.abs(path.t) < 10.0
        speeds = disk.speed(path.x[inner], path.v[inner])
        assert np.max(np.abs(speeds - 1.0)) < 1e-11

    def test_degenerate_raises(self, disk):
        with pytest.raises(DegenerateGeodesicError):
            geodesic_between_boundary_angles(disk, 1.0, 1.0)

    def test_extrapolated_datum_matches_analytic(self, disk):
        # integrated-path boundary extrapolation against the closed form
        geo = DiskGeodesic.between_boundary_angles(disk, 1.0, 3.7)
        mid = PhasePoint(disk, geo.position(np.zeros(())),
                         geo.velocity(np.zeros(())))
        path = integrate_geodesic(disk, mid)
        entry, exit_ = geo.boundary_data()
        assert abs(path.entry.alpha - entry.alpha) < 1e-6
        assert abs(path.exit.alpha - exit_.alpha) < 1e-6
        assert abs(path.entry.eta_tangential - entry.eta_tangential) < 1e-6


class TestShooting:
    def test_radial_datum_exits_antipodally(self, disk):
        for alpha in (0.0, 1.1, 4.0):
            datum = BoundaryDatum(alpha, 0.0, Direction.INCOMING)
            path = shoot_from_boundary(disk, datum, 1e-6)
            expected = (alpha + math.pi) % (2 * math.pi)
            assert abs((path.exit.alpha - expected + math.pi) % (2 * math.pi)
                       - math.pi) < 1e-4

    def test_matches_chord_oracle(self, disk):
        # exit of a shot geodesic must invert the analytic chord relation
        geo = DiskGeodesic.between_boundary_angles(disk, 0.8, 2.9)
        entry, exit_ = geo.boundary_data()
        path = shoot_from_boundary(disk, entry, 1e-6)
        assert abs((path.exit.alpha - exit_.alpha + math.pi) % (2 * math.pi)
                   - math.pi) < 1e-4
        assert abs(path.exit.eta_tangential - exit_.eta_tangential) < 1e-4

    def test_richardson_in_rho_start(self, disk):
        datum = BoundaryDatum(0.5, 0.8, Direction.INCOMING)
        exits = [shoot_from_boundary(disk, datum, rs).exit.alpha
                 for rs in (1e-6, 5e-7)]
        assert abs(exits[0] - exits[1]) < 1e-5

    def test_nontrapping_probe_on_perturbed(self, perturbed, rng):
        # fan of >= 200 shot geodesics on an accepted perturbed model:
        # none exceeds the integration budget before escaping
        count = 0
        for alpha in np.linspace(0, 2 * math.pi, 40, endpoint=False):
            for eta in (-2.0, -0.5, 0.0, 0.5, 2.0):
                datum = BoundaryDatum(alpha, eta, Direction.INCOMING)
                path = shoot_from_boundary(perturbed, datum, 1e-6)
                assert perturbed.rho(path.x[-1]) <= 2e-6
                count += 1
        assert count == 200

    def test_outgoing_datum_rejected(self, disk):
        datum = BoundaryDatum(0.0, 0.0, Direction.OUTGOING)
        with pytest.raises(DomainError):
            shoot_from_boundary(disk, datum, 1e-6)


def test_csv_export(disk):
    path = geodesic_between_boundary_angles(disk, 0.3, 2.0)
    text = path.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "t,x1,x2,v1,v2"
    assert len(lines) == len(path.t) + 1
