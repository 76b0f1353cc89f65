"""Scattering datasets over geodesic fans and gauge recovery from them.

A dataset is the desk-scale realization of the non-abelian X-ray transform:
one invertible matrix per incoming boundary datum, obtained by solving the
fundamental transport system along the corresponding geodesic.  Datasets of
gauge-equivalent pairs agree up to the truncation level, which is the
forward direction of the gauge-equivalence theorem; the reverse pipeline
recovers the gauge as Q = U Utilde^{-1} from the two entry-normalized
endomorphism solutions and checks that it has fiber degree zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ._linalg import frobenius
from .bundle import ConnectionField, HiggsFieldData
from .errors import (DomainError, FanMismatchError, IllConditionedGaugeError,
                     InsufficientCrossingsError, TrappedGeodesicError)
from .geometry import (AHModel, BoundaryDatum, DiskGeodesic, Direction,
                       GeodesicPath, IntegratorConfig, ModelKind,
                       shoot_from_boundary)
from .transport import (TransportConfig, _endomorphism_rhs_factory,
                        _pair_rhs_factory, _transport_rhs_factory,
                        batch_transport, scattering_matrix)


class FanMode(Enum):
    BOUNDARY_PAIRS = "boundary_pairs"
    SHOOTING = "shooting"


@dataclass(frozen=True)
class FanSpec:
    """Family of geodesics indexing a scattering dataset."""

    mode: FanMode
    pairs: tuple = ()            # (alpha_in, alpha_out) for BOUNDARY_PAIRS
    data: tuple = ()             # BoundaryDatum for SHOOTING

    def __post_init__(self):
        if self.mode is FanMode.BOUNDARY_PAIRS:
            for a, b in self.pairs:
                if abs(math.remainder(a - b, 2.0 * math.pi)) < 1e-9:
                    raise DomainError("degenerate boundary pair in fan")
        else:
            for datum in self.data:
                if datum.direction is not Direction.INCOMING:
                    raise DomainError("shooting fan data must be incoming")

    def __len__(self):
        return len(self.pairs) if self.mode is FanMode.BOUNDARY_PAIRS \
            else len(self.data)

    @classmethod
    def uniform_pairs(cls, count: int, n_openings: int = 8,
                      opening_lo: float = math.pi / 3,
                      opening_hi: float = 5 * math.pi / 3) -> "FanSpec":
        """Entry angles sweep the circle; openings sweep a chord range."""
        n_in = max(1, count // n_openings)
        pairs = []
        openings = np.linspace(opening_lo, opening_hi, n_openings)
        alphas = np.linspace(0.0, 2 * math.pi, n_in, endpoint=False)
        for a in alphas:
            for op in openings:
                pairs.append((float(a), float((a + op) % (2 * math.pi))))
        return cls(FanMode.BOUNDARY_PAIRS, pairs=tuple(pairs[:count])
                   if count <= len(pairs) else tuple(pairs))

    @classmethod
    def uniform_shooting(cls, count: int, n_eta: int = 5,
                         eta_max: float = 2.0) -> "FanSpec":
        n_alpha = max(1, count // n_eta)
        data = []
        for a in np.linspace(0.0, 2 * math.pi, n_alpha, endpoint=False):
            for eta in np.linspace(-eta_max, eta_max, n_eta):
                data.append(BoundaryDatum(float(a), float(eta),
                                          Direction.INCOMING))
        return cls(FanMode.SHOOTING, data=tuple(data[:count]))


@dataclass
class ScatteringRecord:
    entry: BoundaryDatum
    exit: BoundaryDatum
    matrix: np.ndarray
    unitarity_defect: float

    def __post_init__(self):
        if abs(np.linalg.det(self.matrix)) <= 1e-6:
            raise DomainError("scattering matrix is numerically singular")


@dataclass
class ScatteringDataset:
    fingerprint: str
    rank: int
    rho_cut: float
    records: list[ScatteringRecord]
    failures: list[tuple[tuple[float, float], str]] = field(default_factory=list)

    def sort(self) -> "ScatteringDataset":
        self.records.sort(key=lambda r: r.entry.key())
        return self

    def to_jsonl(self) -> str:
        lines = [json.dumps({"fingerprint": self.fingerprint,
                             "rank": self.rank, "rho_cut": self.rho_cut},
                            sort_keys=True)]
        for r in self.records:
            flat = []
            for z in r.matrix.reshape(-1):
                flat.extend([float(z.real), float(z.imag)])
            lines.append(json.dumps({
                "entry_alpha": r.entry.alpha,
                "entry_eta": r.entry.eta_tangential,
                "exit_alpha": r.exit.alpha,
                "exit_eta": r.exit.eta_tangential,
                "matrix": flat,
                "unitarity_defect": r.unitarity_defect,
            }, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ScatteringDataset":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        d = int(head["rank"])
        records = []
        for ln in lines[1:]:
            obj = json.loads(ln)
            flat = np.asarray(obj["matrix"], dtype=float)
            mat = (flat[0::2] + 1j * flat[1::2]).reshape(d, d)
            records.append(ScatteringRecord(
                entry=BoundaryDatum(obj["entry_alpha"], obj["entry_eta"],
                                    Direction.INCOMING),
                exit=BoundaryDatum(obj["exit_alpha"], obj["exit_eta"],
                                   Direction.OUTGOING),
                matrix=mat, unitarity_defect=obj["unitarity_defect"]))
        return cls(fingerprint=head["fingerprint"], rank=d,
                   rho_cut=float(head["rho_cut"]), records=records)


def _fan_geodesics(model: AHModel, fan: FanSpec,
                   rho_cut: float) -> list[DiskGeodesic]:
    return [DiskGeodesic.between_boundary_angles(model, a, b, rho_cut)
            for a, b in fan.pairs]


def compute_scattering_data(model: AHModel, conn: ConnectionField,
                            higgs: HiggsFieldData, fan: FanSpec,
                            cfg: Optional[TransportConfig] = None,
                            fingerprint: str = "") -> ScatteringDataset:
    """One scattering record per fan element, deterministically ordered.

    Boundary-pair fans on the unperturbed disk run through the vectorized
    fixed-step backend on closed-form geodesics; shooting fans integrate
    each geodesic and transport adaptively.  A trapped geodesic aborts its
    record, not the dataset.
    """
    cfg = cfg or TransportConfig()
    dataset = ScatteringDataset(fingerprint=fingerprint, rank=conn.rank,
                                rho_cut=cfg.rho_cut, records=[])
    if fan.mode is FanMode.BOUNDARY_PAIRS:
        if model.kind is not ModelKind.POINCARE_DISK:
            raise DomainError(
                "boundary-pair fans need closed-form disk geodesics; "
                "use a shooting fan for perturbed models")
        geos = _fan_geodesics(model, fan, cfg.rho_cut)
        exits, _ = batch_transport(_transport_rhs_factory(conn, higgs),
                                   geos, conn.rank, cfg)
        from ._linalg import unitary_defect
        defects = unitary_defect(exits)
        for geo, mat, defect in zip(geos, exits, defects):
            entry, exit_ = geo.boundary_data()
            dataset.records.append(ScatteringRecord(
                entry=entry, exit=exit_, matrix=mat,
                unitarity_defect=float(defect)))
    else:
        icfg = IntegratorConfig(rho_cut=cfg.rho_cut)
        for datum in fan.data:
            try:
                path = shoot_from_boundary(model, datum, cfg.rho_cut, icfg)
                res = scattering_matrix(model, conn, higgs, path, cfg)
            except TrappedGeodesicError as err:
                dataset.failures.append((datum.key(), str(err)))
                continue
            dataset.records.append(ScatteringRecord(
                entry=datum, exit=path.exit, matrix=res.exit_value,
                unitarity_defect=res.unitarity_defect))
    return dataset.sort()


@dataclass
class ComparisonReport:
    max_frobenius: float
    per_record: list[tuple[tuple[float, float], float]]


def compare_datasets(a: ScatteringDataset,
                     b: ScatteringDataset) -> ComparisonReport:
    """Pairwise Frobenius distances of records over a common fan."""
    if a.rank != b.rank:
        raise FanMismatchError("datasets have different ranks")
    if len(a.records) != len(b.records):
        raise FanMismatchError("datasets cover different fans")
    per = []
    for ra, rb in zip(a.records, b.records):
        ka, kb = ra.entry.key(), rb.entry.key()
        if abs(ka[0] - kb[0]) > 1e-6 or abs(ka[1] - kb[1]) > 1e-6:
            raise FanMismatchError(f"entry keys differ: {ka} vs {kb}")
        per.append((ka, float(frobenius(ra.matrix - rb.matrix))))
    return ComparisonReport(max_frobenius=max(d for _, d in per) if per
                            else 0.0, per_record=per)


def add_matrix_noise(dataset: ScatteringDataset, sigma: float,
                     seed: int) -> ScatteringDataset:
    """Additive Gaussian noise on matrix entries, for reconstruction
    experiments only."""
    rng = np.random.default_rng(seed)
    noisy = []
    for r in dataset.records:
        shape = r.matrix.shape
        noise = rng.normal(scale=sigma, size=shape) \
            + 1j * rng.normal(scale=sigma, size=shape)
        noisy.append(ScatteringRecord(entry=r.entry, exit=r.exit,
                                      matrix=r.matrix + noise,
                                      unitarity_defect=r.unitarity_defect))
    return ScatteringDataset(fingerprint=dataset.fingerprint,
                             rank=dataset.rank, rho_cut=dataset.rho_cut,
                             records=noisy)


# -- gauge recovery ----------------------------------------------------------


@dataclass
class GaugeCurve:
    """Gauge candidate Q(t) = U(t) Utilde(t)^{-1} sampled along one geodesic."""

    t: np.ndarray          # (n,)
    x: np.ndarray          # (n, 2)
    v: np.ndarray          # (n, 2), unit velocity
    theta: np.ndarray      # (n,), direction angle of the velocity
    q: np.ndarray          # (n, d, d)
    u: np.ndarray          # (n, d, d)
    u_tilde: np.ndarray    # (n, d, d)


def gauge_candidate(model: AHModel,
                    pair_a: tuple[ConnectionField, HiggsFieldData],
                    pair_b: tuple[ConnectionField, HiggsFieldData],
                    path: GeodesicPath,
                    sample_times: Sequence[float],
                    cfg: Optional[TransportConfig] = None) -> GaugeCurve:
    """Entry-normalized endomorphism solutions U, Utilde along a geodesic
    and their quotient, tagged with base point and fiber angle.

    For gauge-equivalent pairs the quotient reproduces the gauge along the
    lifted geodesic up to truncation and solver error.
    """
    cfg = cfg or TransportConfig()
    conn_a, higgs_a = pair_a
    conn_b, higgs_b = pair_b
    if not conn_a.rank == higgs_a.rank == conn_b.rank == higgs_b.rank:
        raise DomainError("gauge candidate requires matching ranks")
    d = conn_a.rank
    prep_u = _endomorphism_rhs_factory(conn_a, higgs_a)
    prep_ut = _pair_rhs_factory(conn_a, conn_b, higgs_b)
    sample_times = np.sort(np.asarray(sample_times, dtype=float))

    if path.analytic is not None:
        geo = path.analytic
        span = geo.t_exit - geo.t_entry
        fracs = np.clip((sample_times - geo.t_entry) / span, 0.0, 1.0)
        _, rec_u = batch_transport(prep_u, [geo], d, cfg, record_fracs=fracs)
        _, rec_ut = batch_transport(prep_ut, [geo], d, cfg, record_fracs=fracs)
        ts = np.array([r[0][0] for r in rec_u])
        xs = np.array([r[1][0] for r in rec_u])
        vs = np.array([r[2][0] for r in rec_u])
        us = np.array([r[3][0] for r in rec_u])
        uts = np.array([r[3][0] for r in rec_ut])
    else:
        ts, xs, vs, us, uts = _joint_gauge_samples(
            model, prep_u, prep_ut, path, sample_times, d, cfg)

    conds = np.linalg.cond(uts)
    if np.any(conds > 1e8):
        raise IllConditionedGaugeError(
            f"Utilde condition number reached {conds.max():.2e}")
    qs = us @ np.linalg.inv(uts)
    theta = np.arctan2(vs[:, 1], vs[:, 0]) % (2.0 * math.pi)
    return GaugeCurve(t=ts, x=xs, v=vs, theta=theta, q=qs, u=us, u_tilde=uts)


def _joint_gauge_samples(model, prep_u, prep_ut, path, times, d, cfg):
    """Both endomorphism systems alongside the geodesic, read at exact times."""
    from scipy.integrate import solve_ivp

    n_u = d * d

    def unpack(y):
        u = (y[4:4 + n_u] + 1j * y[4 + n_u:4 + 2 * n_u]).reshape(d, d)
        ut = (y[4 + 2 * n_u:4 + 3 * n_u]
              + 1j * y[4 + 3 * n_u:]).reshape(d, d)
        return u, ut

    def rhs(_t, y):
        x, v = y[:2], y[2:4]
        u, ut = unpack(y)
        du = prep_u(x, v)(u).reshape(-1)
        dut = prep_ut(x, v)(ut).reshape(-1)
        return np.concatenate([v, model.geodesic_rhs(x, v),
                               du.real, du.imag, dut.real, dut.imag])

    eye = np.eye(d, dtype=complex).reshape(-1)
    y0 = np.concatenate([path.x[0], path.v[0], eye.real, eye.imag,
                         eye.real, eye.imag])
    t_eval = np.clip(times, path.t[0], path.t[-1])
    sol = solve_ivp(rhs, (path.t[0], path.t[-1]), y0, method="RK45",
                    rtol=cfg.rtol, atol=cfg.atol, t_eval=t_eval)
    xs = sol.y[:2].T
    vs = sol.y[2:4].T
    us = np.empty((len(sol.t), d, d), dtype=complex)
    uts = np.empty_like(us)
    for i in range(len(sol.t)):
        us[i], uts[i] = unpack(sol.y[:, i])
    return sol.t, xs, vs, us, uts


def gauge_field_samples(model: AHModel,
                        pair_a: tuple[ConnectionField, HiggsFieldData],
                        pair_b: tuple[ConnectionField, HiggsFieldData],
                        points: np.ndarray, thetas: np.ndarray,
                        cfg: Optional[TransportConfig] = None) -> np.ndarray:
    """Gauge candidate sampled on a base-point x fiber-angle grid.

    For every (x, theta) the geodesic through that phase point is truncated
    at the sample time, so one vectorized transport run per system yields
    Q(x, theta) = U Utilde^{-1} exactly at the requested nodes.  Output
    shape: (len(points), len(thetas), d, d).
    """
    cfg = cfg or TransportConfig()
    conn_a, higgs_a = pair_a
    conn_b, higgs_b = pair_b
    d = conn_a.rank
    geos = []
    for x in np.asarray(points, dtype=float):
        for th in np.asarray(thetas, dtype=float):
            geo = DiskGeodesic.through(model, x, float(th), cfg.rho_cut)
            geo.t_exit = 0.0          # integrate entry -> sample point only
            geos.append(geo)
    u, _ = batch_transport(_endomorphism_rhs_factory(conn_a, higgs_a),
                           geos, d, cfg)
    ut, _ = batch_transport(_pair_rhs_factory(conn_a, conn_b, higgs_b),
                            geos, d, cfg)
    conds = np.linalg.cond(ut)
    if np.any(conds > 1e8):
        raise IllConditionedGaugeError(
            f"Utilde condition number reached {conds.max():.2e}")
    q = u @ np.linalg.inv(ut)
    return q.reshape(len(points), len(thetas), d, d)


@dataclass
class DegreeZeroReport:
    degree_zero: bool
    max_theta_variation: float
    mode0_residual: float
    mode1_residual: float
    cells_checked: int


def gauge_degree_zero_check(curves: Sequence[GaugeCurve],
                            pair_a: tuple[ConnectionField, HiggsFieldData],
                            pair_b: tuple[ConnectionField, HiggsFieldData],
                            cell_size: float = 0.05,
                            tol: float = 1e-4,
                            min_crossings: int = 3,
                            colocation_tol: float = 1e-6) -> DegreeZeroReport:
    """Degree-zero verdict for recovered gauge candidates.

    Samples are grouped by base-point cell.  In each cell crossed by enough
    distinct geodesics, one representative sample per geodesic enters the
    comparison: the sample closest (in summed nearest-neighbor distance) to
    the other geodesics' samples.  Only cells whose representatives
    co-locate within ``colocation_tol`` are scored; the degree-zero
    statement is pointwise in the base point, and cells where curves merely
    pass near each other would measure spatial spread instead of fiber
    dependence.  The zeroth-mode relation Phi Q - Q Phi_tilde is evaluated
    on the representative averages; the first-mode relation (the
    endomorphism derivative of Q against Q times the connection
    difference) is differenced along each curve in time, where the
    sampling is dense, rather than across cells.
    """
    conn_a, higgs_a = pair_a
    conn_b, higgs_b = pair_b

    # binning origin shifted by half a cell: round-number crossing points
    # (multiples of the cell size) then sit at cell centers, so sub-ulp
    # jitter in the sample positions cannot scatter them across cells
    cells: dict[tuple[int, int], dict[int, list[int]]] = {}
    for ci, curve in enumerate(curves):
        for si in range(len(curve.t)):
            key = (math.floor(curve.x[si, 0] / cell_size + 0.5),
                   math.floor(curve.x[si, 1] / cell_size + 0.5))
            cells.setdefault(key, {}).setdefault(ci, []).append(si)

    max_var = 0.0
    mode0 = 0.0
    checked = 0
    for key, members in cells.items():
        if len(members) < min_crossings:
            continue
        reps = {}
        for ci, sis in members.items():
            xs_own = curves[ci].x[sis]
            score = np.zeros(len(sis))
            for cj, sjs in members.items():
                if cj == ci:
                    continue
                xs_other = curves[cj].x[sjs]
                dists = np.linalg.norm(
                    xs_own[:, None, :] - xs_other[None, :, :], axis=-1)
                score += dists.min(axis=1)
            reps[ci] = sis[int(np.argmin(score))]
        pairs = list(reps.items())
        xs = np.array([curves[ci].x[si] for ci, si in pairs])
        dists = np.linalg.norm(xs[:, None, :] - xs[None, :, :], axis=-1)
        # keep the largest co-located cluster; geodesics that merely pass
        # through the cell without meeting the others are left out
        neighbor_counts = np.sum(dists <= colocation_tol, axis=1)
        anchor = int(np.argmax(neighbor_counts))
        cluster = np.nonzero(dists[anchor] <= colocation_tol)[0]
        if cluster.size < min_crossings:
            continue
        checked += 1
        xs = xs[cluster]
        qs = np.array([curves[pairs[i][0]].q[pairs[i][1]] for i in cluster])
        diffs = frobenius(qs[:, None, :, :] - qs[None, :, :, :])
        max_var = max(max_var, float(np.max(diffs)))
        q_bar = np.mean(qs, axis=0)
        x_bar = np.mean(xs, axis=0)
        res = higgs_a.phi(x_bar) @ q_bar - q_bar @ higgs_b.phi(x_bar)
        mode0 = max(mode0, float(frobenius(res)))
    if checked == 0:
        raise InsufficientCrossingsError(
            f"no cell of size {cell_size} has >= {min_crossings} crossings "
            "at a common base point")

    mode1 = 0.0
    for curve in curves:
        if len(curve.t) < 5:
            continue
        dt = np.diff(curve.t)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-12):
            continue                      # time-differencing needs uniform t
        h = dt[0]
        dq = (curve.q[:-4] - 8 * curve.q[1:-3] + 8 * curve.q[3:-1]
              - curve.q[4:]) / (12.0 * h)
        mid = slice(2, -2)
        x_m = curve.x[mid]
        v_m = curve.v[mid]
        gam = conn_a.along(x_m, v_m)
        a_dir = conn_b.along(x_m, v_m) - gam
        q_m = curve.q[mid]
        xq = dq + gam @ q_m - q_m @ gam
        res = xq - q_m @ a_dir
        mode1 = max(mode1, float(np.max(frobenius(res))))

    return DegreeZeroReport(degree_zero=max_var < tol,
                            max_theta_variation=max_var,
                            mode0_residual=mode0, mode1_residual=mode1,
                            cells_checked=checked)
