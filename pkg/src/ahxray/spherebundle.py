"""Discrete calculus on the unit sphere bundle of a conformal AH surface.

The bundle is coordinatized by (x, theta) with theta the Euclidean direction
angle; for conformal metrics theta is fiber arc length, so all vertical
operators are spectral in theta while base derivatives use 4th-order central
stencils on a Cartesian grid masked to {rho >= rho_grid}.

Operator conventions, with u^perp the +90-degree rotation of the unit
direction u and Phi the log conformal factor:

- geodesic derivative   X  = e^{-Phi} [ u . d_x + (dPhi . u^perp) d_theta ]
- vertical derivative   v-grad  = d_theta            (coefficient of v^perp)
- vertical divergence   v-div   = d_theta
- horizontal derivative h-grad  = e^{-Phi} [ u^perp . d_x
                                             - (dPhi . u) d_theta ]
- connection terms add Gamma(v) resp. Gamma(v^perp) acting on the fiber.

The horizontal divergence is the discrete adjoint of the horizontal
derivative under the quadrature inner product, so the adjoint identity
holds by construction and commutator residuals isolate discretization
error.  The curvature operator of the metric acts on v^perp coefficients
as multiplication by the Gauss curvature; the bundle curvature operator as
e^{-2 Phi} f_12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional
from weakref import WeakKeyDictionary

import numpy as np

from .bundle import ConnectionField
from .errors import DomainError
from .geometry import AHModel

TWO_PI = 2.0 * math.pi


class SphereBundleGrid:
    """Tensor grid on {rho >= rho_grid} x uniform fiber angles.

    Quadrature weight per node is sqrt(det g) * h1 * h2 * dtheta, so the
    total fiber measure over each base point is 2*pi*sqrt(det g)*h1*h2
    exactly.
    """

    def __init__(self, model: AHModel, nx: int = 64, n_theta: int = 64,
                 rho_grid: float = 0.05, ny: Optional[int] = None):
        if nx < 8 or n_theta < 8:
            raise DomainError("grid too small for 4th-order stencils")
        ny = ny or nx
        self.model = model
        self.nx, self.ny, self.n_theta = nx, ny, n_theta
        self.rho_grid = rho_grid
        r_grid = math.sqrt(1.0 - rho_grid)
        self.r_grid = r_grid
        self.xs = np.linspace(-r_grid, r_grid, nx)
        self.ys = np.linspace(-r_grid, r_grid, ny)
        self.h1 = self.xs[1] - self.xs[0]
        self.h2 = self.ys[1] - self.ys[0]
        self.dtheta = TWO_PI / n_theta
        self.thetas = np.arange(n_theta) * self.dtheta
        xx, yy = np.meshgrid(self.xs, self.ys, indexing="ij")
        self.points = np.stack([xx, yy], axis=-1)
        r2 = xx**2 + yy**2
        self.mask = r2 <= r_grid**2 + 1e-12
        self.interior_mask = self._erode(self.mask, 2)

        phi = np.zeros((nx, ny))
        grad = np.zeros((nx, ny, 2))
        gauss = np.zeros((nx, ny))
        pts = self.points[self.mask]
        phi[self.mask] = model.log_conformal(pts)
        grad[self.mask] = model.grad_log_conformal(pts)
        gauss[self.mask] = model.gauss_curvature(pts)
        self.phi = phi
        self.e_mphi = np.where(self.mask, np.exp(-phi), 0.0)
        self.grad_phi = grad
        self.gauss = gauss
        self.sqrt_det_g = np.where(self.mask, np.exp(2.0 * phi), 0.0)
        self.node_weight = self.sqrt_det_g * self.h1 * self.h2 * self.dtheta
        self.cth = np.cos(self.thetas)
        self.sth = np.sin(self.thetas)
        k = np.fft.fftfreq(n_theta, d=1.0 / n_theta)
        self._ik = 1j * k
        self._k2 = k * k
        self.max_exact_degree = (n_theta - 2) // 4
        self._symbol_cache: WeakKeyDictionary = WeakKeyDictionary()
        self._curvature_cache: WeakKeyDictionary = WeakKeyDictionary()

    @staticmethod
    def _erode(mask: np.ndarray, width: int) -> np.ndarray:
        padded = np.pad(mask, width, constant_values=False)
        out = mask.copy()
        nx, ny = mask.shape
        for dx in range(-width, width + 1):
            for dy in range(-width, width + 1):
                if dx == 0 and dy == 0:
                    continue
                out &= padded[width + dx: width + dx + nx,
                              width + dy: width + dy + ny]
        return out

    # -- cached field data ------------------------------------------------

    def symbols(self, conn: ConnectionField) -> np.ndarray:
        cached = self._symbol_cache.get(conn)
        if cached is None:
            d = conn.rank
            out = np.zeros((self.nx, self.ny, 2, d, d), dtype=complex)
            out[self.mask] = conn.symbols(self.points[self.mask])
            self._symbol_cache[conn] = out
            cached = out
        return cached

    def curvature(self, conn: ConnectionField) -> np.ndarray:
        cached = self._curvature_cache.get(conn)
        if cached is None:
            d = conn.rank
            out = np.zeros((self.nx, self.ny, d, d), dtype=complex)
            out[self.mask] = conn.curvature_f12(self.points[self.mask])
            self._curvature_cache[conn] = out
            cached = out
        return cached

    # -- differential building blocks --------------------------------------

    def dx(self, values: np.ndarray, axis: int) -> np.ndarray:
        """4th-order central difference with zero extension outside."""
        h = self.h1 if axis == 0 else self.h2
        pad = [(0, 0)] * values.ndim
        pad[axis] = (2, 2)
        p = np.pad(values, pad)
        sl = [slice(None)] * values.ndim

        def s(a, b):
            sl2 = list(sl)
            sl2[axis] = slice(a, b)
            return p[tuple(sl2)]

        return (-s(4, None) + 8.0 * s(3, -1) - 8.0 * s(1, -3) + s(0, -4)) \
            / (12.0 * h)

    def dtheta_spectral(self, values: np.ndarray) -> np.ndarray:
        spec = np.fft.fft(values, axis=2)
        spec *= self._ik[None, None, :, None]
        return np.fft.ifft(spec, axis=2)

    def theta_laplacian(self, values: np.ndarray) -> np.ndarray:
        spec = np.fft.fft(values, axis=2)
        spec *= self._k2[None, None, :, None]
        return np.fft.ifft(spec, axis=2)

    def mode_project(self, values: np.ndarray, m: int) -> np.ndarray:
        if m < 0:
            return np.zeros_like(values)
        if m >= self.n_theta // 2:
            raise DomainError(
                f"mode {m} aliases on a {self.n_theta}-point fiber grid")
        spec = np.fft.fft(values, axis=2)
        keep = np.zeros(self.n_theta, dtype=bool)
        keep[m] = True
        keep[-m] = True
        spec[:, :, ~keep, :] = 0.0
        return np.fft.ifft(spec, axis=2)

    def outer_ring_mask(self) -> np.ndarray:
        return self.mask & ~self.interior_mask


@dataclass
class SectionField:
    """Samples of a section of the pulled-back bundle on the grid."""

    values: np.ndarray        # (nx, ny, n_theta, d) complex
    grid: SphereBundleGrid
    compact_support: bool = False

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise DomainError("section contains non-finite entries")
        if self.compact_support:
            ring = self.grid.outer_ring_mask()
            if np.max(np.abs(self.values[ring])) > 0.0:
                raise DomainError(
                    "compactly supported section must vanish on the two "
                    "outermost rings")

    @property
    def rank(self) -> int:
        return self.values.shape[-1]

    def norm(self) -> float:
        return math.sqrt(max(inner(self, self).real, 0.0))


@dataclass
class NSectionField:
    """Coefficient of the g-unit rotated direction in the normal bundle."""

    coeffs: np.ndarray        # (nx, ny, n_theta, d) complex
    grid: SphereBundleGrid
    compact_support: bool = False

    @property
    def rank(self) -> int:
        return self.coeffs.shape[-1]

    def norm(self) -> float:
        return math.sqrt(max(inner(self, self).real, 0.0))


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, SectionField) else f.coeffs


def inner(a, b) -> complex:
    """L^2 inner product under the fiberwise Hermitian metric and the
    sphere-bundle quadrature weights."""
    va, vb = _values(a), _values(b)
    prod = np.sum(va * np.conj(vb), axis=-1)
    w = a.grid.node_weight[:, :, None]
    return complex(np.sum(prod * w))


def lift_from_base(f, grid: SphereBundleGrid, rank: Optional[int] = None
                   ) -> SectionField:
    """Constant-in-theta section from a base field x -> C^d."""
    if callable(f):
        masked = f(grid.points[grid.mask])
        d = rank or np.asarray(masked).shape[-1]
        vals = np.zeros((grid.nx, grid.ny, d), dtype=complex)
        vals[grid.mask] = masked
    else:
        vals = np.asarray(f, dtype=complex)
    out = np.repeat(vals[:, :, None, :], grid.n_theta, axis=2)
    return SectionField(values=out, grid=grid)


def _geodesic_coefficient_op(values: np.ndarray, grid: SphereBundleGrid,
                             conn: Optional[ConnectionField],
                             perp: bool) -> np.ndarray:
    """Shared core of X (perp=False) and the horizontal derivative
    (perp=True): replace the direction u by u^perp everywhere."""
    cth = grid.cth[None, None, :, None]
    sth = grid.sth[None, None, :, None]
    if perp:
        c1, c2 = -sth, cth
    else:
        c1, c2 = cth, sth
    d1 = grid.dx(values, 0)
    d2 = grid.dx(values, 1)
    gp1 = grid.grad_phi[:, :, None, None, 0]
    gp2 = grid.grad_phi[:, :, None, None, 1]
    # dPhi . u^perp for X, -(dPhi . u) for h-grad: both are dPhi . (dir)^perp
    theta_coeff = -gp1 * c2 + gp2 * c1
    out = c1 * d1 + c2 * d2 + theta_coeff * grid.dtheta_spectral(values)
    if conn is not None:
        gam = grid.symbols(conn)
        g1 = np.einsum("abkl,abtl->abtk", gam[:, :, 0], values)
        g2 = np.einsum("abkl,abtl->abtk", gam[:, :, 1], values)
        out = out + c1 * g1 + c2 * g2
    return grid.e_mphi[:, :, None, None] * out


def apply_X(u, conn: Optional[ConnectionField] = None):
    """Geodesic derivative with connection, on sections or normal sections.

    On normal-bundle coefficients the formula is unchanged because the
    rotated direction is parallel along geodesics on a surface.
    """
    grid = u.grid
    vals = _geodesic_coefficient_op(_values(u), grid, conn, perp=False)
    if isinstance(u, SectionField):
        return SectionField(values=vals, grid=grid)
    return NSectionField(coeffs=vals, grid=grid)


def vertical_derivative(u: SectionField) -> NSectionField:
    return NSectionField(coeffs=u.grid.dtheta_spectral(u.values), grid=u.grid)


def vertical_divergence(w: NSectionField) -> SectionField:
    return SectionField(values=w.grid.dtheta_spectral(w.coeffs), grid=w.grid)


def horizontal_derivative(u: SectionField,
                          conn: Optional[ConnectionField] = None
                          ) -> NSectionField:
    return NSectionField(
        coeffs=_geodesic_coefficient_op(u.values, u.grid, conn, perp=True),
        grid=u.grid)


def horizontal_divergence(w: NSectionField,
                          conn: Optional[ConnectionField] = None
                          ) -> SectionField:
    """Discrete adjoint of the horizontal derivative (up to sign), built
    from the same stencils so that the adjoint identity is exact."""
    grid = w.grid
    vals = w.coeffs
    cth = grid.cth[None, None, :, None]
    sth = grid.sth[None, None, :, None]
    e_m = grid.e_mphi[:, :, None, None]
    w_weight = grid.sqrt_det_g[:, :, None, None]
    a1 = e_m * (-sth) * w_weight
    a2 = e_m * cth * w_weight
    gp1 = grid.grad_phi[:, :, None, None, 0]
    gp2 = grid.grad_phi[:, :, None, None, 1]
    b = -e_m * (gp1 * cth + gp2 * sth) * w_weight
    div = grid.dx(a1 * vals, 0) + grid.dx(a2 * vals, 1) \
        + grid.dtheta_spectral(b * vals)
    inv_w = np.where(grid.mask, 1.0 / np.maximum(grid.sqrt_det_g, 1e-300),
                     0.0)
    out = inv_w[:, :, None, None] * div
    if conn is not None:
        gam = grid.symbols(conn)
        g1 = np.einsum("abkl,abtl->abtk", gam[:, :, 0], vals)
        g2 = np.einsum("abkl,abtl->abtk", gam[:, :, 1], vals)
        out = out + e_m * (-sth * g1 + cth * g2)
    return SectionField(values=out, grid=grid)


def curvature_R(w: NSectionField) -> NSectionField:
    """Metric curvature operator: multiplication by the Gauss curvature."""
    return NSectionField(coeffs=w.grid.gauss[:, :, None, None] * w.coeffs,
                         grid=w.grid)


def curvature_F(u: SectionField, conn: ConnectionField) -> NSectionField:
    """Bundle curvature operator as a normal-bundle coefficient."""
    grid = u.grid
    f12 = grid.curvature(conn)
    scale = np.where(grid.mask, np.exp(-2.0 * grid.phi), 0.0)
    coeff = np.einsum("abkl,abtl->abtk", f12, u.values) \
        * scale[:, :, None, None]
    return NSectionField(coeffs=coeff, grid=grid)


def vertical_laplacian(u: SectionField) -> SectionField:
    return SectionField(values=u.grid.theta_laplacian(u.values), grid=u.grid)


def fourier_modes(u: SectionField, m_max: int) -> list[SectionField]:
    """Projections onto the vertical Laplacian eigenspaces m = 0 .. m_max."""
    return [SectionField(values=u.grid.mode_project(u.values, m),
                         grid=u.grid) for m in range(m_max + 1)]


def mode_energies(u: SectionField, m_max: int) -> np.ndarray:
    """Squared L^2 norms of the Fourier modes, from a single transform."""
    grid = u.grid
    if m_max >= grid.n_theta // 2:
        raise DomainError(
            f"mode {m_max} aliases on a {grid.n_theta}-point fiber grid")
    # Parseval on the fiber: sum_t |u_t|^2 = (1/n_theta) sum_k |spec_k|^2
    spec = np.fft.fft(u.values, axis=2)
    bin_energy = np.sum(np.abs(spec) ** 2, axis=-1)        # (nx, ny, k)
    w = grid.node_weight[:, :, None] / grid.n_theta
    per_bin = np.sum(bin_energy * w, axis=(0, 1))
    energies = np.empty(m_max + 1)
    energies[0] = per_bin[0]
    for m in range(1, m_max + 1):
        energies[m] = per_bin[m] + per_bin[-m]
    return energies


def degree(u: SectionField, tol: float = 1e-10) -> int:
    """Largest mode index carrying more than tol of the relative energy."""
    total = u.norm() ** 2
    if total == 0.0:
        return 0
    m_max = u.grid.n_theta // 2 - 1
    energies = mode_energies(u, m_max)
    idx = np.nonzero(energies / total > tol)[0]
    return int(idx[-1]) if idx.size else 0


def x_split(u: SectionField, m: int,
            conn: Optional[ConnectionField] = None):
    """Split X u of a mode-m section into its m-1 and m+1 parts.

    Returns (minus, plus, leak) with leak the relative energy of X u
    outside the two adjacent modes (a discretization indicator).
    """
    grid = u.grid
    total = u.norm() ** 2
    inside = SectionField(grid.mode_project(u.values, m), grid).norm() ** 2
    if total > 0 and (total - inside) / total > 1e-10:
        raise DomainError(f"input section is not concentrated in mode {m}")
    xu = apply_X(u, conn)
    minus_vals = grid.mode_project(xu.values, m - 1) if m >= 1 else \
        np.zeros_like(xu.values)
    plus_vals = grid.mode_project(xu.values, m + 1)
    e_total = SectionField(xu.values, grid).norm() ** 2
    e_kept = SectionField(minus_vals, grid).norm() ** 2 \
        + SectionField(plus_vals, grid).norm() ** 2
    leak = (e_total - e_kept) / e_total if e_total > 0 else 0.0
    return (SectionField(minus_vals, grid), SectionField(plus_vals, grid),
            float(max(leak, 0.0)))


@dataclass
class CommutatorReport:
    vertical: float      # [X, v-grad] + h-grad
    horizontal: float    # [X, h-grad] - R v-grad - F
    divergence: float    # (h-div v-grad - v-div h-grad) - n X
    vertical_div: float  # [X, v-div] + h-div

    def as_dict(self) -> dict:
        return {"vertical": self.vertical, "horizontal": self.horizontal,
                "divergence": self.divergence,
                "vertical_div": self.vertical_div}


def commutator_residuals(conn: Optional[ConnectionField],
                         u: SectionField,
                         w: NSectionField) -> CommutatorReport:
    """Relative L^2 residuals of the four structure identities on test
    sections (u for the first three, w for the last)."""
    xu = apply_X(u, conn)
    vgrad_u = vertical_derivative(u)
    hgrad_u = horizontal_derivative(u, conn)

    lhs1 = apply_X(vgrad_u, conn).coeffs - vertical_derivative(xu).coeffs
    res1 = lhs1 + hgrad_u.coeffs
    den1 = max(hgrad_u.norm(), 1e-300)
    r1 = NSectionField(res1, u.grid).norm() / den1

    lhs2 = apply_X(hgrad_u, conn).coeffs \
        - horizontal_derivative(xu, conn).coeffs
    rhs2 = curvature_R(vgrad_u).coeffs
    if conn is not None:
        rhs2 = rhs2 + curvature_F(u, conn).coeffs
    den2 = max(NSectionField(rhs2, u.grid).norm(),
               NSectionField(lhs2, u.grid).norm(), 1e-300)
    r2 = NSectionField(lhs2 - rhs2, u.grid).norm() / den2

    lhs3 = horizontal_divergence(vgrad_u, conn).values \
        - vertical_divergence(hgrad_u).values
    res3 = lhs3 - xu.values
    den3 = max(xu.norm(), 1e-300)
    r3 = SectionField(res3, u.grid).norm() / den3

    vdiv_w = vertical_divergence(w)
    lhs4 = apply_X(vdiv_w, conn).values \
        - vertical_divergence(apply_X(w, conn)).values
    hdiv_w = horizontal_divergence(w, conn)
    res4 = lhs4 + hdiv_w.values
    den4 = max(hdiv_w.norm(), 1e-300)
    r4 = SectionField(res4, u.grid).norm() / den4

    return CommutatorReport(vertical=float(r1), horizontal=float(r2),
                            divergence=float(r3), vertical_div=float(r4))


@dataclass
class PestovReport:
    lhs: float
    rhs: float
    relative_residual: float
    terms: dict

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs,
                "relative_residual": self.relative_residual,
                "terms": self.terms}


def pestov_residual(u: SectionField,
                    conn: Optional[ConnectionField] = None) -> PestovReport:
    """Both sides of the energy identity

        ||v-grad X u||^2 = ||X v-grad u||^2 - <R v-grad u, v-grad u>
                           - <F u, v-grad u> + n ||X u||^2

    under grid quadrature, with n = 1.  Exact in the continuum for
    compactly supported sections and unitary connections; the residual is
    pure discretization error.
    """
    if not u.compact_support:
        ring = u.grid.outer_ring_mask()
        if np.max(np.abs(u.values[ring])) > 0.0:
            raise DomainError("Pestov check needs compactly supported input")
    xu = apply_X(u, conn)
    vgrad_u = vertical_derivative(u)
    lhs = vertical_derivative(xu).norm() ** 2
    t_xv = apply_X(vgrad_u, conn).norm() ** 2
    t_r = inner(curvature_R(vgrad_u), vgrad_u).real
    t_f = inner(curvature_F(u, conn), vgrad_u).real if conn is not None \
        else 0.0
    t_x = xu.norm() ** 2
    rhs = t_xv - t_r - t_f + t_x
    scale = max(lhs, t_xv, abs(t_r), abs(t_f), t_x, 1e-300)
    return PestovReport(lhs=lhs, rhs=rhs,
                        relative_residual=abs(lhs - rhs) / scale,
                        terms={"x_vgrad": t_xv, "curv_metric": -t_r,
                               "curv_bundle": -t_f, "x_norm": t_x})


@dataclass
class CurvatureTermReport:
    holds: bool
    lhs: float
    rhs: float
    kappa: float
    d_m: float


def curvature_term_sign_check(u: SectionField, m: int,
                              model: AHModel) -> CurvatureTermReport:
    """Check -<R v-grad u, v-grad u> >= kappa * lambda_m * ||u||^2 for a
    mode-m section, reporting the contraction coefficient
    d_m = 1 + 1/((2m-1)(m+1)^2) for the record."""
    grid = u.grid
    kappa = -float(np.max(model.gauss_curvature(grid.points[grid.mask])))
    if kappa <= 0.0:
        raise DomainError("model must have a verified negative curvature bound")
    vg = vertical_derivative(u)
    lhs = -inner(curvature_R(vg), vg).real
    lam = m * m              # lambda_m = m (m + n - 1) with n = 1
    rhs = kappa * lam * u.norm() ** 2
    d_m = 1.0 + 1.0 / ((2 * m - 1) * (m + 1) ** 2) if m >= 1 else \
        float("nan")
    return CurvatureTermReport(holds=lhs >= rhs - 1e-12 * max(lhs, rhs, 1.0),
                               lhs=lhs, rhs=rhs, kappa=kappa, d_m=d_m)
