r"""Constraint equations and construction of constraint-satisfying data.

Three pieces:

* pointwise residuals of the vacuum constraint equations

      R_h + |k|_h^2 - (tr_h k)^2 = (1 - n) Lam,
      delta_h k + d tr_h k = 0,

  for lattice or torus-spectral initial-data fields (h, k), where h is
  carried in the ambient-signature (negative definite) convention or its
  Riemannian sign flip, recorded per data set;

* the conformal construction on a flat 3-torus: given a constant mean
  curvature parameter H and a traceless divergence-free seed Q, solve

      P(phi) = Lap phi + (1/8) R phi - (1/8)|Q|^2 phi^-7
               + (1/4)(3 H^2 + Lam) phi^5 = f + z,
      f = P(1; 0, 0),

  for phi = 1 + psi by the contraction  (psi, z) -> Linv (d - q(psi)),
  where z ranges over a finite-dimensional complement when the linearized
  operator L = Lap + (1/8) R + (5/4) Lam has kernel (on the flat torus this
  happens exactly at Lam = 0, with constant kernel), and data
  (h, k) = (phi^4 h0, phi^-2 Q + H h);

* the map taking geometric data (h, k) on a constant-t* slice into Cauchy
  data (g0, g1) for the hyperbolic gauge-fixed evolution, normalized so
  that the stationary family data map to (g_b restricted to the slice, 0).

The Hamiltonian residual uses the sign combination R + |k|^2 - (tr k)^2,
which is the one the family's induced slice data satisfy; see the test
suite for the verification at machine precision against exact members.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import metric_family as mf
from .errors import (
    DegenerateNormal,
    NoConvergence,
    NotLorentzian,
    NotSpacelike,
    SmallnessViolated,
)

__all__ = [
    "TorusGrid",
    "InitialDataSet",
    "LichnerowiczInput",
    "LichnerowiczResult",
    "CauchyData",
    "constraint_residual",
    "geometric_residuals",
    "tt_project",
    "random_tt_seed",
    "lichnerowicz_solve",
    "lichnerowicz_data",
    "cauchy_data_map",
    "induce_back",
    "check_slice_gauge",
    "BorderedSolver",
    "save_initial_data",
    "load_initial_data",
]


# ---------------------------------------------------------------------------
# flat 3-torus spectral grid
# ---------------------------------------------------------------------------

class TorusGrid:
    """Uniform periodic grid on [0, 2*pi)^3 with spectral derivatives."""

    def __init__(self, n):
        self.n = int(n)
        self.x = np.arange(self.n) * (2.0 * math.pi / self.n)
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)  # integer wavenumbers
        self.k = np.stack(np.meshgrid(k1, k1, k1, indexing="ij"))  # (3, n, n, n)
        self.k2 = np.sum(self.k**2, axis=0)

    @property
    def shape(self):
        return (self.n,) * 3

    def deriv(self, f, axis):
        """Spectral partial derivative along a coordinate axis."""
        fh = np.fft.fftn(f, axes=(0, 1, 2))
        return np.real(np.fft.ifftn(1j * self.k[axis][..., None][
            (...,) + (None,) * (f.ndim - 4)
        ] * fh if f.ndim > 3 else 1j * self.k[axis] * fh, axes=(0, 1, 2)))

    def laplacian(self, f):
        """Positive Laplacian (Lap = -sum d^2)."""
        fh = np.fft.fftn(f, axes=(0, 1, 2))
        mult = self.k2 if f.ndim == 3 else self.k2[..., None]
        return np.real(np.fft.ifftn(mult * fh, axes=(0, 1, 2)))

    def solve_helmholtz(self, f, c):
        """Solve (Lap + c) u = f for c > 0 (spectral diagonal)."""
        fh = np.fft.fftn(f)
        return np.real(np.fft.ifftn(fh / (self.k2 + c)))

    def solve_laplacian_meanfree(self, f):
        """Solve Lap u = f - mean(f) with mean(u) = 0."""
        fh = np.fft.fftn(f)
        fh[0, 0, 0] = 0.0
        k2 = self.k2.copy()
        k2[0, 0, 0] = 1.0
        return np.real(np.fft.ifftn(fh / k2))


def tt_project(S, grid):
    """Project a symmetric 2-tensor field to its transverse-traceless part.

    Removes the (flat) trace pointwise, then subtracts the conformal-Killing
    part L(w) with w solved spectrally so that the result is divergence
    free.  Idempotent up to roundoff.
    """
    S = np.asarray(S, dtype=float)
    tr = np.trace(S, axis1=-2, axis2=-1)
    S = S - tr[..., None, None] * np.eye(3) / 3.0
    Sh = np.fft.fftn(S, axes=(0, 1, 2))
    k = grid.k
    k2 = grid.k2
    d = 1j * np.einsum("a...,...ab->...b", k, Sh)  # divergence, Fourier side
    kk = np.einsum("a...,b...->...ab", k, k)
    k2s = k2.copy()
    k2s[0, 0, 0] = 1.0
    Ainv = (np.eye(3) - kk / (4.0 * k2s[..., None, None])) / k2s[..., None, None]
    w = -np.einsum("...ab,...b->...a", Ainv, d)
    w[0, 0, 0, :] = 0.0
    # conformal Killing operator of w, Fourier side
    Lw = (
        1j * np.einsum("a...,...b->...ab", k, w)
        + 1j * np.einsum("b...,...a->...ab", k, w)
        - (2.0 / 3.0) * np.eye(3) * (1j * np.einsum("a...,...a->...", k, w))[..., None, None]
    )
    out = S - np.real(np.fft.ifftn(Lw, axes=(0, 1, 2)))
    return out


def random_tt_seed(grid, seed, amplitude=1.0, max_mode=2):
    """Smooth random transverse-traceless tensor field, reproducible by seed."""
    rng = np.random.default_rng(seed)
    x, y, z = np.meshgrid(grid.x, grid.x, grid.x, indexing="ij")
    S = np.zeros(grid.shape + (3, 3))
    for _ in range(4):
        kvec = rng.integers(-max_mode, max_mode + 1, size=3)
        amp = rng.normal(size=(3, 3))
        amp = 0.5 * (amp + amp.T)
        phase = rng.uniform(0, 2 * math.pi)
        wave = np.cos(kvec[0] * x + kvec[1] * y + kvec[2] * z + phase)
        S += wave[..., None, None] * amp
    S *= amplitude / max(np.max(np.abs(S)), 1e-300)
    return tt_project(S, grid)


# ---------------------------------------------------------------------------
# initial-data containers and residuals
# ---------------------------------------------------------------------------

@dataclass
class InitialDataSet:
    """Initial-data fields on one of the supported background manifolds.

    ``manifold`` is ``"torus"`` (spectral derivatives; ``grid`` set) or
    ``"slice"`` (lattice derivatives; ``axes``/``pad`` set).  ``convention``
    records the sign of the stored h: ``"negative"`` means the stored array
    is the ambient-signature induced metric (negative definite),
    ``"positive"`` means the stored array is its sign flip.
    """

    manifold: str
    h: np.ndarray
    k: np.ndarray
    convention: str = "negative"
    grid: TorusGrid = None
    axes: tuple = None
    pad: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_slice(cls, sd):
        return cls(
            manifold="slice",
            h=sd.h,
            k=sd.k,
            convention=sd.convention,
            axes=sd.axes,
            pad=sd.pad,
        )

    def core(self, field_arr):
        if self.manifold != "slice" or self.pad == 0:
            return field_arr
        sl = (slice(self.pad, -self.pad),) * 3
        return field_arr[sl]


def geometric_residuals(h, k, deriv, lam, n=3, convention="negative"):
    """Pointwise constraint residuals for given metric/extrinsic fields.

    ``deriv(F, axis)`` must return the partial derivative of a lattice field
    along the given spatial axis.  Returns (hamiltonian, momentum) fields;
    the momentum residual is a covector field.
    """
    hinv = np.linalg.inv(h)
    shape = h.shape[:-2]
    dh = np.zeros(shape + (3, 3, 3))
    for a in range(3):
        dh[..., a, :, :] = deriv(h, a)
    gam_l = 0.5 * (
        np.einsum("...ijk->...kij", dh) + np.einsum("...jik->...kij", dh) - dh
    )
    gam = np.einsum("...kl,...lij->...kij", hinv, gam_l)
    dgam = np.zeros(shape + (3, 3, 3, 3))
    for a in range(3):
        dgam[..., a, :, :, :] = deriv(gam, a)
    nd = len(shape)
    ric = (
        np.einsum("...kkij->...ij", dgam.transpose(*range(nd), nd + 1, nd, nd + 2, nd + 3))
        - np.einsum("...jkik->...ij", dgam.transpose(*range(nd), nd + 2, nd + 1, nd, nd + 3))
        + np.einsum("...kkl,...lij->...ij", gam, gam)
        - np.einsum("...kil,...lkj->...ij", gam, gam)
    )
    R = np.einsum("...ij,...ij->...", hinv, ric)
    if convention == "positive":
        R = -R
    trk = np.einsum("...ij,...ij->...", hinv, k)
    k2 = np.einsum("...ia,...jb,...ij,...ab->...", hinv, hinv, k, k)
    ham = R + k2 - trk**2 - (1 - n) * lam

    dk = np.zeros(shape + (3, 3, 3))
    for a in range(3):
        dk[..., a, :, :] = deriv(k, a)
    # k_{ij;l} = d_l k_ij - Gam^m_{li} k_mj - Gam^m_{lj} k_im
    cov_k = (
        np.einsum("...lij->...ijl", dk)
        - np.einsum("...mli,...mj->...ijl", gam, k)
        - np.einsum("...mlj,...im->...ijl", gam, k)
    )
    div_k = -np.einsum("...jl,...ijl->...i", hinv, cov_k)
    dtrk = np.stack([deriv(trk, a) for a in range(3)], axis=-1)
    mom = div_k + dtrk
    return ham, mom


def constraint_residual(data, lam, n=3):
    """Constraint residual fields of an InitialDataSet.

    Returns (hamiltonian, momentum); for slice data the fields are reported
    on the padded lattice (use ``data.core`` to trim to centered-stencil
    quality).
    """
    if data.manifold == "torus":
        deriv = lambda F, a: data.grid.deriv(F, a)
    elif data.manifold == "slice":
        deriv = lambda F, a: mf.grid_deriv(F, a, data.axes[a][1] - data.axes[a][0])
    else:
        raise ValueError("unknown manifold %r" % (data.manifold,))
    return geometric_residuals(
        data.h, data.k, deriv, lam, n=n, convention=data.convention
    )


# ---------------------------------------------------------------------------
# conformal construction on the torus
# ---------------------------------------------------------------------------

@dataclass
class LichnerowiczInput:
    """Mean-curvature parameter, TT seed, and cosmological constant."""

    H: float
    Qtilde: np.ndarray
    lam: float

    def check_tt(self, grid, tol_tr=1e-10, tol_div=1e-8):
        tr = np.max(np.abs(np.trace(self.Qtilde, axis1=-2, axis2=-1)))
        div = np.max(np.abs(np.stack([
            sum(grid.deriv(self.Qtilde[..., i, j], j) for j in range(3))
            for i in range(3)
        ])))
        if tr > tol_tr or div > tol_div:
            raise SmallnessViolated(
                "seed not traceless/divergence-free: tr %.2e div %.2e" % (tr, div)
            )


@dataclass
class LichnerowiczResult:
    phi: np.ndarray
    z: float
    iterations: int
    residual: float
    psi_sup: float
    meta: dict = field(default_factory=dict)


DEFAULT_SMALLNESS = 0.05


def _lichnerowicz_P(grid, phi, absQ2, H, lam):
    # flat torus: scalar curvature of the seed metric vanishes
    return (
        grid.laplacian(phi)
        - 0.125 * absQ2 * phi**-7
        + 0.25 * (3.0 * H**2 + lam) * phi**5
    )


def lichnerowicz_solve(inp, grid, tol=1e-12, max_iter=60, newton=False,
                       smallness=DEFAULT_SMALLNESS):
    """Solve the conformal-factor equation P(1 + psi) = f + z on the torus.

    ``f = P(1; 0, 0) = Lam / 4`` is the seed value and z ranges over the
    finite-dimensional complement of the linearization's range: zero when
    Lam > 0 (the linearization Lap + (5/4) Lam is invertible), a constant
    when Lam = 0 (constant kernel).

    Returns a LichnerowiczResult; the reported residual is
    ``sup |P(1 + psi) - f - z|``.

    Raises
    ------
    SmallnessViolated
        If |H| + sup|Q| exceeds the configured smallness gate.
    NoConvergence
        If the contraction has not met ``tol`` after ``max_iter`` steps.
    """
    H, lam = float(inp.H), float(inp.lam)
    Q = np.asarray(inp.Qtilde, dtype=float)
    size = abs(H) + float(np.max(np.abs(Q))) if Q.size else abs(H)
    if size > smallness:
        raise SmallnessViolated(
            "|H| + sup|Q| = %.3g exceeds the smallness gate %.3g"
            % (size, smallness)
        )
    absQ2 = np.einsum("...ij,...ij->...", Q, Q)
    f0 = 0.25 * lam
    c_lin = 1.25 * lam
    kernel = lam == 0.0

    def solve_lin(rhs):
        # (psi, z) with L psi - z = rhs; z in the complement (constants)
        if not kernel:
            return grid.solve_helmholtz(rhs, c_lin), 0.0
        z = -float(np.mean(rhs))
        return grid.solve_laplacian_meanfree(rhs + z), z

    psi = np.zeros(grid.shape)
    z = 0.0
    res = float(np.max(np.abs(_lichnerowicz_P(grid, 1.0 + psi, absQ2, H, lam) - f0 - z)))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NoConvergence("no convergence after %d iterations (res %.3g)"
                                % (it, res))
        P = _lichnerowicz_P(grid, 1.0 + psi, absQ2, H, lam)
        if newton:
            # one frozen-coefficient Newton step, preconditioned by the
            # constant-coefficient inverse
            jac_pot = (0.875 * absQ2 * (1.0 + psi) ** -8
                       + 1.25 * (3.0 * H**2 + lam) * (1.0 + psi) ** 4)
            resid = P - f0 - z
            dpsi = np.zeros_like(psi)
            for _ in range(8):
                r_in = resid - (grid.laplacian(dpsi) + jac_pot * dpsi)
                corr, _ = solve_lin(r_in)
                dpsi = dpsi + corr
            psi = psi - dpsi
            if kernel:
                z = z + float(np.mean(P - f0 - z))
                psi = psi - np.mean(psi)
        else:
            rhs = grid.laplacian(psi) + c_lin * psi - (P - f0)
            psi, z = solve_lin(rhs)
        it += 1
        res = float(np.max(np.abs(
            _lichnerowicz_P(grid, 1.0 + psi, absQ2, H, lam) - f0 - z)))
    return LichnerowiczResult(
        phi=1.0 + psi,
        z=z,
        iterations=it,
        residual=res,
        psi_sup=float(np.max(np.abs(psi))),
        meta={"f0": f0, "lam": lam, "kernel_dim": 1 if kernel else 0,
              "newton": bool(newton)},
    )


def lichnerowicz_data(result, inp, grid):
    """Assemble (h, k) = (phi^4 h0, phi^-2 Q + H h) from a converged solve.

    Stored in the ambient-signature (negative definite) convention.
    """
    phi = result.phi
    h = -(phi**4)[..., None, None] * np.eye(3)
    k = (phi**-2)[..., None, None] * inp.Qtilde + inp.H * h
    return InitialDataSet(manifold="torus", h=h, k=k, convention="negative",
                          grid=grid, meta={"H": inp.H, "lam": inp.lam})


# ---------------------------------------------------------------------------
# generic bordered solver (kernel/complement machinery)
# ---------------------------------------------------------------------------

class BorderedSolver:
    """Solve L psi - z = rhs with z in a finite-dimensional complement.

    ``L``: dense square matrix; ``kernel``: columns spanning ker(L) (assumed
    = ker(L^T) for self-adjoint L); ``complement``: columns z_j spanning the
    modification space.  The bordered system enforces psi orthogonal to the
    kernel.  This is the algebraic mechanism used by the conformal solver in
    the degenerate case; exposed for generic use and testing.
    """

    def __init__(self, L, kernel, complement):
        L = np.asarray(L, dtype=float)
        V = np.asarray(kernel, dtype=float)
        Z = np.asarray(complement, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if Z.ndim == 1:
            Z = Z[:, None]
        n, m = L.shape[0], V.shape[1]
        if Z.shape[1] != m:
            raise ValueError("complement dimension must match kernel dimension")
        gram = V.T @ Z
        if abs(np.linalg.det(gram)) < 1e-12 * np.linalg.norm(V) * np.linalg.norm(Z):
            raise ValueError("complement is degenerate against the kernel")
        self.n, self.m = n, m
        self.V, self.Z = V, Z
        big = np.zeros((n + m, n + m))
        big[:n, :n] = L
        big[:n, n:] = -Z
        big[n:, :n] = V.T
        self.big = big

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        full = np.concatenate([rhs, np.zeros(self.m)])
        sol = np.linalg.solve(self.big, full)
        return sol[: self.n], sol[self.n:]


# ---------------------------------------------------------------------------
# gauged Cauchy data on a constant-t* slice
# ---------------------------------------------------------------------------

@dataclass
class CauchyData:
    """First-order jet (g0, g1) of a spacetime metric along the slice."""

    chart: str
    axes: tuple
    pad: int
    g0: np.ndarray  # (..., 4, 4)
    g1: np.ndarray  # (..., 4, 4)
    meta: dict = field(default_factory=dict)

    def core(self, field_arr):
        if self.pad == 0:
            return field_arr
        sl = (slice(self.pad, -self.pad),) * 3
        return field_arr[sl]


def _upsilon_lattice(g_lat, gam_bg, axes):
    """Gauge one-form of a stationary lattice metric against a background.

    Both metrics are stationary on the slice; the background enters through
    its Christoffel lattice ``gam_bg``.
    """
    gam = mf.slice_christoffel(g_lat, axes)
    gi = np.linalg.inv(g_lat)
    return np.einsum("...mk,...nl,...knl->...m", g_lat, gi, gam - gam_bg)


def cauchy_data_map(b, h, k, axes, pad=0, chart=mf.CHART_STAR,
                    eps_fraction=mf.DEFAULT_EPS_FRACTION, t_star=0.0):
    """Build gauge-compatible Cauchy data (g0, g1) from slice data (h, k).

    ``h`` must be the negative definite induced metric and ``k`` the second
    fundamental form fields on the lattice spanned by ``axes`` (already
    padded with ``pad`` ghost layers, as produced by ``induced_data``).  The
    construction fixes the lapse/shift block of g0 to the stationary family
    member's values, determines the mixed and normal components of g1 from
    the gauge condition relative to the family member, and the tangential
    components from the prescribed second fundamental form.  Family data
    (h_b, k_b) map to (g_b on the slice, 0).

    Returns
    -------
    CauchyData

    Raises
    ------
    NotLorentzian
        If the assembled g0 fails the signature check at a node.
    DegenerateNormal
        If N t* <= 0 at a node.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.max(np.linalg.eigvalsh(h)) >= 0.0:
        raise NotSpacelike("input slice metric must be negative definite")
    g_b = mf.metric_lattice(b, chart, axes, t_star, eps_fraction)
    b0 = mf.BlackHoleParams(b.lam, b.mass)
    g_bg = g_b if b.a == 0.0 else mf.metric_lattice(b0, chart, axes, t_star, eps_fraction)
    gam_bg = mf.slice_christoffel(g_bg, axes)

    g0 = g_b.copy()
    g0[..., 1:, 1:] = h
    sig = np.sort(np.linalg.eigvalsh(g0), axis=-1)
    if not (np.all(sig[..., :3] < 0.0) and np.all(sig[..., 3] > 0.0)):
        raise NotLorentzian("assembled g0 is not of Lorentzian signature")
    gi0 = np.linalg.inv(g0)
    if np.min(gi0[..., 0, 0]) <= 0.0:
        raise DegenerateNormal("dt* not timelike for assembled g0")
    N = gi0[..., :, 0] / np.sqrt(gi0[..., 0, 0])[..., None]
    Nt = N[..., 0]
    if np.min(Nt) <= 0.0:
        raise DegenerateNormal("normal has N t* <= 0 at a node")

    # gauge condition: (G g1)(grad t*, .) = Ups(g_b) - Ups(g0)
    ups_b = _upsilon_lattice(g_b, gam_bg, axes)
    ups_0 = _upsilon_lattice(g0, gam_bg, axes)
    E = (ups_b - ups_0) / np.sqrt(gi0[..., 0, 0])[..., None]  # w(N, .) = E
    # tangential block from the second fundamental form
    gam0 = mf.slice_christoffel(g0, axes)
    N_d = np.einsum("...mn,...n->...m", g0, N)
    k0 = np.einsum("...m,...mij->...ij", N_d, gam0)[..., 1:, 1:]
    g1_sp = -2.0 * (k - k0) / Nt[..., None, None]

    # frame {N, E_i} with E_i an orthonormalization of the spatial basis
    M = -h
    L = np.linalg.cholesky(M)
    B = np.linalg.inv(np.swapaxes(L, -1, -2))  # E_i = B[j, i] d_j
    g1_NX = E[..., 1:]                          # g1(N, d_i)
    g1_NE = np.einsum("...ji,...j->...i", B, g1_NX)
    g1_EE = np.einsum("...ji,...lk,...jl->...ik", B, B, g1_sp)
    v0 = np.einsum("...m,...m->...", E, N)      # (G g1)(N, N)
    g1_NN = 2.0 * v0 - np.einsum("...ii->...", g1_EE)

    # reconstruct coordinate components from the frame values
    F = np.zeros(h.shape[:-2] + (4, 4))
    F[..., :, 0] = N
    F[..., 1:, 1:] = B
    theta = np.linalg.inv(F)                     # coframe rows
    G1f = np.zeros_like(F)
    G1f[..., 0, 0] = g1_NN
    G1f[..., 0, 1:] = g1_NE
    G1f[..., 1:, 0] = g1_NE
    G1f[..., 1:, 1:] = g1_EE
    g1 = np.einsum("...am,...ab,...bn->...mn", theta, G1f, theta)
    return CauchyData(chart=chart, axes=axes, pad=pad, g0=g0, g1=g1,
                      meta={"b": b, "t_star": t_star})


def induce_back(cd):
    """Induced (h, k) of the first-order metric jet g0 + t* g1 at t* = 0."""
    g0, g1, axes = cd.g0, cd.g1, cd.axes
    shape = g0.shape[:-2]
    dg = np.zeros(shape + (4, 4, 4))
    dg[..., 0, :, :] = g1
    for a in range(3):
        dg[..., a + 1, :, :] = mf.grid_deriv(g0, a, axes[a][1] - axes[a][0])
    gam = mf.lattice_christoffel(g0, dg)
    gi0 = np.linalg.inv(g0)
    N = gi0[..., :, 0] / np.sqrt(gi0[..., 0, 0])[..., None]
    N_d = np.einsum("...mn,...n->...m", g0, N)
    k = np.einsum("...m,...mij->...ij", N_d, gam)[..., 1:, 1:]
    return g0[..., 1:, 1:], k


def check_slice_gauge(cd, b, eps_fraction=mf.DEFAULT_EPS_FRACTION):
    """Residual of the gauge condition at the slice for produced Cauchy data.

    Evaluates Ups(g0 + t* g1) - Ups(g_b) at t* = 0, which the construction
    drives to zero; returns the sup over core nodes.
    """
    g0, g1, axes = cd.g0, cd.g1, cd.axes
    t_star = cd.meta.get("t_star", 0.0)
    g_b = mf.metric_lattice(b, cd.chart, axes, t_star, eps_fraction)
    b0 = mf.BlackHoleParams(b.lam, b.mass)
    g_bg = g_b if b.a == 0.0 else mf.metric_lattice(b0, cd.chart, axes, t_star,
                                                    eps_fraction)
    gam_bg = mf.slice_christoffel(g_bg, axes)
    shape = g0.shape[:-2]
    dg = np.zeros(shape + (4, 4, 4))
    dg[..., 0, :, :] = g1
    for a in range(3):
        dg[..., a + 1, :, :] = mf.grid_deriv(g0, a, axes[a][1] - axes[a][0])
    gam = mf.lattice_christoffel(g0, dg)
    gi0 = np.linalg.inv(g0)
    ups = np.einsum("...mk,...nl,...knl->...m", g0, gi0, gam - gam_bg)
    ups_b = _upsilon_lattice(g_b, gam_bg, axes)
    return float(np.max(np.abs(cd.core(ups - ups_b))))


# ---------------------------------------------------------------------------
# serialization: JSON header + raw little-endian float64 blobs
# ---------------------------------------------------------------------------

MAGIC = "kds-spectra/1"


def save_initial_data(path, data, lam=None):
    """Write an InitialDataSet as a JSON header line plus raw arrays."""
    header = {
        "schema": MAGIC,
        "kind": "initial-data",
        "manifold": data.manifold,
        "convention": data.convention,
        "h_shape": list(data.h.shape),
        "k_shape": list(data.k.shape),
    }
    if lam is not None:
        header["lambda"] = lam
    if data.manifold == "torus":
        header["grid_n"] = data.grid.n
    else:
        header["axes"] = [list(map(float, ax)) for ax in data.axes]
        header["pad"] = data.pad
    blob_h = np.ascontiguousarray(data.h, dtype="<f8").tobytes()
    blob_k = np.ascontiguousarray(data.k, dtype="<f8").tobytes()
    header["h_bytes"] = len(blob_h)
    header["k_bytes"] = len(blob_k)
    with open(path, "wb") as f:
        f.write((json.dumps(header, sort_keys=True) + "\n").encode())
        f.write(blob_h)
        f.write(blob_k)


def load_initial_data(path):
    """Read an InitialDataSet written by ``save_initial_data``.

    Returns (data, header).
    """
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode())
        if header.get("schema") != MAGIC:
            raise ValueError("not a %s file" % MAGIC)
        h = np.frombuffer(f.read(header["h_bytes"]), dtype="<f8").reshape(
            header["h_shape"]
        )
        k = np.frombuffer(f.read(header["k_bytes"]), dtype="<f8").reshape(
            header["k_shape"]
        )
    if header["manifold"] == "torus":
        data = InitialDataSet(
            manifold="torus", h=h.copy(), k=k.copy(),
            convention=header["convention"], grid=TorusGrid(header["grid_n"]),
        )
    else:
        data = InitialDataSet(
            manifold="slice", h=h.copy(), k=k.copy(),
            convention=header["convention"],
            axes=tuple(np.asarray(ax) for ax in header["axes"]),
            pad=header.get("pad", 0),
        )
    return data, header
