r"""Rotating black holes with positive cosmological constant.

This module evaluates the stationary metric family

    mu(r)      = 1 - 2 M / r - (Lam/3) r^2                    (non-rotating)
    mu~(r)     = (r^2 + a^2)(1 - (Lam/3) r^2) - 2 M r         (rotating)

in four charts:

``boyer-lindquist``
    static/Boyer-Lindquist coordinates (t, r, theta, phi), valid strictly
    between the two horizons;
``star``
    horizon-crossing coordinates (t*, r, phi*, theta) obtained from
    t* = t - F(r), phi* = phi - Phi(r), valid across both horizons up to a
    configurable margin;
``nu-form``
    the non-rotating horizon-crossing form
    g = mu dt*^2 - 2 nu dt* dr - c^2 dr^2 - r^2 gS,  nu^2 + c^2 mu = 1,
    in coordinates (t*, r, theta, phi);
``cartesian``
    (t*, x, y, z) with the spatial spherical chart replaced by smooth
    vector fields, regular at the coordinate poles.

Horizon radii are the two largest roots of mu~, with surface gravities
kappa_pm = |mu~'(r_pm)| / (2 (1+lam_rot)(r_pm^2+a^2)) and the saddle-rate
coefficients beta_pm_0 = |mu~'(r_pm)| / rho^2, beta_pm = 1/kappa_pm.

Finite-difference curvature utilities (Christoffel symbols, Ricci tensor,
the gauge one-form of a metric relative to a background, induced data on a
t* = const slice) operate on arbitrary metric samplers and use 4th-order
centered stencils with one Richardson halving for error control.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChartDomain,
    DegenerateHorizons,
    InvalidParams,
    NotSpacelike,
    PoleSingular,
    StepTooLarge,
)

CHART_BL = "boyer-lindquist"
CHART_STAR = "star"
CHART_NU = "nu-form"
CHART_CARTESIAN = "cartesian"

CHART_COORDS = {
    CHART_BL: ("t", "r", "theta", "phi"),
    CHART_STAR: ("t_star", "r", "phi_star", "theta"),
    CHART_NU: ("t_star", "r", "theta", "phi"),
    CHART_CARTESIAN: ("t_star", "x", "y", "z"),
}

POLE_TOL = 1e-6
DEFAULT_EPS_FRACTION = 0.05

__all__ = [
    "BlackHoleParams",
    "HorizonData",
    "MetricAtPoint",
    "SliceData",
    "find_horizons",
    "eval_metric",
    "metric_sampler",
    "christoffel_fd",
    "ricci_fd",
    "upsilon_eval",
    "induced_data",
    "mu",
    "mu_prime",
    "mu_tilde",
    "mu_tilde_prime",
    "nu_profile",
    "c_star",
    "r_crit",
    "smoothstep7",
    "interp_window",
    "chart_scales",
    "grid_deriv",
    "metric_lattice",
    "lattice_christoffel",
    "slice_christoffel",
    "CHART_BL",
    "CHART_STAR",
    "CHART_NU",
    "CHART_CARTESIAN",
    "CHART_COORDS",
]


@dataclass(frozen=True)
class BlackHoleParams:
    """Cosmological constant, mass and angular-momentum vector.

    Parameters
    ----------
    lam : float
        Cosmological constant, > 0 (geometric units).
    mass : float
        Black-hole mass, > 0.
    angmom : tuple of 3 floats
        Angular-momentum vector; its norm is the spin parameter ``a``.
    """

    lam: float
    mass: float
    angmom: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "angmom", tuple(float(c) for c in self.angmom))

    @property
    def a(self):
        return math.sqrt(sum(c * c for c in self.angmom))

    @property
    def lam_rot(self):
        """Rotational parameter lam_rot = Lam a^2 / 3."""
        return self.lam * self.a**2 / 3.0

    def validate(self):
        if not (self.lam > 0.0):
            raise InvalidParams("cosmological constant must be positive")
        if not (self.mass > 0.0):
            raise InvalidParams("mass must be positive")
        if self.a == 0.0 and not (0.0 < 9.0 * self.lam * self.mass**2 < 1.0):
            raise InvalidParams(
                "need 9 * Lam * M^2 in (0, 1); got %.6g"
                % (9.0 * self.lam * self.mass**2)
            )


@dataclass(frozen=True)
class HorizonData:
    """Horizon radii and derived scalar quantities of one family member."""

    r_minus: float
    r_plus: float
    kappa_minus: float
    kappa_plus: float
    beta_minus: float
    beta_plus: float
    beta_minus_0: np.ndarray  # |mu~'(r_-)| / rho^2 at theta_samples
    beta_plus_0: np.ndarray
    theta_samples: np.ndarray
    r_crit: float
    c_star: float

    def as_dict(self):
        d = {
            "rMinus": self.r_minus,
            "rPlus": self.r_plus,
            "kappaMinus": self.kappa_minus,
            "kappaPlus": self.kappa_plus,
            "betaMinus": self.beta_minus,
            "betaPlus": self.beta_plus,
            "betaMinus0": list(self.beta_minus_0),
            "betaPlus0": list(self.beta_plus_0),
            "thetaSamples": list(self.theta_samples),
            "rCrit": self.r_crit,
            "cStar": self.c_star,
        }
        return d


@dataclass
class MetricAtPoint:
    """Covariant/contravariant 4-metric components at one point."""

    chart: str
    point: np.ndarray
    g_cov: np.ndarray
    g_con: np.ndarray
    meta: dict = field(default_factory=dict)

    def inverse_defect(self):
        return float(np.max(np.abs(self.g_cov @ self.g_con - np.eye(4))))


# ---------------------------------------------------------------------------
# scalar profiles
# ---------------------------------------------------------------------------

def mu(b, r):
    """Non-rotating lapse profile 1 - 2M/r - (Lam/3) r^2."""
    r = np.asarray(r, dtype=float)
    return 1.0 - 2.0 * b.mass / r - b.lam * r**2 / 3.0


def mu_prime(b, r):
    r = np.asarray(r, dtype=float)
    return 2.0 * b.mass / r**2 - 2.0 * b.lam * r / 3.0


def mu_tilde(b, r):
    """(r^2 + a^2)(1 - (Lam/3) r^2) - 2 M r; equals r^2 mu(r) at a = 0."""
    r = np.asarray(r, dtype=float)
    a2 = b.a**2
    return (r**2 + a2) * (1.0 - b.lam * r**2 / 3.0) - 2.0 * b.mass * r


def mu_tilde_prime(b, r):
    r = np.asarray(r, dtype=float)
    a2 = b.a**2
    return 2.0 * r * (1.0 - b.lam * r**2 / 3.0) - (r**2 + a2) * (
        2.0 * b.lam * r / 3.0
    ) - 2.0 * b.mass


def r_crit(b):
    """Critical radius of mu for the non-rotating member with the same mass."""
    return (3.0 * b.mass / b.lam) ** (1.0 / 3.0)


def c_star(b):
    """c_{t*} = mu(r_crit)^{-1/2} = (1 - (9 Lam M^2)^{1/3})^{-1/2}."""
    x = (9.0 * b.lam * b.mass**2) ** (1.0 / 3.0)
    if x >= 1.0:
        raise InvalidParams("9 Lam M^2 must be < 1")
    return (1.0 - x) ** -0.5


def nu_profile(b, r):
    """Off-diagonal profile nu(r) = -sign(r - r_crit) sqrt(1 - c*^2 mu).

    Positive inside the critical radius, negative outside, zero at r_crit.
    """
    c2 = c_star(b) ** 2
    r = np.asarray(r, dtype=float)
    arg = np.clip(1.0 - c2 * mu(b, r), 0.0, None)
    return -np.sign(r - r_crit(b)) * np.sqrt(arg)


def smoothstep7(x):
    """Degree-7 polynomial step: 0 for x<=0, 1 for x>=1, C^3-flat ends."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


# ---------------------------------------------------------------------------
# horizons
# ---------------------------------------------------------------------------

def _polished_real_roots(coeffs):
    """Companion-matrix roots of a real polynomial, one Newton step each."""
    roots = np.roots(coeffs)
    poly = np.poly1d(coeffs)
    dpoly = poly.deriv()
    out = []
    scale = max(abs(r) for r in roots) + 1.0
    for z in roots:
        if abs(z.imag) > 1e-7 * scale:
            continue
        x = z.real
        for _ in range(3):
            d = dpoly(x)
            if d == 0.0:
                break
            x -= poly(x) / d
        out.append(x)
    return sorted(out)


def find_horizons(b, theta_samples=None):
    """Locate the two largest roots of mu~ and derived scalars.

    Parameters
    ----------
    b : BlackHoleParams
    theta_samples : array_like, optional
        Polar angles at which the sphere-dependent rate beta_pm_0 is
        reported.  Defaults to nine samples on [0, pi].

    Returns
    -------
    HorizonData

    Raises
    ------
    InvalidParams
        If the parameters fail the admissibility conditions.
    DegenerateHorizons
        If the two largest roots are complex, coalesce, or are not simple.
    """
    b.validate()
    if theta_samples is None:
        theta_samples = np.linspace(0.0, math.pi, 9)
    theta_samples = np.asarray(theta_samples, dtype=float)

    a2 = b.a**2
    # mu~ = -(Lam/3) r^4 + (1 - Lam a^2/3) r^2 - 2 M r + a^2
    coeffs = [-b.lam / 3.0, 0.0, 1.0 - b.lam * a2 / 3.0, -2.0 * b.mass, a2]
    real_roots = [r for r in _polished_real_roots(coeffs) if r > 0.0]
    if len(real_roots) < 2:
        raise DegenerateHorizons(
            "fewer than two positive real horizon roots: %r" % (real_roots,)
        )
    r_minus, r_plus = real_roots[-2], real_roots[-1]
    scale = r_plus
    if r_plus - r_minus < 1e-10 * scale:
        raise DegenerateHorizons("horizon roots coalesce")
    dm = mu_tilde_prime(b, r_minus)
    dp = mu_tilde_prime(b, r_plus)
    if abs(dm) < 1e-8 * scale or abs(dp) < 1e-8 * scale:
        raise DegenerateHorizons("horizon root is not simple")

    one_lam = 1.0 + b.lam_rot
    kappa_minus = abs(dm) / (2.0 * one_lam * (r_minus**2 + a2))
    kappa_plus = abs(dp) / (2.0 * one_lam * (r_plus**2 + a2))
    rho2_m = r_minus**2 + a2 * np.cos(theta_samples) ** 2
    rho2_p = r_plus**2 + a2 * np.cos(theta_samples) ** 2
    return HorizonData(
        r_minus=float(r_minus),
        r_plus=float(r_plus),
        kappa_minus=float(kappa_minus),
        kappa_plus=float(kappa_plus),
        beta_minus=float(1.0 / kappa_minus),
        beta_plus=float(1.0 / kappa_plus),
        beta_minus_0=np.abs(dm) / rho2_m,
        beta_plus_0=np.abs(dp) / rho2_p,
        theta_samples=theta_samples,
        r_crit=float(r_crit(b)),
        c_star=float(c_star(b)),
    )


# ---------------------------------------------------------------------------
# horizon-crossing coordinate ingredients
# ---------------------------------------------------------------------------

def _c_minus0(b, r):
    """Non-rotating inward coefficient, smooth up to the outer horizon excluded."""
    return -c_star(b) ** 2 / (1.0 + nu_profile(b, r))


def _c_plus0(b, r):
    """Non-rotating outward coefficient, smooth away from the inner horizon."""
    return -c_star(b) ** 2 / (1.0 - nu_profile(b, r))


def interp_window(b, hz, eps_fraction=DEFAULT_EPS_FRACTION):
    """Radial window data for matching the two horizon-crossing branches.

    Returns a dict with the matching interval [r1, r2] (where both branch
    definitions of F', Phi' agree), the cutoff transition interval, and the
    shell margin eps_m = eps_fraction * (r_plus - r_minus).
    """
    eps_m = eps_fraction * (hz.r_plus - hz.r_minus)
    rc = hz.r_crit
    half = 0.1 * (hz.r_plus - hz.r_minus)
    r1 = max(hz.r_minus + 2.0 * eps_m, rc - half)
    r2 = min(hz.r_plus - 2.0 * eps_m, rc + half)
    chi_end = hz.r_plus - eps_m
    return {
        "r1": r1,
        "r2": r2,
        "chi_one_upto": r2,
        "chi_zero_from": chi_end,
        "eps_m": eps_m,
        "smoothstep_degree": 7,
    }


def _chi(r, win):
    """Cutoff: 1 on (-inf, r2], 0 on [chi_zero_from, inf), degree-7 step."""
    return 1.0 - smoothstep7(
        (np.asarray(r, dtype=float) - win["chi_one_upto"])
        / (win["chi_zero_from"] - win["chi_one_upto"])
    )


def _c_branch(b, hz, win, r, sign):
    """Branch coefficients (c, ctilde/a) for the horizon-crossing chart.

    sign = -1 selects the inner-horizon branch (valid r < r2), sign = +1 the
    outer-horizon branch (valid r > r1).  Scalar r only.
    """
    one_lam = 1.0 + b.lam_rot
    a2 = b.a**2
    r = float(r)
    if sign < 0:
        return float(_c_minus0(b, r)), 0.0
    chi = float(_chi(r, win))
    if chi == 0.0:
        # beyond the cutoff the matching term (singular at r_plus) is absent
        return float(_c_plus0(b, r)), 0.0
    mt = float(mu_tilde(b, r))
    matched = -(2.0 * one_lam * (r * r + a2) / mt + float(_c_minus0(b, r)))
    c_out = matched * chi + float(_c_plus0(b, r)) * (1.0 - chi)
    ctilde_over_a = -2.0 * one_lam / mt * chi
    return c_out, ctilde_over_a


def _branch_sign(hz, r):
    return -1 if r <= hz.r_crit else 1


# ---------------------------------------------------------------------------
# chart evaluators
# ---------------------------------------------------------------------------

def _check_pole(theta):
    theta = np.asarray(theta)
    if np.min(np.minimum(np.abs(theta), np.abs(math.pi - theta))) < POLE_TOL:
        raise PoleSingular("theta within %.0e of a coordinate pole" % POLE_TOL)


def _c_branch_batch(b, hz, win, r, s):
    """Vectorized branch coefficients; ``s`` is the per-point branch sign."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s)
    c = np.empty_like(r)
    cta = np.zeros_like(r)
    minus = s < 0
    if np.any(minus):
        c[minus] = _c_minus0(b, r[minus])
    plus = ~minus
    if np.any(plus):
        rp = r[plus]
        chi = np.asarray(_chi(rp, win))
        cp = np.asarray(_c_plus0(b, rp)) * np.ones_like(rp)
        blend = chi > 0.0
        if np.any(blend):
            rb = rp[blend]
            mt = np.asarray(mu_tilde(b, rb))
            one_lam = 1.0 + b.lam_rot
            a2 = b.a**2
            matched = -(2.0 * one_lam * (rb**2 + a2) / mt + _c_minus0(b, rb))
            cp[blend] = matched * chi[blend] + cp[blend] * (1.0 - chi[blend])
            ct = np.zeros_like(rp)
            ct[blend] = -2.0 * one_lam / mt * chi[blend]
            cta[plus] = ct
        c[plus] = cp
    return c, cta


def _bl_metric(b, hz, point):
    t, r, theta, phi = point
    if not (hz.r_minus < r < hz.r_plus):
        raise ChartDomain(
            "boyer-lindquist chart requires r in (%.6g, %.6g)"
            % (hz.r_minus, hz.r_plus)
        )
    _check_pole(theta)
    a = b.a
    a2 = a * a
    one_lam = 1.0 + b.lam_rot
    st2 = math.sin(theta) ** 2
    rho2 = r * r + a2 * math.cos(theta) ** 2
    kap = 1.0 + b.lam_rot * math.cos(theta) ** 2
    mt = float(mu_tilde(b, r))
    den = one_lam**2 * rho2

    g = np.zeros((4, 4))
    g[0, 0] = (mt - kap * a2 * st2) / den
    g[0, 3] = g[3, 0] = (kap * a * (r * r + a2) - mt * a) * st2 / den
    g[3, 3] = (-kap * st2 * (r * r + a2) ** 2 + mt * a2 * st2 * st2) / den
    g[1, 1] = -rho2 / mt
    g[2, 2] = -rho2 / kap

    gi = np.zeros((4, 4))
    gi[0, 0] = one_lam**2 * ((r * r + a2) ** 2 / mt - a2 * st2 / kap) / rho2
    gi[0, 3] = gi[3, 0] = one_lam**2 * a * ((r * r + a2) / mt - 1.0 / kap) / rho2
    gi[3, 3] = one_lam**2 * (a2 / mt - 1.0 / (kap * st2)) / rho2
    gi[1, 1] = -mt / rho2
    gi[2, 2] = -kap / rho2
    return g, gi, {}


def _star_metric(b, hz, point, eps_fraction):
    t_s, r, phi_s, theta = point
    win = interp_window(b, hz, eps_fraction)
    lo = hz.r_minus - 3.0 * win["eps_m"]
    hi = hz.r_plus + 3.0 * win["eps_m"]
    if not (lo < r < hi):
        raise ChartDomain("star chart requires r in (%.6g, %.6g)" % (lo, hi))
    _check_pole(theta)
    s = _branch_sign(hz, r)
    c, cta = _c_branch(b, hz, win, r, s)
    c = float(c)
    cta = float(cta)
    a = b.a
    a2 = a * a
    one_lam = 1.0 + b.lam_rot
    st2 = math.sin(theta) ** 2
    rho2 = r * r + a2 * math.cos(theta) ** 2
    kap = 1.0 + b.lam_rot * math.cos(theta) ** 2
    mt = float(mu_tilde(b, r))
    ctilde = cta * a

    # covariant: from the Boyer-Lindquist form under dt = dt* + F' dr,
    # dphi = dphi* + Phi' dr; the 1/mu~ poles cancel exactly.
    e0 = np.array([1.0, 0.0, 0.0, 0.0])
    e1 = np.array([0.0, 1.0, 0.0, 0.0])
    e2 = np.array([0.0, 0.0, 1.0, 0.0])
    e3 = np.array([0.0, 0.0, 0.0, 1.0])
    A = a * (e0 + s * c * e1) - (r * r + a2) * (e2 + s * ctilde * e1)
    B = (e0 + s * c * e1) - a * st2 * (e2 + s * ctilde * e1)
    g = (
        -kap * st2 / (one_lam**2 * rho2) * np.outer(A, A)
        + mt / (one_lam**2 * rho2) * np.outer(B, B)
        + s / one_lam * (np.outer(B, e1) + np.outer(e1, B))
        - rho2 / kap * np.outer(e3, e3)
    )

    # contravariant: V = d_r - s c d_t* - s ctilde d_phi*
    V = e1 - s * c * e0 - s * ctilde * e2
    Z = a * st2 * e0 + e2
    gi = (
        -mt * np.outer(V, V)
        + s * a * one_lam * (np.outer(V, e2) + np.outer(e2, V))
        + s * one_lam * (r * r + a2) * (np.outer(V, e0) + np.outer(e0, V))
        - one_lam**2 / (kap * st2) * np.outer(Z, Z)
        - kap * np.outer(e3, e3)
    ) / rho2
    meta = {"branch": s, "c": c, "ctilde": ctilde}
    meta.update(win)
    return g, gi, meta


def _nu_metric(b, hz, point, eps_fraction):
    if b.a != 0.0:
        raise ChartDomain("nu-form chart is defined for a = 0 only")
    t_s, r, theta, phi = point
    eps_m = eps_fraction * (hz.r_plus - hz.r_minus)
    lo, hi = hz.r_minus - 3.0 * eps_m, hz.r_plus + 3.0 * eps_m
    if not (lo < r < hi):
        raise ChartDomain("nu-form chart requires r in (%.6g, %.6g)" % (lo, hi))
    _check_pole(theta)
    m = float(mu(b, r))
    nu = float(nu_profile(b, r))
    c2 = c_star(b) ** 2
    st2 = math.sin(theta) ** 2
    g = np.zeros((4, 4))
    g[0, 0] = m
    g[0, 1] = g[1, 0] = -nu
    g[1, 1] = -c2
    g[2, 2] = -r * r
    g[3, 3] = -r * r * st2
    gi = np.zeros((4, 4))
    gi[0, 0] = c2
    gi[0, 1] = gi[1, 0] = -nu
    gi[1, 1] = -m
    gi[2, 2] = -1.0 / r**2
    gi[3, 3] = -1.0 / (r**2 * st2)
    return g, gi, {"nu": nu, "c": math.sqrt(c2)}


def _cartesian_metric(b, hz, point, eps_fraction):
    t_s = point[0]
    p = np.asarray(point[1:], dtype=float)
    r = float(np.linalg.norm(p))
    win = interp_window(b, hz, eps_fraction)
    lo = hz.r_minus - 3.0 * win["eps_m"]
    hi = hz.r_plus + 3.0 * win["eps_m"]
    if not (lo < r < hi):
        raise ChartDomain("cartesian chart requires |p| in (%.6g, %.6g)" % (lo, hi))
    avec = np.asarray(b.angmom, dtype=float)
    a = b.a
    a2 = a * a
    one_lam = 1.0 + b.lam_rot
    phat = p / r
    a_cos = float(avec @ phat)              # a cos(theta)
    a2_sin2 = a2 - a_cos * a_cos            # a^2 sin^2(theta)
    rho2 = r * r + a_cos * a_cos
    kap = 1.0 + (b.lam / 3.0) * a_cos * a_cos
    mt = float(mu_tilde(b, r))

    s = _branch_sign(hz, r)
    c, cta = _c_branch(b, hz, win, r, s)
    c = float(c)
    cta = float(cta)

    U = np.zeros(4)
    U[0] = 1.0
    dr = np.zeros(4)
    dr[1:] = phat
    w_phi = np.zeros(4)
    w_phi[1:] = np.cross(avec, p)           # a d_phi*
    w_theta = np.zeros(4)
    w_theta[1:] = np.cross(p, np.cross(p, avec)) / r  # a sin(theta) d_theta
    V = dr - s * c * U - s * cta * w_phi

    def sym(x, y):
        return np.outer(x, y) + np.outer(y, x)

    # unit-sphere dual metric pushed to the radius-r sphere: r^2 (I - phat phat^T)
    G_sph = np.zeros((4, 4))
    G_sph[1:, 1:] = r * r * (np.eye(3) - np.outer(phat, phat))

    gi = (
        -mt * np.outer(V, V)
        + s * one_lam * sym(V, w_phi)
        + s * one_lam * (r * r + a2) * sym(V, U)
        - one_lam**2 / kap * (a2_sin2 * np.outer(U, U) + sym(U, w_phi))
        - one_lam**2 / kap * G_sph
        + (b.lam / 3.0) / kap * (2.0 + (b.lam / 3.0) * (a2 + a_cos * a_cos))
        * np.outer(w_theta, w_theta)
    ) / rho2
    g = np.linalg.inv(gi)
    meta = {"branch": s, "c": c, "ctilde_over_a": cta}
    meta.update(win)
    return g, gi, meta


def _bl_batch(b, hz, pts):
    t, r, theta, phi = (pts[..., i] for i in range(4))
    if np.any(r <= hz.r_minus) or np.any(r >= hz.r_plus):
        raise ChartDomain("boyer-lindquist batch leaves (r_minus, r_plus)")
    _check_pole(theta)
    a = b.a
    a2 = a * a
    one_lam = 1.0 + b.lam_rot
    st2 = np.sin(theta) ** 2
    rho2 = r * r + a2 * np.cos(theta) ** 2
    kap = 1.0 + b.lam_rot * np.cos(theta) ** 2
    mt = mu_tilde(b, r)
    den = one_lam**2 * rho2
    g = np.zeros(pts.shape[:-1] + (4, 4))
    g[..., 0, 0] = (mt - kap * a2 * st2) / den
    tph = (kap * a * (r * r + a2) - mt * a) * st2 / den
    g[..., 0, 3] = g[..., 3, 0] = tph
    g[..., 3, 3] = (-kap * st2 * (r * r + a2) ** 2 + mt * a2 * st2 * st2) / den
    g[..., 1, 1] = -rho2 / mt
    g[..., 2, 2] = -rho2 / kap
    return g


def _nu_batch(b, hz, pts, eps_fraction):
    if b.a != 0.0:
        raise ChartDomain("nu-form chart is defined for a = 0 only")
    t, r, theta, phi = (pts[..., i] for i in range(4))
    eps_m = eps_fraction * (hz.r_plus - hz.r_minus)
    if np.any(r <= hz.r_minus - 3 * eps_m) or np.any(r >= hz.r_plus + 3 * eps_m):
        raise ChartDomain("nu-form batch leaves the radial shell")
    _check_pole(theta)
    g = np.zeros(pts.shape[:-1] + (4, 4))
    m = mu(b, r)
    nu = nu_profile(b, r)
    g[..., 0, 0] = m
    g[..., 0, 1] = g[..., 1, 0] = -nu
    g[..., 1, 1] = -c_star(b) ** 2
    g[..., 2, 2] = -r * r
    g[..., 3, 3] = -r * r * np.sin(theta) ** 2
    return g


def _star_batch(b, hz, pts, eps_fraction):
    t, r, phi, theta = (pts[..., i] for i in range(4))
    win = interp_window(b, hz, eps_fraction)
    lo = hz.r_minus - 3.0 * win["eps_m"]
    hi = hz.r_plus + 3.0 * win["eps_m"]
    if np.any(r <= lo) or np.any(r >= hi):
        raise ChartDomain("star batch requires r in (%.6g, %.6g)" % (lo, hi))
    _check_pole(theta)
    s = np.where(r <= hz.r_crit, -1.0, 1.0)
    c, cta = _c_branch_batch(b, hz, win, r, s)
    a = b.a
    a2 = a * a
    one_lam = 1.0 + b.lam_rot
    st2 = np.sin(theta) ** 2
    rho2 = r * r + a2 * np.cos(theta) ** 2
    kap = 1.0 + b.lam_rot * np.cos(theta) ** 2
    mt = mu_tilde(b, r)
    ctilde = cta * a
    sh = pts.shape[:-1]
    z = np.zeros(sh)
    o = np.ones(sh)
    # covector components ordered (t*, r, phi*, theta)
    A = np.stack([a * o, a * s * c - (r * r + a2) * s * ctilde,
                  -(r * r + a2) * o, z], axis=-1)
    B = np.stack([o, s * c - a * st2 * s * ctilde, -a * st2, z], axis=-1)
    e1 = np.stack([z, o, z, z], axis=-1)
    e3 = np.stack([z, z, z, o], axis=-1)

    def outer(u, v):
        return u[..., :, None] * v[..., None, :]

    g = (
        -(kap * st2 / (one_lam**2 * rho2))[..., None, None] * outer(A, A)
        + (mt / (one_lam**2 * rho2))[..., None, None] * outer(B, B)
        + (s / one_lam)[..., None, None] * (outer(B, e1) + outer(e1, B))
        - (rho2 / kap)[..., None, None] * outer(e3, e3)
    )
    return g


def _cartesian_batch(b, hz, pts, eps_fraction):
    p = pts[..., 1:]
    r = np.linalg.norm(p, axis=-1)
    win = interp_window(b, hz, eps_fraction)
    lo = hz.r_minus - 3.0 * win["eps_m"]
    hi = hz.r_plus + 3.0 * win["eps_m"]
    if np.any(r <= lo) or np.any(r >= hi):
        raise ChartDomain("cartesian batch requires |p| in (%.6g, %.6g)"
                          % (lo, hi))
    avec = np.asarray(b.angmom, dtype=float)
    a = b.a
    a2 = a * a
    one_lam = 1.0 + b.lam_rot
    phat = p / r[..., None]
    a_cos = phat @ avec
    a2_sin2 = a2 - a_cos**2
    rho2 = r * r + a_cos**2
    kap = 1.0 + (b.lam / 3.0) * a_cos**2
    mt = mu_tilde(b, r)
    s = np.where(r <= hz.r_crit, -1.0, 1.0)
    c, cta = _c_branch_batch(b, hz, win, r, s)
    sh = pts.shape[:-1]
    z3 = np.zeros(sh + (1,))
    U = np.concatenate([np.ones(sh + (1,)), np.zeros(sh + (3,))], axis=-1)
    dr = np.concatenate([z3, phat], axis=-1)
    w_phi = np.concatenate([z3, np.cross(np.broadcast_to(avec, p.shape), p)],
                           axis=-1)
    w_theta = np.concatenate(
        [z3, np.cross(p, np.cross(p, np.broadcast_to(avec, p.shape)))
         / r[..., None]], axis=-1)
    V = dr - (s * c)[..., None] * U - (s * cta)[..., None] * w_phi

    def sym(x, y):
        return x[..., :, None] * y[..., None, :] + y[..., :, None] * x[..., None, :]

    G_sph = np.zeros(sh + (4, 4))
    G_sph[..., 1:, 1:] = (r * r)[..., None, None] * (
        np.eye(3) - phat[..., :, None] * phat[..., None, :]
    )
    gi = (
        -mt[..., None, None] * V[..., :, None] * V[..., None, :]
        + (s * one_lam)[..., None, None] * sym(V, w_phi)
        + (s * one_lam * (r * r + a2))[..., None, None] * sym(V, U)
        - (one_lam**2 / kap)[..., None, None]
        * (a2_sin2[..., None, None] * U[..., :, None] * U[..., None, :]
           + sym(U, w_phi))
        - (one_lam**2 / kap)[..., None, None] * G_sph
        + ((b.lam / 3.0) / kap
           * (2.0 + (b.lam / 3.0) * (a2 + a_cos**2)))[..., None, None]
        * w_theta[..., :, None] * w_theta[..., None, :]
    ) / rho2[..., None, None]
    return np.linalg.inv(gi)


def metric_batch(b, chart, pts, eps_fraction=DEFAULT_EPS_FRACTION, hz=None):
    """Covariant metric on a batch of points, shape (..., 4) -> (..., 4, 4)."""
    if hz is None:
        hz = find_horizons(b)
    pts = np.asarray(pts, dtype=float)
    if chart == CHART_BL:
        return _bl_batch(b, hz, pts)
    if chart == CHART_NU:
        return _nu_batch(b, hz, pts, eps_fraction)
    if chart == CHART_STAR:
        return _star_batch(b, hz, pts, eps_fraction)
    if chart == CHART_CARTESIAN:
        return _cartesian_batch(b, hz, pts, eps_fraction)
    raise ChartDomain("unknown chart %r" % (chart,))


def eval_metric(b, chart, point, eps_fraction=DEFAULT_EPS_FRACTION, hz=None):
    """Evaluate covariant and contravariant metric components.

    Parameters
    ----------
    b : BlackHoleParams
    chart : str
        One of ``boyer-lindquist``, ``star``, ``nu-form``, ``cartesian``.
    point : array_like, shape (4,)
        Coordinates in the chart's ordering (see ``CHART_COORDS``).
    eps_fraction : float
        Shell margin as a fraction of r_plus - r_minus.
    hz : HorizonData, optional
        Precomputed horizon data (avoids recomputation in tight loops).

    Returns
    -------
    MetricAtPoint
    """
    if hz is None:
        hz = find_horizons(b)
    point = np.asarray(point, dtype=float)
    if chart == CHART_BL:
        g, gi, meta = _bl_metric(b, hz, point)
    elif chart == CHART_STAR:
        g, gi, meta = _star_metric(b, hz, point, eps_fraction)
    elif chart == CHART_NU:
        g, gi, meta = _nu_metric(b, hz, point, eps_fraction)
    elif chart == CHART_CARTESIAN:
        g, gi, meta = _cartesian_metric(b, hz, point, eps_fraction)
    else:
        raise ChartDomain("unknown chart %r" % (chart,))
    meta["coords"] = CHART_COORDS[chart]
    return MetricAtPoint(chart=chart, point=point, g_cov=g, g_con=gi, meta=meta)


def metric_sampler(b, chart, eps_fraction=DEFAULT_EPS_FRACTION):
    """Return a batch-capable covariant-metric sampler (..., 4) -> (..., 4, 4)."""
    hz = find_horizons(b)

    def f(x):
        return metric_batch(b, chart, x, eps_fraction, hz=hz)

    return f


def chart_scales(b, chart, hz=None):
    """Per-coordinate scales used to set finite-difference steps."""
    if hz is None:
        hz = find_horizons(b)
    dr = hz.r_plus - hz.r_minus
    if chart == CHART_CARTESIAN:
        return np.array([1.0, dr, dr, dr])
    return np.array([1.0, dr, 1.0, 1.0])


# ---------------------------------------------------------------------------
# finite-difference curvature
# ---------------------------------------------------------------------------

def _d1(f, x, axis, h):
    """4th-order centered first derivative of an array-valued function."""
    e = np.zeros(np.asarray(x).shape[-1])
    e[axis] = 1.0
    return (
        -f(x + 2 * h * e) + 8.0 * f(x + h * e) - 8.0 * f(x - h * e) + f(x - 2 * h * e)
    ) / (12.0 * h)


def christoffel_fd(metric_fn, x, steps):
    """Christoffel symbols Gamma^k_{ij} by 4th-order finite differences.

    Batch-capable: x may be (..., 4); returns (..., 4, 4, 4).
    """
    x = np.asarray(x, dtype=float)
    g = metric_fn(x)
    gi = np.linalg.inv(g)
    dg = np.stack([_d1(metric_fn, x, a, steps[a]) for a in range(4)],
                  axis=-3)  # dg[..., a, i, j]
    gamma_l = 0.5 * (
        np.einsum("...ijk->...kij", dg) + np.einsum("...jik->...kij", dg) - dg
    )
    return np.einsum("...kl,...lij->...kij", gi, gamma_l)


def _ricci_from_gamma(metric_fn, x, steps):
    gam = christoffel_fd(metric_fn, x, steps)
    dgam = np.stack(
        [
            _d1(lambda y: christoffel_fd(metric_fn, y, steps), x, a, steps[a])
            for a in range(4)
        ],
        axis=-4,
    )  # dgam[..., a, k, i, j]
    ric = (
        np.einsum("...aaij->...ij", dgam)
        - np.einsum("...iaaj->...ij", dgam)
        + np.einsum("...kkl,...lij->...ij", gam, gam)
        - np.einsum("...kil,...lkj->...ij", gam, gam)
    )
    return 0.5 * (ric + np.swapaxes(ric, -1, -2))


def ricci_fd(b_or_fn, chart=None, point=None, step=1e-3, lam=None, tol=1e-3,
             richardson=True):
    """Ricci tensor via nested 4th-order finite differences.

    May be called either as ``ricci_fd(b, chart, point, step)`` on a family
    member, or as ``ricci_fd(metric_fn, point=..., step=...)`` with an
    arbitrary metric sampler (step is then absolute per coordinate).

    Returns
    -------
    ric : ndarray, shape (4, 4)
    residual : ndarray or None
        ric + lam * g when ``lam`` is given (the vacuum defect), else None.
    err : float
        Richardson estimate of the finite-difference error (nan when
        ``richardson`` is disabled).

    Raises
    ------
    StepTooLarge
        If the Richardson disagreement exceeds ``tol``.
    """
    if callable(b_or_fn):
        fn = b_or_fn
        steps = np.full(4, step) if np.isscalar(step) else np.asarray(step)
    else:
        b = b_or_fn
        fn = metric_sampler(b, chart)
        steps = step * chart_scales(b, chart)
        if lam is None:
            lam = b.lam
    x = np.asarray(point, dtype=float)
    fine = _ricci_from_gamma(fn, x, steps / 2.0)
    if richardson:
        coarse = _ricci_from_gamma(fn, x, steps)
        err = float(np.max(np.abs(fine - coarse)) / 15.0)
        if err > tol:
            raise StepTooLarge("Richardson disagreement %.3g exceeds %.3g"
                               % (err, tol))
    else:
        err = float("nan")
    ric = fine
    residual = None
    if lam is not None:
        residual = ric + lam * fn(x)
    return ric, residual, err


def wave_op_oneform_fd(metric_fn, u_fn, point, step=1e-3):
    """Tensor wave operator on a one-form by nested finite differences.

    Computes (box u)_m = -g^{nl} u_{m;n;l} at a point, for an analytic
    covector field ``u_fn(x) -> (4,)``.
    """
    x = np.asarray(point, dtype=float)
    steps = np.full(4, step) if np.isscalar(step) else np.asarray(step)

    def cov_d1(y):
        gam = christoffel_fd(metric_fn, y, steps)
        du = np.stack([_d1(u_fn, y, a, steps[a]) for a in range(4)])  # du[n, m]
        return du.T - np.einsum("knm,k->mn", gam, u_fn(y))  # T[m, n] = u_{m;n}

    gam = christoffel_fd(metric_fn, x, steps)
    T = cov_d1(x)
    dT = np.stack([_d1(cov_d1, x, a, steps[a]) for a in range(4)])  # dT[l, m, n]
    D2 = (
        np.einsum("lmn->mnl", dT)
        - np.einsum("klm,kn->mnl", gam, T)
        - np.einsum("kln,mk->mnl", gam, T)
    )
    gi = np.linalg.inv(metric_fn(x))
    return -np.einsum("nl,mnl->m", gi, D2)


def upsilon_eval(g_fn, t_fn, point, step=1e-3):
    """Gauge one-form of g relative to background t by finite differences.

    Components Upsilon_m = g_{mk} g^{nl} (Gamma(g)^k_{nl} - Gamma(t)^k_{nl}).
    """
    x = np.asarray(point, dtype=float)
    steps = np.full(4, step) if np.isscalar(step) else np.asarray(step)
    g = g_fn(x)
    gi = np.linalg.inv(g)
    dgam = christoffel_fd(g_fn, x, steps) - christoffel_fd(t_fn, x, steps)
    return np.einsum("mk,nl,knl->m", g, gi, dgam)


# ---------------------------------------------------------------------------
# induced data on a t* = const slice
# ---------------------------------------------------------------------------

@dataclass
class SliceData:
    """First/second fundamental form fields on a constant-t* slice.

    ``h`` is stored in the ambient-signature (negative definite) convention,
    recorded in ``convention``.  The lattice includes ``pad`` ghost layers
    on each end of every axis so that downstream lattice derivatives have
    centered-stencil quality on the core region; ``core`` trims a field to
    that region.
    """

    chart: str
    t_star: float
    axes: tuple          # spatial coordinate 1-d arrays (padded)
    points: np.ndarray   # (..., 3) spatial coordinates
    h: np.ndarray        # (..., 3, 3) induced metric, negative definite
    k: np.ndarray        # (..., 3, 3) second fundamental form
    pad: int = 0
    convention: str = "negative"
    meta: dict = field(default_factory=dict)

    def core(self, field_arr):
        if self.pad == 0:
            return field_arr
        sl = (slice(self.pad, -self.pad),) * 3
        return field_arr[sl]


def grid_deriv(F, axis, dx):
    """4th-order derivative of a lattice field along one grid axis.

    Centered 5-point stencils in the interior, one-sided 5-point stencils at
    the two edge layers.  ``F`` may carry trailing component axes.
    """
    F = np.asarray(F, dtype=float)
    n = F.shape[axis]
    if n < 5:
        raise ValueError("need at least 5 nodes along axis %d" % axis)
    out = np.zeros_like(F)
    sl = [slice(None)] * F.ndim

    def take(i):
        sl2 = list(sl)
        sl2[axis] = i
        return F[tuple(sl2)]

    def put(i, val):
        sl2 = list(sl)
        sl2[axis] = i
        out[tuple(sl2)] = val

    # interior: (-F[i+2] + 8 F[i+1] - 8 F[i-1] + F[i-2]) / 12h
    sl_i = list(sl)
    sl_i[axis] = slice(2, n - 2)
    out[tuple(sl_i)] = (
        -take(slice(4, n)) + 8.0 * take(slice(3, n - 1))
        - 8.0 * take(slice(1, n - 3)) + take(slice(0, n - 4))
    ) / (12.0 * dx)
    # one-sided 5-point stencils, 4th order
    c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    put(0, sum(c0[j] * take(j) for j in range(5)) / dx)
    put(1, sum(c1[j] * take(j) for j in range(5)) / dx)
    put(n - 1, -sum(c0[j] * take(n - 1 - j) for j in range(5)) / dx)
    put(n - 2, -sum(c1[j] * take(n - 1 - j) for j in range(5)) / dx)
    return out


def metric_lattice(b, chart, axes, t_star=0.0, eps_fraction=DEFAULT_EPS_FRACTION):
    """Sample g_cov on a spatial lattice of a constant-t* slice.

    Returns an array of shape ``(*lattice, 4, 4)``.
    """
    hz = find_horizons(b)
    mesh = list(np.meshgrid(*axes, indexing="ij"))
    pts = np.stack([np.full_like(mesh[0], t_star)] + mesh, axis=-1)
    return metric_batch(b, chart, pts, eps_fraction, hz=hz)


def lattice_christoffel(g, dg):
    """Christoffel symbols from metric and coordinate-derivative lattices.

    ``g``: (..., 4, 4); ``dg``: (..., 4, 4, 4) with dg[..., a, i, j] the
    derivative of g_ij along coordinate a.  Returns (..., 4, 4, 4) with
    Gamma[..., k, i, j].
    """
    gi = np.linalg.inv(g)
    gamma_l = 0.5 * (
        np.einsum("...ijk->...kij", dg)
        + np.einsum("...jik->...kij", dg)
        - dg
    )
    return np.einsum("...kl,...lij->...kij", gi, gamma_l)


def slice_christoffel(g_lat, axes):
    """4d Christoffel lattice of a stationary metric given on a slice.

    Time derivatives vanish (stationary extension); spatial derivatives are
    taken by 4th-order grid stencils along the lattice axes.
    """
    shape = g_lat.shape[:-2]
    dg = np.zeros(shape + (4, 4, 4))
    for a in range(3):
        dx = axes[a][1] - axes[a][0]
        dg[..., a + 1, :, :] = grid_deriv(g_lat, a, dx)
    return lattice_christoffel(g_lat, dg)


def pad_axis(ax, pad):
    """Extend a uniform axis by ``pad`` nodes on each end."""
    ax = np.asarray(ax, dtype=float)
    if pad == 0:
        return ax
    dx = ax[1] - ax[0]
    left = ax[0] - dx * np.arange(pad, 0, -1)
    right = ax[-1] + dx * np.arange(1, pad + 1)
    return np.concatenate([left, ax, right])


def induced_data(b, t_star=0.0, grid=None, chart=CHART_STAR, pad=4,
                 eps_fraction=DEFAULT_EPS_FRACTION):
    """Induced metric and second fundamental form on a t* = const surface.

    The normal is the future unit normal (N t* > 0); the sign convention is
    k(X, Y) = <nabla_X Y, N> with <N, N> = +1.  Derivatives are taken by
    4th-order stencils on the lattice, so the grids must be uniform with at
    least 5 nodes per axis.  The requested grid is extended by ``pad`` ghost
    layers so every requested node sees centered stencils; the ghost layers
    must stay inside the chart domain.

    Parameters
    ----------
    b : BlackHoleParams
    t_star : float
    grid : tuple of three 1-d arrays, optional
        Spatial grids in the chart's spatial ordering; defaults to an
        interior grid extending slightly beyond both horizons.
    chart : str
        ``star``, ``nu-form`` or ``cartesian``.

    Raises
    ------
    NotSpacelike
        If h fails to be negative definite at some node.
    """
    hz = find_horizons(b)
    if grid is None:
        # keep the padded lattice inside the radial shell
        eps_m = eps_fraction * (hz.r_plus - hz.r_minus)
        rr = np.linspace(hz.r_minus - 0.9 * eps_m, hz.r_plus + 0.9 * eps_m, 49)
        if chart == CHART_NU:
            grid = (rr, np.linspace(0.35 * math.pi, 0.65 * math.pi, 11),
                    np.linspace(0.3, 5.9, 7))
        else:
            grid = (rr, np.linspace(0.3, 5.9, 7),
                    np.linspace(0.35 * math.pi, 0.65 * math.pi, 11))
    axes = tuple(pad_axis(ax, pad) for ax in grid)
    g_lat = metric_lattice(b, chart, axes, t_star, eps_fraction)
    gi_lat = np.linalg.inv(g_lat)
    h = g_lat[..., 1:, 1:]
    if np.max(np.linalg.eigvalsh(h)) >= 0.0:
        raise NotSpacelike("induced metric not negative definite on the grid")
    if np.min(gi_lat[..., 0, 0]) <= 0.0:
        raise NotSpacelike("dt* not timelike somewhere on the grid")
    # future unit normal and its index-lowered form
    N = gi_lat[..., :, 0] / np.sqrt(gi_lat[..., 0, 0])[..., None]
    N_d = np.einsum("...mn,...n->...m", g_lat, N)
    gam = slice_christoffel(g_lat, axes)
    k = np.einsum("...k,...kij->...ij", N_d, gam)[..., 1:, 1:]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return SliceData(
        chart=chart,
        t_star=t_star,
        axes=axes,
        points=pts,
        h=h,
        k=k,
        pad=pad,
        meta={"g_lat": g_lat},
    )
