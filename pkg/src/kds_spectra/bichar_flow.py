r"""Null-bicharacteristic flow: trapping and horizon saddle structure.

Phase-space conventions.  Covectors are written

    static chart (a = 0):   -sigma dt  + xi dr + eta_th dtheta + eta_ph dphi
    t0 chart (either sign): -sigma dt0 + xi dr + eta_th dtheta + zeta dphi0

where t0 (and phi0) are the horizon-crossing time (and angle) built with
vanishing interpolation coefficients near one horizon; the chart carries the
branch sign (+1 near the outer, -1 near the inner horizon).  The dual metric
function in the t0 chart reads

    rho^2 G = -mu~ xi^2 + 2 s a (1+lr) xi zeta - 2 s (1+lr)(r^2+a^2) xi sigma
              - (1+lr)^2 (a sin^2 th sigma - zeta)^2 / (kap sin^2 th)
              - kap eta_th^2,

with lr = Lam a^2 / 3, kap = 1 + lr cos^2 th, s the branch sign.  In the
static chart (a = 0),

    G = sigma^2 / mu - mu xi^2 - (eta_th^2 + eta_ph^2 / sin^2 th) / r^2.

Hamilton's equations are integrated with an adaptive 8th-order Runge-Kutta
method; for work at the horizon conormals the vector field is rescaled by
1/|xi| (the flow is fiber-homogeneous of degree one, so only the
projectivized dynamics matter), under which

    d/ds log(1/|xi|) -> beta_pm_0,    d/ds t0 -> beta_pm_0 * beta_pm

on the future conormals, with both rates flipping sign on the past ones.
The non-rotating trapped set sits at r = 3 M with xi = 0 and
sigma^2 = mu r^{-2} |eta|^2.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import metric_family as mf
from .errors import FitFailure, LeftDomain, ToleranceFailure

CHART_STATIC = "static"
CHART_T0 = "t0"

__all__ = [
    "PhasePoint",
    "Trajectory",
    "FlowDiagnostics",
    "dual_metric_fn",
    "hamilton_rhs",
    "hamilton_flow",
    "radial_set_rates",
    "rho0_rate",
    "trapped_set_locate",
    "null_adjust_sigma",
    "CHART_STATIC",
    "CHART_T0",
]


@dataclass
class PhasePoint:
    """Base point plus covector components in one of the flow charts.

    base = (t, r, theta, phi); cov = (sigma, xi, eta_th, eta_ph/zeta).
    ``branch`` is the horizon-crossing branch sign for the t0 chart and is
    ignored in the static chart.
    """

    chart: str
    base: tuple
    cov: tuple
    branch: int = 1

    def state(self):
        """Canonical state vector (q, p) with p = (-sigma, xi, eta_th, l_ang)."""
        sigma, xi, eta_th, l_ang = self.cov
        return np.array(list(self.base) + [-sigma, xi, eta_th, l_ang], dtype=float)

    def is_null(self, b, tol=1e-10):
        g = dual_metric_fn(b, self)
        scale = 1.0 + float(np.sum(np.asarray(self.cov) ** 2))
        return abs(g) < tol * scale


@dataclass
class FlowDiagnostics:
    conserved_g: float
    conserved_sigma: float
    conserved_eta2: float = None
    expansion_rates: dict = field(default_factory=dict)
    exit_reason: str = "window"


@dataclass
class Trajectory:
    chart: str
    branch: int
    s: np.ndarray
    states: np.ndarray       # (n, 8): q then p
    diagnostics: FlowDiagnostics = None
    sol: object = None       # dense-output solution

    def columns(self):
        names = ("t", "r", "theta", "phi", "p_t", "xi", "eta_th", "l_ang")
        return names

    @property
    def r(self):
        return self.states[:, 1]

    @property
    def sigma(self):
        return -self.states[:, 4]


# ---------------------------------------------------------------------------
# dual metric function and Hamilton vector field
# ---------------------------------------------------------------------------

def _g_static(b, q, p):
    t, r, th, ph = q
    pt, pr, pth, pph = p
    m = 1.0 - 2.0 * b.mass / r - b.lam * r**2 / 3.0
    return pt**2 / m - m * pr**2 - (pth**2 + pph**2 / math.sin(th) ** 2) / r**2


def _rhs_static(b, state):
    t, r, th, ph, pt, pr, pth, pph = state
    m = 1.0 - 2.0 * b.mass / r - b.lam * r**2 / 3.0
    mp = 2.0 * b.mass / r**2 - 2.0 * b.lam * r / 3.0
    st = math.sin(th)
    ct = math.cos(th)
    eta2 = pth**2 + pph**2 / st**2
    dq = np.array(
        [
            2.0 * pt / m,
            -2.0 * m * pr,
            -2.0 * pth / r**2,
            -2.0 * pph / (r**2 * st**2),
        ]
    )
    dG_dr = -mp * pt**2 / m**2 - mp * pr**2 + 2.0 * eta2 / r**3
    dG_dth = 2.0 * pph**2 * ct / (r**2 * st**3)
    dp = np.array([0.0, -dG_dr, -dG_dth, 0.0])
    return np.concatenate([dq, dp])


def _g_t0(b, q, p, s):
    t0, r, th, ph0 = q
    pt, pr, pth, pph = p
    a = b.a
    lr = b.lam_rot
    one = 1.0 + lr
    st2 = math.sin(th) ** 2
    kap = 1.0 + lr * math.cos(th) ** 2
    rho2 = r * r + a * a * math.cos(th) ** 2
    mt = float(mf.mu_tilde(b, r))
    w = -a * st2 * pt - pph
    F = (
        -mt * pr**2
        + 2.0 * s * a * one * pr * pph
        + 2.0 * s * one * (r * r + a * a) * pr * pt
        - one**2 * w**2 / (kap * st2)
        - kap * pth**2
    )
    return F / rho2


def _rhs_t0(b, state, s):
    t0, r, th, ph0, pt, pr, pth, pph = state
    a = b.a
    lr = b.lam_rot
    one = 1.0 + lr
    st = math.sin(th)
    ct = math.cos(th)
    st2 = st * st
    kap = 1.0 + lr * ct * ct
    rho2 = r * r + a * a * ct * ct
    mt = float(mf.mu_tilde(b, r))
    mtp = float(mf.mu_tilde_prime(b, r))
    w = -a * st2 * pt - pph

    F = (
        -mt * pr**2
        + 2.0 * s * a * one * pr * pph
        + 2.0 * s * one * (r * r + a * a) * pr * pt
        - one**2 * w**2 / (kap * st2)
        - kap * pth**2
    )
    G = F / rho2

    dF_dpt = 2.0 * s * one * (r * r + a * a) * pr + 2.0 * a * one**2 * w / kap
    dF_dpr = -2.0 * mt * pr + 2.0 * s * a * one * pph + 2.0 * s * one * (r * r + a * a) * pt
    dF_dpth = -2.0 * kap * pth
    dF_dpph = 2.0 * s * a * one * pr + 2.0 * one**2 * w / (kap * st2)

    dF_dr = -mtp * pr**2 + 4.0 * s * one * r * pr * pt
    kap_p = -lr * math.sin(2.0 * th)
    w_p = -2.0 * a * st * ct * pt
    denom = kap * st2
    dF_dth = (
        -one**2
        * (2.0 * w * w_p * denom - w * w * (kap_p * st2 + kap * math.sin(2.0 * th)))
        / denom**2
        - kap_p * pth**2
    )
    drho2_dr = 2.0 * r
    drho2_dth = -a * a * math.sin(2.0 * th)

    dq = np.array([dF_dpt, dF_dpr, dF_dpth, dF_dpph]) / rho2
    dG_dr = (dF_dr - G * drho2_dr) / rho2
    dG_dth = (dF_dth - G * drho2_dth) / rho2
    dp = np.array([0.0, -dG_dr, -dG_dth, 0.0])
    return np.concatenate([dq, dp])


def dual_metric_fn(b, point):
    """Value of the dual metric function at a phase point."""
    st = point.state()
    if point.chart == CHART_STATIC:
        if b.a != 0.0:
            raise ValueError("static chart requires a = 0")
        return float(_g_static(b, st[:4], st[4:]))
    return float(_g_t0(b, st[:4], st[4:], point.branch))


def hamilton_rhs(b, point):
    """Hamilton vector field (dq/ds, dp/ds) at a phase point."""
    st = point.state()
    if point.chart == CHART_STATIC:
        return _rhs_static(b, st)
    return _rhs_t0(b, st, point.branch)


def null_adjust_sigma(b, point, iters=6):
    """Adjust sigma so the covector is null (fixed-point on the linear part).

    Useful for placing points near the horizon conormals on the
    characteristic set; requires a nonzero xi-sigma coupling, i.e. the t0
    chart at a horizon.
    """
    st = point.state()
    q, p = st[:4], st[4:].copy()
    s = point.branch
    a = b.a
    one = 1.0 + b.lam_rot
    r = q[1]
    coef = 2.0 * s * one * (r * r + a * a) * p[1]  # dF/dpt linear part
    if abs(coef) < 1e-14:
        raise ValueError("sigma adjustment needs xi != 0 in the t0 chart")
    for _ in range(iters):
        rho2 = r * r + a * a * math.cos(q[2]) ** 2
        g = _g_t0(b, q, p, s)
        p[0] -= g * rho2 / coef
    return PhasePoint(point.chart, tuple(q), (-p[0], p[1], p[2], p[3]),
                      branch=point.branch)


# ---------------------------------------------------------------------------
# flow integration
# ---------------------------------------------------------------------------

def _domain_events(b, chart, branch, hz, eps_fraction):
    events = []
    if chart == CHART_STATIC:
        gap = 1e-6 * (hz.r_plus - hz.r_minus)
        lo, hi = hz.r_minus + gap, hz.r_plus - gap
    else:
        eps_m = eps_fraction * (hz.r_plus - hz.r_minus)
        lo, hi = hz.r_minus - 2.9 * eps_m, hz.r_plus + 2.9 * eps_m

    def hit_lo(s, y):
        return y[1] - lo

    def hit_hi(s, y):
        return hi - y[1]

    def hit_pole(s, y):
        return min(y[2] - 1e-3, math.pi - 1e-3 - y[2])

    for ev in (hit_lo, hit_hi, hit_pole):
        ev.terminal = True
        events.append(ev)
    return events


def hamilton_flow(b, point, interval=(0.0, 10.0), tol=1e-11, rescale=None,
                  n_out=400, raise_on_exit=False, atol=None,
                  eps_fraction=mf.DEFAULT_EPS_FRACTION):
    """Integrate the Hamilton flow of the dual metric function.

    Parameters
    ----------
    b : BlackHoleParams
    point : PhasePoint
    interval : (s0, s1)
        Affine-parameter window (for ``rescale='xi'``, the reparametrized
        window).
    tol : float
        Relative integrator tolerance (absolute is tol * 1e-2).
    rescale : None or "xi"
        ``"xi"`` multiplies the vector field by 1/|xi|, the fiber-scale
        normalization used at the horizon conormals.
    raise_on_exit : bool
        Raise LeftDomain (with the partial trajectory attached) when the
        flow leaves the chart domain instead of returning it.

    Returns
    -------
    Trajectory
        With conservation diagnostics filled in.
    """
    chart, branch = point.chart, point.branch
    if chart == CHART_STATIC and b.a != 0.0:
        raise ValueError("static chart requires a = 0")
    hz = mf.find_horizons(b)

    if chart == CHART_STATIC:
        def rhs(s, y):
            v = _rhs_static(b, y)
            return v / abs(y[5]) if rescale == "xi" else v

        def gval(y):
            return _g_static(b, y[:4], y[4:])
    else:
        def rhs(s, y):
            v = _rhs_t0(b, y, branch)
            return v / abs(y[5]) if rescale == "xi" else v

        def gval(y):
            return _g_t0(b, y[:4], y[4:], branch)

    y0 = point.state()
    sol = solve_ivp(
        rhs,
        interval,
        y0,
        method="DOP853",
        rtol=tol,
        atol=max(tol, 1e-12) if atol is None else atol,
        dense_output=True,
        events=_domain_events(b, chart, branch, hz, eps_fraction),
        t_eval=np.linspace(interval[0], interval[1], n_out),
    )
    if not sol.success and sol.status != 1:
        raise ToleranceFailure(sol.message)
    states = sol.y.T
    if sol.status == 1:  # terminated by a domain event
        s_end = sol.t_events[0] if len(sol.t_events[0]) else None
        exit_reason = "left-domain"
    else:
        exit_reason = "window"
    g0 = gval(y0)
    gs = np.array([gval(y) for y in states])
    eta2 = None
    if chart == CHART_STATIC:
        e2 = states[:, 6] ** 2 + states[:, 7] ** 2 / np.sin(states[:, 2]) ** 2
        eta2 = float(np.max(np.abs(e2 - e2[0])))
    diag = FlowDiagnostics(
        conserved_g=float(np.max(np.abs(gs - g0))),
        conserved_sigma=float(np.max(np.abs(states[:, 4] - y0[4]))),
        conserved_eta2=eta2,
        exit_reason=exit_reason,
    )
    traj = Trajectory(chart=chart, branch=branch, s=sol.t, states=states,
                      diagnostics=diag, sol=sol)
    if raise_on_exit and exit_reason != "window":
        raise LeftDomain("flow left the chart domain", trajectory=traj)
    return traj


# ---------------------------------------------------------------------------
# radial sets
# ---------------------------------------------------------------------------

def _fit_slope(s, y, fit_frac=0.6):
    n = len(s)
    i0 = int(n * (1.0 - fit_frac))
    ss, yy = s[i0:], y[i0:]
    A = np.vstack([ss, np.ones_like(ss)]).T
    coef, *_ = np.linalg.lstsq(A, yy, rcond=None)
    resid = float(np.max(np.abs(A @ coef - yy)))
    return float(coef[0]), resid


def radial_set_rates(b, horizon=+1, component="future", efolds=10.0,
                     theta0=math.pi / 2.0, tol=1e-12, fit_frac=0.6,
                     fit_tol=1e-7):
    """Fitted saddle rates at a horizon conormal.

    Integrates the 1/|xi|-rescaled flow starting exactly on the conormal of
    the selected horizon (+1 outer, -1 inner), on the future or past
    component, and fits

        rate_rhohat = d/ds log(1/|xi|),    rate_tau = d/ds t0,

    both over the final ``fit_frac`` of a window spanning roughly ``efolds``
    fiber e-foldings.

    Returns
    -------
    (rate_rhohat, rate_tau), Trajectory

    Raises
    ------
    FitFailure
        If either linear fit has sup-residual above ``fit_tol``.
    """
    hz = mf.find_horizons(b)
    r0 = hz.r_plus if horizon > 0 else hz.r_minus
    branch = 1 if horizon > 0 else -1
    # future component: xi > 0 at the outer horizon, xi < 0 at the inner
    xi0 = 1.0 if horizon > 0 else -1.0
    if component == "past":
        xi0 = -xi0
    rho2 = r0**2 + b.a**2 * math.cos(theta0) ** 2
    beta0 = abs(float(mf.mu_tilde_prime(b, r0))) / rho2
    s_max = efolds / beta0
    point = PhasePoint(CHART_T0, (0.0, r0, theta0, 0.0),
                       (0.0, xi0, 0.0, 0.0), branch=branch)
    traj = hamilton_flow(b, point, interval=(0.0, s_max), tol=tol,
                         rescale="xi", atol=1e-16)
    if traj.diagnostics.exit_reason != "window":
        raise FitFailure("flow left the domain before the fit window")
    log_rhohat = -np.log(np.abs(traj.states[:, 5]))
    rate1, res1 = _fit_slope(traj.s, log_rhohat, fit_frac)
    rate2, res2 = _fit_slope(traj.s, traj.states[:, 0], fit_frac)
    if max(res1, res2) > fit_tol:
        raise FitFailure("rate fit residual %.3g exceeds %.3g"
                         % (max(res1, res2), fit_tol))
    traj.diagnostics.expansion_rates = {"rhohat": rate1, "tau": rate2,
                                        "fit_residuals": (res1, res2)}
    return (rate1, rate2), traj


def rho0_rate(b, horizon=+1, component="future", delta=1e-8, efolds=8.0,
              theta0=math.pi / 2.0, tol=1e-12, fit_frac=0.6, fit_tol=1e-5):
    """Fitted growth rate of the quadratic defining function of the conormal.

    Starts on the characteristic set displaced by ``delta`` in the
    transverse fiber directions and fits d/ds log rho0 for

        rho0 = (1/xi^2) [ (1+lr)^2 (a sin^2 th sigma - zeta)^2 / (kap sin^2 th)
                          + kap eta^2 + sigma^2 ],

    which approaches +-2 beta_pm_0 on the future/past components.
    """
    hz = mf.find_horizons(b)
    r0 = hz.r_plus if horizon > 0 else hz.r_minus
    branch = 1 if horizon > 0 else -1
    xi0 = 1.0 if horizon > 0 else -1.0
    if component == "past":
        xi0 = -xi0
    rho2 = r0**2 + b.a**2 * math.cos(theta0) ** 2
    beta0 = abs(float(mf.mu_tilde_prime(b, r0))) / rho2
    s_max = efolds / (2.0 * beta0)
    raw = PhasePoint(CHART_T0, (0.0, r0, theta0, 0.0),
                     (0.0, xi0, delta, delta), branch=branch)
    point = null_adjust_sigma(b, raw)
    traj = hamilton_flow(b, point, interval=(0.0, s_max), tol=tol,
                         rescale="xi", atol=1e-16)
    a = b.a
    lr = b.lam_rot
    one = 1.0 + lr
    th = traj.states[:, 2]
    st2 = np.sin(th) ** 2
    kap = 1.0 + lr * np.cos(th) ** 2
    pt, xi, eta, pph = (traj.states[:, 4], traj.states[:, 5],
                        traj.states[:, 6], traj.states[:, 7])
    w = -a * st2 * pt - pph
    rho0 = (one**2 * w**2 / (kap * st2) + kap * eta**2 + pt**2) / xi**2
    rate, resid = _fit_slope(traj.s, np.log(rho0), fit_frac)
    if resid > fit_tol:
        raise FitFailure("rho0 fit residual %.3g exceeds %.3g" % (resid, fit_tol))
    return rate, traj


# ---------------------------------------------------------------------------
# trapping (non-rotating)
# ---------------------------------------------------------------------------

def trapped_set_locate(b):
    """Radius of the photon sphere: the root of (mu r^{-2})' between horizons."""
    if b.a != 0.0:
        raise ValueError("trapped-set locator implemented for a = 0 only")
    hz = mf.find_horizons(b)

    def f(r):
        # r^4/(-2) * (mu r^-2)' = r - 3M ... use the unreduced derivative
        return float(mf.mu_prime(b, r) * r - 2.0 * mu_at(b, r))

    def mu_at(bb, r):
        return 1.0 - 2.0 * bb.mass / r - bb.lam * r**2 / 3.0

    return brentq(f, hz.r_minus * 1.001, hz.r_plus * 0.999, xtol=1e-15,
                  rtol=8.9e-16)


def trapped_point(b, l_ang=1.0, future=True):
    """A phase point on the photon sphere (equatorial, null)."""
    rp = trapped_set_locate(b)
    m = 1.0 - 2.0 * b.mass / rp - b.lam * rp**2 / 3.0
    sigma = math.sqrt(m / rp**2) * abs(l_ang)
    if future:
        sigma = -sigma  # future component carries sigma < 0
    return PhasePoint(CHART_STATIC, (0.0, rp, math.pi / 2.0, 0.0),
                      (sigma, 0.0, 0.0, l_ang))
