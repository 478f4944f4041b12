r"""Frame-split operator matrices and their spectral identities.

For a warped-product metric g = alpha(x)^2 dt^2 - h(x, dx) the cotangent
bundle splits as <e^0> + T*X with e^0 = alpha dt, and symmetric 2-tensors
into (NN, NT, T) blocks; when additionally X = I_r x S with
h = alpha^-2 dr^2 + r^2 gS the tangential part refines through e^1 =
alpha^-1 dr.  This module builds, in those splittings:

* the symbolic block matrices of the symmetric gradient, divergence, trace
  reversal and their composite 2 delta_g G_g (``warped_operator_matrices``),
  together with an interpreter that applies them to spherically symmetric
  sections sampled on an r-grid;

* the 10x10 skew block of the second-order wave-type operator at the
  photon sphere, in the splitting refined by eta (the spherical momentum)
  and its orthocomplement, including the zeroth-order gauge modification
  with parameters (gamma1, gamma2); its characteristic polynomial is

      lambda^6 (lambda - g1')^2 (lambda - 2 g1') (lambda - 2 g2'),
      gj' = alpha^-2 r gamma_j,

  independent of the time-function derivative F';

* the 7x7 skew block at the horizon conormals, whose eigenvalues are
  {2 g1, 4 kap, 2 kap + g1, 8 kap, 6 kap, 4 kap + g2, 4 kap};

* the 3x3 / 6x6 frame-change matrices between the alpha-orthonormal and the
  horizon-regular frames, and the diagonalization they effect on the
  time-derivative block;

* the rotational l = 1 identity: for f = (Lam r / 3 + 2 M / r^2) dt the
  2d-exterior derivative satisfies r d(f/r) = C r^-3 vol with C = -6 M in
  the orientation vol = dr ^ dt.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import metric_family as mf
from .errors import FitFailure

__all__ = [
    "FormalPoly",
    "SplitMatrixOperator",
    "warped_operator_matrices",
    "ReducedScalar",
    "ReducedOneFormT",
    "ReducedSymT",
    "ReducedSection",
    "apply_block_matrix",
    "compose_block_matrices",
    "trapped_subpr_matrix",
    "trapped_char_poly_coeffs",
    "expected_trapped_char_poly",
    "trapped_oneform_subpr",
    "sym2_lift",
    "radial_subpr_block",
    "radial_subpr_eigenvalues",
    "expected_radial_eigenvalues",
    "conjugation_matrices",
    "vector_l1_identity",
]


# ---------------------------------------------------------------------------
# formal polynomials in a noncommutative symbol alphabet
# ---------------------------------------------------------------------------

class FormalPoly:
    """Polynomial in noncommuting formal symbols with complex coefficients.

    Monomials are ordered words (tuples of symbol names); composition of
    operator symbols is word concatenation.  Scalars commute.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for w, c in terms.items():
                if c != 0:
                    self.terms[tuple(w)] = self.terms.get(tuple(w), 0) + c

    @classmethod
    def sym(cls, name):
        return cls({(name,): 1.0})

    @classmethod
    def const(cls, c):
        return cls({(): c}) if c != 0 else cls()

    def __add__(self, other):
        other = _coerce(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return FormalPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return FormalPoly({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        out = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                out[w] = out.get(w, 0) + c1 * c2
        return FormalPoly(out)

    def __rmul__(self, other):
        return _coerce(other) * self

    def __eq__(self, other):
        other = _coerce(other)
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0) - other.terms.get(k, 0)) < 1e-14 for k in keys
        )

    def __hash__(self):
        raise TypeError("FormalPoly is unhashable")

    def is_zero(self):
        return all(abs(c) < 1e-14 for c in self.terms.values())

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, c in sorted(self.terms.items()):
            word = "*".join(w) if w else "1"
            parts.append("%s %s" % (_fmt_coeff(c), word))
        return " + ".join(parts)


def _fmt_coeff(c):
    if isinstance(c, complex):
        return "(%g%+gj)" % (c.real, c.imag)
    return "%g" % c


def _coerce(x):
    if isinstance(x, FormalPoly):
        return x
    if isinstance(x, (int, float, complex)):
        return FormalPoly.const(x)
    raise TypeError("cannot coerce %r" % (x,))


def S(name):
    return FormalPoly.sym(name)


def _zero():
    return FormalPoly()


@dataclass
class SplitMatrixOperator:
    """Finite matrix of formal-symbol (or numeric) entries in a splitting.

    ``splitting`` maps to the declared row/column block structures; every
    symbol appearing in an entry must be listed in ``symbols``.
    """

    row_splitting: tuple
    col_splitting: tuple
    entries: list                     # nested lists of FormalPoly or complex
    symbols: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        assert len(self.entries) == len(self.row_splitting)
        for row in self.entries:
            assert len(row) == len(self.col_splitting)
        used = set()
        for row in self.entries:
            for e in row:
                if isinstance(e, FormalPoly):
                    for w in e.terms:
                        used.update(w)
        missing = used - set(self.symbols)
        if missing:
            raise ValueError("entries use undeclared symbols: %r" % (missing,))

    def entry(self, i, j):
        return self.entries[i][j]


# ---------------------------------------------------------------------------
# warped-product block matrices
# ---------------------------------------------------------------------------

WARPED_SYMBOLS = (
    "e0",            # alpha^-1 d_t
    "dX",            # spatial exterior derivative
    "deltaH",        # spatial divergence
    "deltaHStar",    # spatial symmetric gradient
    "trH",           # spatial trace
    "h",             # multiplication by the spatial metric
    "gradOmega",     # contraction with grad log(alpha)
    "dOmega",        # multiplication by d log(alpha)
    "alpha2", "alphaInv2", "alpha", "alphaInv",
)

ONEFORM_SPLIT = ("N", "T")
SYM2_SPLIT = ("NN", "NT", "T")


def warped_operator_matrices():
    """Symbolic block matrices of delta*, delta, G and 2 delta G.

    Returns a dict with keys ``deltaStar`` (maps one-forms to symmetric
    2-tensors), ``delta``, ``Gg`` and ``delgGg`` (= 2 delta_g G_g), in the
    warped (N, T) / (NN, NT, T) splittings.
    """
    e0, dX = S("e0"), S("dX")
    dlt, dlts, trh, h = S("deltaH"), S("deltaHStar"), S("trH"), S("h")
    gradO, dO = S("gradOmega"), S("dOmega")
    a2, ai2, a1, ai1 = S("alpha2"), S("alphaInv2"), S("alpha"), S("alphaInv")

    delta_star = SplitMatrixOperator(
        SYM2_SPLIT, ONEFORM_SPLIT,
        [
            [e0, -gradO],
            [0.5 * a1 * dX * ai1, 0.5 * e0],
            [_zero(), dlts],
        ],
        WARPED_SYMBOLS,
    )
    delta = SplitMatrixOperator(
        ONEFORM_SPLIT, SYM2_SPLIT,
        [
            [-e0, -ai2 * dlt * a2, _zero()],
            [dO, -e0, -ai1 * dlt * a1],
        ],
        WARPED_SYMBOLS,
    )
    G = SplitMatrixOperator(
        SYM2_SPLIT, SYM2_SPLIT,
        [
            [FormalPoly.const(0.5), _zero(), 0.5 * trh],
            [_zero(), FormalPoly.const(1.0), _zero()],
            [0.5 * h, _zero(), 1 - 0.5 * h * trh],
        ],
        WARPED_SYMBOLS,
    )
    delg_Gg = SplitMatrixOperator(
        ONEFORM_SPLIT, SYM2_SPLIT,
        [
            [-e0, -2 * ai2 * dlt * a2, -e0 * trh],
            [ai2 * dX * a2, -2 * e0, -2 * ai1 * dlt * a1 - dX * trh],
        ],
        WARPED_SYMBOLS,
    )
    return {"deltaStar": delta_star, "delta": delta, "Gg": G,
            "delgGg": delg_Gg}


# ---------------------------------------------------------------------------
# reduced (spherically symmetric) application on an r-grid
# ---------------------------------------------------------------------------

@dataclass
class ReducedScalar:
    """Scalar component e^{s t} f(r) sampled on an r-grid."""

    f: np.ndarray


@dataclass
class ReducedOneFormT:
    """Tangential one-form w = w_TN e^1 (spherical part zero)."""

    tn: np.ndarray


@dataclass
class ReducedSymT:
    """Tangential symmetric tensor v = v_TNN e^1 e^1 + q r^2 gS."""

    tnn: np.ndarray
    q: np.ndarray


@dataclass
class ReducedSection:
    """Block components of a section over the chosen splitting."""

    blocks: list


class ReducedContext:
    """Interprets operator symbols on spherically symmetric sections.

    The time dependence is a fixed multiplicative frequency: sections are
    e^{s_t t} times functions of r sampled on ``r_grid``.
    """

    def __init__(self, b, r_grid, s_t=0.0):
        self.b = b
        self.r = np.asarray(r_grid, dtype=float)
        self.dr = self.r[1] - self.r[0]
        self.s_t = s_t
        self.alpha2 = np.asarray(mf.mu(b, self.r))
        self.alpha = np.sqrt(self.alpha2)
        self.alpha_prime = np.asarray(mf.mu_prime(b, self.r)) / (2.0 * self.alpha)

    def d_r(self, f):
        return mf.grid_deriv(f, 0, self.dr)

    def e0(self, f):
        return self.s_t * f / self.alpha

    def e1(self, f):
        return self.alpha * self.d_r(f)

    def apply_symbol(self, name, val):
        a, ai = self.alpha, 1.0 / self.alpha
        if name in ("alpha", "alphaInv", "alpha2", "alphaInv2"):
            fac = {"alpha": a, "alphaInv": ai, "alpha2": a * a,
                   "alphaInv2": ai * ai}[name]
            return _map_components(val, lambda f: fac * f)
        if name == "e0":
            return _map_components(val, self.e0)
        if name == "dX":
            assert isinstance(val, ReducedScalar)
            return ReducedOneFormT(tn=self.e1(val.f))
        if name == "dOmega":
            assert isinstance(val, ReducedScalar)
            return ReducedOneFormT(tn=self.alpha_prime * val.f)
        if name == "gradOmega":
            assert isinstance(val, ReducedOneFormT)
            return ReducedScalar(f=self.alpha_prime * val.tn)
        if name == "deltaH":
            if isinstance(val, ReducedOneFormT):
                return ReducedScalar(f=-self.e1(self.r**2 * val.tn) / self.r**2)
            assert isinstance(val, ReducedSymT)
            tn = (-self.e1(self.r**2 * val.tnn) / self.r**2
                  + 2.0 * self.alpha * val.q / self.r)
            return ReducedOneFormT(tn=tn)
        if name == "deltaHStar":
            assert isinstance(val, ReducedOneFormT)
            return ReducedSymT(tnn=self.e1(val.tn),
                               q=self.alpha * val.tn / self.r)
        if name == "trH":
            assert isinstance(val, ReducedSymT)
            return ReducedScalar(f=val.tnn + 2.0 * val.q)
        if name == "h":
            assert isinstance(val, ReducedScalar)
            return ReducedSymT(tnn=val.f.copy(), q=val.f.copy())
        raise KeyError("unknown symbol %r" % (name,))

    def zero_like(self, block_name):
        z = np.zeros_like(self.r)
        if block_name in ("N", "NN", "NT-scalar"):
            return ReducedScalar(f=z)
        if block_name == "T1":
            return ReducedOneFormT(tn=z.copy())
        if block_name == "T2":
            return ReducedSymT(tnn=z.copy(), q=z.copy())
        raise KeyError(block_name)


def _map_components(val, fn):
    if isinstance(val, ReducedScalar):
        return ReducedScalar(f=fn(val.f))
    if isinstance(val, ReducedOneFormT):
        return ReducedOneFormT(tn=fn(val.tn))
    if isinstance(val, ReducedSymT):
        return ReducedSymT(tnn=fn(val.tnn), q=fn(val.q))
    raise TypeError(val)


def _add_vals(x, y):
    if x is None:
        return y
    if isinstance(x, ReducedScalar):
        return ReducedScalar(f=x.f + y.f)
    if isinstance(x, ReducedOneFormT):
        return ReducedOneFormT(tn=x.tn + y.tn)
    if isinstance(x, ReducedSymT):
        return ReducedSymT(tnn=x.tnn + y.tnn, q=x.q + y.q)
    raise TypeError(x)


# block kinds for the two splittings used by the warped matrices
_BLOCK_KIND = {"N": "N", "T": "T1", "NN": "NN", "NT": "T1", "T2": "T2"}


def _apply_poly(ctx, poly, val, out_kind):
    """Apply a formal polynomial (sum of operator words) to a block value."""
    out = None
    for word, coeff in poly.terms.items():
        cur = val
        for name in reversed(word):
            cur = ctx.apply_symbol(name, cur)
        cur = _map_components(cur, lambda f: coeff * f)
        out = _add_vals(out, cur)
    if out is None:
        kind = {"N": "N", "T": "T1", "NN": "NN", "NT": "T1", "T": "T2"}[out_kind]
        out = ctx.zero_like({"N": "N", "NN": "NN", "T1": "T1", "T2": "T2"}[kind]
                            if kind in ("N", "NN", "T1", "T2") else kind)
    return out


def apply_block_matrix(ctx, op, section):
    """Apply a SplitMatrixOperator to a ReducedSection."""
    out_blocks = []
    for i, row_name in enumerate(op.row_splitting):
        acc = None
        for j, col_name in enumerate(op.col_splitting):
            e = op.entries[i][j]
            if isinstance(e, (int, float, complex)):
                e = FormalPoly.const(e)
            if e.is_zero():
                continue
            acc = _add_vals(acc, _apply_poly(ctx, e, section.blocks[j], row_name))
        if acc is None:
            kind = {"N": "N", "T": "T1", "NN": "NN", "NT": "T1"}.get(row_name, "T2")
            acc = ctx.zero_like(kind)
        out_blocks.append(acc)
    return ReducedSection(blocks=out_blocks)


def compose_block_matrices(A, B):
    """Formal product A B of two split matrices (word concatenation)."""
    assert A.col_splitting == B.row_splitting
    rows = []
    for i in range(len(A.row_splitting)):
        row = []
        for j in range(len(B.col_splitting)):
            acc = FormalPoly()
            for k in range(len(A.col_splitting)):
                ea = _coerce(A.entries[i][k])
                eb = _coerce(B.entries[k][j])
                acc = acc + ea * eb
            row.append(acc)
        rows.append(row)
    return SplitMatrixOperator(A.row_splitting, B.col_splitting, rows,
                               tuple(set(A.symbols) | set(B.symbols)))


# ---------------------------------------------------------------------------
# trapped-set 10x10 block
# ---------------------------------------------------------------------------

MICROLOCAL_SPLIT_2 = (
    "NN", "NTN", "NTeta", "NTperp",
    "TNN", "TNeta", "TNperp",
    "etaeta", "etaperp", "perpperp",
)

# second symmetric power of the one-form zeroth-order block, constant part
_S2_CONST = np.array([
    [0, -4, 0, 0, 0, 0, 0, 0, 0, 0],
    [-2, 0, -2, 0, -2, 0, 0, 0, 0, 0],
    [0, 2, 0, 0, 0, -2, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, -2, 0, 0, 0],
    [0, -4, 0, 0, 0, -4, 0, 0, 0, 0],
    [0, 0, -2, 0, 2, 0, 0, -2, 0, 0],
    [0, 0, 0, -2, 0, 0, 0, 0, -2, 0],
    [0, 0, 0, 0, 0, 4, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 2, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
], dtype=float)

_MOD_G1A = np.array([
    [2, 0, 4, 0, 2, 0, 0, 2, 0, 2],
    [0, 2, 0, 0, 0, 2, 0, 0, 0, 0],
    [1, 0, 2, 0, -1, 0, 0, 1, 0, -1],
    [0, 0, 0, 2, 0, 0, 0, 0, 2, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
], dtype=float)

_MOD_G1B = np.array([
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 2, 0, 1, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 4, 0, 0, 0, 4, 0, 0, 0, 0],
    [1, 0, 2, 0, -1, 0, 0, 1, 0, -1],
    [0, 0, 0, 2, 0, 0, 0, 0, 2, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
], dtype=float)

_MOD_G2A = np.array([
    [-1, 0, -2, 0, -1, 0, 0, -1, 0, -1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 2, 0, 1, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 2, 0, 1, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 2, 0, 1, 0, 0, 1, 0, 1],
], dtype=float)

_MOD_G2B = np.array([
    [0, -2, 0, 0, 0, -2, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 2, 0, 0, 0, 2, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 2, 0, 0, 0, 2, 0, 0, 0, 0],
], dtype=float)


def trapped_subpr_matrix(gamma1, gamma2, r, alpha, sigma, fprime,
                         factored=False):
    """Skew zeroth-order block at the photon sphere, 10x10.

    Built at trapped-set data (|eta|^2 = alpha^-2 r^2 sigma^2) in the
    eta-refined splitting.  With ``factored`` the prefactor i sigma / r is
    dropped, giving the real constant matrix whose eigenvalues are
    {0 x6, g1' x2, 2 g1', 2 g2'} with gj' = alpha^-2 r gamma_j.
    """
    g1p = gamma1 * r / alpha**2
    g2p = gamma2 * r / alpha**2
    g1pp = gamma1 * r * fprime
    g2pp = gamma2 * r * fprime
    m = (_S2_CONST + 0.5 * g1p * _MOD_G1A - 0.5 * g1pp * _MOD_G1B
         + g2p * _MOD_G2A + g2pp * _MOD_G2B)
    if factored:
        return m
    return (1j * sigma / r) * m


def trapped_char_poly_coeffs(gamma1, gamma2, r, alpha, fprime):
    """Characteristic-polynomial coefficients of the factored 10x10 block."""
    m = trapped_subpr_matrix(gamma1, gamma2, r, alpha, 1.0, fprime,
                             factored=True)
    return np.poly(m)


def _faddeev_charpoly(M):
    """Exact characteristic polynomial by the trace recursion.

    ``M``: square matrix of Fractions.  Returns coefficients [1, c1, ..., cn]
    of lambda^n + c1 lambda^{n-1} + ... + cn, all exact.
    """
    from fractions import Fraction

    n = len(M)
    ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def matmul(A, B):
        return [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)]
                for i in range(n)]

    coeffs = [Fraction(1)]
    Mk = [row[:] for row in ident]
    for k in range(1, n + 1):
        Mk = matmul(M, Mk)
        ck = -sum(Mk[i][i] for i in range(n)) / k
        coeffs.append(ck)
        for i in range(n):
            Mk[i][i] += ck
    return coeffs


def trapped_char_poly_exact(gamma1, gamma2, r, alpha2, fprime):
    """Exact characteristic polynomial of the factored block.

    All inputs are taken as exact rationals (pass Fractions or ints); the
    matrix entries are rational in (gamma1, gamma2, r, alpha^2, F'), so the
    coefficients come out exact.  Returns (coeffs, expected) where expected
    is the closed-form product
    lambda^6 (lambda - g1')^2 (lambda - 2 g1')(lambda - 2 g2').
    """
    from fractions import Fraction

    g1, g2 = Fraction(gamma1), Fraction(gamma2)
    rr, a2, fp = Fraction(r), Fraction(alpha2), Fraction(fprime)
    g1p, g2p = g1 * rr / a2, g2 * rr / a2
    g1pp, g2pp = g1 * rr * fp, g2 * rr * fp
    mats = (
        (_S2_CONST, Fraction(1)),
        (_MOD_G1A, g1p / 2),
        (_MOD_G1B, -g1pp / 2),
        (_MOD_G2A, g2p),
        (_MOD_G2B, g2pp),
    )
    M = [[sum(Fraction(int(mat[i][j])) * w for mat, w in mats)
          for j in range(10)] for i in range(10)]
    coeffs = _faddeev_charpoly(M)
    expected = [Fraction(1)]
    for root in (g1p, g1p, 2 * g1p, 2 * g2p):
        new = [Fraction(0)] * (len(expected) + 1)
        for i, c in enumerate(expected):
            new[i] += c
            new[i + 1] -= c * root
        expected = new
    expected = expected + [Fraction(0)] * 6
    return coeffs, expected


def expected_trapped_char_poly(gamma1, gamma2, r, alpha):
    """Coefficients of lambda^6 (lambda-g1')^2 (lambda-2g1') (lambda-2g2')."""
    g1p = gamma1 * r / alpha**2
    g2p = gamma2 * r / alpha**2
    poly = np.array([1.0])
    for root in (g1p, g1p, 2.0 * g1p, 2.0 * g2p):
        poly = np.convolve(poly, [1.0, -root])
    return np.concatenate([poly, np.zeros(6)])


MICROLOCAL_SPLIT_1 = ("N", "TN", "Teta", "Tperp")


def trapped_oneform_subpr(r, alpha, sigma, eta_scale=1.0, factored=False):
    """Zeroth-order skew block on one-forms at the photon sphere, 4x4.

    ``eta_scale`` scales the spherical momentum relative to its trapped
    value; at 0 only the time-radial coupling survives.
    """
    m = np.array([
        [0.0, -2.0, 0.0, 0.0],
        [-2.0, 0.0, -2.0 * eta_scale, 0.0],
        [0.0, 2.0 * eta_scale, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])
    if factored:
        return m
    return (1j * sigma / r) * m


_SYM2_PAIRS = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3),
               (2, 2), (2, 3), (3, 3)]


def sym2_lift(A):
    """Induced derivation on symmetric 2-tensors of a 4x4 fiber operator.

    Basis order matches the 10-way microlocal splitting: for i < j the
    basis element is the symmetrized product with weight 2, so a tensor
    with coefficient vector c corresponds to the symmetric matrix T with
    T_ii = c_(ii) and T_ij = c_(ij); the derivation acts by
    T -> A T + T A^T.
    """
    A = np.asarray(A)
    n = len(_SYM2_PAIRS)
    out = np.zeros((n, n), dtype=np.result_type(A.dtype, float))
    for col, (i, j) in enumerate(_SYM2_PAIRS):
        T = np.zeros((4, 4), dtype=out.dtype)
        T[i, j] = T[j, i] = 1.0
        Tp = A @ T + T @ A.T
        for row, (p, q) in enumerate(_SYM2_PAIRS):
            out[row, col] = Tp[p, q]
    return out


# ---------------------------------------------------------------------------
# radial-point 7x7 block
# ---------------------------------------------------------------------------

RADIAL_SPLIT = ("NN", "NTN", "NTT", "TNN", "TNT", "TTtrace", "TTfree")


def radial_subpr_block(gamma1, gamma2, kappa, c_pm=0.0, sign=+1):
    """Constant 7x7 matrix of the skew part at a horizon conormal.

    ``sign`` +1 selects the outer, -1 the inner horizon; ``c_pm`` is the
    horizon-chart interpolation coefficient, which moves only nilpotent
    entries and leaves the spectrum unchanged.
    """
    s = float(np.sign(sign))
    kap = float(kappa)
    m = 2.0 * kap * np.diag([0.0, 2.0, 1.0, 4.0, 3.0, 2.0, 2.0])
    g1 = np.zeros((7, 7))
    g1[0, 0] = 2.0
    g1[1, 0] = -s * c_pm
    g1[1, 5] = s * 0.5
    g1[2, 2] = 1.0
    g1[3, 5] = -c_pm
    g1[4, 2] = -s * c_pm
    g2 = np.zeros((7, 7))
    g2[1, 0] = s * 2.0 * c_pm
    g2[1, 5] = -s * 1.0
    g2[5, 0] = -2.0 * c_pm
    g2[5, 5] = 1.0
    return m + gamma1 * g1 + gamma2 * g2


def radial_subpr_eigenvalues(gamma1, gamma2, kappa, c_pm=0.0, sign=+1):
    """Eigenvalues of the radial skew block, sorted ascending (real parts)."""
    m = radial_subpr_block(gamma1, gamma2, kappa, c_pm, sign)
    ev = np.linalg.eigvals(m)
    return np.sort_complex(ev)


def expected_radial_eigenvalues(gamma1, gamma2, kappa):
    """The closed-form list {2g1, 4k, 2k+g1, 8k, 6k, 4k+g2, 4k}, sorted."""
    vals = np.array([
        2.0 * gamma1, 4.0 * kappa, 2.0 * kappa + gamma1, 8.0 * kappa,
        6.0 * kappa, 4.0 * kappa + gamma2, 4.0 * kappa,
    ], dtype=complex)
    return np.sort_complex(vals)


# ---------------------------------------------------------------------------
# frame-change (conjugation) matrices
# ---------------------------------------------------------------------------

def conjugation_matrices(alpha, sign=+1):
    """Frame changes between alpha-orthonormal and horizon-regular frames.

    Returns a dict with the 3x3 one-form matrices C1, C1inv and the 6x6
    symmetric-tensor lifts C2, C2inv; ``sign`` selects the horizon branch.
    """
    s = float(np.sign(sign))
    a = float(alpha)
    ai = 1.0 / a
    C1 = np.array([
        [ai, 0.0, 0.0],
        [-s * ai, a, 0.0],
        [0.0, 0.0, 1.0],
    ])
    C1inv = np.array([
        [a, 0.0, 0.0],
        [s * ai, ai, 0.0],
        [0.0, 0.0, 1.0],
    ])
    C2 = np.array([
        [ai * ai, 0, 0, 0, 0, 0],
        [-s * ai * ai, 1, 0, 0, 0, 0],
        [0, 0, ai, 0, 0, 0],
        [ai * ai, -s * 2, 0, a * a, 0, 0],
        [0, 0, -s * ai, 0, a, 0],
        [0, 0, 0, 0, 0, 1],
    ])
    C2inv = np.array([
        [a * a, 0, 0, 0, 0, 0],
        [s, 1, 0, 0, 0, 0],
        [0, 0, a, 0, 0, 0],
        [ai * ai, s * 2 * ai * ai, 0, ai * ai, 0, 0],
        [0, 0, s * ai, 0, ai, 0],
        [0, 0, 0, 0, 0, 1],
    ])
    return {"C1": C1, "C1inv": C1inv, "C2": C2, "C2inv": C2inv}


def conjugated_time_block(alpha, mu_prime, sign=+1):
    """C1^-1 [x - mu'/2 offdiag] C1 with x treated as a commuting slot.

    Returns the pair (diag_shift, offdiag) where the conjugated matrix is
    x I + diag(diag_shift) + offdiag; at the horizon (alpha -> 0) the
    off-diagonal part vanishes and the shifts are (+-mu'/2, -+mu'/2, 0).
    """
    cm = conjugation_matrices(alpha, sign)
    P = np.array([
        [0.0, -0.5 * mu_prime, 0.0],
        [-0.5 * mu_prime, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ])
    M = cm["C1inv"] @ P @ cm["C1"]
    diag_shift = np.diag(M).copy()
    off = M - np.diag(diag_shift)
    return diag_shift, off


# ---------------------------------------------------------------------------
# rotational l = 1 identity
# ---------------------------------------------------------------------------

def vector_l1_identity(lam, mass, r_grid=None, tol=1e-8):
    """Fit C in  r d(f/r) = C r^-3 (dr ^ dt)  for f = (lam r/3 + 2M/r^2) dt.

    The 2d exterior derivative is taken in the (t, r) plane by 4th-order
    central differencing with per-point steps proportional to r (the
    profile steepens like r^-4 inward); the orientation of the area form is
    fixed to dr ^ dt.

    Returns
    -------
    C : float
    diagnostics : dict
        Contains the pointwise fitted coefficients and the log-log slope.

    Raises
    ------
    FitFailure
        If the r-profile deviates from r^-3 beyond ``tol`` (relative).
    """
    if r_grid is None:
        b = mf.BlackHoleParams(lam, mass) if mass > 0 else None
        if b is not None:
            hz = mf.find_horizons(b)
            r_grid = np.linspace(hz.r_minus * 1.05, hz.r_plus * 0.95, 129)
        else:
            r_grid = np.linspace(0.2, 0.8, 129)
    r = np.asarray(r_grid, dtype=float)

    def f_over_r(rr):
        return lam / 3.0 + 2.0 * mass / rr**3

    h = 1e-3 * r
    d = (-f_over_r(r + 2 * h) + 8.0 * f_over_r(r + h)
         - 8.0 * f_over_r(r - h) + f_over_r(r - 2 * h)) / (12.0 * h)
    # d(f/r) = (d/dr)(f/r) dr ^ dt ; coefficient on the dr ^ dt area form
    w = r * d
    coef = w * r**3
    C = float(np.mean(coef))
    dev = float(np.max(np.abs(coef - C)))
    scale = max(abs(C), float(np.max(np.abs(w))) * float(np.min(r)) ** 3, 1e-12)
    if dev > tol * scale:
        raise FitFailure("profile deviates from r^-3: %.3g rel" % (dev / scale))
    if mass > 0:
        slope = np.polyfit(np.log(r), np.log(np.abs(w)), 1)[0]
    else:
        slope = float("nan")
    return C, {"coef": coef, "loglog_slope": slope}
