"""Fock-basis density-matrix elements and multiphoton correlations.

The two-detector field state is a Gaussian mixture of two-mode coherent
states, so each matrix element <N,M|rho|K,L> reduces to a finite
combination of bivariate Gaussian moments

    p(N, M) = (1 / pi sqrt(n1 n2 (1-g^2)))
              * integral a^N b^M exp(-x a^2 - y b^2 + 2 z a b + u a + v b + w)

taken once with the real parts of (mu1, mu2) as shift parameters and
once with the imaginary parts.  Eliminating the cross term collapses the
bivariate moment to a single alternating sum over products of
one-dimensional Gaussian moments (see :func:`qgs.specfun.moment_ladder`).

Accuracy strategy: all sums run in double-double with cancellation
certification.  The alternating k-sum is evaluated in a rescaled form,

    sum_k C(M,k) (-1)^k (z/y)^(M-k) f(x - z^2/y, -(u + v z/y), N+M-k) f(y, v, k),

algebraically identical to the direct substitution result but bounded as
z -> 0, where it reduces exactly to the separable product
f(x,-u,N) f(y,-v,M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import ddouble as dd
from .ddouble import DDSum, dd_add, dd_div, dd_mul, dd_mul_d, two_prod
from .errors import (
    CertificationError,
    DegeneracyError,
    DomainError,
    InsufficientCountsError,
    PrecisionLossError,
    TruncationError,
)
from .source_model import TwoPointParams, mu_tilde, split_angles
from .specfun import binomial, moment_ladder

DEFAULT_MAX_ORDER = 64
DEFAULT_TAIL_TOL = 1e-6
DEFAULT_MARGINAL_FLOOR = 1e-12
_MIN_SURVIVING_DIGITS = 6.0


@dataclass(frozen=True)
class FockIndex:
    """Index (N, M, K, L) of the projector |N,M><K,L|."""

    N: int
    M: int
    K: int
    L: int

    def __post_init__(self) -> None:
        if min(self.N, self.M, self.K, self.L) < 0:
            raise DomainError("Fock indices must be nonnegative")

    @property
    def order(self) -> int:
        return self.N + self.M + self.K + self.L


@dataclass(frozen=True)
class CoeffSet:
    """Quadratic-form coefficients of one bivariate moment integral.

    Carries xy - z^2 separately because forming it from x, y, z loses
    most significant digits as g -> 1.
    """

    x: float
    y: float
    z: float
    u: float
    v: float
    w: float
    xy_minus_z2: float | None = None

    def __post_init__(self) -> None:
        if not (self.x > 0 and self.y > 0):
            raise DomainError("CoeffSet requires x > 0 and y > 0")
        if self.discriminant() <= 0:
            raise DomainError("CoeffSet requires x y > z^2 for convergence")

    def discriminant(self) -> float:
        if self.xy_minus_z2 is not None:
            return self.xy_minus_z2
        return self.x * self.y - self.z * self.z


@dataclass(frozen=True)
class JointPND:
    """Truncated joint photon-number distribution p(N, M).

    p is a (n_max+1) x (n_max+1) matrix of diagonal matrix elements;
    tail_mass certifies the probability weight beyond the truncation.
    """

    n_max: int
    p: np.ndarray
    tail_mass: float
    params: TwoPointParams


def coeffs(p: TwoPointParams, component: str) -> CoeffSet:
    """Coefficient set for the real-part or imaginary-part moment integral.

    component selects which projections of (mu1, mu2) act as the shift
    parameters (mu, eta) of the bivariate Gaussian.
    """
    if component == "real":
        mu, eta = p.mu1.real, p.mu2.real
    elif component == "imag":
        mu, eta = p.mu1.imag, p.mu2.imag
    else:
        raise DomainError(f"component must be 'real' or 'imag', got {component!r}")
    if p.is_degenerate:
        raise DegeneracyError("coefficient set undefined at g = 1")
    one_m_g2 = (1.0 - p.g) * (1.0 + p.g)
    xm1 = 1.0 / (p.n1 * one_m_g2)
    ym1 = 1.0 / (p.n2 * one_m_g2)
    z = p.g / (math.sqrt(p.n1 * p.n2) * one_m_g2)
    u = 2.0 * (mu * xm1 - eta * z)
    v = 2.0 * (eta * ym1 - mu * z)
    w = 2.0 * mu * eta * z - xm1 * mu * mu - ym1 * eta * eta
    # xy - z^2 = (1 + n1 + n2 + n1 n2 (1-g^2)) / (n1 n2 (1-g^2)), exact form
    disc = (1.0 + p.n1 + p.n2 + p.n1 * p.n2 * one_m_g2) / (p.n1 * p.n2 * one_m_g2)
    return CoeffSet(x=1.0 + xm1, y=1.0 + ym1, z=z, u=u, v=v, w=w, xy_minus_z2=disc)


class MomentTable:
    """Lazy ladder cache of bivariate Gaussian moments for one coefficient set.

    value_dd(N, M) returns the raw integral (including the e^w factor) as
    a double-double pair; max_loss_digits records the worst cancellation
    seen in any alternating k-sum evaluated so far.
    """

    def __init__(self, c: CoeffSet):
        self.c = c
        self._f1 = None
        self._f2 = None
        self._zy_pow = None
        self._ew = math.exp(c.w)
        self.max_loss_digits = 0.0
        # a1 = x - z^2/y = (xy - z^2)/y, formed from the exact discriminant
        self._a1 = dd_div(c.discriminant(), 0.0, c.y, 0.0)
        # b1 = -(u + v z / y)
        ph, pl = two_prod(c.v, c.z)
        ph, pl = dd_div(ph, pl, c.y, 0.0)
        ph, pl = dd_add(ph, pl, c.u, 0.0)
        self._b1 = -ph, -pl
        self._zy = dd_div(c.z, 0.0, c.y, 0.0)

    def _ensure(self, order: int) -> None:
        have = -1 if self._f1 is None else self._f1[0].size - 1
        if order <= have:
            return
        order = max(order, 2 * have, 8)
        self._f1 = moment_ladder(self._a1, self._b1, order)
        self._f2 = moment_ladder((self.c.y, 0.0), (self.c.v, 0.0), order)
        zyh = np.zeros(order + 1)
        zyl = np.zeros(order + 1)
        zyh[0] = 1.0
        for j in range(1, order + 1):
            zyh[j], zyl[j] = dd_mul(zyh[j - 1], zyl[j - 1], *self._zy)
        self._zy_pow = zyh, zyl

    def value_dd(self, N: int, M: int):
        if N < 0 or M < 0:
            raise DomainError("moment orders must be nonnegative")
        c = self.c
        if c.z == 0.0:
            fa = moment_ladder((c.x, 0.0), (-c.u, 0.0), N)
            fb = moment_ladder((c.y, 0.0), (-c.v, 0.0), M)
            vh, vl = dd_mul(fa[0][N], fa[1][N], fb[0][M], fb[1][M])
            return dd_mul_d(vh, vl, self._ew)
        if c.z < 0.0:
            # mirror beta -> -beta onto the positive-z branch
            mirrored = CoeffSet(
                x=c.x, y=c.y, z=-c.z, u=c.u, v=-c.v, w=c.w, xy_minus_z2=c.xy_minus_z2
            )
            vh, vl = MomentTable(mirrored).value_dd(N, M)
            return (vh, vl) if M % 2 == 0 else (-vh, -vl)
        self._ensure(N + M)
        f1h, f1l = self._f1
        f2h, f2l = self._f2
        zyh, zyl = self._zy_pow
        ks = np.arange(M + 1)
        ch = np.zeros(M + 1)
        cl = np.zeros(M + 1)
        for k in ks:
            sgn = -1 if k & 1 else 1
            ch[k], cl[k] = dd.dd_from_int(sgn * math.comb(M, k))
        th, tl = dd_mul(ch, cl, zyh[M - ks], zyl[M - ks])
        th, tl = dd_mul(th, tl, f1h[N + M - ks], f1l[N + M - ks])
        th, tl = dd_mul(th, tl, f2h[ks], f2l[ks])
        acc = DDSum()
        acc.add_array(th, tl)
        self.max_loss_digits = max(self.max_loss_digits, acc.loss_digits())
        return dd_mul_d(acc.hi, acc.lo, self._ew)

    def value(self, N: int, M: int) -> float:
        return self.value_dd(N, M)[0]


def moment_integral_closed(c: CoeffSet, N: int, M: int) -> float:
    """Bivariate moment integral of a^N b^M against exp(-x a^2 - y b^2 + 2 z a b + u a + v b + w)."""
    return MomentTable(c).value(N, M)


@lru_cache(maxsize=4096)
def _phase_poly(N: int, K: int):
    """Integer coefficients c_t of (1 - q)^N (1 + q)^K for t = 0 .. N+K.

    These are the partial binomial sums shared by all quadruple-sum terms
    with equal total power t = n + k; each carries the quadrant phase
    i^(K - N - t).  Exact integers, stored as double-double pairs.
    """
    poly = [1]
    for _ in range(N):
        prev = poly
        poly = [0] * (len(prev) + 1)
        for i, cv in enumerate(prev):
            poly[i] += cv
            poly[i + 1] -= cv
    for _ in range(K):
        prev = poly
        poly = [0] * (len(prev) + 1)
        for i, cv in enumerate(prev):
            poly[i] += cv
            poly[i + 1] += cv
    hh = np.zeros(len(poly))
    ll = np.zeros(len(poly))
    for i, cv in enumerate(poly):
        hh[i], ll[i] = dd.dd_from_int(cv)
    hh.setflags(write=False)
    ll.setflags(write=False)
    return hh, ll


class _ElementEngine:
    """Shared moment tables and element assembly for one parameter set."""

    def __init__(self, params: TwoPointParams):
        if params.is_degenerate:
            raise DegeneracyError("matrix elements via moment sums require g < 1")
        self.params = params
        self.re = MomentTable(coeffs(params, "real"))
        self.im = MomentTable(coeffs(params, "imag"))
        one_m_g2 = (1.0 - params.g) * (1.0 + params.g)
        self._norm = 1.0 / (math.pi * math.sqrt(params.n1 * params.n2 * one_m_g2))
        self._ptab: dict[str, tuple] = {}

    def warm(self, tmax: int, smax: int) -> None:
        self._p_table("real", tmax, smax)
        self._p_table("imag", tmax, smax)

    def _p_table(self, which: str, tmax: int, smax: int):
        """Normalized moment table P[t, s] as double-double arrays."""
        tab = self._ptab.get(which)
        if tab is not None and tab[0].shape[0] > tmax and tab[0].shape[1] > smax:
            return tab
        nt = tmax + 1 if tab is None else max(tmax + 1, 2 * tab[0].shape[0])
        ns = smax + 1 if tab is None else max(smax + 1, 2 * tab[0].shape[1])
        src = self.re if which == "real" else self.im
        ph = np.zeros((nt, ns))
        pl = np.zeros((nt, ns))
        for t in range(nt):
            for s in range(ns):
                vh, vl = src.value_dd(t, s)
                ph[t, s], pl[t, s] = dd_mul_d(vh, vl, self._norm)
        self._ptab[which] = (ph, pl)
        return ph, pl

    def element_dd(self, idx: FockIndex):
        """Matrix element <N,M|rho|K,L> as (re_dd, im_dd, loss_digits)."""
        N, M, K, L = idx.N, idx.M, idx.K, idx.L
        tmax, smax = N + K, M + L
        prh, prl = self._p_table("real", tmax, smax)
        pih, pil = self._p_table("imag", tmax, smax)
        c1h, c1l = _phase_poly(N, K)
        c2h, c2l = _phase_poly(M, L)

        # term(t, s) = c1[t] c2[s] P_re[t, s] P_im[tmax - t, smax - s],
        # carrying quadrant phase i^(K - N + L - M - t - s)
        th, tl = dd_mul(
            prh[: tmax + 1, : smax + 1],
            prl[: tmax + 1, : smax + 1],
            pih[tmax::-1, smax::-1][: tmax + 1, : smax + 1],
            pil[tmax::-1, smax::-1][: tmax + 1, : smax + 1],
        )
        outh, outl = dd_mul(c1h[:, None], c1l[:, None], c2h[None, :], c2l[None, :])
        th, tl = dd_mul(th, tl, outh, outl)

        base = (K - N + L - M) % 4
        tt, ss = np.meshgrid(np.arange(tmax + 1), np.arange(smax + 1), indexing="ij")
        quad = (base - tt - ss) % 4
        acc_re = DDSum()
        acc_im = DDSum()
        for q, acc, sgn in (
            (0, acc_re, 1.0),
            (2, acc_re, -1.0),
            (1, acc_im, 1.0),
            (3, acc_im, -1.0),
        ):
            mask = quad == q
            if np.any(mask):
                acc.add_array(sgn * th[mask], sgn * tl[mask])

        scale = math.exp(
            -0.5
            * (math.lgamma(N + 1) + math.lgamma(M + 1) + math.lgamma(K + 1) + math.lgamma(L + 1))
        )
        re = dd_mul_d(acc_re.hi, acc_re.lo, scale)
        im = dd_mul_d(acc_im.hi, acc_im.lo, scale)
        if not (math.isfinite(re[0]) and math.isfinite(im[0])):
            raise CertificationError(f"element {idx} is not finite")

        # certify cancellation relative to the full element magnitude
        mag = max(abs(acc_re.hi), abs(acc_im.hi))
        total_abs = acc_re.abs_sum + acc_im.abs_sum
        loss = 0.0
        if mag > 0.0 and total_abs > 0.0:
            loss = max(0.0, math.log10(total_abs / mag))
        loss += self.re.max_loss_digits + self.im.max_loss_digits
        if mag > 0.0 and dd.DD_DIGITS - loss < _MIN_SURVIVING_DIGITS:
            raise PrecisionLossError(
                f"element {idx}: only {dd.DD_DIGITS - loss:.1f} digits survive cancellation"
            )
        return re, im, loss


@lru_cache(maxsize=32)
def _engine(params: TwoPointParams) -> _ElementEngine:
    return _ElementEngine(params)


def rho_element(
    p: TwoPointParams, idx: FockIndex, max_order: int = DEFAULT_MAX_ORDER
) -> complex:
    """Closed-form density-matrix element <N,M|rho|K,L>.

    Diagonal elements (N = K, M = L) are the joint photon-number
    probabilities; they are real and nonnegative up to certified roundoff.
    """
    if idx.order > max_order:
        raise DomainError(
            f"index order {idx.order} exceeds configured maximum {max_order}"
        )
    re, im, _ = _engine(p).element_dd(idx)
    return complex(re[0], im[0])


def rho_element_quadrature(
    p: TwoPointParams, idx: FockIndex, nodes: int | None = None, certify: bool = True
) -> complex:
    """Direct tensor-product quadrature of the matrix-element integral.

    Independent numerical oracle: brings the Gaussian weight of the
    4-dimensional field integral to standard form and applies a
    Gauss-Hermite grid that is exact for the polynomial part.  Certified
    by node refinement.
    """
    if p.is_degenerate:
        raise DegeneracyError("quadrature oracle requires g < 1")
    N, M, K, L = idx.N, idx.M, idx.K, idx.L
    if idx.order > 20:
        raise DomainError("quadrature oracle supports N+M+K+L <= 20")
    if nodes is None:
        nodes = max(10, (idx.order + 2) // 2 + 4)

    def evaluate(nq: int) -> complex:
        gb = p.g * math.sqrt(p.n1 * p.n2)
        gamma = 0.5 * np.array(
            [
                [p.n1, 0.0, gb, 0.0],
                [0.0, p.n1, 0.0, gb],
                [gb, 0.0, p.n2, 0.0],
                [0.0, gb, 0.0, p.n2],
            ]
        )
        mu = np.array([p.mu1.real, p.mu1.imag, p.mu2.real, p.mu2.imag])
        gi = np.linalg.inv(gamma)
        a_mat = gi + 2.0 * np.eye(4)
        m = np.linalg.solve(a_mat, gi @ mu)
        c0 = 0.5 * m @ a_mat @ m - 0.5 * mu @ gi @ mu
        chol = np.linalg.cholesky(a_mat)
        b_mat = math.sqrt(2.0) * np.linalg.inv(chol).T
        t, wt = np.polynomial.hermite.hermgauss(nq)
        grid = np.stack(np.meshgrid(t, t, t, t, indexing="ij"), axis=-1).reshape(-1, 4)
        weights = (
            wt[:, None, None, None]
            * wt[None, :, None, None]
            * wt[None, None, :, None]
            * wt[None, None, None, :]
        ).reshape(-1)
        r = m + grid @ b_mat.T
        alpha = r[:, 0] + 1j * r[:, 1]
        beta = r[:, 2] + 1j * r[:, 3]
        poly = np.conj(alpha) ** N * alpha**K * np.conj(beta) ** M * beta**L
        pref = (
            math.exp(c0)
            * abs(np.linalg.det(b_mat))
            / (4.0 * math.pi**2 * math.sqrt(np.linalg.det(gamma)))
        )
        scale = math.exp(
            -0.5
            * (math.lgamma(N + 1) + math.lgamma(M + 1) + math.lgamma(K + 1) + math.lgamma(L + 1))
        )
        return pref * scale * complex(np.sum(weights * poly))

    val = evaluate(nodes)
    if certify:
        ref = evaluate(nodes + 4)
        if abs(val - ref) > 1e-8 * (1.0 + abs(ref)):
            raise CertificationError(
                f"quadrature for {idx} did not converge: {val} vs {ref}"
            )
        val = ref
    return val


def single_mode_pnd(nbar: float, mu: complex, n_max: int) -> np.ndarray:
    """Photon-number distribution of one coherent + thermal mode.

    Laguerre closed form; reduces to Bose-Einstein at mu = 0 and to
    Poisson at nbar = 0.  Serves as the independent marginal oracle.
    """
    if nbar < 0:
        raise DomainError(f"nbar must be nonnegative, got {nbar}")
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    m2 = abs(mu) ** 2
    ns = np.arange(n_max + 1)
    if nbar == 0.0:
        if m2 == 0.0:
            out = np.zeros(n_max + 1)
            out[0] = 1.0
            return out
        logp = -m2 + ns * math.log(m2) - np.array([math.lgamma(n + 1) for n in ns])
        return np.exp(logp)
    # L_n(-xl) by upward recurrence; every term positive for xl >= 0
    xl = m2 / (nbar * (1.0 + nbar))
    lag = np.zeros(n_max + 1)
    lag[0] = 1.0
    if n_max >= 1:
        lag[1] = 1.0 + xl
    for n in range(1, n_max):
        lag[n + 1] = ((2 * n + 1 + xl) * lag[n] - n * lag[n - 1]) / (n + 1)
    ratio = nbar / (1.0 + nbar)
    return ratio**ns / (1.0 + nbar) * math.exp(-m2 / (1.0 + nbar)) * lag


def _marginal_tail_order(
    p: TwoPointParams, n_start: int, tail_tol: float, hard_cap: int
) -> int:
    """Smallest n_max with certified joint tail below tail_tol.

    P(N > n or M > n) is bounded by the sum of the two marginal tails,
    and the marginals are displaced-thermal regardless of g.
    """
    n = max(n_start, 1)
    while n <= hard_cap:
        t1 = 1.0 - float(np.sum(single_mode_pnd(p.n1, p.mu1, n)))
        t2 = 1.0 - float(np.sum(single_mode_pnd(p.n2, p.mu2, n)))
        if t1 + t2 < 0.5 * tail_tol:
            return n
        n += max(2, n // 4)
    raise TruncationError(
        f"tail tolerance {tail_tol} not reachable below n_max = {hard_cap}"
    )


def joint_pnd_degenerate(p: TwoPointParams, n_max: int) -> np.ndarray:
    """Joint distribution in the g = 1 limit: split displaced-thermal light.

    A single mode of total thermal weight n1 + n2 and amplitude mu-tilde
    is divided binomially with ratio n1/(n1+n2).  Requires consistent
    rescaled amplitudes at the two detectors.
    """
    mt1, mt2 = mu_tilde(p)
    scale = max(abs(mt1), abs(mt2), 1.0)
    if abs(mt1 - mt2) > 1e-8 * scale:
        raise DegeneracyError(
            "g = 1 limit requires matching rescaled amplitudes at both detectors"
        )
    ct, st = split_angles(p)
    c2, s2 = ct * ct, st * st
    total = single_mode_pnd(p.n1 + p.n2, mt1, 2 * n_max)
    out = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            out[n, m] = total[n + m] * math.comb(n + m, n) * c2**n * s2**m
    return out


def joint_pnd(
    p: TwoPointParams,
    n_max: int,
    tail_tol: float = DEFAULT_TAIL_TOL,
    hard_cap: int = 40,
) -> JointPND:
    """Joint photon-number distribution, truncation chosen adaptively.

    n_max is a floor (requested indices stay available); the truncation
    grows until the certified tail mass falls below tail_tol or the hard
    cap is hit.  The g = 1 limit dispatches to the exact split law.
    """
    n_eff = _marginal_tail_order(p, n_max, tail_tol, max(hard_cap, n_max))
    if p.is_degenerate:
        mat = joint_pnd_degenerate(p, n_eff)
    else:
        eng = _engine(p)
        eng.warm(2 * n_eff, 2 * n_eff)
        mat = np.zeros((n_eff + 1, n_eff + 1))
        for n in range(n_eff + 1):
            for m in range(n_eff + 1):
                re, _, _ = eng.element_dd(FockIndex(n, m, n, m))
                mat[n, m] = re[0]
    min_val = float(mat.min())
    if min_val < -1e-12:
        raise CertificationError(
            f"joint distribution has a significantly negative cell: {min_val}"
        )
    mat = np.clip(mat, 0.0, None)
    tail = 1.0 - float(mat.sum())
    if tail >= tail_tol:
        raise TruncationError(
            f"tail mass {tail:.3e} above tolerance {tail_tol} at n_max = {n_eff}"
        )
    return JointPND(n_max=n_eff, p=mat, tail_mass=tail, params=p)


def wavepacket_g2(
    pnd: JointPND, N: int, M: int, marginal_floor: float = DEFAULT_MARGINAL_FLOOR
) -> float:
    """Correlation of N-photon wavepackets at detector 1 with M-photon at 2.

    p(N, M) normalized by the product of the marginal wavepacket
    probabilities, all sums truncated at the certified n_max.
    """
    if N > pnd.n_max or M > pnd.n_max or N < 0 or M < 0:
        raise DomainError(f"pair ({N}, {M}) outside truncation n_max = {pnd.n_max}")
    row = float(np.sum(pnd.p[N, :]))
    col = float(np.sum(pnd.p[:, M]))
    if row < marginal_floor or col < marginal_floor:
        raise InsufficientCountsError(
            f"marginal probability below floor {marginal_floor:g} for pair ({N}, {M})"
        )
    return float(pnd.p[N, M]) / (row * col)


def classical_g2(pnd: JointPND) -> float:
    """Intensity correlation <n1 n2> / (<n1> <n2>) from the joint distribution."""
    ns = np.arange(pnd.n_max + 1, dtype=float)
    mean1 = float(ns @ pnd.p.sum(axis=1))
    mean2 = float(pnd.p.sum(axis=0) @ ns)
    cross = float(ns @ pnd.p @ ns)
    if mean1 <= 0 or mean2 <= 0:
        raise DomainError("mean photon numbers vanish; correlation undefined")
    return cross / (mean1 * mean2)


def classical_g2_closed(p: TwoPointParams) -> float:
    """Second route to the intensity correlation, via Gaussian field moments.

    For the coherent + thermal field the pairing expansion of the fourth
    field moment gives
      <I1 I2> = <I1><I2> + g^2 n1 n2 + 2 g sqrt(n1 n2) Re(mu1* mu2).
    """
    i1 = abs(p.mu1) ** 2 + p.n1
    i2 = abs(p.mu2) ** 2 + p.n2
    cross = (
        i1 * i2
        + p.g * p.g * p.n1 * p.n2
        + 2.0 * p.g * math.sqrt(p.n1 * p.n2) * (p.mu1.conjugate() * p.mu2).real
    )
    return cross / (i1 * i2)


def vacuum_identity_check(n_max: int) -> bool:
    """Exact-arithmetic check that sum_k (-1)^k C(n,k) collapses to 0^n."""
    if n_max > 64:
        raise DomainError("vacuum identity check supports n_max <= 64")
    for n in range(n_max + 1):
        total = sum((-1) ** k * binomial(n, k) for k in range(n + 1))
        if total != (1 if n == 0 else 0):
            return False
    return True
