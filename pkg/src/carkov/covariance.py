"""Closed-form covariance analysis via residue calculus.

The covariance of the process is the Fourier integral

    r(t) = integral e^{izt} / |P(z)|^2 dz          (no 2*pi prefactor)

where |P(z)|^2, continued to complex z, is the degree 2k+2 polynomial
Q(z) = P(z) * conj(P(conj(z))) with roots {zeta_j} in the upper half plane
and {conj(zeta_j)} below. Closing the contour upward for t > 0 turns r
into a finite sum of polynomial-times-exponential terms

    r(t) = sum_g sum_{p < m_g} coef_{g,p} * t^p * e^{i zeta_g t},

one group per distinct root zeta_g of multiplicity m_g. Writing
Q(zeta_g + w) = w^{m_g} * Qt(w), the coefficients come from the truncated
reciprocal power series s(w) = 1 / Qt(w) mod w^{m_g}:

    coef_{g,p} = 2*pi*i * (i^p / p!) * s_{m_g - 1 - p}.

Everything else in this module (derivatives, moments at the origin, the
one-sided top derivative, interpolation coefficients) is exact algebra on
that term list. An independent quadrature oracle evaluates the same
quantities directly from the spectral integral for cross-checking.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .errors import (
    CarkovError,
    NearDegenerateRoots,
    NotConverged,
    OrderTooHigh,
    SingularGram,
)
from .model import RootSpec, abs_p_squared

#: distinct roots closer than this (relative to max |root|) are rejected;
#: the caller must merge them into a true multiplicity
DEGENERACY_TOL = 1e-6

#: quadrature oracle accuracy, relative to max(1, r(0)), for |t| <= 10
QUAD_REL_TOL = 1e-6

#: odd derivative moments below this (relative to r(0)) snap to zero
ODD_MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class CovarianceModel:
    """Term list for r(t) on t >= 0, plus the derivative count k.

    Each term is a tuple (coef, root, power) contributing
    coef * t^power * e^{i * root * t}; the sum is real for real t.
    """

    terms: tuple[tuple[complex, complex, int], ...]
    k: int


@dataclass(frozen=True)
class SpectralMoments:
    """Derivative moments of r at the origin.

    even_moments[j] = r^(j)(0) for j = 0..2k (odd entries are exact
    zeros); top_plus is the one-sided limit of r^(2k+1) as t -> 0+.
    """

    even_moments: tuple[float, ...]
    top_plus: float

    @property
    def k(self) -> int:
        return (len(self.even_moments) - 1) // 2


def _mul_linear_truncated(poly: np.ndarray, a: complex, b: complex) -> np.ndarray:
    """Multiply a truncated power series by (a + b*w), dropping high orders."""
    out = a * poly
    out[1:] += b * poly[:-1]
    return out


def residue_expansion(spec: RootSpec) -> CovarianceModel:
    """Expand the covariance into polynomial-times-exponential terms.

    Parameters
    ----------
    spec : RootSpec
        Validated root set and scale.

    Returns
    -------
    CovarianceModel
        Terms grouped by distinct root in canonical order, powers
        0..m-1 within each group.

    Raises
    ------
    NearDegenerateRoots
        If two distinct roots are closer than DEGENERACY_TOL relative to
        the largest root magnitude. Exactly equal roots are fine; they
        form a single higher-multiplicity group.
    """
    roots = sorted(spec.roots, key=lambda z: (z.imag, z.real))
    groups: list[list] = []
    for z in roots:
        if groups and z == groups[-1][0]:
            groups[-1][1] += 1
        else:
            groups.append([z, 1])

    max_mag = max(abs(z) for z in roots)
    tol = DEGENERACY_TOL * max_mag
    for gi in range(len(groups)):
        for gj in range(gi + 1, len(groups)):
            gap = abs(groups[gi][0] - groups[gj][0])
            if gap < tol:
                raise NearDegenerateRoots(
                    f"distinct roots {groups[gi][0]} and {groups[gj][0]} are "
                    f"{gap:.3e} apart (< {tol:.3e}); merge them into a "
                    "multiplicity"
                )

    c2 = spec.scale**2
    terms: list[tuple[complex, complex, int]] = []
    for zg, m in groups:
        # Qt(w) = Q(zg + w) / w^m as a power series truncated to order m-1.
        # The group's own factor (1 - z/zg)^m contributes (-1/zg)^m * w^m,
        # every other linear factor (1 - z/xi) contributes (a + b*w) with
        # a = 1 - zg/xi and b = -1/xi.
        poly = np.zeros(m, dtype=complex)
        poly[0] = c2 * (-1.0 / zg) ** m
        for _ in range(m):
            xi = zg.conjugate()
            poly = _mul_linear_truncated(poly, 1.0 - zg / xi, -1.0 / xi)
        for zh, mh in groups:
            if zh == zg:
                continue
            for xi in (zh, zh.conjugate()):
                for _ in range(mh):
                    poly = _mul_linear_truncated(poly, 1.0 - zg / xi, -1.0 / xi)

        # reciprocal series s = 1/Qt mod w^m
        s = np.zeros(m, dtype=complex)
        s[0] = 1.0 / poly[0]
        for n in range(1, m):
            s[n] = -s[0] * np.dot(poly[1 : n + 1], s[n - 1 :: -1])

        for p in range(m):
            coef = 2j * np.pi * (1j**p / math.factorial(p)) * s[m - 1 - p]
            terms.append((complex(coef), complex(zg), p))

    cov = CovarianceModel(terms=tuple(terms), k=spec.k)
    _check_term_list(cov)
    return cov


def _check_term_list(cov: CovarianceModel) -> None:
    """Cheap internal consistency probes: r real on a grid, r(0) > 0."""
    probes = np.array([0.0, 0.31, 1.7, 4.3])
    total = np.zeros_like(probes, dtype=complex)
    for coef, root, p in cov.terms:
        total += coef * probes**p * np.exp(1j * root * probes)
    r0 = total.real[0]
    if not (r0 > 0):
        raise CarkovError(f"term list gives non-positive variance r(0) = {r0}")
    if np.abs(total.imag).max() > 1e-10 * abs(r0):
        raise CarkovError(
            "term list does not evaluate to a real covariance "
            f"(max imag {np.abs(total.imag).max():.3e} vs r(0) = {r0:.3e})"
        )


def derivative_terms(
    cov: CovarianceModel, j: int
) -> tuple[tuple[complex, complex, int], ...]:
    """Term list of the j-th derivative of r on t > 0.

    Differentiating coef * t^m * e^{i*zeta*t} j times and collecting by
    (root, power) keeps the representation closed, so every derivative is
    again a CovarianceModel-style term list.
    """
    if j == 0:
        return cov.terms
    merged: dict[tuple[complex, int], complex] = {}
    for coef, root, m in cov.terms:
        iz = 1j * root
        for ell in range(min(j, m) + 1):
            c = (
                coef
                * math.comb(j, ell)
                * (math.factorial(m) // math.factorial(m - ell))
                * iz ** (j - ell)
            )
            key = (root, m - ell)
            merged[key] = merged.get(key, 0.0 + 0.0j) + c
    ordered = sorted(merged.items(), key=lambda kv: (kv[0][0].imag, kv[0][0].real, kv[0][1]))
    return tuple((coef, root, p) for (root, p), coef in ordered)


def eval_r(cov: CovarianceModel, j: int, u):
    """Evaluate r^(j)(u) for scalar or array u.

    For u < 0 the stationary symmetry r^(j)(-u) = (-1)^j r^(j)(u) is
    applied. At u = 0 only orders j <= 2k exist as two-sided derivatives;
    higher orders raise OrderTooHigh (use one_sided_top for the 2k+1
    limit from the right).
    """
    if j < 0:
        raise ValueError("derivative order must be >= 0")
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)
    if j > 2 * cov.k and np.any(u_arr == 0.0):
        raise OrderTooHigh(
            f"r^({j}) does not exist two-sidedly at 0 for k = {cov.k}"
        )
    terms = derivative_terms(cov, j)
    au = np.abs(u_arr)
    total = np.zeros(au.shape, dtype=complex)
    for coef, root, p in terms:
        total += coef * au**p * np.exp(1j * root * au)
    vals = total.real
    if j % 2 == 1:
        vals = np.where(u_arr < 0, -vals, vals)
    return float(vals[0]) if scalar else vals


def one_sided_top(cov: CovarianceModel) -> float:
    """One-sided limit of r^(2k+1)(t) as t -> 0 from the right.

    The 2k+1-st derivative jumps at the origin; this right limit is what
    the diffusion coefficient of the Markov system is built from. Its
    sign alternates with k: negative for even k, positive for odd k.
    """
    terms = derivative_terms(cov, 2 * cov.k + 1)
    total = sum(coef for coef, _root, p in terms if p == 0)
    return float(total.real)


def moments(cov: CovarianceModel) -> SpectralMoments:
    """Derivative moments r^(j)(0) for j <= 2k plus the one-sided top.

    Odd-order entries vanish by symmetry; values below ODD_MOMENT_TOL
    relative to r(0) are snapped to exact zeros so that downstream linear
    algebra sees the structural zeros it expects.
    """
    vals = []
    for j in range(2 * cov.k + 1):
        terms = derivative_terms(cov, j)
        vals.append(float(sum(coef for coef, _root, p in terms if p == 0).real))
    r0 = vals[0]
    for j in range(1, 2 * cov.k + 1, 2):
        if abs(vals[j]) < ODD_MOMENT_TOL * abs(r0):
            vals[j] = 0.0
    return SpectralMoments(even_moments=tuple(vals), top_plus=one_sided_top(cov))


def alpha_coeffs(mom: SpectralMoments, cov: CovarianceModel, u: float) -> np.ndarray:
    """Interpolation coefficients alpha_j(u) of the Markov factorization.

    Solves the (k+1) x (k+1) system G @ alpha = (r^(i)(u))_i with Gram
    matrix G_ij = r^(i+j)(0). With these coefficients,
    r(u + v) = sum_j alpha_j(u) * r^(j)(v) for all v >= 0; as u -> 0+
    alpha tends to the first unit vector.
    """
    if not (u > 0):
        raise ValueError("alpha_coeffs requires u > 0")
    k = mom.k
    G = np.array(
        [[mom.even_moments[i + j] for j in range(k + 1)] for i in range(k + 1)]
    )
    rhs = np.array([eval_r(cov, i, u) for i in range(k + 1)])
    try:
        alpha = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularGram(f"moment Gram matrix is singular: {exc}") from exc
    if not np.all(np.isfinite(alpha)) or np.linalg.cond(G) > 1e14:
        raise SingularGram("moment Gram matrix is numerically singular")
    return alpha


# ---------------------------------------------------------------------------
# quadrature oracle

@functools.lru_cache(maxsize=1024)
def _envelope(spec: RootSpec, j: int) -> float:
    """2 * integral_0^inf z^j / |P(z)|^2 dz, an upper envelope for |r^(j)|."""
    val, err, ok = _quad_semi_infinite(spec, j, weight=None, wvar=None,
                                       epsabs=0.0, epsrel=1e-11)
    if not np.isfinite(val):
        raise NotConverged(f"envelope integral failed for order {j}")
    if not ok and err > 1e-8 * max(1.0, abs(val)):
        raise NotConverged(
            f"envelope integral for order {j} only reached "
            f"absolute error {err:.2e}"
        )
    return 2.0 * val

def _quad_semi_infinite(spec, j, weight, wvar, epsabs, epsrel):
    """One QUADPACK call on [0, inf); returns (value, abserr, converged)."""
    def integrand(z):
        return z**j / abs_p_squared(spec, z)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        if weight is None:
            res = scipy.integrate.quad(
                integrand, 0.0, np.inf,
                epsabs=epsabs, epsrel=epsrel, limit=400, full_output=1,
            )
        else:
            res = scipy.integrate.quad(
                integrand, 0.0, np.inf, weight=weight, wvar=wvar,
                epsabs=epsabs, limit=200, limlst=400, full_output=1,
            )
    return res[0], res[1], len(res) == 3


def quadrature_r(spec: RootSpec, j: int, t: float) -> float:
    """Independent evaluation of r^(j)(t) straight from the spectral integral.

    Splits the Fourier integral by parity,

        even j:  r^(j)(t) = (-1)^(j/2)   * 2 * int_0^inf z^j cos(zt)/|P|^2 dz
        odd j:   r^(j)(t) = (-1)^((j+1)/2) * 2 * int_0^inf z^j sin(zt)/|P|^2 dz,

    and hands the semi-infinite oscillatory integral to QUADPACK (plain
    adaptive for t = 0, Fourier-weight extrapolation otherwise). Shares no
    code with the residue path beyond |P|^2 itself.

    Raises
    ------
    OrderTooHigh
        If j > 2k (the integral no longer converges absolutely).
    NotConverged
        If QUADPACK cannot certify the accuracy QUAD_REL_TOL relative to
        max(1, r(0)).
    """
    k = spec.k
    if j > 2 * k:
        raise OrderTooHigh(f"quadrature oracle supports j <= 2k = {2 * k}")
    if j < 0:
        raise ValueError("derivative order must be >= 0")

    r0 = _envelope(spec, 0)  # equals r(0): the j = 0 integrand is positive
    target = 0.1 * QUAD_REL_TOL * max(1.0, r0)
    floor = 1e-13 * max(1.0, _envelope(spec, j))
    epsabs = max(target, floor)

    sign = (-1) ** (j // 2) if j % 2 == 0 else (-1) ** ((j + 1) // 2)
    if t == 0.0:
        if j % 2 == 1:
            return 0.0  # sin(0) kills the integrand identically
        return sign * _envelope(spec, j)

    weight = "cos" if j % 2 == 0 else "sin"
    val, err, ok = _quad_semi_infinite(
        spec, j, weight=weight, wvar=abs(float(t)), epsabs=epsabs, epsrel=0.0
    )
    if not ok or err > 10.0 * epsabs or not np.isfinite(val):
        raise NotConverged(
            f"QUADPACK could not reach epsabs {epsabs:.2e} for "
            f"j = {j}, t = {t} (reported error {err:.2e})"
        )
    out = sign * 2.0 * val
    if t < 0 and j % 2 == 1:
        out = -out
    return out


# ---------------------------------------------------------------------------
# JSON config round trip

def cov_to_config(cov: CovarianceModel) -> dict:
    """Dict form: {"terms": [{"coef": [re, im], "root": [re, im], "power": m}], "k": k}."""
    return {
        "terms": [
            {
                "coef": [coef.real, coef.imag],
                "root": [root.real, root.imag],
                "power": power,
            }
            for coef, root, power in cov.terms
        ],
        "k": cov.k,
    }


def cov_from_config(cfg: dict) -> CovarianceModel:
    """Parse and sanity-check the dict form produced by cov_to_config."""
    try:
        terms = tuple(
            (
                complex(t["coef"][0], t["coef"][1]),
                complex(t["root"][0], t["root"][1]),
                int(t["power"]),
            )
            for t in cfg["terms"]
        )
        k = int(cfg["k"])
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CarkovError(f"malformed covariance config: {exc}") from exc
    cov = CovarianceModel(terms=terms, k=k)
    _check_term_list(cov)
    return cov
