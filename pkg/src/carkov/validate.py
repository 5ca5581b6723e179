"""Cross-verification suite: closed-form identities and statistical checks.

Each check returns a CheckReport with a scalar statistic and a threshold;
passed means statistic <= threshold. Closed-form identities are held to
1e-8 relative. Statistical checks use normal-approximation bands with the
deliberately loose constant 4 because suites run many correlated
comparisons. Negative controls (checks that are supposed to detect a
broken hypothesis) are encoded with negated statistic and threshold so
the same pass rule applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import (
    CovarianceModel,
    SpectralMoments,
    alpha_coeffs,
    eval_r,
    moments,
    residue_expansion,
)
from .errors import DegenerateConditioning, PathTooShort
from .markov import ItoSystem, StationaryLaw, assemble
from .model import RealPolynomial, RootSpec, ode_char_poly
from .simulate import SamplePath, sample_exact

#: relative tolerance for closed-form identities
CLOSED_FORM_TOL = 1e-8

#: band width for statistical checks, in standard errors
STAT_BAND = 4.0

#: block length for autocovariance standard errors, in correlation times
BLOCK_CORR_TIMES = 10.0


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check; passed if and only if statistic <= threshold."""

    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str


def _report(name: str, statistic: float, threshold: float, detail: str) -> CheckReport:
    return CheckReport(
        name=name,
        passed=bool(statistic <= threshold),
        statistic=float(statistic),
        threshold=float(threshold),
        detail=detail,
    )


def _correlation_time(cov: CovarianceModel) -> float:
    """Slowest decay time 1 / min Im(root) of the covariance terms."""
    return 1.0 / min(root.imag for _coef, root, _p in cov.terms)


# ---------------------------------------------------------------------------
# closed-form checks

def check_markov_factorization(
    cov: CovarianceModel,
    mom: SpectralMoments,
    u_grid=None,
    v_grid=None,
) -> CheckReport:
    """Residual of r(u+v) = sum_j alpha_j(u) r^(j)(v) over a grid.

    The interpolation coefficients alpha are solved from the moments, so
    passing a moments object that does not belong to cov (or a tampered
    term list) makes the residual jump far above the threshold.
    """
    tau = _correlation_time(cov)
    if u_grid is None:
        u_grid = tau * np.array([0.25, 0.5, 1.0, 2.0])
    if v_grid is None:
        v_grid = tau * np.array([0.25, 0.5, 1.0, 2.0])
    u_grid = np.asarray(u_grid, dtype=float)
    v_grid = np.asarray(v_grid, dtype=float)
    if not (u_grid > 0).all() or not (v_grid > 0).all():
        raise ValueError("factorization grids must be strictly positive")
    r0 = eval_r(cov, 0, 0.0)
    worst = 0.0
    for u in u_grid:
        alpha = alpha_coeffs(mom, cov, float(u))
        lhs = eval_r(cov, 0, u + v_grid)
        rhs = np.zeros_like(v_grid)
        for j in range(mom.k + 1):
            rhs += alpha[j] * eval_r(cov, j, v_grid)
        worst = max(worst, float(np.abs(lhs - rhs).max()) / abs(r0))
    return _report(
        "markov_factorization",
        worst,
        CLOSED_FORM_TOL,
        f"max |r(u+v) - sum_j alpha_j(u) r^(j)(v)| / r(0) = {worst:.3e} "
        f"over a {u_grid.size}x{v_grid.size} grid",
    )


def check_ode_annihilation(
    spec: RootSpec,
    cov: CovarianceModel,
    t_grid=None,
    chi: RealPolynomial | None = None,
) -> CheckReport:
    """chi(d/dt) applied to the covariance must vanish on t > 0.

    chi defaults to the characteristic polynomial of spec; passing a
    perturbed polynomial is the negative control.
    """
    if chi is None:
        chi = ode_char_poly(spec)
    tau = _correlation_time(cov)
    if t_grid is None:
        t_grid = tau * np.array([0.1, 0.5, 1.0, 2.0, 5.0])
    t_grid = np.asarray(t_grid, dtype=float)
    if not (t_grid > 0).all():
        raise ValueError("annihilation grid must be strictly positive")
    r0 = eval_r(cov, 0, 0.0)
    total = np.zeros_like(t_grid)
    for j, b in enumerate(chi.coefficients):
        total += b * eval_r(cov, j, t_grid)
    worst = float(np.abs(total).max()) / abs(r0)
    return _report(
        "ode_annihilation",
        worst,
        CLOSED_FORM_TOL,
        f"max |chi(D) r(t)| / r(0) = {worst:.3e} on {t_grid.size} points",
    )


def check_lyapunov(system: ItoSystem, law: StationaryLaw) -> CheckReport:
    """Continuous-time Lyapunov equation of the stationary covariance."""
    A = system.companion
    sigma = law.covariance
    k = system.k
    forcing = np.zeros_like(A)
    forcing[k, k] = system.diffusion**2
    resid = A @ sigma + sigma @ A.T + forcing
    worst = float(
        np.linalg.norm(resid, "fro") / np.linalg.norm(sigma, "fro")
    )
    return _report(
        "lyapunov_residual",
        worst,
        CLOSED_FORM_TOL,
        f"||A Sigma + Sigma A' + b^2 e_k e_k'||_F / ||Sigma||_F = {worst:.3e}",
    )


def check_characteristic(system: ItoSystem, spec: RootSpec) -> CheckReport:
    """Drift row solved from moments vs the expanded root polynomial."""
    chi = ode_char_poly(spec)
    expected = -np.asarray(chi.coefficients[: spec.k + 1])
    scale = max(1.0, float(np.abs(expected).max()))
    worst = float(np.abs(system.drift - expected).max()) / scale
    return _report(
        "characteristic_consistency",
        worst,
        CLOSED_FORM_TOL,
        f"max |a_j (moments) - a_j (root expansion)| = {worst:.3e} relative",
    )


def check_diffusion_identity(system: ItoSystem, spec: RootSpec) -> CheckReport:
    """b^2 from the moment route vs 2 pi prod |zeta_j|^2 / scale^2."""
    expected = 2.0 * np.pi * np.prod(
        [abs(z) ** 2 for z in spec.roots]
    ) / spec.scale**2
    got = system.diffusion**2
    worst = abs(got - expected) / expected
    return _report(
        "diffusion_scale_identity",
        float(worst),
        CLOSED_FORM_TOL,
        f"b^2 = {got:.12g} vs spectral product {expected:.12g}",
    )


# ---------------------------------------------------------------------------
# statistical checks

def block_standard_error(x: np.ndarray, block_len: int) -> float:
    """Standard error of the mean of x from overlapping block means."""
    m = x.size
    block_len = max(1, min(int(block_len), m))
    if m - block_len + 1 < 2:
        raise PathTooShort(
            f"{m} samples cannot support blocks of length {block_len}"
        )
    c = np.concatenate([[0.0], np.cumsum(x)])
    means = (c[block_len:] - c[:-block_len]) / block_len
    var_mean = means.var(ddof=1) * block_len / m
    return float(math.sqrt(var_mean))


def check_empirical_covariance(
    path: SamplePath, cov: CovarianceModel, lags=None
) -> CheckReport:
    """Empirical autocovariance of Y against the closed form.

    lags are in time units and must sit on the path grid. The standard
    error of each lagged product mean comes from overlapping blocks of
    ten correlation times.
    """
    tau = _correlation_time(cov)
    if lags is None:
        lags = tau * np.array([0.0, 0.5, 1.0, 2.0])
    lags = np.asarray(lags, dtype=float)
    y = path.values[0]
    n = y.size
    dt = path.dt
    block_len = int(round(BLOCK_CORR_TIMES * tau / dt))
    details = []
    worst = 0.0
    for lag in lags:
        idx = int(round(lag / dt))
        if abs(idx * dt - lag) > 1e-9 * max(dt, lag):
            raise ValueError(f"lag {lag} is not on the dt = {dt} grid")
        m = n - idx
        if m < 2 or (m // max(block_len, 1)) < 100:
            raise PathTooShort(
                f"lag {lag}: {max(m, 0)} products cannot fill 100 blocks "
                f"of {block_len} samples"
            )
        prods = y[: n - idx] * y[idx:]
        rhat = float(prods.mean())
        se = block_standard_error(prods, block_len)
        target = eval_r(cov, 0, float(lag))
        z = abs(rhat - target) / se if se > 0 else np.inf
        worst = max(worst, z)
        details.append(f"lag {lag:.4g}: rhat = {rhat:.6g}, r = {target:.6g}, "
                       f"|z| = {z:.2f}")
    return _report(
        "empirical_covariance",
        worst,
        STAT_BAND,
        "; ".join(details),
    )


def stack_paths(paths) -> np.ndarray:
    """Stack an iterable of SamplePath into an (R, k+1, N) array."""
    return np.stack([p.values for p in paths], axis=0)


def check_partial_correlation(
    replicates,
    s_idx: int,
    t_idx: int,
    u_idx: int,
    conditioning: str = "vector",
    name: str | None = None,
) -> CheckReport:
    """Sample partial correlation of Y(s), Y(u) given the state at t.

    replicates is an (R, k+1, N) array (or an iterable of SamplePath).
    With conditioning="vector" the whole stack Z(t) is regressed out and
    the statistic |pcorr| * sqrt(R) should sit inside the normal band:
    that is the Markov property. With conditioning="scalar" only Y(t) is
    regressed out; for k >= 1 that must FAIL, so the report is encoded as
    a negative control (statistic and threshold negated): it passes when
    the dependence is detected.
    """
    if not isinstance(replicates, np.ndarray):
        replicates = stack_paths(replicates)
    reps, d, n = replicates.shape
    if reps < 1000:
        raise PathTooShort(f"{reps} replicates < 1000")
    if not (0 <= s_idx < t_idx < u_idx < n):
        raise ValueError("need 0 <= s_idx < t_idx < u_idx < path length")
    ys = replicates[:, 0, s_idx].copy()
    yu = replicates[:, 0, u_idx].copy()
    if conditioning == "vector":
        cond = replicates[:, :, t_idx].copy()
    elif conditioning == "scalar":
        cond = replicates[:, 0:1, t_idx].copy()
    else:
        raise ValueError("conditioning must be 'vector' or 'scalar'")

    ys -= ys.mean()
    yu -= yu.mean()
    cond -= cond.mean(axis=0)
    gram = cond.T @ cond
    eigs = np.linalg.eigvalsh(gram)
    if eigs.min() <= 1e-12 * max(eigs.max(), 1.0):
        raise DegenerateConditioning(
            f"conditioning covariance eigenvalue {eigs.min():.3e}"
        )
    beta_s = np.linalg.solve(gram, cond.T @ ys)
    beta_u = np.linalg.solve(gram, cond.T @ yu)
    res_s = ys - cond @ beta_s
    res_u = yu - cond @ beta_u
    denom = math.sqrt(float(res_s @ res_s) * float(res_u @ res_u))
    if denom == 0.0:
        raise DegenerateConditioning("zero residual variance")
    pcorr = float(res_s @ res_u) / denom
    raw = abs(pcorr) * math.sqrt(reps)
    if conditioning == "vector":
        return _report(
            name or "markov_partial_correlation",
            raw,
            STAT_BAND,
            f"|pcorr| = {abs(pcorr):.4f}, |pcorr| sqrt(R) = {raw:.2f} "
            f"conditioning on the full stack",
        )
    return _report(
        name or "markov_scalar_negative_control",
        -raw,
        -STAT_BAND,
        f"|pcorr| sqrt(R) = {raw:.2f} conditioning on Y(t) alone; "
        "this control passes only when the residual dependence is "
        "detected (raw statistic above the band)",
    )


# ---------------------------------------------------------------------------
# suite driver

#: budget profiles: path length and replicate counts in correlation-time units
_PROFILES = {
    "fast": {"span": 1200.0, "steps_per_tau": 50, "replicates": 1000},
    "full": {"span": 10000.0, "steps_per_tau": 100, "replicates": 2000},
}


def run_suite(spec: RootSpec, budget: str = "fast", seed: int = 0,
              perturb_coef: float = 0.0) -> list[CheckReport]:
    """Run every check appropriate to the model's k.

    budget is "fast" or "full" and scales the statistical effort. All
    randomness derives from seed. perturb_coef != 0 multiplies the first
    covariance term coefficient by (1 + perturb_coef) AFTER the system is
    assembled: a documented negative control that must trip the
    closed-form checks.
    """
    if budget not in _PROFILES:
        raise ValueError(f"budget must be one of {sorted(_PROFILES)}")
    prof = _PROFILES[budget]
    cov = residue_expansion(spec)
    mom = moments(cov)
    system, law = assemble(spec)
    if perturb_coef != 0.0:
        first = cov.terms[0]
        cov = CovarianceModel(
            terms=((first[0] * (1.0 + perturb_coef), first[1], first[2]),)
            + cov.terms[1:],
            k=cov.k,
        )

    reports = [
        check_markov_factorization(cov, mom),
        check_ode_annihilation(spec, cov),
        check_lyapunov(system, law),
        check_characteristic(system, spec),
        check_diffusion_identity(system, spec),
    ]

    tau = _correlation_time(residue_expansion(spec))
    dt = tau / prof["steps_per_tau"]
    n_steps = int(round(prof["span"] * tau / dt))
    path = sample_exact(system, law, dt, n_steps, seed, stream=0)
    reports.append(check_empirical_covariance(path, cov))

    # replicate ensemble for the Markov property: three probe times
    # spaced 0.75 correlation times apart, six steps per gap
    gap_steps = 6
    rep_dt = 0.75 * tau / gap_steps
    n_rep = prof["replicates"]
    ens = np.empty((n_rep, spec.k + 1, 2 * gap_steps + 1))
    for r in range(n_rep):
        ens[r] = sample_exact(
            system, law, rep_dt, 2 * gap_steps, seed, stream=1 + r
        ).values
    reports.append(
        check_partial_correlation(ens, 0, gap_steps, 2 * gap_steps, "vector")
    )
    if spec.k >= 1:
        reports.append(
            check_partial_correlation(
                ens, 0, gap_steps, 2 * gap_steps, "scalar"
            )
        )
    return reports
