"""Sample path generation by independent mechanisms.

Three samplers target the same stationary law: exact one-step transition
(discretely exact at any dt), Euler-Maruyama (biased at order dt, kept as
a deliberately independent reference), and a midpoint discretization of
the spectral representation (no time recursion at all). A fourth, for
k = 1 only, drives a two-sided exponential moving-average kernel with
white noise. Agreement between their empirical covariances and the closed
form is the package's main end-to-end consistency argument.

All randomness flows through counter-based Philox generators keyed by
(seed, method, stream), so different methods never share a stream and
any replicate can be regenerated in isolation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._kernels import ar1_recursion
from .covariance import CovarianceModel, residue_expansion, eval_r
from .errors import (
    CarkovError,
    EqualRates,
    FactorizationFailure,
    NotConverged,
    TailTooHeavy,
    UnstableStep,
)
from .markov import ItoSystem, StationaryLaw
from .model import RootSpec, abs_p_squared

#: permitted fraction of spectral mass outside the truncation radius,
#: relative to r(0)
SPECTRAL_TAIL_TOL = 1e-6

#: default number of midpoint panels for the spectral sampler
SPECTRAL_PANELS = 4096

_METHOD_CODES = {"exact": 1, "euler": 2, "spectral": 3, "moving_average": 4}


@dataclass(frozen=True)
class SamplePath:
    """Uniform-grid path of the derivative stack.

    values has one row per derivative order (k+1 rows) and one column per
    grid point; dt is the grid spacing, seed and method record provenance.
    """

    dt: float
    values: np.ndarray
    seed: int
    method: str

    @property
    def k(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_points(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)


@dataclass(frozen=True)
class MAKernel:
    """Two-sided exponential moving-average kernel for k = 1.

    f(x) = amp * e^{x * a_minus} for x < 0 and amp * e^{-x * a_plus} for
    x >= 0: continuous at 0 by construction, with different decay rates
    on the two sides.
    """

    a_minus: float
    a_plus: float
    amp: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(
            x < 0,
            self.amp * np.exp(x * self.a_minus),
            self.amp * np.exp(-x * self.a_plus),
        )

    def slope(self, x):
        """Derivative of the kernel (the x >= 0 branch at the kink)."""
        x = np.asarray(x, dtype=float)
        return np.where(
            x < 0,
            self.amp * self.a_minus * np.exp(x * self.a_minus),
            -self.amp * self.a_plus * np.exp(-x * self.a_plus),
        )


def _generator(seed: int, method: str, stream: int = 0) -> np.random.Generator:
    """Philox generator on the (seed, method, stream) substream."""
    ss = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(_METHOD_CODES[method], int(stream))
    )
    return np.random.Generator(np.random.Philox(ss))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix via eigendecomposition."""
    w, u = np.linalg.eigh((matrix + matrix.T) / 2.0)
    return u * np.sqrt(np.clip(w, 0.0, None))


# ---------------------------------------------------------------------------
# exact discretization

def exact_step_operator(
    system: ItoSystem, law: StationaryLaw, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and innovation factor of the exact discrete chain.

    Parameters
    ----------
    system, law : ItoSystem, StationaryLaw
        Assembled Markov system and its stationary covariance Sigma.
    dt : float
        Step size, > 0.

    Returns
    -------
    (phi, innovation)
        phi = e^{A dt}; innovation L satisfies L @ L.T =
        Sigma - phi @ Sigma @ phi.T, so Z' = phi Z + L xi with standard
        normal xi preserves the stationary law exactly.

    Raises
    ------
    FactorizationFailure
        If the innovation covariance has an eigenvalue below
        -1e-10 * ||Sigma||.

    Notes
    -----
    When the drift eigenvalues are simple (the generic case) the matrix
    exponential is taken through the eigendecomposition, which also
    cross-validates the companion structure; clustered eigenvalues fall
    back to the scaling-and-squaring exponential.
    """
    if not (dt > 0):
        raise ValueError("dt must be positive")
    A = system.companion
    eigvals, V = np.linalg.eig(A)
    scale = max(1.0, np.abs(eigvals).max())
    gaps = [
        abs(eigvals[i] - eigvals[j])
        for i in range(len(eigvals))
        for j in range(i + 1, len(eigvals))
    ]
    if not gaps or min(gaps) > 1e-6 * scale:
        phi = (V * np.exp(eigvals * dt)) @ np.linalg.inv(V)
        phi = phi.real
    else:
        phi = scipy.linalg.expm(A * dt)

    sigma = law.covariance
    q = sigma - phi @ sigma @ phi.T
    q = (q + q.T) / 2.0
    w, u = np.linalg.eigh(q)
    sigma_norm = np.linalg.eigvalsh(sigma).max()
    if w.min() < -1e-10 * sigma_norm:
        raise FactorizationFailure(
            f"innovation covariance eigenvalue {w.min():.3e} is negative "
            f"beyond tolerance (||Sigma|| = {sigma_norm:.3e})"
        )
    innovation = u * np.sqrt(np.clip(w, 0.0, None))
    return phi, innovation


def sample_exact(
    system: ItoSystem,
    law: StationaryLaw,
    dt: float,
    n_steps: int,
    seed: int,
    stream: int = 0,
) -> SamplePath:
    """Simulate the stack by its exact one-step transition.

    Parameters
    ----------
    system, law : ItoSystem, StationaryLaw
        Assembled Markov system and stationary covariance.
    dt : float
        Grid spacing; any positive value is exact.
    n_steps : int
        Number of transitions; the path has n_steps + 1 columns.
    seed, stream : int
        Substream key. The initial state is drawn first, then one shock
        row per step.

    Returns
    -------
    SamplePath
        Stationary path: every column is marginally N(0, Sigma).
    """
    phi, innovation = exact_step_operator(system, law, dt)
    rng = _generator(seed, "exact", stream)
    d = phi.shape[0]
    z0 = _psd_sqrt(law.covariance) @ rng.standard_normal(d)
    shocks = rng.standard_normal((n_steps, d))
    values = ar1_recursion(
        np.ascontiguousarray(phi),
        np.ascontiguousarray(innovation),
        np.ascontiguousarray(z0),
        np.ascontiguousarray(shocks),
    )
    return SamplePath(dt=float(dt), values=values, seed=int(seed), method="exact")


# ---------------------------------------------------------------------------
# Euler-Maruyama

def euler_step_bound(system: ItoSystem) -> float:
    """Largest dt for which I + A dt is a contraction."""
    eigs = np.linalg.eigvals(system.companion)
    return float(min(2.0 * (-lam.real) / abs(lam) ** 2 for lam in eigs))


def sample_euler(
    system: ItoSystem,
    law: StationaryLaw,
    dt: float,
    n_steps: int,
    seed: int,
    z0: np.ndarray | None = None,
    stream: int = 0,
) -> SamplePath:
    """Simulate the stack with the Euler-Maruyama scheme.

    Z_{m+1} = Z_m + A Z_m dt + b e_k sqrt(dt) xi_m. Biased at order dt;
    kept deliberately independent of the exact sampler as a consistency
    reference. The initial state defaults to a stationary draw; pass z0
    to start from a fixed vector.

    Raises
    ------
    UnstableStep
        If I + A dt has spectral radius >= 1. The message reports the
        stable dt range.
    """
    if not (dt > 0):
        raise ValueError("dt must be positive")
    A = system.companion
    d = A.shape[0]
    step = np.eye(d) + A * dt
    radius = np.abs(np.linalg.eigvals(step)).max()
    if radius >= 1.0:
        raise UnstableStep(
            f"I + A dt has spectral radius {radius:.6f} >= 1 at dt = {dt}; "
            f"stable below dt = {euler_step_bound(system):.6g}"
        )
    rng = _generator(seed, "euler", stream)
    if z0 is None:
        z0 = _psd_sqrt(law.covariance) @ rng.standard_normal(d)
    else:
        z0 = np.asarray(z0, dtype=float)
        if z0.shape != (d,):
            raise ValueError(f"z0 must have shape ({d},)")
    shocks = rng.standard_normal((n_steps, 1))
    noise_map = (system.noise_vector * math.sqrt(dt)).reshape(d, 1)
    values = ar1_recursion(
        np.ascontiguousarray(step),
        np.ascontiguousarray(noise_map),
        np.ascontiguousarray(z0),
        np.ascontiguousarray(shocks),
    )
    return SamplePath(dt=float(dt), values=values, seed=int(seed), method="euler")


# ---------------------------------------------------------------------------
# spectral representation

def spectral_tail_bound(spec: RootSpec, z_max: float) -> float:
    """Rigorous upper bound on the spectral mass outside [-z_max, z_max].

    For |z| >= 2 max|zeta| every factor obeys |z - zeta| >= |z| / 2, so
    1/|P(z)|^2 <= 4^(k+1) K / z^(2k+2) with K = prod |zeta_j|^2 / scale^2,
    and the tail integral is bounded by the closed form below. Returns
    +inf when z_max is inside twice the largest root, where the bound
    does not apply.
    """
    k = spec.k
    max_mag = max(abs(z) for z in spec.roots)
    if z_max < 2.0 * max_mag:
        return np.inf
    big_k = np.prod([abs(z) ** 2 for z in spec.roots]) / spec.scale**2
    return 4.0 ** (k + 1) * 2.0 * big_k / ((2 * k + 1) * z_max ** (2 * k + 1))


def default_z_max(spec: RootSpec, r0: float) -> float:
    """Truncation radius putting the tail bound at a tenth of the budget."""
    k = spec.k
    max_mag = max(abs(z) for z in spec.roots)
    big_k = np.prod([abs(z) ** 2 for z in spec.roots]) / spec.scale**2
    budget = 0.1 * SPECTRAL_TAIL_TOL * r0
    z = (4.0 ** (k + 1) * 2.0 * big_k / ((2 * k + 1) * budget)) ** (
        1.0 / (2 * k + 1)
    )
    return max(z, 2.0 * max_mag)


#: allowed relative gap between the design variance and r(0)
SPECTRAL_RESOLUTION_TOL = 1e-3


def _spectral_design(spec, times, z_max, n_panels, r0=None):
    """Midpoint grid and per-derivative design matrices.

    Returns (cos_blocks, sin_blocks) where block j maps the two
    independent white-noise vectors to Y^(j) at the requested times.
    If r0 is given, the exact output variance of row 0 (the sum of
    squared weights) is held to it within SPECTRAL_RESOLUTION_TOL; a
    panel grid too coarse for the density raises NotConverged. That can
    genuinely happen: a heavy spectral tail (small k) pushes z_max so
    far out that uniform panels no longer resolve the peak.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1d array")
    if times.size > 1:
        steps = np.diff(times)
        if steps.min() <= 0 or (steps.max() - steps.min()) > 1e-9 * steps.max():
            raise ValueError("times must be uniformly increasing")
    k = spec.k
    dz = 2.0 * z_max / n_panels
    z = -z_max + (np.arange(n_panels) + 0.5) * dz
    amp = np.sqrt(dz / abs_p_squared(spec, z))
    if r0 is not None:
        var0 = float((amp**2).sum())
        if abs(var0 - r0) > SPECTRAL_RESOLUTION_TOL * r0:
            raise NotConverged(
                f"{n_panels} midpoint panels over [-{z_max:.6g}, {z_max:.6g}] "
                f"give Var Y(0) = {var0:.6g} against r(0) = {r0:.6g}; "
                "increase n_panels (or lower z_max if the tail allows)"
            )
    theta = np.outer(times, z)
    cos_blocks, sin_blocks = [], []
    for j in range(k + 1):
        weight = amp * z**j
        shifted = theta + j * (np.pi / 2.0)
        cos_blocks.append(np.cos(shifted) * weight)
        sin_blocks.append(np.sin(shifted) * weight)
    return cos_blocks, sin_blocks


def _check_tail(spec: RootSpec, z_max: float, r0: float) -> None:
    bound = spectral_tail_bound(spec, z_max)
    if not (bound <= SPECTRAL_TAIL_TOL * r0):
        raise TailTooHeavy(
            f"tail bound {bound:.3e} exceeds {SPECTRAL_TAIL_TOL:.0e} * r(0) "
            f"= {SPECTRAL_TAIL_TOL * r0:.3e} at z_max = {z_max:.6g}; "
            "increase z_max"
        )


def sample_spectral(
    spec: RootSpec,
    times,
    seed: int,
    z_max: float | None = None,
    n_panels: int = SPECTRAL_PANELS,
    stream: int = 0,
) -> SamplePath:
    """Synthesize the stack from its spectral representation.

    Y^(j)(t) is a cosine/sine integral against two independent white
    noises with amplitude 1/|P(z)|; the integral over [-z_max, z_max] is
    discretized by n_panels midpoint panels, so each output is an exact
    Gaussian linear combination of 2 * n_panels standard normals and no
    time recursion occurs. Truncation must leave less than
    SPECTRAL_TAIL_TOL * r(0) of spectral mass outside the grid or
    TailTooHeavy is raised; derivative rows carry an additional z^j
    weight whose truncated mass is reported in the package docs rather
    than checked, which is the price of keeping the criterion scale-free.
    The panel grid must also resolve the density peak: when the exact
    output variance misses r(0) by more than SPECTRAL_RESOLUTION_TOL the
    call raises NotConverged instead of returning a mis-scaled path (for
    k = 0 the tail budget pushes z_max so far out that this needs an
    impractical panel count; prefer the exact sampler there).

    The time grid must be uniform; the stored dt is its spacing (1.0 for
    a single time).
    """
    cov = residue_expansion(spec)
    r0 = eval_r(cov, 0, 0.0)
    if z_max is None:
        z_max = default_z_max(spec, r0)
    _check_tail(spec, z_max, r0)
    times = np.asarray(times, dtype=float)
    cos_blocks, sin_blocks = _spectral_design(spec, times, z_max, n_panels, r0)
    rng = _generator(seed, "spectral", stream)
    xi_cos = rng.standard_normal(n_panels)
    xi_sin = rng.standard_normal(n_panels)
    values = np.vstack(
        [
            cos_blocks[j] @ xi_cos + sin_blocks[j] @ xi_sin
            for j in range(spec.k + 1)
        ]
    )
    dt = float(times[1] - times[0]) if times.size > 1 else 1.0
    return SamplePath(dt=dt, values=values, seed=int(seed), method="spectral")


def spectral_replicates(
    spec: RootSpec,
    times,
    n_replicates: int,
    seed: int,
    z_max: float | None = None,
    n_panels: int = SPECTRAL_PANELS,
    chunk: int = 256,
) -> np.ndarray:
    """Independent spectral draws, one substream per replicate.

    Returns an array of shape (n_replicates, k+1, len(times)). Replicate
    r consumes the same substream as sample_spectral(..., stream=r) and
    matches its values up to floating-point associativity in the matrix
    products.
    """
    cov = residue_expansion(spec)
    r0 = eval_r(cov, 0, 0.0)
    if z_max is None:
        z_max = default_z_max(spec, r0)
    _check_tail(spec, z_max, r0)
    times = np.asarray(times, dtype=float)
    cos_blocks, sin_blocks = _spectral_design(spec, times, z_max, n_panels, r0)
    k = spec.k
    out = np.empty((n_replicates, k + 1, times.size))
    for start in range(0, n_replicates, chunk):
        stop = min(start + chunk, n_replicates)
        width = stop - start
        xi_cos = np.empty((n_panels, width))
        xi_sin = np.empty((n_panels, width))
        for c in range(width):
            rng = _generator(seed, "spectral", start + c)
            xi_cos[:, c] = rng.standard_normal(n_panels)
            xi_sin[:, c] = rng.standard_normal(n_panels)
        for j in range(k + 1):
            block = cos_blocks[j] @ xi_cos + sin_blocks[j] @ xi_sin
            out[start:stop, j, :] = block.T
    return out


# ---------------------------------------------------------------------------
# moving-average construction (k <= 1)

def _check_kernel(kernel: MAKernel) -> None:
    if not (kernel.a_minus > 0 and kernel.a_plus > 0):
        raise CarkovError("kernel decay rates must be positive")
    if kernel.amp == 0:
        raise CarkovError("kernel amplitude must be nonzero")


def ma_covariance(kernel: MAKernel) -> CovarianceModel:
    """Covariance of white noise driven through a two-sided kernel.

    With distinct rates the lag-u covariance for u >= 0 is
    A1 e^{-u a_minus} + A2 e^{-u a_plus} with

        A1 = amp^2 (1/(2 a_minus) - 1/(a_minus - a_plus)),
        A2 = amp^2 (1/(2 a_plus) + 1/(a_minus - a_plus)),

    which satisfies the realizability constraint
    a_minus A1 + a_plus A2 = 0 identically, i.e. r'(0) = 0: the output is
    once differentiable and lands in the k = 1 family.
    """
    _check_kernel(kernel)
    am, ap, amp = kernel.a_minus, kernel.a_plus, kernel.amp
    if abs(am - ap) <= 1e-9 * max(am, ap):
        raise EqualRates(
            f"rates {am} and {ap} coincide; use ma_covariance_confluent"
        )
    a1 = amp**2 * (1.0 / (2.0 * am) - 1.0 / (am - ap))
    a2 = amp**2 * (1.0 / (2.0 * ap) + 1.0 / (am - ap))
    check = am * a1 + ap * a2
    if abs(check) > 1e-10 * abs(a1 + a2):
        raise CarkovError(f"realizability identity violated: {check:.3e}")
    terms = sorted(
        [(complex(a1), 1j * am, 0), (complex(a2), 1j * ap, 0)],
        key=lambda t: t[1].imag,
    )
    return CovarianceModel(terms=tuple(terms), k=1)


def ma_covariance_confluent(kernel: MAKernel) -> CovarianceModel:
    """Equal-rates limit of ma_covariance: r(u) = amp^2 (1/a + u) e^{-a u}."""
    _check_kernel(kernel)
    am, ap = kernel.a_minus, kernel.a_plus
    if abs(am - ap) > 1e-9 * max(am, ap):
        raise CarkovError(
            f"rates {am} and {ap} differ; use ma_covariance"
        )
    a = 0.5 * (am + ap)
    amp2 = kernel.amp**2
    terms = ((complex(amp2 / a), 1j * a, 0), (complex(amp2), 1j * a, 1))
    return CovarianceModel(terms=terms, k=1)


def sample_moving_average(
    kernel: MAKernel,
    dt: float,
    n_steps: int,
    seed: int,
    stream: int = 0,
    oversample: int = 40,
    trunc_tol: float = 1e-8,
) -> SamplePath:
    """Drive the moving-average kernel with discretized white noise.

    The driving noise lives on a midpoint grid fine enough to resolve
    both decay rates (oversample points per unit correlation length) and
    wide enough that the neglected kernel amplitude is below trunc_tol.
    Returns a two-row path (Y, Y'). Quadratic in path length, intended
    for moderate n_steps.
    """
    _check_kernel(kernel)
    if not (dt > 0):
        raise ValueError("dt must be positive")
    rate = min(kernel.a_minus, kernel.a_plus)
    h = 1.0 / (rate * oversample)
    reach = math.log(1.0 / trunc_tol) / rate
    t_max = dt * n_steps
    lo, hi = -reach, t_max + reach
    n_grid = int(math.ceil((hi - lo) / h))
    theta = lo + (np.arange(n_grid) + 0.5) * h
    rng = _generator(seed, "moving_average", stream)
    xi = rng.standard_normal(n_grid)
    times = dt * np.arange(n_steps + 1)
    lag = times[:, None] - theta[None, :]
    row0 = (kernel(lag) * math.sqrt(h)) @ xi
    row1 = (kernel.slope(lag) * math.sqrt(h)) @ xi
    return SamplePath(
        dt=float(dt),
        values=np.vstack([row0, row1]),
        seed=int(seed),
        method="moving_average",
    )


# ---------------------------------------------------------------------------
# path export

def write_csv(sample: SamplePath, path) -> None:
    """Write the path as CSV with header t, y0, ..., yk."""
    header = "t," + ",".join(f"y{j}" for j in range(sample.k + 1))
    table = np.column_stack([sample.times, sample.values.T])
    np.savetxt(path, table, delimiter=",", header=header, comments="",
               fmt="%.17g")


def write_metadata(sample: SamplePath, model_config: dict, path) -> None:
    """Write the JSON sidecar recording how the path was produced."""
    meta = {
        "method": sample.method,
        "dt": sample.dt,
        "seed": sample.seed,
        "model": model_config,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
