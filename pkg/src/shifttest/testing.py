"""Penalized likelihood-ratio shift test with known noise level.

The statistic is

    Delta = min_tau  sum_j nu_j |Y_j - e^{-i j tau} Y_j^#|^2 / (2 (sigma^2 + sigma#^2)),

minimized over the shift tau in [0, 2 pi).  Under the no-shift-difference null
(Delta - d ||nu||_1) / (sqrt(d) ||nu||_2) is asymptotically standard normal,
which supplies thresholds and p-values.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.special import ndtr, ndtri

from .spectral import SpectralObservation
from .weights import WeightSequence

__all__ = [
    "TestConfig",
    "TestOutcome",
    "norm_cdf",
    "norm_quantile",
    "profile_m",
    "statistic_delta",
    "delta_via_definition",
    "threshold",
    "p_value",
    "chi2_form",
    "multidim_statistic",
]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def norm_cdf(x):
    """Standard normal CDF (Cephes ndtr rational approximation, < 1e-13 rel. error)."""
    return ndtr(x)


def norm_quantile(p):
    """Standard normal quantile (Cephes ndtri rational approximation, < 1e-13 rel. error)."""
    return ndtri(p)


@dataclass(frozen=True)
class TestConfig:
    """Knobs for the tau search and the decision rule."""

    weights: WeightSequence
    alpha: float = 0.05
    grid_oversampling: int = 8
    refine_tol: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.grid_oversampling < 4:
            raise ValueError("grid_oversampling must be >= 4")
        if self.refine_tol <= 0:
            raise ValueError("refine_tol must be positive")


@dataclass(frozen=True)
class TestOutcome:
    delta: float
    t_normalized: float
    tau_hat: float
    threshold: float
    p_value: float
    reject: bool


_MAX_CANDIDATES = 32


def _grid_and_margin(products: np.ndarray, oversampling: int):
    """Dense profile values plus the certified grid under-sampling margin.

    Between grid points spaced h = 2 pi / K the profile can exceed a grid
    value by at most 0.5 ||M''|| (h/2)^2 with ||M''|| <= sum_j j^2 |a_j|, so
    every grid point within that margin of the grid maximum is a candidate
    bracket for the global maximizer.
    """
    N = products.shape[-1]
    K = scipy.fft.next_fast_len(max(oversampling * N, oversampling))
    buf = np.zeros(products.shape[:-1] + (K,), dtype=complex)
    buf[..., 1 : N + 1] = products
    grid = np.real(scipy.fft.ifft(buf, axis=-1)) * K
    j2 = np.arange(1, N + 1) ** 2
    margin = 0.5 * (np.abs(products) @ j2) * (np.pi / K) ** 2
    return grid, margin, K


def _max_profile(products: np.ndarray, oversampling: int, refine_tol: float):
    """Maximize Re sum_j a_j e^{i j tau} over tau in [0, 2 pi).

    ``products`` holds a_j for j = 1..N.  A dense grid of at least
    oversampling * N equispaced points is evaluated through one inverse FFT;
    every grid point whose value reaches the grid maximum minus the certified
    curvature margin is refined by golden-section search down to
    ``refine_tol``, and the best refinement wins.  Ties resolve to the
    smallest tau.  The refined tau is accurate to about sqrt(machine epsilon):
    closer to the peak the profile differences sink into rounding noise.
    """
    N = products.shape[-1]
    grid, margin, K = _grid_and_margin(products, oversampling)
    grid_best = float(np.max(grid))
    candidates = np.nonzero(grid >= grid_best - margin)[0]
    if candidates.size > _MAX_CANDIDATES:
        order = np.lexsort((candidates, -grid[candidates]))
        candidates = candidates[order[:_MAX_CANDIDATES]]
        candidates.sort()

    j = np.arange(1, N + 1)

    def m_of(tau):
        return float(np.real(np.exp(1j * tau * j) @ products))

    best_val = grid_best
    best_tau = 2.0 * np.pi * float(np.argmax(grid)) / K
    tie = 1e-12 * max(1.0, abs(grid_best))
    for k in candidates:  # ascending, so the smallest tau wins near-ties
        lo = 2.0 * np.pi * (k - 1) / K
        hi = 2.0 * np.pi * (k + 1) / K
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1, f2 = m_of(x1), m_of(x2)
        while hi - lo > refine_tol:
            if f1 < f2:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = m_of(x2)
            else:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = m_of(x1)
        val, tau = (f1, x1) if f1 >= f2 else (f2, x2)
        if val > best_val + tie:
            best_val, best_tau = val, tau % (2.0 * np.pi)
    return best_val, best_tau


_BATCH_CANDIDATES = 8
_BATCH_GRID_BUDGET = 4_000_000  # complex grid entries held at once
_NEWTON_STEPS = 4


def _batch_candidates(grid, margin, cap):
    """Per-row candidate grid indices: within margin of the row max, best first.

    Returns an (R, C) index matrix plus its validity mask, extracted through
    one sparse pass (the candidate sets are tiny, so no full-row sort).
    """
    R = grid.shape[0]
    row_best = np.max(grid, axis=1)
    rows_nz, cols_nz = np.nonzero(grid >= (row_best - margin)[:, None])
    vals_nz = grid[rows_nz, cols_nz]
    order = np.lexsort((cols_nz, -vals_nz, rows_nz))
    rows_s = rows_nz[order]
    cols_s = cols_nz[order]
    first = np.searchsorted(rows_s, np.arange(R), side="left")
    rank = np.arange(rows_s.size) - first[rows_s]
    keep = rank < cap
    counts = np.minimum(np.bincount(rows_s, minlength=R), cap)
    C = max(int(counts.max()), 1)
    cand = np.zeros((R, C), dtype=np.int64)
    cand[rows_s[keep], rank[keep]] = cols_s[keep]
    valid = np.arange(C)[None, :] < counts[:, None]
    cand = np.where(valid, cand, cand[:, :1])
    return cand, valid, row_best


def _max_profile_batch(products: np.ndarray, oversampling: int, refine_tol: float):
    """Vectorized :func:`_max_profile` over the rows of an (R, N) product matrix.

    The batch path evaluates a 4x finer grid than the scalar path (the
    certified margin shrinks 16-fold, leaving a couple of candidate brackets
    per row) and polishes each candidate with safeguarded Newton steps on the
    analytic profile derivatives; values agree with the scalar routine well
    inside refinement tolerance.  Rows are processed in slices to bound the
    grid memory.
    """
    R, N = products.shape
    K_probe = scipy.fft.next_fast_len(max(4 * oversampling * N, 4 * oversampling))
    rows_per_slice = max(1, _BATCH_GRID_BUDGET // K_probe)
    if R > rows_per_slice:
        vals = np.empty(R)
        taus = np.empty(R)
        for lo in range(0, R, rows_per_slice):
            hi = min(lo + rows_per_slice, R)
            vals[lo:hi], taus[lo:hi] = _max_profile_batch(
                products[lo:hi], oversampling, refine_tol
            )
        return vals, taus

    grid, margin, K = _grid_and_margin(products, 4 * oversampling)
    cand, valid, row_best = _batch_candidates(grid, margin, _BATCH_CANDIDATES)
    C = cand.shape[1]
    E = R * C

    prod_rep = np.repeat(products, C, axis=0)
    j = np.arange(1, N + 1)
    dprod = prod_rep * j
    ddprod = dprod * j

    h = 2.0 * np.pi / K
    tau = (2.0 * np.pi / K) * cand.reshape(E).astype(float)
    lo = tau - h
    hi = tau + h

    def derivatives(t):
        z = np.exp(1j * t)
        powers = np.cumprod(np.broadcast_to(z[:, None], (E, N)).copy(), axis=1)
        m = np.real(np.einsum("ej,ej->e", powers, prod_rep))
        md = -np.imag(np.einsum("ej,ej->e", powers, dprod))
        mdd = -np.real(np.einsum("ej,ej->e", powers, ddprod))
        return m, md, mdd

    best_m, md, mdd = derivatives(tau)
    best_tau = tau.copy()
    for _ in range(_NEWTON_STEPS):
        concave = mdd < 0.0
        step = np.where(concave, md, 0.0) / np.where(concave, mdd, -1.0)
        tau = np.clip(tau - step, lo, hi)
        m, md, mdd = derivatives(tau)
        improved = m > best_m
        best_m = np.where(improved, m, best_m)
        best_tau = np.where(improved, tau, best_tau)
    vals = np.where(valid, best_m.reshape(R, C), -np.inf)
    taus = (best_tau % (2.0 * np.pi)).reshape(R, C)
    # primary key: largest refined value; secondary: smallest tau
    pick = np.lexsort((taus, -vals))[:, 0]
    rows = np.arange(R)
    return np.maximum(vals[rows, pick], row_best), taus[rows, pick]


def _check_pair(obs_a: SpectralObservation, obs_b: SpectralObservation, w: WeightSequence):
    if obs_a.dims != obs_b.dims:
        raise ValueError("observations have different dimensions")
    if obs_a.length != obs_b.length:
        raise ValueError("observations have different coefficient counts")
    if obs_a.length < w.N:
        raise ValueError(f"need p >= N = {w.N} coefficients, got p = {obs_a.length}")
    if np.any(obs_a.sigma <= 0) or np.any(obs_b.sigma <= 0):
        raise ValueError("test statistics require strictly positive noise scales")


def profile_m(obs_a: SpectralObservation, obs_b: SpectralObservation, w: WeightSequence, tau: float) -> float:
    """M(tau) = sum_j nu_j Re(e^{i j tau} Y_j conj(Y_j^#)) for 1-dimensional observations."""
    _check_pair(obs_a, obs_b, w)
    if obs_a.dims != 1:
        raise ValueError("profile_m is defined for 1-dimensional observations")
    a = w.nu * obs_a.coeffs[0, : w.N] * np.conj(obs_b.coeffs[0, : w.N])
    j = np.arange(1, w.N + 1)
    return float(np.real(np.exp(1j * float(tau) * j) @ a))


def _whitened_parts(obs_a, obs_b, w):
    """Pooled products and quadratic term after per-dimension whitening."""
    N = w.N
    inv = 1.0 / (obs_a.sigma**2 + obs_b.sigma**2)  # (d,)
    ya = obs_a.coeffs[:, :N]
    yb = obs_b.coeffs[:, :N]
    products = w.nu * np.einsum("d,dj->j", inv, ya * np.conj(yb))
    quad = float(np.sum(w.nu * np.einsum("d,dj->j", inv, np.abs(ya) ** 2 + np.abs(yb) ** 2)))
    return products, quad


def statistic_delta(
    obs_a: SpectralObservation, obs_b: SpectralObservation, w: WeightSequence, cfg: TestConfig
) -> tuple[float, float]:
    """(Delta, tau_hat) for a pair of 1-dimensional observations."""
    _check_pair(obs_a, obs_b, w)
    if obs_a.dims != 1:
        raise ValueError("statistic_delta is defined for 1-dimensional observations")
    products, quad = _whitened_parts(obs_a, obs_b, w)
    m_max, tau_hat = _max_profile(products, cfg.grid_oversampling, cfg.refine_tol)
    return 0.5 * (quad - 2.0 * m_max), tau_hat


def delta_via_definition(
    obs_a: SpectralObservation, obs_b: SpectralObservation, w: WeightSequence, cfg: TestConfig
) -> float:
    """Delta computed from the two penalized-likelihood minima (definition oracle).

    The unconstrained minimum shrinks each coordinate independently; the
    constrained one profiles out the common coefficients for each candidate
    shift and is minimized over a dense tau grid followed by golden-section
    refinement.  Coordinates with nu_j = 0 are dropped from both minima (the
    infinite-penalty limit).  Kept deliberately independent of
    :func:`statistic_delta`.
    """
    _check_pair(obs_a, obs_b, w)
    if obs_a.dims != 1:
        raise ValueError("delta_via_definition is defined for 1-dimensional observations")
    keep = w.nu > 0.0
    nu = w.nu[keep]
    omega = 1.0 / nu - 1.0
    y = obs_a.coeffs[0, : w.N][keep]
    ys = obs_b.coeffs[0, : w.N][keep]
    s2 = float(obs_a.sigma[0]) ** 2
    t2 = float(obs_b.sigma[0]) ** 2
    j = np.arange(1, w.N + 1)[keep]

    # unconstrained minimum: shrinkage residual per coordinate
    shrink = omega / (1.0 + omega)
    m_free = float(np.sum(shrink * np.abs(y) ** 2) / (2.0 * s2) + np.sum(shrink * np.abs(ys) ** 2) / (2.0 * t2))

    sbar2 = 1.0 / (1.0 / s2 + 1.0 / t2)
    base = float(np.sum(np.abs(y) ** 2) / (2.0 * s2) + np.sum(np.abs(ys) ** 2) / (2.0 * t2))

    def constrained(tau):
        z = y / s2 + np.exp(-1j * j * tau) * ys / t2
        return base - float(np.sum((sbar2 / (2.0 * (1.0 + omega))) * np.abs(z) ** 2))

    K = max(cfg.grid_oversampling * w.N, cfg.grid_oversampling)
    taus = 2.0 * np.pi * np.arange(K) / K
    vals = np.array([constrained(t) for t in taus])
    # between grid points the objective can undershoot a grid value by at most
    # half its curvature bound times (h/2)^2; refine every bracket within that
    # margin of the grid minimum so the global minimizer cannot be missed
    curv = float(np.sum((sbar2 / (1.0 + omega)) * j**2 * np.abs(y) * np.abs(ys))) * (
        2.0 / (s2 * t2)
    )
    margin = 0.5 * curv * (np.pi / K) ** 2
    m_h0 = float(vals.min())
    for k in np.nonzero(vals <= m_h0 + margin)[0][:_MAX_CANDIDATES]:
        lo = taus[k] - 2.0 * np.pi / K
        hi = taus[k] + 2.0 * np.pi / K
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1, f2 = constrained(x1), constrained(x2)
        while hi - lo > cfg.refine_tol:
            if f1 > f2:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = constrained(x2)
            else:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = constrained(x1)
        m_h0 = min(m_h0, f1, f2)
    return m_h0 - m_free


def threshold(w: WeightSequence, alpha: float, dims: int = 1) -> float:
    """Rejection threshold d ||nu||_1 + z_{1-alpha} sqrt(d) ||nu||_2."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    if dims < 1:
        raise ValueError("dims must be >= 1")
    return dims * w.l1 + float(norm_quantile(1.0 - alpha)) * np.sqrt(dims) * w.l2


def p_value(delta: float, w: WeightSequence, dims: int = 1) -> float:
    """Upper-tail p-value 1 - Phi((Delta - d ||nu||_1) / (sqrt(d) ||nu||_2))."""
    if w.l2 == 0.0:
        raise ValueError("p-value undefined for all-zero weights")
    t = (delta - dims * w.l1) / (np.sqrt(dims) * w.l2)
    return float(1.0 - norm_cdf(t))


def chi2_form(delta: float, w: WeightSequence) -> tuple[float, float]:
    """Chi-squared reading: (2 ||nu||_1 Delta / ||nu||_2^2,  dof = 2 ||nu||_1^2 / ||nu||_2^2)."""
    if w.l2 == 0.0:
        raise ValueError("chi-squared form undefined for all-zero weights")
    l1, l2sq = w.l1, w.l2**2
    return 2.0 * l1 * delta / l2sq, 2.0 * l1**2 / l2sq


def multidim_statistic(
    obs_a: SpectralObservation, obs_b: SpectralObservation, w: WeightSequence, cfg: TestConfig
) -> TestOutcome:
    """Whitened d-dimensional test with one shared shift across coordinates."""
    _check_pair(obs_a, obs_b, w)
    d = obs_a.dims
    products, quad = _whitened_parts(obs_a, obs_b, w)
    m_max, tau_hat = _max_profile(products, cfg.grid_oversampling, cfg.refine_tol)
    delta = 0.5 * (quad - 2.0 * m_max)
    t = (delta - d * w.l1) / (np.sqrt(d) * w.l2)
    thr = threshold(w, cfg.alpha, d)
    return TestOutcome(
        delta=delta,
        t_normalized=float(t),
        tau_hat=float(tau_hat),
        threshold=thr,
        p_value=p_value(delta, w, d),
        reject=bool(delta >= thr),
    )
